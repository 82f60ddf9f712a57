//! Anisotropic two-axis (LMG) dynamics, Fisher information and squeezing-time search.

use std::f64::consts::{FRAC_PI_2, PI};
use std::sync::Arc;

use nalgebra::SymmetricEigen;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, invalid, Error, Result};
use crate::search::{golden_max, grid_refine_max};
use crate::spectral::{check_hermitian, CMatrix, CVector, Hamiltonian};
use crate::spin::{Axis, SpinMoments, SpinOperators, SpinState};

/// Interaction strength `chi` and anisotropy `gamma` of `H = chi (Sx² + gamma Sy²)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LmgParams {
    pub chi: f64,
    pub gamma: f64,
}

impl LmgParams {
    pub fn new(chi: f64, gamma: f64) -> Result<Self> {
        let p = LmgParams { chi, gamma };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        ensure_finite("chi", self.chi)?;
        ensure_finite("gamma", self.gamma)?;
        if self.chi == 0.0 {
            return Err(invalid("chi must be nonzero"));
        }
        if !(0.0..=0.5).contains(&self.gamma) {
            return Err(invalid(format!(
                "gamma = {} outside the canonical range 0 <= gamma <= 0.5",
                self.gamma
            )));
        }
        Ok(())
    }

    /// Same anisotropy with the interaction sign flipped.
    pub fn reversed(&self) -> Self {
        LmgParams {
            chi: -self.chi,
            gamma: self.gamma,
        }
    }
}

/// `chi (Sx² + gamma Sy²)`: real symmetric and pentadiagonal in the Dicke basis.
pub fn lmg_hamiltonian(ops: &SpinOperators, params: &LmgParams) -> Result<Hamiltonian> {
    params.validate()?;
    let h = (ops.squared(Axis::X) + ops.squared(Axis::Y) * Complex64::from(params.gamma))
        * Complex64::from(params.chi);
    Hamiltonian::new(h)
}

/// Spin operators, one LMG Hamiltonian with its cached spectrum, and the `+y` probe state.
///
/// Reversed evolution under `H(-chi, gamma) = -H(chi, gamma)` reuses the same spectrum.
#[derive(Debug, Clone)]
pub struct LmgSystem {
    ops: Arc<SpinOperators>,
    params: LmgParams,
    hamiltonian: Hamiltonian,
    probe: SpinState,
}

impl LmgSystem {
    pub fn new(n_atoms: usize, params: LmgParams) -> Result<Self> {
        Self::with_operators(Arc::new(SpinOperators::new(n_atoms)?), params)
    }

    pub fn with_operators(ops: Arc<SpinOperators>, params: LmgParams) -> Result<Self> {
        let hamiltonian = lmg_hamiltonian(&ops, &params)?;
        // Diagonalise up front so clones share the work.
        hamiltonian.spectrum();
        let probe = SpinState::y_polarized(&ops);
        Ok(LmgSystem {
            ops,
            params,
            hamiltonian,
            probe,
        })
    }

    pub fn ops(&self) -> &SpinOperators {
        &self.ops
    }

    pub fn shared_ops(&self) -> Arc<SpinOperators> {
        Arc::clone(&self.ops)
    }

    pub fn params(&self) -> &LmgParams {
        &self.params
    }

    pub fn n_atoms(&self) -> usize {
        self.ops.n_atoms()
    }

    pub fn hamiltonian(&self) -> &Hamiltonian {
        &self.hamiltonian
    }

    /// The `+y` coherent state.
    pub fn probe(&self) -> &SpinState {
        &self.probe
    }

    /// `exp(-i H t) ψ`.
    pub fn forward(&self, psi: &CVector, t: f64) -> CVector {
        self.hamiltonian.spectrum().propagate(psi, t)
    }

    /// `exp(-i H(-chi) t) ψ = exp(+i H t) ψ`.
    pub fn reverse(&self, psi: &CVector, t: f64) -> CVector {
        self.hamiltonian.spectrum().propagate(psi, -t)
    }

    /// `exp(-i H t)|+y⟩`.
    pub fn squeezed(&self, t: f64) -> Result<SpinState> {
        self.probe.evolve(&self.hamiltonian, t)
    }

    pub(crate) fn squeezed_moments(&self, t: f64) -> SpinMoments {
        let v = self.forward(self.probe.amplitudes(), t);
        SpinMoments::of(&self.ops, &v)
    }
}

/// `4 Var(G)` for a pure state.
pub fn qfi_pure(state: &SpinState, generator: &CMatrix) -> Result<f64> {
    check_hermitian(generator)?;
    Ok(4.0 * state.variance(generator)?)
}

/// `4 Var(n·S)` for a unit vector `n`.
pub fn qfi_along(state: &SpinState, ops: &SpinOperators, n: [f64; 3]) -> Result<f64> {
    let g = ops.along(n)?;
    qfi_pure(state, &g)
}

/// Which generator directions a QFI maximisation considers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum DirectionSearch {
    /// The x–z plane plus the y axis.
    #[default]
    PlaneAndY,
    /// Every direction on the sphere.
    Sphere,
}

/// Largest pure-state QFI over rotation directions, with the maximising unit vector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QfiMaximum {
    pub qfi: f64,
    pub direction: [f64; 3],
}

/// Maximises `4 Var(n·S)` over `n`. The variance is a quadratic form in `n`, so the maximum
/// is the top eigenvalue of the (restricted) covariance matrix.
pub fn max_qfi(state: &SpinState, ops: &SpinOperators, search: DirectionSearch) -> Result<QfiMaximum> {
    let moments = state.moments(ops)?;
    Ok(max_qfi_from_moments(&moments, search))
}

pub(crate) fn max_qfi_from_moments(moments: &SpinMoments, search: DirectionSearch) -> QfiMaximum {
    match search {
        DirectionSearch::PlaneAndY => {
            let [[a, b], [_, d]] = moments.xz_block();
            let (_, top) = moments.xz_extremes();
            // top eigenvector of [[a, b], [b, d]] is (cos α, sin α); in (sinθ, cosθ) form θ = π/2 - α
            let theta = FRAC_PI_2 - 0.5 * (2.0 * b).atan2(a - d);
            let in_plane = [theta.sin(), 0.0, theta.cos()];
            let vy = moments.covariance[1][1];
            if vy > top {
                QfiMaximum {
                    qfi: 4.0 * vy,
                    direction: [0.0, 1.0, 0.0],
                }
            } else {
                QfiMaximum {
                    qfi: 4.0 * top,
                    direction: in_plane,
                }
            }
        }
        DirectionSearch::Sphere => {
            let m = nalgebra::Matrix3::from_fn(|i, j| moments.covariance[i][j]);
            let eig = SymmetricEigen::new(m);
            let k = eig.eigenvalues.imax();
            let v = eig.eigenvectors.column(k);
            QfiMaximum {
                qfi: 4.0 * eig.eigenvalues[k].max(0.0),
                direction: [v[0], v[1], v[2]],
            }
        }
    }
}

/// QFI of `rho(λ) = exp(-iλG) rho exp(iλG)` from the spectral formula
/// `F = 2 Σ (q_k - q_l)² / (q_k + q_l) |⟨k|G|l⟩|²`.
pub fn qfi_general(density: &CMatrix, generator: &CMatrix) -> Result<f64> {
    check_hermitian(density)?;
    check_hermitian(generator)?;
    if density.nrows() != generator.nrows() {
        return Err(Error::DimensionMismatch {
            expected: density.nrows(),
            found: generator.nrows(),
        });
    }
    let trace: f64 = (0..density.nrows()).map(|i| density[(i, i)].re).sum();
    if (trace - 1.0).abs() > 1e-9 {
        return Err(invalid(format!("density matrix trace {trace} differs from 1")));
    }
    let sym = (density + density.adjoint()).scale(0.5);
    let eig = SymmetricEigen::new(sym);
    let q = &eig.eigenvalues;
    let min = q.min();
    if min < -1e-9 {
        return Err(Error::NotPositive { min_eigenvalue: min });
    }
    let v = &eig.eigenvectors;
    let g = v.adjoint() * generator * v;
    let n = q.len();
    let mut f = 0.0;
    for k in 0..n {
        for l in 0..n {
            let s = q[k] + q[l];
            if s > 1e-14 {
                let d = q[k] - q[l];
                f += 2.0 * d * d / s * g[(k, l)].norm_sqr();
            }
        }
    }
    Ok(f)
}

/// First time at which the minimal x–z variance of `exp(-iHt)|+y⟩` reaches a local minimum.
///
/// The scan covers `[0, π/|chi|]` on a uniform grid and the bracketing cell is refined by
/// golden-section search to `1e-7/|chi|`.
pub fn find_best_squeezing_time(system: &LmgSystem) -> Result<f64> {
    let chi = system.params().chi.abs();
    let steps = 4000;
    let dt = PI / chi / steps as f64;
    let squeeze = |t: f64| system.squeezed_moments(t).xz_extremes().0;
    let initial = squeeze(0.0);
    let mut prev = initial;
    let mut cur = squeeze(dt);
    for i in 1..steps {
        let next = squeeze(dt * (i + 1) as f64);
        if cur < initial * (1.0 - 1e-9) && cur <= prev && cur <= next {
            let lo = dt * (i - 1) as f64;
            let hi = dt * (i + 1) as f64;
            let (t, _) = golden_max(|t| -squeeze(t), lo, hi, 1e-7 / chi);
            return Ok(t);
        }
        prev = cur;
        cur = next;
    }
    Err(Error::SearchFailed(format!(
        "no interior squeezing minimum in [0, π/|chi|] for N = {}, gamma = {}",
        system.n_atoms(),
        system.params().gamma
    )))
}

/// Settings for [`optimize_t1`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SqueezeSearchOptions {
    /// Window as multiples of the best squeezing time.
    pub window_factor: (f64, f64),
    pub grid_points: usize,
    pub search: DirectionSearch,
}

impl Default for SqueezeSearchOptions {
    fn default() -> Self {
        SqueezeSearchOptions {
            window_factor: (0.25, 3.0),
            grid_points: 241,
            search: DirectionSearch::PlaneAndY,
        }
    }
}

/// Squeezing time that maximises the QFI inside a window around the best squeezing time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SqueezeSearchResult {
    pub gamma: f64,
    pub t1: f64,
    pub qfi_max: f64,
    pub window: (f64, f64),
    pub best_squeezing_time: f64,
}

pub fn optimize_t1(system: &LmgSystem, options: &SqueezeSearchOptions) -> Result<SqueezeSearchResult> {
    let (w_lo, w_hi) = options.window_factor;
    if !(w_lo.is_finite() && w_hi.is_finite()) || w_lo < 0.0 || w_hi <= w_lo {
        return Err(invalid(format!("degenerate window factor ({w_lo}, {w_hi})")));
    }
    let t_bs = find_best_squeezing_time(system)?;
    let window = (w_lo * t_bs, w_hi * t_bs);
    let tol = 1e-6 / system.params().chi.abs();
    let best = grid_refine_max(
        |t| max_qfi_from_moments(&system.squeezed_moments(t), options.search).qfi,
        window.0,
        window.1,
        options.grid_points,
        tol,
    )?;
    Ok(SqueezeSearchResult {
        gamma: system.params().gamma,
        t1: best.x,
        qfi_max: best.value,
        window,
        best_squeezing_time: t_bs,
    })
}
