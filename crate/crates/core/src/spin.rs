//! Collective spin operators on the symmetric (Dicke) subspace and pure states on it.
//!
//! Basis index `k ∈ 0..=N` labels `|S, m⟩` with `S = N/2` and `m = S - k`, so index 0
//! is the maximal-`Sz` state `|j, j⟩`. Ladder operators use Condon–Shortley phases:
//! `Sx` is real with nonnegative off-diagonals, `Sy` is purely imaginary and `Sz` is
//! diagonal. With this convention every quadratic form in `Sx²`, `Sy²`, `Sz²` is a
//! real symmetric matrix.

use std::f64::consts::FRAC_PI_2;
use std::sync::OnceLock;

use nalgebra::{Matrix3, SymmetricEigen};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{ensure_finite, invalid, Error, Result};
use crate::spectral::{CMatrix, CVector, Hamiltonian, Spectrum};

/// Largest supported particle number. Operators are dense `(N+1)²` matrices.
pub const MAX_ATOMS: usize = 1000;

/// Cartesian axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Axis {
    X,
    Y,
    Z,
}

/// Rotation axis: a principal axis or an arbitrary unit vector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RotationAxis {
    Principal(Axis),
    Direction([f64; 3]),
}

impl From<Axis> for RotationAxis {
    fn from(a: Axis) -> Self {
        RotationAxis::Principal(a)
    }
}

pub(crate) fn unit_vector(n: [f64; 3]) -> Result<[f64; 3]> {
    let norm = (n[0] * n[0] + n[1] * n[1] + n[2] * n[2]).sqrt();
    if !norm.is_finite() || norm < 1e-300 {
        return Err(invalid("rotation axis must be a nonzero finite vector"));
    }
    Ok([n[0] / norm, n[1] / norm, n[2] / norm])
}

/// Dense collective spin matrices for `N` spin-1/2 particles.
#[derive(Debug)]
pub struct SpinOperators {
    n_atoms: usize,
    // ladder[k] = <k-1| S+ |k> for k in 1..dim; ladder[0] = 0
    ladder: Vec<f64>,
    sx: CMatrix,
    sy: CMatrix,
    sz: CMatrix,
    s_squared: CMatrix,
    sx_spectrum: OnceLock<Spectrum>,
    sy_spectrum: OnceLock<Spectrum>,
}

impl SpinOperators {
    pub fn new(n_atoms: usize) -> Result<Self> {
        if n_atoms == 0 {
            return Err(invalid("n_atoms must be at least 1"));
        }
        if n_atoms > MAX_ATOMS {
            return Err(invalid(format!(
                "n_atoms = {n_atoms} exceeds the supported maximum of {MAX_ATOMS}"
            )));
        }
        let dim = n_atoms + 1;
        let s = n_atoms as f64 / 2.0;
        let casimir = s * (s + 1.0);
        let m = |k: usize| s - k as f64;

        let mut ladder = vec![0.0; dim];
        for (k, l) in ladder.iter_mut().enumerate().skip(1) {
            let mk = m(k);
            *l = (casimir - mk * (mk + 1.0)).max(0.0).sqrt();
        }

        let mut sx = CMatrix::zeros(dim, dim);
        let mut sy = CMatrix::zeros(dim, dim);
        let mut sz = CMatrix::zeros(dim, dim);
        for k in 0..dim {
            sz[(k, k)] = Complex64::from(m(k));
        }
        for k in 1..dim {
            let c = ladder[k] / 2.0;
            sx[(k - 1, k)] = Complex64::from(c);
            sx[(k, k - 1)] = Complex64::from(c);
            sy[(k - 1, k)] = Complex64::new(0.0, -c);
            sy[(k, k - 1)] = Complex64::new(0.0, c);
        }
        let s_squared = banded_square(&sx, 1) + banded_square(&sy, 1) + banded_square(&sz, 0);

        Ok(SpinOperators {
            n_atoms,
            ladder,
            sx,
            sy,
            sz,
            s_squared,
            sx_spectrum: OnceLock::new(),
            sy_spectrum: OnceLock::new(),
        })
    }

    pub fn n_atoms(&self) -> usize {
        self.n_atoms
    }

    pub fn dim(&self) -> usize {
        self.n_atoms + 1
    }

    /// Total spin `S = N/2`.
    pub fn total_spin(&self) -> f64 {
        self.n_atoms as f64 / 2.0
    }

    pub fn sx(&self) -> &CMatrix {
        &self.sx
    }

    pub fn sy(&self) -> &CMatrix {
        &self.sy
    }

    pub fn sz(&self) -> &CMatrix {
        &self.sz
    }

    pub fn s_squared(&self) -> &CMatrix {
        &self.s_squared
    }

    pub fn component(&self, axis: Axis) -> &CMatrix {
        match axis {
            Axis::X => &self.sx,
            Axis::Y => &self.sy,
            Axis::Z => &self.sz,
        }
    }

    /// `Sα²` as a pentadiagonal matrix.
    pub fn squared(&self, axis: Axis) -> CMatrix {
        match axis {
            Axis::X => banded_square(&self.sx, 1),
            Axis::Y => banded_square(&self.sy, 1),
            Axis::Z => banded_square(&self.sz, 0),
        }
    }

    /// `S_θ = Sx sinθ + Sz cosθ`, the spin component at angle θ from z in the x–z plane.
    pub fn spin_component(&self, theta: f64) -> CMatrix {
        &self.sx * Complex64::from(theta.sin()) + &self.sz * Complex64::from(theta.cos())
    }

    /// `n·S` for a unit vector `n`.
    pub fn along(&self, n: [f64; 3]) -> Result<CMatrix> {
        let len = (n[0] * n[0] + n[1] * n[1] + n[2] * n[2]).sqrt();
        if (len - 1.0).abs() > 1e-9 {
            return Err(invalid(format!("direction must be a unit vector, |n| = {len}")));
        }
        Ok(&self.sx * Complex64::from(n[0])
            + &self.sy * Complex64::from(n[1])
            + &self.sz * Complex64::from(n[2]))
    }

    fn sx_spectrum(&self) -> &Spectrum {
        self.sx_spectrum.get_or_init(|| Spectrum::of(&self.sx))
    }

    fn sy_spectrum(&self) -> &Spectrum {
        self.sy_spectrum.get_or_init(|| Spectrum::of(&self.sy))
    }

    // O(dim) operator applications; Sx and Sy are tridiagonal, Sz diagonal.

    pub fn apply_sx(&self, psi: &CVector) -> CVector {
        let d = self.dim();
        let mut out = CVector::zeros(d);
        for k in 1..d {
            let c = self.ladder[k] / 2.0;
            out[k - 1] += psi[k] * c;
            out[k] += psi[k - 1] * c;
        }
        out
    }

    pub fn apply_sy(&self, psi: &CVector) -> CVector {
        let d = self.dim();
        let mut out = CVector::zeros(d);
        for k in 1..d {
            let c = self.ladder[k] / 2.0;
            out[k - 1] += psi[k] * Complex64::new(0.0, -c);
            out[k] += psi[k - 1] * Complex64::new(0.0, c);
        }
        out
    }

    pub fn apply_sz(&self, psi: &CVector) -> CVector {
        let s = self.total_spin();
        CVector::from_iterator(
            self.dim(),
            psi.iter().enumerate().map(|(k, a)| a * (s - k as f64)),
        )
    }

    /// `S_θ ψ` without materialising the matrix.
    pub fn apply_component(&self, theta: f64, psi: &CVector) -> CVector {
        self.apply_sx(psi) * Complex64::from(theta.sin())
            + self.apply_sz(psi) * Complex64::from(theta.cos())
    }

    fn rotate_z(&self, psi: &CVector, angle: f64) -> CVector {
        let s = self.total_spin();
        CVector::from_iterator(
            self.dim(),
            psi.iter()
                .enumerate()
                .map(|(k, a)| a * Complex64::from_polar(1.0, -angle * (s - k as f64))),
        )
    }

    /// `exp(-i angle n·S) ψ`.
    pub fn rotate_vector(&self, psi: &CVector, axis: RotationAxis, angle: f64) -> Result<CVector> {
        if psi.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: psi.len(),
            });
        }
        ensure_finite("rotation angle", angle)?;
        Ok(match axis {
            RotationAxis::Principal(Axis::X) => self.sx_spectrum().propagate(psi, angle),
            RotationAxis::Principal(Axis::Y) => self.sy_spectrum().propagate(psi, angle),
            RotationAxis::Principal(Axis::Z) => self.rotate_z(psi, angle),
            RotationAxis::Direction(n) => {
                let n = unit_vector(n)?;
                // W = Rz(φ) Ry(ϑ) carries z onto n, so exp(-iα n·S) = W Rz(α) W†.
                let polar = n[2].clamp(-1.0, 1.0).acos();
                let azimuth = n[1].atan2(n[0]);
                let sy = self.sy_spectrum();
                let v = self.rotate_z(psi, -azimuth);
                let v = sy.propagate(&v, -polar);
                let v = self.rotate_z(&v, angle);
                let v = sy.propagate(&v, polar);
                self.rotate_z(&v, azimuth)
            }
        })
    }
}

/// Product `A·A` for a Hermitian band matrix with half-bandwidth `band`.
fn banded_square(a: &CMatrix, band: usize) -> CMatrix {
    let d = a.nrows();
    let mut out = CMatrix::zeros(d, d);
    for i in 0..d {
        let jlo = i.saturating_sub(2 * band);
        let jhi = (i + 2 * band).min(d - 1);
        for j in jlo..=jhi {
            let klo = i.saturating_sub(band).max(j.saturating_sub(band));
            let khi = (i + band).min(j + band).min(d - 1);
            let mut acc = Complex64::new(0.0, 0.0);
            for k in klo..=khi {
                acc += a[(i, k)] * a[(k, j)];
            }
            out[(i, j)] = acc;
        }
    }
    out
}

/// Normalised pure state on the Dicke subspace.
#[derive(Debug, Clone, PartialEq)]
pub struct SpinState {
    n_atoms: usize,
    amplitudes: CVector,
}

impl SpinState {
    /// Normalises `amplitudes`; fails on the zero vector or a length other than `N+1`.
    pub fn from_amplitudes(n_atoms: usize, amplitudes: CVector) -> Result<Self> {
        if amplitudes.len() != n_atoms + 1 {
            return Err(Error::DimensionMismatch {
                expected: n_atoms + 1,
                found: amplitudes.len(),
            });
        }
        let norm = amplitudes.norm();
        if !norm.is_finite() || norm < 1e-300 {
            return Err(invalid("state vector has zero or non-finite norm"));
        }
        Ok(SpinState {
            n_atoms,
            amplitudes: amplitudes.unscale(norm),
        })
    }

    /// Dicke basis state with index `k` (`m = N/2 - k`).
    pub fn dicke(n_atoms: usize, k: usize) -> Result<Self> {
        if k > n_atoms {
            return Err(invalid(format!("Dicke index {k} out of range 0..={n_atoms}")));
        }
        let mut v = CVector::zeros(n_atoms + 1);
        v[k] = Complex64::from(1.0);
        Ok(SpinState { n_atoms, amplitudes: v })
    }

    /// Coherent spin state `exp(iϑ(Sx sinφ - Sy cosφ))|j,j⟩` pointing along
    /// `(sinϑ cosφ, sinϑ sinφ, cosϑ)`.
    pub fn coherent(ops: &SpinOperators, polar: f64, azimuth: f64) -> Result<Self> {
        ensure_finite("polar angle", polar)?;
        ensure_finite("azimuth", azimuth)?;
        let top = SpinState::dicke(ops.n_atoms(), 0)?;
        // iϑ(Sx sinφ - Sy cosφ) = -iϑ (m·S) with m = (-sinφ, cosφ, 0)
        top.rotate(
            ops,
            RotationAxis::Direction([-azimuth.sin(), azimuth.cos(), 0.0]),
            polar,
        )
    }

    /// The `+y` coherent state, the probe used throughout the interferometer.
    pub fn y_polarized(ops: &SpinOperators) -> Self {
        SpinState::coherent(ops, FRAC_PI_2, FRAC_PI_2).expect("finite angles")
    }

    /// Haar-like random state drawn from complex Gaussian amplitudes.
    pub fn random<R: Rng + ?Sized>(n_atoms: usize, rng: &mut R) -> Self {
        let v = CVector::from_iterator(
            n_atoms + 1,
            (0..=n_atoms).map(|_| {
                let re: f64 = rng.sample(StandardNormal);
                let im: f64 = rng.sample(StandardNormal);
                Complex64::new(re, im)
            }),
        );
        SpinState::from_amplitudes(n_atoms, v).expect("gaussian vector is nonzero")
    }

    pub fn n_atoms(&self) -> usize {
        self.n_atoms
    }

    pub fn amplitudes(&self) -> &CVector {
        &self.amplitudes
    }

    pub fn into_amplitudes(self) -> CVector {
        self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.norm()
    }

    fn check_ops(&self, ops: &SpinOperators) -> Result<()> {
        if ops.n_atoms() != self.n_atoms {
            return Err(Error::DimensionMismatch {
                expected: self.n_atoms + 1,
                found: ops.dim(),
            });
        }
        Ok(())
    }

    /// Wraps an already unitary image of this state, renormalising away round-off.
    pub(crate) fn with_amplitudes(&self, v: CVector) -> Self {
        let norm = v.norm();
        SpinState {
            n_atoms: self.n_atoms,
            amplitudes: v.unscale(norm),
        }
    }

    /// `exp(-i angle n·S)|ψ⟩`.
    pub fn rotate(&self, ops: &SpinOperators, axis: RotationAxis, angle: f64) -> Result<Self> {
        self.check_ops(ops)?;
        let v = ops.rotate_vector(&self.amplitudes, axis, angle)?;
        Ok(self.with_amplitudes(v))
    }

    /// `exp(-i H t)|ψ⟩`.
    pub fn evolve(&self, hamiltonian: &Hamiltonian, t: f64) -> Result<Self> {
        ensure_finite("time", t)?;
        let v = hamiltonian.propagate(&self.amplitudes, t)?;
        Ok(self.with_amplitudes(v))
    }

    /// `⟨ψ|A|ψ⟩` for Hermitian `A`; fails if the imaginary residue exceeds 1e-10 (relative).
    pub fn expectation(&self, op: &CMatrix) -> Result<f64> {
        if op.nrows() != self.amplitudes.len() || op.ncols() != self.amplitudes.len() {
            return Err(Error::DimensionMismatch {
                expected: self.amplitudes.len(),
                found: op.nrows(),
            });
        }
        let z = self.amplitudes.dotc(&(op * &self.amplitudes));
        if z.im.abs() > 1e-10 * z.re.abs().max(1.0) {
            return Err(Error::NotHermitian { deviation: z.im.abs() });
        }
        Ok(z.re)
    }

    /// `⟨A²⟩ - ⟨A⟩²`, clamped at zero.
    pub fn variance(&self, op: &CMatrix) -> Result<f64> {
        let mean = self.expectation(op)?;
        let a_psi = op * &self.amplitudes;
        let second = a_psi.norm_squared();
        let var = second - mean * mean;
        debug_assert!(var >= -1e-9 * second.max(1.0));
        Ok(var.max(0.0))
    }

    /// `|⟨a|b⟩|²`; global phase never enters a comparison.
    pub fn fidelity(&self, other: &SpinState) -> f64 {
        self.amplitudes.dotc(&other.amplitudes).norm_sqr()
    }

    /// Means and symmetrised covariance of (Sx, Sy, Sz).
    pub fn moments(&self, ops: &SpinOperators) -> Result<SpinMoments> {
        self.check_ops(ops)?;
        Ok(SpinMoments::of(ops, &self.amplitudes))
    }
}

/// First and second moments of the collective spin vector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpinMoments {
    pub mean: [f64; 3],
    /// `Cov(Sα, Sβ) = ⟨{Sα, Sβ}⟩/2 - ⟨Sα⟩⟨Sβ⟩`, ordered (x, y, z).
    pub covariance: [[f64; 3]; 3],
}

impl SpinMoments {
    pub(crate) fn of(ops: &SpinOperators, psi: &CVector) -> Self {
        let applied = [ops.apply_sx(psi), ops.apply_sy(psi), ops.apply_sz(psi)];
        let mut mean = [0.0; 3];
        for a in 0..3 {
            mean[a] = psi.dotc(&applied[a]).re;
        }
        let mut covariance = [[0.0; 3]; 3];
        for a in 0..3 {
            for b in a..3 {
                let c = applied[a].dotc(&applied[b]).re - mean[a] * mean[b];
                covariance[a][b] = c;
                covariance[b][a] = c;
            }
        }
        SpinMoments { mean, covariance }
    }

    /// Variance of `S_θ = Sx sinθ + Sz cosθ`.
    pub fn variance_xz(&self, theta: f64) -> f64 {
        let (s, c) = theta.sin_cos();
        let cov = &self.covariance;
        (s * s * cov[0][0] + c * c * cov[2][2] + 2.0 * s * c * cov[0][2]).max(0.0)
    }

    /// The x–z covariance block as `[[xx, xz], [xz, zz]]`.
    pub fn xz_block(&self) -> [[f64; 2]; 2] {
        let c = &self.covariance;
        [[c[0][0], c[0][2]], [c[2][0], c[2][2]]]
    }

    /// Extremal variances of `S_θ` over the x–z plane: `(min, max)`.
    pub fn xz_extremes(&self) -> (f64, f64) {
        let [[a, b], [_, d]] = self.xz_block();
        let mid = 0.5 * (a + d);
        let rad = (0.25 * (a - d) * (a - d) + b * b).sqrt();
        ((mid - rad).max(0.0), mid + rad)
    }

    /// Largest variance over the whole sphere of directions.
    pub fn max_variance(&self) -> f64 {
        let m = Matrix3::from_fn(|i, j| self.covariance[i][j]);
        SymmetricEigen::new(m).eigenvalues.max()
    }
}
