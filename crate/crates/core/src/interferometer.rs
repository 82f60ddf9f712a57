//! The echo protocol: squeeze with `U1`, encode a small rotation about `S_θ`, apply a
//! reversal `U2`, and read out `S_m = Sx sin m + Sz cos m`.
//!
//! All linear-response quantities are evaluated at `φ = 0` from two vectors,
//! `a = U2 S_θ U1|+y⟩` and `b = U2 U1|+y⟩`, since `d⟨S_m⟩/dφ = -2 Im⟨a|S_m|b⟩`.

use std::f64::consts::{FRAC_PI_2, PI};
use std::sync::Arc;

use log::warn;
use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, invalid, Error, Result};
use crate::floquet::{self, PulseSequence};
use crate::lmg::{LmgParams, LmgSystem};
use crate::search::{grid_refine_max, grid_refine_min};
use crate::spectral::CVector;
use crate::spin::{RotationAxis, SpinMoments, SpinOperators, SpinState};

/// How the interaction is undone before readout.
#[derive(Debug, Clone, PartialEq)]
pub enum Reversal {
    /// Evolve under `H(-chi, gamma)` for `t2`.
    Ideal { t2: f64 },
    /// Measure directly after encoding.
    None,
    /// Noiseless compiled pulse sequence.
    Floquet(Arc<PulseSequence>),
}

/// Full description of one echo experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct EchoProtocol {
    pub n_atoms: usize,
    pub params: LmgParams,
    pub t1: f64,
    /// Encoding axis angle in the x–z plane, measured from z.
    pub theta: f64,
    /// Encoded phase; only used by the finite-φ paths.
    pub phi: f64,
    pub reversal: Reversal,
    /// Readout angle; `None` co-optimises it.
    pub measure_angle: Option<f64>,
}

impl EchoProtocol {
    /// Ideal reversal with `t2 = t1`, `φ = 0` and an optimised readout angle.
    pub fn new(n_atoms: usize, params: LmgParams, t1: f64, theta: f64) -> Self {
        EchoProtocol {
            n_atoms,
            params,
            t1,
            theta,
            phi: 0.0,
            reversal: Reversal::Ideal { t2: t1 },
            measure_angle: None,
        }
    }

    pub fn for_system(system: &LmgSystem, t1: f64, theta: f64) -> Self {
        Self::new(system.n_atoms(), *system.params(), t1, theta)
    }

    pub fn with_reversal(mut self, reversal: Reversal) -> Self {
        self.reversal = reversal;
        self
    }

    pub fn with_measure_angle(mut self, m: f64) -> Self {
        self.measure_angle = Some(m);
        self
    }

    pub fn with_phi(mut self, phi: f64) -> Self {
        self.phi = phi;
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        for (name, v) in [("t1", self.t1), ("theta", self.theta), ("phi", self.phi)] {
            ensure_finite(name, v)?;
        }
        if self.t1 < 0.0 {
            return Err(invalid(format!("t1 must be nonnegative, got {}", self.t1)));
        }
        if self.phi.abs() > 0.1 {
            return Err(invalid(format!(
                "|phi| = {} exceeds the linear-response limit 0.1 rad",
                self.phi.abs()
            )));
        }
        if self.phi.abs() > 0.01 {
            warn!("phi = {} is large for linear-response quantities", self.phi);
        }
        match &self.reversal {
            Reversal::Ideal { t2 } => {
                ensure_finite("t2", *t2)?;
                if *t2 < 0.0 {
                    return Err(invalid(format!("t2 must be nonnegative, got {t2}")));
                }
            }
            Reversal::None => {}
            Reversal::Floquet(seq) => {
                if (seq.gamma - self.params.gamma).abs() > 1e-12 {
                    return Err(Error::ProtocolMismatch(format!(
                        "pulse sequence compiled for gamma = {}, protocol has gamma = {}",
                        seq.gamma, self.params.gamma
                    )));
                }
            }
        }
        if let Some(m) = self.measure_angle {
            ensure_finite("measure_angle", m)?;
        }
        Ok(())
    }

    fn check(&self, system: &LmgSystem) -> Result<()> {
        self.validate()?;
        if self.n_atoms != system.n_atoms() {
            return Err(Error::ProtocolMismatch(format!(
                "protocol has N = {}, system has N = {}",
                self.n_atoms,
                system.n_atoms()
            )));
        }
        let p = system.params();
        if p.chi != self.params.chi || p.gamma != self.params.gamma {
            return Err(Error::ProtocolMismatch(format!(
                "protocol (chi, gamma) = ({}, {}), system ({}, {})",
                self.params.chi, self.params.gamma, p.chi, p.gamma
            )));
        }
        Ok(())
    }
}

/// `exp(-iφ S_θ)|ψ⟩`.
pub fn encode(state: &SpinState, ops: &SpinOperators, phi: f64, theta: f64) -> Result<SpinState> {
    ensure_finite("theta", theta)?;
    state.rotate(ops, encoding_axis(theta), phi)
}

fn encoding_axis(theta: f64) -> RotationAxis {
    RotationAxis::Direction([theta.sin(), 0.0, theta.cos()])
}

fn apply_reversal(system: &LmgSystem, reversal: &Reversal, psi: &CVector) -> Result<CVector> {
    match reversal {
        Reversal::Ideal { t2 } => Ok(system.reverse(psi, *t2)),
        Reversal::None => Ok(psi.clone()),
        Reversal::Floquet(seq) => floquet::apply_noiseless(system, seq, psi),
    }
}

/// `U2 exp(-iφ S_θ) U1 |+y⟩`.
pub fn run_echo(system: &LmgSystem, protocol: &EchoProtocol) -> Result<SpinState> {
    protocol.check(system)?;
    let squeezed = system.squeezed(protocol.t1)?;
    let encoded = encode(&squeezed, system.ops(), protocol.phi, protocol.theta)?;
    let out = apply_reversal(system, &protocol.reversal, encoded.amplitudes())?;
    Ok(encoded.with_amplitudes(out))
}

/// Linear response of the echo at `φ = 0` for every readout angle in the x–z plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EchoReadout {
    n_atoms: usize,
    /// `(d⟨Sx⟩/dφ, d⟨Sz⟩/dφ)`.
    pub slope: [f64; 2],
    /// Moments of the unperturbed final state.
    pub moments: SpinMoments,
}

impl EchoReadout {
    pub(crate) fn from_vectors(ops: &SpinOperators, a: &CVector, b: &CVector) -> Self {
        let dx = -2.0 * a.dotc(&ops.apply_sx(b)).im;
        let dz = -2.0 * a.dotc(&ops.apply_sz(b)).im;
        EchoReadout {
            n_atoms: ops.n_atoms(),
            slope: [dx, dz],
            moments: SpinMoments::of(ops, b),
        }
    }

    /// `d⟨S_m⟩/dφ`.
    pub fn derivative(&self, m: f64) -> f64 {
        m.sin() * self.slope[0] + m.cos() * self.slope[1]
    }

    pub fn variance(&self, m: f64) -> f64 {
        self.moments.variance_xz(m)
    }

    /// Error-propagation phase uncertainty for readout angle `m`.
    pub fn delta_phi(&self, m: f64) -> Result<f64> {
        let spread = self.variance(m).sqrt();
        let d = self.derivative(m);
        if !(d.abs() > 1e-12 * self.half_n()) {
            return Err(Error::DivideByZero {
                numerator: spread,
                denominator: d,
            });
        }
        Ok(spread / d.abs())
    }

    fn half_n(&self) -> f64 {
        self.n_atoms as f64 / 2.0
    }

    /// Largest `|d⟨S_m⟩/dφ| / (N/2)` over readout angles.
    pub fn max_magnification(&self) -> f64 {
        self.slope[0].hypot(self.slope[1]) / self.half_n()
    }

    /// Readout angle in `[0, π)` minimising `Δφ`, and that minimum.
    ///
    /// With `u = (sin m, cos m)`, `Δφ = sqrt(uᵀCu)/|uᵀd|` is minimised by `u ∝ C⁻¹d`
    /// and the minimum is `1/sqrt(dᵀC⁻¹d)`.
    pub fn optimal_readout(&self) -> Result<(f64, f64)> {
        let [[a, b], [_, c]] = self.moments.xz_block();
        let [dx, dz] = self.slope;
        let det = a * c - b * b;
        let scale = (a + c).max(1e-300);
        if det > 1e-12 * scale * scale {
            let wx = (c * dx - b * dz) / det;
            let wz = (a * dz - b * dx) / det;
            let m = wx.atan2(wz).rem_euclid(PI);
            // evaluate directly so the reported value is exactly Δφ(m)
            let value = self.delta_phi(m)?;
            return Ok((m, value));
        }
        let best = grid_refine_min(
            |m| self.delta_phi(m).unwrap_or(f64::INFINITY),
            0.0,
            PI,
            3601,
            1e-10,
        )?;
        if !best.value.is_finite() {
            return Err(Error::DivideByZero {
                numerator: self.variance(best.x).sqrt(),
                denominator: self.derivative(best.x),
            });
        }
        Ok((best.x.rem_euclid(PI), best.value))
    }

    /// The protocol's readout angle, or the optimal one.
    pub fn resolve(&self, measure_angle: Option<f64>) -> Result<f64> {
        match measure_angle {
            Some(m) => Ok(m),
            None => Ok(self.optimal_readout()?.0),
        }
    }
}

/// `(a, b) = (U2 S_θ U1|+y⟩, U2 U1|+y⟩)`.
pub(crate) fn echo_vectors(system: &LmgSystem, protocol: &EchoProtocol) -> Result<(CVector, CVector)> {
    protocol.check(system)?;
    let ops = system.ops();
    let psi1 = system.forward(system.probe().amplitudes(), protocol.t1);
    let encoded = ops.apply_component(protocol.theta, &psi1);
    let a = apply_reversal(system, &protocol.reversal, &encoded)?;
    let b = apply_reversal(system, &protocol.reversal, &psi1)?;
    Ok((a, b))
}

pub fn echo_readout(system: &LmgSystem, protocol: &EchoProtocol) -> Result<EchoReadout> {
    let (a, b) = echo_vectors(system, protocol)?;
    Ok(EchoReadout::from_vectors(system.ops(), &a, &b))
}

/// `d⟨S_m⟩/dφ` at `φ = 0` from the commutator form `i⟨[S_θ(U1), S_m(U2 U1)]⟩`.
pub fn signal_derivative(system: &LmgSystem, protocol: &EchoProtocol) -> Result<f64> {
    let readout = echo_readout(system, protocol)?;
    let m = readout.resolve(protocol.measure_angle)?;
    Ok(readout.derivative(m))
}

/// Default finite-difference step in radians.
pub const FD_STEP: f64 = 1e-4;

/// Central-difference estimate of `d⟨S_m⟩/dφ` from full simulations at `φ = ±h`.
///
/// If the estimates at `h` and `h/2` disagree by more than `1e-6` relative, the
/// Richardson combination `(4 D(h/2) - D(h)) / 3` is returned instead.
pub fn signal_derivative_fd(system: &LmgSystem, protocol: &EchoProtocol, h: f64) -> Result<f64> {
    if !(h > 0.0 && h <= 0.05) {
        return Err(invalid(format!("finite-difference step {h} outside (0, 0.05]")));
    }
    let m = match protocol.measure_angle {
        Some(m) => m,
        None => echo_readout(system, protocol)?.optimal_readout()?.0,
    };
    let observable = system.ops().spin_component(m);
    let signal = |phi: f64| -> Result<f64> {
        let p = protocol.clone().with_phi(phi);
        run_echo(system, &p)?.expectation(&observable)
    };
    let central = |h: f64| -> Result<f64> { Ok((signal(h)? - signal(-h)?) / (2.0 * h)) };
    let coarse = central(h)?;
    let fine = central(h / 2.0)?;
    if (coarse - fine).abs() <= 1e-6 * fine.abs().max(1e-12) {
        Ok(fine)
    } else {
        Ok((4.0 * fine - coarse) / 3.0)
    }
}

/// `ΔS_m / |d⟨S_m⟩/dφ|` at `φ = 0`.
pub fn delta_phi(system: &LmgSystem, protocol: &EchoProtocol) -> Result<f64> {
    let readout = echo_readout(system, protocol)?;
    match protocol.measure_angle {
        Some(m) => readout.delta_phi(m),
        None => Ok(readout.optimal_readout()?.1),
    }
}

/// Phase sensitivity relative to the standard quantum limit, and the slope behind it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GainReport {
    pub delta_phi: f64,
    /// `-20 log10(Δφ √N)`.
    pub delta_g_db: f64,
    /// `(d⟨S_m⟩/dφ) / (N/2)`.
    pub magnification: f64,
    pub derivative_signal: f64,
    pub measure_angle: f64,
}

pub fn gain_db(delta_phi: f64, n_atoms: usize) -> f64 {
    -20.0 * (delta_phi * (n_atoms as f64).sqrt()).log10()
}

impl GainReport {
    pub(crate) fn from_readout(readout: &EchoReadout, measure_angle: Option<f64>) -> Result<Self> {
        let (m, dphi) = match measure_angle {
            Some(m) => (m, readout.delta_phi(m)?),
            None => readout.optimal_readout()?,
        };
        let d = readout.derivative(m);
        Ok(GainReport {
            delta_phi: dphi,
            delta_g_db: gain_db(dphi, readout.n_atoms),
            magnification: d / readout.half_n(),
            derivative_signal: d,
            measure_angle: m,
        })
    }
}

pub fn metrological_gain(system: &LmgSystem, protocol: &EchoProtocol) -> Result<GainReport> {
    let readout = echo_readout(system, protocol)?;
    GainReport::from_readout(&readout, protocol.measure_angle)
}

/// Angle `θ ∈ [0, π)` of the eigenvector `(sin θ, cos θ)` of a symmetric 2×2 form
/// `[[xx, xz], [xz, zz]]`, for its largest (`largest = true`) or smallest eigenvalue.
pub(crate) fn principal_axis(form: [[f64; 2]; 2], largest: bool) -> f64 {
    let [[a, b], [_, d]] = form;
    // top eigenvector is (cos α, sin α) in (x, z) coordinates
    let alpha = 0.5 * (2.0 * b).atan2(a - d);
    let alpha = if largest { alpha } else { alpha + FRAC_PI_2 };
    (FRAC_PI_2 - alpha).rem_euclid(PI)
}

/// Axis of least `S_θ` variance on `U1|+y⟩`.
pub fn squeezed_axis(system: &LmgSystem, t1: f64) -> Result<f64> {
    ensure_finite("t1", t1)?;
    Ok(principal_axis(system.squeezed_moments(t1).xz_block(), false))
}

/// Axis of greatest `S_θ` variance on `U1|+y⟩`, which maximises the pure-state QFI in the plane.
pub fn qfi_axis(system: &LmgSystem, t1: f64) -> Result<f64> {
    ensure_finite("t1", t1)?;
    Ok(principal_axis(system.squeezed_moments(t1).xz_block(), true))
}

/// Squeezing-based encoding axis: the least-variance axis reflected through the x axis,
/// `(π - θ_sq) mod π`, which places it in the same handedness as [`optimize_theta_r`].
pub fn optimize_theta_p(system: &LmgSystem, t1: f64) -> Result<f64> {
    if !(t1 > 0.0) {
        return Err(invalid(format!("t1 must be positive, got {t1}")));
    }
    Ok((PI - squeezed_axis(system, t1)?).rem_euclid(PI))
}

/// Encoding axis that maximises the magnification with ideal reversal `t2 = t1`.
///
/// With `U2 = U1†` the slope vector is linear in `(sin θ, cos θ)`, so `|d(θ)|²` is a
/// 2×2 quadratic form and the optimum is its top eigenvector.
pub fn optimize_theta_r(system: &LmgSystem, t1: f64) -> Result<f64> {
    if !(t1 > 0.0) {
        return Err(invalid(format!("t1 must be positive, got {t1}")));
    }
    let ops = system.ops();
    let probe = system.probe().amplitudes();
    let psi1 = system.forward(probe, t1);
    let back_x = system.reverse(&ops.apply_sx(&psi1), t1);
    let back_z = system.reverse(&ops.apply_sz(&psi1), t1);
    let slope = |a: &CVector| {
        [
            -2.0 * a.dotc(&ops.apply_sx(probe)).im,
            -2.0 * a.dotc(&ops.apply_sz(probe)).im,
        ]
    };
    let gx = slope(&back_x);
    let gz = slope(&back_z);
    let dot = |u: [f64; 2], v: [f64; 2]| u[0] * v[0] + u[1] * v[1];
    let form = [[dot(gx, gx), dot(gx, gz)], [dot(gx, gz), dot(gz, gz)]];
    Ok(principal_axis(form, true))
}

/// Search settings for [`optimize_t2`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReversalSearch {
    /// Upper end of the `t2` range as a multiple of `t1`.
    pub range_factor: f64,
    pub grid_points: usize,
}

impl Default for ReversalSearch {
    fn default() -> Self {
        ReversalSearch {
            range_factor: 2.0,
            grid_points: 200,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReversalOptimum {
    pub t2: f64,
    pub gain_db: f64,
    pub measure_angle: f64,
}

/// Reversal time maximising `ΔG` jointly with the readout angle.
pub fn optimize_t2(
    system: &LmgSystem,
    t1: f64,
    theta: f64,
    search: &ReversalSearch,
) -> Result<ReversalOptimum> {
    if !(t1 > 0.0) {
        return Err(invalid(format!("t1 must be positive, got {t1}")));
    }
    let base = EchoProtocol::for_system(system, t1, theta);
    let gain = |t2: f64| {
        let p = base.clone().with_reversal(Reversal::Ideal { t2 });
        metrological_gain(system, &p)
            .map(|g| g.delta_g_db)
            .unwrap_or(f64::NEG_INFINITY)
    };
    let best = grid_refine_max(
        gain,
        0.0,
        search.range_factor * t1,
        search.grid_points,
        1e-7 * t1,
    )?;
    let p = base.with_reversal(Reversal::Ideal { t2: best.x });
    let report = metrological_gain(system, &p)?;
    Ok(ReversalOptimum {
        t2: best.x,
        gain_db: report.delta_g_db,
        measure_angle: report.measure_angle,
    })
}
