//! Gaussian detection noise as a real symmetric "measuring operator" `M` inserted before
//! readout, and the resulting robustness coefficients.
//!
//! `M_{jk} = c 𝒩^{(j-k)²}` with `c = 1/(1 + 2 Σ_{n≥1} 𝒩^{n²})`. Noisy moments are the
//! quadratic forms `⟨M S_m M⟩` and `⟨M S_m² M⟩` on the unnormalised vector `M|ψ⟩`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, invalid, Error, Result};
use crate::interferometer::{echo_vectors, EchoProtocol, EchoReadout, Reversal};
use crate::lmg::LmgSystem;
use crate::spectral::CVector;
use crate::spin::SpinOperators;

/// Nearest-neighbour confusion weight `𝒩 = exp(-1/(2σ)²)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectionNoise {
    strength: f64,
}

impl DetectionNoise {
    pub fn new(strength: f64) -> Result<Self> {
        ensure_finite("noise strength", strength)?;
        if !(0.0..1.0).contains(&strength) {
            return Err(invalid(format!(
                "noise strength must lie in [0, 1), got {strength}"
            )));
        }
        Ok(DetectionNoise { strength })
    }

    /// From the Gaussian width `σ` in units of one Dicke level.
    pub fn from_sigma(sigma: f64) -> Result<Self> {
        ensure_finite("sigma", sigma)?;
        if sigma < 0.0 {
            return Err(invalid(format!("sigma must be nonnegative, got {sigma}")));
        }
        if sigma == 0.0 {
            return Self::new(0.0);
        }
        Self::new((-1.0 / (4.0 * sigma * sigma)).exp())
    }

    pub fn strength(&self) -> f64 {
        self.strength
    }

    pub fn sigma(&self) -> f64 {
        if self.strength == 0.0 {
            0.0
        } else {
            1.0 / (2.0 * (-self.strength.ln()).sqrt())
        }
    }
}

/// The measuring operator and its first-order expansion `M ≈ (M0 + 𝒩 M1)/(1 + 2𝒩)`.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseOperators {
    pub noise: DetectionNoise,
    pub m_exact: DMatrix<f64>,
    /// Unit entries on the first off-diagonals.
    pub m1: DMatrix<f64>,
    /// Row-normalised Gaussian convolution of Dicke populations.
    pub confusion: DMatrix<f64>,
}

impl NoiseOperators {
    pub fn dim(&self) -> usize {
        self.m_exact.nrows()
    }

    /// `M0`, the identity.
    pub fn m0(&self) -> DMatrix<f64> {
        DMatrix::identity(self.dim(), self.dim())
    }
}

const SERIES_CUTOFF: f64 = 1e-16;

/// Normalisation `1/(1 + 2 Σ_{n≥1} 𝒩^{n²})`, truncated once a term drops below `1e-16`.
pub fn series_prefactor(strength: f64) -> f64 {
    let mut sum = 0.0;
    let mut n = 1u32;
    loop {
        let term = strength.powi((n * n) as i32);
        if term < SERIES_CUTOFF {
            break;
        }
        sum += term;
        n += 1;
    }
    1.0 / (1.0 + 2.0 * sum)
}

pub fn detection_operator(dim: usize, noise: DetectionNoise) -> Result<NoiseOperators> {
    if dim < 2 {
        return Err(invalid(format!("detection operator needs dim >= 2, got {dim}")));
    }
    let s = noise.strength();
    let c = series_prefactor(s);
    let weight = |j: usize, k: usize| {
        let d = j.abs_diff(k) as i32;
        if s == 0.0 {
            if d == 0 {
                1.0
            } else {
                0.0
            }
        } else {
            s.powi(d * d)
        }
    };
    let raw = DMatrix::from_fn(dim, dim, weight);
    let m_exact = &raw * c;
    let m1 = DMatrix::from_fn(dim, dim, |j, k| if j.abs_diff(k) == 1 { 1.0 } else { 0.0 });
    let mut confusion = raw;
    for mut row in confusion.row_iter_mut() {
        let total: f64 = row.sum();
        row /= total;
    }
    Ok(NoiseOperators {
        noise,
        m_exact,
        m1,
        confusion,
    })
}

fn real_mul(m: &DMatrix<f64>, v: &CVector) -> CVector {
    let re = m * DVector::from_iterator(v.len(), v.iter().map(|z| z.re));
    let im = m * DVector::from_iterator(v.len(), v.iter().map(|z| z.im));
    CVector::from_iterator(v.len(), re.iter().zip(im.iter()).map(|(&r, &i)| Complex64::new(r, i)))
}

/// How noisy moments are formed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Normalization {
    /// Plain quadratic forms with `M` inserted.
    #[default]
    Unnormalized,
    /// Quadratic forms divided by `⟨M²⟩`, with the quotient rule for the slope.
    Normalized,
}

/// First and second moments of `S_m` and the slope under a measuring operator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoisyReadout {
    pub mean: f64,
    pub second_moment: f64,
    pub derivative: f64,
}

impl NoisyReadout {
    pub fn variance(&self) -> f64 {
        (self.second_moment - self.mean * self.mean).max(0.0)
    }

    pub fn delta_phi(&self) -> Result<f64> {
        let spread = self.variance().sqrt();
        if !(self.derivative.abs() > 1e-300) {
            return Err(Error::DivideByZero {
                numerator: spread,
                denominator: self.derivative,
            });
        }
        Ok(spread / self.derivative.abs())
    }
}

fn noisy_readout(
    ops: &SpinOperators,
    m: &DMatrix<f64>,
    a: &CVector,
    b: &CVector,
    angle: f64,
    normalization: Normalization,
) -> NoisyReadout {
    let ma = real_mul(m, a);
    let mb = real_mul(m, b);
    let s_mb = ops.apply_component(angle, &mb);
    let mean = mb.dotc(&s_mb).re;
    let second = s_mb.norm_squared();
    let derivative = -2.0 * ma.dotc(&s_mb).im;
    match normalization {
        Normalization::Unnormalized => NoisyReadout {
            mean,
            second_moment: second,
            derivative,
        },
        Normalization::Normalized => {
            let norm = mb.norm_squared();
            let norm_slope = -2.0 * ma.dotc(&mb).im;
            NoisyReadout {
                mean: mean / norm,
                second_moment: second / norm,
                derivative: (derivative * norm - mean * norm_slope) / (norm * norm),
            }
        }
    }
}

/// Readout angle used under noise: the protocol's, else the noiseless optimum.
fn noiseless_angle(ops: &SpinOperators, a: &CVector, b: &CVector, pinned: Option<f64>) -> Result<f64> {
    EchoReadout::from_vectors(ops, a, b).resolve(pinned)
}

/// `Δφ` with the measuring operator inserted before readout.
pub fn noisy_delta_phi(
    system: &LmgSystem,
    protocol: &EchoProtocol,
    noise: DetectionNoise,
    normalization: Normalization,
) -> Result<f64> {
    let (a, b) = echo_vectors(system, protocol)?;
    let ops = system.ops();
    let angle = noiseless_angle(ops, &a, &b, protocol.measure_angle)?;
    let m = detection_operator(ops.dim(), noise)?;
    noisy_readout(ops, &m.m_exact, &a, &b, angle, normalization).delta_phi()
}

/// Operating point and step of the finite-difference robustness coefficient.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RobustnessOptions {
    pub strength: f64,
    pub step: f64,
    pub normalization: Normalization,
}

impl Default for RobustnessOptions {
    fn default() -> Self {
        RobustnessOptions {
            strength: 0.1,
            step: 0.01,
            normalization: Normalization::Unnormalized,
        }
    }
}

/// `R = -log10(∂Δφ/∂𝒩)` together with the slope it came from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Robustness {
    pub r: f64,
    pub slope: f64,
    pub measure_angle: f64,
}

fn robustness_from_slope(slope: f64, measure_angle: f64) -> Result<Robustness> {
    if !(slope > 0.0) {
        return Err(Error::NonPositiveSlope { slope });
    }
    Ok(Robustness {
        r: -slope.log10(),
        slope,
        measure_angle,
    })
}

/// Central difference of [`noisy_delta_phi`] in the noise strength.
pub fn robustness_r(system: &LmgSystem, protocol: &EchoProtocol, options: &RobustnessOptions) -> Result<Robustness> {
    let (n0, h) = (options.strength, options.step);
    if !(h > 0.0 && n0 - h > 0.0 && n0 + h < 1.0) {
        return Err(invalid(format!(
            "need 0 < N0 - h and N0 + h < 1, got N0 = {n0}, h = {h}"
        )));
    }
    let (a, b) = echo_vectors(system, protocol)?;
    let ops = system.ops();
    let angle = noiseless_angle(ops, &a, &b, protocol.measure_angle)?;
    let dphi = |s: f64| -> Result<f64> {
        let m = detection_operator(ops.dim(), DetectionNoise::new(s)?)?;
        noisy_readout(ops, &m.m_exact, &a, &b, angle, options.normalization).delta_phi()
    };
    let slope = (dphi(n0 + h)? - dphi(n0 - h)?) / (2.0 * h);
    robustness_from_slope(slope, angle)
}

/// Ingredients of the first-order expansion of `Δφ` in `𝒩` at `𝒩 = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FirstOrderTerms {
    pub delta_phi: f64,
    /// `d⟨S_m⟩/dφ` without noise.
    pub slope: f64,
    /// The same slope with `S_m` replaced by `{M1, S_m}`.
    pub anticommutator_slope: f64,
    pub mean: f64,
    pub variance: f64,
    /// `⟨{M1, S_m}⟩`.
    pub anticommutator_mean: f64,
    /// `⟨{M1, S_m²}⟩`.
    pub anticommutator_second: f64,
    pub measure_angle: f64,
}

impl FirstOrderTerms {
    /// `Δφ (4 - D1/D0)`: the slope obtained by expanding only the signal derivative.
    pub fn signal_only_slope(&self) -> f64 {
        self.delta_phi * (4.0 - self.anticommutator_slope / self.slope)
    }

    /// `d Δφ/d𝒩` at `𝒩 = 0` with both the signal and the spread expanded to first order.
    pub fn full_slope(&self) -> f64 {
        let second = self.variance + self.mean * self.mean;
        let d_var = self.anticommutator_second - 4.0 * second + 8.0 * self.mean * self.mean
            - 2.0 * self.mean * self.anticommutator_mean;
        self.delta_phi * (d_var / (2.0 * self.variance) + 4.0 - self.anticommutator_slope / self.slope)
    }
}

fn anticommutator_apply(m1: &DMatrix<f64>, op: impl Fn(&CVector) -> CVector, v: &CVector) -> CVector {
    real_mul(m1, &op(v)) + op(&real_mul(m1, v))
}

pub fn first_order_terms(system: &LmgSystem, protocol: &EchoProtocol) -> Result<FirstOrderTerms> {
    let (a, b) = echo_vectors(system, protocol)?;
    let ops = system.ops();
    let readout = EchoReadout::from_vectors(ops, &a, &b);
    let angle = readout.resolve(protocol.measure_angle)?;
    let dphi = readout.delta_phi(angle)?;
    let m1 = detection_operator(ops.dim(), DetectionNoise::new(0.0)?)?.m1;
    let s = |v: &CVector| ops.apply_component(angle, v);
    let s2 = |v: &CVector| ops.apply_component(angle, &ops.apply_component(angle, v));
    let anti_s_b = anticommutator_apply(&m1, s, &b);
    let anti_s2_b = anticommutator_apply(&m1, s2, &b);
    Ok(FirstOrderTerms {
        delta_phi: dphi,
        slope: readout.derivative(angle),
        anticommutator_slope: -2.0 * a.dotc(&anti_s_b).im,
        mean: b.dotc(&s(&b)).re,
        variance: readout.variance(angle),
        anticommutator_mean: b.dotc(&anti_s_b).re,
        anticommutator_second: b.dotc(&anti_s2_b).re,
        measure_angle: angle,
    })
}

/// `-log10` of the first-order slope `Δφ (4 - D1/D0)`, defined for ideal reversal with `t2 = t1`.
pub fn robustness_semi_analytic(system: &LmgSystem, protocol: &EchoProtocol) -> Result<Robustness> {
    match protocol.reversal {
        Reversal::Ideal { t2 } if (t2 - protocol.t1).abs() <= 1e-12 * protocol.t1.abs().max(1.0) => {}
        _ => {
            return Err(Error::ProtocolMismatch(
                "the semi-analytic slope assumes ideal reversal with t2 = t1".into(),
            ))
        }
    }
    let terms = first_order_terms(system, protocol)?;
    robustness_from_slope(terms.signal_only_slope(), terms.measure_angle)
}

/// `R(protocol) - R(same protocol without reversal)`, each at its own noiseless readout optimum.
pub fn relative_robustness(system: &LmgSystem, protocol: &EchoProtocol, options: &RobustnessOptions) -> Result<f64> {
    let with = robustness_r(system, protocol, options)?;
    let bare = EchoProtocol {
        reversal: Reversal::None,
        ..protocol.clone()
    };
    let without = robustness_r(system, &bare, options)?;
    Ok(with.r - without.r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::interferometer::delta_phi;
    use crate::lmg::LmgParams;

    fn system(n: usize, gamma: f64) -> LmgSystem {
        LmgSystem::new(n, LmgParams::new(1.0, gamma).unwrap()).unwrap()
    }

    #[test]
    fn sigma_round_trip() {
        let n = DetectionNoise::from_sigma(0.7).unwrap();
        assert!((n.sigma() - 0.7).abs() < 1e-12);
        assert!(DetectionNoise::new(1.0).is_err());
        assert_eq!(DetectionNoise::from_sigma(0.0).unwrap().strength(), 0.0);
    }

    #[test]
    fn noiseless_operator_is_identity() {
        let ops = detection_operator(5, DetectionNoise::new(0.0).unwrap()).unwrap();
        assert_eq!(ops.m_exact, DMatrix::identity(5, 5));
    }

    #[test]
    fn three_level_operator_by_hand() {
        let s: f64 = 0.1;
        let ops = detection_operator(3, DetectionNoise::new(s).unwrap()).unwrap();
        let c = 1.0 / (1.0 + 2.0 * (s + s.powi(4) + s.powi(9) + s.powi(16)));
        let expected = DMatrix::from_row_slice(
            3,
            3,
            &[1.0, s, s.powi(4), s, 1.0, s, s.powi(4), s, 1.0],
        ) * c;
        assert!((&ops.m_exact - expected).amax() < 1e-15);
        assert!((ops.m_exact[(1, 0)] / ops.m_exact[(1, 1)] - 0.1).abs() < 1e-15);
    }

    #[test]
    fn confusion_rows_sum_to_one() {
        let ops = detection_operator(41, DetectionNoise::new(0.3).unwrap()).unwrap();
        for row in ops.confusion.row_iter() {
            assert!((row.sum() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn first_order_expansion_error_is_fourth_order() {
        for s in [0.02, 0.1, 0.2] {
            let ops = detection_operator(12, DetectionNoise::new(s).unwrap()).unwrap();
            let approx = (ops.m0() + &ops.m1 * s) / (1.0 + 2.0 * s);
            assert!((&ops.m_exact - approx).amax() <= 3.0 * s.powi(4));
        }
    }

    #[test]
    fn zero_noise_reduces_to_clean_delta_phi() {
        let sys = system(30, 0.3);
        let p = EchoProtocol::for_system(&sys, 0.07, 0.5).with_reversal(Reversal::Ideal { t2: 0.06 });
        let clean = delta_phi(&sys, &p).unwrap();
        for norm in [Normalization::Unnormalized, Normalization::Normalized] {
            let noisy = noisy_delta_phi(&sys, &p, DetectionNoise::new(0.0).unwrap(), norm).unwrap();
            assert!((noisy - clean).abs() < 1e-12 * clean);
        }
    }

    #[test]
    fn reversal_none_relative_to_itself_is_zero() {
        let sys = system(30, 0.3);
        let p = EchoProtocol::for_system(&sys, 0.07, 0.5).with_reversal(Reversal::None);
        let r = relative_robustness(&sys, &p, &RobustnessOptions::default()).unwrap();
        assert_eq!(r, 0.0);
    }

    #[test]
    fn first_order_slope_matches_small_noise_difference() {
        let sys = system(20, 0.3);
        let p = EchoProtocol::for_system(&sys, 0.1, 0.6);
        let terms = first_order_terms(&sys, &p).unwrap();
        let h = 1e-5;
        let d = |s: f64| noisy_delta_phi(&sys, &p, DetectionNoise::new(s).unwrap(), Normalization::Unnormalized).unwrap();
        let fd = (d(h) - d(0.0)) / h;
        let full = terms.full_slope();
        assert!((fd - full).abs() < 1e-3 * full.abs(), "{fd} vs {full}");
    }

    #[test]
    fn semi_analytic_requires_matched_reversal() {
        let sys = system(10, 0.3);
        let p = EchoProtocol::for_system(&sys, 0.1, 0.6).with_reversal(Reversal::Ideal { t2: 0.05 });
        assert!(matches!(
            robustness_semi_analytic(&sys, &p),
            Err(Error::ProtocolMismatch(_))
        ));
    }

    #[test]
    fn bad_operating_point_rejected() {
        let sys = system(10, 0.3);
        let p = EchoProtocol::for_system(&sys, 0.1, 0.6);
        let opts = RobustnessOptions {
            strength: 0.005,
            ..Default::default()
        };
        assert!(robustness_r(&sys, &p, &opts).is_err());
    }
}
