//! Linearised mean-field response around `⟨S⟩ ≈ S ŷ`.
//!
//! A displacement `(x, z) = (⟨Sx⟩, ⟨Sz⟩)` obeys `dx/dt = 2χγS z`, `dz/dt = 2χ(1-γ)S x`,
//! which mixes a growing and a decaying exponential at rate `2χS sqrt(γ(1-γ))` and conserves
//! `(1-γ)x² - γz²`.

use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, invalid, Error, Result};
use crate::interferometer::encode;
use crate::lmg::LmgSystem;

/// Closed-form solution for an initial displacement `Sφ (sin θ, cos θ)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanFieldTrajectory {
    pub gamma: f64,
    pub chi: f64,
    pub spin: f64,
    pub theta: f64,
    pub phi: f64,
    pub growth_rate: f64,
    /// `x = A e^{rt} + B e^{-rt}`, `z = C e^{rt} + D e^{-rt}`.
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl MeanFieldTrajectory {
    /// Fails for `γ ∈ {0, 1}`, where the rate vanishes; use [`mf_ode`] there.
    pub fn new(gamma: f64, chi: f64, spin: f64, theta: f64, phi: f64) -> Result<Self> {
        for (name, v) in [("gamma", gamma), ("chi", chi), ("spin", spin), ("theta", theta), ("phi", phi)] {
            ensure_finite(name, v)?;
        }
        if !(gamma > 0.0 && gamma < 1.0) {
            return Err(invalid(format!(
                "closed form needs 0 < gamma < 1 (got {gamma}); integrate the equations of motion instead"
            )));
        }
        let k = (gamma / (1.0 - gamma)).sqrt();
        let half = spin * phi / 2.0;
        let (s, c) = theta.sin_cos();
        Ok(MeanFieldTrajectory {
            gamma,
            chi,
            spin,
            theta,
            phi,
            growth_rate: 2.0 * chi * spin * (gamma * (1.0 - gamma)).sqrt(),
            a: half * (s + k * c),
            b: half * (s - k * c),
            c: half * (s / k + c),
            d: -half * (s / k - c),
        })
    }

    /// `(x, z)` at time `t`.
    pub fn at(&self, t: f64) -> (f64, f64) {
        let up = (self.growth_rate * t).exp();
        let down = (-self.growth_rate * t).exp();
        (self.a * up + self.b * down, self.c * up + self.d * down)
    }

    /// Distance of `(x, z)` from the origin at time `t`.
    pub fn distance(&self, t: f64) -> f64 {
        let (x, z) = self.at(t);
        x.hypot(z)
    }

    /// Residuals `(dx/dt - 2χγS z, dz/dt - 2χ(1-γ)S x)` from the analytic derivative.
    pub fn residual(&self, t: f64) -> (f64, f64) {
        let r = self.growth_rate;
        let up = (r * t).exp();
        let down = (-r * t).exp();
        let dx = r * (self.a * up - self.b * down);
        let dz = r * (self.c * up - self.d * down);
        let (x, z) = self.at(t);
        let s = self.chi * self.spin;
        (dx - 2.0 * s * self.gamma * z, dz - 2.0 * s * (1.0 - self.gamma) * x)
    }
}

/// `(1-γ)x² - γz²`, conserved by the linearised flow.
pub fn conserved_quantity(gamma: f64, x: f64, z: f64) -> f64 {
    (1.0 - gamma) * x * x - gamma * z * z
}

/// Convenience wrapper returning `(x, z)` at one time.
pub fn mf_closed_form(gamma: f64, chi: f64, spin: f64, theta: f64, phi: f64, t: f64) -> Result<(f64, f64)> {
    Ok(MeanFieldTrajectory::new(gamma, chi, spin, theta, phi)?.at(t))
}

/// One sample of a numerically integrated trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanFieldSample {
    pub t: f64,
    pub x: f64,
    pub z: f64,
}

const RTOL: f64 = 1e-10;

// Dormand–Prince 5(4) tableau (autonomous system, so the nodes are not needed)
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

/// Adaptive Dormand–Prince integration of the linearised equations, sampled on `t_grid`
/// (nondecreasing, starting at or after 0). Valid for every `γ`, including 0 and 1.
pub fn mf_ode(gamma: f64, chi: f64, spin: f64, theta: f64, phi: f64, t_grid: &[f64]) -> Result<Vec<MeanFieldSample>> {
    for (name, v) in [("gamma", gamma), ("chi", chi), ("spin", spin), ("theta", theta), ("phi", phi)] {
        ensure_finite(name, v)?;
    }
    if t_grid.windows(2).any(|w| !(w[1] >= w[0])) || t_grid.first().is_some_and(|&t| !(t >= 0.0)) {
        return Err(invalid("time grid must be finite, nonnegative and nondecreasing"));
    }
    let kx = 2.0 * chi * spin * gamma;
    let kz = 2.0 * chi * spin * (1.0 - gamma);
    let rhs = |y: [f64; 2]| [kx * y[1], kz * y[0]];
    let scale0 = spin * phi.abs();
    let atol = RTOL * scale0.max(1e-300) * 1e-3;

    let mut y = [spin * phi * theta.sin(), spin * phi * theta.cos()];
    let mut t = 0.0;
    let rate = (kx.abs() * kz.abs()).sqrt().max(kx.abs()).max(kz.abs()).max(1e-12);
    let mut h = 1e-3 / rate;
    let mut out = Vec::with_capacity(t_grid.len());
    for &target in t_grid {
        while t < target {
            let step = h.min(target - t);
            let mut k = [[0.0; 2]; 7];
            k[0] = rhs(y);
            for s in 1..7 {
                let mut ys = y;
                for (j, kj) in k.iter().enumerate().take(s) {
                    ys[0] += step * A[s][j] * kj[0];
                    ys[1] += step * A[s][j] * kj[1];
                }
                k[s] = rhs(ys);
            }
            let mut y5 = y;
            let mut y4 = y;
            for s in 0..7 {
                for i in 0..2 {
                    y5[i] += step * B5[s] * k[s][i];
                    y4[i] += step * B4[s] * k[s][i];
                }
            }
            let mut err: f64 = 0.0;
            for i in 0..2 {
                let sc = atol + RTOL * y[i].abs().max(y5[i].abs());
                err = err.max(((y5[i] - y4[i]) / sc).abs());
            }
            if err <= 1.0 {
                t += step;
                y = y5;
            }
            let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
            h = step * factor;
            if h < 1e-14 * (1.0 + t.abs()) {
                return Err(Error::SearchFailed("step size underflow in mean-field integration".into()));
            }
        }
        out.push(MeanFieldSample { t: target, x: y[0], z: y[1] });
    }
    Ok(out)
}

/// Encoding axis that maximises the long-time growth of the displacement, `arcsin sqrt(γ)`.
pub fn mf_theta_r(gamma: f64) -> Result<f64> {
    ensure_finite("gamma", gamma)?;
    if !(0.0..=1.0).contains(&gamma) {
        return Err(invalid(format!("gamma must lie in [0, 1], got {gamma}")));
    }
    Ok(gamma.sqrt().asin())
}

/// Weight of the growing mode in the distance from the origin, as a function of the
/// displacement angle `θ`: `(√γ + (1-γ)/√γ) sin θ + (√(1-γ) + γ/√(1-γ)) cos θ`.
pub fn growth_coefficient(gamma: f64, theta: f64) -> f64 {
    let sg = gamma.sqrt();
    let sc = (1.0 - gamma).sqrt();
    (sg + (1.0 - gamma) / sg) * theta.sin() + (sc + gamma / sc) * theta.cos()
}

/// Quantum `(⟨Sx⟩, ⟨Sz⟩)` after displacing `|+y⟩` by `Sφ (sin θ, cos θ)` and evolving for `t`.
///
/// A rotation by `φ` about `(cos θ, 0, -sin θ)` produces exactly that initial displacement.
pub fn quantum_displacement(system: &LmgSystem, theta: f64, phi: f64, t: f64) -> Result<(f64, f64)> {
    let axis = theta + std::f64::consts::FRAC_PI_2;
    let displaced = encode(system.probe(), system.ops(), phi, axis)?;
    let evolved = displaced.evolve(system.hamiltonian(), t)?;
    let m = evolved.moments(system.ops())?;
    Ok((m.mean[0], m.mean[2]))
}
