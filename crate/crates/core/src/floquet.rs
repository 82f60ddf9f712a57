//! Periodic ±π/2 pulse sequences whose average Hamiltonian is `chi_eff (Sx² + gamma Sy²)`
//! with `chi_eff / chi < 0`, i.e. an effective time reversal built from forward evolution.
//!
//! One period, in time order, is
//! `Rz(+π/2), free(t2_seg), Rz(-π/2), Ry(+π/2), free(t1_seg), Ry(-π/2)` with
//! `R_α(θ) = exp(-iθ S_α)`. The z block maps `Sx² ↔ Sy²` and the y block maps `Sx² ↔ Sz²`,
//! so to first order a period generates
//! `chi [Sx² γ t2 + Sy² (γ t1 + t2) + Sz² t1] = chi t1 S² + chi (γ t2 - t1)(Sx² + γ Sy²)`
//! once `t2/t1 = (1 - 2γ)/((1 - γ)(1 + γ))`. When that ratio vanishes (γ = 1/2) the z block
//! is dropped.
//!
//! Noise is drawn from ChaCha20 seeded with the noise model's `seed`; trial `i` uses stream `i`,
//! so every trial is reproducible on its own, independent of execution order.

use std::f64::consts::FRAC_PI_2;
use std::fmt::Write as _;

use log::warn;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, invalid, Error, Result};
use crate::interferometer::{EchoProtocol, Reversal};
use crate::lmg::LmgSystem;
use crate::spectral::CVector;
use crate::spin::{Axis, RotationAxis, SpinState};

fn check_gamma(gamma: f64) -> Result<()> {
    ensure_finite("gamma", gamma)?;
    if !(0.0..=0.5).contains(&gamma) {
        return Err(invalid(format!("gamma = {gamma} outside 0 <= gamma <= 0.5")));
    }
    Ok(())
}

/// `chi_eff / chi = -(γ² - γ + 1)/(-γ² - 2γ + 2)`, negative on the whole range.
pub fn effective_chi_ratio(gamma: f64) -> Result<f64> {
    check_gamma(gamma)?;
    Ok(-(gamma * gamma - gamma + 1.0) / (-gamma * gamma - 2.0 * gamma + 2.0))
}

/// `t2_seg / t1_seg = (1 - 2γ)/((1 - γ)(1 + γ))`.
pub fn segment_ratio(gamma: f64) -> Result<f64> {
    check_gamma(gamma)?;
    Ok((1.0 - 2.0 * gamma) / ((1.0 - gamma) * (1.0 + gamma)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PulseAxis {
    Y,
    Z,
}

impl PulseAxis {
    fn label(self) -> &'static str {
        match self {
            PulseAxis::Y => "y",
            PulseAxis::Z => "z",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum PulseEvent {
    /// Instantaneous rotation `exp(-i angle S_axis)`.
    Pulse { time: f64, axis: PulseAxis, angle: f64 },
    /// Free evolution under the forward Hamiltonian.
    Free { start: f64, duration: f64 },
}

/// A compiled reversal program.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PulseSequence {
    pub gamma: f64,
    pub chi: f64,
    pub chi_eff: f64,
    pub t1_seg: f64,
    pub t2_seg: f64,
    pub n_periods: usize,
    /// Uniform scale of both free segments in the final period, in `(0, 1]`.
    pub last_scale: f64,
    /// Equivalent reversal time the sequence realises.
    pub target_time: f64,
    pub events: Vec<PulseEvent>,
}

impl PulseSequence {
    /// Full-period duration `t1_seg + t2_seg`.
    pub fn period(&self) -> f64 {
        self.t1_seg + self.t2_seg
    }

    pub fn events_per_period(&self) -> usize {
        self.events.len() / self.n_periods.max(1)
    }

    /// Wall-clock length of the sequence.
    pub fn duration(&self) -> f64 {
        self.period() * ((self.n_periods - 1) as f64 + self.last_scale)
    }

    /// Equivalent reversal time after each completed period, starting with 0.
    pub fn reversal_times(&self) -> Vec<f64> {
        let per_period = (self.chi_eff / self.chi).abs() * self.period();
        let mut out = Vec::with_capacity(self.n_periods + 1);
        out.push(0.0);
        for k in 1..=self.n_periods {
            let scale = if k == self.n_periods { self.last_scale } else { 1.0 };
            out.push(out[k - 1] + per_period * scale);
        }
        out
    }

    /// Line-oriented text: `#` header with the sequence parameters, then one event per line,
    /// `<time> PULSE <axis> <angle_rad>` or `<t_start> FREE <duration>`.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# echolab pulse sequence");
        let _ = writeln!(s, "# gamma = {}", self.gamma);
        let _ = writeln!(s, "# chi = {}", self.chi);
        let _ = writeln!(s, "# chi_eff = {}", self.chi_eff);
        let _ = writeln!(s, "# n_periods = {}", self.n_periods);
        let _ = writeln!(s, "# t1_seg = {}", self.t1_seg);
        let _ = writeln!(s, "# t2_seg = {}", self.t2_seg);
        let _ = writeln!(s, "# last_scale = {}", self.last_scale);
        let _ = writeln!(s, "# target_time = {}", self.target_time);
        for e in &self.events {
            match e {
                PulseEvent::Pulse { time, axis, angle } => {
                    let _ = writeln!(s, "{time} PULSE {} {angle}", axis.label());
                }
                PulseEvent::Free { start, duration } => {
                    let _ = writeln!(s, "{start} FREE {duration}");
                }
            }
        }
        s
    }

    /// Inverse of [`PulseSequence::to_text`].
    pub fn parse(text: &str) -> Result<Self> {
        let mut header = std::collections::HashMap::new();
        let mut events = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let err = |message: String| Error::Parse {
                line: line_no,
                message,
            };
            let line = raw.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('#') {
                if let Some((k, v)) = rest.split_once('=') {
                    header.insert(k.trim().to_string(), (line_no, v.trim().to_string()));
                }
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            let num = |s: &str| -> Result<f64> {
                s.parse::<f64>()
                    .map_err(|_| err(format!("expected a number, found {s:?}")))
            };
            match fields.as_slice() {
                [t, "PULSE", axis, angle] => {
                    let axis = match *axis {
                        "y" | "Y" => PulseAxis::Y,
                        "z" | "Z" => PulseAxis::Z,
                        other => return Err(err(format!("unknown pulse axis {other:?}"))),
                    };
                    events.push(PulseEvent::Pulse {
                        time: num(t)?,
                        axis,
                        angle: num(angle)?,
                    });
                }
                [t, "FREE", d] => events.push(PulseEvent::Free {
                    start: num(t)?,
                    duration: num(d)?,
                }),
                _ => return Err(err(format!("unrecognised event line {line:?}"))),
            }
        }
        let get = |key: &str| -> Result<f64> {
            let (line, v) = header.get(key).ok_or_else(|| Error::Parse {
                line: 0,
                message: format!("missing header field {key}"),
            })?;
            v.parse::<f64>().map_err(|_| Error::Parse {
                line: *line,
                message: format!("header field {key} is not a number: {v:?}"),
            })
        };
        let n_periods_f = get("n_periods")?;
        if n_periods_f < 1.0 || n_periods_f.fract() != 0.0 {
            return Err(Error::Parse {
                line: header["n_periods"].0,
                message: "n_periods must be a positive integer".into(),
            });
        }
        let n_periods = n_periods_f as usize;
        if events.is_empty() || events.len() % n_periods != 0 {
            return Err(Error::Parse {
                line: 0,
                message: format!(
                    "{} events cannot be split into {n_periods} equal periods",
                    events.len()
                ),
            });
        }
        let seq = PulseSequence {
            gamma: get("gamma")?,
            chi: get("chi")?,
            chi_eff: get("chi_eff")?,
            t1_seg: get("t1_seg")?,
            t2_seg: get("t2_seg")?,
            n_periods,
            last_scale: get("last_scale")?,
            target_time: get("target_time")?,
            events,
        };
        check_gamma(seq.gamma)?;
        Ok(seq)
    }
}

/// Compiles a sequence whose total effective reversal equals `target_time` under
/// `H(-chi, gamma)`, with `pulse_frequency` periods per unit `1/|chi|`.
pub fn compile(gamma: f64, chi: f64, target_time: f64, pulse_frequency: f64) -> Result<PulseSequence> {
    let ratio = segment_ratio(gamma)?;
    let eff = effective_chi_ratio(gamma)?;
    ensure_finite("chi", chi)?;
    if chi == 0.0 {
        return Err(invalid("chi must be nonzero"));
    }
    if !(pulse_frequency > 0.0 && pulse_frequency.is_finite()) {
        return Err(invalid(format!(
            "pulse frequency must be positive, got {pulse_frequency}"
        )));
    }
    if !(target_time > 0.0 && target_time.is_finite()) {
        return Err(invalid(format!(
            "target reversal time must be positive, got {target_time}"
        )));
    }
    let period = 1.0 / (pulse_frequency * chi.abs());
    let t1_seg = period / (1.0 + ratio);
    let t2_seg = ratio * t1_seg;
    let exact = target_time / (eff.abs() * period);
    let mut n_periods = exact.ceil().max(1.0) as usize;
    // an exact multiple that rounding pushed just above an integer
    if n_periods > 1 && (exact - (n_periods - 1) as f64) < 1e-12 * exact {
        n_periods -= 1;
    }
    let last_scale = exact - (n_periods - 1) as f64;

    let mut events = Vec::with_capacity(6 * n_periods);
    let mut t = 0.0;
    for k in 0..n_periods {
        let scale = if k + 1 == n_periods { last_scale } else { 1.0 };
        if t2_seg > 0.0 {
            let d = t2_seg * scale;
            events.push(PulseEvent::Pulse { time: t, axis: PulseAxis::Z, angle: FRAC_PI_2 });
            events.push(PulseEvent::Free { start: t, duration: d });
            t += d;
            events.push(PulseEvent::Pulse { time: t, axis: PulseAxis::Z, angle: -FRAC_PI_2 });
        }
        let d = t1_seg * scale;
        events.push(PulseEvent::Pulse { time: t, axis: PulseAxis::Y, angle: FRAC_PI_2 });
        events.push(PulseEvent::Free { start: t, duration: d });
        t += d;
        events.push(PulseEvent::Pulse { time: t, axis: PulseAxis::Y, angle: -FRAC_PI_2 });
    }
    Ok(PulseSequence {
        gamma,
        chi,
        chi_eff: eff * chi,
        t1_seg,
        t2_seg,
        n_periods,
        last_scale,
        target_time,
        events,
    })
}

/// Whether pulse errors are redrawn for every pulse or fixed for a whole trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum NoiseCorrelation {
    #[default]
    PerPulse,
    PerTrial,
}

/// Gaussian imperfections of the pulse program.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PulseNoiseSpec {
    /// Relative SD of every pulse angle.
    pub area_rel_sd: f64,
    /// Relative SD of every free-evolution duration.
    pub separation_rel_sd: f64,
    /// Absolute SD in radians of the tilt of every pulse axis.
    pub phase_sd: f64,
    pub seed: u64,
    pub correlation: NoiseCorrelation,
}

impl PulseNoiseSpec {
    pub fn noiseless(seed: u64) -> Self {
        PulseNoiseSpec {
            area_rel_sd: 0.0,
            separation_rel_sd: 0.0,
            phase_sd: 0.0,
            seed,
            correlation: NoiseCorrelation::PerPulse,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("area_rel_sd", self.area_rel_sd),
            ("separation_rel_sd", self.separation_rel_sd),
            ("phase_sd", self.phase_sd),
        ] {
            ensure_finite(name, v)?;
            if v < 0.0 {
                return Err(invalid(format!("{name} must be nonnegative, got {v}")));
            }
        }
        Ok(())
    }

    /// The generator for trial `trial`.
    pub fn trial_rng(&self, trial: u64) -> ChaCha20Rng {
        let mut rng = ChaCha20Rng::seed_from_u64(self.seed);
        rng.set_stream(trial);
        rng
    }
}

/// A concrete operation after noise has been sampled.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RealizedEvent {
    Rotation { axis: RotationAxis, angle: f64 },
    Free { duration: f64 },
}

fn tilted_axis(axis: PulseAxis, tilt: f64) -> RotationAxis {
    if tilt == 0.0 {
        return match axis {
            PulseAxis::Y => Axis::Y.into(),
            PulseAxis::Z => Axis::Z.into(),
        };
    }
    let (s, c) = tilt.sin_cos();
    match axis {
        // azimuth π/2 + tilt in the x–y plane
        PulseAxis::Y => RotationAxis::Direction([-s, c, 0.0]),
        // tipped towards +x
        PulseAxis::Z => RotationAxis::Direction([s, 0.0, c]),
    }
}

/// Samples one noisy realisation of `seq` (or the nominal one when `noise` is `None`).
pub fn realize(seq: &PulseSequence, noise: Option<&PulseNoiseSpec>, trial: u64) -> Result<Vec<RealizedEvent>> {
    let nominal = |e: &PulseEvent| match *e {
        PulseEvent::Pulse { axis, angle, .. } => RealizedEvent::Rotation {
            axis: tilted_axis(axis, 0.0),
            angle,
        },
        PulseEvent::Free { duration, .. } => RealizedEvent::Free { duration },
    };
    let Some(spec) = noise else {
        return Ok(seq.events.iter().map(nominal).collect());
    };
    spec.validate()?;
    let mut rng = spec.trial_rng(trial);
    let mut normal = || -> f64 { rng.sample(StandardNormal) };
    let fixed = match spec.correlation {
        NoiseCorrelation::PerTrial => Some((normal(), normal(), normal())),
        NoiseCorrelation::PerPulse => None,
    };
    let mut out = Vec::with_capacity(seq.events.len());
    for e in &seq.events {
        match *e {
            PulseEvent::Pulse { axis, angle, .. } => {
                let (xa, xp) = match fixed {
                    Some((a, p, _)) => (a, p),
                    None => (normal(), normal()),
                };
                out.push(RealizedEvent::Rotation {
                    axis: tilted_axis(axis, spec.phase_sd * xp),
                    angle: angle * (1.0 + spec.area_rel_sd * xa),
                });
            }
            PulseEvent::Free { duration, .. } => {
                let xs = match fixed {
                    Some((_, _, s)) => s,
                    None => normal(),
                };
                out.push(RealizedEvent::Free {
                    duration: (duration * (1.0 + spec.separation_rel_sd * xs)).max(0.0),
                });
            }
        }
    }
    Ok(out)
}

fn check_sequence(system: &LmgSystem, seq: &PulseSequence) -> Result<()> {
    let p = system.params();
    if (seq.gamma - p.gamma).abs() > 1e-12 || seq.chi != p.chi {
        return Err(Error::ProtocolMismatch(format!(
            "sequence compiled for (chi, gamma) = ({}, {}), system has ({}, {})",
            seq.chi, seq.gamma, p.chi, p.gamma
        )));
    }
    let density = seq.chi.abs() * seq.period() * system.n_atoms() as f64;
    if density > 0.5 {
        warn!("chi * t_c * N = {density:.3} exceeds 0.5; the first-order average Hamiltonian is inaccurate");
    }
    Ok(())
}

pub(crate) fn apply_events(system: &LmgSystem, events: &[RealizedEvent], psi: &CVector) -> Result<CVector> {
    let ops = system.ops();
    let mut v = psi.clone();
    for e in events {
        v = match *e {
            RealizedEvent::Rotation { axis, angle } => ops.rotate_vector(&v, axis, angle)?,
            RealizedEvent::Free { duration } => system.forward(&v, duration),
        };
    }
    Ok(v)
}

pub(crate) fn apply_noiseless(system: &LmgSystem, seq: &PulseSequence, psi: &CVector) -> Result<CVector> {
    check_sequence(system, seq)?;
    apply_events(system, &realize(seq, None, 0)?, psi)
}

/// Runs the pulse program on `state`; `noise` pairs a noise model with a trial index.
pub fn simulate(
    state: &SpinState,
    system: &LmgSystem,
    seq: &PulseSequence,
    noise: Option<(&PulseNoiseSpec, u64)>,
) -> Result<SpinState> {
    check_sequence(system, seq)?;
    if state.n_atoms() != system.n_atoms() {
        return Err(Error::DimensionMismatch {
            expected: system.n_atoms() + 1,
            found: state.n_atoms() + 1,
        });
    }
    let events = match noise {
        Some((spec, trial)) => realize(seq, Some(spec), trial)?,
        None => realize(seq, None, 0)?,
    };
    let v = apply_events(system, &events, state.amplitudes())?;
    Ok(state.with_amplitudes(v))
}

const PROBE_SEED: u64 = 0x5eed_0f_f10e;
const RANDOM_PROBES: usize = 10;

/// Minimum fidelity, over `|+y⟩` and ten seeded random states, between the noiseless pulse
/// program and exact evolution under `H(-chi, gamma)` for time `t`.
pub fn equivalent_reversal_check(system: &LmgSystem, t: f64, pulse_frequency: f64) -> Result<f64> {
    ensure_finite("t", t)?;
    if t == 0.0 {
        return Ok(1.0);
    }
    let p = system.params();
    let seq = compile(p.gamma, p.chi, t, pulse_frequency)?;
    let mut rng = ChaCha20Rng::seed_from_u64(PROBE_SEED);
    let mut probes = vec![system.probe().clone()];
    for _ in 0..RANDOM_PROBES {
        probes.push(SpinState::random(system.n_atoms(), &mut rng));
    }
    let mut worst = 1.0f64;
    for probe in &probes {
        let pulsed = simulate(probe, system, &seq, None)?;
        let ideal = probe.with_amplitudes(system.reverse(probe.amplitudes(), t));
        worst = worst.min(pulsed.fidelity(&ideal));
    }
    Ok(worst)
}

/// Magnification sampled at every period boundary of one (possibly noisy) reversal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GainTrajectory {
    pub trial: u64,
    /// Wall-clock time since the start of the reversal.
    pub elapsed: Vec<f64>,
    /// Equivalent reversal time under `H(-chi, gamma)`.
    pub reversal_time: Vec<f64>,
    /// `max_m |d⟨S_m⟩/dφ| / (N/2)`.
    pub magnification: Vec<f64>,
}

impl GainTrajectory {
    pub fn final_magnification(&self) -> f64 {
        *self.magnification.last().expect("trajectory has at least one sample")
    }
}

fn magnification(system: &LmgSystem, a: &CVector, b: &CVector) -> f64 {
    let ops = system.ops();
    let dx = -2.0 * a.dotc(&ops.apply_sx(b)).im;
    let dz = -2.0 * a.dotc(&ops.apply_sz(b)).im;
    dx.hypot(dz) / (system.n_atoms() as f64 / 2.0)
}

/// One trial of the pulse-noise Monte Carlo. `noise = None` gives the noiseless reference.
pub fn gain_trajectory(
    system: &LmgSystem,
    protocol: &EchoProtocol,
    noise: Option<&PulseNoiseSpec>,
    trial: u64,
) -> Result<GainTrajectory> {
    let Reversal::Floquet(seq) = &protocol.reversal else {
        return Err(Error::ProtocolMismatch(
            "pulse-noise trajectories need a Floquet reversal".into(),
        ));
    };
    check_sequence(system, seq)?;
    let probe = EchoProtocol {
        reversal: Reversal::None,
        ..protocol.clone()
    };
    let (mut a, mut b) = crate::interferometer::echo_vectors(system, &probe)?;
    let events = realize(seq, noise, trial)?;
    let per_period = seq.events_per_period();
    let mut elapsed = vec![0.0];
    let mut mags = vec![magnification(system, &a, &b)];
    for chunk in events.chunks(per_period) {
        a = apply_events(system, chunk, &a)?;
        b = apply_events(system, chunk, &b)?;
        let dt: f64 = chunk
            .iter()
            .map(|e| match e {
                RealizedEvent::Free { duration } => *duration,
                RealizedEvent::Rotation { .. } => 0.0,
            })
            .sum();
        elapsed.push(elapsed.last().unwrap() + dt);
        mags.push(magnification(system, &a, &b));
    }
    Ok(GainTrajectory {
        trial,
        elapsed,
        reversal_time: seq.reversal_times(),
        magnification: mags,
    })
}

/// `trials` independent noisy trajectories, ordered by trial index.
pub fn monte_carlo_gain(
    system: &LmgSystem,
    protocol: &EchoProtocol,
    noise: &PulseNoiseSpec,
    trials: usize,
) -> Result<Vec<GainTrajectory>> {
    if trials == 0 {
        return Err(invalid("trials must be at least 1"));
    }
    (0..trials as u64)
        .map(|i| gain_trajectory(system, protocol, Some(noise), i))
        .collect()
}
