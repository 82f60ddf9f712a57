//! Run configuration: a TOML file with sections, overlaid by `--set section.key=value`.
//!
//! Every key is optional. Missing keys take the defaults written by `Config::to_toml`, which
//! also serves as the record of the exact configuration a run used.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use echolab_core::{NoiseCorrelation, Normalization, MAX_ATOMS};
use toml_edit::{Array, DocumentMut, Item, Table, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, clap::ValueEnum)]
pub enum Experiment {
    SweepQfi,
    SweepTheta,
    GainMap,
    NoiseRobustness,
    FloquetMc,
    EchoRun,
    OpsCheck,
}

impl Experiment {
    pub const ALL: [Experiment; 7] = [
        Experiment::SweepQfi,
        Experiment::SweepTheta,
        Experiment::GainMap,
        Experiment::NoiseRobustness,
        Experiment::FloquetMc,
        Experiment::EchoRun,
        Experiment::OpsCheck,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::SweepQfi => "sweep-qfi",
            Experiment::SweepTheta => "sweep-theta",
            Experiment::GainMap => "gain-map",
            Experiment::NoiseRobustness => "noise-robustness",
            Experiment::FloquetMc => "floquet-mc",
            Experiment::EchoRun => "echo-run",
            Experiment::OpsCheck => "ops-check",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|e| e.name() == s)
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// One problem with a configuration, located by line when it came from the file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub line: Option<usize>,
    pub field: String,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(line) => write!(f, "line {line}: {}: {}", self.field, self.message),
            None => write!(f, "{}: {}", self.field, self.message),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{}", render(.0))]
    Invalid(Vec<Diagnostic>),
}

fn render(diags: &[Diagnostic]) -> String {
    diags.iter().map(|d| d.to_string()).collect::<Vec<_>>().join("\n")
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ThetaPolicy {
    ThetaR,
    ThetaP,
    Explicit(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum T1Policy {
    Optimal,
    Explicit(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReversalMode {
    Ideal,
    None,
    Floquet,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Formats {
    pub csv: bool,
    pub json: bool,
    pub svg: bool,
}

impl Formats {
    pub fn parse_list(items: &[String]) -> Result<Self, String> {
        let mut f = Formats::default();
        for item in items {
            match item.trim() {
                "csv" => f.csv = true,
                "json" => f.json = true,
                "svg" => f.svg = true,
                other => return Err(format!("unknown format '{other}' (expected csv, json, svg)")),
            }
        }
        Ok(f)
    }

    fn names(&self) -> Vec<&'static str> {
        [("csv", self.csv), ("json", self.json), ("svg", self.svg)]
            .into_iter()
            .filter_map(|(n, on)| on.then_some(n))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub experiment: Option<Experiment>,
    pub seed: Option<u64>,
    pub n_atoms: usize,
    pub chi: f64,
    /// Anisotropy for single-point experiments.
    pub gamma: f64,
    /// Anisotropy grid for sweeps.
    pub gamma_grid: Vec<f64>,
    pub window: (f64, f64),
    pub t1_points: usize,
    pub qfi_search_sphere: bool,
    pub t1: T1Policy,
    pub theta: ThetaPolicy,
    pub reversal: ReversalMode,
    /// `t2 / t1` for ideal reversal, and the reversal length for Floquet.
    pub t2_ratio: f64,
    pub pulse_frequency: f64,
    pub t2_range_factor: f64,
    pub t2_points: usize,
    pub measure_angle: Option<f64>,
    pub noise_strength: f64,
    pub noise_step: f64,
    pub normalization: Normalization,
    pub trials: usize,
    pub area_rel_sd: f64,
    pub separation_rel_sd: f64,
    pub phase_sd: f64,
    pub correlation: NoiseCorrelation,
    pub ops_atoms: Vec<usize>,
    pub workers: Option<usize>,
    pub out: PathBuf,
    pub formats: Formats,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            experiment: None,
            seed: None,
            n_atoms: 100,
            chi: 1.0,
            gamma: 0.1,
            gamma_grid: range_grid(0.0, 0.5, 0.02),
            window: (0.25, 3.0),
            t1_points: 241,
            qfi_search_sphere: false,
            t1: T1Policy::Optimal,
            theta: ThetaPolicy::ThetaR,
            reversal: ReversalMode::Ideal,
            t2_ratio: 1.0,
            pulse_frequency: 500.0,
            t2_range_factor: 2.0,
            t2_points: 200,
            measure_angle: None,
            noise_strength: 0.1,
            noise_step: 0.01,
            normalization: Normalization::Unnormalized,
            trials: 100,
            area_rel_sd: 0.0,
            separation_rel_sd: 0.0,
            phase_sd: 0.0,
            correlation: NoiseCorrelation::PerPulse,
            ops_atoms: vec![1, 2, 10, 50, 100],
            workers: None,
            out: PathBuf::from("out"),
            formats: Formats { csv: true, json: true, svg: false },
        }
    }
}

/// `start, start + step, …` up to `stop`, with the last point snapped onto `stop`.
pub fn range_grid(start: f64, stop: f64, step: f64) -> Vec<f64> {
    let n = ((stop - start) / step + 1e-9).floor() as usize;
    let mut v: Vec<f64> = (0..=n).map(|i| start + i as f64 * step).collect();
    if let Some(last) = v.last_mut() {
        if (*last - stop).abs() < 1e-9 * step.abs() {
            *last = stop;
        }
    }
    v
}

const KEYS: &[&str] = &[
    "experiment",
    "seed",
    "system.n_atoms",
    "system.chi",
    "system.gamma",
    "grid.gamma",
    "squeezing.window",
    "squeezing.grid_points",
    "squeezing.search",
    "squeezing.t1",
    "encoding.theta",
    "reversal.mode",
    "reversal.t2_ratio",
    "reversal.pulse_frequency",
    "gain_map.t2_range_factor",
    "gain_map.t2_points",
    "readout.measure_angle",
    "detection.strength",
    "detection.step",
    "detection.normalization",
    "pulse_noise.trials",
    "pulse_noise.area_rel_sd",
    "pulse_noise.separation_rel_sd",
    "pulse_noise.phase_sd",
    "pulse_noise.correlation",
    "ops_check.n_atoms",
    "run.workers",
    "run.out",
    "run.formats",
];

struct Entry {
    value: Value,
    line: Option<usize>,
}

struct Fields {
    entries: BTreeMap<String, Entry>,
    diags: Vec<Diagnostic>,
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

impl Fields {
    fn from_text(text: &str) -> Result<Self, Vec<Diagnostic>> {
        let doc = toml_edit::Document::parse(text.to_owned()).map_err(|e| {
            vec![Diagnostic {
                line: e.span().map(|s| line_of(text, s.start)),
                field: "syntax".into(),
                message: e.message().trim().to_owned(),
            }]
        })?;
        let mut fields = Fields { entries: BTreeMap::new(), diags: Vec::new() };
        for (key, item) in doc.as_table().iter() {
            fields.flatten(text, key, item, 0);
        }
        Ok(fields)
    }

    fn flatten(&mut self, text: &str, key: &str, item: &Item, depth: usize) {
        let line = item.span().map(|s| line_of(text, s.start));
        match item {
            Item::Value(v) => {
                self.entries.insert(key.to_owned(), Entry { value: v.clone(), line });
            }
            Item::Table(t) if depth == 0 => {
                for (k, it) in t.iter() {
                    self.flatten(text, &format!("{key}.{k}"), it, depth + 1);
                }
            }
            _ => self.diags.push(Diagnostic {
                line,
                field: key.to_owned(),
                message: "unsupported nesting; use `[section]` with plain keys".into(),
            }),
        }
    }

    fn set_override(&mut self, assignment: &str) {
        let Some((key, raw)) = assignment.split_once('=') else {
            self.diags.push(Diagnostic {
                line: None,
                field: format!("--set {assignment}"),
                message: "expected key=value".into(),
            });
            return;
        };
        let key = key.trim().to_owned();
        let raw = raw.trim();
        let value = format!("v = {raw}")
            .parse::<DocumentMut>()
            .ok()
            .and_then(|d| d.get("v").and_then(|i| i.as_value().cloned()))
            .unwrap_or_else(|| Value::from(raw));
        self.entries.insert(key, Entry { value, line: None });
    }

    fn diag(&mut self, key: &str, message: impl Into<String>) {
        let line = self.entries.get(key).and_then(|e| e.line);
        self.diags.push(Diagnostic { line, field: key.to_owned(), message: message.into() });
    }

    fn get(&self, key: &str) -> Option<&Value> {
        self.entries.get(key).map(|e| &e.value)
    }

    fn number(&mut self, key: &str, default: f64) -> f64 {
        match self.get(key) {
            None => default,
            Some(v) => match as_f64(v) {
                Some(x) if x.is_finite() => x,
                _ => {
                    self.diag(key, "expected a finite number");
                    default
                }
            },
        }
    }

    fn count(&mut self, key: &str, default: usize) -> usize {
        match self.get(key) {
            None => default,
            Some(v) => match v.as_integer() {
                Some(i) if i >= 0 => i as usize,
                _ => {
                    self.diag(key, "expected a nonnegative integer");
                    default
                }
            },
        }
    }

    fn text(&mut self, key: &str) -> Option<String> {
        match self.get(key) {
            None => None,
            Some(v) => match v.as_str() {
                Some(s) => Some(s.to_owned()),
                None => {
                    self.diag(key, "expected a string");
                    None
                }
            },
        }
    }

    /// A string keyword or a number.
    fn keyword_or_number(&mut self, key: &str) -> Option<Result<String, f64>> {
        let v = self.get(key)?;
        if let Some(s) = v.as_str() {
            return Some(Ok(s.to_owned()));
        }
        match as_f64(v) {
            Some(x) if x.is_finite() => Some(Err(x)),
            _ => {
                self.diag(key, "expected a keyword or a finite number");
                None
            }
        }
    }

    fn number_list(&mut self, key: &str) -> Option<Vec<f64>> {
        let v = self.get(key)?;
        let Some(arr) = v.as_array() else {
            self.diag(key, "expected an array of numbers");
            return None;
        };
        let xs: Option<Vec<f64>> = arr.iter().map(as_f64).collect();
        match xs {
            Some(xs) if xs.iter().all(|x| x.is_finite()) => Some(xs),
            _ => {
                self.diag(key, "expected an array of finite numbers");
                None
            }
        }
    }

    fn grid(&mut self, key: &str) -> Option<Vec<f64>> {
        let v = self.get(key)?;
        if v.as_array().is_some() {
            return self.number_list(key);
        }
        let Some(t) = v.as_inline_table() else {
            self.diag(key, "expected an array or { start, stop, step }");
            return None;
        };
        let part = |name: &str| t.get(name).and_then(as_f64).filter(|x| x.is_finite());
        match (part("start"), part("stop"), part("step")) {
            (Some(start), Some(stop), Some(step)) if step > 0.0 && stop >= start => {
                Some(range_grid(start, stop, step))
            }
            (Some(_), Some(_), Some(_)) => {
                self.diag(key, "range needs step > 0 and stop >= start");
                None
            }
            _ => {
                self.diag(key, "range needs numeric start, stop and step");
                None
            }
        }
    }
}

fn as_f64(v: &Value) -> Option<f64> {
    v.as_float().or_else(|| v.as_integer().map(|i| i as f64))
}

impl Config {
    pub fn from_path(path: &Path, overrides: &[String]) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_owned(),
            source,
        })?;
        Self::from_text(&text, overrides)
    }

    /// Parses and validates, returning every problem found rather than the first.
    pub fn from_text(text: &str, overrides: &[String]) -> Result<Self, ConfigError> {
        let mut f = Fields::from_text(text).map_err(ConfigError::Invalid)?;
        for o in overrides {
            f.set_override(o);
        }
        let unknown: Vec<String> = f
            .entries
            .keys()
            .filter(|k| !KEYS.contains(&k.as_str()))
            .cloned()
            .collect();
        for k in unknown {
            f.diag(&k, "unknown field");
        }
        let cfg = Self::read(&mut f);
        if f.diags.is_empty() {
            Ok(cfg)
        } else {
            Err(ConfigError::Invalid(f.diags))
        }
    }

    fn read(f: &mut Fields) -> Config {
        let d = Config::default();
        let experiment = f.text("experiment").and_then(|s| {
            let e = Experiment::parse(&s);
            if e.is_none() {
                let names: Vec<_> = Experiment::ALL.iter().map(|e| e.name()).collect();
                f.diag("experiment", format!("unknown experiment '{s}' (expected one of {})", names.join(", ")));
            }
            e
        });
        let seed = match f.get("seed") {
            None => None,
            Some(v) => match v.as_integer() {
                Some(i) if i >= 0 => Some(i as u64),
                _ => {
                    f.diag("seed", "expected a nonnegative integer");
                    None
                }
            },
        };

        let n_atoms = f.count("system.n_atoms", d.n_atoms);
        if !(1..=MAX_ATOMS).contains(&n_atoms) {
            f.diag("system.n_atoms", format!("must lie in 1..={MAX_ATOMS}, got {n_atoms}"));
        }
        let chi = f.number("system.chi", d.chi);
        if chi == 0.0 {
            f.diag("system.chi", "must be nonzero");
        }
        let gamma = f.number("system.gamma", d.gamma);
        check_gamma(f, "system.gamma", gamma);
        let gamma_grid = f.grid("grid.gamma").unwrap_or(d.gamma_grid.clone());
        if gamma_grid.is_empty() {
            f.diag("grid.gamma", "grid is empty");
        }
        for &g in &gamma_grid {
            if !check_gamma(f, "grid.gamma", g) {
                break;
            }
        }

        let window = match f.number_list("squeezing.window") {
            None => d.window,
            Some(w) if w.len() == 2 && w[0] >= 0.0 && w[1] > w[0] => (w[0], w[1]),
            Some(_) => {
                f.diag("squeezing.window", "expected [lo, hi] with 0 <= lo < hi");
                d.window
            }
        };
        let t1_points = f.count("squeezing.grid_points", d.t1_points);
        if t1_points < 3 {
            f.diag("squeezing.grid_points", "need at least 3 points");
        }
        let qfi_search_sphere = match f.text("squeezing.search").as_deref() {
            None | Some("plane") => false,
            Some("sphere") => true,
            Some(other) => {
                f.diag("squeezing.search", format!("expected \"plane\" or \"sphere\", got \"{other}\""));
                false
            }
        };
        let t1 = match f.keyword_or_number("squeezing.t1") {
            None => d.t1,
            Some(Ok(s)) if s == "optimal" => T1Policy::Optimal,
            Some(Err(x)) if x > 0.0 => T1Policy::Explicit(x),
            Some(_) => {
                f.diag("squeezing.t1", "expected \"optimal\" or a positive time");
                d.t1
            }
        };
        let theta = match f.keyword_or_number("encoding.theta") {
            None => d.theta,
            Some(Ok(s)) if s == "theta_r" => ThetaPolicy::ThetaR,
            Some(Ok(s)) if s == "theta_p" => ThetaPolicy::ThetaP,
            Some(Err(x)) => ThetaPolicy::Explicit(x),
            Some(Ok(s)) => {
                f.diag("encoding.theta", format!("expected \"theta_r\", \"theta_p\" or an angle, got \"{s}\""));
                d.theta
            }
        };

        let reversal = match f.text("reversal.mode").as_deref() {
            None => d.reversal,
            Some("ideal") => ReversalMode::Ideal,
            Some("none") => ReversalMode::None,
            Some("floquet") => ReversalMode::Floquet,
            Some(other) => {
                f.diag("reversal.mode", format!("expected \"ideal\", \"none\" or \"floquet\", got \"{other}\""));
                d.reversal
            }
        };
        let t2_ratio = f.number("reversal.t2_ratio", d.t2_ratio);
        if t2_ratio < 0.0 {
            f.diag("reversal.t2_ratio", "must be nonnegative");
        }
        let pulse_frequency = f.number("reversal.pulse_frequency", d.pulse_frequency);
        if pulse_frequency <= 0.0 {
            f.diag("reversal.pulse_frequency", "must be positive");
        }
        if reversal == ReversalMode::Floquet && t2_ratio == 0.0 {
            f.diag("reversal.t2_ratio", "a Floquet reversal needs a positive length");
        }
        if reversal == ReversalMode::Floquet && gamma > 0.5 {
            f.diag("system.gamma", "Floquet reversal needs 0 <= gamma <= 0.5");
        }
        let t2_range_factor = f.number("gain_map.t2_range_factor", d.t2_range_factor);
        if t2_range_factor <= 0.0 {
            f.diag("gain_map.t2_range_factor", "must be positive");
        }
        let t2_points = f.count("gain_map.t2_points", d.t2_points);
        if t2_points < 3 {
            f.diag("gain_map.t2_points", "need at least 3 points");
        }
        let measure_angle = match f.keyword_or_number("readout.measure_angle") {
            None => d.measure_angle,
            Some(Ok(s)) if s == "optimal" => None,
            Some(Err(x)) => Some(x),
            Some(Ok(s)) => {
                f.diag("readout.measure_angle", format!("expected \"optimal\" or an angle, got \"{s}\""));
                None
            }
        };

        let noise_strength = f.number("detection.strength", d.noise_strength);
        let noise_step = f.number("detection.step", d.noise_step);
        if !(noise_step > 0.0 && noise_strength - noise_step > 0.0 && noise_strength + noise_step < 1.0) {
            f.diag(
                "detection.strength",
                format!("need 0 < strength - step and strength + step < 1, got {noise_strength} and {noise_step}"),
            );
        }
        let normalization = match f.text("detection.normalization").as_deref() {
            None | Some("unnormalized") => Normalization::Unnormalized,
            Some("normalized") => Normalization::Normalized,
            Some(other) => {
                f.diag("detection.normalization", format!("expected \"unnormalized\" or \"normalized\", got \"{other}\""));
                Normalization::Unnormalized
            }
        };

        let trials = f.count("pulse_noise.trials", d.trials);
        if trials == 0 {
            f.diag("pulse_noise.trials", "need at least one trial");
        }
        let mut sd = |key: &str| {
            let x = f.number(key, 0.0);
            if x < 0.0 {
                f.diag(key, "must be nonnegative");
            }
            x
        };
        let area_rel_sd = sd("pulse_noise.area_rel_sd");
        let separation_rel_sd = sd("pulse_noise.separation_rel_sd");
        let phase_sd = sd("pulse_noise.phase_sd");
        let correlation = match f.text("pulse_noise.correlation").as_deref() {
            None | Some("per-pulse") => NoiseCorrelation::PerPulse,
            Some("per-trial") => NoiseCorrelation::PerTrial,
            Some(other) => {
                f.diag("pulse_noise.correlation", format!("expected \"per-pulse\" or \"per-trial\", got \"{other}\""));
                NoiseCorrelation::PerPulse
            }
        };
        let stochastic = area_rel_sd > 0.0 || separation_rel_sd > 0.0 || phase_sd > 0.0;
        if stochastic && seed.is_none() && experiment.map_or(true, |e| e == Experiment::FloquetMc) {
            f.diag("seed", "required when any pulse noise is enabled");
        }

        let ops_atoms = match f.number_list("ops_check.n_atoms") {
            None => d.ops_atoms.clone(),
            Some(xs) => {
                let ok = !xs.is_empty()
                    && xs.iter().all(|&x| x.fract() == 0.0 && x >= 1.0 && x <= MAX_ATOMS as f64);
                if !ok {
                    f.diag("ops_check.n_atoms", format!("expected a nonempty list of integers in 1..={MAX_ATOMS}"));
                }
                xs.iter().map(|&x| x.max(1.0) as usize).collect()
            }
        };

        let workers = match f.get("run.workers") {
            None => None,
            Some(_) => {
                let w = f.count("run.workers", 1);
                if w == 0 {
                    f.diag("run.workers", "need at least one worker");
                }
                Some(w.max(1))
            }
        };
        let out = f.text("run.out").map(PathBuf::from).unwrap_or(d.out.clone());
        let formats = match f.get("run.formats") {
            None => d.formats,
            Some(v) => {
                let names: Option<Vec<String>> = v
                    .as_array()
                    .map(|a| a.iter().filter_map(|x| x.as_str().map(str::to_owned)).collect());
                match names.map(|n| Formats::parse_list(&n)) {
                    Some(Ok(fm)) => fm,
                    Some(Err(msg)) => {
                        f.diag("run.formats", msg);
                        d.formats
                    }
                    None => {
                        f.diag("run.formats", "expected an array of strings");
                        d.formats
                    }
                }
            }
        };

        Config {
            experiment,
            seed,
            n_atoms,
            chi,
            gamma,
            gamma_grid,
            window,
            t1_points,
            qfi_search_sphere,
            t1,
            theta,
            reversal,
            t2_ratio,
            pulse_frequency,
            t2_range_factor,
            t2_points,
            measure_angle,
            noise_strength,
            noise_step,
            normalization,
            trials,
            area_rel_sd,
            separation_rel_sd,
            phase_sd,
            correlation,
            ops_atoms,
            workers,
            out,
            formats,
        }
    }

    pub fn pulse_noise_enabled(&self) -> bool {
        self.area_rel_sd > 0.0 || self.separation_rel_sd > 0.0 || self.phase_sd > 0.0
    }

    /// The full configuration, defaults included, in the input format.
    pub fn to_toml(&self) -> String {
        let mut doc = DocumentMut::new();
        if let Some(e) = self.experiment {
            doc["experiment"] = toml_edit::value(e.name());
        }
        if let Some(s) = self.seed {
            doc["seed"] = toml_edit::value(s as i64);
        }
        let mut section = |name: &str, pairs: Vec<(&str, Value)>| {
            let mut t = Table::new();
            for (k, v) in pairs {
                t.insert(k, Item::Value(v));
            }
            doc.insert(name, Item::Table(t));
        };
        let floats = |xs: &[f64]| Value::Array(xs.iter().copied().collect::<Array>());
        section(
            "system",
            vec![
                ("n_atoms", Value::from(self.n_atoms as i64)),
                ("chi", Value::from(self.chi)),
                ("gamma", Value::from(self.gamma)),
            ],
        );
        section("grid", vec![("gamma", floats(&self.gamma_grid))]);
        section(
            "squeezing",
            vec![
                ("window", floats(&[self.window.0, self.window.1])),
                ("grid_points", Value::from(self.t1_points as i64)),
                ("search", Value::from(if self.qfi_search_sphere { "sphere" } else { "plane" })),
                (
                    "t1",
                    match self.t1 {
                        T1Policy::Optimal => Value::from("optimal"),
                        T1Policy::Explicit(t) => Value::from(t),
                    },
                ),
            ],
        );
        section(
            "encoding",
            vec![(
                "theta",
                match self.theta {
                    ThetaPolicy::ThetaR => Value::from("theta_r"),
                    ThetaPolicy::ThetaP => Value::from("theta_p"),
                    ThetaPolicy::Explicit(x) => Value::from(x),
                },
            )],
        );
        section(
            "reversal",
            vec![
                (
                    "mode",
                    Value::from(match self.reversal {
                        ReversalMode::Ideal => "ideal",
                        ReversalMode::None => "none",
                        ReversalMode::Floquet => "floquet",
                    }),
                ),
                ("t2_ratio", Value::from(self.t2_ratio)),
                ("pulse_frequency", Value::from(self.pulse_frequency)),
            ],
        );
        section(
            "gain_map",
            vec![
                ("t2_range_factor", Value::from(self.t2_range_factor)),
                ("t2_points", Value::from(self.t2_points as i64)),
            ],
        );
        section(
            "readout",
            vec![(
                "measure_angle",
                match self.measure_angle {
                    None => Value::from("optimal"),
                    Some(m) => Value::from(m),
                },
            )],
        );
        section(
            "detection",
            vec![
                ("strength", Value::from(self.noise_strength)),
                ("step", Value::from(self.noise_step)),
                (
                    "normalization",
                    Value::from(match self.normalization {
                        Normalization::Unnormalized => "unnormalized",
                        Normalization::Normalized => "normalized",
                    }),
                ),
            ],
        );
        section(
            "pulse_noise",
            vec![
                ("trials", Value::from(self.trials as i64)),
                ("area_rel_sd", Value::from(self.area_rel_sd)),
                ("separation_rel_sd", Value::from(self.separation_rel_sd)),
                ("phase_sd", Value::from(self.phase_sd)),
                (
                    "correlation",
                    Value::from(match self.correlation {
                        NoiseCorrelation::PerPulse => "per-pulse",
                        NoiseCorrelation::PerTrial => "per-trial",
                    }),
                ),
            ],
        );
        section(
            "ops_check",
            vec![("n_atoms", Value::Array(self.ops_atoms.iter().map(|&n| n as i64).collect()))],
        );
        let mut run = vec![
            ("out", Value::from(self.out.to_string_lossy().as_ref())),
            ("formats", Value::Array(self.formats.names().into_iter().collect())),
        ];
        if let Some(w) = self.workers {
            run.insert(0, ("workers", Value::from(w as i64)));
        }
        section("run", run);
        doc.to_string()
    }
}

fn check_gamma(f: &mut Fields, key: &str, g: f64) -> bool {
    if (0.0..=0.5).contains(&g) {
        true
    } else {
        f.diag(key, format!("gamma = {g} outside 0 <= gamma <= 0.5"));
        false
    }
}
