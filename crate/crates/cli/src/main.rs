mod config;
mod experiments;
mod output;
mod parallel;
mod svg;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};
use serde_json::json;

use config::{Config, ConfigError, Experiment};

const EXIT_CONFIG: u8 = 1;
const EXIT_NUMERIC: u8 = 2;
const EXIT_CHECK: u8 = 3;

#[derive(Parser)]
#[command(name = "echolab", version, about = "Echo interferometry sweeps with an anisotropic two-axis twisting Hamiltonian")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse and check a configuration without running anything
    Validate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long = "set", value_name = "KEY=VALUE")]
        set: Vec<String>,
    },
    /// Run one experiment
    #[command(flatten)]
    Run(RunCommand),
}

#[derive(Subcommand)]
enum RunCommand {
    /// Maximal QFI and optimal squeezing time against gamma
    SweepQfi(RunArgs),
    /// Optimal encoding axes against gamma
    SweepTheta(RunArgs),
    /// Gain over (gamma, t2) with the per-gamma optimum
    GainMap(RunArgs),
    /// Detection-noise robustness against gamma
    NoiseRobustness(RunArgs),
    /// Monte Carlo over noisy pulse sequences
    FloquetMc(RunArgs),
    /// A single echo protocol
    EchoRun(RunArgs),
    /// Algebraic checks of the spin operators
    OpsCheck(RunArgs),
}

impl RunCommand {
    fn split(self) -> (Experiment, RunArgs) {
        match self {
            RunCommand::SweepQfi(a) => (Experiment::SweepQfi, a),
            RunCommand::SweepTheta(a) => (Experiment::SweepTheta, a),
            RunCommand::GainMap(a) => (Experiment::GainMap, a),
            RunCommand::NoiseRobustness(a) => (Experiment::NoiseRobustness, a),
            RunCommand::FloquetMc(a) => (Experiment::FloquetMc, a),
            RunCommand::EchoRun(a) => (Experiment::EchoRun, a),
            RunCommand::OpsCheck(a) => (Experiment::OpsCheck, a),
        }
    }
}

#[derive(clap::Args)]
struct RunArgs {
    /// TOML configuration; defaults apply to missing keys
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override one key, e.g. `--set system.n_atoms=50`
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Output directory
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads (also `ECHOLAB_WORKERS`)
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Comma-separated subset of csv, json, svg
    #[arg(long = "format", value_delimiter = ',')]
    format: Vec<String>,
}

impl RunArgs {
    fn overrides(&self) -> Vec<String> {
        let mut o = self.set.clone();
        if let Some(out) = &self.out {
            o.push(format!("run.out={}", toml_edit::Value::from(out.to_string_lossy().as_ref())));
        }
        if let Some(w) = self.workers {
            o.push(format!("run.workers={w}"));
        }
        if let Some(s) = self.seed {
            o.push(format!("seed={s}"));
        }
        if !self.format.is_empty() {
            let list: toml_edit::Array = self.format.iter().map(|f| f.trim()).collect();
            o.push(format!("run.formats={list}"));
        }
        o
    }
}

fn report_config_error(e: &ConfigError) {
    match e {
        ConfigError::Invalid(diags) => {
            for d in diags {
                eprintln!("error: {d}");
            }
            eprintln!("{} problem(s) found", diags.len());
        }
        other => eprintln!("error: {other}"),
    }
}

fn load(path: Option<&PathBuf>, overrides: &[String]) -> Result<Config, ConfigError> {
    match path {
        Some(p) => Config::from_path(p, overrides),
        None => Config::from_text("", overrides),
    }
}

fn run(experiment: Experiment, args: RunArgs) -> ExitCode {
    let cfg = match load(args.config.as_ref(), &args.overrides()) {
        Ok(c) => c,
        Err(e) => {
            report_config_error(&e);
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    if let Some(e) = cfg.experiment.filter(|&e| e != experiment) {
        eprintln!("error: experiment: configuration is for '{e}', not '{experiment}'");
        return ExitCode::from(EXIT_CONFIG);
    }
    let cfg = Config { experiment: Some(experiment), ..cfg };
    let workers = parallel::resolve_workers(args.workers, cfg.workers);
    log::info!("running {experiment} with {workers} worker(s), N = {}", cfg.n_atoms);

    let start = Instant::now();
    let outcome = match experiments::run(experiment, &cfg, workers) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_NUMERIC);
        }
    };
    let wall = start.elapsed().as_secs_f64();

    let mut metadata = vec![
        ("experiment".to_owned(), experiment.to_string()),
        ("version".to_owned(), env!("CARGO_PKG_VERSION").to_owned()),
        ("n_atoms".to_owned(), cfg.n_atoms.to_string()),
        ("chi".to_owned(), cfg.chi.to_string()),
    ];
    if let Some(s) = cfg.seed {
        metadata.push(("seed".to_owned(), s.to_string()));
    }
    let failures = outcome.table.failures();
    let summary = json!({
        "experiment": experiment.name(),
        "version": env!("CARGO_PKG_VERSION"),
        "wall_time_s": wall,
        "workers": workers,
        "rows": outcome.table.rows.len(),
        "failed_rows": failures,
        "results": outcome.summary,
    });

    let dir = &cfg.out;
    let mut files = vec![("config.toml".to_owned(), cfg.to_toml())];
    if cfg.formats.csv {
        files.push((format!("{experiment}.csv"), outcome.table.to_csv(&metadata)));
    }
    if cfg.formats.json {
        let text = serde_json::to_string_pretty(&summary).expect("summary is plain JSON");
        files.push(("summary.json".to_owned(), text + "\n"));
    }
    if let (true, Some(svg)) = (cfg.formats.svg, outcome.svg) {
        files.push((format!("{experiment}.svg"), svg));
    }
    for (name, contents) in &files {
        if let Err(e) = output::write(dir, name, contents) {
            eprintln!("error: writing {}: {e}", dir.join(name).display());
            return ExitCode::from(EXIT_NUMERIC);
        }
    }
    log::info!("wrote {} file(s) to {} in {wall:.2} s", files.len(), dir.display());

    if outcome.check_failed {
        eprintln!("{experiment}: invariant check failed");
        ExitCode::from(EXIT_CHECK)
    } else if failures > 0 {
        eprintln!("{experiment}: {failures} point(s) failed; see the status column");
        ExitCode::from(EXIT_NUMERIC)
    } else {
        ExitCode::SUCCESS
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match Cli::parse().command {
        Command::Validate { config, set } => match Config::from_path(&config, &set) {
            Ok(_) => {
                println!("{}: ok", config.display());
                ExitCode::SUCCESS
            }
            Err(e) => {
                report_config_error(&e);
                ExitCode::from(EXIT_CONFIG)
            }
        },
        Command::Run(cmd) => {
            let (experiment, args) = cmd.split();
            run(experiment, args)
        }
    }
}
