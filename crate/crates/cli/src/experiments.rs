use std::sync::Arc;

use echolab_core::search::linspace;
use echolab_core::{
    compile, first_order_terms, gain_trajectory, max_qfi, metrological_gain, optimize_t1, optimize_t2,
    optimize_theta_p, optimize_theta_r, qfi_axis, relative_robustness, robustness_r, run_echo,
    squeezed_axis, Axis, CMatrix, DirectionSearch, EchoProtocol, GainTrajectory, LmgParams,
    LmgSystem, PulseNoiseSpec, Reversal, ReversalSearch, RobustnessOptions, SpinOperators,
    SqueezeSearchOptions,
};
use num_complex::Complex64;
use serde_json::{json, Value as Json};

use crate::config::{Config, Experiment, ReversalMode, T1Policy, ThetaPolicy};
use crate::output::{Cell, Row, Table};
use crate::parallel::block_map;
use crate::svg::{self, Series};

type Fallible<T> = std::result::Result<T, String>;

pub struct Outcome {
    pub table: Table,
    pub summary: Json,
    pub svg: Option<String>,
    /// Set by `ops-check` when an invariant fails.
    pub check_failed: bool,
}

struct Setup<'a> {
    cfg: &'a Config,
    ops: Arc<SpinOperators>,
}

impl<'a> Setup<'a> {
    fn new(cfg: &'a Config) -> Fallible<Self> {
        let ops = SpinOperators::new(cfg.n_atoms).map_err(|e| e.to_string())?;
        Ok(Setup { cfg, ops: Arc::new(ops) })
    }

    fn system(&self, gamma: f64) -> Fallible<LmgSystem> {
        let params = LmgParams::new(self.cfg.chi, gamma).map_err(|e| e.to_string())?;
        LmgSystem::with_operators(self.ops.clone(), params).map_err(|e| e.to_string())
    }

    fn squeeze_options(&self) -> SqueezeSearchOptions {
        SqueezeSearchOptions {
            window_factor: self.cfg.window,
            grid_points: self.cfg.t1_points,
            search: if self.cfg.qfi_search_sphere { DirectionSearch::Sphere } else { DirectionSearch::PlaneAndY },
        }
    }

    fn t1(&self, sys: &LmgSystem) -> Fallible<f64> {
        match self.cfg.t1 {
            T1Policy::Explicit(t) => Ok(t),
            T1Policy::Optimal => optimize_t1(sys, &self.squeeze_options()).map(|r| r.t1).map_err(|e| e.to_string()),
        }
    }

    fn theta(&self, sys: &LmgSystem, t1: f64) -> Fallible<f64> {
        match self.cfg.theta {
            ThetaPolicy::ThetaR => optimize_theta_r(sys, t1).map_err(|e| e.to_string()),
            ThetaPolicy::ThetaP => optimize_theta_p(sys, t1).map_err(|e| e.to_string()),
            ThetaPolicy::Explicit(x) => Ok(x),
        }
    }

    fn protocol(&self, sys: &LmgSystem, t1: f64, theta: f64) -> Fallible<EchoProtocol> {
        let t2 = self.cfg.t2_ratio * t1;
        let reversal = match self.cfg.reversal {
            ReversalMode::Ideal => Reversal::Ideal { t2 },
            ReversalMode::None => Reversal::None,
            ReversalMode::Floquet => {
                let p = sys.params();
                let seq = compile(p.gamma, p.chi, t2, self.cfg.pulse_frequency).map_err(|e| e.to_string())?;
                Reversal::Floquet(Arc::new(seq))
            }
        };
        let mut protocol = EchoProtocol::for_system(sys, t1, theta).with_reversal(reversal);
        if let Some(m) = self.cfg.measure_angle {
            protocol = protocol.with_measure_angle(m);
        }
        Ok(protocol)
    }
}

pub fn run(experiment: Experiment, cfg: &Config, workers: usize) -> Fallible<Outcome> {
    let setup = Setup::new(cfg)?;
    match experiment {
        Experiment::SweepQfi => Ok(sweep_qfi(&setup, workers)),
        Experiment::SweepTheta => Ok(sweep_theta(&setup, workers)),
        Experiment::GainMap => Ok(gain_map(&setup, workers)),
        Experiment::NoiseRobustness => Ok(noise_robustness(&setup, workers)),
        Experiment::FloquetMc => floquet_mc(&setup, workers),
        Experiment::EchoRun => Ok(echo_run(&setup)),
        Experiment::OpsCheck => Ok(ops_check(cfg, workers)),
    }
}

fn row(result: Fallible<Vec<Cell>>, key: Vec<Cell>) -> Row {
    match result {
        Ok(cells) => Row::Ok(cells),
        Err(error) => Row::Failed { key, error },
    }
}

fn nondecreasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[1] >= w[0] * (1.0 - 1e-9))
}

fn argmax(xs: &[f64], ys: &[f64]) -> Option<f64> {
    ys.iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| xs[i])
}

fn sweep_qfi(s: &Setup, workers: usize) -> Outcome {
    let mut table = Table::new(vec![
        ("gamma", "1"),
        ("t1", "1/chi"),
        ("qfi_max", "1"),
        ("best_squeezing_time", "1/chi"),
        ("qfi_per_atom", "1"),
    ]);
    let n = s.cfg.n_atoms as f64;
    table.rows = block_map(&s.cfg.gamma_grid, workers, |&g| {
        let r = s.system(g).and_then(|sys| optimize_t1(&sys, &s.squeeze_options()).map_err(|e| e.to_string()));
        row(
            r.map(|r| vec![g.into(), r.t1.into(), r.qfi_max.into(), r.best_squeezing_time.into(), (r.qfi_max / n).into()]),
            vec![g.into()],
        )
    });
    let gamma = table.values("gamma");
    let qfi = table.values("qfi_max");
    let t1 = table.values("t1");
    let t1_rev: Vec<f64> = t1.iter().map(|t| -t).collect();
    let summary = json!({
        "qfi_peak_gamma": argmax(&gamma, &qfi),
        "qfi_nondecreasing": nondecreasing(&qfi),
        "t1_nonincreasing": t1_rev.windows(2).all(|w| w[1] >= w[0] - 1e-9 * w[0].abs()),
        "t1_min_gamma": argmax(&gamma, &t1_rev),
    });
    let svg = svg::line_plot(
        "maximal QFI at the optimal squeezing time",
        "gamma",
        "F_max / N",
        &[Series { label: "F_max / N".into(), points: gamma.iter().copied().zip(qfi.iter().map(|q| q / n)).collect() }],
    );
    Outcome { table, summary, svg: Some(svg), check_failed: false }
}

fn sweep_theta(s: &Setup, workers: usize) -> Outcome {
    let mut table = Table::new(vec![
        ("gamma", "1"),
        ("t1", "1/chi"),
        ("theta_r", "rad"),
        ("theta_p", "rad"),
        ("theta_squeezed", "rad"),
        ("theta_qfi", "rad"),
        ("arcsin_sqrt_gamma", "rad"),
    ]);
    table.rows = block_map(&s.cfg.gamma_grid, workers, |&g| {
        let r = (|| {
            let sys = s.system(g)?;
            let t1 = s.t1(&sys)?;
            let e = |r: echolab_core::Result<f64>| r.map_err(|e| e.to_string());
            Ok(vec![
                g.into(),
                t1.into(),
                e(optimize_theta_r(&sys, t1))?.into(),
                e(optimize_theta_p(&sys, t1))?.into(),
                e(squeezed_axis(&sys, t1))?.into(),
                e(qfi_axis(&sys, t1))?.into(),
                g.sqrt().asin().into(),
            ])
        })();
        row(r, vec![g.into()])
    });
    let gamma = table.values("gamma");
    let tr = table.values("theta_r");
    let tp = table.values("theta_p");
    let summary = json!({
        "theta_table": gamma.iter().zip(tr.iter().zip(&tp))
            .map(|(g, (r, p))| json!({ "gamma": g, "theta_r": r, "theta_p": p }))
            .collect::<Vec<_>>(),
    });
    let svg = svg::line_plot(
        "optimal encoding axes",
        "gamma",
        "angle (rad)",
        &[
            Series { label: "theta_r".into(), points: gamma.iter().copied().zip(tr.iter().copied()).collect() },
            Series { label: "theta_p".into(), points: gamma.iter().copied().zip(tp.iter().copied()).collect() },
            Series {
                label: "arcsin sqrt(gamma)".into(),
                points: gamma.iter().map(|&g| (g, g.sqrt().asin())).collect(),
            },
        ],
    );
    Outcome { table, summary, svg: Some(svg), check_failed: false }
}

struct GainColumn {
    gamma: f64,
    t1: f64,
    theta: f64,
    rows: Vec<Row>,
    best: Option<(f64, f64)>,
}

fn gain_map(s: &Setup, workers: usize) -> Outcome {
    let mut table = Table::new(vec![
        ("gamma", "1"),
        ("t1", "1/chi"),
        ("theta", "rad"),
        ("t2", "1/chi"),
        ("t2_over_t1", "1"),
        ("gain", "dB"),
        ("magnification", "1"),
        ("measure_angle", "rad"),
    ]);
    let columns = block_map(&s.cfg.gamma_grid, workers, |&g| -> Fallible<GainColumn> {
        let sys = s.system(g)?;
        let t1 = s.t1(&sys)?;
        let theta = s.theta(&sys, t1)?;
        let grid = linspace(0.0, s.cfg.t2_range_factor * t1, s.cfg.t2_points);
        let mut rows = Vec::with_capacity(grid.len());
        for t2 in grid {
            let mut p = EchoProtocol::for_system(&sys, t1, theta).with_reversal(Reversal::Ideal { t2 });
            if let Some(m) = s.cfg.measure_angle {
                p = p.with_measure_angle(m);
            }
            let key = vec![g.into(), t1.into(), theta.into(), t2.into(), (t2 / t1).into()];
            rows.push(row(
                metrological_gain(&sys, &p).map_err(|e| e.to_string()).map(|r| {
                    let mut c = key.clone();
                    c.extend([r.delta_g_db.into(), r.magnification.into(), r.measure_angle.into()]);
                    c
                }),
                key,
            ));
        }
        let best = match s.cfg.measure_angle {
            None => optimize_t2(
                &sys,
                t1,
                theta,
                &ReversalSearch { range_factor: s.cfg.t2_range_factor, grid_points: s.cfg.t2_points },
            )
            .ok()
            .map(|o| (o.t2, o.gain_db)),
            Some(_) => None,
        };
        Ok(GainColumn { gamma: g, t1, theta, rows, best })
    });
    let mut optima = Vec::new();
    let mut heat = Vec::new();
    for (c, &g) in columns.into_iter().zip(&s.cfg.gamma_grid) {
        match c {
            Err(error) => table.rows.push(Row::Failed { key: vec![g.into()], error }),
            Ok(mut col) => {
                let values: Vec<f64> = col
                    .rows
                    .iter()
                    .map(|r| match r {
                        Row::Ok(cells) => cells[5].as_f64().unwrap_or(f64::NAN),
                        Row::Failed { .. } => f64::NAN,
                    })
                    .collect();
                let ratios: Vec<f64> = linspace(0.0, s.cfg.t2_range_factor, s.cfg.t2_points);
                let (t2, gain) = col.best.unwrap_or_else(|| {
                    let i = (0..values.len()).max_by(|&a, &b| values[a].total_cmp(&values[b])).unwrap_or(0);
                    (ratios[i] * col.t1, values[i])
                });
                optima.push(json!({
                    "gamma": col.gamma, "t1": col.t1, "theta": col.theta,
                    "t2_opt": t2, "t2_opt_over_t1": t2 / col.t1, "gain_db": gain,
                }));
                heat.push(values);
                table.rows.append(&mut col.rows);
            }
        }
    }
    let ys = linspace(0.0, s.cfg.t2_range_factor, s.cfg.t2_points);
    let xs: Vec<f64> = optima.iter().filter_map(|o| o["gamma"].as_f64()).collect();
    let svg = svg::heatmap("gain (dB) over anisotropy and reversal time", "gamma", "t2 / t1", &xs, &ys, &heat);
    Outcome { table, summary: json!({ "optimal_t2": optima }), svg: Some(svg), check_failed: false }
}

fn noise_robustness(s: &Setup, workers: usize) -> Outcome {
    let mut table = Table::new(vec![
        ("gamma", "1"),
        ("t1", "1/chi"),
        ("theta_r", "rad"),
        ("theta_p", "rad"),
        ("r_theta_r", "1"),
        ("r_theta_p", "1"),
        ("r_rel_theta_r", "1"),
        ("r_rel_theta_p", "1"),
        ("slope_fd_theta_p", "rad"),
        ("slope_signal_only_theta_p", "rad"),
        ("slope_first_order_theta_p", "rad"),
    ]);
    let opts = RobustnessOptions {
        strength: s.cfg.noise_strength,
        step: s.cfg.noise_step,
        normalization: s.cfg.normalization,
    };
    table.rows = block_map(&s.cfg.gamma_grid, workers, |&g| {
        let r = (|| {
            let e = |e: echolab_core::Error| e.to_string();
            let sys = s.system(g)?;
            let t1 = s.t1(&sys)?;
            let tr = optimize_theta_r(&sys, t1).map_err(e)?;
            let tp = optimize_theta_p(&sys, t1).map_err(e)?;
            let pr = s.protocol(&sys, t1, tr)?;
            let pp = s.protocol(&sys, t1, tp)?;
            let rr = robustness_r(&sys, &pr, &opts).map_err(e)?;
            let rp = robustness_r(&sys, &pp, &opts).map_err(e)?;
            let terms = first_order_terms(&sys, &pp).map_err(e)?;
            Ok(vec![
                g.into(),
                t1.into(),
                tr.into(),
                tp.into(),
                rr.r.into(),
                rp.r.into(),
                relative_robustness(&sys, &pr, &opts).map_err(e)?.into(),
                relative_robustness(&sys, &pp, &opts).map_err(e)?.into(),
                rp.slope.into(),
                terms.signal_only_slope().into(),
                terms.full_slope().into(),
            ])
        })();
        row(r, vec![g.into()])
    });
    let gamma = table.values("gamma");
    let series = |name: &str| Series {
        label: name.to_owned(),
        points: gamma.iter().copied().zip(table.values(name)).collect(),
    };
    let rel_p = table.values("r_rel_theta_p");
    let summary = json!({
        "noise_strength": s.cfg.noise_strength,
        "r_rel_theta_p_min": rel_p.iter().copied().reduce(f64::min),
        "r_rel_theta_p_max": rel_p.iter().copied().reduce(f64::max),
    });
    let svg = svg::line_plot(
        "robustness to detection noise",
        "gamma",
        "R",
        &[series("r_theta_r"), series("r_theta_p"), series("r_rel_theta_r"), series("r_rel_theta_p")],
    );
    Outcome { table, summary, svg: Some(svg), check_failed: false }
}

fn trajectory_rows(label: &str, t: &GainTrajectory) -> Vec<Row> {
    (0..t.magnification.len())
        .map(|k| {
            Row::Ok(vec![
                label.into(),
                k.into(),
                t.elapsed[k].into(),
                t.reversal_time[k].into(),
                t.magnification[k].into(),
            ])
        })
        .collect()
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn floquet_mc(s: &Setup, workers: usize) -> Fallible<Outcome> {
    let sys = s.system(s.cfg.gamma)?;
    let t1 = s.t1(&sys)?;
    let theta = s.theta(&sys, t1)?;
    let p = sys.params();
    let seq = compile(p.gamma, p.chi, s.cfg.t2_ratio * t1, s.cfg.pulse_frequency).map_err(|e| e.to_string())?;
    let n_periods = seq.n_periods;
    let protocol = EchoProtocol::for_system(&sys, t1, theta).with_reversal(Reversal::Floquet(Arc::new(seq)));
    let spec = PulseNoiseSpec {
        area_rel_sd: s.cfg.area_rel_sd,
        separation_rel_sd: s.cfg.separation_rel_sd,
        phase_sd: s.cfg.phase_sd,
        seed: s.cfg.seed.unwrap_or(0),
        correlation: s.cfg.correlation,
    };
    if !s.cfg.pulse_noise_enabled() {
        log::info!("no pulse noise configured; every trial repeats the noiseless sequence");
    }
    let reference = gain_trajectory(&sys, &protocol, None, 0).map_err(|e| e.to_string())?;
    let trials: Vec<u64> = (0..s.cfg.trials as u64).collect();
    let runs = block_map(&trials, workers, |&i| gain_trajectory(&sys, &protocol, Some(&spec), i));

    let mut table = Table::new(vec![
        ("trial", "label"),
        ("period", "count"),
        ("elapsed", "1/chi"),
        ("reversal_time", "1/chi"),
        ("magnification", "1"),
    ]);
    table.rows = trajectory_rows("noiseless", &reference);
    let mut finals = Vec::new();
    let mut series = vec![Series {
        label: "noiseless".into(),
        points: reference.elapsed.iter().copied().zip(reference.magnification.iter().copied()).collect(),
    }];
    for (i, r) in trials.iter().zip(runs) {
        match r {
            Ok(t) => {
                finals.push(t.final_magnification());
                table.rows.extend(trajectory_rows(&i.to_string(), &t));
                series.push(Series {
                    label: format!("trial {i}"),
                    points: t.elapsed.iter().copied().zip(t.magnification.iter().copied()).collect(),
                });
            }
            Err(e) => table.rows.push(Row::Failed { key: vec![i.to_string().as_str().into()], error: e.to_string() }),
        }
    }
    let g0 = reference.final_magnification();
    let med = (!finals.is_empty()).then(|| median(finals.clone()));
    let summary = json!({
        "gamma": s.cfg.gamma,
        "t1": t1,
        "theta": theta,
        "pulse_frequency": s.cfg.pulse_frequency,
        "n_periods": n_periods,
        "seed": spec.seed,
        "trials": s.cfg.trials,
        "noiseless_final_magnification": g0,
        "median_final_magnification": med,
        "median_relative_deviation": med.map(|m| (m - g0).abs() / g0.abs()),
        "min_final_magnification": finals.iter().copied().reduce(f64::min),
        "max_final_magnification": finals.iter().copied().reduce(f64::max),
    });
    // the noiseless curve goes last so it is drawn on top
    series.rotate_left(1);
    let svg = svg::line_plot("magnification during the pulsed reversal", "elapsed time (1/chi)", "G", &series);
    Ok(Outcome { table, summary, svg: Some(svg), check_failed: false })
}

fn echo_run(s: &Setup) -> Outcome {
    let mut table = Table::new(vec![
        ("gamma", "1"),
        ("t1", "1/chi"),
        ("theta", "rad"),
        ("t2", "1/chi"),
        ("measure_angle", "rad"),
        ("delta_phi", "rad"),
        ("gain", "dB"),
        ("magnification", "1"),
        ("qfi_per_atom", "1"),
        ("echo_fidelity", "1"),
    ]);
    let g = s.cfg.gamma;
    let result = (|| {
        let e = |e: echolab_core::Error| e.to_string();
        let sys = s.system(g)?;
        let t1 = s.t1(&sys)?;
        let theta = s.theta(&sys, t1)?;
        let p = s.protocol(&sys, t1, theta)?;
        let report = metrological_gain(&sys, &p).map_err(e)?;
        let squeezed = sys.squeezed(t1).map_err(e)?;
        let qfi = max_qfi(&squeezed, sys.ops(), DirectionSearch::PlaneAndY).map_err(e)?.qfi;
        let fidelity = run_echo(&sys, &p).map_err(e)?.fidelity(sys.probe());
        let t2 = if s.cfg.reversal == ReversalMode::None { 0.0 } else { s.cfg.t2_ratio * t1 };
        Ok(vec![
            g.into(),
            t1.into(),
            theta.into(),
            t2.into(),
            report.measure_angle.into(),
            report.delta_phi.into(),
            report.delta_g_db.into(),
            report.magnification.into(),
            (qfi / s.cfg.n_atoms as f64).into(),
            fidelity.into(),
        ])
    })();
    table.rows.push(row(result, vec![g.into()]));
    let summary = match &table.rows[0] {
        Row::Ok(cells) => Json::Object(
            table
                .columns
                .iter()
                .zip(cells)
                .map(|((name, _), c)| (name.to_string(), json!(c.as_f64())))
                .collect(),
        ),
        Row::Failed { error, .. } => json!({ "error": error }),
    };
    Outcome { table, summary, svg: None, check_failed: false }
}

fn max_abs(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// `(check, max error)` for the algebraic identities at one atom number.
fn invariant_errors(n: usize) -> Fallible<Vec<(&'static str, f64)>> {
    let ops = SpinOperators::new(n).map_err(|e| e.to_string())?;
    let (sx, sy, sz) = (ops.sx(), ops.sy(), ops.sz());
    let i = Complex64::new(0.0, 1.0);
    let comm = |a: &CMatrix, b: &CMatrix| a * b - b * a;
    let s = ops.total_spin();
    let dim = ops.dim();
    let id = CMatrix::identity(dim, dim);
    let casimir = ops.squared(Axis::X) + ops.squared(Axis::Y) + ops.squared(Axis::Z);
    let sys = LmgSystem::new(n, LmgParams::new(1.0, 0.3).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
    let h = sys.hamiltonian().matrix();
    let u = sys.hamiltonian().unitary(0.37);
    let band = (0..dim)
        .flat_map(|r| (0..dim).map(move |c| (r, c)))
        .filter(|&(r, c)| r.abs_diff(c) != 0 && r.abs_diff(c) != 2)
        .map(|(r, c)| h[(r, c)].norm())
        .fold(0.0, f64::max);
    Ok(vec![
        (
            "commutators",
            max_abs(&(comm(sx, sy) - sz * i))
                .max(max_abs(&(comm(sy, sz) - sx * i)))
                .max(max_abs(&(comm(sz, sx) - sy * i))),
        ),
        (
            "casimir",
            max_abs(&(&casimir - &id * Complex64::from(s * (s + 1.0)))).max(max_abs(&(ops.s_squared() - &casimir))),
        ),
        (
            "hermiticity",
            [sx, sy, sz, h].iter().map(|m| max_abs(&(*m - m.adjoint()))).fold(0.0, f64::max),
        ),
        ("unitarity", max_abs(&(u.adjoint() * &u - &id))),
        ("parity_band", band),
    ])
}

fn ops_check(cfg: &Config, workers: usize) -> Outcome {
    let mut table = Table::new(vec![
        ("n_atoms", "count"),
        ("check", "label"),
        ("max_error", "1"),
        ("tolerance", "1"),
        ("pass", "bool"),
    ]);
    let results = block_map(&cfg.ops_atoms, workers, |&n| (n, invariant_errors(n)));
    let mut failed = false;
    for (n, r) in results {
        let s = n as f64 / 2.0;
        // roundoff grows with the size of the matrix entries
        let tol = 1e-10f64.max(1e-14 * s * (s + 1.0));
        match r {
            Ok(checks) => {
                for (name, err) in checks {
                    let pass = err <= tol;
                    failed |= !pass;
                    table.rows.push(Row::Ok(vec![n.into(), name.into(), err.into(), tol.into(), pass.into()]));
                }
            }
            Err(error) => {
                failed = true;
                table.rows.push(Row::Failed { key: vec![n.into()], error });
            }
        }
    }
    let summary = json!({ "all_passed": !failed, "n_atoms": cfg.ops_atoms });
    Outcome { table, summary, svg: None, check_failed: failed }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> Config {
        Config {
            n_atoms: 12,
            gamma_grid: vec![0.1, 0.3, 0.5],
            t2_points: 20,
            trials: 3,
            ..Config::default()
        }
    }

    #[test]
    fn sweeps_fill_every_point() {
        let cfg = small();
        for e in [Experiment::SweepQfi, Experiment::SweepTheta, Experiment::NoiseRobustness] {
            let out = run(e, &cfg, 2).unwrap();
            assert_eq!(out.table.rows.len(), 3, "{e}");
            assert_eq!(out.table.failures(), 0, "{e}");
        }
        let map = run(Experiment::GainMap, &cfg, 2).unwrap();
        assert_eq!(map.table.rows.len(), 3 * 20);
        assert_eq!(map.summary["optimal_t2"].as_array().unwrap().len(), 3);
    }

    #[test]
    fn worker_count_does_not_change_results() {
        let cfg = Config { seed: Some(5), area_rel_sd: 0.01, phase_sd: 0.01, ..small() };
        let one = run(Experiment::FloquetMc, &cfg, 1).unwrap().table.to_csv(&[]);
        let three = run(Experiment::FloquetMc, &cfg, 3).unwrap().table.to_csv(&[]);
        assert_eq!(one, three);
        let a = run(Experiment::SweepTheta, &cfg, 1).unwrap().table.to_csv(&[]);
        let b = run(Experiment::SweepTheta, &cfg, 3).unwrap().table.to_csv(&[]);
        assert_eq!(a, b);
    }

    #[test]
    fn failing_point_becomes_error_row() {
        let cfg = Config { theta: ThetaPolicy::Explicit(0.0), ..small() };
        // theta = 0 encodes along z; with the optimal readout the run still succeeds
        let ok = run(Experiment::EchoRun, &cfg, 1).unwrap();
        assert_eq!(ok.table.failures(), 0);
        let bad = Config { t1: T1Policy::Explicit(-1.0), ..small() };
        let out = run(Experiment::SweepTheta, &bad, 1).unwrap();
        assert_eq!(out.table.failures(), 3);
    }

    #[test]
    fn ops_check_passes() {
        let cfg = Config { ops_atoms: vec![1, 2, 7], ..Config::default() };
        let out = run(Experiment::OpsCheck, &cfg, 2).unwrap();
        assert!(!out.check_failed);
        assert_eq!(out.table.rows.len(), 3 * 5);
    }

}
