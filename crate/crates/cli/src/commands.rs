use std::time::{Instant, SystemTime};

use rayon::prelude::*;
use serde_json::{json, Value};
use wavebreak_core::criteria::{self, estimate_cgn, CgnConfig, CriterionReport};
use wavebreak_core::diagnostics::{self, log_grid, CheckResult, VerificationReport};
use wavebreak_core::evolution::{self, InitialData, SimConfig, StopReason};
use wavebreak_core::operators::{a2_params, bessel_kernel, whitham_kernel, A2Table, FwCase};
use wavebreak_core::special::gamma_fn;
use wavebreak_core::spectral::{Field, GridSpec};
use wavebreak_core::tolerances as tol;

use crate::config::{CaseName, Config, ModelConfig, ModelName};
use crate::output::{num, opt_bool, OutDir};
use crate::{Cli, CliError, Command, Outcome};

pub fn dispatch(cli: &Cli) -> Result<Outcome, CliError> {
    let started = SystemTime::now();
    let clock = Instant::now();
    let (config, text) = match &cli.config {
        Some(path) => Config::load(path)?,
        None if matches!(cli.command, Command::Kernels | Command::Verify) => (Config::default(), String::new()),
        None => return Err(CliError::Usage(format!("`{}` needs --config PATH", cli.command.name()))),
    };
    let echo = config_echo(&text)?;
    let mut out = OutDir::create(&cli.out)?;
    // Only sweeps fan out; everything else runs on one thread.
    let workers = match cli.command {
        Command::Sweep => cli.workers.or(config.workers).unwrap_or(0),
        _ => 1,
    };
    if cli.workers == Some(0) || config.workers == Some(0) {
        return Err(CliError::Usage("workers must be at least 1".into()));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| CliError::Usage(format!("cannot start worker pool: {e}")))?;
    let outcome = pool.install(|| match cli.command {
        Command::Criteria => criteria_cmd(&config, cli, &mut out),
        Command::Simulate => simulate_cmd(&config, cli, &mut out),
        Command::Sweep => sweep_cmd(&config, cli, &mut out),
        Command::Kernels => kernels_cmd(&config, &mut out),
        Command::Verify => verify_cmd(&config, cli, &mut out),
    })?;
    out.manifest(cli.command.name(), echo, started, clock.elapsed())?;
    Ok(outcome)
}

fn config_echo(text: &str) -> Result<Value, CliError> {
    let table: toml::Table = toml::from_str(text).map_err(|e| CliError::Usage(e.to_string()))?;
    Ok(serde_json::to_value(table)?)
}

/// Whether the model's criterion involves `C_GN`.
fn needs_cgn(model: &ModelConfig) -> bool {
    match model.kind {
        ModelName::Burgers | ModelName::Tabulated => false,
        ModelName::FractionalKdv | ModelName::Whitham => true,
        ModelName::FornbergWhitham => !(model.case == Some(CaseName::Iv) || model.s.is_some_and(|s| s > 1.0)),
    }
}

/// `C_GN` from the config, or estimated (seeded by `--seed` when given).
fn resolve_cgn(config: &Config, cli: &Cli, model: &ModelConfig) -> Result<Option<(f64, String)>, CliError> {
    if !needs_cgn(model) {
        return Ok(None);
    }
    if let Some(c) = config.criterion.c_gn {
        return Ok(Some((c, "config".into())));
    }
    let mut cfg: CgnConfig = config.cgn.unwrap_or_default();
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    let est = estimate_cgn(&cfg)?;
    if let Some(w) = &est.warning {
        eprintln!("warning: {w}");
    }
    Ok(Some((est.value, format!("estimated: {}", est.maximizer))))
}

fn evaluate(model: &ModelConfig, u: &Field, theta: f64, c_gn: Option<f64>) -> Result<CriterionReport, CliError> {
    let c = || c_gn.ok_or_else(|| CliError::Usage("C_GN is required for this model".into()));
    let report = match model.kind {
        ModelName::Burgers => criteria::l1_criterion(u, theta, 0.0)?,
        ModelName::Tabulated => match a2_params(&model.spec()?)? {
            A2Table::Bounded { lambda1 } => criteria::l1_criterion(u, theta, lambda1)?,
            A2Table::Interpolation(_) => unreachable!("tabulated kernels use the bounded form"),
        },
        ModelName::FractionalKdv => {
            let alpha = model
                .alpha
                .ok_or_else(|| CliError::Usage("fractional-kdv needs `alpha`".into()))?;
            criteria::fkdv_criterion(u, theta, alpha, c()?)?
        }
        ModelName::Whitham => criteria::whitham_criterion(u, theta, c()?)?,
        ModelName::FornbergWhitham => {
            let s = model
                .s
                .ok_or_else(|| CliError::Usage("fornberg-whitham needs `s`".into()))?;
            match model.fw_case()? {
                Some(FwCase::IV) => criteria::fw_criterion_case(u, theta, s, FwCase::IV, 1.0)?,
                Some(case) => criteria::fw_criterion_case(u, theta, s, case, c()?)?,
                None if s > 1.0 => criteria::fw_criterion(u, theta, s, None, 1.0)?,
                None => criteria::fw_criterion(u, theta, s, model.tau, c()?)?,
            }
        }
    };
    Ok(report)
}

fn report_json(report: &CriterionReport, model: &str, cgn_source: Option<&str>) -> Result<Value, CliError> {
    let mut v = serde_json::to_value(report)?;
    if let Value::Object(map) = &mut v {
        map.insert("model".into(), json!(model));
        map.insert("c_gn_source".into(), json!(cgn_source));
        map.insert("cases".into(), serde_json::to_value(&report.candidates)?);
    }
    Ok(v)
}

fn criteria_cmd(config: &Config, cli: &Cli, out: &mut OutDir) -> Result<Outcome, CliError> {
    let model = config.model()?;
    let spec = model.spec()?;
    let grid = config.grid.spec()?;
    let u = config.initial()?.sample(grid)?;
    let cgn = resolve_cgn(config, cli, model)?;
    let report = evaluate(model, &u, config.criterion.theta, cgn.as_ref().map(|c| c.0))?;
    let value = report_json(&report, &spec.label(), cgn.as_ref().map(|c| c.1.as_str()))?;
    println!("{}", serde_json::to_string_pretty(&value)?);
    out.json("criteria.json", &value)?;
    Ok(Outcome::Pass)
}

fn sim_config(config: &Config) -> Result<SimConfig, CliError> {
    let model = config.model()?.spec()?;
    let grid = config.grid.spec()?;
    let cfg = config.simulation.build(model, grid, config.initial()?.clone());
    cfg.validate()?;
    Ok(cfg)
}

struct SimOutcome {
    estimate: evolution::BreakingEstimate,
    trace: evolution::SimulationTrace,
    criterion: Option<CriterionReport>,
    criterion_error: Option<String>,
    check: Option<CheckResult>,
}

fn simulate_one(cfg: &SimConfig, model: &ModelConfig, theta: f64, c_gn: Option<f64>) -> Result<SimOutcome, CliError> {
    let (trace, estimate) = evolution::run(cfg)?;
    let u = cfg.initial.sample(cfg.grid)?;
    let (criterion, criterion_error) = match evaluate(model, &u, theta, c_gn) {
        Ok(r) => (Some(r), None),
        Err(e) => (None, Some(e.to_string())),
    };
    let check = match (&criterion, estimate.stop_reason) {
        (_, StopReason::MaxTime) => None,
        (Some(c), _) => Some(diagnostics::reconcile(c, &estimate)),
        (None, _) => None,
    };
    Ok(SimOutcome {
        estimate,
        trace,
        criterion,
        criterion_error,
        check,
    })
}

fn simulate_cmd(config: &Config, cli: &Cli, out: &mut OutDir) -> Result<Outcome, CliError> {
    let model = config.model()?;
    let cfg = sim_config(config)?;
    let cgn = resolve_cgn(config, cli, model)?;
    let theta = config.criterion.theta;
    let run = simulate_one(&cfg, model, theta, cgn.as_ref().map(|c| c.0))?;
    let est = &run.estimate;
    if !est.valid {
        eprintln!(
            "warning: breaking time estimate is inconclusive ({}){}",
            est.stop_reason.as_str(),
            est.note.as_ref().map_or(String::new(), |n| format!(": {n}"))
        );
    }
    let within = run.check.as_ref().and_then(|c| c.pass);
    let summary = json!({
        "t_star_est": est.t_star_est,
        "stop_reason": est.stop_reason,
        "fit_slope": est.fit_slope,
        "fit_quality": est.fit_quality,
        "t_lo": run.criterion.as_ref().map(|c| c.t_lo),
        "t_hi": run.criterion.as_ref().map(|c| c.t_hi),
        "within_bounds": within,
        "valid": est.valid,
        "growth": est.growth,
        "n_used": est.n_used,
        "note": est.note,
        "criterion_holds": run.criterion.as_ref().map(|c| c.holds),
        "criterion_error": run.criterion_error,
        "reconcile_note": run.check.as_ref().and_then(|c| c.note.clone()),
    });
    out.trace("trace.csv", &run.trace)?;
    out.json("estimate.json", &summary)?;
    if !config.simulation.seeds.is_empty() {
        let mut tracked = cfg.clone();
        tracked.grid = run.trace.grid;
        let trust = config.simulation.trust.unwrap_or(0.95);
        let (_, samples) = evolution::track_characteristics(&tracked, &config.simulation.seeds, trust)?;
        out.characteristics("characteristics.csv", &config.simulation.seeds, &samples)?;
    }
    println!("{}", serde_json::to_string_pretty(&summary)?);
    Ok(if within == Some(false) {
        Outcome::Fail
    } else {
        Outcome::Pass
    })
}

fn with_amplitude(initial: &InitialData, a: f64) -> Result<InitialData, CliError> {
    match initial {
        InitialData::GaussianSlope { width, .. } => Ok(InitialData::GaussianSlope {
            amplitude: a,
            width: *width,
        }),
        InitialData::Sine { .. } => Ok(InitialData::Sine { amplitude: a }),
        InitialData::Tabulated { .. } => Err(CliError::Usage(
            "amplitude sweeps need gaussian-slope or sine initial data".into(),
        )),
    }
}

fn sorted(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_by(f64::total_cmp);
    v
}

fn sweep_cmd(config: &Config, cli: &Cli, out: &mut OutDir) -> Result<Outcome, CliError> {
    let sweep = config
        .sweep
        .clone()
        .ok_or_else(|| CliError::Usage("sweep needs a [sweep] table".into()))?;
    let model = config.model()?;
    let initial = config.initial()?;
    let grid = config.grid.spec()?;
    let thetas = if sweep.thetas.is_empty() {
        vec![config.criterion.theta]
    } else {
        sorted(sweep.thetas)
    };
    let params: Vec<Option<f64>> = if sweep.parameters.is_empty() {
        vec![model.parameter()]
    } else {
        sorted(sweep.parameters).into_iter().map(Some).collect()
    };
    let amplitudes = sorted(sweep.amplitudes);
    let mut tasks = Vec::new();
    for p in &params {
        for &theta in &thetas {
            for &a in &amplitudes {
                tasks.push((*p, theta, a));
            }
        }
    }
    let cgn = if tasks.is_empty() {
        None
    } else {
        let needs = params
            .iter()
            .any(|p| needs_cgn(&p.map_or(model.clone(), |p| model.with_parameter(p))));
        if needs {
            let probe = params
                .iter()
                .flatten()
                .next()
                .map_or(model.clone(), |p| model.with_parameter(*p));
            let forced = ModelConfig { case: None, ..probe };
            resolve_cgn(config, cli, &if needs_cgn(&forced) { forced } else { model.clone() })?.map(|c| c.0)
        } else {
            None
        }
    };
    let rows: Vec<(Vec<String>, Option<bool>)> = tasks
        .par_iter()
        .map(|&(p, theta, a)| sweep_row(config, model, grid, initial, p, theta, a, sweep.simulate, cgn))
        .collect();
    let header = [
        "parameter",
        "theta",
        "amplitude",
        "lhs",
        "rhs",
        "holds",
        "case_label",
        "t_star_est",
        "stop_reason",
        "t_lo",
        "t_hi",
        "within_bounds",
        "error",
    ];
    let failed = rows.iter().any(|r| r.1 == Some(false));
    let rows: Vec<Vec<String>> = rows.into_iter().map(|r| r.0).collect();
    out.csv("sweep.csv", &header, &rows)?;
    println!("{} rows written to {}", rows.len(), out.path("sweep.csv").display());
    Ok(if failed { Outcome::Fail } else { Outcome::Pass })
}

#[allow(clippy::too_many_arguments)]
fn sweep_row(
    config: &Config,
    model: &ModelConfig,
    grid: GridSpec,
    initial: &InitialData,
    param: Option<f64>,
    theta: f64,
    amplitude: f64,
    simulate: bool,
    c_gn: Option<f64>,
) -> (Vec<String>, Option<bool>) {
    let model = param.map_or(model.clone(), |p| model.with_parameter(p));
    let mut row = vec![param.map_or(String::new(), num), num(theta), num(amplitude)];
    let blank = |row: &mut Vec<String>, from: usize, error: String| {
        row.resize(from, String::new());
        row.resize(12, String::new());
        row.push(error);
    };
    let result = (|| -> Result<(CriterionReport, Option<SimOutcome>), CliError> {
        let data = with_amplitude(initial, amplitude)?;
        let u = data.sample(grid)?;
        let report = evaluate(&model, &u, theta, c_gn)?;
        let sim = if simulate {
            let cfg = config.simulation.build(model.spec()?, grid, data);
            cfg.validate()?;
            Some(simulate_one(&cfg, &model, theta, c_gn)?)
        } else {
            None
        };
        Ok((report, sim))
    })();
    match result {
        Ok((report, sim)) => {
            row.extend([
                num(report.lhs),
                num(report.rhs),
                report.holds.to_string(),
                report.case_label.clone(),
            ]);
            let within = sim.as_ref().and_then(|s| s.check.as_ref().and_then(|c| c.pass));
            match &sim {
                Some(s) => row.extend([num(s.estimate.t_star_est), s.estimate.stop_reason.as_str().to_string()]),
                None => row.extend([String::new(), String::new()]),
            }
            row.extend([
                num(report.t_lo),
                num(report.t_hi),
                opt_bool(within).to_string(),
                String::new(),
            ]);
            (row, within)
        }
        Err(e) => {
            blank(&mut row, 3, e.to_string());
            (row, None)
        }
    }
}

fn kernels_cmd(config: &Config, out: &mut OutDir) -> Result<Outcome, CliError> {
    let k = &config.kernels;
    if !(k.x_min > 0.0 && k.x_max > k.x_min && k.points >= 2) {
        return Err(CliError::Usage(
            "kernels needs 0 < x_min < x_max and points >= 2".into(),
        ));
    }
    let xs = log_grid(k.x_min, k.x_max, k.points);
    let mut failed = false;

    let whitham: Vec<Vec<String>> = xs
        .par_iter()
        .map(|&x| -> Result<Vec<String>, CliError> {
            let v = whitham_kernel(x)?;
            let bound = 1.0 / (2.0 * std::f64::consts::PI * x).sqrt();
            Ok(vec![num(x), num(v), num(bound), num(bound - v)])
        })
        .collect::<Result<_, _>>()?;
    failed |= whitham
        .iter()
        .any(|r| r[3].parse::<f64>().unwrap_or(0.0) < -tol::KERNEL_MARGIN * r[2].parse::<f64>().unwrap_or(1.0));
    out.csv("whitham_kernel.csv", &["x", "K", "bound", "margin"], &whitham)?;

    let mut bessel = Vec::new();
    for &s in &k.orders {
        if s == 1.0 {
            eprintln!("note: s = 1 skipped in the Bessel table (gamma(s) has a pole there)");
            continue;
        }
        if !(s > 0.0) {
            return Err(CliError::Usage(format!("Bessel orders must be positive, got {s}")));
        }
        let g = gamma_fn(s)?;
        let rows: Vec<Vec<String>> = xs
            .par_iter()
            .map(|&x| -> Result<Vec<String>, CliError> {
                let v = bessel_kernel(s, x)?;
                let bound = if s > 1.0 {
                    g / 2.0
                } else {
                    g / 2f64.powf(s) * x.powf(s - 1.0)
                };
                Ok(vec![num(x), num(s), num(v), num(bound), num(bound - v)])
            })
            .collect::<Result<_, _>>()?;
        failed |= rows.iter().any(|r| {
            let (b, m): (f64, f64) = (r[3].parse().unwrap_or(1.0), r[4].parse().unwrap_or(0.0));
            m < -tol::KERNEL_MARGIN * b
        });
        bessel.extend(rows);
    }
    out.csv("bessel_kernel.csv", &["x", "s", "G_s", "bound", "margin"], &bessel)?;

    let mut ss: Vec<f64> = (1..=k.gamma_points)
        .map(|i| k.gamma_max * i as f64 / k.gamma_points as f64)
        .chain((1..=6).flat_map(|j| {
            let d = 10f64.powi(-j);
            [1.0 - d, 1.0 + d]
        }))
        .filter(|&s| s != 1.0)
        .collect();
    ss.sort_by(f64::total_cmp);
    ss.dedup();
    let gamma: Vec<Vec<String>> = ss
        .iter()
        .map(|&s| -> Result<Vec<String>, CliError> {
            let g = gamma_fn(s)?;
            Ok(vec![num(s), num(g), num((1.0 - s) * g)])
        })
        .collect::<Result<_, _>>()?;
    out.csv("gamma.csv", &["s", "gamma", "one_minus_s_gamma"], &gamma)?;
    println!(
        "wrote {} Whitham, {} Bessel, {} gamma rows to {}",
        whitham.len(),
        bessel.len(),
        gamma.len(),
        out.path("").display()
    );
    Ok(if failed { Outcome::Fail } else { Outcome::Pass })
}

fn verify_cmd(config: &Config, cli: &Cli, out: &mut OutDir) -> Result<Outcome, CliError> {
    let v = &config.verify;
    let grid = GridSpec::new(v.half_width, v.n)?;
    let seed = cli.seed.unwrap_or(v.seed);
    let mut report = VerificationReport::default();
    report.extend(diagnostics::corpus_checks(grid, v.corpus_size, seed));
    let k = &config.kernels;
    report.extend(diagnostics::kernel_bound_sweep(
        &k.orders,
        &log_grid(k.x_min, k.x_max, k.points),
    ));

    let sine = SimConfig::new(
        wavebreak_core::operators::ModelSpec::burgers(),
        GridSpec::new(std::f64::consts::PI, 1024)?,
        InitialData::Sine { amplitude: 1.0 },
    );
    let (trace, est) = evolution::run(&sine)?;
    report.push(CheckResult::upper(
        "burgers oracle |t_star - 1|",
        (est.t_star_est - 1.0).abs(),
        tol::BURGERS_ORACLE,
        0.0,
    ));
    report.push(diagnostics::l2_drift(&trace));
    report.extend(diagnostics::energy_residuals(&trace));
    report.extend(diagnostics::comparison_majorants(&trace));

    out.json("verify.json", &report)?;
    print!("{}", report.table());
    let failures = report.failures().count();
    println!(
        "{} checks, {failures} failed, {} inconclusive",
        report.checks.len(),
        report.inconclusive()
    );
    Ok(if failures > 0 { Outcome::Fail } else { Outcome::Pass })
}
