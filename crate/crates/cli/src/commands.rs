use std::io::Write;
use std::path::Path;

use hclip_core::config::Config;
use hclip_core::harness::{
    self, check_rate_grid, fit_points, write_json, write_records, ExperimentConfig, GridPoint,
    OutputFormat, TrialRecord,
};
use hclip_core::privacy::calibrate_sigma_omega;
use hclip_core::schedule::{self, classify_regime, TheoryParams};
use hclip_core::verifier;
use hclip_core::{ClipLevel, Error, PrivacyTarget, Result};
use serde::Serialize;
use serde_json::{json, Value};

use crate::{CalibrateArgs, Cli, Command, LemmaArgs, RegimeArgs, StepArgs, TheoryArgs};

pub fn exit_code(e: &Error) -> u8 {
    match e {
        Error::ExperimentFailed { .. } | Error::Diverged { .. } => 2,
        _ => 1,
    }
}

/// Config file, then `--set`, then dedicated flags.
fn load(cli: &Cli) -> Result<Config> {
    let g = &cli.global;
    let mut overrides = g.overrides.clone();
    if let Some(s) = g.seed {
        overrides.push(format!("seed={s}"));
    }
    if let Some(w) = g.workers {
        overrides.push(format!("experiment.workers={w}"));
    }
    if let Some(p) = &g.output {
        overrides.push(format!(
            "output.path={}",
            Value::String(p.display().to_string())
        ));
    }
    if let Some(f) = &g.format {
        overrides.push(format!("output.format={}", Value::String(f.clone())));
    }
    if g.no_timestamp {
        overrides.push("output.timestamp=false".into());
    }
    Config::load(g.config.as_deref(), &overrides)
}

/// Writes to stdout; a reader closing the pipe early (`| head`) is not an error.
fn stdout(text: &str) {
    let mut out = std::io::stdout().lock();
    if let Err(e) = out.write_all(text.as_bytes()).and_then(|()| out.flush()) {
        if e.kind() != std::io::ErrorKind::BrokenPipe {
            log::warn!("writing to stdout: {e}");
        }
    }
}

fn pretty(value: &Value) -> String {
    serde_json::to_string_pretty(value).expect("json value") + "\n"
}

fn emit(cli: &Cli, value: &Value, human: &str) {
    if cli.global.json {
        stdout(&pretty(value));
    } else {
        stdout(human);
    }
}

fn dry_run(cfg: &Config, resolved: Value) -> Result<()> {
    let v = json!({"seed": cfg.seed, "config": cfg.to_value(), "resolved": resolved});
    stdout(&pretty(&v));
    Ok(())
}

pub fn dispatch(cli: &Cli) -> Result<()> {
    let cfg = load(cli)?;
    match &cli.command {
        Command::Run => run(cli, &cfg),
        Command::Sweep => sweep(cli, &cfg),
        Command::Calibrate(a) => calibrate(cli, &cfg, a),
        Command::VerifyLemma(a) => verify_lemma(cli, &cfg, a),
        Command::Regimes(a) => regimes(cli, &cfg, a),
        Command::Stepsize(a) => stepsize(cli, &cfg, a),
    }
}

fn output_target(cfg: &Config) -> Result<Option<(&Path, OutputFormat)>> {
    match &cfg.output.path {
        Some(p) => Ok(Some((Path::new(p), cfg.output.format()?))),
        None => {
            cfg.output.format()?;
            Ok(None)
        }
    }
}

fn resolved_json(exp: &ExperimentConfig, k: u64, lambda: ClipLevel) -> Result<Value> {
    let point = exp.resolve_at(k, lambda)?;
    Ok(json!({
        "K": k,
        "lambda": Option::<f64>::from(lambda),
        "gamma": point.run.gamma,
        "sigma_omega": point.run.sigma_omega,
        "theory": point.theory,
        "parts": point.parts,
    }))
}

fn run(cli: &Cli, cfg: &Config) -> Result<()> {
    let exp = cfg.experiment()?;
    if cli.global.dry_run {
        return dry_run(cfg, resolved_json(&exp, exp.iterations, exp.lambda)?);
    }
    let point = exp.resolve()?;
    let records = harness::run_point(&point, exp.trials, exp.workers)?;
    let summary = harness::check_bound(&records, &point.theory, point.run.gamma)?;
    if let Some((path, format)) = output_target(cfg)? {
        write_records(
            &records,
            path,
            format,
            Some(&cfg.to_value()),
            cfg.output.timestamp,
        )?;
    }
    let mut human = format!(
        "seed: {}\nK: {}  lambda: {}  gamma: {:.6e}  sigma_omega: {:.6e}\ntrials: {} (diverged {})\n{} q{:.3}: {:.6e}\nbound: {:.6e}\npass: {}\n",
        cfg.seed,
        exp.iterations,
        exp.lambda.value(),
        point.run.gamma,
        point.run.sigma_omega,
        records.len(),
        summary.diverged,
        summary.statistic,
        summary.level,
        summary.quantile_value,
        summary.bound,
        summary.pass
    );
    if let Some(c) = summary.containment {
        human.push_str(&format!("containment: {c:.3}\n"));
    }
    emit(cli, &json!({"seed": cfg.seed, "summary": summary}), &human);
    Ok(())
}

#[derive(Serialize)]
struct SweepOut<'a> {
    seed: u64,
    k_points: &'a [GridPoint],
    fit: Option<harness::RateFit>,
    lambda_points: &'a [GridPoint],
}

fn sweep(cli: &Cli, cfg: &Config) -> Result<()> {
    let exp = cfg.experiment()?;
    if exp.k_grid.is_none() && exp.lambda_grid.is_none() {
        return Err(Error::Config {
            path: "experiment".into(),
            message: "sweep needs `k_grid` or `lambda_grid`".into(),
        });
    }
    if cli.global.dry_run {
        let mut points = Vec::new();
        for &k in exp.k_grid.iter().flatten() {
            points.push(resolved_json(&exp, k, exp.lambda)?);
        }
        for &l in exp.lambda_grid.iter().flatten() {
            points.push(resolved_json(&exp, exp.iterations, ClipLevel::new(l)?)?);
        }
        return dry_run(cfg, Value::Array(points));
    }
    let k_points = if exp.k_grid.is_some() {
        harness::sweep_k(&exp)?
    } else {
        Vec::new()
    };
    let fit = if k_points.is_empty() {
        None
    } else {
        let grid: Vec<u64> = k_points.iter().map(|p| p.iterations).collect();
        match check_rate_grid(&grid) {
            Ok(()) => Some(fit_points(&k_points)?),
            Err(e) => {
                log::warn!("no rate fit: {e}");
                None
            }
        }
    };
    let lambda_points = if exp.lambda_grid.is_some() {
        harness::sweep_lambda(&exp)?
    } else {
        Vec::new()
    };

    let out = SweepOut {
        seed: cfg.seed,
        k_points: &k_points,
        fit,
        lambda_points: &lambda_points,
    };
    if let Some((path, format)) = output_target(cfg)? {
        let records: Vec<TrialRecord> = k_points
            .iter()
            .chain(&lambda_points)
            .flat_map(|p| p.records.iter().cloned())
            .collect();
        match format {
            OutputFormat::Csv => write_records(&records, path, format, None, cfg.output.timestamp)?,
            OutputFormat::Json => write_json(
                &json!({"sweep": &out, "trials": records}),
                path,
                Some(&cfg.to_value()),
                cfg.output.timestamp,
            )?,
        }
    }

    let mut human = format!(
        "seed: {}\nK\tlambda\tgamma\tquantile\tbound\tpass\n",
        cfg.seed
    );
    for p in k_points.iter().chain(&lambda_points) {
        human.push_str(&format!(
            "{}\t{}\t{:.4e}\t{:.6e}\t{:.6e}\t{}\n",
            p.iterations,
            p.lambda.map_or("inf".to_string(), |l| l.to_string()),
            p.gamma,
            p.summary.quantile_value,
            p.summary.bound,
            p.summary.pass
        ));
    }
    if let Some(f) = &out.fit {
        human.push_str(&format!(
            "rate fit: slope {:.4} (r2 {:.3}), raw slope {:.4}, floor {:.6e}\n",
            f.slope, f.r2, f.raw_slope, f.floor
        ));
        if let Some(d) = &f.diagnostic {
            human.push_str(&format!("diagnostic: {d}\n"));
        }
    }
    emit(
        cli,
        &serde_json::to_value(&out).expect("sweep serialises"),
        &human,
    );
    Ok(())
}

fn calibrate(cli: &Cli, cfg: &Config, a: &CalibrateArgs) -> Result<()> {
    let base = cfg.privacy.as_ref();
    let missing = |field: &'static str| Error::InvalidParams {
        field,
        reason: "required (flag or `privacy` section)".into(),
    };
    let epsilon = a
        .epsilon
        .or(base.map(|p| p.epsilon))
        .ok_or_else(|| missing("epsilon"))?;
    let delta = a
        .delta
        .or(base.map(|p| p.delta))
        .ok_or_else(|| missing("delta"))?;
    let k = a.iterations.unwrap_or(cfg.run.iterations);
    let q = a.q.or(base.and_then(|p| p.q));
    let c_dp = a.c_dp.or(base.map(|p| p.c_dp)).unwrap_or(1.0);
    let lambda = match a.lambda.or(cfg.run.lambda) {
        Some(l) => ClipLevel::new(l)?,
        None => return Err(missing("lambda")),
    };
    let target = match q {
        Some(q) => PrivacyTarget::finite_sum(epsilon, delta, k, q)?,
        None => PrivacyTarget::expectation(epsilon, delta, k)?,
    }
    .with_c_dp(c_dp)?;
    if cli.global.dry_run {
        return dry_run(cfg, json!({"target": target, "lambda": lambda.value()}));
    }
    let sigma_omega = calibrate_sigma_omega(&target, lambda)?;
    emit(
        cli,
        &json!({"seed": cfg.seed, "sigma_omega": sigma_omega, "lambda": lambda.value(), "target": target}),
        &format!(
            "seed: {}\nsigma_omega: {sigma_omega}\nlambda: {}  epsilon: {epsilon}  delta: {delta}  K: {k}  c_dp: {c_dp}{}\n",
            cfg.seed,
            lambda.value(),
            q.map_or(String::new(), |q| format!("  q: {q}"))
        ),
    );
    Ok(())
}

fn verify_lemma(cli: &Cli, cfg: &Config, a: &LemmaArgs) -> Result<()> {
    let n = a.samples.unwrap_or(cfg.experiment.lemma_samples);
    let grid = verifier::default_grid(cfg.seed, n)?;
    if cli.global.dry_run {
        return dry_run(cfg, json!({"rows": grid.len(), "n_samples": n}));
    }
    let rows = verifier::sweep_lemma_with(&grid, cfg.experiment.workers)?;
    if let Some((path, format)) = output_target(cfg)? {
        match format {
            OutputFormat::Csv => verifier::write_lemma_csv(&rows, path)?,
            OutputFormat::Json => {
                write_json(&rows, path, Some(&cfg.to_value()), cfg.output.timestamp)?
            }
        }
    }
    let passed = rows.iter().filter(|r| r.pass).count();
    let mut human = format!("seed: {}\nsamples per row: {n}\n", cfg.seed);
    human.push_str("alpha\tlambda\t|x|\temp_bias\tbound_bias\temp_var\tbound_var\tpass\n");
    for r in &rows {
        human.push_str(&format!(
            "{}\t{}\t{}\t{:.4e}\t{:.4e}\t{:.4e}\t{:.4e}\t{}\n",
            r.alpha, r.lambda, r.x_norm, r.emp_bias, r.bound_bias, r.emp_var, r.bound_var, r.pass
        ));
    }
    human.push_str(&format!("passed: {passed}/{}\n", rows.len()));
    emit(
        cli,
        &json!({"seed": cfg.seed, "passed": passed, "rows": rows}),
        &human,
    );
    Ok(())
}

fn theory(cfg: &Config, a: &TheoryArgs) -> Result<TheoryParams> {
    let base = cfg.experiment()?.theory;
    let p = TheoryParams {
        smoothness: a.smoothness.unwrap_or(base.smoothness),
        radius: a.radius.unwrap_or(base.radius),
        sigma: a.sigma.unwrap_or(base.sigma),
        alpha: a.alpha.unwrap_or(base.alpha),
        iterations: a.iterations.unwrap_or(base.iterations),
        beta: a.beta.unwrap_or(base.beta),
        lambda: a.lambda.unwrap_or(base.lambda),
        sigma_omega: a.sigma_omega.unwrap_or(base.sigma_omega),
        dim: a.dim.unwrap_or(base.dim),
        convex: base.convex && !a.nonconvex,
    };
    p.validate()?;
    Ok(p)
}

fn regimes(cli: &Cli, cfg: &Config, a: &RegimeArgs) -> Result<()> {
    let p = theory(cfg, &a.theory)?;
    if cli.global.dry_run {
        return dry_run(cfg, json!({"theory": p, "eta": a.eta}));
    }
    let r = classify_regime(&p, a.eta)?;
    let mut human = format!(
        "regime {} ({:?}): {}\nzeta: {}\nrate: {}\nneighborhood: {:.6e}\noptimal lambda: {}\n",
        r.row,
        r.regime,
        r.condition,
        r.zeta,
        r.rate_label,
        r.neighborhood,
        r.optimal_lambda
            .map_or("undefined".to_string(), |l| l.to_string())
    );
    if let Some(s) = r.sub_case {
        human.push_str(&format!("sub-case: {s:?}\n"));
    }
    for n in &r.notes {
        human.push_str(&format!("note: {n}\n"));
    }
    emit(cli, &json!({"theory": p, "report": r}), &human);
    Ok(())
}

fn stepsize(cli: &Cli, cfg: &Config, a: &StepArgs) -> Result<()> {
    let p = theory(cfg, &a.theory)?;
    if cli.global.dry_run {
        return dry_run(cfg, json!({"theory": p, "reduced": a.reduced}));
    }
    let parts = if a.reduced {
        schedule::stepsize_reduced(&p)?
    } else {
        schedule::stepsize_full(&p)?
    };
    let mut human = format!("ceiling: {:.6e}\n", parts.ceiling);
    for (i, g) in parts.gammas.iter().enumerate() {
        human.push_str(&format!("gamma{}: {:.6e}\n", i + 1, g));
    }
    let binding = match parts.binding() {
        0 => "ceiling".to_string(),
        i => format!("gamma{i}"),
    };
    human.push_str(&format!(
        "gamma: {:.6e} (binding: {binding})\n",
        parts.gamma()
    ));
    emit(
        cli,
        &json!({"theory": p, "parts": parts, "gamma": parts.gamma(), "binding": binding}),
        &human,
    );
    Ok(())
}
