//! Command-line front end.
//!
//! ```text
//! marp run <config.json> [--out-dir DIR] [--rate-window N]
//! marp examples [--id ID]
//! marp rates --lambda SPEC --mu SPEC [--theta T] [--eps E] [--slack S]
//!            [--reg-delta D] [--dist-a DA --dist-b DB] [--horizon N]
//! marp cq --scenario SCENARIO [--delta D] [--method exact2d|sampled]
//!         [--samples N] [--seed S] [--probe-regularity]
//! marp sweep <config.json> --param P --from A --to B --steps N --out CSV
//! ```
//!
//! Exit codes: `0` converged (or command succeeded), `2` the run ended in a
//! cycle, `3` the iteration cap was reached, `1` any error (bad flags,
//! schema violations, unknown ids).
//!
//! Schedule specs for `rates`: `const:V`, `geom:INITIAL:RATIO`,
//! `harmonic:SCALE`, `dyadic-sqrt:DELTA`, `dyadic-ratio`.
//!
//! Scenarios for `cq`: `sawtooth`; `two-lines:ANGLE` (radians, or `deg:60`,
//! or `pi/3`); `finite-sets:FILE` where FILE holds
//! `{"setA": …, "setB": …, "center": […]}`; or a path to an experiment
//! config, whose sets, start point, and (env-overridable) seed are used.
//! All outputs are byte-deterministic for identical inputs.

use std::path::{Path, PathBuf};

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};

use crate::catalog;
use crate::cones::{self, CqMethod};
use crate::config::{ExperimentConfig, SEED_ENV_VAR};
use crate::error::{Error, Result};
use crate::geometry::{sawtooth_pair, ClosedSet, Point};
use crate::rates;
use crate::schedules::Schedule;
use crate::solver::{self, RateOutcome, RunStatus};

#[derive(Parser)]
#[command(
    name = "marp",
    about = "Two-set feasibility via alternating relaxed projections",
    version
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run one experiment config; write trajectory.csv and summary.json.
    Run {
        /// Path to the experiment JSON.
        config: PathBuf,
        /// Output directory (created if missing).
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
        /// Trailing window for the empirical-rate fit in the summary.
        #[arg(long, default_value_t = 40)]
        rate_window: usize,
    },
    /// Run the worked-example catalog and print a pass/fail table.
    Examples {
        /// Run a single catalog entry (default: all).
        #[arg(long)]
        id: Option<String>,
    },
    /// Print contraction-factor certificates and guarantee radii as JSON.
    Rates {
        /// Joint angle bound θ ∈ [-1, 1].
        #[arg(long, default_value_t = 0.0)]
        theta: f64,
        /// Regularity defect ε ≥ 0 (enters the κ̂ factor).
        #[arg(long, default_value_t = 0.0)]
        eps: f64,
        /// λ schedule spec, e.g. const:0.5 or geom:0.5:0.9.
        #[arg(long)]
        lambda: String,
        /// μ schedule spec.
        #[arg(long)]
        mu: String,
        /// Horizon for numeric schedule suprema.
        #[arg(long, default_value_t = 10_000)]
        horizon: u64,
        /// Slack of the angle condition (1 - θ̄ margin) for the start bound.
        #[arg(long, default_value_t = 1.0)]
        slack: f64,
        /// Regularity radius δ for the local-ball radius.
        #[arg(long, default_value_t = 1.0)]
        reg_delta: f64,
        /// Start distance to the first set (enables the vanishing-limit bound).
        #[arg(long)]
        dist_a: Option<f64>,
        /// Start distance to the second set.
        #[arg(long)]
        dist_b: Option<f64>,
    },
    /// Compute a joint-angle (CQ) report for a scenario.
    Cq {
        /// sawtooth | two-lines:ANGLE | finite-sets:FILE | CONFIG-FILE
        #[arg(long)]
        scenario: String,
        /// Neighborhood radius δ.
        #[arg(long, default_value_t = 0.5)]
        delta: f64,
        /// exact2d | sampled
        #[arg(long, default_value = "exact2d")]
        method: String,
        /// Sample count for the sampled method and the regularity probe.
        #[arg(long, default_value_t = 10_000)]
        samples: u64,
        /// Seed for sampled estimates (MARP_SEED overrides config seeds).
        #[arg(long)]
        seed: Option<u64>,
        /// Also report the regularity-probe lower bound (sawtooth only).
        #[arg(long)]
        probe_regularity: bool,
    },
    /// Re-run one config across a parameter grid; write a CSV of outcomes.
    Sweep {
        /// Path to the base experiment JSON.
        config: PathBuf,
        /// lambda-const | mu-const | eta | start-coordinate
        #[arg(long)]
        param: String,
        #[arg(long)]
        from: f64,
        #[arg(long)]
        to: f64,
        /// Number of grid points (1 reproduces the base run).
        #[arg(long)]
        steps: usize,
        /// Output CSV path.
        #[arg(long)]
        out: PathBuf,
        /// Trailing window for the per-row empirical-rate fit.
        #[arg(long, default_value_t = 40)]
        rate_window: usize,
    },
}

/// Entry point used by the binary; `args` includes the program name.
pub fn run_cli(args: &[String]) -> u8 {
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return code;
        }
    };
    let outcome = match cli.cmd {
        Cmd::Run {
            config,
            out_dir,
            rate_window,
        } => cmd_run(&config, &out_dir, rate_window),
        Cmd::Examples { id } => cmd_examples(id.as_deref()),
        Cmd::Rates {
            theta,
            eps,
            lambda,
            mu,
            horizon,
            slack,
            reg_delta,
            dist_a,
            dist_b,
        } => cmd_rates(
            theta, eps, &lambda, &mu, horizon, slack, reg_delta, dist_a, dist_b,
        ),
        Cmd::Cq {
            scenario,
            delta,
            method,
            samples,
            seed,
            probe_regularity,
        } => cmd_cq(&scenario, delta, &method, samples, seed, probe_regularity),
        Cmd::Sweep {
            config,
            param,
            from,
            to,
            steps,
            out,
            rate_window,
        } => cmd_sweep(&config, &param, from, to, steps, &out, rate_window),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

fn status_exit_code(status: &RunStatus) -> u8 {
    match status {
        RunStatus::Converged { .. } => 0,
        RunStatus::Cycle { .. } => 2,
        RunStatus::MaxIter => 3,
    }
}

fn cmd_run(config: &Path, out_dir: &Path, rate_window: usize) -> Result<u8> {
    let cfg = ExperimentConfig::load(config)?;
    let t = solver::run(&cfg.to_marp_config()?)?;
    std::fs::create_dir_all(out_dir)?;
    std::fs::write(out_dir.join("trajectory.csv"), solver::trajectory_csv(&t))?;
    let summary = format!(
        "{}\n",
        serde_json::to_string_pretty(&solver::summary_json(&t, rate_window))?
    );
    std::fs::write(out_dir.join("summary.json"), &summary)?;
    print!("{summary}");
    Ok(status_exit_code(&t.status))
}

fn cmd_examples(id: Option<&str>) -> Result<u8> {
    let outcomes = match id {
        Some(id) => vec![catalog::run_example(id)?],
        None => catalog::run_all()?,
    };
    let mut failed = 0usize;
    for outcome in &outcomes {
        let passed = outcome.checks.iter().filter(|c| c.passed).count();
        let verdict = if outcome.passed() { "PASS" } else { "FAIL" };
        println!(
            "{:<11} {verdict}  {passed}/{} checks",
            outcome.id,
            outcome.checks.len()
        );
        if !outcome.passed() {
            failed += 1;
            for check in outcome.checks.iter().filter(|c| !c.passed) {
                println!("  FAIL {}: {}", check.name, check.detail);
            }
        }
    }
    if failed == 0 {
        println!("all {} examples passed", outcomes.len());
        Ok(0)
    } else {
        println!("{failed} of {} examples failed", outcomes.len());
        Ok(1)
    }
}

/// Parse `const:V`, `geom:I:R`, `harmonic:S`, `dyadic-sqrt:D`, `dyadic-ratio`.
fn parse_schedule_spec(spec: &str) -> Result<Schedule> {
    let bad = |msg: &str| Error::InvalidSchedule(format!("{msg} (in spec {spec:?})"));
    let mut parts = spec.split(':');
    let head = parts.next().unwrap_or_default();
    let mut nums = Vec::new();
    for p in parts {
        nums.push(
            p.parse::<f64>()
                .map_err(|_| bad(&format!("{p:?} is not a number")))?,
        );
    }
    let schedule = match (head, nums.as_slice()) {
        ("const", [v]) => Schedule::Constant { value: *v },
        ("geom", [i, r]) => Schedule::Geometric {
            initial: *i,
            ratio: *r,
        },
        ("harmonic", [s]) => Schedule::Harmonic { scale: *s },
        ("dyadic-sqrt", [d]) => Schedule::DyadicSqrt { delta: *d },
        ("dyadic-ratio", []) => Schedule::DyadicRatio,
        _ => {
            return Err(bad(
                "expected const:V, geom:I:R, harmonic:S, dyadic-sqrt:D, or dyadic-ratio",
            ))
        }
    };
    schedule.validate()?;
    Ok(schedule)
}

#[allow(clippy::too_many_arguments)]
fn cmd_rates(
    theta: f64,
    eps: f64,
    lambda: &str,
    mu: &str,
    horizon: u64,
    slack: f64,
    reg_delta: f64,
    dist_a: Option<f64>,
    dist_b: Option<f64>,
) -> Result<u8> {
    let lambda = parse_schedule_spec(lambda)?;
    let mu = parse_schedule_spec(mu)?;
    let mut out = serde_json::Map::new();

    let rho = rates::rho_hat(&lambda, &mu, theta, horizon)?;
    out.insert("rho_hat".into(), serde_json::to_value(&rho)?);
    match rates::cq_delta(slack, rho.value, rho.alpha0) {
        Ok(bound) => {
            out.insert("start_bound".into(), serde_json::to_value(bound)?);
        }
        Err(e) => {
            out.insert("start_bound".into(), serde_json::Value::Null);
            out.insert("start_bound_note".into(), e.to_string().into());
        }
    }

    match rates::kappa_hat(&lambda, &mu, theta, eps, horizon) {
        Ok(kappa) => {
            match rates::regularity_ball(reg_delta, kappa.value, kappa.alpha0) {
                Ok(ball) => {
                    out.insert("regularity_ball".into(), serde_json::to_value(ball)?);
                }
                Err(e) => {
                    out.insert("regularity_ball".into(), serde_json::Value::Null);
                    out.insert("regularity_ball_note".into(), e.to_string().into());
                }
            }
            out.insert("kappa_hat".into(), serde_json::to_value(&kappa)?);
        }
        Err(e) => {
            out.insert("kappa_hat".into(), serde_json::Value::Null);
            out.insert("kappa_hat_note".into(), e.to_string().into());
            out.insert("regularity_ball".into(), serde_json::Value::Null);
        }
    }

    let eta = rates::eta(&lambda, &mu, horizon)?;
    if let (Some(da), Some(db)) = (dist_a, dist_b) {
        match rates::vanishing_limit_bound(eta.alpha0, eta.value, da, db) {
            Ok(v) => {
                out.insert("vanishing_limit_bound".into(), v.into());
            }
            Err(e) => {
                out.insert("vanishing_limit_bound".into(), serde_json::Value::Null);
                out.insert("vanishing_limit_bound_note".into(), e.to_string().into());
            }
        }
    }
    out.insert("eta".into(), serde_json::to_value(&eta)?);

    println!(
        "{}",
        serde_json::to_string_pretty(&serde_json::Value::Object(out))?
    );
    Ok(0)
}

/// Radians, `deg:DEGREES`, or `pi/N`.
fn parse_angle(s: &str) -> Result<f64> {
    let parsed = if let Some(deg) = s.strip_prefix("deg:") {
        deg.parse::<f64>().ok().map(|d| d.to_radians())
    } else if let Some(denom) = s.strip_prefix("pi/") {
        denom.parse::<f64>().ok().map(|d| std::f64::consts::PI / d)
    } else {
        s.parse::<f64>().ok()
    };
    parsed.filter(|v| v.is_finite()).ok_or_else(|| {
        Error::UnknownId(format!(
            "two-lines angle {s:?} (use radians, deg:DEGREES, or pi/N)"
        ))
    })
}

fn line_through_origin(angle: f64) -> ClosedSet {
    ClosedSet::Affine {
        base: vec![0.0, 0.0],
        directions: vec![vec![angle.cos(), angle.sin()]],
    }
}

/// Scenario data: the two sets, their cone restrictions, and the center.
struct CqScenario {
    set_a: ClosedSet,
    restrict_a: ClosedSet,
    set_b: ClosedSet,
    restrict_b: ClosedSet,
    center: Point,
    seed: Option<u64>,
    is_sawtooth: bool,
}

#[derive(serde::Deserialize)]
#[serde(deny_unknown_fields)]
struct FiniteSetsFile {
    #[serde(rename = "setA")]
    set_a: ClosedSet,
    #[serde(rename = "setB")]
    set_b: ClosedSet,
    center: Point,
}

fn load_cq_scenario(scenario: &str) -> Result<CqScenario> {
    if scenario == "sawtooth" {
        let (a, b) = sawtooth_pair(60);
        return Ok(CqScenario {
            restrict_a: a.clone(),
            restrict_b: b.clone(),
            set_a: a,
            set_b: b,
            center: vec![0.0, 0.0],
            seed: None,
            is_sawtooth: true,
        });
    }
    if let Some(angle) = scenario.strip_prefix("two-lines:") {
        let phi = parse_angle(angle)?;
        let whole = ClosedSet::whole_space(2);
        return Ok(CqScenario {
            set_a: line_through_origin(0.0),
            restrict_a: whole.clone(),
            set_b: line_through_origin(phi),
            restrict_b: whole,
            center: vec![0.0, 0.0],
            seed: None,
            is_sawtooth: false,
        });
    }
    if let Some(path) = scenario.strip_prefix("finite-sets:") {
        let text = std::fs::read_to_string(path)?;
        let mut de = serde_json::Deserializer::from_str(&text);
        let file: FiniteSetsFile = serde_path_to_error::deserialize(&mut de)
            .map_err(|e| Error::config(format!("/{}", e.path()), e.inner().to_string()))?;
        if !matches!(file.set_a, ClosedSet::Finite { .. })
            || !matches!(file.set_b, ClosedSet::Finite { .. })
        {
            return Err(Error::InvalidSet(
                "finite-sets scenario requires finite point lists".into(),
            ));
        }
        file.set_a.validate()?;
        file.set_b.validate()?;
        return Ok(CqScenario {
            restrict_a: file.set_b.clone(),
            restrict_b: file.set_a.clone(),
            set_a: file.set_a,
            set_b: file.set_b,
            center: file.center,
            seed: None,
            is_sawtooth: false,
        });
    }
    if Path::new(scenario).is_file() {
        let cfg = ExperimentConfig::load(Path::new(scenario))?;
        let seed = cfg.effective_seed()?;
        return Ok(CqScenario {
            restrict_a: cfg.set_b.clone(),
            restrict_b: cfg.set_a.clone(),
            set_a: cfg.set_a,
            set_b: cfg.set_b,
            center: cfg.start,
            seed: Some(seed),
            is_sawtooth: false,
        });
    }
    Err(Error::UnknownId(format!(
        "scenario {scenario:?} (use sawtooth, two-lines:ANGLE, finite-sets:FILE, \
         or a config path)"
    )))
}

fn env_seed() -> Result<Option<u64>> {
    match std::env::var(SEED_ENV_VAR) {
        Ok(v) => v.trim().parse::<u64>().map(Some).map_err(|_| {
            Error::config(
                "/seed",
                format!("{SEED_ENV_VAR} must be a non-negative integer, got {v:?}"),
            )
        }),
        Err(_) => Ok(None),
    }
}

fn cmd_cq(
    scenario: &str,
    delta: f64,
    method: &str,
    samples: u64,
    seed_flag: Option<u64>,
    probe_regularity: bool,
) -> Result<u8> {
    let sc = load_cq_scenario(scenario)?;
    // Explicit flag wins; otherwise the environment, then the scenario's own
    // seed (config files), then 0.
    let seed = match seed_flag {
        Some(s) => s,
        None => env_seed()?.or(sc.seed).unwrap_or(0),
    };
    let method = match method {
        "exact2d" => CqMethod::Exact2d,
        "sampled" => CqMethod::Sampled { samples, seed },
        other => {
            return Err(Error::UnknownId(format!(
                "method {other:?} (use exact2d or sampled)"
            )))
        }
    };
    let report = cones::cq_number(
        &sc.set_a,
        &sc.restrict_a,
        &sc.set_b,
        &sc.restrict_b,
        &sc.center,
        delta,
        method,
    )?;
    let mut out = serde_json::Map::new();
    out.insert("cq".into(), serde_json::to_value(&report)?);
    if probe_regularity {
        if !sc.is_sawtooth {
            return Err(Error::Unsupported(
                "--probe-regularity is defined for the sawtooth scenario".into(),
            ));
        }
        let eps = cones::regularity_probe(&sc.set_a, &sc.set_b, &sc.center, delta, samples, seed)?;
        out.insert("epsilon_lower".into(), eps.into());
    }
    println!(
        "{}",
        serde_json::to_string_pretty(&serde_json::Value::Object(out))?
    );
    Ok(0)
}

fn sweep_grid(from: f64, to: f64, steps: usize) -> Result<Vec<f64>> {
    if steps == 0 {
        return Err(Error::config("/steps", "steps must be at least 1"));
    }
    if !(from.is_finite() && to.is_finite() && from <= to) {
        return Err(Error::config("/from", "need finite bounds with from <= to"));
    }
    if steps == 1 {
        return Ok(vec![from]);
    }
    Ok((0..steps)
        .map(|i| {
            if i == steps - 1 {
                to
            } else {
                from + (to - from) * (i as f64) / (steps as f64 - 1.0)
            }
        })
        .collect())
}

fn apply_sweep_param(cfg: &ExperimentConfig, param: &str, v: f64) -> Result<ExperimentConfig> {
    let mut cfg = cfg.clone();
    match param {
        "lambda-const" => cfg.lambda = Schedule::Constant { value: v },
        "mu-const" => cfg.mu = Schedule::Constant { value: v },
        "eta" => {
            cfg.lambda = Schedule::Geometric {
                initial: cfg.lambda.first()?,
                ratio: v,
            };
            cfg.mu = Schedule::Geometric {
                initial: cfg.mu.first()?,
                ratio: v,
            };
        }
        "start-coordinate" => {
            cfg.start[0] = v;
        }
        other => {
            return Err(Error::UnknownId(format!(
                "sweep param {other:?} (use lambda-const, mu-const, eta, start-coordinate)"
            )))
        }
    }
    Ok(cfg)
}

fn cmd_sweep(
    config: &Path,
    param: &str,
    from: f64,
    to: f64,
    steps: usize,
    out: &Path,
    rate_window: usize,
) -> Result<u8> {
    let base = ExperimentConfig::load(config)?;
    let grid = sweep_grid(from, to, steps)?;
    let d = base.dimension;
    let mut csv = String::from(
        "param,value,status,iterations,rate_per_iteration,rate_per_half_step,r_squared",
    );
    for i in 0..d {
        csv.push_str(&format!(",limit_{i}"));
    }
    csv.push('\n');
    for &v in &grid {
        let cfg = apply_sweep_param(&base, param, v)?;
        let t = solver::run(&cfg.to_marp_config()?)?;
        let status = match &t.status {
            RunStatus::Converged { .. } => "converged",
            RunStatus::Cycle { .. } => "cycle",
            RunStatus::MaxIter => "max_iter",
        };
        let (r_it, r_half, r2) = match solver::empirical_rate(&t, rate_window) {
            Ok(RateOutcome::Estimate(est)) => (est.per_iteration, est.per_half_step, est.r_squared),
            Ok(RateOutcome::ExactConvergence) => (0.0, 0.0, 1.0),
            Err(_) => (f64::NAN, f64::NAN, f64::NAN),
        };
        csv.push_str(&format!(
            "{param},{v},{status},{},{r_it},{r_half},{r2}",
            t.total_iterations
        ));
        match t.limit() {
            Some(p) => {
                for c in p {
                    csv.push_str(&format!(",{c}"));
                }
            }
            None => {
                for _ in 0..d {
                    csv.push_str(&format!(",{}", f64::NAN));
                }
            }
        }
        csv.push('\n');
    }
    std::fs::write(out, &csv)?;
    println!("wrote {} ({} rows)", out.display(), grid.len());
    Ok(0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn schedule_specs_parse() {
        assert_eq!(
            parse_schedule_spec("const:0.5").unwrap(),
            Schedule::Constant { value: 0.5 }
        );
        assert_eq!(
            parse_schedule_spec("geom:0.5:0.9").unwrap(),
            Schedule::Geometric {
                initial: 0.5,
                ratio: 0.9
            }
        );
        assert_eq!(
            parse_schedule_spec("harmonic:1").unwrap(),
            Schedule::Harmonic { scale: 1.0 }
        );
        assert_eq!(
            parse_schedule_spec("dyadic-sqrt:1").unwrap(),
            Schedule::DyadicSqrt { delta: 1.0 }
        );
        assert_eq!(
            parse_schedule_spec("dyadic-ratio").unwrap(),
            Schedule::DyadicRatio
        );
        assert!(parse_schedule_spec("const:2.0").is_err());
        assert!(parse_schedule_spec("geom:0.5").is_err());
        assert!(parse_schedule_spec("mystery:1").is_err());
    }

    #[test]
    // The plain-radian form is exercised with a truncated decimal on
    // purpose; it is close to, but not, π/3.
    #[allow(clippy::approx_constant)]
    fn angles_parse_in_three_forms() {
        assert!((parse_angle("1.0472").unwrap() - 1.0472).abs() < 1e-15);
        assert!((parse_angle("deg:60").unwrap() - std::f64::consts::FRAC_PI_3).abs() < 1e-15);
        assert!((parse_angle("pi/3").unwrap() - std::f64::consts::FRAC_PI_3).abs() < 1e-15);
        assert!(parse_angle("sixty").is_err());
    }

    #[test]
    fn sweep_grid_is_inclusive_and_validated() {
        assert_eq!(sweep_grid(0.2, 0.9, 1).unwrap(), vec![0.2]);
        let g = sweep_grid(0.2, 0.9, 15).unwrap();
        assert_eq!(g.len(), 15);
        assert_eq!(g[0], 0.2);
        assert_eq!(*g.last().unwrap(), 0.9);
        assert!(sweep_grid(0.9, 0.2, 3).is_err());
        assert!(sweep_grid(0.1, 0.2, 0).is_err());
    }

    #[test]
    fn unknown_sweep_param_is_rejected() {
        let cfg = catalog::example_configs("ex-1.2").unwrap().remove(0);
        assert!(matches!(
            apply_sweep_param(&cfg, "gap-tol", 0.5),
            Err(Error::UnknownId(_))
        ));
        let swept = apply_sweep_param(&cfg, "lambda-const", 0.7).unwrap();
        assert_eq!(swept.lambda, Schedule::Constant { value: 0.7 });
        let swept = apply_sweep_param(&cfg, "start-coordinate", 4.0).unwrap();
        assert_eq!(swept.start, vec![4.0]);
    }
}
