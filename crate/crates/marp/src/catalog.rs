//! Worked-example catalog.
//!
//! Each entry is a named scenario with pinned expected outcomes, every
//! expectation carrying an explicit tolerance. [`run_example`] executes one
//! entry and reports a pass/fail line per expectation; [`run_all`] executes
//! the whole catalog. The solver-driven entries expose their generated
//! [`ExperimentConfig`]s through [`example_configs`] so callers can re-run
//! or serialize them.
//!
//! | id          | scenario                                                        |
//! |-------------|-----------------------------------------------------------------|
//! | ex-1.1      | two-point sets, unrelaxed: cycles, never reaches the solution   |
//! | ex-1.2      | two-point sets, half relaxation: linear convergence, rate ½     |
//! | ex-6.1      | half-line, square-root damping: limit outside both sets         |
//! | ex-6.2      | half-line, harmonic damping: limit in the intersection          |
//! | ex-6.3      | two axes, mixed damping: limit in one set only                  |
//! | ex-8.4      | two axes: closed-form orbit, summable vs nonsummable damping    |
//! | prop-8.1    | two-point regime sweep: convergence window and rate 1−λ         |
//! | sawtooth-9  | sawtooth pair: joint angle √(7/8), regularity, landmarks        |

use crate::cones::{cq_number, regularity_probe, CqMethod};
use crate::config::ExperimentConfig;
use crate::error::{Error, Result};
use crate::geometry::{sawtooth_landmarks, sawtooth_pair, sawtooth_w, ClosedSet, Point, TiePolicy};
use crate::schedules::Schedule;
use crate::solver::{self, RateOutcome, RunStatus, Trajectory};
use crate::vecmath as vm;

/// Every catalog id, in run order.
pub const EXAMPLE_IDS: &[&str] = &[
    "ex-1.1",
    "ex-1.2",
    "ex-6.1",
    "ex-6.2",
    "ex-6.3",
    "ex-8.4",
    "prop-8.1",
    "sawtooth-9",
];

/// One verified expectation.
#[derive(Clone, Debug)]
pub struct ExampleCheck {
    /// What was checked, e.g. `"x2 = -11/4 (tol 1e-12)"`.
    pub name: String,
    pub passed: bool,
    /// Expected-vs-actual detail for the report line.
    pub detail: String,
}

/// Outcome of one catalog entry.
#[derive(Clone, Debug)]
pub struct ExampleOutcome {
    pub id: String,
    pub checks: Vec<ExampleCheck>,
}

impl ExampleOutcome {
    /// True when every expectation held.
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

struct Checks(Vec<ExampleCheck>);

impl Checks {
    fn new() -> Self {
        Checks(Vec::new())
    }

    fn abs(&mut self, name: &str, actual: f64, expected: f64, tol: f64) {
        let err = (actual - expected).abs();
        self.0.push(ExampleCheck {
            name: name.to_string(),
            passed: err <= tol,
            detail: format!("expected {expected} ± {tol}, got {actual}"),
        });
    }

    fn point(&mut self, name: &str, actual: &[f64], expected: &[f64], tol: f64) {
        let err = if actual.len() == expected.len() {
            vm::dist(actual, expected)
        } else {
            f64::INFINITY
        };
        self.0.push(ExampleCheck {
            name: name.to_string(),
            passed: err <= tol,
            detail: format!("expected {expected:?} ± {tol}, got {actual:?}"),
        });
    }

    fn holds(&mut self, name: &str, passed: bool, detail: String) {
        self.0.push(ExampleCheck {
            name: name.to_string(),
            passed,
            detail,
        });
    }
}

fn two_point_sets() -> (ClosedSet, ClosedSet) {
    (
        ClosedSet::Finite {
            points: vec![vec![-3.0], vec![2.0]],
        },
        ClosedSet::Finite {
            points: vec![vec![-3.0], vec![6.0]],
        },
    )
}

fn half_line() -> ClosedSet {
    ClosedSet::HalfSpace {
        normal: vec![1.0],
        offset: 0.0,
    }
}

fn axis_a() -> ClosedSet {
    ClosedSet::Affine {
        base: vec![0.0, 0.0],
        directions: vec![vec![1.0, 0.0]],
    }
}

fn axis_b() -> ClosedSet {
    ClosedSet::Affine {
        base: vec![0.0, 0.0],
        directions: vec![vec![0.0, 1.0]],
    }
}

fn base_config(
    set_a: ClosedSet,
    set_b: ClosedSet,
    lambda: Schedule,
    mu: Schedule,
    start: Point,
) -> ExperimentConfig {
    ExperimentConfig {
        dimension: start.len(),
        set_a,
        set_b,
        lambda,
        mu,
        start,
        tie_policy: TiePolicy::LexMin,
        max_iter: 100_000,
        gap_tol: 1e-10,
        record_every: 1,
        seed: 0,
    }
}

fn constant(value: f64) -> Schedule {
    Schedule::Constant { value }
}

/// The configs an entry runs, in run order. Cone-query entries
/// (`sawtooth-9`) have none.
pub fn example_configs(id: &str) -> Result<Vec<ExperimentConfig>> {
    let (a2, b2) = two_point_sets();
    let configs = match id {
        "ex-1.1" => {
            let mut c = base_config(a2, b2, constant(1.0), constant(1.0), vec![0.0]);
            c.max_iter = 100;
            vec![c]
        }
        "ex-1.2" => vec![base_config(a2, b2, constant(0.5), constant(0.5), vec![0.0])],
        "ex-6.1" => vec![base_config(
            half_line(),
            half_line(),
            Schedule::DyadicSqrt { delta: 1.0 },
            Schedule::DyadicSqrt { delta: 1.0 },
            vec![1.0],
        )],
        "ex-6.2" => {
            let mut c = base_config(
                half_line(),
                half_line(),
                Schedule::Harmonic { scale: 1.0 },
                Schedule::Harmonic { scale: 1.0 },
                vec![1.0],
            );
            c.max_iter = 10_000;
            vec![c]
        }
        "ex-6.3" => vec![base_config(
            axis_a(),
            axis_b(),
            Schedule::DyadicRatio,
            constant(0.5),
            vec![1.0, 1.0],
        )],
        "ex-8.4" => {
            let mut oracle = base_config(
                axis_a(),
                axis_b(),
                Schedule::Geometric {
                    initial: 0.5,
                    ratio: 0.8,
                },
                Schedule::Harmonic { scale: 1.0 },
                vec![1.25, -0.75],
            );
            // Oracle-equivalence window; the per-iterate closed form costs
            // O(n) products, so keep the horizon short.
            oracle.max_iter = 200;
            oracle.gap_tol = 1e-300;
            let mut harmonic = base_config(
                axis_a(),
                axis_b(),
                Schedule::Harmonic { scale: 1.0 },
                Schedule::Harmonic { scale: 1.0 },
                vec![1.0, 1.0],
            );
            harmonic.max_iter = 10_000;
            harmonic.gap_tol = 1e-300;
            harmonic.record_every = 10_000;
            let geometric = base_config(
                axis_a(),
                axis_b(),
                Schedule::Geometric {
                    initial: 0.5,
                    ratio: 0.5,
                },
                Schedule::Geometric {
                    initial: 0.5,
                    ratio: 0.5,
                },
                vec![1.0, 1.0],
            );
            vec![oracle, harmonic, geometric]
        }
        "prop-8.1" => {
            let mut configs: Vec<ExperimentConfig> = [0.35, 0.5, 0.7]
                .iter()
                .map(|&l| base_config(a2.clone(), b2.clone(), constant(l), constant(l), vec![0.0]))
                .collect();
            let mut map = base_config(a2, b2, constant(1.0), constant(1.0), vec![0.0]);
            map.max_iter = 100;
            configs.push(map);
            configs
        }
        "sawtooth-9" => vec![],
        _ => {
            return Err(Error::UnknownId(format!(
                "{id} (known: {})",
                EXAMPLE_IDS.join(", ")
            )))
        }
    };
    Ok(configs)
}

fn run_config(cfg: &ExperimentConfig) -> Result<Trajectory> {
    solver::run(&cfg.to_marp_config()?)
}

/// Per-half-step empirical rate over the last `window` recorded iterations.
fn half_step_rate(t: &Trajectory, window: usize) -> Result<f64> {
    match solver::empirical_rate(t, window)? {
        RateOutcome::ExactConvergence => Ok(0.0),
        RateOutcome::Estimate(est) => Ok(est.per_half_step),
    }
}

fn check_cycle(checks: &mut Checks, t: &Trajectory, label: &str) {
    match &t.status {
        RunStatus::Cycle {
            period,
            witness_x,
            witness_y,
        } => {
            checks.holds(
                &format!("{label}: cycle of period 1"),
                *period == 1,
                format!("period {period}"),
            );
            checks.point(
                &format!("{label}: cycle x = 2 (exact)"),
                witness_x,
                &[2.0],
                0.0,
            );
            checks.point(
                &format!("{label}: cycle y = 6 (exact)"),
                witness_y,
                &[6.0],
                0.0,
            );
        }
        other => checks.holds(
            &format!("{label}: cycle of period 1"),
            false,
            format!("status {other:?}"),
        ),
    }
}

fn run_ex_1_1(checks: &mut Checks) -> Result<()> {
    let t = run_config(&example_configs("ex-1.1")?[0])?;
    check_cycle(checks, &t, "unrelaxed");
    let steady = t
        .iterates
        .iter()
        .all(|it| it.x == vec![2.0] && it.y == vec![6.0]);
    checks.holds(
        "every iterate sits at x=2, y=6 (exact)",
        steady,
        format!("{} iterates inspected", t.iterates.len()),
    );
    Ok(())
}

fn run_ex_1_2(checks: &mut Checks) -> Result<()> {
    let t = run_config(&example_configs("ex-1.2")?[0])?;
    let expect = [
        ("x0 = 1", 0usize, true, 1.0),
        ("y0 = -1", 0, false, -1.0),
        ("x1 = -2", 1, true, -2.0),
        ("y1 = -5/2", 1, false, -2.5),
        ("x2 = -11/4", 2, true, -2.75),
        ("y2 = -23/8", 2, false, -2.875),
        ("x3 = -47/16", 3, true, -2.9375),
    ];
    for (name, n, is_x, v) in expect {
        let it = &t.iterates[n];
        let got = if is_x { it.x[0] } else { it.y[0] };
        checks.abs(&format!("{name} (tol 1e-12)"), got, v, 1e-12);
    }
    checks.holds(
        "converged within 60 iterations",
        matches!(t.status, RunStatus::Converged { .. }) && t.total_iterations <= 60,
        format!("status {:?} after {}", t.status, t.total_iterations),
    );
    let limit = t.limit().map(|p| p[0]).unwrap_or(f64::NAN);
    checks.abs("limit = -3 (tol 1e-9)", limit, -3.0, 1e-9);
    checks.abs(
        "per-half-step rate = 1/2 (tol 0.02)",
        half_step_rate(&t, 8)?,
        0.5,
        0.02,
    );
    Ok(())
}

fn run_ex_6_1(checks: &mut Checks) -> Result<()> {
    let cfg = example_configs("ex-6.1")?[0].clone();
    let t = run_config(&cfg)?;
    // yₙ = y₋₁·(δ + 2⁻⁽ⁿ⁺¹⁾)/(δ + 1); at n = 2 that is 9/16.
    checks.abs(
        "y2 = 9/16 (tol 1e-12)",
        t.iterates[2].y[0],
        9.0 / 16.0,
        1e-12,
    );
    let limit = t.limit().map(|p| p[0]).unwrap_or(f64::NAN);
    checks.abs("limit = 1/2 (tol 1e-9)", limit, 0.5, 1e-9);
    let inside_a = cfg.set_a.membership(&[limit], 1e-6)?;
    let inside_b = cfg.set_b.membership(&[limit], 1e-6)?;
    checks.holds(
        "limit lies outside both sets (tol 1e-6)",
        !inside_a && !inside_b,
        format!("in A: {inside_a}, in B: {inside_b}"),
    );
    Ok(())
}

fn run_ex_6_2(checks: &mut Checks) -> Result<()> {
    let cfg = example_configs("ex-6.2")?[0].clone();
    let t = run_config(&cfg)?;
    // yₙ = y₋₁/(n + 2)²; at n = 2 that is 1/16.
    checks.abs(
        "y2 = 1/16 (tol 1e-12)",
        t.iterates[2].y[0],
        1.0 / 16.0,
        1e-12,
    );
    let limit = t.limit().map(|p| p[0]).unwrap_or(f64::NAN);
    checks.abs("limit = 0 (tol 1e-6)", limit, 0.0, 1e-6);
    let inside_a = cfg.set_a.membership(&[limit], 1e-6)?;
    let inside_b = cfg.set_b.membership(&[limit], 1e-6)?;
    checks.holds(
        "limit lies in both sets (tol 1e-6)",
        inside_a && inside_b,
        format!("in A: {inside_a}, in B: {inside_b}"),
    );
    Ok(())
}

fn run_ex_6_3(checks: &mut Checks) -> Result<()> {
    let cfg = example_configs("ex-6.3")?[0].clone();
    let t = run_config(&cfg)?;
    checks.point(
        "y0 = (1/2, 3/4) (tol 1e-12)",
        &t.iterates[0].y,
        &[0.5, 0.75],
        1e-12,
    );
    let limit = t.limit().cloned().unwrap_or_default();
    checks.point("limit = (0, 1/2) (tol 1e-9)", &limit, &[0.0, 0.5], 1e-9);
    let inside_a = cfg.set_a.membership(&limit, 1e-6)?;
    let inside_b = cfg.set_b.membership(&limit, 1e-6)?;
    checks.holds(
        "limit lies in B only (tol 1e-6)",
        inside_b && !inside_a,
        format!("in A: {inside_a}, in B: {inside_b}"),
    );
    Ok(())
}

fn run_ex_8_4(checks: &mut Checks) -> Result<()> {
    let configs = example_configs("ex-8.4")?;

    // Orbit versus the two-axes closed form, mixed schedules.
    let t = run_config(&configs[0])?;
    let mut worst = 0.0f64;
    for it in &t.iterates {
        let (x, y) =
            solver::closed_form_axes(&configs[0].start, &configs[0].lambda, &configs[0].mu, it.n)?;
        worst = worst.max(vm::dist(&it.x, &x)).max(vm::dist(&it.y, &y));
    }
    checks.holds(
        "orbit matches the closed form (tol 1e-12)",
        worst <= 1e-12,
        format!(
            "worst deviation {worst:.3e} over {} iterates",
            t.iterates.len()
        ),
    );

    // Nonsummable damping: both coordinates shrink like 1/(n+2) toward (0,0).
    let t = run_config(&configs[1])?;
    let last = t.iterates.last().expect("final iterate recorded");
    let n = last.n;
    let expected = 1.0 / (n as f64 + 2.0);
    checks.point(
        &format!(
            "harmonic damping: y_{n} = (1/{}, 1/{}) (tol 1e-12)",
            n + 2,
            n + 2
        ),
        &last.y,
        &[expected, expected],
        1e-12,
    );
    checks.holds(
        "harmonic damping: orbit is vanishing (norm ≤ 1.5e-4 at n=10⁴)",
        vm::norm(&last.y) <= 1.5e-4,
        format!("‖y‖ = {:.3e}", vm::norm(&last.y)),
    );

    // Summable damping: the orbit stalls strictly away from the intersection.
    let t = run_config(&configs[2])?;
    let limit = t.limit().cloned().unwrap_or_default();
    let (_, y_oracle) = solver::closed_form_axes(
        &configs[2].start,
        &configs[2].lambda,
        &configs[2].mu,
        t.iterates.last().unwrap().n,
    )?;
    checks.point(
        "geometric damping: final y matches the closed form (tol 1e-12)",
        &limit,
        &y_oracle,
        1e-12,
    );
    checks.holds(
        "geometric damping: both limit coordinates exceed 0.1",
        limit.iter().all(|v| v.abs() > 0.1),
        format!("limit {limit:?}"),
    );
    Ok(())
}

fn run_prop_8_1(checks: &mut Checks) -> Result<()> {
    let configs = example_configs("prop-8.1")?;
    for (cfg, lam) in configs[..3].iter().zip([0.35, 0.5, 0.7]) {
        let t = run_config(cfg)?;
        let label = format!("lambda={lam}");
        checks.holds(
            &format!("{label}: converged"),
            matches!(t.status, RunStatus::Converged { .. }),
            format!("status {:?}", t.status),
        );
        let limit = t.limit().map(|p| p[0]).unwrap_or(f64::NAN);
        checks.abs(
            &format!("{label}: limit = -3 (tol 1e-9)"),
            limit,
            -3.0,
            1e-9,
        );
        checks.abs(
            &format!("{label}: per-half-step rate = {} (tol 0.02)", 1.0 - lam),
            half_step_rate(&t, 8)?,
            1.0 - lam,
            0.02,
        );
    }
    let t = run_config(&configs[3])?;
    check_cycle(checks, &t, "lambda=1");
    Ok(())
}

fn run_sawtooth_9(checks: &mut Checks) -> Result<()> {
    let (a, b) = sawtooth_pair(60);
    let c = [0.0, 0.0];
    let expected = (7.0f64 / 8.0).sqrt();
    for delta in [0.1, 0.5] {
        let report = cq_number(&a, &a, &b, &b, &c, delta, CqMethod::Exact2d)?;
        checks.abs(
            &format!("exact joint angle at delta={delta} is sqrt(7/8) (tol 1e-6)"),
            report.theta_delta,
            expected,
            1e-6,
        );
    }
    let sampled = cq_number(
        &a,
        &a,
        &b,
        &b,
        &c,
        0.5,
        CqMethod::Sampled {
            samples: 100_000,
            seed: 0,
        },
    )?;
    checks.abs(
        "sampled joint angle at delta=0.5, 10⁵ samples (tol 5e-3)",
        sampled.theta_delta,
        expected,
        5e-3,
    );
    let eps = regularity_probe(&a, &b, &c, 0.5, 300, 9)?;
    let sin_w = sawtooth_w().sin();
    checks.holds(
        "regularity probe exceeds 0.17 and reaches sin w (tol 1e-4)",
        eps > 0.17 && eps >= sin_w - 1e-4,
        format!("probe {eps:.6}, sin w = {sin_w:.6}"),
    );
    let mut worst_beta = 0.0f64;
    let mut worst_cos = 0.0f64;
    for k in 1..=10 {
        let lm = sawtooth_landmarks(&a, k)?;
        let d = 2f64.powi(-(k as i32 + 1));
        let side = d * 2f64.sqrt();
        worst_beta = worst_beta
            .max((lm.beta1 - side).abs())
            .max((lm.beta2 - side).abs());
        worst_cos = worst_cos.max((lm.cos_angle - 0.75).abs());
    }
    checks.holds(
        "landmarks k=1..10: both sides d√2, cosine 3/4 (tol 1e-12)",
        worst_beta <= 1e-12 && worst_cos <= 1e-12,
        format!("worst side error {worst_beta:.3e}, worst cosine error {worst_cos:.3e}"),
    );
    for k in [1u32, 3, 10] {
        let lm = sawtooth_landmarks(&a, k)?;
        let proj = a.project(&lm.z_k)?;
        let mid_low = vm::lerp(&lm.s_k_next, &lm.valley, 0.5);
        let mid_high = vm::lerp(&lm.valley, &lm.s_k, 0.5);
        let ok = proj.nearest.len() == 2
            && vm::dist(&proj.nearest[0], &mid_low) <= 1e-9
            && vm::dist(&proj.nearest[1], &mid_high) <= 1e-9;
        checks.holds(
            &format!("mirror peak z_{k} projects to the two half-tooth midpoints (tol 1e-9)"),
            ok,
            format!("nearest {:?}", proj.nearest),
        );
    }
    Ok(())
}

/// Run one catalog entry.
pub fn run_example(id: &str) -> Result<ExampleOutcome> {
    let mut checks = Checks::new();
    match id {
        "ex-1.1" => run_ex_1_1(&mut checks)?,
        "ex-1.2" => run_ex_1_2(&mut checks)?,
        "ex-6.1" => run_ex_6_1(&mut checks)?,
        "ex-6.2" => run_ex_6_2(&mut checks)?,
        "ex-6.3" => run_ex_6_3(&mut checks)?,
        "ex-8.4" => run_ex_8_4(&mut checks)?,
        "prop-8.1" => run_prop_8_1(&mut checks)?,
        "sawtooth-9" => run_sawtooth_9(&mut checks)?,
        _ => {
            return Err(Error::UnknownId(format!(
                "{id} (known: {})",
                EXAMPLE_IDS.join(", ")
            )))
        }
    }
    Ok(ExampleOutcome {
        id: id.to_string(),
        checks: checks.0,
    })
}

/// Run the whole catalog, in id order.
pub fn run_all() -> Result<Vec<ExampleOutcome>> {
    EXAMPLE_IDS.iter().map(|id| run_example(id)).collect()
}
