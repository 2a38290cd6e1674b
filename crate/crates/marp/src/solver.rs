//! The alternating relaxed projection driver and its orbit diagnostics.
//!
//! One iteration from the current point `yₙ₋₁`:
//!
//! ```text
//! aₙ ∈ P_A(yₙ₋₁)      xₙ = (1 − λₙ) yₙ₋₁ + λₙ aₙ
//! bₙ ∈ P_B(xₙ)        yₙ = (1 − μₙ) xₙ + μₙ bₙ
//! ```
//!
//! λₙ = μₙ ≡ 1 degenerates to plain alternating projections with `xₙ = aₙ`
//! and `yₙ = bₙ` bitwise (the convex combination is never formed at 1).
//!
//! The run stops on the first of: the two step gaps `gₙ = ‖yₙ − xₙ‖` and
//! `hₙ = ‖xₙ − yₙ₋₁‖` both falling below a relative tolerance, a state
//! repeating within 1e-12 relative — and well within the current step gaps,
//! so slow convergence is never mistaken for a cycle — (the signature
//! failure mode of unrelaxed projections between nonconvex sets), or the
//! iteration cap.

use crate::error::{Error, Result};
use crate::geometry::{relaxed_project, ClosedSet, Point, TiePolicy};
use crate::schedules::Schedule;
use crate::vecmath as vm;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::collections::VecDeque;

/// Relative tolerance used by cycle detection when comparing states.
const CYCLE_REL: f64 = 1e-12;

/// A repeat only counts as a cycle if the states match to well within the
/// orbit's current motion: the tolerance is also capped at this fraction of
/// `max{gₙ, hₙ}`. A slowly converging orbit drifts by about one gap per
/// iteration, so its near-repeats stay far above the cap, while a genuine
/// cycle repeats to machine precision — far below it.
const CYCLE_GAP_FRACTION: f64 = 1e-3;

/// Longest cycle period the detector reports.
const MAX_CYCLE_PERIOD: usize = 32;

/// Numerical slack added to theorem-derived inequalities when verifying
/// them on recorded (rounded) orbits.
const CHECK_SLACK: f64 = 1e-12;

/// A fully specified run.
#[derive(Clone, Debug)]
pub struct MarpConfig {
    pub set_a: ClosedSet,
    pub set_b: ClosedSet,
    pub lambda: Schedule,
    pub mu: Schedule,
    /// Starting point `y₋₁`.
    pub start: Point,
    pub tie_policy: TiePolicy,
    pub max_iter: u64,
    /// Relative gap tolerance: stop when `max{gₙ, hₙ} ≤ gap_tol·(1 + ‖yₙ‖)`.
    pub gap_tol: f64,
    pub cycle_detect: bool,
    /// Record every k-th iteration (the final one is always recorded).
    pub record_every: u64,
}

impl MarpConfig {
    /// A config with default termination settings.
    pub fn new(
        set_a: ClosedSet,
        set_b: ClosedSet,
        lambda: Schedule,
        mu: Schedule,
        start: Point,
    ) -> Self {
        MarpConfig {
            set_a,
            set_b,
            lambda,
            mu,
            start,
            tie_policy: TiePolicy::LexMin,
            max_iter: 100_000,
            gap_tol: 1e-10,
            cycle_detect: true,
            record_every: 1,
        }
    }

    /// Validate sets, schedules, dimensions, and termination parameters.
    pub fn validate(&self) -> Result<()> {
        self.set_a.validate()?;
        self.set_b.validate()?;
        self.lambda.validate()?;
        self.mu.validate()?;
        let d = self.set_a.dimension();
        if self.set_b.dimension() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: self.set_b.dimension(),
            });
        }
        if self.start.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: self.start.len(),
            });
        }
        if !vm::all_finite(&self.start) {
            return Err(Error::config("/start", "start point must be finite"));
        }
        if self.max_iter < 1 {
            return Err(Error::config("/max_iter", "must be ≥ 1"));
        }
        if !(self.gap_tol > 0.0) {
            return Err(Error::config("/gap_tol", "must be > 0"));
        }
        if self.record_every < 1 {
            return Err(Error::config("/record_every", "must be ≥ 1"));
        }
        if self.tie_policy == TiePolicy::All {
            return Err(Error::config(
                "/tie_policy",
                "'all' enumerates ties and cannot drive an orbit; \
                 use 'lex_min' or 'nearest_to_previous'",
            ));
        }
        Ok(())
    }
}

/// One recorded iteration.
#[derive(Clone, Debug, PartialEq)]
pub struct Iterate {
    pub n: u64,
    /// Nearest point of `yₙ₋₁` in A.
    pub a: Point,
    /// Relaxed A-step result.
    pub x: Point,
    /// Nearest point of `xₙ` in B.
    pub b: Point,
    /// Relaxed B-step result.
    pub y: Point,
    /// `gₙ = ‖yₙ − xₙ‖`.
    pub gap_yx: f64,
    /// `hₙ = ‖xₙ − yₙ₋₁‖`.
    pub gap_xy_prev: f64,
}

impl Iterate {
    /// `max{gₙ, hₙ}` — the quantity the stopping rule monitors.
    pub fn max_gap(&self) -> f64 {
        self.gap_yx.max(self.gap_xy_prev)
    }
}

/// How a run ended.
#[derive(Clone, Debug, PartialEq)]
pub enum RunStatus {
    /// Gaps fell below tolerance; `limit` is the final `yₙ`.
    Converged { limit: Point },
    /// Iteration cap reached with gaps still above tolerance.
    MaxIter,
    /// A state `(xₙ, yₙ)` repeated within 1e-12 relative.
    Cycle {
        period: u64,
        witness_x: Point,
        witness_y: Point,
    },
}

/// A recorded orbit.
#[derive(Clone, Debug)]
pub struct Trajectory {
    /// Starting point `y₋₁`.
    pub start: Point,
    /// Recorded iterations in order (thinned by `record_every`, final
    /// iteration always included).
    pub iterates: Vec<Iterate>,
    pub status: RunStatus,
    /// Number of iterations actually performed.
    pub total_iterations: u64,
    /// Thinning used during recording.
    pub record_every: u64,
}

impl Trajectory {
    /// The limit point when the run converged.
    pub fn limit(&self) -> Option<&Point> {
        match &self.status {
            RunStatus::Converged { limit } => Some(limit),
            _ => None,
        }
    }
}

/// Run the iteration described by `cfg`.
pub fn run(cfg: &MarpConfig) -> Result<Trajectory> {
    cfg.validate()?;
    let mut y_prev = cfg.start.clone();
    let mut prev_a: Option<Point> = None;
    let mut prev_b: Option<Point> = None;
    let mut iterates: Vec<Iterate> = Vec::new();
    let mut recent: VecDeque<(u64, Point, Point)> = VecDeque::new();
    let mut status: Option<RunStatus> = None;
    let mut total = 0;
    let mut last_unrecorded: Option<Iterate> = None;

    for n in 0..cfg.max_iter {
        let lambda = cfg.lambda.value(n)?;
        let (x, a) = relaxed_project(
            &cfg.set_a,
            &y_prev,
            lambda,
            cfg.tie_policy,
            prev_a.as_deref(),
        )?;
        let h = vm::dist(&x, &y_prev);
        let mu = cfg.mu.value(n)?;
        let (y, b) = relaxed_project(&cfg.set_b, &x, mu, cfg.tie_policy, prev_b.as_deref())?;
        let g = vm::dist(&y, &x);

        let it = Iterate {
            n,
            a,
            x: x.clone(),
            b,
            y: y.clone(),
            gap_yx: g,
            gap_xy_prev: h,
        };
        total = n + 1;
        let scheduled = n % cfg.record_every == 0;
        if scheduled {
            iterates.push(it.clone());
            last_unrecorded = None;
        } else {
            last_unrecorded = Some(it.clone());
        }

        if g.max(h) <= cfg.gap_tol * (1.0 + vm::norm(&y)) {
            status = Some(RunStatus::Converged { limit: y });
            break;
        }

        if cfg.cycle_detect {
            let motion_cap = CYCLE_GAP_FRACTION * g.max(h);
            let tol_x = (CYCLE_REL * (1.0 + vm::norm(&x))).min(motion_cap);
            let tol_y = (CYCLE_REL * (1.0 + vm::norm(&y))).min(motion_cap);
            let hit = recent
                .iter()
                .rev()
                .find(|(_, px, py)| vm::approx_eq(px, &x, tol_x) && vm::approx_eq(py, &y, tol_y));
            if let Some((m, _, _)) = hit {
                status = Some(RunStatus::Cycle {
                    period: n - m,
                    witness_x: x,
                    witness_y: y,
                });
                break;
            }
            recent.push_back((n, x.clone(), y.clone()));
            if recent.len() > MAX_CYCLE_PERIOD {
                recent.pop_front();
            }
        }

        prev_a = Some(it.a.clone());
        prev_b = Some(it.b.clone());
        y_prev = y;
    }

    // The final iteration is always recorded, even under thinning.
    if let Some(it) = last_unrecorded {
        iterates.push(it);
    }
    let status = status.unwrap_or(RunStatus::MaxIter);
    Ok(Trajectory {
        start: cfg.start.clone(),
        iterates,
        status,
        total_iterations: total,
        record_every: cfg.record_every,
    })
}

/// Closed-form orbit for the two-axes configuration `A = ℝ×{0}`,
/// `B = {0}×ℝ` started at `y₋₁ = (η₁, η₂)`:
///
/// ```text
/// xₙ = (η₁·∏_{i<n}(1 − μᵢ),  η₂·∏_{i≤n}(1 − λᵢ))
/// yₙ = (η₁·∏_{i≤n}(1 − μᵢ),  η₂·∏_{i≤n}(1 − λᵢ))
/// ```
///
/// The A-step scales the second coordinate by `(1 − λₙ)`; the B-step scales
/// the first by `(1 − μₙ)`. Used as an independent oracle against [`run`].
pub fn closed_form_axes(
    start: &[f64],
    lambda: &Schedule,
    mu: &Schedule,
    n: u64,
) -> Result<(Point, Point)> {
    if start.len() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            got: start.len(),
        });
    }
    let mut prod_lambda = 1.0; // ∏_{i≤n}(1 − λᵢ)
    let mut prod_mu_before = 1.0; // ∏_{i<n}(1 − μᵢ)
    for i in 0..=n {
        prod_lambda *= 1.0 - lambda.value(i)?;
        if i < n {
            prod_mu_before *= 1.0 - mu.value(i)?;
        }
    }
    let prod_mu = prod_mu_before * (1.0 - mu.value(n)?);
    let x = vec![start[0] * prod_mu_before, start[1] * prod_lambda];
    let y = vec![start[0] * prod_mu, start[1] * prod_lambda];
    Ok((x, y))
}

/// Empirical decay-rate estimate of an orbit's gap sequence.
#[derive(Clone, Debug, PartialEq)]
pub enum RateOutcome {
    /// All gaps in the fitting window are exactly zero (finite convergence).
    ExactConvergence,
    Estimate(RateEstimate),
}

/// Least-squares fit of `log max{gₙ, hₙ}`.
///
/// Two normalizations of the same fit are reported because the two natural
/// clocks differ: `per_iteration` is the decay factor per full (A then B)
/// iteration — the slope against `n` — while `per_half_step` is the factor
/// per projection half-step, fitted against the interleaved sequence
/// `h₀, g₀, h₁, g₁, …`. A constant-½ damping on a two-point problem halves
/// the error every half-step (`per_half_step ≈ ½`) and quarters it per
/// iteration (`per_iteration ≈ ¼`).
#[derive(Clone, Debug, PartialEq)]
pub struct RateEstimate {
    pub per_iteration: f64,
    pub per_half_step: f64,
    /// R² of the per-iteration fit (1.0 on a zero-variance window).
    pub r_squared: f64,
}

/// Fit the last `window` recorded iterations (fewer if the orbit is shorter;
/// at least four positive-gap points are required).
pub fn empirical_rate(t: &Trajectory, window: usize) -> Result<RateOutcome> {
    let positive: Vec<&Iterate> = t.iterates.iter().filter(|it| it.max_gap() > 0.0).collect();
    if positive.is_empty() && !t.iterates.is_empty() {
        return Ok(RateOutcome::ExactConvergence);
    }
    if positive.len() < 4 {
        return Err(Error::PreconditionNotMet(format!(
            "need at least 4 recorded iterations with positive gaps, have {}",
            positive.len()
        )));
    }
    let tail = &positive[positive.len().saturating_sub(window.max(2))..];

    let pts_iter: Vec<(f64, f64)> = tail
        .iter()
        .map(|it| (it.n as f64, it.max_gap().ln()))
        .collect();
    let (slope_iter, r_squared) = least_squares(&pts_iter);

    let mut pts_half: Vec<(f64, f64)> = Vec::with_capacity(2 * tail.len());
    for it in tail {
        if it.gap_xy_prev > 0.0 {
            pts_half.push((2.0 * it.n as f64, it.gap_xy_prev.ln()));
        }
        if it.gap_yx > 0.0 {
            pts_half.push(((2 * it.n + 1) as f64, it.gap_yx.ln()));
        }
    }
    let (slope_half, _) = least_squares(&pts_half);

    Ok(RateOutcome::Estimate(RateEstimate {
        per_iteration: slope_iter.exp(),
        per_half_step: slope_half.exp(),
        r_squared,
    }))
}

/// Slope and R² of an ordinary least-squares line fit.
fn least_squares(pts: &[(f64, f64)]) -> (f64, f64) {
    let n = pts.len() as f64;
    let mean_x = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let mean_y = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    let mut syy = 0.0;
    for (x, y) in pts {
        sxx += (x - mean_x) * (x - mean_x);
        sxy += (x - mean_x) * (y - mean_y);
        syy += (y - mean_y) * (y - mean_y);
    }
    if sxx == 0.0 {
        return (0.0, 1.0);
    }
    let slope = sxy / sxx;
    // A window whose spread is pure rounding noise is a perfect (constant)
    // fit; report R² = 1 rather than amplifying ulps into a bad score.
    let r2 = if syy <= 1e-24 * n * (1.0 + mean_y * mean_y) {
        1.0
    } else {
        ((sxy * sxy) / (sxx * syy)).min(1.0)
    };
    (slope, r2)
}

/// Per-quadruple outcome of [`contraction_check`].
#[derive(Clone, Debug)]
pub struct QuadrupleCheck {
    /// Index of the quadruple along the interleaved chain
    /// `y₋₁, x₀, y₀, x₁, y₁, …`.
    pub index: usize,
    /// Whether the ball precondition `max{d(u₂,c), d(u₃,c)} ≤ r` held.
    pub applicable: bool,
    /// Whether the decay inequality held (vacuously true if not applicable).
    pub satisfied: bool,
    /// Observed `d(u₃,u₄)/max{d(u₁,u₂), d(u₂,u₃)}` when defined.
    pub ratio: Option<f64>,
}

/// Result of scanning an orbit for the alternating-contraction property.
#[derive(Clone, Debug)]
pub struct ContractionReport {
    pub r: f64,
    pub rho: f64,
    pub quadruples: Vec<QuadrupleCheck>,
    /// True iff every applicable quadruple satisfied the decay inequality.
    pub verdict: bool,
    /// Largest observed ratio among applicable quadruples.
    pub worst_ratio: Option<f64>,
}

/// Scan consecutive quadruples `(u₁,u₂,u₃,u₄)` of the interleaved chain
/// `y₋₁, x₀, y₀, x₁, y₁, …` and check that whenever the two middle points
/// lie within `r` of `c`, the next link contracts:
/// `d(u₃,u₄) ≤ ρ·max{d(u₁,u₂), d(u₂,u₃)}` (plus 1e-12 slack).
///
/// Requires an unthinned trajectory (`record_every = 1`).
pub fn contraction_check(t: &Trajectory, c: &[f64], r: f64, rho: f64) -> Result<ContractionReport> {
    if t.record_every != 1 {
        return Err(Error::PreconditionNotMet(
            "contraction scan needs consecutive iterates (record_every = 1)".into(),
        ));
    }
    if !(r > 0.0) || !(0.0..1.0).contains(&rho) {
        return Err(Error::PreconditionNotMet(
            "need r > 0 and ρ ∈ [0, 1)".into(),
        ));
    }
    let mut chain: Vec<&Point> = Vec::with_capacity(1 + 2 * t.iterates.len());
    chain.push(&t.start);
    for it in &t.iterates {
        chain.push(&it.x);
        chain.push(&it.y);
    }
    let mut quadruples = Vec::new();
    let mut verdict = true;
    let mut worst: Option<f64> = None;
    for (i, w) in chain.windows(4).enumerate() {
        let (u1, u2, u3, u4) = (w[0], w[1], w[2], w[3]);
        let applicable = vm::dist(u2, c).max(vm::dist(u3, c)) <= r;
        let prev_gap = vm::dist(u1, u2).max(vm::dist(u2, u3));
        let next_gap = vm::dist(u3, u4);
        let ratio = if prev_gap > 0.0 {
            Some(next_gap / prev_gap)
        } else {
            None
        };
        let satisfied = if applicable {
            next_gap <= rho * prev_gap + CHECK_SLACK
        } else {
            true
        };
        if applicable {
            if let Some(rt) = ratio {
                worst = Some(worst.map_or(rt, |w| w.max(rt)));
            }
            if !satisfied {
                verdict = false;
            }
        }
        quadruples.push(QuadrupleCheck {
            index: i,
            applicable,
            satisfied,
            ratio,
        });
    }
    Ok(ContractionReport {
        r,
        rho,
        quadruples,
        verdict,
        worst_ratio: worst,
    })
}

/// Verify the geometric tail bound on a converged orbit: given that the
/// gaps obey `max{gₙ, hₙ} ≤ M·ρⁿ`, the iterates must stay within
/// `M(1+ρ)/(1−ρ)·ρⁿ` of the limit (plus 1e-12 slack).
///
/// Errors if the trajectory did not converge or the gap premise fails on
/// the recorded data.
pub fn tail_bound_check(t: &Trajectory, m: f64, rho: f64) -> Result<bool> {
    let limit = t.limit().ok_or_else(|| {
        Error::PreconditionNotMet("tail bound applies to converged trajectories".into())
    })?;
    if !(0.0..1.0).contains(&rho) {
        return Err(Error::PreconditionNotMet("need ρ ∈ [0, 1)".into()));
    }
    for it in &t.iterates {
        if it.max_gap() > m * rho.powi(it.n as i32) + CHECK_SLACK {
            return Err(Error::PreconditionNotMet(format!(
                "gap premise max{{g,h}} ≤ M·ρⁿ fails at n = {}",
                it.n
            )));
        }
    }
    let coeff = m * (1.0 + rho) / (1.0 - rho);
    Ok(t.iterates.iter().all(|it| {
        let dev = vm::dist(&it.x, limit).max(vm::dist(&it.y, limit));
        dev <= coeff * rho.powi(it.n as i32) + CHECK_SLACK
    }))
}

/// Outcome of the projection-absorbing sampling check.
#[derive(Clone, Debug)]
pub struct AbsorbingReport {
    pub passed: bool,
    /// On failure: the sampled point, its nearest point in A, and the
    /// segment point that left S.
    pub witness: Option<(Point, Point, Point)>,
    pub samples: u64,
    pub seed: u64,
}

/// Sample points `s ∈ S`, project each onto `A`, and test 64 points of
/// every segment `[s, a]` (all nearest points `a`) for membership in `S`.
///
/// A pass is evidence, not proof: the property is "every segment from a
/// point of S to any of its nearest points in A stays in S".
pub fn absorbing_sample_check(
    s: &ClosedSet,
    a: &ClosedSet,
    samples: u64,
    seed: u64,
) -> Result<AbsorbingReport> {
    if samples < 1 {
        return Err(Error::PreconditionNotMet("need at least one sample".into()));
    }
    s.validate()?;
    a.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..samples {
        let p = s.sample_point(&mut rng, 10.0)?;
        let proj = a.project(&p)?;
        for nearest in &proj.nearest {
            for i in 0..64 {
                let t = i as f64 / 63.0;
                let q = vm::lerp(&p, nearest, t);
                if !s.membership(&q, 1e-9)? {
                    return Ok(AbsorbingReport {
                        passed: false,
                        witness: Some((p, nearest.clone(), q)),
                        samples,
                        seed,
                    });
                }
            }
        }
    }
    Ok(AbsorbingReport {
        passed: true,
        witness: None,
        samples,
        seed,
    })
}

/// Render a trajectory as CSV with columns
/// `n, a[0..d), x[0..d), b[0..d), y[0..d), gap_yx, gap_xy_prev`.
///
/// Floats use shortest round-trip formatting (up to 17 significant digits),
/// '.' decimal separator, no locale — replaying the file reproduces the
/// doubles bit-for-bit.
pub fn trajectory_csv(t: &Trajectory) -> String {
    let d = t.start.len();
    let mut out = String::from("n");
    for prefix in ["a", "x", "b", "y"] {
        for i in 0..d {
            out.push_str(&format!(",{prefix}{i}"));
        }
    }
    out.push_str(",gap_yx,gap_xy_prev\n");
    for it in &t.iterates {
        out.push_str(&it.n.to_string());
        for point in [&it.a, &it.x, &it.b, &it.y] {
            for v in point.iter() {
                out.push(',');
                out.push_str(&format!("{v}"));
            }
        }
        out.push_str(&format!(",{},{}\n", it.gap_yx, it.gap_xy_prev));
    }
    out
}

/// Summary of a run as a JSON value (keys sorted, deterministic).
pub fn summary_json(t: &Trajectory, rate_window: usize) -> serde_json::Value {
    let (status, limit, cycle_period) = match &t.status {
        RunStatus::Converged { limit } => ("converged", Some(limit.clone()), None),
        RunStatus::MaxIter => ("max_iter", None, None),
        RunStatus::Cycle { period, .. } => ("cycle", None, Some(*period)),
    };
    let rate = match empirical_rate(t, rate_window) {
        Ok(RateOutcome::Estimate(est)) => serde_json::json!({
            "per_iteration": est.per_iteration,
            "per_half_step": est.per_half_step,
            "r_squared": est.r_squared,
        }),
        Ok(RateOutcome::ExactConvergence) => serde_json::json!("exact_convergence"),
        Err(_) => serde_json::Value::Null,
    };
    let final_gap = t.iterates.last().map(|it| it.max_gap());
    serde_json::json!({
        "status": status,
        "iterations": t.total_iterations,
        "limit": limit,
        "cycle_period": cycle_period,
        "final_gap": final_gap,
        "empirical_rate": rate,
    })
}
