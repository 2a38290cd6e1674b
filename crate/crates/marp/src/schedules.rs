//! Relaxation-parameter schedules.
//!
//! A schedule is a deterministic sequence `(λₙ)` with every value in
//! `(0, 1]`. The solver consumes one value per half-step; the rate
//! calculators consume three summaries: the first value, the analytic limit,
//! and the supremum of consecutive ratios `sup λₙ₊₁/λₙ`.
//!
//! Values are computed from closed forms and clamped into
//! `[f64::MIN_POSITIVE, 1]` before being handed out, because decaying
//! schedules underflow to zero in double precision at large `n` (for example
//! a geometric schedule after a few thousand steps). Analytic metadata is
//! derived from the mathematical definition, never from the clamped stream.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Continuation rule for an [`Schedule::Explicit`] list once it runs out.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum TailRule {
    /// Repeat the last value forever.
    Hold,
    /// Continue geometrically from the last value with the given ratio.
    Geometric { ratio: f64 },
}

/// A relaxation schedule `(λₙ)` with values in `(0, 1]`.
///
/// Serialized as a tagged JSON object: `{"type": "constant", "value": 0.5}`,
/// `{"type": "geometric", "initial": 1.0, "ratio": 0.9}`, and so on.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum Schedule {
    /// `λₙ = value`.
    Constant { value: f64 },
    /// `λₙ = initial · ratioⁿ` with `ratio ∈ (0, 1)`.
    Geometric { initial: f64, ratio: f64 },
    /// `λₙ = limit + (initial − limit) · decayⁿ`, decreasing toward `limit`.
    MonotoneToLimit {
        initial: f64,
        limit: f64,
        decay: f64,
    },
    /// `λₙ = 1 − √((δ + 2⁻⁽ⁿ⁺¹⁾)/(δ + 2⁻ⁿ))`. The damping whose squared
    /// step factors telescope: `∏ᵢ₌₀ⁿ (1 − λᵢ)² = (δ + 2⁻⁽ⁿ⁺¹⁾)/(δ + 1)`,
    /// so an orbit on the half-line freezes strictly short of the set.
    DyadicSqrt { delta: f64 },
    /// `λₙ = 1 − (1 + 2⁻⁽ⁿ⁺¹⁾)/(1 + 2⁻ⁿ) = 2⁻⁽ⁿ⁺¹⁾/(1 + 2⁻ⁿ)`, the
    /// summable damping whose partial products `∏(1 − λᵢ)` converge to ½.
    DyadicRatio,
    /// `λₙ = scale/(n + 2)` — vanishing but nonsummable.
    Harmonic { scale: f64 },
    /// Explicit leading values with an optional continuation rule.
    Explicit {
        values: Vec<f64>,
        #[serde(default)]
        tail: Option<TailRule>,
    },
}

/// Joint metadata of a `(λ, μ)` schedule pair used by the rate bounds.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SchedulePairMeta {
    /// `α₀ = max{λ₀, μ₀}` — the largest first step.
    pub alpha0: f64,
    /// `α∞ = min{λ∞, μ∞}` — the smaller of the two analytic limits.
    pub alpha_inf: f64,
    /// `sup_n max{λₙ₊₁/λₙ, μₙ₊₁/μₙ}`.
    pub sup_ratio: f64,
    /// `true` when every summary is analytic; `false` when any of them is a
    /// numeric supremum over the horizon (unverified tail).
    pub exact: bool,
    /// Horizon used for numeric summaries.
    pub horizon: u64,
}

impl Schedule {
    /// Check parameter ranges.
    pub fn validate(&self) -> Result<()> {
        let in_unit = |v: f64| v > 0.0 && v <= 1.0 && v.is_finite();
        match self {
            Schedule::Constant { value } => {
                if !in_unit(*value) {
                    return Err(Error::InvalidSchedule(format!(
                        "constant value {value} outside (0, 1]"
                    )));
                }
            }
            Schedule::Geometric { initial, ratio } => {
                if !in_unit(*initial) {
                    return Err(Error::InvalidSchedule(format!(
                        "geometric initial {initial} outside (0, 1]"
                    )));
                }
                if !(*ratio > 0.0 && *ratio < 1.0) {
                    return Err(Error::InvalidSchedule(format!(
                        "geometric ratio {ratio} outside (0, 1)"
                    )));
                }
            }
            Schedule::MonotoneToLimit {
                initial,
                limit,
                decay,
            } => {
                if !in_unit(*initial) || !(*limit >= 0.0 && limit <= initial) {
                    return Err(Error::InvalidSchedule(
                        "monotone_to_limit needs 0 ≤ limit ≤ initial ≤ 1, initial > 0".into(),
                    ));
                }
                if !(*decay > 0.0 && *decay < 1.0) {
                    return Err(Error::InvalidSchedule(format!(
                        "monotone decay {decay} outside (0, 1)"
                    )));
                }
            }
            Schedule::DyadicSqrt { delta } => {
                if !(*delta > 0.0 && delta.is_finite()) {
                    return Err(Error::InvalidSchedule(format!(
                        "dyadic_sqrt delta {delta} must be positive"
                    )));
                }
            }
            Schedule::DyadicRatio => {}
            Schedule::Harmonic { scale } => {
                if !in_unit(*scale) {
                    return Err(Error::InvalidSchedule(format!(
                        "harmonic scale {scale} outside (0, 1]"
                    )));
                }
            }
            Schedule::Explicit { values, tail } => {
                if values.is_empty() {
                    return Err(Error::InvalidSchedule("explicit list is empty".into()));
                }
                if let Some(bad) = values.iter().find(|v| !in_unit(**v)) {
                    return Err(Error::InvalidSchedule(format!(
                        "explicit value {bad} outside (0, 1]"
                    )));
                }
                if let Some(TailRule::Geometric { ratio }) = tail {
                    if !(*ratio > 0.0 && *ratio < 1.0) {
                        return Err(Error::InvalidSchedule(format!(
                            "tail ratio {ratio} outside (0, 1)"
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    /// Mathematical value of `λₙ` before the positivity clamp; may underflow
    /// to exactly 0 in double precision. Used for ratio suprema.
    pub(crate) fn value_raw(&self, n: u64) -> Result<f64> {
        let pow2_neg = |e: u64| -> f64 {
            if e > 1100 {
                0.0
            } else {
                2f64.powi(-(e as i32))
            }
        };
        Ok(match self {
            Schedule::Constant { value } => *value,
            Schedule::Geometric { initial, ratio } => initial * powi_saturating(*ratio, n),
            Schedule::MonotoneToLimit {
                initial,
                limit,
                decay,
            } => limit + (initial - limit) * powi_saturating(*decay, n),
            Schedule::DyadicSqrt { delta } => {
                1.0 - ((delta + pow2_neg(n + 1)) / (delta + pow2_neg(n))).sqrt()
            }
            Schedule::DyadicRatio => pow2_neg(n + 1) / (1.0 + pow2_neg(n)),
            Schedule::Harmonic { scale } => scale / (n as f64 + 2.0),
            Schedule::Explicit { values, tail } => {
                if (n as usize) < values.len() {
                    values[n as usize]
                } else {
                    let last = *values.last().expect("validated nonempty");
                    match tail {
                        None => {
                            return Err(Error::InvalidSchedule(format!(
                                "explicit schedule exhausted at n = {n} (length {}, no tail rule)",
                                values.len()
                            )))
                        }
                        Some(TailRule::Hold) => last,
                        Some(TailRule::Geometric { ratio }) => {
                            last * powi_saturating(*ratio, n + 1 - values.len() as u64)
                        }
                    }
                }
            }
        })
    }

    /// `λₙ`, clamped into `[f64::MIN_POSITIVE, 1]` so the emitted stream
    /// always satisfies the `(0, 1]` contract.
    pub fn value(&self, n: u64) -> Result<f64> {
        Ok(self.value_raw(n)?.clamp(f64::MIN_POSITIVE, 1.0))
    }

    /// First emitted value `λ₀`.
    pub fn first(&self) -> Result<f64> {
        self.value(0)
    }

    /// Analytic limit `λ∞ = lim λₙ` and whether it is exact.
    ///
    /// An explicit list without a tail rule has no infinite tail; its last
    /// value is reported with `exact = false`.
    pub fn analytic_limit(&self) -> (f64, bool) {
        match self {
            Schedule::Constant { value } => (*value, true),
            Schedule::Geometric { .. } => (0.0, true),
            Schedule::MonotoneToLimit { limit, .. } => (*limit, true),
            Schedule::DyadicSqrt { .. } => (0.0, true),
            Schedule::DyadicRatio => (0.0, true),
            Schedule::Harmonic { .. } => (0.0, true),
            Schedule::Explicit { values, tail } => {
                let last = *values.last().expect("validated nonempty");
                match tail {
                    None => (last, false),
                    Some(TailRule::Hold) => (last, true),
                    Some(TailRule::Geometric { .. }) => (0.0, true),
                }
            }
        }
    }

    /// `sup_n λₙ₊₁/λₙ` and whether the value is analytic.
    ///
    /// Analytic cases: constants (1), geometric (its ratio), monotone-to-
    /// positive-limit (ratios increase to 1), dyadic-ratio (consecutive
    /// ratios `½·(1+2⁻ⁿ)/(1+2⁻⁽ⁿ⁺¹⁾)` decrease, so the supremum is the
    /// first ratio 2/3), and explicit lists (finite max plus the tail rule).
    /// The square-root damping and harmonic schedules report a numeric
    /// supremum over the horizon — for harmonic the ratios increase to 1,
    /// so the reported value is a strict lower bound flagged inexact.
    pub fn sup_ratio(&self, horizon: u64) -> Result<(f64, bool)> {
        Ok(match self {
            Schedule::Constant { .. } => (1.0, true),
            Schedule::Geometric { ratio, .. } => (*ratio, true),
            Schedule::MonotoneToLimit { limit, decay, .. } => {
                if *limit > 0.0 {
                    (1.0, true)
                } else {
                    (*decay, true)
                }
            }
            Schedule::DyadicRatio => (2.0 / 3.0, true),
            Schedule::DyadicSqrt { .. } => {
                let mut sup = 0.0f64;
                let mut prev = self.value_raw(0)?;
                for n in 1..=horizon.min(400) {
                    let cur = self.value_raw(n)?;
                    if !(prev > 1e-300) {
                        break;
                    }
                    sup = sup.max(cur / prev);
                    prev = cur;
                }
                (sup, false)
            }
            Schedule::Harmonic { .. } => {
                let h = horizon.max(1) as f64;
                ((h + 2.0) / (h + 3.0), false)
            }
            Schedule::Explicit { values, tail } => {
                let mut sup = f64::NEG_INFINITY;
                for pair in values.windows(2) {
                    sup = sup.max(pair[1] / pair[0]);
                }
                match tail {
                    None => {}
                    Some(TailRule::Hold) => sup = sup.max(1.0),
                    Some(TailRule::Geometric { ratio }) => sup = sup.max(*ratio),
                }
                if sup == f64::NEG_INFINITY {
                    // Single value, no tail: no consecutive pair exists.
                    sup = 1.0;
                }
                (sup, true)
            }
        })
    }
}

/// `base^n` for `u64` exponents, flushing to 0 once the result underflows.
fn powi_saturating(base: f64, n: u64) -> f64 {
    if n > i32::MAX as u64 {
        return 0.0;
    }
    base.powi(n as i32)
}

/// Joint `(λ, μ)` summary: `α₀`, `α∞`, and the ratio supremum, with a single
/// exactness flag covering all numeric parts.
pub fn pair_meta(lambda: &Schedule, mu: &Schedule, horizon: u64) -> Result<SchedulePairMeta> {
    if horizon < 1 {
        return Err(Error::InvalidSchedule("horizon must be ≥ 1".into()));
    }
    let (ll, ll_exact) = lambda.analytic_limit();
    let (ml, ml_exact) = mu.analytic_limit();
    let (lr, lr_exact) = lambda.sup_ratio(horizon)?;
    let (mr, mr_exact) = mu.sup_ratio(horizon)?;
    Ok(SchedulePairMeta {
        alpha0: lambda.first()?.max(mu.first()?),
        alpha_inf: ll.min(ml),
        sup_ratio: lr.max(mr),
        exact: ll_exact && ml_exact && lr_exact && mr_exact,
        horizon,
    })
}
