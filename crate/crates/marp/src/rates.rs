//! Certified linear-rate bounds for relaxed alternating projections.
//!
//! Three related quantities, each a supremum over the iteration index of a
//! per-step decay factor built from the damping schedules:
//!
//! * `ρ̂` — gap decay under an angle bound θ between the two constraint
//!   sets near the reference point. Per step,
//!   `ρₙ² = (λₙ₊₁/λₙ)²·(λₙ² + (1−λₙ)² + 2θλₙ(1−λₙ))` (and the μ analogue).
//! * `κ̂` — gap decay when the second set is additionally ε-regular:
//!   `κₙ = (λₙ₊₁/λₙ)·(θλₙ + 2ε + 1 − λₙ)` (and the μ analogue). Requires
//!   the regularity margin `(1−θ)·α∞ > 2ε`.
//! * `η` — the bare schedule-ratio supremum; when η < 1 the gaps decay
//!   geometrically regardless of any angle between the sets.
//!
//! Each computation returns a [`RateCertificate`] carrying the value, the
//! inputs it was derived from, and whether the value is analytically exact
//! or a horizon-truncated numeric supremum.

use crate::error::{Error, Result};
use crate::schedules::{pair_meta, Schedule};
use serde::{Deserialize, Serialize};

/// Break numeric suprema once schedule values dip below this floor:
/// consecutive-term ratios computed from subnormals are no longer faithful.
const RAW_FLOOR: f64 = 1e-300;

/// Which rate a certificate bounds.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RateKind {
    RhoHat,
    KappaHat,
    Eta,
}

/// A computed rate together with the quantities it depends on.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateCertificate {
    pub kind: RateKind,
    /// The rate itself (a supremum; decay is guaranteed only if < 1).
    pub value: f64,
    /// A closed-form upper estimate when one exists for this kind.
    pub upper_bound: Option<f64>,
    /// Angle parameter the rate was computed for (ρ̂, κ̂ only).
    pub theta: Option<f64>,
    /// Regularity parameter (κ̂ only).
    pub eps: Option<f64>,
    /// `α₀ = max{λ₀, μ₀}`.
    pub alpha0: f64,
    /// `α∞ = min{lim λₙ, lim μₙ}`.
    pub alpha_inf: f64,
    /// `η = sup{λₙ₊₁/λₙ, μₙ₊₁/μₙ}`.
    pub sup_ratio: f64,
    /// True when `value` is analytically exact rather than a numeric
    /// supremum truncated at the horizon.
    pub exact: bool,
    /// True iff `value < 1`, i.e. the certificate actually certifies decay.
    pub valid: bool,
}

/// `λ² + (1−λ)² + 2θλ(1−λ)` — the squared single-step gap factor.
fn g_term(lambda: f64, theta: f64) -> f64 {
    lambda * lambda + (1.0 - lambda) * (1.0 - lambda) + 2.0 * theta * lambda * (1.0 - lambda)
}

fn check_theta(theta: f64) -> Result<()> {
    if !(-1.0..=1.0).contains(&theta) {
        return Err(Error::PreconditionNotMet(format!(
            "theta must lie in [-1, 1], got {theta}"
        )));
    }
    Ok(())
}

fn check_horizon(horizon: u64) -> Result<()> {
    if horizon < 1 {
        return Err(Error::PreconditionNotMet("horizon must be ≥ 1".into()));
    }
    Ok(())
}

/// Supremum over one schedule of the ρ̂ per-step factor. Returns
/// `(value, exact)`.
fn sup_rho_term(schedule: &Schedule, theta: f64, horizon: u64) -> Result<(f64, bool)> {
    match schedule {
        Schedule::Constant { value } => Ok((g_term(*value, theta).sqrt(), true)),
        Schedule::Geometric { initial, ratio } if *ratio < 1.0 => {
            // Terms are ratio·√g(λₙ) with λₙ → 0, so g(λₙ) → 1 from below
            // and the supremum is the ratio itself.
            let _ = initial;
            Ok((*ratio, true))
        }
        Schedule::Geometric { initial, ratio } => Ok((g_term(initial * ratio, theta).sqrt(), true)),
        _ => {
            let mut sup: f64 = 0.0;
            let mut prev = schedule.value_raw(0)?;
            for n in 1..=horizon {
                if prev < RAW_FLOOR {
                    break;
                }
                let next = schedule.value_raw(n)?;
                let term = (next / prev) * g_term(prev, theta).sqrt();
                sup = sup.max(term);
                prev = next;
            }
            Ok((sup, false))
        }
    }
}

/// Supremum over one schedule of the κ̂ per-step factor.
fn sup_kappa_term(schedule: &Schedule, theta: f64, eps: f64, horizon: u64) -> Result<(f64, bool)> {
    let lin = |l: f64| theta * l + 2.0 * eps + 1.0 - l;
    match schedule {
        Schedule::Constant { value } => Ok((lin(*value), true)),
        _ => {
            let mut sup: f64 = 0.0;
            let mut prev = schedule.value_raw(0)?;
            for n in 1..=horizon {
                if prev < RAW_FLOOR {
                    break;
                }
                let next = schedule.value_raw(n)?;
                sup = sup.max((next / prev) * lin(prev));
                prev = next;
            }
            Ok((sup, false))
        }
    }
}

/// Gap-decay rate `ρ̂` for a schedule pair under angle bound `theta`.
///
/// The closed-form `upper_bound` is
/// `√(1 − 2(1−θ)·min{α₀(1−α₀), α∞(1−α∞)})`; it equals `value` for constant
/// schedules and is attained in the limit for geometric ones.
pub fn rho_hat(
    lambda: &Schedule,
    mu: &Schedule,
    theta: f64,
    horizon: u64,
) -> Result<RateCertificate> {
    check_theta(theta)?;
    check_horizon(horizon)?;
    lambda.validate()?;
    mu.validate()?;
    let meta = pair_meta(lambda, mu, horizon)?;
    let (vl, el) = sup_rho_term(lambda, theta, horizon)?;
    let (vm, em) = sup_rho_term(mu, theta, horizon)?;
    let value = vl.max(vm);
    let damping = meta.alpha0 * (1.0 - meta.alpha0);
    let damping = damping.min(meta.alpha_inf * (1.0 - meta.alpha_inf));
    let upper = (1.0 - 2.0 * (1.0 - theta) * damping).max(0.0).sqrt();
    Ok(RateCertificate {
        kind: RateKind::RhoHat,
        value,
        upper_bound: Some(upper),
        theta: Some(theta),
        eps: None,
        alpha0: meta.alpha0,
        alpha_inf: meta.alpha_inf,
        sup_ratio: meta.sup_ratio,
        exact: el && em,
        valid: value < 1.0,
    })
}

/// Gap-decay rate `κ̂` when the second set is ε-regular near the reference
/// point. Errors with the regularity margin unless `(1−θ)·α∞ > 2ε`.
///
/// The closed-form `upper_bound` is `1 − ((1−θ)α∞ − 2ε)`.
pub fn kappa_hat(
    lambda: &Schedule,
    mu: &Schedule,
    theta: f64,
    eps: f64,
    horizon: u64,
) -> Result<RateCertificate> {
    check_theta(theta)?;
    check_horizon(horizon)?;
    if eps < 0.0 {
        return Err(Error::PreconditionNotMet(format!(
            "eps must be ≥ 0, got {eps}"
        )));
    }
    lambda.validate()?;
    mu.validate()?;
    let meta = pair_meta(lambda, mu, horizon)?;
    let margin = (1.0 - theta) * meta.alpha_inf - 2.0 * eps;
    if !(margin > 0.0) {
        return Err(Error::PreconditionNotMet(format!(
            "regularity margin violated: need (1 - theta)·alpha_inf > 2·eps, \
             got (1 - {theta})·{} = {} ≤ {}",
            meta.alpha_inf,
            (1.0 - theta) * meta.alpha_inf,
            2.0 * eps
        )));
    }
    let (vl, el) = sup_kappa_term(lambda, theta, eps, horizon)?;
    let (vm, em) = sup_kappa_term(mu, theta, eps, horizon)?;
    let value = vl.max(vm);
    Ok(RateCertificate {
        kind: RateKind::KappaHat,
        value,
        upper_bound: Some(1.0 - margin),
        theta: Some(theta),
        eps: Some(eps),
        alpha0: meta.alpha0,
        alpha_inf: meta.alpha_inf,
        sup_ratio: meta.sup_ratio,
        exact: el && em,
        valid: value < 1.0,
    })
}

/// Ratio supremum `η` of a schedule pair. When `η < 1` (summable damping)
/// the gaps decay like `ηⁿ` with no angle assumption at all.
pub fn eta(lambda: &Schedule, mu: &Schedule, horizon: u64) -> Result<RateCertificate> {
    check_horizon(horizon)?;
    lambda.validate()?;
    mu.validate()?;
    let meta = pair_meta(lambda, mu, horizon)?;
    Ok(RateCertificate {
        kind: RateKind::Eta,
        value: meta.sup_ratio,
        upper_bound: None,
        theta: None,
        eps: None,
        alpha0: meta.alpha0,
        alpha_inf: meta.alpha_inf,
        sup_ratio: meta.sup_ratio,
        exact: meta.exact,
        valid: meta.sup_ratio < 1.0,
    })
}

/// How far from the intersection a start may lie (δ on the distance scale,
/// r on the orbit scale) for the local analysis behind ρ̂ to apply.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StartBound {
    /// `δ = slack·(1−ρ̂)/(1−ρ̂+2α₀(1+α₀))`.
    pub delta: f64,
    /// `r = 2δα₀(1+α₀)/(1−ρ̂)` — the radius the orbit is confined to.
    pub radius: f64,
}

/// Translate an angle-neighborhood slack into a start bound.
pub fn cq_delta(slack: f64, rho_hat: f64, alpha0: f64) -> Result<StartBound> {
    if !(slack > 0.0) {
        return Err(Error::PreconditionNotMet(format!(
            "slack must be > 0, got {slack}"
        )));
    }
    if !(0.0..1.0).contains(&rho_hat) {
        return Err(Error::PreconditionNotMet(format!(
            "rho_hat must lie in [0, 1), got {rho_hat}"
        )));
    }
    check_alpha0(alpha0)?;
    let relax = 2.0 * alpha0 * (1.0 + alpha0);
    let delta = slack * (1.0 - rho_hat) / (1.0 - rho_hat + relax);
    let radius = 2.0 * delta * alpha0 * (1.0 + alpha0) / (1.0 - rho_hat);
    Ok(StartBound { delta, radius })
}

fn check_alpha0(alpha0: f64) -> Result<()> {
    if !(alpha0 > 0.0 && alpha0 <= 1.0) {
        return Err(Error::PreconditionNotMet(format!(
            "alpha0 must lie in (0, 1], got {alpha0}"
        )));
    }
    Ok(())
}

/// Refined per-iteration deviation bound available without relaxation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct UnrelaxedBound {
    pub coefficient: f64,
    /// Squared rate: unrelaxed steps contract twice per iteration.
    pub rate: f64,
}

/// Start ball and per-iteration deviation envelope under a κ̂ certificate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegularityBall {
    /// Starts within this distance of the reference point stay local:
    /// `δ(1−κ̂)/(1−κ̂+2α₀(1+α₀))`.
    pub start_radius: f64,
    /// Deviation from the limit after n iterations is at most
    /// `coefficient · rateⁿ`.
    pub coefficient: f64,
    pub rate: f64,
    /// Sharper envelope when α₀ = 1 exactly.
    pub unrelaxed: Option<UnrelaxedBound>,
}

/// Compute the guaranteed convergence envelope from a κ̂ certificate.
pub fn regularity_ball(delta: f64, kappa_hat: f64, alpha0: f64) -> Result<RegularityBall> {
    if !(delta > 0.0) {
        return Err(Error::PreconditionNotMet(format!(
            "delta must be > 0, got {delta}"
        )));
    }
    if !(0.0..1.0).contains(&kappa_hat) {
        return Err(Error::PreconditionNotMet(format!(
            "kappa_hat must lie in [0, 1), got {kappa_hat}"
        )));
    }
    check_alpha0(alpha0)?;
    let relax = 2.0 * alpha0 * (1.0 + alpha0);
    let denom = 1.0 - kappa_hat + relax;
    let start_radius = delta * (1.0 - kappa_hat) / denom;
    let coefficient = delta * alpha0 * (1.0 + alpha0) * (1.0 + kappa_hat) / denom;
    let unrelaxed = if alpha0 == 1.0 {
        Some(UnrelaxedBound {
            coefficient: 2.0 * delta * (1.0 + kappa_hat * kappa_hat)
                / ((1.0 + kappa_hat) * (5.0 - kappa_hat)),
            rate: kappa_hat * kappa_hat,
        })
    } else {
        None
    };
    Ok(RegularityBall {
        start_radius,
        coefficient,
        rate: kappa_hat,
        unrelaxed,
    })
}

/// Bound on how far the limit can sit from the points where the orbit's
/// projections land when damping is summable (`η < 1`):
/// `2α₀(1+α₀)/(1−η) · max{d_a, d_b}`.
pub fn vanishing_limit_bound(alpha0: f64, eta: f64, d_a: f64, d_b: f64) -> Result<f64> {
    check_alpha0(alpha0)?;
    if !(0.0..1.0).contains(&eta) {
        return Err(Error::PreconditionNotMet(format!(
            "eta must lie in [0, 1), got {eta}"
        )));
    }
    if d_a < 0.0 || d_b < 0.0 {
        return Err(Error::PreconditionNotMet("distances must be ≥ 0".into()));
    }
    Ok(2.0 * alpha0 * (1.0 + alpha0) / (1.0 - eta) * d_a.max(d_b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn constant(v: f64) -> Schedule {
        Schedule::Constant { value: v }
    }

    #[test]
    fn half_damping_rho_hat_closed_form() {
        for theta in [0.0, 0.3, 0.75, (7.0f64 / 8.0).sqrt()] {
            let cert = rho_hat(&constant(0.5), &constant(0.5), theta, 100).unwrap();
            assert_relative_eq!(
                cert.value,
                ((1.0 + theta) / 2.0).sqrt(),
                max_relative = 1e-15
            );
            assert!(cert.exact);
            assert!(cert.valid);
            // Constant schedules attain the closed-form upper bound.
            assert_relative_eq!(cert.value, cert.upper_bound.unwrap(), max_relative = 1e-15);
        }
    }

    #[test]
    fn undamped_rho_hat_is_one() {
        let cert = rho_hat(&constant(1.0), &constant(1.0), 0.5, 100).unwrap();
        assert_eq!(cert.value, 1.0);
        assert!(!cert.valid);
    }

    #[test]
    fn geometric_rho_hat_equals_ratio() {
        let lam = Schedule::Geometric {
            initial: 1.0,
            ratio: 0.9,
        };
        let cert = rho_hat(&lam, &lam, 0.5, 1000).unwrap();
        assert_eq!(cert.value, 0.9);
        assert!(cert.exact);
        assert!(cert.valid);
        assert!(cert.value <= cert.upper_bound.unwrap());
    }

    #[test]
    fn numeric_sup_matches_constant_closed_form() {
        // Route a constant-valued schedule through the numeric path.
        let as_explicit = Schedule::Explicit {
            values: vec![0.4; 5],
            tail: Some(crate::schedules::TailRule::Hold),
        };
        let numeric = sup_rho_term(&as_explicit, 0.6, 200).unwrap().0;
        let analytic = sup_rho_term(&constant(0.4), 0.6, 200).unwrap().0;
        assert_relative_eq!(numeric, analytic, max_relative = 1e-12);
    }

    #[test]
    fn map_kappa_hat_is_theta_plus_two_eps() {
        let cert = kappa_hat(&constant(1.0), &constant(1.0), 0.5, 0.1, 100).unwrap();
        assert_relative_eq!(cert.value, 0.7, max_relative = 1e-15);
        assert_relative_eq!(cert.upper_bound.unwrap(), 0.7, max_relative = 1e-15);
        assert!(cert.valid);
    }

    #[test]
    fn kappa_hat_refuses_thin_margin() {
        let err = kappa_hat(&constant(1.0), &constant(1.0), 0.9, 0.1, 100).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("margin"), "{msg}");
    }

    #[test]
    fn kappa_below_rho_for_constant_schedules() {
        // With ε = 0, the regularity rate beats the plain angle rate
        // strictly: ρ̂² − κ̂² = λ²(1−θ²) > 0.
        for v in [0.1, 0.25, 0.5, 0.75, 0.9, 1.0] {
            for theta in [0.0, 0.25, 0.5, (7.0f64 / 8.0).sqrt()] {
                let k = kappa_hat(&constant(v), &constant(v), theta, 0.0, 50)
                    .unwrap()
                    .value;
                let r = rho_hat(&constant(v), &constant(v), theta, 50)
                    .unwrap()
                    .value;
                assert!(k < r, "v={v} theta={theta}: {k} !< {r}");
            }
        }
    }

    #[test]
    fn map_rate_grid_orderings() {
        for theta in [0.05f64, 0.1, 0.3, 0.5, 0.7, 0.9] {
            for eps in [1e-4, 1e-3, 1e-2] {
                let kappa = theta + 2.0 * eps;
                if kappa >= 1.0 {
                    continue;
                }
                assert!(kappa * kappa < kappa);
                assert!(kappa < ((1.0 + theta) / 2.0).sqrt());
                if theta > kappa * kappa {
                    assert!(kappa < theta.sqrt(), "theta={theta} eps={eps}");
                }
            }
        }
    }

    #[test]
    fn eta_for_explicit_with_geometric_tail() {
        let lam = Schedule::Explicit {
            values: vec![0.8, 0.4, 0.3],
            tail: Some(crate::schedules::TailRule::Geometric { ratio: 0.5 }),
        };
        let cert = eta(&lam, &lam, 100).unwrap();
        assert_relative_eq!(cert.value, 0.75, max_relative = 1e-15);
        assert!(cert.exact);
        assert!(cert.valid);
    }

    #[test]
    fn eta_for_constant_is_one() {
        let cert = eta(&constant(0.5), &constant(0.7), 100).unwrap();
        assert_eq!(cert.value, 1.0);
        assert!(!cert.valid);
    }

    #[test]
    fn start_bound_example() {
        let b = cq_delta(1.0, 0.5, 0.5).unwrap();
        assert_eq!(b.delta, 0.25);
        assert_eq!(b.radius, 0.75);
    }

    #[test]
    fn regularity_ball_example() {
        let ball = regularity_ball(1.0, 0.5, 1.0).unwrap();
        assert_relative_eq!(ball.start_radius, 1.0 / 9.0, max_relative = 1e-15);
        let un = ball.unrelaxed.unwrap();
        assert_eq!(un.rate, 0.25);
        assert_relative_eq!(
            un.coefficient,
            2.0 * 1.25 / (1.5 * 4.5),
            max_relative = 1e-15
        );
    }

    #[test]
    fn relaxed_ball_has_no_unrelaxed_refinement() {
        let ball = regularity_ball(1.0, 0.5, 0.5).unwrap();
        assert!(ball.unrelaxed.is_none());
    }

    #[test]
    fn vanishing_limit_bound_example() {
        let b = vanishing_limit_bound(1.0, 0.9, 2.0, 3.0).unwrap();
        assert_relative_eq!(b, 120.0, max_relative = 1e-12);
    }

    #[test]
    fn invalid_parameters_are_rejected() {
        assert!(rho_hat(&constant(0.5), &constant(0.5), 1.5, 10).is_err());
        assert!(cq_delta(0.0, 0.5, 0.5).is_err());
        assert!(cq_delta(1.0, 1.0, 0.5).is_err());
        assert!(regularity_ball(1.0, 0.5, 0.0).is_err());
        assert!(vanishing_limit_bound(1.0, 1.0, 1.0, 1.0).is_err());
    }
}
