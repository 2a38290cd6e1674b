//! Two-set feasibility solver built on alternating relaxed projections.
//!
//! Given two closed (possibly nonconvex) sets `A` and `B` in d-dimensional
//! Euclidean space and relaxation schedules `λ = (λ₀, λ₁, …)` and
//! `μ = (μ₀, μ₁, …)` with values in `(0, 1]`, the solver iterates from a
//! start point `y₋₁`:
//!
//! ```text
//! aₙ ∈ P_A(yₙ₋₁)      xₙ = (1 − λₙ) yₙ₋₁ + λₙ aₙ
//! bₙ ∈ P_B(xₙ)        yₙ = (1 − μₙ) xₙ + μₙ bₙ
//! ```
//!
//! With `λ = μ ≡ 1` this is the classical method of alternating projections;
//! smaller relaxation parameters damp each step and can steer the orbit away
//! from local cycles that trap the unrelaxed method.
//!
//! The crate provides:
//!
//! - [`geometry`]: an exact, set-valued nearest-point projection for a
//!   catalog of closed sets (finite sets, affine subspaces, half-spaces,
//!   boxes, ball surfaces-and-interiors, rigid transforms of other sets, and
//!   a self-similar sawtooth hypograph used as a worst-case nonconvex pair).
//! - [`schedules`]: relaxation schedules with analytic limits, suprema of
//!   consecutive ratios, and first-value/limit summaries used by the rate
//!   calculators.
//! - [`solver`]: the iteration itself, with tie policies, stopping rules
//!   (gap tolerance / cycle detection / iteration cap), trajectory recording,
//!   and diagnostic checks (empirical rates, contraction-quadruple scans,
//!   tail bounds, absorbing-set sampling, closed-form cross-checks).
//! - [`rates`]: certified contraction factors (`ρ̂`, `κ̂`, `η`) together with
//!   the ball radii and error coefficients of the local and global linear
//!   convergence guarantees they induce.
//! - [`cones`]: restricted proximal normal cones, the joint angle bound
//!   `θ_δ` between two sets near a common point (exact in the plane for the
//!   catalog sets, sampled otherwise), a limiting-angle trend probe, and an
//!   (ε, δ)-regularity probe.
//! - [`cli`]: a command-line front end (`run`, `examples`, `rates`, `cq`,
//!   `sweep`) with JSON configs, CSV trajectories, and deterministic output.
//!
//! All randomness is seeded and reproducible; identical inputs produce
//! byte-identical outputs.

// Guards like `!(delta > 0.0)` are deliberate: they reject NaN along with
// out-of-range values, which `delta <= 0.0` would let through.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod catalog;
pub mod cli;
pub mod cones;
pub mod config;
pub mod error;
pub mod geometry;
pub mod rates;
pub mod schedules;
pub mod solver;
pub mod vecmath;

pub use error::{Error, Result};
pub use geometry::{ClosedSet, Point, ProjectionResult, TiePolicy};
pub use rates::{RateCertificate, RateKind};
pub use schedules::Schedule;
pub use solver::{MarpConfig, RateEstimate, RateOutcome, RunStatus, Trajectory};
