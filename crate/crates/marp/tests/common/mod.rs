//! Seeded generators shared by the integration-test targets.
//!
//! Every generator takes an explicit RNG so each test fixes its own seed and
//! reproduces bit-for-bit. Shapes and parameter ranges are chosen to keep
//! all generated objects valid (schedules in (0,1], orthonormal bases, …).

#![allow(dead_code)]

use marp::geometry::{reflection_about_line, ClosedSet, Point};
use marp::schedules::{Schedule, TailRule};
use marp::vecmath as vm;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_point(rng: &mut ChaCha8Rng, d: usize, scale: f64) -> Point {
    (0..d).map(|_| rng.gen_range(-scale..=scale)).collect()
}

/// Gram–Schmidt over `raw`; `None` when the vectors are near-dependent.
pub fn orthonormalize(raw: &[Vec<f64>]) -> Option<Vec<Vec<f64>>> {
    let mut dirs: Vec<Vec<f64>> = Vec::new();
    for v in raw {
        let mut u = v.clone();
        for w in &dirs {
            u = vm::sub(&u, &vm::scale(w, vm::dot(&u, w)));
        }
        let n = vm::norm(&u);
        if n < 1e-6 {
            return None;
        }
        dirs.push(vm::scale(&u, 1.0 / n));
    }
    Some(dirs)
}

/// `k` random orthonormal directions in dimension `d` (retries degeneracy).
pub fn orthonormal_directions(rng: &mut ChaCha8Rng, d: usize, k: usize) -> Vec<Vec<f64>> {
    loop {
        let raw: Vec<Vec<f64>> = (0..k).map(|_| random_point(rng, d, 1.0)).collect();
        if let Some(dirs) = orthonormalize(&raw) {
            return dirs;
        }
    }
}

pub fn random_unit(rng: &mut ChaCha8Rng, d: usize) -> Point {
    orthonormal_directions(rng, d, 1).remove(0)
}

/// Counterclockwise rotation by `angle` (2-D).
pub fn rotation_matrix(angle: f64) -> Vec<Vec<f64>> {
    let (s, c) = angle.sin_cos();
    vec![vec![c, -s], vec![s, c]]
}

fn random_finite(rng: &mut ChaCha8Rng, d: usize, scale: f64) -> ClosedSet {
    let m = rng.gen_range(1..=5);
    ClosedSet::Finite {
        points: (0..m).map(|_| random_point(rng, d, scale)).collect(),
    }
}

fn random_box(rng: &mut ChaCha8Rng, d: usize, scale: f64) -> ClosedSet {
    let lower = random_point(rng, d, scale);
    let upper: Vec<Option<f64>> = lower
        .iter()
        .map(|l| Some(l + rng.gen_range(0.1..=scale)))
        .collect();
    ClosedSet::BoxSet {
        lower: lower.into_iter().map(Some).collect(),
        upper,
    }
}

fn random_ball(rng: &mut ChaCha8Rng, d: usize, scale: f64) -> ClosedSet {
    ClosedSet::Ball {
        center: random_point(rng, d, scale),
        radius: rng.gen_range(0.2..=scale.max(0.4)),
    }
}

fn random_affine(rng: &mut ChaCha8Rng, d: usize, scale: f64) -> ClosedSet {
    let k = rng.gen_range(1..=d);
    ClosedSet::Affine {
        base: random_point(rng, d, scale),
        directions: orthonormal_directions(rng, d, k),
    }
}

fn random_half_space(rng: &mut ChaCha8Rng, d: usize, scale: f64) -> ClosedSet {
    ClosedSet::HalfSpace {
        normal: random_unit(rng, d),
        offset: rng.gen_range(-scale..=scale),
    }
}

/// A random isometry wrapper around a bounded inner set (2-D only).
fn random_transformed(rng: &mut ChaCha8Rng, scale: f64) -> ClosedSet {
    let inner = match rng.gen_range(0..3) {
        0 => random_finite(rng, 2, scale),
        1 => random_box(rng, 2, scale),
        _ => random_ball(rng, 2, scale),
    };
    let angle = rng.gen_range(0.0..std::f64::consts::TAU);
    let rotation = if rng.gen_bool(0.5) {
        rotation_matrix(angle)
    } else {
        reflection_about_line(angle / 2.0)
    };
    ClosedSet::Transformed {
        inner: Box::new(inner),
        rotation,
        translation: random_point(rng, 2, scale),
    }
}

/// Any supported variant; isometry wrappers and the sawtooth only appear in
/// dimension 2.
pub fn random_set(rng: &mut ChaCha8Rng, d: usize) -> ClosedSet {
    let scale = 4.0;
    let n_variants = if d == 2 { 7 } else { 5 };
    match rng.gen_range(0..n_variants) {
        0 => random_finite(rng, d, scale),
        1 => random_affine(rng, d, scale),
        2 => random_half_space(rng, d, scale),
        3 => random_box(rng, d, scale),
        4 => random_ball(rng, d, scale),
        5 => random_transformed(rng, scale),
        _ => ClosedSet::Sawtooth { k_max: 60 },
    }
}

/// Bounded variants only (finite / box / ball) — for absorbing-set checks
/// where the orbit must stay inside an enclosing box.
pub fn random_bounded_set(rng: &mut ChaCha8Rng, d: usize, scale: f64) -> ClosedSet {
    match rng.gen_range(0..3) {
        0 => random_finite(rng, d, scale),
        1 => random_box(rng, d, scale),
        _ => random_ball(rng, d, scale),
    }
}

/// Variants the exact planar cone enumeration supports: finite, affine,
/// half-space, sawtooth, and rigid transforms of finite sets.
pub fn random_cq_set(rng: &mut ChaCha8Rng) -> ClosedSet {
    let scale = 2.0;
    match rng.gen_range(0..5) {
        0 => random_finite(rng, 2, scale),
        1 => random_affine(rng, 2, scale),
        2 => random_half_space(rng, 2, scale),
        3 => ClosedSet::Transformed {
            inner: Box::new(random_finite(rng, 2, scale)),
            rotation: rotation_matrix(rng.gen_range(0.0..std::f64::consts::TAU)),
            translation: random_point(rng, 2, scale),
        },
        _ => ClosedSet::Sawtooth { k_max: 60 },
    }
}

/// A valid random schedule; `Explicit` lists always carry a tail rule so
/// every index is defined.
pub fn random_schedule(rng: &mut ChaCha8Rng) -> Schedule {
    match rng.gen_range(0..7) {
        0 => Schedule::Constant {
            value: rng.gen_range(0.05..=1.0),
        },
        1 => Schedule::Geometric {
            initial: rng.gen_range(0.05..=1.0),
            ratio: rng.gen_range(0.5..=0.99),
        },
        2 => {
            let initial = rng.gen_range(0.3..=1.0);
            Schedule::MonotoneToLimit {
                initial,
                limit: rng.gen_range(0.05..=initial),
                decay: rng.gen_range(0.3..=0.95),
            }
        }
        3 => Schedule::DyadicSqrt {
            delta: rng.gen_range(0.1..=2.0),
        },
        4 => Schedule::DyadicRatio,
        5 => Schedule::Harmonic {
            scale: rng.gen_range(0.1..=1.0),
        },
        _ => {
            let m = rng.gen_range(1..=4);
            let values = (0..m).map(|_| rng.gen_range(0.05..=1.0)).collect();
            let tail = if rng.gen_bool(0.5) {
                TailRule::Hold
            } else {
                TailRule::Geometric {
                    ratio: rng.gen_range(0.5..=0.99),
                }
            };
            Schedule::Explicit {
                values,
                tail: Some(tail),
            }
        }
    }
}
