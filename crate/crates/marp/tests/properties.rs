//! Property-based invariant suites for sets, schedules, and the driver.
//!
//! Each case draws a seed and derives its sets, points, and schedules from
//! it through the generators in `common`, so a failure reproduces from the
//! printed seed alone.

mod common;

use common::{
    random_bounded_set, random_cq_set, random_point, random_schedule, random_set, rng,
    rotation_matrix,
};
use marp::cones::{cq_number, CqMethod};
use marp::geometry::{relaxed_project, transform_set, ClosedSet, TiePolicy};
use marp::schedules::Schedule;
use marp::solver::{self, MarpConfig, RunStatus};
use marp::vecmath as vm;
use proptest::prelude::*;
use rand::Rng;

/// Relative tolerance around a magnitude.
fn rel(tol: f64, magnitude: f64) -> f64 {
    tol * (1.0 + magnitude)
}

/// `λ² + (1−λ)² + 2θλ(1−λ)` — squared per-step gap factor.
fn gap_factor(alpha: f64, theta: f64) -> f64 {
    (alpha * alpha + (1.0 - alpha) * (1.0 - alpha) + 2.0 * theta * alpha * (1.0 - alpha)).sqrt()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    /// Projection results are members, mutually equidistant from the query,
    /// and fixed points of the projector.
    #[test]
    fn projections_are_members_equidistant_and_idempotent(
        seed in any::<u64>(),
        d in 1usize..=3,
    ) {
        let mut rng = rng(seed);
        let set = random_set(&mut rng, d);
        let q = random_point(&mut rng, d, 8.0);
        let res = set.project(&q).unwrap();
        prop_assert!(res.distance.is_finite() && res.distance >= 0.0);
        prop_assert!(!res.nearest.is_empty());
        for p in &res.nearest {
            prop_assert!(set.membership(p, 1e-9).unwrap());
            prop_assert!((vm::dist(p, &q) - res.distance).abs() <= rel(1e-9, vm::norm(&q)));
        }
        for p in res.nearest.iter().take(3) {
            let back = set.project(p).unwrap();
            prop_assert!(back.distance <= rel(1e-12, vm::norm(p)));
            for r in &back.nearest {
                prop_assert!(vm::dist(r, p) <= rel(1e-9, vm::norm(p)));
            }
            // The sawtooth's teeth accumulate, so only there can a member's
            // re-projection legitimately enumerate sub-rounding ties.
            if !matches!(set, ClosedSet::Sawtooth { .. }) {
                prop_assert_eq!(back.nearest.len(), 1);
            }
        }
    }

    /// The three step identities of a relaxed projection: `‖x−y‖ = λ·d(y)`,
    /// `λ(x−a) = (1−λ)(y−x)`, and `x` re-projects to exactly its own `a`.
    #[test]
    fn relaxed_steps_satisfy_the_step_identities(
        seed in any::<u64>(),
        lambda in 0.01f64..=1.0,
        d in 1usize..=3,
    ) {
        let mut rng = rng(seed);
        let set = random_set(&mut rng, d);
        let y = random_point(&mut rng, d, 8.0);
        let dist = set.distance(&y).unwrap();
        let (x, a) = relaxed_project(&set, &y, lambda, TiePolicy::LexMin, None).unwrap();
        prop_assert!((vm::dist(&x, &y) - lambda * dist).abs() <= rel(1e-12, dist));
        for i in 0..d {
            let lhs = lambda * (x[i] - a[i]);
            let rhs = (1.0 - lambda) * (y[i] - x[i]);
            prop_assert!((lhs - rhs).abs() <= rel(1e-12, lhs.abs().max(rhs.abs())));
        }
        let back = set.project(&x).unwrap();
        for p in &back.nearest {
            prop_assert!(vm::dist(p, &a) <= rel(1e-9, vm::norm(&a)));
        }
        if !matches!(set, ClosedSet::Sawtooth { .. }) {
            prop_assert_eq!(back.nearest.len(), 1);
        }
    }

    /// `|d_S(p) − d_S(q)| ≤ ‖p−q‖` for every variant.
    #[test]
    fn distance_is_nonexpansive(seed in any::<u64>(), d in 1usize..=3) {
        let mut rng = rng(seed);
        let set = random_set(&mut rng, d);
        let p = random_point(&mut rng, d, 8.0);
        let q = random_point(&mut rng, d, 8.0);
        let dp = set.distance(&p).unwrap();
        let dq = set.distance(&q).unwrap();
        prop_assert!((dp - dq).abs() <= vm::dist(&p, &q) * (1.0 + 1e-9) + 1e-12);
    }

    /// Emitted schedule values live in (0, 1]; the first value is `value(0)`;
    /// closed-form decaying variants never increase.
    #[test]
    fn schedule_values_stay_in_range_and_decay_monotonically(
        seed in any::<u64>(),
        n in 0u64..10_000,
    ) {
        let mut rng = rng(seed);
        let s = random_schedule(&mut rng);
        let v = s.value(n).unwrap();
        prop_assert!(v > 0.0 && v <= 1.0);
        prop_assert_eq!(s.first().unwrap(), s.value(0).unwrap());
        let monotone = !matches!(s, Schedule::Explicit { .. });
        if monotone {
            let next = s.value(n + 1).unwrap();
            prop_assert!(next <= v * (1.0 + 1e-12) + 1e-15);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    /// First-step bounds: `h₀ = λ₀·d_A(y₋₁)` exactly, and both initial gaps
    /// are controlled by `α₀(1+α₀)·max{d_A(y₋₁), d_B(y₋₁)}`.
    #[test]
    fn first_step_obeys_the_initial_gap_bounds(seed in any::<u64>(), d in 1usize..=3) {
        let mut rng = rng(seed);
        let set_a = random_set(&mut rng, d);
        let set_b = random_set(&mut rng, d);
        let start = random_point(&mut rng, d, 6.0);
        let lambda = random_schedule(&mut rng);
        let mu = random_schedule(&mut rng);
        let d_a = set_a.distance(&start).unwrap();
        let d_b = set_b.distance(&start).unwrap();
        let alpha0 = lambda.first().unwrap().max(mu.first().unwrap());
        let mut cfg = MarpConfig::new(set_a, set_b, lambda.clone(), mu, start.clone());
        cfg.max_iter = 1;
        cfg.gap_tol = 1e-300;
        let t = solver::run(&cfg).unwrap();
        let it = &t.iterates[0];
        let h0 = it.gap_xy_prev;
        let g0 = it.gap_yx;
        prop_assert!((h0 - lambda.first().unwrap() * d_a).abs() <= rel(1e-12, d_a));
        let bound = alpha0 * (1.0 + alpha0) * d_a.max(d_b);
        prop_assert!(g0.max(h0) <= bound * (1.0 + 1e-9) + 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    /// Projections of an isometry-wrapped set are the isometry images of the
    /// inner set's projections at the pulled-back query.
    #[test]
    fn isometry_wrappers_are_equivariant(seed in any::<u64>()) {
        let mut rng = rng(seed);
        let inner = random_bounded_set(&mut rng, 2, 4.0);
        let angle = rng.gen_range(0.0..std::f64::consts::TAU);
        let rotation = if rng.gen_bool(0.5) {
            rotation_matrix(angle)
        } else {
            marp::geometry::reflection_about_line(angle / 2.0)
        };
        let translation = random_point(&mut rng, 2, 4.0);
        let outer =
            transform_set(inner.clone(), rotation.clone(), translation.clone()).unwrap();
        let q = random_point(&mut rng, 2, 8.0);
        let local = vm::mat_t_vec(&rotation, &vm::sub(&q, &translation));
        let inner_res = inner.project(&local).unwrap();
        let outer_res = outer.project(&q).unwrap();
        prop_assert!(
            (inner_res.distance - outer_res.distance).abs()
                <= rel(1e-12, inner_res.distance)
        );
        prop_assert_eq!(inner_res.nearest.len(), outer_res.nearest.len());
        for p in &inner_res.nearest {
            let image = vm::add(&vm::mat_vec(&rotation, p), &translation);
            let matched = outer_res
                .nearest
                .iter()
                .any(|r| vm::dist(r, &image) <= rel(1e-9, vm::norm(&image)));
            prop_assert!(matched);
        }
    }

    /// With λ = μ ≡ 1 the relaxed steps degenerate: `xₙ = aₙ` and `yₙ = bₙ`
    /// bitwise on every recorded iterate.
    #[test]
    fn unit_relaxation_reduces_to_plain_alternating_projections(
        seed in any::<u64>(),
        d in 1usize..=3,
    ) {
        let mut rng = rng(seed);
        let one = Schedule::Constant { value: 1.0 };
        let mut cfg = MarpConfig::new(
            random_set(&mut rng, d),
            random_set(&mut rng, d),
            one.clone(),
            one,
            random_point(&mut rng, d, 6.0),
        );
        cfg.max_iter = 30;
        let t = solver::run(&cfg).unwrap();
        for it in &t.iterates {
            prop_assert_eq!(&it.x, &it.a);
            prop_assert_eq!(&it.y, &it.b);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    /// Recorded iterates satisfy the update algebra, the stored gaps match
    /// their points, and the two gap-recursion bounds hold with the realized
    /// inner-product angle of each step.
    #[test]
    fn recorded_orbits_satisfy_update_algebra_and_gap_recursions(
        seed in any::<u64>(),
        d in 1usize..=3,
    ) {
        let mut rng = rng(seed);
        let lambda = random_schedule(&mut rng);
        let mu = random_schedule(&mut rng);
        let mut cfg = MarpConfig::new(
            random_set(&mut rng, d),
            random_set(&mut rng, d),
            lambda.clone(),
            mu.clone(),
            random_point(&mut rng, d, 6.0),
        );
        cfg.max_iter = 25;
        cfg.gap_tol = 1e-13;
        let t = solver::run(&cfg).unwrap();

        let mut prev_y = t.start.clone();
        for it in &t.iterates {
            let l = lambda.value(it.n).unwrap();
            let m = mu.value(it.n).unwrap();
            for (i, &py) in prev_y.iter().enumerate() {
                let x_expect = (1.0 - l) * py + l * it.a[i];
                prop_assert!(
                    (it.x[i] - x_expect).abs() <= rel(1e-12, x_expect.abs())
                );
                let y_expect = (1.0 - m) * it.x[i] + m * it.b[i];
                prop_assert!(
                    (it.y[i] - y_expect).abs() <= rel(1e-12, y_expect.abs())
                );
            }
            prop_assert!(
                (it.gap_yx - vm::dist(&it.y, &it.x)).abs() <= rel(1e-12, it.gap_yx)
            );
            prop_assert!(
                (it.gap_xy_prev - vm::dist(&it.x, &prev_y)).abs()
                    <= rel(1e-12, it.gap_xy_prev)
            );
            prev_y = it.y.clone();
        }

        // Gap recursions across consecutive iterates, with θ realized from
        // the recorded points (clamped into [0, 1]).
        let mut prev_y = t.start.clone();
        for w in t.iterates.windows(2) {
            let (it, next) = (&w[0], &w[1]);
            if next.n == it.n + 1 {
                let g = it.gap_yx;
                let h = it.gap_xy_prev;
                let l_n = lambda.value(it.n).unwrap();
                let l_next = lambda.value(next.n).unwrap();
                if g > 1e-12 && h > 1e-12 {
                    let nip = vm::dot(&vm::sub(&it.y, &it.x), &vm::sub(&prev_y, &it.x))
                        / (g * h);
                    let theta = nip.clamp(0.0, 1.0);
                    let factor = (l_next / l_n) * gap_factor(l_n, theta);
                    prop_assert!(
                        next.gap_xy_prev <= factor * g.max(h) * (1.0 + 1e-9) + 1e-12
                    );
                }
                let h_next = next.gap_xy_prev;
                let m_n = mu.value(it.n).unwrap();
                let m_next = mu.value(next.n).unwrap();
                if h_next > 1e-12 && g > 1e-12 {
                    let nip = vm::dot(
                        &vm::sub(&next.x, &it.y),
                        &vm::sub(&it.x, &it.y),
                    ) / (h_next * g);
                    let theta = nip.clamp(0.0, 1.0);
                    let factor = (m_next / m_n) * gap_factor(m_n, theta);
                    prop_assert!(
                        next.gap_yx <= factor * h_next.max(g) * (1.0 + 1e-9) + 1e-12
                    );
                }
            }
            prev_y = it.y.clone();
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(150))]

    /// When both schedules have positive limits and a run converges, the
    /// limit belongs to both sets at ten times the gap tolerance.
    #[test]
    fn convergent_runs_with_positive_limits_land_in_both_sets(
        seed in any::<u64>(),
        d in 1usize..=3,
        lambda in 0.3f64..=1.0,
        mu in 0.3f64..=1.0,
    ) {
        let mut rng = rng(seed);
        let set_a = random_set(&mut rng, d);
        let set_b = random_set(&mut rng, d);
        let mut cfg = MarpConfig::new(
            set_a.clone(),
            set_b.clone(),
            Schedule::Constant { value: lambda },
            Schedule::Constant { value: mu },
            random_point(&mut rng, d, 5.0),
        );
        cfg.max_iter = 2_000;
        let t = solver::run(&cfg).unwrap();
        if let RunStatus::Converged { limit } = &t.status {
            prop_assert!(set_a.membership(limit, 10.0 * cfg.gap_tol).unwrap());
            prop_assert!(set_b.membership(limit, 10.0 * cfg.gap_tol).unwrap());
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    /// A box that encloses both target sets passes the absorbing sampler,
    /// and orbits started inside it never leave it.
    #[test]
    fn orbits_stay_inside_an_absorbing_box(seed in any::<u64>(), d in 1usize..=3) {
        let mut rng = rng(seed);
        let set_a = random_bounded_set(&mut rng, d, 5.0);
        let set_b = random_bounded_set(&mut rng, d, 5.0);
        let enclosing = ClosedSet::BoxSet {
            lower: vec![Some(-20.0); d],
            upper: vec![Some(20.0); d],
        };
        let check_a =
            solver::absorbing_sample_check(&enclosing, &set_a, 40, seed).unwrap();
        let check_b =
            solver::absorbing_sample_check(&enclosing, &set_b, 40, seed ^ 1).unwrap();
        prop_assert!(check_a.passed && check_b.passed);

        let mut cfg = MarpConfig::new(
            set_a,
            set_b,
            random_schedule(&mut rng),
            random_schedule(&mut rng),
            random_point(&mut rng, d, 10.0),
        );
        cfg.max_iter = 40;
        let t = solver::run(&cfg).unwrap();
        for it in &t.iterates {
            prop_assert!(enclosing.membership(&it.x, 1e-9).unwrap());
            prop_assert!(enclosing.membership(&it.y, 1e-9).unwrap());
        }
    }

    /// The planar joint-angle number is monotone in the neighborhood radius
    /// and invariant under moving the whole configuration by an isometry.
    #[test]
    fn planar_cq_number_is_monotone_and_isometry_invariant(
        seed in any::<u64>(),
        delta in 0.2f64..=1.5,
        growth in 1.0f64..=3.0,
        angle in 0.0f64..=6.2,
    ) {
        let mut rng = rng(seed);
        let set_a = random_cq_set(&mut rng);
        let b_raw = random_cq_set(&mut rng);
        // Anchor the configuration: c lies on A, and B is shifted to pass
        // through c, so both sets have cone base points near c.
        let probe = random_point(&mut rng, 2, 2.0);
        let c = set_a
            .project(&probe)
            .unwrap()
            .nearest
            .into_iter()
            .next()
            .unwrap();
        let touch_b = b_raw
            .project(&c)
            .unwrap()
            .nearest
            .into_iter()
            .next()
            .unwrap();
        let set_b = transform_set(b_raw, rotation_matrix(0.0), vm::sub(&c, &touch_b)).unwrap();
        let whole = ClosedSet::whole_space(2);
        let theta = |a: &ClosedSet, b: &ClosedSet, c: &[f64], d: f64| -> f64 {
            cq_number(a, &whole, b, &whole, c, d, CqMethod::Exact2d)
                .unwrap()
                .theta_delta
        };

        let t1 = theta(&set_a, &set_b, &c, delta);
        let t2 = theta(&set_a, &set_b, &c, delta * growth);
        prop_assert!((0.0..=1.0).contains(&t1) && (0.0..=1.0).contains(&t2));
        prop_assert!(t1 <= t2 + 1e-9);

        let shift = random_point(&mut rng, 2, 3.0);
        let identity = rotation_matrix(0.0);
        let a_shifted =
            transform_set(set_a.clone(), identity.clone(), shift.clone()).unwrap();
        let b_shifted = transform_set(set_b.clone(), identity, shift.clone()).unwrap();
        let t_shifted = theta(&a_shifted, &b_shifted, &vm::add(&c, &shift), delta);
        prop_assert!((t_shifted - t1).abs() <= 1e-9);

        let rot = rotation_matrix(angle);
        let a_rot = transform_set(set_a, rot.clone(), vec![0.0, 0.0]).unwrap();
        let b_rot = transform_set(set_b, rot.clone(), vec![0.0, 0.0]).unwrap();
        let t_rot = theta(&a_rot, &b_rot, &vm::mat_vec(&rot, &c), delta);
        prop_assert!((t_rot - t1).abs() <= 1e-9);
    }
}
