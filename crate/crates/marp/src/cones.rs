//! Proximal normal directions, restricted to generators from a second set,
//! and the joint angle number they induce.
//!
//! A unit vector `u` is a proximal normal of `A` at `a ∈ A` restricted to
//! `B̃` when some generator `z ∈ B̃` has `a` among its nearest points in `A`
//! and `u ∥ (z − a)`. The *CQ number* `θ_δ` at a common point `c` is the
//! largest inner product between such a direction for `A` (base point
//! within `δ` of `c`, generators from `B̃`) and the negative of one for `B`
//! (generators from `Ã`). Both cones contain the zero vector, so
//! `θ_δ ∈ [0, 1]`; values strictly below 1 as `δ ↓ 0` are the transversality
//! condition under which damped alternating projections converge locally.
//!
//! Two computation methods:
//!
//! * **Exact (planar)** — closed-form angular intervals for the catalog
//!   sets. Finite-set sides with finite restrictions are enumerated
//!   generator-by-generator; other sides use the unrestricted proximal
//!   cone, a sound upper bound that is tight for the catalog scenarios.
//! * **Sampled** — seeded sampling of generators from the restriction
//!   sets; every reported direction comes from an actual nearest-point
//!   computation, so the sampled value can only under-approximate the
//!   exact one (up to tie tolerance).

use crate::error::{Error, Result};
use crate::geometry::{self, ClosedSet, Point};
use crate::vecmath as vm;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_PI_2, PI, TAU};

/// Adjacent angular intervals closer than this merge into one.
const ANGLE_MERGE_TOL: f64 = 1e-9;

/// Relative tie tolerance when testing whether a base point is among a
/// generator's nearest points.
const QUALIFY_TOL: f64 = 1e-9;

/// Relative floor below which a generator sits on the set itself and
/// contributes no direction.
const DIRECTION_FLOOR: f64 = 1e-12;

/// Cap on collected directions per side.
const MAX_DIRECTIONS: usize = 4096;

/// Angle of a planar vector in `[0, 2π)`.
fn angle_of(v: &[f64]) -> f64 {
    v[1].atan2(v[0]).rem_euclid(TAU)
}

fn unit_at(angle: f64) -> Point {
    vec![angle.cos(), angle.sin()]
}

/// Circular distance between two angles.
fn circ_dist(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(TAU);
    d.min(TAU - d)
}

/// A union of closed angular intervals on the circle (a planar cone up to
/// positive scaling, with the zero vector implicit).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cone2D {
    /// Disjoint sorted intervals `[start, end]` with `0 ≤ start ≤ end ≤ 2π`;
    /// arcs crossing zero are stored split, so the pair `(…, 2π)`/`(0, …)`
    /// represents one contiguous arc.
    pub intervals: Vec<(f64, f64)>,
    /// The cone is every direction (e.g. at an isolated point).
    pub full: bool,
}

/// Closest approach between two angular unions.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MinGap {
    /// Circular distance (0 when the unions intersect).
    pub gap: f64,
    pub self_angle: f64,
    pub other_angle: f64,
}

impl Cone2D {
    pub fn empty() -> Self {
        Cone2D {
            intervals: Vec::new(),
            full: false,
        }
    }

    pub fn full_circle() -> Self {
        Cone2D {
            intervals: vec![(0.0, TAU)],
            full: true,
        }
    }

    /// Build from raw `(start, end)` pairs with `end ≥ start` (radians,
    /// any branch); intervals are normalized, split at zero, and merged.
    pub fn from_intervals(pairs: &[(f64, f64)]) -> Self {
        let mut parts: Vec<(f64, f64)> = Vec::new();
        for &(s, e) in pairs {
            let len = e - s;
            debug_assert!(len >= 0.0, "interval with negative length");
            if len >= TAU {
                return Cone2D::full_circle();
            }
            let s0 = s.rem_euclid(TAU);
            let e0 = s0 + len;
            if e0 > TAU {
                parts.push((s0, TAU));
                parts.push((0.0, e0 - TAU));
            } else {
                parts.push((s0, e0));
            }
        }
        if parts.is_empty() {
            return Cone2D::empty();
        }
        parts.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mut merged: Vec<(f64, f64)> = vec![parts[0]];
        for &(s, e) in &parts[1..] {
            let last = merged.last_mut().unwrap();
            if s <= last.1 + ANGLE_MERGE_TOL {
                last.1 = last.1.max(e);
            } else {
                merged.push((s, e));
            }
        }
        let covered: f64 = merged.iter().map(|(s, e)| e - s).sum();
        let full = covered >= TAU - ANGLE_MERGE_TOL;
        Cone2D {
            intervals: merged,
            full,
        }
    }

    /// A set of single directions.
    pub fn from_angles(angles: &[f64]) -> Self {
        let pairs: Vec<(f64, f64)> = angles.iter().map(|&a| (a, a)).collect();
        Cone2D::from_intervals(&pairs)
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty() && !self.full
    }

    /// Rotate every interval by `phi`.
    pub fn rotated(&self, phi: f64) -> Self {
        if self.full || self.is_empty() {
            return self.clone();
        }
        let pairs: Vec<(f64, f64)> = self
            .intervals
            .iter()
            .map(|&(s, e)| (s + phi, e + phi))
            .collect();
        Cone2D::from_intervals(&pairs)
    }

    /// Whether `angle` lies in the union (within merge tolerance).
    pub fn contains(&self, angle: f64) -> bool {
        if self.full {
            return true;
        }
        let a = angle.rem_euclid(TAU);
        self.intervals.iter().any(|&(s, e)| {
            [-TAU, 0.0, TAU]
                .iter()
                .any(|k| a + k >= s - ANGLE_MERGE_TOL && a + k <= e + ANGLE_MERGE_TOL)
        })
    }

    /// Closest circular approach to `other`; `None` if either is empty.
    pub fn min_gap_to(&self, other: &Cone2D) -> Option<MinGap> {
        if self.is_empty() || other.is_empty() {
            return None;
        }
        if self.full || other.full {
            let witness = if !other.is_empty() && !other.full {
                other.intervals[0].0
            } else if !self.is_empty() && !self.full {
                self.intervals[0].0
            } else {
                0.0
            };
            return Some(MinGap {
                gap: 0.0,
                self_angle: witness,
                other_angle: witness,
            });
        }
        // Overlap check (closed intervals, tested across the seam).
        for &(s1, e1) in &self.intervals {
            for &(s2, e2) in &other.intervals {
                for k in [-TAU, 0.0, TAU] {
                    let lo = s1.max(s2 + k);
                    let hi = e1.min(e2 + k);
                    if lo <= hi {
                        let mid = 0.5 * (lo + hi);
                        return Some(MinGap {
                            gap: 0.0,
                            self_angle: mid.rem_euclid(TAU),
                            other_angle: mid.rem_euclid(TAU),
                        });
                    }
                }
            }
        }
        // Disjoint closed unions: the minimum is attained endpoint to
        // endpoint.
        let mut best: Option<MinGap> = None;
        for &(s1, e1) in &self.intervals {
            for &a in &[s1, e1] {
                for &(s2, e2) in &other.intervals {
                    for &b in &[s2, e2] {
                        let gap = circ_dist(a, b);
                        if best.is_none_or(|g| gap < g.gap) {
                            best = Some(MinGap {
                                gap,
                                self_angle: a.rem_euclid(TAU),
                                other_angle: b.rem_euclid(TAU),
                            });
                        }
                    }
                }
            }
        }
        best
    }
}

/// Directions gathered by sampling (any dimension).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConeSample {
    /// Unit directions, each realized by an actual nearest-point pair.
    pub directions: Vec<Point>,
    /// True when the generator set was enumerated exactly (finite
    /// restriction) rather than sampled.
    pub exhaustive: bool,
    pub samples: u64,
    pub seed: u64,
}

/// A restricted proximal normal cone, exact or sampled.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RestrictedCone {
    /// Exact planar angular description.
    Planar(Cone2D),
    Sampled(ConeSample),
}

/// Does `base` qualify as a nearest point of `z` in `set` (within the
/// relative tie tolerance)?
fn qualifies(set: &ClosedSet, z: &[f64], base: &[f64]) -> Result<bool> {
    let d = set.distance(z)?;
    Ok(vm::dist(z, base) <= d + QUALIFY_TOL * (1.0 + vm::norm(z)))
}

/// Unit direction from `base` toward `z`, unless the two coincide.
fn direction(z: &[f64], base: &[f64]) -> Option<Point> {
    let u = vm::sub(z, base);
    let n = vm::norm(&u);
    if n <= DIRECTION_FLOOR * (1.0 + vm::norm(z)) {
        return None;
    }
    Some(vm::scale(&u, 1.0 / n))
}

/// Draw a generator from `restriction`: boundary sampling near `center`
/// when supported, ambient sampling otherwise.
fn draw_generator(
    restriction: &ClosedSet,
    rng: &mut ChaCha8Rng,
    center: &[f64],
    spread: f64,
) -> Result<Point> {
    match restriction.sample_boundary(rng, center, spread) {
        Ok(z) => Ok(z),
        Err(Error::Unsupported(_)) => {
            restriction.sample_point(rng, vm::norm(center) + spread + 1.0)
        }
        Err(e) => Err(e),
    }
}

/// The restricted proximal normal cone of `set` at `point`, with
/// generators taken from `restriction`.
///
/// Finite restrictions are enumerated exhaustively (exact in the plane);
/// anything else is sampled with the given budget and seed.
pub fn restricted_pn_cone(
    set: &ClosedSet,
    restriction: &ClosedSet,
    point: &[f64],
    samples: u64,
    seed: u64,
) -> Result<RestrictedCone> {
    set.validate()?;
    restriction.validate()?;
    let d = set.dimension();
    if restriction.dimension() != d || point.len() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: if restriction.dimension() != d {
                restriction.dimension()
            } else {
                point.len()
            },
        });
    }
    if !set.membership(point, 1e-9)? {
        return Err(Error::PreconditionNotMet(
            "cone base point must belong to the set".into(),
        ));
    }
    if let ClosedSet::Finite { points } = restriction {
        let mut dirs = Vec::new();
        for z in points {
            if qualifies(set, z, point)? {
                if let Some(u) = direction(z, point) {
                    dirs.push(u);
                }
            }
        }
        if d == 2 {
            let angles: Vec<f64> = dirs.iter().map(|u| angle_of(u)).collect();
            return Ok(RestrictedCone::Planar(Cone2D::from_angles(&angles)));
        }
        let count = points.len() as u64;
        return Ok(RestrictedCone::Sampled(ConeSample {
            directions: dirs,
            exhaustive: true,
            samples: count,
            seed,
        }));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut dirs = Vec::new();
    let consider = |z: &Point, dirs: &mut Vec<Point>| -> Result<()> {
        if dirs.len() < MAX_DIRECTIONS && qualifies(set, z, point)? {
            if let Some(u) = direction(z, point) {
                dirs.push(u);
            }
        }
        Ok(())
    };
    for z in restriction.feature_points() {
        consider(&z, &mut dirs)?;
    }
    for i in 0..samples {
        let spread = [0.05, 0.5, 5.0][(i % 3) as usize];
        let z = draw_generator(restriction, &mut rng, point, spread)?;
        consider(&z, &mut dirs)?;
    }
    Ok(RestrictedCone::Sampled(ConeSample {
        directions: dirs,
        exhaustive: false,
        samples,
        seed,
    }))
}

/// Union of the unrestricted proximal normal cones of `set` over base
/// points within `delta` of `c`, as planar angular intervals.
fn unrestricted_intervals(set: &ClosedSet, c: &[f64], delta: f64) -> Result<Cone2D> {
    match set {
        ClosedSet::Finite { points } => {
            // Isolated points admit every proximal direction.
            if points.iter().any(|p| vm::dist(p, c) <= delta) {
                Ok(Cone2D::full_circle())
            } else {
                Ok(Cone2D::empty())
            }
        }
        ClosedSet::Affine { base, directions } => {
            if directions.is_empty() {
                return Ok(if vm::dist(base, c) <= delta {
                    Cone2D::full_circle()
                } else {
                    Cone2D::empty()
                });
            }
            if directions.len() >= 2 {
                // The whole plane: boundary-free, only the zero normal.
                return Ok(Cone2D::empty());
            }
            if set.distance(c)? <= delta {
                let n = angle_of(&directions[0]) + FRAC_PI_2;
                Ok(Cone2D::from_angles(&[n, n + PI]))
            } else {
                Ok(Cone2D::empty())
            }
        }
        ClosedSet::HalfSpace { normal, offset } => {
            let boundary_dist = (vm::dot(normal, c) - offset).abs();
            if boundary_dist <= delta {
                Ok(Cone2D::from_angles(&[angle_of(normal)]))
            } else {
                Ok(Cone2D::empty())
            }
        }
        ClosedSet::Sawtooth { k_max } => Ok(sawtooth_intervals(*k_max, c, delta)),
        ClosedSet::Transformed {
            inner,
            rotation,
            translation,
        } => {
            let local = vm::mat_t_vec(rotation, &vm::sub(c, translation));
            let cone = unrestricted_intervals(inner, &local, delta)?;
            if cone.full || cone.is_empty() {
                return Ok(cone);
            }
            let det = rotation[0][0] * rotation[1][1] - rotation[0][1] * rotation[1][0];
            let mut pairs = Vec::with_capacity(cone.intervals.len());
            for &(s, e) in &cone.intervals {
                let len = e - s;
                let s_img = angle_of(&vm::mat_vec(rotation, &unit_at(s)));
                let e_img = angle_of(&vm::mat_vec(rotation, &unit_at(e)));
                // Rotations keep orientation; reflections reverse it, so
                // the image arc starts at the image of the old endpoint.
                let start = if det > 0.0 { s_img } else { e_img };
                pairs.push((start, start + len));
            }
            Ok(Cone2D::from_intervals(&pairs))
        }
        ClosedSet::BoxSet { .. } | ClosedSet::Ball { .. } => Err(Error::Unsupported(
            "exact planar normal enumeration covers finite, affine, half-space, \
             sawtooth, and rigid transforms of those; use the sampled method"
                .into(),
        )),
    }
}

/// Angular intervals of the sawtooth hypograph near `c`: smooth boundary
/// pieces contribute their single upward normal, peak corners the closed
/// fan between the two adjacent piece normals, valley corners nothing
/// (no proximal ball fits a concave corner from outside).
fn sawtooth_intervals(k_max: u32, c: &[f64], delta: f64) -> Cone2D {
    let w = geometry::sawtooth_w();
    let q = FRAC_PI_2;
    let mut pairs: Vec<(f64, f64)> = Vec::new();
    for k in 1..=k_max as i32 {
        let peak = [2f64.powi(-k), 0.0];
        if vm::dist(&peak, c) <= delta {
            pairs.push((q - w, q + w));
        }
    }
    if vm::dist(&[1.0, 0.0], c) <= delta {
        pairs.push((q, q + w));
    }
    let stub = [2f64.powi(-(k_max as i32 + 1)), 0.0];
    if vm::dist(&stub, c) <= delta {
        pairs.push((q - w, q));
    }
    for piece in geometry::sawtooth_pieces(k_max) {
        let closest = piece.closest_to(c);
        if vm::dist(&closest, c) > delta {
            continue;
        }
        let dir = match &piece {
            geometry::Piece::Segment(a, b) => [b[0] - a[0], b[1] - a[1]],
            geometry::Piece::Ray(_, d) => *d,
        };
        // Upward normal of the hypograph boundary.
        let mut n = [-dir[1], dir[0]];
        if n[1] < 0.0 {
            n = [-n[0], -n[1]];
        }
        let a = angle_of(&n);
        pairs.push((a, a));
    }
    Cone2D::from_intervals(&pairs)
}

/// Exact restricted directions when both the base set and the generator
/// set are finite: every (base, generator) pair is tested.
fn finite_restricted_angles(
    set: &ClosedSet,
    bases: &[Point],
    generators: &[Point],
    c: &[f64],
    delta: f64,
) -> Result<Vec<f64>> {
    let mut angles = Vec::new();
    for base in bases {
        if vm::dist(base, c) > delta {
            continue;
        }
        for z in generators {
            if qualifies(set, z, base)? {
                if let Some(u) = direction(z, base) {
                    angles.push(angle_of(&u));
                }
            }
        }
    }
    Ok(angles)
}

/// CQ-number computation method.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum CqMethod {
    /// Closed-form planar enumeration (dimension 2 only).
    Exact2d,
    /// Seeded generator sampling, any dimension.
    Sampled { samples: u64, seed: u64 },
}

/// Result of a CQ-number evaluation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CqReport {
    /// `θ_δ ∈ [0, 1]`.
    pub theta_delta: f64,
    pub delta: f64,
    pub method: CqMethod,
    /// Direction from the A-side cone achieving (or closest to) the sup.
    pub witness_u: Option<Point>,
    /// Direction from the negated B-side cone achieving the sup.
    pub witness_v: Option<Point>,
}

fn check_cq_inputs(
    set_a: &ClosedSet,
    restrict_a: &ClosedSet,
    set_b: &ClosedSet,
    restrict_b: &ClosedSet,
    c: &[f64],
    delta: f64,
) -> Result<usize> {
    for s in [set_a, restrict_a, set_b, restrict_b] {
        s.validate()?;
    }
    let d = set_a.dimension();
    for s in [restrict_a, set_b, restrict_b] {
        if s.dimension() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: s.dimension(),
            });
        }
    }
    if c.len() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: c.len(),
        });
    }
    if !(delta > 0.0) {
        return Err(Error::PreconditionNotMet(format!(
            "delta must be > 0, got {delta}"
        )));
    }
    if set_a.distance(c)? > delta {
        return Err(Error::NoData(
            "no base points of the first set within delta of c".into(),
        ));
    }
    if set_b.distance(c)? > delta {
        return Err(Error::NoData(
            "no base points of the second set within delta of c".into(),
        ));
    }
    Ok(d)
}

/// Collect restricted directions for one side of the CQ number: unit
/// vectors `z − a` with `z` drawn from `restriction`, `a` an actual
/// nearest point of `z` in `set` lying within `delta` of `c`.
fn side_directions(
    set: &ClosedSet,
    restriction: &ClosedSet,
    c: &[f64],
    delta: f64,
    samples: u64,
    seed: u64,
) -> Result<Vec<Point>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut dirs: Vec<Point> = Vec::new();
    let consider = |z: &Point, dirs: &mut Vec<Point>| -> Result<()> {
        if dirs.len() >= MAX_DIRECTIONS {
            return Ok(());
        }
        let proj = set.project(z)?;
        for a in &proj.nearest {
            if vm::dist(a, c) <= delta {
                if let Some(u) = direction(z, a) {
                    dirs.push(u);
                }
            }
        }
        Ok(())
    };
    for z in restriction.feature_points() {
        consider(&z, &mut dirs)?;
    }
    for i in 0..samples {
        let spread = [delta, 4.0 * delta, 16.0 * delta][(i % 3) as usize];
        let z = draw_generator(restriction, &mut rng, c, spread)?;
        consider(&z, &mut dirs)?;
    }
    Ok(dirs)
}

/// The CQ number `θ_δ` of the pair `(A, B)` at `c`, with `A`-side
/// generators from `restrict_b` and `B`-side generators from `restrict_a`.
pub fn cq_number(
    set_a: &ClosedSet,
    restrict_a: &ClosedSet,
    set_b: &ClosedSet,
    restrict_b: &ClosedSet,
    c: &[f64],
    delta: f64,
    method: CqMethod,
) -> Result<CqReport> {
    let d = check_cq_inputs(set_a, restrict_a, set_b, restrict_b, c, delta)?;
    match method {
        CqMethod::Exact2d => {
            if d != 2 {
                return Err(Error::Unsupported(
                    "exact CQ enumeration is planar; use the sampled method".into(),
                ));
            }
            let u_cone = match (set_a, restrict_b) {
                (ClosedSet::Finite { points: bases }, ClosedSet::Finite { points: gens }) => {
                    Cone2D::from_angles(&finite_restricted_angles(set_a, bases, gens, c, delta)?)
                }
                _ => unrestricted_intervals(set_a, c, delta)?,
            };
            let w_cone = match (set_b, restrict_a) {
                (ClosedSet::Finite { points: bases }, ClosedSet::Finite { points: gens }) => {
                    Cone2D::from_angles(&finite_restricted_angles(set_b, bases, gens, c, delta)?)
                }
                _ => unrestricted_intervals(set_b, c, delta)?,
            };
            let v_cone = w_cone.rotated(PI);
            let (theta_delta, witness_u, witness_v) = match u_cone.min_gap_to(&v_cone) {
                None => (0.0, None, None),
                Some(g) => (
                    g.gap.cos().max(0.0),
                    Some(unit_at(g.self_angle)),
                    Some(unit_at(g.other_angle)),
                ),
            };
            Ok(CqReport {
                theta_delta,
                delta,
                method,
                witness_u,
                witness_v,
            })
        }
        CqMethod::Sampled { samples, seed } => {
            let u_dirs = side_directions(set_a, restrict_b, c, delta, samples, seed)?;
            let w_dirs = side_directions(
                set_b,
                restrict_a,
                c,
                delta,
                samples,
                seed ^ 0x9E37_79B9_7F4A_7C15,
            )?;
            let mut best: Option<(f64, usize, usize)> = None;
            for (i, u) in u_dirs.iter().enumerate() {
                for (j, w) in w_dirs.iter().enumerate() {
                    let dot = -vm::dot(u, w);
                    if best.is_none_or(|(b, _, _)| dot > b) {
                        best = Some((dot, i, j));
                    }
                }
            }
            let (theta_delta, witness_u, witness_v) = match best {
                None => (0.0, None, None),
                Some((v, i, j)) => (
                    v.max(0.0),
                    Some(u_dirs[i].clone()),
                    Some(vm::scale(&w_dirs[j], -1.0)),
                ),
            };
            Ok(CqReport {
                theta_delta,
                delta,
                method,
                witness_u,
                witness_v,
            })
        }
    }
}

/// One row of a δ-grid evaluation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub delta: f64,
    pub theta_delta: f64,
}

/// Outcome of the limiting-angle condition check.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CqCondition {
    /// True iff the smallest-δ value stays below `1 − 1e-6`.
    pub holds: bool,
    /// `θ_δ` at the smallest δ — the best available stand-in for the
    /// limiting value `θ̄ = lim sup_{δ↓0} θ_δ`.
    pub theta_bar: f64,
    pub grid: Vec<GridPoint>,
}

/// Margin below 1 that `θ̄` must clear for the condition to hold.
pub const CQ_MARGIN: f64 = 1e-6;

/// Evaluate `θ_δ` along a strictly decreasing δ-grid and test the
/// transversality condition at the smallest δ.
pub fn cq_condition(
    set_a: &ClosedSet,
    restrict_a: &ClosedSet,
    set_b: &ClosedSet,
    restrict_b: &ClosedSet,
    c: &[f64],
    deltas: &[f64],
    method: CqMethod,
) -> Result<CqCondition> {
    if deltas.is_empty() {
        return Err(Error::PreconditionNotMet("delta grid is empty".into()));
    }
    for pair in deltas.windows(2) {
        if !(pair[1] < pair[0]) {
            return Err(Error::PreconditionNotMet(
                "delta grid must be strictly decreasing".into(),
            ));
        }
    }
    let mut grid = Vec::with_capacity(deltas.len());
    for &delta in deltas {
        let report = cq_number(set_a, restrict_a, set_b, restrict_b, c, delta, method)?;
        grid.push(GridPoint {
            delta,
            theta_delta: report.theta_delta,
        });
    }
    let theta_bar = grid.last().unwrap().theta_delta;
    Ok(CqCondition {
        holds: theta_bar < 1.0 - CQ_MARGIN,
        theta_bar,
        grid,
    })
}

/// Lower estimate of the regularity constant ε of `set` near `c`: the
/// largest observed `⟨u, y − b⟩ / (‖u‖·‖y − b‖)` over proximal normals
/// `u = z − b` (generators `z` from `restriction`, base `b` within `delta`
/// of `c`) and set points `y` within `delta` of `c`.
///
/// Convex sets score 0 (normals never make an acute angle with feasible
/// directions); a returned value bounds every admissible ε from below.
pub fn regularity_probe(
    set: &ClosedSet,
    restriction: &ClosedSet,
    c: &[f64],
    delta: f64,
    samples: u64,
    seed: u64,
) -> Result<f64> {
    set.validate()?;
    restriction.validate()?;
    let d = set.dimension();
    if restriction.dimension() != d || c.len() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: if restriction.dimension() != d {
                restriction.dimension()
            } else {
                c.len()
            },
        });
    }
    if !(delta > 0.0) {
        return Err(Error::PreconditionNotMet(format!(
            "delta must be > 0, got {delta}"
        )));
    }
    if !set.membership(c, 1e-9)? {
        return Err(Error::PreconditionNotMet(
            "probe center must belong to the probed set".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    // Normal observations (b, u).
    let mut normals: Vec<(Point, Point)> = Vec::new();
    let consider = |z: &Point, normals: &mut Vec<(Point, Point)>| -> Result<()> {
        if normals.len() >= MAX_DIRECTIONS {
            return Ok(());
        }
        let proj = set.project(z)?;
        for b in &proj.nearest {
            if vm::dist(b, c) <= delta {
                if let Some(u) = direction(z, b) {
                    normals.push((b.clone(), u));
                }
            }
        }
        Ok(())
    };
    for z in restriction.feature_points() {
        consider(&z, &mut normals)?;
    }
    for i in 0..samples {
        let spread = [delta, 4.0 * delta, 16.0 * delta][(i % 3) as usize];
        let z = draw_generator(restriction, &mut rng, c, spread)?;
        consider(&z, &mut normals)?;
    }

    // Feasible displacement targets y ∈ set near c.
    let mut targets: Vec<Point> = Vec::new();
    let add_target = |y: Point, targets: &mut Vec<Point>| {
        if targets.len() < MAX_DIRECTIONS && vm::dist(&y, c) <= delta {
            targets.push(y);
        }
    };
    for y in set.feature_points() {
        add_target(y, &mut targets);
    }
    for (b, _) in &normals {
        add_target(b.clone(), &mut targets);
    }
    for _ in 0..samples {
        match set.sample_boundary(&mut rng, c, delta) {
            Ok(y) => add_target(y, &mut targets),
            Err(Error::Unsupported(_)) => {
                let y = set.sample_point(&mut rng, vm::norm(c) + delta + 1.0)?;
                add_target(y, &mut targets);
            }
            Err(e) => return Err(e),
        }
    }

    let mut best: f64 = 0.0;
    for (b, u) in &normals {
        for y in &targets {
            let dy = vm::sub(y, b);
            let n = vm::norm(&dy);
            if n <= DIRECTION_FLOOR * (1.0 + vm::norm(b)) {
                continue;
            }
            best = best.max(vm::dot(u, &dy) / n);
        }
    }
    Ok(best)
}

/// A sampling ball.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleRegion {
    pub center: Point,
    pub radius: f64,
}

/// Raw observed angle between the two sets over a sampled region: the
/// largest normalized `⟨z − a, z − b⟩` over samples `z` and nearest points
/// `a ∈ P_A(z)`, `b ∈ P_B(z)`. Unlike the CQ number this is signed (it can
/// reach −1 between parallel structures). Errors with `NoData` when every
/// sample lies on both sets.
pub fn theta_estimate(
    set_a: &ClosedSet,
    set_b: &ClosedSet,
    region: &SampleRegion,
    samples: u64,
    seed: u64,
) -> Result<f64> {
    set_a.validate()?;
    set_b.validate()?;
    let d = set_a.dimension();
    if set_b.dimension() != d || region.center.len() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: if set_b.dimension() != d {
                set_b.dimension()
            } else {
                region.center.len()
            },
        });
    }
    if !(region.radius > 0.0) {
        return Err(Error::PreconditionNotMet(format!(
            "region radius must be > 0, got {}",
            region.radius
        )));
    }
    if samples < 1 {
        return Err(Error::PreconditionNotMet("need at least one sample".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: Option<f64> = None;
    for _ in 0..samples {
        let dir = geometry::random_unit(&mut rng, d);
        let r = region.radius * rng.gen::<f64>().powf(1.0 / d as f64);
        let z: Point = region
            .center
            .iter()
            .zip(&dir)
            .map(|(c, u)| c + r * u)
            .collect();
        let pa = set_a.project(&z)?;
        let pb = set_b.project(&z)?;
        for a in &pa.nearest {
            let ua = vm::sub(&z, a);
            let na = vm::norm(&ua);
            if na <= DIRECTION_FLOOR * (1.0 + vm::norm(&z)) {
                continue;
            }
            for b in &pb.nearest {
                let ub = vm::sub(&z, b);
                let nb = vm::norm(&ub);
                if nb <= DIRECTION_FLOOR * (1.0 + vm::norm(&z)) {
                    continue;
                }
                let cosine = vm::dot(&ua, &ub) / (na * nb);
                best = Some(best.map_or(cosine, |b: f64| b.max(cosine)));
            }
        }
    }
    best.ok_or_else(|| {
        Error::NoData("every sample point lay on both sets; no angle observations".into())
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::sawtooth_pair;
    use approx::assert_relative_eq;

    fn line_at(angle: f64) -> ClosedSet {
        ClosedSet::Affine {
            base: vec![0.0, 0.0],
            directions: vec![vec![angle.cos(), angle.sin()]],
        }
    }

    #[test]
    fn cone_intervals_merge_and_wrap() {
        let c = Cone2D::from_intervals(&[(6.0, 6.5), (0.1, 0.3)]);
        assert!(c.contains(6.1));
        assert!(c.contains(0.15));
        assert!(c.contains(0.21));
        assert!(!c.contains(3.0));
        assert!(!c.full);

        let full = Cone2D::from_intervals(&[(0.0, 7.0)]);
        assert!(full.full);
        assert!(full.contains(1.234));
    }

    #[test]
    fn cone_min_gap_between_rays() {
        let a = Cone2D::from_angles(&[0.0]);
        let b = Cone2D::from_angles(&[PI]);
        let g = a.min_gap_to(&b).unwrap();
        assert_relative_eq!(g.gap, PI, max_relative = 1e-15);

        let near = Cone2D::from_angles(&[0.1]);
        let wrap = Cone2D::from_angles(&[TAU - 0.1]);
        let g = near.min_gap_to(&wrap).unwrap();
        assert_relative_eq!(g.gap, 0.2, max_relative = 1e-12);
    }

    #[test]
    fn cone_overlap_gives_zero_gap() {
        let a = Cone2D::from_intervals(&[(0.0, 1.0)]);
        let b = Cone2D::from_intervals(&[(0.5, 2.0)]);
        assert_eq!(a.min_gap_to(&b).unwrap().gap, 0.0);
        assert!(a.min_gap_to(&Cone2D::empty()).is_none());
    }

    #[test]
    fn two_lines_cq_is_cos_angle() {
        let whole = ClosedSet::whole_space(2);
        for phi in [PI / 3.0, PI / 4.0, 0.3, 1.4] {
            let a = line_at(0.0);
            let b = line_at(phi);
            let report =
                cq_number(&a, &whole, &b, &whole, &[0.0, 0.0], 0.5, CqMethod::Exact2d).unwrap();
            assert_relative_eq!(
                report.theta_delta,
                phi.cos().abs(),
                max_relative = 1e-12,
                epsilon = 1e-12
            );
        }
        let a = line_at(0.2);
        let report = cq_number(
            &a.clone(),
            &ClosedSet::whole_space(2),
            &a,
            &ClosedSet::whole_space(2),
            &[0.0, 0.0],
            0.5,
            CqMethod::Exact2d,
        )
        .unwrap();
        assert_eq!(report.theta_delta, 1.0);
    }

    #[test]
    fn sawtooth_pair_cq_is_sqrt_seven_eighths() {
        let (a, b) = sawtooth_pair(60);
        let expected = (7.0f64 / 8.0).sqrt();
        for delta in [0.1, 0.5] {
            let report = cq_number(&a, &a, &b, &b, &[0.0, 0.0], delta, CqMethod::Exact2d).unwrap();
            assert_relative_eq!(report.theta_delta, expected, max_relative = 1e-9);
        }
    }

    #[test]
    fn sampled_cq_never_exceeds_exact_on_sawtooth() {
        let (a, b) = sawtooth_pair(40);
        let c = [0.0, 0.0];
        let exact = cq_number(&a, &a, &b, &b, &c, 0.25, CqMethod::Exact2d)
            .unwrap()
            .theta_delta;
        let sampled = cq_number(
            &a,
            &a,
            &b,
            &b,
            &c,
            0.25,
            CqMethod::Sampled {
                samples: 400,
                seed: 11,
            },
        )
        .unwrap()
        .theta_delta;
        assert!(sampled <= exact + 1e-9, "{sampled} > {exact}");
        // The mirror-peak feature points realize the extreme directions,
        // so sampling is not just bounded but tight here.
        assert!(sampled >= exact - 1e-9, "{sampled} < {exact}");
    }

    #[test]
    fn finite_restricted_cone_is_exact() {
        let a = ClosedSet::Finite {
            points: vec![vec![0.0, 0.0], vec![1.0, 0.0]],
        };
        let gen = ClosedSet::Finite {
            points: vec![vec![0.0, 1.0]],
        };
        match restricted_pn_cone(&a, &gen, &[0.0, 0.0], 0, 0).unwrap() {
            RestrictedCone::Planar(c) => {
                assert_eq!(c.intervals.len(), 1);
                assert!(c.contains(FRAC_PI_2));
                assert!(!c.contains(0.0));
            }
            other => panic!("expected planar cone, got {other:?}"),
        }
        // The far base point is not a nearest point of the generator.
        match restricted_pn_cone(&a, &gen, &[1.0, 0.0], 0, 0).unwrap() {
            RestrictedCone::Planar(c) => assert!(c.is_empty()),
            other => panic!("expected planar cone, got {other:?}"),
        }
    }

    #[test]
    fn cone_base_point_must_be_member() {
        let a = ClosedSet::Finite {
            points: vec![vec![0.0, 0.0]],
        };
        let err = restricted_pn_cone(&a, &a, &[0.5, 0.0], 0, 0).unwrap_err();
        assert!(matches!(err, Error::PreconditionNotMet(_)));
    }

    #[test]
    fn cq_grid_monotone_for_finite_pair() {
        let a = ClosedSet::Finite {
            points: vec![vec![0.0, 0.0], vec![1.0, 0.2], vec![-0.4, 0.9]],
        };
        let b = ClosedSet::Finite {
            points: vec![vec![0.0, 0.0], vec![0.3, -0.8], vec![1.1, 0.7]],
        };
        let c = [0.0, 0.0];
        let mut last = -1.0;
        for delta in [0.25, 0.5, 1.0, 2.0] {
            let theta = cq_number(&a, &b, &b, &a, &c, delta, CqMethod::Exact2d)
                .unwrap()
                .theta_delta;
            assert!(theta >= last - 1e-15, "θ dropped: {theta} < {last}");
            last = theta;
        }
    }

    #[test]
    fn cq_condition_grid_and_margin() {
        let whole = ClosedSet::whole_space(2);
        let a = line_at(0.0);
        let b = line_at(PI / 3.0);
        let cond = cq_condition(
            &a,
            &whole,
            &b,
            &whole,
            &[0.0, 0.0],
            &[1.0, 0.5, 0.25],
            CqMethod::Exact2d,
        )
        .unwrap();
        assert!(cond.holds);
        assert_relative_eq!(cond.theta_bar, 0.5, max_relative = 1e-12);
        assert_eq!(cond.grid.len(), 3);

        let same = cq_condition(
            &a,
            &whole,
            &a.clone(),
            &whole,
            &[0.0, 0.0],
            &[0.5, 0.25],
            CqMethod::Exact2d,
        )
        .unwrap();
        assert!(!same.holds);

        let err = cq_condition(
            &a,
            &whole,
            &b,
            &whole,
            &[0.0, 0.0],
            &[0.25, 0.5],
            CqMethod::Exact2d,
        );
        assert!(err.is_err());
    }

    #[test]
    fn cq_errors_when_far_from_both_sets() {
        let a = ClosedSet::Finite {
            points: vec![vec![5.0, 5.0]],
        };
        let b = line_at(0.3);
        let err = cq_number(&a, &b, &b, &a, &[0.0, 0.0], 0.5, CqMethod::Exact2d).unwrap_err();
        assert!(matches!(err, Error::NoData(_)));
    }

    #[test]
    fn exact_cq_invariant_under_rigid_motion() {
        let a = line_at(0.0);
        let b = line_at(PI / 3.0);
        let whole = ClosedSet::whole_space(2);
        let base = cq_number(&a, &whole, &b, &whole, &[0.0, 0.0], 0.5, CqMethod::Exact2d)
            .unwrap()
            .theta_delta;
        let phi: f64 = 0.83;
        let rot = vec![vec![phi.cos(), -phi.sin()], vec![phi.sin(), phi.cos()]];
        let shift = vec![1.5, -2.0];
        let ta = geometry::transform_set(a, rot.clone(), shift.clone()).unwrap();
        let tb = geometry::transform_set(b, rot, shift.clone()).unwrap();
        let moved = cq_number(&ta, &whole, &tb, &whole, &shift, 0.5, CqMethod::Exact2d)
            .unwrap()
            .theta_delta;
        assert!((base - moved).abs() <= 1e-12, "{base} vs {moved}");
    }

    #[test]
    fn half_space_probe_scores_zero() {
        let h = ClosedSet::HalfSpace {
            normal: vec![0.0, 1.0],
            offset: 0.0,
        };
        let eps =
            regularity_probe(&h, &ClosedSet::whole_space(2), &[0.0, 0.0], 0.5, 200, 5).unwrap();
        assert!(eps.abs() <= 1e-9, "convex set probed as {eps}-regular");
    }

    #[test]
    fn sawtooth_probe_sees_the_tooth_angle() {
        let (a, b) = sawtooth_pair(60);
        let eps = regularity_probe(&a, &b, &[0.0, 0.0], 0.5, 300, 9).unwrap();
        let sin_w = geometry::sawtooth_w().sin();
        assert!(eps >= sin_w - 1e-4, "{eps} < sin w = {sin_w}");
        assert!(eps > 0.17);
    }

    #[test]
    fn theta_estimate_two_point_sets_reaches_one() {
        let a = ClosedSet::Finite {
            points: vec![vec![-3.0], vec![2.0]],
        };
        let b = ClosedSet::Finite {
            points: vec![vec![-3.0], vec![6.0]],
        };
        let region = SampleRegion {
            center: vec![3.0],
            radius: 4.0,
        };
        let theta = theta_estimate(&a, &b, &region, 400, 17).unwrap();
        assert_eq!(theta, 1.0);
    }

    #[test]
    fn theta_estimate_parallel_lines_is_negative() {
        // Points between two parallel lines see opposite directions.
        let a = ClosedSet::Affine {
            base: vec![0.0, 1.0],
            directions: vec![vec![1.0, 0.0]],
        };
        let b = ClosedSet::Affine {
            base: vec![0.0, -1.0],
            directions: vec![vec![1.0, 0.0]],
        };
        let region = SampleRegion {
            center: vec![0.0, 0.0],
            radius: 0.5,
        };
        let theta = theta_estimate(&a, &b, &region, 200, 3).unwrap();
        assert_eq!(theta, -1.0);
    }

    #[test]
    fn transformed_sawtooth_cone_maps_interval() {
        // The mirrored sawtooth's proximal cone near the origin is the
        // mirror image of the plain one's.
        let (_, b) = sawtooth_pair(40);
        let cone = unrestricted_intervals(&b, &[0.0, 0.0], 0.5).unwrap();
        let w = geometry::sawtooth_w();
        assert!(cone.contains(3.0 * w - FRAC_PI_2));
        assert!(cone.contains(5.0 * w - FRAC_PI_2));
        assert!(!cone.contains(FRAC_PI_2));
    }
}
