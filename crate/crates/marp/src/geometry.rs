//! Closed sets with exact, set-valued nearest-point projection.
//!
//! Every set variant answers three queries: `project` (all nearest points,
//! or one representative per distinct nearest point, plus the distance),
//! `distance`, and `membership`. Projections are closed-form per variant;
//! no iterative optimization is involved, so results are deterministic and
//! reproducible bit-for-bit.
//!
//! The catalog deliberately mixes convex sets (affine subspaces, half-spaces,
//! boxes) with nonconvex ones (finite point sets, spheres, and a self-similar
//! sawtooth hypograph whose teeth accumulate at the origin). The nonconvex
//! variants exercise the set-valued cases: ties are enumerated and a
//! [`TiePolicy`] fixes the selection used by iterative drivers.

use crate::error::{Error, Result};
use crate::vecmath as vm;
use rand::Rng;
use serde::{Deserialize, Serialize};

/// A point of d-dimensional Euclidean space.
pub type Point = Vec<f64>;

/// Relative tolerance for recognising ties among nearest-point candidates
/// and for deduplicating candidate points. Relative to the minimum distance,
/// not the query magnitude: an absolute window would lump distinct boundary
/// points together wherever the local feature size drops below it.
const TIE_REL: f64 = 1e-12;

/// Rounding-level absolute floor for tie and dedup windows, scaled by the
/// coordinate magnitude. Covers genuine ties whose distances are computed
/// through different formulas and agree only up to accumulated rounding.
const TIE_ABS_EPS: f64 = 64.0 * f64::EPSILON;

/// Default relative tolerance for membership queries.
pub const DEFAULT_MEMBERSHIP_TOL: f64 = 1e-9;

/// Orthonormality / orthogonality tolerance for validation.
const ORTHO_TOL: f64 = 1e-12;

/// Selection rule applied when a projection has several nearest points.
///
/// Deterministic replay of an orbit requires a fixed selection; the default
/// picks the lexicographically smallest nearest point.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TiePolicy {
    /// Lexicographically smallest nearest point (default).
    #[default]
    LexMin,
    /// Keep the whole nearest set; only meaningful for enumeration over
    /// finite sets, and rejected by drivers that need a unique selection.
    All,
    /// Nearest point closest to the previously selected one (warm starts);
    /// falls back to `LexMin` when there is no previous point.
    NearestToPrevious,
}

/// Outcome of a nearest-point query.
#[derive(Clone, Debug, PartialEq)]
pub struct ProjectionResult {
    /// Nearest points, lexicographically sorted. For finite sets this is the
    /// complete tie set; for analytic variants one representative per
    /// distinct nearest point.
    pub nearest: Vec<Point>,
    /// Distance from the query to the set.
    pub distance: f64,
    /// `false` when the true nearest set is a continuum and `nearest` holds
    /// only a canonical representative (projecting a sphere's center).
    pub complete: bool,
}

impl ProjectionResult {
    fn single(p: Point, distance: f64) -> Self {
        ProjectionResult {
            nearest: vec![p],
            distance,
            complete: true,
        }
    }

    /// Reduce scored candidates to the tie set: keep everything within a
    /// relative window of the minimum distance, deduplicate near-identical
    /// points, and sort lexicographically.
    fn from_candidates(q: &[f64], mut cands: Vec<(Point, f64)>, complete: bool) -> Self {
        debug_assert!(!cands.is_empty());
        let dmin = cands.iter().map(|(_, d)| *d).fold(f64::INFINITY, f64::min);
        let scale = 1.0 + vm::norm(q) + dmin;
        let window = dmin + TIE_REL * dmin + TIE_ABS_EPS * scale;
        cands.retain(|(_, d)| *d <= window);
        let mut points: Vec<Point> = cands.into_iter().map(|(p, _)| p).collect();
        points.sort_by(|a, b| {
            if vm::lex_less(a, b) {
                std::cmp::Ordering::Less
            } else if vm::lex_less(b, a) {
                std::cmp::Ordering::Greater
            } else {
                std::cmp::Ordering::Equal
            }
        });
        let mut nearest: Vec<Point> = Vec::with_capacity(points.len());
        for p in points {
            if !nearest
                .iter()
                .any(|kept| vm::approx_eq(kept, &p, TIE_REL * dmin + TIE_ABS_EPS * scale))
            {
                nearest.push(p);
            }
        }
        ProjectionResult {
            nearest,
            distance: dmin,
            complete,
        }
    }
}

/// A closed subset of d-dimensional Euclidean space with a closed-form
/// nearest-point map.
///
/// Serialized as a tagged JSON object: `{"type": "finite", "points": [...]}`,
/// `{"type": "half_space", "normal": [...], "offset": ...}`, and so on.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ClosedSet {
    /// Finite list of points; projections enumerate all ties.
    Finite { points: Vec<Point> },
    /// Affine subspace `base + span(directions)` with an orthonormal
    /// direction frame. An empty frame is the single point `{base}`.
    Affine { base: Point, directions: Vec<Point> },
    /// Half-space `{x : ⟨normal, x⟩ ≤ offset}` with a unit normal.
    HalfSpace { normal: Point, offset: f64 },
    /// Axis-aligned box with optional bounds per coordinate (`None` means
    /// unbounded on that side). All bounds `None` is the whole space.
    #[serde(rename = "box")]
    BoxSet {
        lower: Vec<Option<f64>>,
        upper: Vec<Option<f64>>,
    },
    /// Sphere `{x : ‖x − center‖ = radius}` — the surface only, the
    /// canonical smooth nonconvex set. Projecting the exact center is the
    /// singular case: every sphere point is nearest, and the result holds
    /// the lexicographically smallest representative with `complete: false`.
    Ball { center: Point, radius: f64 },
    /// Isometric image `{Q·x + translation : x ∈ inner}` of another set
    /// (`Q` orthogonal). Projections map through the isometry.
    Transformed {
        inner: std::boxed::Box<ClosedSet>,
        rotation: Vec<Vec<f64>>,
        translation: Point,
    },
    /// Hypograph `{(x, y) : y ≤ f(x)}` of a piecewise-linear sawtooth
    /// profile in the plane. Teeth of slope `±tan w` (with `cos 4w = 3/4`)
    /// sit on the dyadic intervals `(2⁻⁽ᵏ⁺¹⁾, 2⁻ᵏ]` for `k = 0..=k_max`,
    /// accumulating at the origin; the profile is 0 for `x ≤ 0`, for
    /// `x > 1`, and on the unresolved stub `(0, 2⁻⁽ᵏ_ᵐᵃˣ⁺¹⁾]`.
    ///
    /// The teeth peaks touch `y = 0` at `s_k = (2⁻ᵏ, 0)` while the valleys
    /// dip below; the boundary is exactly the graph of the profile.
    Sawtooth {
        #[serde(default = "default_k_max")]
        k_max: u32,
    },
}

fn default_k_max() -> u32 {
    60
}

/// Half-angle parameter `w = arccos(3/4) / 4` of the sawtooth slopes.
pub fn sawtooth_w() -> f64 {
    (0.75f64).acos() / 4.0
}

impl ClosedSet {
    /// Ambient dimension of the set.
    pub fn dimension(&self) -> usize {
        match self {
            ClosedSet::Finite { points } => points.first().map_or(0, |p| p.len()),
            ClosedSet::Affine { base, .. } => base.len(),
            ClosedSet::HalfSpace { normal, .. } => normal.len(),
            ClosedSet::BoxSet { lower, .. } => lower.len(),
            ClosedSet::Ball { center, .. } => center.len(),
            ClosedSet::Transformed { translation, .. } => translation.len(),
            ClosedSet::Sawtooth { .. } => 2,
        }
    }

    /// The whole space in dimension `d`, as a box with no bounds.
    pub fn whole_space(d: usize) -> ClosedSet {
        ClosedSet::BoxSet {
            lower: vec![None; d],
            upper: vec![None; d],
        }
    }

    /// Check the variant's well-formedness (orthonormal frames, unit
    /// normals, ordered bounds, positive radius, orthogonal matrices,
    /// finite coordinates).
    pub fn validate(&self) -> Result<()> {
        match self {
            ClosedSet::Finite { points } => {
                if points.is_empty() {
                    return Err(Error::InvalidSet("finite set must be nonempty".into()));
                }
                let d = points[0].len();
                if d == 0 {
                    return Err(Error::InvalidSet("points must have dimension ≥ 1".into()));
                }
                for p in points {
                    if p.len() != d {
                        return Err(Error::InvalidSet(
                            "finite set points have mixed dimensions".into(),
                        ));
                    }
                    if !vm::all_finite(p) {
                        return Err(Error::InvalidSet("non-finite coordinate".into()));
                    }
                }
                Ok(())
            }
            ClosedSet::Affine { base, directions } => {
                let d = base.len();
                if d == 0 || !vm::all_finite(base) {
                    return Err(Error::InvalidSet(
                        "affine base must be finite, d ≥ 1".into(),
                    ));
                }
                if directions.len() > d {
                    return Err(Error::InvalidSet(
                        "more directions than the ambient dimension".into(),
                    ));
                }
                for (i, u) in directions.iter().enumerate() {
                    if u.len() != d || !vm::all_finite(u) {
                        return Err(Error::InvalidSet("bad direction vector".into()));
                    }
                    if (vm::norm(u) - 1.0).abs() > ORTHO_TOL {
                        return Err(Error::InvalidSet(format!(
                            "direction {i} is not unit length"
                        )));
                    }
                    for v in &directions[..i] {
                        if vm::dot(u, v).abs() > ORTHO_TOL {
                            return Err(Error::InvalidSet(
                                "directions are not pairwise orthogonal".into(),
                            ));
                        }
                    }
                }
                Ok(())
            }
            ClosedSet::HalfSpace { normal, offset } => {
                if normal.is_empty() || !vm::all_finite(normal) || !offset.is_finite() {
                    return Err(Error::InvalidSet(
                        "half-space parameters must be finite".into(),
                    ));
                }
                if (vm::norm(normal) - 1.0).abs() > ORTHO_TOL {
                    return Err(Error::InvalidSet(
                        "half-space normal must be unit length".into(),
                    ));
                }
                Ok(())
            }
            ClosedSet::BoxSet { lower, upper } => {
                if lower.is_empty() || lower.len() != upper.len() {
                    return Err(Error::InvalidSet(
                        "box bounds must be nonempty and of equal length".into(),
                    ));
                }
                for (lo, hi) in lower.iter().zip(upper) {
                    if let Some(l) = lo {
                        if !l.is_finite() {
                            return Err(Error::InvalidSet("non-finite lower bound".into()));
                        }
                    }
                    if let Some(h) = hi {
                        if !h.is_finite() {
                            return Err(Error::InvalidSet("non-finite upper bound".into()));
                        }
                    }
                    if let (Some(l), Some(h)) = (lo, hi) {
                        if l > h {
                            return Err(Error::InvalidSet("box has lower > upper".into()));
                        }
                    }
                }
                Ok(())
            }
            ClosedSet::Ball { center, radius } => {
                if center.is_empty() || !vm::all_finite(center) {
                    return Err(Error::InvalidSet(
                        "sphere center must be finite, d ≥ 1".into(),
                    ));
                }
                if !(radius.is_finite() && *radius > 0.0) {
                    return Err(Error::InvalidSet("sphere radius must be positive".into()));
                }
                Ok(())
            }
            ClosedSet::Transformed {
                inner,
                rotation,
                translation,
            } => {
                inner.validate()?;
                let d = inner.dimension();
                if translation.len() != d || !vm::all_finite(translation) {
                    return Err(Error::InvalidSet("translation dimension mismatch".into()));
                }
                if rotation.len() != d || rotation.iter().any(|r| r.len() != d) {
                    return Err(Error::InvalidSet("rotation matrix must be d×d".into()));
                }
                // Q orthogonal: max |QᵀQ − I| within tolerance.
                for i in 0..d {
                    for j in 0..d {
                        let mut s = 0.0;
                        for row in rotation {
                            s += row[i] * row[j];
                        }
                        let target = if i == j { 1.0 } else { 0.0 };
                        if (s - target).abs() > ORTHO_TOL {
                            return Err(Error::InvalidSet(
                                "rotation matrix is not orthogonal".into(),
                            ));
                        }
                    }
                }
                Ok(())
            }
            ClosedSet::Sawtooth { k_max } => {
                if *k_max < 1 || *k_max > 500 {
                    return Err(Error::InvalidSet(
                        "sawtooth k_max must lie in [1, 500]".into(),
                    ));
                }
                Ok(())
            }
        }
    }

    fn check_dim(&self, q: &[f64]) -> Result<()> {
        let d = self.dimension();
        if q.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: q.len(),
            });
        }
        Ok(())
    }

    /// All nearest points of `q` in the set, with the distance.
    pub fn project(&self, q: &[f64]) -> Result<ProjectionResult> {
        self.check_dim(q)?;
        match self {
            ClosedSet::Finite { points } => {
                let cands: Vec<(Point, f64)> =
                    points.iter().map(|p| (p.clone(), vm::dist(p, q))).collect();
                Ok(ProjectionResult::from_candidates(q, cands, true))
            }
            ClosedSet::Affine { base, directions } => {
                let rel = vm::sub(q, base);
                let mut p = base.clone();
                for u in directions {
                    let c = vm::dot(&rel, u);
                    for (pi, ui) in p.iter_mut().zip(u) {
                        *pi += c * ui;
                    }
                }
                let d = vm::dist(q, &p);
                Ok(ProjectionResult::single(p, d))
            }
            ClosedSet::HalfSpace { normal, offset } => {
                let s = vm::dot(normal, q) - offset;
                if s <= 0.0 {
                    Ok(ProjectionResult::single(q.to_vec(), 0.0))
                } else {
                    let p: Point = q.iter().zip(normal).map(|(x, n)| x - s * n).collect();
                    Ok(ProjectionResult::single(p, s))
                }
            }
            ClosedSet::BoxSet { lower, upper } => {
                let p: Point = q
                    .iter()
                    .zip(lower.iter().zip(upper))
                    .map(|(x, (lo, hi))| {
                        let mut v = *x;
                        if let Some(l) = lo {
                            v = v.max(*l);
                        }
                        if let Some(h) = hi {
                            v = v.min(*h);
                        }
                        v
                    })
                    .collect();
                let d = vm::dist(q, &p);
                Ok(ProjectionResult::single(p, d))
            }
            ClosedSet::Ball { center, radius } => {
                let v = vm::sub(q, center);
                let rho = vm::norm(&v);
                if rho == 0.0 {
                    // Singular direction: the whole sphere is nearest. Return
                    // the lexicographically smallest point, flagged incomplete.
                    let mut p = center.clone();
                    p[0] -= radius;
                    return Ok(ProjectionResult {
                        nearest: vec![p],
                        distance: *radius,
                        complete: false,
                    });
                }
                let p: Point = center
                    .iter()
                    .zip(&v)
                    .map(|(c, vi)| c + vi * (radius / rho))
                    .collect();
                Ok(ProjectionResult::single(p, (rho - radius).abs()))
            }
            ClosedSet::Transformed {
                inner,
                rotation,
                translation,
            } => {
                let local = vm::mat_t_vec(rotation, &vm::sub(q, translation));
                let res = inner.project(&local)?;
                let cands: Vec<(Point, f64)> = res
                    .nearest
                    .iter()
                    .map(|p| {
                        let img = vm::add(&vm::mat_vec(rotation, p), translation);
                        let d = vm::dist(q, &img);
                        (img, d)
                    })
                    .collect();
                Ok(ProjectionResult::from_candidates(q, cands, res.complete))
            }
            ClosedSet::Sawtooth { k_max } => {
                if q[1] <= sawtooth_profile(q[0], *k_max) {
                    return Ok(ProjectionResult::single(q.to_vec(), 0.0));
                }
                let cands: Vec<(Point, f64)> = sawtooth_pieces(*k_max)
                    .iter()
                    .map(|piece| {
                        let p = piece.closest_to(q);
                        let d = vm::dist(q, &p);
                        (p, d)
                    })
                    .collect();
                Ok(ProjectionResult::from_candidates(q, cands, true))
            }
        }
    }

    /// Distance from `q` to the set.
    pub fn distance(&self, q: &[f64]) -> Result<f64> {
        Ok(self.project(q)?.distance)
    }

    /// Scale-free membership test: `d(q) ≤ tol · (1 + ‖q‖)`.
    pub fn membership(&self, q: &[f64], tol: f64) -> Result<bool> {
        Ok(self.distance(q)? <= tol * (1.0 + vm::norm(q)))
    }

    /// Select one nearest point of `q` according to `policy`.
    ///
    /// `prev` is the previously selected point for `NearestToPrevious`.
    /// `All` is an enumeration policy, not a selection, and is refused.
    pub fn select_nearest(
        &self,
        q: &[f64],
        policy: TiePolicy,
        prev: Option<&[f64]>,
    ) -> Result<Point> {
        let mut res = self.project(q)?;
        match policy {
            TiePolicy::All => Err(Error::Unsupported(
                "tie policy 'all' enumerates nearest points and cannot select a unique one; \
                 use 'lex_min' or 'nearest_to_previous'"
                    .into(),
            )),
            TiePolicy::LexMin => Ok(res.nearest.into_iter().next().expect("nonempty")),
            TiePolicy::NearestToPrevious => match prev {
                None => Ok(res.nearest.into_iter().next().expect("nonempty")),
                Some(p) => {
                    // nearest list is lex-sorted, so strict `<` keeps the
                    // lexicographically smallest among equally close points.
                    let mut best = 0;
                    let mut best_d = f64::INFINITY;
                    for (i, cand) in res.nearest.iter().enumerate() {
                        let d = vm::dist(cand, p);
                        if d < best_d {
                            best_d = d;
                            best = i;
                        }
                    }
                    Ok(res.nearest.swap_remove(best))
                }
            },
        }
    }

    /// Draw a random member. `scale` bounds the coordinate range explored
    /// on unbounded variants. Used by sampling diagnostics and probes.
    pub fn sample_point(&self, rng: &mut impl Rng, scale: f64) -> Result<Point> {
        match self {
            ClosedSet::Finite { points } => Ok(points[rng.gen_range(0..points.len())].clone()),
            ClosedSet::Affine { base, directions } => {
                let mut p = base.clone();
                for u in directions {
                    let c = rng.gen_range(-scale..=scale);
                    for (pi, ui) in p.iter_mut().zip(u) {
                        *pi += c * ui;
                    }
                }
                Ok(p)
            }
            ClosedSet::HalfSpace { normal, offset } => {
                let d = normal.len();
                let raw: Point = (0..d).map(|_| rng.gen_range(-scale..=scale)).collect();
                let s = vm::dot(normal, &raw) - offset;
                if s > 0.0 {
                    Ok(raw.iter().zip(normal).map(|(x, n)| x - s * n).collect())
                } else {
                    Ok(raw)
                }
            }
            ClosedSet::BoxSet { lower, upper } => Ok(lower
                .iter()
                .zip(upper)
                .map(|(lo, hi)| match (lo, hi) {
                    (Some(l), Some(h)) => {
                        if l == h {
                            *l
                        } else {
                            rng.gen_range(*l..=*h)
                        }
                    }
                    (Some(l), None) => l + rng.gen_range(0.0..=2.0 * scale),
                    (None, Some(h)) => h - rng.gen_range(0.0..=2.0 * scale),
                    (None, None) => rng.gen_range(-scale..=scale),
                })
                .collect()),
            ClosedSet::Ball { center, radius } => {
                let dir = random_unit(rng, center.len());
                Ok(center
                    .iter()
                    .zip(&dir)
                    .map(|(c, u)| c + radius * u)
                    .collect())
            }
            ClosedSet::Transformed {
                inner,
                rotation,
                translation,
            } => {
                let p = inner.sample_point(rng, scale)?;
                Ok(vm::add(&vm::mat_vec(rotation, &p), translation))
            }
            ClosedSet::Sawtooth { k_max } => {
                let x = rng.gen_range(-scale..=scale);
                let depth = rng.gen_range(0.0..=scale);
                Ok(vec![x, sawtooth_profile(x, *k_max) - depth])
            }
        }
    }

    /// Draw a boundary point near `center`, spreading about `spread` along
    /// the boundary. Best effort: callers filter by their own radii.
    pub fn sample_boundary(
        &self,
        rng: &mut impl Rng,
        center: &[f64],
        spread: f64,
    ) -> Result<Point> {
        self.check_dim(center)?;
        match self {
            ClosedSet::Finite { points } => Ok(points[rng.gen_range(0..points.len())].clone()),
            ClosedSet::Affine { base, directions } => {
                if directions.len() == base.len() {
                    return Err(Error::Unsupported(
                        "a full-dimensional affine set has empty boundary".into(),
                    ));
                }
                let foot = self.project(center)?.nearest.remove(0);
                let mut p = foot;
                for u in directions {
                    let c = rng.gen_range(-spread..=spread);
                    for (pi, ui) in p.iter_mut().zip(u) {
                        *pi += c * ui;
                    }
                }
                Ok(p)
            }
            ClosedSet::HalfSpace { normal, offset } => {
                let s = vm::dot(normal, center) - offset;
                let foot: Point = center.iter().zip(normal).map(|(x, n)| x - s * n).collect();
                // Random tangential offset: Gaussian-ish direction minus its
                // normal component, scaled into [0, spread].
                let dir = random_unit(rng, normal.len());
                let ncomp = vm::dot(&dir, normal);
                let t = rng.gen_range(0.0..=spread);
                Ok(foot
                    .iter()
                    .zip(dir.iter().zip(normal))
                    .map(|(f, (u, n))| f + t * (u - ncomp * n))
                    .collect())
            }
            ClosedSet::BoxSet { lower, upper } => {
                let bounded: Vec<usize> = (0..lower.len())
                    .filter(|&i| lower[i].is_some() || upper[i].is_some())
                    .collect();
                if bounded.is_empty() {
                    return Err(Error::Unsupported(
                        "the whole space has empty boundary".into(),
                    ));
                }
                let mut p = self.sample_point(rng, spread.max(1.0))?;
                let i = bounded[rng.gen_range(0..bounded.len())];
                p[i] = match (lower[i], upper[i]) {
                    (Some(l), Some(h)) => {
                        if rng.gen_bool(0.5) {
                            l
                        } else {
                            h
                        }
                    }
                    (Some(l), None) => l,
                    (None, Some(h)) => h,
                    (None, None) => unreachable!("index was filtered as bounded"),
                };
                Ok(p)
            }
            ClosedSet::Ball { .. } => self.sample_point(rng, spread),
            ClosedSet::Transformed {
                inner,
                rotation,
                translation,
            } => {
                let local = vm::mat_t_vec(rotation, &vm::sub(center, translation));
                let p = inner.sample_boundary(rng, &local, spread)?;
                Ok(vm::add(&vm::mat_vec(rotation, &p), translation))
            }
            ClosedSet::Sawtooth { k_max } => {
                let x = center[0] + rng.gen_range(-2.0 * spread..=2.0 * spread);
                Ok(vec![x, sawtooth_profile(x, *k_max)])
            }
        }
    }

    /// Deterministic distinguished points of the set (vertices, peaks,
    /// valleys, axis points). Probes mix these with random samples so that
    /// geometrically extremal witnesses are never missed by chance.
    pub fn feature_points(&self) -> Vec<Point> {
        match self {
            ClosedSet::Finite { points } => points.clone(),
            ClosedSet::Affine { base, .. } => vec![base.clone()],
            ClosedSet::HalfSpace { normal, offset } => {
                vec![vm::scale(normal, *offset)]
            }
            ClosedSet::BoxSet { lower, upper } => {
                let d = lower.len();
                let bounded: Vec<usize> = (0..d)
                    .filter(|&i| lower[i].is_some() && upper[i].is_some())
                    .collect();
                if bounded.is_empty() || bounded.len() > 6 {
                    return Vec::new();
                }
                // All corners over the doubly-bounded coordinates, zeros elsewhere.
                let mut corners = Vec::new();
                for mask in 0..(1usize << bounded.len()) {
                    let mut p = vec![0.0; d];
                    for (bit, &i) in bounded.iter().enumerate() {
                        p[i] = if mask >> bit & 1 == 1 {
                            upper[i].unwrap()
                        } else {
                            lower[i].unwrap()
                        };
                    }
                    corners.push(p);
                }
                corners
            }
            ClosedSet::Ball { center, radius } => {
                let d = center.len();
                let mut pts = Vec::with_capacity(2 * d);
                for i in 0..d {
                    for sign in [-1.0, 1.0] {
                        let mut p = center.clone();
                        p[i] += sign * radius;
                        pts.push(p);
                    }
                }
                pts
            }
            ClosedSet::Transformed {
                inner,
                rotation,
                translation,
            } => inner
                .feature_points()
                .iter()
                .map(|p| vm::add(&vm::mat_vec(rotation, p), translation))
                .collect(),
            ClosedSet::Sawtooth { k_max } => {
                let mut pts = vec![vec![0.0, 0.0]];
                let tanw = sawtooth_w().tan();
                for k in 0..=*k_max as i32 {
                    let peak = 2f64.powi(-k);
                    pts.push(vec![peak, 0.0]);
                    pts.push(vec![0.75 * peak, -0.25 * peak * tanw]);
                }
                pts
            }
        }
    }
}

/// A random unit vector (uniform on the sphere) in dimension `d`.
pub(crate) fn random_unit(rng: &mut impl Rng, d: usize) -> Point {
    loop {
        // Box-Muller pairs give a rotation-invariant Gaussian sample.
        let v: Point = (0..d)
            .map(|_| {
                let u1: f64 = rng.gen_range(f64::EPSILON..1.0);
                let u2: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
                (-2.0 * u1.ln()).sqrt() * u2.cos()
            })
            .collect();
        let n = vm::norm(&v);
        if n > 1e-12 {
            return vm::scale(&v, 1.0 / n);
        }
    }
}

/// Relaxed projection step onto `set`: select a nearest point `a` of `y`
/// per `policy`, then move the fraction `lambda` of the way toward it.
///
/// Returns `(x, a)` with `x = (1 − λ)·y + λ·a`. The step satisfies
/// `‖x − y‖ = λ·d(y)` and `λ(x − a) = (1 − λ)(y − x)`; for `λ < 1` the
/// point `x` projects back to exactly `{a}`. `λ = 1` returns `x = a`
/// bitwise (no arithmetic on the degenerate combination).
pub fn relaxed_project(
    set: &ClosedSet,
    y: &[f64],
    lambda: f64,
    policy: TiePolicy,
    prev: Option<&[f64]>,
) -> Result<(Point, Point)> {
    if !(lambda > 0.0 && lambda <= 1.0) {
        return Err(Error::InvalidSchedule(format!(
            "relaxation parameter must lie in (0, 1], got {lambda}"
        )));
    }
    let a = set.select_nearest(y, policy, prev)?;
    let x = vm::lerp(y, &a, lambda);
    Ok((x, a))
}

/// Wrap `inner` in an isometry `x ↦ Q·x + t`, validating `Q` orthogonal.
pub fn transform_set(
    inner: ClosedSet,
    rotation: Vec<Vec<f64>>,
    translation: Point,
) -> Result<ClosedSet> {
    let set = ClosedSet::Transformed {
        inner: std::boxed::Box::new(inner),
        rotation,
        translation,
    };
    set.validate()?;
    Ok(set)
}

/// The 2×2 reflection matrix about the line through the origin at `angle`.
pub fn reflection_about_line(angle: f64) -> Vec<Vec<f64>> {
    let (s, c) = (2.0 * angle).sin_cos();
    vec![vec![c, s], vec![s, -c]]
}

/// The worst-case nonconvex pair: the sawtooth hypograph `A` and its mirror
/// image `B` under the reflector about the line at angle `2w`. The pair
/// meets only at the origin, and each tooth peak of `A` pairs with its
/// reflection on `B` at matched scales.
pub fn sawtooth_pair(k_max: u32) -> (ClosedSet, ClosedSet) {
    let a = ClosedSet::Sawtooth { k_max };
    let b = ClosedSet::Transformed {
        inner: std::boxed::Box::new(a.clone()),
        rotation: reflection_about_line(2.0 * sawtooth_w()),
        translation: vec![0.0, 0.0],
    };
    (a, b)
}

/// Distinguished points of tooth `k` of the sawtooth pair and the exact
/// distances that make it a worst case for alternating projections.
#[derive(Clone, Debug)]
pub struct SawtoothLandmarks {
    /// Tooth peak `s_k = (2⁻ᵏ, 0)`.
    pub s_k: Point,
    /// Next (smaller) peak `s_{k+1} = (2⁻⁽ᵏ⁺¹⁾, 0)`.
    pub s_k_next: Point,
    /// Valley vertex between `s_{k+1}` and `s_k`.
    pub valley: Point,
    /// Mirror image `z_k` of `s_k` on the reflected copy.
    pub z_k: Point,
    /// Distance `‖z_k − s_{k+1}‖ = d√2` with `d = 2⁻⁽ᵏ⁺¹⁾`.
    pub beta1: f64,
    /// Distance `‖z_k − s_k‖ = d√2`.
    pub beta2: f64,
    /// Cosine of the angle at `z_k` in the triangle `(s_{k+1}, z_k, s_k)`;
    /// exactly 3/4.
    pub cos_angle: f64,
}

/// Landmarks of tooth `k` (requires `1 ≤ k ≤ k_max − 1` so both peaks and
/// the reflected image are resolved teeth).
pub fn sawtooth_landmarks(set: &ClosedSet, k: u32) -> Result<SawtoothLandmarks> {
    let k_max = match set {
        ClosedSet::Sawtooth { k_max } => *k_max,
        _ => {
            return Err(Error::Unsupported(
                "landmarks are defined for the sawtooth set".into(),
            ))
        }
    };
    if k < 1 || k > k_max - 1 {
        return Err(Error::InvalidSet(format!(
            "tooth index {k} outside [1, {}]",
            k_max - 1
        )));
    }
    let tanw = sawtooth_w().tan();
    let peak = 2f64.powi(-(k as i32));
    let s_k = vec![peak, 0.0];
    let s_k_next = vec![peak / 2.0, 0.0];
    let valley = vec![0.75 * peak, -0.25 * peak * tanw];
    // Reflecting s_k about the line at angle 2w lands at 2⁻ᵏ(cos 4w, sin 4w)
    // = 2⁻ᵏ(3/4, √7/4).
    let z_k = vec![peak * 0.75, peak * (7f64).sqrt() / 4.0];
    let beta1 = vm::dist(&z_k, &s_k_next);
    let beta2 = vm::dist(&z_k, &s_k);
    let u = vm::sub(&s_k_next, &z_k);
    let v = vm::sub(&s_k, &z_k);
    let cos_angle = vm::dot(&u, &v) / (beta1 * beta2);
    Ok(SawtoothLandmarks {
        s_k,
        s_k_next,
        valley,
        z_k,
        beta1,
        beta2,
        cos_angle,
    })
}

/// Piecewise-linear sawtooth profile. Zero for `x ≤ 0`, for `x > 1`, and on
/// the unresolved stub below `2⁻⁽ᵏ_ᵐᵃˣ⁺¹⁾`; on tooth `k` the graph descends
/// from the peak `(2⁻ᵏ, 0)` at slope `tan w` down to the valley and back up
/// to the next peak.
pub fn sawtooth_profile(x: f64, k_max: u32) -> f64 {
    if x <= 0.0 || x > 1.0 {
        return 0.0;
    }
    let k = (-x.log2()).floor() as i64;
    if k < 0 || k > k_max as i64 {
        // Beyond the resolved teeth (or exactly at 1 with rounding): flat.
        return 0.0;
    }
    let peak = 2f64.powi(-(k as i32));
    if x <= 0.5 * peak {
        // Closed-right convention: x = 2⁻⁽ᵏ⁺¹⁾ is the next peak.
        return 0.0;
    }
    let tanw = sawtooth_w().tan();
    let valley_x = 0.75 * peak;
    if x > valley_x {
        tanw * (x - peak)
    } else {
        -tanw * (x - 0.5 * peak)
    }
}

/// A line piece of the sawtooth boundary.
pub(crate) enum Piece {
    /// Segment from `a` to `b`.
    Segment([f64; 2], [f64; 2]),
    /// Ray from `origin` along `dir`.
    Ray([f64; 2], [f64; 2]),
}

impl Piece {
    pub(crate) fn closest_to(&self, q: &[f64]) -> Point {
        match self {
            Piece::Segment(a, b) => {
                let dx = b[0] - a[0];
                let dy = b[1] - a[1];
                let len2 = dx * dx + dy * dy;
                let t = (((q[0] - a[0]) * dx + (q[1] - a[1]) * dy) / len2).clamp(0.0, 1.0);
                vec![a[0] + t * dx, a[1] + t * dy]
            }
            Piece::Ray(o, dir) => {
                let len2 = dir[0] * dir[0] + dir[1] * dir[1];
                let t = (((q[0] - o[0]) * dir[0] + (q[1] - o[1]) * dir[1]) / len2).max(0.0);
                vec![o[0] + t * dir[0], o[1] + t * dir[1]]
            }
        }
    }
}

/// The full boundary of the truncated sawtooth hypograph: a left ray that
/// also covers the unresolved stub and the origin, two segments per tooth,
/// and a right ray past `x = 1`. About 2·k_max + 4 closed-form pieces, so
/// exhaustive scanning is cheap and safe near the accumulation point.
pub(crate) fn sawtooth_pieces(k_max: u32) -> Vec<Piece> {
    let tanw = sawtooth_w().tan();
    let stub_end = 2f64.powi(-(k_max as i32 + 1));
    let mut pieces = vec![
        Piece::Ray([stub_end, 0.0], [-1.0, 0.0]),
        Piece::Ray([1.0, 0.0], [1.0, 0.0]),
    ];
    for k in 0..=k_max as i32 {
        let peak = 2f64.powi(-k);
        let next = 0.5 * peak;
        let valley = [0.75 * peak, -0.25 * peak * tanw];
        pieces.push(Piece::Segment([next, 0.0], valley));
        pieces.push(Piece::Segment(valley, [peak, 0.0]));
    }
    pieces
}
