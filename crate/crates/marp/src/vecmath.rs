//! Small dense-vector helpers used across the crate.
//!
//! Points are plain `Vec<f64>`; every routine here is dimension-agnostic and
//! allocation-light. Nothing in this module knows about sets or schedules.

/// Euclidean inner product. Panics on length mismatch in debug builds only.
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Euclidean norm.
pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Euclidean distance between two points.
pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Component-wise `a - b`.
pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

/// Component-wise `a + b`.
pub fn add(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

/// Scalar multiple `s * a`.
pub fn scale(a: &[f64], s: f64) -> Vec<f64> {
    a.iter().map(|x| s * x).collect()
}

/// Convex/affine combination `(1 - t) * a + t * b`.
///
/// Computed as `a + t (b - a)` so that `t = 0` returns `a` bitwise and
/// `t = 1` returns `b` bitwise.
pub fn lerp(a: &[f64], b: &[f64], t: f64) -> Vec<f64> {
    debug_assert_eq!(a.len(), b.len());
    if t == 0.0 {
        return a.to_vec();
    }
    if t == 1.0 {
        return b.to_vec();
    }
    a.iter().zip(b).map(|(x, y)| x + t * (y - x)).collect()
}

/// Strict lexicographic order on coordinate vectors.
///
/// Total order on distinct points; `-0.0` and `0.0` compare equal, and the
/// inputs are expected to be NaN-free (all set constructors reject NaN).
pub fn lex_less(a: &[f64], b: &[f64]) -> bool {
    for (x, y) in a.iter().zip(b) {
        if x < y {
            return true;
        }
        if x > y {
            return false;
        }
    }
    false
}

/// `true` when every coordinate pair is within `tol` absolutely.
pub fn approx_eq(a: &[f64], b: &[f64], tol: f64) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
}

/// `true` when all coordinates are finite.
pub fn all_finite(a: &[f64]) -> bool {
    a.iter().all(|x| x.is_finite())
}

/// Apply a row-major square matrix: `(M v)_i = Σ_j M[i][j] v[j]`.
pub fn mat_vec(m: &[Vec<f64>], v: &[f64]) -> Vec<f64> {
    m.iter().map(|row| dot(row, v)).collect()
}

/// Apply the transpose of a row-major square matrix.
pub fn mat_t_vec(m: &[Vec<f64>], v: &[f64]) -> Vec<f64> {
    let d = v.len();
    let mut out = vec![0.0; m.first().map_or(0, |r| r.len())];
    for i in 0..d {
        for (j, o) in out.iter_mut().enumerate() {
            *o += m[i][j] * v[i];
        }
    }
    out
}
