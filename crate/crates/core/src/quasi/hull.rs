use crate::error::Result;
use crate::scalar::{from_usize, lit, Scalar};

use super::PositiveSequence;

/// Indices of the vertices of the lower convex hull of `(n, y_n)`.
///
/// Monotone chain over the already sorted abscissae. Points within
/// `1e-12` (relative) of a hull edge count as collinear and are dropped.
pub fn lower_hull_vertices<T: Scalar>(y: &[T]) -> Vec<usize> {
    let tol = lit::<T>(1e-12);
    let mut hull: Vec<usize> = Vec::with_capacity(y.len());
    for i in 0..y.len() {
        while hull.len() >= 2 {
            let a = hull[hull.len() - 2];
            let b = hull[hull.len() - 1];
            let (xa, xb, xi) = (from_usize::<T>(a), from_usize::<T>(b), from_usize::<T>(i));
            // b lies on or above segment a-i when the turn a->b->i is not
            // strictly counter-clockwise
            let cross = (xb - xa) * (y[i] - y[a]) - (y[b] - y[a]) * (xi - xa);
            let scale = T::one() + y[a].abs().max(y[b].abs()).max(y[i].abs());
            if cross <= tol * scale * (xi - xa) {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(i);
    }
    hull
}

/// Lower convex envelope of `y`, evaluated at every index. Hull vertices keep
/// their original value.
pub fn lower_envelope<T: Scalar>(y: &[T]) -> Vec<T> {
    let v = lower_hull_vertices(y);
    let mut out = y.to_vec();
    for w in v.windows(2) {
        let (a, b) = (w[0], w[1]);
        let slope = (y[b] - y[a]) / from_usize::<T>(b - a);
        for (k, o) in out.iter_mut().enumerate().take(b).skip(a + 1) {
            *o = y[a] + slope * from_usize::<T>(k - a);
        }
    }
    out
}

/// Log-convex regularization `M^c` of `M_0..M_K`: the exponential of the
/// lower convex envelope of `ln M_n`.
pub fn log_convex_regularize<T: Scalar>(m: &PositiveSequence<T>, k: usize) -> Result<PositiveSequence<T>> {
    let ln = m.ln_terms_upto(k)?;
    PositiveSequence::from_ln_terms(lower_envelope(&ln))
}

/// Hull vertex indices of `ln M_0..ln M_K`.
pub fn regularization_vertices<T: Scalar>(m: &PositiveSequence<T>, k: usize) -> Result<Vec<usize>> {
    Ok(lower_hull_vertices(&m.ln_terms_upto(k)?))
}

/// Largest relative log-convexity defect `M_n² / (M_{n-1} M_{n+1}) - 1`
/// over interior indices, or zero.
pub fn log_convexity_defect<T: Scalar>(ln: &[T]) -> T {
    let mut worst = T::zero();
    for n in 1..ln.len().saturating_sub(1) {
        let d = (ln[n] + ln[n] - ln[n - 1] - ln[n + 1]).exp_m1();
        worst = worst.max(d);
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn regularize(terms: &[f64]) -> Vec<f64> {
        let s = PositiveSequence::from_terms(terms).unwrap();
        let r = log_convex_regularize(&s, terms.len() - 1).unwrap();
        (0..terms.len()).map(|n| r.term(n).unwrap()).collect()
    }

    #[test]
    fn geometric_sequence_unchanged() {
        let r = regularize(&[1.0, 2.0, 4.0, 8.0]);
        for (a, b) in r.iter().zip([1.0, 2.0, 4.0, 8.0]) {
            assert_relative_eq!(*a, b, max_relative = 1e-14);
        }
    }

    #[test]
    fn bump_is_flattened_to_geometric_mean() {
        let r = regularize(&[1.0, 10.0, 10.0, 1000.0]);
        let expect = [1.0, 10f64.sqrt(), 10.0, 1000.0];
        for (a, b) in r.iter().zip(expect) {
            assert_relative_eq!(*a, b, max_relative = 1e-14);
        }
    }

    #[test]
    fn constant_sequence_unchanged() {
        for v in regularize(&[5.0, 5.0, 5.0]) {
            assert_relative_eq!(v, 5.0, max_relative = 1e-15);
        }
    }

    #[test]
    fn brute_force_hull_agrees() {
        // envelope = max over all lines through two points that stay below every point
        let y = [0.3, -1.0, 2.0, 0.5, 0.4, 3.0, 1.0, 7.5];
        let env = lower_envelope(&y);
        for n in 0..y.len() {
            let mut best = f64::NEG_INFINITY;
            for a in 0..y.len() {
                for b in (a + 1)..y.len() {
                    let slope = (y[b] - y[a]) / (b - a) as f64;
                    let line = |k: usize| y[a] + slope * (k as f64 - a as f64);
                    if (0..y.len()).all(|k| line(k) <= y[k] + 1e-12) {
                        best = best.max(line(n));
                    }
                }
            }
            assert_relative_eq!(env[n], best, epsilon = 1e-12);
        }
    }
}
