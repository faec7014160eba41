use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::scalar::{from_usize, lit, log_add_exp, Scalar};

type LnFn<T> = Arc<dyn Fn(usize) -> Option<T> + Send + Sync>;

/// Positive, non-increasing, summable sequence `a_n` with a computable tail
/// `Σ_{k>=n} a_k`. Both are supplied in log space.
#[derive(Clone)]
pub struct SummableSequence<T> {
    ln_term: LnFn<T>,
    ln_tail: LnFn<T>,
    /// Linear-space tail, used for exact comparisons when it is a normal
    /// float.
    tail: LnFn<T>,
    label: String,
}

impl<T> fmt::Debug for SummableSequence<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SummableSequence({})", self.label)
    }
}

impl<T: Scalar> SummableSequence<T> {
    pub fn from_fns(
        label: impl Into<String>,
        ln_term: impl Fn(usize) -> Option<T> + Send + Sync + 'static,
        ln_tail: impl Fn(usize) -> Option<T> + Send + Sync + 'static,
    ) -> Self {
        let ln_tail: LnFn<T> = Arc::new(ln_tail);
        let lt = ln_tail.clone();
        Self {
            ln_term: Arc::new(ln_term),
            ln_tail,
            tail: Arc::new(move |n| lt(n).map(T::exp)),
            label: label.into(),
        }
    }

    /// `a_n = r^n` with `0 < r < 1`; tail `r^n / (1 - r)`.
    pub fn geometric(r: T) -> Result<Self> {
        if !(r > T::zero() && r < T::one()) {
            return Err(Error::InvalidInput(format!("geometric ratio must lie in (0, 1), got {r}")));
        }
        let lr = r.ln();
        let l1 = (T::one() - r).ln();
        let mut s = Self::from_fns(
            format!("geometric({r})"),
            move |n| Some(lr * from_usize::<T>(n)),
            move |n| Some(lr * from_usize::<T>(n) - l1),
        );
        s.tail = Arc::new(move |n| Some(r.powi(n as i32) / (T::one() - r)));
        Ok(s)
    }

    /// `a_n = (n+1)^{-p}` with `p > 1`; tail is the Hurwitz zeta value
    /// `ζ(p, n+1)`.
    pub fn inverse_power(p: T) -> Result<Self> {
        if !(p > T::one()) {
            return Err(Error::InvalidInput(format!("inverse power needs p > 1, got {p}")));
        }
        let pf = p.to_f64().expect("finite exponent");
        let mut s = Self::from_fns(
            format!("inverse_power({p})"),
            move |n| Some(-p * from_usize::<T>(n + 1).ln()),
            move |n| Some(lit(hurwitz_zeta(pf, (n + 1) as f64).ln())),
        );
        s.tail = Arc::new(move |n| Some(lit(hurwitz_zeta(pf, (n + 1) as f64))));
        Ok(s)
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn ln_term(&self, n: usize) -> Option<T> {
        (self.ln_term)(n)
    }

    pub fn ln_tail(&self, n: usize) -> Option<T> {
        (self.ln_tail)(n)
    }

    /// Whether `Σ_{j>=n} a_j <= 1/k²`.
    fn tail_below_inv_square(&self, n: usize, k: u64) -> Result<bool> {
        let kf = lit::<T>(k as f64);
        if let Some(t) = (self.tail)(n) {
            if t.is_normal() {
                return Ok(t * kf * kf <= T::one());
            }
        }
        let lt = self.ln_tail(n).ok_or(Error::TailNotComputable(n))?;
        Ok(lt + lit::<T>(2.0) * kf.ln() <= T::zero())
    }

    /// `N_k = min{m : Σ_{j>=m} a_j <= 1/k²}`, searched up to `limit`.
    pub fn threshold_index(&self, k: u64, limit: usize) -> Result<Option<usize>> {
        for m in 0..=limit {
            if self.tail_below_inv_square(m, k)? {
                return Ok(Some(m));
            }
        }
        Ok(None)
    }
}

/// `ζ(s, q) = Σ_{j>=0} (q + j)^{-s}` for `s > 1`, `q > 0`, by direct
/// summation up to `q + 20` followed by Euler-Maclaurin.
pub fn hurwitz_zeta(s: f64, q: f64) -> f64 {
    let mut acc = 0.0;
    let mut x = q;
    while x < q + 20.0 {
        acc += x.powf(-s);
        x += 1.0;
    }
    let tail = x.powf(1.0 - s) / (s - 1.0) + 0.5 * x.powf(-s) + s * x.powf(-s - 1.0) / 12.0
        - s * (s + 1.0) * (s + 2.0) * x.powf(-s - 3.0) / 720.0
        + s * (s + 1.0) * (s + 2.0) * (s + 3.0) * (s + 4.0) * x.powf(-s - 5.0) / 30240.0
        - s * (s + 1.0) * (s + 2.0) * (s + 3.0) * (s + 4.0) * (s + 5.0) * (s + 6.0) * x.powf(-s - 7.0) / 1_209_600.0;
    acc + tail
}

const EXACT_SQRT_SUM_LIMIT: u64 = 1_000_000;

/// Output of [`dominating_summable_sequence`], kept in log space.
#[derive(Debug, Clone, Serialize)]
pub struct DominatingSequence<T> {
    pub ln_a: Vec<T>,
    pub ln_b: Vec<T>,
    /// `ln K(n)` where `K(n) = #{k >= 1 : N_k <= n}`; `-inf` when empty.
    pub ln_count: Vec<T>,
}

impl<T: Scalar> DominatingSequence<T> {
    pub fn len(&self) -> usize {
        self.ln_b.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ln_b.is_empty()
    }

    pub fn b(&self, n: usize) -> T {
        self.ln_b[n].exp()
    }

    pub fn a(&self, n: usize) -> T {
        self.ln_a[n].exp()
    }

    /// `b_n / a_n`.
    pub fn ratio(&self, n: usize) -> T {
        (self.ln_b[n] - self.ln_a[n]).exp()
    }

    /// First index where `b_n / a_n` exceeds `level`.
    pub fn first_ratio_above(&self, level: T) -> Option<usize> {
        let l = level.ln();
        (0..self.len()).find(|&n| self.ln_b[n] - self.ln_a[n] > l)
    }
}

/// `b_n = min(a_n (1 + Σ_{k: N_k <= n} √k), b_{n-1})` for `n = 0..=n_terms`.
///
/// Since the tail is non-increasing, `N_k <= n` iff `tail(n) <= 1/k²`, so the
/// index set is `1..=K(n)` with `K(n) = floor(tail(n)^{-1/2})`. The sum of
/// square roots is exact while `K(n) <= 10^6`, and beyond that uses
/// `(2/3) K^{3/2} (1 + 3/(4K))`, whose relative error is below `10^-9`.
pub fn dominating_summable_sequence<T: Scalar>(a: &SummableSequence<T>, n_terms: usize) -> Result<DominatingSequence<T>> {
    let mut ln_a = Vec::with_capacity(n_terms + 1);
    let mut ln_b: Vec<T> = Vec::with_capacity(n_terms + 1);
    let mut ln_count = Vec::with_capacity(n_terms + 1);
    let mut k_done: u64 = 0;
    let mut sqrt_sum = T::zero();
    let mut exact = true;

    for n in 0..=n_terms {
        let la = a.ln_term(n).ok_or_else(|| Error::InvalidInput(format!("term {n} unavailable")))?;
        if !la.is_finite() {
            return Err(Error::NonPositiveTerm { index: n, value: la.exp().to_f64().unwrap_or(f64::NAN) });
        }
        if n > 0 && la > ln_a[n - 1] {
            return Err(Error::NotDecreasing(n));
        }
        let lt = a.ln_tail(n).ok_or(Error::TailNotComputable(n))?;
        if !lt.is_finite() {
            return Err(Error::TailNotComputable(n));
        }
        let ln_k_real = -lt / lit(2.0);

        let ln_s = if exact && ln_k_real <= lit((EXACT_SQRT_SUM_LIMIT as f64).ln()) {
            let mut k = ln_k_real.exp().floor().to_u64().unwrap_or(0).max(k_done);
            while a.tail_below_inv_square(n, k + 1)? {
                k += 1;
            }
            while k > k_done && !a.tail_below_inv_square(n, k)? {
                k -= 1;
            }
            for j in (k_done + 1)..=k {
                sqrt_sum = sqrt_sum + lit::<T>(j as f64).sqrt();
            }
            k_done = k;
            ln_count.push(if k == 0 { T::neg_infinity() } else { lit::<T>(k as f64).ln() });
            if k == 0 {
                T::neg_infinity()
            } else {
                sqrt_sum.ln()
            }
        } else {
            exact = false;
            ln_count.push(ln_k_real);
            let kinv = (-ln_k_real).exp();
            lit::<T>((2.0f64 / 3.0).ln()) + lit::<T>(1.5) * ln_k_real + (lit::<T>(0.75) * kinv).ln_1p()
        };

        let candidate = la + log_add_exp(T::zero(), ln_s);
        let lb = match ln_b.last() {
            Some(&prev) => candidate.min(prev),
            None => candidate,
        };
        ln_a.push(la);
        ln_b.push(lb);
    }
    Ok(DominatingSequence { ln_a, ln_b, ln_count })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn hurwitz_matches_known_values() {
        let z2 = std::f64::consts::PI.powi(2) / 6.0;
        assert_relative_eq!(hurwitz_zeta(2.0, 1.0), z2, max_relative = 1e-13);
        assert_relative_eq!(hurwitz_zeta(2.0, 3.0), z2 - 1.0 - 0.25, max_relative = 1e-13);
        assert_relative_eq!(hurwitz_zeta(1.5, 1.0), 2.612_375_348_685_488, max_relative = 1e-12);
        let direct: f64 = (0..2_000_000).map(|j| (50.0 + j as f64).powf(-3.0)).sum();
        assert_relative_eq!(hurwitz_zeta(3.0, 50.0), direct, max_relative = 1e-9);
    }

    #[test]
    fn geometric_thresholds_follow_log2_formula() {
        let a = SummableSequence::<f64>::geometric(0.5).unwrap();
        assert_eq!(a.threshold_index(1, 100).unwrap(), Some(1));
        for k in 2u64..200 {
            let expect = (2.0 * (k as f64).log2()).ceil() as usize + 1;
            assert_eq!(a.threshold_index(k, 100).unwrap(), Some(expect), "k={k}");
            // direct summation oracle
            let tail = |m: usize| (m..200).map(|j| 0.5f64.powi(j as i32)).sum::<f64>();
            assert!(tail(expect) <= 1.0 / (k * k) as f64 + 1e-15);
            assert!(tail(expect - 1) > 1.0 / (k * k) as f64);
        }
    }

    #[test]
    fn ratio_at_zero_counts_k_with_zero_threshold() {
        let a = SummableSequence::<f64>::geometric(0.5).unwrap();
        let b = dominating_summable_sequence(&a, 10).unwrap();
        // tail(0) = 2 > 1, so no k has N_k = 0
        assert_eq!(b.ratio(0), 1.0);
    }

    #[test]
    fn inverse_square_ratio_crosses_ten() {
        let a = SummableSequence::<f64>::inverse_power(2.0).unwrap();
        let b = dominating_summable_sequence(&a, 10_000).unwrap();
        let idx = b.first_ratio_above(10.0).unwrap();
        assert!(idx < 100, "crossing at {idx}");
        for n in 1..b.len() {
            assert!(b.ln_b[n] <= b.ln_b[n - 1]);
            assert!(b.ln_b[n] - b.ln_a[n] >= b.ln_b[n - 1] - b.ln_a[n - 1] - 1e-12);
        }
    }

    #[test]
    fn increasing_input_rejected() {
        let a = SummableSequence::<f64>::from_fns("bad", |n| Some(if n == 3 { 0.0 } else { -(n as f64) }), |_| Some(0.0));
        assert_eq!(dominating_summable_sequence(&a, 5).unwrap_err(), Error::NotDecreasing(3));
    }
}
