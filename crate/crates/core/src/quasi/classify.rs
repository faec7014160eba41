use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{from_usize, lit, Scalar};

use super::hull::{log_convexity_defect, lower_envelope};
use super::PositiveSequence;

/// Partial sums of the Denjoy-Carleman series; entry `k` holds the sum over
/// `n = 1..=k+1`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DjSums<T> {
    pub n_terms: usize,
    /// `Σ 1/M_n^{1/n}`
    pub raw: Vec<T>,
    /// `Σ 1/β_n` with `β_n = min_{n<=k<=N} M_k^{1/k}`
    pub beta: Vec<T>,
    /// `Σ 1/(M^c_n)^{1/n}`
    pub regularized_root: Vec<T>,
    /// `Σ M^c_{n-1}/M^c_n`
    pub ratio: Vec<T>,
}

impl<T: Scalar> DjSums<T> {
    /// Final partial sums `(raw, beta, regularized_root, ratio)`.
    pub fn totals(&self) -> [T; 4] {
        let last = |v: &Vec<T>| v.last().copied().unwrap_or_else(T::zero);
        [last(&self.raw), last(&self.beta), last(&self.regularized_root), last(&self.ratio)]
    }
}

fn cumulative<T: Scalar>(terms: impl Iterator<Item = T>) -> Vec<T> {
    let mut acc = T::zero();
    terms
        .map(|t| {
            acc = acc + t;
            acc
        })
        .collect()
}

/// The raw Carleman sum and the three Denjoy-Carleman forms up to `n_terms`.
/// The infimum in `β_n` is truncated at `n_terms`, which over-estimates
/// `β_n`; the `beta` sums are therefore lower bounds.
pub fn dj_carleman_sums<T: Scalar>(m: &PositiveSequence<T>, n_terms: usize) -> Result<DjSums<T>> {
    let ln = m.ln_terms_upto(n_terms)?;
    Ok(dj_sums_from_ln(&ln))
}

pub(crate) fn dj_sums_from_ln<T: Scalar>(ln: &[T]) -> DjSums<T> {
    let n_terms = ln.len() - 1;
    let lnc = lower_envelope(ln);
    let root = |v: &[T], n: usize| v[n] / from_usize::<T>(n);

    let mut suffix_min = vec![T::infinity(); n_terms + 2];
    for n in (1..=n_terms).rev() {
        suffix_min[n] = suffix_min[n + 1].min(root(ln, n));
    }
    DjSums {
        n_terms,
        raw: cumulative((1..=n_terms).map(|n| (-root(ln, n)).exp())),
        beta: cumulative((1..=n_terms).map(|n| (-suffix_min[n]).exp())),
        regularized_root: cumulative((1..=n_terms).map(|n| (-root(&lnc, n)).exp())),
        ratio: cumulative((1..=n_terms).map(|n| (lnc[n - 1] - lnc[n]).exp())),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    pub eps_fit: f64,
    pub delta_gap: f64,
    /// Divergence is declared when the form (3) sum exceeds this times `ln N`.
    pub divergence_slope: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self { eps_fit: 0.05, delta_gap: 0.10, divergence_slope: 0.5 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QaClass {
    QuasiAnalytic,
    NotQuasiAnalytic,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QaEvidence<T> {
    pub n_terms: usize,
    /// `max ln(M^c_n/M^c_0) / (n ln n)` over the last quarter of the range.
    pub fitted_exponent: T,
    /// Log-log decay slope of the form (3) terms over the last quarter.
    pub tail_exponent: T,
    /// Final partial sums `(raw, beta, regularized_root, ratio)`.
    pub sums: [T; 4],
    pub divergence_threshold: T,
    pub thresholds: Thresholds,
    /// Indicators that disagree, filled when the verdict is inconclusive.
    pub conflicts: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QaVerdict<T> {
    pub classification: QaClass,
    pub evidence: QaEvidence<T>,
}

pub const MIN_CLASSIFY_TERMS: usize = 50;

/// Numerical quasi-analyticity verdict from `M_0..M_N`.
///
/// The statistic is the growth exponent of the normalized regularized
/// sequence against `n ln n`, which is the exact boundary since
/// `ln n! ~ n ln n`. Normalizing by `M^c_0` makes the verdict invariant
/// under constant rescaling.
pub fn classify<T: Scalar>(m: &PositiveSequence<T>, n_terms: usize, thr: Thresholds) -> Result<QaVerdict<T>> {
    if n_terms < MIN_CLASSIFY_TERMS {
        return Err(Error::InsufficientTerms { required: MIN_CLASSIFY_TERMS, available: n_terms });
    }
    classify_ln(&m.ln_terms_upto(n_terms)?, thr)
}

pub(crate) fn classify_ln<T: Scalar>(ln: &[T], thr: Thresholds) -> Result<QaVerdict<T>> {
    let n_terms = ln.len().saturating_sub(1);
    if n_terms < MIN_CLASSIFY_TERMS {
        return Err(Error::InsufficientTerms { required: MIN_CLASSIFY_TERMS, available: n_terms });
    }
    let lnc = lower_envelope(ln);
    let normalized: Vec<T> = lnc.iter().map(|&x| x - lnc[0]).collect();
    let sums = dj_sums_from_ln(ln);
    let norm_sums = dj_sums_from_ln(&normalized);
    let form3 = norm_sums.totals()[2];

    let lo = (3 * n_terms).div_ceil(4);
    let nf = |n: usize| from_usize::<T>(n);
    let fitted_exponent = (lo..=n_terms)
        .map(|n| normalized[n] / (nf(n) * nf(n).ln()))
        .fold(T::neg_infinity(), T::max);
    let ln_term = |n: usize| -normalized[n] / nf(n);
    let tail_exponent = -(ln_term(n_terms) - ln_term(lo)) / (nf(n_terms).ln() - nf(lo).ln());
    let divergence_threshold = lit::<T>(thr.divergence_slope) * nf(n_terms).ln();

    let diverges = form3 > divergence_threshold;
    let slow = fitted_exponent <= lit(1.0 + thr.eps_fit);
    let fast = fitted_exponent >= lit(1.0 + thr.delta_gap);
    let tail_summable = tail_exponent >= lit(1.0 + thr.delta_gap);

    let classification = if slow && diverges {
        QaClass::QuasiAnalytic
    } else if fast && tail_summable {
        QaClass::NotQuasiAnalytic
    } else {
        QaClass::Inconclusive
    };
    let mut conflicts = Vec::new();
    if classification == QaClass::Inconclusive {
        if slow && !diverges {
            conflicts.push(format!("growth exponent {fitted_exponent} is near 1 but the form (3) sum {form3} stays below {divergence_threshold}"));
        }
        if fast && !tail_summable {
            conflicts.push(format!("growth exponent {fitted_exponent} is large but the form (3) tail decays only like n^-{tail_exponent}"));
        }
        if !slow && !fast {
            conflicts.push(format!("growth exponent {fitted_exponent} lies in the undecided band ({}, {})", 1.0 + thr.eps_fit, 1.0 + thr.delta_gap));
        }
    }
    Ok(QaVerdict {
        classification,
        evidence: QaEvidence {
            n_terms,
            fitted_exponent,
            tail_exponent,
            sums: sums.totals(),
            divergence_threshold,
            thresholds: thr,
            conflicts,
        },
    })
}

/// `(M_{jn})^{1/j}` together with a flag raised when the input is not
/// log-convex on the inspected range (the class comparison assumes it is).
pub fn subsequence_class<T: Scalar>(m: &PositiveSequence<T>, j: usize) -> Result<(PositiveSequence<T>, bool)> {
    let inspect = m.available().unwrap_or(512).min(512);
    let ln = m.ln_terms_upto(inspect.saturating_sub(1))?;
    let not_log_convex = log_convexity_defect(&ln) > lit(1e-12);
    Ok((m.subsequence(j)?, not_log_convex))
}

/// Certificate that `d_n` is not quasi-analytic, so a compactly supported
/// smooth bump with `|φ^{(n)}| <= d_n` exists.
#[derive(Debug, Clone)]
pub struct BumpToken<T> {
    sequence: PositiveSequence<T>,
    verdict: QaVerdict<T>,
}

impl<T: Scalar> BumpToken<T> {
    pub fn d(&self, n: usize) -> Result<T> {
        self.sequence.term(n)
    }

    pub fn sequence(&self) -> &PositiveSequence<T> {
        &self.sequence
    }

    pub fn verdict(&self) -> &QaVerdict<T> {
        &self.verdict
    }
}

pub fn bump_derivative_bounds<T: Scalar>(d_seq: &PositiveSequence<T>, n_terms: usize) -> Result<BumpToken<T>> {
    let verdict = classify(d_seq, n_terms, Thresholds::default())?;
    match verdict.classification {
        QaClass::NotQuasiAnalytic => Ok(BumpToken { sequence: d_seq.clone(), verdict }),
        QaClass::QuasiAnalytic => Err(Error::SequenceIsQuasiAnalytic),
        QaClass::Inconclusive => Err(Error::ClassificationInconclusive),
    }
}
