use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{from_usize, lit, ln_factorial, Scalar};

fn one() -> f64 {
    1.0
}

/// Closed-form sequences, evaluated in log space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", content = "params", rename_all = "snake_case")]
pub enum NamedRule {
    /// `M_n = c · b^n · (n!)^p`.
    FactorialPower {
        p: f64,
        #[serde(default = "one")]
        b: f64,
        #[serde(default = "one")]
        c: f64,
    },
    /// `M_n = (n!)^p · (ln n)^(q n)` for `n >= 2`, and `M_0 = M_1 = 1`.
    FactorialLogpow {
        #[serde(default = "one")]
        p: f64,
        q: f64,
    },
    /// Explicit table; no values beyond its end.
    CustomTable { values: Vec<f64> },
}

impl NamedRule {
    pub fn validate(&self) -> Result<()> {
        match self {
            NamedRule::FactorialPower { b, c, .. } => {
                if *b <= 0.0 || *c <= 0.0 {
                    return Err(Error::InvalidInput("factorial_power needs b > 0 and c > 0".into()));
                }
            }
            NamedRule::FactorialLogpow { .. } => {}
            NamedRule::CustomTable { values } => {
                if let Some((i, v)) = values.iter().enumerate().find(|(_, v)| !(**v > 0.0)) {
                    return Err(Error::NonPositiveTerm { index: i, value: *v });
                }
            }
        }
        Ok(())
    }

    pub fn ln_term<T: Scalar>(&self, n: usize) -> Option<T> {
        match self {
            NamedRule::FactorialPower { p, b, c } => {
                let v = p * ln_factorial::<f64>(n) + n as f64 * b.ln() + c.ln();
                Some(lit(v))
            }
            NamedRule::FactorialLogpow { p, q } => {
                if n <= 1 {
                    return Some(T::zero());
                }
                let nf = n as f64;
                Some(lit(p * ln_factorial::<f64>(n) + q * nf * nf.ln().ln()))
            }
            NamedRule::CustomTable { values } => values.get(n).map(|v| lit(v.ln())),
        }
    }
}

type LnFn<T> = Arc<dyn Fn(usize) -> T + Send + Sync>;

#[derive(Clone)]
pub enum Rule<T> {
    Named(NamedRule),
    /// Arbitrary `n -> ln M_n`.
    Ln(LnFn<T>),
}

impl<T> fmt::Debug for Rule<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Rule::Named(r) => write!(f, "{r:?}"),
            Rule::Ln(_) => write!(f, "<ln rule>"),
        }
    }
}

/// Positive sequence `M_0, M_1, ...` stored as logarithms. Terms beyond the
/// explicit table come from the rule, if any.
#[derive(Debug, Clone)]
pub struct PositiveSequence<T> {
    ln_terms: Vec<T>,
    rule: Option<Rule<T>>,
    normalized: bool,
}

impl<T: Scalar> PositiveSequence<T> {
    pub fn from_terms(terms: &[T]) -> Result<Self> {
        let mut ln_terms = Vec::with_capacity(terms.len());
        for (i, &m) in terms.iter().enumerate() {
            if !(m > T::zero()) || !m.is_finite() {
                return Err(Error::NonPositiveTerm { index: i, value: m.to_f64().unwrap_or(f64::NAN) });
            }
            ln_terms.push(m.ln());
        }
        Ok(Self::with_ln_terms(ln_terms))
    }

    /// Terms given directly as `ln M_n`.
    pub fn from_ln_terms(ln_terms: Vec<T>) -> Result<Self> {
        if let Some(i) = ln_terms.iter().position(|x| !x.is_finite()) {
            return Err(Error::NonPositiveTerm { index: i, value: ln_terms[i].exp().to_f64().unwrap_or(f64::NAN) });
        }
        Ok(Self::with_ln_terms(ln_terms))
    }

    fn with_ln_terms(ln_terms: Vec<T>) -> Self {
        let normalized = ln_terms.first().is_some_and(|x| *x == T::zero());
        Self { ln_terms, rule: None, normalized }
    }

    pub fn from_rule(rule: NamedRule) -> Result<Self> {
        rule.validate()?;
        let mut s = Self { ln_terms: Vec::new(), rule: Some(Rule::Named(rule)), normalized: false };
        s.normalized = s.ln_term(0).map(|x| x == T::zero()).unwrap_or(false);
        Ok(s)
    }

    pub fn from_ln_fn(f: impl Fn(usize) -> T + Send + Sync + 'static) -> Self {
        let mut s = Self { ln_terms: Vec::new(), rule: Some(Rule::Ln(Arc::new(f))), normalized: false };
        s.normalized = s.ln_term(0).map(|x| x == T::zero()).unwrap_or(false);
        s
    }

    /// Explicit terms followed by a rule for larger indices.
    pub fn with_rule(mut self, rule: NamedRule) -> Result<Self> {
        rule.validate()?;
        self.rule = Some(Rule::Named(rule));
        Ok(self)
    }

    pub fn named_rule(&self) -> Option<&NamedRule> {
        match &self.rule {
            Some(Rule::Named(r)) => Some(r),
            _ => None,
        }
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn explicit_len(&self) -> usize {
        self.ln_terms.len()
    }

    /// Number of available terms, `None` if unbounded.
    pub fn available(&self) -> Option<usize> {
        match &self.rule {
            None => Some(self.ln_terms.len()),
            Some(Rule::Named(NamedRule::CustomTable { values })) => Some(self.ln_terms.len().max(values.len())),
            Some(_) => None,
        }
    }

    pub fn ln_term(&self, n: usize) -> Result<T> {
        if let Some(&x) = self.ln_terms.get(n) {
            return Ok(x);
        }
        let missing = Error::InsufficientTerms { required: n + 1, available: self.available().unwrap_or(0) };
        let v = match &self.rule {
            Some(Rule::Named(r)) => r.ln_term::<T>(n).ok_or(missing)?,
            Some(Rule::Ln(f)) => f(n),
            None => return Err(missing),
        };
        if !v.is_finite() {
            return Err(Error::NonPositiveTerm { index: n, value: v.exp().to_f64().unwrap_or(f64::NAN) });
        }
        Ok(v)
    }

    pub fn term(&self, n: usize) -> Result<T> {
        self.ln_term(n).map(T::exp)
    }

    /// `ln M_0, ..., ln M_last`.
    pub fn ln_terms_upto(&self, last: usize) -> Result<Vec<T>> {
        (0..=last).map(|n| self.ln_term(n)).collect()
    }

    /// Termwise `δ · M_n`.
    pub fn scale(&self, delta: T) -> Result<Self> {
        if !(delta > T::zero()) || !delta.is_finite() {
            return Err(Error::NonPositiveScale(delta.to_f64().unwrap_or(f64::NAN)));
        }
        let ld = delta.ln();
        let ln_terms = self.ln_terms.iter().map(|&x| x + ld).collect();
        let rule = self.rule.clone().map(|r| {
            let f = move |n: usize| match &r {
                Rule::Named(nr) => nr.ln_term::<T>(n).map_or(T::nan(), |x| x + ld),
                Rule::Ln(g) => g(n) + ld,
            };
            Rule::Ln(Arc::new(f) as LnFn<T>)
        });
        let mut s = Self { ln_terms, rule, normalized: false };
        s.normalized = s.ln_term(0).map(|x| x == T::zero()).unwrap_or(false);
        Ok(s)
    }

    /// `(M_{jn})^{1/j}` as a sequence in `n`.
    pub fn subsequence(&self, j: usize) -> Result<Self> {
        if j == 0 {
            return Err(Error::InvalidInput("subsequence step j must be >= 1".into()));
        }
        let jf = from_usize::<T>(j);
        let explicit = self.ln_terms.len().div_ceil(j);
        let ln_terms = (0..explicit).map(|n| self.ln_terms[n * j] / jf).collect();
        let rule = match &self.rule {
            None => None,
            Some(r) => {
                let r = r.clone();
                let f = move |n: usize| match &r {
                    Rule::Named(nr) => nr.ln_term::<T>(n * j).map_or(T::nan(), |x| x / jf),
                    Rule::Ln(g) => g(n * j) / jf,
                };
                Some(Rule::Ln(Arc::new(f) as LnFn<T>))
            }
        };
        let base = Self { ln_terms, rule, normalized: false };
        // a table rule only reaches so far; fold it into explicit terms
        if let Some(avail) = self.available() {
            let n_sub = avail.div_ceil(j);
            let ln = (0..n_sub).map(|n| base.ln_term(n)).collect::<Result<Vec<_>>>()?;
            return Ok(Self::with_ln_terms(ln));
        }
        let mut s = base;
        s.normalized = s.ln_term(0).map(|x| x == T::zero()).unwrap_or(false);
        Ok(s)
    }
}
