//! Multi-indices and polynomials over a ring.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Ring;

/// Exponent vector `(n_1, ..., n_d)`.
///
/// Ordered graded-lexicographically: by total degree, then by exponents in
/// descending lexicographic order, so in two variables the order is
/// `1, x1, x2, x1², x1x2, x2², ...`.
#[derive(Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MultiIndex(Vec<u32>);

impl MultiIndex {
    pub fn new(entries: Vec<u32>) -> Self {
        Self(entries)
    }

    pub fn zero(d: usize) -> Self {
        Self(vec![0; d])
    }

    /// `e_axis * power`.
    pub fn axis(d: usize, axis: usize, power: u32) -> Self {
        let mut e = vec![0; d];
        e[axis] = power;
        Self(e)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn degree(&self) -> usize {
        self.0.iter().map(|&e| e as usize).sum()
    }

    pub fn entries(&self) -> &[u32] {
        &self.0
    }

    pub fn add(&self, other: &Self) -> Self {
        Self(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    /// `self - other` if non-negative in every entry.
    pub fn checked_sub(&self, other: &Self) -> Option<Self> {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| a.checked_sub(*b))
            .collect::<Option<Vec<_>>>()
            .map(Self)
    }
}

impl fmt::Debug for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.0)
    }
}

impl Ord for MultiIndex {
    fn cmp(&self, other: &Self) -> Ordering {
        self.degree().cmp(&other.degree()).then_with(|| other.0.cmp(&self.0))
    }
}

impl PartialOrd for MultiIndex {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// All multi-indices in `d` variables of degree `<= max_degree`, in
/// graded-lexicographic order.
pub fn monomials(d: usize, max_degree: usize) -> Vec<MultiIndex> {
    let mut out = Vec::new();
    for k in 0..=max_degree {
        let mut cur = vec![0u32; d];
        compositions(k as u32, 0, &mut cur, &mut out);
    }
    out
}

fn compositions(rest: u32, pos: usize, cur: &mut Vec<u32>, out: &mut Vec<MultiIndex>) {
    let d = cur.len();
    if d == 0 {
        if rest == 0 {
            out.push(MultiIndex(Vec::new()));
        }
        return;
    }
    if pos == d - 1 {
        cur[pos] = rest;
        out.push(MultiIndex(cur.clone()));
        return;
    }
    for e in (0..=rest).rev() {
        cur[pos] = e;
        compositions(rest - e, pos + 1, cur, out);
    }
    cur[pos] = 0;
}

/// Polynomial in `d` real variables with finitely many non-zero coefficients.
#[derive(Clone, PartialEq)]
pub struct Polynomial<T> {
    dim: usize,
    coeffs: BTreeMap<MultiIndex, T>,
}

impl<T: fmt::Debug> fmt::Debug for Polynomial<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_map().entries(self.coeffs.iter()).finish()
    }
}

impl<T: Ring> Polynomial<T> {
    pub fn zero(dim: usize) -> Self {
        Self { dim, coeffs: BTreeMap::new() }
    }

    pub fn constant(dim: usize, c: T) -> Self {
        Self::monomial(MultiIndex::zero(dim), c)
    }

    pub fn one(dim: usize) -> Self {
        Self::constant(dim, T::one())
    }

    /// The coordinate function `x_axis`.
    pub fn var(dim: usize, axis: usize) -> Self {
        Self::monomial(MultiIndex::axis(dim, axis, 1), T::one())
    }

    pub fn monomial(alpha: MultiIndex, c: T) -> Self {
        let mut p = Self::zero(alpha.dim());
        p.add_term(alpha, c);
        p
    }

    /// Builds a polynomial from `(exponent, coefficient)` pairs; repeated
    /// exponents are summed.
    pub fn from_terms(dim: usize, terms: impl IntoIterator<Item = (MultiIndex, T)>) -> Result<Self> {
        let mut p = Self::zero(dim);
        for (alpha, c) in terms {
            if alpha.dim() != dim {
                return Err(Error::DimensionMismatch { expected: dim, found: alpha.dim() });
            }
            p.add_term(alpha, c);
        }
        Ok(p)
    }

    /// Univariate polynomial from ascending coefficients.
    pub fn univariate(coeffs: Vec<T>) -> Self {
        let mut p = Self::zero(1);
        for (k, c) in coeffs.into_iter().enumerate() {
            p.add_term(MultiIndex(vec![k as u32]), c);
        }
        p
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Degree of the support; the zero polynomial has degree 0.
    pub fn degree(&self) -> usize {
        self.coeffs.keys().map(MultiIndex::degree).max().unwrap_or(0)
    }

    pub fn coeff(&self, alpha: &MultiIndex) -> T {
        self.coeffs.get(alpha).cloned().unwrap_or_else(T::zero)
    }

    pub fn terms(&self) -> impl Iterator<Item = (&MultiIndex, &T)> {
        self.coeffs.iter()
    }

    fn add_term(&mut self, alpha: MultiIndex, c: T) {
        if c.is_zero() {
            return;
        }
        match self.coeffs.remove(&alpha) {
            Some(old) => {
                let s = old + c;
                if !s.is_zero() {
                    self.coeffs.insert(alpha, s);
                }
            }
            None => {
                self.coeffs.insert(alpha, c);
            }
        }
    }

    fn check_dim(&self, other: &Self) -> Result<()> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, found: other.dim });
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_dim(other)?;
        let mut out = self.clone();
        for (a, c) in &other.coeffs {
            out.add_term(a.clone(), c.clone());
        }
        Ok(out)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.scale(-T::one()))
    }

    pub fn scale(&self, s: T) -> Self {
        let mut out = Self::zero(self.dim);
        for (a, c) in &self.coeffs {
            out.add_term(a.clone(), c.clone() * s.clone());
        }
        out
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.check_dim(other)?;
        let mut out = Self::zero(self.dim);
        for (a, ca) in &self.coeffs {
            for (b, cb) in &other.coeffs {
                out.add_term(a.add(b), ca.clone() * cb.clone());
            }
        }
        Ok(out)
    }

    pub fn square(&self) -> Self {
        self.mul(self).expect("same dimension")
    }

    /// Partial derivative along `axis`.
    pub fn derivative(&self, axis: usize) -> Self {
        let mut out = Self::zero(self.dim);
        for (a, c) in &self.coeffs {
            let e = a.0[axis];
            if e == 0 {
                continue;
            }
            let mut b = a.clone();
            b.0[axis] -= 1;
            out.add_term(b, times(c.clone(), e));
        }
        out
    }

    /// Mixed partial derivative `D^kappa`.
    pub fn derivative_multi(&self, kappa: &MultiIndex) -> Self {
        let mut out = self.clone();
        for (axis, &k) in kappa.0.iter().enumerate() {
            for _ in 0..k {
                out = out.derivative(axis);
            }
        }
        out
    }

    pub fn eval(&self, x: &[T]) -> Result<T> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, found: x.len() });
        }
        let mut acc = T::zero();
        for (a, c) in &self.coeffs {
            let mut term = c.clone();
            for (xi, &e) in x.iter().zip(&a.0) {
                for _ in 0..e {
                    term = term * xi.clone();
                }
            }
            acc = acc + term;
        }
        Ok(acc)
    }
}

fn times<T: Ring>(c: T, k: u32) -> T {
    let mut acc = T::zero();
    for _ in 0..k {
        acc = acc + c.clone();
    }
    acc
}
