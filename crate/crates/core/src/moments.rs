//! Finite-dimensional truncated moment sequences: Riesz functional, shift,
//! moment and localizing matrices, and the checks built on them.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{is_psd_scaled, Matrix, PsdReport};
use crate::poly::{monomials, MultiIndex, Polynomial};
use crate::quasi::{classify_ln, QaClass, QaVerdict, Thresholds, MIN_CLASSIFY_TERMS};
use crate::scalar::{from_usize, Ring, Scalar};

/// Real numbers `m(α)` for every multi-index `α` in `d` variables with
/// `|α| <= N`.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentSequence<T> {
    dim: usize,
    max_degree: usize,
    values: BTreeMap<MultiIndex, T>,
}

impl<T: Ring> MomentSequence<T> {
    /// Validated constructor: every index of degree `<= max_degree` exactly
    /// once, and a non-negative total mass.
    pub fn new(dim: usize, max_degree: usize, values: impl IntoIterator<Item = (MultiIndex, T)>) -> Result<Self> {
        let s = Self::new_signed(dim, max_degree, values)?;
        s.check_mass()?;
        Ok(s)
    }

    /// Like [`MomentSequence::new`] without the mass check. Shifted
    /// sequences are moments of signed measures and may have `m(0) < 0`.
    pub fn new_signed(dim: usize, max_degree: usize, values: impl IntoIterator<Item = (MultiIndex, T)>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidInput("dimension must be positive".into()));
        }
        let mut map = BTreeMap::new();
        for (alpha, v) in values {
            if alpha.dim() != dim {
                return Err(Error::DimensionMismatch { expected: dim, found: alpha.dim() });
            }
            if alpha.degree() > max_degree {
                return Err(Error::DegreeOverflow { degree: alpha.degree(), available: max_degree });
            }
            let key = alpha.entries().to_vec();
            if map.insert(alpha, v).is_some() {
                return Err(Error::DuplicateMoment(key));
            }
        }
        for alpha in monomials(dim, max_degree) {
            if !map.contains_key(&alpha) {
                return Err(Error::MissingMoment(alpha.entries().to_vec()));
            }
        }
        Ok(Self { dim, max_degree, values: map })
    }

    pub fn from_fn(dim: usize, max_degree: usize, mut f: impl FnMut(&MultiIndex) -> T) -> Result<Self> {
        Self::new(dim, max_degree, monomials(dim, max_degree).into_iter().map(|a| {
            let v = f(&a);
            (a, v)
        }))
    }

    /// `m_0, ..., m_N` in one variable.
    pub fn univariate(values: Vec<T>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidInput("empty moment list".into()));
        }
        let n = values.len() - 1;
        Self::new(1, n, values.into_iter().enumerate().map(|(k, v)| (MultiIndex::new(vec![k as u32]), v)))
    }

    fn check_mass(&self) -> Result<()> {
        let m0 = self.mass();
        if m0 < T::zero() {
            return Err(Error::NegativeMass(format!("{m0:?}")));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn max_degree(&self) -> usize {
        self.max_degree
    }

    pub fn mass(&self) -> T {
        self.values[&MultiIndex::zero(self.dim)].clone()
    }

    pub fn get(&self, alpha: &MultiIndex) -> Option<&T> {
        self.values.get(alpha)
    }

    pub fn value(&self, alpha: &MultiIndex) -> Result<T> {
        if alpha.dim() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, found: alpha.dim() });
        }
        self.values
            .get(alpha)
            .cloned()
            .ok_or(Error::DegreeOverflow { degree: alpha.degree(), available: self.max_degree })
    }

    /// Entries in graded-lexicographic order.
    pub fn iter(&self) -> impl Iterator<Item = (&MultiIndex, &T)> {
        self.values.iter()
    }

    /// Copy with one entry replaced.
    pub fn with_value(&self, alpha: &MultiIndex, v: T) -> Result<Self> {
        if !self.values.contains_key(alpha) {
            return Err(Error::IndexOutOfRange(format!("{alpha:?} not in degree <= {}", self.max_degree)));
        }
        let mut out = self.clone();
        out.values.insert(alpha.clone(), v);
        Ok(out)
    }

    pub fn truncate(&self, max_degree: usize) -> Result<Self> {
        if max_degree > self.max_degree {
            return Err(Error::DegreeOverflow { degree: max_degree, available: self.max_degree });
        }
        let values = self.values.iter().filter(|(a, _)| a.degree() <= max_degree).map(|(a, v)| (a.clone(), v.clone())).collect();
        Ok(Self { dim: self.dim, max_degree, values })
    }

    pub fn map<U>(&self, mut f: impl FnMut(&T) -> U) -> MomentSequence<U> {
        MomentSequence {
            dim: self.dim,
            max_degree: self.max_degree,
            values: self.values.iter().map(|(a, v)| (a.clone(), f(v))).collect(),
        }
    }

    fn check_poly(&self, p: &Polynomial<T>) -> Result<()> {
        if p.dim() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, found: p.dim() });
        }
        if p.degree() > self.max_degree {
            return Err(Error::DegreeOverflow { degree: p.degree(), available: self.max_degree });
        }
        Ok(())
    }

    /// Riesz functional `L_m(P) = Σ_α p_α m(α)`.
    pub fn riesz(&self, p: &Polynomial<T>) -> Result<T> {
        self.check_poly(p)?;
        let mut acc = T::zero();
        for (alpha, c) in p.terms() {
            acc = acc + c.clone() * self.values[alpha].clone();
        }
        Ok(acc)
    }

    /// Shifted sequence `(_P m)(α) = Σ_β p_β m(α+β)` of degree `N - deg P`,
    /// so that `L_{_P m}(Q) = L_m(PQ)`.
    pub fn shift(&self, p: &Polynomial<T>) -> Result<Self> {
        self.check_poly(p)?;
        let n = self.max_degree - p.degree();
        let mut values = BTreeMap::new();
        for alpha in monomials(self.dim, n) {
            let mut acc = T::zero();
            for (beta, c) in p.terms() {
                acc = acc + c.clone() * self.values[&alpha.add(beta)].clone();
            }
            values.insert(alpha, acc);
        }
        Ok(Self { dim: self.dim, max_degree: n, values })
    }

    /// Hankel-type matrix `H[α,β] = m(α+β)` over `|α|, |β| <= t` in
    /// graded-lexicographic order.
    pub fn moment_matrix(&self, t: usize) -> Result<Matrix<T>> {
        if 2 * t > self.max_degree {
            return Err(Error::DegreeOverflow { degree: 2 * t, available: self.max_degree });
        }
        let basis = monomials(self.dim, t);
        let k = basis.len();
        let mut h = Matrix::filled(k, k, T::zero());
        for i in 0..k {
            for j in i..k {
                let v = self.values[&basis[i].add(&basis[j])].clone();
                h.set(j, i, v.clone());
                h.set(i, j, v);
            }
        }
        Ok(h)
    }

    /// Moment matrix of the shifted sequence `_P m`.
    pub fn localizing_matrix(&self, p: &Polynomial<T>, t: usize) -> Result<Matrix<T>> {
        self.shift(p)?.moment_matrix(t)
    }
}

/// Constraints `P_0 = 1, P_1, ..., P_k` of a basic semi-algebraic set
/// `{x : P_i(x) >= 0}`.
#[derive(Debug, Clone, PartialEq)]
pub struct SemiAlgebraicSpec<T> {
    dim: usize,
    constraints: Vec<Polynomial<T>>,
}

impl<T: Ring> SemiAlgebraicSpec<T> {
    /// The constant `1` is prepended unless the list already starts with it.
    pub fn new(dim: usize, constraints: Vec<Polynomial<T>>) -> Result<Self> {
        for p in &constraints {
            if p.dim() != dim {
                return Err(Error::DimensionMismatch { expected: dim, found: p.dim() });
            }
        }
        let one = Polynomial::one(dim);
        let mut all = Vec::with_capacity(constraints.len() + 1);
        if constraints.first() != Some(&one) {
            all.push(one);
        }
        all.extend(constraints);
        Ok(Self { dim, constraints: all })
    }

    /// The box `lo_i <= x_i <= hi_i`.
    pub fn box_set(lo: &[T], hi: &[T]) -> Result<Self> {
        if lo.len() != hi.len() {
            return Err(Error::DimensionMismatch { expected: lo.len(), found: hi.len() });
        }
        let d = lo.len();
        let mut cs = Vec::new();
        for i in 0..d {
            let x = Polynomial::var(d, i);
            cs.push(x.sub(&Polynomial::constant(d, lo[i].clone()))?);
            cs.push(Polynomial::constant(d, hi[i].clone()).sub(&x)?);
        }
        Self::new(d, cs)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn constraints(&self) -> &[Polynomial<T>] {
        &self.constraints
    }

    pub fn len(&self) -> usize {
        self.constraints.len()
    }

    pub fn is_empty(&self) -> bool {
        self.constraints.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConstraintReport<T> {
    /// Index into the spec; `0` is the moment matrix itself.
    pub constraint: usize,
    pub level: usize,
    pub report: PsdReport<T>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SemiAlgebraicReport<T> {
    pub level: usize,
    /// Truncated conditions are necessary only: a pass is not a proof of
    /// realizability, a failure is a disproof.
    pub scope: String,
    pub passed: bool,
    pub reports: Vec<ConstraintReport<T>>,
}

/// PSD tests of the moment matrix at level `t` and of the localizing matrix
/// of each `P_i` at level `t_i = min(t, floor((N - deg P_i)/2))`.
/// `tol` is relative: a matrix `H` is tested at `tol * (1 + max|H|)`.
pub fn check_semialgebraic<T: Scalar>(
    m: &MomentSequence<T>,
    spec: &SemiAlgebraicSpec<T>,
    t: usize,
    tol: T,
) -> Result<SemiAlgebraicReport<T>> {
    if spec.dim() != m.dim() {
        return Err(Error::DimensionMismatch { expected: m.dim(), found: spec.dim() });
    }
    let n = m.max_degree();
    let mut reports = Vec::with_capacity(spec.len());
    for (i, p) in spec.constraints().iter().enumerate() {
        let (level, h) = if i == 0 {
            (t, m.moment_matrix(t)?)
        } else {
            if p.degree() > n {
                return Err(Error::DegreeOverflow { degree: p.degree(), available: n });
            }
            let ti = t.min((n - p.degree()) / 2);
            (ti, m.localizing_matrix(p, ti)?)
        };
        reports.push(ConstraintReport { constraint: i, level, report: is_psd_scaled(&h, tol)? });
    }
    Ok(SemiAlgebraicReport {
        level: t,
        scope: format!("necessary at level {t}"),
        passed: reports.iter().all(|r| r.report.is_psd()),
        reports,
    })
}

/// Whether `Σ_i (Σ_k h_{i,k}²) P_i` equals `target` coefficient by
/// coefficient within `tol`.
pub fn verify_qm_certificate<T: Ring>(
    spec: &SemiAlgebraicSpec<T>,
    sos: &[Vec<Polynomial<T>>],
    target: &Polynomial<T>,
    tol: T,
) -> Result<bool> {
    if sos.len() != spec.len() {
        return Err(Error::DimensionMismatch { expected: spec.len(), found: sos.len() });
    }
    if target.dim() != spec.dim() {
        return Err(Error::DimensionMismatch { expected: spec.dim(), found: target.dim() });
    }
    let mut total = Polynomial::zero(spec.dim());
    for (p, hs) in spec.constraints().iter().zip(sos) {
        for h in hs {
            total = total.add(&h.square().mul(p)?)?;
        }
    }
    let diff = total.sub(target)?;
    let ok = diff.terms().all(|(_, c)| {
        let a = if *c < T::zero() { -c.clone() } else { c.clone() };
        a <= tol
    });
    Ok(ok)
}

/// Source of diagonal even moments `m_{0..2n..0}` for the Carleman test.
pub enum DiagonalMoments<'a, T> {
    Sequence(&'a MomentSequence<T>),
    /// `(axis, n) -> ln m_{2n e_axis}`; `-inf` encodes a zero moment.
    LnRule(&'a dyn Fn(usize, usize) -> T),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CarlemanVerdict {
    /// `Σ m_{2n}^{-1/2n} = ∞`: the moment problem is determinate along this
    /// axis.
    Divergent,
    /// The series converges; determinacy is not implied.
    Convergent,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CarlemanAxis<T> {
    pub axis: usize,
    pub n_terms: usize,
    /// `S_N = Σ_{n=1}^{N} m_{2n}^{-1/(2n)}` for `N = 1..=n_terms`.
    pub partial_sums: Vec<T>,
    pub verdict: CarlemanVerdict,
    pub classification: Option<QaVerdict<T>>,
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CarlemanReport<T> {
    pub axes: Vec<CarlemanAxis<T>>,
    /// Present only when every axis reaches the same verdict.
    pub global: Option<CarlemanVerdict>,
}

/// Carleman series along one coordinate axis.
pub fn carleman_axis<T: Scalar>(src: &DiagonalMoments<'_, T>, axis: usize, n_terms: usize) -> Result<CarlemanAxis<T>> {
    let (dim, avail) = match src {
        DiagonalMoments::Sequence(m) => (m.dim(), n_terms.min(m.max_degree() / 2)),
        DiagonalMoments::LnRule(_) => (axis + 1, n_terms),
    };
    if axis >= dim {
        return Err(Error::IndexOutOfRange(format!("axis {axis} in dimension {dim}")));
    }
    let mut ln_m = Vec::with_capacity(avail + 1);
    for n in 0..=avail {
        let v = match src {
            DiagonalMoments::Sequence(m) => {
                let x = m.value(&MultiIndex::axis(dim, axis, 2 * n as u32))?;
                if x < T::zero() {
                    return Err(Error::NegativeEvenMoment { axis, order: 2 * n, value: x.to_f64().unwrap_or(f64::NAN) });
                }
                x.ln()
            }
            DiagonalMoments::LnRule(f) => f(axis, n),
        };
        if v.is_nan() {
            return Err(Error::NegativeEvenMoment { axis, order: 2 * n, value: f64::NAN });
        }
        ln_m.push(v);
    }

    let mut acc = T::zero();
    let partial_sums: Vec<T> = (1..=avail)
        .map(|n| {
            acc = acc + (-ln_m[n] / from_usize::<T>(2 * n)).exp();
            acc
        })
        .collect();

    let has_zero = ln_m.iter().any(|x| *x == T::neg_infinity());
    let (verdict, classification, note) = if has_zero {
        (CarlemanVerdict::Divergent, None, Some("a diagonal moment vanishes; its term counts as +inf".to_string()))
    } else if avail < MIN_CLASSIFY_TERMS {
        (
            CarlemanVerdict::Inconclusive,
            None,
            Some(format!("only {avail} terms available, classification needs {MIN_CLASSIFY_TERMS}")),
        )
    } else {
        let half: Vec<T> = ln_m.iter().map(|&x| x / (T::one() + T::one())).collect();
        let v = classify_ln(&half, Thresholds::default())?;
        let verdict = match v.classification {
            QaClass::QuasiAnalytic => CarlemanVerdict::Divergent,
            QaClass::NotQuasiAnalytic => CarlemanVerdict::Convergent,
            QaClass::Inconclusive => CarlemanVerdict::Inconclusive,
        };
        (verdict, Some(v), None)
    };
    Ok(CarlemanAxis { axis, n_terms: avail, partial_sums, verdict, classification, note })
}

/// Carleman series on every axis of `R^dim`.
pub fn multivariate_carleman<T: Scalar>(src: &DiagonalMoments<'_, T>, dim: usize, n_terms: usize) -> Result<CarlemanReport<T>> {
    let axes = (0..dim).map(|a| carleman_axis(src, a, n_terms)).collect::<Result<Vec<_>>>()?;
    let first = axes.first().map(|a| a.verdict);
    let global = match first {
        Some(v) if axes.iter().all(|a| a.verdict == v) => Some(v),
        _ => None,
    };
    Ok(CarlemanReport { axes, global })
}
