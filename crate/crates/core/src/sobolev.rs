//! Weighted Sobolev norms on sampled functions, the shifted and modulated
//! bump family with its norm bound, and Condition (D) witnesses for the
//! polynomial and exponential weight families in one dimension.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::poly::monomials;
use crate::quasi::{bump_derivative_bounds, BumpToken, PositiveSequence};
use crate::scalar::{from_usize, lit, Scalar};
use crate::weight::{check_at_least_one, sample_ball_box_max, sup_sqrt_weight, WeightFunction, SUP_MARGIN, SUP_RESOLUTION};

/// `k = (k1, k2)`: derivative order and weight.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SobolevIndex {
    pub k1: usize,
    pub k2: WeightFunction,
}

impl SobolevIndex {
    pub fn new(k1: usize, k2: WeightFunction) -> Self {
        Self { k1, k2 }
    }
}

/// Per-order indices `k^{(n)}`, piecewise constant in `n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SobolevFamily {
    pub per_order: Vec<SobolevOrder>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SobolevOrder {
    pub n: usize,
    pub k1: usize,
    pub k2: WeightFunction,
}

impl SobolevFamily {
    pub fn at(&self, n: usize) -> Result<SobolevIndex> {
        self.per_order
            .iter()
            .filter(|o| o.n <= n)
            .max_by_key(|o| o.n)
            .map(|o| SobolevIndex::new(o.k1, o.k2.clone()))
            .ok_or(Error::MissingOrder(n))
    }
}

/// Values on the uniform lattice `lo_i + j h`, `j = 0..shape_i`, of a box,
/// row-major. The function is taken to vanish outside the box.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledFunction<T> {
    lo: Vec<f64>,
    hi: Vec<f64>,
    h: f64,
    shape: Vec<usize>,
    values: Vec<T>,
}

impl<T: Scalar> SampledFunction<T> {
    /// `bounds[i] = (lo_i, hi_i)`; each side must be a whole number of
    /// steps and the boundary nodes must vanish.
    pub fn new(bounds: &[(f64, f64)], h: f64, values: Vec<T>) -> Result<Self> {
        if bounds.is_empty() {
            return Err(Error::InvalidInput("sampled function needs at least one axis".into()));
        }
        if !(h > 0.0) || !h.is_finite() {
            return Err(Error::InvalidInput(format!("lattice spacing must be positive, got {h}")));
        }
        let mut shape = Vec::with_capacity(bounds.len());
        for &(lo, hi) in bounds {
            let steps = (hi - lo) / h;
            let r = steps.round();
            if !(hi >= lo) || (steps - r).abs() > 1e-6 * r.max(1.0) {
                return Err(Error::InvalidInput(format!("box side [{lo}, {hi}] is not a multiple of h = {h}")));
            }
            shape.push(r as usize + 1);
        }
        let n: usize = shape.iter().product();
        if values.len() != n {
            return Err(Error::DimensionMismatch { expected: n, found: values.len() });
        }
        let f = Self { lo: bounds.iter().map(|b| b.0).collect(), hi: bounds.iter().map(|b| b.1).collect(), h, shape, values };
        f.check_boundary()?;
        Ok(f)
    }

    /// Samples `f` on the lattice.
    pub fn from_fn(bounds: &[(f64, f64)], h: f64, f: impl Fn(&[T]) -> T) -> Result<Self> {
        let shape: Vec<usize> = bounds.iter().map(|&(lo, hi)| ((hi - lo) / h).round() as usize + 1).collect();
        let n: usize = shape.iter().product();
        let mut values = Vec::with_capacity(n);
        let mut x = vec![T::zero(); shape.len()];
        for flat in 0..n {
            let mut rest = flat;
            for k in (0..shape.len()).rev() {
                let j = rest % shape[k];
                rest /= shape[k];
                x[k] = lit(bounds[k].0 + j as f64 * h);
            }
            values.push(f(&x));
        }
        Self::new(bounds, h, values)
    }

    fn check_boundary(&self) -> Result<()> {
        let scale = self.values.iter().fold(T::zero(), |m, v| m.max(v.abs()));
        let tol = lit::<T>(1e-12) * (T::one() + scale);
        let d = self.shape.len();
        for flat in 0..self.values.len() {
            let idx = self.unflatten(flat);
            let on_edge = (0..d).any(|k| idx[k] == 0 || idx[k] + 1 == self.shape[k]);
            if on_edge && self.values[flat].abs() > tol {
                return Err(Error::InvalidInput(format!("boundary node {idx:?} is not zero; support must lie inside the box")));
            }
        }
        Ok(())
    }

    fn unflatten(&self, mut flat: usize) -> Vec<usize> {
        let mut idx = vec![0; self.shape.len()];
        for k in (0..self.shape.len()).rev() {
            idx[k] = flat % self.shape[k];
            flat /= self.shape[k];
        }
        idx
    }

    pub fn dim(&self) -> usize {
        self.shape.len()
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn bounds(&self) -> Vec<(f64, f64)> {
        self.lo.iter().copied().zip(self.hi.iter().copied()).collect()
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }
}

/// Central difference of order `n` along one axis of a row-major array:
/// `δ²` repeated, preceded by one `δ₀` when `n` is odd. Values outside the
/// array are zero.
fn diff_axis<T: Scalar>(a: &[T], shape: &[usize], axis: usize, n: usize, h: T) -> Vec<T> {
    let mut cur = a.to_vec();
    let stride: usize = shape[axis + 1..].iter().product();
    let len = shape[axis];
    let at = |v: &[T], flat: usize, j: usize, delta: i64| -> T {
        let k = j as i64 + delta;
        if k < 0 || k as usize >= len {
            T::zero()
        } else {
            v[(flat as i64 + delta * stride as i64) as usize]
        }
    };
    let two = lit::<T>(2.0);
    if n % 2 == 1 {
        cur = (0..cur.len())
            .map(|flat| {
                let j = (flat / stride) % len;
                (at(&cur, flat, j, 1) - at(&cur, flat, j, -1)) / (two * h)
            })
            .collect();
    }
    for _ in 0..n / 2 {
        cur = (0..cur.len())
            .map(|flat| {
                let j = (flat / stride) % len;
                (at(&cur, flat, j, 1) - two * cur[flat] + at(&cur, flat, j, -1)) / (h * h)
            })
            .collect();
    }
    cur
}

/// Copy of `f` with `pad` zero nodes added on every side.
fn padded<T: Scalar>(f: &SampledFunction<T>, pad: usize) -> (Vec<T>, Vec<usize>) {
    let shape: Vec<usize> = f.shape.iter().map(|&s| s + 2 * pad).collect();
    let n: usize = shape.iter().product();
    let mut out = vec![T::zero(); n];
    for (flat, &v) in f.values.iter().enumerate() {
        let idx = f.unflatten(flat);
        let p = idx.iter().zip(&shape).fold(0, |acc, (&i, &s)| acc * s + i + pad);
        out[p] = v;
    }
    (out, shape)
}

/// Weighted Sobolev norm `(Σ_{|β|<=k1} Σ_x |D^β_h f(x)|² k2(x) h^d)^{1/2}`
/// with central finite differences.
pub fn weighted_sobolev_norm<T: Scalar>(f: &SampledFunction<T>, k: &SobolevIndex) -> Result<T> {
    let required = 2 * k.k1 + 1;
    if let Some(&nodes) = f.shape.iter().find(|&&s| s < required) {
        return Err(Error::LatticeTooCoarse { nodes, required });
    }
    let d = f.dim();
    let pad = k.k1 + 1;
    let (base, shape) = padded(f, pad);
    let h = lit::<T>(f.h);
    let mut weight = Vec::with_capacity(base.len());
    let mut x = vec![T::zero(); d];
    for flat in 0..base.len() {
        let mut rest = flat;
        for a in (0..d).rev() {
            let j = rest % shape[a];
            rest /= shape[a];
            x[a] = lit(f.lo[a] + (j as f64 - pad as f64) * f.h);
        }
        let w = k.k2.eval(&x);
        if w < T::one() {
            return Err(Error::WeightBelowOne {
                value: w.to_f64().unwrap_or(f64::NAN),
                at: x.iter().map(|v| v.to_f64().unwrap_or(f64::NAN)).collect(),
            });
        }
        weight.push(w);
    }
    let mut total = T::zero();
    for beta in monomials(d, k.k1) {
        let mut cur = base.clone();
        for (axis, &order) in beta.entries().iter().enumerate() {
            if order > 0 {
                cur = diff_axis(&cur, &shape, axis, order as usize, h);
            }
        }
        total = total + cur.iter().zip(&weight).fold(T::zero(), |acc, (&v, &w)| acc + v * v * w);
    }
    Ok((total * h.powi(d as i32)).sqrt())
}

/// `exp(-1/(1-x²))` on `(-1, 1)`, zero elsewhere.
pub fn standard_bump<T: Scalar>(x: T) -> T {
    let s = T::one() - x * x;
    if s <= T::zero() {
        T::zero()
    } else {
        (-T::one() / s).exp()
    }
}

/// Real and imaginary parts of `f_{y,p}(x) = φ(x-y) e^{ipx}` on `[y-1, y+1]`.
#[derive(Debug, Clone)]
pub struct BumpFamilyMember<T> {
    pub re: SampledFunction<T>,
    pub im: SampledFunction<T>,
    /// Factor `σ` with `φ = σ ψ`, `ψ` the standard bump.
    pub scale: T,
    /// Sampled `max |D^n_h φ|` for `n = 0..=k1`.
    pub derivative_max: Vec<T>,
}

fn bump_profile_derivative_max<T: Scalar>(values: &[T], k1: usize, h: T) -> Vec<T> {
    let pad = k1 + 1;
    let mut base = vec![T::zero(); values.len() + 2 * pad];
    base[pad..pad + values.len()].copy_from_slice(values);
    let shape = [base.len()];
    (0..=k1)
        .map(|n| {
            let dv = if n == 0 { base.clone() } else { diff_axis(&base, &shape, 0, n, h) };
            dv.iter().fold(T::zero(), |m, v| m.max(v.abs()))
        })
        .collect()
}

/// Samples `f_{y,p}` with the bump scaled so that its sampled derivatives up
/// to order `k1` stay within the token's bounds `d_n`; the bounds are
/// re-checked on the scaled profile.
pub fn bump_test_family<T: Scalar>(y: T, p: T, token: &BumpToken<T>, k1: usize, h: f64) -> Result<BumpFamilyMember<T>> {
    let steps = (2.0 / h).round() as usize;
    if steps < 2 || ((2.0 / h) - steps as f64).abs() > 1e-9 * steps as f64 {
        return Err(Error::InvalidInput(format!("h = {h} must divide the bump support length 2")));
    }
    let ht = lit::<T>(h);
    let profile: Vec<T> = (0..=steps).map(|j| standard_bump(lit::<T>(-1.0 + j as f64 * h))).collect();
    let raw_max = bump_profile_derivative_max(&profile, k1, ht);
    let mut scale = T::one();
    for (n, &mx) in raw_max.iter().enumerate() {
        if mx > T::zero() {
            scale = scale.min(token.d(n)? / mx);
        }
    }
    let phi: Vec<T> = profile.iter().map(|&v| v * scale).collect();
    let derivative_max = bump_profile_derivative_max(&phi, k1, ht);
    for (n, &mx) in derivative_max.iter().enumerate() {
        let bound = token.d(n)?;
        if mx > bound * (T::one() + lit(1e-12)) {
            return Err(Error::DerivativeBoundViolated {
                order: n,
                value: mx.to_f64().unwrap_or(f64::NAN),
                bound: bound.to_f64().unwrap_or(f64::NAN),
            });
        }
    }
    let yf = y.to_f64().expect("finite y");
    let bounds = [(yf - 1.0, yf - 1.0 + steps as f64 * h)];
    let xs: Vec<T> = (0..=steps).map(|j| y - T::one() + ht * from_usize::<T>(j)).collect();
    let re = phi.iter().zip(&xs).map(|(&v, &x)| v * (p * x).cos()).collect();
    let im = phi.iter().zip(&xs).map(|(&v, &x)| v * (p * x).sin()).collect();
    Ok(BumpFamilyMember {
        re: SampledFunction::new(&bounds, h, re)?,
        im: SampledFunction::new(&bounds, h, im)?,
        scale,
        derivative_max,
    })
}

/// `√2 d_{k1} (√2 (1+|p|))^{k1} sup_{|x|<=1} √k2(x+y)`, the supremum sampled
/// at resolution 0.01 and loosened by the margin 1.05 for non-constant
/// weights.
pub fn bump_norm_bound<T: Scalar>(y: T, p: T, k: &SobolevIndex, d_seq: &PositiveSequence<T>) -> Result<T> {
    let sqrt2 = lit::<T>(2.0).sqrt();
    let d = d_seq.term(k.k1)?;
    let cp = sqrt2 * (T::one() + p.abs());
    let sup = sup_sqrt_weight(&k.k2, &[y], T::zero());
    Ok(sqrt2 * d * cp.powi(k.k1 as i32) * sup)
}

/// `c_{k1}^d sup_{|z|<=n, x∈[-1,1]^d} √k2(z+x)` without checking the
/// sequence class.
pub fn family_admission_bound<T: Scalar>(k: &SobolevIndex, c_seq: &PositiveSequence<T>, n: usize, d: usize) -> Result<T> {
    let c = c_seq.term(k.k1)?;
    let center = vec![T::zero(); d];
    Ok(c.powi(d as i32) * sup_sqrt_weight(&k.k2, &center, from_usize::<T>(n)))
}

/// [`family_admission_bound`] for `k^{(n)}` after confirming that `c_seq` is
/// not quasi-analytic, as the bump construction requires.
pub fn total_family_bound<T: Scalar>(
    family: &SobolevFamily,
    c_seq: &PositiveSequence<T>,
    n: usize,
    d: usize,
    n_terms: usize,
) -> Result<T> {
    bump_derivative_bounds(c_seq, n_terms)?;
    let k = family.at(n)?;
    check_at_least_one(&k.k2, &vec![T::zero(); d], from_usize::<T>(n))?;
    family_admission_bound(&k, c_seq, n, d)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum WitnessFamily {
    /// `k2 = C (1 + r^{2n})`
    Poly { c: f64, n: usize },
    /// `k2 = C (1 + e^{n r})`
    Exp { c: f64, n: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Integrability {
    pub window: f64,
    /// `∫_{-T}^{T} k2/q²`
    pub window_integral: f64,
    /// `∫_{|r|>T} k2/q²` by the substitution `u = 1/r`.
    pub tail_integral: f64,
    /// Analytic bound `2/T` on the tail.
    pub tail_bound: f64,
    pub total: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionDWitness {
    pub family: WitnessFamily,
    pub k: SobolevIndex,
    pub k_prime: SobolevIndex,
    /// Exponential family only: sampled `sup (1+e^{nr})(1+r²)/(1+e^{(n+1)r})`
    /// over `[-W, W]`, times the margin. On all of `R` this supremum is
    /// infinite, so the witness inequality is certified on the window only.
    pub b: Option<f64>,
    pub certified_window: Option<f64>,
    /// Smallest sampled `k'_2 / max(q, q')²` on `[-10, 10]`.
    pub witness_ratio_min: f64,
    pub integrability: Integrability,
}

impl ConditionDWitness {
    pub fn q(&self, r: f64) -> f64 {
        match self.family {
            WitnessFamily::Poly { c, n } => (2.0 * c * (1.0 + r.powi(2 * n as i32 + 2))).sqrt(),
            WitnessFamily::Exp { c, n } => (c * (1.0 + (n * r).exp()) * (1.0 + r * r)).sqrt(),
        }
    }

    pub fn dq(&self, r: f64) -> f64 {
        match self.family {
            WitnessFamily::Poly { c, n } => c * (2 * n + 2) as f64 * r.powi(2 * n as i32 + 1) / self.q(r),
            WitnessFamily::Exp { n, .. } => {
                let e = (n * r).exp();
                let log_slope = if e.is_finite() { n * e / (2.0 * (1.0 + e)) } else { n / 2.0 };
                self.q(r) * (log_slope + r / (1.0 + r * r))
            }
        }
    }

    /// `k2(r) / q(r)²` in a closed form that stays finite for large `|r|`.
    pub fn integrand(&self, r: f64) -> f64 {
        match self.family {
            WitnessFamily::Poly { n, .. } => {
                if r.abs() <= 1.0 {
                    (1.0 + r.powi(2 * n as i32)) / (2.0 * (1.0 + r.powi(2 * n as i32 + 2)))
                } else {
                    let inv = 1.0 / (r * r);
                    (inv.powi(n as i32 + 1) + inv) / (2.0 * (inv.powi(n as i32 + 1) + 1.0))
                }
            }
            WitnessFamily::Exp { .. } => 1.0 / (1.0 + r * r),
        }
    }

    pub fn integrability(&self, window: f64) -> Integrability {
        integrability(|r| self.integrand(r), window)
    }
}

fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, intervals: usize) -> f64 {
    let m = intervals + intervals % 2;
    let h = (b - a) / m as f64;
    let mut acc = f(a) + f(b);
    for i in 1..m {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(a + i as f64 * h);
    }
    acc * h / 3.0
}

fn integrability(g: impl Fn(f64) -> f64, window: f64) -> Integrability {
    let intervals = ((2.0 * window / SUP_RESOLUTION).round() as usize).max(2);
    let window_integral = simpson(&g, -window, window, intervals);
    // ∫_T^∞ g(r) dr = ∫_0^{1/T} g(1/u)/u² du, and likewise for r < -T
    let tail_fn = |u: f64| {
        if u == 0.0 {
            // limit of g(±1/u)/u² as u -> 0 for integrands decaying like 1/r²
            let big = 1e8;
            return (g(big) + g(-big)) * big * big;
        }
        (g(1.0 / u) + g(-1.0 / u)) / (u * u)
    };
    let tail_integral = simpson(tail_fn, 0.0, 1.0 / window, 2000);
    Integrability { window, window_integral, tail_integral, tail_bound: 2.0 / window, total: window_integral + tail_integral }
}

/// Default window for the exponential family's constant `B`.
pub const WITNESS_WINDOW: f64 = 10.0;

/// A Condition (D) partner `k'` for `k` in the family `C(1+r^{2n})` or
/// `C(1+e^{nr})` (dimension one), with the witness inequality sampled on
/// `[-10, 10]` and the integrability of `k2/q²` checked.
pub fn condition_d_witness(k: &SobolevIndex, window: f64) -> Result<ConditionDWitness> {
    let family = match &k.k2 {
        WeightFunction::PolyEven { coeffs } => {
            let n = coeffs.len().saturating_sub(1);
            let c = coeffs[0];
            let shape_ok = n >= 1 && coeffs[n] == c && coeffs[1..n].iter().all(|&a| a == 0.0);
            if !shape_ok {
                return Err(Error::UnsupportedFamily(format!("polynomial weight {coeffs:?} is not of the form C(1+r^2n)")));
            }
            WitnessFamily::Poly { c, n }
        }
        WeightFunction::Exp { c, a } => {
            if !(*a > 0.0) {
                return Err(Error::UnsupportedFamily(format!("exponential weight needs a positive rate, got {a}")));
            }
            WitnessFamily::Exp { c: *c, n: *a }
        }
    };
    let c = match family {
        WitnessFamily::Poly { c, .. } | WitnessFamily::Exp { c, .. } => c,
    };
    if c < 1.0 {
        return Err(Error::WeightBelowOne { value: c, at: vec![0.0] });
    }
    let (k_prime_weight, b, certified_window) = match family {
        WitnessFamily::Poly { c, n } => {
            let a = 2.0 * c * ((n + 1) * (n + 1)) as f64;
            let mut coeffs = vec![0.0; n + 2];
            coeffs[0] = a;
            coeffs[n + 1] = a;
            (WeightFunction::PolyEven { coeffs }, None, None)
        }
        WitnessFamily::Exp { c, n } => {
            let ratio = |r: f64| {
                // (1+e^{nr})(1+r²)/(1+e^{(n+1)r}) evaluated without overflow
                let num = (n * r).exp().ln_1p();
                let den = ((n + 1.0) * r).exp().ln_1p();
                let num = if num.is_finite() { num } else { n * r };
                let den = if den.is_finite() { den } else { (n + 1.0) * r };
                (num - den).exp() * (1.0 + r * r)
            };
            let sampled = sample_ball_box_max(&[0.0], window - 1.0, SUP_RESOLUTION, |y: &[f64]| ratio(y[0]));
            let b = sampled * SUP_MARGIN;
            let lead = b * c * (n / 2.0 + 1.0).powi(2);
            (WeightFunction::Exp { c: lead, a: n + 1.0 }, Some(b), Some(window))
        }
    };
    let k_prime = SobolevIndex::new(k.k1 + 1, k_prime_weight);
    let mut w = ConditionDWitness {
        family,
        k: k.clone(),
        k_prime,
        b,
        certified_window,
        witness_ratio_min: f64::INFINITY,
        integrability: integrability(|_| 0.0, window),
    };
    let steps = (2.0 * WITNESS_WINDOW / SUP_RESOLUTION).round() as usize;
    let mut min_ratio = f64::INFINITY;
    for i in 0..=steps {
        let r = -WITNESS_WINDOW + i as f64 * SUP_RESOLUTION;
        let need = w.q(r).powi(2).max(w.dq(r).powi(2));
        min_ratio = min_ratio.min(w.k_prime.k2.eval(&[r]) / need);
    }
    w.witness_ratio_min = min_ratio;
    w.integrability = w.integrability(window);
    Ok(w)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quasi::NamedRule;
    use approx::assert_relative_eq;

    fn one_d(h: f64, lo: f64, hi: f64, f: impl Fn(f64) -> f64) -> SampledFunction<f64> {
        SampledFunction::from_fn(&[(lo, hi)], h, |x: &[f64]| f(x[0])).unwrap()
    }

    fn quartic_bump(x: f64) -> f64 {
        (1.0 - x * x).max(0.0).powi(2)
    }

    fn token() -> BumpToken<f64> {
        let d = PositiveSequence::from_rule(NamedRule::FactorialPower { p: 2.0, b: 1.0, c: 1.0 }).unwrap();
        bump_derivative_bounds(&d, 200).unwrap()
    }

    #[test]
    fn zero_function_has_zero_norm() {
        let f = one_d(0.1, -1.0, 1.0, |_| 0.0);
        let k = SobolevIndex::new(2, WeightFunction::PolyEven { coeffs: vec![1.0, 1.0] });
        assert_eq!(weighted_sobolev_norm(&f, &k).unwrap(), 0.0);
    }

    #[test]
    fn order_zero_is_discrete_l2() {
        let f = one_d(0.05, -2.0, 2.0, quartic_bump);
        let k = SobolevIndex::new(0, WeightFunction::constant(1.0));
        let direct = (f.values().iter().map(|v| v * v).sum::<f64>() * 0.05).sqrt();
        assert_relative_eq!(weighted_sobolev_norm(&f, &k).unwrap(), direct, max_relative = 1e-14);
    }

    #[test]
    fn refinement_oracle() {
        let k = SobolevIndex::new(1, WeightFunction::PolyEven { coeffs: vec![1.0, 1.0] });
        let coarse = weighted_sobolev_norm(&one_d(0.005, -2.0, 2.0, quartic_bump), &k).unwrap();
        let fine = weighted_sobolev_norm(&one_d(0.0005, -2.0, 2.0, quartic_bump), &k).unwrap();
        assert!((coarse - fine).abs() / fine < 0.005);
        // closed form: ∫ (f² + f'²)(1 + x²) over [-1, 1] with f = (1-x²)²
        let exact: f64 = {
            let g = |x: f64| {
                let f = (1.0 - x * x).powi(2);
                let df = -4.0 * x * (1.0 - x * x);
                (f * f + df * df) * (1.0 + x * x)
            };
            simpson(g, -1.0, 1.0, 20000)
        };
        assert_relative_eq!(fine, exact.sqrt(), max_relative = 1e-4);
    }

    #[test]
    fn coarse_lattice_rejected() {
        let f = SampledFunction::new(&[(0.0, 0.2)], 0.1, vec![0.0, 1.0, 0.0]).unwrap();
        let k = SobolevIndex::new(2, WeightFunction::constant(1.0));
        assert_eq!(weighted_sobolev_norm(&f, &k).unwrap_err(), Error::LatticeTooCoarse { nodes: 3, required: 5 });
    }

    #[test]
    fn boundary_must_vanish() {
        assert!(SampledFunction::new(&[(0.0, 0.2)], 0.1, vec![1.0, 1.0, 0.0]).is_err());
    }

    #[test]
    fn two_dimensional_norm_matches_separable_product() {
        // f(x, y) = b(x) b(y), k1 = 0, k2 = 1: norm is the product of 1-d norms
        let h = 0.05;
        let f2 = SampledFunction::from_fn(&[(-1.0, 1.0), (-1.0, 1.0)], h, |x: &[f64]| quartic_bump(x[0]) * quartic_bump(x[1])).unwrap();
        let f1 = one_d(h, -1.0, 1.0, quartic_bump);
        let k = SobolevIndex::new(0, WeightFunction::constant(1.0));
        let n1 = weighted_sobolev_norm(&f1, &k).unwrap();
        assert_relative_eq!(weighted_sobolev_norm(&f2, &k).unwrap(), n1 * n1, max_relative = 1e-12);
    }

    #[test]
    fn bump_family_shapes() {
        let t = token();
        let b = bump_test_family(0.0, 0.0, &t, 2, 0.01).unwrap();
        assert!(b.im.values().iter().all(|&v| v == 0.0));
        let v = b.re.values();
        for i in 0..v.len() {
            assert_relative_eq!(v[i], v[v.len() - 1 - i], epsilon = 1e-15);
        }
        for (n, mx) in b.derivative_max.iter().enumerate() {
            assert!(*mx <= t.d(n).unwrap() * (1.0 + 1e-12));
        }
    }

    #[test]
    fn bump_norm_bound_examples() {
        let ones = PositiveSequence::from_terms(&[1.0, 7.0]).unwrap();
        let k0 = SobolevIndex::new(0, WeightFunction::constant(1.0));
        assert_relative_eq!(bump_norm_bound(0.0, 0.0, &k0, &ones).unwrap(), 2f64.sqrt(), max_relative = 1e-15);
        let k1 = SobolevIndex::new(1, WeightFunction::constant(1.0));
        assert_relative_eq!(bump_norm_bound(5.0, 3.0, &k1, &ones).unwrap(), 2f64.sqrt() * 7.0 * 2f64.sqrt() * 4.0, max_relative = 1e-14);
        let kq = SobolevIndex::new(0, WeightFunction::PolyEven { coeffs: vec![1.0, 1.0] });
        let b = bump_norm_bound(2.0, 0.0, &kq, &ones).unwrap();
        assert_relative_eq!(b, 2f64.sqrt() * 10f64.sqrt() * 1.05, max_relative = 1e-12);
    }

    #[test]
    fn norm_stays_below_bound() {
        let t = token();
        let k = SobolevIndex::new(1, WeightFunction::PolyEven { coeffs: vec![1.0, 1.0] });
        let b = bump_test_family(2.0, 3.0, &t, 1, 0.01).unwrap();
        let bound = bump_norm_bound(2.0, 3.0, &k, t.sequence()).unwrap();
        assert!(weighted_sobolev_norm(&b.re, &k).unwrap() <= bound);
        assert!(weighted_sobolev_norm(&b.im, &k).unwrap() <= bound);
    }

    #[test]
    fn admission_bounds() {
        let ones = PositiveSequence::from_terms(&[1.0; 4]).unwrap();
        let k = SobolevIndex::new(0, WeightFunction::constant(1.0));
        for n in 0..4 {
            assert_eq!(family_admission_bound(&k, &ones, n, 2).unwrap(), 1.0);
        }
        let kq = SobolevIndex::new(0, WeightFunction::PolyEven { coeffs: vec![1.0, 1.0] });
        assert_relative_eq!(family_admission_bound(&kq, &ones, 2, 1).unwrap(), 10f64.sqrt() * 1.05, max_relative = 1e-12);
        let fam = SobolevFamily { per_order: vec![SobolevOrder { n: 0, k1: 0, k2: WeightFunction::constant(1.0) }] };
        let qa = PositiveSequence::<f64>::from_rule(NamedRule::FactorialPower { p: 1.0, b: 1.0, c: 1.0 }).unwrap();
        assert_eq!(total_family_bound(&fam, &qa, 1, 1, 200).unwrap_err(), Error::SequenceIsQuasiAnalytic);
        let mut last = 0.0;
        for n in 0..5 {
            let b = total_family_bound(&fam, t_seq(), n, 1, 200).unwrap();
            assert!(b >= last);
            last = b;
        }
    }

    fn t_seq() -> &'static PositiveSequence<f64> {
        use std::sync::OnceLock;
        static S: OnceLock<PositiveSequence<f64>> = OnceLock::new();
        S.get_or_init(|| PositiveSequence::from_rule(NamedRule::FactorialPower { p: 2.0, b: 1.0, c: 1.0 }).unwrap())
    }

    #[test]
    fn poly_witness_example() {
        let k = SobolevIndex::new(0, WeightFunction::PolyEven { coeffs: vec![2.0, 2.0] });
        let w = condition_d_witness(&k, 10.0).unwrap();
        assert_eq!(w.k_prime, SobolevIndex::new(1, WeightFunction::PolyEven { coeffs: vec![16.0, 0.0, 16.0] }));
        assert!(w.witness_ratio_min >= 1.0);
        // ∫ (1+r²)/(2(1+r⁴)) dr = π/√2 · 1/2 · 2 = π/√2
        assert_relative_eq!(w.integrability.total, std::f64::consts::PI / 2f64.sqrt(), max_relative = 1e-6);
    }

    #[test]
    fn exp_witness() {
        let k = SobolevIndex::new(2, WeightFunction::Exp { c: 1.0, a: 2.0 });
        let w = condition_d_witness(&k, 10.0).unwrap();
        assert_eq!(w.k_prime.k1, 3);
        assert!(w.witness_ratio_min >= 1.0);
        assert_relative_eq!(w.integrability.total, std::f64::consts::PI, max_relative = 1e-6);
        let bad = SobolevIndex::new(0, WeightFunction::PolyEven { coeffs: vec![1.0, 2.0] });
        assert!(matches!(condition_d_witness(&bad, 10.0), Err(Error::UnsupportedFamily(_))));
    }
}
