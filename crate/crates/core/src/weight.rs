//! Named weight functions `k(r) >= 1` on `R^d`, their derivative envelopes,
//! and sampled suprema over boxes and balls.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::poly::{monomials, MultiIndex, Polynomial};
use crate::scalar::{from_usize, lit, Scalar};

/// Resolution used when sampling suprema of weight functions.
pub const SUP_RESOLUTION: f64 = 0.01;
/// Safety factor applied to sampled suprema of non-constant weights.
pub const SUP_MARGIN: f64 = 1.05;
/// Cap on the number of sampled points per supremum.
pub const SUP_MAX_POINTS: usize = 4_000_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", content = "params", rename_all = "snake_case")]
pub enum WeightFunction {
    /// `k(r) = Σ_i a_i |r|^{2i}`.
    PolyEven { coeffs: Vec<f64> },
    /// `k(r) = C (1 + exp(a Σ_i r_i))`.
    Exp {
        #[serde(rename = "C", alias = "c")]
        c: f64,
        a: f64,
    },
}

impl WeightFunction {
    pub fn constant(c: f64) -> Self {
        WeightFunction::PolyEven { coeffs: vec![c] }
    }

    /// `C (1 + |r|^{2n})`.
    pub fn poly_family(c: f64, n: usize) -> Self {
        let mut coeffs = vec![0.0; n + 1];
        coeffs[0] += c;
        coeffs[n] += c;
        WeightFunction::PolyEven { coeffs }
    }

    pub fn is_constant(&self) -> bool {
        match self {
            WeightFunction::PolyEven { coeffs } => coeffs.iter().skip(1).all(|&a| a == 0.0),
            WeightFunction::Exp { a, .. } => *a == 0.0,
        }
    }

    pub fn eval<T: Scalar>(&self, x: &[T]) -> T {
        match self {
            WeightFunction::PolyEven { coeffs } => {
                let r2 = x.iter().fold(T::zero(), |acc, &v| acc + v * v);
                coeffs.iter().rev().fold(T::zero(), |acc, &a| acc * r2 + lit(a))
            }
            WeightFunction::Exp { c, a } => {
                let s = x.iter().fold(T::zero(), |acc, &v| acc + v);
                lit::<T>(*c) * (T::one() + (lit::<T>(*a) * s).exp())
            }
        }
    }

    pub fn envelope<T: Scalar>(&self, d: usize) -> Envelope<T> {
        Envelope::new(self, d)
    }
}

/// `~k(x) = max_{|κ| <= ⌈(d+1)/2⌉} |D^κ k(x)|²`.
#[derive(Debug, Clone)]
pub struct Envelope<T> {
    kind: EnvelopeKind<T>,
}

#[derive(Debug, Clone)]
enum EnvelopeKind<T> {
    Poly(Vec<Polynomial<T>>),
    Exp { c: T, a: T, max_order: usize },
}

/// Derivative order `⌈(d+1)/2⌉` in the envelope.
pub fn envelope_order(d: usize) -> usize {
    (d + 2) / 2
}

impl<T: Scalar> Envelope<T> {
    pub fn new(w: &WeightFunction, d: usize) -> Self {
        let order = envelope_order(d);
        let kind = match w {
            WeightFunction::PolyEven { coeffs } => {
                let mut r2 = Polynomial::zero(d);
                for i in 0..d {
                    r2 = r2.add(&Polynomial::var(d, i).square()).expect("same dimension");
                }
                let mut k = Polynomial::zero(d);
                let mut pow = Polynomial::one(d);
                for &a in coeffs {
                    k = k.add(&pow.scale(lit(a))).expect("same dimension");
                    pow = pow.mul(&r2).expect("same dimension");
                }
                let derivs = monomials(d, order).iter().map(|kappa: &MultiIndex| k.derivative_multi(kappa)).collect();
                EnvelopeKind::Poly(derivs)
            }
            WeightFunction::Exp { c, a } => EnvelopeKind::Exp { c: lit(*c), a: lit(*a), max_order: order },
        };
        Self { kind }
    }

    pub fn eval(&self, x: &[T]) -> T {
        match &self.kind {
            EnvelopeKind::Poly(ps) => ps
                .iter()
                .map(|p| {
                    let v = p.eval(x).expect("matching dimension");
                    v * v
                })
                .fold(T::zero(), T::max),
            EnvelopeKind::Exp { c, a, max_order } => {
                let e = (*a * x.iter().fold(T::zero(), |acc, &v| acc + v)).exp();
                let mut best = *c * (T::one() + e);
                best = best * best;
                let mut factor = T::one();
                for _ in 1..=*max_order {
                    factor = factor * *a;
                    let v = *c * factor * e;
                    best = best.max(v * v);
                }
                best
            }
        }
    }
}

/// Points of a box lattice: per-axis `count` evenly spaced nodes from `lo`
/// to `hi` inclusive.
fn axis_nodes<T: Scalar>(lo: T, hi: T, count: usize) -> Vec<T> {
    if count <= 1 || hi == lo {
        return vec![lo];
    }
    let step = (hi - lo) / from_usize::<T>(count - 1);
    (0..count).map(|i| if i + 1 == count { hi } else { lo + step * from_usize::<T>(i) }).collect()
}

fn nodes_per_axis<T: Scalar>(lo: T, hi: T, d: usize, res: f64) -> usize {
    let span = (hi - lo).to_f64().unwrap_or(0.0);
    let wanted = (span / res).ceil() as usize + 1;
    let cap = (SUP_MAX_POINTS as f64).powf(1.0 / d as f64).floor() as usize;
    wanted.clamp(1, cap.max(2))
}

/// Maximum of `f` over a lattice filling `{y : dist(y, [-1,1]^d) <= radius}`
/// shifted by `center`, i.e. `{center + z + x : |z| <= radius, x ∈ [-1,1]^d}`.
pub fn sample_ball_box_max<T: Scalar>(center: &[T], radius: T, res: f64, mut f: impl FnMut(&[T]) -> T) -> T {
    let d = center.len();
    let half = radius + T::one();
    let count = nodes_per_axis(-half, half, d, res);
    let nodes = axis_nodes(-half, half, count);
    let r2 = radius * radius * (T::one() + lit(1e-12));
    let mut best = T::neg_infinity();
    let mut idx = vec![0usize; d];
    let mut y = vec![T::zero(); d];
    loop {
        let mut dist2 = T::zero();
        for k in 0..d {
            let v = nodes[idx[k]];
            let excess = (v.abs() - T::one()).max(T::zero());
            dist2 = dist2 + excess * excess;
            y[k] = center[k] + v;
        }
        if dist2 <= r2 {
            best = best.max(f(&y));
        }
        let mut k = 0;
        loop {
            if k == d {
                return best;
            }
            idx[k] += 1;
            if idx[k] < count {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
    }
}

/// Like [`sample_ball_box_max`] for every radius `0..=max_radius` in one
/// pass: entry `n` is the maximum over the region of radius `n`.
pub fn sample_ball_box_max_by_radius<T: Scalar>(
    center: &[T],
    max_radius: usize,
    res: f64,
    mut f: impl FnMut(&[T]) -> T,
) -> Vec<T> {
    let mut per_shell = vec![T::neg_infinity(); max_radius + 1];
    let radius = from_usize::<T>(max_radius);
    sample_ball_box_max(center, radius, res, |y| {
        let mut dist2 = T::zero();
        for (v, c) in y.iter().zip(center) {
            let excess = ((*v - *c).abs() - T::one()).max(T::zero());
            dist2 = dist2 + excess * excess;
        }
        // smallest integer radius whose region contains y
        let r = dist2.sqrt() / (T::one() + lit(1e-12));
        let shell = r.ceil().to_usize().unwrap_or(max_radius).min(max_radius);
        let v = f(y);
        per_shell[shell] = per_shell[shell].max(v);
        v
    });
    let mut best = T::neg_infinity();
    per_shell
        .into_iter()
        .map(|v| {
            best = best.max(v);
            best
        })
        .collect()
}

/// Sampled `sup √k` over `{z + x : |z| <= radius, x ∈ [-1,1]^d}` around
/// `center`, multiplied by [`SUP_MARGIN`] unless `k` is constant.
pub fn sup_sqrt_weight<T: Scalar>(w: &WeightFunction, center: &[T], radius: T) -> T {
    let m = sample_ball_box_max(center, radius, SUP_RESOLUTION, |y| w.eval(y));
    let margin = if w.is_constant() { T::one() } else { lit(SUP_MARGIN) };
    m.sqrt() * margin
}

/// Fails with [`Error::WeightBelowOne`] at the first sampled point where
/// `k < 1`.
pub fn check_at_least_one<T: Scalar>(w: &WeightFunction, center: &[T], radius: T) -> Result<()> {
    let mut bad: Option<(T, Vec<T>)> = None;
    sample_ball_box_max(center, radius, SUP_RESOLUTION * 10.0, |y| {
        let v = w.eval(y);
        if v < T::one() && bad.is_none() {
            bad = Some((v, y.to_vec()));
        }
        v
    });
    match bad {
        Some((v, at)) => Err(Error::WeightBelowOne {
            value: v.to_f64().unwrap_or(f64::NAN),
            at: at.iter().map(|x| x.to_f64().unwrap_or(f64::NAN)).collect(),
        }),
        None => Ok(()),
    }
}

/// Weight used from order `n` onwards.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderWeight {
    pub n: usize,
    #[serde(flatten)]
    pub weight: WeightFunction,
}

/// Per-order weights `k^{(n)}`, piecewise constant in `n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightFamily {
    pub per_order: Vec<OrderWeight>,
}

impl WeightFamily {
    pub fn uniform(w: WeightFunction) -> Self {
        Self { per_order: vec![OrderWeight { n: 0, weight: w }] }
    }

    /// Weight for order `n`: the entry with the largest start `<= n`.
    pub fn at(&self, n: usize) -> Result<&WeightFunction> {
        self.index_at(n).map(|i| &self.per_order[i].weight)
    }

    pub fn index_at(&self, n: usize) -> Result<usize> {
        self.per_order
            .iter()
            .enumerate()
            .filter(|(_, o)| o.n <= n)
            .max_by_key(|(_, o)| o.n)
            .map(|(i, _)| i)
            .ok_or(Error::MissingOrder(n))
    }
}
