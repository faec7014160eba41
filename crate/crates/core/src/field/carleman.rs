use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::moments::CarlemanVerdict;
use crate::quasi::{classify_ln, QaClass, QaVerdict, Thresholds, MIN_CLASSIFY_TERMS};
use crate::scalar::{from_usize, lit, log_add_exp, Scalar};
use crate::weight::{sample_ball_box_max_by_radius, Envelope, WeightFamily, SUP_MARGIN, SUP_RESOLUTION};

use super::tensor::{MomentTensorSeq, Representation};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FieldSeriesVariant {
    /// `Σ 1/(s_n I_{2n}^{1/2n})`
    Carleman,
    /// `Σ 1/(√s_n I_{2n}^{1/4n})`
    Stieltjes,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FieldOrderTerm<T> {
    pub n: usize,
    /// `ln I_{2n}`, `-inf` when the contraction vanishes.
    pub ln_contraction: T,
    /// `s_n = sup √(~k^{(2n)})` over the radius-`n` region, with margin.
    pub sup_factor: T,
    pub term: T,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FieldCarlemanReport<T> {
    pub variant: FieldSeriesVariant,
    pub n_terms: usize,
    pub orders: Vec<FieldOrderTerm<T>>,
    pub partial_sums: Vec<T>,
    pub verdict: CarlemanVerdict,
    pub classification: Option<QaVerdict<T>>,
    pub note: Option<String>,
}

/// `ln Σ_j w_j s_j^{2n}` with signed weights, failing when negative.
fn ln_atomic_contraction<T: Scalar>(weights: &[T], sums: &[T], order: usize) -> Result<T> {
    let mut pos = T::neg_infinity();
    let mut neg = T::neg_infinity();
    let k = from_usize::<T>(order);
    for (&w, &s) in weights.iter().zip(sums) {
        if w == T::zero() || s == T::zero() {
            continue;
        }
        let l = w.abs().ln() + k * s.ln();
        if w > T::zero() {
            pos = log_add_exp(pos, l);
        } else {
            neg = log_add_exp(neg, l);
        }
    }
    if neg > pos || (neg == pos && neg != T::neg_infinity()) {
        let v = (neg.exp() - pos.exp()).to_f64().unwrap_or(f64::NAN);
        return Err(Error::NegativeContraction { order, value: -v });
    }
    if neg == T::neg_infinity() {
        return Ok(pos);
    }
    Ok(pos + (-(neg - pos).exp()).ln_1p())
}

/// Weighted Carleman (or generalized Stieltjes) series of a field moment
/// sequence for `n = 1..=n_terms`.
///
/// `I_{2n} = ⟨(1/k^{(2n)})^{⊗2n}, m^{(2n)}⟩` is evaluated in closed form for
/// atomic input; dense input must hold every order up to `2 n_terms`.
pub fn weighted_carleman_field<T: Scalar>(
    m: &MomentTensorSeq<T>,
    family: &WeightFamily,
    n_terms: usize,
    variant: FieldSeriesVariant,
) -> Result<FieldCarlemanReport<T>> {
    let grid = m.grid();
    let d = grid.d;
    if let Representation::Dense(_) = m.representation() {
        if 2 * n_terms > m.max_order() {
            return Err(Error::OrderOverflow { order: 2 * n_terms, max_order: m.max_order() });
        }
    }
    let coords: Vec<Vec<T>> = (0..grid.cells()).map(|c| grid.coords(c)).collect();

    // one sampling pass per distinct weight
    let mut sup_by_entry: Vec<Option<Vec<T>>> = vec![None; family.per_order.len()];
    let mut max_n_for_entry = vec![0usize; family.per_order.len()];
    for n in 1..=n_terms {
        let i = family.index_at(2 * n)?;
        max_n_for_entry[i] = max_n_for_entry[i].max(n);
    }
    let center = vec![T::zero(); d];
    for (i, slot) in sup_by_entry.iter_mut().enumerate() {
        if max_n_for_entry[i] == 0 {
            continue;
        }
        let w = &family.per_order[i].weight;
        let env = Envelope::<T>::new(w, d);
        let maxima = sample_ball_box_max_by_radius(&center, max_n_for_entry[i], SUP_RESOLUTION, |y| env.eval(y));
        let margin = if w.is_constant() { T::one() } else { lit(SUP_MARGIN) };
        *slot = Some(maxima.into_iter().map(|v| v.sqrt() * margin).collect());
    }

    let half = lit::<T>(0.5);
    let (root_scale, sup_power) = match variant {
        FieldSeriesVariant::Carleman => (T::one(), T::one()),
        FieldSeriesVariant::Stieltjes => (half, half),
    };
    let mass = m.mass();
    let mut ln_m = vec![if mass > T::zero() { half * root_scale * mass.ln() } else { T::neg_infinity() }];
    let mut orders = Vec::with_capacity(n_terms);
    let mut partial_sums = Vec::with_capacity(n_terms);
    let mut acc = T::zero();
    for n in 1..=n_terms {
        let order = 2 * n;
        let idx = family.index_at(order)?;
        let w = &family.per_order[idx].weight;
        let mut inv_k = Vec::with_capacity(coords.len());
        for x in &coords {
            let k = w.eval(x);
            if k < T::one() {
                return Err(Error::WeightBelowOne {
                    value: k.to_f64().unwrap_or(f64::NAN),
                    at: x.iter().map(|v| v.to_f64().unwrap_or(f64::NAN)).collect(),
                });
            }
            inv_k.push(T::one() / k);
        }
        let ln_i = match m.representation() {
            Representation::Atomic { weights, atoms } => {
                let sums: Vec<T> = atoms.iter().map(|eta| eta.iter().zip(&inv_k).fold(T::zero(), |s, (&e, &q)| s + e * q)).collect();
                ln_atomic_contraction(weights, &sums, order)?
            }
            Representation::Dense(_) => {
                let fs: Vec<&[T]> = vec![inv_k.as_slice(); order];
                let v = m.pair_values(&fs)?;
                if v < T::zero() {
                    return Err(Error::NegativeContraction { order, value: v.to_f64().unwrap_or(f64::NAN) });
                }
                v.ln()
            }
        };
        let s_n = sup_by_entry[idx].as_ref().expect("sampled")[n];
        let nf = from_usize::<T>(n);
        // 1/M_n^{1/n} with ln M_n = n·p·ln s_n + (r/2)·ln I
        let ln_mn = nf * sup_power * s_n.ln() + half * root_scale * ln_i;
        let term = if ln_i == T::neg_infinity() { T::infinity() } else { (-ln_mn / nf).exp() };
        acc = acc + term;
        partial_sums.push(acc);
        ln_m.push(ln_mn);
        orders.push(FieldOrderTerm { n, ln_contraction: ln_i, sup_factor: s_n, term });
    }

    let degenerate = ln_m.iter().any(|x| *x == T::neg_infinity());
    let (verdict, classification, note) = if degenerate {
        (CarlemanVerdict::Divergent, None, Some("a contraction vanishes; its term counts as +inf".to_string()))
    } else if n_terms < MIN_CLASSIFY_TERMS {
        (
            CarlemanVerdict::Inconclusive,
            None,
            Some(format!("{n_terms} terms computed, classification needs {MIN_CLASSIFY_TERMS}")),
        )
    } else {
        let v = classify_ln(&ln_m, Thresholds::default())?;
        let verdict = match v.classification {
            QaClass::QuasiAnalytic => CarlemanVerdict::Divergent,
            QaClass::NotQuasiAnalytic => CarlemanVerdict::Convergent,
            QaClass::Inconclusive => CarlemanVerdict::Inconclusive,
        };
        (verdict, Some(v), None)
    };
    Ok(FieldCarlemanReport { variant, n_terms, orders, partial_sums, verdict, classification, note })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DeterminingBound<T> {
    /// `ln(d_n^n ‖m^{(2n)}‖^{1/2})`
    pub ln_bound: Vec<T>,
    pub verdict: QaVerdict<T>,
}

/// Upper bounds `m_n <= d(k^{(2n)}, E)^n ‖m^{(2n)}‖^{1/2}` from per-order
/// logarithms `ln d_n` and `ln ‖m^{(2n)}‖`, `n = 0..=n_terms`, classified for
/// quasi-analyticity.
pub fn determining_bound<T: Scalar>(ln_d: &[T], ln_norm: &[T], n_terms: usize) -> Result<DeterminingBound<T>> {
    let mut ln_bound = Vec::with_capacity(n_terms + 1);
    for n in 0..=n_terms {
        let ld = *ln_d.get(n).ok_or(Error::MissingOrder(n))?;
        let ln = *ln_norm.get(n).ok_or(Error::MissingOrder(n))?;
        if !ld.is_finite() || !ln.is_finite() {
            return Err(Error::NonPositiveTerm { index: n, value: f64::NAN });
        }
        let b = if n == 0 { lit::<T>(0.5) * ln } else { from_usize::<T>(n) * ld + lit::<T>(0.5) * ln };
        ln_bound.push(b);
    }
    let verdict = classify_ln(&ln_bound, Thresholds::default())?;
    Ok(DeterminingBound { ln_bound, verdict })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::grid::{Grid, GridMeasure};
    use crate::scalar::ln_factorial;
    use crate::weight::WeightFunction;
    use approx::assert_relative_eq;

    fn grid() -> Grid {
        Grid::new(1, 5, 0.5, -1.0).unwrap()
    }

    fn atom(weights: Vec<f64>, n: usize) -> MomentTensorSeq<f64> {
        MomentTensorSeq::atomic(grid(), vec![(1.0, GridMeasure::new(grid(), weights).unwrap())], n).unwrap()
    }

    #[test]
    fn zero_field_is_divergent() {
        let m = atom(vec![0.0; 5], 4);
        let r = weighted_carleman_field(&m, &WeightFamily::uniform(WeightFunction::constant(1.0)), 10, FieldSeriesVariant::Carleman).unwrap();
        assert_eq!(r.verdict, CarlemanVerdict::Divergent);
        assert!(r.orders.iter().all(|o| o.ln_contraction == f64::NEG_INFINITY));
    }

    #[test]
    fn constant_weight_single_atom() {
        let m = atom(vec![0.0, 0.5, 0.25, 0.0, 0.25], 2);
        let r = weighted_carleman_field(&m, &WeightFamily::uniform(WeightFunction::constant(1.0)), 60, FieldSeriesVariant::Carleman).unwrap();
        for o in &r.orders {
            assert_eq!(o.sup_factor, 1.0);
            assert_relative_eq!(o.ln_contraction, 0.0, epsilon = 1e-12);
            assert_relative_eq!(o.term, 1.0, epsilon = 1e-12);
        }
        assert_eq!(r.verdict, CarlemanVerdict::Divergent);
        let heavy = atom(vec![0.0, 2.0, 1.0, 0.0, 0.0], 2);
        let r = weighted_carleman_field(&heavy, &WeightFamily::uniform(WeightFunction::constant(1.0)), 5, FieldSeriesVariant::Carleman).unwrap();
        assert_relative_eq!(r.orders[4].term, 1.0 / 3.0, max_relative = 1e-12);
        assert_eq!(r.verdict, CarlemanVerdict::Inconclusive);
    }

    #[test]
    fn quadratic_weight_at_origin_matches_hand_computation() {
        // atom at the origin cell (x = 0), k = 1 + r²
        let m = atom(vec![0.0, 0.0, 0.8, 0.0, 0.0], 2);
        let w = WeightFunction::PolyEven { coeffs: vec![1.0, 1.0] };
        let r = weighted_carleman_field(&m, &WeightFamily::uniform(w), 3, FieldSeriesVariant::Carleman).unwrap();
        for o in &r.orders {
            let n = o.n as f64;
            // I_{2n} = 0.8^{2n}; ~k = max((1+r²)², 4r²) peaks at r = n+1
            assert_relative_eq!(o.ln_contraction, 2.0 * n * 0.8f64.ln(), max_relative = 1e-12);
            let s = (1.0 + (n + 1.0).powi(2)) * 1.05;
            assert_relative_eq!(o.sup_factor, s, max_relative = 1e-12);
            assert_relative_eq!(o.term, 1.0 / (s * 0.8), max_relative = 1e-12);
        }
        let st = weighted_carleman_field(&m, &WeightFamily::uniform(WeightFunction::PolyEven { coeffs: vec![1.0, 1.0] }), 3, FieldSeriesVariant::Stieltjes).unwrap();
        let s1: f64 = 5.0 * 1.05;
        assert_relative_eq!(st.orders[0].term, 1.0 / (s1.sqrt() * 0.8f64.sqrt()), max_relative = 1e-12);
    }

    #[test]
    fn dense_agrees_with_atomic() {
        let m = atom(vec![0.0, 0.3, 0.8, 0.1, 0.0], 6);
        let w = WeightFamily::uniform(WeightFunction::PolyEven { coeffs: vec![1.0, 2.0] });
        let a = weighted_carleman_field(&m, &w, 3, FieldSeriesVariant::Carleman).unwrap();
        let d = weighted_carleman_field(&m.to_dense().unwrap(), &w, 3, FieldSeriesVariant::Carleman).unwrap();
        for (x, y) in a.orders.iter().zip(&d.orders) {
            assert_relative_eq!(x.ln_contraction, y.ln_contraction, max_relative = 1e-12);
        }
    }

    #[test]
    fn weight_below_one_is_rejected() {
        let m = atom(vec![0.0, 0.3, 0.8, 0.1, 0.0], 2);
        let w = WeightFamily::uniform(WeightFunction::constant(0.5));
        assert!(matches!(
            weighted_carleman_field(&m, &w, 2, FieldSeriesVariant::Carleman),
            Err(Error::WeightBelowOne { .. })
        ));
    }

    #[test]
    fn determining_bound_examples() {
        let n = 200;
        let zeros = vec![0.0; n + 1];
        assert_eq!(determining_bound(&zeros, &zeros, n).unwrap().verdict.classification, QaClass::QuasiAnalytic);
        let ln2 = vec![2f64.ln(); n + 1];
        assert_eq!(determining_bound(&ln2, &zeros, n).unwrap().verdict.classification, QaClass::QuasiAnalytic);
        let heavy: Vec<f64> = (0..=n).map(|k| 4.0 * ln_factorial::<f64>(2 * k)).collect();
        assert_eq!(determining_bound(&zeros, &heavy, n).unwrap().verdict.classification, QaClass::NotQuasiAnalytic);
        assert_eq!(determining_bound(&zeros[..10], &zeros, n).unwrap_err(), Error::MissingOrder(10));
    }
}
