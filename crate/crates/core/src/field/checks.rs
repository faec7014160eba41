use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{is_psd_scaled, Matrix, PsdReport};
use crate::scalar::Scalar;

use super::grid::{PhiSample, TestFunction};
use super::tensor::{field_shift, FieldPolynomial, MomentTensorSeq, Representation};

/// Words over `0..b` of length `<= t`, by length and then lexicographically.
pub fn words(b: usize, t: usize) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new()];
    let mut layer: Vec<Vec<usize>> = vec![Vec::new()];
    for _ in 0..t {
        let mut next = Vec::with_capacity(layer.len() * b);
        for w in &layer {
            for i in 0..b {
                let mut v = w.clone();
                v.push(i);
                next.push(v);
            }
        }
        out.extend(next.iter().cloned());
        layer = next;
    }
    out
}

/// `H[u, v] = ⟨f_u ⊗ f_v, m^{(|u|+|v|)}⟩` over words `u, v` of length
/// `<= t` in the basis.
pub fn generalized_moment_matrix<T: Scalar>(m: &MomentTensorSeq<T>, basis: &[TestFunction<T>], t: usize) -> Result<Matrix<T>> {
    if 2 * t > m.max_order() {
        return Err(Error::OrderOverflow { order: 2 * t, max_order: m.max_order() });
    }
    if basis.iter().any(|f| f.grid() != m.grid()) {
        return Err(Error::GridMismatch);
    }
    let ws = words(basis.len(), t);
    let k = ws.len();
    let mut h = Matrix::filled(k, k, T::zero());
    match m.representation() {
        Representation::Atomic { weights, atoms } => {
            // a[j][b] = ⟨f_b, η_j⟩
            let a: Vec<Vec<T>> = atoms.iter().map(|eta| basis.iter().map(|f| f.pair_measure(eta)).collect()).collect();
            for i in 0..k {
                for j in i..k {
                    let v = weights
                        .iter()
                        .zip(&a)
                        .map(|(&w, aj)| ws[i].iter().chain(&ws[j]).fold(w, |acc, &b| acc * aj[b]))
                        .fold(T::zero(), |x, y| x + y);
                    h.set(i, j, v);
                    h.set(j, i, v);
                }
            }
        }
        Representation::Dense(_) => {
            for i in 0..k {
                for j in i..k {
                    let fs: Vec<&[T]> = ws[i].iter().chain(&ws[j]).map(|&b| basis[b].values()).collect();
                    let v = m.pair_values(&fs)?;
                    h.set(i, j, v);
                    h.set(j, i, v);
                }
            }
        }
    }
    Ok(h)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhiReport<T> {
    pub index: usize,
    pub label: String,
    pub level: usize,
    pub report: PsdReport<T>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FieldCheckReport<T> {
    pub level: usize,
    pub scope: String,
    pub sample_policy: String,
    /// Condition on the generalized moment matrix itself.
    pub moment: PsdReport<T>,
    /// Localizing matrices of `Φ_φ(η) = ⟨φ, η⟩`.
    pub phi: Vec<PhiReport<T>>,
    /// Localizing matrices of `Γ_{c,φ}`; empty for the Radon check.
    pub gamma: Vec<PhiReport<T>>,
    pub c: Option<T>,
    pub passed: bool,
    /// Label of the first failing matrix.
    pub first_failure: Option<String>,
}

fn check_phis<T: Scalar>(phis: &[PhiSample<T>], m: &MomentTensorSeq<T>) -> Result<()> {
    for (i, p) in phis.iter().enumerate() {
        if p.phi.grid() != m.grid() {
            return Err(Error::GridMismatch);
        }
        if !p.phi.is_non_negative() {
            return Err(Error::NegativePhi(i));
        }
    }
    Ok(())
}

fn localizing_reports<T: Scalar>(
    m: &MomentTensorSeq<T>,
    basis: &[TestFunction<T>],
    phis: &[PhiSample<T>],
    t: usize,
    tol: T,
    poly: impl Fn(&TestFunction<T>) -> FieldPolynomial<T>,
) -> Result<Vec<PhiReport<T>>> {
    phis.iter()
        .enumerate()
        .map(|(index, p)| {
            let shifted = field_shift(m, &poly(&p.phi))?;
            let h = generalized_moment_matrix(&shifted, basis, t)?;
            Ok(PhiReport { index, label: p.label.clone(), level: t, report: is_psd_scaled(&h, tol)? })
        })
        .collect()
}

fn sample_policy(n: usize) -> String {
    format!("{n} sampled non-negative test functions; a pass is necessary at this sample set only, a failure is a disproof")
}

/// Necessary conditions for a moment sequence of a random Radon measure:
/// the generalized moment matrix and the localizing matrix of every sampled
/// `Φ_φ` are PSD at level `t`. `tol` is relative to each matrix.
pub fn check_radon<T: Scalar>(
    m: &MomentTensorSeq<T>,
    basis: &[TestFunction<T>],
    phis: &[PhiSample<T>],
    t: usize,
    tol: T,
) -> Result<FieldCheckReport<T>> {
    check_phis(phis, m)?;
    if 2 * t + 1 > m.max_order() {
        return Err(Error::OrderOverflow { order: 2 * t + 1, max_order: m.max_order() });
    }
    let moment = is_psd_scaled(&generalized_moment_matrix(m, basis, t)?, tol)?;
    let phi = localizing_reports(m, basis, phis, t, tol, FieldPolynomial::phi)?;
    Ok(finish(t, phis.len(), moment, phi, Vec::new(), None))
}

/// [`check_radon`] plus the localizing matrices of
/// `Γ_{c,φ}(η) = c⟨φ, λ⟩ - ⟨φ, η⟩` for measures with density `<= c`.
pub fn check_bounded_density<T: Scalar>(
    m: &MomentTensorSeq<T>,
    c: T,
    basis: &[TestFunction<T>],
    phis: &[PhiSample<T>],
    t: usize,
    tol: T,
) -> Result<FieldCheckReport<T>> {
    if !(c > T::zero()) || !c.is_finite() {
        return Err(Error::NonPositiveC(c.to_f64().unwrap_or(f64::NAN)));
    }
    let radon = check_radon(m, basis, phis, t, tol)?;
    let gamma = localizing_reports(m, basis, phis, t, tol, |f| FieldPolynomial::gamma(c, f))?;
    Ok(finish(t, phis.len(), radon.moment, radon.phi, gamma, Some(c)))
}

fn finish<T: Scalar>(
    t: usize,
    n_phi: usize,
    moment: PsdReport<T>,
    phi: Vec<PhiReport<T>>,
    gamma: Vec<PhiReport<T>>,
    c: Option<T>,
) -> FieldCheckReport<T> {
    let first_failure = if !moment.is_psd() {
        Some("moment".to_string())
    } else {
        phi.iter()
            .find(|r| !r.report.is_psd())
            .map(|r| format!("phi[{}] {}", r.index, r.label))
            .or_else(|| gamma.iter().find(|r| !r.report.is_psd()).map(|r| format!("gamma[{}] {}", r.index, r.label)))
    };
    FieldCheckReport {
        level: t,
        scope: format!("necessary at level {t}"),
        sample_policy: sample_policy(n_phi),
        moment,
        phi,
        gamma,
        c,
        passed: first_failure.is_none(),
        first_failure,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "snake_case")]
pub enum SliceVariant {
    /// `α^{(n)}`
    Plain,
    /// `α^{(n+1)}(·, y)`
    Shifted,
    /// `c α^{(n)} - α^{(n+1)}(·, y)`
    Hausdorff { c: f64 },
}

/// Cap on the number of cell tuples indexing a sliced density matrix.
pub const SLICE_MAX_ROWS: usize = 4096;

/// PSD test of the density sequence sliced at cell `y`, indexed by cell
/// tuples of length `<= t` and weighted by the quadrature factor
/// `h^{d(|u|+|v|)}`.
pub fn sliced_density_psd<T: Scalar>(
    m: &MomentTensorSeq<T>,
    y: usize,
    t: usize,
    tol: T,
    variant: SliceVariant,
) -> Result<PsdReport<T>> {
    if !m.has_density() {
        return Err(Error::NoDensity);
    }
    m.grid().check_cell(y)?;
    let extra = usize::from(variant != SliceVariant::Plain);
    if 2 * t + extra > m.max_order() {
        return Err(Error::OrderOverflow { order: 2 * t + extra, max_order: m.max_order() });
    }
    let cells = m.grid().cells();
    let rows: usize = (0..=t).map(|k| cells.pow(k as u32)).sum();
    if rows > SLICE_MAX_ROWS {
        return Err(Error::InvalidInput(format!("sliced matrix would have {rows} rows (limit {SLICE_MAX_ROWS})")));
    }
    let tuples = words(cells, t);
    let hd = m.grid().cell_volume::<T>();
    let entry = |idx: &[usize]| -> Result<T> {
        let mut with_y = idx.to_vec();
        with_y.push(y);
        Ok(match variant {
            SliceVariant::Plain => m.entry(idx)?,
            SliceVariant::Shifted => m.entry(&with_y)? / hd,
            SliceVariant::Hausdorff { c } => T::from_f64(c).expect("finite c") * m.entry(idx)? - m.entry(&with_y)? / hd,
        })
    };
    let k = tuples.len();
    let mut h = Matrix::filled(k, k, T::zero());
    for i in 0..k {
        for j in i..k {
            let idx: Vec<usize> = tuples[i].iter().chain(&tuples[j]).copied().collect();
            let v = entry(&idx)?;
            h.set(i, j, v);
            h.set(j, i, v);
        }
    }
    is_psd_scaled(&h, tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::grid::{default_phi_samples, Grid, GridMeasure};
    use crate::linalg::PsdVerdict;
    use approx::assert_relative_eq;

    fn grid() -> Grid {
        Grid::new(1, 4, 0.5, 0.0).unwrap()
    }

    fn single(weights: &[f64], n: usize) -> MomentTensorSeq<f64> {
        MomentTensorSeq::atomic(grid(), vec![(1.0, GridMeasure::new(grid(), weights.to_vec()).unwrap())], n)
            .unwrap()
            .with_density(true)
    }

    #[test]
    fn word_order() {
        assert_eq!(words(2, 2), vec![vec![], vec![0], vec![1], vec![0, 0], vec![0, 1], vec![1, 0], vec![1, 1]]);
    }

    #[test]
    fn moment_matrix_examples() {
        let m = single(&[0.0, 1.0, 2.0, 0.0], 4);
        let h = generalized_moment_matrix(&m, &[], 0).unwrap();
        assert_eq!(h.to_rows(), vec![vec![1.0]]);
        let f = TestFunction::new(grid(), vec![1.0, 0.5, -1.0, 3.0]).unwrap();
        let h = generalized_moment_matrix(&m, std::slice::from_ref(&f), 1).unwrap();
        let a = 0.5 - 2.0;
        assert_eq!(h.to_rows(), vec![vec![1.0, a], vec![a, a * a]]);
        let hd = generalized_moment_matrix(&m.to_dense().unwrap(), &[f], 1).unwrap();
        assert_eq!(hd, h);
    }

    #[test]
    fn radon_passes_on_atomic_data() {
        let g = grid();
        let m = MomentTensorSeq::atomic(
            g.clone(),
            vec![
                (0.4, GridMeasure::new(g.clone(), vec![0.0, 1.0, 2.0, 0.5]).unwrap()),
                (0.6, GridMeasure::new(g.clone(), vec![1.0, 0.0, 0.0, 3.0]).unwrap()),
            ],
            5,
        )
        .unwrap();
        let basis = vec![TestFunction::indicator(g.clone(), 0).unwrap(), TestFunction::constant(g.clone(), 1.0)];
        let phis = default_phi_samples(&g, false);
        let r = check_radon(&m, &basis, &phis, 2, 1e-9).unwrap();
        assert!(r.passed, "{:?}", r.first_failure);
    }

    #[test]
    fn sign_flip_of_first_moment_is_caught() {
        let m = single(&[0.0, 1.0, 0.0, 0.0], 3).map_order(1, |x| -x).unwrap();
        let phis = default_phi_samples(&grid(), false);
        let r = check_radon(&m, &[], &phis, 0, 1e-9).unwrap();
        assert!(!r.passed);
        let bad = r.phi.iter().find(|p| !p.report.is_psd()).unwrap();
        assert_eq!(bad.report.min_eigenvalue, -1.0);
    }

    #[test]
    fn zero_field_passes_everywhere() {
        let m = single(&[0.0; 4], 5);
        let phis = default_phi_samples(&grid(), false);
        let basis = vec![TestFunction::constant(grid(), 1.0)];
        for t in 0..=2 {
            assert!(check_radon(&m, &basis, &phis, t, 1e-9).unwrap().passed);
        }
    }

    #[test]
    fn negative_phi_rejected() {
        let m = single(&[0.0; 4], 3);
        let bad = PhiSample { label: "neg".into(), phi: TestFunction::new(grid(), vec![0.0, -1.0, 0.0, 0.0]).unwrap() };
        assert_eq!(check_radon(&m, &[], &[bad], 0, 1e-9).unwrap_err(), Error::NegativePhi(0));
    }

    #[test]
    fn density_violation_value_is_exact() {
        let c = 2.0;
        let hd = 0.5;
        let m = single(&[0.0, 1.5 * c * hd, 0.0, 0.0], 3);
        let phis = vec![PhiSample { label: "x*".into(), phi: TestFunction::indicator(grid(), 1).unwrap() }];
        let r = check_bounded_density(&m, c, &[], &phis, 0, 1e-9).unwrap();
        assert!(!r.passed);
        assert_eq!(r.first_failure.as_deref(), Some("gamma[0] x*"));
        assert_relative_eq!(r.gamma[0].report.min_eigenvalue, c * hd - 1.5 * c * hd, max_relative = 1e-12);
        assert!(matches!(check_bounded_density(&m, 0.0, &[], &phis, 0, 1e-9), Err(Error::NonPositiveC(_))));
    }

    #[test]
    fn sliced_variants() {
        let hd = 0.5;
        let m = single(&[0.0, 0.5 * hd, 2.0 * hd, 0.0], 5);
        for y in 0..4 {
            assert!(sliced_density_psd(&m, y, 1, 1e-9, SliceVariant::Shifted).unwrap().is_psd());
            assert!(sliced_density_psd(&m, y, 2, 1e-9, SliceVariant::Plain).unwrap().is_psd());
        }
        let zero = sliced_density_psd(&m, 0, 0, 1e-9, SliceVariant::Shifted).unwrap();
        assert_eq!(zero.min_eigenvalue, 0.0);
        let r = sliced_density_psd(&m, 2, 0, 1e-9, SliceVariant::Hausdorff { c: 1.5 }).unwrap();
        assert_eq!(r.verdict, PsdVerdict::NotPsd);
        assert!(sliced_density_psd(&m, 2, 2, 1e-9, SliceVariant::Hausdorff { c: 2.5 }).unwrap().is_psd());
        let plain = m.clone().with_density(false);
        assert_eq!(sliced_density_psd(&plain, 0, 0, 1e-9, SliceVariant::Plain).unwrap_err(), Error::NoDensity);
    }
}
