//! Ground truth from finite-atomic measures: seeded ensembles, their exact
//! moments, non-negative fitting over candidate atoms, and single-entry
//! perturbations.

use rand_core::{RngCore, SeedableRng};
use rand_xoshiro::SplitMix64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::{Grid, GridMeasure, MomentTensorSeq};
use crate::linalg::{lstsq, Matrix};
use crate::poly::{monomials, MultiIndex};
use crate::moments::MomentSequence;
use crate::scalar::{lit, Ring, Scalar};

/// Where the atoms of a sampled ensemble live.
#[derive(Debug, Clone, PartialEq)]
pub enum Domain {
    /// Points drawn uniformly from the box `[lo_i, hi_i]`.
    Points { lo: Vec<f64>, hi: Vec<f64> },
    /// Grid measures with density `U(0,1) · max_density` in every cell.
    Field { grid: Grid, max_density: f64 },
}

impl Domain {
    pub fn unit_box(d: usize) -> Self {
        Domain::Points { lo: vec![0.0; d], hi: vec![1.0; d] }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Atoms<T> {
    Points { dim: usize, atoms: Vec<(T, Vec<T>)> },
    Field { grid: Grid, atoms: Vec<(T, GridMeasure<T>)> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct AtomicEnsemble<T> {
    pub seed: Option<u64>,
    pub recipe: String,
    pub atoms: Atoms<T>,
    /// Field atoms are given as densities against the cell volume.
    pub density: bool,
}

impl<T: Scalar> AtomicEnsemble<T> {
    pub fn points(dim: usize, atoms: Vec<(T, Vec<T>)>) -> Result<Self> {
        for (i, (w, x)) in atoms.iter().enumerate() {
            if !(*w > T::zero()) {
                return Err(Error::NonPositiveWeight { index: i, value: w.to_f64().unwrap_or(f64::NAN) });
            }
            if x.len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, found: x.len() });
            }
        }
        Ok(Self { seed: None, recipe: "explicit".into(), atoms: Atoms::Points { dim, atoms }, density: false })
    }

    pub fn field(grid: Grid, atoms: Vec<(T, GridMeasure<T>)>, density: bool) -> Result<Self> {
        for (i, (w, eta)) in atoms.iter().enumerate() {
            if !(*w > T::zero()) {
                return Err(Error::NonPositiveWeight { index: i, value: w.to_f64().unwrap_or(f64::NAN) });
            }
            if eta.grid() != &grid {
                return Err(Error::GridMismatch);
            }
        }
        Ok(Self { seed: None, recipe: "explicit".into(), atoms: Atoms::Field { grid, atoms }, density })
    }

    pub fn len(&self) -> usize {
        match &self.atoms {
            Atoms::Points { atoms, .. } => atoms.len(),
            Atoms::Field { atoms, .. } => atoms.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn mass(&self) -> T {
        match &self.atoms {
            Atoms::Points { atoms, .. } => atoms.iter().map(|a| a.0).sum(),
            Atoms::Field { atoms, .. } => atoms.iter().map(|a| a.0).sum(),
        }
    }

    /// Largest cell density over all field atoms; zero for point atoms.
    pub fn max_density(&self) -> T {
        match &self.atoms {
            Atoms::Points { .. } => T::zero(),
            Atoms::Field { atoms, .. } => atoms.iter().fold(T::zero(), |m, (_, eta)| m.max(eta.max_density())),
        }
    }
}

/// Seeding contract: one `SplitMix64` stream seeded with `seed`; a uniform
/// draw is `(next_u64 >> 11) · 2^-53`.
pub const RECIPE: &str = "splitmix64(seed); u = (next_u64 >> 11) * 2^-53; per atom in order: weight 0.1 + 0.9u, \
then points: x_i = lo_i + (hi_i - lo_i)u for each axis, or fields: density u * max_density for each cell in row-major order";

fn uniform(rng: &mut SplitMix64) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Deterministic ensemble of `j` atoms for `seed`, drawn as in [`RECIPE`].
pub fn sample_atomic_ensemble<T: Scalar>(seed: u64, j: usize, domain: &Domain) -> Result<AtomicEnsemble<T>> {
    if j == 0 {
        return Err(Error::InvalidInput("ensemble needs at least one atom".into()));
    }
    let mut rng = SplitMix64::seed_from_u64(seed);
    let mut ens = match domain {
        Domain::Points { lo, hi } => {
            if lo.len() != hi.len() || lo.is_empty() {
                return Err(Error::InvalidInput("point domain needs matching non-empty bounds".into()));
            }
            let atoms = (0..j)
                .map(|_| {
                    let w = lit::<T>(0.1 + 0.9 * uniform(&mut rng));
                    let x = lo.iter().zip(hi).map(|(&a, &b)| lit::<T>(a + (b - a) * uniform(&mut rng))).collect();
                    (w, x)
                })
                .collect();
            AtomicEnsemble::points(lo.len(), atoms)?
        }
        Domain::Field { grid, max_density } => {
            grid.validate()?;
            let mut atoms = Vec::with_capacity(j);
            for _ in 0..j {
                let w = lit::<T>(0.1 + 0.9 * uniform(&mut rng));
                let rho = (0..grid.cells()).map(|_| lit::<T>(uniform(&mut rng) * max_density)).collect();
                atoms.push((w, GridMeasure::from_density(grid.clone(), rho)?));
            }
            AtomicEnsemble::field(grid.clone(), atoms, true)?
        }
    };
    ens.seed = Some(seed);
    ens.recipe = RECIPE.into();
    Ok(ens)
}

#[derive(Debug, Clone, PartialEq)]
pub enum ExactMoments<T> {
    Points(MomentSequence<T>),
    Field(MomentTensorSeq<T>),
}

/// `m(α) = Σ_j w_j x_j^α` for points, `m^{(n)} = Σ_j w_j η_j^{⊗n}` (atomic
/// form) for fields.
pub fn exact_moments<T: Scalar>(e: &AtomicEnsemble<T>, n: usize) -> Result<ExactMoments<T>> {
    match &e.atoms {
        Atoms::Points { dim, atoms } => Ok(ExactMoments::Points(point_moments(*dim, atoms, n)?)),
        Atoms::Field { grid, atoms } => {
            Ok(ExactMoments::Field(MomentTensorSeq::atomic(grid.clone(), atoms.clone(), n)?.with_density(e.density)))
        }
    }
}

/// Moments of `Σ_j w_j δ_{x_j}` up to total degree `n`.
pub fn point_moments<T: Ring>(dim: usize, atoms: &[(T, Vec<T>)], n: usize) -> Result<MomentSequence<T>> {
    MomentSequence::from_fn(dim, n, |alpha| {
        atoms.iter().fold(T::zero(), |acc, (w, x)| acc + w.clone() * monomial_at(alpha, x))
    })
}

fn monomial_at<T: Ring>(alpha: &MultiIndex, x: &[T]) -> T {
    alpha.entries().iter().zip(x).fold(T::one(), |acc, (&e, xi)| (0..e).fold(acc, |a, _| a * xi.clone()))
}

/// Iteration cap of the non-negative least-squares fitter.
pub const FIT_ITERATION_CAP: usize = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FitStatus {
    Feasible,
    Infeasible,
    IterationCapReached,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitResult<T> {
    pub status: FitStatus,
    pub feasible: bool,
    pub weights: Vec<T>,
    /// Euclidean norm of the moment mismatch.
    pub residual: T,
    pub t_match: usize,
    pub tol: T,
    pub iterations: usize,
}

/// Fits non-negative weights on `candidates` to every moment of degree
/// `<= t_match` (Lawson–Hanson active set); feasible iff the residual is
/// within `tol`.
pub fn brute_force_realizable<T: Scalar>(
    m: &MomentSequence<T>,
    candidates: &[Vec<T>],
    t_match: usize,
    tol: T,
) -> Result<FitResult<T>> {
    if t_match > m.max_degree() {
        return Err(Error::DegreeOverflow { degree: t_match, available: m.max_degree() });
    }
    if candidates.is_empty() {
        return Err(Error::InvalidInput("candidate set is empty".into()));
    }
    if let Some(c) = candidates.iter().find(|c| c.len() != m.dim()) {
        return Err(Error::DimensionMismatch { expected: m.dim(), found: c.len() });
    }
    let rows = monomials(m.dim(), t_match);
    let a = Matrix::from_fn(rows.len(), candidates.len(), |i, j| monomial_at(&rows[i], &candidates[j]));
    let b: Vec<T> = rows.iter().map(|alpha| m.value(alpha)).collect::<Result<_>>()?;
    let (weights, iterations, capped) = nnls(&a, &b, FIT_ITERATION_CAP);
    let fitted = a.mul_vec(&weights);
    let residual = fitted.iter().zip(&b).fold(T::zero(), |acc, (&f, &v)| acc + (f - v) * (f - v)).sqrt();
    let status = if capped {
        FitStatus::IterationCapReached
    } else if residual <= tol {
        FitStatus::Feasible
    } else {
        FitStatus::Infeasible
    };
    Ok(FitResult { status, feasible: status == FitStatus::Feasible, weights, residual, t_match, tol, iterations })
}

/// Lawson–Hanson NNLS. Returns `(x, iterations, hit_cap)`.
fn nnls<T: Scalar>(a: &Matrix<T>, b: &[T], cap: usize) -> (Vec<T>, usize, bool) {
    let n = a.cols();
    let mut x = vec![T::zero(); n];
    let mut passive = vec![false; n];
    let scale = (0..a.rows()).fold(T::zero(), |m, i| a.row(i).iter().fold(m, |m, v| m.max(v.abs())));
    let bnorm = b.iter().fold(T::zero(), |m, v| m.max(v.abs()));
    let eps = T::epsilon() * lit(1e3) * (T::one() + scale) * (T::one() + bnorm) * lit(n as f64);
    let mut iterations = 0;

    let gradient = |x: &[T]| -> Vec<T> {
        let ax = a.mul_vec(x);
        let r: Vec<T> = b.iter().zip(&ax).map(|(&bi, &ai)| bi - ai).collect();
        (0..n).map(|j| (0..a.rows()).fold(T::zero(), |acc, i| acc + *a.get(i, j) * r[i])).collect()
    };
    let solve_passive = |passive: &[bool]| -> Vec<T> {
        let cols: Vec<usize> = (0..n).filter(|&j| passive[j]).collect();
        let sub = Matrix::from_fn(a.rows(), cols.len(), |i, k| *a.get(i, cols[k]));
        let z = lstsq(&sub, b);
        let mut s = vec![T::zero(); n];
        for (k, &j) in cols.iter().enumerate() {
            s[j] = z[k];
        }
        s
    };

    loop {
        let w = gradient(&x);
        let next = (0..n).filter(|&j| !passive[j] && w[j] > eps).max_by(|&i, &j| w[i].partial_cmp(&w[j]).expect("finite gradient"));
        let Some(j) = next else { return (x, iterations, false) };
        passive[j] = true;
        loop {
            iterations += 1;
            if iterations > cap {
                return (x, iterations, true);
            }
            let s = solve_passive(&passive);
            if (0..n).filter(|&k| passive[k]).all(|k| s[k] > T::zero()) {
                x = s;
                break;
            }
            let alpha = (0..n)
                .filter(|&k| passive[k] && s[k] <= T::zero())
                .map(|k| x[k] / (x[k] - s[k]))
                .fold(T::infinity(), |m, v| m.min(v));
            for k in 0..n {
                x[k] = x[k] + alpha * (s[k] - x[k]);
                if passive[k] && x[k] <= T::epsilon() * (T::one() + bnorm) {
                    passive[k] = false;
                    x[k] = T::zero();
                }
            }
            if !passive.iter().any(|&p| p) {
                break;
            }
        }
    }
}

/// Copy of `m` with the entry at `alpha` shifted by `eps`.
pub fn perturb<T: Ring>(m: &MomentSequence<T>, alpha: &MultiIndex, eps: T) -> Result<MomentSequence<T>> {
    let v = m.value(alpha)?;
    m.with_value(alpha, v + eps)
}

/// Dense copy of `m` with `m^{(n)}[cells]` (and its permutations) shifted
/// by `eps`.
pub fn perturb_tensor<T: Scalar>(m: &MomentTensorSeq<T>, cells: &[usize], eps: T) -> Result<MomentTensorSeq<T>> {
    m.shift_entry(cells, eps)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::TestFunction;
    use crate::linalg::is_psd;
    use approx::assert_relative_eq;
    use num_rational::Ratio;

    fn mi(v: &[u32]) -> MultiIndex {
        MultiIndex::new(v.to_vec())
    }

    #[test]
    fn seeded_ensembles_are_deterministic() {
        let dom = Domain::unit_box(2);
        let a = sample_atomic_ensemble::<f64>(7, 5, &dom).unwrap();
        let b = sample_atomic_ensemble::<f64>(7, 5, &dom).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, sample_atomic_ensemble::<f64>(8, 5, &dom).unwrap());
        let Atoms::Points { atoms, .. } = &a.atoms else { panic!() };
        assert_eq!(atoms.len(), 5);
        assert!(atoms.iter().all(|(w, x)| *w >= 0.1 && *w <= 1.0 && x.iter().all(|v| (0.0..=1.0).contains(v))));
        assert_relative_eq!(a.mass(), atoms.iter().map(|a| a.0).sum::<f64>());
    }

    #[test]
    fn field_ensemble_is_non_negative() {
        let grid = Grid::new(1, 4, 0.25, 0.0).unwrap();
        let e = sample_atomic_ensemble::<f64>(1, 1, &Domain::Field { grid, max_density: 2.0 }).unwrap();
        let Atoms::Field { atoms, .. } = &e.atoms else { panic!() };
        assert_eq!(atoms.len(), 1);
        assert!(atoms[0].1.weights().iter().all(|&w| w >= 0.0));
        assert!(e.max_density() <= 2.0);
    }

    #[test]
    fn point_moment_examples() {
        let e = AtomicEnsemble::points(1, vec![(1.0, vec![1.0])]).unwrap();
        let ExactMoments::Points(m) = exact_moments(&e, 6).unwrap() else { panic!() };
        assert!(m.iter().all(|(_, &v)| v == 1.0));
        let half = Ratio::new(1i64, 2);
        let m = point_moments(1, &[(half, vec![Ratio::from(0)]), (half, vec![Ratio::from(1)])], 4).unwrap();
        assert_eq!(m.value(&mi(&[0])).unwrap(), Ratio::from(1));
        for n in 1..=4 {
            assert_eq!(m.value(&mi(&[n])).unwrap(), half);
        }
    }

    #[test]
    fn field_dirac_pairs_by_evaluation() {
        let grid = Grid::new(1, 3, 1.0, 0.0).unwrap();
        let e = AtomicEnsemble::field(grid.clone(), vec![(1.0, GridMeasure::dirac(grid.clone(), 1).unwrap())], false).unwrap();
        let ExactMoments::Field(m) = exact_moments(&e, 3).unwrap() else { panic!() };
        let f = TestFunction::new(grid.clone(), vec![2.0, 3.0, 5.0]).unwrap();
        let g = TestFunction::new(grid, vec![7.0, 11.0, 13.0]).unwrap();
        assert_eq!(m.pair(&[f.clone(), g.clone(), f]).unwrap(), 3.0 * 11.0 * 3.0);
    }

    #[test]
    fn fit_examples() {
        let m = MomentSequence::univariate(vec![1.0_f64, 0.5, 0.25]).unwrap();
        let fit = brute_force_realizable(&m, &[vec![0.0], vec![0.5], vec![1.0]], 2, 1e-8).unwrap();
        assert!(fit.feasible);
        assert_relative_eq!(fit.weights[1], 1.0, epsilon = 1e-12);
        assert!(fit.weights[0].abs() < 1e-12 && fit.weights[2].abs() < 1e-12);

        let m = MomentSequence::univariate(vec![1.0, 2.0]).unwrap();
        let fit = brute_force_realizable(&m, &[vec![0.0], vec![0.5], vec![1.0]], 1, 1e-8).unwrap();
        assert_eq!(fit.status, FitStatus::Infeasible);

        let m = MomentSequence::univariate(vec![1.0_f64, 0.0, 1.0, 0.0]).unwrap();
        let fit = brute_force_realizable(&m, &[vec![-1.0], vec![0.0], vec![1.0]], 3, 1e-8).unwrap();
        assert!(fit.feasible);
        assert_relative_eq!(fit.weights[0], 0.5, epsilon = 1e-12);
        assert!(fit.weights[1].abs() < 1e-12);
        assert_relative_eq!(fit.weights[2], 0.5, epsilon = 1e-12);
        assert!(fit.weights.iter().all(|&w| w >= 0.0));
    }

    #[test]
    fn fit_rejects_excess_degree() {
        let m = MomentSequence::univariate(vec![1.0, 0.5]).unwrap();
        assert!(matches!(brute_force_realizable(&m, &[vec![0.0]], 2, 1e-8), Err(Error::DegreeOverflow { .. })));
    }

    #[test]
    fn perturbation_breaks_psd() {
        let m = MomentSequence::univariate(vec![1.0; 3]).unwrap();
        assert_eq!(perturb(&m, &mi(&[2]), 0.0).unwrap(), m);
        let p = perturb(&m, &mi(&[2]), -0.5).unwrap();
        let h = p.moment_matrix(1).unwrap();
        assert_eq!(h.to_rows(), vec![vec![1.0, 1.0], vec![1.0, 0.5]]);
        assert!(!is_psd(&h, 1e-12).unwrap().is_psd());
        assert_eq!(perturb(&p, &mi(&[2]), 0.5).unwrap(), m);
        assert!(perturb(&m, &mi(&[3]), 1.0).is_err());
    }

    #[test]
    fn perturbation_revert_is_exact_over_rationals() {
        let m = MomentSequence::univariate(vec![Ratio::new(1i64, 3), Ratio::new(1, 7), Ratio::new(2, 9)]).unwrap();
        let eps = Ratio::new(5, 11);
        let back = perturb(&perturb(&m, &mi(&[1]), eps).unwrap(), &mi(&[1]), -eps).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn tensor_perturbation_stays_symmetric() {
        let grid = Grid::new(1, 3, 1.0, 0.0).unwrap();
        let e = sample_atomic_ensemble::<f64>(3, 2, &Domain::Field { grid, max_density: 1.0 }).unwrap();
        let ExactMoments::Field(m) = exact_moments(&e, 3).unwrap() else { panic!() };
        let p = perturb_tensor(&m, &[0, 2], 0.25).unwrap();
        assert_relative_eq!(p.entry(&[0, 2]).unwrap(), m.entry(&[0, 2]).unwrap() + 0.25, max_relative = 1e-15);
        assert_relative_eq!(p.entry(&[2, 0]).unwrap(), m.entry(&[2, 0]).unwrap() + 0.25, max_relative = 1e-15);
        assert_relative_eq!(p.entry(&[1, 1]).unwrap(), m.entry(&[1, 1]).unwrap(), max_relative = 1e-15);
    }
}
