//! Dense matrices, a cyclic Jacobi eigensolver for symmetric matrices, the
//! PSD test built on it, and a pivoted-QR least-squares solver.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::scalar::{lit, Scalar};

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Clone> Matrix<T> {
    pub fn filled(rows: usize, cols: usize, value: T) -> Self {
        Self { rows, cols, data: vec![value; rows * cols] }
    }

    pub fn from_rows(rows: Vec<Vec<T>>) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            if row.len() != c {
                return Err(Error::DimensionMismatch { expected: c, found: row.len() });
            }
            data.extend(row);
        }
        Ok(Self { rows: r, cols: c, data })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> &T {
        &self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, value: T) {
        self.data[i * self.cols + j] = value;
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn to_rows(&self) -> Vec<Vec<T>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn map<U>(&self, f: impl FnMut(&T) -> U) -> Matrix<U> {
        Matrix { rows: self.rows, cols: self.cols, data: self.data.iter().map(f).collect() }
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }
}

impl<T: Scalar> Matrix<T> {
    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, n, |i, j| if i == j { T::one() } else { T::zero() })
    }

    pub fn max_abs(&self) -> T {
        self.data.iter().fold(T::zero(), |m, x| m.max(x.abs()))
    }

    /// `vᵀ H v`.
    pub fn quadratic_form(&self, v: &[T]) -> T {
        let mut acc = T::zero();
        for i in 0..self.rows {
            let mut row = T::zero();
            for j in 0..self.cols {
                row = row + *self.get(i, j) * v[j];
            }
            acc = acc + v[i] * row;
        }
        acc
    }

    pub fn mul_vec(&self, v: &[T]) -> Vec<T> {
        (0..self.rows)
            .map(|i| (0..self.cols).fold(T::zero(), |acc, j| acc + *self.get(i, j) * v[j]))
            .collect()
    }
}

/// Eigen-decomposition of a symmetric matrix: eigenvalues ascending, with the
/// matching unit eigenvectors stored as columns.
#[derive(Debug, Clone)]
pub struct SymmetricEigen<T> {
    pub eigenvalues: Vec<T>,
    pub eigenvectors: Matrix<T>,
}

impl<T: Scalar> SymmetricEigen<T> {
    pub fn eigenvector(&self, k: usize) -> Vec<T> {
        (0..self.eigenvectors.rows()).map(|i| *self.eigenvectors.get(i, k)).collect()
    }
}

/// Householder reduction to tridiagonal form followed by the implicit QL
/// iteration. Only the lower triangle is read; callers check symmetry first.
pub fn symmetric_eigen<T: Scalar>(h: &Matrix<T>) -> SymmetricEigen<T> {
    let n = h.rows();
    if n == 0 {
        return SymmetricEigen { eigenvalues: Vec::new(), eigenvectors: Matrix::identity(0) };
    }
    let mut v: Vec<Vec<T>> = h.to_rows();
    let mut d = vec![T::zero(); n];
    let mut e = vec![T::zero(); n];
    tridiagonalize(&mut v, &mut d, &mut e);
    tridiagonal_ql(&mut v, &mut d, &mut e);

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| d[i].partial_cmp(&d[j]).expect("finite eigenvalues"));
    let eigenvalues = order.iter().map(|&i| d[i]).collect();
    let eigenvectors = Matrix::from_fn(n, n, |r, k| v[r][order[k]]);
    SymmetricEigen { eigenvalues, eigenvectors }
}

/// Householder tridiagonalization; on return `v` holds the accumulated
/// orthogonal transform, `d` the diagonal and `e[1..]` the subdiagonal.
fn tridiagonalize<T: Scalar>(v: &mut [Vec<T>], d: &mut [T], e: &mut [T]) {
    let n = d.len();
    d.copy_from_slice(&v[n - 1][..n]);
    for i in (1..n).rev() {
        let mut scale = T::zero();
        let mut h = T::zero();
        for k in 0..i {
            scale = scale + d[k].abs();
        }
        if scale == T::zero() {
            e[i] = d[i - 1];
            for j in 0..i {
                d[j] = v[i - 1][j];
                v[i][j] = T::zero();
                v[j][i] = T::zero();
            }
        } else {
            for k in 0..i {
                d[k] = d[k] / scale;
                h = h + d[k] * d[k];
            }
            let mut f = d[i - 1];
            let mut g = h.sqrt();
            if f > T::zero() {
                g = -g;
            }
            e[i] = scale * g;
            h = h - f * g;
            d[i - 1] = f - g;
            for ej in e.iter_mut().take(i) {
                *ej = T::zero();
            }
            for j in 0..i {
                f = d[j];
                v[j][i] = f;
                g = e[j] + v[j][j] * f;
                for k in (j + 1)..i {
                    g = g + v[k][j] * d[k];
                    e[k] = e[k] + v[k][j] * f;
                }
                e[j] = g;
            }
            f = T::zero();
            for j in 0..i {
                e[j] = e[j] / h;
                f = f + e[j] * d[j];
            }
            let hh = f / (h + h);
            for j in 0..i {
                e[j] = e[j] - hh * d[j];
            }
            for j in 0..i {
                f = d[j];
                g = e[j];
                for k in j..i {
                    v[k][j] = v[k][j] - (f * e[k] + g * d[k]);
                }
                d[j] = v[i - 1][j];
                v[i][j] = T::zero();
            }
        }
        d[i] = h;
    }
    for i in 0..n - 1 {
        v[n - 1][i] = v[i][i];
        v[i][i] = T::one();
        let h = d[i + 1];
        if h != T::zero() {
            for k in 0..=i {
                d[k] = v[k][i + 1] / h;
            }
            for j in 0..=i {
                let mut g = T::zero();
                for k in 0..=i {
                    g = g + v[k][i + 1] * v[k][j];
                }
                for k in 0..=i {
                    v[k][j] = v[k][j] - g * d[k];
                }
            }
        }
        for k in 0..=i {
            v[k][i + 1] = T::zero();
        }
    }
    for j in 0..n {
        d[j] = v[n - 1][j];
        v[n - 1][j] = T::zero();
    }
    v[n - 1][n - 1] = T::one();
    e[0] = T::zero();
}

/// Implicit QL with Wilkinson-style shifts on the tridiagonal `(d, e)`,
/// rotating the columns of `v` along.
fn tridiagonal_ql<T: Scalar>(v: &mut [Vec<T>], d: &mut [T], e: &mut [T]) {
    let n = d.len();
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = T::zero();
    let two = lit::<T>(2.0);
    let mut f = T::zero();
    let mut tst1 = T::zero();
    let eps = T::epsilon();
    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n {
            if e[m].abs() <= eps * tst1 {
                break;
            }
            m += 1;
        }
        let m = m.min(n - 1);
        if m > l {
            for _iter in 0..64 {
                let mut g = d[l];
                let mut p = (d[l + 1] - g) / (two * e[l]);
                let mut r = p.hypot(T::one());
                if p < T::zero() {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let mut h = g - d[l];
                for di in d.iter_mut().take(n).skip(l + 2) {
                    *di = *di - h;
                }
                f = f + h;
                p = d[m];
                let mut c = T::one();
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = T::zero();
                let mut s2 = T::zero();
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    g = c * e[i];
                    h = c * p;
                    r = p.hypot(e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);
                    for row in v.iter_mut() {
                        let a = row[i + 1];
                        row[i + 1] = s * row[i] + c * a;
                        row[i] = c * row[i] - s * a;
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
                if e[l].abs() <= eps * tst1 {
                    break;
                }
            }
        }
        d[l] = d[l] + f;
        e[l] = T::zero();
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PsdVerdict {
    Psd,
    NotPsd,
}

/// Outcome of a PSD test. `witness` is always the unit eigenvector of the
/// smallest eigenvalue and `quadratic_value` its exactly evaluated `vᵀHv`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PsdReport<T> {
    pub dimension: usize,
    pub verdict: PsdVerdict,
    pub min_eigenvalue: T,
    pub witness: Vec<T>,
    pub quadratic_value: T,
    pub tol: T,
}

impl<T> PsdReport<T> {
    pub fn is_psd(&self) -> bool {
        self.verdict == PsdVerdict::Psd
    }
}

/// `1e-9 * (1 + max|H|)`.
pub fn default_tol<T: Scalar>(h: &Matrix<T>) -> T {
    lit::<T>(1e-9) * (T::one() + h.max_abs())
}

/// PSD iff the smallest eigenvalue is `>= -tol`. A `NotPsd` verdict is only
/// issued when the witness direction also evaluates negative, so the
/// witness is always a checkable disproof.
pub fn is_psd<T: Scalar>(h: &Matrix<T>, tol: T) -> Result<PsdReport<T>> {
    if !h.is_square() {
        return Err(Error::DimensionMismatch { expected: h.rows(), found: h.cols() });
    }
    let n = h.rows();
    for i in 0..n {
        for j in (i + 1)..n {
            let gap = (*h.get(i, j) - *h.get(j, i)).abs();
            if gap > tol {
                return Err(Error::NotSymmetric { row: i, col: j, gap: gap.to_f64().unwrap_or(f64::NAN) });
            }
        }
    }
    if n == 0 {
        return Ok(PsdReport {
            dimension: 0,
            verdict: PsdVerdict::Psd,
            min_eigenvalue: T::zero(),
            witness: Vec::new(),
            quadratic_value: T::zero(),
            tol,
        });
    }
    let eig = symmetric_eigen(h);
    let min_eigenvalue = eig.eigenvalues[0];
    let witness = eig.eigenvector(0);
    let quadratic_value = h.quadratic_form(&witness);
    let verdict = if min_eigenvalue < -tol && quadratic_value < T::zero() {
        PsdVerdict::NotPsd
    } else {
        PsdVerdict::Psd
    };
    Ok(PsdReport { dimension: n, verdict, min_eigenvalue, witness, quadratic_value, tol })
}

/// [`is_psd`] at the scaled tolerance `rel_tol * (1 + max|H|)`.
pub fn is_psd_scaled<T: Scalar>(h: &Matrix<T>, rel_tol: T) -> Result<PsdReport<T>> {
    is_psd(h, rel_tol * (T::one() + h.max_abs()))
}

/// Least-squares solution of `A x ≈ b` by Householder QR with column
/// pivoting. Columns found numerically dependent get a zero coefficient.
pub fn lstsq<T: Scalar>(a: &Matrix<T>, b: &[T]) -> Vec<T> {
    let m = a.rows();
    let n = a.cols();
    let mut r = a.clone();
    let mut rhs = b.to_vec();
    let mut perm: Vec<usize> = (0..n).collect();
    let col_norm = |r: &Matrix<T>, j: usize, from: usize| {
        (from..m).fold(T::zero(), |acc, i| acc + *r.get(i, j) * *r.get(i, j)).sqrt()
    };
    let ref_norm = (0..n).fold(T::zero(), |acc, j| acc.max(col_norm(&r, j, 0)));
    let rank_tol = ref_norm * T::epsilon() * lit(1e3) * from_dims::<T>(m, n);
    let mut rank = 0;

    for k in 0..m.min(n) {
        let (best, best_norm) = (k..n)
            .map(|j| (j, col_norm(&r, j, k)))
            .fold((k, -T::one()), |acc, x| if x.1 > acc.1 { x } else { acc });
        if best_norm <= rank_tol {
            break;
        }
        if best != k {
            perm.swap(k, best);
            for i in 0..m {
                let tmp = *r.get(i, k);
                r.set(i, k, *r.get(i, best));
                r.set(i, best, tmp);
            }
        }
        let x0 = *r.get(k, k);
        let alpha = if x0 >= T::zero() { -best_norm } else { best_norm };
        let mut v: Vec<T> = (k..m).map(|i| *r.get(i, k)).collect();
        v[0] = v[0] - alpha;
        let vnorm2 = v.iter().fold(T::zero(), |acc, x| acc + *x * *x);
        if vnorm2 > T::zero() {
            let two = lit::<T>(2.0);
            for j in k..n {
                let dot = (k..m).fold(T::zero(), |acc, i| acc + v[i - k] * *r.get(i, j));
                let f = two * dot / vnorm2;
                for i in k..m {
                    r.set(i, j, *r.get(i, j) - f * v[i - k]);
                }
            }
            let dot = (k..m).fold(T::zero(), |acc, i| acc + v[i - k] * rhs[i]);
            let f = two * dot / vnorm2;
            for i in k..m {
                rhs[i] = rhs[i] - f * v[i - k];
            }
        }
        rank = k + 1;
    }

    let mut z = vec![T::zero(); rank];
    for i in (0..rank).rev() {
        let mut acc = rhs[i];
        for j in (i + 1)..rank {
            acc = acc - *r.get(i, j) * z[j];
        }
        z[i] = acc / *r.get(i, i);
    }
    let mut x = vec![T::zero(); n];
    for (i, zi) in z.into_iter().enumerate() {
        x[perm[i]] = zi;
    }
    x
}

fn from_dims<T: Scalar>(m: usize, n: usize) -> T {
    T::from_usize(m.max(n).max(1)).expect("dimension fits scalar")
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn identity_is_psd_with_unit_min_eigenvalue() {
        let r = is_psd(&Matrix::<f64>::identity(3), 0.0).unwrap();
        assert!(r.is_psd());
        assert_relative_eq!(r.min_eigenvalue, 1.0, epsilon = 1e-15);
    }

    #[test]
    fn swap_matrix_is_not_psd_with_antisymmetric_witness() {
        let h = Matrix::from_rows(vec![vec![0.0_f64, 1.0], vec![1.0, 0.0]]).unwrap();
        let r = is_psd(&h, 1e-9).unwrap();
        assert_eq!(r.verdict, PsdVerdict::NotPsd);
        assert_relative_eq!(r.min_eigenvalue, -1.0, epsilon = 1e-14);
        assert_relative_eq!(r.quadratic_value, -1.0, epsilon = 1e-14);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        // eigenvector is (1,-1)/sqrt2 up to sign
        let sign = r.witness[0].signum();
        assert_relative_eq!(r.witness[0] * sign, s, epsilon = 1e-14);
        assert_relative_eq!(r.witness[1] * sign, -s, epsilon = 1e-14);
    }

    #[test]
    fn rank_one_ones_matrix_is_psd_with_zero_min_eigenvalue() {
        let h = Matrix::from_rows(vec![vec![1.0_f64, 1.0], vec![1.0, 1.0]]).unwrap();
        let r = is_psd(&h, 1e-9).unwrap();
        assert!(r.is_psd());
        assert!(r.min_eigenvalue.abs() < 1e-15);
    }

    #[test]
    fn asymmetric_input_is_rejected() {
        let h = Matrix::from_rows(vec![vec![1.0, 2.0], vec![0.0, 1.0]]).unwrap();
        assert!(matches!(is_psd(&h, 1e-9), Err(Error::NotSymmetric { .. })));
    }

    #[test]
    fn jacobi_matches_nalgebra_on_random_symmetric() {
        let n = 7;
        let mut seed = 12345_u64;
        let mut next = || {
            seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((seed >> 11) as f64) / ((1u64 << 53) as f64) - 0.5
        };
        let mut h = Matrix::filled(n, n, 0.0);
        for i in 0..n {
            for j in i..n {
                let x = next();
                h.set(i, j, x);
                h.set(j, i, x);
            }
        }
        let ours = symmetric_eigen(&h);
        let na = nalgebra::DMatrix::from_fn(n, n, |i, j| *h.get(i, j));
        let mut theirs: Vec<f64> = na.symmetric_eigen().eigenvalues.iter().copied().collect();
        theirs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for (a, b) in ours.eigenvalues.iter().zip(&theirs) {
            assert_relative_eq!(a, b, epsilon = 1e-12);
        }
        for k in 0..n {
            let v = ours.eigenvector(k);
            let hv = h.mul_vec(&v);
            for i in 0..n {
                assert!((hv[i] - ours.eigenvalues[k] * v[i]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn lstsq_solves_square_and_overdetermined_systems() {
        let a = Matrix::from_rows(vec![vec![1.0, 1.0, 1.0], vec![0.0, 0.5, 1.0], vec![0.0, 0.25, 1.0]]).unwrap();
        let x = lstsq(&a, &[1.0, 0.5, 0.25]);
        assert_relative_eq!(x[0], 0.0, epsilon = 1e-14);
        assert_relative_eq!(x[1], 1.0, epsilon = 1e-14);
        assert_relative_eq!(x[2], 0.0, epsilon = 1e-14);

        // fit a line through three points
        let a = Matrix::from_rows(vec![vec![1.0, 0.0], vec![1.0, 1.0], vec![1.0, 2.0]]).unwrap();
        let x = lstsq(&a, &[1.0, 2.0, 4.0]);
        assert_relative_eq!(x[0], 5.0 / 6.0, epsilon = 1e-13);
        assert_relative_eq!(x[1], 1.5, epsilon = 1e-13);
    }

    #[test]
    fn lstsq_handles_dependent_columns() {
        let a = Matrix::from_rows(vec![vec![1.0, 2.0], vec![2.0, 4.0]]).unwrap();
        let x = lstsq(&a, &[1.0, 2.0]);
        let r = a.mul_vec(&x);
        assert_relative_eq!(r[0], 1.0, epsilon = 1e-13);
        assert_relative_eq!(r[1], 2.0, epsilon = 1e-13);
    }
}
