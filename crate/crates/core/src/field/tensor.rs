use crate::error::{Error, Result};
use crate::scalar::{lit, Scalar};

use super::grid::{Grid, GridMeasure, TestFunction};

/// Dense tensors are limited to this many entries.
pub const DENSE_LIMIT: usize = 1_000_000;

fn dense_len(grid: &Grid, order: usize) -> Result<usize> {
    let entries = (grid.cells() as u128).checked_pow(order as u32).unwrap_or(u128::MAX);
    if entries > DENSE_LIMIT as u128 {
        return Err(Error::TensorTooLarge { order, entries, limit: DENSE_LIMIT });
    }
    Ok(entries as usize)
}

/// Contracts the trailing index of an order-`k` tensor against `f`.
fn contract_last<T: Scalar>(t: &[T], f: &[T]) -> Vec<T> {
    let c = f.len();
    t.chunks(c).map(|row| row.iter().zip(f).fold(T::zero(), |acc, (&a, &b)| acc + a * b)).collect()
}

/// Full contraction `Σ t[x_1..x_k] Π f_i(x_i)`.
fn contract_all<T: Scalar>(t: &[T], fs: &[&[T]]) -> T {
    let mut cur = t.to_vec();
    for f in fs.iter().rev() {
        cur = contract_last(&cur, f);
    }
    cur[0]
}

fn outer<T: Scalar>(a: &[T], b: &[T]) -> Vec<T> {
    let mut out = Vec::with_capacity(a.len() * b.len());
    for &x in a {
        for &y in b {
            out.push(x * y);
        }
    }
    out
}

fn tensor_power<T: Scalar>(eta: &[T], n: usize) -> Vec<T> {
    let mut t = vec![T::one()];
    for _ in 0..n {
        t = outer(&t, eta);
    }
    t
}

fn unflatten_tuple(mut flat: usize, cells: usize, order: usize) -> Vec<usize> {
    let mut idx = vec![0; order];
    for k in (0..order).rev() {
        idx[k] = flat % cells;
        flat /= cells;
    }
    idx
}

fn flatten_tuple(idx: &[usize], cells: usize) -> usize {
    idx.iter().fold(0, |acc, &i| acc * cells + i)
}

/// Every entry equals the entry at its sorted index, within `1e-12`
/// relative to the largest entry.
fn is_symmetric<T: Scalar>(t: &[T], cells: usize, order: usize) -> bool {
    let scale = t.iter().fold(T::zero(), |m, x| m.max(x.abs()));
    let tol = lit::<T>(1e-12) * (T::one() + scale);
    (0..t.len()).all(|flat| {
        let mut idx = unflatten_tuple(flat, cells, order);
        idx.sort_unstable();
        (t[flat] - t[flatten_tuple(&idx, cells)]).abs() <= tol
    })
}

/// Symmetrization of `f_1 ⊗ ... ⊗ f_k` (average over all orderings).
fn symmetrized_product<T: Scalar>(fs: &[&[T]], cells: usize) -> Vec<T> {
    let k = fs.len();
    let len = cells.pow(k as u32);
    let mut perms = Vec::new();
    permutations(&mut (0..k).collect::<Vec<_>>(), 0, &mut perms);
    let norm = lit::<T>(perms.len() as f64);
    (0..len)
        .map(|flat| {
            let idx = unflatten_tuple(flat, cells, k);
            let s = perms
                .iter()
                .map(|p| p.iter().enumerate().fold(T::one(), |acc, (slot, &which)| acc * fs[which][idx[slot]]))
                .fold(T::zero(), |a, b| a + b);
            s / norm
        })
        .collect()
}

fn permutations(items: &mut Vec<usize>, start: usize, out: &mut Vec<Vec<usize>>) {
    if start == items.len() {
        out.push(items.clone());
        return;
    }
    for i in start..items.len() {
        items.swap(start, i);
        permutations(items, start + 1, out);
        items.swap(start, i);
    }
}

/// Polynomial on grid measures, `P(η) = p0 + Σ_j ⟨p^{(j)}, η^{⊗j}⟩`, with
/// dense symmetric coefficient tensors.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldPolynomial<T> {
    grid: Grid,
    p0: T,
    /// `coeffs[j-1]` is `p^{(j)}`.
    coeffs: Vec<Vec<T>>,
}

impl<T: Scalar> FieldPolynomial<T> {
    pub fn constant(grid: Grid, c: T) -> Self {
        Self { grid, p0: c, coeffs: Vec::new() }
    }

    /// `P(η) = ⟨φ, η⟩`.
    pub fn linear(phi: &TestFunction<T>) -> Self {
        Self { grid: phi.grid().clone(), p0: T::zero(), coeffs: vec![phi.values().to_vec()] }
    }

    /// `Φ_φ(η) = ⟨φ, η⟩`.
    pub fn phi(phi: &TestFunction<T>) -> Self {
        Self::linear(phi)
    }

    /// `Γ_{c,φ}(η) = c ⟨φ, λ⟩ - ⟨φ, η⟩`.
    pub fn gamma(c: T, phi: &TestFunction<T>) -> Self {
        Self {
            grid: phi.grid().clone(),
            p0: c * phi.integral(),
            coeffs: vec![phi.values().iter().map(|&v| -v).collect()],
        }
    }

    /// Validated constructor from dense coefficient tensors `p^{(1)}, ...`.
    pub fn from_parts(grid: Grid, p0: T, coeffs: Vec<Vec<T>>) -> Result<Self> {
        let cells = grid.cells();
        for (j, c) in coeffs.iter().enumerate() {
            let expect = dense_len(&grid, j + 1)?;
            if c.len() != expect {
                return Err(Error::DimensionMismatch { expected: expect, found: c.len() });
            }
            if !is_symmetric(c, cells, j + 1) {
                return Err(Error::NotSymmetricTensor(j + 1));
            }
        }
        Ok(Self { grid, p0, coeffs })
    }

    /// Adds `coef · sym(f_1 ⊗ ... ⊗ f_k)` to the degree-`k` part.
    pub fn add_product(&mut self, coef: T, fs: &[TestFunction<T>]) -> Result<()> {
        if fs.iter().any(|f| f.grid() != &self.grid) {
            return Err(Error::GridMismatch);
        }
        let k = fs.len();
        if k == 0 {
            self.p0 = self.p0 + coef;
            return Ok(());
        }
        let len = dense_len(&self.grid, k)?;
        while self.coeffs.len() < k {
            let n = self.coeffs.len() + 1;
            self.coeffs.push(vec![T::zero(); self.grid.cells().pow(n as u32)]);
        }
        let vals: Vec<&[T]> = fs.iter().map(|f| f.values()).collect();
        let sym = symmetrized_product(&vals, self.grid.cells());
        debug_assert_eq!(sym.len(), len);
        for (a, b) in self.coeffs[k - 1].iter_mut().zip(sym) {
            *a = *a + coef * b;
        }
        Ok(())
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn constant_term(&self) -> T {
        self.p0
    }

    /// `p^{(j)}` for `j >= 1`.
    pub fn coefficient(&self, j: usize) -> Option<&[T]> {
        self.coeffs.get(j.wrapping_sub(1)).map(Vec::as_slice)
    }

    pub fn order(&self) -> usize {
        self.coeffs.len()
    }

    pub fn eval(&self, eta: &[T]) -> T {
        let mut acc = self.p0;
        for (j, c) in self.coeffs.iter().enumerate() {
            let fs: Vec<&[T]> = vec![eta; j + 1];
            acc = acc + contract_all(c, &fs);
        }
        acc
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Representation<T> {
    /// `m^{(n)} = Σ_j w_j η_j^{⊗n}`.
    Atomic { weights: Vec<T>, atoms: Vec<Vec<T>> },
    /// `tensors[n]` is `m^{(n)}`, flattened row-major over `cells^n`.
    Dense(Vec<Vec<T>>),
}

/// Moment tensors `m^{(0)}, ..., m^{(N)}` over the cells of a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentTensorSeq<T> {
    grid: Grid,
    max_order: usize,
    repr: Representation<T>,
    density: bool,
}

impl<T: Scalar> MomentTensorSeq<T> {
    /// Atomic form from strictly positive weights and grid measures.
    pub fn atomic(grid: Grid, atoms: Vec<(T, GridMeasure<T>)>, max_order: usize) -> Result<Self> {
        let mut weights = Vec::with_capacity(atoms.len());
        let mut etas = Vec::with_capacity(atoms.len());
        for (i, (w, eta)) in atoms.into_iter().enumerate() {
            if !(w > T::zero()) || !w.is_finite() {
                return Err(Error::NonPositiveWeight { index: i, value: w.to_f64().unwrap_or(f64::NAN) });
            }
            if eta.grid() != &grid {
                return Err(Error::GridMismatch);
            }
            weights.push(w);
            etas.push(eta.into_weights());
        }
        Ok(Self { grid, max_order, repr: Representation::Atomic { weights, atoms: etas }, density: false })
    }

    /// Dense form; every tensor must be symmetric and within
    /// [`DENSE_LIMIT`] entries.
    pub fn dense(grid: Grid, tensors: Vec<Vec<T>>) -> Result<Self> {
        if tensors.is_empty() {
            return Err(Error::InvalidInput("dense moment sequence needs m^(0)".into()));
        }
        let cells = grid.cells();
        for (n, t) in tensors.iter().enumerate() {
            let expect = dense_len(&grid, n)?;
            if t.len() != expect {
                return Err(Error::DimensionMismatch { expected: expect, found: t.len() });
            }
            if !is_symmetric(t, cells, n) {
                return Err(Error::NotSymmetricTensor(n));
            }
        }
        let max_order = tensors.len() - 1;
        Ok(Self { grid, max_order, repr: Representation::Dense(tensors), density: false })
    }

    /// Declares that `m^{(n)} = α^{(n)} h^{dn}` with pointwise densities.
    pub fn with_density(mut self, density: bool) -> Self {
        self.density = density;
        self
    }

    pub fn has_density(&self) -> bool {
        self.density
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn max_order(&self) -> usize {
        self.max_order
    }

    pub fn representation(&self) -> &Representation<T> {
        &self.repr
    }

    pub fn is_atomic(&self) -> bool {
        matches!(self.repr, Representation::Atomic { .. })
    }

    fn check_order(&self, n: usize) -> Result<()> {
        if n > self.max_order {
            return Err(Error::OrderOverflow { order: n, max_order: self.max_order });
        }
        Ok(())
    }

    pub fn mass(&self) -> T {
        match &self.repr {
            Representation::Atomic { weights, .. } => weights.iter().copied().sum(),
            Representation::Dense(t) => t[0][0],
        }
    }

    /// `⟨f_1 ⊗ ... ⊗ f_n, m^{(n)}⟩`.
    pub fn pair(&self, fs: &[TestFunction<T>]) -> Result<T> {
        if fs.iter().any(|f| f.grid() != &self.grid) {
            return Err(Error::GridMismatch);
        }
        let vals: Vec<&[T]> = fs.iter().map(|f| f.values()).collect();
        self.pair_values(&vals)
    }

    pub(crate) fn pair_values(&self, fs: &[&[T]]) -> Result<T> {
        self.check_order(fs.len())?;
        Ok(match &self.repr {
            Representation::Atomic { weights, atoms } => weights
                .iter()
                .zip(atoms)
                .map(|(&w, eta)| {
                    fs.iter().fold(w, |acc, f| acc * f.iter().zip(eta).fold(T::zero(), |s, (&a, &b)| s + a * b))
                })
                .fold(T::zero(), |a, b| a + b),
            Representation::Dense(t) => contract_all(&t[fs.len()], fs),
        })
    }

    /// `⟨p, m^{(k)}⟩` for a dense order-`k` tensor `p`.
    pub fn pair_tensor(&self, p: &[T], k: usize) -> Result<T> {
        self.check_order(k)?;
        let expect = self.grid.cells().pow(k as u32);
        if p.len() != expect {
            return Err(Error::DimensionMismatch { expected: expect, found: p.len() });
        }
        Ok(match &self.repr {
            Representation::Atomic { weights, atoms } => weights
                .iter()
                .zip(atoms)
                .map(|(&w, eta)| w * contract_all(p, &vec![eta.as_slice(); k]))
                .fold(T::zero(), |a, b| a + b),
            Representation::Dense(t) => t[k].iter().zip(p).fold(T::zero(), |acc, (&a, &b)| acc + a * b),
        })
    }

    /// `m^{(n)}[x_1, ..., x_n]`.
    pub fn entry(&self, cells: &[usize]) -> Result<T> {
        self.check_order(cells.len())?;
        for &c in cells {
            self.grid.check_cell(c)?;
        }
        Ok(match &self.repr {
            Representation::Atomic { weights, atoms } => weights
                .iter()
                .zip(atoms)
                .map(|(&w, eta)| cells.iter().fold(w, |acc, &c| acc * eta[c]))
                .fold(T::zero(), |a, b| a + b),
            Representation::Dense(t) => t[cells.len()][flatten_tuple(cells, self.grid.cells())],
        })
    }

    /// Riesz functional `L_m(P) = p0 m^{(0)} + Σ_j ⟨p^{(j)}, m^{(j)}⟩`.
    pub fn riesz(&self, p: &FieldPolynomial<T>) -> Result<T> {
        if p.grid() != &self.grid {
            return Err(Error::GridMismatch);
        }
        self.check_order(p.order())?;
        let mut acc = p.constant_term() * self.mass();
        for j in 1..=p.order() {
            acc = acc + self.pair_tensor(p.coefficient(j).expect("order in range"), j)?;
        }
        Ok(acc)
    }

    /// Dense copy of every tensor.
    pub fn to_dense(&self) -> Result<Self> {
        match &self.repr {
            Representation::Dense(_) => Ok(self.clone()),
            Representation::Atomic { weights, atoms } => {
                let cells = self.grid.cells();
                let mut tensors = Vec::with_capacity(self.max_order + 1);
                for n in 0..=self.max_order {
                    let len = dense_len(&self.grid, n)?;
                    let mut t = vec![T::zero(); len];
                    for (&w, eta) in weights.iter().zip(atoms) {
                        for (a, b) in t.iter_mut().zip(tensor_power(eta, n)) {
                            *a = *a + w * b;
                        }
                    }
                    debug_assert_eq!(t.len(), cells.pow(n as u32));
                    tensors.push(t);
                }
                Ok(Self { grid: self.grid.clone(), max_order: self.max_order, repr: Representation::Dense(tensors), density: self.density })
            }
        }
    }

    /// Dense copy with `m^{(n)}` replaced by `f(m^{(n)})` entrywise. Used to
    /// build corrupted inputs; symmetry is preserved by any entrywise map.
    pub fn map_order(&self, n: usize, f: impl Fn(T) -> T) -> Result<Self> {
        self.check_order(n)?;
        let mut d = self.to_dense()?;
        if let Representation::Dense(t) = &mut d.repr {
            for v in t[n].iter_mut() {
                *v = f(*v);
            }
        }
        Ok(d)
    }

    /// Dense copy with `ε` added to `m^{(n)}[x_1..x_n]` and to every entry
    /// obtained by permuting the cells, so the result stays symmetric.
    pub fn shift_entry(&self, cells: &[usize], eps: T) -> Result<Self> {
        self.check_order(cells.len())?;
        for &c in cells {
            self.grid.check_cell(c)?;
        }
        let mut d = self.to_dense()?;
        let n_cells = self.grid.cells();
        let mut perms = Vec::new();
        permutations(&mut (0..cells.len()).collect::<Vec<_>>(), 0, &mut perms);
        let mut targets: Vec<usize> =
            perms.iter().map(|p| flatten_tuple(&p.iter().map(|&i| cells[i]).collect::<Vec<_>>(), n_cells)).collect();
        targets.sort_unstable();
        targets.dedup();
        if let Representation::Dense(t) = &mut d.repr {
            for flat in targets {
                t[cells.len()][flat] = t[cells.len()][flat] + eps;
            }
        }
        Ok(d)
    }
}

/// Shifted sequence `(_P m)^{(n)} = p0 m^{(n)} + Σ_j ⟨p^{(j)}, m^{(n+j)}⟩`
/// (contracted in the trailing slots), of max order `N - ord P`. Atomic
/// input stays atomic, with each weight multiplied by `P(η_j)`; the result
/// may carry signed weights.
pub fn field_shift<T: Scalar>(m: &MomentTensorSeq<T>, p: &FieldPolynomial<T>) -> Result<MomentTensorSeq<T>> {
    if p.grid() != m.grid() {
        return Err(Error::GridMismatch);
    }
    m.check_order(p.order())?;
    let max_order = m.max_order - p.order();
    let repr = match &m.repr {
        Representation::Atomic { weights, atoms } => Representation::Atomic {
            weights: weights.iter().zip(atoms).map(|(&w, eta)| w * p.eval(eta)).collect(),
            atoms: atoms.clone(),
        },
        Representation::Dense(t) => {
            let cells = m.grid.cells();
            let mut out = Vec::with_capacity(max_order + 1);
            for n in 0..=max_order {
                let mut acc: Vec<T> = t[n].iter().map(|&x| x * p.constant_term()).collect();
                for j in 1..=p.order() {
                    let coef = p.coefficient(j).expect("order in range");
                    let block = coef.len();
                    // m^{(n+j)} viewed as cells^n rows of length cells^j
                    for (row, slot) in acc.iter_mut().enumerate() {
                        let chunk = &t[n + j][row * block..(row + 1) * block];
                        *slot = *slot + chunk.iter().zip(coef).fold(T::zero(), |s, (&a, &b)| s + a * b);
                    }
                }
                debug_assert_eq!(acc.len(), cells.pow(n as u32));
                out.push(acc);
            }
            Representation::Dense(out)
        }
    };
    Ok(MomentTensorSeq { grid: m.grid.clone(), max_order, repr, density: m.density })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn grid(g: usize) -> Grid {
        Grid::new(1, g, 0.25, 0.0).unwrap()
    }

    fn measure(g: &Grid, w: &[f64]) -> GridMeasure<f64> {
        GridMeasure::new(g.clone(), w.to_vec()).unwrap()
    }

    fn two_atoms() -> MomentTensorSeq<f64> {
        let g = grid(3);
        MomentTensorSeq::atomic(
            g.clone(),
            vec![(0.3, measure(&g, &[1.0, 0.5, 0.0])), (0.7, measure(&g, &[0.0, 2.0, 0.25]))],
            4,
        )
        .unwrap()
    }

    #[test]
    fn pair_examples() {
        let m = two_atoms();
        assert_relative_eq!(m.pair(&[]).unwrap(), 1.0);
        let one = TestFunction::constant(grid(3), 1.0);
        assert_relative_eq!(m.pair(&[one]).unwrap(), 0.3 * 1.5 + 0.7 * 2.25, max_relative = 1e-15);

        let g = grid(4);
        let single = MomentTensorSeq::atomic(g.clone(), vec![(1.0, GridMeasure::dirac(g.clone(), 2).unwrap())], 3).unwrap();
        let f = TestFunction::new(g, vec![0.1, -0.4, 1.7, 3.0]).unwrap();
        assert_relative_eq!(single.pair(&[f.clone(), f]).unwrap(), 1.7 * 1.7, max_relative = 1e-15);
    }

    #[test]
    fn order_and_grid_checks() {
        let m = two_atoms();
        let f = TestFunction::constant(grid(3), 1.0);
        assert!(matches!(m.pair(&vec![f; 5]), Err(Error::OrderOverflow { order: 5, max_order: 4 })));
        let other = TestFunction::constant(grid(4), 1.0);
        assert_eq!(m.pair(&[other]).unwrap_err(), Error::GridMismatch);
    }

    #[test]
    fn dense_and_atomic_agree() {
        let m = two_atoms();
        let d = m.to_dense().unwrap();
        let f = TestFunction::new(grid(3), vec![0.2, -1.0, 0.7]).unwrap();
        let h = TestFunction::new(grid(3), vec![1.5, 0.3, -0.1]).unwrap();
        for fs in [vec![], vec![f.clone()], vec![f.clone(), h.clone()], vec![h.clone(), f.clone(), f.clone()]] {
            assert_relative_eq!(m.pair(&fs).unwrap(), d.pair(&fs).unwrap(), max_relative = 1e-12);
        }
        let mut p = FieldPolynomial::constant(grid(3), 0.5);
        p.add_product(2.0, std::slice::from_ref(&f)).unwrap();
        p.add_product(-1.0, &[f.clone(), h.clone()]).unwrap();
        let sa = field_shift(&m, &p).unwrap();
        let sd = field_shift(&d, &p).unwrap();
        assert_eq!(sa.max_order(), 2);
        let sa_dense = sa.to_dense().unwrap();
        for n in 0..=2 {
            if let (Representation::Dense(a), Representation::Dense(b)) = (sa_dense.representation(), sd.representation()) {
                for (x, y) in a[n].iter().zip(&b[n]) {
                    assert_relative_eq!(x, y, max_relative = 1e-12, epsilon = 1e-14);
                }
            }
        }
    }

    #[test]
    fn shift_property_holds() {
        let m = two_atoms();
        let f = TestFunction::new(grid(3), vec![0.2, -1.0, 0.7]).unwrap();
        let phi = TestFunction::new(grid(3), vec![1.0, 0.0, 2.0]).unwrap();
        let p = FieldPolynomial::linear(&phi);
        let lhs = field_shift(&m, &p).unwrap().pair(&[f.clone(), f.clone()]).unwrap();
        let rhs = m.pair(&[phi, f.clone(), f]).unwrap();
        assert_relative_eq!(lhs, rhs, max_relative = 1e-14);
        let one = FieldPolynomial::constant(grid(3), 1.0);
        assert_eq!(field_shift(&m, &one).unwrap(), m);
    }

    #[test]
    fn dense_symmetry_enforced() {
        let g = grid(2);
        let bad = MomentTensorSeq::dense(g.clone(), vec![vec![1.0], vec![0.0, 0.0], vec![1.0, 2.0, 3.0, 4.0]]);
        assert_eq!(bad.unwrap_err(), Error::NotSymmetricTensor(2));
        let big = Grid::new(1, 1001, 0.1, 0.0).unwrap();
        let m = MomentTensorSeq::atomic(big.clone(), vec![(1.0, GridMeasure::dirac(big, 0).unwrap())], 2).unwrap();
        assert!(matches!(m.to_dense(), Err(Error::TensorTooLarge { order: 2, .. })));
    }

    #[test]
    fn dense_tensors_are_permutation_invariant() {
        let d = two_atoms().to_dense().unwrap();
        if let Representation::Dense(t) = d.representation() {
            for n in 0..=3 {
                for flat in 0..t[n].len() {
                    let idx = unflatten_tuple(flat, 3, n);
                    let mut perm = idx.clone();
                    let mut all = Vec::new();
                    permutations(&mut perm, 0, &mut all);
                    for p in all {
                        assert_eq!(t[n][flatten_tuple(&p, 3)], t[n][flat]);
                    }
                }
            }
        }
    }

    #[test]
    fn riesz_of_phi_polynomial() {
        let m = two_atoms();
        let phi = TestFunction::new(grid(3), vec![1.0, 2.0, 0.0]).unwrap();
        let l = m.riesz(&FieldPolynomial::phi(&phi)).unwrap();
        assert_relative_eq!(l, 0.3 * 2.0 + 0.7 * 4.0, max_relative = 1e-15);
        let gam = FieldPolynomial::gamma(3.0, &phi);
        assert_relative_eq!(gam.constant_term(), 3.0 * 3.0 * 0.25);
    }
}
