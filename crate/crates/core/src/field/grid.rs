use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{lit, Scalar};

fn zero() -> f64 {
    0.0
}

/// Uniform lattice with `g` points per axis in `d` dimensions. Point `i`
/// on an axis sits at `origin + i h`; each point carries a cell of volume
/// `h^d`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub d: usize,
    pub g: usize,
    pub h: f64,
    #[serde(default = "zero")]
    pub origin: f64,
}

impl Grid {
    pub fn new(d: usize, g: usize, h: f64, origin: f64) -> Result<Self> {
        let grid = Self { d, g, h, origin };
        grid.validate()?;
        Ok(grid)
    }

    pub fn validate(&self) -> Result<()> {
        if self.d == 0 || self.g == 0 {
            return Err(Error::InvalidInput("grid needs d >= 1 and g >= 1".into()));
        }
        if !(self.h > 0.0) || !self.h.is_finite() {
            return Err(Error::InvalidInput(format!("grid spacing must be positive, got {}", self.h)));
        }
        if (self.g as f64).powi(self.d as i32) > 1e9 {
            return Err(Error::InvalidInput("grid has too many cells".into()));
        }
        Ok(())
    }

    pub fn cells(&self) -> usize {
        self.g.pow(self.d as u32)
    }

    /// Discrete Lebesgue measure of one cell.
    pub fn cell_volume<T: Scalar>(&self) -> T {
        lit::<T>(self.h).powi(self.d as i32)
    }

    /// Per-axis indices of a flat (row-major) cell index.
    pub fn unflatten(&self, mut cell: usize) -> Vec<usize> {
        let mut idx = vec![0; self.d];
        for k in (0..self.d).rev() {
            idx[k] = cell % self.g;
            cell /= self.g;
        }
        idx
    }

    pub fn flatten(&self, idx: &[usize]) -> usize {
        idx.iter().fold(0, |acc, &i| acc * self.g + i)
    }

    pub fn coords<T: Scalar>(&self, cell: usize) -> Vec<T> {
        self.unflatten(cell).into_iter().map(|i| lit(self.origin + i as f64 * self.h)).collect()
    }

    pub fn check_cell(&self, cell: usize) -> Result<()> {
        if cell >= self.cells() {
            return Err(Error::IndexOutOfRange(format!("cell {cell} of {}", self.cells())));
        }
        Ok(())
    }

    fn check_len(&self, len: usize) -> Result<()> {
        if len != self.cells() {
            return Err(Error::DimensionMismatch { expected: self.cells(), found: len });
        }
        Ok(())
    }
}

/// Non-negative mass per cell: a Radon measure on the grid.
#[derive(Debug, Clone, PartialEq)]
pub struct GridMeasure<T> {
    grid: Grid,
    weights: Vec<T>,
}

impl<T: Scalar> GridMeasure<T> {
    pub fn new(grid: Grid, weights: Vec<T>) -> Result<Self> {
        grid.check_len(weights.len())?;
        if let Some(i) = weights.iter().position(|w| !(*w >= T::zero()) || !w.is_finite()) {
            return Err(Error::NegativeMeasure(i));
        }
        Ok(Self { grid, weights })
    }

    /// Unit mass at one cell.
    pub fn dirac(grid: Grid, cell: usize) -> Result<Self> {
        grid.check_cell(cell)?;
        let mut w = vec![T::zero(); grid.cells()];
        w[cell] = T::one();
        Self::new(grid, w)
    }

    /// Measure with density `rho` against the discrete Lebesgue measure.
    pub fn from_density(grid: Grid, rho: Vec<T>) -> Result<Self> {
        let v = grid.cell_volume::<T>();
        let w = rho.into_iter().map(|r| r * v).collect();
        Self::new(grid, w)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    pub fn into_weights(self) -> Vec<T> {
        self.weights
    }

    pub fn mass(&self) -> T {
        self.weights.iter().copied().sum()
    }

    /// Largest density value `η(x) / h^d`.
    pub fn max_density(&self) -> T {
        let v = self.grid.cell_volume::<T>();
        self.weights.iter().fold(T::zero(), |m, &w| m.max(w / v))
    }
}

/// Real function on the grid cells.
#[derive(Debug, Clone, PartialEq)]
pub struct TestFunction<T> {
    grid: Grid,
    values: Vec<T>,
}

impl<T: Scalar> TestFunction<T> {
    pub fn new(grid: Grid, values: Vec<T>) -> Result<Self> {
        grid.check_len(values.len())?;
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("test function values must be finite".into()));
        }
        Ok(Self { grid, values })
    }

    pub fn constant(grid: Grid, c: T) -> Self {
        let values = vec![c; grid.cells()];
        Self { grid, values }
    }

    pub fn indicator(grid: Grid, cell: usize) -> Result<Self> {
        grid.check_cell(cell)?;
        let mut v = vec![T::zero(); grid.cells()];
        v[cell] = T::one();
        Ok(Self { grid, values: v })
    }

    /// Indicator of the axis-aligned box with lower corner `start` and side
    /// lengths `width` (in cells).
    pub fn box_indicator(grid: Grid, start: &[usize], width: &[usize]) -> Result<Self> {
        if start.len() != grid.d || width.len() != grid.d {
            return Err(Error::DimensionMismatch { expected: grid.d, found: start.len().min(width.len()) });
        }
        if start.iter().zip(width).any(|(&s, &w)| w == 0 || s + w > grid.g) {
            return Err(Error::IndexOutOfRange(format!("box {start:?}+{width:?} on g = {}", grid.g)));
        }
        let values = (0..grid.cells())
            .map(|c| {
                let idx = grid.unflatten(c);
                let inside = idx.iter().zip(start.iter().zip(width)).all(|(&i, (&s, &w))| i >= s && i < s + w);
                if inside {
                    T::one()
                } else {
                    T::zero()
                }
            })
            .collect();
        Ok(Self { grid, values })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn is_non_negative(&self) -> bool {
        self.values.iter().all(|v| *v >= T::zero())
    }

    /// `⟨f, η⟩ = Σ_x f(x) η(x)`.
    pub fn pair_measure(&self, eta: &[T]) -> T {
        self.values.iter().zip(eta).fold(T::zero(), |acc, (&f, &e)| acc + f * e)
    }

    /// `⟨f, λ⟩ = Σ_x f(x) h^d`.
    pub fn integral(&self) -> T {
        self.values.iter().copied().sum::<T>() * self.grid.cell_volume::<T>()
    }

    /// Discrete smoothing with the kernel `(1/4, 1/2, 1/4)` along every axis
    /// (zero outside the grid). Keeps non-negativity.
    pub fn mollified(&self) -> Self {
        let g = self.grid.g;
        let mut cur = self.values.clone();
        for axis in 0..self.grid.d {
            let mut next = vec![T::zero(); cur.len()];
            for (c, out) in next.iter_mut().enumerate() {
                let idx = self.grid.unflatten(c);
                let mut acc = cur[c] * lit(0.5);
                for (delta, wgt) in [(-1i64, 0.25), (1, 0.25)] {
                    let j = idx[axis] as i64 + delta;
                    if j >= 0 && (j as usize) < g {
                        let mut nb = idx.clone();
                        nb[axis] = j as usize;
                        acc = acc + cur[self.grid.flatten(&nb)] * lit(wgt);
                    }
                }
                *out = acc;
            }
            cur = next;
        }
        Self { grid: self.grid.clone(), values: cur }
    }
}

/// Member of the sampled cone of non-negative test functions.
#[derive(Debug, Clone)]
pub struct PhiSample<T> {
    pub label: String,
    pub phi: TestFunction<T>,
}

/// Every single-cell indicator plus every axis-aligned box indicator with
/// side lengths in `1..=3` cells, optionally mollified.
pub fn default_phi_samples<T: Scalar>(grid: &Grid, mollified: bool) -> Vec<PhiSample<T>> {
    let mut out = Vec::new();
    let max_w = 3.min(grid.g);
    let mut widths = vec![1usize; grid.d];
    loop {
        let counts: Vec<usize> = widths.iter().map(|&w| grid.g - w + 1).collect();
        let total: usize = counts.iter().product();
        for flat in 0..total {
            let mut rest = flat;
            let mut start = vec![0; grid.d];
            for k in (0..grid.d).rev() {
                start[k] = rest % counts[k];
                rest /= counts[k];
            }
            let f = TestFunction::box_indicator(grid.clone(), &start, &widths).expect("box inside grid");
            let label = if widths.iter().all(|&w| w == 1) {
                format!("cell{start:?}")
            } else {
                format!("box{start:?}+{widths:?}")
            };
            let phi = if mollified { f.mollified() } else { f };
            out.push(PhiSample { label, phi });
        }
        let mut k = 0;
        loop {
            if k == grid.d {
                return out;
            }
            widths[k] += 1;
            if widths[k] <= max_w {
                break;
            }
            widths[k] = 1;
            k += 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flatten_round_trip() {
        let g = Grid::new(3, 4, 0.5, 0.0).unwrap();
        for c in 0..g.cells() {
            assert_eq!(g.flatten(&g.unflatten(c)), c);
        }
        assert_eq!(g.coords::<f64>(g.flatten(&[1, 2, 3])), vec![0.5, 1.0, 1.5]);
    }

    #[test]
    fn measures_reject_negative_mass() {
        let g = Grid::new(1, 3, 1.0, 0.0).unwrap();
        assert_eq!(GridMeasure::new(g.clone(), vec![0.0, -1.0, 0.0]).unwrap_err(), Error::NegativeMeasure(1));
        assert!(matches!(GridMeasure::<f64>::new(g, vec![0.0]), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn default_samples_count() {
        let g1 = Grid::new(1, 8, 0.1, 0.0).unwrap();
        assert_eq!(default_phi_samples::<f64>(&g1, false).len(), 8 + 7 + 6);
        let g2 = Grid::new(2, 4, 0.1, 0.0).unwrap();
        // (4+3+2)² boxes
        assert_eq!(default_phi_samples::<f64>(&g2, false).len(), 81);
        assert!(default_phi_samples::<f64>(&g2, true).iter().all(|p| p.phi.is_non_negative()));
    }

    #[test]
    fn integral_uses_cell_volume() {
        let g = Grid::new(2, 3, 0.5, 0.0).unwrap();
        let f = TestFunction::constant(g, 2.0);
        assert_eq!(f.integral(), 2.0 * 9.0 * 0.25);
    }
}
