use num_complex::Complex64;

use super::{Gpe2dError, Grid2D};
use crate::measurement::DensityImage;

/// The condensate order parameter Ψ sampled on a [`Grid2D`].
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexField2D {
    pub grid: Grid2D,
    pub values: Vec<Complex64>,
    pub time: f64,
}

impl ComplexField2D {
    pub fn zeros(grid: Grid2D) -> Self {
        Self {
            grid,
            values: vec![Complex64::new(0.0, 0.0); grid.len()],
            time: 0.0,
        }
    }

    pub fn from_fn(grid: Grid2D, mut f: impl FnMut(f64, f64) -> Complex64) -> Self {
        let values = grid.points().map(|(_, x, y)| f(x, y)).collect();
        Self { grid, values, time: 0.0 }
    }

    /// Σ|Ψ|² dx dy
    pub fn norm_sqr(&self) -> f64 {
        self.values.iter().map(|c| c.norm_sqr()).sum::<f64>() * self.grid.cell_area()
    }

    pub fn normalize(&mut self) {
        let n = self.norm_sqr();
        if n > 0.0 {
            let s = 1.0 / n.sqrt();
            self.values.iter_mut().for_each(|c| *c *= s);
        }
    }

    /// ⟨self|other⟩ = Σ conj(self)·other dx dy
    pub fn inner(&self, other: &Self) -> Result<Complex64, Gpe2dError> {
        if self.grid != other.grid {
            return Err(Gpe2dError::GridMismatch);
        }
        let s: Complex64 = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a.conj() * b)
            .sum();
        Ok(s * self.grid.cell_area())
    }

    /// L2 distance `sqrt(Σ|a-b|² dA)`.
    pub fn l2_distance(&self, other: &Self) -> Result<f64, Gpe2dError> {
        if self.grid != other.grid {
            return Err(Gpe2dError::GridMismatch);
        }
        let s: f64 = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum();
        Ok((s * self.grid.cell_area()).sqrt())
    }

    pub fn density(&self) -> DensityImage {
        DensityImage {
            grid: self.grid,
            values: self.values.iter().map(|c| c.norm_sqr()).collect(),
            time: self.time,
        }
    }

    pub fn max_density(&self) -> f64 {
        self.values.iter().map(|c| c.norm_sqr()).fold(0.0, f64::max)
    }

    /// Largest |Ψ|² on the outermost rows and columns.
    pub fn boundary_density(&self) -> f64 {
        let g = &self.grid;
        let mut m = 0.0f64;
        for i in 0..g.nx {
            m = m.max(self.values[g.index(i, 0)].norm_sqr());
            m = m.max(self.values[g.index(i, g.ny - 1)].norm_sqr());
        }
        for j in 0..g.ny {
            m = m.max(self.values[g.index(0, j)].norm_sqr());
            m = m.max(self.values[g.index(g.nx - 1, j)].norm_sqr());
        }
        m
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|c| c.re.is_finite() && c.im.is_finite())
    }
}
