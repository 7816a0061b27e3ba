use serde::{Deserialize, Serialize};

use super::Gpe2dError;

/// Margin (in radial widths σ) the box must leave outside the ring.
pub const DEFAULT_RING_MARGIN: f64 = 6.0;

/// Cell-centred Cartesian grid, symmetric about the origin.
///
/// Point `i` along x sits at `(i - (nx-1)/2)·dx` with `dx = extent_x/nx`, so
/// the grid is invariant under inversion `(x, y) → (-x, -y)`. Values are
/// stored row-major: index `j*nx + i`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid2D {
    pub nx: usize,
    pub ny: usize,
    pub extent_x: f64,
    pub extent_y: f64,
}

impl Grid2D {
    pub fn new(nx: usize, ny: usize, extent_x: f64, extent_y: f64) -> Result<Self, Gpe2dError> {
        if nx < 16 || ny < 16 {
            return Err(Gpe2dError::GridTooSmall { nx, ny });
        }
        if !(extent_x.is_finite() && extent_y.is_finite() && extent_x > 0.0 && extent_y > 0.0) {
            return Err(Gpe2dError::BadExtent { extent_x, extent_y });
        }
        Ok(Self { nx, ny, extent_x, extent_y })
    }

    pub fn square(n: usize, extent: f64) -> Result<Self, Gpe2dError> {
        Self::new(n, n, extent, extent)
    }

    pub fn dx(&self) -> f64 {
        self.extent_x / self.nx as f64
    }

    pub fn dy(&self) -> f64 {
        self.extent_y / self.ny as f64
    }

    pub fn cell_area(&self) -> f64 {
        self.dx() * self.dy()
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn x(&self, i: usize) -> f64 {
        (i as f64 - 0.5 * (self.nx as f64 - 1.0)) * self.dx()
    }

    #[inline]
    pub fn y(&self, j: usize) -> f64 {
        (j as f64 - 0.5 * (self.ny as f64 - 1.0)) * self.dy()
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    /// Radius of the largest origin-centred disk inside the box.
    pub fn inscribed_radius(&self) -> f64 {
        0.5 * self.extent_x.min(self.extent_y)
    }

    /// Iterates `(index, x, y)` over all points in storage order.
    pub fn points(&self) -> impl Iterator<Item = (usize, f64, f64)> + '_ {
        (0..self.ny).flat_map(move |j| {
            let y = self.y(j);
            (0..self.nx).map(move |i| (j * self.nx + i, self.x(i), y))
        })
    }

    pub fn check_encloses(&self, ring_radius: f64, margin: f64) -> Result<(), Gpe2dError> {
        let half_extent = self.inscribed_radius();
        if half_extent > ring_radius + margin {
            Ok(())
        } else {
            Err(Gpe2dError::RingNotEnclosed {
                half_extent,
                radius: ring_radius,
                margin,
            })
        }
    }

    /// True if `(x, y)` lies inside the sampled box.
    pub fn contains(&self, x: f64, y: f64) -> bool {
        x.abs() <= 0.5 * self.extent_x && y.abs() <= 0.5 * self.extent_y
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn symmetric_cell_centres() {
        let g = Grid2D::new(16, 20, 24.0, 30.0).unwrap();
        assert_eq!(g.dx(), 1.5);
        assert!((g.x(0) + g.x(15)).abs() < 1e-15);
        assert!((g.y(3) + g.y(16)).abs() < 1e-15);
        assert!((g.x(8) - 0.75).abs() < 1e-15);
    }

    #[test]
    fn validation() {
        assert!(Grid2D::square(8, 10.0).is_err());
        assert!(Grid2D::square(32, 0.0).is_err());
        let g = Grid2D::square(64, 24.0).unwrap();
        assert!(g.check_encloses(5.0, DEFAULT_RING_MARGIN).is_ok());
        assert!(g.check_encloses(6.0, DEFAULT_RING_MARGIN).is_err());
    }
}
