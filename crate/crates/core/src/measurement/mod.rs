//! Image-only estimators for the imaging protocol.
//!
//! Everything here consumes [`DensityImage`]s, never complex fields, so the
//! estimators see exactly what a fluorescence camera would provide.

mod arcs;
mod estimators;
mod report;
mod synthetic;
mod trace;

pub use arcs::{arc_integral, locate_extrema, AngularMoments, ArcRegion, Extrema, CONTRAST_FLOOR};
pub use estimators::{
    default_arc_radius, estimate_delta, estimate_imbalance, estimate_overlap_integral,
    ArcFormula, DeltaConfig, ImbalanceConfig, ImbalanceEstimate,
};
pub use report::{
    measure_images, Estimate, FrameEstimate, MeasureConfig, MeasurementReport, StaticFrames, REPORT_SCHEMA,
};
pub use synthetic::{apply_multiplicative_noise, fringe_image, fringe_sequence};
pub use trace::{coherence_frequency, track_nodal_line, NodalTrace, Taper, TraceConfig, MIN_TRACE_SPAN};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gpe2d::Grid2D;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MeasurementError {
    #[error("arc region invalid: {0}")]
    BadRegion(String),
    #[error("arc radius {radius} exceeds the inscribed radius {limit} of the image")]
    RegionExceedsGrid { radius: f64, limit: f64 },
    #[error("fringe contrast {contrast:e} below floor {floor:e}: no nodal line to locate")]
    LowContrast { contrast: f64, floor: f64 },
    #[error("inconsistent image: 1 - 4 p+ p- = {0:e} is negative")]
    InconsistentImage(f64),
    #[error("density along the ray never exceeds the floor")]
    DegenerateRay,
    #[error("need at least {needed} frames, got {got}")]
    TooFewFrames { needed: usize, got: usize },
    #[error("frames {index} and {next}: nodal line moved {step:.3} rad (≥ π/4); sample more densely", next = index + 1)]
    FrameSpacingTooCoarse { index: usize, step: f64 },
    #[error("coherence series is flat (|ρ| below {0:e})")]
    FlatSeries(f64),
    #[error("times must be finite and strictly increasing")]
    BadTimes,
    #[error("images live on different grids")]
    GridMismatch,
    #[error("invalid image: {0}")]
    BadImage(String),
    #[error("report: {0}")]
    BadReport(String),
}

/// Column density `|Ψ|²` sampled on a grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityImage {
    pub grid: Grid2D,
    pub values: Vec<f64>,
    pub time: f64,
}

impl DensityImage {
    pub fn new(grid: Grid2D, values: Vec<f64>, time: f64) -> Result<Self, MeasurementError> {
        let img = Self { grid, values, time };
        img.validate()?;
        Ok(img)
    }

    pub fn validate(&self) -> Result<(), MeasurementError> {
        if self.values.len() != self.grid.len() {
            return Err(MeasurementError::BadImage(format!(
                "{} values for a {}×{} grid",
                self.values.len(),
                self.grid.nx,
                self.grid.ny
            )));
        }
        if let Some(i) = self.values.iter().position(|v| !v.is_finite() || *v < 0.0) {
            return Err(MeasurementError::BadImage(format!(
                "value {} at point {i} is negative or non-finite",
                self.values[i]
            )));
        }
        if !self.time.is_finite() {
            return Err(MeasurementError::BadImage("time is not finite".into()));
        }
        Ok(())
    }

    /// `Σ n dA`
    pub fn integral(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.grid.cell_area()
    }

    /// `Σ n² dA`
    pub fn square_integral(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>() * self.grid.cell_area()
    }

    /// Density-weighted mean radius.
    pub fn mean_radius(&self) -> f64 {
        let (mut num, mut den) = (0.0, 0.0);
        for (k, x, y) in self.grid.points() {
            num += self.values[k] * x.hypot(y);
            den += self.values[k];
        }
        if den > 0.0 {
            num / den
        } else {
            0.0
        }
    }

    /// Value at `(x, y)` by Keys bicubic convolution; zero outside the grid.
    pub fn sample(&self, x: f64, y: f64) -> f64 {
        let g = &self.grid;
        let u = x / g.dx() + 0.5 * (g.nx as f64 - 1.0);
        let v = y / g.dy() + 0.5 * (g.ny as f64 - 1.0);
        let (i0, j0) = (u.floor(), v.floor());
        let (tu, tv) = (u - i0, v - j0);
        let wu = keys_weights(tu);
        let wv = keys_weights(tv);
        let mut s = 0.0;
        for (b, wy) in wv.iter().enumerate() {
            let j = j0 as isize + b as isize - 1;
            if j < 0 || j >= g.ny as isize {
                continue;
            }
            for (a, wx) in wu.iter().enumerate() {
                let i = i0 as isize + a as isize - 1;
                if i < 0 || i >= g.nx as isize {
                    continue;
                }
                s += wx * wy * self.values[j as usize * g.nx + i as usize];
            }
        }
        s
    }
}

/// Keys cubic convolution weights (a = -1/2) for offsets -1, 0, 1, 2.
fn keys_weights(t: f64) -> [f64; 4] {
    let w = |d: f64| {
        let d = d.abs();
        if d < 1.0 {
            1.5 * d * d * d - 2.5 * d * d + 1.0
        } else if d < 2.0 {
            -0.5 * d * d * d + 2.5 * d * d - 4.0 * d + 2.0
        } else {
            0.0
        }
    };
    [w(1.0 + t), w(t), w(1.0 - t), w(2.0 - t)]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn keys_weights_partition_unity() {
        for t in [0.0, 0.25, 0.5, 0.9] {
            let s: f64 = keys_weights(t).iter().sum();
            assert!((s - 1.0).abs() < 1e-14);
        }
        assert_eq!(keys_weights(0.0), [0.0, 1.0, 0.0, 0.0]);
    }

    #[test]
    fn bicubic_sampling_reproduces_quadratics() {
        let grid = Grid2D::square(32, 8.0).unwrap();
        let f = |x: f64, y: f64| 1.0 + 0.3 * x - 0.2 * y + 0.05 * x * y + 0.04 * x * x;
        let values = grid.points().map(|(_, x, y)| f(x, y)).collect();
        let img = DensityImage { grid, values, time: 0.0 };
        for (x, y) in [(0.1, 0.2), (-1.37, 2.01), (2.5, -0.77)] {
            assert!((img.sample(x, y) - f(x, y)).abs() < 1e-12);
        }
    }

    #[test]
    fn validation_rejects_negative_values() {
        let grid = Grid2D::square(16, 8.0).unwrap();
        let mut v = vec![0.0; 256];
        v[3] = -1e-3;
        assert!(DensityImage::new(grid, v, 0.0).is_err());
        assert!(DensityImage::new(grid, vec![0.0; 10], 0.0).is_err());
    }
}
