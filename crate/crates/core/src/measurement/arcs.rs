//! Angular structure of a density image.
//!
//! The radially integrated angular density `g(φ) = ∫ n r dr` (up to a cut
//! radius ρ) is represented by its Fourier coefficients
//! `G_m = (1/2π) ∫_{r≤ρ} n e^{-imφ} d²r`, computed by direct quadrature over
//! the grid. Arc integrals then follow in closed form,
//! `∫_{c-θ}^{c+θ} g dφ = 2θ G₀ + 2 Σ_{m≥1} Re(G_m e^{imc}) · 2 sin(mθ)/m`,
//! and the fringe orientation comes from `G₂`.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{DensityImage, MeasurementError};

/// Minimum fringe contrast `2|G₂|/G₀` for locating the nodal line.
pub const CONTRAST_FLOOR: f64 = 1e-3;

/// Harmonics kept when integrating over arcs.
const ARC_HARMONICS: usize = 32;

#[derive(Debug, Clone, PartialEq)]
pub struct AngularMoments {
    pub radius: f64,
    /// `G_0 … G_M`
    pub moments: Vec<Complex64>,
}

impl AngularMoments {
    /// Moments up to `max_m` over the disk `r ≤ radius` (`INFINITY` = whole image).
    pub fn compute(img: &DensityImage, radius: f64, max_m: usize) -> Self {
        let mut moments = vec![Complex64::new(0.0, 0.0); max_m + 1];
        let r2max = radius * radius;
        for (k, x, y) in img.grid.points() {
            let n = img.values[k];
            if n == 0.0 {
                continue;
            }
            let r2 = x * x + y * y;
            if r2 > r2max {
                continue;
            }
            moments[0] += n;
            if r2 == 0.0 {
                continue;
            }
            let r = r2.sqrt();
            let step = Complex64::new(x / r, -y / r);
            let mut e = Complex64::new(n, 0.0);
            for m in moments.iter_mut().skip(1) {
                e *= step;
                *m += e;
            }
        }
        let scale = img.grid.cell_area() / (2.0 * PI);
        moments.iter_mut().for_each(|m| *m *= scale);
        Self { radius, moments }
    }

    /// `∫_{c-θ}^{c+θ} g(φ) dφ`
    pub fn arc(&self, center: f64, half_angle: f64) -> f64 {
        let mut s = 2.0 * half_angle * self.moments[0].re;
        for (m, g) in self.moments.iter().enumerate().skip(1) {
            let mf = m as f64;
            let phase = Complex64::from_polar(1.0, mf * center);
            s += 2.0 * (g * phase).re * 2.0 * (mf * half_angle).sin() / mf;
        }
        s
    }

    /// `2|G₂|/G₀`
    pub fn contrast(&self) -> f64 {
        if self.moments.len() < 3 || self.moments[0].re <= 0.0 {
            return 0.0;
        }
        2.0 * self.moments[2].norm() / self.moments[0].re
    }
}

/// Circular sector `{r ≤ ρ, |φ - center| ≤ θ}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArcRegion {
    pub center_angle: f64,
    pub half_angle: f64,
    /// `f64::INFINITY` selects the whole image.
    pub radius: f64,
}

impl ArcRegion {
    pub fn validate(&self, img: &DensityImage) -> Result<(), MeasurementError> {
        if !self.center_angle.is_finite() {
            return Err(MeasurementError::BadRegion("centre angle not finite".into()));
        }
        if !(self.half_angle > 0.0 && self.half_angle <= PI) {
            return Err(MeasurementError::BadRegion(format!(
                "half angle {} outside (0, π]",
                self.half_angle
            )));
        }
        if self.radius.is_nan() || self.radius <= 0.0 {
            return Err(MeasurementError::BadRegion(format!("radius {} not positive", self.radius)));
        }
        let limit = img.grid.inscribed_radius();
        if self.radius.is_finite() && self.radius > limit {
            return Err(MeasurementError::RegionExceedsGrid { radius: self.radius, limit });
        }
        Ok(())
    }
}

/// `∫_A n d²r` over the arc region.
pub fn arc_integral(img: &DensityImage, a: &ArcRegion) -> Result<f64, MeasurementError> {
    a.validate(img)?;
    Ok(AngularMoments::compute(img, a.radius, ARC_HARMONICS).arc(a.center_angle, a.half_angle))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Extrema {
    /// Fringe maximum, in `[-π/2, π/2)`.
    pub angle_max: f64,
    /// Nodal line, `angle_max + π/2`, in `[0, π)`.
    pub angle_min: f64,
    /// `2|G₂|/G₀`; equals `2√(p₊p₋)` for a pure `l = ±1` superposition.
    pub contrast: f64,
}

/// Orientation of the `cos 2(φ - φ₀)` fringe from the least-squares fit of
/// `A + B cos 2(φ - φ₀)` to `g(φ)`, which reduces to `φ₀ = -arg(G₂)/2`.
pub fn locate_extrema(img: &DensityImage) -> Result<Extrema, MeasurementError> {
    extrema_from_moments(&AngularMoments::compute(img, f64::INFINITY, 2))
}

pub(crate) fn extrema_from_moments(m: &AngularMoments) -> Result<Extrema, MeasurementError> {
    let contrast = m.contrast();
    if !(contrast >= CONTRAST_FLOOR) {
        return Err(MeasurementError::LowContrast { contrast, floor: CONTRAST_FLOOR });
    }
    let mut angle_max = -0.5 * m.moments[2].arg();
    if angle_max >= 0.5 * PI {
        angle_max -= PI;
    }
    Ok(Extrema {
        angle_max,
        angle_min: angle_max + 0.5 * PI,
        contrast,
    })
}
