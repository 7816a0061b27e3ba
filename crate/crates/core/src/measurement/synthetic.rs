//! Synthetic fringe images with known parameters.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::{DensityImage, MeasurementError};
use crate::gpe2d::Grid2D;
use crate::modes::RadialProfile;

/// `n = f(r)² (1 + 2√(p₊p₋) cos 2(φ - φ_max))`, rescaled so the discrete
/// integral is exactly one.
pub fn fringe_image(
    grid: Grid2D,
    profile: &RadialProfile,
    p_plus: f64,
    p_minus: f64,
    angle_max: f64,
    time: f64,
) -> DensityImage {
    let c = 2.0 * (p_plus * p_minus).max(0.0).sqrt();
    let mut values: Vec<f64> = grid
        .points()
        .map(|(_, x, y)| {
            let f = profile.value_at(x.hypot(y));
            let phi = y.atan2(x);
            (f * f * (1.0 + c * (2.0 * (phi - angle_max)).cos())).max(0.0)
        })
        .collect();
    let total: f64 = values.iter().sum::<f64>() * grid.cell_area();
    if total > 0.0 {
        values.iter_mut().for_each(|v| *v /= total);
    }
    DensityImage { grid, values, time }
}

/// Frames at `times` whose maximum sits at `angle0 - Ω t`.
pub fn fringe_sequence(
    grid: Grid2D,
    profile: &RadialProfile,
    p_plus: f64,
    p_minus: f64,
    angle0: f64,
    omega: f64,
    times: &[f64],
) -> Vec<DensityImage> {
    times
        .iter()
        .map(|&t| fringe_image(grid, profile, p_plus, p_minus, angle0 - omega * t, t))
        .collect()
}

/// Multiplies every pixel by `max(0, 1 + σξ)` with `ξ ~ N(0, 1)`.
pub fn apply_multiplicative_noise(
    img: &DensityImage,
    sigma: f64,
    seed: u64,
) -> Result<DensityImage, MeasurementError> {
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(MeasurementError::BadImage(format!("noise level {sigma} must be finite and nonnegative")));
    }
    let normal = Normal::new(0.0, sigma)
        .map_err(|e| MeasurementError::BadImage(format!("noise level {sigma}: {e}")))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let values = img
        .values
        .iter()
        .map(|v| v * (1.0 + normal.sample(&mut rng)).max(0.0))
        .collect();
    Ok(DensityImage { grid: img.grid, values, time: img.time })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn ring() -> RadialProfile {
        let h = 0.01;
        let r: Vec<f64> = (0..2000).map(|i| (i as f64 + 0.5) * h).collect();
        let f = r.iter().map(|&r| (-(r - 5.0f64).powi(2) / 2.0).exp()).collect();
        RadialProfile { r, f, l: 1, mu: 0.0 }
    }

    #[test]
    fn normalized_and_symmetric() {
        let g = Grid2D::square(64, 20.0).unwrap();
        let img = fringe_image(g, &ring(), 0.7, 0.3, 0.0, 1.5);
        assert!((img.integral() - 1.0).abs() < 1e-12);
        assert_eq!(img.time, 1.5);
        // inversion symmetry of the cos 2φ pattern
        let n = img.values.len();
        for k in 0..n {
            assert!((img.values[k] - img.values[n - 1 - k]).abs() < 1e-12 * img.values[k].max(1e-300) + 1e-15);
        }
    }

    #[test]
    fn sequence_rotates_clockwise_for_positive_omega() {
        let g = Grid2D::square(64, 20.0).unwrap();
        let seq = fringe_sequence(g, &ring(), 0.7, 0.3, 0.2, 0.1, &[0.0, 1.0]);
        let a = super::super::locate_extrema(&seq[0]).unwrap().angle_max;
        let b = super::super::locate_extrema(&seq[1]).unwrap().angle_max;
        assert!(((b - a) + 0.1).abs() < 1e-3 && a < PI);
    }

    #[test]
    fn noise_is_reproducible_and_nonnegative() {
        let g = Grid2D::square(32, 20.0).unwrap();
        let img = fringe_image(g, &ring(), 0.5, 0.5, 0.0, 0.0);
        let a = apply_multiplicative_noise(&img, 2.0, 7).unwrap();
        let b = apply_multiplicative_noise(&img, 2.0, 7).unwrap();
        assert_eq!(a, b);
        assert!(a.values.iter().all(|v| *v >= 0.0));
        assert_ne!(a, apply_multiplicative_noise(&img, 2.0, 8).unwrap());
        assert!(apply_multiplicative_noise(&img, -1.0, 0).is_err());
    }
}
