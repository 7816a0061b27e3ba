use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::arcs::{extrema_from_moments, AngularMoments};
use super::{DensityImage, MeasurementError};

/// Harmonics used for the arc integrals of the imbalance estimator.
const HARMONICS: usize = 32;

/// How the arc integrals are turned into `√(p₊p₋)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum ArcFormula {
    /// `√(p₊p₋) = q·θ/sin 2θ`, exact for a `cos 2φ` fringe at any θ.
    #[default]
    FiniteArc,
    /// `√(p₊p₋) = q/2`, the θ → 0 limit.
    SmallAngle,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ImbalanceConfig {
    /// Arc half angle θ.
    pub half_angle: f64,
    /// Arc radius ρ; `None` uses [`default_arc_radius`].
    pub radius: Option<f64>,
    pub formula: ArcFormula,
    /// Slack allowed on `1 - 4p₊p₋ ≥ 0` before the image is rejected.
    pub discriminant_tolerance: f64,
}

impl Default for ImbalanceConfig {
    fn default() -> Self {
        Self {
            half_angle: PI / 16.0,
            radius: None,
            formula: ArcFormula::FiniteArc,
            discriminant_tolerance: 1e-6,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ImbalanceEstimate {
    /// The larger population; see `sign_ambiguous`.
    pub p_plus: f64,
    pub p_minus: f64,
    pub product: f64,
    /// Arc integral centred on the maximum.
    pub i1: f64,
    /// Arc integral centred on the minimum.
    pub i2: f64,
    pub angle_max: f64,
    /// A single image cannot tell which circulation dominates; the pair is
    /// reported with `p_plus ≥ p_minus`.
    pub sign_ambiguous: bool,
}

impl ImbalanceEstimate {
    /// `|n₁±| = p₊ - p₋ ≥ 0`
    pub fn imbalance(&self) -> f64 {
        self.p_plus - self.p_minus
    }
}

/// Mean ring radius plus five radial widths, capped at the image edge.
pub fn default_arc_radius(img: &DensityImage) -> f64 {
    (img.mean_radius() + 5.0).min(img.grid.inscribed_radius())
}

/// Population product from two arcs of half angle θ centred on the fringe
/// maximum and minimum.
pub fn estimate_imbalance(
    img: &DensityImage,
    cfg: &ImbalanceConfig,
) -> Result<ImbalanceEstimate, MeasurementError> {
    let theta = cfg.half_angle;
    if !(theta > 0.0 && theta <= PI / 8.0) {
        return Err(MeasurementError::BadRegion(format!("half angle {theta} outside (0, π/8]")));
    }
    let radius = cfg.radius.unwrap_or_else(|| default_arc_radius(img));
    let limit = img.grid.inscribed_radius();
    if !(radius > 0.0) || radius > limit {
        return Err(MeasurementError::RegionExceedsGrid { radius, limit });
    }
    let moments = AngularMoments::compute(img, radius, HARMONICS);
    // Without a fringe every orientation gives I₁ = I₂, so any centre will do.
    let angle_max = match extrema_from_moments(&moments) {
        Ok(e) => e.angle_max,
        Err(_) => -0.5 * moments.moments[2].arg(),
    };
    let i1 = moments.arc(angle_max, theta);
    let i2 = moments.arc(angle_max + 0.5 * PI, theta);
    let q = if i1 + i2 > 0.0 { (i1 - i2) / (i1 + i2) } else { 0.0 };
    let root = match cfg.formula {
        ArcFormula::FiniteArc => q * theta / (2.0 * theta).sin(),
        ArcFormula::SmallAngle => 0.5 * q,
    };
    let product = root * root;
    let disc = 1.0 - 4.0 * product;
    if disc < -cfg.discriminant_tolerance {
        return Err(MeasurementError::InconsistentImage(disc));
    }
    let s = disc.max(0.0).sqrt();
    Ok(ImbalanceEstimate {
        p_plus: 0.5 * (1.0 + s),
        p_minus: 0.5 * (1.0 - s),
        product,
        i1,
        i2,
        angle_max,
        sign_ambiguous: true,
    })
}

/// `I = ∫n² d²r / (1 + 2p₊p₋)`
pub fn estimate_overlap_integral(img: &DensityImage, p_plus: f64, p_minus: f64) -> f64 {
    img.square_integral() / (1.0 + 2.0 * p_plus * p_minus)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DeltaConfig {
    /// Integration starts where `f₀²` first exceeds this.
    pub floor: f64,
    /// Radial step; `None` uses a quarter of the grid spacing.
    pub step: Option<f64>,
}

impl Default for DeltaConfig {
    fn default() -> Self {
        Self { floor: 1e-14, step: None }
    }
}

/// `Δ = 4∫d²r f₀²/r²` with `f₀²` read along the ray of maximum density,
/// `f₀² = n(r, φ_max)/(1 + 2√(p₊p₋))`.
pub fn estimate_delta(
    img: &DensityImage,
    p_plus: f64,
    p_minus: f64,
    angle_max: f64,
    cfg: &DeltaConfig,
) -> Result<f64, MeasurementError> {
    let h = cfg.step.unwrap_or(0.25 * img.grid.dx().min(img.grid.dy()));
    let r_max = img.grid.inscribed_radius();
    let scale = 1.0 / (1.0 + 2.0 * (p_plus * p_minus).max(0.0).sqrt());
    let (c, s) = (angle_max.cos(), angle_max.sin());
    let n = (r_max / h).floor() as usize;
    // trapezoid on 8π ∫ f₀²/r dr
    let mut started = false;
    let mut sum = 0.0;
    let mut prev = 0.0;
    for k in 1..=n {
        let r = k as f64 * h;
        let f2 = img.sample(r * c, r * s) * scale;
        if !started {
            if f2 > cfg.floor {
                started = true;
                prev = f2 / r;
            }
            continue;
        }
        let cur = f2 / r;
        sum += 0.5 * (prev + cur) * h;
        prev = cur;
    }
    if !started {
        return Err(MeasurementError::DegenerateRay);
    }
    Ok(8.0 * PI * sum)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gpe2d::Grid2D;
    use crate::measurement::fringe_image;
    use crate::modes::RadialProfile;

    fn ring(r0: f64, w: f64) -> RadialProfile {
        let h = 0.005;
        let r: Vec<f64> = (0..4000).map(|i| (i as f64 + 0.5) * h).collect();
        let f: Vec<f64> = r.iter().map(|&r| (-(r - r0).powi(2) / (2.0 * w * w)).exp()).collect();
        let mut p = RadialProfile { r, f, l: 1, mu: 0.0 };
        let n = p.norm_sqr().sqrt();
        p.f.iter_mut().for_each(|v| *v /= n);
        p
    }

    fn grid() -> Grid2D {
        Grid2D::square(256, 24.0).unwrap()
    }

    #[test]
    fn imbalance_round_trip() {
        let p = ring(5.0, 1.0);
        for (pp, angle) in [(0.7, 0.0), (0.9, 1.1), (0.55, -0.4), (0.6, 0.7)] {
            let img = fringe_image(grid(), &p, pp, 1.0 - pp, angle, 0.0);
            let e = estimate_imbalance(&img, &ImbalanceConfig::default()).unwrap();
            assert!((e.p_plus - pp).abs() < 1e-6, "p+ {} vs {pp}", e.p_plus);
            assert!(e.sign_ambiguous);
            let d = (e.angle_max - angle + PI / 2.0).rem_euclid(PI) - PI / 2.0;
            assert!(d.abs() < 1e-6);
        }
    }

    #[test]
    fn no_fringe_means_single_circulation() {
        let img = fringe_image(grid(), &ring(5.0, 1.0), 1.0, 0.0, 0.0, 0.0);
        let e = estimate_imbalance(&img, &ImbalanceConfig::default()).unwrap();
        assert!(e.product < 1e-12);
        assert!((e.p_plus - 1.0).abs() < 1e-6);
    }

    #[test]
    fn small_angle_formula_bias_is_quadratic() {
        let img = fringe_image(grid(), &ring(5.0, 1.0), 0.7, 0.3, 0.2, 0.0);
        let mut prev: Option<f64> = None;
        for theta in [PI / 8.0, PI / 16.0, PI / 32.0] {
            let cfg = ImbalanceConfig { half_angle: theta, formula: ArcFormula::SmallAngle, ..Default::default() };
            let err = 0.21 - estimate_imbalance(&img, &cfg).unwrap().product;
            // the small-angle reading underestimates by the factor (sin 2θ/2θ)²
            let expect = 0.21 * (1.0 - ((2.0 * theta).sin() / (2.0 * theta)).powi(2));
            assert!((err - expect).abs() < 1e-8, "θ = {theta}: {err} vs {expect}");
            if let Some(p) = prev {
                let ratio = p / err;
                assert!(ratio > 3.7 && ratio < 4.0, "ratio {ratio}");
            }
            prev = Some(err);
        }
    }

    #[test]
    fn overlap_integral_round_trip() {
        let p = ring(5.0, 1.0);
        let exact = p.quartic_integral();
        for pp in [1.0, 0.7, 0.5] {
            let img = fringe_image(grid(), &p, pp, 1.0 - pp, 0.3, 0.0);
            let i = estimate_overlap_integral(&img, pp, 1.0 - pp);
            assert!((i / exact - 1.0).abs() < 1e-3, "p+ = {pp}: {i} vs {exact}");
        }
    }

    #[test]
    fn delta_round_trip_and_thin_ring_limit() {
        let p = ring(5.0, 1.0);
        let exact = 4.0 * p.centrifugal_integral();
        let img = fringe_image(grid(), &p, 0.7, 0.3, 0.5, 0.0);
        let d = estimate_delta(&img, 0.7, 0.3, 0.5, &DeltaConfig::default()).unwrap();
        assert!((d / exact - 1.0).abs() < 1e-3, "{d} vs {exact}");

        let thin = ring(5.0, 0.25);
        let img = fringe_image(grid(), &thin, 0.7, 0.3, 0.0, 0.0);
        let d = estimate_delta(&img, 0.7, 0.3, 0.0, &DeltaConfig::default()).unwrap();
        assert!((d - 0.16).abs() < 0.16 * 0.01, "{d}");
    }

    #[test]
    fn empty_ray_is_degenerate() {
        let g = grid();
        let img = DensityImage { grid: g, values: vec![0.0; g.len()], time: 0.0 };
        assert_eq!(
            estimate_delta(&img, 0.5, 0.5, 0.0, &DeltaConfig::default()),
            Err(MeasurementError::DegenerateRay)
        );
    }
}
