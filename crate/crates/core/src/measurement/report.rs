//! Per-frame estimates combined into a single measurement report.

use serde::{Deserialize, Serialize};

use super::{
    estimate_delta, estimate_imbalance, estimate_overlap_integral, track_nodal_line, DeltaConfig,
    DensityImage, ImbalanceConfig, MeasurementError, NodalTrace, TraceConfig,
};

pub const REPORT_SCHEMA: &str = "ringsense.measurement/1";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct MeasureConfig {
    pub imbalance: ImbalanceConfig,
    pub delta: DeltaConfig,
    pub trace: TraceConfig,
    pub statics: StaticFrames,
}

/// Which frames supply `n₁±`, `I` and `Δ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum StaticFrames {
    /// The earliest frame, before the `l = ±3` admixture distorts the fringe.
    /// The frame-to-frame scatter still sets the standard error.
    #[default]
    Earliest,
    /// Mean over all frames.
    Mean,
}

/// A value with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Estimate {
    pub value: f64,
    pub stderr: f64,
}

impl Estimate {
    pub fn exact(value: f64) -> Self {
        Self { value, stderr: 0.0 }
    }

    /// Sample mean and its standard error.
    pub fn mean_of(xs: &[f64]) -> Self {
        let n = xs.len() as f64;
        if xs.is_empty() {
            return Self { value: f64::NAN, stderr: f64::NAN };
        }
        let m = xs.iter().sum::<f64>() / n;
        if xs.len() < 2 {
            return Self { value: m, stderr: 0.0 };
        }
        let var = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
        Self { value: m, stderr: (var / n).sqrt() }
    }
}

/// Single-image estimates; `p_plus ≥ p_minus` here since one frame cannot
/// tell the circulations apart.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrameEstimate {
    pub time: f64,
    pub p_plus: f64,
    pub p_minus: f64,
    pub overlap_integral: f64,
    pub delta: f64,
    pub angle_max: f64,
}

impl FrameEstimate {
    pub fn from_image(img: &DensityImage, cfg: &MeasureConfig) -> Result<Self, MeasurementError> {
        let imb = estimate_imbalance(img, &cfg.imbalance)?;
        Ok(Self {
            time: img.time,
            p_plus: imb.p_plus,
            p_minus: imb.p_minus,
            overlap_integral: estimate_overlap_integral(img, imb.p_plus, imb.p_minus),
            delta: estimate_delta(img, imb.p_plus, imb.p_minus, imb.angle_max, &cfg.delta)?,
            angle_max: imb.angle_max,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasurementReport {
    pub schema: String,
    pub config: MeasureConfig,
    /// Signed `n₁± = p₊ - p₋`; the sign follows the rotation direction.
    pub imbalance: Estimate,
    pub p_plus: f64,
    pub p_minus: f64,
    /// False when `Ω` is indistinguishable from zero, leaving `n₁± ≥ 0`.
    pub sign_resolved: bool,
    pub overlap_integral: Estimate,
    pub delta: Estimate,
    pub omega: Estimate,
    pub trace: NodalTrace,
    pub frames: Vec<FrameEstimate>,
}

impl MeasurementReport {
    /// Combines per-frame estimates with a nodal trace that may come from a
    /// denser set of frames.
    pub fn assemble(
        frames: Vec<FrameEstimate>,
        trace: NodalTrace,
        config: MeasureConfig,
    ) -> Result<Self, MeasurementError> {
        if frames.is_empty() {
            return Err(MeasurementError::TooFewFrames { needed: 1, got: 0 });
        }
        let first = frames
            .iter()
            .min_by(|a, b| a.time.total_cmp(&b.time))
            .copied()
            .expect("frames is nonempty");
        let pick = |get: fn(&FrameEstimate) -> f64| {
            let all: Vec<f64> = frames.iter().map(get).collect();
            let mean = Estimate::mean_of(&all);
            match config.statics {
                StaticFrames::Mean => mean,
                StaticFrames::Earliest => Estimate { value: get(&first), stderr: mean.stderr },
            }
        };
        let abs = pick(|f| f.p_plus - f.p_minus);
        let sign_resolved = trace.omega != 0.0 && trace.omega.abs() > 2.0 * trace.omega_stderr;
        let sign = if sign_resolved && trace.omega < 0.0 { -1.0 } else { 1.0 };
        let n = sign * abs.value;
        let overlap = pick(|f| f.overlap_integral);
        let delta = pick(|f| f.delta);
        Ok(Self {
            schema: REPORT_SCHEMA.into(),
            config,
            imbalance: Estimate { value: n, stderr: abs.stderr },
            p_plus: 0.5 * (1.0 + n),
            p_minus: 0.5 * (1.0 - n),
            sign_resolved,
            overlap_integral: overlap,
            delta,
            omega: Estimate { value: trace.omega, stderr: trace.omega_stderr },
            trace,
            frames,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, MeasurementError> {
        let r: Self = serde_json::from_str(text).map_err(|e| MeasurementError::BadReport(e.to_string()))?;
        r.validate()?;
        Ok(r)
    }

    pub fn validate(&self) -> Result<(), MeasurementError> {
        let bad = |m: String| Err(MeasurementError::BadReport(m));
        if self.schema != REPORT_SCHEMA {
            return bad(format!("unknown schema {:?}", self.schema));
        }
        for (name, e) in [
            ("imbalance", self.imbalance),
            ("overlap_integral", self.overlap_integral),
            ("delta", self.delta),
            ("omega", self.omega),
        ] {
            if !e.value.is_finite() || !(e.stderr >= 0.0) || !e.stderr.is_finite() {
                return bad(format!("{name} must be finite with a nonnegative standard error"));
            }
        }
        if self.imbalance.value.abs() > 1.0 + 1e-9 {
            return bad(format!("imbalance {} outside [-1, 1]", self.imbalance.value));
        }
        if !(self.overlap_integral.value > 0.0) {
            return bad("overlap integral must be positive".into());
        }
        if self.frames.is_empty() {
            return bad("no frames".into());
        }
        Ok(())
    }
}

/// Full protocol on one image sequence: per-frame estimates on every image
/// plus the nodal-line fit across them.
pub fn measure_images(images: &[DensityImage], cfg: &MeasureConfig) -> Result<MeasurementReport, MeasurementError> {
    let trace = track_nodal_line(images, &cfg.trace)?;
    let frames = images
        .iter()
        .map(|img| FrameEstimate::from_image(img, cfg))
        .collect::<Result<Vec<_>, _>>()?;
    MeasurementReport::assemble(frames, trace, *cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gpe2d::Grid2D;
    use crate::measurement::fringe_sequence;
    use crate::modes::RadialProfile;

    fn ring() -> RadialProfile {
        let h = 0.01;
        let r: Vec<f64> = (0..2000).map(|i| (i as f64 + 0.5) * h).collect();
        let f = r.iter().map(|&r| (-(r - 5.0f64).powi(2) / 2.0).exp()).collect();
        let mut p = RadialProfile { r, f, l: 1, mu: 0.0 };
        let n = p.norm_sqr().sqrt();
        p.f.iter_mut().for_each(|v| *v /= n);
        p
    }

    fn sequence(omega: f64) -> Vec<DensityImage> {
        let times: Vec<f64> = (0..8).map(|k| k as f64 * 10.0).collect();
        fringe_sequence(Grid2D::square(128, 24.0).unwrap(), &ring(), 0.7, 0.3, 0.0, omega, &times)
    }

    #[test]
    fn sign_follows_rotation_direction() {
        let cfg = MeasureConfig::default();
        let fwd = measure_images(&sequence(5e-3), &cfg).unwrap();
        assert!(fwd.sign_resolved);
        assert!((fwd.imbalance.value - 0.4).abs() < 1e-5);
        assert!((fwd.p_plus - 0.7).abs() < 1e-5);
        let back = measure_images(&sequence(-5e-3), &cfg).unwrap();
        assert!((back.imbalance.value + 0.4).abs() < 1e-5);
        assert!((back.omega.value + 5e-3).abs() < 1e-6);
        let still = measure_images(&sequence(0.0), &cfg).unwrap();
        assert!(!still.sign_resolved && still.imbalance.value > 0.0);
    }

    #[test]
    fn json_round_trip_and_validation() {
        let r = measure_images(&sequence(5e-3), &MeasureConfig::default()).unwrap();
        let back = MeasurementReport::from_json(&r.to_json()).unwrap();
        assert_eq!(back, r);
        let mut bad = r.clone();
        bad.schema = "other".into();
        assert!(MeasurementReport::from_json(&bad.to_json()).is_err());
        let mut bad = r;
        bad.omega.stderr = -1.0;
        assert!(MeasurementReport::from_json(&bad.to_json()).is_err());
        assert!(MeasurementReport::from_json("{}").is_err());
    }

    #[test]
    fn static_quantities_from_earliest_or_mean() {
        let r = measure_images(&sequence(5e-3), &MeasureConfig::default()).unwrap();
        let mut frames = r.frames.clone();
        frames.reverse();
        frames[0].overlap_integral *= 1.5;
        frames[7].overlap_integral *= 1.1;
        let earliest = MeasurementReport::assemble(frames.clone(), r.trace.clone(), MeasureConfig::default()).unwrap();
        assert_eq!(earliest.overlap_integral.value, frames[7].overlap_integral);
        assert!(earliest.overlap_integral.stderr > 0.0);
        let cfg = MeasureConfig { statics: StaticFrames::Mean, ..Default::default() };
        let mean = MeasurementReport::assemble(frames.clone(), r.trace, cfg).unwrap();
        let expect = frames.iter().map(|f| f.overlap_integral).sum::<f64>() / 8.0;
        assert!((mean.overlap_integral.value - expect).abs() < 1e-15);
    }

    #[test]
    fn mean_of_small_samples() {
        assert_eq!(Estimate::mean_of(&[2.0]), Estimate::exact(2.0));
        let e = Estimate::mean_of(&[1.0, 3.0]);
        assert_eq!(e.value, 2.0);
        assert!((e.stderr - 1.0).abs() < 1e-15);
    }
}
