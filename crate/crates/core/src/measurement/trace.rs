//! Nodal-line tracking across frames and frequency fits.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{locate_extrema, DensityImage, MeasurementError};

/// Spans of nodal-line motion below this are flagged as too short for a
/// trustworthy slope.
pub const MIN_TRACE_SPAN: f64 = 0.2;

/// Weighting of frames in the line fit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Taper {
    /// Hann window over the frame index; damps the contribution of the
    /// sequence ends, where residual breathing of the node is not averaged out.
    #[default]
    Hann,
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TraceConfig {
    pub taper: Taper,
    pub min_frames: usize,
}

impl Default for TraceConfig {
    fn default() -> Self {
        Self { taper: Taper::Hann, min_frames: 5 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodalTrace {
    pub times: Vec<f64>,
    /// Nodal angles unwrapped modulo π.
    pub angles: Vec<f64>,
    /// Rotation rate, positive for clockwise motion: `angle ≈ intercept - Ω t`.
    pub omega: f64,
    pub omega_stderr: f64,
    pub intercept: f64,
    pub residual_rms: f64,
    /// Total angular motion below [`MIN_TRACE_SPAN`].
    pub short_span: bool,
}

impl NodalTrace {
    /// Unwraps raw nodal angles (any branch, period π) and fits the line.
    pub fn from_angles(times: &[f64], raw: &[f64], cfg: &TraceConfig) -> Result<Self, MeasurementError> {
        let needed = cfg.min_frames.max(3);
        if times.len() != raw.len() {
            return Err(MeasurementError::BadTimes);
        }
        if times.len() < needed {
            return Err(MeasurementError::TooFewFrames { needed, got: times.len() });
        }
        if times.iter().any(|t| !t.is_finite()) || times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(MeasurementError::BadTimes);
        }
        if let Some(i) = raw.iter().position(|a| !a.is_finite()) {
            return Err(MeasurementError::BadImage(format!("nodal angle of frame {i} is not finite")));
        }
        let mut angles = Vec::with_capacity(raw.len());
        angles.push(raw[0]);
        for (index, w) in raw.windows(2).enumerate() {
            let step = (w[1] - w[0] + 0.5 * PI).rem_euclid(PI) - 0.5 * PI;
            if step.abs() >= 0.25 * PI {
                return Err(MeasurementError::FrameSpacingTooCoarse { index, step });
            }
            let last = *angles.last().unwrap_or(&raw[0]);
            angles.push(last + step);
        }
        let weights = taper_weights(cfg.taper, times.len());
        let fit = weighted_line(times, &angles, &weights);
        let lo = angles.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = angles.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Ok(Self {
            times: times.to_vec(),
            angles,
            omega: -fit.slope,
            omega_stderr: fit.slope_stderr,
            intercept: fit.intercept,
            residual_rms: fit.residual_rms,
            short_span: hi - lo < MIN_TRACE_SPAN,
        })
    }
}

/// Locates the nodal line in each frame, unwraps, and fits `Ω`.
pub fn track_nodal_line(images: &[DensityImage], cfg: &TraceConfig) -> Result<NodalTrace, MeasurementError> {
    if let Some(first) = images.first() {
        if images.iter().any(|i| i.grid != first.grid) {
            return Err(MeasurementError::GridMismatch);
        }
    }
    let times: Vec<f64> = images.iter().map(|i| i.time).collect();
    let raw = images
        .iter()
        .map(|i| locate_extrema(i).map(|e| e.angle_min))
        .collect::<Result<Vec<_>, _>>()?;
    NodalTrace::from_angles(&times, &raw, cfg)
}

fn taper_weights(taper: Taper, n: usize) -> Vec<f64> {
    match taper {
        Taper::None => vec![1.0; n],
        // endpoints excluded from the zeros so every frame carries weight
        Taper::Hann => (0..n)
            .map(|k| (PI * (k as f64 + 1.0) / (n as f64 + 1.0)).sin().powi(2))
            .collect(),
    }
}

struct LineFit {
    slope: f64,
    intercept: f64,
    slope_stderr: f64,
    residual_rms: f64,
}

/// Weighted least squares `y = a + b t`, with a heteroscedasticity-robust
/// (sandwich) standard error on `b`.
fn weighted_line(t: &[f64], y: &[f64], w: &[f64]) -> LineFit {
    let sw: f64 = w.iter().sum();
    let tm = t.iter().zip(w).map(|(t, w)| t * w).sum::<f64>() / sw;
    let ym = y.iter().zip(w).map(|(y, w)| y * w).sum::<f64>() / sw;
    let stt: f64 = t.iter().zip(w).map(|(t, w)| w * (t - tm).powi(2)).sum();
    let sty: f64 = t.iter().zip(y).zip(w).map(|((t, y), w)| w * (t - tm) * (y - ym)).sum();
    let slope = sty / stt;
    let intercept = ym - slope * tm;
    let resid: Vec<f64> = t.iter().zip(y).map(|(t, y)| y - intercept - slope * t).collect();
    let n = t.len() as f64;
    let meat: f64 = t.iter().zip(&resid).zip(w).map(|((t, e), w)| (w * (t - tm) * e).powi(2)).sum();
    let slope_stderr = (meat * n / (n - 2.0)).sqrt() / stt;
    let residual_rms = (resid.iter().map(|e| e * e).sum::<f64>() / n).sqrt();
    LineFit { slope, intercept, slope_stderr, residual_rms }
}

/// `|ρ|` below which a coherence series carries no phase.
const COHERENCE_FLOOR: f64 = 1e-12;

/// Angular frequency of `ρ(t)`, i.e. of `Re ρ`, signed so that `ρ ∝ e^{iωt}`.
///
/// A line fit to the unwrapped phase gives a first estimate; Newton steps then
/// maximize `|Σ ρ_k e^{-iωt_k}|`, the least-squares fit of a complex
/// sinusoid with free amplitude, so short windows and slow drifts in `|ρ|` are
/// both handled.
pub fn coherence_frequency(times: &[f64], rho: &[Complex64]) -> Result<f64, MeasurementError> {
    if times.len() != rho.len() || times.len() < 3 {
        return Err(MeasurementError::TooFewFrames { needed: 3, got: times.len().min(rho.len()) });
    }
    if times.iter().any(|t| !t.is_finite()) || times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(MeasurementError::BadTimes);
    }
    let amp = rho.iter().map(|r| r.norm()).fold(f64::INFINITY, f64::min);
    if !(amp > COHERENCE_FLOOR) {
        return Err(MeasurementError::FlatSeries(COHERENCE_FLOOR));
    }
    let mut phase = Vec::with_capacity(rho.len());
    let mut last = rho[0].arg();
    phase.push(last);
    for w in rho.windows(2) {
        let step = (w[1] * w[0].conj()).arg();
        last += step;
        phase.push(last);
    }
    let w = vec![1.0; times.len()];
    let omega0 = weighted_line(times, &phase, &w).slope;

    // Newton on dP/dω for P(ω) = |S(ω)|², S = Σ ρ_k e^{-iω(t_k - t̄)}
    let tm = times.iter().sum::<f64>() / times.len() as f64;
    let span = times[times.len() - 1] - times[0];
    let derivatives = |omega: f64| -> (f64, f64) {
        let (mut s0, mut s1, mut s2) = (Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0));
        for (r, t) in rho.iter().zip(times) {
            let tau = t - tm;
            let z = r * Complex64::from_polar(1.0, -omega * tau);
            s0 += z;
            s1 += z * Complex64::new(0.0, -tau);
            s2 += z * (-tau * tau);
        }
        let d1 = 2.0 * (s0.conj() * s1).re;
        let d2 = 2.0 * (s1.norm_sqr() + (s0.conj() * s2).re);
        (d1, d2)
    };
    // the periodogram peak has half-width ~2π/span; stay well inside it
    let reach = 0.5 * PI / span;
    let mut omega = omega0;
    for _ in 0..20 {
        let (d1, d2) = derivatives(omega);
        if !(d2 < 0.0) {
            return Ok(omega0);
        }
        let step = -d1 / d2;
        omega += step;
        if (omega - omega0).abs() > reach {
            return Ok(omega0);
        }
        if step.abs() <= 4.0 * f64::EPSILON * omega.abs() {
            break;
        }
    }
    Ok(omega)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gpe2d::Grid2D;
    use crate::measurement::fringe_sequence;
    use crate::modes::RadialProfile;
    use proptest::prelude::*;

    fn ring() -> RadialProfile {
        let h = 0.01;
        let r: Vec<f64> = (0..2000).map(|i| (i as f64 + 0.5) * h).collect();
        let f = r.iter().map(|&r| (-(r - 5.0f64).powi(2) / 2.0).exp()).collect();
        RadialProfile { r, f, l: 1, mu: 0.0 }
    }

    #[test]
    fn static_frames_give_zero_rate() {
        let g = Grid2D::square(96, 24.0).unwrap();
        let times: Vec<f64> = (0..6).map(|k| k as f64 * 10.0).collect();
        let seq = fringe_sequence(g, &ring(), 0.7, 0.3, 0.0, 0.0, &times);
        let tr = track_nodal_line(&seq, &TraceConfig::default()).unwrap();
        assert!(tr.omega.abs() < 1e-9 && tr.omega.abs() <= tr.omega_stderr + 1e-9);
        assert!(tr.short_span);
    }

    #[test]
    fn rotating_sequence_recovers_rate() {
        let g = Grid2D::square(128, 24.0).unwrap();
        let times: Vec<f64> = (0..40).map(|k| k as f64 * 5.0).collect();
        let seq = fringe_sequence(g, &ring(), 0.7, 0.3, 0.1, 1e-2, &times);
        for taper in [Taper::Hann, Taper::None] {
            let tr = track_nodal_line(&seq, &TraceConfig { taper, ..Default::default() }).unwrap();
            assert!((tr.omega - 1e-2).abs() < 1e-4, "{taper:?}: {}", tr.omega);
            assert!(!tr.short_span);
        }
    }

    #[test]
    fn coarse_frames_and_short_sequences_are_rejected() {
        let t = [0.0, 1.0, 2.0, 3.0, 4.0];
        let a = [0.0, 0.1, 0.9, 1.0, 1.1];
        assert!(matches!(
            NodalTrace::from_angles(&t, &a, &TraceConfig::default()),
            Err(MeasurementError::FrameSpacingTooCoarse { index: 1, .. })
        ));
        assert!(matches!(
            NodalTrace::from_angles(&t[..4], &a[..4], &TraceConfig::default()),
            Err(MeasurementError::TooFewFrames { needed: 5, got: 4 })
        ));
        assert_eq!(
            NodalTrace::from_angles(&[0.0, 1.0, 1.0, 2.0, 3.0], &[0.0; 5], &TraceConfig::default()),
            Err(MeasurementError::BadTimes)
        );
    }

    #[test]
    fn unwrapping_crosses_the_branch_cut() {
        let t: Vec<f64> = (0..30).map(f64::from).collect();
        let raw: Vec<f64> = t.iter().map(|t| (0.2 - 0.3 * t).rem_euclid(PI)).collect();
        let tr = NodalTrace::from_angles(&t, &raw, &TraceConfig::default()).unwrap();
        assert!((tr.omega - 0.3).abs() < 1e-12);
        assert!(tr.residual_rms < 1e-12);
    }

    #[test]
    fn coherence_frequency_of_pure_tone() {
        let t: Vec<f64> = (0..500).map(|k| k as f64 * 2.0).collect();
        let rho: Vec<Complex64> = t.iter().map(|t| Complex64::from_polar(0.45, 4.77e-3 * t + 0.3)).collect();
        assert!((coherence_frequency(&t, &rho).unwrap() - 4.77e-3).abs() < 1e-12);
        let flat: Vec<Complex64> = t.iter().map(|_| Complex64::new(0.45, 0.0)).collect();
        assert!(coherence_frequency(&t, &flat).unwrap().abs() < 1e-15);
        let zero = vec![Complex64::new(0.0, 0.0); t.len()];
        assert!(matches!(coherence_frequency(&t, &zero), Err(MeasurementError::FlatSeries(_))));
    }

    #[test]
    fn coherence_frequency_ignores_small_fast_ripple() {
        let t: Vec<f64> = (0..4000).map(|k| k as f64 * 0.5).collect();
        let rho: Vec<Complex64> = t
            .iter()
            .map(|t| Complex64::from_polar(0.45, 4.77e-3 * t) * (1.0 + 0.01 * (0.17 * t).cos()))
            .collect();
        let w = coherence_frequency(&t, &rho).unwrap();
        assert!((w / 4.77e-3 - 1.0).abs() < 1e-4, "{w}");
    }

    proptest! {
        #[test]
        fn rotation_changes_only_the_intercept(shift in -3.0..3.0f64, omega in -0.05..0.05f64) {
            let t: Vec<f64> = (0..12).map(|k| k as f64 * 3.0).collect();
            let base: Vec<f64> = t.iter().map(|t| (1.0 - omega * t + 0.01 * (0.7 * t).sin()).rem_euclid(PI)).collect();
            let moved: Vec<f64> = base.iter().map(|a| (a + shift).rem_euclid(PI)).collect();
            let a = NodalTrace::from_angles(&t, &base, &TraceConfig::default()).unwrap();
            let b = NodalTrace::from_angles(&t, &moved, &TraceConfig::default()).unwrap();
            prop_assert!((a.omega - b.omega).abs() < 1e-6);
        }
    }
}
