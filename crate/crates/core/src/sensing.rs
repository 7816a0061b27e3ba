//! Inference of interaction strength, magnetic field and rotation from
//! measured nodal-line dynamics.
//!
//! Uncertainties are propagated to first order assuming independent inputs.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

pub use crate::measurement::Estimate;

/// `|n - 2Ω/Δ|` below which the interaction cannot be inferred.
pub const DENOMINATOR_GUARD: f64 = 1e-6;

pub const SENSING_SCHEMA: &str = "ringsense.sensing/1";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SensingError {
    #[error("n - 2Ω/Δ = {0:e} is degenerate: measured Ω inconsistent with the weak-interaction model")]
    DegenerateDenominator(f64),
    #[error("overlap integral must be positive, got {0}")]
    NonPositiveOverlap(f64),
    #[error("chemical-potential gap must be positive, got {0}")]
    NonPositiveGap(f64),
    #[error("field {0} T sits on the resonance")]
    AtResonance(f64),
    #[error("scattering length equals the background value: |B| → ∞")]
    BackgroundLimit,
    #[error("da/dB must be nonzero")]
    ZeroSlope,
    #[error("invalid parameter: {0}")]
    BadParams(String),
    #[error("sensing record: {0}")]
    BadRecord(String),
}

/// `a(B) = ã(1 - δ/(B - B₀))`
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FeshbachParams {
    /// Background scattering length ã (m).
    pub background_a: f64,
    /// Resonance position B₀ (T).
    pub resonance_b: f64,
    /// Resonance width δ (T).
    pub width: f64,
}

impl FeshbachParams {
    pub fn new(background_a: f64, resonance_b: f64, width: f64) -> Result<Self, SensingError> {
        let p = Self { background_a, resonance_b, width };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), SensingError> {
        if !(self.background_a.is_finite() && self.resonance_b.is_finite() && self.width.is_finite()) {
            return Err(SensingError::BadParams("Feshbach parameters must be finite".into()));
        }
        if self.background_a == 0.0 || self.width == 0.0 {
            return Err(SensingError::BadParams("background length and width must be nonzero".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SensingKind {
    G2d,
    ScatteringLength,
    MagneticField,
    ExternalRotation,
    ThresholdField,
}

/// An inferred quantity together with the digests of the reports it came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SensingEstimate {
    pub schema: String,
    pub kind: SensingKind,
    pub value: f64,
    pub standard_error: f64,
    /// SHA-256 hex digests of the input reports.
    pub inputs_digest: Vec<String>,
}

impl SensingEstimate {
    pub fn new(kind: SensingKind, est: Estimate, inputs_digest: Vec<String>) -> Result<Self, SensingError> {
        let s = Self {
            schema: SENSING_SCHEMA.into(),
            kind,
            value: est.value,
            standard_error: est.stderr,
            inputs_digest,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<(), SensingError> {
        let bad = |m: &str| Err(SensingError::BadRecord(m.into()));
        if self.schema != SENSING_SCHEMA {
            return bad("unknown schema");
        }
        if !self.value.is_finite() {
            return bad("value must be finite");
        }
        if !(self.standard_error >= 0.0 && self.standard_error.is_finite()) {
            return bad("standard error must be finite and nonnegative");
        }
        if self.inputs_digest.is_empty() {
            return bad("no input digests");
        }
        if !self
            .inputs_digest
            .iter()
            .all(|d| d.len() == 64 && d.bytes().all(|b| b.is_ascii_hexdigit()))
        {
            return bad("digests must be 64 hex characters");
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("estimate serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, SensingError> {
        let s: Self = serde_json::from_str(text).map_err(|e| SensingError::BadRecord(e.to_string()))?;
        s.validate()?;
        Ok(s)
    }
}

/// SHA-256 of `bytes` as lowercase hex.
pub fn digest(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// `g₂d = (1/I) · 2Ω / (n - 2Ω/Δ)`
pub fn infer_g2d(omega: Estimate, overlap: Estimate, delta: Estimate, n: Estimate) -> Result<Estimate, SensingError> {
    if !(overlap.value > 0.0) {
        return Err(SensingError::NonPositiveOverlap(overlap.value));
    }
    if !(delta.value > 0.0) {
        return Err(SensingError::NonPositiveGap(delta.value));
    }
    let (w, i, d) = (omega.value, overlap.value, delta.value);
    let den = n.value - 2.0 * w / d;
    if !(den.abs() > DENOMINATOR_GUARD) {
        return Err(SensingError::DegenerateDenominator(den));
    }
    let g = 2.0 * w / (i * den);
    let dg_dw = 2.0 / (i * den) * (1.0 + 2.0 * w / (d * den));
    let dg_di = -g / i;
    let dg_dn = -g / den;
    let dg_dd = -g / den * (2.0 * w / (d * d));
    let var = (dg_dw * omega.stderr).powi(2)
        + (dg_di * overlap.stderr).powi(2)
        + (dg_dn * n.stderr).powi(2)
        + (dg_dd * delta.stderr).powi(2);
    Ok(Estimate { value: g, stderr: var.sqrt() })
}

/// `a(B) = ã(1 - δ/(B - B₀))`
pub fn feshbach_a(b: f64, f: &FeshbachParams) -> Result<f64, SensingError> {
    let x = b - f.resonance_b;
    if x == 0.0 {
        return Err(SensingError::AtResonance(b));
    }
    Ok(f.background_a * (1.0 - f.width / x))
}

/// `da/dB = ãδ/(B - B₀)²`
pub fn feshbach_slope(b: f64, f: &FeshbachParams) -> Result<f64, SensingError> {
    let x = b - f.resonance_b;
    if x == 0.0 {
        return Err(SensingError::AtResonance(b));
    }
    Ok(f.background_a * f.width / (x * x))
}

/// Which branch of a multi-resonance inversion to take. A single resonance
/// has one branch, so the hint is currently ignored.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum BranchHint {
    #[default]
    Nearest,
}

/// `B = B₀ + δã/(ã - a)`
pub fn feshbach_invert(a: f64, f: &FeshbachParams, _hint: BranchHint) -> Result<f64, SensingError> {
    let den = f.background_a - a;
    if den == 0.0 {
        return Err(SensingError::BackgroundLimit);
    }
    Ok(f.resonance_b + f.width * f.background_a / den)
}

/// [`feshbach_invert`] with the uncertainty of `a` carried through.
pub fn feshbach_invert_estimate(a: Estimate, f: &FeshbachParams) -> Result<Estimate, SensingError> {
    let b = feshbach_invert(a.value, f, BranchHint::Nearest)?;
    let den = f.background_a - a.value;
    let slope = f.width * f.background_a / (den * den);
    Ok(Estimate { value: b, stderr: (slope * a.stderr).abs() })
}

/// Nodal-line response to the field, `dΩ/dB` in units of ω per tesla:
/// `n I N √(8πΛ)/σ · (da/dB) / (2(1 + U/Δ)²)`, with σ the radial oscillator
/// length in metres and Λ = ω_z/ω.
#[allow(clippy::too_many_arguments)]
pub fn domega_db(
    n: f64,
    overlap: f64,
    atom_count: f64,
    aspect_ratio: f64,
    sigma: f64,
    u: f64,
    delta: f64,
    da_db: f64,
) -> Result<f64, SensingError> {
    if !(delta > 0.0) {
        return Err(SensingError::NonPositiveGap(delta));
    }
    if !(aspect_ratio > 0.0 && sigma > 0.0) {
        return Err(SensingError::BadParams("aspect ratio and σ must be positive".into()));
    }
    let coupling = atom_count * (8.0 * std::f64::consts::PI * aspect_ratio).sqrt() / sigma;
    Ok(n * overlap * coupling * da_db / (2.0 * (1.0 + u / delta).powi(2)))
}

/// Smallest resolvable field change for a frequency resolution `ΔΩ`, taking
/// the model's validity limit `U = Δ`:
/// `ΔB = 8σΔΩ / (n I N √(8πΛ) da/dB)`.
pub fn threshold_sensitivity(
    delta_omega: f64,
    n: f64,
    overlap: f64,
    atom_count: f64,
    aspect_ratio: f64,
    sigma: f64,
    da_db: f64,
) -> Result<f64, SensingError> {
    if da_db == 0.0 {
        return Err(SensingError::ZeroSlope);
    }
    for (name, v) in [("n", n), ("I", overlap), ("N", atom_count), ("Λ", aspect_ratio), ("σ", sigma)] {
        if !(v > 0.0 && v.is_finite()) {
            return Err(SensingError::BadParams(format!("{name} must be positive, got {v}")));
        }
    }
    if !(delta_omega >= 0.0) {
        return Err(SensingError::BadParams(format!("ΔΩ must be nonnegative, got {delta_omega}")));
    }
    Ok(8.0 * sigma * delta_omega
        / (n * overlap * atom_count * (8.0 * std::f64::consts::PI * aspect_ratio).sqrt() * da_db))
}

/// `Ω_ext = Ω_observed - Ω_FSM`
pub fn infer_external_rotation(observed: Estimate, predicted: Estimate) -> Estimate {
    Estimate {
        value: observed.value - predicted.value,
        stderr: observed.stderr.hypot(predicted.stderr),
    }
}
