//! Conversions between SI quantities and the dimensionless ring-trap units,
//! plus diagnostics for the regime in which the 2D reduced model holds.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use thiserror::Error;

use crate::fsm::FsmParams;

/// Reduced Planck constant (CODATA 2018, exact in the 2019 SI), J·s.
pub const HBAR: f64 = 1.054_571_817e-34;
/// Bohr radius, m.
pub const BOHR_RADIUS: f64 = 5.291_772_109_03e-11;
/// Unified atomic mass unit, kg.
pub const ATOMIC_MASS_UNIT: f64 = 1.660_539_066_60e-27;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum UnitsError {
    #[error("atom count must be at least 1")]
    AtomCount,
    #[error("{name} must be finite and positive, got {value}")]
    NotPositive { name: &'static str, value: f64 },
    #[error("{name} must be finite, got {value}")]
    NotFinite { name: &'static str, value: f64 },
}

fn positive(name: &'static str, value: f64) -> Result<f64, UnitsError> {
    if value.is_finite() && value > 0.0 {
        Ok(value)
    } else {
        Err(UnitsError::NotPositive { name, value })
    }
}

fn finite(name: &'static str, value: f64) -> Result<f64, UnitsError> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(UnitsError::NotFinite { name, value })
    }
}

/// Laboratory description of the condensate and its trap (SI units).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalParams {
    pub atom_count: u64,
    /// kg
    pub atom_mass: f64,
    /// m
    pub scattering_length: f64,
    /// rad/s
    pub radial_trap_freq: f64,
    /// rad/s
    pub axial_trap_freq: f64,
    /// s
    #[serde(default)]
    pub coherence_time: Option<f64>,
}

impl PhysicalParams {
    pub fn validate(&self) -> Result<(), UnitsError> {
        if self.atom_count < 1 {
            return Err(UnitsError::AtomCount);
        }
        positive("atom_mass", self.atom_mass)?;
        finite("scattering_length", self.scattering_length)?;
        positive("radial_trap_freq", self.radial_trap_freq)?;
        positive("axial_trap_freq", self.axial_trap_freq)?;
        if let Some(tau) = self.coherence_time {
            positive("coherence_time", tau)?;
        }
        Ok(())
    }

    /// Radial oscillator length σ = sqrt(ħ/(mω)), the unit of length.
    pub fn oscillator_length(&self) -> f64 {
        (HBAR / (self.atom_mass * self.radial_trap_freq)).sqrt()
    }

    /// Axial oscillator length a_z = sqrt(ħ/(mω_z)).
    pub fn axial_length(&self) -> f64 {
        (HBAR / (self.atom_mass * self.axial_trap_freq)).sqrt()
    }

    /// Λ = ω_z/ω.
    pub fn aspect_ratio(&self) -> f64 {
        self.axial_trap_freq / self.radial_trap_freq
    }
}

/// The parameters that enter the dimensionless GPE.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DimensionlessParams {
    pub ring_radius: f64,
    pub g2d: f64,
    pub omega_ext: f64,
    pub aspect_ratio: f64,
}

impl DimensionlessParams {
    pub fn validate(&self) -> Result<(), UnitsError> {
        positive("ring_radius", self.ring_radius)?;
        positive("aspect_ratio", self.aspect_ratio)?;
        finite("g2d", self.g2d)?;
        finite("omega_ext", self.omega_ext)?;
        Ok(())
    }
}

/// `sqrt(8π m ω_z / ħ)` in 1/m.
fn interaction_wavenumber(mass: f64, axial_trap_freq: f64) -> f64 {
    (8.0 * PI * mass * axial_trap_freq / HBAR).sqrt()
}

/// g2d = N a_s sqrt(8π m ω_z / ħ).
pub fn g2d_from_physical(p: &PhysicalParams) -> Result<f64, UnitsError> {
    p.validate()?;
    Ok(p.atom_count as f64
        * p.scattering_length
        * interaction_wavenumber(p.atom_mass, p.axial_trap_freq))
}

/// Scattering length (m) that produces `g2d` for the given atom number,
/// mass and axial trap frequency.
pub fn physical_from_g2d(
    g2d: f64,
    atom_count: u64,
    atom_mass: f64,
    axial_trap_freq: f64,
) -> Result<f64, UnitsError> {
    if atom_count < 1 {
        return Err(UnitsError::AtomCount);
    }
    finite("g2d", g2d)?;
    positive("atom_mass", atom_mass)?;
    positive("axial_trap_freq", axial_trap_freq)?;
    Ok(g2d / (atom_count as f64 * interaction_wavenumber(atom_mass, axial_trap_freq)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SiFrequency {
    pub rad_per_s: f64,
    pub hz: f64,
}

/// Converts an angular frequency in units of ω to SI.
pub fn frequency_to_si(omega: f64, radial_trap_freq: f64) -> Result<SiFrequency, UnitsError> {
    finite("omega", omega)?;
    positive("radial_trap_freq", radial_trap_freq)?;
    let rad_per_s = omega * radial_trap_freq;
    Ok(SiFrequency {
        rad_per_s,
        hz: rad_per_s / (2.0 * PI),
    })
}

/// Peak 2D density n₂ (1/m²) from the peak of the normalized dimensionless
/// density `|Ψ|²` (units of σ⁻²).
pub fn peak_density(max_density: f64, atom_count: u64, oscillator_length: f64) -> f64 {
    atom_count as f64 * max_density / (oscillator_length * oscillator_length)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ValidityThresholds {
    /// Warn when a_z a_s n₂ exceeds this.
    pub diluteness: f64,
    /// Warn when |U|/Δ exceeds this.
    pub weak_coupling: f64,
    /// Warn when Ω ω τ falls below this.
    pub observability: f64,
}

impl Default for ValidityThresholds {
    fn default() -> Self {
        Self {
            diluteness: 0.1,
            weak_coupling: 0.25,
            observability: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CheckStatus {
    Pass,
    Warn,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub value: f64,
    pub threshold: f64,
    pub status: CheckStatus,
}

impl Check {
    fn upper(value: f64, threshold: f64) -> Self {
        let status = if value > threshold || !value.is_finite() {
            CheckStatus::Warn
        } else {
            CheckStatus::Pass
        };
        Self { value, threshold, status }
    }

    fn lower(value: f64, threshold: f64) -> Self {
        let status = if value < threshold || !value.is_finite() {
            CheckStatus::Warn
        } else {
            CheckStatus::Pass
        };
        Self { value, threshold, status }
    }
}

/// Regime diagnostics. The report never blocks a computation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ValidityReport {
    /// a_z a_s n₂ (quasi-2D reduction).
    pub diluteness: Check,
    /// |U|/Δ (four-state truncation).
    pub weak_coupling: Check,
    /// Ω ω τ (rotation observable within the coherence time); absent when τ
    /// is unknown.
    pub observability: Option<Check>,
}

impl ValidityReport {
    pub fn all_pass(&self) -> bool {
        self.diluteness.status == CheckStatus::Pass
            && self.weak_coupling.status == CheckStatus::Pass
            && self
                .observability
                .map_or(true, |c| c.status == CheckStatus::Pass)
    }
}

/// `omega` is the nodal-line frequency in units of ω, `peak_density` the
/// 2D density n₂ in 1/m².
pub fn validity_report(
    p: &PhysicalParams,
    fsm: &FsmParams,
    omega: f64,
    peak_density: f64,
    thresholds: &ValidityThresholds,
) -> ValidityReport {
    let diluteness = p.axial_length() * p.scattering_length.abs() * peak_density;
    let weak = fsm.u.abs() / fsm.delta;
    let observability = p
        .coherence_time
        .map(|tau| Check::lower(omega.abs() * p.radial_trap_freq * tau, thresholds.observability));
    ValidityReport {
        diluteness: Check::upper(diluteness, thresholds.diluteness),
        weak_coupling: Check::upper(weak, thresholds.weak_coupling),
        observability,
    }
}
