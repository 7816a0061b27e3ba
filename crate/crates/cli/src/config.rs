//! Layered run configuration: preset defaults, then a TOML file, then
//! `--set key.path=value` overrides.

use std::path::Path;

use ringsense::fsm::CubicForm;
use ringsense::measurement::MeasureConfig;
use ringsense::sensing::FeshbachParams;
use ringsense::units::{PhysicalParams, ValidityThresholds};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("reading {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("parsing {path}: {message}")]
    Parse { path: String, message: String },
    #[error("override {0:?} is not of the form key.path=value")]
    BadOverride(String),
    #[error("override {key}: {message}")]
    Override { key: String, message: String },
    #[error("invalid configuration: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Preset {
    /// 256² grid, dt = 2e-3: minutes per run on a laptop.
    #[default]
    Desk,
    /// 1000² grid, dt = 1e-3.
    Paper,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SystemConfig {
    pub ring_radius: f64,
    pub g2d: f64,
    /// Frame rotation in units of ω, positive clockwise.
    pub omega_ext: f64,
}

impl Default for SystemConfig {
    fn default() -> Self {
        Self { ring_radius: 5.0, g2d: 1.0, omega_ext: 0.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    pub n: usize,
    pub extent: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self { n: 256, extent: 24.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StateConfig {
    /// `n₁± = p₊ - p₋`
    pub imbalance: f64,
    /// Relative phase of the `l = -1` component.
    pub alpha0: f64,
}

impl Default for StateConfig {
    fn default() -> Self {
        Self { imbalance: 0.4, alpha0: 0.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RadialConfig {
    pub step: f64,
    /// Radial domain extends this far beyond the ring radius.
    pub margin: f64,
    pub dtau: f64,
    pub tolerance: f64,
    pub max_iterations: usize,
    pub windings: Vec<u32>,
}

impl Default for RadialConfig {
    fn default() -> Self {
        Self {
            step: 0.01,
            margin: 10.0,
            dtau: 1.0,
            tolerance: 1e-12,
            max_iterations: 20000,
            windings: vec![1, 3],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvolveConfig {
    pub dt: f64,
    /// Fixed duration; when absent the run lasts long enough for the
    /// predicted nodal line to turn by `min_rotation`, and at least `min_time`.
    pub t_final: Option<f64>,
    pub min_rotation: f64,
    pub min_time: f64,
    pub observable_stride: u64,
    /// Density images kept for the per-frame estimators.
    pub images: usize,
    /// Snapshot file stride; derived from `images` when absent.
    pub snapshot_stride: Option<u64>,
    /// Write full complex fields instead of densities.
    pub write_fields: bool,
}

impl Default for EvolveConfig {
    fn default() -> Self {
        Self {
            dt: 2e-3,
            t_final: None,
            min_rotation: 0.5,
            min_time: 150.0,
            observable_stride: 50,
            images: 8,
            snapshot_stride: None,
            write_fields: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FsmConfig {
    /// Overrides the overlap coupling derived from the eigenstates.
    pub u: Option<f64>,
    /// Overrides `μ₃ - μ₁` derived from the eigenstates.
    pub delta: Option<f64>,
    pub dt: f64,
    pub t_final: f64,
    pub record_stride: u64,
    pub cubic_form: CubicForm,
}

impl Default for FsmConfig {
    fn default() -> Self {
        Self {
            u: None,
            delta: None,
            dt: 1e-3,
            t_final: 200.0,
            record_stride: 100,
            cubic_form: CubicForm::Full,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SenseConfig {
    pub feshbach: Option<FeshbachParams>,
    /// Field (T) at which `da/dB` is evaluated for the threshold.
    pub field: Option<f64>,
    pub atom_count: f64,
    pub aspect_ratio: f64,
    /// Radial oscillator length σ (m).
    pub sigma: f64,
    /// Frequency resolution ΔΩ in units of ω.
    pub delta_omega: f64,
    /// Rotation rate predicted without frame rotation, for `rotation` mode;
    /// computed from the report when absent.
    pub omega_fsm: Option<f64>,
}

impl Default for SenseConfig {
    fn default() -> Self {
        Self {
            feshbach: None,
            field: None,
            atom_count: 1e4,
            aspect_ratio: 10.0,
            sigma: 2e-6,
            delta_omega: 1e-4,
            omega_fsm: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub g2d: Vec<f64>,
    pub imbalance: Vec<f64>,
    /// Worker threads; 0 uses every core. `RINGSENSE_WORKERS` overrides.
    pub workers: usize,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            g2d: vec![0.5, 1.0, 2.0, 4.0],
            imbalance: vec![0.2, 0.4, 0.6],
            workers: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct UnitsConfig {
    pub physical: PhysicalParams,
    pub thresholds: ValidityThresholds,
}

impl Default for UnitsConfig {
    fn default() -> Self {
        // ²³Na, 10⁴ atoms, ω = 2π·100 Hz, ω_z = 2π·500 Hz
        Self {
            physical: PhysicalParams {
                atom_count: 10_000,
                atom_mass: 22.989_769_28 * ringsense::units::ATOMIC_MASS_UNIT,
                scattering_length: 2.75e-9,
                radial_trap_freq: 2.0 * std::f64::consts::PI * 100.0,
                axial_trap_freq: 2.0 * std::f64::consts::PI * 500.0,
                coherence_time: Some(1.0),
            },
            thresholds: ValidityThresholds::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub system: SystemConfig,
    pub grid: GridConfig,
    pub state: StateConfig,
    pub radial: RadialConfig,
    pub evolve: EvolveConfig,
    pub fsm: FsmConfig,
    pub measure: MeasureConfig,
    pub sense: SenseConfig,
    pub sweep: SweepConfig,
    pub units: UnitsConfig,
}

impl Config {
    pub fn preset(p: Preset) -> Self {
        let mut c = Self::default();
        if p == Preset::Paper {
            c.grid.n = 1000;
            c.evolve.dt = 1e-3;
            c.evolve.observable_stride = 100;
        }
        c
    }

    /// Preset, then `file`, then each `key.path=value` override.
    pub fn load(preset: Preset, file: Option<&Path>, overrides: &[String]) -> Result<Self, ConfigError> {
        let mut root = toml::Value::try_from(Self::preset(preset))
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        if let Some(path) = file {
            let text = std::fs::read_to_string(path)
                .map_err(|source| ConfigError::Io { path: path.display().to_string(), source })?;
            let layer: toml::Value = toml::from_str(&text)
                .map_err(|e| ConfigError::Parse { path: path.display().to_string(), message: e.to_string() })?;
            merge(&mut root, layer);
        }
        for o in overrides {
            apply_override(&mut root, o)?;
        }
        let cfg: Self = root
            .try_into()
            .map_err(|e: toml::de::Error| ConfigError::Invalid(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let cfg: Self = toml::from_str(text)
            .map_err(|e| ConfigError::Parse { path: "<string>".into(), message: e.to_string() })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("configuration serializes")
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |m: String| Err(ConfigError::Invalid(m));
        let tree = toml::Value::try_from(self).map_err(|e| ConfigError::Invalid(e.to_string()))?;
        if let Some(key) = non_finite(&tree, String::new()) {
            return bad(format!("{key} must be finite"));
        }
        if !(self.system.ring_radius > 0.0) {
            return bad(format!("system.ring_radius must be positive, got {}", self.system.ring_radius));
        }
        if !self.system.g2d.is_finite() || !self.system.omega_ext.is_finite() {
            return bad("system.g2d and system.omega_ext must be finite".into());
        }
        if self.grid.n < 16 || !(self.grid.extent > 0.0) {
            return bad(format!("grid needs n ≥ 16 and a positive extent, got {} / {}", self.grid.n, self.grid.extent));
        }
        if !(self.state.imbalance.abs() <= 1.0) {
            return bad(format!("state.imbalance must lie in [-1, 1], got {}", self.state.imbalance));
        }
        if !(self.evolve.dt > 0.0) || self.evolve.t_final.is_some_and(|t| !(t >= 0.0)) {
            return bad("evolve.dt must be positive and evolve.t_final nonnegative".into());
        }
        if self.evolve.observable_stride == 0 || self.evolve.snapshot_stride == Some(0) {
            return bad("strides must be at least 1".into());
        }
        if self.evolve.images < 1 {
            return bad("evolve.images must be at least 1".into());
        }
        if !(self.evolve.min_rotation > 0.0 && self.evolve.min_time >= 0.0) {
            return bad("evolve.min_rotation must be positive and evolve.min_time nonnegative".into());
        }
        if self.radial.windings.is_empty() || !(self.radial.step > 0.0) {
            return bad("radial.windings must be nonempty and radial.step positive".into());
        }
        if self.sweep.g2d.is_empty() || self.sweep.imbalance.is_empty() {
            return bad("sweep.g2d and sweep.imbalance must be nonempty".into());
        }
        if self.sweep.imbalance.iter().any(|n| !(n.abs() <= 1.0)) {
            return bad("sweep.imbalance values must lie in [-1, 1]".into());
        }
        if let Some(f) = &self.sense.feshbach {
            f.validate().map_err(|e| ConfigError::Invalid(format!("sense.feshbach: {e}")))?;
        }
        Ok(())
    }
}

/// Dotted path of the first NaN or infinite setting.
fn non_finite(v: &toml::Value, path: String) -> Option<String> {
    match v {
        toml::Value::Float(x) if !x.is_finite() => Some(path),
        toml::Value::Table(t) => t.iter().find_map(|(k, v)| {
            let p = if path.is_empty() { k.clone() } else { format!("{path}.{k}") };
            non_finite(v, p)
        }),
        toml::Value::Array(a) => a.iter().enumerate().find_map(|(i, v)| non_finite(v, format!("{path}[{i}]"))),
        _ => None,
    }
}

fn merge(base: &mut toml::Value, layer: toml::Value) {
    match (base, layer) {
        (toml::Value::Table(b), toml::Value::Table(l)) => {
            for (k, v) in l {
                match b.get_mut(&k) {
                    Some(existing) => merge(existing, v),
                    None => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (b, l) => *b = l,
    }
}

fn apply_override(root: &mut toml::Value, spec: &str) -> Result<(), ConfigError> {
    let (key, raw) = spec.split_once('=').ok_or_else(|| ConfigError::BadOverride(spec.into()))?;
    let key = key.trim();
    if key.is_empty() || key.split('.').any(str::is_empty) {
        return Err(ConfigError::BadOverride(spec.into()));
    }
    // TOML literal if it parses as one, bare string otherwise
    let value = toml::from_str::<toml::Table>(&format!("v = {}", raw.trim()))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.trim().to_string()));
    let mut node = root;
    let parts: Vec<&str> = key.split('.').collect();
    for (i, part) in parts.iter().enumerate() {
        let table = node.as_table_mut().ok_or_else(|| ConfigError::Override {
            key: key.into(),
            message: format!("{} is not a table", parts[..i].join(".")),
        })?;
        if i + 1 == parts.len() {
            table.insert((*part).to_string(), value);
            return Ok(());
        }
        node = table
            .entry((*part).to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_differ_only_in_resolution() {
        let d = Config::preset(Preset::Desk);
        let p = Config::preset(Preset::Paper);
        assert_eq!((d.grid.n, d.evolve.dt), (256, 2e-3));
        assert_eq!((p.grid.n, p.evolve.dt), (1000, 1e-3));
        assert_eq!(d.system, p.system);
    }

    #[test]
    fn layers_apply_in_order() {
        let dir = tempfile::tempdir().unwrap();
        let file = dir.path().join("run.toml");
        std::fs::write(&file, "[system]\ng2d = 2.0\n[grid]\nn = 128\n").unwrap();
        let c = Config::load(Preset::Desk, Some(&file), &["system.g2d=4".into(), "fsm.cubic_form=drop-quadratic-u".into()])
            .unwrap();
        assert_eq!(c.system.g2d, 4.0);
        assert_eq!(c.grid.n, 128);
        assert_eq!(c.grid.extent, 24.0);
        assert_eq!(c.fsm.cubic_form, CubicForm::DropQuadraticU);
    }

    #[test]
    fn typos_and_bad_values_are_rejected() {
        assert!(Config::load(Preset::Desk, None, &["system.g2dd=1".into()]).is_err());
        assert!(Config::load(Preset::Desk, None, &["nonsense".into()]).is_err());
        assert!(Config::load(Preset::Desk, None, &["grid.n=4".into()]).is_err());
        assert!(Config::load(Preset::Desk, None, &["state.imbalance=1.5".into()]).is_err());
        assert!(Config::from_toml("[grid]\nn = \"many\"\n").is_err());
        let e = Config::from_toml("[sweep]\ng2d = [1.0, nan]\n").unwrap_err();
        assert!(e.to_string().contains("sweep.g2d[1]"), "{e}");
        assert!(Config::from_toml("[sense]\nsigma = inf\n").is_err());
    }

    #[test]
    fn toml_round_trip() {
        let mut c = Config::preset(Preset::Desk);
        c.evolve.t_final = Some(12.5);
        c.sense.feshbach = Some(FeshbachParams::new(-1.3e-9, 0.0737, -0.0192).unwrap());
        assert_eq!(Config::from_toml(&c.to_toml()).unwrap(), c);
    }
}
