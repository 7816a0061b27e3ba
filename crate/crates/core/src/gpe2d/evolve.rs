use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::snapshot::{write_density, write_field, SnapshotKind, SnapshotMeta};
use super::{ComplexField2D, Gpe2dError, PropagationConfig, Propagator, RingSystem};
use crate::measurement::{locate_extrema, DensityImage};
use crate::modes::{ModeAmplitudes, ModeBasis, ModesError};

pub const OBSERVABLES_HEADER: &str = "t,norm,energy,mu,p1p,p1m,p3p,p3m,re_coh,im_coh,node_angle";

/// One line of the observables series. Mode columns are NaN when no basis
/// was supplied; `node_angle` is NaN when the fringe is too faint to locate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObservableRow {
    pub t: f64,
    pub norm: f64,
    pub energy: f64,
    pub mu: f64,
    pub p1p: f64,
    pub p1m: f64,
    pub p3p: f64,
    pub p3m: f64,
    pub re_coh: f64,
    pub im_coh: f64,
    pub node_angle: f64,
}

impl ObservableRow {
    pub fn to_csv(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{},{}",
            self.t,
            self.norm,
            self.energy,
            self.mu,
            self.p1p,
            self.p1m,
            self.p3p,
            self.p3m,
            self.re_coh,
            self.im_coh,
            self.node_angle
        )
    }
}

#[derive(Debug, Error)]
#[error("sink I/O error: {0}")]
pub struct SinkError(#[from] pub std::io::Error);

/// Receives data from [`evolve`] at the configured strides.
pub trait EvolutionSink {
    fn record(
        &mut self,
        _row: &ObservableRow,
        _amplitudes: Option<&ModeAmplitudes>,
    ) -> Result<(), SinkError> {
        Ok(())
    }

    fn snapshot(&mut self, _psi: &ComplexField2D, _step: u64) -> Result<(), SinkError> {
        Ok(())
    }

    fn flush(&mut self) -> Result<(), SinkError> {
        Ok(())
    }

    /// Files written so far.
    fn outputs(&self) -> Vec<PathBuf> {
        Vec::new()
    }
}

/// Keeps everything in memory.
#[derive(Debug, Default, Clone)]
pub struct CollectingSink {
    pub rows: Vec<ObservableRow>,
    pub amplitudes: Vec<ModeAmplitudes>,
    pub densities: Vec<DensityImage>,
    /// Store a density image at every snapshot stride.
    pub keep_densities: bool,
}

impl CollectingSink {
    pub fn with_densities() -> Self {
        Self {
            keep_densities: true,
            ..Self::default()
        }
    }
}

impl EvolutionSink for CollectingSink {
    fn record(&mut self, row: &ObservableRow, amps: Option<&ModeAmplitudes>) -> Result<(), SinkError> {
        self.rows.push(*row);
        if let Some(a) = amps {
            self.amplitudes.push(a.clone());
        }
        Ok(())
    }

    fn snapshot(&mut self, psi: &ComplexField2D, _step: u64) -> Result<(), SinkError> {
        if self.keep_densities {
            self.densities.push(psi.density());
        }
        Ok(())
    }
}

/// Streams rows to a CSV file with [`OBSERVABLES_HEADER`].
pub struct ObservablesCsvSink {
    path: PathBuf,
    out: BufWriter<File>,
}

impl ObservablesCsvSink {
    pub fn create(path: impl AsRef<Path>) -> Result<Self, SinkError> {
        let path = path.as_ref().to_path_buf();
        let mut out = BufWriter::new(File::create(&path)?);
        writeln!(out, "{OBSERVABLES_HEADER}")?;
        Ok(Self { path, out })
    }
}

impl EvolutionSink for ObservablesCsvSink {
    fn record(&mut self, row: &ObservableRow, _: Option<&ModeAmplitudes>) -> Result<(), SinkError> {
        writeln!(self.out, "{}", row.to_csv())?;
        Ok(())
    }

    fn flush(&mut self) -> Result<(), SinkError> {
        self.out.flush()?;
        Ok(())
    }

    fn outputs(&self) -> Vec<PathBuf> {
        vec![self.path.clone()]
    }
}

/// Writes one snapshot file per snapshot stride, named `<prefix>_<step>.bin`.
pub struct SnapshotFileSink {
    dir: PathBuf,
    prefix: String,
    kind: SnapshotKind,
    meta: SnapshotMeta,
    written: Vec<PathBuf>,
}

impl SnapshotFileSink {
    pub fn new(dir: impl AsRef<Path>, prefix: &str, kind: SnapshotKind, meta: SnapshotMeta) -> Self {
        Self {
            dir: dir.as_ref().to_path_buf(),
            prefix: prefix.to_string(),
            kind,
            meta,
            written: Vec::new(),
        }
    }
}

impl EvolutionSink for SnapshotFileSink {
    fn snapshot(&mut self, psi: &ComplexField2D, step: u64) -> Result<(), SinkError> {
        let path = self.dir.join(format!("{}_{step:09}.bin", self.prefix));
        let mut out = BufWriter::new(File::create(&path)?);
        match self.kind {
            SnapshotKind::Field => write_field(&mut out, psi, &self.meta)?,
            SnapshotKind::Density => write_density(&mut out, &psi.density(), &self.meta)?,
        }
        out.flush()?;
        self.written.push(path);
        Ok(())
    }

    fn outputs(&self) -> Vec<PathBuf> {
        self.written.clone()
    }
}

#[derive(Debug, Clone)]
pub struct EvolutionSummary {
    pub final_field: ComplexField2D,
    pub steps: u64,
    pub initial_norm: f64,
    pub final_norm: f64,
    /// Largest |norm - initial norm| over the recorded rows.
    pub max_norm_drift: f64,
    pub initial_energy: f64,
    pub final_energy: f64,
    /// Largest |E - E₀|/|E₀| over the recorded rows.
    pub max_relative_energy_drift: f64,
    pub outputs: Vec<PathBuf>,
}

#[derive(Debug, Error)]
pub enum EvolveError {
    #[error(transparent)]
    Step(#[from] Gpe2dError),
    #[error(transparent)]
    Modes(#[from] ModesError),
    #[error("output failed at t = {time}: {source}")]
    Sink {
        source: SinkError,
        time: f64,
        /// Files completed before the failure.
        partial_outputs: Vec<PathBuf>,
    },
}

fn outputs_of(sinks: &[&mut dyn EvolutionSink]) -> Vec<PathBuf> {
    sinks.iter().flat_map(|s| s.outputs()).collect()
}

fn observe(
    system: &RingSystem,
    psi: &ComplexField2D,
    basis: Option<&ModeBasis>,
) -> Result<(ObservableRow, Option<ModeAmplitudes>), EvolveError> {
    let amps = basis.map(|b| b.project(psi)).transpose()?;
    let pop = |l: i32| amps.as_ref().map_or(f64::NAN, |a| a.population(l));
    let coh = amps.as_ref().map(|a| a.coherence(1, -1));
    let node_angle = locate_extrema(&psi.density()).map_or(f64::NAN, |e| e.angle_min);
    let row = ObservableRow {
        t: psi.time,
        norm: psi.norm_sqr(),
        energy: system.energy(psi),
        mu: system.chemical_potential(psi),
        p1p: pop(1),
        p1m: pop(-1),
        p3p: pop(3),
        p3m: pop(-3),
        re_coh: coh.map_or(f64::NAN, |c| c.re),
        im_coh: coh.map_or(f64::NAN, |c| c.im),
        node_angle,
    };
    Ok((row, amps))
}

/// Propagates `psi0` in real time until `t_final` (measured from `psi0.time`),
/// feeding observables every `observable_stride` steps and snapshots every
/// `snapshot_stride` steps (both also at the first and the last step).
pub fn evolve(
    system: &RingSystem,
    psi0: ComplexField2D,
    cfg: &PropagationConfig,
    t_final: f64,
    basis: Option<&ModeBasis>,
    sinks: &mut [&mut dyn EvolutionSink],
) -> Result<EvolutionSummary, EvolveError> {
    if !(t_final.is_finite() && t_final >= 0.0) {
        return Err(Gpe2dError::BadConfig(format!("t_final must be ≥ 0, got {t_final}")).into());
    }
    if psi0.grid != system.grid {
        return Err(Gpe2dError::GridMismatch.into());
    }
    let mut prop = Propagator::new(system.grid, &system.potential, system.g2d, cfg)?;
    let steps = ((t_final / cfg.dt) - 1e-9).ceil().max(0.0) as u64;
    let t0 = psi0.time;
    let mut psi = psi0;

    let sink_err = |source: SinkError, time: f64, sinks: &[&mut dyn EvolutionSink]| EvolveError::Sink {
        source,
        time,
        partial_outputs: outputs_of(sinks),
    };

    let initial_norm = psi.norm_sqr();
    let initial_energy = system.energy(&psi);
    let mut final_energy = initial_energy;
    let mut max_norm_drift = 0.0f64;
    let mut max_energy_drift = 0.0f64;

    for k in 0..=steps {
        if k > 0 {
            prop.step(&mut psi)?;
            psi.time = t0 + k as f64 * cfg.dt;
        }
        let last = k == steps;
        if k % cfg.observable_stride == 0 || last {
            let (row, amps) = observe(system, &psi, basis)?;
            max_norm_drift = max_norm_drift.max((row.norm - initial_norm).abs());
            if initial_energy != 0.0 {
                max_energy_drift =
                    max_energy_drift.max(((row.energy - initial_energy) / initial_energy).abs());
            }
            final_energy = row.energy;
            for i in 0..sinks.len() {
                if let Err(e) = sinks[i].record(&row, amps.as_ref()) {
                    return Err(sink_err(e, psi.time, sinks));
                }
            }
        }
        if k % cfg.snapshot_stride == 0 || last {
            for i in 0..sinks.len() {
                if let Err(e) = sinks[i].snapshot(&psi, k) {
                    return Err(sink_err(e, psi.time, sinks));
                }
            }
        }
    }
    for i in 0..sinks.len() {
        if let Err(e) = sinks[i].flush() {
            return Err(sink_err(e, psi.time, sinks));
        }
    }
    Ok(EvolutionSummary {
        final_norm: psi.norm_sqr(),
        final_field: psi,
        steps,
        initial_norm,
        max_norm_drift,
        initial_energy,
        final_energy,
        max_relative_energy_drift: max_energy_drift,
        outputs: outputs_of(sinks),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gpe2d::Grid2D;
    use num_complex::Complex64;

    fn system() -> RingSystem {
        RingSystem::new(Grid2D::square(48, 20.0).unwrap(), 3.0, 1.0).unwrap()
    }

    fn packet(grid: Grid2D) -> ComplexField2D {
        let mut f = ComplexField2D::from_fn(grid, |x, y| {
            let r = x.hypot(y);
            Complex64::from_polar((-(r - 3.0).powi(2) / 2.0).exp(), y.atan2(x))
        });
        f.normalize();
        f
    }

    #[test]
    fn zero_duration_returns_input() {
        let sys = system();
        let psi = packet(sys.grid);
        let mut sink = CollectingSink::default();
        let out = evolve(&sys, psi.clone(), &PropagationConfig::default(), 0.0, None, &mut [&mut sink])
            .unwrap();
        assert_eq!(out.final_field, psi);
        assert_eq!(out.steps, 0);
        assert_eq!(sink.rows.len(), 1);
        assert!(sink.rows[0].p1p.is_nan());
    }

    #[test]
    fn strides_and_endpoints() {
        let sys = system();
        let cfg = PropagationConfig {
            dt: 0.01,
            observable_stride: 7,
            snapshot_stride: 20,
            ..Default::default()
        };
        let mut sink = CollectingSink::with_densities();
        let out = evolve(&sys, packet(sys.grid), &cfg, 0.5, None, &mut [&mut sink]).unwrap();
        assert_eq!(out.steps, 50);
        // rows at 0,7,...,49 and the final step 50
        assert_eq!(sink.rows.len(), 9);
        assert_eq!(sink.densities.len(), 4);
        assert!((sink.rows.last().unwrap().t - 0.5).abs() < 1e-12);
        assert!(out.max_norm_drift < 1e-10);
    }

    #[test]
    fn csv_sink_writes_header_and_rows() {
        let dir = std::env::temp_dir().join(format!("ringsense-evolve-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("obs.csv");
        let sys = system();
        let mut csv = ObservablesCsvSink::create(&path).unwrap();
        let cfg = PropagationConfig { dt: 0.01, observable_stride: 5, ..Default::default() };
        let out = evolve(&sys, packet(sys.grid), &cfg, 0.1, None, &mut [&mut csv]).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some(OBSERVABLES_HEADER));
        assert_eq!(lines.count(), 3);
        assert_eq!(out.outputs, vec![path]);
        std::fs::remove_dir_all(dir).ok();
    }

    struct FailingSink;
    impl EvolutionSink for FailingSink {
        fn snapshot(&mut self, psi: &ComplexField2D, _: u64) -> Result<(), SinkError> {
            if psi.time > 0.05 {
                Err(std::io::Error::other("disk full").into())
            } else {
                Ok(())
            }
        }
    }

    #[test]
    fn sink_failure_aborts_with_time() {
        let sys = system();
        let cfg = PropagationConfig { dt: 0.01, snapshot_stride: 2, ..Default::default() };
        let err = evolve(&sys, packet(sys.grid), &cfg, 1.0, None, &mut [&mut FailingSink]).unwrap_err();
        match err {
            EvolveError::Sink { time, .. } => assert!((time - 0.06).abs() < 1e-12),
            other => panic!("{other}"),
        }
    }
}
