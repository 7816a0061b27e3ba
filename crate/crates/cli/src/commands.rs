//! Subcommand definitions and their file-level behavior.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use ringsense::fsm::omega_fsm;
use ringsense::gpe2d::{
    read_snapshot_file, ObservablesCsvSink, SnapshotFileSink, SnapshotKind, SnapshotMeta, OBSERVABLES_HEADER,
};
use ringsense::measurement::{FrameEstimate, MeasurementReport, NodalTrace};
use ringsense::sensing::{
    digest, feshbach_invert_estimate, feshbach_slope, infer_external_rotation, infer_g2d, threshold_sensitivity,
    Estimate, SensingEstimate, SensingKind,
};
use ringsense::units::{g2d_from_physical, peak_density, physical_from_g2d, validity_report, BOHR_RADIUS};
use serde::Serialize;

use crate::config::{Config, Preset};
use crate::manifest::{write_atomic, RunManifest, RunStatus};
use crate::pipeline::{resolve_fsm_params, run_fsm, run_point, Eigenstates, PointSpec, RunError};
use crate::sweep::{resolve_workers, run_sweep, PointRecord};

/// Exit status when some sweep points failed.
pub const EXIT_PARTIAL: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "ringsense", version, about = "Ring-trap BEC simulation, measurement and sensing")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// TOML configuration layered over the preset.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Preset::Desk)]
    pub preset: Preset,
    /// Override one setting, e.g. `--set system.g2d=2`; repeatable.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Radial ground states for each winding in `radial.windings`.
    Eigenstate {
        #[arg(long)]
        out: PathBuf,
    },
    /// Real-time GPE evolution with snapshots, observables and the image protocol.
    Evolve {
        #[arg(long)]
        out: PathBuf,
    },
    /// Four-state model trajectory and characteristic-root report.
    Fsm {
        #[arg(long)]
        out: PathBuf,
    },
    /// Image-only measurement from snapshot files.
    Measure {
        /// Snapshot files or directories containing `*.bin` snapshots.
        #[arg(required = true)]
        snapshots: Vec<PathBuf>,
        /// Observables CSV whose `node_angle` column supplies a denser nodal trace.
        #[arg(long)]
        observables: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Infer a physical quantity from a measurement report.
    Sense {
        #[arg(long)]
        report: PathBuf,
        #[arg(long, value_enum)]
        mode: SenseMode,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Resumable sweep over `sweep.g2d` × `sweep.imbalance`.
    Sweep {
        #[arg(long)]
        out: PathBuf,
        /// Worker threads (0: all cores); `RINGSENSE_WORKERS` takes precedence.
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Laboratory ↔ dimensionless conversion and regime checks.
    Units {
        /// Convert this g₂d back to a scattering length instead.
        #[arg(long)]
        g2d: Option<f64>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SenseMode {
    G2d,
    ScatteringLength,
    Field,
    Rotation,
    Threshold,
}

pub fn run(cli: Cli) -> Result<i32, RunError> {
    let cfg = Config::load(cli.global.preset, cli.global.config.as_deref(), &cli.global.overrides)?;
    let mut inputs: Vec<PathBuf> = cli.global.config.iter().cloned().collect();
    match cli.command {
        Command::Eigenstate { out } => cmd_eigenstate(&cfg, &out, &inputs),
        Command::Evolve { out } => cmd_evolve(&cfg, &out, &inputs),
        Command::Fsm { out } => cmd_fsm(&cfg, &out, &inputs),
        Command::Measure { snapshots, observables, out } => {
            cmd_measure(&cfg, &snapshots, observables.as_deref(), out.as_deref(), &inputs)
        }
        Command::Sense { report, mode, out } => {
            inputs.push(report.clone());
            cmd_sense(&cfg, &report, mode, out.as_deref(), &inputs)
        }
        Command::Sweep { out, workers } => {
            let mut cfg = cfg;
            if let Some(w) = workers {
                cfg.sweep.workers = w;
            }
            cmd_sweep(&cfg, &out)
        }
        Command::Units { g2d } => cmd_units(&cfg, g2d),
    }
}

/// Output directory plus a manifest that tracks everything written into it.
struct RunDir {
    dir: PathBuf,
    manifest: RunManifest,
}

impl RunDir {
    fn create(dir: &Path, command: &str, cfg: &Config, inputs: &[PathBuf]) -> Result<Self, RunError> {
        fs::create_dir_all(dir).map_err(|e| RunError::output(dir, e))?;
        let mut manifest = RunManifest::new(command, serde_json::to_value(cfg).expect("configuration serializes"));
        for p in inputs {
            manifest.add_input(p, dir).map_err(|e| RunError::Input {
                path: p.display().to_string(),
                message: e.to_string(),
            })?;
        }
        manifest.write(dir).map_err(|e| RunError::output(dir, e))?;
        Ok(Self { dir: dir.to_path_buf(), manifest })
    }

    fn write(&mut self, name: &str, bytes: &[u8]) -> Result<PathBuf, RunError> {
        let path = self.dir.join(name);
        write_atomic(&path, bytes).map_err(|e| RunError::output(&path, e))?;
        self.track(&path)?;
        Ok(path)
    }

    fn track(&mut self, path: &Path) -> Result<(), RunError> {
        self.manifest.add_output(path, &self.dir).map_err(|e| RunError::output(path, e))
    }

    /// Writes the final manifest; on failure the manifest still lists what
    /// was produced before the error.
    fn finish<T>(mut self, result: Result<T, RunError>) -> Result<T, RunError> {
        match &result {
            Ok(_) => self.manifest.status = RunStatus::Complete,
            Err(e) => {
                self.manifest.status = RunStatus::Failed;
                self.manifest.message = Some(e.to_string());
            }
        }
        let written = self.manifest.write(&self.dir).map_err(|e| RunError::output(&self.dir, e));
        let value = result?;
        written?;
        Ok(value)
    }
}

fn json<T: Serialize>(v: &T) -> Vec<u8> {
    let mut s = serde_json::to_string_pretty(v).expect("serializable");
    s.push('\n');
    s.into_bytes()
}

fn cmd_eigenstate(cfg: &Config, out: &Path, inputs: &[PathBuf]) -> Result<i32, RunError> {
    let mut run = RunDir::create(out, "eigenstate", cfg, inputs)?;
    let result = (|| {
        let eig = Eigenstates::solve(cfg, cfg.system.g2d, &cfg.radial.windings)?;
        let mut table = String::from("l,mu\n");
        println!("{:>3}  {:>12}", "l", "mu");
        for p in &eig.profiles {
            run.write(&format!("profile-l{}.json", p.l), p.to_json().as_bytes())?;
            table.push_str(&format!("{},{}\n", p.l, p.mu));
            println!("{:>3}  {:>12.7}", p.l, p.mu);
        }
        run.write("mu.csv", table.as_bytes())?;
        if let Ok(params) = eig.fsm_params() {
            println!("U = {:.6e}, Δ = {:.6e}", params.u, params.delta);
        }
        Ok(0)
    })();
    run.finish(result)
}

fn cmd_evolve(cfg: &Config, out: &Path, inputs: &[PathBuf]) -> Result<i32, RunError> {
    let mut run = RunDir::create(out, "evolve", cfg, inputs)?;
    let result = (|| {
        let snap_dir = out.join("snapshots");
        fs::create_dir_all(&snap_dir).map_err(|e| RunError::output(&snap_dir, e))?;
        let meta = SnapshotMeta {
            g2d: cfg.system.g2d,
            ring_radius: cfg.system.ring_radius,
            omega_ext: cfg.system.omega_ext,
        };
        let kind = if cfg.evolve.write_fields { SnapshotKind::Field } else { SnapshotKind::Density };
        let mut snaps = SnapshotFileSink::new(&snap_dir, "snap", kind, meta);
        let obs_path = out.join("observables.csv");
        let mut obs = ObservablesCsvSink::create(&obs_path).map_err(|e| RunError::output(&obs_path, e.0))?;
        let spec = PointSpec {
            g2d: cfg.system.g2d,
            imbalance: cfg.state.imbalance,
            omega_ext: cfg.system.omega_ext,
        };
        let outcome = run_point(cfg, spec, &mut [&mut snaps, &mut obs]);
        // snapshots written before a failure stay listed
        for p in ringsense::gpe2d::EvolutionSink::outputs(&snaps)
            .iter()
            .chain(ringsense::gpe2d::EvolutionSink::outputs(&obs).iter())
        {
            if p.exists() {
                run.track(p)?;
            }
        }
        let outcome = outcome?;
        run.write("point.json", &json(&outcome.result))?;
        run.write("report.json", outcome.report.to_json().as_bytes())?;
        let r = &outcome.result;
        println!(
            "steps {}  Ω_GPE = {:.6e} ± {:.1e}  Ω_FSM = {:.6e}  rel. err {:.2e}  recovered g2d = {}",
            r.steps,
            r.omega_gpe,
            r.omega_gpe_stderr,
            r.omega_fsm,
            r.rel_err_omega,
            r.g2d_recovered.map_or("n/a".into(), |g| format!("{g:.6}"))
        );
        Ok(0)
    })();
    run.finish(result)
}

fn cmd_fsm(cfg: &Config, out: &Path, inputs: &[PathBuf]) -> Result<i32, RunError> {
    let mut run = RunDir::create(out, "fsm", cfg, inputs)?;
    let result = (|| {
        let params = resolve_fsm_params(cfg)?;
        let (report, traj) = run_fsm(cfg, &params)?;
        run.write("trajectory.csv", traj.to_csv().as_bytes())?;
        run.write("roots.json", &json(&report))?;
        println!("U = {:.6e}  Δ = {:.6e}  p+ = {}", report.u, report.delta, report.p_plus);
        for [re, im] in &report.roots {
            println!("  k = {re:+.3e} {im:+.9e}i");
        }
        println!(
            "all roots imaginary: {}  Ω_FSM = {:.6e}  Ω_root = {:.6e}",
            report.all_imaginary, report.omega_fsm, report.omega_root
        );
        Ok(0)
    })();
    run.finish(result)
}

fn expand_snapshots(paths: &[PathBuf]) -> Result<Vec<PathBuf>, RunError> {
    let mut out = Vec::new();
    for p in paths {
        if p.is_dir() {
            let mut found: Vec<PathBuf> = fs::read_dir(p)
                .map_err(|e| RunError::Input { path: p.display().to_string(), message: e.to_string() })?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|q| q.extension().is_some_and(|x| x == "bin"))
                .collect();
            found.sort();
            out.extend(found);
        } else {
            out.push(p.clone());
        }
    }
    if out.is_empty() {
        return Err(RunError::Usage("no snapshot files found".into()));
    }
    Ok(out)
}

/// `(t, node_angle)` pairs from an observables CSV.
pub fn read_node_angles(path: &Path) -> Result<(Vec<f64>, Vec<f64>), RunError> {
    let bad = |m: String| RunError::Input { path: path.display().to_string(), message: m };
    let text = fs::read_to_string(path).map_err(|e| bad(e.to_string()))?;
    parse_node_angles(&text).map_err(bad)
}

/// Rows with a non-finite angle (no visible node) are skipped.
pub fn parse_node_angles(text: &str) -> Result<(Vec<f64>, Vec<f64>), String> {
    let mut lines = text.lines();
    let header = lines.next().ok_or("empty file")?;
    if header.trim() != OBSERVABLES_HEADER {
        return Err(format!("expected header {OBSERVABLES_HEADER:?}"));
    }
    let cols = OBSERVABLES_HEADER.split(',').count();
    let (mut t, mut a) = (Vec::new(), Vec::new());
    for (i, line) in lines.enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != cols {
            return Err(format!("line {}: {} columns, expected {cols}", i + 2, fields.len()));
        }
        let num = |s: &str| s.trim().parse::<f64>().map_err(|e| format!("line {}: {e}", i + 2));
        let (ti, ai) = (num(fields[0])?, num(fields[cols - 1])?);
        if ai.is_finite() {
            t.push(ti);
            a.push(ai);
        }
    }
    Ok((t, a))
}

fn cmd_measure(
    cfg: &Config,
    snapshots: &[PathBuf],
    observables: Option<&Path>,
    out: Option<&Path>,
    inputs: &[PathBuf],
) -> Result<i32, RunError> {
    let files = expand_snapshots(snapshots)?;
    let mut images = Vec::with_capacity(files.len());
    for f in &files {
        let snap = read_snapshot_file(f).map_err(|e| RunError::Input { path: f.display().to_string(), message: e.to_string() })?;
        images.push(snap.density());
    }
    images.sort_by(|a, b| a.time.total_cmp(&b.time));
    let trace = match observables {
        Some(p) => {
            let (t, a) = read_node_angles(p)?;
            NodalTrace::from_angles(&t, &a, &cfg.measure.trace)?
        }
        None => ringsense::measurement::track_nodal_line(&images, &cfg.measure.trace)?,
    };
    let frames = images
        .iter()
        .map(|img| FrameEstimate::from_image(img, &cfg.measure))
        .collect::<Result<Vec<_>, _>>()?;
    let report = MeasurementReport::assemble(frames, trace, cfg.measure)?;
    if report.trace.short_span {
        eprintln!(
            "warning: the nodal line moved less than {} rad; Ω is poorly constrained, record longer",
            ringsense::measurement::MIN_TRACE_SPAN
        );
    }
    match out {
        Some(dir) => {
            let mut all_inputs = inputs.to_vec();
            all_inputs.extend(files.iter().cloned());
            all_inputs.extend(observables.map(Path::to_path_buf));
            let mut run = RunDir::create(dir, "measure", cfg, &all_inputs)?;
            let r = run.write("report.json", report.to_json().as_bytes()).map(|_| 0);
            run.finish(r)
        }
        None => {
            println!("{}", report.to_json());
            Ok(0)
        }
    }
}

fn cmd_sense(
    cfg: &Config,
    report_path: &Path,
    mode: SenseMode,
    out: Option<&Path>,
    inputs: &[PathBuf],
) -> Result<i32, RunError> {
    let bytes = fs::read(report_path)
        .map_err(|e| RunError::Input { path: report_path.display().to_string(), message: e.to_string() })?;
    let text = String::from_utf8_lossy(&bytes);
    let report = MeasurementReport::from_json(&text)
        .map_err(|e| RunError::Input { path: report_path.display().to_string(), message: e.to_string() })?;
    let digests = vec![digest(&bytes)];
    let estimate = sense(cfg, &report, mode, digests)?;
    match out {
        Some(dir) => {
            let mut run = RunDir::create(dir, "sense", cfg, inputs)?;
            let r = run.write("sensing.json", estimate.to_json().as_bytes()).map(|_| 0);
            run.finish(r)
        }
        None => {
            println!("{}", estimate.to_json());
            Ok(0)
        }
    }
}

fn feshbach(cfg: &Config) -> Result<ringsense::sensing::FeshbachParams, RunError> {
    cfg.sense
        .feshbach
        .ok_or_else(|| RunError::Usage("this mode needs [sense.feshbach] (background_a, resonance_b, width)".into()))
}

/// Applies one sensing mode to a report.
pub fn sense(
    cfg: &Config,
    report: &MeasurementReport,
    mode: SenseMode,
    digests: Vec<String>,
) -> Result<SensingEstimate, RunError> {
    let omega = Estimate { value: report.omega.value - cfg.system.omega_ext, stderr: report.omega.stderr };
    let g2d = || infer_g2d(omega, report.overlap_integral, report.delta, report.imbalance);
    let units = &cfg.units.physical;
    let to_a = |g: Estimate| -> Result<Estimate, RunError> {
        let scale = physical_from_g2d(1.0, units.atom_count, units.atom_mass, units.axial_trap_freq)?;
        Ok(Estimate { value: g.value * scale, stderr: g.stderr * scale.abs() })
    };
    let (kind, est) = match mode {
        SenseMode::G2d => (SensingKind::G2d, g2d()?),
        SenseMode::ScatteringLength => (SensingKind::ScatteringLength, to_a(g2d()?)?),
        SenseMode::Field => {
            let a = to_a(g2d()?)?;
            (SensingKind::MagneticField, feshbach_invert_estimate(a, &feshbach(cfg)?)?)
        }
        SenseMode::Rotation => {
            let predicted = match cfg.sense.omega_fsm {
                Some(w) => w,
                None => {
                    let u = cfg.system.g2d * report.overlap_integral.value;
                    omega_fsm(u, report.delta.value, report.imbalance.value)
                }
            };
            (SensingKind::ExternalRotation, infer_external_rotation(report.omega, Estimate::exact(predicted)))
        }
        SenseMode::Threshold => {
            let f = feshbach(cfg)?;
            let field = cfg
                .sense
                .field
                .ok_or_else(|| RunError::Usage("threshold mode needs sense.field (T)".into()))?;
            let s = &cfg.sense;
            let db = threshold_sensitivity(
                s.delta_omega,
                report.imbalance.value.abs(),
                report.overlap_integral.value,
                s.atom_count,
                s.aspect_ratio,
                s.sigma,
                feshbach_slope(field, &f)?.abs(),
            )?;
            (SensingKind::ThresholdField, Estimate::exact(db))
        }
    };
    Ok(SensingEstimate::new(kind, est, digests)?)
}

fn cmd_sweep(cfg: &Config, out: &Path) -> Result<i32, RunError> {
    let workers = resolve_workers(cfg)?;
    let total = cfg.sweep.g2d.len() * cfg.sweep.imbalance.len();
    let progress = |rec: &PointRecord, cached: bool| {
        let tag = if cached { "cached" } else if rec.ok() { "done" } else { "FAILED" };
        match (&rec.result, &rec.error) {
            (Some(r), _) => eprintln!(
                "[{}/{total}] g2d={} n={} {tag}: δΩ/Ω={:.2e} δg/g={}",
                rec.index + 1,
                rec.g2d,
                rec.imbalance,
                r.rel_err_omega,
                r.rel_err_g2d.map_or("n/a".into(), |e| format!("{e:.2e}"))
            ),
            (None, e) => eprintln!(
                "[{}/{total}] g2d={} n={} {tag}: {}",
                rec.index + 1,
                rec.g2d,
                rec.imbalance,
                e.as_deref().unwrap_or("unknown error")
            ),
        }
    };
    let summary = run_sweep(cfg, out, workers, &progress)?;
    let failed = summary.failed();
    eprintln!(
        "{} points ({} reused, {} failed) -> {}",
        summary.records.len(),
        summary.skipped,
        failed,
        summary.csv.display()
    );
    Ok(if failed > 0 { EXIT_PARTIAL } else { 0 })
}

#[derive(Debug, Serialize)]
struct UnitsOutput {
    g2d: f64,
    scattering_length: f64,
    scattering_length_bohr: f64,
    oscillator_length: f64,
    aspect_ratio: f64,
    u: f64,
    delta: f64,
    omega_fsm: f64,
    omega_fsm_hz: f64,
    peak_density: f64,
    validity: ringsense::units::ValidityReport,
    all_pass: bool,
}

fn cmd_units(cfg: &Config, g2d: Option<f64>) -> Result<i32, RunError> {
    let mut p = cfg.units.physical;
    let g = match g2d {
        Some(g) => {
            p.scattering_length = physical_from_g2d(g, p.atom_count, p.atom_mass, p.axial_trap_freq)?;
            g
        }
        None => g2d_from_physical(&p)?,
    };
    let eig = Eigenstates::solve(cfg, g, &[1, 3])?;
    let params = eig.fsm_params()?;
    let f1 = eig.get(1).expect("solved above");
    let max_f = f1.f.iter().copied().fold(0.0, f64::max);
    let n2 = peak_density(max_f * max_f, p.atom_count, p.oscillator_length());
    let n = cfg.state.imbalance;
    let w = omega_fsm(params.u, params.delta, n);
    let validity = validity_report(&p, &params, w, n2, &cfg.units.thresholds);
    let out = UnitsOutput {
        g2d: g,
        scattering_length: p.scattering_length,
        scattering_length_bohr: p.scattering_length / BOHR_RADIUS,
        oscillator_length: p.oscillator_length(),
        aspect_ratio: p.aspect_ratio(),
        u: params.u,
        delta: params.delta,
        omega_fsm: w,
        omega_fsm_hz: ringsense::units::frequency_to_si(w, p.radial_trap_freq)?.hz,
        peak_density: n2,
        all_pass: validity.all_pass(),
        validity,
    };
    println!("{}", serde_json::to_string_pretty(&out).expect("serializable"));
    Ok(0)
}
