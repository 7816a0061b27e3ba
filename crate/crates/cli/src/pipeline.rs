//! The computations behind each subcommand, independent of argument parsing
//! and file layout.

use ringsense::fsm::{
    characteristic_roots, integrate_fsm, omega_fsm, omega_from_root, FsmError, FsmIntegrator, FsmParams,
    FsmState, FsmTrajectory,
};
use ringsense::gpe2d::{
    evolve, CollectingSink, ComplexField2D, EvolutionSink, EvolutionSummary, EvolveError, Gpe2dError, Grid2D,
    ObservableRow, PropagationConfig, RadialGrid, RadialSolverConfig, RingSystem, Scheme, SnapshotError,
    DEFAULT_MAX_ROTATION_PER_STEP,
};
use ringsense::measurement::{
    coherence_frequency, FrameEstimate, MeasurementError, MeasurementReport, NodalTrace,
};
use ringsense::modes::{prepare_superposition, ModeBasis, ModesError, RadialProfile};
use ringsense::sensing::{infer_external_rotation, infer_g2d, Estimate, SensingError};
use ringsense::units::UnitsError;
use ringsense::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::{Config, ConfigError};

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {message}")]
    Input { path: String, message: String },
    #[error("writing {path}: {source}")]
    Output { path: String, source: std::io::Error },
    #[error(transparent)]
    Gpe(#[from] Gpe2dError),
    #[error(transparent)]
    Evolve(#[from] EvolveError),
    #[error(transparent)]
    Modes(#[from] ModesError),
    #[error(transparent)]
    Fsm(#[from] FsmError),
    #[error(transparent)]
    Measurement(#[from] MeasurementError),
    #[error(transparent)]
    Sensing(#[from] SensingError),
    #[error(transparent)]
    Units(#[from] UnitsError),
    #[error(transparent)]
    Snapshot(#[from] SnapshotError),
}

impl RunError {
    /// 1 for bad usage, configuration or input files, 2 for numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) | RunError::Usage(_) | RunError::Input { .. } | RunError::Snapshot(_) => 1,
            _ => 2,
        }
    }

    pub fn output(path: &std::path::Path, source: std::io::Error) -> Self {
        RunError::Output { path: path.display().to_string(), source }
    }
}

pub fn p_plus_minus(imbalance: f64) -> (f64, f64) {
    (0.5 * (1.0 + imbalance), 0.5 * (1.0 - imbalance))
}

/// Radial eigenstates at one interaction strength.
#[derive(Debug, Clone, PartialEq)]
pub struct Eigenstates {
    pub g2d: f64,
    pub profiles: Vec<RadialProfile>,
}

impl Eigenstates {
    pub fn solve(cfg: &Config, g2d: f64, windings: &[u32]) -> Result<Self, RunError> {
        let r = &cfg.radial;
        let ring = cfg.system.ring_radius;
        let solver = RadialSolverConfig {
            dtau: r.dtau,
            tolerance: r.tolerance,
            max_iterations: r.max_iterations,
            margin: r.margin,
        };
        let profiles = windings
            .iter()
            .map(|&l| {
                let grid = RadialGrid::covering(ring, r.margin, r.step)?;
                ringsense::gpe2d::solve_radial_eigenstate(l, ring, g2d, grid, &solver)
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self { g2d, profiles })
    }

    pub fn get(&self, l: u32) -> Option<&RadialProfile> {
        self.profiles.iter().find(|p| p.l == l)
    }

    fn require(&self, l: u32) -> Result<&RadialProfile, RunError> {
        self.get(l)
            .ok_or_else(|| RunError::Usage(format!("no l = {l} eigenstate; add it to radial.windings")))
    }

    /// `U = g ∫f₁⁴`, `Δ = μ₃ - μ₁`.
    pub fn fsm_params(&self) -> Result<FsmParams, RunError> {
        let f1 = self.require(1)?;
        let f3 = self.require(3)?;
        Ok(ringsense::fsm::fsm_params(f1, self.g2d, f1.mu, f3.mu)?)
    }
}

/// Four-state parameters for the `fsm` command: configured values where
/// given, eigenstate-derived ones otherwise.
pub fn resolve_fsm_params(cfg: &Config) -> Result<FsmParams, RunError> {
    let (u, delta) = match (cfg.fsm.u, cfg.fsm.delta) {
        (Some(u), Some(d)) => (u, d),
        (u, d) => {
            let p = Eigenstates::solve(cfg, cfg.system.g2d, &[1, 3])?.fsm_params()?;
            (u.unwrap_or(p.u), d.unwrap_or(p.delta))
        }
    };
    // only the gap enters the dynamics, so anchor μ₁ at zero
    Ok(FsmParams::new(u, 0.0, delta)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FsmReport {
    pub u: f64,
    pub delta: f64,
    pub p_plus: f64,
    pub p_minus: f64,
    /// `[re, im]` of each root of the characteristic cubic, by modulus.
    pub roots: Vec<[f64; 2]>,
    pub all_imaginary: bool,
    pub omega_fsm: f64,
    pub omega_root: f64,
    /// Rotation rate from the integrated coherence, `arg ρ ∝ 2Ωt`.
    pub omega_trajectory: Option<f64>,
    pub max_norm_drift: f64,
}

pub fn run_fsm(cfg: &Config, p: &FsmParams) -> Result<(FsmReport, FsmTrajectory), RunError> {
    let (pp, pm) = p_plus_minus(cfg.state.imbalance);
    let integ = FsmIntegrator { dt: cfg.fsm.dt, record_stride: cfg.fsm.record_stride, ..FsmIntegrator::default() };
    let mut s0 = FsmState::imbalanced(pp, pm);
    s0.a[1] *= Complex64::from_polar(1.0, cfg.state.alpha0);
    let traj = integrate_fsm(&s0, p, cfg.fsm.t_final, &integ)?;
    let roots = characteristic_roots(p.u, p.delta, pp, pm, cfg.fsm.cubic_form);
    let times = traj.times();
    let omega_trajectory = coherence_frequency(&times, &traj.coherences()).ok().map(|w| 0.5 * w);
    let n0 = s0.norm_sqr();
    let max_norm_drift = traj.states.iter().map(|s| (s.norm_sqr() - n0).abs()).fold(0.0, f64::max);
    let report = FsmReport {
        u: p.u,
        delta: p.delta,
        p_plus: pp,
        p_minus: pm,
        roots: roots.roots.iter().map(|k| [k.re, k.im]).collect(),
        all_imaginary: roots.all_imaginary(1e-9),
        omega_fsm: omega_fsm(p.u, p.delta, pp - pm),
        omega_root: omega_from_root(roots.k0),
        omega_trajectory,
        max_norm_drift,
    };
    Ok((report, traj))
}

/// One `(g₂d, n₁±, Ω_ext)` simulation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PointSpec {
    pub g2d: f64,
    pub imbalance: f64,
    pub omega_ext: f64,
}

/// Everything needed to start a propagation.
pub struct Prepared {
    pub eigen: Eigenstates,
    pub params: FsmParams,
    pub system: RingSystem,
    pub psi0: ComplexField2D,
    pub basis: ModeBasis,
    pub prop: PropagationConfig,
    pub t_final: f64,
}

pub fn prepare(cfg: &Config, spec: PointSpec) -> Result<Prepared, RunError> {
    let eigen = Eigenstates::solve(cfg, spec.g2d, &[1, 3])?;
    let params = eigen.fsm_params()?;
    let f1 = eigen.require(1)?;
    let grid = Grid2D::square(cfg.grid.n, cfg.grid.extent)?;
    let system = RingSystem::new(grid, cfg.system.ring_radius, spec.g2d)?;
    let (pp, pm) = p_plus_minus(spec.imbalance);
    let psi0 = prepare_superposition(pp, pm, f1, grid, cfg.state.alpha0)?;
    let basis = ModeBasis::four_state(f1, grid)?;
    let e = &cfg.evolve;
    let predicted = omega_fsm(params.u, params.delta, spec.imbalance) + spec.omega_ext;
    let t_final = e.t_final.unwrap_or_else(|| {
        let turn = if predicted.abs() > 0.0 { e.min_rotation / predicted.abs() } else { 0.0 };
        turn.max(e.min_time)
    });
    let steps = ((t_final / e.dt) - 1e-9).ceil().max(1.0) as u64;
    let snapshot_stride = e
        .snapshot_stride
        .unwrap_or_else(|| (steps as f64 / (e.images.max(2) - 1) as f64).ceil().max(1.0) as u64);
    let prop = PropagationConfig {
        dt: e.dt,
        scheme: Scheme::RealTime,
        omega_ext: spec.omega_ext,
        snapshot_stride,
        observable_stride: e.observable_stride,
        max_rotation_per_step: DEFAULT_MAX_ROTATION_PER_STEP,
    };
    prop.validate()?;
    Ok(Prepared { eigen, params, system, psi0, basis, prop, t_final })
}

/// Per-point results; the row of a sweep table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointResult {
    pub g2d: f64,
    pub imbalance: f64,
    pub omega_ext: f64,
    pub t_final: f64,
    pub steps: u64,
    pub mu1: f64,
    pub mu3: f64,
    pub u: f64,
    pub delta: f64,
    /// Leading-order prediction `U n / (2(1 + U/Δ))`.
    pub omega_fsm: f64,
    /// From the smallest root of the characteristic cubic.
    pub omega_root: f64,
    /// Fitted nodal-line rotation rate.
    pub omega_gpe: f64,
    pub omega_gpe_stderr: f64,
    /// Half the frequency of the projected coherence `a₊a₋*`.
    pub omega_coherence: Option<f64>,
    /// `|Ω_FSM + Ω_ext - Ω_GPE| / |Ω_GPE|`
    pub rel_err_omega: f64,
    pub measured_imbalance: f64,
    pub measured_overlap: f64,
    pub measured_delta: f64,
    pub g2d_recovered: Option<f64>,
    pub g2d_recovered_stderr: Option<f64>,
    pub rel_err_g2d: Option<f64>,
    pub recovery_error: Option<String>,
    /// `Ω_GPE - Ω_FSM`, with `Ω_FSM` from the true parameters.
    pub omega_ext_recovered: f64,
    pub omega_ext_recovered_stderr: f64,
    /// Largest `|p_GPE - p_FSM| / p_FSM` of the `l = ±1` populations.
    pub population_discrepancy: f64,
    pub max_norm_drift: f64,
    pub max_relative_energy_drift: f64,
    pub short_span: bool,
}

pub struct PointOutcome {
    pub result: PointResult,
    pub report: MeasurementReport,
    pub rows: Vec<ObservableRow>,
    pub summary: EvolutionSummary,
}

/// Nodal trace from the observable rows, skipping frames without a fringe.
pub fn trace_from_rows(rows: &[ObservableRow], cfg: &Config) -> Result<NodalTrace, RunError> {
    let (times, angles): (Vec<f64>, Vec<f64>) = rows
        .iter()
        .filter(|r| r.node_angle.is_finite())
        .map(|r| (r.t, r.node_angle))
        .unzip();
    Ok(NodalTrace::from_angles(&times, &angles, &cfg.measure.trace)?)
}

/// Largest relative deviation of the projected `l = ±1` populations from a
/// four-state trajectory sampled at the same times.
pub fn population_discrepancy(
    rows: &[ObservableRow],
    params: &FsmParams,
    imbalance: f64,
    alpha0: f64,
    row_spacing: f64,
    fsm_dt: f64,
) -> Result<f64, RunError> {
    let Some(last) = rows.last() else { return Ok(0.0) };
    let t0 = rows[0].t;
    let sub = (row_spacing / fsm_dt).ceil().max(1.0);
    let integ = FsmIntegrator { dt: row_spacing / sub, record_stride: sub as u64, ..FsmIntegrator::default() };
    let (pp, pm) = p_plus_minus(imbalance);
    let mut s0 = FsmState::imbalanced(pp, pm);
    s0.a[1] *= Complex64::from_polar(1.0, alpha0);
    s0.t = t0;
    let traj = integrate_fsm(&s0, params, last.t - t0, &integ)?;
    let mut worst = 0.0f64;
    for (row, s) in rows.iter().zip(&traj.states) {
        if (row.t - s.t).abs() > 1e-6 * row_spacing.max(1.0) {
            continue;
        }
        let [fp, fm, _, _] = s.populations();
        for (g, f) in [(row.p1p, fp), (row.p1m, fm)] {
            if f > 0.0 {
                worst = worst.max((g - f).abs() / f);
            }
        }
    }
    Ok(worst)
}

/// Evolves one point, then runs the image-only protocol on its output.
pub fn run_point(
    cfg: &Config,
    spec: PointSpec,
    extra_sinks: &mut [&mut dyn EvolutionSink],
) -> Result<PointOutcome, RunError> {
    let prep = prepare(cfg, spec)?;
    let mut collect = CollectingSink::with_densities();
    let summary = {
        let mut sinks: Vec<&mut dyn EvolutionSink> = vec![&mut collect];
        sinks.extend(extra_sinks.iter_mut().map(|s| &mut **s as &mut dyn EvolutionSink));
        evolve(&prep.system, prep.psi0.clone(), &prep.prop, prep.t_final, Some(&prep.basis), &mut sinks)?
    };
    let rows = collect.rows;
    let trace = trace_from_rows(&rows, cfg)?;
    let frames = collect
        .densities
        .iter()
        .map(|img| FrameEstimate::from_image(img, &cfg.measure))
        .collect::<Result<Vec<_>, _>>()?;
    let report = MeasurementReport::assemble(frames, trace, cfg.measure)?;

    let p = prep.params;
    let w_fsm = omega_fsm(p.u, p.delta, spec.imbalance);
    let (pp, pm) = p_plus_minus(spec.imbalance);
    let w_root = omega_from_root(characteristic_roots(p.u, p.delta, pp, pm, cfg.fsm.cubic_form).k0);
    let w_gpe = report.omega;
    let times: Vec<f64> = rows.iter().map(|r| r.t).collect();
    let rho: Vec<Complex64> = rows.iter().map(|r| Complex64::new(r.re_coh, r.im_coh)).collect();
    let omega_coherence = coherence_frequency(&times, &rho).ok().map(|w| 0.5 * w);

    // the frame rotation is known in the laboratory, so the protocol removes it
    let intrinsic = Estimate { value: w_gpe.value - spec.omega_ext, stderr: w_gpe.stderr };
    let recovered = infer_g2d(intrinsic, report.overlap_integral, report.delta, report.imbalance);
    let (g_rec, g_err, rel_g, rec_msg) = match recovered {
        Ok(g) => {
            let rel = (spec.g2d != 0.0).then(|| ((g.value - spec.g2d) / spec.g2d).abs());
            (Some(g.value), Some(g.stderr), rel, None)
        }
        Err(e) => (None, None, None, Some(e.to_string())),
    };
    let ext = infer_external_rotation(w_gpe, Estimate::exact(w_fsm));
    let row_spacing = cfg.evolve.observable_stride as f64 * cfg.evolve.dt;
    let discrepancy =
        population_discrepancy(&rows, &p, spec.imbalance, cfg.state.alpha0, row_spacing, cfg.fsm.dt)?;

    let f1 = prep.eigen.require(1)?;
    let f3 = prep.eigen.require(3)?;
    let result = PointResult {
        g2d: spec.g2d,
        imbalance: spec.imbalance,
        omega_ext: spec.omega_ext,
        t_final: prep.t_final,
        steps: summary.steps,
        mu1: f1.mu,
        mu3: f3.mu,
        u: p.u,
        delta: p.delta,
        omega_fsm: w_fsm,
        omega_root: w_root,
        omega_gpe: w_gpe.value,
        omega_gpe_stderr: w_gpe.stderr,
        omega_coherence,
        rel_err_omega: ((w_fsm + spec.omega_ext - w_gpe.value) / w_gpe.value).abs(),
        measured_imbalance: report.imbalance.value,
        measured_overlap: report.overlap_integral.value,
        measured_delta: report.delta.value,
        g2d_recovered: g_rec,
        g2d_recovered_stderr: g_err,
        rel_err_g2d: rel_g,
        recovery_error: rec_msg,
        omega_ext_recovered: ext.value,
        omega_ext_recovered_stderr: ext.stderr,
        population_discrepancy: discrepancy,
        max_norm_drift: summary.max_norm_drift,
        max_relative_energy_drift: summary.max_relative_energy_drift,
        short_span: report.trace.short_span,
    };
    Ok(PointOutcome { result, report, rows, summary })
}

pub const POINT_CSV_HEADER: &str = "index,g2d,imbalance,status,omega_gpe,omega_gpe_stderr,omega_fsm,omega_root,\
rel_err_omega,g2d_recovered,g2d_recovered_stderr,rel_err_g2d,mu1,mu3,u,delta,measured_imbalance,\
measured_overlap,measured_delta,population_discrepancy,t_final,steps";

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

impl PointResult {
    pub fn csv_row(&self, index: usize) -> String {
        format!(
            "{index},{},{},ok,{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            self.g2d,
            self.imbalance,
            self.omega_gpe,
            self.omega_gpe_stderr,
            self.omega_fsm,
            self.omega_root,
            self.rel_err_omega,
            opt(self.g2d_recovered),
            opt(self.g2d_recovered_stderr),
            opt(self.rel_err_g2d),
            self.mu1,
            self.mu3,
            self.u,
            self.delta,
            self.measured_imbalance,
            self.measured_overlap,
            self.measured_delta,
            self.population_discrepancy,
            self.t_final,
            self.steps
        )
    }
}
