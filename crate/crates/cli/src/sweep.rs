//! Resumable parameter sweeps over `(g₂d, n₁±)`.
//!
//! Each point is written to `points/point-NNNN.json` as soon as it finishes.
//! A restarted sweep skips points whose file exists and matches the current
//! configuration, so an interrupted run converges to the same dataset as an
//! uninterrupted one.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::Config;
use crate::manifest::{sha256_hex, write_atomic, RunManifest, RunStatus};
use crate::pipeline::{run_point, PointResult, PointSpec, RunError, POINT_CSV_HEADER};

pub const POINT_SCHEMA: &str = "ringsense.sweep-point/1";
pub const WORKERS_ENV: &str = "RINGSENSE_WORKERS";
pub const SWEEP_CSV: &str = "sweep.csv";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub index: usize,
    pub g2d: f64,
    pub imbalance: f64,
}

/// `g₂d` varies slowest.
pub fn sweep_points(cfg: &Config) -> Vec<SweepPoint> {
    let mut out = Vec::new();
    for &g2d in &cfg.sweep.g2d {
        for &imbalance in &cfg.sweep.imbalance {
            out.push(SweepPoint { index: out.len(), g2d, imbalance });
        }
    }
    out
}

/// Identifies everything a point's result depends on.
pub fn point_digest(cfg: &Config, p: &SweepPoint) -> String {
    let mut c = cfg.clone();
    c.sweep = Default::default();
    c.system.g2d = p.g2d;
    c.state.imbalance = p.imbalance;
    let json = serde_json::to_string(&c).expect("configuration serializes");
    sha256_hex(json.as_bytes())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PointRecord {
    pub schema: String,
    pub index: usize,
    pub g2d: f64,
    pub imbalance: f64,
    pub digest: String,
    pub result: Option<PointResult>,
    pub error: Option<String>,
}

impl PointRecord {
    pub fn ok(&self) -> bool {
        self.result.is_some()
    }

    fn csv_row(&self) -> String {
        match &self.result {
            Some(r) => r.csv_row(self.index),
            None => {
                let blanks = POINT_CSV_HEADER.matches(',').count() - 3;
                format!("{},{},{},failed{}", self.index, self.g2d, self.imbalance, ",".repeat(blanks))
            }
        }
    }
}

pub fn point_path(dir: &Path, index: usize) -> PathBuf {
    dir.join("points").join(format!("point-{index:04}.json"))
}

pub fn report_path(dir: &Path, index: usize) -> PathBuf {
    dir.join("points").join(format!("point-{index:04}.report.json"))
}

fn load_completed(dir: &Path, cfg: &Config, p: &SweepPoint) -> Option<PointRecord> {
    let text = fs::read_to_string(point_path(dir, p.index)).ok()?;
    let rec: PointRecord = serde_json::from_str(&text).ok()?;
    let current = rec.schema == POINT_SCHEMA && rec.digest == point_digest(cfg, p) && rec.ok();
    // the report must still be there for the point to count as done
    (current && report_path(dir, p.index).exists()).then_some(rec)
}

pub fn resolve_workers(cfg: &Config) -> Result<usize, RunError> {
    match std::env::var(WORKERS_ENV) {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .map_err(|_| RunError::Usage(format!("{WORKERS_ENV}={v:?} is not a worker count"))),
        Err(_) => Ok(cfg.sweep.workers),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSummary {
    pub records: Vec<PointRecord>,
    pub skipped: usize,
    pub csv: PathBuf,
}

impl SweepSummary {
    pub fn failed(&self) -> usize {
        self.records.iter().filter(|r| !r.ok()).count()
    }
}

/// Runs every pending point on a pool of `workers` threads (0: all cores).
/// `on_point` sees each record as it completes.
pub fn run_sweep(
    cfg: &Config,
    dir: &Path,
    workers: usize,
    on_point: &(dyn Fn(&PointRecord, bool) + Sync),
) -> Result<SweepSummary, RunError> {
    fs::create_dir_all(dir.join("points")).map_err(|e| RunError::output(dir, e))?;
    // the worker count does not change results, so a resumed sweep may use another
    let mut recorded = cfg.clone();
    recorded.sweep.workers = 0;
    let config_json = serde_json::to_value(&recorded).expect("configuration serializes");
    let mut manifest = RunManifest::new("sweep", config_json);
    if let Ok(old) = RunManifest::read(dir) {
        if old.run_id != manifest.run_id {
            return Err(RunError::Usage(format!(
                "{} holds a different sweep (run {}); use another output directory",
                dir.display(),
                old.run_id
            )));
        }
        manifest.outputs = old.outputs;
    }
    manifest.status = RunStatus::Running;
    manifest.write(dir).map_err(|e| RunError::output(dir, e))?;

    let points = sweep_points(cfg);
    let mut done: Vec<Option<PointRecord>> = points.iter().map(|p| load_completed(dir, cfg, p)).collect();
    let skipped = done.iter().filter(|d| d.is_some()).count();
    for rec in done.iter().flatten() {
        on_point(rec, true);
    }
    let pending: Vec<SweepPoint> = points.iter().zip(&done).filter(|(_, d)| d.is_none()).map(|(p, _)| *p).collect();

    let manifest = Mutex::new(manifest);
    let run_one = |p: &SweepPoint| -> Result<PointRecord, RunError> {
        let mut point_cfg = cfg.clone();
        point_cfg.system.g2d = p.g2d;
        point_cfg.state.imbalance = p.imbalance;
        let spec = PointSpec { g2d: p.g2d, imbalance: p.imbalance, omega_ext: cfg.system.omega_ext };
        let (result, error) = match run_point(&point_cfg, spec, &mut []) {
            Ok(out) => {
                let rp = report_path(dir, p.index);
                write_atomic(&rp, out.report.to_json().as_bytes()).map_err(|e| RunError::output(&rp, e))?;
                (Some(out.result), None)
            }
            Err(e) => (None, Some(e.to_string())),
        };
        let rec = PointRecord {
            schema: POINT_SCHEMA.into(),
            index: p.index,
            g2d: p.g2d,
            imbalance: p.imbalance,
            digest: point_digest(cfg, p),
            result,
            error,
        };
        let path = point_path(dir, p.index);
        let text = serde_json::to_string_pretty(&rec).expect("record serializes");
        write_atomic(&path, text.as_bytes()).map_err(|e| RunError::output(&path, e))?;
        {
            let mut m = manifest.lock().unwrap_or_else(|e| e.into_inner());
            m.add_output(&path, dir).map_err(|e| RunError::output(&path, e))?;
            if rec.ok() {
                let rp = report_path(dir, p.index);
                m.add_output(&rp, dir).map_err(|e| RunError::output(&rp, e))?;
            }
            m.write(dir).map_err(|e| RunError::output(dir, e))?;
        }
        on_point(&rec, false);
        Ok(rec)
    };

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| RunError::Usage(format!("worker pool: {e}")))?;
    let fresh: Vec<Result<PointRecord, RunError>> = pool.install(|| pending.par_iter().map(run_one).collect());

    let mut manifest = manifest.into_inner().unwrap_or_else(|e| e.into_inner());
    let mut io_error = None;
    for r in fresh {
        match r {
            Ok(rec) => {
                let i = rec.index;
                done[i] = Some(rec);
            }
            Err(e) => io_error = io_error.or(Some(e)),
        }
    }
    if let Some(e) = io_error {
        manifest.status = RunStatus::Failed;
        manifest.message = Some(e.to_string());
        let _ = manifest.write(dir);
        return Err(e);
    }
    let records: Vec<PointRecord> = done.into_iter().map(|d| d.expect("every point ran")).collect();

    let mut csv = String::from(POINT_CSV_HEADER);
    csv.push('\n');
    for rec in &records {
        csv.push_str(&rec.csv_row());
        csv.push('\n');
    }
    let csv_path = dir.join(SWEEP_CSV);
    write_atomic(&csv_path, csv.as_bytes()).map_err(|e| RunError::output(&csv_path, e))?;
    manifest.add_output(&csv_path, dir).map_err(|e| RunError::output(&csv_path, e))?;
    let failed = records.iter().filter(|r| !r.ok()).count();
    manifest.status = if failed == 0 { RunStatus::Complete } else { RunStatus::Partial };
    manifest.message = (failed > 0).then(|| format!("{failed} of {} points failed", records.len()));
    manifest.write(dir).map_err(|e| RunError::output(dir, e))?;
    Ok(SweepSummary { records, skipped, csv: csv_path })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::Preset;

    #[test]
    fn points_enumerate_g_slowest() {
        let c = Config::preset(Preset::Desk);
        let p = sweep_points(&c);
        assert_eq!(p.len(), 12);
        assert_eq!((p[0].g2d, p[0].imbalance), (0.5, 0.2));
        assert_eq!((p[1].g2d, p[1].imbalance), (0.5, 0.4));
        assert_eq!((p[11].g2d, p[11].imbalance), (4.0, 0.6));
        assert!(p.iter().enumerate().all(|(i, q)| q.index == i));
    }

    #[test]
    fn digest_ignores_sweep_lists_but_not_physics() {
        let c = Config::preset(Preset::Desk);
        let p = sweep_points(&c)[4];
        let mut c2 = c.clone();
        c2.sweep.workers = 7;
        c2.sweep.g2d.push(8.0);
        assert_eq!(point_digest(&c, &p), point_digest(&c2, &p));
        c2.evolve.dt = 1e-3;
        assert_ne!(point_digest(&c, &p), point_digest(&c2, &p));
    }

    #[test]
    fn failed_rows_keep_the_column_count() {
        let rec = PointRecord {
            schema: POINT_SCHEMA.into(),
            index: 3,
            g2d: 1.0,
            imbalance: 0.2,
            digest: String::new(),
            result: None,
            error: Some("boom".into()),
        };
        let cols = POINT_CSV_HEADER.split(',').count();
        assert_eq!(rec.csv_row().split(',').count(), cols);
    }
}
