use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::rotation::{RotationOperator, DEFAULT_MAX_ROTATION_PER_STEP};
use super::tridiag::CnLine;
use super::{ComplexField2D, Gpe2dError, Grid2D};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    RealTime,
    /// Gradient flow `∂Ψ/∂τ = -HΨ` with renormalization after every step.
    ImaginaryTime,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PropagationConfig {
    pub dt: f64,
    pub scheme: Scheme,
    /// Frame rotation rate in units of ω (positive = clockwise).
    pub omega_ext: f64,
    pub snapshot_stride: u64,
    pub observable_stride: u64,
    /// Cap on |Ω_ext·dt| (rad).
    pub max_rotation_per_step: f64,
}

impl Default for PropagationConfig {
    fn default() -> Self {
        Self {
            dt: 1e-3,
            scheme: Scheme::RealTime,
            omega_ext: 0.0,
            snapshot_stride: 1000,
            observable_stride: 100,
            max_rotation_per_step: DEFAULT_MAX_ROTATION_PER_STEP,
        }
    }
}

impl PropagationConfig {
    pub fn validate(&self) -> Result<(), Gpe2dError> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Gpe2dError::BadConfig(format!("dt must be positive, got {}", self.dt)));
        }
        if self.snapshot_stride < 1 || self.observable_stride < 1 {
            return Err(Gpe2dError::BadConfig("strides must be at least 1".into()));
        }
        if !self.omega_ext.is_finite() {
            return Err(Gpe2dError::BadConfig("omega_ext must be finite".into()));
        }
        let angle = (self.omega_ext * self.dt).abs();
        if angle >= self.max_rotation_per_step {
            return Err(Gpe2dError::RotationCapExceeded {
                angle,
                cap: self.max_rotation_per_step,
            });
        }
        Ok(())
    }
}

/// Reusable split-step integrator for one grid, potential and coupling.
pub struct Propagator {
    grid: Grid2D,
    g2d: f64,
    dt: f64,
    scheme: Scheme,
    omega_ext: f64,
    /// exp(-iV dt/2) in real time, exp(-V dτ/2) in imaginary time.
    potential_factor: Vec<Complex64>,
    sweep_x: CnLine,
    sweep_y: CnLine,
    rotation: Option<RotationOperator>,
    line_work: Vec<Complex64>,
    block_work: Vec<Complex64>,
    steps: u64,
}

impl Propagator {
    pub fn new(
        grid: Grid2D,
        potential: &[f64],
        g2d: f64,
        cfg: &PropagationConfig,
    ) -> Result<Self, Gpe2dError> {
        cfg.validate()?;
        if potential.len() != grid.len() {
            return Err(Gpe2dError::GridMismatch);
        }
        let half = 0.5 * cfg.dt;
        let (potential_factor, beta_unit) = match cfg.scheme {
            Scheme::RealTime => (
                potential
                    .iter()
                    .map(|&v| Complex64::from_polar(1.0, -v * half))
                    .collect(),
                Complex64::new(0.0, 1.0),
            ),
            Scheme::ImaginaryTime => (
                potential
                    .iter()
                    .map(|&v| Complex64::new((-v * half).exp(), 0.0))
                    .collect(),
                Complex64::new(1.0, 0.0),
            ),
        };
        let bx = beta_unit * (cfg.dt / (4.0 * grid.dx() * grid.dx()));
        let by = beta_unit * (cfg.dt / (4.0 * grid.dy() * grid.dy()));
        let rotation = if cfg.omega_ext != 0.0 && cfg.scheme == Scheme::RealTime {
            Some(RotationOperator::new(grid))
        } else {
            None
        };
        Ok(Self {
            grid,
            g2d,
            dt: cfg.dt,
            scheme: cfg.scheme,
            omega_ext: cfg.omega_ext,
            potential_factor,
            sweep_x: CnLine::new(grid.nx, bx),
            sweep_y: CnLine::new(grid.ny, by),
            rotation,
            line_work: vec![Complex64::new(0.0, 0.0); grid.nx],
            block_work: vec![Complex64::new(0.0, 0.0); grid.len()],
            steps: 0,
        })
    }

    pub fn grid(&self) -> &Grid2D {
        &self.grid
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn steps_taken(&self) -> u64 {
        self.steps
    }

    /// Diagonal factor exp(-i(V + g|Ψ|²)dt/2); returns Σ|Ψ|² before the
    /// update (unscaled by the cell area).
    fn diagonal_half_step(&self, values: &mut [Complex64]) -> f64 {
        let gh = self.g2d * 0.5 * self.dt;
        let mut sum = 0.0;
        match self.scheme {
            Scheme::RealTime => {
                for (v, pf) in values.iter_mut().zip(&self.potential_factor) {
                    let n = v.norm_sqr();
                    sum += n;
                    let (s, c) = (gh * n).sin_cos();
                    *v *= pf * Complex64::new(c, -s);
                }
            }
            Scheme::ImaginaryTime => {
                for (v, pf) in values.iter_mut().zip(&self.potential_factor) {
                    let n = v.norm_sqr();
                    sum += n;
                    *v *= pf.re * (-gh * n).exp();
                }
            }
        }
        sum
    }

    /// Advances `psi` by one step of `dt`.
    pub fn step(&mut self, psi: &mut ComplexField2D) -> Result<(), Gpe2dError> {
        if psi.grid != self.grid {
            return Err(Gpe2dError::GridMismatch);
        }
        let nx = self.grid.nx;
        let sum = self.diagonal_half_step(&mut psi.values);
        if !sum.is_finite() {
            return Err(Gpe2dError::NonFinite { step: self.steps });
        }
        for row in psi.values.chunks_exact_mut(nx) {
            self.sweep_x.apply(row, &mut self.line_work);
        }
        self.sweep_y
            .apply_columns(&mut psi.values, nx, &mut self.block_work);
        let sum = self.diagonal_half_step(&mut psi.values);
        if !sum.is_finite() {
            return Err(Gpe2dError::NonFinite { step: self.steps });
        }
        if let Some(rot) = self.rotation.as_mut() {
            rot.rotate(&mut psi.values, -self.omega_ext * self.dt);
        }
        if self.scheme == Scheme::ImaginaryTime {
            psi.normalize();
        }
        self.steps += 1;
        psi.time += self.dt;
        Ok(())
    }
}

/// One real-time split step. Builds a fresh [`Propagator`]; for repeated
/// stepping construct one and call [`Propagator::step`].
pub fn step_real_time(
    psi: &ComplexField2D,
    potential: &[f64],
    g2d: f64,
    cfg: &PropagationConfig,
) -> Result<ComplexField2D, Gpe2dError> {
    let cfg = PropagationConfig {
        scheme: Scheme::RealTime,
        ..*cfg
    };
    let mut prop = Propagator::new(psi.grid, potential, g2d, &cfg)?;
    let mut out = psi.clone();
    prop.step(&mut out)?;
    Ok(out)
}
