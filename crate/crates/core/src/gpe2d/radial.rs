//! Stationary radial states `Ψ = f_l(r) e^{ilφ}` of the ring trap.
//!
//! The radial Hamiltonian
//! `H_l f = -½ (1/r)(r f')' + [½(r-R)² + l²/(2r²) + g f²] f`
//! is discretized in flux form on the cell-centred grid `r_i = (i+½)h`, which
//! makes it symmetric in the weighted inner product `2π h Σ r_i f_i g_i`. The
//! ground state of each winding sector is found by backward-Euler imaginary
//! time relaxation with the density frozen over each iteration.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use super::Gpe2dError;
use crate::modes::RadialProfile;

/// Uniform cell-centred radial grid, `r_i = (i+½)h`, `r_max = n·h`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadialGrid {
    pub n: usize,
    pub h: f64,
}

impl RadialGrid {
    pub fn new(n: usize, h: f64) -> Result<Self, Gpe2dError> {
        if n < 16 || !(h.is_finite() && h > 0.0) {
            return Err(Gpe2dError::BadConfig(format!(
                "radial grid needs n ≥ 16 and h > 0, got n={n}, h={h}"
            )));
        }
        Ok(Self { n, h })
    }

    /// Grid with spacing `h` reaching `ring_radius + margin`.
    pub fn covering(ring_radius: f64, margin: f64, h: f64) -> Result<Self, Gpe2dError> {
        let n = ((ring_radius + margin) / h).ceil() as usize + 1;
        Self::new(n, h)
    }

    pub fn r(&self, i: usize) -> f64 {
        (i as f64 + 0.5) * self.h
    }

    pub fn r_max(&self) -> f64 {
        self.n as f64 * self.h
    }

    pub fn samples(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.r(i)).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadialSolverConfig {
    /// Imaginary-time step of the backward-Euler iteration.
    pub dtau: f64,
    /// Converged when μ changes by less than this between iterations.
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Required coverage beyond the ring radius.
    pub margin: f64,
}

impl Default for RadialSolverConfig {
    fn default() -> Self {
        Self {
            dtau: 1.0,
            tolerance: 1e-10,
            max_iterations: 20_000,
            margin: 6.0,
        }
    }
}

/// Tridiagonal pieces of the discrete kinetic + trap operator for one l.
#[derive(Debug, Clone)]
pub(crate) struct RadialOperator {
    pub(crate) grid: RadialGrid,
    lower: Vec<f64>,
    diag: Vec<f64>,
    upper: Vec<f64>,
    pub(crate) r: Vec<f64>,
}

impl RadialOperator {
    pub(crate) fn new(grid: RadialGrid, l: u32, ring_radius: f64) -> Self {
        let h2 = grid.h * grid.h;
        let l2 = f64::from(l * l);
        let r = grid.samples();
        let mut lower = Vec::with_capacity(grid.n);
        let mut diag = Vec::with_capacity(grid.n);
        let mut upper = Vec::with_capacity(grid.n);
        for (i, &ri) in r.iter().enumerate() {
            let rp = ri + 0.5 * grid.h;
            let rm = if i == 0 { 0.0 } else { ri - 0.5 * grid.h };
            let d = ri - ring_radius;
            lower.push(-0.5 * rm / (ri * h2));
            upper.push(-0.5 * rp / (ri * h2));
            diag.push(0.5 * (rp + rm) / (ri * h2) + 0.5 * d * d + 0.5 * l2 / (ri * ri));
        }
        Self { grid, lower, diag, upper, r }
    }

    /// (T + V_eff) f
    fn apply(&self, f: &[f64]) -> Vec<f64> {
        let n = f.len();
        (0..n)
            .map(|i| {
                let mut s = self.diag[i] * f[i];
                if i > 0 {
                    s += self.lower[i] * f[i - 1];
                }
                if i + 1 < n {
                    s += self.upper[i] * f[i + 1];
                }
                s
            })
            .collect()
    }

    /// 2π h Σ r f²
    pub(crate) fn norm_sqr(&self, f: &[f64]) -> f64 {
        2.0 * PI * self.grid.h * self.r.iter().zip(f).map(|(r, v)| r * v * v).sum::<f64>()
    }

    /// Returns (μ, E) for a normalized profile.
    pub(crate) fn functionals(&self, f: &[f64], g2d: f64) -> (f64, f64) {
        let hf = self.apply(f);
        let w = 2.0 * PI * self.grid.h;
        let (mut lin, mut quartic) = (0.0, 0.0);
        for i in 0..f.len() {
            lin += self.r[i] * f[i] * hf[i];
            quartic += self.r[i] * f[i].powi(4);
        }
        let (lin, quartic) = (lin * w, quartic * w);
        (lin + g2d * quartic, lin + 0.5 * g2d * quartic)
    }

    /// Solves (1 + dτ(T + V_eff + g f_old²)) f_new = f_old.
    fn backward_euler(&self, f: &[f64], g2d: f64, dtau: f64) -> Vec<f64> {
        let n = f.len();
        let mut cprime = vec![0.0; n];
        let mut y = vec![0.0; n];
        for i in 0..n {
            let b = 1.0 + dtau * (self.diag[i] + g2d * f[i] * f[i]);
            let a = dtau * self.lower[i];
            let c = dtau * self.upper[i];
            let (cp, yp) = if i > 0 { (cprime[i - 1], y[i - 1]) } else { (0.0, 0.0) };
            let pivot = b - a * cp;
            cprime[i] = c / pivot;
            y[i] = (f[i] - a * yp) / pivot;
        }
        for i in (0..n - 1).rev() {
            y[i] -= cprime[i] * y[i + 1];
        }
        y
    }
}

pub(crate) fn radial_operator(grid: RadialGrid, l: u32, ring_radius: f64) -> RadialOperator {
    RadialOperator::new(grid, l, ring_radius)
}

/// Iteration state of the radial imaginary-time relaxation; exposed so that
/// callers can observe the energy after every iteration.
pub struct RadialRelaxation {
    op: RadialOperator,
    l: u32,
    g2d: f64,
    dtau: f64,
    f: Vec<f64>,
    mu: f64,
    energy: f64,
    iterations: usize,
}

impl RadialRelaxation {
    pub fn new(
        l: u32,
        ring_radius: f64,
        g2d: f64,
        grid: RadialGrid,
        cfg: &RadialSolverConfig,
    ) -> Result<Self, Gpe2dError> {
        if grid.r_max() <= ring_radius + cfg.margin {
            return Err(Gpe2dError::RadialGridTooShort {
                r_max: grid.r_max(),
                radius: ring_radius,
                margin: cfg.margin,
            });
        }
        if !(cfg.dtau.is_finite() && cfg.dtau > 0.0) {
            return Err(Gpe2dError::BadConfig("dtau must be positive".into()));
        }
        let op = RadialOperator::new(grid, l, ring_radius);
        let mut f: Vec<f64> = op
            .r
            .iter()
            .map(|&r| (-(r - ring_radius).powi(2) / 2.0).exp())
            .collect();
        let s = 1.0 / op.norm_sqr(&f).sqrt();
        f.iter_mut().for_each(|v| *v *= s);
        let (mu, energy) = op.functionals(&f, g2d);
        Ok(Self {
            op,
            l,
            g2d,
            dtau: cfg.dtau,
            f,
            mu,
            energy,
            iterations: 0,
        })
    }

    /// One backward-Euler step plus renormalization; returns |Δμ|.
    pub fn iterate(&mut self) -> f64 {
        let mut next = self.op.backward_euler(&self.f, self.g2d, self.dtau);
        let s = 1.0 / self.op.norm_sqr(&next).sqrt();
        next.iter_mut().for_each(|v| *v *= s);
        self.f = next;
        let (mu, energy) = self.op.functionals(&self.f, self.g2d);
        let change = (mu - self.mu).abs();
        self.mu = mu;
        self.energy = energy;
        self.iterations += 1;
        change
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn energy(&self) -> f64 {
        self.energy
    }

    pub fn iterations(&self) -> usize {
        self.iterations
    }

    pub fn profile(&self) -> RadialProfile {
        RadialProfile {
            r: self.op.r.clone(),
            f: self.f.iter().map(|v| v.abs()).collect(),
            l: self.l,
            mu: self.mu,
        }
    }
}

/// Ground state of the winding-`l` sector: `f_l ≥ 0` with
/// `2π∫f² r dr = 1` and its chemical potential μ_l.
pub fn solve_radial_eigenstate(
    l: u32,
    ring_radius: f64,
    g2d: f64,
    grid: RadialGrid,
    cfg: &RadialSolverConfig,
) -> Result<RadialProfile, Gpe2dError> {
    let mut relax = RadialRelaxation::new(l, ring_radius, g2d, grid, cfg)?;
    let mut change = f64::INFINITY;
    while relax.iterations() < cfg.max_iterations {
        change = relax.iterate();
        if change < cfg.tolerance {
            return Ok(relax.profile());
        }
    }
    Err(Gpe2dError::NoConvergence {
        iterations: relax.iterations(),
        residual: change,
    })
}
