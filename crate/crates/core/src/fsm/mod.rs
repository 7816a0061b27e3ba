//! Reduced coupled-mode models of the ring condensate.
//!
//! The four-state model keeps the `|1,±⟩` and `|3,±⟩` modes, all sharing one
//! radial profile `f₀`. Its Hamiltonian depends on the state through the
//! density-matrix elements `ρ_ij = a_i a*_j`, so the equations of motion are
//! nonlinear and the matrix is rebuilt at every Runge–Kutta stage.

mod coherence;
mod general;
mod roots;

pub use coherence::{coherence_rhs, integrate_coherences, CoherenceTriple};
pub use general::{general_rhs, integrate_general, GeneralModel};
pub use roots::{characteristic_roots, omega_fsm, omega_from_root, CharacteristicRoots, CubicForm};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::modes::RadialProfile;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FsmError {
    #[error("Δ = μ₃ - μ₁ must be positive, got {0}")]
    NonPositiveGap(f64),
    #[error("{0} must be finite")]
    NotFinite(&'static str),
    #[error("time step must satisfy 0 < dt ≤ 1e-2, got {0}")]
    BadStep(f64),
    #[error("norm drifted by {drift:e} at t = {t} (tolerance {tolerance:e})")]
    NormDrift { t: f64, drift: f64, tolerance: f64 },
    #[error("truncation L must be odd and ≥ 1, got {0}")]
    BadTruncation(i32),
    #[error("no chemical potential for |l| = {0}")]
    MissingMu(u32),
}

/// Parameters of the four-state model (energies in ħω).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FsmParams {
    pub u: f64,
    pub mu1: f64,
    pub mu3: f64,
    pub delta: f64,
}

impl FsmParams {
    pub fn new(u: f64, mu1: f64, mu3: f64) -> Result<Self, FsmError> {
        for (name, v) in [("U", u), ("mu1", mu1), ("mu3", mu3)] {
            if !v.is_finite() {
                return Err(FsmError::NotFinite(name));
            }
        }
        let delta = mu3 - mu1;
        if delta <= 0.0 {
            return Err(FsmError::NonPositiveGap(delta));
        }
        Ok(Self { u, mu1, mu3, delta })
    }

    /// `U/Δ < 1`
    pub fn weak_regime(&self) -> bool {
        self.u.abs() / self.delta < 1.0
    }
}

/// `U = g₂d ∫d²r f₀⁴`, `Δ = μ₃ - μ₁`.
pub fn fsm_params(profile: &RadialProfile, g2d: f64, mu1: f64, mu3: f64) -> Result<FsmParams, FsmError> {
    FsmParams::new(g2d * profile.quartic_integral(), mu1, mu3)
}

/// Amplitudes in the order `(1+, 1-, 3+, 3-)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FsmState {
    pub a: [Complex64; 4],
    pub t: f64,
}

impl FsmState {
    pub fn new(a1p: Complex64, a1m: Complex64, a3p: Complex64, a3m: Complex64) -> Self {
        Self { a: [a1p, a1m, a3p, a3m], t: 0.0 }
    }

    /// `√p₊ |1,+⟩ + √p₋ |1,-⟩`
    pub fn imbalanced(p_plus: f64, p_minus: f64) -> Self {
        let z = Complex64::new(0.0, 0.0);
        Self::new(
            Complex64::new(p_plus.sqrt(), 0.0),
            Complex64::new(p_minus.sqrt(), 0.0),
            z,
            z,
        )
    }

    pub fn norm_sqr(&self) -> f64 {
        self.a.iter().map(|c| c.norm_sqr()).sum()
    }

    pub fn populations(&self) -> [f64; 4] {
        self.a.map(|c| c.norm_sqr())
    }

    /// `ρ_{1+1-} = a₁₊ a*₁₋`
    pub fn coherence(&self) -> Complex64 {
        self.a[0] * self.a[1].conj()
    }
}

pub type Matrix4 = [[Complex64; 4]; 4];

/// The state-dependent four-state Hamiltonian with `ρ_ij = a_i a*_j`.
pub fn build_hamiltonian(s: &FsmState, p: &FsmParams) -> Matrix4 {
    let [a1p, a1m, a3p, a3m] = s.a;
    let r = |x: Complex64, y: Complex64| x * y.conj();
    let r1p1m = r(a1p, a1m);
    let r1p3p = r(a1p, a3p);
    let r1m3m = r(a1m, a3m);
    let r1p3m = r(a1p, a3m);
    let r1m3p = r(a1m, a3p);
    let r3p3m = r(a3p, a3m);

    let x = r1p1m + r1p3p.conj() + r1m3m;
    let y = r1p1m.conj() + r1p3p + r1m3m.conj();
    let w = r1p3m + r1m3p.conj();
    let u = p.u;
    let d1 = Complex64::new(p.mu1, 0.0);
    let d3 = Complex64::new(p.mu3, 0.0);
    [
        [d1, u * x, u * y, u * w],
        [u * y, d1, u * w.conj(), u * x],
        [u * x, u * w, d3, u * r3p3m],
        [u * w.conj(), u * y, u * r3p3m.conj(), d3],
    ]
}

fn derivative(a: &[Complex64; 4], t: f64, p: &FsmParams) -> [Complex64; 4] {
    let h = build_hamiltonian(&FsmState { a: *a, t }, p);
    let mut out = [Complex64::new(0.0, 0.0); 4];
    for (i, row) in h.iter().enumerate() {
        let hv: Complex64 = row.iter().zip(a).map(|(h, v)| h * v).sum();
        out[i] = Complex64::new(0.0, -1.0) * hv;
    }
    out
}

/// Classical fourth-order Runge–Kutta step of `f(a, t)`.
pub(crate) fn rk4_step<const N: usize>(
    a: &[Complex64; N],
    t: f64,
    dt: f64,
    f: impl Fn(&[Complex64; N], f64) -> [Complex64; N],
) -> [Complex64; N] {
    let add = |x: &[Complex64; N], k: &[Complex64; N], s: f64| -> [Complex64; N] {
        std::array::from_fn(|i| x[i] + k[i] * s)
    };
    let k1 = f(a, t);
    let k2 = f(&add(a, &k1, 0.5 * dt), t + 0.5 * dt);
    let k3 = f(&add(a, &k2, 0.5 * dt), t + 0.5 * dt);
    let k4 = f(&add(a, &k3, dt), t + dt);
    std::array::from_fn(|i| a[i] + (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]) * (dt / 6.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FsmIntegrator {
    pub dt: f64,
    /// Keep every `record_stride`-th state (the last one is always kept).
    pub record_stride: u64,
    /// Largest tolerated |Σ|a|² - Σ|a₀|²|.
    pub norm_tolerance: f64,
}

impl Default for FsmIntegrator {
    fn default() -> Self {
        Self {
            dt: 1e-3,
            record_stride: 100,
            norm_tolerance: 1e-8,
        }
    }
}

pub const TRAJECTORY_HEADER: &str =
    "t,re_a1p,im_a1p,re_a1m,im_a1m,re_a3p,im_a3p,re_a3m,im_a3m,re_coh,im_coh";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FsmTrajectory {
    pub states: Vec<FsmState>,
}

impl FsmTrajectory {
    pub fn last(&self) -> &FsmState {
        self.states.last().expect("trajectory is never empty")
    }

    pub fn times(&self) -> Vec<f64> {
        self.states.iter().map(|s| s.t).collect()
    }

    pub fn coherences(&self) -> Vec<Complex64> {
        self.states.iter().map(FsmState::coherence).collect()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(TRAJECTORY_HEADER);
        out.push('\n');
        for s in &self.states {
            let c = s.coherence();
            out.push_str(&s.t.to_string());
            for a in &s.a {
                out.push_str(&format!(",{},{}", a.re, a.im));
            }
            out.push_str(&format!(",{},{}\n", c.re, c.im));
        }
        out
    }
}

/// Integrates the four-state model from `s0.t` to `s0.t + t_final`.
pub fn integrate_fsm(
    s0: &FsmState,
    p: &FsmParams,
    t_final: f64,
    cfg: &FsmIntegrator,
) -> Result<FsmTrajectory, FsmError> {
    if !(cfg.dt > 0.0 && cfg.dt <= 1e-2) {
        return Err(FsmError::BadStep(cfg.dt));
    }
    if !t_final.is_finite() || t_final < 0.0 {
        return Err(FsmError::NotFinite("t_final"));
    }
    let stride = cfg.record_stride.max(1);
    let steps = ((t_final / cfg.dt) - 1e-9).ceil().max(0.0) as u64;
    let n0 = s0.norm_sqr();
    let mut a = s0.a;
    let mut states = vec![*s0];
    for k in 1..=steps {
        let t = s0.t + (k - 1) as f64 * cfg.dt;
        a = rk4_step(&a, t, cfg.dt, |x, t| derivative(x, t, p));
        let t = s0.t + k as f64 * cfg.dt;
        let norm: f64 = a.iter().map(|c| c.norm_sqr()).sum();
        let drift = (norm - n0).abs();
        if drift > cfg.norm_tolerance || !norm.is_finite() {
            return Err(FsmError::NormDrift { t, drift, tolerance: cfg.norm_tolerance });
        }
        if k % stride == 0 || k == steps {
            states.push(FsmState { a, t });
        }
    }
    Ok(FsmTrajectory { states })
}

#[cfg(test)]
mod tests {
    use super::*;

    const U: f64 = 0.0128;
    const MU1: f64 = 0.529;
    const MU3: f64 = 0.699;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn params() -> FsmParams {
        FsmParams::new(U, MU1, MU3).unwrap()
    }

    fn generic_state() -> FsmState {
        let mut s = FsmState::new(c(0.7, 0.2), c(-0.3, 0.45), c(0.05, -0.02), c(0.01, 0.03));
        let n = s.norm_sqr().sqrt();
        s.a.iter_mut().for_each(|v| *v /= n);
        s
    }

    #[test]
    fn params_validation() {
        assert!(FsmParams::new(0.01, 0.7, 0.5).is_err());
        assert!(FsmParams::new(f64::NAN, 0.5, 0.7).is_err());
        let p = params();
        assert!((p.delta - 0.17).abs() < 1e-12);
        assert!(p.weak_regime());
    }

    #[test]
    fn hamiltonian_is_diagonal_without_interaction() {
        let p = FsmParams::new(0.0, MU1, MU3).unwrap();
        let h = build_hamiltonian(&generic_state(), &p);
        for (i, row) in h.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                let expect = match (i == j, i < 2) {
                    (false, _) => 0.0,
                    (true, true) => MU1,
                    (true, false) => MU3,
                };
                assert_eq!(*v, c(expect, 0.0));
            }
        }
    }

    #[test]
    fn hamiltonian_is_hermitian() {
        let h = build_hamiltonian(&generic_state(), &params());
        for i in 0..4 {
            for j in 0..4 {
                assert_eq!(h[i][j], h[j][i].conj(), "({i},{j})");
            }
        }
    }

    #[test]
    fn hamiltonian_element_for_l1_superposition() {
        let h = build_hamiltonian(&FsmState::imbalanced(0.7, 0.3), &params());
        assert!((h[0][1] - c(U * 0.21f64.sqrt(), 0.0)).norm() < 1e-15);
    }

    #[test]
    fn free_evolution_is_pure_phase() {
        let p = FsmParams::new(0.0, MU1, MU3).unwrap();
        let s0 = generic_state();
        let cfg = FsmIntegrator { dt: 1e-3, record_stride: 1000, ..Default::default() };
        let traj = integrate_fsm(&s0, &p, 10.0, &cfg).unwrap();
        let last = traj.last();
        for (k, mu) in [MU1, MU1, MU3, MU3].iter().enumerate() {
            let expect = s0.a[k] * Complex64::from_polar(1.0, -mu * last.t);
            assert!((last.a[k] - expect).norm() < 1e-12);
        }
    }

    #[test]
    fn balanced_coherence_stays_real() {
        let traj = integrate_fsm(
            &FsmState::imbalanced(0.5, 0.5),
            &params(),
            200.0,
            &FsmIntegrator { record_stride: 50, ..Default::default() },
        )
        .unwrap();
        // a₊ = a₋ for all t, so the nodal line never moves
        for s in &traj.states {
            let c = s.coherence();
            assert!(c.im.abs() < 1e-12 && c.re > 0.49, "t = {}: {c}", s.t);
        }
    }

    #[test]
    fn norm_is_conserved_over_long_runs() {
        let traj = integrate_fsm(
            &FsmState::imbalanced(0.7, 0.3),
            &params(),
            1000.0,
            &FsmIntegrator { record_stride: 100_000, ..Default::default() },
        )
        .unwrap();
        assert!((traj.last().norm_sqr() - 1.0).abs() < 1e-8);
        assert!((traj.last().t - 1000.0).abs() < 1e-9);
    }

    #[test]
    fn step_size_is_bounded() {
        let cfg = FsmIntegrator { dt: 0.1, ..Default::default() };
        assert_eq!(
            integrate_fsm(&generic_state(), &params(), 1.0, &cfg),
            Err(FsmError::BadStep(0.1))
        );
    }

    #[test]
    fn trajectory_csv_layout() {
        let traj = integrate_fsm(
            &FsmState::imbalanced(0.7, 0.3),
            &params(),
            0.01,
            &FsmIntegrator { record_stride: 5, ..Default::default() },
        )
        .unwrap();
        let csv = traj.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], TRAJECTORY_HEADER);
        assert_eq!(lines.len(), 4);
        assert_eq!(lines[1].split(',').count(), 11);
    }
}
