//! Linearized coherence dynamics with frozen `l = 1` populations.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{rk4_step, FsmError, FsmParams, FsmState};

/// `(ρ_{1+1-}, ρ*_{1+3+}, ρ_{1-3-})` with the populations `p₁±` held fixed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoherenceTriple {
    pub rho_1p1m: Complex64,
    pub rho_1p3p_conj: Complex64,
    pub rho_1m3m: Complex64,
    pub p1p: f64,
    pub p1m: f64,
}

impl CoherenceTriple {
    pub fn from_state(s: &FsmState) -> Self {
        let [a1p, a1m, a3p, a3m] = s.a;
        Self {
            rho_1p1m: a1p * a1m.conj(),
            rho_1p3p_conj: (a1p * a3p.conj()).conj(),
            rho_1m3m: a1m * a3m.conj(),
            p1p: a1p.norm_sqr(),
            p1m: a1m.norm_sqr(),
        }
    }

    fn as_array(&self) -> [Complex64; 3] {
        [self.rho_1p1m, self.rho_1p3p_conj, self.rho_1m3m]
    }

    fn with(&self, v: [Complex64; 3]) -> Self {
        Self {
            rho_1p1m: v[0],
            rho_1p3p_conj: v[1],
            rho_1m3m: v[2],
            ..*self
        }
    }
}

/// Time derivatives `d/dt (ρ_{1+1-}, ρ*_{1+3+}, ρ_{1-3-})`.
pub fn coherence_rhs(c: &CoherenceTriple, p: &FsmParams) -> [Complex64; 3] {
    let (c1, c2, c3) = (c.rho_1p1m, c.rho_1p3p_conj, c.rho_1m3m);
    let minus = p.u * c.p1m * (2.0 * c2 + c1 + c3);
    let plus = p.u * c.p1p * (c2 + c1 + 2.0 * c3);
    let i_dot = [minus - plus, plus + p.delta * c2, -minus - p.delta * c3];
    i_dot.map(|v| Complex64::new(0.0, -1.0) * v)
}

/// RK4 integration of the coherence equations; returns every
/// `record_stride`-th triple including the first and the last.
pub fn integrate_coherences(
    c0: &CoherenceTriple,
    p: &FsmParams,
    t_final: f64,
    dt: f64,
    record_stride: u64,
) -> Result<Vec<(f64, CoherenceTriple)>, FsmError> {
    if !(dt > 0.0 && dt <= 1e-2) {
        return Err(FsmError::BadStep(dt));
    }
    let steps = ((t_final / dt) - 1e-9).ceil().max(0.0) as u64;
    let stride = record_stride.max(1);
    let mut v = c0.as_array();
    let mut out = vec![(0.0, *c0)];
    for k in 1..=steps {
        v = rk4_step(&v, 0.0, dt, |x, _| coherence_rhs(&c0.with(*x), p));
        if k % stride == 0 || k == steps {
            out.push((k as f64 * dt, c0.with(v)));
        }
    }
    Ok(out)
}
