//! Mode equations for an arbitrary truncation of the winding basis:
//! `i ȧ_l = μ_|l| a_l + U Σ_{m≠m'} a_m a*_{m'} a_{l+m'-m}`.

use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{FsmError, FsmParams};
use crate::modes::ModeAmplitudes;

/// Truncated model over the odd windings `-L, …, -1, 1, …, L`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneralModel {
    pub max_l: i32,
    pub u: f64,
    /// Chemical potential per |l|.
    pub mu: BTreeMap<u32, f64>,
}

impl GeneralModel {
    pub fn new(max_l: i32, u: f64, mu: BTreeMap<u32, f64>) -> Result<Self, FsmError> {
        if max_l < 1 || max_l % 2 == 0 {
            return Err(FsmError::BadTruncation(max_l));
        }
        for l in (1..=max_l).step_by(2) {
            if !mu.contains_key(&(l as u32)) {
                return Err(FsmError::MissingMu(l as u32));
            }
        }
        Ok(Self { max_l, u, mu })
    }

    /// The `L = 3` model with the four-state parameters.
    pub fn four_state(p: &FsmParams) -> Self {
        Self {
            max_l: 3,
            u: p.u,
            mu: BTreeMap::from([(1, p.mu1), (3, p.mu3)]),
        }
    }

    pub fn windings(&self) -> Vec<i32> {
        (-self.max_l..=self.max_l).filter(|l| l % 2 != 0).collect()
    }

    /// Zero amplitudes on every odd winding except the given `±1` weights.
    pub fn imbalanced(&self, p_plus: f64, p_minus: f64) -> BTreeMap<i32, Complex64> {
        let mut a: BTreeMap<i32, Complex64> =
            self.windings().into_iter().map(|l| (l, Complex64::new(0.0, 0.0))).collect();
        a.insert(1, Complex64::new(p_plus.sqrt(), 0.0));
        a.insert(-1, Complex64::new(p_minus.sqrt(), 0.0));
        a
    }
}

/// `da_l/dt` for every amplitude present in `amps`. Couplings whose target
/// winding `l + m' - m` is not in `amps` are dropped.
pub fn general_rhs(
    amps: &BTreeMap<i32, Complex64>,
    u: f64,
    mu: &BTreeMap<u32, f64>,
) -> Result<BTreeMap<i32, Complex64>, FsmError> {
    let mut out = BTreeMap::new();
    for (&l, &al) in amps {
        let mu_l = *mu.get(&l.unsigned_abs()).ok_or(FsmError::MissingMu(l.unsigned_abs()))?;
        let mut acc = Complex64::new(0.0, 0.0);
        for (&m, &am) in amps {
            for (&mp, &amp) in amps {
                if m == mp {
                    continue;
                }
                if let Some(&ak) = amps.get(&(l + mp - m)) {
                    acc += am * amp.conj() * ak;
                }
            }
        }
        out.insert(l, Complex64::new(0.0, -1.0) * (mu_l * al + u * acc));
    }
    Ok(out)
}

fn rhs_vec(keys: &[i32], v: &[Complex64], model: &GeneralModel) -> Result<Vec<Complex64>, FsmError> {
    let amps: BTreeMap<i32, Complex64> = keys.iter().copied().zip(v.iter().copied()).collect();
    Ok(general_rhs(&amps, model.u, &model.mu)?.into_values().collect())
}

/// RK4 integration of the general model; records every `record_stride`-th
/// step plus the first and last.
pub fn integrate_general(
    model: &GeneralModel,
    a0: &BTreeMap<i32, Complex64>,
    t_final: f64,
    dt: f64,
    record_stride: u64,
) -> Result<Vec<ModeAmplitudes>, FsmError> {
    if !(dt > 0.0 && dt <= 1e-2) {
        return Err(FsmError::BadStep(dt));
    }
    let keys: Vec<i32> = a0.keys().copied().collect();
    let mut v: Vec<Complex64> = a0.values().copied().collect();
    let steps = ((t_final / dt) - 1e-9).ceil().max(0.0) as u64;
    let stride = record_stride.max(1);
    let snapshot = |v: &[Complex64], t: f64| ModeAmplitudes {
        time: t,
        amplitudes: keys.iter().copied().zip(v.iter().copied()).collect(),
    };
    let mut out = vec![snapshot(&v, 0.0)];
    let axpy = |x: &[Complex64], k: &[Complex64], s: f64| -> Vec<Complex64> {
        x.iter().zip(k).map(|(a, b)| a + b * s).collect()
    };
    for k in 1..=steps {
        let k1 = rhs_vec(&keys, &v, model)?;
        let k2 = rhs_vec(&keys, &axpy(&v, &k1, 0.5 * dt), model)?;
        let k3 = rhs_vec(&keys, &axpy(&v, &k2, 0.5 * dt), model)?;
        let k4 = rhs_vec(&keys, &axpy(&v, &k3, dt), model)?;
        for i in 0..v.len() {
            v[i] += (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]) * (dt / 6.0);
        }
        if k % stride == 0 || k == steps {
            out.push(snapshot(&v, k as f64 * dt));
        }
    }
    Ok(out)
}
