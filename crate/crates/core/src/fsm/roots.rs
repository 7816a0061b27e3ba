//! Characteristic frequencies of the coherence equations.
//!
//! With `ρ ∝ e^{kt}` the cubic `ik³ + ikA + B = 0`, `A = UΔ + Δ² - p₊p₋U²`,
//! `B = UΔ²(p₊ - p₋)`, becomes the real depressed cubic `κ³ - Aκ + B = 0`
//! under `k = iκ`. It is solved in closed form and each root is polished by
//! Newton iterations on the original complex polynomial.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum CubicForm {
    /// Keeps the `p₊p₋U²` term.
    #[default]
    Full,
    /// Drops `p₊p₋U²`, valid to leading order in `U/Δ`.
    DropQuadraticU,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CharacteristicRoots {
    /// Sorted by increasing modulus.
    pub roots: [Complex64; 3],
    /// The smallest-modulus root `k₀`.
    pub k0: Complex64,
}

impl CharacteristicRoots {
    /// True when every root has |Re k| ≤ `tol`·max|k|.
    pub fn all_imaginary(&self, tol: f64) -> bool {
        let scale = self.roots.iter().map(|k| k.norm()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
        self.roots.iter().all(|k| k.re.abs() <= tol * scale)
    }
}

fn real_cubic_roots(a: f64, b: f64) -> [Complex64; 3] {
    // t³ + p t + q = 0 with p = -a, q = b
    let (p, q) = (-a, b);
    if p == 0.0 && q == 0.0 {
        return [Complex64::new(0.0, 0.0); 3];
    }
    let disc = q * q / 4.0 + p * p * p / 27.0;
    if disc <= 0.0 {
        let m = 2.0 * (-p / 3.0).sqrt();
        let arg = ((3.0 * q / (p * m)).clamp(-1.0, 1.0)).acos() / 3.0;
        [0, 1, 2].map(|j| Complex64::new(m * (arg - 2.0 * PI * j as f64 / 3.0).cos(), 0.0))
    } else {
        let s = disc.sqrt();
        let u = (-q / 2.0 + s).cbrt();
        let v = (-q / 2.0 - s).cbrt();
        let re = -(u + v) / 2.0;
        let im = 3f64.sqrt() / 2.0 * (u - v);
        [
            Complex64::new(u + v, 0.0),
            Complex64::new(re, im),
            Complex64::new(re, -im),
        ]
    }
}

/// Roots of `ik³ + ik(UΔ + Δ² - p₊p₋U²) + UΔ²(p₊ - p₋) = 0`.
pub fn characteristic_roots(u: f64, delta: f64, p1p: f64, p1m: f64, form: CubicForm) -> CharacteristicRoots {
    let quad = match form {
        CubicForm::Full => p1p * p1m * u * u,
        CubicForm::DropQuadraticU => 0.0,
    };
    let a = u * delta + delta * delta - quad;
    let b = u * delta * delta * (p1p - p1m);
    let i = Complex64::new(0.0, 1.0);
    let poly = |k: Complex64| i * k * k * k + i * k * a + b;
    let dpoly = |k: Complex64| 3.0 * i * k * k + i * a;
    let mut roots = real_cubic_roots(a, b).map(|kappa| {
        let mut k = i * kappa;
        for _ in 0..3 {
            let d = dpoly(k);
            if d.norm() == 0.0 {
                break;
            }
            let next = k - poly(k) / d;
            if !(next.re.is_finite() && next.im.is_finite()) {
                break;
            }
            k = next;
        }
        k
    });
    // ties at equal modulus only happen at n = 0, where the zero root wins
    roots.sort_by(|x, y| x.norm().total_cmp(&y.norm()));
    CharacteristicRoots { roots, k0: roots[0] }
}

/// Nodal-line rotation rate `Ω = -(i/2) k₀` from a characteristic root.
pub fn omega_from_root(k0: Complex64) -> f64 {
    (Complex64::new(0.0, -0.5) * k0).re
}

/// Leading-order nodal-line rotation rate `Ω = U n / (2(1 + U/Δ))`.
pub fn omega_fsm(u: f64, delta: f64, n: f64) -> f64 {
    u * n / (2.0 * (1.0 + u / delta))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn balanced_roots() {
        let (u, d) = (0.0128, 0.17);
        let r = characteristic_roots(u, d, 0.5, 0.5, CubicForm::Full);
        assert_eq!(r.k0, Complex64::new(0.0, 0.0));
        let w = (u * d + d * d - 0.25 * u * u).sqrt();
        assert!((r.roots[1].im.abs() - w).abs() < 1e-14);
        assert!((r.roots[1] + r.roots[2]).norm() < 1e-14);
        assert_eq!(omega_fsm(u, d, 0.0), 0.0);
    }

    #[test]
    fn figure_two_parameters() {
        let r = characteristic_roots(0.0128, 0.170, 0.7, 0.3, CubicForm::Full);
        assert!(r.all_imaginary(1e-12));
        assert!(r.k0.re.abs() < 1e-15);
        assert!((r.k0.im - 4.770e-3).abs() < 1e-6, "k0 = {}", r.k0);
        let dropped = characteristic_roots(0.0128, 0.170, 0.7, 0.3, CubicForm::DropQuadraticU);
        assert!((dropped.k0.im - 4.765e-3).abs() < 1e-6, "k0 = {}", dropped.k0);
        // fixed-point iteration κ = (UΔ²n + κ³)/(UΔ + Δ²) on the dropped form
        let (u, d, n) = (0.0128f64, 0.170f64, 0.4f64);
        let mut kappa = 0.0f64;
        for _ in 0..50 {
            kappa = (u * d * d * n + kappa.powi(3)) / (u * d + d * d);
        }
        assert!((dropped.k0.im - kappa).abs() < 1e-12);
        assert!((omega_fsm(u, d, n) - 2.3807e-3).abs() < 1e-7);
    }

    #[test]
    fn omega_from_root_approaches_formula_quadratically() {
        let (d, n) = (0.17, 0.4);
        let mut prev: Option<(f64, f64)> = None;
        for ratio in [0.2, 0.1, 0.05, 0.025, 0.0125] {
            let u = ratio * d;
            let pp = (1.0 + n) / 2.0;
            let r = characteristic_roots(u, d, pp, 1.0 - pp, CubicForm::Full);
            let w = omega_fsm(u, d, n);
            let err = (omega_from_root(r.k0) - w).abs() / w;
            if let Some((pr, pe)) = prev {
                let order = (pe / err).ln() / (pr / ratio).ln();
                assert!(order > 1.8, "order {order} at U/Δ = {ratio}");
            }
            prev = Some((ratio, err));
        }
    }

    proptest! {
        #[test]
        fn roots_are_imaginary_in_weak_regime(ratio in 0.0..0.25f64, pp in 0.0..1.0f64, d in 0.05..0.5f64) {
            let r = characteristic_roots(ratio * d, d, pp, 1.0 - pp, CubicForm::Full);
            prop_assert!(r.all_imaginary(1e-10));
            prop_assert!(r.roots[0].norm() <= r.roots[1].norm() && r.roots[1].norm() <= r.roots[2].norm());
        }

        #[test]
        fn swapping_populations_negates_roots(ratio in 0.0..0.25f64, pp in 0.0..1.0f64) {
            let d = 0.17;
            let a = characteristic_roots(ratio * d, d, pp, 1.0 - pp, CubicForm::Full);
            let b = characteristic_roots(ratio * d, d, 1.0 - pp, pp, CubicForm::Full);
            let mut ai: Vec<f64> = a.roots.iter().map(|k| k.im).collect();
            let mut bi: Vec<f64> = b.roots.iter().map(|k| -k.im).collect();
            ai.sort_by(f64::total_cmp);
            bi.sort_by(f64::total_cmp);
            for (x, y) in ai.iter().zip(&bi) {
                prop_assert!((x - y).abs() <= 1e-12 * d);
            }
        }

        #[test]
        fn omega_is_odd_in_imbalance(u in 0.0..0.05f64, d in 0.05..0.5f64, n in -1.0..1.0f64) {
            prop_assert_eq!(omega_fsm(u, d, -n), -omega_fsm(u, d, n));
        }

        #[test]
        fn root_formula_consistency(ratio in 0.001..0.25f64, n in -0.8..0.8f64) {
            let d = 0.17;
            let u = ratio * d;
            let pp = (1.0 + n) / 2.0;
            let r = characteristic_roots(u, d, pp, 1.0 - pp, CubicForm::Full);
            let w = omega_fsm(u, d, n);
            prop_assert!((omega_from_root(r.k0) - w).abs() <= 2.0 * ratio * ratio * w.abs() + 1e-15);
        }
    }
}
