//! OAM mode bookkeeping: mode fields `f(r)e^{ilφ}` on the Cartesian grid,
//! imbalanced `l = ±1` superpositions and projections onto the mode basis.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gpe2d::{ComplexField2D, Gpe2dError, Grid2D, RadialGrid};

/// Largest |Ψ|² tolerated on the outermost grid cells of a mode field.
pub const BOUNDARY_DENSITY_LIMIT: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModesError {
    #[error("profile: {0}")]
    BadProfile(String),
    #[error("grid too small: boundary density {boundary:e} exceeds {limit:e}")]
    GridTooSmall { boundary: f64, limit: f64 },
    #[error("invalid probabilities p+ = {p_plus}, p- = {p_minus}")]
    InvalidProbabilities { p_plus: f64, p_minus: f64 },
    #[error(transparent)]
    Grid(#[from] Gpe2dError),
}

/// Radial part `f_l(r)` of a stationary state on a uniform cell-centred
/// radial grid, together with its chemical potential.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialProfile {
    pub r: Vec<f64>,
    pub f: Vec<f64>,
    pub l: u32,
    pub mu: f64,
}

impl RadialProfile {
    /// Parses and validates a profile in its JSON form.
    pub fn from_json(text: &str) -> Result<Self, ModesError> {
        let p: Self =
            serde_json::from_str(text).map_err(|e| ModesError::BadProfile(e.to_string()))?;
        p.validate()?;
        Ok(p)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("profile serializes")
    }

    pub fn validate(&self) -> Result<(), ModesError> {
        let bad = |m: &str| Err(ModesError::BadProfile(m.to_string()));
        if self.r.len() != self.f.len() {
            return bad("r and f lengths differ");
        }
        if self.r.len() < 16 {
            return bad("needs at least 16 samples");
        }
        if !self.mu.is_finite() {
            return bad("mu is not finite");
        }
        if self.f.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return bad("f must be finite and non-negative");
        }
        let h = self.r[1] - self.r[0];
        if !(h.is_finite() && h > 0.0) || (self.r[0] - 0.5 * h).abs() > 1e-9 * h {
            return bad("r must be cell-centred, r_i = (i + 1/2) h");
        }
        for (i, &r) in self.r.iter().enumerate() {
            if (r - (i as f64 + 0.5) * h).abs() > 1e-9 * h.max(r) {
                return bad("r must be uniformly spaced");
            }
        }
        Ok(())
    }

    pub fn spacing(&self) -> f64 {
        self.r[1] - self.r[0]
    }

    pub fn radial_grid(&self) -> RadialGrid {
        RadialGrid {
            n: self.r.len(),
            h: self.spacing(),
        }
    }

    fn weighted_sum(&self, g: impl Fn(f64, f64) -> f64) -> f64 {
        2.0 * PI * self.spacing() * self.r.iter().zip(&self.f).map(|(&r, &f)| g(r, f)).sum::<f64>()
    }

    /// `2π∫f² r dr`
    pub fn norm_sqr(&self) -> f64 {
        self.weighted_sum(|r, f| r * f * f)
    }

    /// `∫d²r f⁴ = 2π∫f⁴ r dr`
    pub fn quartic_integral(&self) -> f64 {
        self.weighted_sum(|r, f| r * f.powi(4))
    }

    /// `∫d²r f²/r²`
    pub fn centrifugal_integral(&self) -> f64 {
        self.weighted_sum(|r, f| f * f / r)
    }

    /// `f(r)` by cubic (Catmull–Rom) interpolation. The profile is continued
    /// through the origin with parity `(-1)^l` and vanishes beyond the grid.
    pub fn value_at(&self, r: f64) -> f64 {
        let h = self.spacing();
        let n = self.f.len() as isize;
        let sign = if self.l % 2 == 0 { 1.0 } else { -1.0 };
        let sample = |k: isize| -> f64 {
            if k < 0 {
                let m = -k - 1;
                if m < n {
                    sign * self.f[m as usize]
                } else {
                    0.0
                }
            } else if k < n {
                self.f[k as usize]
            } else {
                0.0
            }
        };
        let u = r.abs() / h - 0.5;
        let k = u.floor();
        let t = u - k;
        let k = k as isize;
        if k >= n {
            return 0.0;
        }
        let (p0, p1, p2, p3) = (sample(k - 1), sample(k), sample(k + 1), sample(k + 2));
        let t2 = t * t;
        let t3 = t2 * t;
        0.5 * (2.0 * p1
            + (p2 - p0) * t
            + (2.0 * p0 - 5.0 * p1 + 4.0 * p2 - p3) * t2
            + (3.0 * p1 - p0 - 3.0 * p2 + p3) * t3)
    }

    /// Chemical-potential functional of `f(r)e^{ilφ}` for winding `l`,
    /// evaluated on the profile's own radial grid.
    pub fn chemical_potential_with_winding(&self, l: u32, ring_radius: f64, g2d: f64) -> f64 {
        let op = crate::gpe2d::radial_operator(self.radial_grid(), l, ring_radius);
        op.functionals(&self.f, g2d).0
    }
}

/// `f(r) e^{i·signed_l·φ}` sampled on `grid` and normalized on it.
pub fn mode_field(
    profile: &RadialProfile,
    signed_l: i32,
    grid: Grid2D,
) -> Result<ComplexField2D, ModesError> {
    let l = f64::from(signed_l);
    let mut field = ComplexField2D::from_fn(grid, |x, y| {
        let r = x.hypot(y);
        let f = profile.value_at(r);
        if signed_l == 0 || r == 0.0 {
            return Complex64::new(f, 0.0);
        }
        Complex64::from_polar(f, l * y.atan2(x))
    });
    let boundary = field.boundary_density();
    if boundary > BOUNDARY_DENSITY_LIMIT {
        return Err(ModesError::GridTooSmall {
            boundary,
            limit: BOUNDARY_DENSITY_LIMIT,
        });
    }
    field.normalize();
    Ok(field)
}

fn check_probabilities(p_plus: f64, p_minus: f64) -> Result<(), ModesError> {
    let ok = p_plus.is_finite()
        && p_minus.is_finite()
        && p_plus >= 0.0
        && p_minus >= 0.0
        && (p_plus + p_minus - 1.0).abs() <= 1e-10;
    if ok {
        Ok(())
    } else {
        Err(ModesError::InvalidProbabilities { p_plus, p_minus })
    }
}

/// `√p₊ φ₁₊ + √p₋ e^{iα₀} φ₁₋`, normalized. With `α₀ = 0` the density
/// maximum lies along φ = 0 and the minimum along φ = π/2.
pub fn prepare_superposition(
    p_plus: f64,
    p_minus: f64,
    profile: &RadialProfile,
    grid: Grid2D,
    alpha0: f64,
) -> Result<ComplexField2D, ModesError> {
    check_probabilities(p_plus, p_minus)?;
    let plus = mode_field(profile, 1, grid)?;
    let minus = mode_field(profile, -1, grid)?;
    let (a, b) = (p_plus.sqrt(), Complex64::from_polar(p_minus.sqrt(), alpha0));
    let mut out = ComplexField2D::zeros(grid);
    for ((o, p), m) in out.values.iter_mut().zip(&plus.values).zip(&minus.values) {
        *o = a * p + b * m;
    }
    out.normalize();
    Ok(out)
}

/// `a = ⟨φ_l|Ψ⟩`
pub fn project(
    psi: &ComplexField2D,
    profile: &RadialProfile,
    signed_l: i32,
) -> Result<Complex64, ModesError> {
    let mode = mode_field(profile, signed_l, psi.grid)?;
    Ok(mode.inner(psi)?)
}

/// Mode amplitudes keyed by signed winding number.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeAmplitudes {
    pub time: f64,
    pub amplitudes: BTreeMap<i32, Complex64>,
}

impl ModeAmplitudes {
    pub fn get(&self, l: i32) -> Complex64 {
        self.amplitudes.get(&l).copied().unwrap_or_default()
    }

    pub fn population(&self, l: i32) -> f64 {
        self.get(l).norm_sqr()
    }

    pub fn total_population(&self) -> f64 {
        self.amplitudes.values().map(|a| a.norm_sqr()).sum()
    }

    /// `ρ_{l,l'} = a_l a*_{l'}`
    pub fn coherence(&self, l: i32, lp: i32) -> Complex64 {
        self.get(l) * self.get(lp).conj()
    }
}

/// Pre-sampled mode fields for repeated projection of fields on one grid.
#[derive(Debug, Clone)]
pub struct ModeBasis {
    grid: Grid2D,
    modes: Vec<(i32, ComplexField2D)>,
}

impl ModeBasis {
    pub fn new(profile: &RadialProfile, grid: Grid2D, windings: &[i32]) -> Result<Self, ModesError> {
        let modes = windings
            .iter()
            .map(|&l| mode_field(profile, l, grid).map(|m| (l, m)))
            .collect::<Result<_, _>>()?;
        Ok(Self { grid, modes })
    }

    /// Basis `{±1, ±3}` used by the four-state model.
    pub fn four_state(profile: &RadialProfile, grid: Grid2D) -> Result<Self, ModesError> {
        Self::new(profile, grid, &[1, -1, 3, -3])
    }

    pub fn grid(&self) -> Grid2D {
        self.grid
    }

    pub fn windings(&self) -> impl Iterator<Item = i32> + '_ {
        self.modes.iter().map(|(l, _)| *l)
    }

    pub fn mode(&self, l: i32) -> Option<&ComplexField2D> {
        self.modes.iter().find(|(m, _)| *m == l).map(|(_, f)| f)
    }

    pub fn project(&self, psi: &ComplexField2D) -> Result<ModeAmplitudes, ModesError> {
        let mut amplitudes = BTreeMap::new();
        for (l, mode) in &self.modes {
            amplitudes.insert(*l, mode.inner(psi)?);
        }
        Ok(ModeAmplitudes {
            time: psi.time,
            amplitudes,
        })
    }
}

/// `⟨Ψ|L_z|Ψ⟩ / ⟨Ψ|Ψ⟩` with `L_z = -i(x∂_y - y∂_x)` and spectral derivatives.
pub fn angular_momentum(psi: &ComplexField2D) -> f64 {
    let g = psi.grid;
    let (nx, ny) = (g.nx, g.ny);
    let mut planner = FftPlanner::<f64>::new();
    let wavenumbers = |n: usize, h: f64| -> Vec<f64> {
        (0..n)
            .map(|m| {
                // Nyquist term dropped so the derivative of a real signal is real
                if 2 * m == n {
                    0.0
                } else {
                    let s = if m < n / 2 + 1 { m as f64 } else { m as f64 - n as f64 };
                    2.0 * PI * s / (n as f64 * h)
                }
            })
            .collect()
    };
    let kx = wavenumbers(nx, g.dx());
    let ky = wavenumbers(ny, g.dy());

    let mut dx = psi.values.clone();
    let (fx, ix) = (planner.plan_fft_forward(nx), planner.plan_fft_inverse(nx));
    for row in dx.chunks_exact_mut(nx) {
        fx.process(row);
        for (v, &k) in row.iter_mut().zip(&kx) {
            *v *= Complex64::new(0.0, k / nx as f64);
        }
        ix.process(row);
    }
    let mut dy = psi.values.clone();
    let (fy, iy) = (planner.plan_fft_forward(ny), planner.plan_fft_inverse(ny));
    let mut col = vec![Complex64::new(0.0, 0.0); ny];
    for i in 0..nx {
        for j in 0..ny {
            col[j] = dy[j * nx + i];
        }
        fy.process(&mut col);
        for (v, &k) in col.iter_mut().zip(&ky) {
            *v *= Complex64::new(0.0, k / ny as f64);
        }
        iy.process(&mut col);
        for j in 0..ny {
            dy[j * nx + i] = col[j];
        }
    }
    let mut num = Complex64::new(0.0, 0.0);
    let mut den = 0.0;
    for (k, x, y) in g.points() {
        let lz = Complex64::new(0.0, -1.0) * (x * dy[k] - y * dx[k]);
        num += psi.values[k].conj() * lz;
        den += psi.values[k].norm_sqr();
    }
    num.re / den
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gpe2d::{solve_radial_eigenstate, RadialSolverConfig};

    fn profile() -> RadialProfile {
        let grid = RadialGrid::covering(5.0, 10.0, 0.01).unwrap();
        solve_radial_eigenstate(1, 5.0, 1.0, grid, &RadialSolverConfig::default()).unwrap()
    }

    fn grid() -> Grid2D {
        Grid2D::square(129, 24.0).unwrap()
    }

    #[test]
    fn json_round_trip_and_validation() {
        let p = profile();
        let back = RadialProfile::from_json(&p.to_json()).unwrap();
        assert_eq!(back, p);
        let mut bad = p.clone();
        bad.f.pop();
        assert!(bad.validate().is_err());
        let mut bad = p;
        bad.r[3] += 1e-3;
        assert!(bad.validate().is_err());
        assert!(RadialProfile::from_json("{").is_err());
    }

    #[test]
    fn interpolation_reproduces_samples_and_parity() {
        let p = profile();
        for i in [0usize, 10, 499, 800] {
            assert!((p.value_at(p.r[i]) - p.f[i]).abs() < 1e-15);
        }
        assert_eq!(p.value_at(1e3), 0.0);
        // l = 1: continued as an odd function, so f(0) = 0
        assert!(p.value_at(0.0).abs() < 1e-12);
    }

    #[test]
    fn winding_zero_field_is_real_and_symmetric() {
        let g = grid();
        let f = mode_field(&profile(), 0, g).unwrap();
        assert!(f.values.iter().all(|c| c.im == 0.0));
        let (i, j) = (90, 64);
        assert!((f.values[g.index(i, j)] - f.values[g.index(j, i)]).norm() < 1e-15);
        assert!((f.norm_sqr() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn modes_are_orthonormal() {
        let basis = ModeBasis::new(&profile(), grid(), &[-3, -2, -1, 0, 1, 2, 3]).unwrap();
        let ls: Vec<i32> = basis.windings().collect();
        for &a in &ls {
            for &b in &ls {
                let ov = basis.mode(a).unwrap().inner(basis.mode(b).unwrap()).unwrap();
                let expect = if a == b { 1.0 } else { 0.0 };
                assert!((ov - expect).norm() < 1e-8, "⟨{a}|{b}⟩ = {ov}");
            }
        }
    }

    #[test]
    fn angular_momentum_of_winding_one() {
        let f = mode_field(&profile(), 1, grid()).unwrap();
        let lz = angular_momentum(&f);
        assert!((lz - 1.0).abs() < 1e-4, "L_z = {lz}");
        let f = mode_field(&profile(), -3, grid()).unwrap();
        assert!((angular_momentum(&f) + 3.0).abs() < 1e-4);
    }

    #[test]
    fn superposition_projects_back() {
        let p = profile();
        let psi = prepare_superposition(0.7, 0.3, &p, grid(), 0.0).unwrap();
        let a = project(&psi, &p, 1).unwrap();
        assert!((a - Complex64::new(0.7f64.sqrt(), 0.0)).norm() < 1e-6);
        let pure = prepare_superposition(1.0, 0.0, &p, grid(), 0.0).unwrap();
        assert!(project(&pure, &p, -1).unwrap().norm() < 1e-8);
    }

    #[test]
    fn fringe_contrast_and_orientation() {
        let p = profile();
        let g = grid();
        let c = 64; // centre index: x = y = 0 lies on the grid for odd n
        let k = 64 + (5.0 / g.dx()).round() as usize;
        let psi = prepare_superposition(0.7, 0.3, &p, g, 0.0).unwrap();
        let at_max = psi.values[g.index(k, c)].norm_sqr();
        let at_min = psi.values[g.index(c, k)].norm_sqr();
        let s = 2.0 * 0.21f64.sqrt();
        let expect = (1.0 + s) / (1.0 - s);
        assert!((at_max / at_min - expect).abs() < 1e-9 * expect);

        let balanced = prepare_superposition(0.5, 0.5, &p, g, 0.0).unwrap();
        assert!(balanced.values[g.index(c, k)].norm_sqr() < 1e-25);
        let pure = prepare_superposition(1.0, 0.0, &p, g, 0.0).unwrap();
        let (a, b) = (
            pure.values[g.index(k, c)].norm_sqr(),
            pure.values[g.index(c, k)].norm_sqr(),
        );
        assert!((a - b).abs() < 1e-14);
    }

    #[test]
    fn rejects_bad_probabilities() {
        let p = profile();
        assert!(prepare_superposition(0.7, 0.4, &p, grid(), 0.0).is_err());
        assert!(prepare_superposition(1.1, -0.1, &p, grid(), 0.0).is_err());
    }

    #[test]
    fn small_grid_is_rejected() {
        let g = Grid2D::square(32, 12.0).unwrap();
        assert!(matches!(
            mode_field(&profile(), 1, g),
            Err(ModesError::GridTooSmall { .. })
        ));
    }
}
