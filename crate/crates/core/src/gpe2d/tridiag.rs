//! Crank–Nicolson factor for the 1D kinetic operator `T = -½ d²/dx²` with
//! homogeneous Dirichlet ends.
//!
//! The update `(1 + βL) ψ' = (1 - βL) ψ` uses `L ψ_i = 2ψ_i - ψ_{i-1} - ψ_{i+1}`
//! and `β = i dt/(4h²)` in real time or `dτ/(4h²)` in imaginary time. The
//! matrix is identical for every line, so the Thomas elimination
//! coefficients are computed once.

use num_complex::Complex64;

#[derive(Debug, Clone)]
pub(crate) struct CnLine {
    beta: Complex64,
    /// Modified super-diagonal c'_i.
    cprime: Vec<Complex64>,
    /// 1 / (pivot_i)
    inv: Vec<Complex64>,
}

impl CnLine {
    pub(crate) fn new(n: usize, beta: Complex64) -> Self {
        let diag = Complex64::new(1.0, 0.0) + 2.0 * beta;
        let off = -beta;
        let mut cprime = Vec::with_capacity(n);
        let mut inv = Vec::with_capacity(n);
        let mut prev_c = Complex64::new(0.0, 0.0);
        for _ in 0..n {
            let p = (diag - off * prev_c).inv();
            let c = off * p;
            inv.push(p);
            cprime.push(c);
            prev_c = c;
        }
        Self { beta, cprime, inv }
    }

    pub(crate) fn len(&self) -> usize {
        self.inv.len()
    }

    /// In-place update of one contiguous line; `work` must have the line length.
    pub(crate) fn apply(&self, line: &mut [Complex64], work: &mut [Complex64]) {
        let n = line.len();
        debug_assert_eq!(n, self.len());
        let b = self.beta;
        let one_minus = Complex64::new(1.0, 0.0) - 2.0 * b;
        let off = -b;
        // forward elimination with the explicit half folded in
        let mut prev_y = Complex64::new(0.0, 0.0);
        let mut left = Complex64::new(0.0, 0.0);
        for i in 0..n {
            let right = if i + 1 < n { line[i + 1] } else { Complex64::new(0.0, 0.0) };
            let rhs = one_minus * line[i] + b * (left + right);
            left = line[i];
            let y = (rhs - off * prev_y) * self.inv[i];
            work[i] = y;
            prev_y = y;
        }
        line[n - 1] = work[n - 1];
        for i in (0..n - 1).rev() {
            line[i] = work[i] - self.cprime[i] * line[i + 1];
        }
    }

    /// Applies the update along the slow (row) index of a row-major block,
    /// i.e. independently to every column, sweeping whole rows at a time.
    pub(crate) fn apply_columns(
        &self,
        values: &mut [Complex64],
        nx: usize,
        work: &mut [Complex64],
    ) {
        let ny = self.len();
        debug_assert_eq!(values.len(), nx * ny);
        let b = self.beta;
        let one_minus = Complex64::new(1.0, 0.0) - 2.0 * b;
        let off = -b;
        // right-hand side for all rows
        for j in 0..ny {
            let row = j * nx;
            for i in 0..nx {
                let mut nb = Complex64::new(0.0, 0.0);
                if j > 0 {
                    nb += values[row - nx + i];
                }
                if j + 1 < ny {
                    nb += values[row + nx + i];
                }
                work[row + i] = one_minus * values[row + i] + b * nb;
            }
        }
        // forward elimination, row by row
        let inv0 = self.inv[0];
        for w in &mut work[..nx] {
            *w *= inv0;
        }
        for j in 1..ny {
            let inv = self.inv[j];
            let (done, rest) = work.split_at_mut(j * nx);
            let prev = &done[(j - 1) * nx..];
            for (w, p) in rest[..nx].iter_mut().zip(prev) {
                *w = (*w - off * p) * inv;
            }
        }
        // back substitution
        values[(ny - 1) * nx..].copy_from_slice(&work[(ny - 1) * nx..]);
        for j in (0..ny - 1).rev() {
            let c = self.cprime[j];
            let (lo, hi) = values.split_at_mut((j + 1) * nx);
            let next = &hi[..nx];
            let cur = &mut lo[j * nx..];
            for ((v, w), nxt) in cur.iter_mut().zip(&work[j * nx..(j + 1) * nx]).zip(next) {
                *v = w - c * nxt;
            }
        }
    }
}
