//! Dirichlet eigenproblem for the normal-form operator
//! `-w'' + g(x) w = lambda w` on `[0,1]`, plus projection onto and
//! synthesis from the resulting orthonormal eigenbasis.
//!
//! Discretization is the symmetric second-order finite-difference stencil,
//! yielding a symmetric tridiagonal matrix solved by Sturm-sequence
//! bisection and inverse iteration. Eigenvalues are Richardson-extrapolated
//! across `h` and `h/2` to cancel the O(h^2) bias; the discretization error
//! of `lambda_k` grows like `k^4 h^2`, hence the `n_modes <= n_grid / 8`
//! resolution guard.

use crate::grid::{inner_product, linspace, simpson, CubicSpline};
use crate::{Error, Result};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

pub const DEFAULT_N_GRID: usize = 2049;
pub const DEFAULT_N_MODES: usize = 64;

/// Eigenvalues and L2-normalized eigenfunctions of the normal-form
/// operator, sampled on a uniform grid on `[0,1]`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EigenSystem {
    /// uniform grid on [0,1], endpoints included
    pub grid: Vec<f64>,
    /// potential samples g(grid)
    pub potential: Vec<f64>,
    /// Richardson-extrapolated eigenvalues, increasing
    pub lambdas: Vec<f64>,
    /// eigenfunction samples, one row per mode, sign-fixed so omega'(0) > 0
    pub omegas: Vec<Vec<f64>>,
}

impl EigenSystem {
    pub fn n_modes(&self) -> usize {
        self.lambdas.len()
    }

    pub fn n_grid(&self) -> usize {
        self.grid.len()
    }

    /// Eigenvalues extended past the computed range by the asymptotic law
    /// `lambda_k ~ k^2 pi^2 + int g - int g cos(2 k pi x)`.
    pub fn extended_lambdas(&self, k_max: usize) -> Vec<f64> {
        let h = 1.0 / (self.n_grid() - 1) as f64;
        let mean_g = simpson(&self.potential, h);
        (1..=k_max)
            .map(|k| {
                if k <= self.n_modes() {
                    self.lambdas[k - 1]
                } else {
                    let cosk: Vec<f64> = self
                        .grid
                        .iter()
                        .zip(&self.potential)
                        .map(|(&x, &g)| g * (2.0 * k as f64 * PI * x).cos())
                        .collect();
                    (k as f64 * PI).powi(2) + mean_g - simpson(&cosk, h)
                }
            })
            .collect()
    }

    pub fn to_json(&self) -> serde_json::Result<String> {
        serde_json::to_string_pretty(self)
    }

    pub fn from_json(s: &str) -> serde_json::Result<Self> {
        serde_json::from_str(s)
    }
}

/// Coefficients of a function in the eigenbasis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralCoefficients {
    pub values: Vec<f64>,
}

impl SpectralCoefficients {
    pub fn n_modes(&self) -> usize {
        self.values.len()
    }
}

/// Symmetric tridiagonal matrix with Sturm-sequence eigenvalue bisection
/// and inverse-iteration eigenvectors.
pub struct SymTridiag {
    pub diag: Vec<f64>,
    pub off: Vec<f64>,
}

impl SymTridiag {
    pub fn n(&self) -> usize {
        self.diag.len()
    }

    /// Number of eigenvalues strictly below `sigma` (Sturm count via LDL^T).
    fn count_below(&self, sigma: f64) -> usize {
        let tiny = f64::MIN_POSITIVE / f64::EPSILON;
        let mut count = 0;
        let mut q = self.diag[0] - sigma;
        if q < 0.0 {
            count += 1;
        }
        for i in 1..self.n() {
            let mut denom = q;
            if denom.abs() < tiny {
                denom = if denom < 0.0 { -tiny } else { tiny };
            }
            q = self.diag[i] - sigma - self.off[i - 1] * self.off[i - 1] / denom;
            if q < 0.0 {
                count += 1;
            }
        }
        count
    }

    /// The `n_low` smallest eigenvalues, increasing.
    pub fn smallest_eigenvalues(&self, n_low: usize) -> Vec<f64> {
        let mut lo0 = f64::INFINITY;
        let mut hi0 = f64::NEG_INFINITY;
        for i in 0..self.n() {
            let r = self.off.get(i.wrapping_sub(1)).copied().unwrap_or(0.0).abs()
                + self.off.get(i).copied().unwrap_or(0.0).abs();
            lo0 = lo0.min(self.diag[i] - r);
            hi0 = hi0.max(self.diag[i] + r);
        }
        (0..n_low)
            .map(|k| {
                let (mut lo, mut hi) = (lo0, hi0);
                // bisect until the bracket is at the rounding floor
                for _ in 0..120 {
                    let mid = 0.5 * (lo + hi);
                    if mid <= lo || mid >= hi {
                        break;
                    }
                    if self.count_below(mid) > k {
                        hi = mid;
                    } else {
                        lo = mid;
                    }
                }
                0.5 * (lo + hi)
            })
            .collect()
    }

    /// Eigenvector for an eigenvalue estimate, by inverse iteration with
    /// partial pivoting. Returned vector has unit Euclidean norm.
    pub fn eigenvector(&self, lambda: f64) -> Vec<f64> {
        let n = self.n();
        // deterministic pseudo-random start to avoid symmetry traps
        let mut state = 0x9e37_79b9_7f4a_7c15u64 ^ (lambda.to_bits());
        if state == 0 {
            state = 1;
        }
        let mut v: Vec<f64> = (0..n)
            .map(|_| {
                state ^= state << 13;
                state ^= state >> 7;
                state ^= state << 17;
                (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
            })
            .collect();
        normalize(&mut v);
        for _ in 0..3 {
            match self.solve_shifted(lambda, &v) {
                Some(mut w) => {
                    normalize(&mut w);
                    v = w;
                }
                None => {
                    // exactly singular shift: nudge by one part in 1e12
                    let shifted = lambda * (1.0 + 1e-12) + 1e-300;
                    if let Some(mut w) = self.solve_shifted(shifted, &v) {
                        normalize(&mut w);
                        v = w;
                    }
                }
            }
        }
        v
    }

    /// Solves `(A - lambda I) x = b` by banded LU with partial pivoting
    /// (one superdiagonal of fill-in).
    fn solve_shifted(&self, lambda: f64, b: &[f64]) -> Option<Vec<f64>> {
        let n = self.n();
        let mut diag: Vec<f64> = self.diag.iter().map(|&x| x - lambda).collect();
        let mut sup: Vec<f64> = (0..n - 1).map(|i| self.off[i]).collect();
        let mut sup2 = vec![0.0; n.saturating_sub(2)];
        let mut rhs = b.to_vec();
        for i in 0..n - 1 {
            // eliminate the subdiagonal entry of row i+1, pivoting when it
            // exceeds the current diagonal
            let (p, s) = (diag[i], self.off[i]);
            if s.abs() > p.abs() {
                // swap row i and i+1
                let row_i = (
                    diag[i],
                    sup[i],
                    if i < sup2.len() { sup2[i] } else { 0.0 },
                    rhs[i],
                );
                diag[i] = s;
                sup[i] = diag[i + 1];
                if i < sup2.len() {
                    sup2[i] = if i + 1 < sup.len() { sup[i + 1] } else { 0.0 };
                }
                rhs[i] = rhs[i + 1];
                diag[i + 1] = row_i.1;
                if i + 1 < sup.len() {
                    sup[i + 1] = row_i.2;
                }
                rhs[i + 1] = row_i.3;
                let m = row_i.0 / diag[i];
                diag[i + 1] -= m * sup[i];
                if i + 1 < sup.len() {
                    sup[i + 1] -= m * if i < sup2.len() { sup2[i] } else { 0.0 };
                }
                rhs[i + 1] -= m * rhs[i];
            } else {
                if p == 0.0 {
                    return None;
                }
                let m = s / p;
                diag[i + 1] -= m * sup[i];
                if i + 1 < sup.len() {
                    sup[i + 1] -= m * if i < sup2.len() { sup2[i] } else { 0.0 };
                }
                rhs[i + 1] -= m * rhs[i];
            }
        }
        // back substitution
        let mut x = vec![0.0; n];
        for i in (0..n).rev() {
            let mut v = rhs[i];
            if i + 1 < n {
                v -= sup[i] * x[i + 1];
            }
            if i + 2 < n && i < sup2.len() {
                v -= sup2[i] * x[i + 2];
            }
            if diag[i] == 0.0 {
                return None;
            }
            x[i] = v / diag[i];
            if !x[i].is_finite() {
                return None;
            }
        }
        Some(x)
    }
}

fn normalize(v: &mut [f64]) {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 0.0 {
        for x in v.iter_mut() {
            *x /= norm;
        }
    }
}

fn dirichlet_matrix(g: &[f64]) -> SymTridiag {
    let n = g.len();
    let h = 1.0 / (n - 1) as f64;
    let inv_h2 = 1.0 / (h * h);
    SymTridiag {
        diag: g[1..n - 1].iter().map(|&gi| 2.0 * inv_h2 + gi).collect(),
        off: vec![-inv_h2; n - 3],
    }
}

/// Solves the Dirichlet eigenproblem for the potential samples `g`
/// (length `n_grid`, uniform on `[0,1]`, endpoints included).
///
/// Returns the first `n_modes` eigenpairs. Eigenvalues carry Richardson
/// extrapolation across `h` and `h/2`; eigenfunctions are L2-normalized by
/// composite Simpson quadrature and sign-fixed so that `omega_k'(0) > 0`.
pub fn solve_eigensystem(g: &[f64], n_modes: usize, n_grid: usize) -> Result<EigenSystem> {
    if n_grid % 2 == 0 || n_grid < 17 {
        return Err(Error::InvalidInput(format!(
            "n_grid must be odd and >= 17, got {n_grid}"
        )));
    }
    if g.len() != n_grid {
        return Err(Error::GridMismatch {
            expected: n_grid,
            got: g.len(),
        });
    }
    if n_modes == 0 || n_modes > n_grid / 8 {
        return Err(Error::ResolutionTooLow { n_modes, n_grid });
    }
    let min_g = g.iter().cloned().fold(f64::INFINITY, f64::min);
    if min_g < -1e-10 {
        return Err(Error::NonPositivePotential(min_g));
    }

    let grid = linspace(0.0, 1.0, n_grid);
    let coarse = dirichlet_matrix(g);
    let lam_coarse = coarse.smallest_eigenvalues(n_modes);

    // refine the potential to h/2 by cubic spline and re-solve for the
    // Richardson combination
    let fine_grid = linspace(0.0, 1.0, 2 * n_grid - 1);
    let spline = CubicSpline::new(&grid, g);
    let g_fine: Vec<f64> = fine_grid.iter().map(|&x| spline.eval(x)).collect();
    let lam_fine = dirichlet_matrix(&g_fine).smallest_eigenvalues(n_modes);

    let lambdas: Vec<f64> = lam_coarse
        .iter()
        .zip(&lam_fine)
        .map(|(&c, &f)| (4.0 * f - c) / 3.0)
        .collect();

    let omegas: Vec<Vec<f64>> = lam_coarse
        .iter()
        .map(|&lam| {
            let interior = coarse.eigenvector(lam);
            let mut w = Vec::with_capacity(n_grid);
            w.push(0.0);
            w.extend_from_slice(&interior);
            w.push(0.0);
            // L2 normalization on the quadrature grid
            let norm = crate::grid::l2_norm(&w);
            let sign = if w[1] >= 0.0 { 1.0 } else { -1.0 };
            let scale = sign / norm;
            for x in w.iter_mut() {
                *x *= scale;
            }
            w
        })
        .collect();

    Ok(EigenSystem {
        grid,
        potential: g.to_vec(),
        lambdas,
        omegas,
    })
}

/// Projects samples `v` (on `sys.grid`) onto the first `n_modes`
/// eigenfunctions: `c_k = (v, omega_k)` by composite Simpson.
pub fn project(sys: &EigenSystem, v: &[f64], n_modes: usize) -> Result<SpectralCoefficients> {
    if v.len() != sys.n_grid() {
        return Err(Error::GridMismatch {
            expected: sys.n_grid(),
            got: v.len(),
        });
    }
    if n_modes > sys.n_modes() {
        return Err(Error::GridMismatch {
            expected: sys.n_modes(),
            got: n_modes,
        });
    }
    let values = sys.omegas[..n_modes]
        .iter()
        .map(|w| inner_product(v, w))
        .collect::<Result<Vec<_>>>()?;
    Ok(SpectralCoefficients { values })
}

/// Synthesizes `sum_k c_k omega_k` on the grid.
pub fn synthesize(sys: &EigenSystem, c: &SpectralCoefficients) -> Result<Vec<f64>> {
    if c.n_modes() > sys.n_modes() {
        return Err(Error::GridMismatch {
            expected: sys.n_modes(),
            got: c.n_modes(),
        });
    }
    let mut out = vec![0.0; sys.n_grid()];
    for (ck, w) in c.values.iter().zip(&sys.omegas) {
        for (o, &wi) in out.iter_mut().zip(w) {
            *o += ck * wi;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn zero_potential(n: usize) -> Vec<f64> {
        vec![0.0; n]
    }

    #[test]
    fn laplacian_eigenvalues_and_functions() {
        let n = 513;
        let sys = solve_eigensystem(&zero_potential(n), 8, n).unwrap();
        for k in 1..=8usize {
            let exact = (k as f64 * PI).powi(2);
            let got = sys.lambdas[k - 1];
            assert!(
                (got / exact - 1.0).abs() < 1e-7,
                "k={k}: {got} vs {exact}"
            );
            // eigenfunction vs sqrt(2) sin(k pi x)
            let mut max_err = 0.0f64;
            for (i, &x) in sys.grid.iter().enumerate() {
                let exact_w = 2.0f64.sqrt() * (k as f64 * PI * x).sin();
                max_err = max_err.max((sys.omegas[k - 1][i] - exact_w).abs());
            }
            assert!(max_err < 5e-4, "k={k}: sup error {max_err}");
        }
    }

    #[test]
    fn constant_shift() {
        let n = 513;
        let sys0 = solve_eigensystem(&zero_potential(n), 5, n).unwrap();
        let sys5 = solve_eigensystem(&vec![5.0; n], 5, n).unwrap();
        for k in 0..5 {
            assert!(
                (sys5.lambdas[k] - sys0.lambdas[k] - 5.0).abs() < 1e-9,
                "k={k}"
            );
        }
    }

    #[test]
    fn linear_potential_against_airy_oracle() {
        // -u'' + x u = lambda u, Dirichlet on [0,1]:
        // lambda_1 = 10.36850716183634 from the Airy-function secular
        // equation Ai(-l) Bi(1-l) = Ai(1-l) Bi(-l), 40-digit root.
        let n = 2049;
        let g: Vec<f64> = linspace(0.0, 1.0, n);
        let sys = solve_eigensystem(&g, 4, n).unwrap();
        let exact = 10.368_507_161_836_337;
        assert!(
            (sys.lambdas[0] / exact - 1.0).abs() < 1e-8,
            "{} vs {exact}",
            sys.lambdas[0]
        );
    }

    #[test]
    fn orthonormality_and_boundary() {
        let n = 1025;
        let g: Vec<f64> = linspace(0.0, 1.0, n)
            .iter()
            .map(|&x| 1.0 + (3.0 * PI * x).sin().abs())
            .collect();
        let sys = solve_eigensystem(&g, 20, n).unwrap();
        for j in 0..20 {
            assert_eq!(sys.omegas[j][0], 0.0);
            assert_eq!(sys.omegas[j][n - 1], 0.0);
            for k in 0..20 {
                let ip = inner_product(&sys.omegas[j], &sys.omegas[k]).unwrap();
                let want = if j == k { 1.0 } else { 0.0 };
                assert!(
                    (ip - want).abs() < 1e-8,
                    "({j},{k}): {ip}"
                );
            }
        }
        // increasing, simple
        for k in 1..20 {
            assert!(sys.lambdas[k] > sys.lambdas[k - 1]);
        }
    }

    #[test]
    fn projection_identities() {
        let n = 513;
        let sys = solve_eigensystem(&zero_potential(n), 10, n).unwrap();
        // v = omega_2
        let c = project(&sys, &sys.omegas[1], 6).unwrap();
        for (i, &ci) in c.values.iter().enumerate() {
            let want = if i == 1 { 1.0 } else { 0.0 };
            assert!((ci - want).abs() < 1e-8, "i={i}: {ci}");
        }
        // v = 3 omega_1 - 2 omega_3
        let v: Vec<f64> = (0..n)
            .map(|i| 3.0 * sys.omegas[0][i] - 2.0 * sys.omegas[2][i])
            .collect();
        let c = project(&sys, &v, 6).unwrap();
        let want = [3.0, 0.0, -2.0, 0.0, 0.0, 0.0];
        for (ci, wi) in c.values.iter().zip(want) {
            assert!((ci - wi).abs() < 1e-8);
        }
        // synthesize . project = identity on the span
        let back = synthesize(&sys, &c).unwrap();
        for (a, b) in back.iter().zip(&v) {
            assert!((a - b).abs() < 1e-8);
        }
    }

    #[test]
    fn bubble_function_analytic_coefficients() {
        // v = x(1-x) against int_0^1 x(1-x) sqrt(2) sin(k pi x) dx
        //   = 2 sqrt(2) (1 - (-1)^k) / (k pi)^3
        let n = 2049;
        let sys = solve_eigensystem(&zero_potential(n), 8, n).unwrap();
        let v: Vec<f64> = sys.grid.iter().map(|&x| x * (1.0 - x)).collect();
        let c = project(&sys, &v, 8).unwrap();
        for k in 1..=8usize {
            let sign = if k % 2 == 1 { 2.0 } else { 0.0 };
            let want = 2.0f64.sqrt() * 2.0 * sign / (k as f64 * PI).powi(3);
            assert!(
                (c.values[k - 1] - want).abs() < 1e-9,
                "k={k}: {} vs {want}",
                c.values[k - 1]
            );
        }
    }

    #[test]
    fn guards() {
        let n = 129;
        assert!(matches!(
            solve_eigensystem(&zero_potential(n), 64, n),
            Err(Error::ResolutionTooLow { .. })
        ));
        let mut g = zero_potential(n);
        g[50] = -1.0;
        assert!(matches!(
            solve_eigensystem(&g, 4, n),
            Err(Error::NonPositivePotential(_))
        ));
    }

    #[test]
    fn json_roundtrip() {
        let n = 129;
        let sys = solve_eigensystem(&zero_potential(n), 3, n).unwrap();
        let s = sys.to_json().unwrap();
        let back = EigenSystem::from_json(&s).unwrap();
        assert_eq!(back.lambdas, sys.lambdas);
        assert_eq!(back.omegas, sys.omegas);
    }
}
