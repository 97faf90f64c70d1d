//! Exact per-mode solutions of the mixed problem: a fractional-diffusion
//! branch for t > 0 and a hyperbolic branch (classical wave or fractional
//! order in (1,2)) for t < 0, glued at t = 0 by continuity of the mode
//! value and by matching the fractional-derivative limit with the
//! left-hand time derivative.

use crate::mlf::{mlf_eval, MlfParams};
use crate::spectral::EigenSystem;
use crate::{Error, Result};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::io::Write;

/// Orders, time extents and the two measurement traces
/// `phi = u(., q)`, `psi = u(., -p)` sampled on the spatial grid.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProblemSpec {
    /// diffusion order, 0 < alpha <= 1
    pub alpha: f64,
    /// hyperbolic order: exactly 2 (classical wave) or in (1,2)
    pub beta: f64,
    /// backward time extent, p > 0
    pub p: f64,
    /// forward time extent, q > 0
    pub q: f64,
    pub phi: Vec<f64>,
    pub psi: Vec<f64>,
}

impl ProblemSpec {
    pub fn new(alpha: f64, beta: f64, p: f64, q: f64, phi: Vec<f64>, psi: Vec<f64>) -> Result<Self> {
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(Error::InvalidInput(format!(
                "alpha must lie in (0, 1], got {alpha}"
            )));
        }
        if !(beta == 2.0 || (beta > 1.0 && beta < 2.0)) {
            return Err(Error::InvalidInput(format!(
                "beta must be 2 or in (1, 2), got {beta}"
            )));
        }
        if !(p > 0.0 && q > 0.0) {
            return Err(Error::InvalidInput(format!(
                "time extents must be positive, got p={p}, q={q}"
            )));
        }
        if phi.len() != psi.len() {
            return Err(Error::GridMismatch {
                expected: phi.len(),
                got: psi.len(),
            });
        }
        for (name, v) in [("phi", &phi), ("psi", &psi)] {
            let (first, last) = (v[0], v[v.len() - 1]);
            if first.abs() > 1e-8 || last.abs() > 1e-8 {
                return Err(Error::InvalidInput(format!(
                    "{name} must vanish at both endpoints, got ({first:e}, {last:e})"
                )));
            }
        }
        Ok(Self { alpha, beta, p, q, phi, psi })
    }

    /// Classical-wave branch (beta exactly 2) versus fractional branch.
    pub fn is_wave(&self) -> bool {
        self.beta == 2.0
    }
}

/// Hyperbolic-branch data of a single mode.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub enum HyperbolicData {
    /// classical wave amplitudes: W(t) = a sin(sqrt(l) t) + b cos(sqrt(l) t) + f/l
    Wave { a: f64, b: f64 },
    /// fractional branch initial data W(0), W'(0)
    Fractional { w0: f64, w0_prime: f64 },
}

/// One spectral mode of the glued field.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModeSolution {
    pub k: usize,
    pub lambda: f64,
    pub f_k: f64,
    /// V(0), the shared mode value at t = 0
    pub v0: f64,
    pub hyperbolic: HyperbolicData,
    /// the mode determinant the reconstruction divided by (NaN when
    /// the mode was built directly rather than reconstructed)
    pub delta: f64,
}

impl ModeSolution {
    /// Wave branch glued to the diffusion branch:
    /// continuity gives b = v0 - f/lambda, derivative matching gives
    /// sqrt(lambda) a = f - lambda v0.
    pub fn glued_wave(k: usize, lambda: f64, f_k: f64, v0: f64, delta: f64) -> Self {
        let a = (f_k - lambda * v0) / lambda.sqrt();
        let b = v0 - f_k / lambda;
        ModeSolution {
            k,
            lambda,
            f_k,
            v0,
            hyperbolic: HyperbolicData::Wave { a, b },
            delta,
        }
    }

    /// Fractional branch glued the same way: W(0) = v0, W'(0) = f - lambda v0.
    pub fn glued_fractional(k: usize, lambda: f64, f_k: f64, v0: f64, delta: f64) -> Self {
        ModeSolution {
            k,
            lambda,
            f_k,
            v0,
            hyperbolic: HyperbolicData::Fractional {
                w0: v0,
                w0_prime: f_k - lambda * v0,
            },
            delta,
        }
    }

    /// Mode value at any time, dispatching on the sign of t.
    pub fn eval(&self, alpha: f64, beta: f64, t: f64) -> Result<f64> {
        if t >= 0.0 {
            mode_parabolic(alpha, self.lambda, self.v0, self.f_k, t)
        } else {
            match self.hyperbolic {
                HyperbolicData::Wave { a, b } => Ok(mode_wave(self.lambda, a, b, self.f_k, t)),
                HyperbolicData::Fractional { w0, w0_prime } => {
                    mode_fractional_wave(beta, self.lambda, w0, w0_prime, self.f_k, t)
                }
            }
        }
    }

    /// Caputo derivative of the diffusion branch, closed form:
    /// C_D^alpha V(t) = (f - lambda v0) E_{alpha,1}(-lambda t^alpha).
    pub fn caputo_derivative(&self, alpha: f64, t: f64) -> Result<f64> {
        let e1 = mlf_eval(&MlfParams::new(alpha, 1.0)?, -self.lambda * t.powf(alpha))?;
        Ok((self.f_k - self.lambda * self.v0) * e1)
    }

    /// Time derivative of the hyperbolic branch at t <= 0.
    pub fn hyperbolic_derivative(&self, beta: f64, t: f64) -> Result<f64> {
        let lam = self.lambda;
        match self.hyperbolic {
            HyperbolicData::Wave { a, b } => {
                let s = lam.sqrt();
                Ok(s * (a * (s * t).cos() - b * (s * t).sin()))
            }
            HyperbolicData::Fractional { w0, w0_prime } => {
                let s = -t;
                if s == 0.0 {
                    return Ok(w0_prime);
                }
                let sb = s.powf(beta);
                let e1 = mlf_eval(&MlfParams::new(beta, 1.0)?, -lam * sb)?;
                let eb = mlf_eval(&MlfParams::new(beta, beta)?, -lam * sb)?;
                Ok(w0_prime * e1 - (self.f_k - lam * w0) * s.powf(beta - 1.0) * eb)
            }
        }
    }
}

/// Diffusion-branch mode value for t >= 0:
/// V(t) = v0 E_{alpha,1}(-lambda t^alpha) + f t^alpha E_{alpha,alpha+1}(-lambda t^alpha).
pub fn mode_parabolic(alpha: f64, lambda: f64, v0: f64, f_k: f64, t: f64) -> Result<f64> {
    if t < 0.0 {
        return Err(Error::InvalidInput(format!("t must be >= 0, got {t}")));
    }
    if t == 0.0 {
        return Ok(v0);
    }
    let ta = t.powf(alpha);
    let z = -lambda * ta;
    let e1 = mlf_eval(&MlfParams::new(alpha, 1.0)?, z)?;
    let e2 = mlf_eval(&MlfParams::new(alpha, alpha + 1.0)?, z)?;
    Ok(v0 * e1 + f_k * ta * e2)
}

/// Classical wave mode for t <= 0:
/// W(t) = a sin(sqrt(lambda) t) + b cos(sqrt(lambda) t) + f/lambda.
pub fn mode_wave(lambda: f64, a: f64, b: f64, f_k: f64, t: f64) -> f64 {
    let s = lambda.sqrt();
    a * (s * t).sin() + b * (s * t).cos() + f_k / lambda
}

/// Fractional hyperbolic mode for t <= 0, order 1 < beta < 2:
/// W(t) = w0 E_{beta,1}(-lambda s^beta) + t w0' E_{beta,2}(-lambda s^beta)
///      + f s^beta E_{beta,beta+1}(-lambda s^beta),  s = -t.
pub fn mode_fractional_wave(
    beta: f64,
    lambda: f64,
    w0: f64,
    w0_prime: f64,
    f_k: f64,
    t: f64,
) -> Result<f64> {
    if t > 0.0 {
        return Err(Error::InvalidInput(format!("t must be <= 0, got {t}")));
    }
    if t == 0.0 {
        return Ok(w0);
    }
    let s = -t;
    let sb = s.powf(beta);
    let z = -lambda * sb;
    let e1 = mlf_eval(&MlfParams::new(beta, 1.0)?, z)?;
    let e2 = mlf_eval(&MlfParams::new(beta, 2.0)?, z)?;
    let e3 = mlf_eval(&MlfParams::new(beta, beta + 1.0)?, z)?;
    Ok(w0 * e1 + t * w0_prime * e2 + f_k * sb * e3)
}

/// The assembled space-time field on a tensor grid.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolutionField {
    pub grid_x: Vec<f64>,
    pub grid_t: Vec<f64>,
    /// row-major: u[i][j] = u(grid_x[j], grid_t[i])
    pub u: Vec<Vec<f64>>,
}

impl SolutionField {
    /// Spatial slice at the time node closest to t (must match within 1e-12).
    pub fn slice_at(&self, t: f64) -> Option<&[f64]> {
        self.grid_t
            .iter()
            .position(|&tv| (tv - t).abs() <= 1e-12)
            .map(|i| self.u[i].as_slice())
    }

    /// Long-format CSV: one row per (t, x) pair, header `t,x,u`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "t,x,u")?;
        for (i, &t) in self.grid_t.iter().enumerate() {
            for (j, &x) in self.grid_x.iter().enumerate() {
                writeln!(w, "{:.17e},{:.17e},{:.17e}", t, x, self.u[i][j])?;
            }
        }
        Ok(())
    }
}

/// Sums the modes against the eigenfunctions over the whole time grid,
/// choosing the branch by the sign of t. Time rows are independent and
/// evaluated in parallel.
pub fn assemble_field(
    sys: &EigenSystem,
    modes: &[ModeSolution],
    spec: &ProblemSpec,
    grid_t: &[f64],
) -> Result<SolutionField> {
    if modes.len() > sys.n_modes() {
        return Err(Error::GridMismatch {
            expected: sys.n_modes(),
            got: modes.len(),
        });
    }
    let n_x = sys.n_grid();
    let u: Result<Vec<Vec<f64>>> = grid_t
        .par_iter()
        .map(|&t| {
            let mut row = vec![0.0; n_x];
            for m in modes {
                let v = m.eval(spec.alpha, spec.beta, t)?;
                let omega = &sys.omegas[m.k - 1];
                for (r, &w) in row.iter_mut().zip(omega) {
                    *r += v * w;
                }
            }
            Ok(row)
        })
        .collect();
    Ok(SolutionField {
        grid_x: sys.grid.clone(),
        grid_t: grid_t.to_vec(),
        u: u?,
    })
}

/// L2 mismatch between the fractional-derivative limit from t > 0 and the
/// time derivative from t < 0, both evaluated at distance `t_small` from
/// the interface. Computed in coefficient space (the eigenbasis is
/// orthonormal, so the coefficient 2-norm is the L2 norm of the field).
pub fn gluing_residual(modes: &[ModeSolution], spec: &ProblemSpec, t_small: f64) -> Result<f64> {
    if !(t_small > 0.0 && t_small < spec.p.min(spec.q)) {
        return Err(Error::InvalidInput(format!(
            "t_small must lie in (0, min(p,q)), got {t_small}"
        )));
    }
    let mut sum = 0.0;
    for m in modes {
        let lhs = m.caputo_derivative(spec.alpha, t_small)?;
        let rhs = m.hyperbolic_derivative(spec.beta, -t_small)?;
        sum += (lhs - rhs) * (lhs - rhs);
    }
    Ok(sum.sqrt())
}
