//! Shared grid utilities: composite Simpson quadrature, natural cubic
//! spline interpolation, and finite-difference derivatives on uniform grids.

use crate::{Error, Result};

/// Uniform grid points on `[a, b]` inclusive.
pub fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    assert!(n >= 2);
    let h = (b - a) / (n - 1) as f64;
    (0..n).map(|i| a + h * i as f64).collect()
}

/// Composite Simpson rule over `n` uniformly spaced samples with step `h`.
/// Requires an odd sample count (even number of intervals).
pub fn simpson(values: &[f64], h: f64) -> f64 {
    let n = values.len();
    assert!(n >= 3 && n % 2 == 1, "simpson needs an odd sample count");
    let mut s = values[0] + values[n - 1];
    for (i, v) in values.iter().enumerate().take(n - 1).skip(1) {
        s += if i % 2 == 1 { 4.0 * v } else { 2.0 * v };
    }
    s * h / 3.0
}

/// L2(0,1) inner product of two sample vectors on the same uniform grid.
pub fn inner_product(u: &[f64], v: &[f64]) -> Result<f64> {
    if u.len() != v.len() {
        return Err(Error::GridMismatch {
            expected: u.len(),
            got: v.len(),
        });
    }
    let h = 1.0 / (u.len() - 1) as f64;
    let prod: Vec<f64> = u.iter().zip(v).map(|(a, b)| a * b).collect();
    Ok(simpson(&prod, h))
}

/// L2(0,1) norm of samples on a uniform grid.
pub fn l2_norm(u: &[f64]) -> f64 {
    inner_product(u, u).expect("same slice").max(0.0).sqrt()
}

/// Natural cubic spline through `(x_i, y_i)` with strictly increasing `x`.
pub struct CubicSpline {
    x: Vec<f64>,
    y: Vec<f64>,
    // second derivatives at the nodes
    m: Vec<f64>,
}

impl CubicSpline {
    pub fn new(x: &[f64], y: &[f64]) -> Self {
        assert_eq!(x.len(), y.len());
        let n = x.len();
        assert!(n >= 3);
        // tridiagonal system for the second derivatives, natural BCs
        let mut sub = vec![0.0; n];
        let mut diag = vec![1.0; n];
        let mut sup = vec![0.0; n];
        let mut rhs = vec![0.0; n];
        for i in 1..n - 1 {
            let hl = x[i] - x[i - 1];
            let hr = x[i + 1] - x[i];
            sub[i] = hl / 6.0;
            diag[i] = (hl + hr) / 3.0;
            sup[i] = hr / 6.0;
            rhs[i] = (y[i + 1] - y[i]) / hr - (y[i] - y[i - 1]) / hl;
        }
        // Thomas algorithm
        let mut m = vec![0.0; n];
        let mut c = vec![0.0; n];
        let mut d = vec![0.0; n];
        c[0] = sup[0] / diag[0];
        d[0] = rhs[0] / diag[0];
        for i in 1..n {
            let denom = diag[i] - sub[i] * c[i - 1];
            c[i] = sup[i] / denom;
            d[i] = (rhs[i] - sub[i] * d[i - 1]) / denom;
        }
        m[n - 1] = d[n - 1];
        for i in (0..n - 1).rev() {
            m[i] = d[i] - c[i] * m[i + 1];
        }
        Self {
            x: x.to_vec(),
            y: y.to_vec(),
            m,
        }
    }

    fn segment(&self, xq: f64) -> usize {
        let n = self.x.len();
        match self
            .x
            .binary_search_by(|v| v.partial_cmp(&xq).expect("finite"))
        {
            Ok(i) => i.min(n - 2),
            Err(i) => i.clamp(1, n - 1) - 1,
        }
    }

    pub fn eval(&self, xq: f64) -> f64 {
        let i = self.segment(xq);
        let h = self.x[i + 1] - self.x[i];
        let a = (self.x[i + 1] - xq) / h;
        let b = (xq - self.x[i]) / h;
        a * self.y[i]
            + b * self.y[i + 1]
            + ((a * a * a - a) * self.m[i] + (b * b * b - b) * self.m[i + 1]) * h * h / 6.0
    }
}

/// First derivative of uniform samples by 4th-order centered differences,
/// one-sided 4th-order stencils at the boundary.
pub fn derivative_4th(y: &[f64], h: f64) -> Vec<f64> {
    let n = y.len();
    assert!(n >= 6);
    let mut d = vec![0.0; n];
    for i in 2..n - 2 {
        d[i] = (y[i - 2] - 8.0 * y[i - 1] + 8.0 * y[i + 1] - y[i + 2]) / (12.0 * h);
    }
    let fwd = |i: usize| {
        (-25.0 * y[i] + 48.0 * y[i + 1] - 36.0 * y[i + 2] + 16.0 * y[i + 3] - 3.0 * y[i + 4])
            / (12.0 * h)
    };
    let bwd = |i: usize| {
        (25.0 * y[i] - 48.0 * y[i - 1] + 36.0 * y[i - 2] - 16.0 * y[i - 3] + 3.0 * y[i - 4])
            / (12.0 * h)
    };
    d[0] = fwd(0);
    d[1] = fwd(1);
    d[n - 2] = bwd(n - 2);
    d[n - 1] = bwd(n - 1);
    d
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn simpson_exact_for_cubics() {
        let n = 101;
        let h = 1.0 / (n - 1) as f64;
        let vals: Vec<f64> = (0..n)
            .map(|i| {
                let x = i as f64 * h;
                3.0 * x * x * x - x + 2.0
            })
            .collect();
        // integral over [0,1] = 3/4 - 1/2 + 2 = 2.25
        assert!((simpson(&vals, h) - 2.25).abs() < 1e-13);
    }

    #[test]
    fn spline_reproduces_smooth_function() {
        // Natural boundary conditions are exact when the curvature vanishes
        // at both endpoints, so sin(pi t) on [0,1] avoids the O(h^2) edge layer.
        let x = linspace(0.0, 1.0, 201);
        let y: Vec<f64> = x.iter().map(|&t| (PI * t).sin()).collect();
        let sp = CubicSpline::new(&x, &y);
        for &t in &[0.013, 0.35, 0.777, 0.999] {
            assert!((sp.eval(t) - (PI * t).sin()).abs() < 1e-8);
        }
    }

    #[test]
    fn derivative_4th_on_polynomial() {
        let x = linspace(0.0, 1.0, 64);
        let h = x[1] - x[0];
        let y: Vec<f64> = x.iter().map(|&t| t * t * t * t).collect();
        let d = derivative_4th(&y, h);
        for (i, &t) in x.iter().enumerate() {
            assert!(
                (d[i] - 4.0 * t * t * t).abs() < 1e-10,
                "i={i}: {} vs {}",
                d[i],
                4.0 * t * t * t
            );
        }
    }
}
