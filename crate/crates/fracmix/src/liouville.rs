//! Liouville transformation: normalizes the self-adjoint operator
//! `L v = (r v')' - e v` on `[a,b]` into the normal form
//! `L* w = w'' - g w` on `[0,1]`, and maps functions and eigenvalues
//! between the two frames.
//!
//! With `l(x) = r(x)^{1/4}`, `K = int_a^b r^{-1/2}` and
//! `z(x) = (1/K) int_a^x r^{-1/2}`, the transformed potential reduces to
//! `g(z) = K^2 [ e(x) + r''(x)/4 - r'(x)^2 / (16 r(x)) ]` at `x = x(z)`,
//! and eigenvalues relate by `lambda = K^2 mu`.

use crate::grid::{derivative_4th, linspace, CubicSpline};
use crate::{Error, Result};
use std::sync::Arc;

type RealFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// A coefficient function of the operator: analytic callable (optionally
/// with derivative callables) or samples to be interpolated.
#[derive(Clone)]
pub enum Coefficient {
    Analytic {
        f: RealFn,
        d1: Option<RealFn>,
        d2: Option<RealFn>,
    },
    Sampled {
        x: Vec<f64>,
        y: Vec<f64>,
    },
}

impl Coefficient {
    pub fn constant(c: f64) -> Self {
        Coefficient::Analytic {
            f: Arc::new(move |_| c),
            d1: Some(Arc::new(|_| 0.0)),
            d2: Some(Arc::new(|_| 0.0)),
        }
    }

    pub fn from_fn(f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Coefficient::Analytic {
            f: Arc::new(f),
            d1: None,
            d2: None,
        }
    }

    pub fn from_fn_with_derivatives(
        f: impl Fn(f64) -> f64 + Send + Sync + 'static,
        d1: impl Fn(f64) -> f64 + Send + Sync + 'static,
        d2: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Coefficient::Analytic {
            f: Arc::new(f),
            d1: Some(Arc::new(d1)),
            d2: Some(Arc::new(d2)),
        }
    }

    /// Two-column CSV `x,value` with a header row; x strictly increasing.
    pub fn from_csv(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut x = Vec::new();
        let mut y = Vec::new();
        for (lineno, line) in text.lines().enumerate().skip(1) {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let mut parts = line.split(',');
            let parse = |s: Option<&str>| -> Result<f64> {
                s.and_then(|v| v.trim().parse().ok()).ok_or_else(|| {
                    Error::InvalidInput(format!("{}:{}: malformed row", path.display(), lineno + 1))
                })
            };
            x.push(parse(parts.next())?);
            y.push(parse(parts.next())?);
        }
        if x.len() < 8 {
            return Err(Error::InvalidInput(format!(
                "{}: need at least 8 sample rows",
                path.display()
            )));
        }
        if !x.windows(2).all(|w| w[1] > w[0]) {
            return Err(Error::InvalidInput(format!(
                "{}: x column must be strictly increasing",
                path.display()
            )));
        }
        Ok(Coefficient::Sampled { x, y })
    }

    fn evaluator(&self) -> Result<RealFn> {
        match self {
            Coefficient::Analytic { f, .. } => Ok(f.clone()),
            Coefficient::Sampled { x, y } => {
                let sp = Arc::new(CubicSpline::new(x, y));
                Ok(Arc::new(move |t| sp.eval(t)))
            }
        }
    }
}

/// The original operator data: interval `[a,b]`, leading coefficient `r`
/// (C^2, positive) and zero-order coefficient `e` (continuous).
#[derive(Clone)]
pub struct OperatorSpec {
    pub a: f64,
    pub b: f64,
    pub r: Coefficient,
    pub e: Coefficient,
}

impl OperatorSpec {
    pub fn new(a: f64, b: f64, r: Coefficient, e: Coefficient) -> Result<Self> {
        if !(a < b) {
            return Err(Error::InvalidInput(format!(
                "interval endpoints must satisfy a < b, got [{a}, {b}]"
            )));
        }
        Ok(Self { a, b, r, e })
    }
}

/// Immutable result of the Liouville transformation, sampled on a uniform
/// `z`-grid on `[0,1]` with the matching (non-uniform) `x` nodes.
pub struct LiouvilleMap {
    pub a: f64,
    pub b: f64,
    /// normalization constant `K = int_a^b r^{-1/2}`
    pub k: f64,
    /// uniform z grid on [0,1]
    pub z_grid: Vec<f64>,
    /// x(z_j) for each z grid node
    pub x_nodes: Vec<f64>,
    /// l(x(z_j)) = r^{1/4}
    pub l: Vec<f64>,
    /// normal-form potential g(z_j)
    pub g: Vec<f64>,
    // forward map samples: uniform x grid and z(x) there
    x_uniform: Vec<f64>,
    z_at_x_uniform: Vec<f64>,
}

pub const DEFAULT_G_CAP: f64 = 1e6;

/// Builds the Liouville map on an `n_grid`-point z grid (forced odd).
pub fn build_map(op: &OperatorSpec, n_grid: usize) -> Result<LiouvilleMap> {
    build_map_with_cap(op, n_grid, DEFAULT_G_CAP)
}

pub fn build_map_with_cap(op: &OperatorSpec, n_grid: usize, g_cap: f64) -> Result<LiouvilleMap> {
    if n_grid < 64 {
        return Err(Error::InvalidInput(format!(
            "n_grid must be >= 64, got {n_grid}"
        )));
    }
    let n = if n_grid % 2 == 0 { n_grid + 1 } else { n_grid };
    let (a, b) = (op.a, op.b);
    let r_eval = op.r.evaluator()?;
    let e_eval = op.e.evaluator()?;

    let x_uniform = linspace(a, b, n);
    let h = (b - a) / (n - 1) as f64;
    let r_samples: Vec<f64> = x_uniform.iter().map(|&x| r_eval(x)).collect();
    for (&x, &r) in x_uniform.iter().zip(&r_samples) {
        if !(r > 0.0) {
            return Err(Error::NonPositiveR { x, value: r });
        }
    }

    // cumulative integral C(x) = int_a^x r^{-1/2}, per-interval Simpson
    let w = |x: f64| r_eval(x).powf(-0.5);
    let mut cumulative = Vec::with_capacity(n);
    cumulative.push(0.0);
    for i in 0..n - 1 {
        let (x0, x1) = (x_uniform[i], x_uniform[i + 1]);
        let seg = (h / 6.0) * (w(x0) + 4.0 * w(0.5 * (x0 + x1)) + w(x1));
        cumulative.push(cumulative[i] + seg);
    }
    let k = cumulative[n - 1];
    let z_at_x_uniform: Vec<f64> = cumulative.iter().map(|&c| c / k).collect();

    // derivative callables for r, else 4th-order finite differences
    let (r1_eval, r2_eval): (RealFn, RealFn) = match &op.r {
        Coefficient::Analytic {
            d1: Some(d1),
            d2: Some(d2),
            ..
        } => (d1.clone(), d2.clone()),
        _ => {
            let d1 = derivative_4th(&r_samples, h);
            let d2 = derivative_4th(&d1, h);
            let s1 = Arc::new(CubicSpline::new(&x_uniform, &d1));
            let s2 = Arc::new(CubicSpline::new(&x_uniform, &d2));
            (
                Arc::new(move |t| s1.eval(t)) as RealFn,
                Arc::new(move |t| s2.eval(t)) as RealFn,
            )
        }
    };

    // invert z(x) on the uniform z grid by segment lookup + Newton on the
    // local Simpson cumulative
    let z_grid = linspace(0.0, 1.0, n);
    let mut x_nodes = Vec::with_capacity(n);
    for (j, &zj) in z_grid.iter().enumerate() {
        if j == 0 {
            x_nodes.push(a);
            continue;
        }
        if j == n - 1 {
            x_nodes.push(b);
            continue;
        }
        let target = zj * k;
        let seg = match cumulative
            .binary_search_by(|c| c.partial_cmp(&target).expect("finite"))
        {
            Ok(i) => i.min(n - 2),
            Err(i) => i.clamp(1, n - 1) - 1,
        };
        let (x0, c0) = (x_uniform[seg], cumulative[seg]);
        let mut x = x0 + (target - c0) / w(x0).max(f64::MIN_POSITIVE);
        for _ in 0..4 {
            let local = ((x - x0) / 6.0) * (w(x0) + 4.0 * w(0.5 * (x0 + x)) + w(x));
            x -= (c0 + local - target) / w(x);
            x = x.clamp(a, b);
        }
        x_nodes.push(x);
    }

    let k2 = k * k;
    let mut l = Vec::with_capacity(n);
    let mut g = Vec::with_capacity(n);
    for (&zj, &xj) in z_grid.iter().zip(&x_nodes) {
        let r = r_eval(xj);
        let (r1, r2) = (r1_eval(xj), r2_eval(xj));
        l.push(r.powf(0.25));
        let gj = k2 * (e_eval(xj) + r2 / 4.0 - r1 * r1 / (16.0 * r));
        if !gj.is_finite() || gj.abs() > g_cap {
            return Err(Error::SingularPotential {
                z: zj,
                value: gj,
                cap: g_cap,
            });
        }
        g.push(gj);
    }

    Ok(LiouvilleMap {
        a,
        b,
        k,
        z_grid,
        x_nodes,
        l,
        g,
        x_uniform,
        z_at_x_uniform,
    })
}

impl LiouvilleMap {
    pub fn n_grid(&self) -> usize {
        self.z_grid.len()
    }

    /// Monotone forward map z(x), interpolated.
    pub fn z_of_x(&self, x: f64) -> f64 {
        CubicSpline::new(&self.x_uniform, &self.z_at_x_uniform)
            .eval(x)
            .clamp(0.0, 1.0)
    }

    /// Inverse map x(z), interpolated between the stored nodes.
    pub fn x_of_z(&self, z: f64) -> f64 {
        CubicSpline::new(&self.z_grid, &self.x_nodes)
            .eval(z)
            .clamp(self.a, self.b)
    }
}

/// Pushes a function on `[a,b]` to the normal frame:
/// `vbar(z) = l(x(z)) v(x(z))`, sampled on the map's z grid.
pub fn push_function(map: &LiouvilleMap, v: &dyn Fn(f64) -> f64) -> Vec<f64> {
    map.x_nodes
        .iter()
        .zip(&map.l)
        .map(|(&x, &l)| l * v(x))
        .collect()
}

/// Pulls normal-frame samples back to the original frame; the returned
/// samples live at the map's (non-uniform) `x` nodes, making
/// `pull . push` exact on the grid.
pub fn pull_function(map: &LiouvilleMap, vbar: &[f64]) -> Result<Vec<f64>> {
    if vbar.len() != map.n_grid() {
        return Err(Error::GridMismatch {
            expected: map.n_grid(),
            got: vbar.len(),
        });
    }
    Ok(vbar.iter().zip(&map.l).map(|(&v, &l)| v / l).collect())
}

/// Maps a normal-form eigenvalue back: `mu = lambda / K^2`.
pub fn eigenvalue_pullback(map: &LiouvilleMap, lambda: f64) -> f64 {
    lambda / (map.k * map.k)
}
