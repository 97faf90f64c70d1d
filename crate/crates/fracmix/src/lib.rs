//! Numerical toolkit for inverse source problems of mixed time-fractional
//! parabolic-hyperbolic equations.
//!
//! The equation is time-fractional diffusive (Caputo order `alpha`) for
//! `t > 0` and wave-like (order 2 or Caputo order `beta` in (1,2)) for
//! `t < 0`, glued at `t = 0`. Given boundary measurements `phi = u(.,q)` and
//! `psi = u(.,-p)`, the toolkit reconstructs the space source `f(x)` and the
//! full field `u(x,t)` by Sturm-Liouville eigen-expansion, and diagnoses
//! well-/ill-posedness through the per-mode determinant sequences.
//!
//! Module layout:
//! - [`mlf`]: two-parameter Mittag-Leffler function on the real line.
//! - [`liouville`]: Liouville transformation to the normal form on `[0,1]`.
//! - [`spectral`]: Dirichlet eigensolver, projection and synthesis.
//! - [`forward`]: exact per-mode solutions and field assembly.
//! - [`inverse`]: reconstruction, determinant diagnostics, probes.
//! - [`config`]: batch-run configuration for the `fracmix` binary.

pub mod config;
pub mod forward;
pub mod gamma;
pub mod grid;
pub mod inverse;
pub mod liouville;
pub mod mlf;
pub mod spectral;

/// Crate-wide error type. Variants map one-to-one onto the preconditions
/// of the public operations.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("order alpha = {0} outside the supported interval (0, 2)")]
    InvalidOrder(f64),

    #[error("argument z = {0} lies in the exponential-growth regime (z > 1 unsupported)")]
    UnsupportedRegion(f64),

    #[error("|z| = {z} below the asymptotic-expansion threshold {threshold}")]
    RegionTooSmall { z: f64, threshold: f64 },

    #[error("r(x) must be strictly positive; r({x}) = {value}")]
    NonPositiveR { x: f64, value: f64 },

    #[error("normal-form potential blows up: |g({z})| = {value:.3e} exceeds cap {cap:.3e}")]
    SingularPotential { z: f64, value: f64, cap: f64 },

    #[error("potential must be nonnegative; min g = {0}")]
    NonPositivePotential(f64),

    #[error("resolution too low: n_modes = {n_modes} exceeds n_grid/8 = {}", n_grid / 8)]
    ResolutionTooLow { n_modes: usize, n_grid: usize },

    #[error("grid mismatch: expected {expected} samples, got {got}")]
    GridMismatch { expected: usize, got: usize },

    #[error("ill-posed modes (|delta| < {floor:e}): {modes:?}")]
    IllPosedMode { modes: Vec<usize>, floor: f64 },

    #[error("mode {k} is not ill-posed at p = {p}: |delta| = {delta:e}")]
    NotIllPosed { k: usize, p: f64, delta: f64 },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("config: {0}")]
    Config(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
