//! Source reconstruction from the two time traces and conditioning
//! diagnostics: the per-mode determinants whose zeros are exactly the
//! non-uniqueness configurations, a catalog of ill-posed backward extents
//! p, explicit null solutions at those p, lower-bound probes, and an
//! empirical stability ratio.

use crate::forward::{assemble_field, gluing_residual, ModeSolution, ProblemSpec, SolutionField};
use crate::grid::{l2_norm, linspace};
use crate::mlf::{mlf_eval, MlfParams};
use crate::spectral::{project, synthesize, EigenSystem, SpectralCoefficients};
use crate::{Error, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Reconstruction aborts when a mode determinant falls below this.
pub const DELTA_FLOOR: f64 = 1e-8;
/// Modes with a determinant below this are logged as numerically fragile.
pub const DELTA_WARN: f64 = 1e-4;

fn e_alpha1(alpha: f64, z: f64) -> Result<f64> {
    mlf_eval(&MlfParams::new(alpha, 1.0)?, z)
}

/// Mode determinant of the classical-wave problem:
/// Delta = E_{alpha,1}(-lambda q^alpha) - sqrt(lambda) sin(sqrt(lambda) p)
///         - cos(sqrt(lambda) p).
pub fn delta_problem1(alpha: f64, lambda: f64, p: f64, q: f64) -> Result<f64> {
    let e1q = e_alpha1(alpha, -lambda * q.powf(alpha))?;
    let s = lambda.sqrt();
    Ok(e1q - s * (s * p).sin() - (s * p).cos())
}

/// Phase form of the same determinant:
/// Delta = E_{alpha,1}(-lambda q^alpha) - sqrt(lambda+1) sin(sqrt(lambda) p + gamma)
/// with gamma = arcsin(1/sqrt(lambda+1)). Used as a cross-check and for
/// root refinement.
pub fn delta_problem1_phase(alpha: f64, lambda: f64, p: f64, q: f64) -> Result<f64> {
    let e1q = e_alpha1(alpha, -lambda * q.powf(alpha))?;
    let amp = (lambda + 1.0).sqrt();
    let gamma = (1.0 / amp).asin();
    Ok(e1q - amp * (lambda.sqrt() * p + gamma).sin())
}

/// Hyperbolic-side bracket of the fractional problem:
/// E_{beta,1}(-lambda p^beta) + lambda p E_{beta,2}(-lambda p^beta).
/// Tends to 1/(p^{beta-1} Gamma(2-beta)) as lambda grows.
pub fn problem2_bracket(beta: f64, lambda: f64, p: f64) -> Result<f64> {
    let z = -lambda * p.powf(beta);
    let e1 = mlf_eval(&MlfParams::new(beta, 1.0)?, z)?;
    let e2 = mlf_eval(&MlfParams::new(beta, 2.0)?, z)?;
    Ok(e1 + lambda * p * e2)
}

/// Mode determinant of the fractional problem:
/// Delta~ = E_{alpha,1}(-lambda q^alpha) - [E_{beta,1}(-lambda p^beta)
///          + lambda p E_{beta,2}(-lambda p^beta)].
pub fn delta_problem2(alpha: f64, beta: f64, lambda: f64, p: f64, q: f64) -> Result<f64> {
    let e1q = e_alpha1(alpha, -lambda * q.powf(alpha))?;
    Ok(e1q - problem2_bracket(beta, lambda, p)?)
}

fn mode_delta(spec: &ProblemSpec, lambda: f64) -> Result<f64> {
    if spec.is_wave() {
        delta_problem1(spec.alpha, lambda, spec.p, spec.q)
    } else {
        delta_problem2(spec.alpha, spec.beta, lambda, spec.p, spec.q)
    }
}

/// Uniform time grid over [-p, q] that contains -p, 0 and q exactly.
pub fn default_time_grid(p: f64, q: f64, n_half: usize) -> Vec<f64> {
    let mut t = linspace(-p, 0.0, n_half);
    t.extend_from_slice(&linspace(0.0, q, n_half)[1..]);
    t
}

/// Full output of a reconstruction run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReconstructionReport {
    pub f_coeffs: SpectralCoefficients,
    pub f_samples: Vec<f64>,
    pub u_field: SolutionField,
    /// (k, determinant) per mode
    pub delta_values: Vec<(usize, f64)>,
    pub min_abs_delta: f64,
    /// modes whose determinant fell below the floor (resolvable only
    /// because their data difference also vanished)
    pub flagged_modes: Vec<usize>,
    /// ||u(., q) - phi||_{L2}
    pub residual_data_q: f64,
    /// ||u(., -p) - psi||_{L2}
    pub residual_data_p: f64,
    /// derivative-gluing mismatch near t = 0
    pub residual_gluing: f64,
}

/// Reconstructs the source coefficients and the full field from the two
/// traces. Per mode, with d_k = (phi_k - psi_k)/Delta_k:
/// f_k = -lambda d_k E_{alpha,1}(-lambda q^alpha) + lambda phi_k,
/// V(0) = d_k (1 - E_{alpha,1}(-lambda q^alpha)) + phi_k.
///
/// Aborts with IllPosedMode when some |Delta_k| < delta_floor while the
/// mode's data difference does not vanish; when both vanish the quotient
/// is unidentifiable, is taken as 0, and the mode is flagged.
pub fn reconstruct(
    sys: &EigenSystem,
    spec: &ProblemSpec,
    delta_floor: f64,
) -> Result<ReconstructionReport> {
    let n_modes = sys.n_modes();
    let phi_c = project(sys, &spec.phi, n_modes)?;
    let psi_c = project(sys, &spec.psi, n_modes)?;

    let mut deltas = Vec::with_capacity(n_modes);
    let mut flagged = Vec::new();
    let mut offenders = Vec::new();
    for k in 1..=n_modes {
        let delta = mode_delta(spec, sys.lambdas[k - 1])?;
        if delta.abs() < delta_floor {
            flagged.push(k);
            if (phi_c.values[k - 1] - psi_c.values[k - 1]).abs() >= delta_floor {
                offenders.push(k);
            } else {
                log::info!(
                    "mode {k}: determinant and data difference both below {delta_floor:e}; \
                     homogeneous part set to zero"
                );
            }
        } else if delta.abs() < DELTA_WARN {
            log::warn!("mode {k}: determinant {delta:e} is numerically fragile");
        }
        deltas.push((k, delta));
    }
    if !offenders.is_empty() {
        return Err(Error::IllPosedMode {
            modes: offenders,
            floor: delta_floor,
        });
    }

    let mut f_values = Vec::with_capacity(n_modes);
    let mut modes = Vec::with_capacity(n_modes);
    for k in 1..=n_modes {
        let lambda = sys.lambdas[k - 1];
        let (phi_k, psi_k) = (phi_c.values[k - 1], psi_c.values[k - 1]);
        let (_, delta) = deltas[k - 1];
        let e1q = e_alpha1(spec.alpha, -lambda * spec.q.powf(spec.alpha))?;
        let d = if delta.abs() < delta_floor {
            0.0
        } else {
            (phi_k - psi_k) / delta
        };
        let f_k = -lambda * d * e1q + lambda * phi_k;
        let v0 = d * (1.0 - e1q) + phi_k;
        f_values.push(f_k);
        modes.push(if spec.is_wave() {
            ModeSolution::glued_wave(k, lambda, f_k, v0, delta)
        } else {
            ModeSolution::glued_fractional(k, lambda, f_k, v0, delta)
        });
    }

    let f_coeffs = SpectralCoefficients { values: f_values };
    let f_samples = synthesize(sys, &f_coeffs)?;
    let grid_t = default_time_grid(spec.p, spec.q, 65);
    let u_field = assemble_field(sys, &modes, spec, &grid_t)?;

    let diff = |row: &[f64], data: &[f64]| -> Vec<f64> {
        row.iter().zip(data).map(|(&a, &b)| a - b).collect()
    };
    let residual_data_q = l2_norm(&diff(u_field.slice_at(spec.q).expect("grid has q"), &spec.phi));
    let residual_data_p = l2_norm(&diff(
        u_field.slice_at(-spec.p).expect("grid has -p"),
        &spec.psi,
    ));
    let t_min = 1e-4f64.min(0.5 * spec.p.min(spec.q));
    let residual_gluing = gluing_residual(&modes, spec, t_min)?;

    let min_abs_delta = deltas
        .iter()
        .map(|&(_, d)| d.abs())
        .fold(f64::INFINITY, f64::min);
    Ok(ReconstructionReport {
        f_coeffs,
        f_samples,
        u_field,
        delta_values: deltas,
        min_abs_delta,
        flagged_modes: flagged,
        residual_data_q,
        residual_data_p,
        residual_gluing,
    })
}

/// Which of the two sine-inversion branches produced a catalog entry.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Branch {
    Arcsin,
    PiMinus,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CatalogEntry {
    pub k: usize,
    pub n: usize,
    pub branch: Branch,
    pub p_value: f64,
    /// determinant at p_value after refinement
    pub delta: f64,
}

/// All backward extents p (per mode and winding number) at which the
/// classical-wave problem loses uniqueness.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IllposednessCatalog {
    pub entries: Vec<CatalogEntry>,
    /// gamma_k = arcsin(1/sqrt(lambda_k + 1)), decreasing in k
    pub gamma: Vec<f64>,
}

/// Enumerates the zeros of the wave-problem determinant in p:
/// sqrt(lambda) p + gamma = arcsin(s) + 2 n pi  or  pi - arcsin(s) + 2 n pi
/// with s = E_{alpha,1}(-lambda q^alpha)/sqrt(lambda+1). Each root gets a
/// Newton polish on the phase form and is validated to |Delta| <= 1e-8.
pub fn illposed_p_catalog(
    sys: &EigenSystem,
    alpha: f64,
    q: f64,
    k_max: usize,
    n_max: usize,
) -> Result<IllposednessCatalog> {
    if k_max == 0 || n_max == 0 {
        return Err(Error::InvalidInput(
            "k_max and n_max must be at least 1".into(),
        ));
    }
    if k_max > sys.n_modes() {
        return Err(Error::InvalidInput(format!(
            "k_max {k_max} exceeds the {} computed modes",
            sys.n_modes()
        )));
    }
    let mut entries = Vec::new();
    let mut gammas = Vec::new();
    for k in 1..=k_max {
        let lambda = sys.lambdas[k - 1];
        let sqrt_l = lambda.sqrt();
        let amp = (lambda + 1.0).sqrt();
        let gamma = (1.0 / amp).asin();
        gammas.push(gamma);
        let e1q = e_alpha1(alpha, -lambda * q.powf(alpha))?;
        let arcsin_s = (e1q / amp).asin();
        for n in 1..=n_max {
            for (branch, phase) in [
                (Branch::Arcsin, arcsin_s + 2.0 * n as f64 * PI),
                (Branch::PiMinus, PI - arcsin_s + 2.0 * (n - 1) as f64 * PI),
            ] {
                let mut p = (phase - gamma) / sqrt_l;
                if p <= 0.0 {
                    continue;
                }
                // Newton on the phase form; e1q does not depend on p
                for _ in 0..4 {
                    let delta = delta_problem1(alpha, lambda, p, q)?;
                    if delta.abs() <= 1e-10 {
                        break;
                    }
                    let deriv = -amp * sqrt_l * (sqrt_l * p + gamma).cos();
                    p -= delta / deriv;
                }
                let delta = delta_problem1(alpha, lambda, p, q)?;
                if delta.abs() <= 1e-8 {
                    entries.push(CatalogEntry {
                        k,
                        n,
                        branch,
                        p_value: p,
                        delta,
                    });
                }
            }
        }
    }
    entries.sort_by(|a, b| a.p_value.partial_cmp(&b.p_value).expect("finite p"));
    Ok(IllposednessCatalog {
        entries,
        gamma: gammas,
    })
}

/// A nontrivial solution of the homogeneous problem at an ill-posed p:
/// mode amplitude 1 at t = 0, source chosen so the forward trace at q
/// vanishes; the trace at -p vanishes because the determinant does.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NullSolution {
    pub k: usize,
    pub p: f64,
    pub delta: f64,
    /// the single nonzero source coefficient
    pub f_l: f64,
    pub field: SolutionField,
    /// ||u(., q)||_{L2} — should vanish
    pub trace_q: f64,
    /// ||u(., -p)||_{L2} — should vanish
    pub trace_p: f64,
    /// ||u(., 0)||_{L2} — equals 1 by construction
    pub norm_t0: f64,
}

pub fn null_solution(
    sys: &EigenSystem,
    alpha: f64,
    q: f64,
    k: usize,
    p: f64,
) -> Result<NullSolution> {
    if k == 0 || k > sys.n_modes() {
        return Err(Error::InvalidInput(format!("mode index {k} out of range")));
    }
    let lambda = sys.lambdas[k - 1];
    let delta = delta_problem1(alpha, lambda, p, q)?;
    if delta.abs() > 1e-6 {
        return Err(Error::NotIllPosed { k, p, delta });
    }
    let qa = q.powf(alpha);
    let e1q = e_alpha1(alpha, -lambda * qa)?;
    let e2q = mlf_eval(&MlfParams::new(alpha, alpha + 1.0)?, -lambda * qa)?;
    let f_l = -e1q / (qa * e2q);
    let mode = ModeSolution::glued_wave(k, lambda, f_l, 1.0, delta);
    let n_grid = sys.n_grid();
    let spec = ProblemSpec::new(alpha, 2.0, p, q, vec![0.0; n_grid], vec![0.0; n_grid])?;
    let grid_t = default_time_grid(p, q, 65);
    let field = assemble_field(sys, std::slice::from_ref(&mode), &spec, &grid_t)?;
    let trace_q = l2_norm(field.slice_at(q).expect("grid has q"));
    let trace_p = l2_norm(field.slice_at(-p).expect("grid has -p"));
    let norm_t0 = l2_norm(field.slice_at(0.0).expect("grid has 0"));
    Ok(NullSolution {
        k,
        p,
        delta,
        f_l,
        field,
        trace_q,
        trace_p,
        norm_t0,
    })
}

/// Lower-bound probes for the determinant sequences.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum ProbeMode {
    /// scan |Delta_k| for the wave problem at a fixed p over a k range
    RationalP { p: f64, k_max: usize, burn_in: usize },
    /// scan min_k |Delta~_k| for the fractional problem over a q ladder
    LargeQ {
        p: f64,
        beta: f64,
        q_ladder: Vec<f64>,
        k_max: usize,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProbeReport {
    pub label: String,
    /// min |Delta| over everything scanned
    pub min_abs_delta: f64,
    /// empirical lower bound: past burn-in (rational-p) or across the
    /// ladder (large-q)
    pub floor_estimate: f64,
    /// (q, min_k |Delta|) pairs; a single entry for rational-p
    pub per_q: Vec<(f64, f64)>,
    /// large-lambda limit 1/(p^{beta-1} Gamma(2-beta)); 0 for rational-p
    pub bracket_limit: f64,
    /// hyperbolic bracket at the largest lambda probed; 0 for rational-p
    pub bracket_at_kmax: f64,
}

pub fn lemma_probe(
    sys: &EigenSystem,
    alpha: f64,
    q: f64,
    mode: &ProbeMode,
) -> Result<ProbeReport> {
    match mode {
        ProbeMode::RationalP { p, k_max, burn_in } => {
            let lambdas = sys.extended_lambdas(*k_max);
            let mut min_all = f64::INFINITY;
            let mut min_tail = f64::INFINITY;
            for (i, &lambda) in lambdas.iter().enumerate() {
                let d = delta_problem1(alpha, lambda, *p, q)?.abs();
                min_all = min_all.min(d);
                if i + 1 > *burn_in {
                    min_tail = min_tail.min(d);
                }
            }
            Ok(ProbeReport {
                label: format!("rational-p p={p} k<={k_max}"),
                min_abs_delta: min_all,
                floor_estimate: min_tail,
                per_q: vec![(q, min_all)],
                bracket_limit: 0.0,
                bracket_at_kmax: 0.0,
            })
        }
        ProbeMode::LargeQ {
            p,
            beta,
            q_ladder,
            k_max,
        } => {
            let lambdas = sys.extended_lambdas(*k_max);
            let mut per_q = Vec::new();
            let mut min_all = f64::INFINITY;
            let mut floor = f64::INFINITY;
            for &qv in q_ladder {
                let mut min_q = f64::INFINITY;
                for &lambda in &lambdas {
                    let d = delta_problem2(alpha, *beta, lambda, *p, qv)?.abs();
                    min_q = min_q.min(d);
                }
                per_q.push((qv, min_q));
                min_all = min_all.min(min_q);
                floor = floor.min(min_q);
            }
            let bracket_limit =
                1.0 / (p.powf(beta - 1.0) * crate::gamma::gamma(2.0 - beta));
            let bracket_at_kmax = problem2_bracket(*beta, lambdas[lambdas.len() - 1], *p)?;
            Ok(ProbeReport {
                label: format!("large-q p={p} beta={beta} k<={k_max}"),
                min_abs_delta: min_all,
                floor_estimate: floor,
                per_q,
                bracket_limit,
                bracket_at_kmax,
            })
        }
    }
}

/// Empirical Lipschitz probe of the data-to-source map: band-limited
/// noise weighted by lambda_k^{-2} (a stand-in for fourth-order Sobolev
/// regularity) is added to the data coefficients, and the response of the
/// source coefficients is measured against the weighted data norm
/// sqrt(sum lambda_k^2 c_k^2).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StabilityReport {
    pub noise_level: f64,
    pub n_trials: usize,
    pub ratios: Vec<f64>,
    pub min_ratio: f64,
    pub max_ratio: f64,
    pub mean_ratio: f64,
}

pub fn stability_probe(
    sys: &EigenSystem,
    spec: &ProblemSpec,
    noise_level: f64,
    n_trials: usize,
    seed: u64,
    delta_floor: f64,
) -> Result<StabilityReport> {
    let n_modes = sys.n_modes();
    let mut deltas = Vec::with_capacity(n_modes);
    let mut e1qs = Vec::with_capacity(n_modes);
    let mut low = Vec::new();
    for k in 1..=n_modes {
        let lambda = sys.lambdas[k - 1];
        let delta = mode_delta(spec, lambda)?;
        if delta.abs() < delta_floor {
            low.push(k);
        }
        deltas.push(delta);
        e1qs.push(e_alpha1(spec.alpha, -lambda * spec.q.powf(spec.alpha))?);
    }
    if !low.is_empty() {
        return Err(Error::IllPosedMode {
            modes: low,
            floor: delta_floor,
        });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut normal = move || {
        // Box-Muller from two uniforms
        let u1: f64 = rng.gen::<f64>().max(f64::MIN_POSITIVE);
        let u2: f64 = rng.gen();
        (-2.0 * u1.ln()).sqrt() * (2.0 * PI * u2).cos()
    };

    let mut ratios = Vec::with_capacity(n_trials);
    for _ in 0..n_trials {
        let mut df2 = 0.0;
        let mut h_phi = 0.0;
        let mut h_psi = 0.0;
        for k in 0..n_modes {
            let lambda = sys.lambdas[k];
            let w = lambda * lambda;
            let d_phi = noise_level * normal() / w;
            let d_psi = noise_level * normal() / w;
            let df = -lambda * (d_phi - d_psi) * e1qs[k] / deltas[k] + lambda * d_phi;
            df2 += df * df;
            h_phi += w * d_phi * d_phi;
            h_psi += w * d_psi * d_psi;
        }
        let denom = h_phi.sqrt() + h_psi.sqrt();
        ratios.push(if denom == 0.0 { 0.0 } else { df2.sqrt() / denom });
    }
    let min_ratio = ratios.iter().copied().fold(f64::INFINITY, f64::min);
    let max_ratio = ratios.iter().copied().fold(0.0, f64::max);
    let mean_ratio = ratios.iter().sum::<f64>() / n_trials.max(1) as f64;
    Ok(StabilityReport {
        noise_level,
        n_trials,
        ratios,
        min_ratio,
        max_ratio,
        mean_ratio,
    })
}
