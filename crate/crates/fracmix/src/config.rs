//! Run configuration (a single JSON document) and the batch command
//! dispatcher behind the CLI.

use crate::forward::{assemble_field, ModeSolution, ProblemSpec};
use crate::grid::{linspace, CubicSpline};
use crate::inverse::{
    self, default_time_grid, illposed_p_catalog, lemma_probe, reconstruct, stability_probe,
    ProbeMode,
};
use crate::liouville::{build_map, pull_function, Coefficient, LiouvilleMap, OperatorSpec};
use crate::mlf::{mlf_eval, MlfParams};
use crate::spectral::{solve_eigensystem, synthesize, EigenSystem, SpectralCoefficients};
use crate::{Error, Result};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// solve and dump the eigensystem
    Eigs,
    /// evaluate the field from a given source
    Forward,
    /// reconstruct the source from the phi/psi traces
    Invert,
    /// tabulate the mode determinants and flag fragile modes
    Diagnose,
    /// enumerate ill-posed backward extents p
    Catalog,
    /// lower-bound or stability probes
    Probe,
    /// manufactured-solution end-to-end check
    Roundtrip,
    /// tabulate the Mittag-Leffler kernel
    MlfTable,
}

/// The normal-form potential (or the original operator to be normalized).
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OperatorConfig {
    /// "zero-potential" or "constant:<c>"
    Preset(String),
    GSamples { g_samples: Vec<f64> },
    GCsv { g_csv: PathBuf },
    SturmLiouville {
        a: f64,
        b: f64,
        r_csv: PathBuf,
        e_csv: PathBuf,
    },
}

impl Default for OperatorConfig {
    fn default() -> Self {
        OperatorConfig::Preset("zero-potential".into())
    }
}

pub struct ResolvedOperator {
    pub g: Vec<f64>,
    /// present when the potential came from an (r, e, [a,b]) operator
    pub map: Option<LiouvilleMap>,
}

fn read_two_column_csv(path: &Path) -> Result<(Vec<f64>, Vec<f64>)> {
    match Coefficient::from_csv(path)? {
        Coefficient::Sampled { x, y } => Ok((x, y)),
        _ => unreachable!("from_csv always samples"),
    }
}

impl OperatorConfig {
    pub fn resolve(&self, n_grid: usize) -> Result<ResolvedOperator> {
        let resample = |x: &[f64], y: &[f64]| -> Vec<f64> {
            let sp = CubicSpline::new(x, y);
            linspace(x[0], x[x.len() - 1], n_grid)
                .iter()
                .map(|&t| sp.eval(t))
                .collect()
        };
        match self {
            OperatorConfig::Preset(name) => {
                if name == "zero-potential" {
                    Ok(ResolvedOperator {
                        g: vec![0.0; n_grid],
                        map: None,
                    })
                } else if let Some(c) = name.strip_prefix("constant:") {
                    let c: f64 = c.parse().map_err(|_| {
                        Error::InvalidInput(format!("bad constant in operator preset {name:?}"))
                    })?;
                    Ok(ResolvedOperator {
                        g: vec![c; n_grid],
                        map: None,
                    })
                } else {
                    Err(Error::InvalidInput(format!(
                        "unknown operator preset {name:?}"
                    )))
                }
            }
            OperatorConfig::GSamples { g_samples } => {
                if g_samples.len() < 8 {
                    return Err(Error::InvalidInput(
                        "g_samples needs at least 8 values".into(),
                    ));
                }
                let x = linspace(0.0, 1.0, g_samples.len());
                Ok(ResolvedOperator {
                    g: resample(&x, g_samples),
                    map: None,
                })
            }
            OperatorConfig::GCsv { g_csv } => {
                let (x, y) = read_two_column_csv(g_csv)?;
                Ok(ResolvedOperator {
                    g: resample(&x, &y),
                    map: None,
                })
            }
            OperatorConfig::SturmLiouville { a, b, r_csv, e_csv } => {
                let op = OperatorSpec::new(
                    *a,
                    *b,
                    Coefficient::from_csv(r_csv)?,
                    Coefficient::from_csv(e_csv)?,
                )?;
                let map = build_map(&op, n_grid)?;
                Ok(ResolvedOperator {
                    g: map.g.clone(),
                    map: Some(map),
                })
            }
        }
    }
}

/// A measurement trace or source datum on [0,1].
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DataConfig {
    /// "zero", "bubble" (x(1-x)) or "mode-sine:<k>" (sqrt(2) sin(k pi x))
    Preset(String),
    Csv { csv: PathBuf },
    Samples { samples: Vec<f64> },
    /// coefficients in the eigenbasis
    Coefficients { coefficients: Vec<f64> },
}

impl Default for DataConfig {
    fn default() -> Self {
        DataConfig::Preset("zero".into())
    }
}

impl DataConfig {
    pub fn resolve(&self, sys: &EigenSystem) -> Result<Vec<f64>> {
        let n = sys.n_grid();
        match self {
            DataConfig::Preset(name) => {
                if name == "zero" {
                    Ok(vec![0.0; n])
                } else if name == "bubble" {
                    Ok(sys.grid.iter().map(|&x| x * (1.0 - x)).collect())
                } else if let Some(k) = name.strip_prefix("mode-sine:") {
                    let k: usize = k.parse().map_err(|_| {
                        Error::InvalidInput(format!("bad mode index in data preset {name:?}"))
                    })?;
                    Ok(sys
                        .grid
                        .iter()
                        .map(|&x| 2f64.sqrt() * (k as f64 * PI * x).sin())
                        .collect())
                } else {
                    Err(Error::InvalidInput(format!("unknown data preset {name:?}")))
                }
            }
            DataConfig::Csv { csv } => {
                let (x, y) = read_two_column_csv(csv)?;
                let sp = CubicSpline::new(&x, &y);
                Ok(sys.grid.iter().map(|&t| sp.eval(t)).collect())
            }
            DataConfig::Samples { samples } => {
                if samples.len() != n {
                    return Err(Error::GridMismatch {
                        expected: n,
                        got: samples.len(),
                    });
                }
                Ok(samples.clone())
            }
            DataConfig::Coefficients { coefficients } => {
                if coefficients.len() > sys.n_modes() {
                    return Err(Error::GridMismatch {
                        expected: sys.n_modes(),
                        got: coefficients.len(),
                    });
                }
                let mut c = coefficients.clone();
                c.resize(sys.n_modes(), 0.0);
                synthesize(sys, &SpectralCoefficients { values: c })
            }
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Numerics {
    pub n_grid: usize,
    pub n_modes: usize,
    pub delta_floor: f64,
    /// exclusion radius around t = 0 for derivative-sensitive quantities
    pub t_min: f64,
    /// time nodes per half-axis in assembled fields
    pub n_t_half: usize,
}

impl Default for Numerics {
    fn default() -> Self {
        Numerics {
            n_grid: crate::spectral::DEFAULT_N_GRID,
            n_modes: crate::spectral::DEFAULT_N_MODES,
            delta_floor: inverse::DELTA_FLOOR,
            t_min: 1e-4,
            n_t_half: 65,
        }
    }
}

/// Source term for the forward/roundtrip commands, in the eigenbasis.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceConfig {
    pub coefficients: Vec<f64>,
    /// mode values at t = 0; defaults to zeros
    #[serde(default)]
    pub v0_coefficients: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CatalogConfig {
    pub k_max: usize,
    pub n_max: usize,
}

impl Default for CatalogConfig {
    fn default() -> Self {
        CatalogConfig { k_max: 3, n_max: 2 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ProbeConfig {
    RationalP {
        p: f64,
        k_max: usize,
        #[serde(default = "default_burn_in")]
        burn_in: usize,
    },
    LargeQ {
        p: f64,
        beta: f64,
        q_ladder: Vec<f64>,
        k_max: usize,
    },
    Stability {
        noise_level: f64,
        n_trials: usize,
    },
}

fn default_burn_in() -> usize {
    10
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MlfTableConfig {
    pub alpha: f64,
    pub beta: f64,
    pub z_min: f64,
    pub z_max: f64,
    pub n: usize,
}

fn default_alpha() -> f64 {
    0.5
}
fn default_beta() -> f64 {
    2.0
}
fn default_time() -> f64 {
    1.0
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub command: Command,
    #[serde(default)]
    pub operator: OperatorConfig,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default = "default_beta")]
    pub beta: f64,
    #[serde(default = "default_time")]
    pub p: f64,
    #[serde(default = "default_time")]
    pub q: f64,
    #[serde(default)]
    pub phi: DataConfig,
    #[serde(default)]
    pub psi: DataConfig,
    #[serde(default)]
    pub numerics: Numerics,
    #[serde(default)]
    pub source: Option<SourceConfig>,
    #[serde(default)]
    pub catalog: Option<CatalogConfig>,
    #[serde(default)]
    pub probe: Option<ProbeConfig>,
    #[serde(default)]
    pub mlf_table: Option<MlfTableConfig>,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
}

impl RunConfig {
    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

// ---------------------------------------------------------------------
// deterministic JSON output: every f64 printed with 17 significant digits
// in scientific notation, so identical runs are byte-identical
// ---------------------------------------------------------------------

struct SciFormatter;

impl serde_json::ser::Formatter for SciFormatter {
    fn write_f64<W>(&mut self, writer: &mut W, value: f64) -> std::io::Result<()>
    where
        W: ?Sized + std::io::Write,
    {
        write!(writer, "{value:.16e}")
    }
}

/// Serializes with the deterministic float format.
pub fn to_json_stable<T: Serialize>(value: &T) -> Result<String> {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, SciFormatter);
    value.serialize(&mut ser)?;
    Ok(String::from_utf8(out).expect("serde_json emits UTF-8"))
}

fn write_artifact(dir: &Path, name: &str, contents: &str) -> Result<()> {
    let path = dir.join(name);
    fs::write(&path, contents)?;
    log::info!("wrote {}", path.display());
    Ok(())
}

fn csv_num(v: f64) -> String {
    format!("{v:.16e}")
}

/// Executes one configured command, writing artifacts into `out_dir`.
pub fn run(cfg: &RunConfig, out_dir: &Path, seed: u64) -> Result<()> {
    fs::create_dir_all(out_dir)?;
    // echo the effective configuration next to the artifacts
    write_artifact(out_dir, "config.json", &to_json_stable(cfg)?)?;

    if cfg.command == Command::MlfTable {
        let t = cfg.mlf_table.as_ref().ok_or_else(|| {
            Error::InvalidInput("mlf-table command requires the mlf_table section".into())
        })?;
        let params = MlfParams::new(t.alpha, t.beta)?;
        let mut csv = String::from("z,e\n");
        for &z in &linspace(t.z_min, t.z_max, t.n.max(2)) {
            csv.push_str(&format!("{},{}\n", csv_num(z), csv_num(mlf_eval(&params, z)?)));
        }
        return write_artifact(out_dir, "mlf.csv", &csv);
    }

    let nm = &cfg.numerics;
    let resolved = cfg.operator.resolve(nm.n_grid)?;
    let sys = solve_eigensystem(&resolved.g, nm.n_modes, nm.n_grid)?;

    match cfg.command {
        Command::Eigs => {
            write_artifact(out_dir, "eigensystem.json", &to_json_stable(&sys)?)?;
        }
        Command::Forward => {
            let src = cfg.source.as_ref().ok_or_else(|| {
                Error::InvalidInput("forward command requires the source section".into())
            })?;
            let spec = ProblemSpec::new(
                cfg.alpha,
                cfg.beta,
                cfg.p,
                cfg.q,
                vec![0.0; nm.n_grid],
                vec![0.0; nm.n_grid],
            )?;
            let modes = build_source_modes(&sys, &spec, src)?;
            let grid_t = default_time_grid(cfg.p, cfg.q, nm.n_t_half);
            let field = assemble_field(&sys, &modes, &spec, &grid_t)?;
            let mut csv = Vec::new();
            field.write_csv(&mut csv)?;
            write_artifact(out_dir, "field.csv", std::str::from_utf8(&csv).unwrap())?;
            write_artifact(out_dir, "field.json", &to_json_stable(&field)?)?;
        }
        Command::Invert => {
            let spec = problem_spec(cfg, &sys)?;
            let report = reconstruct(&sys, &spec, nm.delta_floor)?;
            write_artifact(out_dir, "report.json", &to_json_stable(&report)?)?;
            let mut f_csv = String::from("x,f\n");
            for (&x, &f) in sys.grid.iter().zip(&report.f_samples) {
                f_csv.push_str(&format!("{},{}\n", csv_num(x), csv_num(f)));
            }
            write_artifact(out_dir, "f.csv", &f_csv)?;
            if let Some(map) = &resolved.map {
                let f_orig = pull_function(map, &report.f_samples)?;
                let mut csv = String::from("x,f\n");
                for (&x, &f) in map.x_nodes.iter().zip(&f_orig) {
                    csv.push_str(&format!("{},{}\n", csv_num(x), csv_num(f)));
                }
                write_artifact(out_dir, "f_original_frame.csv", &csv)?;
            }
            let mut u_csv = Vec::new();
            report.u_field.write_csv(&mut u_csv)?;
            write_artifact(out_dir, "u.csv", std::str::from_utf8(&u_csv).unwrap())?;
        }
        Command::Diagnose => {
            let spec = problem_spec(cfg, &sys)?;
            let mut csv = String::from("k,lambda,delta,flagged\n");
            let mut flagged = Vec::new();
            for k in 1..=sys.n_modes() {
                let lambda = sys.lambdas[k - 1];
                let d = if spec.is_wave() {
                    inverse::delta_problem1(spec.alpha, lambda, spec.p, spec.q)?
                } else {
                    inverse::delta_problem2(spec.alpha, spec.beta, lambda, spec.p, spec.q)?
                };
                let low = d.abs() < nm.delta_floor;
                if low {
                    flagged.push(k);
                }
                csv.push_str(&format!(
                    "{k},{},{},{}\n",
                    csv_num(lambda),
                    csv_num(d),
                    low
                ));
            }
            write_artifact(out_dir, "deltas.csv", &csv)?;
            println!("flagged modes: {flagged:?}");
        }
        Command::Catalog => {
            let cc = cfg.catalog.clone().unwrap_or_default();
            let cat = illposed_p_catalog(&sys, cfg.alpha, cfg.q, cc.k_max, cc.n_max)?;
            let mut csv = String::from("k,n,branch,p,delta\n");
            for e in &cat.entries {
                let branch = match e.branch {
                    inverse::Branch::Arcsin => "arcsin",
                    inverse::Branch::PiMinus => "pi-minus",
                };
                csv.push_str(&format!(
                    "{},{},{branch},{},{}\n",
                    e.k,
                    e.n,
                    csv_num(e.p_value),
                    csv_num(e.delta)
                ));
            }
            write_artifact(out_dir, "catalog.csv", &csv)?;
            write_artifact(out_dir, "catalog.json", &to_json_stable(&cat)?)?;
        }
        Command::Probe => {
            let pc = cfg.probe.as_ref().ok_or_else(|| {
                Error::InvalidInput("probe command requires the probe section".into())
            })?;
            match pc {
                ProbeConfig::RationalP { p, k_max, burn_in } => {
                    let report = lemma_probe(
                        &sys,
                        cfg.alpha,
                        cfg.q,
                        &ProbeMode::RationalP {
                            p: *p,
                            k_max: *k_max,
                            burn_in: *burn_in,
                        },
                    )?;
                    write_artifact(out_dir, "probe.json", &to_json_stable(&report)?)?;
                }
                ProbeConfig::LargeQ {
                    p,
                    beta,
                    q_ladder,
                    k_max,
                } => {
                    let report = lemma_probe(
                        &sys,
                        cfg.alpha,
                        cfg.q,
                        &ProbeMode::LargeQ {
                            p: *p,
                            beta: *beta,
                            q_ladder: q_ladder.clone(),
                            k_max: *k_max,
                        },
                    )?;
                    write_artifact(out_dir, "probe.json", &to_json_stable(&report)?)?;
                }
                ProbeConfig::Stability {
                    noise_level,
                    n_trials,
                } => {
                    let spec = problem_spec(cfg, &sys)?;
                    let report = stability_probe(
                        &sys,
                        &spec,
                        *noise_level,
                        *n_trials,
                        seed,
                        nm.delta_floor,
                    )?;
                    write_artifact(out_dir, "probe.json", &to_json_stable(&report)?)?;
                }
            }
        }
        Command::Roundtrip => {
            let src = cfg.source.clone().unwrap_or(SourceConfig {
                coefficients: vec![1.0, -0.5, 0.25, 0.1, -0.05],
                v0_coefficients: vec![0.3, 0.1, -0.2, 0.05, 0.02],
            });
            let spec0 = ProblemSpec::new(
                cfg.alpha,
                cfg.beta,
                cfg.p,
                cfg.q,
                vec![0.0; nm.n_grid],
                vec![0.0; nm.n_grid],
            )?;
            let modes = build_source_modes(&sys, &spec0, &src)?;
            let grid_t = vec![-cfg.p, 0.0, cfg.q];
            let field = assemble_field(&sys, &modes, &spec0, &grid_t)?;
            let mut phi = field.slice_at(cfg.q).unwrap().to_vec();
            let mut psi = field.slice_at(-cfg.p).unwrap().to_vec();
            let n = phi.len();
            for v in [&mut phi, &mut psi] {
                v[0] = 0.0;
                v[n - 1] = 0.0;
            }
            let spec = ProblemSpec::new(cfg.alpha, cfg.beta, cfg.p, cfg.q, phi, psi)?;
            let report = reconstruct(&sys, &spec, nm.delta_floor)?;
            let f_star: Vec<f64> = {
                let mut c = src.coefficients.clone();
                c.resize(sys.n_modes(), 0.0);
                c
            };
            let mut num = 0.0;
            let mut den = 0.0;
            for (got, want) in report.f_coeffs.values.iter().zip(&f_star) {
                num += (got - want) * (got - want);
                den += want * want;
            }
            let rel_f = (num / den.max(f64::MIN_POSITIVE)).sqrt();
            let gluing = crate::forward::gluing_residual(
                &build_source_modes(&sys, &spec, &src)?,
                &spec,
                nm.t_min.min(0.5 * cfg.p.min(cfg.q)),
            )?;
            println!("relative f error: {rel_f:.3e}");
            println!("data residual at q: {:.3e}", report.residual_data_q);
            println!("data residual at -p: {:.3e}", report.residual_data_p);
            println!("gluing residual: {gluing:.3e}");
            #[derive(Serialize)]
            struct Roundtrip {
                rel_f_error: f64,
                residual_data_q: f64,
                residual_data_p: f64,
                gluing_residual: f64,
            }
            let rt = Roundtrip {
                rel_f_error: rel_f,
                residual_data_q: report.residual_data_q,
                residual_data_p: report.residual_data_p,
                gluing_residual: gluing,
            };
            write_artifact(out_dir, "roundtrip.json", &to_json_stable(&rt)?)?;
        }
        Command::MlfTable => unreachable!("handled above"),
    }
    Ok(())
}

fn problem_spec(cfg: &RunConfig, sys: &EigenSystem) -> Result<ProblemSpec> {
    let mut phi = cfg.phi.resolve(sys)?;
    let mut psi = cfg.psi.resolve(sys)?;
    let n = phi.len();
    // presets and eigen-combos vanish at the walls only up to solver
    // tolerance; pin them so the compatibility check is exact
    for v in [&mut phi, &mut psi] {
        if v[0].abs() < 1e-8 {
            v[0] = 0.0;
        }
        if v[n - 1].abs() < 1e-8 {
            v[n - 1] = 0.0;
        }
    }
    ProblemSpec::new(cfg.alpha, cfg.beta, cfg.p, cfg.q, phi, psi)
}

fn build_source_modes(
    sys: &EigenSystem,
    spec: &ProblemSpec,
    src: &SourceConfig,
) -> Result<Vec<ModeSolution>> {
    if src.coefficients.len() > sys.n_modes() {
        return Err(Error::GridMismatch {
            expected: sys.n_modes(),
            got: src.coefficients.len(),
        });
    }
    let mut modes = Vec::with_capacity(src.coefficients.len());
    for (i, &f_k) in src.coefficients.iter().enumerate() {
        let v0 = src.v0_coefficients.get(i).copied().unwrap_or(0.0);
        let lambda = sys.lambdas[i];
        modes.push(if spec.is_wave() {
            ModeSolution::glued_wave(i + 1, lambda, f_k, v0, 0.0)
        } else {
            ModeSolution::glued_fractional(i + 1, lambda, f_k, v0, 0.0)
        });
    }
    Ok(modes)
}
