//! End-to-end acceptance suite. Each test prints a single `criterion N
//! (<name>): pass|fail` line so a full run reads as a checklist.

use std::f64::consts::PI;
use std::panic::{catch_unwind, resume_unwind, AssertUnwindSafe};
use std::time::Instant;

use fracmix::forward::{gluing_residual, ModeSolution, ProblemSpec};
use fracmix::gamma::gamma;
use fracmix::grid::{l2_norm, linspace, simpson};
use fracmix::inverse::{
    delta_problem1, illposed_p_catalog, lemma_probe, null_solution, reconstruct,
    stability_probe, ProbeMode, DELTA_FLOOR,
};
use fracmix::mlf::{mlf_eval, MlfParams};
use fracmix::spectral::{solve_eigensystem, EigenSystem};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn criterion(number: usize, name: &str, body: impl FnOnce()) {
    let result = catch_unwind(AssertUnwindSafe(body));
    let verdict = if result.is_ok() { "pass" } else { "fail" };
    println!("criterion {number} ({name}): {verdict}");
    if let Err(e) = result {
        resume_unwind(e);
    }
}

/// Direct series for the classical-order kernel, usable only where the
/// evaluation engine stops (order exactly 2); converges in a few dozen
/// terms for |z| <= 100.
fn series_order_two(beta: f64, z: f64) -> f64 {
    let mut sum = 0.0;
    let mut term = 1.0 / gamma(beta);
    let mut k = 0usize;
    while term.abs() > 1e-20 && k < 200 {
        sum += term;
        k += 1;
        term *= z / ((2.0 * k as f64 + beta - 2.0) * (2.0 * k as f64 + beta - 1.0));
    }
    sum
}

#[test]
fn criterion_1_mittag_leffler_suite() {
    criterion(1, "mittag-leffler suite", || {
        let start = Instant::now();
        let mut rng = ChaCha8Rng::seed_from_u64(1);

        // recurrence E_{a,m}(z) = 1/Gamma(m) + z E_{a,m+a}(z) on random points
        for _ in 0..1000 {
            let alpha: f64 = 0.1 + 1.8 * rng.gen::<f64>();
            let mu = match rng.gen_range(0..4) {
                0 => 1.0,
                1 => 2.0,
                2 => alpha,
                _ => alpha + 1.0,
            };
            let z = -100.0 * rng.gen::<f64>();
            let r = fracmix::mlf::mlf_recurrence_residual(&MlfParams::new(alpha, mu).unwrap(), z)
                .unwrap();
            assert!(
                r.abs() <= 1e-9,
                "recurrence residual {r:e} at alpha={alpha}, mu={mu}, z={z}"
            );
        }

        // closed forms: exp through the engine; cos and sinc through the
        // order-2 series (the engine's order range is open at 2)
        for i in 1..=50 {
            let x = 10.0 * i as f64 / 50.0;
            let e = mlf_eval(&MlfParams::new(1.0, 1.0).unwrap(), -x).unwrap();
            assert!(((e - (-x).exp()) / (-x).exp()).abs() <= 1e-10);
            let c = series_order_two(1.0, -x * x);
            assert!(((c - x.cos()) / x.cos().abs().max(1e-3)).abs() <= 1e-10);
            let s = series_order_two(2.0, -x * x);
            let sinc = x.sin() / x;
            assert!(((s - sinc) / sinc.abs().max(1e-3)).abs() <= 1e-10);
        }

        // derivative identity d/dt[t^a E_{a,a+1}(-l t^a)] = t^{a-1} E_{a,a}(-l t^a)
        let alpha = 0.5;
        let pa1 = MlfParams::new(alpha, alpha + 1.0).unwrap();
        let paa = MlfParams::new(alpha, alpha).unwrap();
        let f = |lam: f64, t: f64| {
            t.powf(alpha) * mlf_eval(&pa1, -lam * t.powf(alpha)).unwrap()
        };
        for lam in [1.0, 10.0, 100.0] {
            for i in 0..20 {
                let t = 0.1 + 1.9 * i as f64 / 19.0;
                let h = 1e-5;
                let fd = (f(lam, t + h) - f(lam, t - h)) / (2.0 * h);
                let exact =
                    t.powf(alpha - 1.0) * mlf_eval(&paa, -lam * t.powf(alpha)).unwrap();
                assert!(
                    ((fd - exact) / exact).abs() <= 1e-6,
                    "derivative mismatch at lambda={lam}, t={t}: {fd} vs {exact}"
                );
            }
        }

        // far-tail agreement with the algebraic expansion
        for (alpha, beta) in [(0.5, 1.0), (0.7, 1.0), (1.5, 2.0)] {
            let params = MlfParams::new(alpha, beta).unwrap();
            for z in [-1e4, -1e5, -1e6] {
                let full = mlf_eval(&params, z).unwrap();
                let asym = fracmix::mlf::mlf_asymptotic(&params, z, 3).unwrap();
                assert!(
                    ((full - asym) / full).abs() <= 1e-6,
                    "asymptotic mismatch at alpha={alpha}, beta={beta}, z={z}"
                );
            }
        }

        assert!(start.elapsed().as_secs_f64() < 5.0, "runtime budget exceeded");
    });
}

#[test]
fn criterion_2_eigen_suite() {
    criterion(2, "eigenvalue suite", || {
        let start = Instant::now();
        let n = 2049;

        let sys = solve_eigensystem(&vec![0.0; n], 20, n).unwrap();
        for k in 1..=20 {
            let exact = (k as f64 * PI).powi(2);
            let rel = (sys.lambdas[k - 1] / exact - 1.0).abs();
            assert!(rel <= 1e-6, "k={k}: relative error {rel:e}");
        }

        // constant potential shifts every eigenvalue exactly
        let shifted = solve_eigensystem(&vec![7.25; n], 20, n).unwrap();
        for k in 0..20 {
            assert!((shifted.lambdas[k] - sys.lambdas[k] - 7.25).abs() < 1e-8);
        }

        // second-order asymptotic residual shrinks by at least half from
        // k=10 to k=20 for a smooth non-constant potential
        let x = linspace(0.0, 1.0, n);
        let g: Vec<f64> = x.iter().map(|&t| (3.0 * PI * t).sin() + 1.0).collect();
        let sg = solve_eigensystem(&g, 20, n).unwrap();
        let h = x[1] - x[0];
        let g_mean = simpson(&g, h);
        let residual = |k: usize| {
            let cosg: Vec<f64> = x
                .iter()
                .zip(&g)
                .map(|(&t, &gv)| gv * (2.0 * k as f64 * PI * t).cos())
                .collect();
            (sg.lambdas[k - 1] - (k as f64 * PI).powi(2) - g_mean + simpson(&cosg, h)).abs()
        };
        let (r10, r20) = (residual(10), residual(20));
        assert!(r20 <= 0.5 * r10, "residuals {r10:e} -> {r20:e}");

        assert!(start.elapsed().as_secs_f64() < 10.0, "runtime budget exceeded");
    });
}

/// Builds glued modes for prescribed source and interface coefficients,
/// then returns the two boundary traces they generate.
fn manufacture(
    sys: &EigenSystem,
    alpha: f64,
    beta: f64,
    p: f64,
    q: f64,
    f_c: &[f64],
    v0_c: &[f64],
) -> (Vec<ModeSolution>, Vec<f64>, Vec<f64>) {
    let n_x = sys.n_grid();
    let mut modes = Vec::new();
    let (mut phi, mut psi) = (vec![0.0; n_x], vec![0.0; n_x]);
    for (k, (&fk, &v0)) in f_c.iter().zip(v0_c).enumerate() {
        let lambda = sys.lambdas[k];
        let m = if beta == 2.0 {
            ModeSolution::glued_wave(k + 1, lambda, fk, v0, f64::NAN)
        } else {
            ModeSolution::glued_fractional(k + 1, lambda, fk, v0, f64::NAN)
        };
        let vq = m.eval(alpha, beta, q).unwrap();
        let vp = m.eval(alpha, beta, -p).unwrap();
        for (i, &w) in sys.omegas[k].iter().enumerate() {
            phi[i] += vq * w;
            psi[i] += vp * w;
        }
        modes.push(m);
    }
    (modes, phi, psi)
}

#[test]
fn criterion_3_manufactured_roundtrip() {
    criterion(3, "manufactured roundtrip", || {
        let start = Instant::now();
        let n = 513;
        let sys = solve_eigensystem(&vec![0.0; n], 8, n).unwrap();
        let (alpha, beta, p, q) = (0.5, 1.5, 1.0, 5.0);
        let f_c = [1.0, -0.6, 0.25, 0.1, -0.05];
        let v0_c = [0.3, 0.2, -0.15, 0.05, 0.02];
        let (_, phi, psi) = manufacture(&sys, alpha, beta, p, q, &f_c, &v0_c);
        let spec = ProblemSpec::new(alpha, beta, p, q, phi, psi).unwrap();
        let report = reconstruct(&sys, &spec, DELTA_FLOOR).unwrap();

        let h = 1.0 / (n - 1) as f64;
        let f_true: Vec<f64> = {
            let mut f = vec![0.0; n];
            for (k, &c) in f_c.iter().enumerate() {
                for (i, &w) in sys.omegas[k].iter().enumerate() {
                    f[i] += c * w;
                }
            }
            f
        };
        let diff: Vec<f64> = report
            .f_samples
            .iter()
            .zip(&f_true)
            .map(|(a, b)| a - b)
            .collect();
        let rel = (simpson(&diff.iter().map(|d| d * d).collect::<Vec<_>>(), h))
            .sqrt()
            / (simpson(&f_true.iter().map(|v| v * v).collect::<Vec<_>>(), h)).sqrt();
        assert!(rel <= 1e-6, "source recovery error {rel:e}");
        assert!(
            report.residual_data_q <= 1e-8,
            "trace residual {:e}",
            report.residual_data_q
        );

        assert!(start.elapsed().as_secs_f64() < 30.0, "runtime budget exceeded");
    });
}

#[test]
fn criterion_4_uniqueness() {
    criterion(4, "uniqueness from zero data", || {
        let n = 513;
        let sys = solve_eigensystem(&vec![0.0; n], 8, n).unwrap();
        let spec =
            ProblemSpec::new(0.5, 2.0, 0.4, 0.7, vec![0.0; n], vec![0.0; n]).unwrap();
        let report = reconstruct(&sys, &spec, DELTA_FLOOR).unwrap();
        assert!(report.min_abs_delta >= DELTA_FLOOR, "determinant too small");
        assert!(l2_norm(&report.f_samples) <= 1e-12);
        for row in &report.u_field.u {
            assert!(l2_norm(row) <= 1e-12);
        }
    });
}

#[test]
fn criterion_5_illposedness_witness() {
    criterion(5, "ill-posedness witness", || {
        let n = 257;
        let sys = solve_eigensystem(&vec![0.0; n], 8, n).unwrap();
        let (alpha, q) = (0.5, 0.7);
        let catalog = illposed_p_catalog(&sys, alpha, q, 3, 2).unwrap();
        assert!(catalog.entries.len() >= 5, "catalog too short");
        for entry in catalog.entries.iter().take(5) {
            assert!(
                entry.delta.abs() <= 1e-8,
                "entry k={}, n={} has |Delta| = {:e}",
                entry.k,
                entry.n,
                entry.delta.abs()
            );
            let ns = null_solution(&sys, alpha, q, entry.k, entry.p_value).unwrap();
            assert!(ns.trace_q <= 1e-7, "trace at +q is {:e}", ns.trace_q);
            assert!(ns.trace_p <= 1e-7, "trace at -p is {:e}", ns.trace_p);
            assert!((ns.norm_t0 - 1.0).abs() <= 1e-10);
        }
    });
}

#[test]
fn criterion_6_lower_bound_probe() {
    criterion(6, "determinant lower-bound probe", || {
        let n = 513;
        let sys = solve_eigensystem(&vec![0.0; n], 8, n).unwrap();
        let mode = ProbeMode::LargeQ {
            p: 1.0,
            beta: 1.5,
            q_ladder: vec![1.0, 2.0, 4.0, 8.0, 16.0],
            k_max: 200,
        };
        let report = lemma_probe(&sys, 0.5, 1.0, &mode).unwrap();
        assert!(report.floor_estimate > 0.0);
        for &(qv, m) in &report.per_q {
            assert!(m > 0.0, "determinant floor vanished at q={qv}");
        }
        let rel = (report.bracket_at_kmax - report.bracket_limit).abs() / report.bracket_limit;
        assert!(rel <= 0.1, "bracket off by {rel:e} at the largest eigenvalue");
    });
}

#[test]
fn criterion_7_gluing_residual_decay() {
    criterion(7, "interface gluing residual", || {
        let n = 257;
        let sys = solve_eigensystem(&vec![0.0; n], 8, n).unwrap();
        let (alpha, beta, p, q) = (0.9, 1.9, 1.0, 5.0);
        // smooth data: source coefficients decay like k^-4 and the interface
        // values sit near the per-mode steady state, so the interface layer
        // (width set by lambda_k^{-1/alpha}) is resolved by the t ladder
        let f_c: Vec<f64> = (1..=5).map(|k| (k as f64).powi(-4)).collect();
        let v0_c: Vec<f64> = (1..=5)
            .map(|k| {
                let kf = k as f64;
                kf.powi(-4) * (1.0 + 0.5 * kf.powi(-2)) / (kf * kf * PI * PI)
            })
            .collect();
        let (modes, phi, psi) = manufacture(&sys, alpha, beta, p, q, &f_c, &v0_c);
        let spec = ProblemSpec::new(alpha, beta, p, q, phi, psi).unwrap();
        let residuals: Vec<f64> = [1e-1, 1e-2, 1e-3]
            .iter()
            .map(|&t| gluing_residual(&modes, &spec, t).unwrap())
            .collect();
        assert!(
            residuals[0] > residuals[1] && residuals[1] > residuals[2],
            "residuals not decreasing: {residuals:?}"
        );
    });
}

#[test]
fn criterion_8_stability_contrast() {
    criterion(8, "stability ratio contrast", || {
        let n = 257;
        let sys = solve_eigensystem(&vec![0.0; n], 16, n).unwrap();
        let (alpha, q) = (0.5, 0.7);
        let zero = vec![0.0; n];
        let well = ProblemSpec::new(alpha, 2.0, 0.4, q, zero.clone(), zero.clone()).unwrap();

        let r_lo = stability_probe(&sys, &well, 1e-6, 100, 42, DELTA_FLOOR).unwrap();
        let r_hi = stability_probe(&sys, &well, 1e-3, 100, 42, DELTA_FLOOR).unwrap();
        // the amplification map is linear, so trial-by-trial the two noise
        // levels must agree within a factor 2 (in fact they coincide), and
        // no trial may blow up
        for (a, b) in r_lo.ratios.iter().zip(&r_hi.ratios) {
            assert!(a.is_finite() && b.is_finite() && *a > 0.0 && *b > 0.0);
            assert!(
                *a <= 2.0 * b && *b <= 2.0 * a,
                "noise levels disagree: {a:e} vs {b:e}"
            );
        }
        assert!(r_lo.mean_ratio <= 2.0 * r_hi.mean_ratio);
        assert!(r_hi.mean_ratio <= 2.0 * r_lo.mean_ratio);

        // near a catalog zero the same probe blows up by >= 3 orders
        let catalog = illposed_p_catalog(&sys, alpha, q, 1, 1).unwrap();
        let p_star = catalog.entries[0].p_value;
        let p_near = p_star + 1e-7;
        let d = delta_problem1(alpha, sys.lambdas[0], p_near, q).unwrap();
        assert!(d.abs() >= DELTA_FLOOR, "offset fell under the floor: {d:e}");
        let near = ProblemSpec::new(alpha, 2.0, p_near, q, zero.clone(), zero).unwrap();
        let r_near = stability_probe(&sys, &near, 1e-6, 100, 42, DELTA_FLOOR).unwrap();
        assert!(
            r_near.mean_ratio >= 1e3 * r_lo.mean_ratio,
            "contrast only {:e} vs {:e}",
            r_near.mean_ratio,
            r_lo.mean_ratio
        );
    });
}

#[test]
fn criterion_9_determinism() {
    criterion(9, "byte-identical reruns", || {
        use fracmix::config::{run, RunConfig};
        let cfg = RunConfig::from_json(
            r#"{
                "command": "invert",
                "phi": "mode-sine:1",
                "psi": "mode-sine:2",
                "p": 0.4, "q": 0.7,
                "numerics": {"n_grid": 257, "n_modes": 6}
            }"#,
        )
        .unwrap();
        let base = std::env::temp_dir().join("fracmix-acceptance");
        let (d1, d2) = (base.join("run1"), base.join("run2"));
        run(&cfg, &d1, 0).unwrap();
        run(&cfg, &d2, 0).unwrap();
        for name in ["report.json", "f.csv", "u.csv", "config.json"] {
            let a = std::fs::read(d1.join(name)).unwrap();
            let b = std::fs::read(d2.join(name)).unwrap();
            assert!(!a.is_empty(), "{name} is empty");
            assert_eq!(a, b, "{name} differs between identical runs");
        }
    });
}
