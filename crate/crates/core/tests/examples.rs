//! Worked values checked against oracles computed here, independently of the library.

use std::f64::consts::PI;

use convex_torus::corrugation::{solve_alpha, CorrugationProfile};
use convex_torus::decompose::{nash_basis, perturbed_decompose, PicardOptions, balanced_center};
use convex_torus::engine::{c_star, rho_update, run_global, steps_exponent, write_run};
use convex_torus::verify::global_config;
use convex_torus::frames::normal_frame;
use convex_torus::grid::io::load_binary;
use convex_torus::grid::{holder_norms, kernel_transform, mollify, product_torus, HolderOptions, MetricField, PeriodicField};
use convex_torus::linalg::Mat;
use convex_torus::stage::{mollify_triple, run_stage, StageParams};

/// Composite Simpson rule, used as an independent quadrature.
fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
    let h = (b - a) / panels as f64;
    let mut s = f(a) + f(b);
    for i in 1..panels {
        s += f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0
}

fn raw_bump(x: f64) -> f64 {
    if x.abs() >= 1.0 {
        0.0
    } else {
        (-1.0 / (1.0 - x * x)).exp()
    }
}

/// Power series of the Bessel function J₀.
fn j0(x: f64) -> f64 {
    let (mut term, mut sum) = (1.0, 1.0);
    for k in 1..60 {
        term *= -(x * x) / (4.0 * (k * k) as f64);
        sum += term;
    }
    sum
}

fn alpha_oracle(s: f64) -> f64 {
    let target = 1.0 / (1.0 + s * s).sqrt();
    let (mut lo, mut hi) = (0.0, 2.404825557695773);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if j0(mid) > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

#[test]
fn kernel_transform_matches_direct_quadrature() {
    let mass = simpson(raw_bump, -1.0, 1.0, 20_000);
    for w in [0.0, 0.5, 1.0, 3.0, 10.0, 40.0] {
        let want = simpson(|y| raw_bump(y) * (w * y).cos(), -1.0, 1.0, 20_000) / mass;
        let got: f64 = kernel_transform(w);
        assert!((got - want).abs() < 1e-10, "ω = {w}: {got} vs {want}");
    }
}

#[test]
fn mollified_plane_wave_is_scaled_by_the_transform() {
    let (k, ell) = (5.0, 0.3);
    let f = PeriodicField::from_scalar_fn(2, 32, |x: &[f64]| (k * x[0]).sin()).unwrap();
    let mass = simpson(raw_bump, -1.0, 1.0, 20_000);
    let factor = simpson(|y| raw_bump(y) * (k * ell * y).cos(), -1.0, 1.0, 20_000) / mass;
    let out = mollify(&f, ell).unwrap();
    assert!(out.sub(&f.scale(factor)).unwrap().max_abs() < 1e-10);
}

#[test]
fn alpha_agrees_with_bessel_root() {
    for s in [0.01, 0.1, 0.5, 1.0] {
        let got: f64 = solve_alpha(s);
        assert!((got - alpha_oracle(s)).abs() < 1e-10, "s = {s}");
    }
    assert!((alpha_oracle(0.1) - 0.141).abs() < 1e-3);
    let p = CorrugationProfile::<f64>::new(1.0).unwrap();
    assert!(p.alpha(1.0).unwrap() < 2.405);
}

#[test]
fn gamma_s_derivative_matches_finite_difference() {
    let p = CorrugationProfile::<f64>::new(1.0).unwrap();
    let h = 1e-5;
    for (s, t) in [(0.2, 0.7), (0.5, 2.9), (0.9, 5.1)] {
        let j = p.gamma_partials(s, t).unwrap();
        let (a, b) = (p.gamma_eval(s + h, t).unwrap(), p.gamma_eval(s - h, t).unwrap());
        for c in 0..2 {
            let fd = (a[c] - b[c]) / (2.0 * h);
            assert!((fd - j.ds[c]).abs() < 1e-6, "s = {s}, t = {t}: {fd} vs {}", j.ds[c]);
        }
    }
}

#[test]
fn corrugation_is_periodic_with_zero_mean_derivative() {
    let p = CorrugationProfile::<f64>::new(1.0).unwrap();
    for s in [0.3, 0.8] {
        let g0 = p.gamma_eval(s, 0.0).unwrap();
        let g1 = p.gamma_eval(s, 2.0 * PI).unwrap();
        assert!((g0[0] - g1[0]).abs() < 1e-12 && (g0[1] - g1[1]).abs() < 1e-12);
    }
}

#[test]
fn doubled_identity_splits_into_coordinate_directions() {
    let b = nash_basis(2, &Mat::identity(2)).unwrap();
    let (a, _) = b.amplitudes_at(&Mat::identity(2).scale(2.0), 0).unwrap();
    let s2 = 2f64.sqrt();
    assert!((a[0] - s2).abs() < 1e-14 && (a[1] - s2).abs() < 1e-14 && a[2].abs() < 1e-14);
}

#[test]
fn picard_successive_differences_contract() {
    let n = 3;
    let c = balanced_center::<f64>(n);
    let basis = nash_basis(n, &c).unwrap();
    let p = MetricField::constant(n, 8, &c).unwrap();
    let lam: Vec<MetricField<f64>> = (0..2)
        .map(|k| MetricField::constant(n, 8, &Mat::from_fn(n, n, |i, j| if i == k && j == k { 0.05 } else { 0.0 })).unwrap())
        .collect();
    let th: Vec<Vec<MetricField<f64>>> = (0..2)
        .map(|_| (0..2).map(|_| MetricField::constant(n, 8, &Mat::identity(n).scale(0.01)).unwrap()).collect())
        .collect();
    let d = perturbed_decompose(&p, &lam, &th, &basis, &PicardOptions::default()).unwrap();
    assert!(d.residual < 1e-12);
    for w in d.history.windows(2).filter(|w| w[0] > 1e-13) {
        assert!(w[1] / w[0] < 0.5, "{:?}", d.history);
    }
}

#[test]
fn exponent_constants() {
    assert_eq!(steps_exponent(2), 1.0);
    assert_eq!(steps_exponent(3), 2.0);
    assert_eq!(steps_exponent(4), 2.5);
    // (1 − 0.15·5) / (4·0.15·0.85)
    assert!((c_star(2.0, 0.15) - 0.25 / 0.51).abs() < 1e-15);
    assert!((c_star(steps_exponent(3), 0.15) - 0.4902).abs() < 1e-4);
}

#[test]
fn rho_update_fixed_point_and_midpoint() {
    let d: f64 = 0.04;
    let rho = PeriodicField::constant(2, 8, &[d.sqrt()]).unwrap();
    let chi = PeriodicField::constant(2, 8, &[0.37]).unwrap();
    assert!((rho_update(&rho, &chi, d).unwrap().data()[0] - 0.2).abs() < 1e-15);
    let rho = PeriodicField::constant(2, 8, &[0.5]).unwrap();
    let half = PeriodicField::constant(2, 8, &[0.5f64.sqrt()]).unwrap();
    let want = (0.5 * 0.25 + 0.5 * d).sqrt();
    assert!((rho_update(&rho, &half, d).unwrap().data()[0] - want).abs() < 1e-15);
}

#[test]
fn torus_normals_span_the_radial_directions() {
    let u = product_torus::<f64>(2, 16, 0.9).unwrap();
    let (frame, rep) = normal_frame(&u.jacobian, 4).unwrap();
    assert!(rep.orthonormality < 1e-13 && rep.tangency < 1e-13);
    for node in [0, 37, 200] {
        let x = u.values.coords(node);
        let z = frame.at(node);
        let proj = &z * &z.transpose();
        // radial unit vectors of each circle factor
        let mut want = Mat::zeros(4, 4);
        for a in 0..2 {
            let r = [x[a].cos(), x[a].sin()];
            for i in 0..2 {
                for j in 0..2 {
                    want[(2 * a + i, 2 * a + j)] = r[i] * r[j];
                }
            }
        }
        assert!((&proj - &want).max_abs() < 1e-12);
    }
}

#[test]
fn lipschitz_seminorm_of_sine() {
    let f = PeriodicField::from_scalar_fn(2, 128, |x: &[f64]| x[0].sin()).unwrap();
    let r = holder_norms(&f, &[1.0, 0.5], &HolderOptions::default()).unwrap();
    let lip = r.seminorm(1.0).unwrap();
    assert!(lip <= 1.0 + 1e-12 && lip > 0.99, "{lip}");
    // cumulative: ‖f‖₁ = ‖f‖₀ + ‖∇f‖₀, ‖f‖₂ = ‖f‖₁ + ‖∇²f‖₀
    assert!((r.grad_sup - 2.0).abs() < 1e-12 && (r.hess_sup - 3.0).abs() < 1e-12, "{} {}", r.grad_sup, r.hess_sup);
    // interpolation: [f]_½ ≤ 2 ‖f‖₀^½ [f]_1^½
    let half = r.seminorm(0.5).unwrap();
    assert!(half <= 2.0 * (r.sup_norm * lip).sqrt());
}

#[test]
fn mollified_h_moves_by_at_most_its_gradient_times_ell() {
    let res = 64;
    let (delta, lambda, alpha): (f64, f64, f64) = (0.1, 8.0, 0.1);
    let rho = PeriodicField::constant(2, res, &[0.2]).unwrap();
    let g = MetricField::identity(2, res).unwrap();
    let amp = lambda.powf(-alpha);
    let h = MetricField::from_fn(2, res, |x: &[f64]| {
        let s = amp * (lambda * x[0]).sin();
        Mat::from_rows(2, 2, &[s, 0.0, 0.0, -s])
    })
    .unwrap();
    for ell in [0.05, 0.1, 0.2] {
        let m = mollify_triple(&rho, &g, &h, ell, delta, lambda, alpha).unwrap();
        // ‖H̃ − H‖₀ ≤ ‖∇H‖₀ ℓ and ‖∇H‖₀ = λ^{1−α}
        assert!(m.report.c_h <= 2.0, "ℓ = {ell}: {}", m.report.c_h);
        assert!(m.report.g_diff < 1e-12 && m.report.rho_diff < 1e-12);
    }
}

#[test]
fn stage_with_zero_defect_leaves_the_map_unchanged() {
    let res = 64;
    let u = product_torus::<f64>(2, res, 0.9).unwrap();
    let rho = PeriodicField::zeros(2, 1, res).unwrap();
    let g = MetricField::identity(2, res).unwrap();
    let h = MetricField::zeros(2, res).unwrap();
    let prof = CorrugationProfile::new(1.0).unwrap();
    let mut p = StageParams::new(2, 0.1, 4.0, 1.2);
    p.check_hypotheses = false;
    let out = run_stage(&u, &rho, &g, &h, &prof, &p).unwrap();
    assert!(out.v.values.sub(&u.values).unwrap().max_abs() < 1e-12);
}

#[test]
fn run_artifacts_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = global_config(64, 1, 1.0);
    cfg.check_hypotheses = false;
    cfg.injectivity_nodes = 0;
    cfg.output_dir = dir.path().to_path_buf();
    let run = run_global(&cfg, None).unwrap();
    let m = write_run(&run, dir.path()).unwrap();
    let text = std::fs::read_to_string(dir.path().join("manifest.json")).unwrap();
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(v["n"], 2);
    assert_eq!(v["resolution"], 64);
    assert_eq!(v["iterations_run"].as_u64().unwrap() as usize, m.iterations_run);
    for f in &m.files {
        assert!(dir.path().join(f).exists(), "{f}");
    }
    let u = load_binary::<f64>(&dir.path().join("u_final.bin")).unwrap();
    assert_eq!(u.data(), run.final_state.u.values.data());
}
