use proptest::prelude::*;

use convex_torus::corrugation::CorrugationProfile;
use convex_torus::decompose::{
    balanced_center, conformal_factorize, nash_basis, nash_decompose, perturbed_decompose, ConformalOptions,
    PicardOptions,
};
use convex_torus::engine::{
    alpha_bound, check_ordering, cutoff_phi, kappa, ledger_check, min_a0_for_ordering, rho_update, stage_scales,
    steps_exponent, theta_threshold, b_factor,
};
use convex_torus::frames::normal_frame;
use convex_torus::grid::io::{read_binary, write_binary};
use convex_torus::grid::{mollify, product_torus, Embedding, MetricField, PeriodicField};
use convex_torus::linalg::Mat;
use convex_torus::step::{apply_step, Phase, StepParams};

fn threshold(n: usize) -> f64 {
    let t = theta_threshold(n).unwrap();
    *t.numer() as f64 / *t.denom() as f64
}

fn trig_field(res: usize, c: &[f64]) -> PeriodicField<f64> {
    PeriodicField::from_scalar_fn(2, res, |x: &[f64]| {
        c[0] + c[1] * x[0].sin() + c[2] * (2.0 * x[1]).cos() + c[3] * (3.0 * x[0] - x[1]).sin()
    })
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn mollify_is_linear_mean_preserving_and_contracting(
        a in prop::collection::vec(-1.0f64..1.0, 4),
        b in prop::collection::vec(-1.0f64..1.0, 4),
        s in -2.0f64..2.0,
        ell in 0.05f64..1.5,
    ) {
        let (f, g) = (trig_field(32, &a), trig_field(32, &b));
        let lhs = mollify(&f.add(&g.scale(s)).unwrap(), ell).unwrap();
        let rhs = mollify(&f, ell).unwrap().add(&mollify(&g, ell).unwrap().scale(s)).unwrap();
        prop_assert!(lhs.sub(&rhs).unwrap().max_abs() < 1e-12);
        let mf = mollify(&f, ell).unwrap();
        prop_assert!((mf.mean()[0] - f.mean()[0]).abs() < 1e-12);
        prop_assert!(mf.max_abs() <= f.max_abs() * (1.0 + 1e-12));
    }

    #[test]
    fn corrugation_identity_holds_everywhere(s in 0.0f64..1.0, t in -10.0f64..10.0) {
        let p = CorrugationProfile::<f64>::new(1.0).unwrap();
        let j = p.jet(s, t).unwrap();
        let r = (1.0 + j.dt[0]).powi(2) + j.dt[1].powi(2) - (1.0 + s * s);
        prop_assert!(r.abs() < 1e-8);
    }

    #[test]
    fn nash_decomposition_reconstructs(n in 2usize..=5, seed in prop::collection::vec(-1.0f64..1.0, 15), r in 0.0f64..0.9) {
        let c = balanced_center::<f64>(n);
        let basis = nash_basis(n, &c).unwrap();
        let mut k = 0;
        let mut d = Mat::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                d[(i, j)] = seed[k];
                d[(j, i)] = seed[k];
                k += 1;
            }
        }
        let norm = d.op_norm().max(1e-12);
        let p = &c + &d.scale(r * basis.sigma0 / norm);
        let (a, _) = basis.amplitudes_at(&p, 0).unwrap();
        let back = basis.assemble(&a.iter().map(|x| x * x).collect::<Vec<_>>());
        prop_assert!((&back - &p).op_norm() < 1e-10);
        if n <= 4 {
            let field = MetricField::constant(n, 8, &p).unwrap();
            let dec = nash_decompose(&field, &basis).unwrap();
            prop_assert!(dec.reconstruct(&basis).unwrap().sub(&field).unwrap().sup_norm() < 1e-10);
        }
    }

    #[test]
    fn perturbed_amplitudes_are_lipschitz_in_lambda(eta in 1e-5f64..1e-3) {
        let n = 4;
        let c = balanced_center::<f64>(n);
        let basis = nash_basis(n, &c).unwrap();
        let p = MetricField::constant(n, 8, &c).unwrap();
        let unit = |a: usize, b: usize| Mat::from_fn(n, n, |i, j| if (i, j) == (a, b) || (i, j) == (b, a) { 0.5 } else { 0.0 });
        let run = |e: f64| {
            let lam: Vec<MetricField<f64>> = (0..2).map(|k| MetricField::constant(n, 8, &unit(k, k).scale(e)).unwrap()).collect();
            let th: Vec<Vec<MetricField<f64>>> = (0..2).map(|_| (0..2).map(|_| MetricField::zeros(n, 8).unwrap()).collect()).collect();
            perturbed_decompose(&p, &lam, &th, &basis, &PicardOptions::default()).unwrap()
        };
        let (a, b) = (run(0.0), run(eta));
        let diff = a.amplitudes.iter().zip(&b.amplitudes).map(|(x, y)| x.sub(y).unwrap().max_abs()).fold(0.0, f64::max);
        prop_assert!(diff <= 10.0 * eta, "Δa = {diff}, η = {eta}");
    }

    #[test]
    fn frames_are_orthonormal_and_normal(c in prop::collection::vec(-0.05f64..0.05, 4)) {
        let res = 16;
        let base = product_torus::<f64>(2, res, 0.9).unwrap();
        let bump = PeriodicField::from_fn(2, 4, res, |x: &[f64], o: &mut [f64]| {
            o[0] = c[0] * x[1].sin();
            o[1] = c[1] * (x[0] + x[1]).cos();
            o[2] = c[2] * x[0].cos();
            o[3] = c[3] * (2.0 * x[1]).sin();
        }).unwrap();
        let u = Embedding::from_values(base.values.add(&bump).unwrap()).unwrap();
        let (_, rep) = normal_frame(&u.jacobian, 4).unwrap();
        prop_assert!(rep.orthonormality < 1e-12);
        prop_assert!(rep.tangency < 1e-10);
    }

    #[test]
    fn admissible_tuples_pass_the_ledger(n in 2usize..=5, ft in 0.02f64..0.98, fa in 0.01f64..0.99, beta in 0.02f64..0.98) {
        let theta = ft * threshold(n);
        let alpha = fa * alpha_bound(steps_exponent(n), theta, beta);
        let c = ledger_check(n, theta, alpha, beta).unwrap();
        prop_assert!(c.passes(), "{}", c.csv_row());
        let b = b_factor(steps_exponent(n), theta, alpha);
        prop_assert!(b > 1.0 && kappa(b, theta, alpha) > 1.0);
    }

    #[test]
    fn ordering_holds_above_the_minimal_a0(factor in 1.0f64..50.0, fa in 0.05f64..0.95) {
        let (theta, beta) = (0.3, 0.5);
        let alpha = fa * alpha_bound(steps_exponent(2), theta, beta);
        let a0 = min_a0_for_ordering(2, theta, alpha, beta, 6).unwrap() * factor;
        let b = b_factor(steps_exponent(2), theta, alpha);
        prop_assert!(check_ordering(&stage_scales(theta, beta, a0.ln(), b, 6)).is_ok());
    }

    #[test]
    fn rho_update_interpolates(r in 1e-4f64..1.0, d in 1e-6f64..1.0, chi in 0.0f64..1.0) {
        let rho = PeriodicField::constant(2, 8, &[r]).unwrap();
        let out = rho_update(&rho, &PeriodicField::constant(2, 8, &[chi]).unwrap(), d).unwrap().data()[0];
        let (lo, hi) = (r.min(d.sqrt()), r.max(d.sqrt()));
        prop_assert!(out >= lo * (1.0 - 1e-12) && out <= hi * (1.0 + 1e-12));
    }

    #[test]
    fn cutoff_phi_is_monotone(a in 0.0f64..3.0, b in 0.0f64..3.0) {
        let (lo, hi) = (a.min(b), a.max(b));
        prop_assert!(cutoff_phi(lo) <= cutoff_phi(hi));
        prop_assert!((0.0..=1.0).contains(&cutoff_phi(a)));
    }

    #[test]
    fn conformal_factors_are_bounded_below(e in 0.0f64..0.2, o in -0.08f64..0.08) {
        let p = MetricField::from_fn(2, 32, |x: &[f64]| {
            let s = e * (x[0] - x[1]).sin();
            let w = o * (x[0] + x[1]).cos();
            Mat::from_rows(2, 2, &[1.0 + s, w, w, 1.0 - s])
        }).unwrap();
        let c = conformal_factorize(&p, &ConformalOptions::default()).unwrap();
        prop_assert!(c.min_a > 0.5 && c.min_det > 0.5 && c.residual < 1e-6);
    }

    #[test]
    fn binary_io_round_trips(c in prop::collection::vec(-1e3f64..1e3, 4)) {
        let f = trig_field(8, &c);
        let mut buf = Vec::new();
        write_binary(&f, &mut buf).unwrap();
        let g: PeriodicField<f64> = read_binary(buf.as_slice()).unwrap();
        prop_assert_eq!(f.data(), g.data());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn step_cancellations_hold(a in 0.02f64..0.15, k in 2usize..5, diag in any::<bool>()) {
        let res = 64;
        let mu = 8.0 * k as f64;
        let u = product_torus::<f64>(2, res, 0.9).unwrap();
        let amp = PeriodicField::from_scalar_fn(2, res, |x: &[f64]| a * (1.0 + 0.3 * x[1].cos())).unwrap();
        let w = if diag { vec![1.0, 1.0] } else { vec![0.0, 1.0] };
        let prof = CorrugationProfile::new(1.0).unwrap();
        let mut p = StepParams::new(mu, 2.0 * a * a, 1.0, 1.0);
        p.check_hypotheses = false;
        let r = apply_step(&u, &[amp], &[Phase::linear(w)], &prof, &p).unwrap().report;
        prop_assert!(r.identity_residual < 1e-10 && r.orth_normal < 1e-10 && r.orth_b1b2 < 1e-10);
    }
}
