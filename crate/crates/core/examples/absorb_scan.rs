use convex_torus::decompose::{balanced_center, nash_basis};
use convex_torus::grid::{chart_stub, MetricField, PeriodicField};
use convex_torus::step::{apply_absorption_step, AbsorptionParams};

fn main() {
    let args: Vec<f64> = std::env::args().skip(1).map(|s| s.parse().unwrap()).collect();
    let (kappa, c, ppw) = (args[0], args[1], args[2]);
    let delta: f64 = 0.01;
    for &lambda in &args[3..] {
        let tau = (kappa + 1.0) / 2.0;
        let nu = lambda.powf(tau);
        let res = ((ppw * (nu + lambda)) as usize).next_power_of_two().max(32);
        let u = chart_stub::<f64>(2, res, c * delta.sqrt() / lambda, lambda as usize).unwrap();
        let rho = PeriodicField::constant(2, res, &[delta.sqrt()]).unwrap();
        let cen = balanced_center::<f64>(2);
        let basis = nash_basis(2, &cen).unwrap();
        let g = MetricField::constant(2, res, &cen).unwrap();
        let h = MetricField::zeros(2, res).unwrap();
        let t = std::time::Instant::now();
        let out = apply_absorption_step(&u, &rho, &g, &h, &basis, &AbsorptionParams::new(lambda, kappa, delta)).unwrap();
        let r = out.report;
        println!("lambda {lambda} res {res} nu {:?} e1 {:.4e} e2 {:.4e} lam {:.3e} th {:.3e} dec {:.1e} exp {:.1e} it {} {:?}",
            r.spiral_frequencies, r.e1_0, r.e2_0, r.lambda_sup, r.theta_sup, r.decomposition_residual, r.expansion_residual, r.picard_iterations, t.elapsed());
    }
}
