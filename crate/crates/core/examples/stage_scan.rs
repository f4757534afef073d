use convex_torus::corrugation::CorrugationProfile;
use convex_torus::grid::{product_torus, MetricField, PeriodicField};
use convex_torus::stage::{run_stage, Branch, StageParams};

// args: kappa ppw branch delta osc lambdas...
fn main() {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let kappa: f64 = args[0].parse().unwrap();
    let ppw: f64 = args[1].parse().unwrap();
    let nash = args[2] == "nash";
    let delta: f64 = args[3].parse().unwrap();
    let osc: f64 = args[4].parse().unwrap();
    for l in &args[5..] {
        let lambda: f64 = l.parse().unwrap();
        let res = ((ppw * lambda.powf(kappa).ceil()) as usize).max(64);
        let u = product_torus::<f64>(2, res, 0.9).unwrap();
        let rho = PeriodicField::from_scalar_fn(2, res, |x: &[f64]| {
            delta.sqrt() * (1.0 - osc + osc * (lambda * x[0]).sin()) 
        })
        .unwrap();
        let g = MetricField::identity(2, res).unwrap();
        let h = MetricField::zeros(2, res).unwrap();
        let prof = CorrugationProfile::new(1.0).unwrap();
        let mut p = StageParams::new(2, delta, lambda, kappa);
        if nash {
            p.branch = Branch::Nash;
        }
        let t = std::time::Instant::now();
        let out = run_stage(&u, &rho, &g, &h, &prof, &p).unwrap();
        let d0 = g.sub(&u.metric().unwrap()).unwrap().sup_norm();
        let d1 = g.sub(&out.v.metric().unwrap()).unwrap().sup_norm();
        let r = &out.report;
        println!(
            "lambda {lambda} res {res} freqs {:?} defect {d0:.4e} -> {d1:.4e} e0 {:.4e} inter {:.3e} c_e0 {:.3} {:?}",
            r.frequencies, r.e0, r.steps[0].interaction, r.c_e0, t.elapsed()
        );
    }
}
