use convex_torus::engine::{max_alpha0, min_a0_for_ordering, run_global, RunConfig};

// args: res iterations theta theta0 beta alpha_frac [a0] [check]
fn main() {
    let a: Vec<String> = std::env::args().skip(1).collect();
    let res: usize = a[0].parse().unwrap();
    let iters: usize = a[1].parse().unwrap();
    let theta: f64 = a[2].parse().unwrap();
    let theta0: f64 = a[3].parse().unwrap();
    let beta: f64 = a[4].parse().unwrap();
    let frac: f64 = a[5].parse().unwrap();
    let alpha = frac * max_alpha0(2, theta, theta0, beta, 3);
    let amin = min_a0_for_ordering(2, theta0, alpha, beta, iters + 2);
    println!("alpha0 {alpha:.4e} min A0 {amin:?}");
    let a0 = a.get(6).and_then(|s| s.parse().ok()).or(amin).unwrap();
    let mut cfg = RunConfig::new(2, res, theta, alpha, beta, a0, iters);
    cfg.theta0 = Some(theta0);
    if let Some(c) = a.get(7) {
        cfg.check_hypotheses = c == "check";
    }
    let t = std::time::Instant::now();
    match run_global(&cfg, None) {
        Ok(r) => {
            let s = &r.summary;
            println!("skipped {} C {:.3e} planned {} run {} cap {:?} halted {:?}", s.skipped_iterates, s.freq_scale, s.planned_iterations, s.iterations_run, s.iteration_cap, s.halted);
            println!("kappa {} deltas {:?}", s.schedule.level0().kappa, s.schedule.scales.iter().map(|x| x.delta).collect::<Vec<_>>());
            println!("initial defect {:.4e} bounds {:?}", s.initial_defect, s.initial_bounds);
            for rec in &s.records {
                println!("{}", rec.csv_row());
                println!("   cauchy {:?} margin {:.3} first viol {:?}", rec.cauchy, rec.bounds.margin(), rec.bounds.first_violation());
            }
            println!("ratios {:?}", s.cauchy_ratios);
        }
        Err(e) => println!("error {e}"),
    }
    println!("{:?}", t.elapsed());
}
