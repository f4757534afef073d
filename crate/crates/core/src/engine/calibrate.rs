//! Empirical constants: `c₀` for steps, `σ₁` for the perturbed decomposition and
//! the stage admissibility thresholds `(δ*, λ*)`.

use serde::Serialize;

use crate::corrugation::CorrugationProfile;
use crate::decompose::{balanced_center, calibrate_sigma1, nash_basis, PicardOptions};
use crate::error::Result;
use crate::grid::{product_torus, MetricField, PeriodicField};
use crate::linalg::Mat;
use crate::stage::{run_stage, StageParams};
use crate::step::{apply_step, Phase, StepParams};

#[derive(Clone, Debug, Serialize)]
pub struct StepProbe {
    pub ratio: f64,
    pub mu: f64,
    pub max_constant: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct StageProbe {
    pub delta: f64,
    pub lambda: f64,
    pub pass: bool,
    pub defect_factor: f64,
    pub max_constant: f64,
    pub error: Option<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Calibration {
    pub s_max: f64,
    /// Smallest tested `μ/ν̃` from which every larger ratio keeps the step constants below `step_bound`.
    pub c0: Option<f64>,
    pub step_bound: f64,
    pub sigma1: f64,
    pub delta_star: Option<f64>,
    pub lambda_star: Option<f64>,
    pub stage_bound: f64,
    pub steps: Vec<StepProbe>,
    pub stages: Vec<StageProbe>,
}

#[derive(Clone, Debug)]
pub struct CalibrationOptions {
    pub s_max: f64,
    pub step_ratios: Vec<f64>,
    pub step_nu: f64,
    pub step_bound: f64,
    pub stage_deltas: Vec<f64>,
    pub stage_lambdas: Vec<f64>,
    pub stage_kappa: f64,
    pub stage_bound: f64,
    /// Grid points per wavelength of the top frequency.
    pub points_per_wave: f64,
}

impl Default for CalibrationOptions {
    fn default() -> Self {
        CalibrationOptions {
            s_max: 1.0,
            step_ratios: vec![1.0, 1.5, 2.0, 3.0, 4.0, 6.0, 8.0],
            step_nu: 8.0,
            step_bound: 10.0,
            stage_deltas: vec![0.2, 0.1, 0.05, 0.025],
            stage_lambdas: vec![8.0, 16.0, 32.0],
            stage_kappa: 1.2,
            stage_bound: 100.0,
            points_per_wave: 4.0,
        }
    }
}

fn grid_for(top: f64, ppw: f64) -> usize {
    (((ppw * top).ceil() as usize).div_ceil(8) * 8).max(32)
}

/// Step family: ε = 0.9 torus, `a = 0.1(1 + ½ sin(ν x₁))`, `Φ = x₁`, `ν = ν̃`.
fn step_probes(o: &CalibrationOptions, profile: &CorrugationProfile<f64>) -> Result<Vec<StepProbe>> {
    let nu = o.step_nu;
    let top = o.step_ratios.iter().cloned().fold(1.0, f64::max) * nu;
    let res = grid_for(top, o.points_per_wave);
    let u = product_torus::<f64>(2, res, 0.9)?;
    let a = PeriodicField::from_scalar_fn(2, res, |x: &[f64]| 0.1 * (1.0 + 0.5 * (nu * x[0]).sin()))?;
    let mut out = Vec::new();
    for &r in &o.step_ratios {
        let mu = (r * nu).ceil();
        let mut sp = StepParams::new(mu, 0.0225, nu, nu);
        sp.check_hypotheses = false;
        let rep = apply_step(&u, &[a.clone()], &[Phase::linear(vec![1.0, 0.0])], profile, &sp)?.report;
        let c = [rep.c_dv0, rep.c_dv1, rep.c_v2, rep.c_defect0, rep.c_defect1].iter().cloned().fold(0.0, f64::max);
        out.push(StepProbe { ratio: r, mu, max_constant: c, pass: c <= o.step_bound });
    }
    Ok(out)
}

/// Stage family on T²: torus seed with `ρ² = 0.95δ` added back as `G = Id`, `H = 0`.
fn stage_probes(o: &CalibrationOptions, profile: &CorrugationProfile<f64>) -> Vec<StageProbe> {
    let mut out = Vec::new();
    for &delta in &o.stage_deltas {
        for &lambda in &o.stage_lambdas {
            let top = lambda.powf(o.stage_kappa).ceil();
            let res = grid_for(top, o.points_per_wave);
            let run = || -> Result<(f64, f64, bool)> {
                let eps = (1.0 - 0.95 * delta).sqrt();
                let u = product_torus::<f64>(2, res, eps)?;
                let rho = PeriodicField::constant(2, res, &[(0.95 * delta).sqrt()])?;
                let g = MetricField::identity(2, res)?;
                let h = MetricField::zeros(2, res)?;
                let mut p = StageParams::new(2, delta, lambda, o.stage_kappa);
                p.c_bar = o.stage_bound;
                let st = run_stage(&u, &rho, &g, &h, profile, &p)?;
                let before = g.sub(&u.metric()?)?.sup_norm();
                let after = g.sub(&st.v.metric()?)?.sup_norm();
                let r = &st.report;
                let c = [r.c_dv0, r.c_dv1, r.c_v2, r.c_e0, r.c_e1].iter().cloned().fold(0.0, f64::max);
                Ok((before / after, c, r.bounds_pass && after < before))
            };
            out.push(match run() {
                Ok((f, c, pass)) => {
                    StageProbe { delta, lambda, pass, defect_factor: f, max_constant: c, error: None }
                }
                Err(e) => StageProbe {
                    delta,
                    lambda,
                    pass: false,
                    defect_factor: f64::NAN,
                    max_constant: f64::NAN,
                    error: Some(e.to_string()),
                },
            });
        }
    }
    out
}

/// `(δ*, λ*)`: the largest tested `δ` together with the smallest tested `λ` such
/// that every probe with `δ' ≤ δ*` and `λ' ≥ λ*` passes.
pub fn admissible_corner(probes: &[StageProbe]) -> Option<(f64, f64)> {
    let mut deltas: Vec<f64> = probes.iter().map(|p| p.delta).collect();
    deltas.sort_by(|a, b| b.partial_cmp(a).unwrap());
    deltas.dedup();
    let mut lambdas: Vec<f64> = probes.iter().map(|p| p.lambda).collect();
    lambdas.sort_by(|a, b| a.partial_cmp(b).unwrap());
    lambdas.dedup();
    for &d in &deltas {
        for &l in &lambdas {
            if probes.iter().filter(|p| p.delta <= d && p.lambda >= l).all(|p| p.pass) {
                return Some((d, l));
            }
        }
    }
    None
}

fn sigma1() -> f64 {
    let n = 4;
    let basis = nash_basis(n, &balanced_center::<f64>(n)).expect("balanced centre is non-degenerate");
    let unit = |a: usize, b: usize| Mat::from_fn(n, n, |i, j| if (i, j) == (a, b) || (i, j) == (b, a) { 0.5 } else { 0.0 });
    let lam: Vec<Mat<f64>> = (0..n / 2).map(|k| unit(k, k).scale(2.0)).collect();
    let theta: Vec<Vec<Mat<f64>>> = (0..n / 2).map(|k| (0..n / 2).map(|l| unit(k, l + n / 2)).collect()).collect();
    calibrate_sigma1(&basis, &lam, &theta, &PicardOptions::default())
}

pub fn calibrate(o: &CalibrationOptions) -> Result<Calibration> {
    let profile = CorrugationProfile::new(o.s_max)?;
    let steps = step_probes(o, &profile)?;
    // smallest ratio from which every larger tested ratio passes
    let tail = steps.iter().rev().take_while(|p| p.pass).count();
    let c0 = (tail > 0).then(|| steps[steps.len() - tail].ratio);
    let stages = stage_probes(o, &profile);
    let corner = admissible_corner(&stages);
    Ok(Calibration {
        s_max: o.s_max,
        c0,
        step_bound: o.step_bound,
        sigma1: sigma1(),
        delta_star: corner.map(|c| c.0),
        lambda_star: corner.map(|c| c.1),
        stage_bound: o.stage_bound,
        steps,
        stages,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn probe(delta: f64, lambda: f64, pass: bool) -> StageProbe {
        StageProbe { delta, lambda, pass, defect_factor: 1.0, max_constant: 1.0, error: None }
    }

    #[test]
    fn corner_skips_failing_low_frequencies() {
        let ps = vec![probe(0.2, 8.0, true), probe(0.2, 16.0, true), probe(0.05, 8.0, false), probe(0.05, 16.0, true)];
        assert_eq!(admissible_corner(&ps), Some((0.2, 16.0)));
        let ps = vec![probe(0.2, 16.0, false), probe(0.05, 16.0, true)];
        assert_eq!(admissible_corner(&ps), Some((0.05, 16.0)));
    }
}
