//! The global iteration on `T^n` with `Σ = ∅`.
//!
//! Each iterate `q` has the cut-off `χ_q = φ(ρ_q / δ_{q+2}^{1/2})` (`φ = 0` below
//! 3/2, `1` above 2). Where `χ_q > 0` it runs one stage with `δ = 4δ_{q+1}`,
//! `λ = C λ_{q+2}` and the level-0 `κ` adding `χ_q²(ρ_q²(g + h_q) − δ_{q+2} g)`,
//! then `ρ_{q+1}² = ρ_q²(1 − χ_q²) + δ_{q+2}χ_q²` and
//! `h_{q+1} = ((1 − χ_q²)ρ_q² h_q − 𝓔) / ρ_{q+1}²`. Iterates with `χ_q ≡ 0` leave
//! the state unchanged; on the flat seed the first few are of that kind.
//! The schedule's `λ_q` are astronomically large, so the constant `C` maps them
//! onto frequencies the grid resolves.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use super::calibrate::Calibration;
use super::exponents::{ledger_check, theta_threshold};
use super::schedule::{schedule, ScheduleParams};
use super::state::{
    initial_short_corrected, initial_short_flat, rho_update, AdaptedShortState, BoundsReport, CorrectionOptions,
    StateParams,
};
use crate::corrugation::CorrugationProfile;
use crate::decompose::balanced_center;
use crate::error::{Error, Result};
use crate::grid::{injectivity_margin, Embedding, MetricField, PeriodicField};
use crate::stage::{run_stage, StageParams, StageReport};
use crate::step::second_seminorm;

fn default_ppw() -> f64 {
    8.0
}
fn default_lambda_min() -> f64 {
    4.0
}
fn default_true() -> bool {
    true
}
fn default_cauchy() -> Vec<f64> {
    vec![0.25, 0.40]
}
fn default_injectivity() -> usize {
    2048
}
fn default_s_max() -> f64 {
    1.0
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunConfig {
    pub n: usize,
    pub resolution: usize,
    /// Target regularity `θ`.
    pub theta: f64,
    pub alpha0: f64,
    pub beta0: f64,
    /// `A₀`; when absent the smallest value obeying the ordering is used.
    #[serde(rename = "A0", alias = "a0", default)]
    pub a0: Option<f64>,
    pub iterations: usize,
    pub output_dir: PathBuf,
    /// Starting exponent `θ₀ ∈ (θ, θ(n))`; defaults to the midpoint.
    #[serde(default)]
    pub theta0: Option<f64>,
    /// Frequency scale `C`; by default the largest value the grid policy allows.
    #[serde(default)]
    pub freq_scale: Option<f64>,
    #[serde(default = "default_ppw")]
    pub points_per_wave: f64,
    /// Iterates whose stage `λ` would fall below this are dropped.
    #[serde(default = "default_lambda_min")]
    pub lambda_min: f64,
    #[serde(default = "default_true")]
    pub check_hypotheses: bool,
    /// Seed scale; by default `ρ₀ = A₀^{−β₀}`.
    #[serde(default)]
    pub eps: Option<f64>,
    #[serde(default = "default_cauchy")]
    pub cauchy_thetas: Vec<f64>,
    #[serde(default = "default_injectivity")]
    pub injectivity_nodes: usize,
    #[serde(default = "default_s_max")]
    pub s_max: f64,
}

impl RunConfig {
    pub fn new(n: usize, resolution: usize, theta: f64, alpha0: f64, beta0: f64, a0: f64, iterations: usize) -> Self {
        RunConfig {
            n,
            resolution,
            theta,
            alpha0,
            beta0,
            a0: Some(a0),
            iterations,
            output_dir: PathBuf::from("out"),
            theta0: None,
            freq_scale: None,
            points_per_wave: default_ppw(),
            lambda_min: default_lambda_min(),
            check_hypotheses: true,
            eps: None,
            cauchy_thetas: default_cauchy(),
            injectivity_nodes: default_injectivity(),
            s_max: default_s_max(),
        }
    }

    pub fn theta0(&self) -> Result<f64> {
        let th = theta_threshold(self.n)?;
        let th = *th.numer() as f64 / *th.denom() as f64;
        Ok(self.theta0.unwrap_or(0.5 * (self.theta + th)))
    }

    pub fn levels(&self) -> usize {
        self.n + 1
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct IterateRecord {
    pub q: usize,
    pub chi: f64,
    pub delta_stage: f64,
    pub lambda_stage: f64,
    pub kappa: f64,
    pub top_frequency: f64,
    /// `δ_{q+1}`, `δ_{q+2}`.
    pub delta_q1: f64,
    pub delta_q2: f64,
    /// `sup |g − ∇u_{q+1}ᵀ∇u_{q+1}|`.
    pub defect: f64,
    pub dv0: f64,
    pub dv1: f64,
    pub dv2: f64,
    /// `‖u_{q+1} − u_q‖₀ λ / δ_{q+1}^{1/2}` with the stage `λ`.
    pub c_bar0: f64,
    /// `‖u_{q+1} − u_q‖₁ / δ_{q+1}^{1/2}`.
    pub c_bar1: f64,
    pub injectivity: f64,
    pub identity_residual: f64,
    pub bounds: BoundsReport,
    /// `‖Δu‖₁^{1−θ'} ‖Δu‖₂^{θ'}` for each configured `θ'`.
    pub cauchy: Vec<f64>,
    pub in_calibrated_region: Option<bool>,
    pub stage: StageReport,
}

pub const ITERATE_CSV_HEADER: &str = "q,chi,delta_stage,lambda_stage,kappa,top_frequency,delta_q1,delta_q2,defect,dv0,dv1,dv2,c_bar0,c_bar1,injectivity,identity_residual,bounds_margin";

impl IterateRecord {
    pub fn csv_row(&self) -> String {
        format!(
            "{},{:.9e},{:.9e},{:.9e},{:.9e},{},{:.9e},{:.9e},{:.9e},{:.9e},{:.9e},{:.9e},{:.9e},{:.9e},{:.9e},{:.9e},{:.9e}",
            self.q,
            self.chi,
            self.delta_stage,
            self.lambda_stage,
            self.kappa,
            self.top_frequency,
            self.delta_q1,
            self.delta_q2,
            self.defect,
            self.dv0,
            self.dv1,
            self.dv2,
            self.c_bar0,
            self.c_bar1,
            self.injectivity,
            self.identity_residual,
            self.bounds.margin()
        )
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct RunSummary {
    pub config: RunConfig,
    pub theta0: f64,
    pub a0: f64,
    pub schedule: ScheduleParams,
    pub freq_scale: f64,
    /// Leading iterates with `χ_q ≡ 0`.
    pub skipped_iterates: usize,
    pub planned_iterations: usize,
    pub iterations_run: usize,
    pub iteration_cap: Option<String>,
    pub halted: Option<String>,
    pub initial_defect: f64,
    pub initial_bounds: BoundsReport,
    pub records: Vec<IterateRecord>,
    /// `cauchy_ratios[i][q]` is the ratio of consecutive Cauchy terms for `cauchy_thetas[i]`.
    pub cauchy_ratios: Vec<Vec<f64>>,
    pub calibration: Option<Calibration>,
}

#[derive(Clone, Debug)]
pub struct RunArtifacts {
    pub summary: RunSummary,
    pub profile: CorrugationProfile<f64>,
    pub initial: Embedding<f64>,
    pub final_state: AdaptedShortState<f64>,
    pub iterates: Vec<Embedding<f64>>,
}

/// Smooth monotone step: 0 for `t ≤ 3/2`, 1 for `t ≥ 2`.
pub fn cutoff_phi(t: f64) -> f64 {
    let x = ((t - 1.5) / 0.5).clamp(0.0, 1.0);
    x * x * x * (x * (6.0 * x - 15.0) + 10.0)
}

/// Largest step frequency a stage at `λ` uses.
pub fn stage_top_frequency(n: usize, lambda: f64, kappa: f64) -> f64 {
    let k = lambda.powf(kappa - 1.0);
    if n == 2 {
        lambda.powf(kappa).ceil()
    } else if n % 2 == 1 {
        (lambda * k.powi(n.div_ceil(2) as i32)).ceil()
    } else {
        (lambda.powf((kappa + 1.0) / 2.0) * k.powi((n / 2) as i32)).ceil()
    }
}

/// Largest `λ` whose stage top frequency is resolved with `ppw` points per wave.
fn largest_resolved_lambda(n: usize, res: usize, ppw: f64, kappa: f64) -> f64 {
    let fits = |l: f64| ppw * stage_top_frequency(n, l, kappa) <= res as f64;
    let (mut lo, mut hi) = (1.0, res as f64);
    if !fits(lo) {
        return 0.0;
    }
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if fits(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// Plans `ln C` and the number of iterates the grid policy allows.
/// Stages run at `q = first, first + 1, ...`.
fn plan(cfg: &RunConfig, s: &ScheduleParams, first: usize) -> (f64, usize, Option<String>) {
    let kappa = s.level0().kappa;
    let res = cfg.resolution;
    let top = |ln_lambda: f64| stage_top_frequency(cfg.n, ln_lambda.exp(), kappa);
    if let Some(c) = cfg.freq_scale {
        let ln_c = c.ln();
        for q in 0..cfg.iterations {
            let ln_l = ln_c + s.ln_lambda(first + q + 2);
            if cfg.points_per_wave * top(ln_l) > res as f64 {
                return (ln_c, q, Some(format!(
                    "iterate {q} needs top frequency {} > R / {} = {}",
                    top(ln_l),
                    cfg.points_per_wave,
                    res as f64 / cfg.points_per_wave
                )));
            }
            if ln_l.exp() < cfg.lambda_min {
                return (ln_c, q, Some(format!("iterate {q} has stage λ = {} below λ_min", ln_l.exp())));
            }
        }
        return (ln_c, cfg.iterations, None);
    }
    let l_max = largest_resolved_lambda(cfg.n, res, cfg.points_per_wave, kappa);
    let mut iters = cfg.iterations;
    while iters > 0 {
        let ln_c = l_max.ln() - s.ln_lambda(first + iters + 1);
        let lowest = (ln_c + s.ln_lambda(first + 2)).exp();
        if lowest >= cfg.lambda_min {
            let cap = (iters < cfg.iterations).then(|| {
                format!(
                    "R = {res} with {} points per wave resolves stage λ ≤ {l_max:.3}; {} iterates would need a first stage λ below λ_min = {}",
                    cfg.points_per_wave, cfg.iterations, cfg.lambda_min
                )
            });
            return (ln_c, iters, cap);
        }
        iters -= 1;
    }
    (
        0.0,
        0,
        Some(format!(
            "R = {res} with {} points per wave resolves stage λ ≤ {l_max:.3}, below λ_min = {}",
            cfg.points_per_wave, cfg.lambda_min
        )),
    )
}

fn defect_sup(g: &MetricField<f64>, u: &Embedding<f64>) -> Result<f64> {
    Ok(g.sub(&u.metric()?)?.sup_norm())
}

fn initial_state(
    cfg: &RunConfig,
    s: &ScheduleParams,
    a0: f64,
    profile: &CorrugationProfile<f64>,
) -> Result<AdaptedShortState<f64>> {
    let l0 = s.level0();
    let params = StateParams { theta: l0.theta, beta: l0.beta, alpha: l0.alpha, a: a0 };
    if cfg.n == 2 {
        return initial_short_flat(2, cfg.resolution, params, cfg.eps);
    }
    // n ≥ 3: the flat torus carrying the balanced metric, corrected once
    let g = MetricField::constant(cfg.n, cfg.resolution, &balanced_center(cfg.n))?;
    let delta = a0.powf(-2.0 * l0.beta);
    let opts = CorrectionOptions {
        eps: cfg.eps.unwrap_or(0.5),
        delta,
        lambda: largest_resolved_lambda(cfg.n, cfg.resolution, cfg.points_per_wave, 1.2),
        kappa: 1.2,
    };
    Ok(initial_short_corrected(&g, params, &opts, profile)?.0)
}

/// First `q` at which `χ_q = φ(ρ / δ_{q+2}^{1/2})` is positive somewhere, given
/// `max ρ` of the seed. Scans at most `limit` iterates.
fn first_active(rho_max: f64, l0: &super::schedule::LevelParams, limit: usize) -> Option<usize> {
    let sc = super::schedule::stage_scales(l0.theta, l0.beta, l0.ln_a, l0.b, limit + 2);
    (0..limit).find(|&q| rho_max.ln() > 1.5f64.ln() + 0.5 * sc[q + 1].ln_delta)
}

/// Runs the iteration. Stage failures end the run early and are reported in
/// `summary.halted` together with every record produced so far.
pub fn run_global(cfg: &RunConfig, calibration: Option<Calibration>) -> Result<RunArtifacts> {
    let theta0 = cfg.theta0()?;
    let levels = cfg.levels();
    let a0 = match cfg.a0 {
        Some(a) => a,
        None => super::schedule::min_a0_for_ordering(cfg.n, theta0, cfg.alpha0, cfg.beta0, cfg.iterations + 2)
            .ok_or_else(|| Error::LedgerRejected("no A₀ satisfies the ordering".into()))?,
    };
    let sched = schedule(cfg.n, cfg.theta, theta0, cfg.alpha0, cfg.beta0, a0, levels, cfg.iterations + 2)?;
    if sched.scales.is_empty() {
        return Err(Error::LedgerRejected("α₀ = 0 gives b = 1: the iteration does not progress".into()));
    }
    let l0 = sched.level0().clone();
    let case = ledger_check(cfg.n, l0.theta, l0.alpha, l0.beta)?;
    if !case.passes() {
        return Err(Error::LedgerRejected(format!("level-0 tuple fails: {}", case.csv_row())));
    }
    let profile = CorrugationProfile::new(cfg.s_max)?;
    let mut state = initial_state(cfg, &sched, a0, &profile)?;
    let rho_max = state.rho.data().iter().cloned().fold(0.0, f64::max);
    let first = first_active(rho_max, &l0, 512)
        .ok_or_else(|| Error::StagePrecondition(format!("ρ₀ = {rho_max:e} stays below 3/2 δ_{{q+2}}^{{1/2}}")))?;
    let sched = schedule(cfg.n, cfg.theta, theta0, cfg.alpha0, cfg.beta0, a0, levels, first + cfg.iterations + 2)?;
    let (ln_c, iters, cap) = plan(cfg, &sched, first);
    let initial = state.u.clone();
    let initial_bounds = state.bounds()?;
    let initial_defect = defect_sup(&state.g, &state.u)?;
    let mut records: Vec<IterateRecord> = Vec::new();
    let mut iterates = Vec::new();
    let mut halted = None;
    let alpha_stage = l0.theta * l0.alpha / (4.0 * l0.b * l0.b);
    for q in first..first + iters {
        let d1 = sched.delta(q + 1);
        let d2 = sched.delta(q + 2);
        let lambda = (ln_c + sched.ln_lambda(q + 2)).exp();
        let res = (|| -> Result<IterateRecord> {
            let res = cfg.resolution;
            let r2 = state.rho.mul_scalar_field(&state.rho)?;
            let chi = state.rho.map(|r| cutoff_phi(r / d2.sqrt()));
            let c2: Vec<f64> = chi.data().iter().map(|c| c * c).collect();
            // ρ̃²(g + H̃) = χ²(ρ_q²(g + h_q) − δ_{q+2} g); χ > 0 forces ρ_q² > δ_{q+2}
            let rho_t2: Vec<f64> = r2.data().iter().zip(&c2).map(|(&r, &c)| c * (r - d2).max(0.0)).collect();
            let rho_t = PeriodicField::new(cfg.n, 1, res, rho_t2.iter().map(|r| r.sqrt()).collect())?;
            let inv: Vec<f64> =
                r2.data().iter().zip(&c2).map(|(&r, &c)| if c > 0.0 { r / (r - d2) } else { 0.0 }).collect();
            let h_t = state.h.scale_by(&PeriodicField::new(cfg.n, 1, res, inv)?)?;
            let mut sp = StageParams::new(cfg.n, 4.0 * d1, lambda, l0.kappa);
            sp.alpha = alpha_stage;
            sp.check_hypotheses = cfg.check_hypotheses;
            let out = run_stage(&state.u, &rho_t, &state.g, &h_t, &profile, &sp)?;
            let rho_next = rho_update(&state.rho, &chi, d2)?;
            // h_{q+1} = ((1 − χ²)ρ_q² h_q − 𝓔) / ρ_{q+1}²
            let keep: Vec<f64> = r2.data().iter().zip(&c2).zip(rho_next.data()).map(|((&r, &c), &rn)| (1.0 - c) * r / (rn * rn)).collect();
            let inv_next: Vec<f64> = rho_next.data().iter().map(|&rn| -1.0 / (rn * rn)).collect();
            let h_next = state
                .h
                .scale_by(&PeriodicField::new(cfg.n, 1, res, keep)?)?
                .add(&out.error.scale_by(&PeriodicField::new(cfg.n, 1, res, inv_next)?)?)?;
            let next = AdaptedShortState { g: state.g.clone(), u: out.v, rho: rho_next, h: h_next, params: state.params };
            let du = next.u.values.sub(&state.u.values)?;
            let dj = next.u.jacobian.sub(&state.u.jacobian)?;
            let dv0 = du.sup_norm();
            let dv1 = dv0 + dj.sup_norm();
            let dv2 = second_seminorm(&dj)?;
            let bounds = next.bounds()?;
            let rec = IterateRecord {
                q,
                chi: chi.data().iter().cloned().fold(f64::INFINITY, f64::min),
                delta_stage: 4.0 * d1,
                lambda_stage: lambda,
                kappa: l0.kappa,
                top_frequency: stage_top_frequency(cfg.n, lambda, l0.kappa),
                delta_q1: d1,
                delta_q2: d2,
                defect: defect_sup(&next.g, &next.u)?,
                dv0,
                dv1,
                dv2,
                c_bar0: dv0 * lambda / d1.sqrt(),
                c_bar1: dv1 / d1.sqrt(),
                injectivity: injectivity_margin(&next.u, cfg.injectivity_nodes),
                identity_residual: bounds.identity_residual,
                bounds,
                cauchy: cfg.cauchy_thetas.iter().map(|&t| dv1.powf(1.0 - t) * dv2.powf(t)).collect(),
                in_calibrated_region: calibration.as_ref().and_then(|c| {
                    Some(4.0 * d1 <= c.delta_star? && lambda >= c.lambda_star?)
                }),
                stage: out.report,
            };
            state = next;
            Ok(rec)
        })();
        match res {
            Ok(r) => {
                records.push(r);
                iterates.push(state.u.clone());
            }
            Err(e) => {
                halted = Some(format!("iterate {q}: {e}"));
                break;
            }
        }
    }
    let cauchy_ratios = (0..cfg.cauchy_thetas.len())
        .map(|i| records.windows(2).map(|w| w[1].cauchy[i] / w[0].cauchy[i]).collect())
        .collect();
    let summary = RunSummary {
        config: cfg.clone(),
        theta0,
        a0,
        schedule: sched,
        freq_scale: ln_c.exp(),
        skipped_iterates: first,
        planned_iterations: iters,
        iterations_run: records.len(),
        iteration_cap: cap,
        halted,
        initial_defect,
        initial_bounds,
        records,
        cauchy_ratios,
        calibration,
    };
    Ok(RunArtifacts { summary, profile, initial, final_state: state, iterates })
}
