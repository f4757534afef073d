//! One stage: add `ρ²(G + H)` to the induced metric up to a small error `𝓔`.
//!
//! `n = 2` uses isothermal coordinates and a single step at `μ = λ^κ`. Odd `n`
//! decomposes into `n(n+1)/2` primitives added `n` at a time at `λ K^l`,
//! `K = λ^{κ−1}`. Even `n` starts with the absorption step at `λ^τ` and adds the
//! remaining `n²/2` primitives in `n/2` steps.

use serde::Serialize;

use crate::corrugation::CorrugationProfile;
use crate::decompose::{conformal_factorize, nash_basis, nash_decompose, ConformalOptions, NashBasis};
use crate::engine::steps_exponent;
use crate::error::{Error, Result};
use crate::grid::{injectivity_margin, mollify, Embedding, MetricField, PeriodicField};
use crate::real::Real;
use crate::step::{
    apply_absorption_step, apply_step, second_seminorm, AbsorptionParams, AbsorptionReport, Phase, StepParams,
    StepReport,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Branch {
    /// Conformal for `n = 2`, Nash for odd `n`, absorption for even `n ≥ 4`.
    Auto,
    /// Plain Nash primitives added `m − n` at a time, for any `n`.
    Nash,
}

#[derive(Clone, Debug)]
pub struct StageParams<T> {
    pub delta: T,
    pub lambda: T,
    pub kappa: T,
    pub alpha: T,
    pub gamma: T,
    /// Bookkeeping exponent `N = (1 − θ(n)) / (2θ(n))`.
    pub n_exp: T,
    /// Constant the measured norms are compared with.
    pub c_bar: T,
    /// Constant `M` handed to each step.
    pub m_const: T,
    pub branch: Branch,
    pub check_hypotheses: bool,
    /// Sampled nodes for the injectivity margin; 0 skips it.
    pub injectivity_nodes: usize,
}

impl<T: Real> StageParams<T> {
    pub fn new(n: usize, delta: T, lambda: T, kappa: T) -> Self {
        StageParams {
            delta,
            lambda,
            kappa,
            alpha: T::lit(0.1),
            gamma: T::lit(10.0),
            n_exp: T::lit(steps_exponent(n)),
            c_bar: T::lit(100.0),
            m_const: T::lit(10.0),
            branch: Branch::Auto,
            check_hypotheses: true,
            injectivity_nodes: 0,
        }
    }
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct MollifyReport {
    pub ell: f64,
    pub rho_diff: f64,
    pub g_diff: f64,
    pub h_diff: f64,
    /// `‖ρ̃ − ρ‖₀ / (δ^{1/2} λ ℓ)`.
    pub c_rho: f64,
    /// `‖G̃ − G‖₀ / ℓ`.
    pub c_g: f64,
    /// `‖H̃ − H‖₀ / (λ^{1−α} ℓ)`.
    pub c_h: f64,
}

#[derive(Clone, Debug)]
pub struct Mollified<T> {
    pub rho: PeriodicField<T>,
    pub g: MetricField<T>,
    pub h: MetricField<T>,
    pub report: MollifyReport,
}

pub fn mollify_triple<T: Real>(
    rho: &PeriodicField<T>,
    g: &MetricField<T>,
    h: &MetricField<T>,
    ell: T,
    delta: T,
    lambda: T,
    alpha: T,
) -> Result<Mollified<T>> {
    let rt = mollify(rho, ell)?;
    let gt = MetricField::new(mollify(g.field(), ell)?)?;
    let ht = MetricField::new(mollify(h.field(), ell)?)?;
    let rho_diff = rt.sub(rho)?.max_abs().as_f64();
    let g_diff = gt.sub(g)?.sup_norm().as_f64();
    let h_diff = ht.sub(h)?.sup_norm().as_f64();
    let (l, d, la, a) = (ell.as_f64(), delta.as_f64(), lambda.as_f64(), alpha.as_f64());
    let report = MollifyReport {
        ell: l,
        rho_diff,
        g_diff,
        h_diff,
        c_rho: rho_diff / (d.sqrt() * la * l),
        c_g: g_diff / l,
        c_h: h_diff / (la.powf(1.0 - a) * l),
    };
    Ok(Mollified { rho: rt, g: gt, h: ht, report })
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct StageReport {
    pub n: usize,
    pub delta: f64,
    pub lambda: f64,
    pub kappa: f64,
    pub n_exp: f64,
    pub branch: String,
    pub frequencies: Vec<f64>,
    pub dv0: f64,
    pub dv1: f64,
    pub v2: f64,
    pub e0: f64,
    pub e1: f64,
    pub c_dv0: f64,
    pub c_dv1: f64,
    pub c_v2: f64,
    pub c_e0: f64,
    pub c_e1: f64,
    pub bounds_pass: bool,
    /// Sampled injectivity margin of `v`.
    pub injectivity: Option<f64>,
    pub conformal_residual: Option<f64>,
    pub conformal_iterations: Option<usize>,
    pub nash_clamped: Option<usize>,
    pub mollify: Option<MollifyReport>,
    pub absorption: Option<AbsorptionReport>,
    pub steps: Vec<StepReport>,
}

#[derive(Clone, Debug)]
pub struct StageOutput<T> {
    pub v: Embedding<T>,
    /// `∇vᵀ∇v − ∇uᵀ∇u − ρ²(G + H)`, measured.
    pub error: MetricField<T>,
    pub report: StageReport,
}

/// Smallest integer frequency not below `f`, so the step never runs under `ℓ⁻¹`.
fn round_freq<T: Real>(f: T) -> T {
    f.ceil().max(T::one())
}

fn check_increasing(freqs: &[f64]) -> Result<()> {
    for (l, w) in freqs.windows(2).enumerate() {
        if w[1] <= w[0] {
            return Err(Error::Ordering {
                level: l + 1,
                detail: format!("step frequencies not increasing: {freqs:?}"),
            });
        }
    }
    Ok(())
}

/// Primitive `(amplitude / |w|, w·x)` for each Nash direction.
fn nash_primitives<T: Real>(
    basis: &NashBasis<T>,
    amps: &[PeriodicField<T>],
) -> Vec<(PeriodicField<T>, Phase<T>)> {
    amps.iter()
        .enumerate()
        .map(|(i, a)| {
            let w = basis.lattice[i].iter().map(|&v| T::lit(v as f64)).collect();
            (a.scale(T::one() / basis.lattice_length(i)), Phase::linear(w))
        })
        .collect()
}

/// Runs plain steps over `prims` in groups of `m − n` at the given frequencies.
#[allow(clippy::too_many_arguments)]
fn run_steps<T: Real>(
    mut u: Embedding<T>,
    prims: &[(PeriodicField<T>, Phase<T>)],
    freqs: &[T],
    nu0: T,
    nu_tilde0: T,
    profile: &CorrugationProfile<T>,
    p: &StageParams<T>,
    reports: &mut Vec<StepReport>,
) -> Result<Embedding<T>> {
    let q = u.codim_space() - u.dim();
    let mut nu = nu0;
    for (l, chunk) in prims.chunks(q).enumerate() {
        let mu = freqs[l];
        let mut sp = StepParams::new(mu, p.delta, nu, nu_tilde0.max(nu));
        sp.m_const = p.m_const;
        sp.gamma = p.gamma;
        sp.check_hypotheses = p.check_hypotheses;
        let amps: Vec<PeriodicField<T>> = chunk.iter().map(|c| c.0.clone()).collect();
        let phases: Vec<Phase<T>> = chunk.iter().map(|c| c.1.clone()).collect();
        let out = apply_step(&u, &amps, &phases, profile, &sp).map_err(|e| match e {
            Error::StepPrecondition(s) => Error::StagePrecondition(format!("step {}: {s}", l + 1)),
            other => other,
        })?;
        reports.push(out.report);
        u = out.v;
        nu = mu;
    }
    Ok(u)
}

fn check_stage_hypotheses<T: Real>(
    u: &Embedding<T>,
    rho: &PeriodicField<T>,
    h: &MetricField<T>,
    p: &StageParams<T>,
) -> Result<()> {
    u.metric()?.check_elliptic(p.gamma)?;
    let half = p.delta.sqrt();
    let u2 = second_seminorm(&u.jacobian)?;
    if u2 > half * p.lambda {
        return Err(Error::StagePrecondition(format!(
            "[u]_2 = {} exceeds δ^½ λ = {}",
            u2.as_f64(),
            (half * p.lambda).as_f64()
        )));
    }
    let r0 = rho.max_abs();
    if r0 > half * (T::one() + T::lit(1e-12)) {
        return Err(Error::StagePrecondition(format!("‖ρ‖₀ = {} exceeds δ^½ = {}", r0.as_f64(), half.as_f64())));
    }
    let h0 = h.sup_norm();
    let hb = p.lambda.powf(-p.alpha);
    if h0 > hb {
        return Err(Error::StagePrecondition(format!("‖H‖₀ = {} exceeds λ^-α = {}", h0.as_f64(), hb.as_f64())));
    }
    Ok(())
}

pub fn run_stage<T: Real>(
    u: &Embedding<T>,
    rho: &PeriodicField<T>,
    g: &MetricField<T>,
    h: &MetricField<T>,
    profile: &CorrugationProfile<T>,
    p: &StageParams<T>,
) -> Result<StageOutput<T>> {
    let n = u.dim();
    let m = u.codim_space();
    if m != 2 * n {
        return Err(Error::Dimension(format!("stage needs m = 2n, got n = {n}, m = {m}")));
    }
    if p.kappa <= T::one() || p.lambda <= T::one() || p.delta <= T::zero() || p.delta >= T::one() {
        return Err(Error::StagePrecondition("need δ ∈ (0,1), λ > 1, κ > 1".into()));
    }
    if p.check_hypotheses {
        check_stage_hypotheses(u, rho, h, p)?;
    }
    let mut rep = StageReport {
        n,
        delta: p.delta.as_f64(),
        lambda: p.lambda.as_f64(),
        kappa: p.kappa.as_f64(),
        n_exp: p.n_exp.as_f64(),
        ..Default::default()
    };
    let ell = p.lambda.powf(-p.kappa);
    let k_fac = p.lambda.powf(p.kappa - T::one());
    let mut steps = Vec::new();
    let v = if rho.max_abs() == T::zero() {
        rep.branch = "none".into();
        u.clone()
    } else if n % 2 == 0 && n >= 4 && p.branch == Branch::Auto {
        rep.branch = "absorption".into();
        let center = g.field().mean();
        let basis = nash_basis(n, &crate::linalg::unpack_sym(n, &center))?;
        let ap = AbsorptionParams::new(p.lambda, p.kappa, p.delta);
        let tau = ap.tau();
        let abs = apply_absorption_step(u, rho, g, h, &basis, &ap)?;
        let lt = T::lit(abs.report.spiral_frequencies.iter().cloned().fold(0.0, f64::max));
        let count = abs.remaining.len().div_ceil(n);
        let freqs: Vec<T> = (0..count).map(|l| round_freq(p.lambda.powf(tau) * k_fac.powi(l as i32 + 1))).collect();
        let mut all = vec![lt.as_f64()];
        all.extend(freqs.iter().map(|f| f.as_f64()));
        check_increasing(&all)?;
        rep.frequencies = all;
        let u1 = abs.u1.clone();
        rep.absorption = Some(abs.report);
        run_steps(u1, &abs.remaining, &freqs, lt, lt, profile, p, &mut steps)?
    } else {
        let moll = mollify_triple(rho, g, h, ell, p.delta, p.lambda, p.alpha)?;
        let target = moll.g.add(&moll.h)?;
        let prims: Vec<(PeriodicField<T>, Phase<T>)>;
        let freqs: Vec<T>;
        if n == 2 && p.branch == Branch::Auto {
            rep.branch = "conformal".into();
            let mu = round_freq(p.lambda.powf(p.kappa));
            let cf = conformal_factorize(&target, &ConformalOptions::default())?;
            rep.conformal_residual = Some(cf.residual.as_f64());
            rep.conformal_iterations = Some(cf.iterations);
            let a = cf.a.mul_scalar_field(&moll.rho)?;
            prims = (0..2)
                .map(|k| {
                    let w = (0..2).map(|j| (cf.affine[(k, j)] * mu).round() / mu).collect();
                    (a.clone(), Phase { linear: w, periodic: Some(cf.periodic[k].clone()) })
                })
                .collect();
            freqs = vec![mu];
        } else {
            rep.branch = "nash".into();
            let center = g.field().mean();
            let basis = nash_basis(n, &crate::linalg::unpack_sym(n, &center))?;
            let dec = nash_decompose(&target, &basis)?;
            rep.nash_clamped = Some(dec.clamped);
            let amps: Vec<PeriodicField<T>> =
                dec.amplitudes.iter().map(|a| a.mul_scalar_field(&moll.rho)).collect::<Result<_>>()?;
            prims = nash_primitives(&basis, &amps);
            let count = prims.len().div_ceil(n);
            freqs = (0..count).map(|l| round_freq(p.lambda * k_fac.powi(l as i32 + 1))).collect();
        }
        let mut all = vec![p.lambda.as_f64()];
        all.extend(freqs.iter().map(|f| f.as_f64()));
        check_increasing(&all)?;
        rep.frequencies = all[1..].to_vec();
        rep.mollify = Some(moll.report);
        run_steps(u.clone(), &prims, &freqs, p.lambda, T::one() / ell, profile, p, &mut steps)?
    };
    rep.steps = steps;
    let added = g.add(h)?.scale_by(&rho.mul_scalar_field(rho)?)?;
    let error = v.metric()?.sub(&u.metric()?)?.sub(&added)?;
    rep.e0 = error.sup_norm().as_f64();
    rep.e1 = rep.e0 + crate::grid::gradient(error.field(), crate::grid::DiffScheme::Spectral)?.sup_norm().as_f64();
    rep.dv0 = v.values.sub(&u.values)?.sup_norm().as_f64();
    rep.dv1 = rep.dv0 + v.jacobian.sub(&u.jacobian)?.sup_norm().as_f64();
    rep.v2 = second_seminorm(&v.jacobian)?.as_f64();
    let (d, l, k, ne) = (p.delta.as_f64(), p.lambda.as_f64(), p.kappa.as_f64(), p.n_exp.as_f64());
    rep.c_dv0 = rep.dv0 / (d.sqrt() * l.powf(-(k + 1.0) / 2.0));
    rep.c_dv1 = rep.dv1 / d.sqrt();
    rep.c_v2 = rep.v2 / (d.sqrt() * l.powf(ne * (k - 1.0) + 1.0));
    rep.c_e0 = rep.e0 / (d * l.powf(1.0 - k) + d * d);
    rep.c_e1 = rep.e1 / (d * l.powf((ne - 1.0) * (k - 1.0) + 1.0) + d * d * l.powf(ne * (k - 1.0) + 1.0));
    let cb = p.c_bar.as_f64();
    rep.bounds_pass = [rep.c_dv0, rep.c_dv1, rep.c_v2, rep.c_e0, rep.c_e1].iter().all(|&c| c <= cb);
    if p.injectivity_nodes > 0 {
        rep.injectivity = Some(injectivity_margin(&v, p.injectivity_nodes).as_f64());
    }
    Ok(StageOutput { v, error, report: rep })
}
