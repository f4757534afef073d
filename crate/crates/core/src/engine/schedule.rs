//! Parameter schedule: the level recursion `(θ_j, α_j, β_j, A_j)` and the
//! per-stage scales `δ_q`, `λ_q`.
//!
//! `λ_q` overflows `f64` for any realistic `A`, so scales are carried as logarithms.

use serde::Serialize;

use super::exponents::{alpha_bound, b_factor, kappa, ledger_check, steps_exponent, theta_threshold};
use crate::error::{Error, Result};

#[derive(Clone, Debug, Serialize)]
pub struct LevelParams {
    pub j: usize,
    pub theta: f64,
    pub alpha: f64,
    pub beta: f64,
    pub ln_a: f64,
    pub b: f64,
    pub kappa: f64,
}

/// `δ_q` and `λ_q` for `q ≥ 1` (logarithms, plus the values when finite).
#[derive(Clone, Debug, Serialize)]
pub struct StageScale {
    pub q: usize,
    pub ln_delta: f64,
    pub ln_lambda: f64,
    pub delta: f64,
    pub lambda: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ScheduleParams {
    pub n: usize,
    pub big_n: f64,
    pub theta_target: f64,
    /// `levels + 1` entries; entry `j` holds `(θ_j, α_j, β_j, A_j)` and `b_j`.
    pub levels: Vec<LevelParams>,
    pub theta_final: f64,
    /// Scales of the iteration run with the level-0 parameters.
    pub scales: Vec<StageScale>,
}

impl ScheduleParams {
    pub fn level0(&self) -> &LevelParams {
        &self.levels[0]
    }

    /// `δ_q`, 1-based.
    pub fn delta(&self, q: usize) -> f64 {
        self.scales[q - 1].delta
    }

    pub fn ln_lambda(&self, q: usize) -> f64 {
        self.scales[q - 1].ln_lambda
    }
}

/// `δ_1 = A^{−β}`, `λ_q = A δ_q^{−1/(2θ)}`, `λ_{q+1} = λ_q^b` for `q = 1..=count`.
pub fn stage_scales(theta: f64, beta: f64, ln_a: f64, b: f64, count: usize) -> Vec<StageScale> {
    let mut out = Vec::with_capacity(count);
    let mut ln_lambda = ln_a - (-beta * ln_a) / (2.0 * theta);
    for q in 1..=count {
        let ln_delta = 2.0 * theta * (ln_a - ln_lambda);
        out.push(StageScale { q, ln_delta, ln_lambda, delta: ln_delta.exp(), lambda: ln_lambda.exp() });
        ln_lambda *= b;
    }
    out
}

/// Checks `δ_{q+1} ≤ δ_q / 4` and `λ_{q+1} ≥ 2 λ_q`.
pub fn check_ordering(scales: &[StageScale]) -> Result<()> {
    let ln2 = std::f64::consts::LN_2;
    for w in scales.windows(2) {
        if w[1].ln_delta > w[0].ln_delta - 2.0 * ln2 + 1e-12 {
            return Err(Error::Ordering {
                level: w[1].q,
                detail: format!("δ_{} / δ_{} = {:.4} exceeds 1/4", w[1].q, w[0].q, (w[1].ln_delta - w[0].ln_delta).exp()),
            });
        }
        if w[1].ln_lambda < w[0].ln_lambda + ln2 - 1e-12 {
            return Err(Error::Ordering {
                level: w[1].q,
                detail: format!("λ_{} / λ_{} = {:.4} below 2", w[1].q, w[0].q, (w[1].ln_lambda - w[0].ln_lambda).exp()),
            });
        }
    }
    Ok(())
}

fn recursion(n: usize, theta0: f64, alpha0: f64, beta0: f64, ln_a0: f64, levels: usize) -> Vec<LevelParams> {
    let big_n = steps_exponent(n);
    let mut out = Vec::with_capacity(levels + 1);
    let (mut t, mut a, mut bt, mut la) = (theta0, alpha0, beta0, ln_a0);
    for j in 0..=levels {
        let b = b_factor(big_n, t, a);
        out.push(LevelParams { j, theta: t, alpha: a, beta: bt, ln_a: la, b, kappa: kappa(b, t, a) });
        let b2 = b * b;
        la *= b2;
        t /= b2;
        bt /= b2;
        a /= 2.0 * b2;
    }
    out
}

/// `θ_{levels}` from the recursion started at `(θ₀, α₀)`.
pub fn theta_final(n: usize, theta0: f64, alpha0: f64, levels: usize) -> f64 {
    recursion(n, theta0, alpha0, 0.5, 0.0, levels)[levels].theta
}

/// Builds the schedule. `stages` is the number of `(δ_q, λ_q)` pairs computed.
/// With `α₀ = 0` every level is the same and `b = 1`, so no scales are produced
/// (the iteration needs `b > 1`).
#[allow(clippy::too_many_arguments)]
pub fn schedule(
    n: usize,
    theta: f64,
    theta0: f64,
    alpha0: f64,
    beta0: f64,
    a0: f64,
    levels: usize,
    stages: usize,
) -> Result<ScheduleParams> {
    let th = theta_threshold(n)?;
    let th = *th.numer() as f64 / *th.denom() as f64;
    if theta0 >= th {
        return Err(Error::BeyondThreshold { theta: theta0, threshold: th });
    }
    if !(theta > 0.0 && theta < theta0) {
        return Err(Error::LedgerRejected(format!("need 0 < θ < θ₀, got θ = {theta}, θ₀ = {theta0}")));
    }
    if !(a0 > 1.0) {
        return Err(Error::LedgerRejected(format!("A₀ = {a0} must exceed 1")));
    }
    let lv = recursion(n, theta0, alpha0, beta0, a0.ln(), levels);
    let theta_final = lv[levels].theta;
    if theta_final <= theta {
        return Err(Error::ShrinkAlpha { theta_final, theta });
    }
    let mut scales = Vec::new();
    if alpha0 > 0.0 {
        for l in &lv {
            let case = ledger_check(n, l.theta, l.alpha, l.beta)?;
            if !case.passes() {
                return Err(Error::LedgerRejected(format!(
                    "level {}: (θ, α, β) = ({}, {}, {}) fails the exponent ledger",
                    l.j, l.theta, l.alpha, l.beta
                )));
            }
        }
        let l0 = &lv[0];
        scales = stage_scales(l0.theta, l0.beta, l0.ln_a, l0.b, stages);
        check_ordering(&scales)?;
    }
    Ok(ScheduleParams { n, big_n: steps_exponent(n), theta_target: theta, levels: lv, theta_final, scales })
}

/// Largest `α₀` (below the admissibility bound) with `θ_final > θ`, by bisection.
pub fn max_alpha0(n: usize, theta: f64, theta0: f64, beta0: f64, levels: usize) -> f64 {
    let mut hi = (alpha_bound(steps_exponent(n), theta0, beta0) * (1.0 - 1e-12)).min(1.0);
    let ok = |a: f64| theta_final(n, theta0, a, levels) > theta;
    if ok(hi) {
        return hi;
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if ok(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-15 * hi {
            break;
        }
    }
    lo
}

/// Smallest `A₀` (to relative precision `1e-9`) for which the level-0 scales obey
/// the ordering over `stages` stages.
pub fn min_a0_for_ordering(n: usize, theta0: f64, alpha0: f64, beta0: f64, stages: usize) -> Option<f64> {
    let b = b_factor(steps_exponent(n), theta0, alpha0);
    if b <= 1.0 {
        return None;
    }
    let ok = |ln_a: f64| check_ordering(&stage_scales(theta0, beta0, ln_a, b, stages)).is_ok();
    let mut hi = 1.0f64;
    while !ok(hi) {
        hi *= 2.0;
        if hi > 1e6 {
            return None;
        }
    }
    let mut lo = 0.0;
    while hi - lo > 1e-9 * hi {
        let mid = 0.5 * (lo + hi);
        if ok(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Some(hi.exp())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_alpha_keeps_levels_constant() {
        let s = schedule(2, 0.3, 0.32, 0.0, 0.5, 10.0, 3, 4).unwrap();
        assert!(s.levels.iter().all(|l| l.b == 1.0 && l.theta == 0.32));
        assert!(s.scales.is_empty());
    }

    #[test]
    fn too_large_alpha_asks_to_shrink() {
        assert!(matches!(schedule(2, 0.32, 0.33, 0.01, 0.5, 1e3, 3, 4), Err(Error::ShrinkAlpha { .. })));
    }

    #[test]
    fn bisected_alpha_is_sharp() {
        let a = max_alpha0(2, 0.32, 0.33, 0.5, 3);
        assert!(a > 0.0);
        assert!(theta_final(2, 0.33, a, 3) > 0.32);
        assert!(theta_final(2, 0.33, a * (1.0 + 1e-9), 3) <= 0.32);
    }
}
