//! Exponent bookkeeping: threshold θ(n), step exponent N, and the inequality
//! families the iteration needs.

use num_rational::Ratio;
use serde::Serialize;

use crate::error::{Error, Result};

/// `θ(n)`: 1/3 for `n = 2`, `1/(n+2)` otherwise.
pub fn theta_threshold(n: usize) -> Result<Ratio<i64>> {
    match n {
        0 | 1 => Err(Error::Dimension(format!("threshold needs n ≥ 2, got {n}"))),
        2 => Ok(Ratio::new(1, 3)),
        _ => Ok(Ratio::new(1, n as i64 + 2)),
    }
}

/// `N = (1 − θ(n)) / (2θ(n))` as an exact rational.
pub fn steps_exponent_exact(n: usize) -> Result<Ratio<i64>> {
    let t = theta_threshold(n)?;
    Ok((Ratio::from_integer(1) - t) / (t * 2))
}

/// `N` as a float; panics only for `n < 2`, which no caller passes.
pub fn steps_exponent(n: usize) -> f64 {
    let r = steps_exponent_exact(n.max(2)).expect("n ≥ 2");
    *r.numer() as f64 / *r.denom() as f64
}

fn ratio_f64(r: Ratio<i64>) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

/// `b = 1 + 2Nθα / (1 − θ(1+2N))`.
pub fn b_factor(big_n: f64, theta: f64, alpha: f64) -> f64 {
    1.0 + 2.0 * big_n * theta * alpha / (1.0 - theta * (1.0 + 2.0 * big_n))
}

/// `κ = 1 + (2θ/b)(b − 1 + α)`.
pub fn kappa(b: f64, theta: f64, alpha: f64) -> f64 {
    1.0 + 2.0 * theta / b * (b - 1.0 + alpha)
}

/// `c*(N, θ) = (1 − θ(1+2N)) / (4θ(1−θ))`.
pub fn c_star(big_n: f64, theta: f64) -> f64 {
    (1.0 - theta * (1.0 + 2.0 * big_n)) / (4.0 * theta * (1.0 - theta))
}

/// Upper bound on α from the admissibility condition: `min{(1−θ(1+2N))/(2(1−θ)), c* β}`.
pub fn alpha_bound(big_n: f64, theta: f64, beta: f64) -> f64 {
    let d = 1.0 - theta * (1.0 + 2.0 * big_n);
    (d / (2.0 * (1.0 - theta))).min(c_star(big_n, theta) * beta)
}

/// One strict inequality `lhs < rhs`.
#[derive(Clone, Debug, Serialize)]
pub struct Inequality {
    pub name: &'static str,
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

impl Inequality {
    fn new(name: &'static str, lhs: f64, rhs: f64) -> Self {
        Inequality { name, lhs, rhs, holds: lhs < rhs }
    }

    pub fn margin(&self) -> f64 {
        self.rhs - self.lhs
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct LedgerCase {
    pub n: usize,
    pub big_n: f64,
    pub theta: f64,
    pub alpha: f64,
    pub beta: f64,
    pub b: f64,
    pub kappa: f64,
    pub c_star: f64,
    pub theta_next: f64,
    pub alpha_next: f64,
    pub beta_next: f64,
    pub admissible: bool,
    /// Comparisons of the `λ_{q+1}` powers for the global estimates.
    pub global: Vec<Inequality>,
    /// The sharper comparisons on the region where `ρ > δ_{q+1}^{1/2}`.
    pub sharp: Vec<Inequality>,
}

pub const LEDGER_CSV_HEADER: &str =
    "n,N,theta,alpha,beta,b,kappa,c_star,theta_next,alpha_next,beta_next,admissible,global_pass,sharp_pass,min_margin";

impl LedgerCase {
    pub fn global_pass(&self) -> bool {
        self.global.iter().all(|i| i.holds)
    }

    pub fn sharp_pass(&self) -> bool {
        self.sharp.iter().all(|i| i.holds)
    }

    pub fn passes(&self) -> bool {
        self.admissible && self.kappa > 1.0 && self.global_pass() && self.sharp_pass()
    }

    pub fn min_margin(&self) -> f64 {
        self.global.iter().chain(&self.sharp).map(Inequality::margin).fold(f64::INFINITY, f64::min)
    }

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{},{},{},{:.6e}",
            self.n,
            self.big_n,
            self.theta,
            self.alpha,
            self.beta,
            self.b,
            self.kappa,
            self.c_star,
            self.theta_next,
            self.alpha_next,
            self.beta_next,
            self.admissible,
            self.global_pass(),
            self.sharp_pass(),
            self.min_margin()
        )
    }
}

pub fn ledger_check(n: usize, theta: f64, alpha: f64, beta: f64) -> Result<LedgerCase> {
    let th = ratio_f64(theta_threshold(n)?);
    if !(theta > 0.0 && theta < th) {
        return Err(Error::BeyondThreshold { theta, threshold: th });
    }
    if !(alpha > 0.0 && alpha < 1.0 && beta > 0.0 && beta <= 1.0) {
        return Err(Error::LedgerRejected(format!("α = {alpha}, β = {beta} outside (0,1)")));
    }
    let big_n = steps_exponent(n);
    let b = b_factor(big_n, theta, alpha);
    let k = kappa(b, theta, alpha);
    let (t, a, nn) = (theta, alpha, big_n);
    let b2 = b * b;
    let global = vec![
        Inequality::new("u2", b + 2.0 * nn * t * (b - 1.0 + a), b2),
        Inequality::new("grad_h", b + 2.0 * t * nn * (b - 1.0) + 2.0 * t * (nn - 1.0) * a, b2 - t * a / (2.0 * b2)),
        Inequality::new("grad_rho", b + t * (b - 1.0), b2),
        Inequality::new("h", -t * a / b2, -t * a / (2.0 * b2)),
    ];
    let sharp = vec![
        Inequality::new("u2", b + 2.0 * nn * t * (b - 1.0 + a), b2 - t * (b - 1.0)),
        Inequality::new("grad_h", b + 2.0 * t * nn * (b - 1.0) + 2.0 * t * (nn - 1.0) * a, b2 - t * a),
        Inequality::new("grad_rho", 1.0, b),
        Inequality::new("h", -2.0 * t * a, -t * a),
    ];
    Ok(LedgerCase {
        n,
        big_n,
        theta,
        alpha,
        beta,
        b,
        kappa: k,
        c_star: c_star(nn, t),
        theta_next: t / b2,
        alpha_next: a / (2.0 * b2),
        beta_next: beta / b2,
        admissible: alpha < alpha_bound(nn, t, beta),
        global,
        sharp,
    })
}

/// Evaluates `ledger_check` on an `m³` lattice of admissible `(θ, α, β)`:
/// `θ = θ(n)(i+1)/(m+1)`, `β = (j+1)/(m+1)`, `α = α_max (k+1)/(m+1)` for `0 ≤ i, j, k < m`.
pub fn ledger_sweep(n: usize, m: usize) -> Result<Vec<LedgerCase>> {
    let th = ratio_f64(theta_threshold(n)?);
    let big_n = steps_exponent(n);
    let mut out = Vec::with_capacity(m * m * m);
    let f = (m + 1) as f64;
    for i in 0..m {
        let theta = th * (i + 1) as f64 / f;
        for j in 0..m {
            let beta = (j + 1) as f64 / f;
            let amax = alpha_bound(big_n, theta, beta).min(1.0);
            for k in 0..m {
                let alpha = amax * (k + 1) as f64 / f;
                out.push(ledger_check(n, theta, alpha, beta)?);
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn thresholds_and_steps() {
        assert_eq!(theta_threshold(2).unwrap(), Ratio::new(1, 3));
        assert_eq!(theta_threshold(3).unwrap(), Ratio::new(1, 5));
        assert_eq!(theta_threshold(4).unwrap(), Ratio::new(1, 6));
        assert!(theta_threshold(1).is_err());
        assert_eq!(steps_exponent_exact(2).unwrap(), Ratio::from_integer(1));
        assert_eq!(steps_exponent_exact(3).unwrap(), Ratio::from_integer(2));
        assert_eq!(steps_exponent_exact(4).unwrap(), Ratio::new(5, 2));
        assert_eq!(steps_exponent_exact(5).unwrap(), Ratio::from_integer(3));
    }

    #[test]
    fn beyond_threshold_rejected() {
        assert!(matches!(ledger_check(2, 0.34, 0.01, 0.5), Err(Error::BeyondThreshold { .. })));
    }

    #[test]
    fn tiny_alpha_passes() {
        let c = ledger_check(3, 0.15, 1e-6, 0.5).unwrap();
        assert!(c.passes());
        assert!((c.b - 1.0).abs() < 1e-4 && c.kappa > 1.0);
    }
}
