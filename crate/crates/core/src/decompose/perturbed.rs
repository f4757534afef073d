use crate::error::{Error, Result};
use crate::grid::{MetricField, PeriodicField};
use crate::linalg::Mat;
use crate::real::Real;

use super::nash::NashBasis;

#[derive(Clone, Debug)]
pub struct PicardOptions {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for PicardOptions {
    fn default() -> Self {
        PicardOptions { tol: 1e-12, max_iter: 100 }
    }
}

#[derive(Clone, Debug)]
pub struct PerturbedDecomposition<T> {
    pub amplitudes: Vec<PeriodicField<T>>,
    /// Largest iteration count over nodes.
    pub iterations: usize,
    /// `sup |P − Σ a_i² ξ_i⊗ξ_i − Σ a_k Λ_k − Σ a_k a_l Θ_kl|`.
    pub residual: T,
    /// Largest amplitude update per iteration (maximum over nodes).
    pub history: Vec<T>,
}

/// Node-local Picard iteration. `lambda[k]`, `theta[k][l]` are the perturbation
/// matrices at this node for the first `N₀ = lambda.len()` amplitudes.
pub fn perturbed_at<T: Real>(
    basis: &NashBasis<T>,
    p: &Mat<T>,
    lambda: &[Mat<T>],
    theta: &[Vec<Mat<T>>],
    node: usize,
    opts: &PicardOptions,
    history: &mut Vec<T>,
) -> Result<(Vec<T>, usize)> {
    let n0 = lambda.len();
    let contraction = |e: Error, it: usize, last: T| match e {
        Error::DecompositionRadius { .. } => Error::ContractionRadius { iterations: it, last_update: last.as_f64() },
        other => other,
    };
    let (mut a, _) = basis.amplitudes_at(p, node).map_err(|e| contraction(e, 0, T::zero()))?;
    let scale = a.iter().fold(T::one(), |acc, &x| acc.max(x));
    let tol = T::lit(opts.tol) * scale;
    let mut last = T::infinity();
    for it in 1..=opts.max_iter {
        let mut q = p.clone();
        for k in 0..n0 {
            q = &q - &lambda[k].scale(a[k]);
            for l in 0..n0 {
                q = &q - &theta[k][l].scale(a[k] * a[l]);
            }
        }
        let (next, _) = basis.amplitudes_at(&q, node).map_err(|e| contraction(e, it, last))?;
        let upd = next.iter().zip(&a).fold(T::zero(), |acc, (&x, &y)| acc.max((x - y).abs()));
        if history.len() < it {
            history.push(upd);
        } else if upd > history[it - 1] {
            history[it - 1] = upd;
        }
        a = next;
        if upd <= tol {
            return Ok((a, it));
        }
        if it > 3 && upd > last * T::lit(2.0) {
            return Err(Error::ContractionRadius { iterations: it, last_update: upd.as_f64() });
        }
        last = upd;
    }
    Err(Error::ContractionRadius { iterations: opts.max_iter, last_update: last.as_f64() })
}

/// Solves `P = Σ a_i² ξ_i⊗ξ_i + Σ_{k<N₀} a_k Λ_k + Σ_{k,l<N₀} a_k a_l Θ_kl` by the
/// fixed-point map `a ↦ √L(P − Σ a_k Λ_k − Σ a_k a_l Θ_kl)`.
pub fn perturbed_decompose<T: Real>(
    p: &MetricField<T>,
    lambda: &[MetricField<T>],
    theta: &[Vec<MetricField<T>>],
    basis: &NashBasis<T>,
    opts: &PicardOptions,
) -> Result<PerturbedDecomposition<T>> {
    let n0 = lambda.len();
    if n0 > basis.len() || theta.len() != n0 || theta.iter().any(|r| r.len() != n0) {
        return Err(Error::Dimension(format!("N₀ = {n0} with {} Θ rows", theta.len())));
    }
    let nodes = p.nodes();
    let mut amps = vec![vec![T::zero(); nodes]; basis.len()];
    let mut history = Vec::new();
    let mut iterations = 0;
    let mut residual = T::zero();
    for node in 0..nodes {
        let pm = p.get(node);
        let lm: Vec<Mat<T>> = lambda.iter().map(|f| f.get(node)).collect();
        let tm: Vec<Vec<Mat<T>>> = theta.iter().map(|r| r.iter().map(|f| f.get(node)).collect()).collect();
        let (a, it) = perturbed_at(basis, &pm, &lm, &tm, node, opts, &mut history)?;
        iterations = iterations.max(it);
        let sq: Vec<T> = a.iter().map(|&x| x * x).collect();
        let mut rec = basis.assemble(&sq);
        for k in 0..n0 {
            rec = &rec + &lm[k].scale(a[k]);
            for l in 0..n0 {
                rec = &rec + &tm[k][l].scale(a[k] * a[l]);
            }
        }
        residual = residual.max((&pm - &rec).op_norm());
        for (i, v) in a.into_iter().enumerate() {
            amps[i][node] = v;
        }
    }
    let amplitudes = amps
        .into_iter()
        .map(|d| PeriodicField::new(p.dim(), 1, p.resolution(), d))
        .collect::<Result<_>>()?;
    Ok(PerturbedDecomposition { amplitudes, iterations, residual, history })
}

/// Largest perturbation size for which the Picard iteration still converges,
/// found by bisection along the given perturbation directions.
pub fn calibrate_sigma1<T: Real>(
    basis: &NashBasis<T>,
    lambda_dir: &[Mat<T>],
    theta_dir: &[Vec<Mat<T>>],
    opts: &PicardOptions,
) -> T {
    let converges = |eps: T| {
        let l: Vec<Mat<T>> = lambda_dir.iter().map(|m| m.scale(eps)).collect();
        let t: Vec<Vec<Mat<T>>> = theta_dir.iter().map(|r| r.iter().map(|m| m.scale(eps)).collect()).collect();
        let mut h = Vec::new();
        perturbed_at(basis, &basis.center, &l, &t, 0, opts, &mut h).is_ok()
    };
    let (mut lo, mut hi) = (T::zero(), T::one());
    while converges(hi) && hi < T::lit(1e6) {
        lo = hi;
        hi = hi * T::lit(2.0);
    }
    for _ in 0..60 {
        let mid = (lo + hi) * T::lit(0.5);
        if converges(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}
