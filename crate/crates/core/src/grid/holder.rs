//! Discrete Hölder norms.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::real::Real;

use super::diff::{gradient, hessian, DiffScheme};
use super::field::PeriodicField;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct HolderOptions {
    /// Pairs farther apart than this are not sampled.
    pub max_distance: f64,
    /// Upper bound on the number of sampled pairs.
    pub pair_budget: usize,
    pub scheme: DiffScheme,
}

impl Default for HolderOptions {
    fn default() -> Self {
        HolderOptions { max_distance: 0.25, pair_budget: 1_000_000, scheme: DiffScheme::Spectral }
    }
}

/// Cumulative norms `‖f‖_0 ≤ ‖f‖_1 ≤ ‖f‖_2` and sampled seminorms `[f]_α`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct HolderReport<T> {
    pub sup_norm: T,
    pub grad_sup: T,
    pub hess_sup: T,
    pub seminorms: Vec<(f64, T)>,
    pub pairs_sampled: usize,
    pub method: String,
}

impl<T: Real> HolderReport<T> {
    pub fn seminorm(&self, alpha: f64) -> Option<T> {
        self.seminorms.iter().find(|(a, _)| (*a - alpha).abs() < 1e-12).map(|p| p.1)
    }

    /// `‖f‖_{0,α} = ‖f‖_0 + [f]_α`.
    pub fn holder_norm(&self, alpha: f64) -> Option<T> {
        self.seminorm(alpha).map(|s| self.sup_norm + s)
    }
}

fn node_norm<T: Real>(v: &[T]) -> T {
    v.iter().fold(T::zero(), |acc, &x| acc + x * x).sqrt()
}

/// Lattice offsets (first non-zero entry positive) within `radius` cells, shortest first.
fn offsets(n: usize, radius: f64) -> Vec<Vec<isize>> {
    let r = radius.floor() as isize;
    let mut out = Vec::new();
    let mut o = vec![-r; n];
    loop {
        let first = o.iter().find(|&&x| x != 0);
        let len2: f64 = o.iter().map(|&x| (x * x) as f64).sum();
        if first.map_or(false, |&x| x > 0) && len2.sqrt() <= radius {
            out.push(o.clone());
        }
        let mut a = n;
        loop {
            if a == 0 {
                out.sort_by(|p, q| {
                    let lp: isize = p.iter().map(|x| x * x).sum();
                    let lq: isize = q.iter().map(|x| x * x).sum();
                    lp.cmp(&lq).then_with(|| p.cmp(q))
                });
                return out;
            }
            a -= 1;
            if o[a] < r {
                o[a] += 1;
                for b in a + 1..n {
                    o[b] = -r;
                }
                break;
            }
        }
    }
}

/// Sampled Hölder seminorms `[f]_α = sup |f(x) - f(y)| / |x - y|^α`.
///
/// All node pairs within `max_distance` are used when they fit in the budget.
/// Otherwise the longer offsets are thinned with a fixed stride (the shortest
/// `2n` are always kept) and, if still needed, nodes are visited with a stride.
pub fn holder_seminorms<T: Real>(f: &PeriodicField<T>, alphas: &[f64], opts: &HolderOptions) -> (Vec<(f64, T)>, usize) {
    let n = f.dim();
    let h = f.spacing().as_f64();
    let mut offs = offsets(n, opts.max_distance / h);
    if offs.is_empty() {
        offs = offsets(n, 1.0);
    }
    let nodes = f.nodes();
    let budget = opts.pair_budget.max(1);
    let keep = (budget / nodes).max(2 * n).min(offs.len());
    if keep < offs.len() {
        let short = 2 * n.min(keep);
        let rest = offs.split_off(short);
        let want = keep - short;
        if want > 0 {
            let stride = rest.len().div_ceil(want);
            offs.extend(rest.into_iter().step_by(stride));
        }
    }
    let node_stride = (nodes * offs.len()).div_ceil(budget).max(1);
    // odd stride so the visited nodes spread over every axis
    let node_stride = if node_stride > 1 && node_stride % 2 == 0 { node_stride + 1 } else { node_stride };
    let dists: Vec<f64> = offs.iter().map(|o| o.iter().map(|&x| (x * x) as f64).sum::<f64>().sqrt() * h).collect();
    let mut best = vec![T::zero(); alphas.len()];
    let mut count = 0;
    let k = f.components();
    let mut diffv = vec![T::zero(); k];
    let mut node = 0;
    while node < nodes {
        let a = f.at(node);
        for (o, &d) in offs.iter().zip(&dists) {
            let mut other = node;
            for (axis, &step) in o.iter().enumerate() {
                if step != 0 {
                    other = f.neighbor(other, axis, step);
                }
            }
            let b = f.at(other);
            for c in 0..k {
                diffv[c] = a[c] - b[c];
            }
            let num = node_norm(&diffv);
            for (bi, &alpha) in best.iter_mut().zip(alphas) {
                let q = num / T::lit(d.powf(alpha));
                if q > *bi {
                    *bi = q;
                }
            }
            count += 1;
        }
        node += node_stride;
    }
    (alphas.iter().copied().zip(best).collect(), count)
}

pub fn holder_norms<T: Real>(f: &PeriodicField<T>, alphas: &[f64], opts: &HolderOptions) -> Result<HolderReport<T>> {
    if f.nodes() == 0 || f.data().is_empty() {
        return Err(Error::EmptyField);
    }
    let sup = f.sup_norm();
    let g = gradient(f, opts.scheme)?;
    let grad = g.sup_norm();
    let hess = if opts.scheme == DiffScheme::Spectral {
        hessian(f)?.sup_norm()
    } else {
        gradient(&g, opts.scheme)?.sup_norm()
    };
    let (seminorms, pairs) = holder_seminorms(f, alphas, opts);
    Ok(HolderReport {
        sup_norm: sup,
        grad_sup: sup + grad,
        hess_sup: sup + grad + hess,
        seminorms,
        pairs_sampled: pairs,
        method: format!(
            "{:?} derivatives; pairs within {} (budget {})",
            opts.scheme, opts.max_distance, opts.pair_budget
        ),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn offsets_are_half_space_and_sorted() {
        let o = offsets(2, 1.5);
        assert_eq!(o.len(), 4);
        assert_eq!(o[0], vec![0, 1]);
        assert_eq!(o[1], vec![1, 0]);
    }

    #[test]
    fn lipschitz_seminorm_of_sine() {
        let f = PeriodicField::<f64>::from_scalar_fn(2, 256, |x| x[0].sin()).unwrap();
        let r = holder_norms(&f, &[1.0], &HolderOptions::default()).unwrap();
        let s = r.seminorm(1.0).unwrap();
        assert!((s - 1.0).abs() < 0.05, "{s}");
        assert!(r.sup_norm <= r.grad_sup && r.grad_sup <= r.hess_sup);
    }
}
