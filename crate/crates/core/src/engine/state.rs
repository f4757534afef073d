//! Adapted short states `g − ∇uᵀ∇u = ρ²(g + h)` and the initial short map.

use serde::Serialize;

use crate::corrugation::CorrugationProfile;
use crate::error::{Error, Result};
use crate::grid::{gradient, product_torus, DiffScheme, Embedding, MetricField, PeriodicField};
use crate::linalg::{sym_index, Mat};
use crate::real::Real;
use crate::stage::{run_stage, StageParams, StageReport};

/// States with `ρ` below this are rejected: the shortness margin has vanished.
pub const RHO_MIN: f64 = 1e-6;

#[derive(Clone, Copy, Debug, Serialize)]
pub struct StateParams {
    pub theta: f64,
    pub beta: f64,
    pub alpha: f64,
    pub a: f64,
}

#[derive(Clone, Debug)]
pub struct AdaptedShortState<T> {
    pub g: MetricField<T>,
    pub u: Embedding<T>,
    pub rho: PeriodicField<T>,
    pub h: MetricField<T>,
    pub params: StateParams,
}

/// Worst ratio `lhs / rhs` over nodes for one inequality; it holds when `ratio ≤ 1`
/// (up to a relative `1e-12` for bounds attained with equality).
#[derive(Clone, Debug, Serialize)]
pub struct BoundCheck {
    pub name: &'static str,
    pub ratio: f64,
    pub node: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct BoundsReport {
    pub identity_residual: f64,
    pub checks: Vec<BoundCheck>,
}

impl BoundsReport {
    pub fn first_violation(&self) -> Option<&BoundCheck> {
        self.checks.iter().find(|c| !(c.ratio <= 1.0 + 1e-12))
    }

    /// `1 − max ratio`: the smallest relative margin.
    pub fn margin(&self) -> f64 {
        1.0 - self.checks.iter().map(|c| c.ratio).fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Frobenius norm of the symmetric matrix gradient stored per packed component.
fn packed_gradient_norm<T: Real>(grad: &[T], n: usize) -> T {
    let mut s = T::zero();
    for a in 0..n {
        for b in a..n {
            let w = if a == b { T::one() } else { T::lit(2.0) };
            for j in 0..n {
                let v = grad[sym_index(n, a, b) * n + j];
                s = s + w * v * v;
            }
        }
    }
    s.sqrt()
}

impl<T: Real> AdaptedShortState<T> {
    /// `sup |g − ∇uᵀ∇u − ρ²(g+h)| / sup |g|` (operator norm).
    pub fn identity_residual(&self) -> Result<T> {
        let lhs = self.g.sub(&self.u.metric()?)?;
        let r2 = self.rho.mul_scalar_field(&self.rho)?;
        let rhs = self.g.add(&self.h)?.scale_by(&r2)?;
        Ok(lhs.sub(&rhs)?.sup_norm() / self.g.sup_norm())
    }

    /// Evaluates every bound of the adapted-short definition nodewise.
    pub fn bounds(&self) -> Result<BoundsReport> {
        let StateParams { theta, beta, alpha, a } = self.params;
        let n = self.u.dim();
        let hess = gradient(&self.u.jacobian, DiffScheme::Spectral)?;
        let grho = gradient(&self.rho, DiffScheme::Spectral)?;
        let gh = gradient(self.h.field(), DiffScheme::Spectral)?;
        let mut checks = vec![
            BoundCheck { name: "hessian", ratio: 0.0, node: 0 },
            BoundCheck { name: "rho_positive", ratio: 0.0, node: 0 },
            BoundCheck { name: "rho_upper", ratio: 0.0, node: 0 },
            BoundCheck { name: "h", ratio: 0.0, node: 0 },
            BoundCheck { name: "grad_rho", ratio: 0.0, node: 0 },
            BoundCheck { name: "grad_h", ratio: 0.0, node: 0 },
        ];
        let norm = |v: &[T]| v.iter().fold(0.0, |acc, x| acc + x.as_f64() * x.as_f64()).sqrt();
        let rho_cap = a.powf(-beta);
        for node in 0..self.rho.nodes() {
            let rho = self.rho.at(node)[0].as_f64();
            let vals = [
                norm(hess.at(node)) / (a * rho.powf(1.0 - 1.0 / theta)),
                // ρ > 0 is recorded as ρ_min / ρ so it shares the `≤ 1` convention
                RHO_MIN / rho,
                rho / rho_cap,
                self.h.get(node).op_norm().as_f64() / (a.powf(-alpha * theta) * rho.powf(alpha)),
                norm(grho.at(node)) / (a * rho.powf(1.0 - 1.0 / theta)),
                packed_gradient_norm(gh.at(node), n).as_f64() / (a.powf(1.0 - alpha * theta) * rho.powf(alpha - 1.0 / theta)),
            ];
            for (c, v) in checks.iter_mut().zip(vals) {
                let v = if v.is_nan() { f64::INFINITY } else { v };
                if v > c.ratio {
                    c.ratio = v;
                    c.node = node;
                }
            }
        }
        Ok(BoundsReport { identity_residual: self.identity_residual()?.as_f64(), checks })
    }

    /// Like [`bounds`](Self::bounds) but fails on the first violated inequality.
    pub fn verify(&self) -> Result<BoundsReport> {
        let r = self.bounds()?;
        if let Some(c) = r.first_violation() {
            return Err(Error::BoundViolation(format!("{} ratio {:.4e} at node {}", c.name, c.ratio, c.node)));
        }
        Ok(r)
    }
}

/// `ρ_{q+1}² = ρ_q²(1 − χ²) + δ χ²`, nodewise.
pub fn rho_update<T: Real>(rho: &PeriodicField<T>, chi: &PeriodicField<T>, delta_next: T) -> Result<PeriodicField<T>> {
    if !rho.same_grid(chi) {
        return Err(Error::Dimension("ρ and χ live on different grids".into()));
    }
    let data = rho
        .data()
        .iter()
        .zip(chi.data())
        .map(|(&r, &c)| (r * r * (T::one() - c * c) + delta_next * c * c).sqrt())
        .collect();
    PeriodicField::new(rho.dim(), 1, rho.resolution(), data)
}

/// Flat torus `g = Id`: `u₀ = ε · (product of circles)`, `ρ² = 1 − ε²`, `h = 0`.
/// Without `eps`, `ε` is chosen so that `ρ = A^{−β}` exactly.
pub fn initial_short_flat<T: Real>(
    n: usize,
    res: usize,
    params: StateParams,
    eps: Option<T>,
) -> Result<AdaptedShortState<T>> {
    // with ρ given, ε = √(1 − ρ²) avoids the cancellation in 1 − ε² for tiny ρ
    let (eps, rho) = match eps {
        Some(e) => (e, (T::one() - e * e).max(T::zero()).sqrt()),
        None => {
            let r = T::lit(params.a.powf(-params.beta));
            ((T::one() - r * r).sqrt(), r)
        }
    };
    if !(rho.as_f64() >= RHO_MIN) {
        return Err(Error::BoundViolation(format!("ρ = √(1 − ε²) below ρ_min = {RHO_MIN} (ε = {})", eps.as_f64())));
    }
    let state = AdaptedShortState {
        g: MetricField::identity(n, res)?,
        u: product_torus(n, res, eps)?,
        rho: PeriodicField::constant(n, res, &[rho])?,
        h: MetricField::zeros(n, res)?,
        params,
    };
    state.verify()?;
    Ok(state)
}

#[derive(Clone, Debug)]
pub struct CorrectionOptions<T> {
    /// Scale `ε` of the product-torus seed.
    pub eps: T,
    /// Target `ρ̃² = δ`.
    pub delta: T,
    pub lambda: T,
    pub kappa: T,
}

/// Near-flat `g`: corrects the seed `ε · (product of circles)` by one stage adding
/// `g − ∇uᵀ∇u − δg`, then sets `ρ̃ = δ^{1/2}`, `h̃ = −𝓔/δ` and checks every bound.
pub fn initial_short_corrected<T: Real>(
    g: &MetricField<T>,
    params: StateParams,
    opts: &CorrectionOptions<T>,
    profile: &CorrugationProfile<T>,
) -> Result<(AdaptedShortState<T>, StageReport)> {
    let n = g.dim();
    let res = g.resolution();
    let u = product_torus(n, res, opts.eps)?;
    let p = g.sub(&u.metric()?)?.sub(&g.scale(opts.delta))?;
    // ρ constant with ρ² the mean trace per dimension keeps G = P/ρ² near a unit scale
    let mean = crate::linalg::unpack_sym(n, &p.field().mean());
    let c = mean.trace() / T::from_usize_lossy(n);
    if !(c > T::zero()) {
        return Err(Error::NotElliptic { node: 0, eigenvalue: c.as_f64() });
    }
    let rho = PeriodicField::constant(n, res, &[c.sqrt()])?;
    let gg = p.scale(T::one() / c);
    let h0 = MetricField::zeros(n, res)?;
    let mut sp = StageParams::new(n, c * T::lit(1.0 + 1e-9), opts.lambda, opts.kappa);
    sp.gamma = T::lit(1e3);
    let out = run_stage(&u, &rho, &gg, &h0, profile, &sp)?;
    let h = out.error.scale(-T::one() / opts.delta);
    let state = AdaptedShortState {
        g: g.clone(),
        u: out.v,
        rho: PeriodicField::constant(n, res, &[opts.delta.sqrt()])?,
        h,
        params,
    };
    state.verify()?;
    Ok((state, out.report))
}

/// `Id + s · sin(x₁ + ... )`-type smooth perturbation used by the near-flat path tests.
pub fn near_flat_metric<T: Real>(n: usize, res: usize, s: T) -> Result<MetricField<T>> {
    MetricField::from_fn(n, res, |x: &[T]| {
        let w = x.iter().fold(T::zero(), |acc, &v| acc + v);
        let mut m = Mat::identity(n);
        m[(0, 0)] = m[(0, 0)] + s * w.sin();
        if n > 1 {
            m[(0, 1)] = s * T::lit(0.5) * x[1].cos();
            m[(1, 0)] = m[(0, 1)];
        }
        m
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params() -> StateParams {
        StateParams { theta: 0.3, beta: 0.5, alpha: 0.05, a: 10.0 }
    }

    #[test]
    fn flat_seed_is_exact() {
        let s = initial_short_flat::<f64>(2, 32, StateParams { a: 4.0, ..params() }, Some(0.9)).unwrap();
        assert!(s.identity_residual().unwrap() < 1e-15);
        assert!((s.rho.at(0)[0] - 0.19f64.sqrt()).abs() < 1e-15);
        assert_eq!(s.h.sup_norm(), 0.0);
    }

    #[test]
    fn eps_near_one_is_rejected() {
        let e = initial_short_flat::<f64>(2, 16, params(), Some(1.0 - 1e-14));
        assert!(matches!(e, Err(Error::BoundViolation(_))));
    }

    #[test]
    fn rho_update_limits() {
        let rho = PeriodicField::constant(2, 8, &[0.3f64]).unwrap();
        let one = PeriodicField::constant(2, 8, &[1.0f64]).unwrap();
        let zero = PeriodicField::constant(2, 8, &[0.0f64]).unwrap();
        assert!(rho_update(&rho, &one, 0.01).unwrap().data().iter().all(|&r| (r - 0.1).abs() < 1e-15));
        assert_eq!(rho_update(&rho, &zero, 0.01).unwrap().data(), rho.data());
        let r = PeriodicField::constant(2, 8, &[0.1f64]).unwrap();
        let half = PeriodicField::constant(2, 8, &[0.5f64.sqrt()]).unwrap();
        assert!(rho_update(&r, &half, 0.01).unwrap().data().iter().all(|&x| (x - 0.1).abs() < 1e-15));
    }

    #[test]
    fn near_flat_correction_has_margin() {
        let g = near_flat_metric::<f64>(2, 256, 0.05).unwrap();
        let prof = CorrugationProfile::new(1.0).unwrap();
        let opts = CorrectionOptions { eps: 0.8, delta: 0.1, lambda: 32.0, kappa: 1.2 };
        let p = StateParams { beta: 0.4, ..params() };
        let (s, _) = initial_short_corrected(&g, p, &opts, &prof).unwrap();
        let b = s.bounds().unwrap();
        assert!(b.margin() >= 0.1, "{b:?}");
        assert!(b.identity_residual < 1e-12);
    }
}

