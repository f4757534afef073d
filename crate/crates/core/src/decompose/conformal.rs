//! Isothermal coordinates for near-flat metrics on T².
//!
//! With `w = Φ₁ + iΦ₂`, `P = a² DΦᵀDΦ` is the Beltrami equation `w_z̄ = μ w_z`,
//! `μ = (P₁₁ − P₂₂ + 2iP₁₂) / (P₁₁ + P₂₂ + 2√det P)`. We look for
//! `w = z + c z̄ + f` with `f` periodic; `g = f_z` solves the fixed point
//! `g = S[μ(1 + g) − c]`, `c = mean(μ(1 + g))`, where `S` is the Beurling
//! transform (a unimodular Fourier multiplier), so the map contracts with factor `sup|μ|`.

use rustfft::num_complex::Complex;

use crate::error::{Error, Result};
use crate::grid::spectral::Spectral;
use crate::grid::{MetricField, PeriodicField};
use crate::linalg::Mat;
use crate::real::Real;

/// Largest admissible `sup |μ|`; about `‖P/c − Id‖ ≤ 0.3` for a scalar `c`.
pub const MAX_BELTRAMI: f64 = 0.3;

#[derive(Clone, Debug)]
pub struct ConformalOptions {
    pub tol: f64,
    pub max_iter: usize,
    /// Relaxation weight of the fixed-point update.
    pub damping: f64,
    /// Required `sup |P − a² DΦᵀDΦ| / ‖P‖₀`.
    pub residual_tol: f64,
}

impl Default for ConformalOptions {
    fn default() -> Self {
        ConformalOptions { tol: 1e-14, max_iter: 400, damping: 1.0, residual_tol: 1e-6 }
    }
}

/// `P = a² (∇Φ₁⊗∇Φ₁ + ∇Φ₂⊗∇Φ₂)` with `Φ(x) = B x + φ(x)`, `φ` periodic.
#[derive(Clone, Debug)]
pub struct ConformalFactorization<T> {
    pub a: PeriodicField<T>,
    /// Constant part `B` of `DΦ` (row `k` is the mean gradient of `Φ_k`).
    pub affine: Mat<T>,
    /// Periodic parts `φ₁, φ₂`.
    pub periodic: [PeriodicField<T>; 2],
    /// `DΦ` row-major (component `k * 2 + j` is `∂_j Φ_k`).
    pub jacobian: PeriodicField<T>,
    pub residual: T,
    pub min_det: T,
    pub min_a: T,
    pub iterations: usize,
    pub history: Vec<T>,
}

fn cz<T: Real>(re: T, im: T) -> Complex<T> {
    Complex::new(re, im)
}

pub fn beltrami_coefficient<T: Real>(p: &Mat<T>) -> Complex<T> {
    let det = (p[(0, 0)] * p[(1, 1)] - p[(0, 1)] * p[(0, 1)]).max(T::zero());
    let den = p[(0, 0)] + p[(1, 1)] + T::lit(2.0) * det.sqrt();
    cz((p[(0, 0)] - p[(1, 1)]) / den, T::lit(2.0) * p[(0, 1)] / den)
}

pub fn conformal_factorize<T: Real>(p: &MetricField<T>, opts: &ConformalOptions) -> Result<ConformalFactorization<T>> {
    if p.dim() != 2 {
        return Err(Error::Dimension("conformal factorisation needs n = 2".into()));
    }
    let ((lo, node), _) = p.eigen_range();
    if lo <= T::zero() {
        return Err(Error::NotElliptic { node, eigenvalue: lo.as_f64() });
    }
    let res = p.resolution();
    let sp = Spectral::<T>::new(2, res);
    let len = sp.len();
    let mu: Vec<Complex<T>> = (0..len).map(|i| beltrami_coefficient(&p.get(i))).collect();
    let mu_max = mu.iter().fold(T::zero(), |acc, m| acc.max(m.norm()));
    if mu_max > T::lit(MAX_BELTRAMI) {
        return Err(Error::NotNearFlat(format!("sup |μ| = {} exceeds {MAX_BELTRAMI}", mu_max.as_f64())));
    }
    let zero = cz(T::zero(), T::zero());
    // Beurling multiplier (i k₁ + k₂)/(i k₁ − k₂) and the inverse of ∂_z̄, 2/(i k₁ − k₂)
    let mut bins = [0usize; 2];
    let mut beurling = vec![zero; len];
    let mut inv_dzbar = vec![zero; len];
    for i in 0..len {
        sp.bins(i, &mut bins);
        if i == 0 || sp.is_nyquist(bins[0]) || sp.is_nyquist(bins[1]) {
            continue;
        }
        let k1 = T::lit(sp.wavenumber(bins[0]) as f64);
        let k2 = T::lit(sp.wavenumber(bins[1]) as f64);
        let den = cz(-k2, k1);
        beurling[i] = cz(k2, k1) / den;
        inv_dzbar[i] = cz(T::lit(2.0), T::zero()) / den;
    }
    let inv_len = T::one() / T::from_usize_lossy(len);
    let rhs = |g: &[Complex<T>]| -> (Vec<Complex<T>>, Complex<T>) {
        let h: Vec<Complex<T>> = mu.iter().zip(g).map(|(m, g)| *m * (cz(T::one(), T::zero()) + *g)).collect();
        let c = h.iter().fold(zero, |acc, v| acc + *v) * inv_len;
        (h.into_iter().map(|v| v - c).collect(), c)
    };
    let mut g = vec![zero; len];
    let mut history = Vec::new();
    let mut damping = T::lit(opts.damping);
    let tol = T::lit(opts.tol).max(T::epsilon() * T::lit(8.0));
    let mut converged = false;
    let mut iterations = 0;
    for it in 1..=opts.max_iter {
        iterations = it;
        let (mut h, _) = rhs(&g);
        sp.forward(&mut h);
        for (v, m) in h.iter_mut().zip(&beurling) {
            *v = *v * *m;
        }
        sp.inverse(&mut h);
        let upd = h.iter().zip(&g).fold(T::zero(), |acc, (a, b)| acc.max((*a - *b).norm()));
        if !upd.is_finite() {
            return Err(Error::ConformalDivergence(history.iter().map(|x: &T| x.as_f64()).collect()));
        }
        if let Some(&prev) = history.last() {
            if upd > prev && damping > T::lit(0.1) {
                damping = damping * T::lit(0.5);
            }
        }
        history.push(upd);
        for (gi, hi) in g.iter_mut().zip(&h) {
            *gi = *gi + (*hi - *gi) * damping;
        }
        if upd <= tol {
            converged = true;
            break;
        }
    }
    let hist64: Vec<f64> = history.iter().map(|x| x.as_f64()).collect();
    if !converged {
        return Err(Error::ConformalDivergence(hist64));
    }
    let (h, c) = rhs(&g);
    let mut f = h.clone();
    sp.forward(&mut f);
    for (v, m) in f.iter_mut().zip(&inv_dzbar) {
        *v = *v * *m;
    }
    sp.inverse(&mut f);
    let one = cz(T::one(), T::zero());
    let mut jac = vec![T::zero(); len * 4];
    let mut a = vec![T::zero(); len];
    let mut residual = T::zero();
    let mut min_det = T::infinity();
    let mut min_a = T::infinity();
    for i in 0..len {
        let wz = one + g[i];
        let wzb = c + h[i];
        let wx = wz + wzb;
        let wy = cz(T::zero(), T::one()) * (wz - wzb);
        let d = Mat::from_rows(2, 2, &[wx.re, wy.re, wx.im, wy.im]);
        jac[i * 4..i * 4 + 4].copy_from_slice(&d.data);
        let pm = p.get(i);
        let dd = d.gram();
        let a2 = pm.trace() / dd.trace();
        a[i] = a2.sqrt();
        residual = residual.max((&pm - &dd.scale(a2)).op_norm());
        min_det = min_det.min(d.det());
        min_a = min_a.min(a[i]);
    }
    let scale = p.sup_norm();
    if residual > T::lit(opts.residual_tol) * scale {
        return Err(Error::ConformalDivergence(hist64));
    }
    let affine = Mat::from_rows(2, 2, &[T::one() + c.re, c.im, c.im, T::one() - c.re]);
    let phi1 = PeriodicField::new(2, 1, res, f.iter().map(|v| v.re).collect())?;
    let phi2 = PeriodicField::new(2, 1, res, f.iter().map(|v| v.im).collect())?;
    Ok(ConformalFactorization {
        a: PeriodicField::new(2, 1, res, a)?,
        affine,
        periodic: [phi1, phi2],
        jacobian: PeriodicField::new(2, 4, res, jac)?,
        residual,
        min_det,
        min_a,
        iterations,
        history,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn conformally_flat_metric_keeps_identity_coordinates() {
        let p = MetricField::from_fn(2, 64, |x: &[f64]| {
            let e = (0.2 * x[0].sin() * x[1].sin()).exp();
            Mat::identity(2).scale(e)
        })
        .unwrap();
        let c = conformal_factorize(&p, &ConformalOptions::default()).unwrap();
        assert!(c.periodic[0].max_abs() < 1e-12 && c.periodic[1].max_abs() < 1e-12);
        assert!((&c.affine - &Mat::identity(2)).max_abs() < 1e-14);
        assert!(c.residual < 1e-12);
    }

    #[test]
    fn anisotropic_metric_is_factorized() {
        let p = MetricField::from_fn(2, 64, |x: &[f64]| {
            let s = 0.1 * (x[0] + 2.0 * x[1]).sin();
            Mat::from_rows(2, 2, &[1.0 + s, 0.08 * x[1].cos(), 0.08 * x[1].cos(), 1.0 - 0.5 * s])
        })
        .unwrap();
        let c = conformal_factorize(&p, &ConformalOptions::default()).unwrap();
        assert!(c.residual < 1e-10, "{}", c.residual);
        assert!(c.min_det > 0.5 && c.min_a > 0.5);
        assert!(c.iterations < 60);
    }

    #[test]
    fn strongly_anisotropic_metric_is_rejected() {
        let p = MetricField::constant(2, 16, &Mat::from_rows(2, 2, &[4.0, 0.0, 0.0, 1.0])).unwrap();
        assert!(matches!(conformal_factorize(&p, &ConformalOptions::default()), Err(Error::NotNearFlat(_))));
    }
}
