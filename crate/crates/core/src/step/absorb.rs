//! Even-dimensional first step: Nash spirals whose linear and quadratic
//! interaction errors are folded into the metric decomposition.
//!
//! With `τ = (κ+1)/2` the map is `u₁ = u + Σ_{k ≤ n/2} ν_k⁻¹ b̃_k D_k` where
//! `D_k = sin(ν_k ξ_k·x) ζ_k + cos(ν_k ξ_k·x) η_k`. The errors `Λ_k`, `Θ_kl` are
//! absorbed by the perturbed decomposition; the remaining `n²/2` amplitudes are
//! handed back for ordinary steps.

use serde::Serialize;

use crate::decompose::{perturbed_decompose, NashBasis, PicardOptions};
use crate::error::{Error, Result};
use crate::frames::normal_frame;
use crate::grid::{gradient, mollify, DiffScheme, Embedding, MetricField, PeriodicField};
use crate::linalg::Mat;
use crate::real::Real;

use super::corrugate::Phase;

#[derive(Clone, Debug)]
pub struct AbsorptionParams<T> {
    pub lambda: T,
    pub kappa: T,
    pub delta: T,
    /// `C₀` in `ε^{1/2} = C₀ δ^{1/2} λ^{1−τ}`.
    pub c_cutoff: T,
    pub picard: PicardOptions,
}

impl<T: Real> AbsorptionParams<T> {
    pub fn new(lambda: T, kappa: T, delta: T) -> Self {
        AbsorptionParams { lambda, kappa, delta, c_cutoff: T::one(), picard: PicardOptions::default() }
    }

    pub fn tau(&self) -> T {
        (self.kappa + T::one()) * T::lit(0.5)
    }
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct AbsorptionReport {
    pub lambda: f64,
    pub tau: f64,
    pub eps_half: f64,
    pub spiral_frequencies: Vec<f64>,
    pub picard_iterations: usize,
    /// `sup |G+H − Σ a_i²ξ_i⊗ξ_i − Σ a_k ψΛ_k − Σ a_k a_l Θ_kl|` before mollification.
    pub decomposition_residual: f64,
    pub lambda_sup: f64,
    pub theta_sup: f64,
    pub e1_0: f64,
    pub e1_1: f64,
    pub e2_0: f64,
    pub e2_1: f64,
    /// Mismatch between the induced metric increment and its closed-form expansion.
    pub expansion_residual: f64,
    /// `‖∇u₁ᵀ∇u₁ − (∇uᵀ∇u + ρ²(G+H) − Σ_{k>n/2} b_k² ξ_k⊗ξ_k)‖₀`.
    pub defect0: f64,
}

#[derive(Clone, Debug)]
pub struct AbsorptionOutput<T> {
    pub u1: Embedding<T>,
    /// Amplitudes and phases of the primitives left for plain steps, scaled so that
    /// `a² ∇Φ⊗∇Φ = b̃² ξ⊗ξ`.
    pub remaining: Vec<(PeriodicField<T>, Phase<T>)>,
    /// `ρ a_i` before mollification, all `n_*` of them.
    pub b: Vec<PeriodicField<T>>,
    pub report: AbsorptionReport,
}

/// Smooth decreasing cutoff: `1/ρ` above `2e`, `1/e` below `e`.
pub fn cutoff_psi<T: Real>(rho: T, e: T) -> T {
    let inv_e = T::one() / e;
    if rho >= e * T::lit(2.0) {
        return T::one() / rho;
    }
    if rho <= e {
        return inv_e;
    }
    let chi = smooth_step((rho - e) / e);
    inv_e - chi * (inv_e - T::one() / rho)
}

/// `C^∞` transition from 0 on `(−∞,0]` to 1 on `[1,∞)`.
fn smooth_step<T: Real>(x: T) -> T {
    let f = |y: T| if y > T::zero() { (-T::one() / y).exp() } else { T::zero() };
    let a = f(x);
    a / (a + f(T::one() - x))
}

fn outer<T: Real>(a: &[T], b: &[T]) -> Mat<T> {
    Mat::from_fn(a.len(), b.len(), |i, j| a[i] * b[j])
}

fn sym2<T: Real>(m: &Mat<T>) -> Mat<T> {
    m + &m.transpose()
}

pub fn apply_absorption_step<T: Real>(
    u: &Embedding<T>,
    rho: &PeriodicField<T>,
    g: &MetricField<T>,
    h: &MetricField<T>,
    basis: &NashBasis<T>,
    params: &AbsorptionParams<T>,
) -> Result<AbsorptionOutput<T>> {
    let n = u.dim();
    let m = u.codim_space();
    if n % 2 != 0 || m < 2 * n {
        return Err(Error::StepPrecondition(format!("absorption needs even n and m ≥ 2n, got n = {n}, m = {m}")));
    }
    if params.kappa <= T::one() {
        return Err(Error::StepPrecondition("absorption needs κ > 1".into()));
    }
    let n0 = n / 2;
    let res = u.resolution();
    let nodes = u.values.nodes();
    let tau = params.tau();
    let lt = params.lambda.powf(tau);
    let inv_e_scale = params.lambda.powf(T::one() - tau);
    let eps_half = params.c_cutoff * params.delta.sqrt() * inv_e_scale;

    // spiral directions: first n/2 basis vectors, integer frequencies
    let mut freq = Vec::with_capacity(n0);
    let mut nu = Vec::with_capacity(n0);
    for k in 0..n0 {
        let len = basis.lattice_length(k);
        let f = (lt / len).round().max(T::one());
        freq.push(f);
        nu.push(f * len);
    }
    let jt = mollify(&u.jacobian, T::one() / lt)?;
    let (frame, _) = normal_frame(&jt, m)?;
    let q = m - n;
    let gframe = gradient(&frame.field, DiffScheme::Spectral)?;

    // A_k, B_k, D_k per node are recomputed on demand; Λ and Θ are stored.
    let spiral = |node: usize, k: usize, x: &[T]| {
        let w = &basis.lattice[k];
        let phase = freq[k] * x.iter().zip(w).fold(T::zero(), |acc, (&xi, &wi)| acc + xi * T::lit(wi as f64));
        let (s, c) = phase.sin_cos();
        let fr = frame.field.at(node);
        let gf = gframe.at(node);
        let xi = &basis.vectors[k];
        let (zc, ec) = (2 * k, 2 * k + 1);
        let zeta: Vec<T> = (0..m).map(|i| fr[i * q + zc]).collect();
        let eta: Vec<T> = (0..m).map(|i| fr[i * q + ec]).collect();
        let a = &outer(&zeta, xi).scale(c) - &outer(&eta, xi).scale(s);
        let b = Mat::from_fn(m, n, |i, j| s * gf[(i * q + zc) * n + j] + c * gf[(i * q + ec) * n + j]);
        let d: Vec<T> = (0..m).map(|i| s * zeta[i] + c * eta[i]).collect();
        (a, b, d)
    };

    let mut lam = vec![MetricField::zeros(n, res)?; n0];
    let mut lam_psi = vec![MetricField::zeros(n, res)?; n0];
    let mut theta = vec![vec![MetricField::zeros(n, res)?; n0]; n0];
    let mut x = vec![T::zero(); n];
    let mut lambda_sup = T::zero();
    let mut theta_sup = T::zero();
    for node in 0..nodes {
        u.values.coords_into(node, &mut x);
        let j = u.jac_at(node);
        let parts: Vec<_> = (0..n0).map(|k| spiral(node, k, &x)).collect();
        let psi = cutoff_psi(rho.at(node)[0], eps_half);
        for k in 0..n0 {
            let (a, b, _) = &parts[k];
            let jt_ = j.transpose();
            let l = &sym2(&(&jt_ * a)) + &sym2(&(&jt_ * b)).scale(T::one() / nu[k]);
            lambda_sup = lambda_sup.max(l.op_norm());
            lam_psi[k].set(node, &l.scale(psi));
            lam[k].set(node, &l);
            for ll in 0..n0 {
                let (ak, bk, _) = &parts[k];
                let bl = &parts[ll].1;
                let t = &sym2(&(&ak.transpose() * bl)).scale(T::one() / nu[ll])
                    + &(&bk.transpose() * bl).sym_part().scale(T::one() / (nu[k] * nu[ll]));
                theta_sup = theta_sup.max(t.op_norm());
                theta[k][ll].set(node, &t);
            }
        }
    }
    let p = g.add(h)?;
    let dec = perturbed_decompose(&p, &lam_psi, &theta, basis, &params.picard)?;
    let b: Vec<PeriodicField<T>> = dec.amplitudes.iter().map(|a| a.mul_scalar_field(rho)).collect::<Result<_>>()?;
    let ell_b = params.lambda.powf(T::one() - tau * T::lit(2.0));
    let bt: Vec<PeriodicField<T>> = b.iter().map(|f| mollify(f, ell_b)).collect::<Result<_>>()?;
    let gbt: Vec<PeriodicField<T>> =
        bt[..n0].iter().map(|f| gradient(f, DiffScheme::Spectral)).collect::<Result<_>>()?;

    let mut v_data = u.values.data().to_vec();
    let mut jv_data = u.jacobian.data().to_vec();
    let mut e1 = MetricField::zeros(n, res)?;
    let mut e2 = MetricField::zeros(n, res)?;
    let mut expected = MetricField::zeros(n, res)?;
    let mut target = MetricField::zeros(n, res)?;
    for node in 0..nodes {
        u.values.coords_into(node, &mut x);
        let j = u.jac_at(node);
        let jt_ = j.transpose();
        let parts: Vec<_> = (0..n0).map(|k| spiral(node, k, &x)).collect();
        let r = rho.at(node)[0];
        let psi = cutoff_psi(r, eps_half);
        let bv: Vec<T> = b.iter().map(|f| f.at(node)[0]).collect();
        let btv: Vec<T> = bt.iter().map(|f| f.at(node)[0]).collect();
        let mut m1 = Mat::zeros(n, n);
        let mut m2 = Mat::zeros(n, n);
        let mut absorbed = Mat::zeros(n, n);
        for k in 0..n0 {
            let (a, bk, d) = &parts[k];
            let gb = gbt[k].at(node);
            for i in 0..m {
                v_data[node * m + i] = v_data[node * m + i] + btv[k] * d[i] / nu[k];
                for jj in 0..n {
                    let idx = node * m * n + i * n + jj;
                    jv_data[idx] = jv_data[idx] + btv[k] * a[(i, jj)] + (btv[k] * bk[(i, jj)] + d[i] * gb[jj]) / nu[k];
                }
            }
            let xx = outer(&basis.vectors[k], &basis.vectors[k]);
            let lk = lam[k].get(node);
            m1 = &m1 + &xx.scale(btv[k] * btv[k] - bv[k] * bv[k]);
            m1 = &m1 + &lk.scale(btv[k] - r * psi * bv[k]);
            absorbed = &absorbed + &xx.scale(bv[k] * bv[k]);
            absorbed = &absorbed + &lk.scale(r * psi * bv[k]);
            let dgb = outer(d, gb);
            m2 = &m2 + &sym2(&(&jt_ * &dgb)).scale(T::one() / nu[k]);
            m2 = &m2 + &outer(gb, gb).scale(T::one() / (nu[k] * nu[k]));
            for l in 0..n0 {
                let tkl = theta[k][l].get(node);
                m1 = &m1 + &tkl.scale(btv[k] * btv[l] - bv[k] * bv[l]);
                absorbed = &absorbed + &tkl.scale(bv[k] * bv[l]);
                let (_, _, dl) = &parts[l];
                let dlg = outer(dl, gbt[l].at(node));
                m2 = &m2 + &sym2(&(&bk.transpose() * &dlg)).scale(btv[k] / (nu[k] * nu[l]));
            }
        }
        e1.set(node, &m1);
        e2.set(node, &m2);
        expected.set(node, &(&absorbed + &(&m1 + &m2)));
        let mut tgt = p.get(node).scale(r * r);
        for i in n0..basis.len() {
            tgt = &tgt - &outer(&basis.vectors[i], &basis.vectors[i]).scale(bv[i] * bv[i]);
        }
        target.set(node, &tgt);
    }
    let u1 = Embedding::new(PeriodicField::new(n, m, res, v_data)?, PeriodicField::new(n, m * n, res, jv_data)?)?;
    let inc = u1.metric()?.sub(&u.metric()?)?;
    let norm1 = |f: &MetricField<T>| -> Result<(f64, f64)> {
        let s0 = f.sup_norm();
        Ok((s0.as_f64(), (s0 + gradient(f.field(), DiffScheme::Spectral)?.sup_norm()).as_f64()))
    };
    let (e1_0, e1_1) = norm1(&e1)?;
    let (e2_0, e2_1) = norm1(&e2)?;
    let report = AbsorptionReport {
        lambda: params.lambda.as_f64(),
        tau: tau.as_f64(),
        eps_half: eps_half.as_f64(),
        spiral_frequencies: nu.iter().map(|v| v.as_f64()).collect(),
        picard_iterations: dec.iterations,
        decomposition_residual: dec.residual.as_f64(),
        lambda_sup: lambda_sup.as_f64(),
        theta_sup: theta_sup.as_f64(),
        e1_0,
        e1_1,
        e2_0,
        e2_1,
        expansion_residual: inc.sub(&expected)?.sup_norm().as_f64(),
        defect0: inc.sub(&target)?.sup_norm().as_f64(),
    };
    let remaining = (n0..basis.len())
        .map(|i| {
            let len = basis.lattice_length(i);
            let w = basis.lattice[i].iter().map(|&v| T::lit(v as f64)).collect();
            (bt[i].scale(T::one() / len), Phase::linear(w))
        })
        .collect();
    Ok(AbsorptionOutput { u1, remaining, b, report })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decompose::{balanced_center, nash_basis};
    use crate::grid::chart_stub;

    fn stub(n: usize, res: usize, lambda: f64) -> AbsorptionOutput<f64> {
        let u = chart_stub::<f64>(n, res, 0.02, 1).unwrap();
        let delta: f64 = 0.01;
        let rho = PeriodicField::constant(n, res, &[delta.sqrt()]).unwrap();
        let c = balanced_center::<f64>(n);
        let basis = nash_basis(n, &c).unwrap();
        let g = MetricField::constant(n, res, &c).unwrap();
        let h = MetricField::zeros(n, res).unwrap();
        apply_absorption_step(&u, &rho, &g, &h, &basis, &AbsorptionParams::new(lambda, 1.2, delta)).unwrap()
    }

    #[test]
    fn psi_is_monotone_and_matches_branches() {
        let e: f64 = 0.1;
        assert_eq!(cutoff_psi(0.05, e), 10.0);
        assert!((cutoff_psi(0.3, e) - 1.0f64 / 0.3).abs() < 1e-15);
        let mut prev = f64::INFINITY;
        for i in 0..400 {
            let v = cutoff_psi(0.05 + i as f64 * 0.0005, e);
            assert!(v <= prev + 1e-15);
            prev = v;
        }
    }

    #[test]
    fn four_dim_stub_identities() {
        let out = stub(4, 16, 3.0);
        let r = &out.report;
        assert!(r.decomposition_residual < 1e-8, "{r:?}");
        assert!(r.expansion_residual < 1e-10, "{r:?}");
        assert_eq!(out.remaining.len(), 8);
    }

    #[test]
    fn two_dim_stub_identities() {
        let out = stub(2, 64, 8.0);
        let r = &out.report;
        assert!(r.decomposition_residual < 1e-10, "{r:?}");
        assert!(r.expansion_residual < 1e-12, "{r:?}");
        assert_eq!(out.remaining.len(), 2);
    }
}
