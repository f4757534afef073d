//! One-dimensional corrugation primitives `Γ(s, t) = (Γ₁, Γ₂)`.
//!
//! `∂ₜΓ₁ = √(1+s²) cos(α(s) sin t) − 1`, `∂ₜΓ₂ = √(1+s²) sin(α(s) sin t)`, with
//! `α(s)` the root of `J₀(α) = 1/√(1+s²)` below the first zero of `J₀`. Then
//! `(1 + ∂ₜΓ₁)² + (∂ₜΓ₂)² = 1 + s²` and both components are `2π`-periodic in `t`.

use std::io::Write;

use crate::bessel::{bessel_j1, bessel_j_all, J0_FIRST_ZERO};
use crate::error::{Error, Result};
use crate::quadrature::{gauss_legendre, integrate_with};
use crate::real::Real;

/// Default amplitude cap.
pub const DEFAULT_S_MAX: f64 = 1.0;
pub const TABLE_SAMPLES: usize = 512;
pub const PANELS_PER_PERIOD: usize = 64;
const GL_ORDER: usize = 8;
/// Harmonics kept by the series evaluator; `J_j(α)` is below 1e-17 past this for α < J0_FIRST_ZERO.
const HARMONICS: usize = 26;

/// Value and first derivatives of both primitives at one `(s, t)`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct GammaJet<T> {
    pub g: [T; 2],
    pub dt: [T; 2],
    pub ds: [T; 2],
    pub dsdt: [T; 2],
    pub dtt: [T; 2],
}

/// Tabulated `α(s)` on `[0, s_max]` with quadrature and series evaluators.
#[derive(Clone, Debug)]
pub struct CorrugationProfile<T> {
    s_max: T,
    step: T,
    alpha: Vec<T>,
    dalpha: Vec<T>,
    gl_x: Vec<T>,
    gl_w: Vec<T>,
}

/// `1 − J₀(α)` without cancellation.
fn one_minus_j0<T: Real>(a: T) -> T {
    let q = -(a * a) * T::lit(0.25);
    let mut term = T::one();
    let mut sum = T::zero();
    for m in 1..60 {
        let mf = T::from_usize_lossy(m);
        term = term * q / (mf * mf);
        sum = sum - term;
        if term.abs() <= T::epsilon() * T::lit(1e-2) * sum.abs() {
            break;
        }
    }
    sum
}

/// Solves `J₀(α) = 1/√(1+s²)` directly (safeguarded Newton on `1 − J₀`).
pub fn solve_alpha<T: Real>(s: T) -> T {
    if s == T::zero() {
        return T::zero();
    }
    let root = (T::one() + s * s).sqrt();
    let target = s * s / (root * (T::one() + root));
    let (mut lo, mut hi) = (T::zero(), T::lit(J0_FIRST_ZERO));
    let mut a = (T::lit(2f64.sqrt()) * s).min(T::lit(2.3));
    for _ in 0..200 {
        let f = one_minus_j0(a) - target;
        if f > T::zero() {
            hi = a;
        } else {
            lo = a;
        }
        let d = bessel_j1(a);
        let mut next = a - f / d;
        if !(next > lo && next < hi) || !next.is_finite() {
            next = (lo + hi) * T::lit(0.5);
        }
        let done = (next - a).abs() <= T::epsilon() * T::lit(4.0) * a;
        a = next;
        if done || hi - lo <= T::epsilon() * a {
            break;
        }
    }
    a
}

/// `dα/ds` by implicit differentiation of `J₀(α) = (1+s²)^{-1/2}`.
fn alpha_slope<T: Real>(s: T, a: T) -> T {
    if a < T::lit(1e-6) {
        return T::lit(2f64.sqrt());
    }
    let r = T::one() + s * s;
    s / (r * r.sqrt()) / bessel_j1(a)
}

impl<T: Real> CorrugationProfile<T> {
    pub fn new(s_max: T) -> Result<Self> {
        if !(s_max > T::zero() && s_max.is_finite()) {
            return Err(Error::AmplitudeOutOfRange { s: s_max.as_f64(), s_max: s_max.as_f64() });
        }
        let step = s_max / T::from_usize_lossy(TABLE_SAMPLES - 1);
        let mut alpha = Vec::with_capacity(TABLE_SAMPLES);
        let mut dalpha = Vec::with_capacity(TABLE_SAMPLES);
        for i in 0..TABLE_SAMPLES {
            let s = step * T::from_usize_lossy(i);
            let a = solve_alpha(s);
            alpha.push(a);
            dalpha.push(alpha_slope(s, a));
        }
        let (gl_x, gl_w) = gauss_legendre(GL_ORDER);
        Ok(CorrugationProfile { s_max, step, alpha, dalpha, gl_x, gl_w })
    }

    pub fn s_max(&self) -> T {
        self.s_max
    }

    fn check(&self, s: T) -> Result<()> {
        if !(s >= T::zero() && s <= self.s_max * (T::one() + T::lit(1e-12))) {
            return Err(Error::AmplitudeOutOfRange { s: s.as_f64(), s_max: self.s_max.as_f64() });
        }
        Ok(())
    }

    /// `α(s)` by cubic Hermite interpolation of the table.
    pub fn alpha(&self, s: T) -> Result<T> {
        self.check(s)?;
        Ok(self.alpha_unchecked(s))
    }

    fn alpha_unchecked(&self, s: T) -> T {
        let u = (s / self.step).min(T::from_usize_lossy(TABLE_SAMPLES - 1));
        let i = u.floor().to_usize().unwrap_or(0).min(TABLE_SAMPLES - 2);
        let t = u - T::from_usize_lossy(i);
        let (t2, t3) = (t * t, t * t * t);
        let two = T::lit(2.0);
        let three = T::lit(3.0);
        let h00 = two * t3 - three * t2 + T::one();
        let h10 = t3 - two * t2 + t;
        let h01 = three * t2 - two * t3;
        let h11 = t3 - t2;
        h00 * self.alpha[i] + h10 * self.step * self.dalpha[i] + h01 * self.alpha[i + 1] + h11 * self.step * self.dalpha[i + 1]
    }

    pub fn dalpha_ds(&self, s: T) -> Result<T> {
        self.check(s)?;
        Ok(alpha_slope(s, self.alpha_unchecked(s)))
    }

    /// Measured `max α(s)/s` over the table.
    pub fn alpha_ratio_bound(&self) -> T {
        (1..TABLE_SAMPLES)
            .map(|i| self.alpha[i] / (self.step * T::from_usize_lossy(i)))
            .fold(T::zero(), T::max)
    }

    fn integral(&self, f: impl Fn(T) -> T, t: T) -> T {
        let tau = T::lit(std::f64::consts::TAU);
        let panels = ((t.abs() / tau).as_f64() * PANELS_PER_PERIOD as f64).ceil().max(1.0) as usize;
        integrate_with(&self.gl_x, &self.gl_w, f, T::zero(), t, panels)
    }

    /// Reduces `t` to `[0, 2π]` using periodicity.
    fn reduce(t: T) -> T {
        let tau = T::lit(std::f64::consts::TAU);
        if t >= T::zero() && t <= tau {
            t
        } else {
            t - tau * (t / tau).floor()
        }
    }

    /// `Γ(s, t)` by composite Gauss-Legendre quadrature of `∂ₜΓ`.
    pub fn gamma_eval(&self, s: T, t: T) -> Result<[T; 2]> {
        let a = self.alpha(s)?;
        let r = (T::one() + s * s).sqrt();
        let t = Self::reduce(t);
        let g1 = self.integral(|x| r * (a * x.sin()).cos() - T::one(), t);
        let g2 = self.integral(|x| r * (a * x.sin()).sin(), t);
        Ok([g1, g2])
    }

    /// `(∂ₜΓ, ∂ₛΓ, ∂ₛ∂ₜΓ, ∂ₜ²Γ)`; `∂ₛΓ` integrates the chain-rule derivative of `∂ₜΓ` by quadrature.
    pub fn gamma_partials(&self, s: T, t: T) -> Result<GammaJet<T>> {
        let a = self.alpha(s)?;
        let da = alpha_slope(s, a);
        let r = (T::one() + s * s).sqrt();
        let dr = s / r;
        let t = Self::reduce(t);
        let (sn, cs) = (a * t.sin()).sin_cos();
        let dsdt = |x: T| {
            let (sn, cs) = (a * x.sin()).sin_cos();
            (dr * cs - r * sn * x.sin() * da, dr * sn + r * cs * x.sin() * da)
        };
        let g = self.gamma_eval(s, t)?;
        Ok(GammaJet {
            g,
            dt: [r * cs - T::one(), r * sn],
            ds: [self.integral(|x| dsdt(x).0, t), self.integral(|x| dsdt(x).1, t)],
            dsdt: [dsdt(t).0, dsdt(t).1],
            dtt: [-r * sn * a * t.cos(), r * cs * a * t.cos()],
        })
    }

    /// Same jet from the Jacobi-Anger expansion; used for bulk evaluation on grids.
    pub fn jet(&self, s: T, t: T) -> Result<GammaJet<T>> {
        self.check(s)?;
        Ok(self.jet_unchecked(s, t))
    }

    pub(crate) fn jet_unchecked(&self, s: T, t: T) -> GammaJet<T> {
        let a = self.alpha_unchecked(s);
        let da = alpha_slope(s, a);
        let r = (T::one() + s * s).sqrt();
        let dr = s / r;
        let t = Self::reduce(t);
        let j = bessel_j_all(HARMONICS + 1, a);
        // C = ∫₀ᵗ cos(α sin τ) dτ, S = ∫₀ᵗ sin(α sin τ) dτ and their α-derivatives
        let mut c = j[0] * t;
        let mut dc = -j[1] * t;
        let mut sum_s = T::zero();
        let mut dsum_s = T::zero();
        let (s1, c1) = t.sin_cos();
        let (mut sk, mut ck) = (s1, c1);
        let two = T::lit(2.0);
        for k in 1..=HARMONICS {
            let kf = T::from_usize_lossy(k);
            let dj = (j[k - 1] - j[k + 1]) / two;
            if k % 2 == 0 {
                c = c + two * j[k] * sk / kf;
                dc = dc + two * dj * sk / kf;
            } else {
                sum_s = sum_s + two * j[k] * (T::one() - ck) / kf;
                dsum_s = dsum_s + two * dj * (T::one() - ck) / kf;
            }
            let next_s = sk * c1 + ck * s1;
            ck = ck * c1 - sk * s1;
            sk = next_s;
        }
        let (sn, cs) = (a * s1).sin_cos();
        GammaJet {
            g: [r * c - t, r * sum_s],
            dt: [r * cs - T::one(), r * sn],
            ds: [dr * c + r * da * dc, dr * sum_s + r * da * dsum_s],
            dsdt: [dr * cs - r * sn * s1 * da, dr * sn + r * cs * s1 * da],
            dtt: [-r * sn * a * c1, r * cs * a * c1],
        }
    }

    /// Profile table as CSV rows `(s, α(s))`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "s,alpha")?;
        for (i, a) in self.alpha.iter().enumerate() {
            writeln!(w, "{:.17e},{:.17e}", (self.step * T::from_usize_lossy(i)).as_f64(), a.as_f64())?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bessel::bessel_j0;

    #[test]
    fn alpha_at_one_tenth() {
        let p = CorrugationProfile::<f64>::new(0.4).unwrap();
        let a = p.alpha(0.1).unwrap();
        assert!((a - 0.141).abs() < 1e-3, "{a}");
        assert!((bessel_j0(a) - 1.0 / 1.01f64.sqrt()).abs() < 1e-14);
        assert!(p.alpha_ratio_bound() <= 1.6);
    }

    #[test]
    fn out_of_range_amplitude() {
        let p = CorrugationProfile::<f64>::new(0.4).unwrap();
        assert!(matches!(p.alpha(0.41), Err(Error::AmplitudeOutOfRange { .. })));
        assert!(p.alpha(-0.01).is_err());
        assert!(p.alpha(0.4).unwrap() < J0_FIRST_ZERO);
    }

    #[test]
    fn series_and_quadrature_agree() {
        let p = CorrugationProfile::<f64>::new(1.0).unwrap();
        for &s in &[0.0, 1e-3, 0.2, 0.55, 1.0] {
            for i in 0..13 {
                let t = -1.0 + 0.7 * i as f64;
                let q = p.gamma_partials(s, t).unwrap();
                let f = p.jet(s, t).unwrap();
                for c in 0..2 {
                    assert!((q.g[c] - f.g[c]).abs() < 1e-12, "g s={s} t={t}");
                    assert!((q.ds[c] - f.ds[c]).abs() < 1e-11, "ds s={s} t={t}");
                    assert!((q.dsdt[c] - f.dsdt[c]).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn f32_profile_is_usable() {
        let p = CorrugationProfile::<f32>::new(0.4).unwrap();
        let [g1, g2] = p.gamma_eval(0.3, std::f32::consts::TAU).unwrap();
        assert!(g1.abs() < 1e-4 && g2.abs() < 1e-4);
    }
}
