//! Convolution with the compactly supported bump `φ_ℓ`, carried out exactly in
//! Fourier space: mode `k` is multiplied by the kernel transform `Π_a φ̂(k_a ℓ)`.

use rustfft::num_complex::Complex;

use crate::error::{Error, Result};
use crate::quadrature::{gauss_legendre, integrate_with};
use crate::real::Real;

use super::field::{PeriodicField, PERIOD};
use super::spectral::Spectral;

/// Unnormalised one-dimensional bump `exp(-1/(1-x²))` on (-1, 1).
pub fn bump<T: Real>(x: T) -> T {
    let r = T::one() - x * x;
    if r <= T::zero() {
        T::zero()
    } else {
        (-T::one() / r).exp()
    }
}

const ORDER: usize = 16;

fn bump_mass<T: Real>(x: &[T], w: &[T]) -> T {
    integrate_with(x, w, bump, -T::one(), T::one(), 32)
}

/// Fourier transform `∫ φ(y) cos(ω y) dy` of the normalised unit bump.
pub fn kernel_transform<T: Real>(omega: T) -> T {
    let (x, w) = gauss_legendre::<T>(ORDER);
    kernel_transform_with(&x, &w, bump_mass(&x, &w), omega)
}

fn kernel_transform_with<T: Real>(x: &[T], w: &[T], mass: T, omega: T) -> T {
    if omega == T::zero() {
        return T::one();
    }
    // panels shorter than a quarter wavelength
    let panels = 32usize.max((omega.abs().as_f64() * 2.0 / std::f64::consts::PI).ceil() as usize * 4);
    integrate_with(x, w, |y| bump(y) * (omega * y).cos(), -T::one(), T::one(), panels) / mass
}

/// Multipliers for bins `0..=res/2` at scale `ell`.
fn multiplier_table<T: Real>(res: usize, ell: T) -> Vec<T> {
    let (x, w) = gauss_legendre::<T>(ORDER);
    let mass = bump_mass(&x, &w);
    (0..=res / 2)
        .map(|k| kernel_transform_with(&x, &w, mass, T::from_usize_lossy(k) * ell))
        .collect()
}

pub fn check_scale<T: Real>(ell: T) -> Result<()> {
    if !(ell > T::zero() && ell < T::lit(PERIOD / 4.0)) {
        return Err(Error::InvalidMollificationScale(ell.as_f64()));
    }
    Ok(())
}

/// `f * φ_ℓ` with the tensorised kernel `φ_ℓ(x) = ℓ^{-n} Π φ(x_a / ℓ)`.
pub fn mollify<T: Real>(f: &PeriodicField<T>, ell: T) -> Result<PeriodicField<T>> {
    check_scale(ell)?;
    let sp = Spectral::for_field(f);
    let table = multiplier_table(f.resolution(), ell);
    let res = f.resolution();
    Ok(sp.apply_multiplier(f, |bins| {
        let m = bins.iter().fold(T::one(), |acc, &b| acc * table[b.min(res - b)]);
        Complex::new(m, T::zero())
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn transform_matches_direct_trapezoid() {
        // independent route: plain trapezoid on a fine uniform mesh
        let m = 200_000;
        let h = 2.0 / m as f64;
        let trap = |g: &dyn Fn(f64) -> f64| (1..m).map(|i| g(-1.0 + i as f64 * h)).sum::<f64>() * h;
        let mass = trap(&|y| bump(y));
        for &om in &[0.5, 3.0, 11.0, 40.0] {
            let direct = trap(&|y| bump(y) * (om * y).cos()) / mass;
            assert!((kernel_transform(om) - direct).abs() < 1e-12, "ω = {om}");
        }
    }

    #[test]
    fn scale_bounds() {
        let f = PeriodicField::<f64>::zeros(2, 1, 16).unwrap();
        assert!(mollify(&f, 0.0).is_err());
        assert!(mollify(&f, PERIOD / 4.0).is_err());
        assert!(mollify(&f, 0.1).is_ok());
    }
}
