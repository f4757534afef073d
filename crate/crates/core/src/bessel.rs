//! Bessel functions of the first kind for the small arguments met by corrugations.

use crate::real::Real;

/// First positive zero of J_0.
pub const J0_FIRST_ZERO: f64 = 2.404_825_557_695_773;

/// `J_0(x), ..., J_kmax(x)` from the power series. Accurate to a few ulps of
/// unity for |x| <= 4, which covers every corrugation amplitude.
pub fn bessel_j_all<T: Real>(kmax: usize, x: T) -> Vec<T> {
    let mut out = vec![T::zero(); kmax + 1];
    if x == T::zero() {
        out[0] = T::one();
        return out;
    }
    let half = x * T::lit(0.5);
    let q = -half * half;
    // leading factor (x/2)^k / k!
    let mut lead = T::one();
    for (k, slot) in out.iter_mut().enumerate() {
        if k > 0 {
            lead = lead * half / T::from_usize_lossy(k);
        }
        let mut term = lead;
        let mut sum = term;
        for m in 1..60 {
            term = term * q / (T::from_usize_lossy(m) * T::from_usize_lossy(m + k));
            sum = sum + term;
            if term.abs() <= T::epsilon() * T::lit(1e-2) * sum.abs().max(T::min_positive_value()) {
                break;
            }
        }
        *slot = sum;
    }
    out
}

pub fn bessel_j0<T: Real>(x: T) -> T {
    bessel_j_all(0, x)[0]
}

pub fn bessel_j1<T: Real>(x: T) -> T {
    bessel_j_all(1, x)[1]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_values() {
        // Abramowitz & Stegun table 9.1
        assert!((bessel_j0(1.0f64) - 0.765_197_686_557_966_6).abs() < 1e-15);
        assert!((bessel_j1(1.0f64) - 0.440_050_585_744_933_5).abs() < 1e-15);
        assert!((bessel_j0(2.0f64) - 0.223_890_779_141_235_7).abs() < 1e-15);
        assert!(bessel_j0(J0_FIRST_ZERO).abs() < 1e-15);
    }

    #[test]
    fn neumann_sum_rule() {
        for &x in &[0.1f64, 0.9, 1.7, 2.4] {
            let j = bessel_j_all(30, x);
            let s = j[0] + 2.0 * (1..16).map(|k| j[2 * k]).sum::<f64>();
            assert!((s - 1.0).abs() < 1e-14);
        }
    }
}
