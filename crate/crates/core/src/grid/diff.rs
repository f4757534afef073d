//! Partial derivatives on the periodic grid.

use rustfft::num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::real::Real;

use super::field::PeriodicField;
use super::spectral::Spectral;

/// Differentiation scheme. The spectral scheme is exact for trigonometric
/// polynomials below the Nyquist frequency; the central stencils are kept for
/// cross-checks and for fields that are not band limited.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum DiffScheme {
    #[default]
    Spectral,
    Central2,
    Central4,
    Central6,
}

const D1_2: [f64; 1] = [0.5];
const D1_4: [f64; 2] = [2.0 / 3.0, -1.0 / 12.0];
const D1_6: [f64; 3] = [3.0 / 4.0, -3.0 / 20.0, 1.0 / 60.0];
// second derivative: centre weight followed by symmetric weights
const D2_2: [f64; 2] = [-2.0, 1.0];
const D2_4: [f64; 3] = [-5.0 / 2.0, 4.0 / 3.0, -1.0 / 12.0];
const D2_6: [f64; 4] = [-49.0 / 18.0, 3.0 / 2.0, -3.0 / 20.0, 1.0 / 90.0];

impl DiffScheme {
    /// Number of nodes spanned by the stencil along one axis.
    pub fn width(self) -> usize {
        match self {
            DiffScheme::Spectral => 1,
            DiffScheme::Central2 => 3,
            DiffScheme::Central4 => 5,
            DiffScheme::Central6 => 7,
        }
    }
}

fn check_order(order: usize) -> Result<()> {
    if order == 1 || order == 2 {
        Ok(())
    } else {
        Err(Error::InvalidField(format!("derivative order {order} not supported")))
    }
}

/// `∂^order f / ∂x_axis^order` for each component.
pub fn diff<T: Real>(f: &PeriodicField<T>, axis: usize, order: usize, scheme: DiffScheme) -> Result<PeriodicField<T>> {
    check_order(order)?;
    if axis >= f.dim() {
        return Err(Error::Dimension(format!("axis {axis} on a {}-dimensional grid", f.dim())));
    }
    if f.resolution() < scheme.width() {
        return Err(Error::GridTooCoarse { resolution: f.resolution(), width: scheme.width() });
    }
    match scheme {
        DiffScheme::Spectral => {
            let sp = Spectral::for_field(f);
            Ok(sp.apply_multiplier(f, |b| symbol(&sp, b, &[axis; 2][..order])))
        }
        _ => Ok(stencil(f, axis, order, scheme)),
    }
}

/// Fourier symbol of `∂_{axes[0]} ∂_{axes[1]} ...` at the given bins.
fn symbol<T: Real>(sp: &Spectral<T>, bins: &[usize], axes: &[usize]) -> Complex<T> {
    let mut m = Complex::new(T::one(), T::zero());
    let pure_second = axes.len() == 2 && axes[0] == axes[1];
    for &a in axes {
        if sp.is_nyquist(bins[a]) && !pure_second {
            return Complex::new(T::zero(), T::zero());
        }
        let k = T::lit(sp.wavenumber(bins[a]) as f64);
        m = m * Complex::new(T::zero(), k);
    }
    m
}

fn stencil<T: Real>(f: &PeriodicField<T>, axis: usize, order: usize, scheme: DiffScheme) -> PeriodicField<T> {
    let h = f.spacing();
    let (w, centre): (&[f64], Option<f64>) = match (scheme, order) {
        (DiffScheme::Central2, 1) => (&D1_2, None),
        (DiffScheme::Central4, 1) => (&D1_4, None),
        (DiffScheme::Central6, 1) => (&D1_6, None),
        (DiffScheme::Central2, _) => (&D2_2[1..], Some(D2_2[0])),
        (DiffScheme::Central4, _) => (&D2_4[1..], Some(D2_4[0])),
        (DiffScheme::Central6, _) => (&D2_6[1..], Some(D2_6[0])),
        (DiffScheme::Spectral, _) => unreachable!(),
    };
    let scale = if order == 1 { T::one() / h } else { T::one() / (h * h) };
    let weights: Vec<T> = w.iter().map(|&x| T::lit(x)).collect();
    let c0 = centre.map(T::lit);
    let k = f.components();
    f.map_nodes(k, |node, v, out| {
        for c in 0..k {
            let mut acc = c0.map_or(T::zero(), |c0| c0 * v[c]);
            for (s, &wt) in weights.iter().enumerate() {
                let d = s as isize + 1;
                let p = f.at(f.neighbor(node, axis, d))[c];
                let m = f.at(f.neighbor(node, axis, -d))[c];
                acc = acc + if order == 1 { wt * (p - m) } else { wt * (p + m) };
            }
            out[c] = acc * scale;
        }
    })
}

/// Gradient of every component: output component `c * n + j` is `∂_j f_c`.
pub fn gradient<T: Real>(f: &PeriodicField<T>, scheme: DiffScheme) -> Result<PeriodicField<T>> {
    let n = f.dim();
    let k = f.components();
    if f.resolution() < scheme.width() {
        return Err(Error::GridTooCoarse { resolution: f.resolution(), width: scheme.width() });
    }
    let mut out = PeriodicField::zeros(n, k * n, f.resolution())?;
    match scheme {
        DiffScheme::Spectral => {
            let sp = Spectral::for_field(f);
            let mut b = vec![0usize; n];
            for c in 0..k {
                let hat = sp.forward_component(f, c);
                for j in 0..n {
                    let mut buf = hat.clone();
                    for (i, v) in buf.iter_mut().enumerate() {
                        sp.bins(i, &mut b);
                        *v = *v * symbol(&sp, &b, &[j]);
                    }
                    sp.inverse(&mut buf);
                    let data = out.data_mut();
                    for (node, v) in buf.iter().enumerate() {
                        data[node * k * n + c * n + j] = v.re;
                    }
                }
            }
        }
        _ => {
            for j in 0..n {
                let d = stencil(f, j, 1, scheme);
                let data = out.data_mut();
                for node in 0..f.nodes() {
                    for c in 0..k {
                        data[node * k * n + c * n + j] = d.at(node)[c];
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Spectral Hessian of every component: output component `(c * n + i) * n + j`.
pub fn hessian<T: Real>(f: &PeriodicField<T>) -> Result<PeriodicField<T>> {
    let n = f.dim();
    let k = f.components();
    let sp = Spectral::for_field(f);
    let mut out = PeriodicField::zeros(n, k * n * n, f.resolution())?;
    let mut b = vec![0usize; n];
    let kk = k * n * n;
    for c in 0..k {
        let hat = sp.forward_component(f, c);
        for i in 0..n {
            for j in i..n {
                let mut buf = hat.clone();
                for (idx, v) in buf.iter_mut().enumerate() {
                    sp.bins(idx, &mut b);
                    *v = *v * symbol(&sp, &b, &[i, j]);
                }
                sp.inverse(&mut buf);
                let data = out.data_mut();
                for (node, v) in buf.iter().enumerate() {
                    data[node * kk + (c * n + i) * n + j] = v.re;
                    data[node * kk + (c * n + j) * n + i] = v.re;
                }
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn wave(res: usize) -> PeriodicField<f64> {
        PeriodicField::from_scalar_fn(2, res, |x: &[f64]| (3.0 * x[0]).sin()).unwrap()
    }

    #[test]
    fn spectral_first_derivative_matches_closed_form() {
        let f = wave(256);
        let d = diff(&f, 0, 1, DiffScheme::Spectral).unwrap();
        let exact = PeriodicField::from_scalar_fn(2, 256, |x: &[f64]| 3.0 * (3.0 * x[0]).cos()).unwrap();
        assert!(d.sub(&exact).unwrap().max_abs() < 1e-6);
        assert!(diff(&f, 1, 1, DiffScheme::Spectral).unwrap().max_abs() < 1e-12);
    }

    #[test]
    fn stencil_orders_converge_at_expected_rates() {
        for (scheme, p) in [(DiffScheme::Central2, 2.0), (DiffScheme::Central4, 4.0), (DiffScheme::Central6, 6.0)] {
            let err = |res: usize| {
                let f = wave(res);
                let exact = PeriodicField::from_scalar_fn(2, res, |x: &[f64]| -9.0 * (3.0 * x[0]).sin()).unwrap();
                diff(&f, 0, 2, scheme).unwrap().sub(&exact).unwrap().max_abs()
            };
            let rate = (err(32) / err(64)).log2();
            assert!((rate - p).abs() < 0.2, "{scheme:?}: {rate}");
        }
    }

    #[test]
    fn coarse_grid_is_rejected() {
        let f = PeriodicField::<f64>::zeros(2, 1, 8).unwrap();
        assert!(diff(&f, 0, 1, DiffScheme::Central6).is_ok());
        assert!(diff(&f, 0, 3, DiffScheme::Spectral).is_err());
    }

    #[test]
    fn hessian_mixed_partials() {
        let f = PeriodicField::from_scalar_fn(2, 32, |x: &[f64]| (x[0] + 2.0 * x[1]).sin()).unwrap();
        let h = hessian(&f).unwrap();
        for node in 0..f.nodes() {
            let v = -f.at(node)[0];
            let e = h.at(node);
            assert!((e[0] - v).abs() < 1e-12 && (e[1] - 2.0 * v).abs() < 1e-12 && (e[3] - 4.0 * v).abs() < 1e-12);
        }
    }
}
