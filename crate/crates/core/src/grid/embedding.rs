use crate::error::{Error, Result};
use crate::linalg::Mat;
use crate::real::Real;

use super::diff::{gradient, DiffScheme};
use super::field::PeriodicField;
use super::metric::{metric_from_jacobian, MetricField};

/// A map `u: T^n -> R^m` sampled together with its Jacobian.
///
/// Carrying the Jacobian lets constructions that know their derivative in
/// closed form (corrugations) avoid differentiating oscillations on the grid.
#[derive(Clone, Debug, PartialEq)]
pub struct Embedding<T> {
    pub values: PeriodicField<T>,
    /// Component `i * n + j` is `∂_j u^i`.
    pub jacobian: PeriodicField<T>,
}

impl<T: Real> Embedding<T> {
    pub fn new(values: PeriodicField<T>, jacobian: PeriodicField<T>) -> Result<Self> {
        if !values.same_grid(&jacobian) || jacobian.components() != values.components() * values.dim() {
            return Err(Error::Dimension("Jacobian does not match values".into()));
        }
        Ok(Embedding { values, jacobian })
    }

    /// Embedding with a spectrally differentiated Jacobian.
    pub fn from_values(values: PeriodicField<T>) -> Result<Self> {
        let jacobian = gradient(&values, DiffScheme::Spectral)?;
        Ok(Embedding { values, jacobian })
    }

    /// Samples `f(x) -> (u(x), ∇u(x))`, Jacobian row-major `m x n`.
    pub fn from_fn(n: usize, m: usize, res: usize, f: impl Fn(&[T], &mut [T], &mut [T])) -> Result<Self> {
        let mut values = PeriodicField::zeros(n, m, res)?;
        let mut jacobian = PeriodicField::zeros(n, m * n, res)?;
        let mut x = vec![T::zero(); n];
        for node in 0..values.nodes() {
            values.coords_into(node, &mut x);
            let (v, j) = (node * m, node * m * n);
            f(&x, &mut values.data_mut()[v..v + m], &mut jacobian.data_mut()[j..j + m * n]);
        }
        Self::new(PeriodicField::new(n, m, res, values.into_data())?, PeriodicField::new(n, m * n, res, jacobian.into_data())?)
    }

    pub fn dim(&self) -> usize {
        self.values.dim()
    }

    pub fn codim_space(&self) -> usize {
        self.values.components()
    }

    pub fn resolution(&self) -> usize {
        self.values.resolution()
    }

    pub fn jac_at(&self, node: usize) -> Mat<T> {
        Mat::from_rows(self.codim_space(), self.dim(), self.jacobian.at(node))
    }

    pub fn metric(&self) -> Result<MetricField<T>> {
        metric_from_jacobian(&self.jacobian, self.codim_space())
    }

    /// Largest deviation between the carried Jacobian and spectral differentiation of the values.
    pub fn jacobian_consistency(&self) -> Result<T> {
        Ok(gradient(&self.values, DiffScheme::Spectral)?.sub(&self.jacobian)?.max_abs())
    }
}

/// The Clifford-type product torus `x -> ε (cos x_1, sin x_1, ..., cos x_n, sin x_n)` in R^{2n}.
pub fn product_torus<T: Real>(n: usize, res: usize, eps: T) -> Result<Embedding<T>> {
    Embedding::from_fn(n, 2 * n, res, |x: &[T], v: &mut [T], j: &mut [T]| {
        for a in 0..n {
            let (s, c) = x[a].sin_cos();
            v[2 * a] = eps * c;
            v[2 * a + 1] = eps * s;
            j[(2 * a) * n + a] = -eps * s;
            j[(2 * a + 1) * n + a] = eps * c;
        }
    })
}

/// Flat chart `x -> (x, r sin(f x_1), ..., r sin(f x_n))` in R^{2n}. The first `n`
/// coordinates are not periodic, so only the Jacobian is meaningful on the torus.
pub fn chart_stub<T: Real>(n: usize, res: usize, ripple: T, freq: usize) -> Result<Embedding<T>> {
    let f = T::from_usize_lossy(freq);
    Embedding::from_fn(n, 2 * n, res, |x: &[T], v: &mut [T], j: &mut [T]| {
        for a in 0..n {
            v[a] = x[a];
            j[a * n + a] = T::one();
            let (s, c) = (f * x[a]).sin_cos();
            v[n + a] = ripple * s;
            j[(n + a) * n + a] = ripple * f * c;
        }
    })
}

/// Smallest ratio `|u(x) − u(y)| / d_T(x, y)` over pairs of a strided node subset
/// of at most `max_nodes` nodes. Positive means no two sampled nodes collide.
pub fn injectivity_margin<T: Real>(u: &Embedding<T>, max_nodes: usize) -> T {
    let vals = &u.values;
    let nodes = vals.nodes();
    let stride = nodes.div_ceil(max_nodes.max(2)).max(1);
    let picked: Vec<usize> = (0..nodes).step_by(stride).collect();
    let n = vals.dim();
    let mut xs = vec![T::zero(); n];
    let coords: Vec<Vec<T>> = picked
        .iter()
        .map(|&i| {
            vals.coords_into(i, &mut xs);
            xs.clone()
        })
        .collect();
    let period = T::lit(super::field::PERIOD);
    let mut best = T::infinity();
    for a in 0..picked.len() {
        let va = vals.at(picked[a]);
        for b in a + 1..picked.len() {
            let vb = vals.at(picked[b]);
            let dv = va.iter().zip(vb).fold(T::zero(), |acc, (&p, &q)| acc + (p - q) * (p - q)).sqrt();
            let dx = coords[a]
                .iter()
                .zip(&coords[b])
                .fold(T::zero(), |acc, (&p, &q)| {
                    let d = (p - q).abs();
                    let d = d.min(period - d);
                    acc + d * d
                })
                .sqrt();
            best = best.min(dv / dx);
        }
    }
    best
}
