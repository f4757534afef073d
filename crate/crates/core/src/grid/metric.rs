use crate::error::{Error, Result};
use crate::linalg::{pack_sym, sym_eigen, sym_len, unpack_sym, Mat};
use crate::real::Real;

use super::field::PeriodicField;

/// Field of symmetric n x n matrices, packed upper-triangular row-major
/// (`k = n(n+1)/2` components per node).
#[derive(Clone, Debug, PartialEq)]
pub struct MetricField<T> {
    field: PeriodicField<T>,
}

impl<T: Real> MetricField<T> {
    pub fn new(field: PeriodicField<T>) -> Result<Self> {
        let n = field.dim();
        if field.components() != sym_len(n) {
            return Err(Error::Dimension(format!(
                "metric on T^{n} needs {} components, got {}",
                sym_len(n),
                field.components()
            )));
        }
        Ok(MetricField { field })
    }

    pub fn constant(n: usize, res: usize, m: &Mat<T>) -> Result<Self> {
        Self::new(PeriodicField::constant(n, res, &pack_sym(m))?)
    }

    pub fn identity(n: usize, res: usize) -> Result<Self> {
        Self::constant(n, res, &Mat::identity(n))
    }

    pub fn zeros(n: usize, res: usize) -> Result<Self> {
        Self::new(PeriodicField::zeros(n, sym_len(n), res)?)
    }

    pub fn from_fn(n: usize, res: usize, f: impl Fn(&[T]) -> Mat<T>) -> Result<Self> {
        Self::new(PeriodicField::from_fn(n, sym_len(n), res, |x, o| o.copy_from_slice(&pack_sym(&f(x))))?)
    }

    pub fn field(&self) -> &PeriodicField<T> {
        &self.field
    }

    pub fn into_field(self) -> PeriodicField<T> {
        self.field
    }

    pub fn dim(&self) -> usize {
        self.field.dim()
    }

    pub fn resolution(&self) -> usize {
        self.field.resolution()
    }

    pub fn nodes(&self) -> usize {
        self.field.nodes()
    }

    pub fn get(&self, node: usize) -> Mat<T> {
        unpack_sym(self.dim(), self.field.at(node))
    }

    pub fn set(&mut self, node: usize, m: &Mat<T>) {
        self.field.at_mut(node).copy_from_slice(&pack_sym(m));
    }

    pub fn add(&self, o: &Self) -> Result<Self> {
        Ok(MetricField { field: self.field.add(&o.field)? })
    }

    pub fn sub(&self, o: &Self) -> Result<Self> {
        Ok(MetricField { field: self.field.sub(&o.field)? })
    }

    pub fn scale(&self, s: T) -> Self {
        MetricField { field: self.field.scale(s) }
    }

    /// Node-wise product with a scalar field.
    pub fn scale_by(&self, s: &PeriodicField<T>) -> Result<Self> {
        Ok(MetricField { field: self.field.mul_scalar_field(s)? })
    }

    /// `sup_x |P(x)|` in the operator norm.
    pub fn sup_norm(&self) -> T {
        (0..self.nodes()).map(|i| self.get(i).op_norm()).fold(T::zero(), T::max)
    }

    /// Smallest and largest eigenvalue over the grid with the nodes where they occur.
    pub fn eigen_range(&self) -> ((T, usize), (T, usize)) {
        let mut lo = (T::infinity(), 0);
        let mut hi = (T::neg_infinity(), 0);
        for node in 0..self.nodes() {
            let (ev, _) = sym_eigen(&self.get(node));
            if ev[0] < lo.0 {
                lo = (ev[0], node);
            }
            if ev[ev.len() - 1] > hi.0 {
                hi = (ev[ev.len() - 1], node);
            }
        }
        (lo, hi)
    }

    /// Checks `γ^{-1} Id ≤ P ≤ γ Id` at every node.
    pub fn check_elliptic(&self, gamma: T) -> Result<()> {
        let ((lo, ln), (hi, hn)) = self.eigen_range();
        if lo < T::one() / gamma {
            return Err(Error::NotElliptic { node: ln, eigenvalue: lo.as_f64() });
        }
        if hi > gamma {
            return Err(Error::NotElliptic { node: hn, eigenvalue: hi.as_f64() });
        }
        Ok(())
    }
}

/// Pull-back metric `∇uᵀ∇u` from a Jacobian field with `m * n` components
/// (component `i * n + j` is `∂_j u^i`).
pub fn metric_from_jacobian<T: Real>(jac: &PeriodicField<T>, m: usize) -> Result<MetricField<T>> {
    let n = jac.dim();
    if jac.components() != m * n {
        return Err(Error::Dimension(format!("Jacobian with {} components for m = {m}", jac.components())));
    }
    MetricField::new(jac.map_nodes(sym_len(n), |_, j, out| {
        let mut idx = 0;
        for a in 0..n {
            for b in a..n {
                let mut s = T::zero();
                for i in 0..m {
                    s = s + j[i * n + a] * j[i * n + b];
                }
                out[idx] = s;
                idx += 1;
            }
        }
    }))
}
