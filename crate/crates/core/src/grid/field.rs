use std::f64::consts::TAU;

use crate::error::{Error, Result};
use crate::real::Real;

/// Period of every grid axis.
pub const PERIOD: f64 = TAU;

/// Smallest admissible resolution per axis.
pub const MIN_RESOLUTION: usize = 8;

/// Uniformly sampled `k`-component field on the torus `R^n / 2πZ^n`.
///
/// Samples are stored node-major: node index is row-major over the axes
/// (axis 0 slowest) and the `k` components of a node are contiguous.
#[derive(Clone, Debug, PartialEq)]
pub struct PeriodicField<T> {
    n: usize,
    k: usize,
    res: usize,
    data: Vec<T>,
}

pub(crate) fn check_shape(n: usize, k: usize, res: usize) -> Result<()> {
    if !(2..=4).contains(&n) {
        return Err(Error::InvalidField(format!("dimension {n} outside 2..=4")));
    }
    if k == 0 {
        return Err(Error::InvalidField("zero components".into()));
    }
    if res < MIN_RESOLUTION {
        return Err(Error::InvalidField(format!("resolution {res} below {MIN_RESOLUTION}")));
    }
    Ok(())
}

impl<T: Real> PeriodicField<T> {
    pub fn new(n: usize, k: usize, res: usize, data: Vec<T>) -> Result<Self> {
        check_shape(n, k, res)?;
        let expect = res.pow(n as u32) * k;
        if data.len() != expect {
            return Err(Error::InvalidField(format!("expected {expect} samples, got {}", data.len())));
        }
        if let Some(i) = data.iter().position(|x| !x.is_finite()) {
            return Err(Error::InvalidField(format!("non-finite sample at {i}")));
        }
        Ok(PeriodicField { n, k, res, data })
    }

    pub fn zeros(n: usize, k: usize, res: usize) -> Result<Self> {
        check_shape(n, k, res)?;
        Ok(PeriodicField { n, k, res, data: vec![T::zero(); res.pow(n as u32) * k] })
    }

    /// Samples `f(x, out)` at every node.
    pub fn from_fn(n: usize, k: usize, res: usize, mut f: impl FnMut(&[T], &mut [T])) -> Result<Self> {
        let mut out = Self::zeros(n, k, res)?;
        let mut x = vec![T::zero(); n];
        for node in 0..out.nodes() {
            out.coords_into(node, &mut x);
            let s = node * k;
            f(&x, &mut out.data[s..s + k]);
        }
        if out.data.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidField("non-finite sample".into()));
        }
        Ok(out)
    }

    /// Scalar field from `f(x)`.
    pub fn from_scalar_fn(n: usize, res: usize, f: impl Fn(&[T]) -> T) -> Result<Self> {
        Self::from_fn(n, 1, res, |x, o| o[0] = f(x))
    }

    pub fn constant(n: usize, res: usize, values: &[T]) -> Result<Self> {
        Self::from_fn(n, values.len(), res, |_, o| o.copy_from_slice(values))
    }

    /// Builds a field without validation; callers guarantee the shape.
    pub(crate) fn from_raw(n: usize, k: usize, res: usize, data: Vec<T>) -> Self {
        debug_assert_eq!(data.len(), res.pow(n as u32) * k);
        PeriodicField { n, k, res, data }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn components(&self) -> usize {
        self.k
    }

    pub fn resolution(&self) -> usize {
        self.res
    }

    pub fn nodes(&self) -> usize {
        self.res.pow(self.n as u32)
    }

    pub fn spacing(&self) -> T {
        T::lit(PERIOD) / T::from_usize_lossy(self.res)
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<T> {
        self.data
    }

    #[inline]
    pub fn at(&self, node: usize) -> &[T] {
        &self.data[node * self.k..(node + 1) * self.k]
    }

    #[inline]
    pub fn at_mut(&mut self, node: usize) -> &mut [T] {
        let k = self.k;
        &mut self.data[node * k..(node + 1) * k]
    }

    pub fn multi_index(&self, mut node: usize) -> Vec<usize> {
        let mut idx = vec![0; self.n];
        for a in (0..self.n).rev() {
            idx[a] = node % self.res;
            node /= self.res;
        }
        idx
    }

    pub fn node_index(&self, idx: &[usize]) -> usize {
        idx.iter().fold(0, |acc, &i| acc * self.res + i % self.res)
    }

    pub fn coords_into(&self, mut node: usize, x: &mut [T]) {
        let h = self.spacing();
        for a in (0..self.n).rev() {
            x[a] = h * T::from_usize_lossy(node % self.res);
            node /= self.res;
        }
    }

    pub fn coords(&self, node: usize) -> Vec<T> {
        let mut x = vec![T::zero(); self.n];
        self.coords_into(node, &mut x);
        x
    }

    /// Stride of `axis` in node index units.
    pub fn axis_stride(&self, axis: usize) -> usize {
        self.res.pow((self.n - 1 - axis) as u32)
    }

    /// Node reached from `node` by `delta` steps along `axis`, wrapping periodically.
    #[inline]
    pub fn neighbor(&self, node: usize, axis: usize, delta: isize) -> usize {
        let stride = self.axis_stride(axis);
        let i = (node / stride) % self.res;
        let r = self.res as isize;
        let j = ((i as isize + delta) % r + r) % r;
        node - i * stride + j as usize * stride
    }

    pub fn component(&self, c: usize) -> Self {
        let data = self.data.iter().skip(c).step_by(self.k).copied().collect();
        PeriodicField::from_raw(self.n, 1, self.res, data)
    }

    pub fn set_component(&mut self, c: usize, src: &Self) {
        assert_eq!(src.k, 1);
        for (node, &v) in src.data.iter().enumerate() {
            self.data[node * self.k + c] = v;
        }
    }

    pub fn stack(parts: &[&Self]) -> Result<Self> {
        let first = parts.first().ok_or(Error::EmptyField)?;
        let k: usize = parts.iter().map(|p| p.k).sum();
        for p in parts {
            if p.n != first.n || p.res != first.res {
                return Err(Error::Dimension("stacking fields on different grids".into()));
            }
        }
        let nodes = first.nodes();
        let mut data = Vec::with_capacity(nodes * k);
        for node in 0..nodes {
            for p in parts {
                data.extend_from_slice(p.at(node));
            }
        }
        Ok(PeriodicField::from_raw(first.n, k, first.res, data))
    }

    pub fn same_grid(&self, other: &Self) -> bool {
        self.n == other.n && self.res == other.res
    }

    fn check_same(&self, other: &Self) -> Result<()> {
        if self.n != other.n || self.k != other.k || self.res != other.res {
            return Err(Error::Dimension(format!(
                "fields ({}, {}, {}) and ({}, {}, {})",
                self.n, self.k, self.res, other.n, other.k, other.res
            )));
        }
        Ok(())
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        PeriodicField::from_raw(self.n, self.k, self.res, self.data.iter().map(|&x| f(x)).collect())
    }

    /// Node-wise map to a field with `k_out` components.
    pub fn map_nodes(&self, k_out: usize, mut f: impl FnMut(usize, &[T], &mut [T])) -> Self {
        let mut data = vec![T::zero(); self.nodes() * k_out];
        for node in 0..self.nodes() {
            f(node, self.at(node), &mut data[node * k_out..(node + 1) * k_out]);
        }
        PeriodicField::from_raw(self.n, k_out, self.res, data)
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_same(other)?;
        Ok(self.zip_with(other, |a, b| a + b))
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_same(other)?;
        Ok(self.zip_with(other, |a, b| a - b))
    }

    pub fn scale(&self, s: T) -> Self {
        self.map(|x| x * s)
    }

    /// Node-wise product with a scalar field.
    pub fn mul_scalar_field(&self, s: &Self) -> Result<Self> {
        if s.k != 1 || !self.same_grid(s) {
            return Err(Error::Dimension("scalar multiplier on different grid".into()));
        }
        let k = self.k;
        Ok(self.map_nodes(k, |node, v, o| {
            let w = s.data[node];
            for (oi, &vi) in o.iter_mut().zip(v) {
                *oi = vi * w;
            }
        }))
    }

    fn zip_with(&self, other: &Self, f: impl Fn(T, T) -> T) -> Self {
        let data = self.data.iter().zip(&other.data).map(|(&a, &b)| f(a, b)).collect();
        PeriodicField::from_raw(self.n, self.k, self.res, data)
    }

    /// Maximum over nodes of the Euclidean norm of the component vector.
    pub fn sup_norm(&self) -> T {
        (0..self.nodes())
            .map(|node| self.at(node).iter().fold(T::zero(), |acc, &x| acc + x * x).sqrt())
            .fold(T::zero(), T::max)
    }

    pub fn max_abs(&self) -> T {
        self.data.iter().fold(T::zero(), |acc, &x| acc.max(x.abs()))
    }

    pub fn mean(&self) -> Vec<T> {
        let mut m = vec![T::zero(); self.k];
        for node in 0..self.nodes() {
            for (mi, &v) in m.iter_mut().zip(self.at(node)) {
                *mi = *mi + v;
            }
        }
        let inv = T::one() / T::from_usize_lossy(self.nodes());
        m.iter().map(|&x| x * inv).collect()
    }

    /// Restriction to every `factor`-th node along each axis.
    pub fn downsample(&self, factor: usize) -> Result<Self> {
        if factor == 0 || self.res % factor != 0 {
            return Err(Error::Dimension(format!("cannot downsample {} by {factor}", self.res)));
        }
        let res = self.res / factor;
        check_shape(self.n, self.k, res)?;
        let coarse = PeriodicField::<T>::from_raw(self.n, self.k, res, vec![T::zero(); res.pow(self.n as u32) * self.k]);
        let mut data = Vec::with_capacity(coarse.data.len());
        for node in 0..coarse.nodes() {
            let idx: Vec<usize> = coarse.multi_index(node).iter().map(|i| i * factor).collect();
            data.extend_from_slice(self.at(self.node_index(&idx)));
        }
        Ok(PeriodicField::from_raw(self.n, self.k, res, data))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_shapes_and_values() {
        assert!(PeriodicField::<f64>::zeros(1, 1, 16).is_err());
        assert!(PeriodicField::<f64>::zeros(2, 0, 16).is_err());
        assert!(PeriodicField::<f64>::zeros(2, 1, 4).is_err());
        assert!(PeriodicField::new(2, 1, 8, vec![f64::NAN; 64]).is_err());
        assert!(PeriodicField::new(2, 1, 8, vec![0.0; 63]).is_err());
    }

    #[test]
    fn indexing_round_trips() {
        let f = PeriodicField::<f64>::zeros(3, 2, 8).unwrap();
        for node in [0, 7, 8, 63, 100, 511] {
            assert_eq!(f.node_index(&f.multi_index(node)), node);
        }
        assert_eq!(f.neighbor(0, 2, -1), 7);
        assert_eq!(f.neighbor(0, 0, 1), 64);
        let x = f.coords(64 + 8 + 1);
        let h = f.spacing();
        assert!((x[0] - h).abs() < 1e-15 && (x[1] - h).abs() < 1e-15 && (x[2] - h).abs() < 1e-15);
    }
}
