//! Multi-dimensional FFTs over the node-major grid layout.

use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::real::Real;

use super::field::PeriodicField;

pub struct Spectral<T: Real> {
    n: usize,
    res: usize,
    fwd: Arc<dyn Fft<T>>,
    inv: Arc<dyn Fft<T>>,
}

impl<T: Real> Spectral<T> {
    pub fn new(n: usize, res: usize) -> Self {
        let mut planner = FftPlanner::new();
        Spectral { n, res, fwd: planner.plan_fft_forward(res), inv: planner.plan_fft_inverse(res) }
    }

    pub fn for_field(f: &PeriodicField<T>) -> Self {
        Self::new(f.dim(), f.resolution())
    }

    pub fn len(&self) -> usize {
        self.res.pow(self.n as u32)
    }

    /// Signed wavenumber of FFT bin `j`. The Nyquist bin of an even grid maps to `+res/2`.
    #[inline]
    pub fn wavenumber(&self, j: usize) -> i64 {
        if j <= self.res / 2 {
            j as i64
        } else {
            j as i64 - self.res as i64
        }
    }

    pub fn is_nyquist(&self, j: usize) -> bool {
        self.res % 2 == 0 && j == self.res / 2
    }

    fn transform(&self, data: &mut [Complex<T>], plan: &Arc<dyn Fft<T>>) {
        let res = self.res;
        let mut scratch = vec![Complex::new(T::zero(), T::zero()); plan.get_inplace_scratch_len()];
        // last axis is contiguous
        plan.process_with_scratch(data, &mut scratch);
        let mut line = vec![Complex::new(T::zero(), T::zero()); res];
        for axis in 0..self.n.saturating_sub(1) {
            let stride = res.pow((self.n - 1 - axis) as u32);
            let block = stride * res;
            for base in (0..data.len()).step_by(block) {
                for off in 0..stride {
                    let start = base + off;
                    for (i, slot) in line.iter_mut().enumerate() {
                        *slot = data[start + i * stride];
                    }
                    plan.process_with_scratch(&mut line, &mut scratch);
                    for (i, v) in line.iter().enumerate() {
                        data[start + i * stride] = *v;
                    }
                }
            }
        }
    }

    pub fn forward(&self, data: &mut [Complex<T>]) {
        self.transform(data, &self.fwd);
    }

    /// Inverse transform including the 1/N normalisation.
    pub fn inverse(&self, data: &mut [Complex<T>]) {
        self.transform(data, &self.inv);
        let s = T::one() / T::from_usize_lossy(data.len());
        for v in data.iter_mut() {
            *v = *v * s;
        }
    }

    /// Forward transform of component `c`.
    pub fn forward_component(&self, f: &PeriodicField<T>, c: usize) -> Vec<Complex<T>> {
        let k = f.components();
        let mut buf: Vec<Complex<T>> =
            f.data().iter().skip(c).step_by(k).map(|&x| Complex::new(x, T::zero())).collect();
        self.forward(&mut buf);
        buf
    }

    /// Multi-index of bin `idx` as per-axis bins.
    #[inline]
    pub fn bins(&self, mut idx: usize, out: &mut [usize]) {
        for a in (0..self.n).rev() {
            out[a] = idx % self.res;
            idx /= self.res;
        }
    }

    /// Applies a real or complex multiplier `m(bins)` to every component of `f`.
    pub fn apply_multiplier(
        &self,
        f: &PeriodicField<T>,
        m: impl Fn(&[usize]) -> Complex<T>,
    ) -> PeriodicField<T> {
        let k = f.components();
        let mut out = vec![T::zero(); f.data().len()];
        let mut b = vec![0usize; self.n];
        let table: Vec<Complex<T>> = (0..self.len())
            .map(|i| {
                self.bins(i, &mut b);
                m(&b)
            })
            .collect();
        for c in 0..k {
            let mut buf = self.forward_component(f, c);
            for (v, w) in buf.iter_mut().zip(&table) {
                *v = *v * *w;
            }
            self.inverse(&mut buf);
            for (node, v) in buf.iter().enumerate() {
                out[node * k + c] = v.re;
            }
        }
        PeriodicField::from_raw(f.dim(), k, f.resolution(), out)
    }
}
