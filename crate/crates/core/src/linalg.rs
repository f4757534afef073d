//! Small dense matrices. Sizes here never exceed 8x8 (the ambient dimension of
//! T^4 in R^8), so plain row-major storage with textbook algorithms is enough.

use std::ops::{Add, Index, IndexMut, Mul, Sub};

use crate::real::Real;

#[derive(Clone, Debug, PartialEq)]
pub struct Mat<T> {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<T>,
}

impl<T: Real> Mat<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat { rows, cols, data: vec![T::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = T::one();
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Mat { rows, cols, data }
    }

    pub fn from_rows(rows: usize, cols: usize, data: &[T]) -> Self {
        assert_eq!(data.len(), rows * cols);
        Mat { rows, cols, data: data.to_vec() }
    }

    pub fn column(&self, j: usize) -> Vec<T> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn set_column(&mut self, j: usize, v: &[T]) {
        for i in 0..self.rows {
            self[(i, j)] = v[i];
        }
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn scale(&self, s: T) -> Self {
        Mat { rows: self.rows, cols: self.cols, data: self.data.iter().map(|&x| x * s).collect() }
    }

    pub fn mul_vec(&self, v: &[T]) -> Vec<T> {
        (0..self.rows)
            .map(|i| (0..self.cols).fold(T::zero(), |acc, j| acc + self[(i, j)] * v[j]))
            .collect()
    }

    /// `A^T A`.
    pub fn gram(&self) -> Self {
        Self::from_fn(self.cols, self.cols, |i, j| {
            (0..self.rows).fold(T::zero(), |acc, r| acc + self[(r, i)] * self[(r, j)])
        })
    }

    pub fn sym_part(&self) -> Self {
        let half = T::lit(0.5);
        Self::from_fn(self.rows, self.cols, |i, j| half * (self[(i, j)] + self[(j, i)]))
    }

    pub fn frobenius(&self) -> T {
        self.data.iter().fold(T::zero(), |acc, &x| acc + x * x).sqrt()
    }

    pub fn max_abs(&self) -> T {
        self.data.iter().fold(T::zero(), |acc, &x| acc.max(x.abs()))
    }

    pub fn trace(&self) -> T {
        (0..self.rows.min(self.cols)).fold(T::zero(), |acc, i| acc + self[(i, i)])
    }

    /// Operator norm. Symmetric input uses the spectral radius directly.
    pub fn op_norm(&self) -> T {
        if self.rows == self.cols && self.is_symmetric(T::epsilon().sqrt()) {
            let (ev, _) = sym_eigen(self);
            ev.iter().fold(T::zero(), |acc, &x| acc.max(x.abs()))
        } else {
            let (ev, _) = sym_eigen(&self.gram());
            ev.iter().fold(T::zero(), |acc, &x| acc.max(x)).max(T::zero()).sqrt()
        }
    }

    pub fn is_symmetric(&self, tol: T) -> bool {
        let scale = self.max_abs().max(T::one());
        (0..self.rows).all(|i| (0..i).all(|j| (self[(i, j)] - self[(j, i)]).abs() <= tol * scale))
    }

    /// Solves `A x = b` by Gaussian elimination with partial pivoting.
    pub fn solve(&self, b: &[T]) -> Option<Vec<T>> {
        let n = self.rows;
        assert_eq!(n, self.cols);
        let mut a = self.clone();
        let mut x = b.to_vec();
        let scale = self.max_abs();
        if scale == T::zero() {
            return None;
        }
        for k in 0..n {
            let p = (k..n).max_by(|&i, &j| a[(i, k)].abs().partial_cmp(&a[(j, k)].abs()).unwrap())?;
            if a[(p, k)].abs() <= scale * T::epsilon() * T::lit(16.0) {
                return None;
            }
            if p != k {
                for j in 0..n {
                    a.data.swap(k * n + j, p * n + j);
                }
                x.swap(k, p);
            }
            for i in (k + 1)..n {
                let f = a[(i, k)] / a[(k, k)];
                if f != T::zero() {
                    for j in k..n {
                        let v = a[(k, j)];
                        a[(i, j)] = a[(i, j)] - f * v;
                    }
                    x[i] = x[i] - f * x[k];
                }
            }
        }
        for k in (0..n).rev() {
            let mut s = x[k];
            for j in (k + 1)..n {
                s = s - a[(k, j)] * x[j];
            }
            x[k] = s / a[(k, k)];
        }
        Some(x)
    }

    pub fn inverse(&self) -> Option<Self> {
        let n = self.rows;
        let mut inv = Self::zeros(n, n);
        for j in 0..n {
            let mut e = vec![T::zero(); n];
            e[j] = T::one();
            inv.set_column(j, &self.solve(&e)?);
        }
        Some(inv)
    }

    pub fn det(&self) -> T {
        let n = self.rows;
        let mut a = self.clone();
        let mut det = T::one();
        for k in 0..n {
            let p = (k..n)
                .max_by(|&i, &j| a[(i, k)].abs().partial_cmp(&a[(j, k)].abs()).unwrap())
                .unwrap();
            if a[(p, k)] == T::zero() {
                return T::zero();
            }
            if p != k {
                for j in 0..n {
                    a.data.swap(k * n + j, p * n + j);
                }
                det = -det;
            }
            det = det * a[(k, k)];
            for i in (k + 1)..n {
                let f = a[(i, k)] / a[(k, k)];
                for j in k..n {
                    let v = a[(k, j)];
                    a[(i, j)] = a[(i, j)] - f * v;
                }
            }
        }
        det
    }
}

impl<T> Index<(usize, usize)> for Mat<T> {
    type Output = T;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &T {
        &self.data[i * self.cols + j]
    }
}

impl<T> IndexMut<(usize, usize)> for Mat<T> {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        &mut self.data[i * self.cols + j]
    }
}

impl<T: Real> Add for &Mat<T> {
    type Output = Mat<T>;
    fn add(self, o: &Mat<T>) -> Mat<T> {
        assert_eq!((self.rows, self.cols), (o.rows, o.cols));
        Mat { rows: self.rows, cols: self.cols, data: self.data.iter().zip(&o.data).map(|(&a, &b)| a + b).collect() }
    }
}

impl<T: Real> Sub for &Mat<T> {
    type Output = Mat<T>;
    fn sub(self, o: &Mat<T>) -> Mat<T> {
        assert_eq!((self.rows, self.cols), (o.rows, o.cols));
        Mat { rows: self.rows, cols: self.cols, data: self.data.iter().zip(&o.data).map(|(&a, &b)| a - b).collect() }
    }
}

impl<T: Real> Mul for &Mat<T> {
    type Output = Mat<T>;
    fn mul(self, o: &Mat<T>) -> Mat<T> {
        assert_eq!(self.cols, o.rows);
        let mut out = Mat::zeros(self.rows, o.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == T::zero() {
                    continue;
                }
                for j in 0..o.cols {
                    out[(i, j)] = out[(i, j)] + a * o[(k, j)];
                }
            }
        }
        out
    }
}

/// Eigen-decomposition of a symmetric matrix by cyclic Jacobi rotations.
/// Returns eigenvalues in ascending order and the matching eigenvectors as columns.
pub fn sym_eigen<T: Real>(m: &Mat<T>) -> (Vec<T>, Mat<T>) {
    let n = m.rows;
    let mut a = m.sym_part();
    let mut v = Mat::identity(n);
    let tol = T::epsilon() * T::lit(0.5);
    for _sweep in 0..64 {
        let off = (0..n).fold(T::zero(), |acc, i| {
            (0..n).filter(|&j| j != i).fold(acc, |acc, j| acc + a[(i, j)] * a[(i, j)])
        });
        let diag = (0..n).fold(T::zero(), |acc, i| acc + a[(i, i)] * a[(i, i)]);
        if off <= tol * tol * diag || off == T::zero() {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                if apq == T::zero() {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (T::lit(2.0) * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + T::one()).sqrt());
                let c = T::one() / (t * t + T::one()).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].partial_cmp(&a[(j, j)]).unwrap());
    let vals = order.iter().map(|&i| a[(i, i)]).collect();
    let vecs = Mat::from_fn(n, n, |r, c| v[(r, order[c])]);
    (vals, vecs)
}

/// Applies `f` to the eigenvalues of a symmetric matrix.
pub fn sym_fn<T: Real>(m: &Mat<T>, f: impl Fn(T) -> T) -> Mat<T> {
    let (ev, v) = sym_eigen(m);
    let n = m.rows;
    Mat::from_fn(n, n, |i, j| (0..n).fold(T::zero(), |acc, k| acc + v[(i, k)] * f(ev[k]) * v[(j, k)]))
}

/// Sum of absolute eigenvalues of a symmetric matrix; the dual of the operator norm
/// under the Frobenius pairing.
pub fn nuclear_norm_sym<T: Real>(m: &Mat<T>) -> T {
    sym_eigen(m).0.iter().fold(T::zero(), |acc, &x| acc + x.abs())
}

/// Matrix exponential by scaling and squaring with a Taylor core.
pub fn expm<T: Real>(a: &Mat<T>) -> Mat<T> {
    let n = a.rows;
    let norm = a.frobenius();
    let mut squarings = 0;
    let mut s = T::one();
    while norm * s > T::lit(0.25) {
        s = s * T::lit(0.5);
        squarings += 1;
    }
    let b = a.scale(s);
    let mut term = Mat::identity(n);
    let mut sum = Mat::identity(n);
    for k in 1..20 {
        term = (&term * &b).scale(T::one() / T::from_usize_lossy(k));
        sum = &sum + &term;
        if term.max_abs() <= T::epsilon() * T::lit(1e-3) {
            break;
        }
    }
    for _ in 0..squarings {
        sum = &sum * &sum;
    }
    sum
}

/// Principal logarithm of a rotation matrix. Returns `None` when the matrix has
/// negative determinant or an eigenvalue at -1, where no real skew logarithm is unique.
pub fn log_rotation<T: Real>(q: &Mat<T>) -> Option<Mat<T>> {
    let n = q.rows;
    if n == 0 {
        return Some(Mat::zeros(0, 0));
    }
    if q.det() <= T::zero() {
        return None;
    }
    if n == 1 {
        return Some(Mat::zeros(1, 1));
    }
    if n == 2 {
        let angle = q[(1, 0)].atan2(q[(0, 0)]);
        return Some(Mat::from_rows(2, 2, &[T::zero(), -angle, angle, T::zero()]));
    }
    // Inverse scaling and squaring: Denman-Beavers square roots until close to I.
    let id = Mat::identity(n);
    let mut a = q.clone();
    let mut roots = 0;
    while (&a - &id).frobenius() > T::lit(0.2) {
        if roots > 40 {
            return None;
        }
        let mut y = a.clone();
        let mut z = Mat::identity(n);
        for _ in 0..60 {
            let yi = y.inverse()?;
            let zi = z.inverse()?;
            let ny = (&y + &zi).scale(T::lit(0.5));
            let nz = (&z + &yi).scale(T::lit(0.5));
            let done = (&ny - &y).frobenius() <= T::epsilon() * T::lit(64.0);
            y = ny;
            z = nz;
            if done {
                break;
            }
        }
        a = y;
        roots += 1;
    }
    // log(A) = 2 atanh(X), X = (A - I)(A + I)^{-1}
    let x = &(&a - &id) * &(&a + &id).inverse()?;
    let x2 = &x * &x;
    let mut term = x.clone();
    let mut sum = x.clone();
    for k in 1..40 {
        term = &term * &x2;
        let add = term.scale(T::one() / T::from_usize_lossy(2 * k + 1));
        sum = &sum + &add;
        if add.max_abs() <= T::epsilon() * T::lit(1e-3) {
            break;
        }
    }
    let log = sum.scale(T::lit(2.0) * T::lit(2f64.powi(roots)));
    // project onto skew matrices to remove rounding drift
    Some(Mat::from_fn(n, n, |i, j| T::lit(0.5) * (log[(i, j)] - log[(j, i)])))
}

/// Orthonormalizes the columns of `m` by the symmetric (Löwdin) procedure,
/// the closest orthonormal frame in Frobenius norm. `None` when rank deficient.
pub fn polar_orthonormalize<T: Real>(m: &Mat<T>) -> Option<Mat<T>> {
    let g = m.gram();
    let (ev, _) = sym_eigen(&g);
    if ev.first().map_or(true, |&e| e <= T::epsilon() * T::lit(1e3) * g.max_abs()) {
        return None;
    }
    let inv_sqrt = sym_fn(&g, |x| T::one() / x.sqrt());
    Some(m * &inv_sqrt)
}

/// Packed index of `(i, j)` in upper-triangular row-major storage of an n x n symmetric matrix.
#[inline]
pub fn sym_index(n: usize, i: usize, j: usize) -> usize {
    let (i, j) = if i <= j { (i, j) } else { (j, i) };
    i * n - i * (i + 1) / 2 + j
}

pub fn sym_len(n: usize) -> usize {
    n * (n + 1) / 2
}

pub fn pack_sym<T: Real>(m: &Mat<T>) -> Vec<T> {
    let n = m.rows;
    let mut out = vec![T::zero(); sym_len(n)];
    for i in 0..n {
        for j in i..n {
            out[sym_index(n, i, j)] = T::lit(0.5) * (m[(i, j)] + m[(j, i)]);
        }
    }
    out
}

pub fn unpack_sym<T: Real>(n: usize, packed: &[T]) -> Mat<T> {
    Mat::from_fn(n, n, |i, j| packed[sym_index(n, i, j)])
}

pub fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |acc, (&x, &y)| acc + x * y)
}

pub fn norm<T: Real>(a: &[T]) -> T {
    dot(a, a).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn jacobi_recovers_known_spectrum() {
        let m = Mat::from_rows(3, 3, &[2.0, 1.0, 0.0, 1.0, 2.0, 1.0, 0.0, 1.0, 2.0]);
        let (ev, v) = sym_eigen(&m);
        let s2 = 2f64.sqrt();
        for (a, b) in ev.iter().zip([2.0 - s2, 2.0, 2.0 + s2]) {
            assert!((a - b).abs() < 1e-13);
        }
        let back = &(&v * &Mat::from_fn(3, 3, |i, j| if i == j { ev[i] } else { 0.0 })) * &v.transpose();
        assert!((&back - &m).max_abs() < 1e-13);
    }

    #[test]
    fn solve_and_inverse_agree() {
        let m: Mat<f64> = Mat::from_rows(3, 3, &[4.0, -2.0, 1.0, 3.0, 6.0, -4.0, 2.0, 1.0, 8.0]);
        let inv = m.inverse().unwrap();
        assert!((&(&m * &inv) - &Mat::identity(3)).max_abs() < 1e-14);
        assert!((m.det() - 263.0).abs() < 1e-11);
    }

    #[test]
    fn log_inverts_exp_on_rotations() {
        let k = Mat::from_rows(3, 3, &[0.0, -0.7, 0.3, 0.7, 0.0, -1.1, -0.3, 1.1, 0.0]);
        let q = expm(&k);
        assert!((&q.gram() - &Mat::identity(3)).max_abs() < 1e-13);
        let l = log_rotation(&q).unwrap();
        assert!((&l - &k).max_abs() < 1e-11);
        let k2 = Mat::from_rows(2, 2, &[0.0, -0.4, 0.4, 0.0]);
        assert!((&log_rotation(&expm(&k2)).unwrap() - &k2).max_abs() < 1e-14);
    }

    #[test]
    fn reflection_has_no_logarithm() {
        let q = Mat::from_rows(2, 2, &[1.0, 0.0, 0.0, -1.0]);
        assert!(log_rotation(&q).is_none());
    }

    #[test]
    fn sym_packing_round_trip() {
        let m = Mat::from_rows(3, 3, &[1.0, 2.0, 3.0, 2.0, 4.0, 5.0, 3.0, 5.0, 6.0]);
        let p = pack_sym(&m);
        assert_eq!(p, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        assert_eq!(unpack_sym(3, &p), m);
    }
}
