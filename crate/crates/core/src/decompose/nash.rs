use crate::error::{Error, Result};
use crate::grid::{MetricField, PeriodicField};
use crate::linalg::{nuclear_norm_sym, sym_index, sym_len, Mat};
use crate::real::Real;

/// Values of `L_i` below this are treated as zero.
pub const CLAMP_THRESHOLD: f64 = 1e-14;

/// Rank-one frame `{ξ_i ⊗ ξ_i}` spanning symmetric n x n matrices together with
/// the dual functionals `L_i`, so that `P = Σ L_i(P) ξ_i ⊗ ξ_i`.
///
/// The frame is `e_1, ..., e_n` followed by `(e_i + e_j)/√2` for `i < j` in
/// lexicographic order. Each `ξ_i` is a positive multiple of an integer vector
/// `w_i`, which makes `w_i · x` a well defined phase on the torus.
#[derive(Clone, Debug)]
pub struct NashBasis<T> {
    n: usize,
    pub vectors: Vec<Vec<T>>,
    pub lattice: Vec<Vec<i64>>,
    /// `L_i(P) = ⟨duals[i], P⟩` (Frobenius pairing).
    pub duals: Vec<Mat<T>>,
    pub center: Mat<T>,
    pub l_center: Vec<T>,
    /// Radius (operator norm) around the centre on which `min_i L_i ≥ ½ min_i L_i(center)`.
    pub sigma0: T,
}

/// `Id + (J − Id)/(n+1)`: the flat metric at which every canonical `L_i` equals `2/(n+1)`.
pub fn balanced_center<T: Real>(n: usize) -> Mat<T> {
    let off = T::one() / T::from_usize_lossy(n + 1);
    Mat::from_fn(n, n, |i, j| if i == j { T::one() } else { off })
}

impl<T: Real> NashBasis<T> {
    pub fn new(n: usize, center: &Mat<T>) -> Result<Self> {
        if center.rows != n || center.cols != n {
            return Err(Error::Dimension(format!("centre is {}x{}, expected {n}x{n}", center.rows, center.cols)));
        }
        let mut lattice = Vec::new();
        for i in 0..n {
            let mut w = vec![0i64; n];
            w[i] = 1;
            lattice.push(w);
        }
        for i in 0..n {
            for j in i + 1..n {
                let mut w = vec![0i64; n];
                w[i] = 1;
                w[j] = 1;
                lattice.push(w);
            }
        }
        let vectors: Vec<Vec<T>> = lattice
            .iter()
            .map(|w| {
                let len = T::lit((w.iter().map(|x| x * x).sum::<i64>() as f64).sqrt());
                w.iter().map(|&x| T::lit(x as f64) / len).collect()
            })
            .collect();
        let ns = sym_len(n);
        // column i holds the packed coordinates of ξ_i ⊗ ξ_i
        let frame = Mat::from_fn(ns, ns, |row, col| {
            let (a, b) = unpack_index(n, row);
            vectors[col][a] * vectors[col][b]
        });
        let inv = frame.inverse().ok_or_else(|| Error::Dimension("degenerate rank-one frame".into()))?;
        let duals: Vec<Mat<T>> = (0..ns)
            .map(|i| {
                Mat::from_fn(n, n, |a, b| {
                    let v = inv[(i, sym_index(n, a, b))];
                    if a == b {
                        v
                    } else {
                        v * T::lit(0.5)
                    }
                })
            })
            .collect();
        let mut basis = NashBasis { n, vectors, lattice, duals, center: center.clone(), l_center: vec![], sigma0: T::zero() };
        basis.l_center = basis.functionals(center);
        basis.sigma0 = basis
            .l_center
            .iter()
            .zip(&basis.duals)
            .map(|(&l, d)| (l * T::lit(0.5) / nuclear_norm_sym(d)).max(T::zero()))
            .fold(T::infinity(), T::min);
        Ok(basis)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    /// Euclidean length of the integer direction `w_i` (so `ξ_i = w_i / |w_i|`).
    pub fn lattice_length(&self, i: usize) -> T {
        T::lit((self.lattice[i].iter().map(|x| x * x).sum::<i64>() as f64).sqrt())
    }

    /// `(L_1(P), ..., L_{n*}(P))`.
    pub fn functionals(&self, p: &Mat<T>) -> Vec<T> {
        self.duals
            .iter()
            .map(|d| {
                let mut s = T::zero();
                for a in 0..self.n {
                    for b in 0..self.n {
                        s = s + d[(a, b)] * p[(a, b)];
                    }
                }
                s
            })
            .collect()
    }

    /// `Σ c_i ξ_i ⊗ ξ_i`.
    pub fn assemble(&self, coeffs: &[T]) -> Mat<T> {
        let n = self.n;
        let mut m = Mat::zeros(n, n);
        for (c, xi) in coeffs.iter().zip(&self.vectors) {
            for a in 0..n {
                for b in 0..n {
                    m[(a, b)] = m[(a, b)] + *c * xi[a] * xi[b];
                }
            }
        }
        m
    }

    /// Node-local square-root amplitudes with clamping. Returns `(amplitudes, clamped)`.
    pub fn amplitudes_at(&self, p: &Mat<T>, node: usize) -> Result<(Vec<T>, usize)> {
        let scale = p.max_abs().max(T::one());
        let mut clamped = 0;
        let mut out = Vec::with_capacity(self.len());
        for (i, l) in self.functionals(p).into_iter().enumerate() {
            if l < -T::lit(1e-12) * scale || !l.is_finite() {
                return Err(Error::DecompositionRadius { node, index: i + 1, value: l.as_f64() });
            }
            if l < T::lit(CLAMP_THRESHOLD) {
                if l != T::zero() {
                    clamped += 1;
                }
                out.push(T::zero());
            } else {
                out.push(l.sqrt());
            }
        }
        Ok((out, clamped))
    }
}

/// Inverse of the packed index: row `r` of the packed upper triangle.
fn unpack_index(n: usize, r: usize) -> (usize, usize) {
    for a in 0..n {
        for b in a..n {
            if sym_index(n, a, b) == r {
                return (a, b);
            }
        }
    }
    unreachable!()
}

pub fn nash_basis<T: Real>(n: usize, center: &Mat<T>) -> Result<NashBasis<T>> {
    NashBasis::new(n, center)
}

/// Amplitude fields of a Nash decomposition.
#[derive(Clone, Debug)]
pub struct NashDecomposition<T> {
    pub amplitudes: Vec<PeriodicField<T>>,
    /// Number of node values of `L_i` set to zero because they were below the clamp threshold.
    pub clamped: usize,
    pub min_functional: T,
}

impl<T: Real> NashDecomposition<T> {
    /// `Σ a_i² ξ_i ⊗ ξ_i` as a metric field.
    pub fn reconstruct(&self, basis: &NashBasis<T>) -> Result<MetricField<T>> {
        let first = &self.amplitudes[0];
        let mut out = MetricField::zeros(first.dim(), first.resolution())?;
        for node in 0..first.nodes() {
            let c: Vec<T> = self.amplitudes.iter().map(|a| a.at(node)[0] * a.at(node)[0]).collect();
            out.set(node, &basis.assemble(&c));
        }
        Ok(out)
    }
}

/// `P = Σ a_i² ξ_i ⊗ ξ_i` with `a_i = √(L_i(P))` at every node.
pub fn nash_decompose<T: Real>(p: &MetricField<T>, basis: &NashBasis<T>) -> Result<NashDecomposition<T>> {
    if p.dim() != basis.dim() {
        return Err(Error::Dimension("metric and basis dimensions differ".into()));
    }
    let nodes = p.nodes();
    let mut amps = vec![vec![T::zero(); nodes]; basis.len()];
    let mut clamped = 0;
    let mut min_l = T::infinity();
    for node in 0..nodes {
        let m = p.get(node);
        for &l in &basis.functionals(&m) {
            min_l = min_l.min(l);
        }
        let (a, c) = basis.amplitudes_at(&m, node)?;
        clamped += c;
        for (i, v) in a.into_iter().enumerate() {
            amps[i][node] = v;
        }
    }
    let amplitudes = amps
        .into_iter()
        .map(|d| PeriodicField::new(p.dim(), 1, p.resolution(), d))
        .collect::<Result<_>>()?;
    Ok(NashDecomposition { amplitudes, clamped, min_functional: min_l })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn worked_values_in_two_dimensions() {
        let b = NashBasis::<f64>::new(2, &Mat::identity(2)).unwrap();
        let l = b.functionals(&Mat::identity(2));
        assert!((l[0] - 1.0).abs() < 1e-15 && (l[1] - 1.0).abs() < 1e-15 && l[2].abs() < 1e-15);
        let l = b.functionals(&Mat::from_rows(2, 2, &[1.0, 0.2, 0.2, 1.0]));
        for (x, y) in l.iter().zip([0.8, 0.8, 0.4]) {
            assert!((x - y).abs() < 1e-14);
        }
        let (a, _) = b.amplitudes_at(&Mat::identity(2).scale(2.0), 0).unwrap();
        assert!((a[0] - 2f64.sqrt()).abs() < 1e-15 && a[2] == 0.0);
        assert_eq!(b.sigma0, 0.0);
    }

    #[test]
    fn balanced_center_has_equal_functionals() {
        for n in 2..=5 {
            let c = balanced_center::<f64>(n);
            let b = NashBasis::new(n, &c).unwrap();
            for &l in &b.l_center {
                assert!((l - 2.0 / (n as f64 + 1.0)).abs() < 1e-13);
            }
            assert!(b.sigma0 > 0.0);
        }
    }

    #[test]
    fn negative_functional_names_the_node() {
        let b = NashBasis::<f64>::new(2, &Mat::identity(2)).unwrap();
        let p = MetricField::from_fn(2, 8, |x: &[f64]| Mat::from_rows(2, 2, &[1.0, -0.1 * x[0], -0.1 * x[0], 1.0])).unwrap();
        match nash_decompose(&p, &b) {
            Err(Error::DecompositionRadius { node, index, .. }) => {
                assert_eq!(index, 3);
                assert!(node >= 8);
            }
            other => panic!("unexpected {other:?}"),
        }
    }
}
