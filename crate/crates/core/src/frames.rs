//! Orthonormal normal frames along an immersion `T^n -> R^m`.
//!
//! The frame is seeded at node 0 from the normal projector and propagated over
//! a spanning comb of the grid (lines along the last axis first, axis 0 last),
//! re-orthonormalising the projected previous frame at every node. After each
//! line the holonomy `Q` across the periodic seam is removed by right
//! multiplication with `exp(−(i/R) log Q)`, which keeps the frame smooth and periodic.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::PeriodicField;
use crate::linalg::{expm, log_rotation, polar_orthonormalize, sym_eigen, Mat};
use crate::real::Real;

/// Normal frame field: component `i * (m − n) + c` is the `i`-th coordinate of `ζ_c`.
#[derive(Clone, Debug)]
pub struct NormalFrame<T> {
    pub m: usize,
    pub field: PeriodicField<T>,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct FrameReport {
    pub orthonormality: f64,
    pub tangency: f64,
    /// Largest Frobenius jump of the frame between neighbouring nodes.
    pub continuity: f64,
    /// Largest seam rotation angle removed by the holonomy correction.
    pub max_seam_angle: f64,
}

impl<T: Real> NormalFrame<T> {
    pub fn codim(&self) -> usize {
        self.m - self.field.dim()
    }

    pub fn at(&self, node: usize) -> Mat<T> {
        Mat::from_rows(self.m, self.codim(), self.field.at(node))
    }

    /// `ζ_c` as an `m`-component field.
    pub fn column_field(&self, c: usize) -> PeriodicField<T> {
        let q = self.codim();
        self.field.map_nodes(self.m, |_, v, o| {
            for i in 0..self.m {
                o[i] = v[i * q + c];
            }
        })
    }
}

fn normal_projector<T: Real>(j: &Mat<T>, node: usize) -> Result<Mat<T>> {
    let g = j.gram();
    let (ev, _) = sym_eigen(&g);
    let scale = g.max_abs().max(T::one());
    if ev[0] <= T::lit(1e-16) * scale {
        return Err(Error::NotImmersion { node, sigma: ev[0].max(T::zero()).sqrt().as_f64() });
    }
    let gi = g.inverse().ok_or(Error::NotImmersion { node, sigma: 0.0 })?;
    let t = &(j * &gi) * &j.transpose();
    Ok(&Mat::identity(j.rows) - &t)
}

fn seed_frame<T: Real>(p: &Mat<T>, q: usize) -> Mat<T> {
    let m = p.rows;
    let (_, v) = sym_eigen(p);
    let mut f = Mat::zeros(m, q);
    for c in 0..q {
        let mut col = v.column(m - q + c);
        let big = col.iter().copied().fold(T::zero(), |acc, x| if x.abs() > acc.abs() { x } else { acc });
        if big < T::zero() {
            col.iter_mut().for_each(|x| *x = -*x);
        }
        f.set_column(c, &col);
    }
    f
}

/// Transports `f` to the normal space with projector `p`.
fn transport<T: Real>(p: &Mat<T>, f: &Mat<T>) -> Option<Mat<T>> {
    polar_orthonormalize(&(p * f))
}

pub fn normal_frame<T: Real>(jacobian: &PeriodicField<T>, m: usize) -> Result<(NormalFrame<T>, FrameReport)> {
    let n = jacobian.dim();
    if jacobian.components() != m * n || m <= n {
        return Err(Error::Dimension(format!("Jacobian with {} components for m = {m}", jacobian.components())));
    }
    let q = m - n;
    let res = jacobian.resolution();
    let nodes = jacobian.nodes();
    let mut field = PeriodicField::zeros(n, m * q, res)?;
    let jac_at = |node: usize| Mat::from_rows(m, n, jacobian.at(node));
    let p0 = normal_projector(&jac_at(0), 0)?;
    field.at_mut(0).copy_from_slice(&seed_frame(&p0, q).data);
    let mut max_angle = T::zero();
    for axis in (0..n).rev() {
        let stride = field.axis_stride(axis);
        for start in 0..nodes {
            // a line along `axis` starts at nodes whose coordinates on axes ≤ axis vanish
            let idx = field.multi_index(start);
            if idx[..=axis].iter().any(|&i| i != 0) {
                continue;
            }
            let mut frames = Vec::with_capacity(res);
            frames.push(Mat::from_rows(m, q, field.at(start)));
            for i in 1..res {
                let node = start + i * stride;
                let p = normal_projector(&jac_at(node), node)?;
                let next = transport(&p, &frames[i - 1])
                    .ok_or_else(|| Error::FrameHolonomy(format!("transport degenerates at node {node}")))?;
                frames.push(next);
            }
            let end = transport(&normal_projector(&jac_at(start), start)?, &frames[res - 1])
                .ok_or_else(|| Error::FrameHolonomy(format!("transport degenerates across seam at node {start}")))?;
            let holonomy = &frames[0].transpose() * &end;
            let log = log_rotation(&holonomy).ok_or_else(|| {
                Error::FrameHolonomy(format!("seam rotation at node {start} is not in the identity component"))
            })?;
            max_angle = max_angle.max(log.frobenius() / T::lit(2f64.sqrt()));
            for (i, f) in frames.iter().enumerate().skip(1) {
                let corr = expm(&log.scale(-T::from_usize_lossy(i) / T::from_usize_lossy(res)));
                let node = start + i * stride;
                field.at_mut(node).copy_from_slice(&(f * &corr).data);
            }
        }
    }
    let frame = NormalFrame { m, field };
    let mut report = FrameReport { max_seam_angle: max_angle.as_f64(), ..Default::default() };
    for node in 0..nodes {
        let f = frame.at(node);
        report.orthonormality = report.orthonormality.max((&f.gram() - &Mat::identity(q)).max_abs().as_f64());
        report.tangency = report.tangency.max((&jac_at(node).transpose() * &f).max_abs().as_f64());
        for axis in 0..n {
            let nb = frame.at(frame.field.neighbor(node, axis, 1));
            report.continuity = report.continuity.max((&nb - &f).frobenius().as_f64());
        }
    }
    Ok((frame, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::product_torus;

    #[test]
    fn flat_stub_gives_trailing_axes() {
        let jac = PeriodicField::<f64>::constant(2, 8, &[1.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0]).unwrap();
        let (f, r) = normal_frame(&jac, 4).unwrap();
        for node in 0..64 {
            let m = f.at(node);
            assert!((&m - &Mat::from_rows(4, 2, &[0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 1.0])).max_abs() < 1e-15);
        }
        assert_eq!(r.max_seam_angle, 0.0);
    }

    #[test]
    fn torus_frame_spans_radial_normals() {
        let u = product_torus::<f64>(2, 32, 0.9).unwrap();
        let (f, r) = normal_frame(&u.jacobian, 4).unwrap();
        assert!(r.orthonormality < 1e-12 && r.tangency < 1e-10);
        for node in 0..u.values.nodes() {
            let x = u.values.coords(node);
            let z = f.at(node);
            let proj = &z * &z.transpose();
            let mut oracle = Mat::zeros(4, 4);
            let n1 = [x[0].cos(), x[0].sin(), 0.0, 0.0];
            let n2 = [0.0, 0.0, x[1].cos(), x[1].sin()];
            for i in 0..4 {
                for j in 0..4 {
                    oracle[(i, j)] = n1[i] * n1[j] + n2[i] * n2[j];
                }
            }
            assert!((&proj - &oracle).max_abs() < 1e-8);
        }
        assert!(r.continuity < 0.5);
    }

    #[test]
    fn rank_deficient_jacobian_is_rejected() {
        let jac = PeriodicField::<f64>::constant(2, 8, &[1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0]).unwrap();
        assert!(matches!(normal_frame(&jac, 4), Err(Error::NotImmersion { node: 0, .. })));
    }
}
