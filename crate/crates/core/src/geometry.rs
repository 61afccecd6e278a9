//! Subspaces, projectors, Grassmannian distance and the cylindrical frame
//! around an affine codimension-2 plane.

use crate::linalg::{jacobi_eigh, SMat, SVec};
use crate::scalar::Scalar;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("degenerate span: smallest singular value {0} below threshold")]
    DegenerateSpan(f64),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("point lies on the axis (|pi_perp(y-x)| = {0})")]
    OnAxis(f64),
}

/// A k-dimensional linear subspace of R^m with an orthonormal basis, its
/// projector, and a stored orthonormal basis of the complement (the
/// complement basis fixes the orientation used by the polar frame).
#[derive(Clone, Debug)]
pub struct Plane<S> {
    ambient: usize,
    basis: Vec<SVec<S>>,
    perp_basis: Vec<SVec<S>>,
    projector: SMat<S>,
}

const INDEPENDENCE_TOL: f64 = 1e-10;

/// Modified Gram-Schmidt with a re-orthogonalization pass.
fn orthonormalize<S: Scalar>(vectors: &[SVec<S>]) -> Vec<SVec<S>> {
    let mut basis: Vec<SVec<S>> = Vec::with_capacity(vectors.len());
    for v in vectors {
        let mut w = *v;
        for _ in 0..2 {
            for b in &basis {
                let c = w.dot(b);
                w = w.axpy(-c, b);
            }
        }
        basis.push(w.normalized());
    }
    basis
}

/// Deterministic orthonormal completion of `basis` to all of R^m, built by
/// Gram-Schmidt over the canonical axes in order.
fn complete_basis<S: Scalar>(ambient: usize, basis: &[SVec<S>]) -> Vec<SVec<S>> {
    let mut full: Vec<SVec<S>> = basis.to_vec();
    let mut extra = Vec::new();
    for i in 0..ambient {
        if full.len() == ambient {
            break;
        }
        let mut w = SVec::basis(ambient, i);
        for _ in 0..2 {
            for b in &full {
                let c = w.dot(b);
                w = w.axpy(-c, b);
            }
        }
        if w.norm().to_f64().unwrap() > 1e-6 {
            let u = w.normalized();
            full.push(u);
            extra.push(u);
        }
    }
    extra
}

impl<S: Scalar> Plane<S> {
    /// Orthonormalize `vectors` into a Plane spanning the same subspace.
    pub fn new(ambient: usize, vectors: &[SVec<S>]) -> Result<Self, GeometryError> {
        for v in vectors {
            if v.dim() != ambient {
                return Err(GeometryError::DimensionMismatch(format!(
                    "vector of dim {} in ambient {ambient}",
                    v.dim()
                )));
            }
        }
        if !vectors.is_empty() {
            // smallest singular value via the Gram matrix
            let k = vectors.len();
            let mut gram = SMat::zeros(k);
            for i in 0..k {
                for j in 0..k {
                    gram.set(i, j, vectors[i].dot(&vectors[j]));
                }
            }
            let eig = jacobi_eigh(&gram);
            let lmin = eig.values.get(k - 1).max(S::zero());
            let smin = lmin.sqrt().to_f64().unwrap();
            if smin <= INDEPENDENCE_TOL {
                return Err(GeometryError::DegenerateSpan(smin));
            }
        }
        let basis = orthonormalize(vectors);
        let perp_basis = complete_basis(ambient, &basis);
        let mut projector = SMat::zeros(ambient);
        for b in &basis {
            projector.add_outer(S::one(), b);
        }
        Ok(Self { ambient, basis, perp_basis, projector })
    }

    /// The trivial 0-dimensional subspace of R^m.
    pub fn trivial(ambient: usize) -> Self {
        Self::new(ambient, &[]).expect("trivial plane")
    }

    /// Span of a subset of canonical axes.
    pub fn coordinate(ambient: usize, axes: &[usize]) -> Self {
        let vs: Vec<SVec<S>> = axes.iter().map(|&i| SVec::basis(ambient, i)).collect();
        Self::new(ambient, &vs).expect("canonical axes independent")
    }

    pub fn dim_ambient(&self) -> usize {
        self.ambient
    }

    pub fn dim_plane(&self) -> usize {
        self.basis.len()
    }

    pub fn codim(&self) -> usize {
        self.ambient - self.basis.len()
    }

    pub fn basis(&self) -> &[SVec<S>] {
        &self.basis
    }

    pub fn perp_basis(&self) -> &[SVec<S>] {
        &self.perp_basis
    }

    pub fn projector(&self) -> &SMat<S> {
        &self.projector
    }

    pub fn project(&self, v: &SVec<S>) -> SVec<S> {
        self.projector.matvec(v)
    }

    pub fn project_perp(&self, v: &SVec<S>) -> SVec<S> {
        v.sub(&self.project(v))
    }

    /// The orthogonal complement as a Plane (orientation basis preserved).
    pub fn orthogonal(&self) -> Self {
        Plane::new(self.ambient, &self.perp_basis).expect("complement basis orthonormal")
    }
}

/// Grassmannian distance: operator norm of the projector difference.
pub fn grassmann_distance<S: Scalar>(v: &Plane<S>, w: &Plane<S>) -> Result<S, GeometryError> {
    if v.dim_ambient() != w.dim_ambient() || v.dim_plane() != w.dim_plane() {
        return Err(GeometryError::DimensionMismatch(format!(
            "planes ({},{}) vs ({},{})",
            v.dim_ambient(),
            v.dim_plane(),
            w.dim_ambient(),
            w.dim_plane()
        )));
    }
    Ok(v.projector().sub(w.projector()).sym_operator_norm())
}

/// Polar data of a point around an affine codimension-2 plane:
/// `y - x = y_l + s_perp * n_perp`, with `{n_perp, alpha_perp}` an oriented
/// orthonormal frame of the complement.
#[derive(Clone, Copy, Debug)]
pub struct PerpFrame<S> {
    pub y_l: SVec<S>,
    pub s_perp: S,
    pub n_perp: SVec<S>,
    pub alpha_perp: SVec<S>,
}

/// A plane anchored at a base point.
#[derive(Clone, Debug)]
pub struct AffinePlane<S> {
    pub plane: Plane<S>,
    pub base: SVec<S>,
}

impl<S: Scalar> AffinePlane<S> {
    pub fn new(plane: Plane<S>, base: SVec<S>) -> Result<Self, GeometryError> {
        if plane.dim_ambient() != base.dim() {
            return Err(GeometryError::DimensionMismatch(format!(
                "base dim {} vs ambient {}",
                base.dim(),
                plane.dim_ambient()
            )));
        }
        Ok(Self { plane, base })
    }

    /// Cylindrical polar frame at `y`; requires codimension 2.
    pub fn perp_polar(&self, y: &SVec<S>) -> Result<PerpFrame<S>, GeometryError> {
        if self.plane.codim() != 2 {
            return Err(GeometryError::DimensionMismatch(format!(
                "perp_polar needs codimension 2, plane has codimension {}",
                self.plane.codim()
            )));
        }
        let d = y.sub(&self.base);
        let y_l = self.plane.project(&d);
        let w = d.sub(&y_l);
        let s = w.norm();
        if s.to_f64().unwrap() <= 1e-14 {
            return Err(GeometryError::OnAxis(s.to_f64().unwrap()));
        }
        let n = w.scale(S::one() / s);
        // coordinates of n in the stored complement basis fix the rotation
        let b = &self.plane.perp_basis();
        let c1 = n.dot(&b[0]);
        let c2 = n.dot(&b[1]);
        let alpha = b[0].scale(-c2).axpy(c1, &b[1]);
        Ok(PerpFrame { y_l, s_perp: s, n_perp: n, alpha_perp: alpha })
    }

    /// Point of the circle through radius `s_perp` over `y_l` at angle `phi`
    /// (measured in the stored complement basis).
    pub fn circle_point(&self, y_l: &SVec<S>, s_perp: S, phi: S) -> SVec<S> {
        let b = self.plane.perp_basis();
        self.base
            .add(y_l)
            .axpy(s_perp * phi.cos(), &b[0])
            .axpy(s_perp * phi.sin(), &b[1])
    }

    /// Unit angular direction at angle `phi`.
    pub fn angular_direction(&self, phi: S) -> SVec<S> {
        let b = self.plane.perp_basis();
        b[0].scale(-phi.sin()).axpy(phi.cos(), &b[1])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    type V = SVec<f64>;

    fn v(s: &[f64]) -> V {
        V::from_slice(s)
    }

    #[test]
    fn canonical_projector() {
        let p = Plane::new(3, &[v(&[1.0, 0.0, 0.0]), v(&[0.0, 1.0, 0.0])]).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let want = if i == j && i < 2 { 1.0 } else { 0.0 };
                assert!((p.projector().get(i, j) - want).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn span_invariance() {
        let p1 = Plane::new(3, &[v(&[1.0, 0.0, 0.0]), v(&[0.0, 1.0, 0.0])]).unwrap();
        let p2 = Plane::new(3, &[v(&[1.0, 0.0, 0.0]), v(&[1.0, 1.0, 0.0])]).unwrap();
        assert!(grassmann_distance(&p1, &p2).unwrap() < 1e-12);
    }

    #[test]
    fn rank_one_projector_entries() {
        let s = 1.0 / 2.0_f64.sqrt();
        let p = Plane::new(3, &[v(&[s, s, 0.0])]).unwrap();
        // vv^T has 1/2 in the (0,0),(0,1),(1,0),(1,1) slots
        for (i, j, want) in [
            (0usize, 0usize, 0.5),
            (0, 1, 0.5),
            (1, 0, 0.5),
            (1, 1, 0.5),
            (2, 2, 0.0),
            (0, 2, 0.0),
        ] {
            assert!((p.projector().get(i, j) - want).abs() < 1e-14);
        }
    }

    #[test]
    fn degenerate_span_rejected() {
        let e = Plane::new(3, &[v(&[1.0, 0.0, 0.0]), v(&[1.0, 1e-12, 0.0])]);
        assert!(matches!(e, Err(GeometryError::DegenerateSpan(_))));
    }

    #[test]
    fn grassmann_examples() {
        let p1: Plane<f64> = Plane::coordinate(4, &[0, 1]);
        let p2: Plane<f64> = Plane::coordinate(4, &[2, 3]);
        assert!((grassmann_distance(&p1, &p2).unwrap() - 1.0).abs() < 1e-12);

        let phi = 0.3_f64;
        let a = Plane::new(2, &[v(&[1.0, 0.0])]).unwrap();
        let b = Plane::new(2, &[v(&[phi.cos(), phi.sin()])]).unwrap();
        assert!((grassmann_distance(&a, &b).unwrap() - phi.sin().abs()).abs() < 1e-12);

        let c: Plane<f64> = Plane::coordinate(3, &[0]);
        let e = grassmann_distance(&c, &p1);
        assert!(matches!(e, Err(GeometryError::DimensionMismatch(_))));
    }

    #[test]
    fn perp_polar_canonical_frame() {
        let ap = AffinePlane::new(Plane::coordinate(3, &[2]), v(&[0.0, 0.0, 0.0])).unwrap();
        let f = ap.perp_polar(&v(&[1.0, 0.0, 5.0])).unwrap();
        assert!((f.s_perp - 1.0).abs() < 1e-14);
        assert!(f.y_l.sub(&v(&[0.0, 0.0, 5.0])).norm() < 1e-14);
        assert!(f.n_perp.sub(&v(&[1.0, 0.0, 0.0])).norm() < 1e-14);
        assert!(f.alpha_perp.sub(&v(&[0.0, 1.0, 0.0])).norm() < 1e-14);

        let g = ap.perp_polar(&v(&[0.0, 2.0, 0.0])).unwrap();
        assert!((g.s_perp - 2.0).abs() < 1e-14);
        assert!(g.n_perp.sub(&v(&[0.0, 1.0, 0.0])).norm() < 1e-14);
        assert!(g.alpha_perp.sub(&v(&[-1.0, 0.0, 0.0])).norm() < 1e-14);

        let e = ap.perp_polar(&v(&[0.0, 0.0, 3.0]));
        assert!(matches!(e, Err(GeometryError::OnAxis(_))));
    }

    #[test]
    fn f32_instantiation() {
        let p1: Plane<f32> = Plane::coordinate(3, &[0]);
        let p2: Plane<f32> =
            Plane::new(3, &[SVec::from_slice(&[0.0f32, 1.0, 0.0])]).unwrap();
        assert!((grassmann_distance(&p1, &p2).unwrap() - 1.0).abs() < 1e-6);
    }
}
