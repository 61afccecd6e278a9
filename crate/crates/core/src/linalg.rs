//! Small dense vectors and symmetric matrices for ambient dimension <= 4.
//!
//! Everything is stack-allocated and `Copy`; quadrature loops evaluate these
//! at millions of nodes and must not allocate.

use crate::scalar::Scalar;

/// Largest supported ambient dimension.
pub const MAX_DIM: usize = 4;

/// Stack vector of runtime dimension `<= MAX_DIM`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SVec<S> {
    dim: usize,
    a: [S; MAX_DIM],
}

impl<S: Scalar> SVec<S> {
    pub fn zeros(dim: usize) -> Self {
        assert!(dim <= MAX_DIM, "dimension {dim} exceeds MAX_DIM");
        Self { dim, a: [S::zero(); MAX_DIM] }
    }

    pub fn from_slice(v: &[S]) -> Self {
        let mut out = Self::zeros(v.len());
        out.a[..v.len()].copy_from_slice(v);
        out
    }

    pub fn basis(dim: usize, i: usize) -> Self {
        let mut out = Self::zeros(dim);
        out.a[i] = S::one();
        out
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn as_slice(&self) -> &[S] {
        &self.a[..self.dim]
    }

    #[inline]
    pub fn get(&self, i: usize) -> S {
        debug_assert!(i < self.dim);
        self.a[i]
    }

    #[inline]
    pub fn set(&mut self, i: usize, v: S) {
        debug_assert!(i < self.dim);
        self.a[i] = v;
    }

    #[inline]
    pub fn add(&self, o: &Self) -> Self {
        let mut out = *self;
        for i in 0..self.dim {
            out.a[i] += o.a[i];
        }
        out
    }

    #[inline]
    pub fn sub(&self, o: &Self) -> Self {
        let mut out = *self;
        for i in 0..self.dim {
            out.a[i] -= o.a[i];
        }
        out
    }

    #[inline]
    pub fn scale(&self, s: S) -> Self {
        let mut out = *self;
        for i in 0..self.dim {
            out.a[i] *= s;
        }
        out
    }

    /// self + s * o
    #[inline]
    pub fn axpy(&self, s: S, o: &Self) -> Self {
        let mut out = *self;
        for i in 0..self.dim {
            out.a[i] += s * o.a[i];
        }
        out
    }

    #[inline]
    pub fn dot(&self, o: &Self) -> S {
        let mut acc = S::zero();
        for i in 0..self.dim {
            acc += self.a[i] * o.a[i];
        }
        acc
    }

    #[inline]
    pub fn norm_sq(&self) -> S {
        self.dot(self)
    }

    #[inline]
    pub fn norm(&self) -> S {
        self.norm_sq().sqrt()
    }

    pub fn normalized(&self) -> Self {
        let n = self.norm();
        self.scale(S::one() / n)
    }

    pub fn to_f64(&self) -> SVec<f64> {
        let mut out = SVec::<f64>::zeros(self.dim);
        for i in 0..self.dim {
            out.a[i] = self.a[i].to_f64().unwrap();
        }
        out
    }
}

impl<S: Scalar> std::ops::Index<usize> for SVec<S> {
    type Output = S;
    fn index(&self, i: usize) -> &S {
        &self.a[i]
    }
}

/// Stack matrix of runtime dimension `dim x dim`, row major.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SMat<S> {
    dim: usize,
    a: [S; MAX_DIM * MAX_DIM],
}

impl<S: Scalar> SMat<S> {
    pub fn zeros(dim: usize) -> Self {
        assert!(dim <= MAX_DIM);
        Self { dim, a: [S::zero(); MAX_DIM * MAX_DIM] }
    }

    pub fn identity(dim: usize) -> Self {
        let mut out = Self::zeros(dim);
        for i in 0..dim {
            out.a[i * MAX_DIM + i] = S::one();
        }
        out
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> S {
        debug_assert!(i < self.dim && j < self.dim);
        self.a[i * MAX_DIM + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: S) {
        debug_assert!(i < self.dim && j < self.dim);
        self.a[i * MAX_DIM + j] = v;
    }

    #[inline]
    pub fn add_assign(&mut self, o: &Self) {
        for i in 0..self.dim {
            for j in 0..self.dim {
                self.a[i * MAX_DIM + j] += o.a[i * MAX_DIM + j];
            }
        }
    }

    pub fn add(&self, o: &Self) -> Self {
        let mut out = *self;
        out.add_assign(o);
        out
    }

    pub fn sub(&self, o: &Self) -> Self {
        let mut out = *self;
        for i in 0..self.dim {
            for j in 0..self.dim {
                out.a[i * MAX_DIM + j] -= o.a[i * MAX_DIM + j];
            }
        }
        out
    }

    pub fn scale(&self, s: S) -> Self {
        let mut out = *self;
        for i in 0..self.dim {
            for j in 0..self.dim {
                out.a[i * MAX_DIM + j] *= s;
            }
        }
        out
    }

    pub fn matvec(&self, v: &SVec<S>) -> SVec<S> {
        let mut out = SVec::zeros(self.dim);
        for i in 0..self.dim {
            let mut acc = S::zero();
            for j in 0..self.dim {
                acc += self.get(i, j) * v.get(j);
            }
            out.set(i, acc);
        }
        out
    }

    pub fn mul(&self, o: &Self) -> Self {
        let mut out = Self::zeros(self.dim);
        for i in 0..self.dim {
            for j in 0..self.dim {
                let mut acc = S::zero();
                for k in 0..self.dim {
                    acc += self.get(i, k) * o.get(k, j);
                }
                out.set(i, j, acc);
            }
        }
        out
    }

    pub fn transpose(&self) -> Self {
        let mut out = Self::zeros(self.dim);
        for i in 0..self.dim {
            for j in 0..self.dim {
                out.set(j, i, self.get(i, j));
            }
        }
        out
    }

    /// rank-1 update: self += s * v v^T
    pub fn add_outer(&mut self, s: S, v: &SVec<S>) {
        for i in 0..self.dim {
            for j in 0..self.dim {
                self.a[i * MAX_DIM + j] += s * v.get(i) * v.get(j);
            }
        }
    }

    pub fn trace(&self) -> S {
        let mut acc = S::zero();
        for i in 0..self.dim {
            acc += self.get(i, i);
        }
        acc
    }

    pub fn frobenius_norm(&self) -> S {
        let mut acc = S::zero();
        for i in 0..self.dim {
            for j in 0..self.dim {
                let v = self.get(i, j);
                acc += v * v;
            }
        }
        acc.sqrt()
    }

    pub fn max_abs_entry(&self) -> S {
        let mut acc = S::zero();
        for i in 0..self.dim {
            for j in 0..self.dim {
                acc = acc.max(self.get(i, j).abs());
            }
        }
        acc
    }

    /// Operator norm of a symmetric matrix (largest |eigenvalue|).
    pub fn sym_operator_norm(&self) -> S {
        let eig = jacobi_eigh(self);
        let mut out = S::zero();
        for &l in eig.values.as_slice() {
            out = out.max(l.abs());
        }
        out
    }
}

/// Eigendecomposition of a symmetric matrix, eigenvalues descending.
#[derive(Clone, Debug)]
pub struct SymEig<S> {
    pub values: SVec<S>,
    /// Columns are the eigenvectors, same order as `values`.
    pub vectors: SMat<S>,
}

impl<S: Scalar> SymEig<S> {
    pub fn vector(&self, k: usize) -> SVec<S> {
        let n = self.vectors.dim();
        let mut v = SVec::zeros(n);
        for i in 0..n {
            v.set(i, self.vectors.get(i, k));
        }
        v
    }
}

/// Cyclic Jacobi eigensolver for symmetric matrices of dimension <= 4.
///
/// Deterministic sweep order (p < q row major); converges quadratically and
/// preserves symmetry exactly, which is what the energy-tensor analysis needs.
pub fn jacobi_eigh<S: Scalar>(m: &SMat<S>) -> SymEig<S> {
    let n = m.dim();
    let mut a = *m;
    let mut v = SMat::identity(n);
    let tol = S::lit(1e-30);
    let scale = a.frobenius_norm().max(S::one());

    for _sweep in 0..64 {
        let mut off = S::zero();
        for p in 0..n {
            for q in (p + 1)..n {
                off += a.get(p, q) * a.get(p, q);
            }
        }
        if off.sqrt() <= tol * scale {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a.get(p, q);
                if apq == S::zero() {
                    continue;
                }
                let app = a.get(p, p);
                let aqq = a.get(q, q);
                let theta = (aqq - app) / (S::lit(2.0) * apq);
                let t = {
                    let s = if theta >= S::zero() { S::one() } else { -S::one() };
                    s / (theta.abs() + (S::one() + theta * theta).sqrt())
                };
                let c = S::one() / (S::one() + t * t).sqrt();
                let s = t * c;
                // rotate rows/cols p,q
                for k in 0..n {
                    let akp = a.get(k, p);
                    let akq = a.get(k, q);
                    a.set(k, p, c * akp - s * akq);
                    a.set(k, q, s * akp + c * akq);
                }
                for k in 0..n {
                    let apk = a.get(p, k);
                    let aqk = a.get(q, k);
                    a.set(p, k, c * apk - s * aqk);
                    a.set(q, k, s * apk + c * aqk);
                }
                for k in 0..n {
                    let vkp = v.get(k, p);
                    let vkq = v.get(k, q);
                    v.set(k, p, c * vkp - s * vkq);
                    v.set(k, q, s * vkp + c * vkq);
                }
            }
        }
    }

    // sort eigenpairs descending by eigenvalue
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&i, &j| {
        a.get(j, j).partial_cmp(&a.get(i, i)).expect("finite eigenvalues")
    });
    let mut values = SVec::zeros(n);
    let mut vectors = SMat::zeros(n);
    for (k, &i) in idx.iter().enumerate() {
        values.set(k, a.get(i, i));
        // fix a deterministic sign: largest-magnitude component positive
        let mut piv = 0;
        let mut best = S::zero();
        for r in 0..n {
            if v.get(r, i).abs() > best {
                best = v.get(r, i).abs();
                piv = r;
            }
        }
        let sgn = if v.get(piv, i) >= S::zero() { S::one() } else { -S::one() };
        for r in 0..n {
            vectors.set(r, k, sgn * v.get(r, i));
        }
    }
    SymEig { values, vectors }
}
