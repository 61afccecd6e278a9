//! The cutoff heat-kernel mollifier, its restricted variants near a plane,
//! and the bubble-center cutoff used when integrating energies over a graph.

use crate::Plane;
use crate::quad::gauss_legendre;
use crate::scalar::Scalar;
use crate::Real;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum MollifierError {
    #[error("nonpositive scale r = {0}")]
    NonpositiveScale(f64),
    #[error("cutoff parameter too small: R = {0} < 3")]
    CutoffTooSmall(f64),
}

/// Cubic smoothstep on [a, b]: 0 below a, 1 above b.
pub fn smoothstep<S: Scalar>(a: S, b: S, t: S) -> S {
    let x = ((t - a) / (b - a)).max(S::zero()).min(S::one());
    (S::lit(3.0) - S::lit(2.0) * x) * x * x
}

/// Transition profile of the bubble-center cutoff: 1 for t <= 1.1, 0 for
/// t >= 1.9, cubic in between. max|phi'| = 1.875, max|phi''| = 9.375.
pub fn phi_cutoff<S: Scalar>(t: S) -> S {
    S::one() - smoothstep(S::lit(1.1), S::lit(1.9), t)
}

/// Cutoff Gaussian profile: rho(t) = c_m e^{-t} on [0, R], a C^1 Hermite
/// quadratic tail on [R, R+2], zero beyond. `c_m` normalizes the
/// m-dimensional mass of rho(|y|^2/2) to 1.
#[derive(Clone, Debug)]
pub struct HeatMollifier<S> {
    m: usize,
    r_cutoff: S,
    c_m: S,
    radial_nodes: usize,
}

impl<S: Scalar> HeatMollifier<S> {
    pub fn new(m: usize, r_cutoff: S) -> Result<Self, MollifierError> {
        if r_cutoff.to_f64().unwrap() < 3.0 {
            return Err(MollifierError::CutoffTooSmall(r_cutoff.to_f64().unwrap()));
        }
        let radial_nodes = 200;
        let mut mol = Self { m, r_cutoff, c_m: S::one(), radial_nodes };
        // c_m from 1-D radial quadrature of the unnormalized profile:
        // integral over R^m of rho0(|y|^2/2) = sigma_{m-1} int_0^inf rho0(q^2/2) q^{m-1} dq
        let qmax = (S::lit(2.0) * (r_cutoff + S::lit(2.0))).sqrt();
        let gl = gauss_legendre::<S>(radial_nodes);
        let half = qmax / S::lit(2.0);
        let mut acc = S::zero();
        for &(x, w) in gl.iter() {
            let q = half * (x + S::one());
            let t = q * q / S::lit(2.0);
            acc += w * half * mol.profile_unnormalized(t) * q.powi(m as i32 - 1);
        }
        let sigma = sphere_area::<S>(m);
        mol.c_m = S::one() / (sigma * acc);
        Ok(mol)
    }

    /// Default theorem-faithful configuration (R = 20).
    pub fn standard(m: usize) -> Self {
        Self::new(m, S::lit(20.0)).expect("R = 20 valid")
    }

    pub fn dim(&self) -> usize {
        self.m
    }

    pub fn r_cutoff(&self) -> S {
        self.r_cutoff
    }

    pub fn c_m(&self) -> S {
        self.c_m
    }

    pub fn radial_nodes(&self) -> usize {
        self.radial_nodes
    }

    fn profile_unnormalized(&self, t: S) -> S {
        let r = self.r_cutoff;
        if t <= r {
            (-t).exp()
        } else if t <= r + S::lit(2.0) {
            let s = t - r;
            let half = S::lit(0.5);
            (-r).exp() * (S::one() - half * s) * (S::one() - half * s)
        } else {
            S::zero()
        }
    }

    /// rho(t)
    pub fn rho(&self, t: S) -> S {
        self.c_m * self.profile_unnormalized(t)
    }

    /// d rho / dt
    pub fn rho_dot(&self, t: S) -> S {
        let r = self.r_cutoff;
        if t < S::zero() {
            S::zero()
        } else if t <= r {
            -self.c_m * (-t).exp()
        } else if t <= r + S::lit(2.0) {
            let s = t - r;
            -self.c_m * (-r).exp() * (S::one() - S::lit(0.5) * s)
        } else {
            S::zero()
        }
    }

    /// d^2 rho / dt^2
    pub fn rho_ddot(&self, t: S) -> S {
        let r = self.r_cutoff;
        if t < S::zero() {
            S::zero()
        } else if t <= r {
            self.c_m * (-t).exp()
        } else if t <= r + S::lit(2.0) {
            self.c_m * (-r).exp() * S::lit(0.5)
        } else {
            S::zero()
        }
    }

    /// Scaled kernel rho_r(y) = r^{-m} rho(|y|^2 / 2r^2).
    pub fn rho_r(&self, y_norm_sq: S, r: S) -> S {
        let t = y_norm_sq / (S::lit(2.0) * r * r);
        self.rho(t) * r.powi(-(self.m as i32))
    }

    /// Scaled derivative kernel rho_dot_r(y) = r^{-m} rho'(|y|^2 / 2r^2).
    pub fn rho_dot_r(&self, y_norm_sq: S, r: S) -> S {
        let t = y_norm_sq / (S::lit(2.0) * r * r);
        self.rho_dot(t) * r.powi(-(self.m as i32))
    }

    /// Support radius of rho_r: rho_r(y) = 0 for |y| >= r sqrt(2(R+2)).
    pub fn support_radius(&self, r: S) -> S {
        r * (S::lit(2.0) * (self.r_cutoff + S::lit(2.0))).sqrt()
    }

    /// Marginal over a d-dimensional subspace:
    /// M_r(s) = int_{R^d} rho_r(sqrt(|t|^2 + s^2)) dt, computed by 1-D radial
    /// quadrature of the profile. Used by the separable scheme.
    pub fn marginal_rho_r(&self, d: usize, s: S, r: S) -> S {
        self.marginal_kernel(d, s, r, false)
    }

    /// Same marginal for the rho_dot kernel.
    pub fn marginal_rho_dot_r(&self, d: usize, s: S, r: S) -> S {
        self.marginal_kernel(d, s, r, true)
    }

    /// Both marginals in one radial sweep.
    pub fn marginal_pair(&self, d: usize, s: S, r: S) -> (S, S) {
        let two = S::lit(2.0);
        let rm = r.powi(-(self.m as i32));
        let supp2 = two * (self.r_cutoff + two) * r * r;
        let rem = supp2 - s * s;
        if rem <= S::zero() {
            return (S::zero(), S::zero());
        }
        let qmax = rem.sqrt();
        let gl = gauss_legendre::<S>(96);
        let half = qmax / two;
        let mut acc = S::zero();
        let mut acc_dot = S::zero();
        for &(x, w) in gl.iter() {
            let q = half * (x + S::one());
            let t = (q * q + s * s) / (two * r * r);
            let wq = w * half * q.powi(d as i32 - 1);
            acc += wq * self.rho(t);
            acc_dot += wq * self.rho_dot(t);
        }
        let ang = sphere_area::<S>(d) * rm;
        (acc * ang, acc_dot * ang)
    }

    fn marginal_kernel(&self, d: usize, s: S, r: S, dot: bool) -> S {
        let two = S::lit(2.0);
        let rm = r.powi(-(self.m as i32));
        let supp2 = two * (self.r_cutoff + two) * r * r;
        let rem = supp2 - s * s;
        if rem <= S::zero() {
            return S::zero();
        }
        let qmax = rem.sqrt();
        let gl = gauss_legendre::<S>(96);
        let half = qmax / two;
        let mut acc = S::zero();
        for &(x, w) in gl.iter() {
            let q = half * (x + S::one());
            let t = (q * q + s * s) / (two * r * r);
            let prof = if dot { self.rho_dot(t) } else { self.rho(t) };
            acc += w * half * prof * q.powi(d as i32 - 1);
        }
        // d = 1 counts the two half-lines; d = 2 is the circle factor
        acc * sphere_area::<S>(d) * rm
    }

    /// Serializable parameter summary for report headers.
    pub fn spec(&self) -> MollifierSpec {
        MollifierSpec {
            m: self.m,
            r_cutoff: self.r_cutoff.to_f64().unwrap(),
            c_m: self.c_m.to_f64().unwrap(),
            normalization_radial_nodes: self.radial_nodes,
        }
    }
}

fn sphere_area<S: Scalar>(m: usize) -> S {
    // surface area of the unit (m-1)-sphere
    match m {
        1 => S::lit(2.0),
        2 => S::lit(2.0) * S::pi(),
        3 => S::lit(4.0) * S::pi(),
        4 => S::lit(2.0) * S::pi() * S::pi(),
        _ => panic!("unsupported dimension {m}"),
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct MollifierSpec {
    pub m: usize,
    pub r_cutoff: f64,
    pub c_m: f64,
    pub normalization_radial_nodes: usize,
}

/// Heat mollifier restricted near a codimension-2 plane L: the hatted kernel
/// vanishes on a thin tube around L, the tilde kernel has its perpendicular
/// gradient cut off there.
#[derive(Clone, Debug)]
pub struct RestrictedMollifier {
    base: HeatMollifier<Real>,
    plane: Plane,
}

impl RestrictedMollifier {
    pub fn new(base: HeatMollifier<Real>, plane: Plane) -> Self {
        assert_eq!(plane.codim(), 2, "restricted mollifier needs a codimension-2 plane");
        Self { base, plane }
    }

    pub fn base(&self) -> &HeatMollifier<Real> {
        &self.base
    }

    pub fn plane(&self) -> &Plane {
        &self.plane
    }

    /// Transition profile: 0 for t <= 1, 1 for t >= 2.
    pub fn psi_hat(t: Real) -> Real {
        smoothstep(1.0, 2.0, t)
    }

    /// Tube factor of the hatted kernel at perpendicular distance `s_perp`.
    pub fn tube_factor(&self, s_perp: Real, r: Real) -> Real {
        let e2r = (2.0 * self.base.r_cutoff()).exp();
        Self::psi_hat(e2r * s_perp * s_perp / (2.0 * r * r))
    }

    /// rho_hat_r(y; L) for y relative to the plane's base point (pass the
    /// displacement and its perpendicular part's norm).
    pub fn rho_hat_r(&self, y: &crate::Point, r: Real) -> Real {
        let s_perp = self.plane.project_perp(y).norm();
        self.base.rho_r(y.norm_sq(), r) * self.tube_factor(s_perp, r)
    }

    /// rho_tilde_r(y; L) from its radial integral representation:
    /// r^{-m} int_{t_perp}^{inf} psi_hat(e^{2R} tau) rho(tau + t_l) d tau.
    pub fn rho_tilde_r(&self, y: &crate::Point, r: Real) -> Real {
        let two = 2.0;
        let m = self.base.dim() as i32;
        let s_perp = self.plane.project_perp(y).norm();
        let s_l = self.plane.project(y).norm();
        let t_perp = s_perp * s_perp / (two * r * r);
        let t_l = s_l * s_l / (two * r * r);
        let rmax = self.base.r_cutoff() + 2.0;
        if t_perp + t_l >= rmax {
            return 0.0;
        }
        let upper = rmax - t_l;
        let e2r = (2.0 * self.base.r_cutoff()).exp();
        // split at the end of the psi_hat transition (tau = 2 e^{-2R}) and at
        // the exponential-to-tail seam so each panel is smooth
        let mut cuts = vec![t_perp];
        for c in [1.0 / e2r, 2.0 / e2r, self.base.r_cutoff() - t_l] {
            if c > t_perp && c < upper {
                cuts.push(c);
            }
        }
        cuts.push(upper);
        cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let gl = gauss_legendre::<Real>(96);
        let mut acc = 0.0;
        for pair in cuts.windows(2) {
            let half = 0.5 * (pair[1] - pair[0]);
            let mid = 0.5 * (pair[1] + pair[0]);
            for &(x, w) in gl.iter() {
                let tau = mid + half * x;
                acc += w * half * Self::psi_hat(e2r * tau) * self.base.rho(tau + t_l);
            }
        }
        acc * r.powi(-m)
    }
}

/// Bubble-center cutoff psi_T(x, r) = phi(r_x / r) phi(r) phi(|pi_L(x - p)|^2)
/// with phi the cubic transition of [`phi_cutoff`]. The bubble radius r_x is
/// looked up through `radius`, extended off the graph by projection.
pub fn psi_t(
    x: &crate::Point,
    r: Real,
    graph: &crate::bestfit::SubmanifoldGraph,
    radius: &RadiusFn,
    center: &crate::Point,
) -> Real {
    let r_x = radius.eval(graph, x);
    let d = graph.base_plane().plane.project(&x.sub(center)).norm_sq();
    let f1 = if r_x <= 0.0 { 1.0 } else { phi_cutoff(r_x / r) };
    f1 * phi_cutoff(r) * phi_cutoff(d)
}

/// Bubble-scale radius function along the center manifold.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub enum RadiusFn {
    Const(Real),
    /// r_x = factor * |projection of x onto the graph base plane|
    ScaledByAxialDistance { factor: Real },
}

impl RadiusFn {
    pub fn eval(&self, graph: &crate::bestfit::SubmanifoldGraph, x: &crate::Point) -> Real {
        match self {
            RadiusFn::Const(c) => *c,
            RadiusFn::ScaledByAxialDistance { factor } => {
                let base = graph.base_plane();
                factor * base.plane.project(&x.sub(&base.base)).norm()
            }
        }
    }
}
