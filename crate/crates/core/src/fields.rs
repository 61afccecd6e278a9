//! Evaluable map families into S^2 in R^3: the conformal plane bubble, its
//! translation-invariant product, the degree-2 cone family, a bent (non
//! harmonic) test family, grid-backed fields, and residual checks for
//! harmonicity and stationarity.

use crate::quad::{self, QuadratureSpec, Region, Slice2};
use crate::rng::CounterRng;
use crate::{AffinePlane, Matrix, Plane, Point, Real};
use serde::{Deserialize, Serialize};
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum FieldError {
    #[error("evaluation at a singular point ({0:?})")]
    SingularPoint(Vec<Real>),
    #[error("stencil too close to a singular point (distance {dist}, need > {need})")]
    NearSingular { dist: Real, need: Real },
    #[error("vector field support escapes the quadrature region")]
    SupportEscapesDomain,
    #[error("nonpositive scale {0}")]
    NonpositiveScale(Real),
    #[error("quadrature failure: {0}")]
    Quad(#[from] quad::QuadError),
    #[error("grid file: {0}")]
    GridFormat(String),
}

pub type Vec3 = [Real; 3];

#[inline]
pub fn dot3(a: &Vec3, b: &Vec3) -> Real {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[inline]
pub fn norm3_sq(a: &Vec3) -> Real {
    dot3(a, a)
}

/// Jacobian of a map into R^3: `rows[i]` = partial of u along domain axis i.
#[derive(Clone, Copy, Debug)]
pub struct Jac {
    m: usize,
    rows: [Vec3; crate::linalg::MAX_DIM],
}

impl Jac {
    pub fn zeros(m: usize) -> Self {
        Self { m, rows: [[0.0; 3]; crate::linalg::MAX_DIM] }
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.m
    }

    #[inline]
    pub fn row(&self, i: usize) -> &Vec3 {
        &self.rows[i]
    }

    #[inline]
    pub fn set_row(&mut self, i: usize, v: Vec3) {
        self.rows[i] = v;
    }

    /// |grad u|^2 = sum_i |partial_i u|^2.
    #[inline]
    pub fn energy_density(&self) -> Real {
        let mut acc = 0.0;
        for i in 0..self.m {
            acc += norm3_sq(&self.rows[i]);
        }
        acc
    }

    /// Directional derivative grad_v u in R^3.
    #[inline]
    pub fn dir_deriv(&self, v: &Point) -> Vec3 {
        let mut out = [0.0; 3];
        for i in 0..self.m {
            let c = v.get(i);
            out[0] += c * self.rows[i][0];
            out[1] += c * self.rows[i][1];
            out[2] += c * self.rows[i][2];
        }
        out
    }

    /// |pi_L grad u|^2 over an orthonormal basis of L.
    #[inline]
    pub fn plane_energy(&self, basis: &[Point]) -> Real {
        let mut acc = 0.0;
        for b in basis {
            acc += norm3_sq(&self.dir_deriv(b));
        }
        acc
    }
}

/// Where the field's energy concentrates; drives quadrature refinement.
#[derive(Clone, Debug)]
pub enum Concentration {
    None,
    /// Energy inside a tube of the given radius around an affine
    /// (m-2)-plane.
    Tube { axis: AffinePlane, radius: Real },
    /// Isolated concentration points with a common length scale (2-D
    /// fields).
    Points { pts: Vec<Point>, scale: Real },
}

/// Parametric center curve for the bent family: tau(t) = a (sin(w.t + phase),
/// cos(w.t + phase)). The constraint |w| <= 1 keeps |tau|, |tau'|, |tau''|
/// all <= a.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct CurveSpec {
    pub amplitude: Real,
    pub omega: Vec<Real>,
    pub phase: Real,
}

impl CurveSpec {
    pub fn validate(&self) -> Result<(), FieldError> {
        let w2: Real = self.omega.iter().map(|w| w * w).sum();
        if self.amplitude < 0.0 {
            return Err(FieldError::NonpositiveScale(self.amplitude));
        }
        if w2.sqrt() > 1.0 + 1e-12 {
            return Err(FieldError::GridFormat(format!(
                "curve frequency |omega| = {} exceeds 1",
                w2.sqrt()
            )));
        }
        Ok(())
    }

    pub fn eval(&self, t: &[Real]) -> [Real; 2] {
        let arg: Real =
            self.phase + t.iter().zip(&self.omega).map(|(a, b)| a * b).sum::<Real>();
        [self.amplitude * arg.sin(), self.amplitude * arg.cos()]
    }

    /// d tau / d t_j
    pub fn grad(&self, t: &[Real], j: usize) -> [Real; 2] {
        let arg: Real =
            self.phase + t.iter().zip(&self.omega).map(|(a, b)| a * b).sum::<Real>();
        [
            self.amplitude * self.omega[j] * arg.cos(),
            -self.amplitude * self.omega[j] * arg.sin(),
        ]
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FieldMeta {
    pub family: String,
    pub params: serde_json::Value,
    pub center_curve: Option<CurveSpec>,
}

/// An evaluable map u: R^m -> S^2 with its Jacobian.
#[derive(Clone)]
pub struct MapField {
    m: usize,
    eval: Arc<dyn Fn(&Point) -> Vec3 + Send + Sync>,
    jac: Arc<dyn Fn(&Point) -> Jac + Send + Sync>,
    singular: Vec<Point>,
    concentration: Concentration,
    invariant_plane: Option<Plane>,
    /// Bounding box outside which the field is undefined (grid fields).
    domain_box: Option<(Vec<Real>, Vec<Real>)>,
    meta: FieldMeta,
}

impl std::fmt::Debug for MapField {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "MapField({}, m={})", self.meta.family, self.m)
    }
}

impl MapField {
    pub fn dim(&self) -> usize {
        self.m
    }

    pub fn eval(&self, y: &Point) -> Vec3 {
        (self.eval)(y)
    }

    pub fn jacobian(&self, y: &Point) -> Jac {
        (self.jac)(y)
    }

    pub fn energy_density(&self, y: &Point) -> Real {
        self.jacobian(y).energy_density()
    }

    pub fn singular_points(&self) -> &[Point] {
        &self.singular
    }

    pub fn concentration(&self) -> &Concentration {
        &self.concentration
    }

    pub fn domain_box(&self) -> Option<(&[Real], &[Real])> {
        self.domain_box.as_ref().map(|(lo, hi)| (lo.as_slice(), hi.as_slice()))
    }

    /// The plane of exact translation invariance, when the family has one.
    pub fn invariant_plane(&self) -> Option<&Plane> {
        self.invariant_plane.as_ref()
    }

    pub fn meta(&self) -> &FieldMeta {
        &self.meta
    }

    pub fn distance_to_singular(&self, y: &Point) -> Real {
        self.singular
            .iter()
            .map(|s| y.sub(s).norm())
            .fold(Real::INFINITY, Real::min)
    }
}

// ---------------------------------------------------------------------------
// Stereographic machinery
// ---------------------------------------------------------------------------

/// Inverse stereographic projection R^2 -> S^2 (w = 0 at the south pole).
#[inline]
fn stereo_to_sphere(w: [Real; 2]) -> Vec3 {
    let d = 1.0 + w[0] * w[0] + w[1] * w[1];
    [2.0 * w[0] / d, 2.0 * w[1] / d, (w[0] * w[0] + w[1] * w[1] - 1.0) / d]
}

/// Partials of `stereo_to_sphere`: columns j = d/dw_j, as [dS/dw1, dS/dw2].
#[inline]
fn stereo_jac(w: [Real; 2]) -> [Vec3; 2] {
    let d = 1.0 + w[0] * w[0] + w[1] * w[1];
    let d2 = d * d;
    [
        [
            (2.0 * d - 4.0 * w[0] * w[0]) / d2,
            -4.0 * w[0] * w[1] / d2,
            4.0 * w[0] / d2,
        ],
        [
            -4.0 * w[0] * w[1] / d2,
            (2.0 * d - 4.0 * w[1] * w[1]) / d2,
            4.0 * w[1] / d2,
        ],
    ]
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq)]
pub struct BubbleParams {
    pub lambda: Real,
    pub center: [Real; 2],
    /// +1 or -1; the sign of the degree.
    pub orientation: i8,
}

impl BubbleParams {
    pub fn round(lambda: Real) -> Self {
        Self { lambda, center: [0.0, 0.0], orientation: 1 }
    }
}

/// Closed-form energy density of the standard bubble,
/// 8 lambda^2 / (lambda^2 + |w - c|^2)^2.
pub fn bubble_density(p: &BubbleParams, w: [Real; 2]) -> Real {
    let dx = w[0] - p.center[0];
    let dy = w[1] - p.center[1];
    let l2 = p.lambda * p.lambda;
    8.0 * l2 / (l2 + dx * dx + dy * dy).powi(2)
}

fn bubble_value(p: &BubbleParams, w: [Real; 2]) -> Vec3 {
    let mut q = [(w[0] - p.center[0]) / p.lambda, (w[1] - p.center[1]) / p.lambda];
    if p.orientation < 0 {
        q[1] = -q[1];
    }
    stereo_to_sphere(q)
}

fn bubble_jac_rows(p: &BubbleParams, w: [Real; 2]) -> [Vec3; 2] {
    let mut q = [(w[0] - p.center[0]) / p.lambda, (w[1] - p.center[1]) / p.lambda];
    let flip = p.orientation < 0;
    if flip {
        q[1] = -q[1];
    }
    let js = stereo_jac(q);
    let s = 1.0 / p.lambda;
    let row0 = [js[0][0] * s, js[0][1] * s, js[0][2] * s];
    let sgn = if flip { -s } else { s };
    let row1 = [js[1][0] * sgn, js[1][1] * sgn, js[1][2] * sgn];
    [row0, row1]
}

/// The standard conformal bubble on R^2, total energy 8 pi for every scale.
pub fn standard_bubble(p: BubbleParams) -> Result<MapField, FieldError> {
    if p.lambda <= 0.0 {
        return Err(FieldError::NonpositiveScale(p.lambda));
    }
    let meta = FieldMeta {
        family: "standard_bubble".into(),
        params: serde_json::json!({"lambda": p.lambda, "center": p.center, "orientation": p.orientation}),
        center_curve: None,
    };
    let pc = p;
    let eval = move |y: &Point| bubble_value(&pc, [y.get(0), y.get(1)]);
    let pj = p;
    let jac = move |y: &Point| {
        let rows = bubble_jac_rows(&pj, [y.get(0), y.get(1)]);
        let mut out = Jac::zeros(2);
        out.set_row(0, rows[0]);
        out.set_row(1, rows[1]);
        out
    };
    Ok(MapField {
        m: 2,
        eval: Arc::new(eval),
        jac: Arc::new(jac),
        singular: vec![],
        concentration: Concentration::Points {
            pts: vec![Point::from_slice(&p.center)],
            scale: p.lambda,
        },
        invariant_plane: None,
        domain_box: None,
        meta,
    })
}

/// Product of the standard bubble with R^{m-2}: invariant along the last
/// m - 2 coordinate axes.
pub fn product_bubble(m: usize, p: BubbleParams) -> Result<MapField, FieldError> {
    assert!((3..=4).contains(&m), "product bubble needs m in 3..=4");
    if p.lambda <= 0.0 {
        return Err(FieldError::NonpositiveScale(p.lambda));
    }
    let meta = FieldMeta {
        family: "product_bubble".into(),
        params: serde_json::json!({"m": m, "lambda": p.lambda, "center": p.center, "orientation": p.orientation}),
        center_curve: None,
    };
    let pc = p;
    let eval = move |y: &Point| bubble_value(&pc, [y.get(0), y.get(1)]);
    let pj = p;
    let jac = move |y: &Point| {
        let rows = bubble_jac_rows(&pj, [y.get(0), y.get(1)]);
        let mut out = Jac::zeros(m);
        out.set_row(0, rows[0]);
        out.set_row(1, rows[1]);
        out
    };
    let axes: Vec<usize> = (2..m).collect();
    let axis_plane: Plane = Plane::coordinate(m, &axes);
    let mut base = Point::zeros(m);
    base.set(0, p.center[0]);
    base.set(1, p.center[1]);
    let axis = AffinePlane::new(axis_plane.clone(), base).unwrap();
    Ok(MapField {
        m,
        eval: Arc::new(eval),
        jac: Arc::new(jac),
        singular: vec![],
        concentration: Concentration::Tube { axis, radius: p.lambda },
        invariant_plane: Some(axis_plane),
        domain_box: None,
        meta,
    })
}

// ---------------------------------------------------------------------------
// Cone family
// ---------------------------------------------------------------------------

/// Complex division helpers on (re, im) pairs.
#[inline]
fn cmul(a: [Real; 2], b: [Real; 2]) -> [Real; 2] {
    [a[0] * b[0] - a[1] * b[1], a[0] * b[1] + a[1] * b[0]]
}

#[inline]
fn cdiv(a: [Real; 2], b: [Real; 2]) -> [Real; 2] {
    let d = b[0] * b[0] + b[1] * b[1];
    [(a[0] * b[0] + a[1] * b[1]) / d, (a[1] * b[0] - a[0] * b[1]) / d]
}

/// f(z) = z / (lambda z^2 + z + lambda) and its complex derivative.
#[inline]
fn rational_map(z: [Real; 2], lambda: Real) -> ([Real; 2], [Real; 2]) {
    let z2 = cmul(z, z);
    let den = [lambda * z2[0] + z[0] + lambda, lambda * z2[1] + z[1]];
    let w = cdiv(z, den);
    // f' = lambda (1 - z^2) / den^2
    let num = [lambda * (1.0 - z2[0]), -lambda * z2[1]];
    let den2 = cmul(den, den);
    let fp = cdiv(num, den2);
    (w, fp)
}

/// The degree-2 family precomposed with the balancing Moebius dilation
/// phi_a(z) = (z + a)/(1 + a z), which fixes the +-e1 axis. The family is
/// invariant under z -> 1/z (the denominator is palindromic and
/// phi_a(1/z) = 1/phi_a(z)), so the same formula serves both charts.
#[inline]
fn balanced_rational(z: [Real; 2], lambda: Real, a: Real) -> ([Real; 2], [Real; 2]) {
    let den = [1.0 + a * z[0], a * z[1]];
    let phi = cdiv([z[0] + a, z[1]], den);
    let (w, fp) = rational_map(phi, lambda);
    // phi' = (1 - a^2) / (1 + a z)^2
    let phip = cdiv([1.0 - a * a, 0.0], cmul(den, den));
    (w, cmul(fp, phip))
}

/// Chart-plane integral of the angular energy density times the first
/// sphere coordinate; the cone over the map is stationary across the vertex
/// exactly when this vanishes.
fn cone_moment_e1(lambda: Real, a: Real) -> Real {
    let gl = crate::quad::gauss_legendre::<Real>(8);
    let n_phi = 96;
    let mut acc = 0.0;
    // log-radial panels covering the decay range of the density
    for panel in -18..18 {
        let (t0, t1) = (panel as Real, panel as Real + 1.0);
        for &(xg, wg) in gl.iter() {
            let t = 0.5 * (t0 + t1) + 0.5 * xg;
            let rho = t.exp();
            for k in 0..n_phi {
                let phi = 2.0 * std::f64::consts::PI * k as Real / n_phi as Real;
                let z = [rho * phi.cos(), rho * phi.sin()];
                let (w, fp) = balanced_rational(z, lambda, a);
                let dens = 8.0 * (fp[0] * fp[0] + fp[1] * fp[1])
                    / (1.0 + w[0] * w[0] + w[1] * w[1]).powi(2);
                let omega1 = 2.0 * z[0] / (1.0 + rho * rho);
                // area element rho drho dphi = rho^2 dt dphi
                acc += dens * omega1 * rho * rho * wg * 0.5 * (2.0 * std::f64::consts::PI
                    / n_phi as Real);
            }
        }
    }
    acc
}

/// Balancing parameter a(lambda): root of the e1 moment, by bisection.
fn cone_balance_parameter(lambda: Real) -> Real {
    let (mut lo, mut hi) = (-0.98, 0.98);
    let flo = cone_moment_e1(lambda, lo);
    let fhi = cone_moment_e1(lambda, hi);
    assert!(
        flo * fhi < 0.0,
        "conformal balancing bracket failed at lambda = {lambda} ({flo}, {fhi})"
    );
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        let fm = cone_moment_e1(lambda, mid);
        if fm == 0.0 {
            return mid;
        }
        if fm * flo < 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Directions of the two bubble rays of the balanced cone (the preimages
/// of the target poles), as unit vectors.
fn cone_bubble_directions(a: Real) -> [Vec3; 2] {
    let d = 1.0 + a * a;
    [
        [-2.0 * a / d, 0.0, (1.0 - a * a) / d],
        [-2.0 * a / d, 0.0, -(1.0 - a * a) / d],
    ]
}

/// Evaluate the sphere self-map of the cone family at a unit direction
/// `n`, returning the value and the tangent Jacobian as a 3x3 ambient matrix
/// (well defined on directions; the radial direction is annihilated by the
/// caller's projection).
fn cone_sphere_map(n: Vec3, lambda: Real, a: Real) -> (Vec3, [[Real; 3]; 3]) {
    // chart selection by hemisphere
    let south = n[2] <= 0.0;
    let (z, jc): ([Real; 2], [[Real; 3]; 2]) = if south {
        let s = 1.0 / (1.0 - n[2]);
        let z = [n[0] * s, n[1] * s];
        // d z / d p
        let jc = [
            [s, 0.0, n[0] * s * s],
            [0.0, s, n[1] * s * s],
        ];
        (z, jc)
    } else {
        let s = 1.0 / (1.0 + n[2]);
        let z = [n[0] * s, -n[1] * s];
        let jc = [
            [s, 0.0, -n[0] * s * s],
            [0.0, -s, n[1] * s * s],
        ];
        (z, jc)
    };
    let (w, fp) = balanced_rational(z, lambda, a);
    // real 2x2 from the complex derivative
    let jf = [[fp[0], -fp[1]], [fp[1], fp[0]]];
    let js = stereo_jac(w);
    let value = stereo_to_sphere(w);
    // ambient = js (3x2) . jf (2x2) . jc (2x3)
    let mut jfc = [[0.0; 3]; 2];
    for a in 0..2 {
        for b in 0..3 {
            jfc[a][b] = jf[a][0] * jc[0][b] + jf[a][1] * jc[1][b];
        }
    }
    let mut out = [[0.0; 3]; 3];
    for a in 0..3 {
        for b in 0..3 {
            out[a][b] = js[0][a] * jfc[0][b] + js[1][a] * jfc[1][b];
        }
    }
    (value, out)
}

/// Zero-homogeneous cone field on R^3 built from the degree-2 rational
/// family; radially invariant with a single singular point at the origin.
pub fn cone_map(lambda: Real) -> Result<MapField, FieldError> {
    if lambda <= 0.0 {
        return Err(FieldError::NonpositiveScale(lambda));
    }
    let a = cone_balance_parameter(lambda);
    let meta = FieldMeta {
        family: "cone_map".into(),
        params: serde_json::json!({"lambda": lambda, "balance": a}),
        center_curve: None,
    };
    let eval = move |y: &Point| {
        let r = y.norm();
        assert!(r > 0.0, "cone map evaluated at the singular origin");
        let n = [y.get(0) / r, y.get(1) / r, y.get(2) / r];
        cone_sphere_map(n, lambda, a).0
    };
    let jac = move |y: &Point| {
        let r = y.norm();
        assert!(r > 0.0, "cone map evaluated at the singular origin");
        let n = [y.get(0) / r, y.get(1) / r, y.get(2) / r];
        let (_, js) = cone_sphere_map(n, lambda, a);
        // chain with d(x/|x|) = (I - n n^T)/r
        let mut out = Jac::zeros(3);
        for i in 0..3 {
            let mut dir = [0.0; 3];
            for k in 0..3 {
                let delta = if i == k { 1.0 } else { 0.0 };
                dir[k] = (delta - n[i] * n[k]) / r;
            }
            let mut row = [0.0; 3];
            for a in 0..3 {
                row[a] = js[a][0] * dir[0] + js[a][1] * dir[1] + js[a][2] * dir[2];
            }
            out.set_row(i, row);
        }
        out
    };
    Ok(MapField {
        m: 3,
        eval: Arc::new(eval),
        jac: Arc::new(jac),
        singular: vec![Point::zeros(3)],
        concentration: Concentration::None,
        invariant_plane: None,
        domain_box: None,
        meta,
    })
}

/// 2-D slice of the cone family through its link sphere: a rotated
/// stereographic chart that places the two 8 pi bubbles at w = (0, +-1).
pub fn cone_link_slice(lambda: Real) -> Result<MapField, FieldError> {
    if lambda <= 0.0 {
        return Err(FieldError::NonpositiveScale(lambda));
    }
    // rotation by 90 degrees about the x-axis: (0,0,+-1) -> (0,-+1,0)
    const R: [[Real; 3]; 3] = [[1.0, 0.0, 0.0], [0.0, 0.0, -1.0], [0.0, 1.0, 0.0]];
    let a = cone_balance_parameter(lambda);
    let meta = FieldMeta {
        family: "cone_link_slice".into(),
        params: serde_json::json!({"lambda": lambda, "balance": a}),
        center_curve: None,
    };
    let rot = |p: Vec3| -> Vec3 {
        [
            R[0][0] * p[0] + R[0][1] * p[1] + R[0][2] * p[2],
            R[1][0] * p[0] + R[1][1] * p[1] + R[1][2] * p[2],
            R[2][0] * p[0] + R[2][1] * p[1] + R[2][2] * p[2],
        ]
    };
    let eval = move |y: &Point| {
        let p = rot(stereo_to_sphere([y.get(0), y.get(1)]));
        cone_sphere_map(p, lambda, a).0
    };
    let jac = move |y: &Point| {
        let w = [y.get(0), y.get(1)];
        let p = rot(stereo_to_sphere(w));
        let (_, jsph) = cone_sphere_map(p, lambda, a);
        let jw = stereo_jac(w);
        let mut out = Jac::zeros(2);
        for j in 0..2 {
            let d = rot(jw[j]);
            let mut row = [0.0; 3];
            for a in 0..3 {
                row[a] = jsph[a][0] * d[0] + jsph[a][1] * d[1] + jsph[a][2] * d[2];
            }
            out.set_row(j, row);
        }
        out
    };
    // chart positions of the two bubbles: the rotated ray directions land
    // on the unit circle
    let dirs = cone_bubble_directions(a);
    let pts: Vec<Point> = dirs
        .iter()
        .map(|b| {
            let q = rot(*b);
            Point::from_slice(&[q[0] / (1.0 - q[2]), q[1] / (1.0 - q[2])])
        })
        .collect();
    Ok(MapField {
        m: 2,
        eval: Arc::new(eval),
        jac: Arc::new(jac),
        singular: vec![],
        concentration: Concentration::Points { pts, scale: lambda },
        invariant_plane: None,
        domain_box: None,
        meta,
    })
}

/// Bubble translated along a bent center curve; not harmonic for nonzero
/// amplitude. The true center set {(tau(t), t)} is recorded in the metadata.
pub fn bent_bubble(m: usize, p: BubbleParams, curve: CurveSpec) -> Result<MapField, FieldError> {
    assert!((3..=4).contains(&m));
    curve.validate()?;
    if p.lambda <= 0.0 {
        return Err(FieldError::NonpositiveScale(p.lambda));
    }
    let meta = FieldMeta {
        family: "bent_bubble".into(),
        params: serde_json::json!({"m": m, "lambda": p.lambda, "center": p.center, "orientation": p.orientation}),
        center_curve: Some(curve.clone()),
    };
    let pc = p;
    let cc = curve.clone();
    let eval = move |y: &Point| {
        let t: Vec<Real> = (2..y.dim()).map(|i| y.get(i)).collect();
        let tau = cc.eval(&t);
        bubble_value(&pc, [y.get(0) - tau[0], y.get(1) - tau[1]])
    };
    let pj = p;
    let cj = curve.clone();
    let jac = move |y: &Point| {
        let t: Vec<Real> = (2..y.dim()).map(|i| y.get(i)).collect();
        let tau = cj.eval(&t);
        let rows = bubble_jac_rows(&pj, [y.get(0) - tau[0], y.get(1) - tau[1]]);
        let mut out = Jac::zeros(m);
        out.set_row(0, rows[0]);
        out.set_row(1, rows[1]);
        for j in 0..(m - 2) {
            let g = cj.grad(&t, j);
            let mut row = [0.0; 3];
            for a in 0..3 {
                row[a] = -(rows[0][a] * g[0] + rows[1][a] * g[1]);
            }
            out.set_row(2 + j, row);
        }
        out
    };
    let axes: Vec<usize> = (2..m).collect();
    let mut base = Point::zeros(m);
    base.set(0, p.center[0]);
    base.set(1, p.center[1]);
    let axis = AffinePlane::new(Plane::coordinate(m, &axes), base).unwrap();
    Ok(MapField {
        m,
        eval: Arc::new(eval),
        jac: Arc::new(jac),
        singular: vec![],
        concentration: Concentration::Tube { axis, radius: p.lambda + curve.amplitude },
        invariant_plane: None,
        domain_box: None,
        meta,
    })
}

/// The constant map (everything sent to the north pole).
pub fn constant_map(m: usize) -> MapField {
    MapField {
        m,
        eval: Arc::new(|_: &Point| [0.0, 0.0, 1.0]),
        jac: Arc::new(move |_: &Point| Jac::zeros(m)),
        singular: vec![],
        concentration: Concentration::None,
        invariant_plane: None,
        domain_box: None,
        meta: FieldMeta {
            family: "constant".into(),
            params: serde_json::Value::Null,
            center_curve: None,
        },
    }
}

/// Restriction of a field to an embedded 2-plane, as a 2-D field.
pub fn restrict_to_slice(f: &MapField, slice: &Slice2) -> MapField {
    let fc = f.clone();
    let sc = slice.clone();
    let eval = move |w: &Point| fc.eval(&sc.embed([w.get(0), w.get(1)]));
    let fj = f.clone();
    let sj = slice.clone();
    let jac = move |w: &Point| {
        let y = sj.embed([w.get(0), w.get(1)]);
        let full = fj.jacobian(&y);
        let b = [Point::from_slice(&sj.b1), Point::from_slice(&sj.b2)];
        let mut out = Jac::zeros(2);
        for (j, bj) in b.iter().enumerate() {
            out.set_row(j, full.dir_deriv(bj));
        }
        out
    };
    let pts = match f.concentration() {
        Concentration::Points { pts, scale } => Concentration::Points {
            pts: pts.iter().map(|p| Point::from_slice(&slice.coords(p))).collect(),
            scale: *scale,
        },
        Concentration::Tube { axis, radius } => {
            // a transverse slice meets the tube near the axis intersection
            let w0 = slice.coords(&axis.base);
            Concentration::Points { pts: vec![Point::from_slice(&w0)], scale: *radius }
        }
        Concentration::None => Concentration::None,
    };
    MapField {
        m: 2,
        eval: Arc::new(eval),
        jac: Arc::new(jac),
        singular: vec![],
        concentration: pts,
        invariant_plane: None,
        domain_box: None,
        meta: FieldMeta {
            family: format!("{}|slice", f.meta().family),
            params: f.meta().params.clone(),
            center_curve: f.meta().center_curve.clone(),
        },
    }
}

// ---------------------------------------------------------------------------
// Grid-backed fields
// ---------------------------------------------------------------------------

/// Regular-lattice samples of a sphere-valued map; evaluation goes through
/// normalized multilinear interpolation so |u| = 1 everywhere and the
/// Jacobian of the interpolant is defined.
#[derive(Clone, Debug)]
pub struct GridData {
    pub m: usize,
    pub lo: Vec<Real>,
    pub spacing: Vec<Real>,
    pub counts: Vec<usize>,
    pub values: Vec<Vec3>,
}

impl GridData {
    fn index(&self, idx: &[usize]) -> usize {
        let mut flat = 0;
        for (d, &i) in idx.iter().enumerate() {
            flat = flat * self.counts[d] + i;
        }
        flat
    }

    /// Raw multilinear interpolation and its gradient (before normalization).
    fn interp(&self, y: &Point) -> (Vec3, Vec<Vec3>) {
        let m = self.m;
        let mut cell = vec![0usize; m];
        let mut frac = vec![0.0; m];
        for d in 0..m {
            let t = (y.get(d) - self.lo[d]) / self.spacing[d];
            let t = t.clamp(0.0, (self.counts[d] - 1) as Real - 1e-9);
            cell[d] = t.floor() as usize;
            frac[d] = t - cell[d] as Real;
        }
        let mut value = [0.0; 3];
        let mut grad = vec![[0.0; 3]; m];
        for corner in 0..(1usize << m) {
            let mut w = 1.0;
            let mut idx = vec![0usize; m];
            for d in 0..m {
                let hi = (corner >> d) & 1 == 1;
                idx[d] = cell[d] + hi as usize;
                w *= if hi { frac[d] } else { 1.0 - frac[d] };
            }
            let v = self.values[self.index(&idx)];
            for a in 0..3 {
                value[a] += w * v[a];
            }
            for g in 0..m {
                let mut dw = 1.0 / self.spacing[g];
                for d in 0..m {
                    let hi = (corner >> d) & 1 == 1;
                    if d == g {
                        dw *= if hi { 1.0 } else { -1.0 };
                    } else {
                        dw *= if hi { frac[d] } else { 1.0 - frac[d] };
                    }
                }
                for a in 0..3 {
                    grad[g][a] += dw * v[a];
                }
            }
        }
        (value, grad)
    }
}

/// Build a grid-backed field. Evaluation normalizes the interpolant; the
/// Jacobian is the exact derivative of the normalized interpolant.
pub fn grid_field(data: GridData) -> Result<MapField, FieldError> {
    if data.values.len() != data.counts.iter().product::<usize>() {
        return Err(FieldError::GridFormat(format!(
            "value count {} does not match lattice size {}",
            data.values.len(),
            data.counts.iter().product::<usize>()
        )));
    }
    let m = data.m;
    let lo_box = data.lo.clone();
    let hi_box: Vec<Real> = (0..m)
        .map(|d| data.lo[d] + data.spacing[d] * (data.counts[d] - 1) as Real)
        .collect();
    let d1 = Arc::new(data);
    let d2 = d1.clone();
    let eval = move |y: &Point| {
        let (g, _) = d1.interp(y);
        let n = norm3_sq(&g).sqrt();
        [g[0] / n, g[1] / n, g[2] / n]
    };
    let jac = move |y: &Point| {
        let (g, dg) = d2.interp(y);
        let n = norm3_sq(&g).sqrt();
        let u = [g[0] / n, g[1] / n, g[2] / n];
        let mut out = Jac::zeros(m);
        for i in 0..m {
            // d(g/|g|) = (I - u u^T) dg / |g|
            let c = dot3(&u, &dg[i]);
            out.set_row(i, [
                (dg[i][0] - c * u[0]) / n,
                (dg[i][1] - c * u[1]) / n,
                (dg[i][2] - c * u[2]) / n,
            ]);
        }
        out
    };
    Ok(MapField {
        m,
        eval: Arc::new(eval),
        jac: Arc::new(jac),
        singular: vec![],
        concentration: Concentration::None,
        invariant_plane: None,
        domain_box: Some((lo_box, hi_box)),
        meta: FieldMeta {
            family: "grid".into(),
            params: serde_json::Value::Null,
            center_curve: None,
        },
    })
}

/// Precompose a field with a domain rotation: (rotate_domain f)(y) = f(R y).
/// Concentration geometry is carried along.
pub fn rotate_domain(f: &MapField, rot: &Matrix) -> MapField {
    let m = f.dim();
    let rt = rot.transpose();
    let fe = f.clone();
    let r1 = *rot;
    let eval = move |y: &Point| fe.eval(&r1.matvec(y));
    let fj = f.clone();
    let r2 = *rot;
    let jac = move |y: &Point| {
        let full = fj.jacobian(&r2.matvec(y));
        let mut out = Jac::zeros(m);
        for i in 0..m {
            let mut col = Point::zeros(m);
            for k in 0..m {
                col.set(k, r2.get(k, i));
            }
            out.set_row(i, full.dir_deriv(&col));
        }
        out
    };
    let concentration = match f.concentration() {
        Concentration::None => Concentration::None,
        Concentration::Points { pts, scale } => Concentration::Points {
            pts: pts.iter().map(|p| rt.matvec(p)).collect(),
            scale: *scale,
        },
        Concentration::Tube { axis, radius } => {
            let basis: Vec<Point> = axis.plane.basis().iter().map(|b| rt.matvec(b)).collect();
            let plane = Plane::new(m, &basis).expect("rotated basis independent");
            Concentration::Tube {
                axis: AffinePlane::new(plane, rt.matvec(&axis.base)).unwrap(),
                radius: *radius,
            }
        }
    };
    let invariant_plane = f.invariant_plane().map(|p| {
        let basis: Vec<Point> = p.basis().iter().map(|b| rt.matvec(b)).collect();
        Plane::new(m, &basis).expect("rotated basis independent")
    });
    MapField {
        m,
        eval: Arc::new(eval),
        jac: Arc::new(jac),
        singular: f.singular_points().iter().map(|s| rt.matvec(s)).collect(),
        concentration,
        invariant_plane,
        domain_box: None,
        meta: FieldMeta {
            family: format!("{}|rot", f.meta().family),
            params: f.meta().params.clone(),
            center_curve: f.meta().center_curve.clone(),
        },
    }
}

/// Read a grid field from CSV: first line is a JSON header
/// `# {"m":..,"lo":[..],"spacing":[..],"counts":[..]}`, then one row per
/// lattice site in row-major order: y coordinates followed by u components.
pub fn read_grid_csv(text: &str) -> Result<MapField, FieldError> {
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| FieldError::GridFormat("empty file".into()))?;
    let header = header
        .strip_prefix('#')
        .ok_or_else(|| FieldError::GridFormat("missing # header".into()))?;
    #[derive(Deserialize)]
    struct H {
        m: usize,
        lo: Vec<Real>,
        spacing: Vec<Real>,
        counts: Vec<usize>,
    }
    let h: H = serde_json::from_str(header.trim())
        .map_err(|e| FieldError::GridFormat(format!("bad header: {e}")))?;
    let mut values = Vec::new();
    for (ln, line) in lines.enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with("y1") {
            continue;
        }
        let cols: Vec<Real> = line
            .split(',')
            .map(|c| c.trim().parse::<Real>())
            .collect::<Result<_, _>>()
            .map_err(|e| FieldError::GridFormat(format!("line {}: {e}", ln + 2)))?;
        if cols.len() != h.m + 3 {
            return Err(FieldError::GridFormat(format!(
                "line {}: expected {} columns, got {}",
                ln + 2,
                h.m + 3,
                cols.len()
            )));
        }
        values.push([cols[h.m], cols[h.m + 1], cols[h.m + 2]]);
    }
    grid_field(GridData { m: h.m, lo: h.lo, spacing: h.spacing, counts: h.counts, values })
}

// ---------------------------------------------------------------------------
// Residual checks
// ---------------------------------------------------------------------------

/// Finite-difference tension-field residual: Delta u + |grad u|^2 u, which
/// vanishes for harmonic maps into the unit sphere.
pub fn harmonic_residual(f: &MapField, y: &Point, h: Real) -> Result<Vec3, FieldError> {
    if h <= 0.0 {
        return Err(FieldError::NonpositiveScale(h));
    }
    let dist = f.distance_to_singular(y);
    if dist <= 10.0 * h {
        return Err(FieldError::NearSingular { dist, need: 10.0 * h });
    }
    let m = f.dim();
    let u0 = f.eval(y);
    let mut lap = [0.0; 3];
    for i in 0..m {
        let e = Point::basis(m, i);
        let up = f.eval(&y.axpy(h, &e));
        let un = f.eval(&y.axpy(-h, &e));
        for a in 0..3 {
            lap[a] += (up[a] - 2.0 * u0[a] + un[a]) / (h * h);
        }
    }
    let dens = f.energy_density(y);
    Ok([lap[0] + dens * u0[0], lap[1] + dens * u0[1], lap[2] + dens * u0[2]])
}

/// Compactly supported test vector field: a quartic bump times an affine
/// field, with an analytic gradient.
#[derive(Clone, Debug)]
pub struct TestVectorField {
    pub center: Point,
    pub radius: Real,
    pub constant: Point,
    pub linear: Matrix,
}

impl TestVectorField {
    /// Deterministic field drawn from the counter-based generator.
    pub fn seeded(m: usize, center: Point, radius: Real, rng: &CounterRng, k: u64) -> Self {
        let mut constant = Point::zeros(m);
        let mut linear = Matrix::zeros(m);
        let base = k * 64;
        for i in 0..m {
            constant.set(i, rng.range_at(base + i as u64, -1.0, 1.0));
            for j in 0..m {
                linear.set(i, j, rng.range_at(base + 8 + (i * m + j) as u64, -1.0, 1.0));
            }
        }
        Self { center, radius, constant, linear }
    }

    fn bump(t: Real) -> Real {
        if t >= 1.0 {
            0.0
        } else {
            (1.0 - t).powi(4)
        }
    }

    fn bump_dot(t: Real) -> Real {
        if t >= 1.0 {
            0.0
        } else {
            -4.0 * (1.0 - t).powi(3)
        }
    }

    pub fn eval(&self, y: &Point) -> Point {
        let d = y.sub(&self.center);
        let t = d.norm_sq() / (self.radius * self.radius);
        self.constant.add(&self.linear.matvec(&d)).scale(Self::bump(t))
    }

    /// grad[i][j] = partial_i xi^j
    pub fn grad(&self, y: &Point) -> Matrix {
        let m = y.dim();
        let d = y.sub(&self.center);
        let r2 = self.radius * self.radius;
        let t = d.norm_sq() / r2;
        let b = Self::bump(t);
        let bd = Self::bump_dot(t);
        let v = self.constant.add(&self.linear.matvec(&d));
        let mut out = Matrix::zeros(m);
        for i in 0..m {
            for j in 0..m {
                let val = bd * (2.0 * d.get(i) / r2) * v.get(j) + b * self.linear.get(j, i);
                out.set(i, j, val);
            }
        }
        out
    }
}

/// Inner-variation residual: integral of the stress-energy tensor against
/// grad xi, reported normalized by the integral of |grad u|^2 |grad xi|.
/// Near zero exactly when the field is stationary.
pub fn stationary_residual(
    f: &MapField,
    xi: &TestVectorField,
    spec: &QuadratureSpec,
) -> Result<Real, FieldError> {
    // support must sit inside the region
    let inside = match &spec.region {
        Region::Box { lo, hi } => (0..xi.center.dim()).all(|d| {
            xi.center.get(d) - xi.radius >= lo[d] && xi.center.get(d) + xi.radius <= hi[d]
        }),
        Region::Shell { center, r_in, r_out, .. } => {
            let c = Point::from_slice(center);
            let d = xi.center.sub(&c).norm();
            d + xi.radius <= *r_out && (*r_in == 0.0 || d - xi.radius >= *r_in)
        }
        _ => true,
    };
    if !inside {
        return Err(FieldError::SupportEscapesDomain);
    }
    // singular points inside the support need the spherical scheme
    if spec.scheme != quad::Scheme::Spherical {
        for s in f.singular_points() {
            if s.sub(&xi.center).norm() < xi.radius {
                return Err(FieldError::SupportEscapesDomain);
            }
        }
    }

    let m = f.dim();
    let vals = quad::integrate_many::<2, _>(
        |y| {
            let g = xi.grad(y);
            if g.max_abs_entry() == 0.0 {
                return [0.0, 0.0];
            }
            let jac = f.jacobian(y);
            let dens = jac.energy_density();
            let mut resid = 0.0;
            for i in 0..m {
                for j in 0..m {
                    let sij = if i == j { dens } else { 0.0 }
                        - 2.0 * dot3(jac.row(i), jac.row(j));
                    resid += sij * g.get(i, j);
                }
            }
            [resid, dens * g.frobenius_norm()]
        },
        spec,
    )?;
    Ok(vals[0] / vals[1])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad::Scheme;

    fn check_tangency_and_fd(f: &MapField, pts: &[Point]) {
        for y in pts {
            let u = f.eval(y);
            assert!((norm3_sq(&u) - 1.0).abs() < 1e-10, "|u| != 1 at {y:?}");
            let jac = f.jacobian(y);
            for i in 0..f.dim() {
                assert!(
                    dot3(jac.row(i), &u).abs() < 1e-8,
                    "tangency fails at {y:?} dir {i}"
                );
            }
            // central finite differences vs analytic jacobian
            let h = 1e-5;
            for i in 0..f.dim() {
                let e = Point::basis(f.dim(), i);
                let up = f.eval(&y.axpy(h, &e));
                let un = f.eval(&y.axpy(-h, &e));
                let scale = jac.energy_density().sqrt().max(1e-6);
                for a in 0..3 {
                    let fd = (up[a] - un[a]) / (2.0 * h);
                    assert!(
                        (fd - jac.row(i)[a]).abs() < 1e-5 * scale.max(1.0),
                        "FD mismatch at {y:?} dir {i} comp {a}: {fd} vs {}",
                        jac.row(i)[a]
                    );
                }
            }
        }
    }

    fn sample_points(m: usize, n: usize, avoid_origin: bool) -> Vec<Point> {
        let rng = CounterRng::new(11, "field-test-points");
        let mut out = Vec::new();
        let mut k = 0;
        while out.len() < n {
            let mut p = Point::zeros(m);
            for d in 0..m {
                p.set(d, rng.range_at((out.len() * 8 + d + k) as u64, -2.0, 2.0));
            }
            k += 1;
            if avoid_origin && p.norm() < 0.3 {
                continue;
            }
            out.push(p);
        }
        out
    }

    #[test]
    fn standard_bubble_density_values() {
        let f = standard_bubble(BubbleParams::round(1.0)).unwrap();
        assert!((f.energy_density(&Point::zeros(2)) - 8.0).abs() < 1e-12);
        let y = Point::from_slice(&[1.0, 0.0]);
        assert!((f.energy_density(&y) - 2.0).abs() < 1e-12);
        check_tangency_and_fd(&f, &sample_points(2, 8, false));
        // orientation flip keeps the density
        let g = standard_bubble(BubbleParams { lambda: 1.0, center: [0.0, 0.0], orientation: -1 })
            .unwrap();
        assert!((g.energy_density(&y) - 2.0).abs() < 1e-12);
        check_tangency_and_fd(&g, &sample_points(2, 4, false));
    }

    #[test]
    fn product_bubble_invariance() {
        let f = product_bubble(3, BubbleParams::round(0.7)).unwrap();
        check_tangency_and_fd(&f, &sample_points(3, 6, false));
        let ez = Point::basis(3, 2);
        for y in sample_points(3, 6, false) {
            let jac = f.jacobian(&y);
            assert_eq!(norm3_sq(&jac.dir_deriv(&ez)), 0.0);
        }
        let f4 = product_bubble(4, BubbleParams::round(0.7)).unwrap();
        check_tangency_and_fd(&f4, &sample_points(4, 4, false));
    }

    #[test]
    fn cone_map_homogeneity() {
        let f = cone_map(0.4).unwrap();
        check_tangency_and_fd(&f, &sample_points(3, 12, true));
        for y in sample_points(3, 100, true) {
            let jac = f.jacobian(&y);
            let radial = jac.dir_deriv(&y);
            assert!(
                norm3_sq(&radial).sqrt() < 1e-10,
                "radial derivative {} at {y:?}",
                norm3_sq(&radial).sqrt()
            );
        }
    }

    #[test]
    fn cone_lambda_zero_limit_is_constant() {
        // for tiny lambda the map away from the poles approaches [1,1]
        let f = cone_map(1e-9).unwrap();
        let one_one = stereo_to_sphere([1.0, 0.0]); // z = 1 target point
        for y in [
            Point::from_slice(&[1.0, 0.3, 0.2]),
            Point::from_slice(&[-0.5, 0.8, -0.3]),
            Point::from_slice(&[0.2, -1.0, 0.5]),
        ] {
            let u = f.eval(&y);
            for a in 0..3 {
                assert!((u[a] - one_one[a]).abs() < 1e-6, "{u:?} vs {one_one:?}");
            }
        }
    }

    #[test]
    fn cone_sphere_energy_is_16_pi() {
        // quadrature over the link slice chart; conformal invariance makes
        // this the full sphere energy of the rational family
        let f = cone_link_slice(0.3).unwrap();
        let spec = QuadratureSpec::new(
            Scheme::TensorGauss,
            48,
            Region::Disc {
                slice: Slice2::planar(),
                center2: [0.0, 0.0],
                r_in: 0.0,
                r_out: 400.0,
                fine: Some(0.15),
            },
        );
        let e = quad::integrate(|p| f.energy_density(p), &spec).unwrap();
        let want = 16.0 * std::f64::consts::PI;
        assert!((e - want).abs() < 2e-3 * want, "E = {e}, want {want}");
    }

    #[test]
    fn bent_bubble_reduces_to_product_at_zero_amplitude() {
        let curve = CurveSpec { amplitude: 0.0, omega: vec![0.8], phase: 0.3 };
        let f = bent_bubble(3, BubbleParams::round(0.5), curve).unwrap();
        let g = product_bubble(3, BubbleParams::round(0.5)).unwrap();
        for y in sample_points(3, 10, false) {
            let uf = f.eval(&y);
            let ug = g.eval(&y);
            for a in 0..3 {
                assert!((uf[a] - ug[a]).abs() < 1e-14);
            }
        }
        // metadata round-trips
        let curve = CurveSpec { amplitude: 0.05, omega: vec![0.8], phase: 0.0 };
        let f = bent_bubble(3, BubbleParams::round(0.05), curve.clone()).unwrap();
        assert_eq!(f.meta().center_curve.as_ref().unwrap(), &curve);
        check_tangency_and_fd(&f, &sample_points(3, 6, false));
    }

    #[test]
    fn harmonic_residual_values() {
        let f = standard_bubble(BubbleParams::round(1.0)).unwrap();
        let y = Point::from_slice(&[0.5, 0.3]);
        let r = harmonic_residual(&f, &y, 1e-3).unwrap();
        let dens = f.energy_density(&y);
        assert!(
            norm3_sq(&r).sqrt() <= 1e-4 * dens,
            "residual {} vs density {dens}",
            norm3_sq(&r).sqrt()
        );

        let c = constant_map(3);
        let rc = harmonic_residual(&c, &Point::zeros(3), 1e-3).unwrap();
        assert_eq!(norm3_sq(&rc), 0.0);

        // bent bubble is visibly non harmonic
        let curve = CurveSpec { amplitude: 0.05, omega: vec![0.8], phase: 0.0 };
        let b = bent_bubble(3, BubbleParams::round(0.3), curve).unwrap();
        let yb = Point::from_slice(&[0.35, 0.0, 0.4]);
        let rb = harmonic_residual(&b, &yb, 1e-3).unwrap();
        let floor = 1e-4 * b.energy_density(&yb);
        assert!(
            norm3_sq(&rb).sqrt() > 10.0 * floor,
            "bent residual {} vs floor {floor}",
            norm3_sq(&rb).sqrt()
        );

        // near-singular guard
        let cone = cone_map(0.5).unwrap();
        let e = harmonic_residual(&cone, &Point::from_slice(&[0.0, 0.0, 1e-4]), 1e-3);
        assert!(matches!(e, Err(FieldError::NearSingular { .. })));
    }

    #[test]
    fn grid_field_roundtrip() {
        // sample the standard bubble on a lattice and compare the interpolant
        let f = standard_bubble(BubbleParams::round(1.0)).unwrap();
        let n = 81;
        let lo = -2.0;
        let h = 4.0 / (n - 1) as Real;
        let mut values = Vec::new();
        for i in 0..n {
            for j in 0..n {
                let y = Point::from_slice(&[lo + h * i as Real, lo + h * j as Real]);
                values.push(f.eval(&y));
            }
        }
        let g = grid_field(GridData {
            m: 2,
            lo: vec![lo, lo],
            spacing: vec![h, h],
            counts: vec![n, n],
            values,
        })
        .unwrap();
        let y = Point::from_slice(&[0.21, -0.37]);
        let uf = f.eval(&y);
        let ug = g.eval(&y);
        assert!((norm3_sq(&ug) - 1.0).abs() < 1e-12, "normalized interpolant");
        for a in 0..3 {
            assert!((uf[a] - ug[a]).abs() < 3e-3, "{uf:?} vs {ug:?}");
        }
        // CSV round trip
        let mut text = String::from(
            "# {\"m\":2,\"lo\":[-2.0,-2.0],\"spacing\":[0.05,0.05],\"counts\":[81,81]}\n",
        );
        for i in 0..81 {
            for j in 0..81 {
                let y = Point::from_slice(&[-2.0 + 0.05 * i as Real, -2.0 + 0.05 * j as Real]);
                let u = f.eval(&y);
                text.push_str(&format!(
                    "{},{},{:.17e},{:.17e},{:.17e}\n",
                    -2.0 + 0.05 * i as Real,
                    -2.0 + 0.05 * j as Real,
                    u[0],
                    u[1],
                    u[2]
                ));
            }
        }
        let g2 = read_grid_csv(&text).unwrap();
        let u2 = g2.eval(&y);
        assert!((norm3_sq(&u2) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn stationary_residual_baselines() {
        let f = standard_bubble(BubbleParams::round(1.0)).unwrap();
        let rng = CounterRng::new(2024, "xi");
        let spec = QuadratureSpec::new(
            Scheme::TensorGauss,
            32,
            Region::Box { lo: vec![-2.0, -2.0], hi: vec![2.0, 2.0] },
        );
        let mut worst: Real = 0.0;
        for k in 0..10 {
            let c = Point::from_slice(&[
                rng.range_at(1000 + k, -0.5, 0.5),
                rng.range_at(2000 + k, -0.5, 0.5),
            ]);
            let xi = TestVectorField::seeded(2, c, 1.0, &rng, k);
            let r = stationary_residual(&f, &xi, &spec).unwrap();
            worst = worst.max(r.abs());
        }
        assert!(worst <= 1e-3, "bubble residual {worst}");

        // support escape is rejected
        let xi = TestVectorField::seeded(2, Point::from_slice(&[1.8, 0.0]), 1.0, &rng, 99);
        assert!(matches!(
            stationary_residual(&f, &xi, &spec),
            Err(FieldError::SupportEscapesDomain)
        ));
    }
}
