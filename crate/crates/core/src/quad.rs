//! Deterministic quadrature over boxes, balls, annuli, embedded discs,
//! tubes and graph windows.
//!
//! Node/weight sets are pure functions of the spec, evaluation may run on any
//! number of workers, and the reduction is a pairwise tree over the canonical
//! node ordering, so results are bit-for-bit reproducible.

use crate::linalg::SVec;
use crate::scalar::Scalar;
use crate::{Point, Real};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum QuadError {
    #[error("non-finite sample {value} at node {index} ({position:?})")]
    NonFiniteSample { index: usize, value: Real, position: Vec<Real> },
    #[error("graph too steep: Lipschitz bound {0} >= 0.5")]
    SteepGraph(Real),
    #[error("nonpositive scale {0}")]
    NonpositiveScale(Real),
    #[error("circle average on the axis (s_perp = {0})")]
    OnAxis(Real),
}

// ---------------------------------------------------------------------------
// Gauss-Legendre nodes
// ---------------------------------------------------------------------------

fn gl_cache() -> &'static Mutex<HashMap<usize, Arc<Vec<(f64, f64)>>>> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<Vec<(f64, f64)>>>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

fn gauss_legendre_f64(n: usize) -> Arc<Vec<(f64, f64)>> {
    if let Some(hit) = gl_cache().lock().unwrap().get(&n) {
        return hit.clone();
    }
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        // Newton iteration from the Chebyshev-like initial guess
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut pp = 0.0;
        for _ in 0..100 {
            let mut p0 = 1.0;
            let mut p1 = x;
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            // derivative of P_n
            pp = (n as f64) * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / pp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * pp * pp);
        out.push((-x, w)); // ascending order
    }
    out.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let arc = Arc::new(out);
    gl_cache().lock().unwrap().insert(n, arc.clone());
    arc
}

/// Gauss-Legendre nodes and weights on (-1, 1), ascending.
pub fn gauss_legendre<S: Scalar>(n: usize) -> Vec<(S, S)> {
    gauss_legendre_f64(n)
        .iter()
        .map(|&(x, w)| (S::lit(x), S::lit(w)))
        .collect()
}

/// Pairwise-tree sum over the given ordering.
pub fn pairwise_sum(xs: &[Real]) -> Real {
    match xs.len() {
        0 => 0.0,
        1 => xs[0],
        2 => xs[0] + xs[1],
        n => {
            let mid = n / 2;
            pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
        }
    }
}

fn pairwise_sum_arrays<const K: usize>(xs: &[[Real; K]]) -> [Real; K] {
    match xs.len() {
        0 => [0.0; K],
        1 => xs[0],
        n => {
            let mid = n / 2;
            let a = pairwise_sum_arrays(&xs[..mid]);
            let b = pairwise_sum_arrays(&xs[mid..]);
            let mut out = [0.0; K];
            for k in 0..K {
                out[k] = a[k] + b[k];
            }
            out
        }
    }
}

// ---------------------------------------------------------------------------
// Regions and specs
// ---------------------------------------------------------------------------

/// Embedded 2-plane: w in R^2 maps to base + w1 b1 + w2 b2.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct Slice2 {
    pub base: Vec<Real>,
    pub b1: Vec<Real>,
    pub b2: Vec<Real>,
}

impl Slice2 {
    pub fn new(base: &Point, b1: &Point, b2: &Point) -> Self {
        Self {
            base: base.as_slice().to_vec(),
            b1: b1.as_slice().to_vec(),
            b2: b2.as_slice().to_vec(),
        }
    }

    /// Identity chart of R^2.
    pub fn planar() -> Self {
        Self { base: vec![0.0, 0.0], b1: vec![1.0, 0.0], b2: vec![0.0, 1.0] }
    }

    pub fn ambient(&self) -> usize {
        self.base.len()
    }

    pub fn embed(&self, w: [Real; 2]) -> Point {
        let base = Point::from_slice(&self.base);
        let b1 = Point::from_slice(&self.b1);
        let b2 = Point::from_slice(&self.b2);
        base.axpy(w[0], &b1).axpy(w[1], &b2)
    }

    /// In-plane coordinates of the projection of an ambient point.
    pub fn coords(&self, y: &Point) -> [Real; 2] {
        let base = Point::from_slice(&self.base);
        let b1 = Point::from_slice(&self.b1);
        let b2 = Point::from_slice(&self.b2);
        let d = y.sub(&base);
        [d.dot(&b1), d.dot(&b2)]
    }
}

/// Integration region. `fine` entries request radial panel refinement down to
/// the given length scale so that concentrated bubble profiles are resolved;
/// panel layout is a pure function of the descriptor.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub enum Region {
    /// Axis-aligned box, plain tensor Gauss-Legendre.
    Box { lo: Vec<Real>, hi: Vec<Real> },
    /// Ball or spherical shell around `center` (r_in = 0 for a full ball).
    Shell { center: Vec<Real>, r_in: Real, r_out: Real, fine: Option<Real> },
    /// Disc (or annulus) inside an embedded 2-plane, polar around `center2`.
    Disc { slice: Slice2, center2: [Real; 2], r_in: Real, r_out: Real, fine: Option<Real> },
    /// Square window inside an embedded 2-plane with quadtree refinement
    /// around the listed concentration points.
    SliceWindow {
        slice: Slice2,
        center2: [Real; 2],
        half_width: Real,
        refine: Vec<([Real; 2], Real)>,
    },
    /// Cylinder around an affine (m-2)-plane: tensor nodes along the plane,
    /// polar nodes in the perpendicular 2-plane.
    Tube {
        base: Vec<Real>,
        axis_basis: Vec<Vec<Real>>,
        perp_basis: Vec<Vec<Real>>,
        center_l: Vec<Real>,
        half_len: Real,
        s_max: Real,
        fine: Option<Real>,
    },
}

/// Quadrature scheme tag, recorded in report headers.
#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq, Eq)]
pub enum Scheme {
    TensorGauss,
    Spherical,
    Separable,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct QuadratureSpec {
    pub scheme: Scheme,
    pub nodes_per_axis: usize,
    pub region: Region,
    /// Fixed reduction order; always "pairwise".
    pub reduction: String,
}

impl QuadratureSpec {
    pub fn new(scheme: Scheme, nodes_per_axis: usize, region: Region) -> Self {
        Self { scheme, nodes_per_axis, region, reduction: "pairwise".to_string() }
    }
}

/// Geometric radial panels from r_in to r_out, refined down to `fine`.
fn radial_panels(r_in: Real, r_out: Real, fine: Option<Real>) -> Vec<(Real, Real)> {
    let width = r_out - r_in;
    match fine {
        Some(f) if f > 0.0 && f * 4.0 < width => {
            let mut cuts = vec![r_in];
            let mut s = f;
            while r_in + s < r_out {
                cuts.push(r_in + s);
                s *= 2.0;
            }
            cuts.push(r_out);
            cuts.windows(2).map(|w| (w[0], w[1])).collect()
        }
        _ => vec![(r_in, r_out)],
    }
}

fn radial_nodes(
    r_in: Real,
    r_out: Real,
    fine: Option<Real>,
    n: usize,
    power: i32,
) -> Vec<(Real, Real)> {
    let panels = radial_panels(r_in, r_out, fine);
    let per_panel = if panels.len() == 1 { n } else { (n / 2).max(12) };
    let gl = gauss_legendre::<Real>(per_panel);
    let mut out = Vec::with_capacity(panels.len() * per_panel);
    for (a, b) in panels {
        let c = 0.5 * (a + b);
        let h = 0.5 * (b - a);
        for &(x, w) in gl.iter() {
            let r = c + h * x;
            out.push((r, w * h * r.powi(power)));
        }
    }
    out
}

fn unit_circle_nodes(n_phi: usize) -> Vec<(Real, Real, Real)> {
    let dphi = 2.0 * std::f64::consts::PI / n_phi as Real;
    (0..n_phi)
        .map(|k| {
            let phi = dphi * k as Real;
            (phi.cos(), phi.sin(), dphi)
        })
        .collect()
}

/// Unit-sphere product rules in dimension 2..=4: (direction, weight) with
/// weights summing to the sphere area.
fn sphere_nodes(m: usize, n: usize) -> Vec<(Point, Real)> {
    match m {
        2 => unit_circle_nodes(2 * n)
            .into_iter()
            .map(|(c, s, w)| (Point::from_slice(&[c, s]), w))
            .collect(),
        3 => {
            let gl = gauss_legendre::<Real>(n);
            let mut out = Vec::new();
            for &(u, wu) in gl.iter() {
                let st = (1.0 - u * u).max(0.0).sqrt();
                for (c, s, wp) in unit_circle_nodes(2 * n) {
                    out.push((Point::from_slice(&[st * c, st * s, u]), wu * wp));
                }
            }
            out
        }
        4 => {
            let gl = gauss_legendre::<Real>(n);
            let mut out = Vec::new();
            // psi in (0, pi), weight sin^2 psi
            for &(x, wx) in gl.iter() {
                let psi = 0.5 * std::f64::consts::PI * (x + 1.0);
                let wpsi = wx * 0.5 * std::f64::consts::PI * psi.sin().powi(2);
                for &(u, wu) in gl.iter() {
                    let st = (1.0 - u * u).max(0.0).sqrt();
                    for (c, s, wp) in unit_circle_nodes(2 * n) {
                        let d = [
                            psi.sin() * st * c,
                            psi.sin() * st * s,
                            psi.sin() * u,
                            psi.cos(),
                        ];
                        out.push((Point::from_slice(&d), wpsi * wu * wp));
                    }
                }
            }
            out
        }
        _ => panic!("sphere rule only for 2 <= m <= 4, got {m}"),
    }
}

fn box_nodes(lo: &[Real], hi: &[Real], n: usize) -> Vec<(Point, Real)> {
    let m = lo.len();
    let gl = gauss_legendre::<Real>(n);
    let mut out: Vec<(Point, Real)> = vec![(Point::zeros(m), 1.0)];
    for d in 0..m {
        let c = 0.5 * (lo[d] + hi[d]);
        let h = 0.5 * (hi[d] - lo[d]);
        let mut next = Vec::with_capacity(out.len() * n);
        for (p, w) in &out {
            for &(x, wx) in gl.iter() {
                let mut q = *p;
                q.set(d, c + h * x);
                next.push((q, w * wx * h));
            }
        }
        out = next;
    }
    out
}

fn quadtree_cells(
    center: [Real; 2],
    half: Real,
    refine: &[([Real; 2], Real)],
    depth: usize,
    out: &mut Vec<([Real; 2], Real)>,
) {
    let mut split = false;
    if depth < 24 {
        for (c, scale) in refine {
            let dx = (c[0] - center[0]).abs().max((c[1] - center[1]).abs());
            if dx < 3.0 * half && half > 0.5 * scale.max(1e-300) {
                split = true;
                break;
            }
        }
    }
    if split {
        let h = 0.5 * half;
        for sx in [-1.0, 1.0] {
            for sy in [-1.0, 1.0] {
                quadtree_cells(
                    [center[0] + sx * h, center[1] + sy * h],
                    h,
                    refine,
                    depth + 1,
                    out,
                );
            }
        }
    } else {
        out.push((center, half));
    }
}

/// Build the node/weight list of a spec. Deterministic.
pub fn rule(spec: &QuadratureSpec) -> Vec<(Point, Real)> {
    let n = spec.nodes_per_axis;
    match &spec.region {
        Region::Box { lo, hi } => box_nodes(lo, hi, n),
        Region::Shell { center, r_in, r_out, fine } => {
            let c = Point::from_slice(center);
            let m = c.dim();
            let radial = radial_nodes(*r_in, *r_out, *fine, n, (m - 1) as i32);
            let sph = sphere_nodes(m, n);
            let mut out = Vec::with_capacity(radial.len() * sph.len());
            for (r, wr) in &radial {
                for (dir, wd) in &sph {
                    out.push((c.axpy(*r, dir), wr * wd));
                }
            }
            out
        }
        Region::Disc { slice, center2, r_in, r_out, fine } => {
            let radial = radial_nodes(*r_in, *r_out, *fine, n, 1);
            let circ = unit_circle_nodes(2 * n);
            let mut out = Vec::with_capacity(radial.len() * circ.len());
            for (r, wr) in &radial {
                for (cphi, sphi, wp) in &circ {
                    let w = [center2[0] + r * cphi, center2[1] + r * sphi];
                    out.push((slice.embed(w), wr * wp));
                }
            }
            out
        }
        Region::SliceWindow { slice, center2, half_width, refine } => {
            let mut cells = Vec::new();
            quadtree_cells(*center2, *half_width, refine, 0, &mut cells);
            let gl = gauss_legendre::<Real>(8);
            let mut out = Vec::with_capacity(cells.len() * 64);
            for (c, h) in &cells {
                for &(x, wx) in gl.iter() {
                    for &(y, wy) in gl.iter() {
                        let w = [c[0] + h * x, c[1] + h * y];
                        out.push((slice.embed(w), wx * wy * h * h));
                    }
                }
            }
            out
        }
        Region::Tube { base, axis_basis, perp_basis, center_l, half_len, s_max, fine } => {
            let b = Point::from_slice(base);
            let axes: Vec<Point> = axis_basis.iter().map(|v| Point::from_slice(v)).collect();
            let perp: Vec<Point> = perp_basis.iter().map(|v| Point::from_slice(v)).collect();
            let gl = gauss_legendre::<Real>(n);
            // tensor nodes along the plane
            let mut l_nodes: Vec<(Point, Real)> = vec![(b, 1.0)];
            for (d, axis) in axes.iter().enumerate() {
                let c = center_l[d];
                let mut next = Vec::with_capacity(l_nodes.len() * n);
                for (p, w) in &l_nodes {
                    for &(x, wx) in gl.iter() {
                        next.push((p.axpy(c + half_len * x, axis), w * wx * half_len));
                    }
                }
                l_nodes = next;
            }
            let radial = radial_nodes(0.0, *s_max, *fine, n, 1);
            let circ = unit_circle_nodes(2 * n);
            let mut out = Vec::with_capacity(l_nodes.len() * radial.len() * circ.len());
            for (p, wl) in &l_nodes {
                for (s, ws) in &radial {
                    for (cphi, sphi, wp) in &circ {
                        let q = p.axpy(s * cphi, &perp[0]).axpy(s * sphi, &perp[1]);
                        out.push((q, wl * ws * wp));
                    }
                }
            }
            out
        }
    }
}

const PAR_CHUNK: usize = 2048;

/// Evaluate `f` on all nodes (parallel, canonical order) and reduce with the
/// pairwise tree.
pub fn integrate<F>(f: F, spec: &QuadratureSpec) -> Result<Real, QuadError>
where
    F: Fn(&Point) -> Real + Sync,
{
    let nodes = rule(spec);
    let vals: Vec<Real> = nodes
        .par_chunks(PAR_CHUNK)
        .flat_map_iter(|chunk| chunk.iter().map(|(p, w)| f(p) * w))
        .collect();
    for (i, v) in vals.iter().enumerate() {
        if !v.is_finite() {
            return Err(QuadError::NonFiniteSample {
                index: i,
                value: *v,
                position: nodes[i].0.as_slice().to_vec(),
            });
        }
    }
    Ok(pairwise_sum(&vals))
}

/// Multi-component integrand sharing one node sweep.
pub fn integrate_many<const K: usize, F>(f: F, spec: &QuadratureSpec) -> Result<[Real; K], QuadError>
where
    F: Fn(&Point) -> [Real; K] + Sync,
{
    let nodes = rule(spec);
    let vals: Vec<[Real; K]> = nodes
        .par_chunks(PAR_CHUNK)
        .flat_map_iter(|chunk| {
            chunk.iter().map(|(p, w)| {
                let mut v = f(p);
                for x in v.iter_mut() {
                    *x *= w;
                }
                v
            })
        })
        .collect();
    for (i, v) in vals.iter().enumerate() {
        for x in v {
            if !x.is_finite() {
                return Err(QuadError::NonFiniteSample {
                    index: i,
                    value: *x,
                    position: nodes[i].0.as_slice().to_vec(),
                });
            }
        }
    }
    Ok(pairwise_sum_arrays(&vals))
}

/// Equal-weight average of `f` over the circle of radius `s_perp` around
/// `x + y_l` in the perpendicular plane. Node phases are absolute (measured
/// in the stored complement frame), so the result depends only on the circle.
pub fn circle_average<F>(
    f: F,
    ap: &crate::AffinePlane,
    y_l: &Point,
    s_perp: Real,
    n_nodes: usize,
) -> Result<Real, QuadError>
where
    F: Fn(&Point, &Point) -> Real + Sync,
{
    if s_perp <= 0.0 {
        return Err(QuadError::OnAxis(s_perp));
    }
    let n = n_nodes.max(16);
    let vals: Vec<Real> = (0..n)
        .into_par_iter()
        .map(|k| {
            let phi = 2.0 * std::f64::consts::PI * k as Real / n as Real;
            let y = ap.circle_point(y_l, s_perp, phi);
            let alpha = ap.angular_direction(phi);
            f(&y, &alpha)
        })
        .collect();
    for (i, v) in vals.iter().enumerate() {
        if !v.is_finite() {
            return Err(QuadError::NonFiniteSample { index: i, value: *v, position: vec![] });
        }
    }
    Ok(pairwise_sum(&vals) / n as Real)
}

/// Parametrized (m-2)-surface over a window in the base plane, with its
/// induced area element.
pub trait ParamSurface: Sync {
    fn dim_param(&self) -> usize;
    fn embed(&self, t: &[Real]) -> Point;
    /// sqrt(det(I + grad^T grad)) at t.
    fn area_factor(&self, t: &[Real]) -> Real;
    /// Upper bound for |grad| over the window.
    fn lipschitz_bound(&self) -> Real;
}

/// Tensor quadrature of `f` over a graph window with the induced area element.
pub fn integrate_graph<F>(
    f: F,
    graph: &dyn ParamSurface,
    window: &[(Real, Real)],
    nodes_per_axis: usize,
) -> Result<Real, QuadError>
where
    F: Fn(&Point) -> Real + Sync,
{
    if graph.lipschitz_bound() >= 0.5 {
        return Err(QuadError::SteepGraph(graph.lipschitz_bound()));
    }
    let d = graph.dim_param();
    assert_eq!(window.len(), d);
    let gl = gauss_legendre::<Real>(nodes_per_axis);
    let mut params: Vec<(Vec<Real>, Real)> = vec![(vec![], 1.0)];
    for dim in 0..d {
        let (a, b) = window[dim];
        let c = 0.5 * (a + b);
        let h = 0.5 * (b - a);
        let mut next = Vec::with_capacity(params.len() * nodes_per_axis);
        for (t, w) in &params {
            for &(x, wx) in gl.iter() {
                let mut t2 = t.clone();
                t2.push(c + h * x);
                next.push((t2, w * wx * h));
            }
        }
        params = next;
    }
    let vals: Vec<Real> = params
        .par_iter()
        .map(|(t, w)| {
            let y = graph.embed(t);
            f(&y) * graph.area_factor(t) * w
        })
        .collect();
    for (i, v) in vals.iter().enumerate() {
        if !v.is_finite() {
            return Err(QuadError::NonFiniteSample {
                index: i,
                value: *v,
                position: params[i].0.clone(),
            });
        }
    }
    Ok(pairwise_sum(&vals))
}

// serde for SVec<f64> used inside Region
impl Serialize for SVec<f64> {
    fn serialize<Se: serde::Serializer>(&self, s: Se) -> Result<Se::Ok, Se::Error> {
        self.as_slice().serialize(s)
    }
}

impl<'de> Deserialize<'de> for SVec<f64> {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let v: Vec<f64> = Vec::deserialize(d)?;
        Ok(SVec::from_slice(&v))
    }
}
