//! Best symmetry planes from the energy tensor and the approximating
//! submanifold obtained by a damped Newton solve of the projected-gradient
//! condition.

use crate::energy::{self, EnergyError, EnergyTensor, QuadOpts};
use crate::fields::MapField;
use crate::quad::ParamSurface;
use crate::{AffinePlane, HeatMollifier, Plane, Point, Real};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum BestFitError {
    #[error("degenerate spectrum: gap/theta = {0:.3e} at x = {1:?}")]
    DegenerateSpectrum(Real, Vec<Real>),
    #[error("Newton diverged at lattice node {node} (residual {residual:.3e})")]
    NewtonDiverged { node: usize, residual: Real },
    #[error(transparent)]
    Energy(#[from] EnergyError),
}

/// Best (m-2)-plane at (x, r): span of the m-2 smallest eigenvectors of the
/// energy tensor.
#[derive(Clone, Debug)]
pub struct BestPlaneResult {
    pub plane: Plane,
    /// Directional energy of the best plane: sum of the m-2 smallest
    /// eigenvalues.
    pub theta_l: Real,
    /// lambda_2 - lambda_3.
    pub gap: Real,
    pub tensor: EnergyTensor,
}

const DEGENERACY_FLOOR: Real = 1e-6;

pub fn best_plane(
    f: &MapField,
    mol: &HeatMollifier,
    x: &Point,
    r: Real,
    opts: &QuadOpts,
) -> Result<BestPlaneResult, BestFitError> {
    let tensor = energy::energy_tensor(f, mol, x, r, opts)?;
    let th = tensor.theta();
    let gap = tensor.eigenvalues[1] - tensor.eigenvalues[2];
    if !(gap > DEGENERACY_FLOOR * th.max(1e-300)) {
        return Err(BestFitError::DegenerateSpectrum(
            gap / th.max(1e-300),
            x.as_slice().to_vec(),
        ));
    }
    let plane = tensor.small_eigenplane();
    let theta_l: Real = tensor.eigenvalues[2..].iter().sum();
    Ok(BestPlaneResult { plane, theta_l, gap, tensor })
}

/// The 2-vector Newton residual: r * pi_{L_A-perp}[ pi_perp_{z,r} grad
/// theta(z, r) ], expressed in the fixed perpendicular basis of `la`.
pub fn theta_el_map(
    f: &MapField,
    mol: &HeatMollifier,
    z: &Point,
    r: Real,
    la: &Plane,
    opts: &QuadOpts,
) -> Result<[Real; 2], BestFitError> {
    let mm = energy::moments(f, mol, z, r, opts)?;
    let th = mm.tensor.theta();
    let gap = mm.tensor.eigenvalues[1] - mm.tensor.eigenvalues[2];
    if !(gap > DEGENERACY_FLOOR * th.max(1e-300)) {
        return Err(BestFitError::DegenerateSpectrum(
            gap / th.max(1e-300),
            z.as_slice().to_vec(),
        ));
    }
    let best = mm.tensor.small_eigenplane();
    let g = best.project_perp(&mm.grad_direct).scale(r);
    let pb = la.perp_basis();
    Ok([g.dot(&pb[0]), g.dot(&pb[1])])
}

/// Uniform lattice over a window of the base plane (1-D for m = 3, 2-D for
/// m = 4).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Lattice {
    pub dims: usize,
    pub origin: Vec<Real>,
    pub spacing: Real,
    pub counts: Vec<usize>,
}

impl Lattice {
    pub fn node_param(&self, flat: usize) -> Vec<Real> {
        let mut rest = flat;
        let mut out = vec![0.0; self.dims];
        for d in 0..self.dims {
            let stride: usize = self.counts[d + 1..].iter().product();
            let idx = rest / stride;
            rest %= stride;
            out[d] = self.origin[d] + self.spacing * idx as Real;
        }
        out
    }

    pub fn len(&self) -> usize {
        self.counts.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Sampled graph of the scale-r approximating submanifold over the base
/// plane, with per-node Newton residuals.
#[derive(Clone, Debug)]
pub struct SubmanifoldGraph {
    base: AffinePlane,
    lattice: Lattice,
    /// Graph values in the perpendicular basis of the base plane.
    values: Vec<[Real; 2]>,
    residuals: Vec<Real>,
    scale: Real,
}

impl SubmanifoldGraph {
    /// The flat graph (identically zero) over a symmetric window.
    pub fn flat(base: AffinePlane, half_width: Real, spacing: Real) -> Self {
        let dims = base.plane.dim_plane();
        let n = ((2.0 * half_width / spacing).round() as usize + 1).max(2);
        let lattice = Lattice {
            dims,
            origin: vec![-half_width; dims],
            spacing: 2.0 * half_width / (n - 1) as Real,
            counts: vec![n; dims],
        };
        let len = lattice.len();
        Self { base, lattice, values: vec![[0.0, 0.0]; len], residuals: vec![0.0; len], scale: 0.0 }
    }

    pub fn base_plane(&self) -> &AffinePlane {
        &self.base
    }

    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    pub fn values(&self) -> &[[Real; 2]] {
        &self.values
    }

    pub fn residuals(&self) -> &[Real] {
        &self.residuals
    }

    pub fn scale(&self) -> Real {
        self.scale
    }

    fn value_at_index(&self, idx: &[usize]) -> [Real; 2] {
        let mut flat = 0;
        for d in 0..self.lattice.dims {
            flat = flat * self.lattice.counts[d] + idx[d];
        }
        self.values[flat]
    }

    /// Catmull-Rom interpolation of the graph at plane parameters `t`
    /// (separable in each lattice direction).
    pub fn value(&self, t: &[Real]) -> [Real; 2] {
        match self.lattice.dims {
            1 => self.interp_1d(t[0]),
            2 => {
                // separable: interpolate rows then across
                let (i1, f1) = self.cell(1, t[1]);
                let mut rows = [[0.0; 2]; 4];
                for (k, row) in rows.iter_mut().enumerate() {
                    let j = (i1 + k).saturating_sub(1).min(self.lattice.counts[1] - 1);
                    *row = self.interp_1d_along(t[0], j);
                }
                catmull(rows, f1)
            }
            _ => unreachable!("graphs are 1- or 2-dimensional"),
        }
    }

    fn cell(&self, d: usize, t: Real) -> (usize, Real) {
        let rel = (t - self.lattice.origin[d]) / self.lattice.spacing;
        let max_cell = self.lattice.counts[d] - 2;
        let cell = rel.floor().clamp(0.0, max_cell as Real) as usize;
        (cell, rel - cell as Real)
    }

    fn interp_1d(&self, t: Real) -> [Real; 2] {
        let (i, fr) = self.cell(0, t);
        let n = self.lattice.counts[0];
        let grab = |j: isize| -> [Real; 2] {
            let j = j.clamp(0, n as isize - 1) as usize;
            self.value_at_index(&[j])
        };
        catmull(
            [grab(i as isize - 1), grab(i as isize), grab(i as isize + 1), grab(i as isize + 2)],
            fr,
        )
    }

    fn interp_1d_along(&self, t: Real, j: usize) -> [Real; 2] {
        let (i, fr) = self.cell(0, t);
        let n = self.lattice.counts[0];
        let grab = |ii: isize| -> [Real; 2] {
            let ii = ii.clamp(0, n as isize - 1) as usize;
            self.value_at_index(&[ii, j])
        };
        catmull(
            [grab(i as isize - 1), grab(i as isize), grab(i as isize + 1), grab(i as isize + 2)],
            fr,
        )
    }

    /// Ambient point of the graph over plane parameters `t`.
    pub fn embed_param(&self, t: &[Real]) -> Point {
        let v = self.value(t);
        let mut y = self.base.base;
        for (d, b) in self.base.plane.basis().iter().enumerate() {
            y = y.axpy(t[d], b);
        }
        let pb = self.base.plane.perp_basis();
        y.axpy(v[0], &pb[0]).axpy(v[1], &pb[1])
    }

    /// Graph gradient by central differences of the interpolant.
    pub fn grad(&self, t: &[Real]) -> Vec<[Real; 2]> {
        let h = 0.5 * self.lattice.spacing;
        (0..self.lattice.dims)
            .map(|d| {
                let mut tp = t.to_vec();
                let mut tm = t.to_vec();
                tp[d] += h;
                tm[d] -= h;
                let vp = self.value(&tp);
                let vm = self.value(&tm);
                [(vp[0] - vm[0]) / (2.0 * h), (vp[1] - vm[1]) / (2.0 * h)]
            })
            .collect()
    }

    /// Sup of |t_r| over the lattice.
    pub fn sup_value(&self) -> Real {
        self.values
            .iter()
            .map(|v| (v[0] * v[0] + v[1] * v[1]).sqrt())
            .fold(0.0, Real::max)
    }

    /// Sup of |grad t_r| by difference quotients.
    pub fn sup_grad(&self) -> Real {
        let mut out: Real = 0.0;
        let l = &self.lattice;
        if l.dims == 1 {
            for i in 1..l.counts[0] {
                let a = self.value_at_index(&[i - 1]);
                let b = self.value_at_index(&[i]);
                let g = ((b[0] - a[0]).powi(2) + (b[1] - a[1]).powi(2)).sqrt() / l.spacing;
                out = out.max(g);
            }
        } else {
            for i in 0..l.counts[0] {
                for j in 0..l.counts[1] {
                    if i > 0 {
                        let a = self.value_at_index(&[i - 1, j]);
                        let b = self.value_at_index(&[i, j]);
                        out = out.max(
                            ((b[0] - a[0]).powi(2) + (b[1] - a[1]).powi(2)).sqrt() / l.spacing,
                        );
                    }
                    if j > 0 {
                        let a = self.value_at_index(&[i, j - 1]);
                        let b = self.value_at_index(&[i, j]);
                        out = out.max(
                            ((b[0] - a[0]).powi(2) + (b[1] - a[1]).powi(2)).sqrt() / l.spacing,
                        );
                    }
                }
            }
        }
        out
    }

    /// Sup over lattice nodes of the distance to another graph.
    pub fn sup_distance(&self, other: &SubmanifoldGraph) -> Real {
        let mut out: Real = 0.0;
        for flat in 0..self.lattice.len() {
            let t = self.lattice.node_param(flat);
            let a = self.value(&t);
            let b = other.value(&t);
            out = out.max(((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt());
        }
        out
    }

    /// Sup over lattice nodes of the distance to a parametric curve
    /// tau: window -> perp plane.
    pub fn sup_distance_to_curve(&self, tau: &dyn Fn(&[Real]) -> [Real; 2]) -> Real {
        let mut out: Real = 0.0;
        for flat in 0..self.lattice.len() {
            let t = self.lattice.node_param(flat);
            let a = self.value(&t);
            let b = tau(&t);
            out = out.max(((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt());
        }
        out
    }
}

fn catmull(p: [[Real; 2]; 4], t: Real) -> [Real; 2] {
    let mut out = [0.0; 2];
    for a in 0..2 {
        let (p0, p1, p2, p3) = (p[0][a], p[1][a], p[2][a], p[3][a]);
        out[a] = p1
            + 0.5
                * t
                * (p2 - p0
                    + t * (2.0 * p0 - 5.0 * p1 + 4.0 * p2 - p3
                        + t * (3.0 * (p1 - p2) + p3 - p0)));
    }
    out
}

impl ParamSurface for SubmanifoldGraph {
    fn dim_param(&self) -> usize {
        self.lattice.dims
    }

    fn embed(&self, t: &[Real]) -> Point {
        self.embed_param(t)
    }

    fn area_factor(&self, t: &[Real]) -> Real {
        let g = self.grad(t);
        match self.lattice.dims {
            1 => (1.0 + g[0][0] * g[0][0] + g[0][1] * g[0][1]).sqrt(),
            2 => {
                // det(I + J^T J) for the 2x2 Gram of the graph gradient
                let g11 = 1.0 + g[0][0] * g[0][0] + g[0][1] * g[0][1];
                let g22 = 1.0 + g[1][0] * g[1][0] + g[1][1] * g[1][1];
                let g12 = g[0][0] * g[1][0] + g[0][1] * g[1][1];
                (g11 * g22 - g12 * g12).sqrt()
            }
            _ => unreachable!(),
        }
    }

    fn lipschitz_bound(&self) -> Real {
        self.sup_grad()
    }
}

/// Options for the Newton solve.
#[derive(Clone, Debug)]
pub struct TrOptions<'a> {
    /// Warm start (for example the previous scale's graph); zero otherwise.
    pub init: Option<&'a SubmanifoldGraph>,
    /// Bubble-radius lookup: nodes with r_x >= 3r copy the initial graph.
    pub radius: Option<(&'a SubmanifoldGraph, &'a crate::mollifier::RadiusFn)>,
    pub max_iter: usize,
}

impl Default for TrOptions<'_> {
    fn default() -> Self {
        Self { init: None, radius: None, max_iter: 30 }
    }
}

/// Per-node damped Newton on the projected-gradient residual; lattice
/// spacing r/4 over the window.
pub fn build_tr(
    f: &MapField,
    mol: &HeatMollifier,
    la: &AffinePlane,
    r: Real,
    half_width: Real,
    newton_tol: Real,
    opts: &QuadOpts,
    tr_opts: &TrOptions,
) -> Result<SubmanifoldGraph, BestFitError> {
    use rayon::prelude::*;

    let mut graph = SubmanifoldGraph::flat(la.clone(), half_width, r / 4.0);
    graph.scale = r;
    if let Some(init) = tr_opts.init {
        for flat in 0..graph.lattice.len() {
            let t = graph.lattice.node_param(flat);
            graph.values[flat] = init.value(&t);
        }
    }
    let pb = la.plane.perp_basis().to_vec();
    let h_jac = 1e-4 * r;

    let results: Vec<Result<([Real; 2], Real), BestFitError>> = (0..graph.lattice.len())
        .into_par_iter()
        .map(|flat| {
            let t = graph.lattice.node_param(flat);
            let mut v = graph.values[flat];
            // frozen nodes copy the input manifold
            if let Some((base_graph, radius_fn)) = &tr_opts.radius {
                let x = graph.embed_node(&t, v, &pb, la);
                let r_x = radius_fn.eval(base_graph, &x);
                if r_x >= 3.0 * r {
                    let w = base_graph.value(&t);
                    return Ok((w, 0.0));
                }
            }
            let theta_map = |w: [Real; 2]| -> Result<[Real; 2], BestFitError> {
                let z = graph.embed_node(&t, w, &pb, la);
                theta_el_map(f, mol, &z, r, &la.plane, opts)
            };
            let mut res = theta_map(v)?;
            let mut rn = (res[0] * res[0] + res[1] * res[1]).sqrt();
            let mut it = 0;
            while rn > newton_tol {
                if it >= tr_opts.max_iter {
                    return Err(BestFitError::NewtonDiverged { node: flat, residual: rn });
                }
                it += 1;
                // forward-difference 2x2 Jacobian
                let mut jac = [[0.0; 2]; 2];
                for c in 0..2 {
                    let mut wp = v;
                    wp[c] += h_jac;
                    let rp = theta_map(wp)?;
                    jac[0][c] = (rp[0] - res[0]) / h_jac;
                    jac[1][c] = (rp[1] - res[1]) / h_jac;
                }
                let det = jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0];
                if det.abs() < 1e-300 {
                    return Err(BestFitError::NewtonDiverged { node: flat, residual: rn });
                }
                let step = [
                    -(jac[1][1] * res[0] - jac[0][1] * res[1]) / det,
                    -(-jac[1][0] * res[0] + jac[0][0] * res[1]) / det,
                ];
                // damping: halve until the residual decreases
                let mut accepted = false;
                let mut scale = 1.0;
                for _ in 0..=8 {
                    let cand = [v[0] + scale * step[0], v[1] + scale * step[1]];
                    let rc = theta_map(cand)?;
                    let rcn = (rc[0] * rc[0] + rc[1] * rc[1]).sqrt();
                    if rcn < rn {
                        v = cand;
                        res = rc;
                        rn = rcn;
                        accepted = true;
                        break;
                    }
                    scale *= 0.5;
                }
                if !accepted {
                    return Err(BestFitError::NewtonDiverged { node: flat, residual: rn });
                }
            }
            Ok((v, rn))
        })
        .collect();

    for (flat, r) in results.into_iter().enumerate() {
        let (v, resid) = r?;
        graph.values[flat] = v;
        graph.residuals[flat] = resid;
    }
    Ok(graph)
}

impl SubmanifoldGraph {
    fn embed_node(&self, t: &[Real], v: [Real; 2], pb: &[Point], la: &AffinePlane) -> Point {
        let mut y = la.base;
        for (d, b) in la.plane.basis().iter().enumerate() {
            y = y.axpy(t[d], b);
        }
        y.axpy(v[0], &pb[0]).axpy(v[1], &pb[1])
    }
}

/// Compare the two equivalent projected Euler-Lagrange expressions: the
/// direct projected gradient and the stationary-route integral, both as
/// 2-vectors in the best plane's perpendicular basis.
#[derive(Clone, Debug)]
pub struct ElEquivalence {
    pub lhs: [Real; 2],
    pub rhs: [Real; 2],
    pub lhs_norm: Real,
    pub rhs_norm: Real,
}

pub fn el_equivalence_check(
    f: &MapField,
    mol: &HeatMollifier,
    x: &Point,
    r: Real,
    opts: &QuadOpts,
) -> Result<ElEquivalence, BestFitError> {
    let mm = energy::moments(f, mol, x, r, opts)?;
    let best = mm.tensor.small_eigenplane();
    let perp = best.perp_basis();
    let gd = best.project_perp(&mm.grad_direct);
    let gs = best.project_perp(&mm.grad_stationary);
    let lhs = [gd.dot(&perp[0]), gd.dot(&perp[1])];
    let rhs = [gs.dot(&perp[0]), gs.dot(&perp[1])];
    Ok(ElEquivalence {
        lhs,
        rhs,
        lhs_norm: (lhs[0] * lhs[0] + lhs[1] * lhs[1]).sqrt(),
        rhs_norm: (rhs[0] * rhs[0] + rhs[1] * rhs[1]).sqrt(),
    })
}
