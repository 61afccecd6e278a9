//! Quantitative symmetry scores, stratification sampling, certification of
//! annular and bubble regions, and the two-sided cone-splitting evaluator.

use crate::bestfit::SubmanifoldGraph;
use crate::energy::{self, EnergyError, QuadOpts};
use crate::fields::MapField;
use crate::geometry::GeometryError;
use crate::mollifier::RadiusFn;
use crate::quad::{self, Slice2};
use crate::{HeatMollifier, Plane, Point, Real};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum RegionError {
    #[error("points not alpha-linearly independent at scale {scale} (margin {margin:.3e})")]
    DegenerateConfiguration { scale: Real, margin: Real },
    #[error(transparent)]
    Energy(#[from] EnergyError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Quad(#[from] quad::QuadError),
}

// ---------------------------------------------------------------------------
// Symmetry scores and stratification
// ---------------------------------------------------------------------------

/// Defining integral of quantitative symmetry for one candidate plane:
/// theta(x, r; L) + theta(x, r; n_{L-perp}).
fn plane_score(
    f: &MapField,
    mol: &HeatMollifier,
    x: &Point,
    r: Real,
    plane: &Plane,
    opts: &QuadOpts,
) -> Result<Real, EnergyError> {
    let set = energy::partial_energies(f, mol, x, r, plane, opts)?;
    Ok(set.plane + set.radial_perp)
}

#[derive(Clone, Debug)]
pub struct SymmetryScore {
    pub x: Point,
    pub r: Real,
    pub k: usize,
    pub score: Real,
    pub witness: Plane,
}

/// Minimize the defining integral over the eigen-subspace candidates of the
/// energy tensor (all k-subsets of eigenvectors) plus an optional supplied
/// plane.
pub fn symmetry_score(
    f: &MapField,
    mol: &HeatMollifier,
    x: &Point,
    r: Real,
    k: usize,
    extra: Option<&Plane>,
    opts: &QuadOpts,
) -> Result<SymmetryScore, RegionError> {
    let m = f.dim();
    assert!(k <= m);
    let mut candidates: Vec<Plane> = Vec::new();
    if k == 0 {
        candidates.push(Plane::trivial(m));
    } else {
        let tensor = energy::energy_tensor(f, mol, x, r, opts)?;
        let idx: Vec<usize> = (0..m).collect();
        for subset in k_subsets(&idx, k) {
            let basis: Vec<Point> = subset.iter().map(|&i| tensor.eigenvectors[i]).collect();
            candidates.push(Plane::new(m, &basis)?);
        }
    }
    if let Some(p) = extra {
        if p.dim_plane() == k {
            candidates.push(p.clone());
        }
    }
    let mut best: Option<(Real, Plane)> = None;
    for cand in candidates {
        let s = plane_score(f, mol, x, r, &cand, opts)?;
        if best.as_ref().map_or(true, |(b, _)| s < *b) {
            best = Some((s, cand));
        }
    }
    let (score, witness) = best.expect("candidate set nonempty");
    Ok(SymmetryScore { x: *x, r, k, score, witness })
}

fn k_subsets(items: &[usize], k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![vec![]];
    }
    if items.len() < k {
        return vec![];
    }
    let mut out = Vec::new();
    for (i, &first) in items.iter().enumerate() {
        for mut rest in k_subsets(&items[i + 1..], k - 1) {
            let mut s = vec![first];
            s.append(&mut rest);
            out.push(s);
        }
    }
    out
}

/// Per-point stratification labels over a scale pyramid.
#[derive(Clone, Debug, Serialize)]
pub struct StratPoint {
    pub x: Vec<Real>,
    /// scores[k][j] = sigma_k at scales[j]
    pub scores: Vec<Vec<Real>>,
    /// symmetric[k] = some scale admits (k, eps)-symmetry
    pub symmetric: Vec<bool>,
    /// Largest k with a (k, eps)-symmetric scale; -1 when none.
    pub k_star: i32,
    /// strata[k] = membership in S^k_eps (no scale is (k+1, eps)-symmetric).
    pub strata: Vec<bool>,
}

#[derive(Clone, Debug, Serialize)]
pub struct StratTable {
    pub eps: Real,
    pub scales: Vec<Real>,
    pub points: Vec<StratPoint>,
}

pub fn stratification_sample(
    f: &MapField,
    mol: &HeatMollifier,
    grid: &[Point],
    scales: &[Real],
    eps: Real,
    extra: Option<&Plane>,
    opts: &QuadOpts,
) -> Result<StratTable, RegionError> {
    let m = f.dim();
    let full: Vec<usize> = (0..m).collect();
    let mut points = Vec::with_capacity(grid.len());
    for x in grid {
        let mut scores = vec![vec![0.0; scales.len()]; m + 1];
        for k in 0..=m {
            for (j, &r) in scales.iter().enumerate() {
                scores[k][j] = if k == m {
                    // L = R^m: the score reduces to the plane term
                    plane_score(f, mol, x, r, &Plane::coordinate(m, &full), opts)?
                } else {
                    symmetry_score(f, mol, x, r, k, extra, opts)?.score
                };
            }
        }
        let symmetric: Vec<bool> = (0..=m).map(|k| scores[k].iter().any(|&s| s <= eps)).collect();
        let k_star = (0..=m).rev().find(|&k| symmetric[k]).map(|k| k as i32).unwrap_or(-1);
        let strata: Vec<bool> = (0..m).map(|k| !symmetric[k + 1]).collect();
        points.push(StratPoint { x: x.as_slice().to_vec(), scores, symmetric, k_star, strata });
    }
    Ok(StratTable { eps, scales: scales.to_vec(), points })
}

// ---------------------------------------------------------------------------
// Certificates
// ---------------------------------------------------------------------------

/// Certified region with its condition breakdown; `certified_delta` is the
/// max over the breakdown entries that participate in the delta bound.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RegionCertificate {
    pub kind: String,
    pub certified_delta: Real,
    pub breakdown: Vec<(String, Real)>,
    /// Everything needed to recompute the certificate from the field.
    pub descriptor: serde_json::Value,
    pub notes: Vec<String>,
}

impl RegionCertificate {
    pub fn entry(&self, name: &str) -> Option<Real> {
        self.breakdown.iter().find(|(n, _)| n == name).map(|(_, v)| *v)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AnnularSampleSpec {
    /// Geometric r-grid size per node.
    pub n_scales: usize,
    /// Upper end of the pinching scan (desk-domain truncation of the paper
    /// scale range).
    pub r_max: Real,
    /// Nontriviality floor for the inner-radius energy.
    pub eps0: Real,
}

impl Default for AnnularSampleSpec {
    fn default() -> Self {
        Self { n_scales: 8, r_max: 2.0, eps0: 0.1 }
    }
}

/// Certify an annular region: graph norms (a1), pinching over the scale
/// range (a2), and the nontriviality floor (a3).
pub fn annular_certificate(
    f: &MapField,
    mol: &HeatMollifier,
    graph: &SubmanifoldGraph,
    radius: &RadiusFn,
    spec: &AnnularSampleSpec,
    opts: &QuadOpts,
) -> Result<RegionCertificate, RegionError> {
    // (a1) graph norms: |t| + |grad t| + r_x |hess t|
    let sup_v = graph.sup_value();
    let sup_g = graph.sup_grad();
    let lat = graph.lattice().clone();
    let mut sup_h: Real = 0.0;
    for flat in 0..lat.len() {
        let t = lat.node_param(flat);
        let x = graph.embed_param(&t);
        let r_x = radius.eval(graph, &x);
        let h = lat.spacing;
        for d in 0..lat.dims {
            let mut tp = t.clone();
            let mut tm = t.clone();
            tp[d] += h;
            tm[d] -= h;
            let (vp, v0, vm) = (graph.value(&tp), graph.value(&t), graph.value(&tm));
            let hess = (((vp[0] - 2.0 * v0[0] + vm[0]) / (h * h)).powi(2)
                + ((vp[1] - 2.0 * v0[1] + vm[1]) / (h * h)).powi(2))
            .sqrt();
            sup_h = sup_h.max(r_x * hess);
        }
    }
    let a1 = sup_v + sup_g + sup_h;

    // (a2) pinching over x in T, r in [r_x, r_max] geometric; (a3) floor
    let mut a2: Real = 0.0;
    let mut a3_min = Real::INFINITY;
    for flat in 0..lat.len() {
        let t = lat.node_param(flat);
        let x = graph.embed_param(&t);
        let r_x = radius.eval(graph, &x).max(1e-6);
        let ratio = (spec.r_max / r_x).max(1.0);
        for j in 0..spec.n_scales {
            let r = r_x * ratio.powf(j as Real / (spec.n_scales - 1).max(1) as Real);
            let p = energy::pinching(f, mol, &x, r, opts)?;
            a2 = a2.max(p);
        }
        let th = energy::theta(f, mol, &x, r_x, opts)?;
        a3_min = a3_min.min(th);
    }

    let certified_delta = a1.max(a2);
    Ok(RegionCertificate {
        kind: "annular".into(),
        certified_delta,
        breakdown: vec![
            ("a1_graph_norms".into(), a1),
            ("a2_max_pinching".into(), a2),
            ("a3_min_theta_at_inner_radius".into(), a3_min),
            ("a3_floor".into(), spec.eps0),
        ],
        descriptor: serde_json::json!({
            "field": f.meta(),
            "radius": radius,
            "sample": spec,
            "lattice": graph.lattice(),
            "graph_values": graph.values(),
            "scale": graph.scale(),
            "nodes_per_axis": opts.nodes_per_axis,
        }),
        notes: vec![
            "pinching scan truncated to the desk domain r <= r_max".into(),
            "a3 is reported against the configured floor, not folded into certified_delta"
                .into(),
        ],
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BubbleCertSpec {
    /// Sample lattice resolution per axis for the sup-norm conditions.
    pub n_samples: usize,
    /// epsilon floor for the model slice energy (b3).
    pub eps_floor: Real,
}

impl Default for BubbleCertSpec {
    fn default() -> Self {
        Self { n_samples: 12, eps_floor: 0.1 }
    }
}

/// Certify a bubble region around `center` at scale `r` with respect to a
/// 2-D model field on the perpendicular slice; excluded balls are given in
/// slice coordinates.
#[allow(clippy::too_many_arguments)]
pub fn bubble_certificate(
    f: &MapField,
    mol: &HeatMollifier,
    center: &Point,
    r: Real,
    la: &Plane,
    excluded: &[([Real; 2], Real)],
    model: &MapField,
    spec: &BubbleCertSpec,
    opts: &QuadOpts,
) -> Result<RegionCertificate, RegionError> {
    assert_eq!(model.dim(), 2, "bubble model is a 2-D field");
    let m = f.dim();
    let pb = la.perp_basis();
    let slice = Slice2::new(center, &pb[0], &pb[1]);
    let big_r = mol.r_cutoff();

    let in_excluded = |w: [Real; 2], inflate: Real| {
        excluded
            .iter()
            .any(|(c, rj)| ((w[0] - c[0]).powi(2) + (w[1] - c[1]).powi(2)).sqrt() < rj * inflate)
    };

    let n = spec.n_samples;
    let basis = la.basis().to_vec();
    let b1s = Point::from_slice(&slice.b1);
    let b2s = Point::from_slice(&slice.b2);
    let mut b1: Real = 0.0;
    let mut b2: Real = 0.0;
    let sample = |radius: Real, inflate_excl: Real, out_b1: &mut Real, out_b2: &mut Real| {
        let steps: Vec<Real> =
            (0..n).map(|i| -radius + 2.0 * radius * i as Real / (n - 1) as Real).collect();
        let mut coords = vec![0usize; m];
        loop {
            let w = [steps[coords[0]], steps[coords[1]]];
            let mut y = center.axpy(w[0], &b1s).axpy(w[1], &b2s);
            for (d, b) in basis.iter().enumerate() {
                y = y.axpy(steps[coords[2 + d]], b);
            }
            let dist = y.sub(center).norm();
            if dist <= radius && !in_excluded(w, inflate_excl) {
                let jac = f.jacobian(&y);
                let mut l_energy = 0.0;
                for b in &basis {
                    l_energy += crate::fields::norm3_sq(&jac.dir_deriv(b));
                }
                *out_b1 = out_b1.max(r * r * l_energy);
                let bu = model.eval(&Point::from_slice(&w));
                let uu = f.eval(&y);
                let mut du2 = 0.0;
                for a in 0..3 {
                    du2 += (bu[a] - uu[a]).powi(2);
                }
                let bj = model.jacobian(&Point::from_slice(&w));
                let mut dj2 = 0.0;
                for (j, bvec) in [&b1s, &b2s].iter().enumerate() {
                    let fu = jac.dir_deriv(bvec);
                    for a in 0..3 {
                        dj2 += (bj.row(j)[a] - fu[a]).powi(2);
                    }
                }
                *out_b2 = out_b2.max(du2 + r * r * dj2);
            }
            let mut d = 0;
            loop {
                coords[d] += 1;
                if coords[d] < n {
                    break;
                }
                coords[d] = 0;
                d += 1;
                if d == m {
                    return;
                }
            }
        }
    };
    sample(r, 1.0, &mut b1, &mut b2);
    let mut b1_infl: Real = 0.0;
    let mut b2_infl: Real = 0.0;
    sample(big_r.min(4.0) * r, 1.0 / big_r, &mut b1_infl, &mut b2_infl);
    b2 = b2.max(b2_infl);

    // (b3) model slice energies inside and outside the region
    let fine = bubble_scale(model).unwrap_or(r);
    let model_total = {
        let spec2 = quad::QuadratureSpec::new(
            quad::Scheme::TensorGauss,
            opts.nodes_per_axis,
            quad::Region::Disc {
                slice: Slice2::planar(),
                center2: [0.0, 0.0],
                r_in: 0.0,
                r_out: 400.0 * r.max(1.0),
                fine: Some(fine),
            },
        );
        quad::integrate(|w| model.energy_density(w), &spec2)?
    };
    let model_inside = {
        let spec2 = quad::QuadratureSpec::new(
            quad::Scheme::TensorGauss,
            opts.nodes_per_axis,
            quad::Region::Disc {
                slice: Slice2::planar(),
                center2: [0.0, 0.0],
                r_in: 0.0,
                r_out: r,
                fine: Some(fine),
            },
        );
        quad::integrate(
            |w| {
                if in_excluded([w.get(0), w.get(1)], 1.0) {
                    0.0
                } else {
                    model.energy_density(w)
                }
            },
            &spec2,
        )?
    };
    let b3_complement = model_total - model_inside;
    let b4 = excluded.iter().map(|(_, rj)| rj / r).fold(Real::INFINITY, Real::min);

    let certified_delta = b1.max(b2);
    Ok(RegionCertificate {
        kind: "bubble".into(),
        certified_delta,
        breakdown: vec![
            ("b1_max_l_energy".into(), b1),
            ("b2_max_model_misfit".into(), b2),
            ("b3_model_energy_inside".into(), model_inside),
            ("b3_model_energy_complement".into(), b3_complement),
            ("b3_floor".into(), spec.eps_floor),
            ("b4_min_radius_ratio".into(), if b4.is_finite() { b4 } else { 0.0 }),
        ],
        descriptor: serde_json::json!({
            "field": f.meta(),
            "center": center.as_slice(),
            "r": r,
            "excluded": excluded,
            "model": model.meta(),
            "spec": spec,
            "nodes_per_axis": opts.nodes_per_axis,
        }),
        notes: vec![],
    })
}

fn bubble_scale(model: &MapField) -> Option<Real> {
    match model.concentration() {
        crate::fields::Concentration::Points { scale, .. } => Some(*scale),
        crate::fields::Concentration::Tube { radius, .. } => Some(*radius),
        crate::fields::Concentration::None => None,
    }
}

// ---------------------------------------------------------------------------
// Cone splitting
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ConeSplitVariant {
    /// Plane energy plus perpendicular radial energy vs pinching at 1.2 r.
    Standard,
    /// Adds the full weighted perpendicular energy; pinching at 1.4 r.
    /// Requires k = m - 2.
    TopStratum,
}

#[derive(Clone, Debug, Serialize)]
pub struct ConeSplit {
    pub lhs: Real,
    pub rhs: Real,
    pub ratio: Real,
    pub variant: ConeSplitVariant,
}

const ALPHA_INDEPENDENCE: Real = 0.01;

/// Two-sided cone-splitting evaluation at alpha-independent points
/// x_0, ..., x_k.
pub fn cone_splitting_check(
    f: &MapField,
    mol: &HeatMollifier,
    points: &[Point],
    r: Real,
    variant: ConeSplitVariant,
    opts: &QuadOpts,
) -> Result<ConeSplit, RegionError> {
    assert!(points.len() >= 2);
    let x0 = points[0];
    // alpha-linear independence at scale r: each next point stays off the
    // affine span of the previous ones by alpha * r
    let mut span: Vec<Point> = Vec::new();
    for xi in &points[1..] {
        let mut w = xi.sub(&x0);
        for b in &span {
            let c = w.dot(b);
            w = w.axpy(-c, b);
        }
        let margin = w.norm();
        if margin < ALPHA_INDEPENDENCE * r {
            return Err(RegionError::DegenerateConfiguration { scale: r, margin });
        }
        span.push(w.normalized());
    }
    let plane = Plane::new(f.dim(), &span)?;
    let set = energy::partial_energies(f, mol, &x0, r, &plane, opts)?;
    let (lhs, scale_factor) = match variant {
        ConeSplitVariant::Standard => (set.plane + set.radial_perp, 1.2),
        ConeSplitVariant::TopStratum => {
            assert_eq!(plane.codim(), 2, "top-stratum variant needs k = m - 2");
            (set.plane + set.full_perp, 1.4)
        }
    };
    let mut rhs = 0.0;
    for xj in points {
        rhs += energy::pinching(f, mol, xj, scale_factor * r, opts)?;
    }
    let ratio = if rhs.abs() < 1e-300 { 0.0 } else { lhs / rhs };
    Ok(ConeSplit { lhs, rhs, ratio, variant })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{cone_map, constant_map, product_bubble, standard_bubble, BubbleParams};
    use crate::AffinePlane;

    #[test]
    fn symmetry_scores_basic() {
        let mol = HeatMollifier::standard(3);
        let opts = QuadOpts::default();

        // cone at the origin: exactly 0-symmetric
        let cone = cone_map(0.5).unwrap();
        let s0 = symmetry_score(&cone, &mol, &Point::zeros(3), 0.3, 0, None, &opts).unwrap();
        assert!(s0.score <= 1e-10, "sigma_0 = {}", s0.score);

        // product bubble on the axis: (m-2)-score decays with lambda/r
        let mut last = Real::INFINITY;
        for lam in [0.3, 0.1, 0.03] {
            let f = product_bubble(3, BubbleParams::round(lam)).unwrap();
            let s = symmetry_score(&f, &mol, &Point::zeros(3), 1.0, 1, None, &opts).unwrap();
            assert!(s.score < last, "score should decay along the sweep");
            last = s.score;
        }

        // constant map: all scores vanish
        let c = constant_map(3);
        for k in 0..=3 {
            let s = symmetry_score(&c, &mol, &Point::zeros(3), 0.5, k, None, &opts).unwrap();
            assert_eq!(s.score, 0.0);
        }

        // standard bubble at its center and scale: no 1-symmetry
        let mol2 = HeatMollifier::standard(2);
        let b = standard_bubble(BubbleParams::round(1.0)).unwrap();
        let th = energy::theta(&b, &mol2, &Point::zeros(2), 1.0, &opts).unwrap();
        let s1 = symmetry_score(&b, &mol2, &Point::zeros(2), 1.0, 1, None, &opts).unwrap();
        assert!(s1.score >= 0.1 * th, "sigma_1 = {} vs 0.1 theta = {}", s1.score, 0.1 * th);
    }

    #[test]
    fn stratification_labels() {
        let mol = HeatMollifier::standard(3);
        let opts = QuadOpts::with_nodes(24);
        let eps = 0.01;
        let scales = [0.25, 0.5, 1.0];

        let cone = cone_map(0.5).unwrap();
        let t =
            stratification_sample(&cone, &mol, &[Point::zeros(3)], &scales, eps, None, &opts)
                .unwrap();
        let p = &t.points[0];
        assert!(p.symmetric[0], "cone origin is 0-symmetric at every scale");
        assert_eq!(p.k_star, 0, "cone origin: k* = 0 (scores: {:?})", p.scores);

        let f = product_bubble(3, BubbleParams::round(1e-3)).unwrap();
        let t = stratification_sample(&f, &mol, &[Point::zeros(3)], &[1.0], eps, None, &opts)
            .unwrap();
        assert!(t.points[0].symmetric[1], "axis points are (m-2, eps)-symmetric at r = 1");

        let c = constant_map(3);
        let t = stratification_sample(&c, &mol, &[Point::zeros(3)], &scales, eps, None, &opts)
            .unwrap();
        assert_eq!(t.points[0].k_star, 3, "constant map is top-symmetric");
    }

    #[test]
    fn cone_splitting_products() {
        let mol = HeatMollifier::standard(3);
        let opts = QuadOpts::default();
        let f = product_bubble(3, BubbleParams::round(0.05)).unwrap();
        let pts = [Point::from_slice(&[0.0, 0.0, 0.0]), Point::from_slice(&[0.0, 0.0, 0.01])];
        let cs =
            cone_splitting_check(&f, &mol, &pts, 0.5, ConeSplitVariant::Standard, &opts).unwrap();
        // exact cylinder: the L-part of the lhs vanishes; both sides positive
        assert!(cs.lhs > 0.0 && cs.rhs > 0.0);
        let set =
            energy::partial_energies(&f, &mol, &pts[0], 0.5, &Plane::coordinate(3, &[2]), &opts)
                .unwrap();
        assert!(set.plane <= 1e-12);

        // collinear points -> degenerate
        let bad = [Point::from_slice(&[0.0, 0.0, 0.0]), Point::from_slice(&[0.0, 0.0, 1e-5])];
        assert!(matches!(
            cone_splitting_check(&f, &mol, &bad, 10.0, ConeSplitVariant::Standard, &opts),
            Err(RegionError::DegenerateConfiguration { .. })
        ));
    }

    #[test]
    fn annular_certificate_product() {
        let mol = HeatMollifier::standard(3);
        let opts = QuadOpts::with_nodes(24);
        let la = AffinePlane::new(Plane::coordinate(3, &[2]), Point::zeros(3)).unwrap();
        let graph = SubmanifoldGraph::flat(la, 1.0, 0.25);
        let spec = AnnularSampleSpec { n_scales: 5, r_max: 1.5, eps0: 0.1 };
        // certified delta is the max pinching; at a fixed inner radius it
        // decreases along a lambda sweep (with r_x scaled as 10 lambda the
        // inner-scale pinching is conformally scale-invariant instead)
        let mut last = Real::INFINITY;
        for lam in [3e-2, 1e-2, 3e-3] {
            let f = product_bubble(3, BubbleParams::round(lam)).unwrap();
            let cert = annular_certificate(&f, &mol, &graph, &RadiusFn::Const(0.1), &spec, &opts)
                .unwrap();
            assert_eq!(cert.entry("a1_graph_norms"), Some(0.0));
            assert!(cert.certified_delta < last, "delta not decreasing in lambda");
            last = cert.certified_delta;
        }
        assert!(last < 0.1, "smallest-lambda delta = {last}");

        // inner radius at the bubble capture scale: nontriviality floor holds
        let lam = 1e-2;
        let f = product_bubble(3, BubbleParams::round(lam)).unwrap();
        let cert2 =
            annular_certificate(&f, &mol, &graph, &RadiusFn::Const(lam / 3.0), &spec, &opts)
                .unwrap();
        assert!(
            cert2.entry("a3_min_theta_at_inner_radius").unwrap() > 0.1,
            "a3 = {:?}",
            cert2.entry("a3_min_theta_at_inner_radius")
        );
        // far inside the bubble the smooth-map quadratic law takes over:
        // theta(x, s) ~ 8 (s/lambda)^2
        let cert3 =
            annular_certificate(&f, &mol, &graph, &RadiusFn::Const(lam / 10.0), &spec, &opts)
                .unwrap();
        let a3 = cert3.entry("a3_min_theta_at_inner_radius").unwrap();
        assert!((a3 - 0.08).abs() < 0.15 * 0.08, "quadratic law: a3 = {a3}");
    }

    #[test]
    fn bubble_certificate_self_model() {
        let mol = HeatMollifier::standard(3);
        let opts = QuadOpts::with_nodes(24);
        let lam = 0.05;
        let f = product_bubble(3, BubbleParams::round(lam)).unwrap();
        let model = standard_bubble(BubbleParams::round(lam)).unwrap();
        let cert = bubble_certificate(
            &f,
            &mol,
            &Point::zeros(3),
            1.0,
            &Plane::coordinate(3, &[2]),
            &[],
            &model,
            &BubbleCertSpec::default(),
            &opts,
        )
        .unwrap();
        assert!(cert.entry("b1_max_l_energy").unwrap() <= 1e-12);
        assert!(cert.entry("b2_max_model_misfit").unwrap() <= 1e-10);
        let e_in = cert.entry("b3_model_energy_inside").unwrap();
        assert!(e_in > 8.0 * std::f64::consts::PI * 0.99);

        // wrong model: misfit blows past 0.1
        let wrong = standard_bubble(BubbleParams::round(2.0 * lam)).unwrap();
        let cert2 = bubble_certificate(
            &f,
            &mol,
            &Point::zeros(3),
            1.0,
            &Plane::coordinate(3, &[2]),
            &[],
            &wrong,
            &BubbleCertSpec::default(),
            &opts,
        )
        .unwrap();
        assert!(cert2.entry("b2_max_model_misfit").unwrap() > 0.1);
    }
}
