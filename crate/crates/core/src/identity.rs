//! Defect-density estimation along degenerating families, bubble extraction
//! on 2-D slices, the energy-identity comparison, and the toy-model energy
//! profiles along a bubble-center manifold.

use crate::bestfit::{self, BestFitError, SubmanifoldGraph};
use crate::energy::{self, EnergyError, QuadOpts};
use crate::fields::{bubble_density, BubbleParams, Concentration, MapField};
use crate::mollifier::{psi_t, RadiusFn};
use crate::quad::{self, QuadratureSpec, Region, Scheme, Slice2};
use crate::{AffinePlane, HeatMollifier, Point, Real};
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum IdentityError {
    #[error("lambda sequence did not converge (spread {0:.3e} above 5%)")]
    NonConvergent(Real),
    #[error("profile grid too coarse: {0} points (need at least 7)")]
    GridTooCoarse(usize),
    #[error("profile grid must be uniform in log r")]
    NonUniformGrid,
    #[error(transparent)]
    Energy(#[from] EnergyError),
    #[error(transparent)]
    BestFit(#[from] BestFitError),
    #[error(transparent)]
    Quad(#[from] quad::QuadError),
}

// ---------------------------------------------------------------------------
// Defect density
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, Serialize)]
pub struct DefectEstimate {
    pub value: Real,
    /// Relative disagreement of the last two extrapolants.
    pub spread: Real,
    /// Parallel-marginal normalization used by the mollified estimator.
    pub c_prime: Real,
    /// (lambda, raw estimate) pairs.
    pub series: Vec<(Real, Real)>,
}

fn richardson(series: &[(Real, Real)]) -> (Real, Real) {
    // first-order Richardson in lambda^2 on a decreasing lambda list
    assert!(series.len() >= 2, "need at least two lambda values");
    let mut extrapolants = Vec::new();
    for w in series.windows(2) {
        let (l0, e0) = w[0];
        let (l1, e1) = w[1];
        extrapolants.push(e1 + (e1 - e0) * l1 * l1 / (l0 * l0 - l1 * l1));
    }
    let value = *extrapolants.last().unwrap();
    let spread = if extrapolants.len() >= 2 {
        let prev = extrapolants[extrapolants.len() - 2];
        (value - prev).abs() / value.abs().max(1e-300)
    } else {
        (value - series.last().unwrap().1).abs() / value.abs().max(1e-300)
    };
    (value, spread)
}

/// Defect density at `x`: the lambda-limit of theta_lambda(x, r) normalized
/// by the parallel marginal of the mollifier, Richardson-extrapolated in
/// lambda^2 over a decreasing list.
pub fn defect_density(
    family: &(dyn Fn(Real) -> MapField + Sync),
    mol: &HeatMollifier,
    x: &Point,
    r: Real,
    lambdas: &[Real],
    opts: &QuadOpts,
) -> Result<DefectEstimate, IdentityError> {
    let m = mol.dim();
    let c_prime = mol.marginal_rho_r(m - 2, 0.0, 1.0);
    let mut series = Vec::with_capacity(lambdas.len());
    for &lam in lambdas {
        let f = family(lam);
        let th = energy::theta(&f, mol, x, r, opts)?;
        series.push((lam, th / c_prime));
    }
    let (value, spread) = richardson(&series);
    if spread > 0.05 {
        return Err(IdentityError::NonConvergent(spread));
    }
    Ok(DefectEstimate { value, spread, c_prime, series })
}

/// Window energy of a 2-D field, quadtree-refined at its concentration
/// points.
pub fn slice_window_energy(
    f: &MapField,
    center: [Real; 2],
    half_width: Real,
    opts: &QuadOpts,
) -> Result<Real, IdentityError> {
    assert_eq!(f.dim(), 2);
    let refine = concentration_refine(f);
    let spec = QuadratureSpec::new(
        Scheme::TensorGauss,
        opts.nodes_per_axis,
        Region::SliceWindow { slice: Slice2::planar(), center2: center, half_width, refine },
    );
    Ok(quad::integrate(|w| f.energy_density(w), &spec)?)
}

fn concentration_refine(f: &MapField) -> Vec<([Real; 2], Real)> {
    match f.concentration() {
        Concentration::Points { pts, scale } => {
            pts.iter().map(|p| ([p.get(0), p.get(1)], *scale)).collect()
        }
        _ => vec![],
    }
}

// ---------------------------------------------------------------------------
// Bubble extraction on a 2-D slice
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, Serialize)]
pub struct BubbleNode {
    pub center: [Real; 2],
    /// Minimal pyramid scale at which the ball energy reaches eps0.
    pub scale: Real,
    pub params: BubbleParams,
    /// Energy of the fitted bubble model (plane quadrature).
    pub energy: Real,
    /// Relative rms misfit of the density fit.
    pub misfit: Real,
    /// Index of the enclosing node, when the balls nest.
    pub parent: Option<usize>,
}

#[derive(Clone, Debug, Serialize)]
pub struct BubbleTree {
    pub window_center: [Real; 2],
    pub window_radius: Real,
    pub eps0: Real,
    /// Ball inflation factor used for masking and the residual.
    pub inflate: Real,
    pub nodes: Vec<BubbleNode>,
    pub slice_energy: Real,
    /// Slice energy outside all inflated bubble balls.
    pub residual_energy: Real,
}

const BALL_INFLATE: Real = 10.0;

/// Masked disc energy around a point.
fn masked_disc_energy(
    f: &MapField,
    center: [Real; 2],
    radius: Real,
    fine: Real,
    mask: &[([Real; 2], Real)],
    opts: &QuadOpts,
) -> Result<Real, IdentityError> {
    let spec = QuadratureSpec::new(
        Scheme::TensorGauss,
        opts.nodes_per_axis,
        Region::Disc {
            slice: Slice2::planar(),
            center2: center,
            r_in: 0.0,
            r_out: radius,
            fine: Some(fine),
        },
    );
    Ok(quad::integrate(
        |w| {
            let p = [w.get(0), w.get(1)];
            for (c, rad) in mask {
                if ((p[0] - c[0]).powi(2) + (p[1] - c[1]).powi(2)).sqrt() < *rad {
                    return 0.0;
                }
            }
            f.energy_density(w)
        },
        &spec,
    )?)
}

/// Pattern-search refinement of a density peak from a coarse lattice hit.
fn hill_climb(f: &MapField, start: [Real; 2], h0: Real) -> ([Real; 2], Real) {
    let mut c = start;
    let mut best = f.energy_density(&Point::from_slice(&c));
    let mut hw = h0;
    for _ in 0..200 {
        let mut improved = false;
        for (dx, dy) in
            [(1.0, 0.0), (-1.0, 0.0), (0.0, 1.0), (0.0, -1.0), (1.0, 1.0), (-1.0, -1.0), (1.0, -1.0), (-1.0, 1.0)]
        {
            let cand = [c[0] + hw * dx, c[1] + hw * dy];
            let d = f.energy_density(&Point::from_slice(&cand));
            if d > best {
                best = d;
                c = cand;
                improved = true;
            }
        }
        if !improved {
            hw *= 0.5;
            if hw < 1e-13 * h0.max(1.0) {
                break;
            }
        }
    }
    (c, best)
}

/// Nonlinear least squares of the measured density against the standard
/// bubble profile; returns (center, lambda, relative rms misfit).
fn fit_bubble(
    f: &MapField,
    start: [Real; 2],
    lambda0: Real,
    window: Real,
) -> ([Real; 2], Real, Real) {
    let mut c = start;
    let mut lam = lambda0.clamp(1e-9 * window, 1e3 * window);
    let mut misfit = Real::INFINITY;
    for _outer in 0..12 {
        // polar samples around the current center at the current scale
        let mut samples = Vec::new();
        for i in 0..14 {
            let rho = lam * 0.25 * (24.0f64).powf(i as Real / 13.0);
            for j in 0..12 {
                let phi = 2.0 * std::f64::consts::PI * j as Real / 12.0;
                let w = [c[0] + rho * phi.cos(), c[1] + rho * phi.sin()];
                let d = f.energy_density(&Point::from_slice(&w));
                samples.push((w, d));
            }
        }
        // Gauss-Newton on (c1, c2, log lambda)
        let mut moved = 0.0;
        for _it in 0..40 {
            let mut jtj = [[0.0; 3]; 3];
            let mut jte = [0.0; 3];
            let mut sse = 0.0;
            let mut ssd = 0.0;
            let l2 = lam * lam;
            for (w, d) in &samples {
                let dx = w[0] - c[0];
                let dy = w[1] - c[1];
                let u = l2 + dx * dx + dy * dy;
                let model = 8.0 * l2 / (u * u);
                let e = model - d;
                let g = [
                    32.0 * l2 * dx / (u * u * u),
                    32.0 * l2 * dy / (u * u * u),
                    lam * 16.0 * lam * (dx * dx + dy * dy - l2) / (u * u * u),
                ];
                for a in 0..3 {
                    for b in 0..3 {
                        jtj[a][b] += g[a] * g[b];
                    }
                    jte[a] += g[a] * e;
                }
                sse += e * e;
                ssd += d * d;
            }
            misfit = (sse / ssd.max(1e-300)).sqrt();
            // damped 3x3 solve
            let mu = 1e-12 * (jtj[0][0] + jtj[1][1] + jtj[2][2]).max(1e-300);
            for (a, row) in jtj.iter_mut().enumerate() {
                row[a] += mu;
            }
            let step = solve3(&jtj, &[-jte[0], -jte[1], -jte[2]]);
            let step = match step {
                Some(s) => s,
                None => break,
            };
            c[0] += step[0];
            c[1] += step[1];
            lam = (lam.ln() + step[2].clamp(-1.0, 1.0)).exp();
            lam = lam.clamp(1e-9 * window, 1e3 * window);
            moved = (step[0] * step[0] + step[1] * step[1]).sqrt();
            if moved < 1e-12 * lam && step[2].abs() < 1e-12 {
                break;
            }
        }
        if moved < 0.05 * lam {
            break;
        }
    }
    (c, lam, misfit)
}

fn solve3(a: &[[Real; 3]; 3], b: &[Real; 3]) -> Option<[Real; 3]> {
    let det = a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1])
        - a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0])
        + a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0]);
    if det.abs() < 1e-300 {
        return None;
    }
    let inv = 1.0 / det;
    let adj = [
        [
            a[1][1] * a[2][2] - a[1][2] * a[2][1],
            a[0][2] * a[2][1] - a[0][1] * a[2][2],
            a[0][1] * a[1][2] - a[0][2] * a[1][1],
        ],
        [
            a[1][2] * a[2][0] - a[1][0] * a[2][2],
            a[0][0] * a[2][2] - a[0][2] * a[2][0],
            a[0][2] * a[1][0] - a[0][0] * a[1][2],
        ],
        [
            a[1][0] * a[2][1] - a[1][1] * a[2][0],
            a[0][1] * a[2][0] - a[0][0] * a[2][1],
            a[0][0] * a[1][1] - a[0][1] * a[1][0],
        ],
    ];
    let mut out = [0.0; 3];
    for i in 0..3 {
        for j in 0..3 {
            out[i] += adj[i][j] * b[j] * inv;
        }
    }
    Some(out)
}

/// Greedy multiscale bubble extraction: density peaks, least-squares fit of
/// the standard-bubble profile, minimal detection scale by a pyramid search,
/// masked recursion.
pub fn extract_bubbles(
    f: &MapField,
    window_center: [Real; 2],
    window_radius: Real,
    eps0: Real,
    opts: &QuadOpts,
) -> Result<BubbleTree, IdentityError> {
    assert_eq!(f.dim(), 2, "bubble extraction runs on a 2-D slice field");
    let slice_energy = slice_window_energy(f, window_center, window_radius, opts)?;
    let cap = (slice_energy / eps0).floor() as usize + 1;

    // density lattice for peak detection
    let n = 96;
    let h = 2.0 * window_radius / (n - 1) as Real;
    let density_at = |i: usize, j: usize| {
        let w = Point::from_slice(&[
            window_center[0] - window_radius + h * i as Real,
            window_center[1] - window_radius + h * j as Real,
        ]);
        f.energy_density(&w)
    };

    let mut nodes: Vec<BubbleNode> = Vec::new();
    let mut mask: Vec<([Real; 2], Real)> = Vec::new();

    for _round in 0..cap {
        // best unmasked lattice point
        let mut best = (0usize, 0usize, -1.0);
        for i in 0..n {
            for j in 0..n {
                let w = [
                    window_center[0] - window_radius + h * i as Real,
                    window_center[1] - window_radius + h * j as Real,
                ];
                if mask
                    .iter()
                    .any(|(c, r)| ((w[0] - c[0]).powi(2) + (w[1] - c[1]).powi(2)).sqrt() < *r)
                {
                    continue;
                }
                let d = density_at(i, j);
                if d > best.2 {
                    best = (i, j, d);
                }
            }
        }
        if best.2 <= 0.0 {
            break;
        }
        let start = [
            window_center[0] - window_radius + h * best.0 as Real,
            window_center[1] - window_radius + h * best.1 as Real,
        ];
        let (peak, peak_density) = hill_climb(f, start, h);
        let lambda0 = (8.0 / peak_density).sqrt();
        let (center, lam, misfit) = fit_bubble(f, peak, lambda0, window_radius);
        // a fit that walked back into a claimed ball is a tail artifact
        if mask.iter().any(|(c, r)| {
            ((center[0] - c[0]).powi(2) + (center[1] - c[1]).powi(2)).sqrt() < *r
        }) {
            break;
        }

        // minimal pyramid scale where the masked ball energy reaches eps0
        let mut scale = None;
        let mut k_max = 0;
        while window_radius / (1 << k_max) as Real > lam / 20.0 && k_max < 40 {
            k_max += 1;
        }
        for k in (0..=k_max).rev() {
            let s = window_radius / (1 << k) as Real;
            let e = masked_disc_energy(f, center, s, lam, &mask, opts)?;
            if e >= eps0 {
                scale = Some(s);
                break;
            }
        }
        let Some(s_j) = scale else {
            break; // no remaining concentration reaches the floor
        };

        // energy of the fitted model over the plane
        let model_energy = {
            let big = (200.0 * lam).max(4.0 * window_radius);
            let spec = QuadratureSpec::new(
                Scheme::TensorGauss,
                opts.nodes_per_axis,
                Region::Disc {
                    slice: Slice2::planar(),
                    center2: center,
                    r_in: 0.0,
                    r_out: big,
                    fine: Some(lam),
                },
            );
            let p = BubbleParams { lambda: lam, center, orientation: 1 };
            quad::integrate(|w| bubble_density(&p, [w.get(0), w.get(1)]), &spec)?
        };

        // claim enough of the fitted tail that the leftover stays below the
        // detection floor: 8 pi lam^2 / R^2 <= eps0 / 2
        let tail_radius = lam * (16.0 * std::f64::consts::PI / eps0).sqrt();
        let claim = (BALL_INFLATE * s_j).max(tail_radius);
        mask.push((center, claim));
        nodes.push(BubbleNode {
            center,
            scale: s_j,
            params: BubbleParams { lambda: lam, center, orientation: 1 },
            energy: model_energy,
            misfit,
            parent: None,
        });
    }

    // nesting relations over the inflated balls
    let claims: Vec<([Real; 2], Real)> = mask.clone();
    for i in 0..nodes.len() {
        for j in 0..nodes.len() {
            if i == j {
                continue;
            }
            let (ci, ri) = claims[i];
            let (cj, rj) = claims[j];
            let d = ((ci[0] - cj[0]).powi(2) + (ci[1] - cj[1]).powi(2)).sqrt();
            if d + ri <= rj {
                nodes[i].parent = Some(j);
            }
        }
    }

    // residual: window energy outside all claimed balls
    let refine = concentration_refine(f);
    let spec = QuadratureSpec::new(
        Scheme::TensorGauss,
        opts.nodes_per_axis,
        Region::SliceWindow {
            slice: Slice2::planar(),
            center2: window_center,
            half_width: window_radius,
            refine,
        },
    );
    let residual_energy = quad::integrate(
        |w| {
            let p = [w.get(0), w.get(1)];
            for (c, rad) in &mask {
                if ((p[0] - c[0]).powi(2) + (p[1] - c[1]).powi(2)).sqrt() < *rad {
                    return 0.0;
                }
            }
            f.energy_density(w)
        },
        &spec,
    )?;

    Ok(BubbleTree {
        window_center,
        window_radius,
        eps0,
        inflate: BALL_INFLATE,
        nodes,
        slice_energy,
        residual_energy,
    })
}

// ---------------------------------------------------------------------------
// Energy identity report
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, Serialize)]
pub struct IdentityReport {
    pub defect: Real,
    pub defect_spread: Real,
    pub estimator: String,
    pub c_prime: Real,
    pub bubble_energies: Vec<Real>,
    pub sum_bubble_energy: Real,
    pub discrepancy: Real,
    pub rel_discrepancy: Real,
    /// sum E_j <= defect + 2 percent.
    pub sub_energy_ok: bool,
    pub series: Vec<(Real, Real)>,
    pub tree: BubbleTree,
}

/// Scenario describing where the defect is measured and which slice carries
/// the bubbles.
#[derive(Clone, Debug)]
pub enum DefectScenario {
    /// m >= 3 family: mollified defect density at (x, r); bubbles extracted
    /// on the perpendicular slice through x.
    Mollified { x: Point, r: Real, slice: Slice2 },
    /// 2-D family: defect = lambda-limit of the slice window energy.
    SliceEnergy,
}

#[allow(clippy::too_many_arguments)]
pub fn energy_identity_report(
    family: &(dyn Fn(Real) -> MapField + Sync),
    mol: &HeatMollifier,
    scenario: &DefectScenario,
    window_center: [Real; 2],
    window_radius: Real,
    lambdas: &[Real],
    eps0: Real,
    opts: &QuadOpts,
) -> Result<IdentityReport, IdentityError> {
    let smallest = *lambdas.last().expect("nonempty lambda list");
    let (defect, spread, c_prime, series, estimator, slice_field) = match scenario {
        DefectScenario::Mollified { x, r, slice } => {
            let est = defect_density(family, mol, x, *r, lambdas, opts)?;
            let f = family(smallest);
            let sf = crate::fields::restrict_to_slice(&f, slice);
            (est.value, est.spread, est.c_prime, est.series, "mollified".to_string(), sf)
        }
        DefectScenario::SliceEnergy => {
            let mut series = Vec::new();
            for &lam in lambdas {
                let f = family(lam);
                let e = slice_window_energy(&f, window_center, window_radius, opts)?;
                series.push((lam, e));
            }
            let (value, spread) = richardson(&series);
            if spread > 0.05 {
                return Err(IdentityError::NonConvergent(spread));
            }
            (value, spread, 1.0, series, "slice-energy".to_string(), family(smallest))
        }
    };

    let tree = extract_bubbles(&slice_field, window_center, window_radius, eps0, opts)?;
    let bubble_energies: Vec<Real> = tree.nodes.iter().map(|n| n.energy).collect();
    let sum: Real = bubble_energies.iter().sum();
    let discrepancy = (defect - sum).abs();
    let rel = discrepancy / defect.abs().max(1e-300);
    Ok(IdentityReport {
        defect,
        defect_spread: spread,
        estimator,
        c_prime,
        bubble_energies,
        sum_bubble_energy: sum,
        discrepancy,
        rel_discrepancy: rel,
        sub_energy_ok: sum <= defect * 1.02 + 1e-12,
        series,
        tree,
    })
}

// ---------------------------------------------------------------------------
// Profiles along the center manifold
// ---------------------------------------------------------------------------

#[derive(Clone, Debug)]
pub struct ProfileConfig {
    pub center: Point,
    pub radius: RadiusFn,
    /// Tensor nodes per axis for the graph integral.
    pub graph_nodes: usize,
}

impl ProfileConfig {
    pub fn toy(m: usize, r_x: Real) -> Self {
        Self { center: Point::zeros(m), radius: RadiusFn::Const(r_x), graph_nodes: 16 }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ProfileRow {
    pub r: Real,
    pub value: Real,
}

#[derive(Clone, Debug, Serialize)]
pub struct LEnergyProfile {
    pub rows: Vec<ProfileRow>,
    /// Coefficient a of the fitted a / |ln r| envelope.
    pub log_fit_coeff: Real,
    pub max_value: Real,
}

fn graph_window(graph: &SubmanifoldGraph) -> Vec<(Real, Real)> {
    let lat = graph.lattice();
    (0..lat.dims)
        .map(|d| {
            (lat.origin[d], lat.origin[d] + lat.spacing * (lat.counts[d] - 1) as Real)
        })
        .collect()
}

/// theta_L(T_r) profile: the best-plane energy integrated over the graph
/// against the bubble-center cutoff, with the a/|ln r| envelope fit.
pub fn l_energy_profile(
    f: &MapField,
    mol: &HeatMollifier,
    graphs: &[(Real, SubmanifoldGraph)],
    cfg: &ProfileConfig,
    opts: &QuadOpts,
) -> Result<LEnergyProfile, IdentityError> {
    let mut rows = Vec::with_capacity(graphs.len());
    for (r, graph) in graphs {
        let window = graph_window(graph);
        let value = quad::integrate_graph(
            |y| {
                let mm = energy::moments(f, mol, y, *r, opts).expect("profile moment pass");
                let theta_l: Real = mm.tensor.eigenvalues[2..].iter().sum();
                psi_t(y, *r, graph, &cfg.radius, &cfg.center) * theta_l
            },
            graph,
            &window,
            cfg.graph_nodes,
        )?;
        rows.push(ProfileRow { r: *r, value });
    }
    // least squares for value ~ a / |ln r|
    let mut num = 0.0;
    let mut den = 0.0;
    for row in &rows {
        let w = 1.0 / row.r.ln().abs().max(1e-6);
        num += row.value * w;
        den += w * w;
    }
    let log_fit_coeff = if den > 0.0 { num / den } else { 0.0 };
    let max_value = rows.iter().map(|r| r.value).fold(0.0, Real::max);
    Ok(LEnergyProfile { rows, log_fit_coeff, max_value })
}

#[derive(Clone, Debug, Serialize)]
pub struct AngularProfile {
    pub rows: Vec<ProfileRow>,
    /// (r d/dr)^2 value - value at interior grid points (same indexing as
    /// rows[1..n-1]).
    pub superconvexity_residual: Vec<Real>,
}

/// Restricted angular energy along the per-scale best planes, integrated
/// over the graph, with its second log-derivative along the r-grid.
pub fn angular_profile(
    f: &MapField,
    mol: &HeatMollifier,
    graphs: &[(Real, SubmanifoldGraph)],
    cfg: &ProfileConfig,
    opts: &QuadOpts,
) -> Result<AngularProfile, IdentityError> {
    if graphs.len() < 7 {
        return Err(IdentityError::GridTooCoarse(graphs.len()));
    }
    // uniform log spacing required by the stencil
    let logs: Vec<Real> = graphs.iter().map(|(r, _)| r.ln()).collect();
    let h = logs[1] - logs[0];
    for w in logs.windows(2) {
        if ((w[1] - w[0]) - h).abs() > 1e-9 * h.abs() {
            return Err(IdentityError::NonUniformGrid);
        }
    }
    let mut rows = Vec::with_capacity(graphs.len());
    for (r, graph) in graphs {
        let window = graph_window(graph);
        let value = quad::integrate_graph(
            |y| {
                let bp = bestfit::best_plane(f, mol, y, *r, opts).expect("angular profile plane");
                let set = energy::partial_energies(f, mol, y, *r, &bp.plane, opts)
                    .expect("angular profile energies");
                psi_t(y, *r, graph, &cfg.radius, &cfg.center) * set.hat_angular
            },
            graph,
            &window,
            cfg.graph_nodes,
        )?;
        rows.push(ProfileRow { r: *r, value });
    }
    let mut resid = Vec::with_capacity(rows.len().saturating_sub(2));
    for i in 1..rows.len() - 1 {
        let d2 = (rows[i + 1].value - 2.0 * rows[i].value + rows[i - 1].value) / (h * h);
        resid.push(d2 - rows[i].value);
    }
    Ok(AngularProfile { rows, superconvexity_residual: resid })
}

#[derive(Clone, Debug, Serialize)]
pub struct RadialBalance {
    pub hat_radial: Real,
    pub theta_plane: Real,
    pub hat_angular: Real,
    pub hat_plane: Real,
    /// rhs - lhs of the stationary balance
    /// hat_n + 2 theta_L <= hat_alpha + hat_L (+ cutoff errors).
    pub slack: Real,
}

/// Toy-model stationary balance along a flat center plane.
pub fn radial_balance_toy(
    f: &MapField,
    mol: &HeatMollifier,
    la: &AffinePlane,
    r: Real,
    half_width: Real,
    cfg: &ProfileConfig,
    opts: &QuadOpts,
) -> Result<RadialBalance, IdentityError> {
    let graph = SubmanifoldGraph::flat(la.clone(), half_width, r / 4.0);
    let window = graph_window(&graph);
    let vals: [Real; 4] = {
        let mut out = [0.0; 4];
        for (slot, pick) in [
            (0usize, 0usize), // hat radial
            (1, 1),           // plane
            (2, 2),           // hat angular
            (3, 3),           // hat plane
        ] {
            out[slot] = quad::integrate_graph(
                |y| {
                    let set = energy::partial_energies(f, mol, y, r, &la.plane, opts)
                        .expect("balance energies");
                    let v = match pick {
                        0 => set.hat_radial,
                        1 => set.plane,
                        2 => set.hat_angular,
                        _ => set.hat_plane,
                    };
                    psi_t(y, r, &graph, &cfg.radius, &cfg.center) * v
                },
                &graph,
                &window,
                cfg.graph_nodes,
            )?;
        }
        out
    };
    let (hat_radial, theta_plane, hat_angular, hat_plane) = (vals[0], vals[1], vals[2], vals[3]);
    let slack = hat_angular + hat_plane - hat_radial - 2.0 * theta_plane;
    Ok(RadialBalance { hat_radial, theta_plane, hat_angular, hat_plane, slack })
}
