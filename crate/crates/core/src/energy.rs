//! Mollified energy functionals: the monotone energy and its pinching, the
//! energy tensor, partial and restricted directional energies, spatial
//! gradients, the circle-averaged angular energy and its conformal-Laplacian
//! probe.
//!
//! Every quantity is a single node sweep; invariant product fields go through
//! the separable marginal-kernel path so that thin tubes are resolved exactly
//! in the two transverse dimensions.

use crate::fields::{dot3, norm3_sq, Concentration, Jac, MapField};
use crate::geometry::GeometryError;
use crate::linalg::jacobi_eigh;
use crate::mollifier::RestrictedMollifier;
use crate::quad::{self, QuadratureSpec, Region, Scheme, Slice2};
use crate::{AffinePlane, HeatMollifier, Matrix, Plane, Point, Real};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum EnergyError {
    #[error("support ball of radius {support} at {x:?} escapes the field domain")]
    DomainEscape { x: Vec<Real>, support: Real },
    #[error("evaluation point on the axis")]
    OnAxis,
    #[error("finite-difference stencil leaves the valid window (s_perp = {0})")]
    StencilEscape(Real),
    #[error(transparent)]
    Quad(#[from] quad::QuadError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// Quadrature settings shared by the energy operations.
#[derive(Clone, Copy, Debug)]
pub struct QuadOpts {
    pub nodes_per_axis: usize,
    pub circle_nodes: usize,
}

impl Default for QuadOpts {
    fn default() -> Self {
        Self { nodes_per_axis: 32, circle_nodes: 64 }
    }
}

impl QuadOpts {
    pub fn with_nodes(n: usize) -> Self {
        Self { nodes_per_axis: n, ..Self::default() }
    }
}

// ---------------------------------------------------------------------------
// Node-sweep driver
// ---------------------------------------------------------------------------

struct Ctx<'a> {
    /// Node position.
    y: &'a Point,
    /// Field Jacobian at the node.
    jac: &'a Jac,
    /// Displacement y - x; in the separable path only its perpendicular part
    /// (the marginalized kernels make the parallel part integrate out).
    d: Point,
    /// Kernel value (rho_r or its parallel marginal).
    rho: Real,
    /// Derivative-kernel value (rho_dot_r or its marginal).
    rho_dot: Real,
}

enum Drive {
    Direct(QuadratureSpec),
    Separable { spec: QuadratureSpec, plane: Plane },
}

fn check_domain(f: &MapField, x: &Point, rs: Real) -> Result<(), EnergyError> {
    if let Some((lo, hi)) = f.domain_box() {
        for d in 0..f.dim() {
            if x.get(d) - rs < lo[d] || x.get(d) + rs > hi[d] {
                return Err(EnergyError::DomainEscape {
                    x: x.as_slice().to_vec(),
                    support: rs,
                });
            }
        }
    }
    Ok(())
}

fn make_drive(
    f: &MapField,
    mol: &HeatMollifier,
    x: &Point,
    r: Real,
    opts: &QuadOpts,
) -> Result<Drive, EnergyError> {
    let rs = mol.support_radius(r);
    check_domain(f, x, rs)?;
    let m = f.dim();
    let n = opts.nodes_per_axis;

    // exact invariance: marginalize the parallel directions
    if let (Some(plane), Concentration::Tube { axis, radius }) =
        (f.invariant_plane(), f.concentration())
    {
        let pb = plane.perp_basis();
        let slice = Slice2::new(&axis.base, &pb[0], &pb[1]);
        let x_perp = slice.coords(x);
        let dist = (x_perp[0] * x_perp[0] + x_perp[1] * x_perp[1]).sqrt();
        let spec = QuadratureSpec::new(
            Scheme::Separable,
            n,
            Region::Disc {
                slice,
                center2: [0.0, 0.0],
                r_in: 0.0,
                r_out: dist + rs,
                fine: Some(*radius),
            },
        );
        return Ok(Drive::Separable { spec, plane: plane.clone() });
    }

    // singularity inside the support ball: spherical rule centered there,
    // with radial panels resolving the mollifier scale
    for s in f.singular_points() {
        let d = x.sub(s).norm();
        if d < rs {
            let spec = QuadratureSpec::new(
                Scheme::Spherical,
                n,
                Region::Shell {
                    center: s.as_slice().to_vec(),
                    r_in: 0.0,
                    r_out: d + rs,
                    fine: Some(0.5 * r),
                },
            );
            return Ok(Drive::Direct(spec));
        }
    }

    let region = match f.concentration() {
        Concentration::Tube { axis, radius } => {
            let axial = axis.plane.project(&x.sub(&axis.base));
            let center_l: Vec<Real> =
                axis.plane.basis().iter().map(|b| axial.dot(b)).collect();
            let s_perp = axis.plane.project_perp(&x.sub(&axis.base)).norm();
            let fine = radius * axial.norm().max(1.0);
            Region::Tube {
                base: axis.base.as_slice().to_vec(),
                axis_basis: axis.plane.basis().iter().map(|b| b.as_slice().to_vec()).collect(),
                perp_basis: axis
                    .plane
                    .perp_basis()
                    .iter()
                    .map(|b| b.as_slice().to_vec())
                    .collect(),
                center_l,
                half_len: rs,
                s_max: s_perp + rs,
                fine: Some(fine),
            }
        }
        Concentration::Points { pts, scale } if m == 2 => {
            let near: Vec<&Point> = pts.iter().filter(|p| p.sub(x).norm() < 1.5 * rs).collect();
            match near.len() {
                0 => Region::Shell {
                    center: x.as_slice().to_vec(),
                    r_in: 0.0,
                    r_out: rs,
                    fine: None,
                },
                1 => Region::Disc {
                    slice: Slice2::planar(),
                    center2: [near[0].get(0), near[0].get(1)],
                    r_in: 0.0,
                    r_out: near[0].sub(x).norm() + rs,
                    fine: Some(*scale),
                },
                _ => Region::SliceWindow {
                    slice: Slice2::planar(),
                    center2: [x.get(0), x.get(1)],
                    half_width: rs,
                    refine: near.iter().map(|p| ([p.get(0), p.get(1)], *scale)).collect(),
                },
            }
        }
        _ => Region::Shell {
            center: x.as_slice().to_vec(),
            r_in: 0.0,
            r_out: rs,
            fine: None,
        },
    };
    Ok(Drive::Direct(QuadratureSpec::new(Scheme::TensorGauss, n, region)))
}

/// Sweep all nodes once, handing each integrand the kernel values and the
/// displacement.
fn drive<const K: usize, G>(
    f: &MapField,
    mol: &HeatMollifier,
    x: &Point,
    r: Real,
    opts: &QuadOpts,
    g: G,
) -> Result<[Real; K], EnergyError>
where
    G: Fn(&Ctx) -> [Real; K] + Sync,
{
    match make_drive(f, mol, x, r, opts)? {
        Drive::Direct(spec) => {
            let out = quad::integrate_many::<K, _>(
                |y| {
                    let d = y.sub(x);
                    let n2 = d.norm_sq();
                    let rho = mol.rho_r(n2, r);
                    let rho_dot = mol.rho_dot_r(n2, r);
                    if rho == 0.0 && rho_dot == 0.0 {
                        return [0.0; K];
                    }
                    let jac = f.jacobian(y);
                    g(&Ctx { y, jac: &jac, d, rho, rho_dot })
                },
                &spec,
            )?;
            Ok(out)
        }
        Drive::Separable { spec, plane } => {
            let m = f.dim();
            let out = quad::integrate_many::<K, _>(
                |y| {
                    let d = plane.project_perp(&y.sub(x));
                    let s = d.norm();
                    let (rho, rho_dot) = mol.marginal_pair(m - 2, s, r);
                    if rho == 0.0 && rho_dot == 0.0 {
                        return [0.0; K];
                    }
                    let jac = f.jacobian(y);
                    g(&Ctx { y, jac: &jac, d, rho, rho_dot })
                },
                &spec,
            )?;
            Ok(out)
        }
    }
}

// ---------------------------------------------------------------------------
// Monotone energy, pinching, tensor, gradients
// ---------------------------------------------------------------------------

/// Scale-normalized mollified energy theta(x, r).
pub fn theta(
    f: &MapField,
    mol: &HeatMollifier,
    x: &Point,
    r: Real,
    opts: &QuadOpts,
) -> Result<Real, EnergyError> {
    let r2 = r * r;
    let v = drive::<1, _>(f, mol, x, r, opts, |c| [r2 * c.rho * c.jac.energy_density()])?;
    Ok(v[0])
}

/// The monotonicity-formula integrand: -2 int rho_dot_r <grad u, y-x>^2.
/// Equals r d theta / dr for stationary fields. Tiny negative quadrature
/// noise (above -1e-10) is clamped to zero; anything more negative is
/// returned as is so callers can flag it.
pub fn pinching(
    f: &MapField,
    mol: &HeatMollifier,
    x: &Point,
    r: Real,
    opts: &QuadOpts,
) -> Result<Real, EnergyError> {
    let v = drive::<1, _>(f, mol, x, r, opts, |c| {
        let radial = c.jac.dir_deriv(&c.d);
        [-2.0 * c.rho_dot * norm3_sq(&radial)]
    })?;
    let p = v[0];
    Ok(if p < 0.0 && p >= -1e-10 { 0.0 } else { p })
}

/// Heat-mollified energy tensor with its eigendecomposition.
#[derive(Clone, Debug)]
pub struct EnergyTensor {
    pub q: Matrix,
    pub x: Point,
    pub r: Real,
    /// Descending.
    pub eigenvalues: Vec<Real>,
    pub eigenvectors: Vec<Point>,
}

impl EnergyTensor {
    pub fn theta(&self) -> Real {
        self.q.trace()
    }

    /// Span of the m-2 smallest eigenvectors.
    pub fn small_eigenplane(&self) -> Plane {
        let m = self.q.dim();
        let basis: Vec<Point> = (2..m).map(|k| self.eigenvectors[k]).collect();
        Plane::new(m, &basis).expect("eigenvectors orthonormal")
    }
}

/// Combined moment pass: theta, pinching, tensor and both gradient routes.
#[derive(Clone, Debug)]
pub struct Moments {
    pub theta: Real,
    pub pinching: Real,
    pub tensor: EnergyTensor,
    pub grad_direct: Point,
    pub grad_stationary: Point,
}

const MK: usize = 26;

pub fn moments(
    f: &MapField,
    mol: &HeatMollifier,
    x: &Point,
    r: Real,
    opts: &QuadOpts,
) -> Result<Moments, EnergyError> {
    let m = f.dim();
    let r2 = r * r;
    let vals = drive::<MK, _>(f, mol, x, r, opts, |c| {
        let mut out = [0.0; MK];
        let dens = c.jac.energy_density();
        out[0] = r2 * c.rho * dens;
        let radial = c.jac.dir_deriv(&c.d);
        out[1] = -2.0 * c.rho_dot * norm3_sq(&radial);
        // tensor Q_ab = r^2 rho <du_a, du_b>
        for a in 0..m {
            for b in a..m {
                out[2 + a * 4 + b] = r2 * c.rho * dot3(c.jac.row(a), c.jac.row(b));
            }
        }
        // gradients: direct uses rho_dot (x-y)_l |grad u|^2,
        // stationary uses 2 rho_dot <grad_{x-y} u, grad_l u>
        for l in 0..m {
            out[18 + l] = -c.rho_dot * c.d.get(l) * dens;
            out[22 + l] = -2.0 * c.rho_dot * dot3(&radial, c.jac.row(l));
        }
        out
    })?;

    let mut q = Matrix::zeros(m);
    for a in 0..m {
        for b in a..m {
            q.set(a, b, vals[2 + a * 4 + b]);
            q.set(b, a, vals[2 + a * 4 + b]);
        }
    }
    let eig = jacobi_eigh(&q);
    let tensor = EnergyTensor {
        q,
        x: *x,
        r,
        eigenvalues: eig.values.as_slice().to_vec(),
        eigenvectors: (0..m).map(|k| eig.vector(k)).collect(),
    };
    let p = vals[1];
    Ok(Moments {
        theta: vals[0],
        pinching: if p < 0.0 && p >= -1e-10 { 0.0 } else { p },
        tensor,
        grad_direct: Point::from_slice(&vals[18..18 + m]),
        grad_stationary: Point::from_slice(&vals[22..22 + m]),
    })
}

pub fn energy_tensor(
    f: &MapField,
    mol: &HeatMollifier,
    x: &Point,
    r: Real,
    opts: &QuadOpts,
) -> Result<EnergyTensor, EnergyError> {
    Ok(moments(f, mol, x, r, opts)?.tensor)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GradientMode {
    /// Differentiate the definition under the integral.
    Direct,
    /// The stationary-equation route; agreement with `Direct` witnesses
    /// stationarity.
    Stationary,
}

pub fn theta_gradient(
    f: &MapField,
    mol: &HeatMollifier,
    x: &Point,
    r: Real,
    mode: GradientMode,
    opts: &QuadOpts,
) -> Result<Point, EnergyError> {
    let mm = moments(f, mol, x, r, opts)?;
    Ok(match mode {
        GradientMode::Direct => mm.grad_direct,
        GradientMode::Stationary => mm.grad_stationary,
    })
}

// ---------------------------------------------------------------------------
// Partial and restricted energies
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PartialKind {
    /// r^2 int rho |pi_L grad u|^2
    Plane,
    /// int rho <grad u, pi_perp(y-x)>^2
    RadialPerp,
    /// int rho |pi_perp(y-x)|^2 <grad u, alpha>^2
    AngularPerp,
    /// int rho |pi_perp(y-x)|^2 |pi_perp grad u|^2
    FullPerp,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RestrictedKind {
    Full,
    Plane,
    RadialPerp,
    AngularPerp,
}

/// All partial and restricted directional energies with respect to one
/// plane, in a single sweep.
#[derive(Clone, Copy, Debug)]
pub struct PartialSet {
    pub plane: Real,
    pub radial_perp: Real,
    pub angular_perp: Real,
    /// Independent route: weighted energy of the full perpendicular
    /// projection; equals radial + angular pointwise.
    pub full_perp: Real,
    pub hat_full: Real,
    pub hat_plane: Real,
    pub hat_radial: Real,
    pub hat_angular: Real,
}

/// Requires codimension 2 for the radial/angular split.
pub fn partial_energies(
    f: &MapField,
    mol: &HeatMollifier,
    x: &Point,
    r: Real,
    plane: &Plane,
    opts: &QuadOpts,
) -> Result<PartialSet, EnergyError> {
    let m = f.dim();
    assert_eq!(plane.dim_ambient(), m);
    let codim2 = plane.codim() == 2;
    let r2 = r * r;
    let e2r = (2.0 * mol.r_cutoff()).exp();
    let basis = plane.basis().to_vec();
    let perp = plane.perp_basis().to_vec();

    let vals = drive::<8, _>(f, mol, x, r, opts, |c| {
        let mut out = [0.0; 8];
        // perpendicular displacement relative to `plane` (not the drive's)
        let mut dp = c.d;
        for b in &basis {
            let t = c.d.dot(b);
            dp = dp.axpy(-t, b);
        }
        let s2 = dp.norm_sq();
        let tube = RestrictedMollifier::psi_hat(e2r * s2 / (2.0 * r2));

        let l_dens = c.jac.plane_energy(&basis);
        out[0] = r2 * c.rho * l_dens;
        out[4] = r2 * c.rho * tube * c.jac.energy_density();
        out[5] = r2 * c.rho * tube * l_dens;

        let radial = c.jac.dir_deriv(&dp);
        let n_term = norm3_sq(&radial);
        out[1] = c.rho * n_term;
        out[6] = c.rho * tube * n_term;

        if codim2 {
            // angular direction: rotate the normalized dp in the stored frame
            let s = s2.sqrt();
            if s > 0.0 {
                let c1 = dp.dot(&perp[0]) / s;
                let c2 = dp.dot(&perp[1]) / s;
                let alpha = perp[0].scale(-c2).axpy(c1, &perp[1]);
                let a_term = s2 * norm3_sq(&c.jac.dir_deriv(&alpha));
                out[2] = c.rho * a_term;
                out[7] = c.rho * tube * a_term;
            }
            // independent full-perp route
            let mut pe = 0.0;
            for p in &perp {
                pe += norm3_sq(&c.jac.dir_deriv(p));
            }
            out[3] = c.rho * s2 * pe;
        }
        out
    })?;

    Ok(PartialSet {
        plane: vals[0],
        radial_perp: vals[1],
        angular_perp: vals[2],
        full_perp: vals[3],
        hat_full: vals[4],
        hat_plane: vals[5],
        hat_radial: vals[6],
        hat_angular: vals[7],
    })
}

pub fn partial_energy(
    f: &MapField,
    mol: &HeatMollifier,
    x: &Point,
    r: Real,
    plane: &Plane,
    kind: PartialKind,
    opts: &QuadOpts,
) -> Result<Real, EnergyError> {
    let set = partial_energies(f, mol, x, r, plane, opts)?;
    Ok(match kind {
        PartialKind::Plane => set.plane,
        PartialKind::RadialPerp => set.radial_perp,
        PartialKind::AngularPerp => set.angular_perp,
        PartialKind::FullPerp => set.full_perp,
    })
}

/// Restricted energies: the same integrands against the tube-cutoff kernel.
pub fn restricted_energy(
    f: &MapField,
    mol: &HeatMollifier,
    x: &Point,
    r: Real,
    plane: &Plane,
    kind: RestrictedKind,
    opts: &QuadOpts,
) -> Result<Real, EnergyError> {
    let set = partial_energies(f, mol, x, r, plane, opts)?;
    Ok(match kind {
        RestrictedKind::Full => set.hat_full,
        RestrictedKind::Plane => set.hat_plane,
        RestrictedKind::RadialPerp => set.hat_radial,
        RestrictedKind::AngularPerp => set.hat_angular,
    })
}

// ---------------------------------------------------------------------------
// Angular energy and the subharmonicity probe
// ---------------------------------------------------------------------------

/// Circle-averaged scale-invariant angular energy
/// E_alpha(y) = s_perp^2 avg_{S^1} <grad u, alpha>^2.
pub fn angular_energy(
    f: &MapField,
    ap: &AffinePlane,
    y: &Point,
    n_circle: usize,
) -> Result<Real, EnergyError> {
    let frame = ap.perp_polar(y)?;
    let s2 = frame.s_perp * frame.s_perp;
    let avg = quad::circle_average(
        |p, alpha| norm3_sq(&f.jacobian(p).dir_deriv(alpha)),
        ap,
        &frame.y_l,
        frame.s_perp,
        n_circle,
    )?;
    Ok(s2 * avg)
}

#[derive(Clone, Copy, Debug)]
pub struct SubharmonicityProbe {
    pub e_alpha: Real,
    /// (conformal Laplacian of E_alpha) / E_alpha.
    pub ratio: Real,
}

/// Five-point conformal-Laplacian probe of the angular energy:
/// (d/d ln s)^2 + s^2 Delta_L, the pure-angle term vanishing by rotational
/// invariance of E_alpha.
pub fn subharmonicity_probe(
    f: &MapField,
    ap: &AffinePlane,
    y: &Point,
    h_log: Real,
    n_circle: usize,
) -> Result<SubharmonicityProbe, EnergyError> {
    let frame = ap.perp_polar(y)?;
    let s = frame.s_perp;
    if s * (-2.0 * h_log).exp() <= 1e-14 {
        return Err(EnergyError::StencilEscape(s));
    }
    let ev = |y_l: &Point, s_now: Real| -> Result<Real, EnergyError> {
        let p = ap.circle_point(y_l, s_now, 0.0);
        angular_energy(f, ap, &p, n_circle)
    };
    // (d/d ln s)^2 by a 5-point stencil in log radius
    let mut es = [0.0; 5];
    for (k, j) in (-2i32..=2).enumerate() {
        es[k] = ev(&frame.y_l, s * ((j as Real) * h_log).exp())?;
    }
    let d2_log = (-es[0] + 16.0 * es[1] - 30.0 * es[2] + 16.0 * es[3] - es[4])
        / (12.0 * h_log * h_log);
    // s^2 Delta_L by 5-point stencils along the plane directions
    let h_lin = s * h_log;
    let mut lap_l = 0.0;
    for b in ap.plane.basis() {
        let mut el = [0.0; 5];
        for (k, j) in (-2i32..=2).enumerate() {
            el[k] = ev(&frame.y_l.axpy((j as Real) * h_lin, b), s)?;
        }
        lap_l += (-el[0] + 16.0 * el[1] - 30.0 * el[2] + 16.0 * el[3] - el[4])
            / (12.0 * h_lin * h_lin);
    }
    let e0 = es[2];
    let bar_delta = d2_log + s * s * lap_l;
    let ratio = if e0.abs() < 1e-300 { 0.0 } else { bar_delta / e0 };
    Ok(SubharmonicityProbe { e_alpha: e0, ratio })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{
        bent_bubble, cone_map, constant_map, product_bubble, rotate_domain, standard_bubble,
        BubbleParams, CurveSpec,
    };

    const PI: Real = std::f64::consts::PI;

    fn axis_point(z: Real) -> Point {
        Point::from_slice(&[0.0, 0.0, z])
    }

    #[test]
    fn theta_constant_zero() {
        let mol = HeatMollifier::standard(3);
        let f = constant_map(3);
        let v = theta(&f, &mol, &Point::zeros(3), 0.5, &QuadOpts::default()).unwrap();
        assert_eq!(v, 0.0);
    }

    #[test]
    fn theta_product_small_lambda_limit() {
        let mol = HeatMollifier::standard(3);
        let f = product_bubble(3, BubbleParams::round(1e-3)).unwrap();
        let v = theta(&f, &mol, &axis_point(0.0), 1.0, &QuadOpts::default()).unwrap();
        assert!((v - 4.0).abs() < 0.01 * 4.0, "theta = {v}, want 4.000 +- 1%");
    }

    #[test]
    fn theta_cone_scale_invariant() {
        let mol = HeatMollifier::standard(3);
        let f = cone_map(0.5).unwrap();
        let opts = QuadOpts::default();
        let vals: Vec<Real> = [0.05, 0.1, 0.2]
            .iter()
            .map(|&r| theta(&f, &mol, &Point::zeros(3), r, &opts).unwrap())
            .collect();
        for v in &vals[1..] {
            assert!(
                (v - vals[0]).abs() < 1e-6 * vals[0],
                "theta(0, r) not constant: {vals:?}"
            );
        }
    }

    #[test]
    fn pinching_cone_center_zero() {
        let mol = HeatMollifier::standard(3);
        let f = cone_map(0.5).unwrap();
        for r in [0.1, 0.3] {
            let p = pinching(&f, &mol, &Point::zeros(3), r, &QuadOpts::default()).unwrap();
            assert!(p.abs() <= 1e-10, "pinching {p}");
        }
    }

    #[test]
    fn pinching_matches_fd_derivative() {
        let mol = HeatMollifier::standard(2);
        let f = standard_bubble(BubbleParams::round(1.0)).unwrap();
        let x = Point::zeros(2);
        let opts = QuadOpts::default();
        let r = 0.7;
        let h = 1e-3 * r;
        let tp = theta(&f, &mol, &x, r + h, &opts).unwrap();
        let tm = theta(&f, &mol, &x, r - h, &opts).unwrap();
        let fd = r * (tp - tm) / (2.0 * h);
        let p = pinching(&f, &mol, &x, r, &opts).unwrap();
        assert!((p - fd).abs() <= 1e-3 * fd.abs().max(1e-12), "pinching {p} vs fd {fd}");
    }

    #[test]
    fn partial_energies_product_bubble() {
        let mol = HeatMollifier::standard(3);
        let f = product_bubble(3, BubbleParams::round(0.3)).unwrap();
        let la = Plane::coordinate(3, &[2]);
        let set =
            partial_energies(&f, &mol, &axis_point(0.2), 0.5, &la, &QuadOpts::default()).unwrap();
        assert!(set.plane.abs() <= 1e-12, "L-energy {}", set.plane);
        // conformal split: radial equals angular on the axis
        assert!(
            (set.radial_perp - set.angular_perp).abs() <= 1e-8 * set.radial_perp,
            "n = {}, alpha = {}",
            set.radial_perp,
            set.angular_perp
        );
        // frame split: direct full-perp equals the sum
        assert!(
            (set.full_perp - (set.radial_perp + set.angular_perp)).abs()
                <= 1e-10 * set.full_perp.max(1e-30),
            "full {} vs sum {}",
            set.full_perp,
            set.radial_perp + set.angular_perp
        );
        // restricted never exceeds unrestricted, and is 1e-6-close at R = 20
        for (hat, plain) in [
            (set.hat_radial, set.radial_perp),
            (set.hat_angular, set.angular_perp),
            (set.hat_plane, set.plane),
        ] {
            assert!(hat <= plain + 1e-14);
            assert!((plain - hat).abs() <= 1e-6 * set.full_perp.max(1e-30));
        }
    }

    #[test]
    fn restricted_strictly_smaller_at_debug_cutoff() {
        let mol = HeatMollifier::new(3, 3.0).unwrap();
        let f = product_bubble(3, BubbleParams::round(0.3)).unwrap();
        let la = Plane::coordinate(3, &[2]);
        let set =
            partial_energies(&f, &mol, &axis_point(0.0), 0.5, &la, &QuadOpts::default()).unwrap();
        assert!(
            set.hat_radial < set.radial_perp * (1.0 - 1e-6),
            "hat {} vs plain {}",
            set.hat_radial,
            set.radial_perp
        );
        let c = constant_map(3);
        let zc = partial_energies(&c, &mol, &axis_point(0.0), 0.5, &la, &QuadOpts::default())
            .unwrap();
        assert_eq!(zc.hat_radial, 0.0);
    }

    #[test]
    fn standard_bubble_trivial_plane_weighted_energy() {
        // with L = {0}, the full-perp energy is the |y-x|^2-weighted energy
        let mol = HeatMollifier::standard(2);
        let f = standard_bubble(BubbleParams::round(1.0)).unwrap();
        let x = Point::from_slice(&[0.3, -0.1]);
        let la = Plane::trivial(2);
        let set = partial_energies(&f, &mol, &x, 0.8, &la, &QuadOpts::default()).unwrap();
        let spec = QuadratureSpec::new(
            Scheme::TensorGauss,
            32,
            Region::Disc {
                slice: Slice2::planar(),
                center2: [0.0, 0.0],
                r_in: 0.0,
                r_out: mol.support_radius(0.8) + x.norm(),
                fine: Some(1.0),
            },
        );
        let want = quad::integrate(
            |y| {
                let d = y.sub(&x);
                mol.rho_r(d.norm_sq(), 0.8) * d.norm_sq() * f.energy_density(y)
            },
            &spec,
        )
        .unwrap();
        assert!(
            (set.full_perp - want).abs() < 1e-8 * want,
            "{} vs {want}",
            set.full_perp
        );
    }

    #[test]
    fn energy_tensor_product_structure() {
        let mol = HeatMollifier::standard(3);
        let f = product_bubble(3, BubbleParams::round(0.4)).unwrap();
        let t = energy_tensor(&f, &mol, &axis_point(0.1), 0.5, &QuadOpts::default()).unwrap();
        let th = t.theta();
        assert!(t.eigenvalues[2].abs() <= 1e-12 * th, "lambda_3 = {}", t.eigenvalues[2]);
        assert!(
            (t.eigenvalues[0] - t.eigenvalues[1]).abs() <= 1e-8 * th,
            "lambda_1 - lambda_2 = {}",
            t.eigenvalues[0] - t.eigenvalues[1]
        );
        assert!((t.eigenvalues[0] - 0.5 * th).abs() <= 1e-8 * th);
        // e_3 = +- e_z
        let ez = Point::basis(3, 2);
        assert!(t.eigenvectors[2].dot(&ez).abs() > 1.0 - 1e-8);
        // eigen residuals
        for k in 0..3 {
            let r = t.q.matvec(&t.eigenvectors[k]).sub(&t.eigenvectors[k].scale(t.eigenvalues[k]));
            assert!(r.norm() <= 1e-8 * t.eigenvalues[0].max(1e-30));
        }
    }

    #[test]
    fn energy_tensor_rotation_equivariance() {
        let mol = HeatMollifier::standard(3);
        let f = product_bubble(3, BubbleParams::round(0.4)).unwrap();
        // rotation by 0.3 about the y-axis
        let (c, s) = (0.3f64.cos(), 0.3f64.sin());
        let mut rot = Matrix::zeros(3);
        rot.set(0, 0, c);
        rot.set(0, 2, s);
        rot.set(1, 1, 1.0);
        rot.set(2, 0, -s);
        rot.set(2, 2, c);
        let g = rotate_domain(&f, &rot);
        let opts = QuadOpts::default();
        let x = Point::from_slice(&[0.15, -0.1, 0.2]);
        let qg = energy_tensor(&g, &mol, &x, 0.4, &opts).unwrap().q;
        let qf = energy_tensor(&f, &mol, &rot.matvec(&x), 0.4, &opts).unwrap().q;
        let want = rot.transpose().mul(&qf).mul(&rot);
        let scale = qf.trace().max(1e-30);
        assert!(
            qg.sub(&want).max_abs_entry() <= 1e-8 * scale,
            "equivariance defect {}",
            qg.sub(&want).max_abs_entry() / scale
        );
    }

    #[test]
    fn gradient_modes() {
        let mol = HeatMollifier::standard(3);
        let opts = QuadOpts::default();
        // product bubble on the axis: both modes vanish along the axis
        let f = product_bubble(3, BubbleParams::round(0.3)).unwrap();
        let mm = moments(&f, &mol, &axis_point(0.25), 0.5, &opts).unwrap();
        let ez = Point::basis(3, 2);
        assert!(mm.grad_direct.dot(&ez).abs() <= 1e-10);
        assert!(mm.grad_stationary.dot(&ez).abs() <= 1e-10);

        // standard bubble off center: modes agree to 1e-3 relative
        let mol2 = HeatMollifier::standard(2);
        let b = standard_bubble(BubbleParams::round(1.0)).unwrap();
        let x = Point::from_slice(&[0.4, 0.2]);
        let mb = moments(&b, &mol2, &x, 0.6, &QuadOpts::default()).unwrap();
        let diff = mb.grad_direct.sub(&mb.grad_stationary).norm();
        let scale = mb.grad_direct.norm().max(mb.grad_stationary.norm());
        assert!(diff <= 1e-3 * scale, "gradient modes differ by {}", diff / scale);

        // bent bubble: clear witness of non-stationarity
        let curve = CurveSpec { amplitude: 0.05, omega: vec![0.8], phase: 0.0 };
        let bb = bent_bubble(3, BubbleParams::round(0.305), curve).unwrap();
        let xb = Point::from_slice(&[0.2, 0.1, 0.3]);
        let mbb = moments(&bb, &mol, &xb, 0.5, &opts).unwrap();
        let dbb = mbb.grad_direct.sub(&mbb.grad_stationary).norm()
            / mbb.grad_direct.norm().max(mbb.grad_stationary.norm());
        assert!(
            dbb > 10.0 * (diff / scale).max(1e-6),
            "bent witness {dbb} vs baseline {}",
            diff / scale
        );
    }

    #[test]
    fn angular_energy_closed_form() {
        let f = product_bubble(3, BubbleParams::round(1.0)).unwrap();
        let ap = AffinePlane::new(Plane::coordinate(3, &[2]), Point::zeros(3)).unwrap();
        let y = Point::from_slice(&[2.0, 0.0, 0.4]);
        let e = angular_energy(&f, &ap, &y, 64).unwrap();
        assert!((e - 0.64).abs() < 1e-6, "E_alpha = {e}, want 16/25");

        // rotational invariance around the plane
        let y2 = Point::from_slice(&[0.0, 2.0, 0.4]);
        let e2 = angular_energy(&f, &ap, &y2, 64).unwrap();
        assert!((e - e2).abs() <= 1e-10 * e);

        let c = constant_map(3);
        assert_eq!(angular_energy(&c, &ap, &y, 64).unwrap(), 0.0);

        // monotone decay beyond s = lambda
        let mut last = Real::INFINITY;
        for s in [1.0, 1.5, 2.5, 4.0, 8.0] {
            let ys = Point::from_slice(&[s, 0.0, 0.0]);
            let es = angular_energy(&f, &ap, &ys, 64).unwrap();
            assert!(es < last + 1e-12);
            last = es;
        }
    }

    #[test]
    fn subharmonicity_closed_form_ratios() {
        let lam = 0.1;
        let f = product_bubble(3, BubbleParams::round(lam)).unwrap();
        let ap = AffinePlane::new(Plane::coordinate(3, &[2]), Point::zeros(3)).unwrap();
        let closed = |x: Real| 4.0 * (x * x - 4.0 * x + 1.0) / (1.0 + x).powi(2);
        for (s_over_l, tol) in [(3.0_f64, 1e-3_f64), (10.0, 1e-3), (100.0, 1e-2)] {
            let s = s_over_l * lam;
            let y = Point::from_slice(&[s, 0.0, 0.0]);
            let p = subharmonicity_probe(&f, &ap, &y, 0.05, 64).unwrap();
            let want = closed(s_over_l * s_over_l);
            assert!(
                (p.ratio - want).abs() < tol.max(1e-3 * want.abs()),
                "s/l = {s_over_l}: ratio {} want {want}",
                p.ratio
            );
        }
        // ratio = 1 at s = lambda sqrt(3 + 2 sqrt 2)
        let s_star = lam * (3.0 + 2.0 * 2.0f64.sqrt()).sqrt();
        let p = subharmonicity_probe(
            &f,
            &ap,
            &Point::from_slice(&[s_star, 0.0, 0.0]),
            0.05,
            64,
        )
        .unwrap();
        assert!((p.ratio - 1.0).abs() < 1e-3, "ratio at root {}", p.ratio);
        let _ = PI;
    }
}
