//! Runtime invariant suite over the mollifier, quadrature and geometry
//! layers; used by the CLI self-check analysis.

use crate::energy::QuadOpts;
use crate::fields::{cone_map, BubbleParams};
use crate::mollifier::{phi_cutoff, RestrictedMollifier};
use crate::quad::{self, QuadratureSpec, Region, Scheme};
use crate::rng::CounterRng;
use crate::{energy, AffinePlane, HeatMollifier, Plane, Point, Real};
use serde::Serialize;

#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

fn check(out: &mut Vec<Check>, name: &str, passed: bool, detail: String) {
    out.push(Check { name: name.to_string(), passed, detail });
}

pub fn run_all(nodes_per_axis: usize, seed: u64) -> Vec<Check> {
    let mut out = Vec::new();
    mollifier_checks(&mut out);
    quadrature_checks(&mut out, nodes_per_axis);
    geometry_checks(&mut out, seed);
    out
}

fn mollifier_checks(out: &mut Vec<Check>) {
    for m in [2usize, 3] {
        let mol = HeatMollifier::standard(m);
        for r in [0.1, 1.0, 3.0] {
            let spec = QuadratureSpec::new(
                Scheme::TensorGauss,
                48,
                Region::Shell {
                    center: vec![0.0; m],
                    r_in: 0.0,
                    r_out: mol.support_radius(r),
                    fine: None,
                },
            );
            let mass = quad::integrate(|y: &Point| mol.rho_r(y.norm_sq(), r), &spec)
                .unwrap_or(Real::NAN);
            check(
                out,
                &format!("mollifier mass m={m} r={r}"),
                (mass - 1.0).abs() < 1e-6,
                format!("mass = {mass:.9}"),
            );
        }
    }

    let mol = HeatMollifier::standard(3);
    let rr = mol.r_cutoff();
    let mut fd_ok = true;
    let mut worst = 0.0_f64;
    let h = 1e-5;
    let mut t = 0.013;
    while t < rr + 1.9 {
        let fd = (mol.rho(t + h) - mol.rho(t - h)) / (2.0 * h);
        let err = (fd - mol.rho_dot(t)).abs();
        if err > 1e-8 * mol.c_m() {
            fd_ok = false;
            worst = worst.max(err / mol.c_m());
        }
        t += 0.173;
    }
    check(out, "mollifier d/dt seam-free", fd_ok, format!("worst rel err {worst:.2e}"));

    let mut ratio: f64 = 0.0;
    let mut t = 0.0;
    while t < rr + 2.0 {
        let den = -mol.rho_dot(t);
        if den > 0.0 {
            ratio = ratio.max(mol.rho(t) / den);
        }
        t += 0.01;
    }
    check(out, "rho <= -C rho_dot with C <= 3", ratio <= 3.0, format!("fitted C = {ratio:.3}"));

    let exact = (0..40).all(|k| {
        let t = 0.5 * k as Real;
        t >= rr || (mol.rho(t) + mol.rho_dot(t)).abs() == 0.0
    });
    check(out, "rho + rho_dot = 0 on the exponential range", exact, String::new());

    let (mut d1, mut d2): (f64, f64) = (0.0, 0.0);
    let mut t: f64 = 1.1 + 1e-4;
    while t < 1.9 {
        let h: f64 = 1e-6;
        d1 = d1.max(((phi_cutoff(t + h) - phi_cutoff(t - h)) / (2.0 * h)).abs());
        d2 = d2
            .max(((phi_cutoff(t + h) - 2.0 * phi_cutoff(t) + phi_cutoff(t - h)) / (h * h)).abs());
        t += 1e-3;
    }
    check(
        out,
        "psi transition derivative bounds",
        d1 <= 1.876 && d2 <= 9.38,
        format!("|phi'| <= {d1:.4}, |phi''| <= {d2:.4}"),
    );

    // restricted kernels at the debug cutoff where the tube is visible
    let dbg = HeatMollifier::new(3, 3.0).unwrap();
    let rm = RestrictedMollifier::new(dbg, Plane::coordinate(3, &[2]));
    let mut grad_ok = true;
    for (sx, z) in [(0.3, 0.2), (0.05, 0.5), (1.0, -1.0)] {
        let h = 1e-6;
        let yp = Point::from_slice(&[sx + h, 0.0, z]);
        let ym = Point::from_slice(&[sx - h, 0.0, z]);
        let fd = (rm.rho_tilde_r(&yp, 1.0) - rm.rho_tilde_r(&ym, 1.0)) / (2.0 * h);
        let want = -sx * rm.rho_hat_r(&Point::from_slice(&[sx, 0.0, z]), 1.0);
        if (fd - want).abs() > 1e-6 * rm.base().c_m().max(want.abs()) {
            grad_ok = false;
        }
    }
    check(out, "restricted kernel gradient identity", grad_ok, String::new());

    let mol20 = HeatMollifier::standard(3);
    let rm20 = RestrictedMollifier::new(mol20.clone(), Plane::coordinate(3, &[2]));
    let rexp = (-0.5 * mol20.r_cutoff()).exp();
    let mut fitted: f64 = 0.0;
    let mut signs_ok = true;
    for s in [1e-6, 1e-2, 0.5, 2.0] {
        let y = Point::from_slice(&[s, 0.0, 0.3]);
        let diff = mol20.rho_r(y.norm_sq(), 1.0) - rm20.rho_tilde_r(&y, 1.0);
        if diff < -1e-18 {
            signs_ok = false;
        }
        let bound = rexp * mol20.rho_r(y.norm_sq(), 2.0);
        if bound > 0.0 {
            fitted = fitted.max(diff / bound);
        }
    }
    check(
        out,
        "0 <= rho - rho_tilde <= C e^{-R/2} rho_2r",
        signs_ok && fitted.is_finite(),
        format!("fitted C = {fitted:.3}"),
    );
}

fn quadrature_checks(out: &mut Vec<Check>, n: usize) {
    let spec = QuadratureSpec::new(
        Scheme::TensorGauss,
        n,
        Region::Shell { center: vec![0.0; 3], r_in: 0.0, r_out: 1.0, fine: None },
    );
    let vol = quad::integrate(|_| 1.0, &spec).unwrap_or(Real::NAN);
    let want = 4.0 * std::f64::consts::PI / 3.0;
    check(
        out,
        "unit ball volume (m=3)",
        (vol - want).abs() < 1e-6 * want,
        format!("{vol:.9} vs {want:.9}"),
    );

    let spec = QuadratureSpec::new(
        Scheme::TensorGauss,
        4,
        Region::Box { lo: vec![-1.0, -1.0], hi: vec![1.0, 1.0] },
    );
    let poly = quad::integrate(|p| p.get(0).powi(2) * p.get(1).powi(2), &spec).unwrap_or(Real::NAN);
    check(
        out,
        "tensor polynomial exactness",
        (poly - 4.0 / 9.0).abs() < 1e-14,
        format!("{poly:.17}"),
    );

    // node-doubling convergence gate on three smooth integrands
    let mk = |nn| {
        QuadratureSpec::new(
            Scheme::TensorGauss,
            nn,
            Region::Shell { center: vec![0.1, -0.2, 0.05], r_in: 0.0, r_out: 1.5, fine: None },
        )
    };
    let fs: Vec<(&str, Box<dyn Fn(&Point) -> Real + Sync>)> = vec![
        ("exp", Box::new(|p: &Point| (-p.norm_sq()).exp())),
        ("cos", Box::new(|p: &Point| (p.get(0) + 2.0 * p.get(1)).cos())),
        ("rational", Box::new(|p: &Point| 1.0 / (1.0 + p.norm_sq()))),
    ];
    for (name, f) in &fs {
        let a = quad::integrate(f.as_ref(), &mk(n)).unwrap_or(Real::NAN);
        let b = quad::integrate(f.as_ref(), &mk(2 * n)).unwrap_or(Real::NAN);
        check(
            out,
            &format!("node-doubling convergence ({name})"),
            (a - b).abs() <= 1e-8 * b.abs().max(1.0),
            format!("delta = {:.2e}", (a - b).abs()),
        );
    }

    // spherical scheme: the cone's normalized energy is scale free
    let cone = cone_map(0.5).unwrap();
    let mol = HeatMollifier::standard(3);
    let opts = QuadOpts::with_nodes(n);
    let t1 = energy::theta(&cone, &mol, &Point::zeros(3), 0.05, &opts).unwrap_or(Real::NAN);
    let t2 = energy::theta(&cone, &mol, &Point::zeros(3), 0.2, &opts).unwrap_or(Real::NAN);
    check(
        out,
        "cone energy scale invariance",
        (t1 - t2).abs() < 1e-6 * t1,
        format!("theta(0, r): {t1:.9} vs {t2:.9}"),
    );
    let _ = BubbleParams::round(1.0);
}

fn geometry_checks(out: &mut Vec<Check>, seed: u64) {
    let rng = CounterRng::new(seed, "selfcheck-geometry");
    let mut proj_ok = true;
    let mut tri_ok = true;
    let mut frame_ok = true;
    let mut k = 0u64;
    for trial in 0..40u64 {
        let m = 3 + (trial % 2) as usize;
        let dim = 1 + (trial % (m as u64 - 1)) as usize;
        let mut draw = |n: usize| {
            let mut v = Point::zeros(n);
            for d in 0..n {
                v.set(d, rng.range_at(k, -1.0, 1.0));
                k += 1;
            }
            v
        };
        let mk = |vs: &[Point]| Plane::new(m, vs);
        let vs: Vec<Point> = (0..dim).map(|_| draw(m)).collect();
        let plane = match mk(&vs) {
            Ok(p) => p,
            Err(_) => continue, // random span too degenerate; skip
        };
        // projector invariants
        let pr = plane.projector();
        let idem = pr.mul(pr).sub(pr).max_abs_entry();
        let sym = pr.sub(&pr.transpose()).max_abs_entry();
        let tr = (pr.trace() - dim as Real).abs();
        let complete = {
            let mut q = *plane.orthogonal().projector();
            q.add_assign(pr);
            q.sub(&crate::Matrix::identity(m)).max_abs_entry()
        };
        if idem > 1e-12 || sym > 1e-12 || tr > 1e-12 || complete > 1e-12 {
            proj_ok = false;
        }
        // triangle inequality on random triples
        let (p1, p2, p3) = (plane.clone(), mk(&(0..dim).map(|_| draw(m)).collect::<Vec<_>>()), mk(&(0..dim).map(|_| draw(m)).collect::<Vec<_>>()));
        if let (Ok(p2), Ok(p3)) = (p2, p3) {
            let d12 = crate::geometry::grassmann_distance(&p1, &p2).unwrap();
            let d23 = crate::geometry::grassmann_distance(&p2, &p3).unwrap();
            let d13 = crate::geometry::grassmann_distance(&p1, &p3).unwrap();
            if d13 > d12 + d23 + 1e-10 {
                tri_ok = false;
            }
        }
        // polar frame completeness for codimension-2 planes
        if m - dim == 2 {
            let ap = AffinePlane::new(plane, draw(m)).unwrap();
            let y = draw(m);
            if let Ok(f) = ap.perp_polar(&y) {
                let back = ap.base.add(&f.y_l).axpy(f.s_perp, &f.n_perp);
                if back.sub(&y).norm() > 1e-12 {
                    frame_ok = false;
                }
                let v = draw(m);
                let lhs = ap.plane.project(&v).norm_sq()
                    + v.dot(&f.n_perp).powi(2)
                    + v.dot(&f.alpha_perp).powi(2);
                if (lhs - v.norm_sq()).abs() > 1e-12 * v.norm_sq().max(1.0) {
                    frame_ok = false;
                }
            }
        }
    }
    check(out, "projector invariants", proj_ok, String::new());
    check(out, "grassmann triangle inequality", tri_ok, String::new());
    check(out, "perp polar frame completeness", frame_ok, String::new());
}
