//! Acceptance gate: one test per criterion, each printing a PASS/FAIL line.
//! Criterion 10 (byte-identical reports across worker counts) lives in the
//! CLI crate's test suite next to the scenario runner.

use bubblescope_core::bestfit::{self, TrOptions};
use bubblescope_core::energy::{self, QuadOpts};
use bubblescope_core::fields::{
    bent_bubble, cone_link_slice, cone_map, product_bubble, standard_bubble,
    stationary_residual, BubbleParams, CurveSpec, TestVectorField,
};
use bubblescope_core::geometry::grassmann_distance;
use bubblescope_core::identity::{
    self, angular_profile, defect_density, energy_identity_report, DefectScenario, ProfileConfig,
};
use bubblescope_core::mollifier::RadiusFn;
use bubblescope_core::quad::{self, QuadratureSpec, Region, Scheme, Slice2};
use bubblescope_core::regions::{cone_splitting_check, ConeSplitVariant};
use bubblescope_core::rng::CounterRng;
use bubblescope_core::{AffinePlane, HeatMollifier, MapField, Plane, Point, Real};
use std::time::Instant;

const PI: Real = std::f64::consts::PI;

fn criterion<F>(number: u32, name: &str, budget_secs: f64, body: F)
where
    F: FnOnce() -> Result<String, String>,
{
    let t0 = Instant::now();
    let outcome = body();
    let dt = t0.elapsed().as_secs_f64();
    match outcome {
        Ok(detail) => {
            println!("ACCEPTANCE {number:02} {name}: PASS ({dt:.1}s) {detail}");
            assert!(
                dt < budget_secs,
                "criterion {number} exceeded its time budget: {dt:.1}s >= {budget_secs}s"
            );
        }
        Err(msg) => {
            println!("ACCEPTANCE {number:02} {name}: FAIL ({dt:.1}s) {msg}");
            panic!("criterion {number} failed: {msg}");
        }
    }
}

fn geometric_grid(lo: Real, hi: Real, n: usize) -> Vec<Real> {
    (0..n).map(|i| lo * (hi / lo).powf(i as Real / (n - 1) as Real)).collect()
}

fn ok_rel(value: Real, want: Real, tol: Real) -> Result<(), String> {
    if (value - want).abs() <= tol * want.abs() {
        Ok(())
    } else {
        Err(format!("{value} vs {want} (rel {:.2e} > {tol:.0e})", (value - want).abs() / want.abs()))
    }
}

#[test]
fn criterion_01_bubble_energy_8pi() {
    criterion(1, "standard bubble energy 8 pi, lambda independent", 5.0, || {
        let mut energies = Vec::new();
        for lam in [0.25, 1.0, 4.0] {
            let f = standard_bubble(BubbleParams::round(lam)).map_err(|e| e.to_string())?;
            let spec = QuadratureSpec::new(
                Scheme::TensorGauss,
                32,
                Region::Disc {
                    slice: Slice2::planar(),
                    center2: [0.0, 0.0],
                    r_in: 0.0,
                    r_out: 300.0 * lam,
                    fine: Some(lam),
                },
            );
            let e = quad::integrate(|p| f.energy_density(p), &spec).map_err(|e| e.to_string())?;
            ok_rel(e, 25.1327, 1e-3).map_err(|m| format!("lambda = {lam}: {m}"))?;
            energies.push(e);
        }
        let mean: Real = energies.iter().sum::<Real>() / energies.len() as Real;
        let spread = (energies.iter().cloned().fold(f64::MIN, Real::max)
            - energies.iter().cloned().fold(f64::MAX, Real::min))
            / mean;
        if spread > 1e-4 {
            return Err(format!("lambda spread {spread:.2e} > 1e-4"));
        }
        Ok(format!("E = {energies:?}, spread {spread:.1e}"))
    });
}

#[test]
fn criterion_02_monotonicity_and_pinching() {
    criterion(2, "monotone theta and pinching identity", 120.0, || {
        let opts = QuadOpts::default();
        let cases: Vec<(&str, MapField, Vec<Point>, Real, Real)> = vec![
            (
                "standard_bubble",
                standard_bubble(BubbleParams::round(1.0)).unwrap(),
                vec![
                    Point::from_slice(&[0.0, 0.0]),
                    Point::from_slice(&[0.3, 0.2]),
                    Point::from_slice(&[-0.5, 0.1]),
                    Point::from_slice(&[0.8, -0.4]),
                    Point::from_slice(&[-0.2, -0.6]),
                ],
                0.05,
                0.8,
            ),
            (
                "product_bubble",
                product_bubble(3, BubbleParams::round(1.0)).unwrap(),
                vec![
                    Point::from_slice(&[0.0, 0.0, 0.0]),
                    Point::from_slice(&[0.2, 0.1, 0.3]),
                    Point::from_slice(&[-0.3, 0.0, -0.2]),
                    Point::from_slice(&[0.0, 0.4, 0.5]),
                    Point::from_slice(&[0.1, -0.1, -0.4]),
                ],
                0.05,
                0.8,
            ),
            (
                "cone_map",
                cone_map(0.5).unwrap(),
                vec![
                    Point::from_slice(&[0.0, 0.0, 1.0]),
                    Point::from_slice(&[0.2, 0.1, 0.9]),
                    Point::from_slice(&[0.0, 0.0, -1.0]),
                    Point::from_slice(&[0.3, -0.2, 0.7]),
                    Point::from_slice(&[0.0, 0.2, 1.1]),
                ],
                0.05,
                0.5,
            ),
        ];
        let mut checked = 0;
        for (name, f, points, r_lo, r_hi) in &cases {
            let m = if f.dim() == 2 { 2 } else { 3 };
            let mol = HeatMollifier::standard(m);
            for x in points {
                let grid = geometric_grid(*r_lo, *r_hi, 20);
                let mut prev = -Real::INFINITY;
                for &r in &grid {
                    let th = energy::theta(&f, &mol, x, r, &opts).map_err(|e| e.to_string())?;
                    if th < prev - 1e-8 * prev.abs().max(1e-12) {
                        return Err(format!(
                            "{name} at {x:?}: theta({r}) = {th} < previous {prev}"
                        ));
                    }
                    prev = th;
                }
                // pinching vs r d theta / dr at three interior scales
                for &r in &[grid[5], grid[10], grid[15]] {
                    let h = 1e-3 * r;
                    let tp = energy::theta(&f, &mol, x, r + h, &opts).map_err(|e| e.to_string())?;
                    let tm = energy::theta(&f, &mol, x, r - h, &opts).map_err(|e| e.to_string())?;
                    let fd = r * (tp - tm) / (2.0 * h);
                    let p = energy::pinching(&f, &mol, x, r, &opts).map_err(|e| e.to_string())?;
                    let th = energy::theta(&f, &mol, x, r, &opts).map_err(|e| e.to_string())?;
                    if (p - fd).abs() > 1e-3 * fd.abs().max(1e-9 * th) {
                        return Err(format!(
                            "{name} at {x:?}, r = {r}: pinching {p} vs r d theta/dr {fd}"
                        ));
                    }
                    checked += 1;
                }
            }
        }
        Ok(format!("{checked} pinching identities, 300 monotonicity points"))
    });
}

#[test]
fn criterion_03_exact_symmetry_suite() {
    criterion(3, "exact symmetry structure", 60.0, || {
        let mol = HeatMollifier::standard(3);
        let opts = QuadOpts::default();
        let f = product_bubble(3, BubbleParams::round(0.3)).unwrap();
        let x = Point::from_slice(&[0.0, 0.0, 0.25]);
        let r = 0.5;
        let t = energy::energy_tensor(&f, &mol, &x, r, &opts).map_err(|e| e.to_string())?;
        let th = t.theta();
        if t.eigenvalues[2].abs() > 1e-10 * th {
            return Err(format!("lambda_3 / theta = {}", t.eigenvalues[2] / th));
        }
        if (t.eigenvalues[0] - t.eigenvalues[1]).abs() > 1e-8 * th {
            return Err(format!(
                "|lambda_1 - lambda_2| / theta = {}",
                (t.eigenvalues[0] - t.eigenvalues[1]).abs() / th
            ));
        }
        let bp = bestfit::best_plane(&f, &mol, &x, r, &opts).map_err(|e| e.to_string())?;
        let la = Plane::coordinate(3, &[2]);
        let d = grassmann_distance(&bp.plane, &la).map_err(|e| e.to_string())?;
        if d > 1e-8 {
            return Err(format!("best plane d_Gr = {d}"));
        }
        let set =
            energy::partial_energies(&f, &mol, &x, r, &la, &opts).map_err(|e| e.to_string())?;
        if set.plane.abs() > 1e-12 {
            return Err(format!("theta(x, r; L_A) = {}", set.plane));
        }
        let el = bestfit::theta_el_map(&f, &mol, &x, r, &la, &opts).map_err(|e| e.to_string())?;
        if el[0].abs().max(el[1].abs()) > 1e-10 {
            return Err(format!("Theta residual = {el:?}"));
        }
        let cone = cone_map(0.5).unwrap();
        for r in geometric_grid(0.05, 0.4, 6) {
            let p = energy::pinching(&cone, &mol, &Point::zeros(3), r, &opts)
                .map_err(|e| e.to_string())?;
            if p.abs() > 1e-10 {
                return Err(format!("cone pinching(0, {r}) = {p}"));
            }
        }
        Ok(format!("lambda_3/theta = {:.1e}, d_Gr = {d:.1e}", t.eigenvalues[2].abs() / th))
    });
}

#[test]
fn criterion_04_stationarity_residuals() {
    criterion(4, "stationarity residuals and the bent witness", 240.0, || {
        let rng = CounterRng::new(2024, "xi");
        // standard bubble over a box rule
        let bubble = standard_bubble(BubbleParams::round(1.0)).unwrap();
        let spec2 = QuadratureSpec::new(
            Scheme::TensorGauss,
            32,
            Region::Box { lo: vec![-2.0, -2.0], hi: vec![2.0, 2.0] },
        );
        let mut bubble_max: Real = 0.0;
        for k in 0..10 {
            let c = Point::from_slice(&[
                rng.range_at(100 + k, -0.5, 0.5),
                rng.range_at(200 + k, -0.5, 0.5),
            ]);
            let xi = TestVectorField::seeded(2, c, 1.0, &rng, k);
            let r = stationary_residual(&bubble, &xi, &spec2).map_err(|e| e.to_string())?.abs();
            bubble_max = bubble_max.max(r);
        }
        if bubble_max > 1e-3 {
            return Err(format!("bubble residual {bubble_max:.2e} > 1e-3"));
        }

        // cone with the spherical scheme centered at the singular point
        let cone = cone_map(0.5).unwrap();
        let spec3 = QuadratureSpec::new(
            Scheme::Spherical,
            32,
            Region::Shell { center: vec![0.0; 3], r_in: 0.0, r_out: 2.5, fine: None },
        );
        let mut cone_max: Real = 0.0;
        for k in 0..10 {
            let xi = TestVectorField::seeded(3, Point::zeros(3), 1.5, &rng, 100 + k);
            let r = stationary_residual(&cone, &xi, &spec3).map_err(|e| e.to_string())?.abs();
            cone_max = cone_max.max(r);
        }
        if cone_max > 1e-2 {
            return Err(format!("cone residual {cone_max:.2e} > 1e-2"));
        }

        // gradient modes agree on stationary fields
        let mol2 = HeatMollifier::standard(2);
        let mol3 = HeatMollifier::standard(3);
        let opts = QuadOpts::default();
        let mut grad_baseline: Real = 0.0;
        let mut mode_diff = |f: &MapField, mol: &HeatMollifier, x: &Point, r: Real| {
            let mm = energy::moments(f, mol, x, r, &opts).unwrap();
            mm.grad_direct.sub(&mm.grad_stationary).norm()
                / mm.grad_direct.norm().max(mm.grad_stationary.norm())
        };
        for (f, mol, x, r) in [
            (&bubble, &mol2, Point::from_slice(&[0.4, 0.2]), 0.6),
            (&product_bubble(3, BubbleParams::round(0.3)).unwrap(), &mol3,
                Point::from_slice(&[0.25, -0.15, 0.2]), 0.5),
            (&cone, &mol3, Point::from_slice(&[0.2, 0.1, 0.9]), 0.3),
        ] {
            let d = mode_diff(f, mol, &x, r);
            if d > 1e-3 {
                return Err(format!("gradient modes differ by {d:.2e} on a stationary field"));
            }
            grad_baseline = grad_baseline.max(d);
        }

        // bent family exceeds ten times both baselines
        let curve = CurveSpec { amplitude: 0.05, omega: vec![0.8], phase: 0.0 };
        let bent = bent_bubble(3, BubbleParams::round(0.3), curve).unwrap();
        let spec_b = QuadratureSpec::new(
            Scheme::TensorGauss,
            32,
            Region::Box { lo: vec![-2.0; 3], hi: vec![2.0; 3] },
        );
        let mut bent_max: Real = 0.0;
        for k in 0..10 {
            let c = Point::from_slice(&[
                rng.range_at(300 + k, -0.3, 0.3),
                rng.range_at(400 + k, -0.3, 0.3),
                rng.range_at(500 + k, -0.3, 0.3),
            ]);
            let xi = TestVectorField::seeded(3, c, 1.0, &rng, 200 + k);
            let r = stationary_residual(&bent, &xi, &spec_b).map_err(|e| e.to_string())?.abs();
            bent_max = bent_max.max(r);
        }
        let stationary_floor = bubble_max.max(cone_max);
        if bent_max <= 10.0 * stationary_floor {
            return Err(format!(
                "bent witness too weak: {bent_max:.2e} vs 10 x {stationary_floor:.2e}"
            ));
        }
        let bent_grad = mode_diff(&bent, &mol3, &Point::from_slice(&[0.2, 0.1, 0.3]), 0.5);
        if bent_grad <= 10.0 * grad_baseline {
            return Err(format!(
                "bent gradient witness too weak: {bent_grad:.2e} vs 10 x {grad_baseline:.2e}"
            ));
        }
        Ok(format!(
            "residuals: bubble {bubble_max:.1e}, cone {cone_max:.1e}, bent {bent_max:.1e}; \
             gradient modes {grad_baseline:.1e} vs bent {bent_grad:.1e}"
        ))
    });
}

#[test]
fn criterion_05_energy_identity_one_bubble() {
    criterion(5, "energy identity, one bubble", 600.0, || {
        let mol = HeatMollifier::standard(3);
        let opts = QuadOpts::default();
        let fam = |lam: Real| product_bubble(3, BubbleParams::round(lam)).unwrap();
        let lambdas = [1e-1, 1e-2, 1e-3];
        let want = 8.0 * PI;

        let est = defect_density(&fam, &mol, &Point::zeros(3), 1.0, &lambdas, &opts)
            .map_err(|e| e.to_string())?;
        ok_rel(est.value, want, 0.01).map_err(|m| format!("defect density: {m}"))?;

        let slice = Slice2::new(&Point::zeros(3), &Point::basis(3, 0), &Point::basis(3, 1));
        let report = energy_identity_report(
            &fam,
            &mol,
            &DefectScenario::Mollified { x: Point::zeros(3), r: 1.0, slice },
            [0.0, 0.0],
            1.0,
            &lambdas,
            0.1,
            &opts,
        )
        .map_err(|e| e.to_string())?;
        if report.tree.nodes.len() != 1 {
            return Err(format!("expected 1 bubble, found {}", report.tree.nodes.len()));
        }
        ok_rel(report.bubble_energies[0], want, 0.01).map_err(|m| format!("E_1: {m}"))?;
        ok_rel(report.tree.nodes[0].params.lambda, 1e-3, 0.01)
            .map_err(|m| format!("fitted lambda: {m}"))?;
        if report.rel_discrepancy > 0.02 {
            return Err(format!("discrepancy {:.3}% > 2%", 100.0 * report.rel_discrepancy));
        }
        if !report.sub_energy_ok {
            return Err("sub-energy inequality violated".into());
        }
        Ok(format!(
            "e = {:.4}, E_1 = {:.4}, discrepancy {:.2}%",
            report.defect,
            report.bubble_energies[0],
            100.0 * report.rel_discrepancy
        ))
    });
}

#[test]
fn criterion_06_energy_identity_two_bubbles() {
    criterion(6, "energy identity, two bubbles (cone link slice)", 600.0, || {
        let mol = HeatMollifier::standard(2);
        let opts = QuadOpts::default();
        let fam = |lam: Real| cone_link_slice(lam).unwrap();
        let lambdas = [0.08, 0.04, 0.02];
        let want = 16.0 * PI;

        let report = energy_identity_report(
            &fam,
            &mol,
            &DefectScenario::SliceEnergy,
            [0.0, 0.0],
            3.0,
            &lambdas,
            0.1,
            &opts,
        )
        .map_err(|e| e.to_string())?;
        ok_rel(report.defect, want, 0.02).map_err(|m| format!("defect estimate: {m}"))?;
        if report.tree.nodes.len() != 2 {
            return Err(format!("expected 2 bubbles, found {}", report.tree.nodes.len()));
        }
        for (i, e) in report.bubble_energies.iter().enumerate() {
            ok_rel(*e, 8.0 * PI, 0.02).map_err(|m| format!("E_{i}: {m}"))?;
        }
        if report.rel_discrepancy > 0.03 {
            return Err(format!("discrepancy {:.3}% > 3%", 100.0 * report.rel_discrepancy));
        }
        if !report.sub_energy_ok {
            return Err("sub-energy inequality violated".into());
        }
        Ok(format!(
            "e = {:.4} (16 pi = {want:.4}), E = {:?}, discrepancy {:.2}%",
            report.defect,
            report.bubble_energies,
            100.0 * report.rel_discrepancy
        ))
    });
}

#[test]
fn criterion_07_subharmonicity() {
    criterion(7, "angular subharmonicity and superconvexity", 300.0, || {
        let lam = 0.1;
        let f = product_bubble(3, BubbleParams::round(lam)).unwrap();
        let ap = AffinePlane::new(Plane::coordinate(3, &[2]), Point::zeros(3)).unwrap();
        let closed = |x: Real| 4.0 * (x * x - 4.0 * x + 1.0) / (1.0 + x).powi(2);
        for s_over_l in [3.0, 10.0, 100.0] {
            let s = s_over_l * lam;
            let p = energy::subharmonicity_probe(
                &f,
                &ap,
                &Point::from_slice(&[s, 0.0, 0.0]),
                0.05,
                128,
            )
            .map_err(|e| e.to_string())?;
            let want = closed(s_over_l * s_over_l);
            if (p.ratio - want).abs() > 1e-3 * want.abs().max(1.0) {
                return Err(format!("s/lambda = {s_over_l}: ratio {} vs {want}", p.ratio));
            }
        }
        // ratio >= 1 on s >= 2.5 lambda
        for s in geometric_grid(2.5 * lam, 120.0 * lam, 40) {
            let p = energy::subharmonicity_probe(
                &f,
                &ap,
                &Point::from_slice(&[s, 0.0, 0.0]),
                0.05,
                96,
            )
            .map_err(|e| e.to_string())?;
            if p.ratio < 1.0 {
                return Err(format!("ratio {} < 1 at s = {s}", p.ratio));
            }
        }

        // superconvexity of the restricted angular profile on the deep
        // annulus [5 lambda, 0.3] (closed-form oracle places the residual
        // zero crossing at about 4 lambda)
        let mol = HeatMollifier::standard(3);
        let lam = 0.01;
        let fp = product_bubble(3, BubbleParams::round(lam)).unwrap();
        let grid = geometric_grid(5.0 * lam, 0.3, 9);
        let graphs: Vec<(Real, bubblescope_core::bestfit::SubmanifoldGraph)> = grid
            .iter()
            .map(|&r| {
                (r, bubblescope_core::bestfit::SubmanifoldGraph::flat(ap.clone(), 1.0, r / 4.0))
            })
            .collect();
        let prof = angular_profile(
            &fp,
            &mol,
            &graphs,
            &ProfileConfig::toy(3, 0.0),
            &QuadOpts::default(),
        )
        .map_err(|e| e.to_string())?;
        for (i, res) in prof.superconvexity_residual.iter().enumerate() {
            if *res < 0.0 {
                return Err(format!(
                    "superconvexity residual {res:.3e} < 0 at r = {}",
                    prof.rows[i + 1].r
                ));
            }
        }
        Ok(format!(
            "profile residuals: {:?}",
            prof.superconvexity_residual.iter().map(|r| (r / prof.rows[1].value * 100.0).round() / 100.0).collect::<Vec<_>>()
        ))
    });
}

#[test]
fn criterion_08_tr_fitting() {
    criterion(8, "approximating submanifold fit", 600.0, || {
        let mol = HeatMollifier::standard(3);
        let opts = QuadOpts::default();
        let la = AffinePlane::new(Plane::coordinate(3, &[2]), Point::zeros(3)).unwrap();
        let a = 0.05;
        let curve = CurveSpec { amplitude: a, omega: vec![0.8], phase: 0.0 };
        let f = bent_bubble(3, BubbleParams::round(0.05), curve.clone()).unwrap();

        // tolerance pinned to 1e-8 of the energy scale
        let th0 = energy::theta(&f, &mol, &Point::zeros(3), 0.3, &opts)
            .map_err(|e| e.to_string())?;
        let tol = 1e-8 * th0;
        let mut sups = Vec::new();
        for r in [0.2, 0.3, 0.5] {
            let g = bestfit::build_tr(&f, &mol, &la, r, 1.0, tol, &opts, &TrOptions::default())
                .map_err(|e| e.to_string())?;
            for &res in g.residuals() {
                if res > tol {
                    return Err(format!("unconverged node residual {res:.2e} at r = {r}"));
                }
            }
            let d = g.sup_distance_to_curve(&|t: &[Real]| curve.eval(t));
            if d > 0.1 * a {
                return Err(format!("r = {r}: sup distance {d:.4} > 0.1 a = {}", 0.1 * a));
            }
            sups.push(d / a);
        }

        let fp = product_bubble(3, BubbleParams::round(0.1)).unwrap();
        let g = bestfit::build_tr(&fp, &mol, &la, 0.3, 1.0, tol, &opts, &TrOptions::default())
            .map_err(|e| e.to_string())?;
        if g.sup_value() > 1e-8 {
            return Err(format!("product graph not flat: sup |t_r| = {}", g.sup_value()));
        }
        Ok(format!("sup distance / a = {sups:?}, product sup = {:.1e}", g.sup_value()))
    });
}

#[test]
fn criterion_09_constant_tracking() {
    criterion(9, "constant-tracking suites", 600.0, || {
        let opts = QuadOpts::default();
        let mol3 = HeatMollifier::standard(3);
        let mol2 = HeatMollifier::standard(2);

        // (a) spatial gradient ratio r^2 |grad_L theta|^2 <= C r theta-dot
        // theta(x, 2r; L), fitted at the first sweep point per family
        let curve = CurveSpec { amplitude: 0.05, omega: vec![0.8], phase: 0.0 };
        let families: Vec<(&str, MapField, &HeatMollifier, Plane, Vec<Point>)> = vec![
            (
                "standard_bubble",
                standard_bubble(BubbleParams::round(1.0)).unwrap(),
                &mol2,
                Plane::coordinate(2, &[0]),
                (0..25)
                    .map(|i| {
                        let rng = CounterRng::new(5, "sweep-a");
                        Point::from_slice(&[
                            rng.range_at(2 * i, -0.6, 0.6),
                            rng.range_at(2 * i + 1, -0.6, 0.6),
                        ])
                    })
                    .collect(),
            ),
            (
                "cone_map",
                cone_map(0.5).unwrap(),
                &mol3,
                Plane::coordinate(3, &[2]),
                (0..25)
                    .map(|i| {
                        let rng = CounterRng::new(6, "sweep-b");
                        Point::from_slice(&[
                            rng.range_at(3 * i, 0.2, 0.6),
                            rng.range_at(3 * i + 1, 0.2, 0.6),
                            rng.range_at(3 * i + 2, 0.7, 1.2),
                        ])
                    })
                    .collect(),
            ),
            (
                "bent_bubble",
                bent_bubble(3, BubbleParams::round(0.2), curve.clone()).unwrap(),
                &mol3,
                Plane::coordinate(3, &[2]),
                (0..25)
                    .map(|i| {
                        let rng = CounterRng::new(7, "sweep-c");
                        Point::from_slice(&[
                            rng.range_at(3 * i, -0.3, 0.3),
                            rng.range_at(3 * i + 1, -0.3, 0.3),
                            rng.range_at(3 * i + 2, -0.8, 0.8),
                        ])
                    })
                    .collect(),
            ),
        ];
        let mut detail = String::new();
        for (name, f, mol, l_plane, pts) in &families {
            let mut fitted: Option<Real> = None;
            let mut count = 0;
            for (i, x) in pts.iter().enumerate() {
                for r in [0.25, 0.4] {
                    let mm = energy::moments(f, mol, x, r, &opts).map_err(|e| e.to_string())?;
                    let grad_l = l_plane.project(&mm.grad_direct);
                    let set = energy::partial_energies(f, mol, x, 2.0 * r, l_plane, &opts)
                        .map_err(|e| e.to_string())?;
                    let denom = mm.pinching * set.plane;
                    let numer = r * r * grad_l.norm_sq();
                    if denom < 1e-16 {
                        continue; // both sides vanish (exact symmetry direction)
                    }
                    let ratio = numer / denom;
                    count += 1;
                    match fitted {
                        None => fitted = Some(ratio.max(1e-12)),
                        Some(c) => {
                            if ratio > 100.0 * c {
                                return Err(format!(
                                    "{name}: gradient ratio drift at x = {x:?}, r = {r}: \
                                     {ratio:.3e} vs fitted {c:.3e} (sweep index {i})"
                                ));
                            }
                        }
                    }
                }
            }
            detail.push_str(&format!("{name}: {count} pts fitted {:.2e}; ", fitted.unwrap_or(0.0)));
        }

        // (b) cone splitting ratio across a lambda sweep on the product family
        let mut ratios = Vec::new();
        for lam in [0.2, 0.1, 0.05, 0.02] {
            let f = product_bubble(3, BubbleParams::round(lam)).unwrap();
            for r in [0.3, 0.5] {
                let pts = [
                    Point::from_slice(&[0.0, 0.0, 0.0]),
                    Point::from_slice(&[0.0, 0.0, 0.6 * r]),
                ];
                let cs =
                    cone_splitting_check(&f, &mol3, &pts, r, ConeSplitVariant::Standard, &opts)
                        .map_err(|e| e.to_string())?;
                ratios.push(cs.ratio);
            }
        }
        let rmax = ratios.iter().cloned().fold(f64::MIN, Real::max);
        let rmin = ratios.iter().cloned().fold(f64::MAX, Real::min);
        if !(rmin > 0.0) || rmax / rmin > 100.0 {
            return Err(format!("cone-splitting ratios drift: {ratios:?}"));
        }
        detail.push_str(&format!("cone-splitting {rmin:.3}..{rmax:.3}; "));

        // (c) quadratic best-plane gap under tilts
        let f = product_bubble(3, BubbleParams::round(0.3)).unwrap();
        let x = Point::from_slice(&[0.0, 0.0, 0.2]);
        let r = 0.4;
        let bp = bestfit::best_plane(&f, &mol3, &x, r, &opts).map_err(|e| e.to_string())?;
        let th = bp.tensor.theta();
        let mut cs = Vec::new();
        for phi in [0.05_f64, 0.1, 0.2] {
            let tilted = Plane::new(
                3,
                &[Point::from_slice(&[phi.sin(), 0.0, phi.cos()])],
            )
            .map_err(|e| e.to_string())?;
            let d = grassmann_distance(&tilted, &bp.plane).map_err(|e| e.to_string())?;
            let set = energy::partial_energies(&f, &mol3, &x, r, &tilted, &opts)
                .map_err(|e| e.to_string())?;
            let c = (set.plane - bp.theta_l) / (th * d * d);
            if !(c > 0.0) {
                return Err(format!("gap coefficient not positive at tilt {phi}: {c}"));
            }
            cs.push(c);
        }
        let cmax = cs.iter().cloned().fold(f64::MIN, Real::max);
        let cmin = cs.iter().cloned().fold(f64::MAX, Real::min);
        if cmax / cmin > 100.0 {
            return Err(format!("gap coefficients drift: {cs:?}"));
        }
        detail.push_str(&format!("gap c in {cmin:.3}..{cmax:.3}; "));

        // (d) almost-monotonicity of the best-plane energy along scales on
        // the bent family
        let fb = bent_bubble(3, BubbleParams::round(0.05), curve).unwrap();
        let la = AffinePlane::new(Plane::coordinate(3, &[2]), Point::zeros(3)).unwrap();
        let grid = geometric_grid(0.15, 0.5, 6);
        let graphs: Vec<(Real, bubblescope_core::bestfit::SubmanifoldGraph)> = grid
            .iter()
            .map(|&r| (r, bubblescope_core::bestfit::SubmanifoldGraph::flat(la.clone(), 0.8, r / 4.0)))
            .collect();
        let prof = identity::l_energy_profile(
            &fb,
            &mol3,
            &graphs,
            &ProfileConfig::toy(3, 0.0),
            &opts,
        )
        .map_err(|e| e.to_string())?;
        let c_fit = prof.rows[0].value / prof.rows[1].value.max(1e-300);
        for i in 0..prof.rows.len() {
            for j in (i + 1)..prof.rows.len() {
                let ratio = prof.rows[i].value / prof.rows[j].value.max(1e-300);
                if ratio > 100.0 * c_fit.max(1.0) {
                    return Err(format!(
                        "almost-monotonicity drift: theta_L(T_{}) / theta_L(T_{}) = {ratio:.2e}",
                        prof.rows[i].r, prof.rows[j].r
                    ));
                }
            }
        }
        detail.push_str(&format!("profile fit a = {:.3e}", prof.log_fit_coeff));
        Ok(detail)
    });
}
