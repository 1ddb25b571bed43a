//! Metric, curvature and conormal identities on the catalog charts.
//!
//! Four independent checks, each against a closed form:
//!
//! 1. the stereographic hemisphere chart is conformal, so its induced metric
//!    is a scalar multiple of the identity and ambient coordinate functions
//!    satisfy the sphere eigenvalue identity `Δ_M x_c = -2 x_c`;
//! 2. boundary frames carry the right normal curvature: `-1` around the
//!    unit disk, `0` on the hemisphere's equator (a geodesic);
//! 3. the boundary second-derivative identity `∂²u/∂n² = Δ_M u + κ_n ∂u/∂n`
//!    holds for every manufactured solution — its finite-difference defect
//!    shrinks with the step at first order or better;
//! 4. chart secants bend away from their tangential pushforward only at
//!    second order (`|x - y - η| ≤ C |x - y|²`).
//!
//! Usage: `cargo run --example geometry_identities`

use nonlocal_poisson::catalog::{all_cases, case};
use nonlocal_poisson::geometry::boundary::curve_frame;
use nonlocal_poisson::geometry::{
    deformation_ratio, laplace_beltrami, metric_at, Chart, ClosureField, OnChart, ParamCurve,
    StereographicChart,
};

fn main() -> nonlocal_poisson::Result<()> {
    // 1. Conformality and the eigenfunction identity on the hemisphere.
    let sphere = StereographicChart::unit_hemisphere();
    println!("stereographic hemisphere chart:");
    println!("{:>18} {:>12} {:>14} {:>14}", "theta", "sqrt_det", "off_diag", "eig_defect");
    for theta in [[0.0, 0.0], [0.4, 0.1], [-0.6, 0.7], [0.95, 0.0]] {
        let md = metric_at(&sphere, &theta)?;
        let mut eig_defect = 0.0f64;
        for c in 0..3 {
            let mut v = vec![0.0; 3];
            v[c] = 1.0;
            let coord = ClosureField::linear(v, 0.0);
            let restricted = OnChart {
                chart: &sphere,
                ambient: &coord,
            };
            let lap = laplace_beltrami(&sphere, &theta, &restricted)?;
            let x = sphere.map(&theta);
            eig_defect = eig_defect.max((lap + 2.0 * x[c]).abs());
        }
        println!(
            "{:>18} {:>12.6} {:>14.2e} {:>14.2e}",
            format!("({:+.2},{:+.2})", theta[0], theta[1]),
            md.sqrt_det,
            md.g[(0, 1)].abs(),
            eig_defect,
        );
    }

    // 2. Normal curvature of the two curved boundaries.
    println!("\nboundary frames (worst over 64 samples):");
    for (label, chart_case, expected) in [("disk", case("disk")?, -1.0), ("hemisphere", case("hemisphere")?, 0.0)] {
        let curve = ParamCurve::circle(1.0);
        let mut worst = 0.0f64;
        let mut unit_defect = 0.0f64;
        for k in 0..64 {
            let omega = 2.0 * std::f64::consts::PI * k as f64 / 64.0;
            let frame = curve_frame(chart_case.chart.as_ref(), &curve, omega)?;
            worst = worst.max((frame.kappa_n - expected).abs());
            unit_defect = unit_defect.max((frame.conormal.norm() - 1.0).abs());
        }
        println!(
            "  {label:<12} kappa_n = {expected} +- {worst:.2e}, |conormal| = 1 +- {unit_defect:.2e}"
        );
    }

    // 3. The second-derivative identity, at shrinking steps, on all cases
    // and all manufactured solutions.
    println!("\nboundary identity d²u/dn² = Δu + κ·du/dn, worst defect per step:");
    println!("{:>12} {:>12} {:>12} {:>12} {:>12}", "case", "step 8e-3", "step 4e-3", "step 2e-3", "step 1e-3");
    for c in all_cases() {
        let cloud = c.cloud(0.05)?;
        let mut row = format!("{:>12}", c.name);
        for step in [8e-3, 4e-3, 2e-3, 1e-3] {
            let mut worst = 0.0f64;
            for sol in &c.solutions {
                for b in 0..cloud.n_boundary() {
                    let defect =
                        c.normal_identity_defect(sol, cloud.bd_position(b), cloud.bd_kappa[b], step);
                    worst = worst.max(defect);
                }
            }
            row.push_str(&format!(" {worst:>12.3e}"));
        }
        println!("{row}");
    }

    // 4. Secant deformation stays quadratically small.
    let mut worst_ratio = 0.0f64;
    for i in 0..20 {
        for j in 0..20 {
            let a = [-0.8 + 0.08 * i as f64, -0.8 + 0.08 * j as f64];
            let b = [a[0] + 0.05, a[1] - 0.03];
            if b[0] * b[0] + b[1] * b[1] < 1.0 {
                worst_ratio = worst_ratio.max(deformation_ratio(&sphere, &a, &b));
            }
        }
    }
    println!("\nsecant defect ratio |x-y-eta|/|x-y|² on the hemisphere: max {worst_ratio:.3}");
    Ok(())
}
