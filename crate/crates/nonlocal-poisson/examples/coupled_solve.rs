//! Solving the coupled interior/boundary system.
//!
//! For each kernel radius the interior unknowns approximate the solution
//! field and the boundary unknowns its conormal derivative; the system
//! couples them through the flux and trace operators. This example
//! assembles and solves the system on the interval (small enough for the
//! dense pivoted-LU path) and on the disk (large enough to take the
//! equilibrated restarted-GMRES path), then compares the recovered interior
//! field against the manufactured solution. The weighted L² error shrinks
//! as the radius does; the measured rate is printed for information, not
//! asserted — consistency of the residual is what the rate studies pin
//! down, and the solve step adds stability on top.
//!
//! Usage: `cargo run --release --example coupled_solve [case] [deltas]`
//! (defaults: both interval and disk, ladder {0.1, 0.05})

use nonlocal_poisson::catalog::case;
use nonlocal_poisson::kernel::{builtin_profile, ScaledKernel};
use nonlocal_poisson::ops::{Mode, NonlocalOps};
use nonlocal_poisson::residual::{sample_fields, solution_error};
use nonlocal_poisson::solve::solve_system;
use std::sync::Arc;

fn run_case(name: &str, deltas: &[f64], h_ratio: f64) -> nonlocal_poisson::Result<()> {
    let c = case(name)?;
    let sol = &c.solutions[0];
    let profile = Arc::new(builtin_profile("cosine")?);

    println!("case {name}, solution {}, spacing = delta/{h_ratio}", sol.name);
    println!(
        "{:>8} {:>9} {:>8} {:>6} {:>10} {:>10} {:>12} {:>7}",
        "delta", "unknowns", "method", "iters", "residual", "cond est", "L2 error", "rate"
    );
    let mut prev: Option<(f64, f64)> = None;
    for &delta in deltas {
        let cloud = c.cloud(delta / h_ratio)?;
        let kernel = ScaledKernel::new(profile.clone(), delta, cloud.dim)?;
        let ops = NonlocalOps::new(&cloud, &kernel, Mode::Corrected)?;
        let fields = sample_fields(&cloud, sol);
        let system = ops.assemble(&fields.f_int, &fields.f_bd)?;
        let (uv, report) = solve_system(&system.matrix, &system.rhs)?;
        let err = solution_error(&cloud, &uv[..system.n_interior], &|x| (sol.u)(x));
        let rate = prev
            .map(|(d0, e0)| format!("{:.2}", (e0 / err).ln() / (d0 / delta).ln()))
            .unwrap_or_else(|| "-".into());
        println!(
            "{:>8.3} {:>9} {:>8} {:>6} {:>10.2e} {:>10.2e} {:>12.4e} {:>7}",
            delta,
            report.unknowns,
            report.method,
            report.iterations,
            report.residual,
            report.condition_estimate,
            err,
            rate
        );
        prev = Some((delta, err));
    }
    println!();
    Ok(())
}

fn main() -> nonlocal_poisson::Result<()> {
    let arg_case = std::env::args().nth(1);
    let deltas: Vec<f64> = match std::env::args().nth(2) {
        Some(s) => s
            .split(',')
            .map(|t| {
                t.parse()
                    .map_err(|e| nonlocal_poisson::Error::InvalidParameter(format!("deltas: {e}")))
            })
            .collect::<Result<_, _>>()?,
        None => vec![0.1, 0.05],
    };
    match arg_case.as_deref() {
        Some(name) => run_case(name, &deltas, 8.0)?,
        None => {
            run_case("interval", &deltas, 8.0)?;
            run_case("disk", &deltas, 8.0)?;
        }
    }
    Ok(())
}
