//! Residual convergence rates on one catalog case.
//!
//! For a ladder of kernel radii (node spacing tied to the radius), this
//! measures the weighted L² norms of the interior and boundary residuals of
//! a manufactured solution, splits the interior norm at the boundary-layer
//! cut `2δ`, and fits log-log slopes. Both boundary treatments run, so the
//! output shows the corrected mode recovering second order in the layer
//! while the legacy mode stalls near first order.
//!
//! Usage: `cargo run --release --example residual_rates [case] [h_ratio] [deltas]`
//! with `case` one of `interval`, `arc`, `disk`, `hemisphere` (default
//! `disk`, the heaviest and most instructive one), `h_ratio` the
//! radius-to-spacing ratio (default 8; larger isolates truncation error
//! from quadrature error), and `deltas` an optional comma-separated list
//! of kernel radii overriding the case's built-in ladder.

use nonlocal_poisson::catalog::case;
use nonlocal_poisson::ops::Mode;
use nonlocal_poisson::residual::{fit_rate, residual_sample, ResidualSample};
use nonlocal_poisson::study::default_ladder;

fn main() -> nonlocal_poisson::Result<()> {
    let name = std::env::args().nth(1).unwrap_or_else(|| "disk".to_string());
    let case = case(&name)?;
    let solution = case.solution("skewed")?.clone();
    let h_ratio: f64 = match std::env::args().nth(2) {
        Some(s) => s
            .parse()
            .map_err(|e| nonlocal_poisson::Error::InvalidParameter(format!("h_ratio: {e}")))?,
        None => 8.0,
    };
    let deltas: Vec<f64> = match std::env::args().nth(3) {
        Some(s) => s
            .split(',')
            .map(|t| {
                t.parse()
                    .map_err(|e| nonlocal_poisson::Error::InvalidParameter(format!("deltas: {e}")))
            })
            .collect::<Result<_, _>>()?,
        None => default_ladder(&case),
    };

    println!("case {name}, solution {}, spacing = delta/{h_ratio}", solution.name);
    println!(
        "{:>10} {:>9} {:>12} {:>12} {:>12} {:>12} {:>12} {:>8}",
        "mode", "delta", "interior", "layer", "boundary", "weak<1>", "weak<bump>", "nodes"
    );

    for mode in [Mode::Corrected, Mode::Legacy] {
        let mut samples: Vec<ResidualSample> = Vec::new();
        for &delta in &deltas {
            let s = residual_sample(&case, &solution, delta, h_ratio, mode)?;
            println!(
                "{:>10} {:>9.4} {:>12.4e} {:>12.4e} {:>12.4e} {:>12.4e} {:>12.4e} {:>8}",
                mode.label(),
                s.delta,
                s.norms.interior,
                s.norms.layer,
                s.norms.boundary,
                s.weak_constant.abs(),
                s.weak_bump.abs(),
                s.n_interior
            );
            samples.push(s);
        }
        let interior: Vec<f64> = samples.iter().map(|s| s.norms.interior).collect();
        let layer: Vec<f64> = samples.iter().map(|s| s.norms.layer).collect();
        let boundary: Vec<f64> = samples.iter().map(|s| s.norms.boundary).collect();
        let weak1: Vec<f64> = samples.iter().map(|s| s.weak_constant.abs()).collect();
        let weakb: Vec<f64> = samples.iter().map(|s| s.weak_bump.abs()).collect();
        println!(
            "{:>10} slopes: interior {:.2}  layer {:.2}  boundary {:.2}  weak<1> {:.2}  weak<bump> {:.2}",
            mode.label(),
            fit_rate(&deltas, &interior)?.slope,
            fit_rate(&deltas, &layer)?.slope,
            fit_rate(&deltas, &boundary)?.slope,
            fit_rate(&deltas, &weak1)?.slope,
            fit_rate(&deltas, &weakb)?.slope,
        );
    }
    Ok(())
}
