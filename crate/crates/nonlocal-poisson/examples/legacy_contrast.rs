//! Why the boundary terms carry curvature and conormal corrections.
//!
//! Runs the disk residual ladder twice: once with the corrected boundary
//! treatment, once with the legacy factor-two-only variant that predates
//! it. Away from the boundary the two are identical operators, so their
//! interior norms match to the digit. Inside the `2δ` collar the legacy
//! variant's residual decays like δ while the corrected one keeps a rate
//! near δ²: the printed layer slopes differ by more than the pinned
//! contrast margin, which is the entire point of the correction.
//!
//! Usage: `cargo run --release --example legacy_contrast` (about half a
//! minute in release mode)

use nonlocal_poisson::ops::Mode;
use nonlocal_poisson::residual::{
    fit_rate, residual_sample, CONTRAST_MIN, LEGACY_LAYER_MAX,
};

fn main() -> nonlocal_poisson::Result<()> {
    let c = nonlocal_poisson::catalog::case("disk")?;
    let sol = c.solution("skewed")?.clone();
    let deltas = [0.1, 0.07, 0.05];
    let h_ratio = 8.0;

    let mut layer_slopes = Vec::new();
    let mut finest_layers = Vec::new();
    for mode in [Mode::Corrected, Mode::Legacy] {
        println!("{} mode:", mode.label());
        println!(
            "{:>9} {:>14} {:>14} {:>14}",
            "delta", "interior", "layer", "layer/interior"
        );
        let mut layers = Vec::new();
        for &delta in &deltas {
            let s = residual_sample(&c, &sol, delta, h_ratio, mode)?;
            println!(
                "{:>9.3} {:>14.4e} {:>14.4e} {:>14.2}",
                delta,
                s.norms.interior,
                s.norms.layer,
                s.norms.layer / s.norms.interior
            );
            layers.push(s.norms.layer);
        }
        let slope = fit_rate(&deltas, &layers)?.slope;
        println!("  layer slope: {slope:.3}\n");
        layer_slopes.push(slope);
        finest_layers.push(*layers.last().unwrap());
    }

    let contrast = layer_slopes[0] - layer_slopes[1];
    println!(
        "legacy layer slope {:.3} (stall threshold {LEGACY_LAYER_MAX}), contrast {:.3} (margin {CONTRAST_MIN})",
        layer_slopes[1], contrast
    );
    println!(
        "corrected beats legacy in the boundary layer by {:.1}x at delta = {}",
        finest_layers[1] / finest_layers[0],
        deltas[2]
    );
    Ok(())
}
