//! The radial kernel and its tail-integral ladder.
//!
//! Prints the cosine profile's four levels on a coarse grid, confirms by
//! central differences that each level is an antiderivative of the one
//! before (`bar' = -R`, `dbar' = -bar`, `tbar' = -dbar`), runs the full
//! structural validation, and shows what that validation rejects: a profile
//! whose "ladder" is not actually built from antiderivatives, and one that
//! vanishes inside `[0, 1/2]`.
//!
//! Usage: `cargo run --example kernel_stack`

use nonlocal_poisson::kernel::{
    builtin_profile_ids, validate_profile, KernelLevel, KernelProfile,
};

fn main() {
    println!("built-in profiles: {}", builtin_profile_ids().join(", "));
    let cosine = KernelProfile::cosine();

    println!("\n{:>6} {:>12} {:>12} {:>12} {:>12}", "r", "R", "bar", "dbar", "tbar");
    for k in 0..=10 {
        let r = k as f64 / 10.0;
        println!(
            "{:>6.2} {:>12.6} {:>12.6} {:>12.6} {:>12.6}",
            r,
            cosine.eval(KernelLevel::Plain, r),
            cosine.eval(KernelLevel::Bar, r),
            cosine.eval(KernelLevel::DoubleBar, r),
            cosine.eval(KernelLevel::TripleBar, r),
        );
    }

    // The ladder property, checked directly: d/dr of each level equals
    // minus the level before it.
    let fd = 1e-5;
    let pairs = [
        ("bar' + R", KernelLevel::Bar, KernelLevel::Plain),
        ("dbar' + bar", KernelLevel::DoubleBar, KernelLevel::Bar),
        ("tbar' + dbar", KernelLevel::TripleBar, KernelLevel::DoubleBar),
    ];
    println!();
    for (label, upper, lower) in pairs {
        let mut worst = 0.0f64;
        for k in 1..100 {
            let r = k as f64 / 100.0;
            let d = (cosine.eval(upper, r + fd) - cosine.eval(upper, r - fd)) / (2.0 * fd);
            worst = worst.max((d + cosine.eval(lower, r)).abs());
        }
        println!("max |{label}| on (0,1): {worst:.3e}");
    }

    let report = validate_profile(&cosine, 0.005);
    println!(
        "\nvalidation of '{}': {} (delta0 = {}, max |R''| = {:.3})",
        report.profile_id,
        if report.pass() { "pass" } else { "FAIL" },
        report.delta0,
        report.max_second_derivative,
    );
    for c in &report.checks {
        println!(
            "  {:<22} {}  measured {:.3e} vs {:.3e}",
            c.name,
            if c.pass { "ok" } else { "FAIL" },
            c.measured,
            c.threshold,
        );
    }

    // A broken ladder: levels that are each fine on their own but are not
    // antiderivatives of one another.
    let broken = KernelProfile::custom(
        "broken-ladder",
        |r| 0.5 * (1.0 + (std::f64::consts::PI * r).cos()),
        |r| 1.0 - r,
        |r| (1.0 - r) * (1.0 - r),
        |r| (1.0 - r) * (1.0 - r) * (1.0 - r),
    );
    let broken_report = validate_profile(&broken, 0.005);
    println!(
        "\nvalidation of '{}': {} (failing: {})",
        broken_report.profile_id,
        if broken_report.pass() { "pass" } else { "FAIL" },
        broken_report
            .checks
            .iter()
            .filter(|c| !c.pass)
            .map(|c| c.name)
            .collect::<Vec<_>>()
            .join(", "),
    );

    // A degenerate density: compactly supported and smooth, but it dies
    // inside [0, 1/2], so the nondegeneracy floor rejects it.
    let pinched = KernelProfile::from_plain_numeric("pinched", |r| {
        let s = (2.5 * r - 1.0).max(0.0);
        (1.0 - r).powi(2) * s * s
    });
    let pinched_report = validate_profile(&pinched, 0.005);
    println!(
        "validation of '{}': {} (delta0 = {:.3e})",
        pinched_report.profile_id,
        if pinched_report.pass() { "pass" } else { "FAIL" },
        pinched_report.delta0,
    );
}
