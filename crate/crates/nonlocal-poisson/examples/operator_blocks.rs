//! The six nonlocal operators against a brute-force reference.
//!
//! The library evaluates its operators with cell-grid neighbor search and
//! parallel target loops. This example recomputes every operator as the
//! plain double loop over all node pairs — no grids, no skipping — and
//! prints the worst relative deviation. The two must agree to rounding:
//! the grid is an indexing optimization, not an approximation. Also checks
//! that the assembled matrix reproduces the matrix-free application.
//!
//! Usage: `cargo run --example operator_blocks`

use nonlocal_poisson::catalog::case;
use nonlocal_poisson::kernel::{builtin_profile, KernelLevel, ScaledKernel};
use nonlocal_poisson::ops::{Mode, NonlocalOps};
use std::sync::Arc;

fn rel_dev(got: &[f64], want: &[f64]) -> f64 {
    let scale = want.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-300);
    got.iter()
        .zip(want)
        .fold(0.0f64, |m, (g, w)| m.max((g - w).abs()))
        / scale
}

fn main() -> nonlocal_poisson::Result<()> {
    let profile = Arc::new(builtin_profile("cosine")?);

    for (name, spacing) in [("interval", 0.02), ("disk", 0.16)] {
        let c = case(name)?;
        let cloud = c.cloud(spacing)?;
        let delta = 2.5 * spacing;
        let kernel = ScaledKernel::new(profile.clone(), delta, cloud.dim)?;
        let n = cloud.n_interior();
        let m = cloud.n_boundary();
        println!("case {name}: {n} interior + {m} boundary nodes, delta = {delta}");

        let sol = c.solution("skewed")?;
        let u: Vec<f64> = (0..n).map(|i| (sol.u)(cloud.position(i))).collect();
        let f: Vec<f64> = (0..n).map(|i| (sol.f)(cloud.position(i))).collect();
        let v: Vec<f64> = (0..m).map(|b| (sol.v)(cloud.bd_position(b))).collect();
        let f_bd: Vec<f64> = (0..m).map(|b| (sol.f)(cloud.bd_position(b))).collect();

        for mode in [Mode::Corrected, Mode::Legacy] {
            let ops = NonlocalOps::new(&cloud, &kernel, mode)?;
            let legacy = mode == Mode::Legacy;

            // Point diffusion.
            let brute_l: Vec<f64> = (0..n)
                .map(|i| {
                    let xi = cloud.position(i);
                    let mut acc = 0.0;
                    for j in 0..n {
                        let r = kernel.eval(KernelLevel::Plain, xi, cloud.position(j));
                        acc += cloud.weights[j] * (u[i] - u[j]) * r;
                    }
                    acc / (delta * delta)
                })
                .collect();

            // Boundary-flux transfer.
            let brute_g: Vec<f64> = (0..n)
                .map(|i| {
                    let xi = cloud.position(i);
                    let mut acc = 0.0;
                    for b in 0..m {
                        let yb = cloud.bd_position(b);
                        let rb = kernel.eval(KernelLevel::Bar, xi, yb);
                        let coeff = if legacy {
                            2.0
                        } else {
                            let nb = cloud.bd_conormal(b);
                            let dot: f64 =
                                (0..xi.len()).map(|k| (xi[k] - yb[k]) * nb[k]).sum();
                            2.0 + cloud.bd_kappa[b] * dot
                        };
                        acc += cloud.bd_weights[b] * v[b] * coeff * rb;
                    }
                    acc
                })
                .collect();

            // Source mollifier.
            let brute_p: Vec<f64> = (0..n)
                .map(|i| {
                    let xi = cloud.position(i);
                    let mut acc = 0.0;
                    for j in 0..n {
                        acc += cloud.weights[j]
                            * f[j]
                            * kernel.eval(KernelLevel::Bar, xi, cloud.position(j));
                    }
                    if !legacy {
                        for b in 0..m {
                            let yb = cloud.bd_position(b);
                            let nb = cloud.bd_conormal(b);
                            let dot: f64 =
                                (0..xi.len()).map(|k| (xi[k] - yb[k]) * nb[k]).sum();
                            acc -= cloud.bd_weights[b]
                                * dot
                                * f_bd[b]
                                * kernel.eval(KernelLevel::Bar, xi, yb);
                        }
                    }
                    acc
                })
                .collect();

            // Interior-to-boundary trace.
            let brute_d: Vec<f64> = (0..m)
                .map(|b| {
                    let xb = cloud.bd_position(b);
                    let nb = cloud.bd_conormal(b);
                    let mut acc = 0.0;
                    for j in 0..n {
                        let yj = cloud.position(j);
                        let rb = kernel.eval(KernelLevel::Bar, xb, yj);
                        let coeff = if legacy {
                            2.0
                        } else {
                            let dot: f64 =
                                (0..xb.len()).map(|k| (xb[k] - yj[k]) * nb[k]).sum();
                            2.0 - cloud.bd_kappa[b] * dot
                        };
                        acc += cloud.weights[j] * u[j] * coeff * rb;
                    }
                    acc
                })
                .collect();

            // Boundary reaction diagonal.
            let brute_r: Vec<f64> = (0..m)
                .map(|b| {
                    let xb = cloud.bd_position(b);
                    let mut acc = 0.0;
                    for b2 in 0..m {
                        acc += cloud.bd_weights[b2]
                            * kernel.eval(KernelLevel::DoubleBar, xb, cloud.bd_position(b2));
                    }
                    acc *= 4.0 * delta * delta;
                    if !legacy && cloud.bd_kappa[b] != 0.0 {
                        let nb = cloud.bd_conormal(b);
                        let mut curv = 0.0;
                        for j in 0..n {
                            let yj = cloud.position(j);
                            let dot: f64 =
                                (0..xb.len()).map(|k| (xb[k] - yj[k]) * nb[k]).sum();
                            curv += cloud.weights[j]
                                * dot
                                * dot
                                * kernel.eval(KernelLevel::Bar, xb, yj);
                        }
                        acc -= cloud.bd_kappa[b] * curv;
                    }
                    acc
                })
                .collect();

            // Boundary source mollifier.
            let brute_q: Vec<f64> = (0..m)
                .map(|b| {
                    let xb = cloud.bd_position(b);
                    let mut acc = 0.0;
                    for j in 0..n {
                        acc += cloud.weights[j]
                            * f[j]
                            * kernel.eval(KernelLevel::DoubleBar, xb, cloud.position(j));
                    }
                    -2.0 * delta * delta * acc
                })
                .collect();

            println!(
                "  {:>9}: L {:.2e}  G {:.2e}  P {:.2e}  D {:.2e}  R~ {:.2e}  Q {:.2e}",
                mode.label(),
                rel_dev(&ops.apply_l(&u)?, &brute_l),
                rel_dev(&ops.apply_g(&v)?, &brute_g),
                rel_dev(&ops.apply_p(&f, &f_bd)?, &brute_p),
                rel_dev(&ops.apply_d(&u)?, &brute_d),
                rel_dev(&ops.tilde_r(), &brute_r),
                rel_dev(&ops.apply_q(&f)?, &brute_q),
            );

            // The assembled matrix and the matrix-free application are the
            // same linear map.
            let system = ops.assemble(&f, &f_bd)?;
            let mut uv = u.clone();
            uv.extend_from_slice(&v);
            let mut assembled = vec![0.0; n + m];
            system.matrix.matvec(&uv, &mut assembled);
            let matrix_free = ops.apply_coupled(&uv)?;
            println!(
                "             assembled matvec vs matrix-free: {:.2e}",
                rel_dev(&assembled, &matrix_free)
            );
        }

        // Constants are in the diffusion operator's exact kernel: every
        // summand carries u_i - u_j = 0, so the result is exactly zero.
        let ops = NonlocalOps::new(&cloud, &kernel, Mode::Corrected)?;
        let lc = ops.apply_l(&vec![1.0; n])?;
        let max = lc.iter().fold(0.0f64, |mx, v| mx.max(v.abs()));
        println!("  L applied to the constant 1: max |entry| = {max:.1e}");
    }
    Ok(())
}
