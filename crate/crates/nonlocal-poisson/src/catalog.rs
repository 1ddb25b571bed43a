//! Built-in manifold cases with manufactured solutions.
//!
//! Each case bundles a chart, its boundary description, exact reference
//! measures, and a pair of manufactured solutions `u` (vanishing on the
//! boundary) with their source `f = -Δ_M u` and outward-conormal derivative
//! `v = ∂u/∂n`, all as closed-form ambient fields. The first solution of
//! each case is symmetric, the second deliberately skewed so that error
//! cancellations of the symmetric one cannot mask a wrong convergence rate.

use crate::error::{Error, Result};
use crate::geometry::{
    BoundaryShape, Chart, CircleArcChart, IdentityChart, ParamCurve, ParamDomain,
    StereographicChart,
};
use crate::sampling::{build_cloud, QuadratureCloud};
use std::f64::consts::PI;
use std::sync::Arc;

type AmbientFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// A manufactured solution of the Dirichlet problem on one case.
#[derive(Clone)]
pub struct Manufactured {
    pub name: &'static str,
    /// Solution field (ambient), zero on the boundary.
    pub u: AmbientFn,
    /// Source `f = -Δ_M u` (ambient).
    pub f: AmbientFn,
    /// Outward-conormal derivative `∂u/∂n` on the boundary (ambient).
    pub v: AmbientFn,
}

/// One canonical manifold with everything experiments need.
#[derive(Clone)]
pub struct ManifoldCase {
    pub name: &'static str,
    pub chart: Arc<dyn Chart>,
    pub boundary: BoundaryShape,
    /// Largest kernel radius the truncation analysis permits for this case.
    pub max_delta: f64,
    /// Exact Riemannian volume.
    pub volume: f64,
    /// Exact boundary measure (counting measure for curve manifolds).
    pub boundary_measure: f64,
    /// Anchor of the localized probe used in weak-form pairings.
    pub bump_anchor: Vec<f64>,
    pub solutions: Vec<Manufactured>,
    inward: Arc<dyn Fn(&[f64], f64) -> Vec<f64> + Send + Sync>,
}

impl ManifoldCase {
    /// Quadrature cloud at the requested parameter spacing.
    pub fn cloud(&self, spacing: f64) -> Result<QuadratureCloud> {
        build_cloud(self.chart.as_ref(), &self.boundary, spacing)
    }

    /// Unit-speed geodesic entering the manifold perpendicular to the
    /// boundary: `s = 0` is the boundary point `x_b`, increasing `s` walks
    /// inward (direction `-n`).
    pub fn inward_geodesic(&self, x_b: &[f64], s: f64) -> Vec<f64> {
        (self.inward)(x_b, s)
    }

    /// Localized probe `exp(-2 |x - anchor|²)` for weak-form pairings.
    pub fn bump(&self) -> AmbientFn {
        let anchor = self.bump_anchor.clone();
        Arc::new(move |x: &[f64]| {
            let d2: f64 = x.iter().zip(&anchor).map(|(a, b)| (a - b) * (a - b)).sum();
            (-2.0 * d2).exp()
        })
    }

    pub fn solution(&self, name: &str) -> Result<&Manufactured> {
        self.solutions
            .iter()
            .find(|s| s.name == name)
            .ok_or_else(|| {
                Error::Config(format!(
                    "case '{}' has no solution '{name}' (available: {})",
                    self.name,
                    self.solutions
                        .iter()
                        .map(|s| s.name)
                        .collect::<Vec<_>>()
                        .join(", ")
                ))
            })
    }

    /// Defect of the boundary second-derivative identity
    /// `∂²u/∂n² = Δ_M u + κ_n ∂u/∂n`
    /// at boundary point `x_b`, with the left side measured by a one-sided
    /// second-order finite difference along the inward geodesic and the
    /// right side taken from the manufactured closed forms. The defect is
    /// pure finite-difference error (O(step²)) when the identity holds.
    pub fn normal_identity_defect(
        &self,
        sol: &Manufactured,
        x_b: &[f64],
        kappa_n: f64,
        step: f64,
    ) -> f64 {
        let u = |s: f64| (sol.u)(&self.inward_geodesic(x_b, s));
        let d2 = (2.0 * u(0.0) - 5.0 * u(step) + 4.0 * u(2.0 * step) - u(3.0 * step))
            / (step * step);
        let rhs = -(sol.f)(x_b) + kappa_n * (sol.v)(x_b);
        (d2 - rhs).abs()
    }
}

pub fn case_names() -> &'static [&'static str] {
    &["interval", "arc", "disk", "hemisphere"]
}

pub fn case(name: &str) -> Result<ManifoldCase> {
    match name {
        "interval" => Ok(interval_case()),
        "arc" => Ok(arc_case()),
        "disk" => Ok(disk_case()),
        "hemisphere" => Ok(hemisphere_case()),
        other => Err(Error::UnknownCase(other.to_string())),
    }
}

pub fn all_cases() -> Vec<ManifoldCase> {
    case_names().iter().map(|n| case(n).unwrap()).collect()
}

/// Unit interval [0, 1] in the line.
fn interval_case() -> ManifoldCase {
    let symmetric = Manufactured {
        name: "symmetric",
        u: Arc::new(|x| (PI * x[0]).sin()),
        f: Arc::new(|x| PI * PI * (PI * x[0]).sin()),
        v: Arc::new(|x| {
            let du = PI * (PI * x[0]).cos();
            if x[0] < 0.5 {
                -du
            } else {
                du
            }
        }),
    };
    // u = sin(pi x)(1 + 0.4 x) breaks the left-right symmetry.
    let skewed = Manufactured {
        name: "skewed",
        u: Arc::new(|x| (PI * x[0]).sin() * (1.0 + 0.4 * x[0])),
        f: Arc::new(|x| {
            PI * PI * (PI * x[0]).sin() * (1.0 + 0.4 * x[0]) - 0.8 * PI * (PI * x[0]).cos()
        }),
        v: Arc::new(|x| {
            let du = PI * (PI * x[0]).cos() * (1.0 + 0.4 * x[0]) + 0.4 * (PI * x[0]).sin();
            if x[0] < 0.5 {
                -du
            } else {
                du
            }
        }),
    };
    ManifoldCase {
        name: "interval",
        chart: Arc::new(IdentityChart::new(ParamDomain::unit_interval())),
        boundary: BoundaryShape::Points(vec![0.0, 1.0]),
        max_delta: 0.1,
        volume: 1.0,
        boundary_measure: 2.0,
        bump_anchor: vec![0.5],
        solutions: vec![symmetric, skewed],
        inward: Arc::new(|x_b, s| {
            if x_b[0] < 0.5 {
                vec![s]
            } else {
                vec![1.0 - s]
            }
        }),
    }
}

/// Upper unit semicircle, a curved 1-manifold in the plane. Arclength
/// equals the angle parameter, so closed forms stay elementary:
/// u = sin t is the ambient height y.
fn arc_case() -> ManifoldCase {
    let symmetric = Manufactured {
        name: "symmetric",
        u: Arc::new(|x| x[1]),
        f: Arc::new(|x| x[1]),
        v: Arc::new(|_x| -1.0),
    };
    // u = sin t + 0.25 sin 2t = y (1 + 0.5 x).
    let skewed = Manufactured {
        name: "skewed",
        u: Arc::new(|x| x[1] * (1.0 + 0.5 * x[0])),
        f: Arc::new(|x| x[1] + 2.0 * x[0] * x[1]),
        v: Arc::new(|x| if x[0] > 0.0 { -1.5 } else { -0.5 }),
    };
    ManifoldCase {
        name: "arc",
        chart: Arc::new(CircleArcChart::unit_semicircle()),
        boundary: BoundaryShape::Points(vec![0.0, PI]),
        max_delta: 0.1,
        volume: PI,
        boundary_measure: 2.0,
        bump_anchor: vec![0.0, 1.0],
        solutions: vec![symmetric, skewed],
        inward: Arc::new(|x_b, s| {
            let t = if x_b[0] > 0.0 { s } else { PI - s };
            vec![t.cos(), t.sin()]
        }),
    }
}

/// Radial profile for the disk solutions, as a function of w = 1 - |x|².
///
/// Two design constraints shape it. It must not be a low-degree polynomial:
/// the point-diffusion operator reproduces cubics exactly in the plane,
/// which would leave nothing but quadrature noise to measure. And its
/// fourth-order structure must not pile up at the rim: the interior
/// residual is essentially δ² times a fourth derivative of u, measured over
/// a region that expands toward the rim as δ shrinks, so rim-concentrated
/// mass depresses the fitted rate below its asymptotic value. The 1:8
/// mix of the two frequencies cancels S'''(0), which makes that fourth-order
/// field vanish on the rim while S'(0) keeps the flux data nonzero. The
/// base frequency is kept low enough that kernel radii up to 0.1 stay well
/// inside the regime where the quadratic truncation law applies, and the
/// amplitude low enough that step-1e-3 difference quotients still resolve
/// the boundary identities cleanly.
fn disk_profile(w: f64) -> (f64, f64, f64) {
    let a = PI;
    let amp = 0.5;
    let value = amp * ((a * w).sin() - 0.125 * (2.0 * a * w).sin());
    let d1 = amp * a * ((a * w).cos() - 0.25 * (2.0 * a * w).cos());
    let d2 = amp * a * a * (-(a * w).sin() + 0.5 * (2.0 * a * w).sin());
    (value, d1, d2)
}

/// Flat unit disk.
fn disk_case() -> ManifoldCase {
    // For u = S(w): Δu = -4 S'(w) + 4 s S''(w) with s = |x|², w = 1 - s.
    let symmetric = Manufactured {
        name: "symmetric",
        u: Arc::new(|x| {
            let s = x[0] * x[0] + x[1] * x[1];
            disk_profile(1.0 - s).0
        }),
        f: Arc::new(|x| {
            let s = x[0] * x[0] + x[1] * x[1];
            let (_, d1, d2) = disk_profile(1.0 - s);
            4.0 * d1 - 4.0 * s * d2
        }),
        v: Arc::new(|_x| -0.75 * PI),
    };
    // u = S(w)(1 + x/2); the extra gradient cross-term is -2 x S'(w).
    let skewed = Manufactured {
        name: "skewed",
        u: Arc::new(|x| {
            let s = x[0] * x[0] + x[1] * x[1];
            disk_profile(1.0 - s).0 * (1.0 + 0.5 * x[0])
        }),
        f: Arc::new(|x| {
            let s = x[0] * x[0] + x[1] * x[1];
            let (_, d1, d2) = disk_profile(1.0 - s);
            (1.0 + 0.5 * x[0]) * (4.0 * d1 - 4.0 * s * d2) + 2.0 * x[0] * d1
        }),
        v: Arc::new(|x| -0.75 * PI * (1.0 + 0.5 * x[0])),
    };
    ManifoldCase {
        name: "disk",
        chart: Arc::new(IdentityChart::new(ParamDomain::unit_disk())),
        boundary: BoundaryShape::Curve(ParamCurve::circle(1.0)),
        max_delta: 0.2,
        volume: PI,
        boundary_measure: 2.0 * PI,
        bump_anchor: vec![0.0, 0.0],
        solutions: vec![symmetric, skewed],
        inward: Arc::new(|x_b, s| vec![(1.0 - s) * x_b[0], (1.0 - s) * x_b[1]]),
    }
}

/// Upper unit hemisphere. Coordinate monomials restricted to the sphere
/// are Laplace eigenfunctions (degree-l harmonics, eigenvalue -l(l+1)),
/// which keeps u = z and u = z(1 + x/2) exactly solvable.
/// Height profile for the hemisphere solutions, as a function of z.
///
/// Designed around three facts. A plain harmonic like `u = z` has fourth
/// derivatives of order one, which sink below the curved chart's quadrature
/// noise long before the ladder bottoms out, so the profile carries a
/// sin(az) mode for measurable interior signal. For `u = F(z)` the bilaplacian
/// at the rim is `F''''(0) − 6 F''(0)`; the cosine pair is balanced to cancel
/// it, keeping the fourth-order field away from the rim where the interior
/// region grows as δ shrinks. And `F''(0) ≠ 0` keeps the source nonzero on
/// the rim, so the volume potential's boundary term actually participates
/// (a source vanishing there would silently excuse it).
fn hemisphere_profile(z: f64) -> (f64, f64, f64) {
    let a = 1.25 * PI;
    let value = (a * z).sin() + 2.0 * (z.cos() - 1.0) - 0.35 * ((2.0 * z).cos() - 1.0);
    let d1 = a * (a * z).cos() - 2.0 * z.sin() + 0.7 * (2.0 * z).sin();
    let d2 = -a * a * (a * z).sin() - 2.0 * z.cos() + 1.4 * (2.0 * z).cos();
    (value, d1, d2)
}

fn hemisphere_case() -> ManifoldCase {
    let a = 1.25 * PI;
    // For u = F(z) on the unit sphere: Δu = (1−z²)F''(z) − 2zF'(z).
    let symmetric = Manufactured {
        name: "symmetric",
        u: Arc::new(|x| hemisphere_profile(x[2]).0),
        f: Arc::new(|x| {
            let z = x[2];
            let (_, d1, d2) = hemisphere_profile(z);
            -((1.0 - z * z) * d2 - 2.0 * z * d1)
        }),
        v: Arc::new(move |_x| -a),
    };
    // u = F(z)(1 + x/2); on the sphere ∇z·∇x = −xz and Δx = −2x, so the
    // cross terms contribute x z F'(z) + x F(z) to the source.
    let skewed = Manufactured {
        name: "skewed",
        u: Arc::new(|x| hemisphere_profile(x[2]).0 * (1.0 + 0.5 * x[0])),
        f: Arc::new(|x| {
            let z = x[2];
            let (value, d1, d2) = hemisphere_profile(z);
            -(1.0 + 0.5 * x[0]) * ((1.0 - z * z) * d2 - 2.0 * z * d1)
                + x[0] * z * d1
                + x[0] * value
        }),
        v: Arc::new(move |x| -a * (1.0 + 0.5 * x[0])),
    };
    ManifoldCase {
        name: "hemisphere",
        chart: Arc::new(StereographicChart::unit_hemisphere()),
        boundary: BoundaryShape::Curve(ParamCurve::circle(1.0)),
        max_delta: 0.1,
        volume: 2.0 * PI,
        boundary_measure: 2.0 * PI,
        bump_anchor: vec![0.0, 0.0, 1.0],
        solutions: vec![symmetric, skewed],
        inward: Arc::new(|x_b, s| {
            // Meridian through the equator point, walking toward the pole.
            vec![s.cos() * x_b[0], s.cos() * x_b[1], s.sin()]
        }),
    }
}

/// Independent Laplace–Beltrami reference: the divergence form
/// `(det G)^{-1/2} ∂_i ((det G)^{1/2} g^{ij} ∂_j u)` evaluated by nested
/// central differences on `u ∘ ψ`, using only metric *values* (no metric
/// derivatives), so its code path shares nothing with the closed forms it
/// is used to cross-check. Accuracy is ~1e-6 absolute.
pub fn fd_laplace_beltrami(
    chart: &dyn Chart,
    theta: &[f64],
    u: &dyn Fn(&[f64]) -> f64,
) -> Result<f64> {
    use crate::geometry::metric_at;
    let m = chart.param_dim();
    let h_grad = 1e-5;
    let h_div = 1e-3;

    let flux = |th: &[f64], i: usize| -> Result<f64> {
        let md = metric_at(chart, th)?;
        let mut tp = th.to_vec();
        let mut tm = th.to_vec();
        let mut total = 0.0;
        for j in 0..m {
            tp[j] = th[j] + h_grad;
            tm[j] = th[j] - h_grad;
            let du =
                (u(chart.map(&tp).as_slice()) - u(chart.map(&tm).as_slice())) / (2.0 * h_grad);
            tp[j] = th[j];
            tm[j] = th[j];
            total += md.g_inv[(i, j)] * du;
        }
        Ok(md.sqrt_det * total)
    };

    let div_at = |h: f64| -> Result<f64> {
        let mut tp = theta.to_vec();
        let mut tm = theta.to_vec();
        let mut div = 0.0;
        for i in 0..m {
            tp[i] = theta[i] + h;
            tm[i] = theta[i] - h;
            div += (flux(&tp, i)? - flux(&tm, i)?) / (2.0 * h);
            tp[i] = theta[i];
            tm[i] = theta[i];
        }
        Ok(div)
    };
    // Richardson extrapolation removes the h² term of the central
    // difference, which matters once u carries large fourth derivatives.
    let coarse = div_at(h_div)?;
    let fine = div_at(0.5 * h_div)?;
    Ok((4.0 * fine - coarse) / 3.0 / metric_at(chart, theta)?.sqrt_det)
}
