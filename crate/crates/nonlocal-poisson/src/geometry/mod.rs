//! Differential geometry of manifolds given by a single global chart.
//!
//! A [`Chart`] is a smooth embedding ψ of an m-dimensional parameter domain
//! into ambient space R^k, with full-rank Jacobian. Everything downstream —
//! induced metric, surface gradient, Laplace–Beltrami operator, boundary
//! frames — is computed from ψ's first two derivative orders, so a chart
//! only has to supply `map`, `jacobian`, and `hessian`.

pub mod boundary;
pub mod charts;
pub mod domain;

pub use boundary::{BoundaryPoint, BoundaryShape, ParamCurve};
pub use charts::{CircleArcChart, FdChart, IdentityChart, StereographicChart};
pub use domain::{ClippedCell, ParamDomain};

use crate::error::{Error, Result};
use nalgebra::{DMatrix, DVector};
use std::sync::Arc;

/// A smooth parametrization of an embedded manifold.
///
/// `hessian` returns one `m x m` matrix per ambient component: entry
/// `(i, j)` of the `c`-th matrix is `∂²ψ_c / ∂θ_i ∂θ_j`.
pub trait Chart: Send + Sync {
    /// Intrinsic dimension m.
    fn param_dim(&self) -> usize;
    /// Ambient dimension k (with k >= m).
    fn ambient_dim(&self) -> usize;
    fn domain(&self) -> &ParamDomain;
    fn map(&self, theta: &[f64]) -> DVector<f64>;
    fn jacobian(&self, theta: &[f64]) -> DMatrix<f64>;
    fn hessian(&self, theta: &[f64]) -> Vec<DMatrix<f64>>;

    /// Parameter point mapping to `x`, assumed to lie on (or very near) the
    /// manifold. The default runs a damped Gauss–Newton iteration on
    /// `|ψ(θ) - x|²` from a grid of starting guesses; charts with closed-form
    /// inverses should override it.
    fn inverse(&self, x: &[f64]) -> Result<Vec<f64>> {
        gauss_newton_inverse(
            &|theta| self.map(theta),
            &|theta| self.jacobian(theta),
            self.domain(),
            x,
        )
    }
}

/// Induced metric and first-derivative data at one parameter point.
#[derive(Debug, Clone)]
pub struct MetricData {
    /// Chart Jacobian, k x m.
    pub jacobian: DMatrix<f64>,
    /// First fundamental form G = JᵀJ.
    pub g: DMatrix<f64>,
    pub g_inv: DMatrix<f64>,
    /// Riemannian volume density √det G.
    pub sqrt_det: f64,
}

/// Metric at `theta`, with a positive-definiteness check.
pub fn metric_at(chart: &dyn Chart, theta: &[f64]) -> Result<MetricData> {
    let jacobian = chart.jacobian(theta);
    let g = jacobian.transpose() * &jacobian;
    let chol = nalgebra::Cholesky::new(g.clone()).ok_or_else(|| {
        Error::InvalidParameter(format!(
            "induced metric is not positive definite at theta = {theta:?}"
        ))
    })?;
    let sqrt_det = chol.determinant().sqrt();
    Ok(MetricData {
        jacobian,
        g_inv: chol.inverse(),
        sqrt_det,
        g,
    })
}

/// Partial derivatives of the metric: the `i`-th entry is `∂G/∂θ_i`,
/// assembled from the chart Hessian via
/// `∂_i g_{kl} = Σ_c (H^c_{ik} J_{cl} + J_{ck} H^c_{il})`.
pub fn metric_derivatives(chart: &dyn Chart, theta: &[f64]) -> Vec<DMatrix<f64>> {
    let m = chart.param_dim();
    let kdim = chart.ambient_dim();
    let j = chart.jacobian(theta);
    let hs = chart.hessian(theta);
    (0..m)
        .map(|i| {
            let mut dg = DMatrix::zeros(m, m);
            for k in 0..m {
                for l in 0..m {
                    let mut s = 0.0;
                    for c in 0..kdim {
                        s += hs[c][(i, k)] * j[(c, l)] + j[(c, k)] * hs[c][(i, l)];
                    }
                    dg[(k, l)] = s;
                }
            }
            dg
        })
        .collect()
}

/// Twice-differentiable scalar field on an open subset of R^n. The same
/// trait serves fields on parameter space and fields on ambient space;
/// which one is meant is determined by where the field is used.
pub trait ScalarField: Send + Sync {
    fn value(&self, x: &[f64]) -> f64;
    fn gradient(&self, x: &[f64]) -> DVector<f64>;
    fn hessian(&self, x: &[f64]) -> DMatrix<f64>;
}

/// Scalar field backed by closures.
#[derive(Clone)]
pub struct ClosureField {
    value: Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>,
    gradient: Arc<dyn Fn(&[f64]) -> DVector<f64> + Send + Sync>,
    hessian: Arc<dyn Fn(&[f64]) -> DMatrix<f64> + Send + Sync>,
}

impl ClosureField {
    pub fn new(
        value: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
        gradient: impl Fn(&[f64]) -> DVector<f64> + Send + Sync + 'static,
        hessian: impl Fn(&[f64]) -> DMatrix<f64> + Send + Sync + 'static,
    ) -> Self {
        ClosureField {
            value: Arc::new(value),
            gradient: Arc::new(gradient),
            hessian: Arc::new(hessian),
        }
    }

    /// Affine field `x ↦ v·x + c`.
    pub fn linear(v: Vec<f64>, c: f64) -> Self {
        let n = v.len();
        let v2 = v.clone();
        ClosureField::new(
            move |x| x.iter().zip(&v).map(|(a, b)| a * b).sum::<f64>() + c,
            move |_| DVector::from_column_slice(&v2),
            move |_| DMatrix::zeros(n, n),
        )
    }
}

impl ScalarField for ClosureField {
    fn value(&self, x: &[f64]) -> f64 {
        (self.value)(x)
    }
    fn gradient(&self, x: &[f64]) -> DVector<f64> {
        (self.gradient)(x)
    }
    fn hessian(&self, x: &[f64]) -> DMatrix<f64> {
        (self.hessian)(x)
    }
}

/// Restriction of an ambient scalar field to a chart. Implements
/// [`ScalarField`] in parameter coordinates via the chain rule:
/// `∇_θ(f∘ψ) = Jᵀ∇f` and `∇²_θ(f∘ψ) = Jᵀ(∇²f)J + Σ_c (∂_c f) H^c`.
pub struct OnChart<'a> {
    pub chart: &'a dyn Chart,
    pub ambient: &'a dyn ScalarField,
}

impl ScalarField for OnChart<'_> {
    fn value(&self, theta: &[f64]) -> f64 {
        self.ambient.value(self.chart.map(theta).as_slice())
    }

    fn gradient(&self, theta: &[f64]) -> DVector<f64> {
        let x = self.chart.map(theta);
        let j = self.chart.jacobian(theta);
        j.transpose() * self.ambient.gradient(x.as_slice())
    }

    fn hessian(&self, theta: &[f64]) -> DMatrix<f64> {
        let x = self.chart.map(theta);
        let j = self.chart.jacobian(theta);
        let hs = self.chart.hessian(theta);
        let df = self.ambient.gradient(x.as_slice());
        let d2f = self.ambient.hessian(x.as_slice());
        let mut h = j.transpose() * d2f * &j;
        for (c, hc) in hs.iter().enumerate() {
            h += hc * df[c];
        }
        h
    }
}

/// Surface gradient `∇_M u = J G⁻¹ ∇_θ u` as an ambient (tangent) vector.
pub fn surface_gradient(
    chart: &dyn Chart,
    theta: &[f64],
    field: &dyn ScalarField,
) -> Result<DVector<f64>> {
    let md = metric_at(chart, theta)?;
    Ok(&md.jacobian * (&md.g_inv * field.gradient(theta)))
}

/// Laplace–Beltrami operator of a parameter-space field at `theta`:
///
/// `Δ_M u = tr(G⁻¹ ∇²_θ u) + Σ_j b_j ∂_j u`,
/// `b_j = Σ_i [ ½ tr(G⁻¹ ∂_i G) g^{ij} - (G⁻¹ ∂_i G G⁻¹)_{ij} ]`,
///
/// which is the divergence form `(det G)^{-1/2} ∂_i((det G)^{1/2} g^{ij} ∂_j u)`
/// with the density and inverse-metric derivatives expanded.
pub fn laplace_beltrami(
    chart: &dyn Chart,
    theta: &[f64],
    field: &dyn ScalarField,
) -> Result<f64> {
    let md = metric_at(chart, theta)?;
    let dg = metric_derivatives(chart, theta);
    let grad = field.gradient(theta);
    let hess = field.hessian(theta);
    let m = chart.param_dim();
    let mut lap = (&md.g_inv * hess).trace();
    for i in 0..m {
        let gi_dg = &md.g_inv * &dg[i];
        let half_trace = 0.5 * gi_dg.trace();
        let d_ginv = -(&gi_dg * &md.g_inv);
        for jdx in 0..m {
            lap += (half_trace * md.g_inv[(i, jdx)] + d_ginv[(i, jdx)]) * grad[jdx];
        }
    }
    Ok(lap)
}

/// Orthogonal projector onto the tangent space at `theta`: `P = J G⁻¹ Jᵀ`.
pub fn tangent_projector(chart: &dyn Chart, theta: &[f64]) -> Result<DMatrix<f64>> {
    let md = metric_at(chart, theta)?;
    Ok(&md.jacobian * &md.g_inv * md.jacobian.transpose())
}

/// Parameter secant `ξ = θ_x − θ_y` and its pushforward
/// `η = J(θ_y) ξ`, the first-order surrogate for the ambient secant `x − y`.
pub fn secant_vectors(
    chart: &dyn Chart,
    theta_x: &[f64],
    theta_y: &[f64],
) -> (DVector<f64>, DVector<f64>) {
    let xi = DVector::from_iterator(
        theta_x.len(),
        theta_x.iter().zip(theta_y).map(|(a, b)| a - b),
    );
    let eta = chart.jacobian(theta_y) * &xi;
    (xi, eta)
}

/// Defect ratio `|x − y − η| / |x − y|²` measuring how far the chart bends
/// secants away from their tangential pushforward. Bounded (in terms of the
/// chart's second derivatives and the metric's smallest eigenvalue) whenever
/// the parametrization is a nondegenerate C² embedding.
pub fn deformation_ratio(chart: &dyn Chart, theta_x: &[f64], theta_y: &[f64]) -> f64 {
    let x = chart.map(theta_x);
    let y = chart.map(theta_y);
    let (_, eta) = secant_vectors(chart, theta_x, theta_y);
    let secant = &x - &y;
    let d2 = secant.norm_squared();
    if d2 == 0.0 {
        return 0.0;
    }
    (secant - eta).norm() / d2
}

/// Damped Gauss–Newton minimization of `|ψ(θ) − x|²`, tried from a coarse
/// grid of starting points inside the domain's bounding box.
pub(crate) fn gauss_newton_inverse(
    map: &dyn Fn(&[f64]) -> DVector<f64>,
    jac: &dyn Fn(&[f64]) -> DMatrix<f64>,
    domain: &ParamDomain,
    x: &[f64],
) -> Result<Vec<f64>> {
    const TOL: f64 = 1e-12;
    let (lo, hi) = domain.bounding_box();
    let m = lo.len();
    let target = DVector::from_column_slice(x);

    // Starting guesses: bounding-box fractions 1/4, 1/2, 3/4 per axis,
    // keeping only points inside the domain (always at least the center for
    // the domains used here).
    let fracs = [0.5, 0.25, 0.75];
    let mut guesses: Vec<Vec<f64>> = Vec::new();
    let total = 3usize.pow(m as u32);
    for flat in 0..total {
        let mut rest = flat;
        let g: Vec<f64> = (0..m)
            .map(|kaxis| {
                let f = fracs[rest % 3];
                rest /= 3;
                lo[kaxis] + f * (hi[kaxis] - lo[kaxis])
            })
            .collect();
        if domain.contains_tol(&g, 1e-12) {
            guesses.push(g);
        }
    }

    let mut best_residual = f64::INFINITY;
    for guess in guesses {
        let mut theta = guess;
        let mut residual = (map(&theta) - &target).norm();
        for _ in 0..80 {
            if residual <= TOL {
                return Ok(theta);
            }
            let j = jac(&theta);
            let r = map(&theta) - &target;
            let normal = j.transpose() * &j;
            let rhs = -(j.transpose() * &r);
            let step = match nalgebra::Cholesky::new(normal) {
                Some(ch) => ch.solve(&rhs),
                None => break,
            };
            // Halve the step until the residual actually drops.
            let mut lambda = 1.0;
            let mut advanced = false;
            for _ in 0..30 {
                let trial: Vec<f64> = theta
                    .iter()
                    .enumerate()
                    .map(|(kaxis, t)| t + lambda * step[kaxis])
                    .collect();
                let tr = (map(&trial) - &target).norm();
                if tr < residual {
                    theta = trial;
                    residual = tr;
                    advanced = true;
                    break;
                }
                lambda *= 0.5;
            }
            if !advanced {
                break;
            }
        }
        if residual <= TOL {
            return Ok(theta);
        }
        best_residual = best_residual.min(residual);
    }
    Err(Error::InverseDiverged {
        point: x.to_vec(),
        residual: best_residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use nalgebra::{DMatrix, DVector};

    fn sin_cos_field() -> ClosureField {
        // u(θ) = sin θ₁ cos θ₂ on flat parameter space.
        ClosureField::new(
            |t| t[0].sin() * t[1].cos(),
            |t| DVector::from_vec(vec![t[0].cos() * t[1].cos(), -t[0].sin() * t[1].sin()]),
            |t| {
                DMatrix::from_row_slice(
                    2,
                    2,
                    &[
                        -t[0].sin() * t[1].cos(),
                        -t[0].cos() * t[1].sin(),
                        -t[0].cos() * t[1].sin(),
                        -t[0].sin() * t[1].cos(),
                    ],
                )
            },
        )
    }

    #[test]
    fn identity_chart_reduces_to_flat_calculus() {
        let chart = IdentityChart::new(ParamDomain::Box {
            lo: vec![0.0, 0.0],
            hi: vec![1.0, 1.0],
        });
        let u = sin_cos_field();
        let theta = [0.4, 0.7];
        let md = metric_at(&chart, &theta).unwrap();
        assert_relative_eq!(md.sqrt_det, 1.0, epsilon = 1e-15);
        assert_relative_eq!(md.g[(0, 1)], 0.0, epsilon = 1e-15);

        // Flat Laplacian of sin·cos is -2 u.
        let lap = laplace_beltrami(&chart, &theta, &u).unwrap();
        assert_relative_eq!(lap, -2.0 * u.value(&theta), epsilon = 1e-13);

        let grad = surface_gradient(&chart, &theta, &u).unwrap();
        assert_relative_eq!(grad[0], theta[0].cos() * theta[1].cos(), epsilon = 1e-13);
        assert_relative_eq!(grad[1], -theta[0].sin() * theta[1].sin(), epsilon = 1e-13);
    }

    #[test]
    fn sphere_eigenfunctions_on_stereographic_chart() {
        // Coordinate functions restricted to the unit sphere satisfy
        // Δ_M x_c = -2 x_c; checked well away from and close to the equator.
        let chart = StereographicChart::unit_hemisphere();
        for c in 0..3 {
            let mut v = vec![0.0; 3];
            v[c] = 1.0;
            let f = ClosureField::linear(v, 0.0);
            for theta in [[0.0, 0.0], [0.3, -0.2], [0.7, 0.5], [0.95, 0.0]] {
                let restricted = OnChart {
                    chart: &chart,
                    ambient: &f,
                };
                let lap = laplace_beltrami(&chart, &theta, &restricted).unwrap();
                let x = chart.map(&theta);
                assert_relative_eq!(lap, -2.0 * x[c], epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn chain_rule_matches_finite_differences() {
        let chart = StereographicChart::unit_hemisphere();
        let f = ClosureField::new(
            |x| (x[0] - 0.2) * x[1] + x[2] * x[2] * x[0],
            |x| {
                DVector::from_vec(vec![
                    x[1] + x[2] * x[2],
                    x[0] - 0.2,
                    2.0 * x[2] * x[0],
                ])
            },
            |x| {
                DMatrix::from_row_slice(
                    3,
                    3,
                    &[0.0, 1.0, 2.0 * x[2], 1.0, 0.0, 0.0, 2.0 * x[2], 0.0, 2.0 * x[0]],
                )
            },
        );
        let restricted = OnChart {
            chart: &chart,
            ambient: &f,
        };
        let theta = [0.35, -0.55];
        let h = 1e-5;
        let val = |t: &[f64]| restricted.value(t);

        let grad = restricted.gradient(&theta);
        let hess = restricted.hessian(&theta);
        for i in 0..2 {
            let mut tp = theta.to_vec();
            let mut tm = theta.to_vec();
            tp[i] += h;
            tm[i] -= h;
            assert_relative_eq!(grad[i], (val(&tp) - val(&tm)) / (2.0 * h), epsilon = 1e-8);
            assert_relative_eq!(
                hess[(i, i)],
                (val(&tp) - 2.0 * val(&theta.to_vec()) + val(&tm)) / (h * h),
                epsilon = 1e-5
            );
        }
        let (i, j) = (0, 1);
        let mut tpp = theta.to_vec();
        let mut tpm = theta.to_vec();
        let mut tmp = theta.to_vec();
        let mut tmm = theta.to_vec();
        tpp[i] += h;
        tpp[j] += h;
        tpm[i] += h;
        tpm[j] -= h;
        tmp[i] -= h;
        tmp[j] += h;
        tmm[i] -= h;
        tmm[j] -= h;
        let fd_cross = (val(&tpp) - val(&tpm) - val(&tmp) + val(&tmm)) / (4.0 * h * h);
        assert_relative_eq!(hess[(0, 1)], fd_cross, epsilon = 1e-5);
    }

    #[test]
    fn metric_derivatives_match_finite_differences() {
        let chart = StereographicChart::unit_hemisphere();
        let theta = [0.4, 0.25];
        let dg = metric_derivatives(&chart, &theta);
        let h = 1e-6;
        for i in 0..2 {
            let mut tp = theta.to_vec();
            let mut tm = theta.to_vec();
            tp[i] += h;
            tm[i] -= h;
            let gp = metric_at(&chart, &tp).unwrap().g;
            let gm = metric_at(&chart, &tm).unwrap().g;
            let fd = (gp - gm) / (2.0 * h);
            for k in 0..2 {
                for l in 0..2 {
                    assert_relative_eq!(dg[i][(k, l)], fd[(k, l)], epsilon = 1e-7);
                }
            }
        }
    }

    #[test]
    fn surface_gradient_projects_linear_fields() {
        // For f(x) = v·x the surface gradient is the tangential part of v.
        let chart = StereographicChart::unit_hemisphere();
        let v = vec![0.3, -1.1, 0.7];
        let f = ClosureField::linear(v.clone(), 0.4);
        let theta = [0.5, 0.2];
        let restricted = OnChart {
            chart: &chart,
            ambient: &f,
        };
        let grad = surface_gradient(&chart, &theta, &restricted).unwrap();
        let proj = tangent_projector(&chart, &theta).unwrap();
        let expected = proj * DVector::from_column_slice(&v);
        for c in 0..3 {
            assert_relative_eq!(grad[c], expected[c], epsilon = 1e-12);
        }
        // And it is a tangent vector: projecting again changes nothing.
        let reproj = tangent_projector(&chart, &theta).unwrap() * &grad;
        for c in 0..3 {
            assert_relative_eq!(reproj[c], grad[c], epsilon = 1e-12);
        }
    }

    #[test]
    fn secant_pushforward_defect_is_second_order() {
        let chart = StereographicChart::unit_hemisphere();
        let theta_y = [0.3, 0.1];
        let dir = [0.6, -0.8];
        let mut last_defect = f64::INFINITY;
        for t in [0.2, 0.1, 0.05, 0.025] {
            let theta_x = [theta_y[0] + t * dir[0], theta_y[1] + t * dir[1]];
            let ratio = deformation_ratio(&chart, &theta_x, &theta_y);
            assert!(ratio < 5.0, "defect ratio {ratio} too large at t = {t}");
            let x = chart.map(&theta_x);
            let y = chart.map(&theta_y);
            let (_, eta) = secant_vectors(&chart, &theta_x, &theta_y);
            let defect = (x - y - eta).norm();
            assert!(defect < last_defect);
            last_defect = defect;
        }
    }

    #[test]
    fn gauss_newton_inverse_recovers_parameters() {
        // Exercise the default `Chart::inverse` through a chart that does
        // not override it.
        struct NoInverse(StereographicChart);
        impl Chart for NoInverse {
            fn param_dim(&self) -> usize {
                self.0.param_dim()
            }
            fn ambient_dim(&self) -> usize {
                self.0.ambient_dim()
            }
            fn domain(&self) -> &ParamDomain {
                self.0.domain()
            }
            fn map(&self, theta: &[f64]) -> DVector<f64> {
                self.0.map(theta)
            }
            fn jacobian(&self, theta: &[f64]) -> DMatrix<f64> {
                self.0.jacobian(theta)
            }
            fn hessian(&self, theta: &[f64]) -> Vec<DMatrix<f64>> {
                self.0.hessian(theta)
            }
        }
        let chart = NoInverse(StereographicChart::unit_hemisphere());
        for theta in [[0.0, 0.0], [0.62, -0.33], [-0.9, 0.05], [0.1, 0.98]] {
            let x = chart.map(&theta);
            let back = chart.inverse(x.as_slice()).unwrap();
            assert_relative_eq!(back[0], theta[0], epsilon = 1e-9);
            assert_relative_eq!(back[1], theta[1], epsilon = 1e-9);
        }
    }
}
