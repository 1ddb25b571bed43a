//! Concrete chart implementations.

use super::domain::ParamDomain;
use super::Chart;
use crate::error::{Error, Result};
use nalgebra::{DMatrix, DVector};

/// Flat chart ψ(θ) = θ: the manifold is the parameter domain itself.
pub struct IdentityChart {
    domain: ParamDomain,
}

impl IdentityChart {
    pub fn new(domain: ParamDomain) -> Self {
        IdentityChart { domain }
    }
}

impl Chart for IdentityChart {
    fn param_dim(&self) -> usize {
        self.domain.dim()
    }
    fn ambient_dim(&self) -> usize {
        self.domain.dim()
    }
    fn domain(&self) -> &ParamDomain {
        &self.domain
    }
    fn map(&self, theta: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(theta)
    }
    fn jacobian(&self, _theta: &[f64]) -> DMatrix<f64> {
        DMatrix::identity(self.domain.dim(), self.domain.dim())
    }
    fn hessian(&self, _theta: &[f64]) -> Vec<DMatrix<f64>> {
        let m = self.domain.dim();
        vec![DMatrix::zeros(m, m); m]
    }
    fn inverse(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok(x.to_vec())
    }
}

/// Circular arc of given radius: ψ(t) = R(cos t, sin t), t in [t0, t1].
pub struct CircleArcChart {
    radius: f64,
    domain: ParamDomain,
    t0: f64,
    t1: f64,
}

impl CircleArcChart {
    pub fn new(radius: f64, t0: f64, t1: f64) -> Self {
        CircleArcChart {
            radius,
            domain: ParamDomain::interval(t0, t1),
            t0,
            t1,
        }
    }

    /// Upper half of the unit circle, parametrized by angle in [0, π].
    pub fn unit_semicircle() -> Self {
        CircleArcChart::new(1.0, 0.0, std::f64::consts::PI)
    }
}

impl Chart for CircleArcChart {
    fn param_dim(&self) -> usize {
        1
    }
    fn ambient_dim(&self) -> usize {
        2
    }
    fn domain(&self) -> &ParamDomain {
        &self.domain
    }
    fn map(&self, theta: &[f64]) -> DVector<f64> {
        let (s, c) = theta[0].sin_cos();
        DVector::from_vec(vec![self.radius * c, self.radius * s])
    }
    fn jacobian(&self, theta: &[f64]) -> DMatrix<f64> {
        let (s, c) = theta[0].sin_cos();
        DMatrix::from_column_slice(2, 1, &[-self.radius * s, self.radius * c])
    }
    fn hessian(&self, theta: &[f64]) -> Vec<DMatrix<f64>> {
        let (s, c) = theta[0].sin_cos();
        vec![
            DMatrix::from_element(1, 1, -self.radius * c),
            DMatrix::from_element(1, 1, -self.radius * s),
        ]
    }
    fn inverse(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut t = x[1].atan2(x[0]);
        let two_pi = std::f64::consts::TAU;
        while t < self.t0 - 1e-9 {
            t += two_pi;
        }
        while t > self.t1 + 1e-9 {
            t -= two_pi;
        }
        if t < self.t0 - 1e-9 {
            return Err(Error::OutsideDomain(x.to_vec()));
        }
        Ok(vec![t])
    }
}

/// Hemisphere of radius R parametrized over the closed unit disk by inverse
/// stereographic projection from the antipode of the apex:
///
/// `ψ(p, q) = R (2p, 2q, 1 − s) / (1 + s)`, `s = p² + q²`.
///
/// The chart is conformal — the induced metric is `λ² I` with
/// `λ = 2R/(1+s)` — so its distortion is bounded on the whole closed disk
/// (λ ranges over [R, 2R]), and the unit parameter circle maps onto the
/// equator.
pub struct StereographicChart {
    radius: f64,
    domain: ParamDomain,
}

impl StereographicChart {
    pub fn new(radius: f64) -> Self {
        StereographicChart {
            radius,
            domain: ParamDomain::unit_disk(),
        }
    }

    /// Upper unit hemisphere, equator included.
    pub fn unit_hemisphere() -> Self {
        StereographicChart::new(1.0)
    }

    /// Conformal factor λ(θ) of the induced metric `G = λ² I`.
    pub fn conformal_factor(&self, theta: &[f64]) -> f64 {
        let s = theta[0] * theta[0] + theta[1] * theta[1];
        2.0 * self.radius / (1.0 + s)
    }
}

impl Chart for StereographicChart {
    fn param_dim(&self) -> usize {
        2
    }
    fn ambient_dim(&self) -> usize {
        3
    }
    fn domain(&self) -> &ParamDomain {
        &self.domain
    }

    fn map(&self, theta: &[f64]) -> DVector<f64> {
        let (p, q) = (theta[0], theta[1]);
        let s = p * p + q * q;
        let d = 1.0 + s;
        DVector::from_vec(vec![
            self.radius * 2.0 * p / d,
            self.radius * 2.0 * q / d,
            self.radius * (1.0 - s) / d,
        ])
    }

    fn jacobian(&self, theta: &[f64]) -> DMatrix<f64> {
        let (p, q) = (theta[0], theta[1]);
        let s = p * p + q * q;
        let d2 = (1.0 + s) * (1.0 + s);
        let r = self.radius;
        DMatrix::from_row_slice(
            3,
            2,
            &[
                r * 2.0 * (1.0 + q * q - p * p) / d2,
                r * -4.0 * p * q / d2,
                r * -4.0 * p * q / d2,
                r * 2.0 * (1.0 + p * p - q * q) / d2,
                r * -4.0 * p / d2,
                r * -4.0 * q / d2,
            ],
        )
    }

    fn hessian(&self, theta: &[f64]) -> Vec<DMatrix<f64>> {
        // Quotient rule on ψ_c = N_c / D with D = 1 + s:
        // ∂_ab (N/D) = N_ab/D − (N_a D_b + N_b D_a + N D_ab)/D² + 2 N D_a D_b / D³.
        let (p, q) = (theta[0], theta[1]);
        let s = p * p + q * q;
        let d = 1.0 + s;
        let d_a = [2.0 * p, 2.0 * q];
        let d_ab = [[2.0, 0.0], [0.0, 2.0]];
        let comps: [(f64, [f64; 2], [[f64; 2]; 2]); 3] = [
            (2.0 * p, [2.0, 0.0], [[0.0, 0.0], [0.0, 0.0]]),
            (2.0 * q, [0.0, 2.0], [[0.0, 0.0], [0.0, 0.0]]),
            (1.0 - s, [-2.0 * p, -2.0 * q], [[-2.0, 0.0], [0.0, -2.0]]),
        ];
        comps
            .iter()
            .map(|(n, na, nab)| {
                let mut h = DMatrix::zeros(2, 2);
                for a in 0..2 {
                    for b in 0..2 {
                        h[(a, b)] = self.radius
                            * (nab[a][b] / d
                                - (na[a] * d_a[b] + na[b] * d_a[a] + n * d_ab[a][b]) / (d * d)
                                + 2.0 * n * d_a[a] * d_a[b] / (d * d * d));
                    }
                }
                h
            })
            .collect()
    }

    fn inverse(&self, x: &[f64]) -> Result<Vec<f64>> {
        // On the upper hemisphere z >= 0, so the denominator stays >= R.
        let denom = self.radius + x[2];
        if denom <= 0.0 {
            return Err(Error::OutsideDomain(x.to_vec()));
        }
        Ok(vec![x[0] / denom, x[1] / denom])
    }
}

/// Chart defined by its map alone; Jacobian and Hessian come from central
/// finite differences. Intended for quick experiments with custom surfaces —
/// derivative accuracy is ~`step²`, so downstream quantities lose digits
/// accordingly.
pub struct FdChart<F> {
    map_fn: F,
    domain: ParamDomain,
    ambient_dim: usize,
    step: f64,
}

impl<F: Fn(&[f64]) -> DVector<f64> + Send + Sync> FdChart<F> {
    pub fn new(map_fn: F, domain: ParamDomain, ambient_dim: usize) -> Self {
        FdChart {
            map_fn,
            domain,
            ambient_dim,
            step: 1e-5,
        }
    }

    pub fn with_step(mut self, step: f64) -> Self {
        self.step = step;
        self
    }
}

impl<F: Fn(&[f64]) -> DVector<f64> + Send + Sync> Chart for FdChart<F> {
    fn param_dim(&self) -> usize {
        self.domain.dim()
    }
    fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }
    fn domain(&self) -> &ParamDomain {
        &self.domain
    }
    fn map(&self, theta: &[f64]) -> DVector<f64> {
        (self.map_fn)(theta)
    }

    fn jacobian(&self, theta: &[f64]) -> DMatrix<f64> {
        let m = self.domain.dim();
        let h = self.step;
        let mut j = DMatrix::zeros(self.ambient_dim, m);
        let mut tp = theta.to_vec();
        let mut tm = theta.to_vec();
        for i in 0..m {
            tp[i] = theta[i] + h;
            tm[i] = theta[i] - h;
            let col = ((self.map_fn)(&tp) - (self.map_fn)(&tm)) / (2.0 * h);
            j.set_column(i, &col);
            tp[i] = theta[i];
            tm[i] = theta[i];
        }
        j
    }

    fn hessian(&self, theta: &[f64]) -> Vec<DMatrix<f64>> {
        let m = self.domain.dim();
        let k = self.ambient_dim;
        let h = self.step;
        let center = (self.map_fn)(theta);
        let mut out = vec![DMatrix::zeros(m, m); k];
        let mut t = theta.to_vec();
        for i in 0..m {
            // Diagonal: second central difference.
            t[i] = theta[i] + h;
            let fp = (self.map_fn)(&t);
            t[i] = theta[i] - h;
            let fm = (self.map_fn)(&t);
            t[i] = theta[i];
            for c in 0..k {
                out[c][(i, i)] = (fp[c] - 2.0 * center[c] + fm[c]) / (h * h);
            }
            // Off-diagonal: four-point cross difference.
            for jdx in (i + 1)..m {
                let mut eval = |si: f64, sj: f64| {
                    t[i] = theta[i] + si * h;
                    t[jdx] = theta[jdx] + sj * h;
                    let v = (self.map_fn)(&t);
                    t[i] = theta[i];
                    t[jdx] = theta[jdx];
                    v
                };
                let cross =
                    (eval(1.0, 1.0) - eval(1.0, -1.0) - eval(-1.0, 1.0) + eval(-1.0, -1.0))
                        / (4.0 * h * h);
                for c in 0..k {
                    out[c][(i, jdx)] = cross[c];
                    out[c][(jdx, i)] = cross[c];
                }
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{laplace_beltrami, metric_at, ClosureField, OnChart};
    use approx::assert_relative_eq;

    /// Polar-coordinate spherical cap (test fixture): a chart whose metric
    /// diag(1, sin²u) is *not* conformal, exercising the general formulas.
    struct PolarCap;

    impl PolarCap {
        fn domain() -> ParamDomain {
            ParamDomain::Box {
                lo: vec![0.2, 0.1],
                hi: vec![1.3, 2.0],
            }
        }
    }

    impl Chart for PolarCap {
        fn param_dim(&self) -> usize {
            2
        }
        fn ambient_dim(&self) -> usize {
            3
        }
        fn domain(&self) -> &ParamDomain {
            // Static storage keeps the fixture simple.
            use std::sync::OnceLock;
            static DOMAIN: OnceLock<ParamDomain> = OnceLock::new();
            DOMAIN.get_or_init(PolarCap::domain)
        }
        fn map(&self, t: &[f64]) -> DVector<f64> {
            let (u, v) = (t[0], t[1]);
            DVector::from_vec(vec![u.sin() * v.cos(), u.sin() * v.sin(), u.cos()])
        }
        fn jacobian(&self, t: &[f64]) -> DMatrix<f64> {
            let (u, v) = (t[0], t[1]);
            DMatrix::from_row_slice(
                3,
                2,
                &[
                    u.cos() * v.cos(),
                    -u.sin() * v.sin(),
                    u.cos() * v.sin(),
                    u.sin() * v.cos(),
                    -u.sin(),
                    0.0,
                ],
            )
        }
        fn hessian(&self, t: &[f64]) -> Vec<DMatrix<f64>> {
            let (u, v) = (t[0], t[1]);
            vec![
                DMatrix::from_row_slice(
                    2,
                    2,
                    &[
                        -u.sin() * v.cos(),
                        -u.cos() * v.sin(),
                        -u.cos() * v.sin(),
                        -u.sin() * v.cos(),
                    ],
                ),
                DMatrix::from_row_slice(
                    2,
                    2,
                    &[
                        -u.sin() * v.sin(),
                        u.cos() * v.cos(),
                        u.cos() * v.cos(),
                        -u.sin() * v.sin(),
                    ],
                ),
                DMatrix::from_row_slice(2, 2, &[-u.cos(), 0.0, 0.0, 0.0]),
            ]
        }
    }

    #[test]
    fn stereographic_chart_is_conformal() {
        let chart = StereographicChart::unit_hemisphere();
        for theta in [[0.0, 0.0], [0.5, 0.0], [-0.3, 0.8], [0.7, -0.7]] {
            let md = metric_at(&chart, &theta).unwrap();
            let lam = chart.conformal_factor(&theta);
            assert_relative_eq!(md.g[(0, 0)], lam * lam, epsilon = 1e-13);
            assert_relative_eq!(md.g[(1, 1)], lam * lam, epsilon = 1e-13);
            assert_relative_eq!(md.g[(0, 1)], 0.0, epsilon = 1e-13);
            assert_relative_eq!(md.sqrt_det, lam * lam, epsilon = 1e-13);
            // Points land on the unit sphere.
            assert_relative_eq!(chart.map(&theta).norm(), 1.0, epsilon = 1e-14);
        }
        // Distortion stays within [1, 2]: bounded metric on the closed disk.
        assert_relative_eq!(chart.conformal_factor(&[0.0, 0.0]), 2.0);
        assert_relative_eq!(chart.conformal_factor(&[1.0, 0.0]), 1.0);
    }

    #[test]
    fn stereographic_derivatives_match_finite_differences() {
        let exact = StereographicChart::new(1.4);
        let fd = FdChart::new(
            |t: &[f64]| StereographicChart::new(1.4).map(t),
            ParamDomain::unit_disk(),
            3,
        );
        for theta in [[0.25, -0.4], [0.0, 0.0], [0.6, 0.55]] {
            let je = exact.jacobian(&theta);
            let jf = fd.jacobian(&theta);
            for c in 0..3 {
                for i in 0..2 {
                    assert_relative_eq!(je[(c, i)], jf[(c, i)], epsilon = 1e-8);
                }
            }
            let he = exact.hessian(&theta);
            let hf = fd.hessian(&theta);
            for c in 0..3 {
                for i in 0..2 {
                    for j in 0..2 {
                        assert_relative_eq!(he[c][(i, j)], hf[c][(i, j)], epsilon = 1e-5);
                    }
                }
            }
        }
    }

    #[test]
    fn stereographic_inverse_is_exact() {
        let chart = StereographicChart::unit_hemisphere();
        for theta in [[0.0, 0.0], [0.3, -0.6], [1.0, 0.0], [-0.6, 0.8]] {
            let x = chart.map(&theta);
            let back = chart.inverse(x.as_slice()).unwrap();
            assert_relative_eq!(back[0], theta[0], epsilon = 1e-14);
            assert_relative_eq!(back[1], theta[1], epsilon = 1e-14);
        }
        // Equator points ([1,0] direction) and apex behave.
        let apex = chart.inverse(&[0.0, 0.0, 1.0]).unwrap();
        assert_eq!(apex, vec![0.0, 0.0]);
    }

    #[test]
    fn arc_chart_has_unit_speed_and_curvature() {
        let chart = CircleArcChart::unit_semicircle();
        for t in [0.0, 0.4, 1.9, std::f64::consts::PI] {
            let j = chart.jacobian(&[t]);
            assert_relative_eq!(j.column(0).norm(), 1.0, epsilon = 1e-14);
            // ψ'' = -ψ for the unit circle.
            let h = chart.hessian(&[t]);
            let x = chart.map(&[t]);
            assert_relative_eq!(h[0][(0, 0)], -x[0], epsilon = 1e-14);
            assert_relative_eq!(h[1][(0, 0)], -x[1], epsilon = 1e-14);
            let back = chart.inverse(x.as_slice()).unwrap();
            assert_relative_eq!(back[0], t, epsilon = 1e-12);
        }
        let md = metric_at(&chart, &[1.0]).unwrap();
        assert_relative_eq!(md.sqrt_det, 1.0, epsilon = 1e-14);
    }

    #[test]
    fn fd_chart_matches_analytic_cap_derivatives() {
        let cap = PolarCap;
        let fd = FdChart::new(|t: &[f64]| PolarCap.map(t), PolarCap::domain(), 3);
        let theta = [0.8, 1.1];
        let je = cap.jacobian(&theta);
        let jf = fd.jacobian(&theta);
        let he = cap.hessian(&theta);
        let hf = fd.hessian(&theta);
        for c in 0..3 {
            for i in 0..2 {
                assert_relative_eq!(je[(c, i)], jf[(c, i)], epsilon = 1e-8);
                for j in 0..2 {
                    assert_relative_eq!(he[c][(i, j)], hf[c][(i, j)], epsilon = 1e-5);
                }
            }
        }
    }

    #[test]
    fn cap_metric_is_polar_and_laplacian_matches() {
        let cap = PolarCap;
        let theta = [0.9, 0.5];
        let md = metric_at(&cap, &theta).unwrap();
        assert_relative_eq!(md.g[(0, 0)], 1.0, epsilon = 1e-13);
        assert_relative_eq!(md.g[(1, 1)], theta[0].sin().powi(2), epsilon = 1e-13);
        assert_relative_eq!(md.g[(0, 1)], 0.0, epsilon = 1e-13);

        // Height function z restricted to the sphere: Δ_M z = -2 z, now
        // through a chart with a genuinely non-diagonal derivative structure.
        let f = ClosureField::linear(vec![0.0, 0.0, 1.0], 0.0);
        let restricted = OnChart {
            chart: &cap,
            ambient: &f,
        };
        let lap = laplace_beltrami(&cap, &theta, &restricted).unwrap();
        assert_relative_eq!(lap, -2.0 * theta[0].cos(), epsilon = 1e-11);
    }

    #[test]
    fn fd_chart_default_inverse_converges() {
        let fd = FdChart::new(|t: &[f64]| PolarCap.map(t), PolarCap::domain(), 3);
        for theta in [[0.5, 0.7], [1.2, 1.9], [0.25, 0.15]] {
            let x = PolarCap.map(&theta);
            let back = fd.inverse(x.as_slice()).unwrap();
            assert_relative_eq!(back[0], theta[0], epsilon = 1e-8);
            assert_relative_eq!(back[1], theta[1], epsilon = 1e-8);
        }
    }
}
