//! Boundary frames: positions, outward conormals, and boundary curvature.
//!
//! For a surface (m = 2) the boundary is a closed curve; each boundary node
//! carries the outward unit conormal — the ambient vector tangent to the
//! manifold, normal to the boundary curve, pointing out of the domain — and
//! the curvature of the boundary in that direction. For a curve (m = 1) the
//! boundary is a pair of endpoints with counting measure and zero curvature.

use super::{metric_at, Chart};
use crate::error::Result;
use nalgebra::DVector;
use std::sync::Arc;

/// Closed curve in parameter space with two derivatives, typically tracing
/// the boundary of the chart domain.
#[derive(Clone)]
pub struct ParamCurve {
    map: Arc<dyn Fn(f64) -> [f64; 2] + Send + Sync>,
    d1: Arc<dyn Fn(f64) -> [f64; 2] + Send + Sync>,
    d2: Arc<dyn Fn(f64) -> [f64; 2] + Send + Sync>,
    pub period: f64,
}

impl ParamCurve {
    pub fn new(
        map: impl Fn(f64) -> [f64; 2] + Send + Sync + 'static,
        d1: impl Fn(f64) -> [f64; 2] + Send + Sync + 'static,
        d2: impl Fn(f64) -> [f64; 2] + Send + Sync + 'static,
        period: f64,
    ) -> Self {
        ParamCurve {
            map: Arc::new(map),
            d1: Arc::new(d1),
            d2: Arc::new(d2),
            period,
        }
    }

    /// Counterclockwise origin-centered circle of the given radius.
    pub fn circle(radius: f64) -> Self {
        ParamCurve::new(
            move |w| [radius * w.cos(), radius * w.sin()],
            move |w| [-radius * w.sin(), radius * w.cos()],
            move |w| [-radius * w.cos(), -radius * w.sin()],
            std::f64::consts::TAU,
        )
    }

    pub fn at(&self, omega: f64) -> [f64; 2] {
        (self.map)(omega)
    }
    pub fn tangent(&self, omega: f64) -> [f64; 2] {
        (self.d1)(omega)
    }
    pub fn second(&self, omega: f64) -> [f64; 2] {
        (self.d2)(omega)
    }
}

/// How a chart's boundary is described.
#[derive(Clone)]
pub enum BoundaryShape {
    /// Endpoint parameter values of a one-dimensional chart domain.
    Points(Vec<f64>),
    /// Closed boundary curve of a two-dimensional chart domain.
    Curve(ParamCurve),
}

/// Geometric data attached to one boundary node.
#[derive(Debug, Clone)]
pub struct BoundaryPoint {
    pub theta: Vec<f64>,
    pub position: DVector<f64>,
    /// Outward unit conormal.
    pub conormal: DVector<f64>,
    /// Curvature of the boundary curve in the conormal direction,
    /// `γ''·n / |γ'|²`; zero for point boundaries.
    pub kappa_n: f64,
    /// Line-measure density |dγ/dω| for curve boundaries; 1 for points.
    pub speed: f64,
}

/// Frame at position ω along a parameter-space boundary curve.
///
/// The conormal is constructed in parameter coordinates: a direction `a`
/// with `aᵀ G θ' = 0` and `aᵀ G a = 1` pushes forward to a unit ambient
/// vector `J a` tangent to the manifold and orthogonal to the boundary
/// tangent. The sign is fixed by a small probe step: if `θ + εa` stays in
/// the chart domain the direction is flipped, so curves tracing the domain
/// boundary get the outward side. (For a counterclockwise curve strictly
/// inside the domain, the probe always succeeds and the flip leaves the
/// conormal pointing away from the enclosed region.)
pub fn curve_frame(chart: &dyn Chart, curve: &ParamCurve, omega: f64) -> Result<BoundaryPoint> {
    let th = curve.at(omega);
    let theta = vec![th[0], th[1]];
    let md = metric_at(chart, &theta)?;
    let tdot = curve.tangent(omega);
    let tdot_v = DVector::from_vec(vec![tdot[0], tdot[1]]);
    let gamma_dot = &md.jacobian * &tdot_v;
    let speed = gamma_dot.norm();

    let gc = &md.g * &tdot_v;
    let mut a = DVector::from_vec(vec![-gc[1], gc[0]]);
    let norm2 = a.dot(&(&md.g * &a));
    a /= norm2.sqrt();
    let eps = 1e-6;
    let probe = [theta[0] + eps * a[0], theta[1] + eps * a[1]];
    if chart.domain().contains_tol(&probe, 0.0) {
        a = -a;
    }
    let conormal = &md.jacobian * &a;

    let tddot = curve.second(omega);
    let hs = chart.hessian(&theta);
    let mut gamma_ddot = &md.jacobian * DVector::from_vec(vec![tddot[0], tddot[1]]);
    for (c, hc) in hs.iter().enumerate() {
        gamma_ddot[c] += tdot_v.dot(&(hc * &tdot_v));
    }
    let kappa_n = gamma_ddot.dot(&conormal) / (speed * speed);

    Ok(BoundaryPoint {
        position: chart.map(&theta),
        theta,
        conormal,
        kappa_n,
        speed,
    })
}

/// Frame at an endpoint of a one-dimensional chart domain.
pub fn endpoint_frame(chart: &dyn Chart, theta_e: f64) -> Result<BoundaryPoint> {
    let theta = vec![theta_e];
    let j = chart.jacobian(&theta);
    let col = j.column(0).into_owned();
    let mut conormal = &col / col.norm();
    let eps = 1e-6 * (1.0 + theta_e.abs());
    if chart.domain().contains_tol(&[theta_e + eps], 0.0) {
        conormal = -conormal;
    }
    Ok(BoundaryPoint {
        position: chart.map(&theta),
        theta,
        conormal,
        kappa_n: 0.0,
        speed: 1.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{
        tangent_projector, CircleArcChart, IdentityChart, ParamDomain, StereographicChart,
    };
    use approx::assert_relative_eq;

    #[test]
    fn interval_endpoints_point_outward() {
        let chart = IdentityChart::new(ParamDomain::unit_interval());
        let left = endpoint_frame(&chart, 0.0).unwrap();
        let right = endpoint_frame(&chart, 1.0).unwrap();
        assert_relative_eq!(left.conormal[0], -1.0);
        assert_relative_eq!(right.conormal[0], 1.0);
        assert_eq!(left.kappa_n, 0.0);
        assert_eq!(left.speed, 1.0);
    }

    #[test]
    fn semicircle_endpoints_point_outward() {
        let chart = CircleArcChart::unit_semicircle();
        // At both ends of the upper semicircle the arc recedes upward, so
        // the outward conormal points straight down.
        let a = endpoint_frame(&chart, 0.0).unwrap();
        assert_relative_eq!(a.conormal[0], 0.0, epsilon = 1e-15);
        assert_relative_eq!(a.conormal[1], -1.0, epsilon = 1e-15);
        let b = endpoint_frame(&chart, std::f64::consts::PI).unwrap();
        assert_relative_eq!(b.conormal[0], 0.0, epsilon = 1e-12);
        assert_relative_eq!(b.conormal[1], -1.0, epsilon = 1e-12);
    }

    #[test]
    fn flat_disk_boundary_has_radial_conormal_and_curvature_minus_one() {
        let chart = IdentityChart::new(ParamDomain::unit_disk());
        let circle = ParamCurve::circle(1.0);
        for omega in [0.0, 0.9, 2.5, 4.4, 6.0] {
            let f = curve_frame(&chart, &circle, omega).unwrap();
            assert_relative_eq!(f.conormal[0], omega.cos(), epsilon = 1e-12);
            assert_relative_eq!(f.conormal[1], omega.sin(), epsilon = 1e-12);
            assert_relative_eq!(f.kappa_n, -1.0, epsilon = 1e-12);
            assert_relative_eq!(f.speed, 1.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn equator_conormal_is_south_and_geodesic() {
        let chart = StereographicChart::unit_hemisphere();
        let circle = ParamCurve::circle(1.0);
        for omega in [0.0, 1.3, 3.3, 5.1] {
            let f = curve_frame(&chart, &circle, omega).unwrap();
            assert_relative_eq!(f.position[2], 0.0, epsilon = 1e-14);
            assert_relative_eq!(f.conormal[0], 0.0, epsilon = 1e-12);
            assert_relative_eq!(f.conormal[1], 0.0, epsilon = 1e-12);
            assert_relative_eq!(f.conormal[2], -1.0, epsilon = 1e-12);
            // The equator is a great circle: zero curvature toward the pole.
            assert_relative_eq!(f.kappa_n, 0.0, epsilon = 1e-12);
            assert_relative_eq!(f.speed, 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn latitude_circle_curvature_matches_closed_form() {
        // The parameter circle of radius ρ maps to the latitude circle of a
        // spherical cap; its curvature toward the equator is -(1-ρ²)/(2ρ).
        let chart = StereographicChart::unit_hemisphere();
        let rho = 0.5;
        let f = curve_frame(&chart, &ParamCurve::circle(rho), 0.0).unwrap();
        assert_relative_eq!(f.kappa_n, -(1.0 - rho * rho) / (2.0 * rho), epsilon = 1e-12);
        assert_relative_eq!(f.conormal[0], 0.6, epsilon = 1e-12);
        assert_relative_eq!(f.conormal[1], 0.0, epsilon = 1e-12);
        assert_relative_eq!(f.conormal[2], -0.8, epsilon = 1e-12);
    }

    #[test]
    fn conormal_is_unit_tangent_and_orthogonal_to_boundary() {
        let chart = StereographicChart::unit_hemisphere();
        let circle = ParamCurve::circle(1.0);
        for omega in [0.4, 2.0, 3.9] {
            let f = curve_frame(&chart, &circle, omega).unwrap();
            assert_relative_eq!(f.conormal.norm(), 1.0, epsilon = 1e-12);
            // Orthogonal to the boundary tangent.
            let td = circle.tangent(omega);
            let gd = chart.jacobian(&f.theta) * nalgebra::DVector::from_vec(vec![td[0], td[1]]);
            assert_relative_eq!(f.conormal.dot(&gd), 0.0, epsilon = 1e-12);
            // Lies in the tangent space of the manifold.
            let proj = tangent_projector(&chart, &f.theta).unwrap();
            let reproj = proj * &f.conormal;
            for c in 0..3 {
                assert_relative_eq!(reproj[c], f.conormal[c], epsilon = 1e-12);
            }
        }
    }
}
