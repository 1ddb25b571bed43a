//! Nonlocal integral approximation of the Poisson problem on smooth
//! compact manifolds embedded in Euclidean space, with homogeneous
//! Dirichlet boundary.
//!
//! The local problem `-laplace_M u = f` on `M`, `u = 0` on the boundary, is
//! replaced by a coupled pair of integral equations over a kernel of radius
//! `2 delta`: one on the manifold interior for `u_delta`, one on the boundary
//! for the normal-flux unknown `v_delta`. Boundary terms carry a factor-2
//! flux weight plus a normal-curvature correction; the crate exists to build
//! those operators, measure their truncation residuals against manufactured
//! solutions, and solve the coupled system on a small catalog of parametrized
//! manifolds (interval, half circle arc, unit disk, hemisphere).
//!
//! Start with the runnable examples (`cargo run --release --example <name>`):
//!
//! * `kernel_stack` — kernel profiles, tail-integral ladder, validation.
//! * `geometry_identities` — metric, curvature and co-normal identities.
//! * `quadrature_clouds` — midpoint-rule clouds and their convergence.
//! * `operator_blocks` — the six operators against brute-force sums.
//! * `residual_rates` — truncation-error slopes on the unit disk.
//! * `legacy_contrast` — corrected vs factor-2-only boundary handling.
//! * `coupled_solve` — solving the coupled system, error tables.
//!
//! The same capabilities are scriptable through the thin `nonlocal-poisson`
//! binary (`validate`, `residual`, `solve`, `cases`, `kernels`).

pub mod catalog;
pub mod error;
pub mod geometry;
pub mod kernel;
pub mod ops;
pub mod residual;
pub mod sampling;
pub mod solve;
pub mod study;

pub use error::{Error, Result};
