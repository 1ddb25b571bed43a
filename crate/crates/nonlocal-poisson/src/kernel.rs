//! Radial kernel profiles and their tail-integral ladder.
//!
//! A profile is a compactly supported radial density `R: [0,1] -> R` together
//! with its successive tail integrals
//!
//! ```text
//!     bar(r)  = int_r^1 R(s) ds
//!     dbar(r) = int_r^1 bar(s) ds
//!     tbar(r) = int_r^1 dbar(s) ds
//! ```
//!
//! so that `bar' = -R`, `dbar' = -bar`, `tbar' = -dbar`. Interior operators
//! use `R` and `bar`; boundary operators additionally use `dbar` and `tbar`.
//! The built-in cosine profile stores all four levels in closed form.
//!
//! A [`ScaledKernel`] places a profile on a manifold of intrinsic dimension
//! `m` at radius parameter `delta`: the evaluation point is
//! `r = |x - y|^2 / (4 delta^2)` (support `|x - y| <= 2 delta`) and every
//! level carries the normalization `C_delta = (4 pi delta^2)^(-m/2)`.

use std::f64::consts::PI;
use std::sync::Arc;

use crate::error::{Error, Result};

/// Which rung of the tail-integral ladder to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelLevel {
    /// The density `R` itself.
    Plain,
    /// First tail integral `bar(r)`.
    Bar,
    /// Second tail integral `dbar(r)`.
    DoubleBar,
    /// Third tail integral `tbar(r)`.
    TripleBar,
}

enum ProfileKind {
    /// `R(r) = (1 + cos(pi r)) / 2` with closed-form tail integrals.
    Cosine,
    /// User-supplied level functions (must pass [`validate_profile`]).
    Custom {
        plain: Box<dyn Fn(f64) -> f64 + Send + Sync>,
        bar: Box<dyn Fn(f64) -> f64 + Send + Sync>,
        dbar: Box<dyn Fn(f64) -> f64 + Send + Sync>,
        tbar: Box<dyn Fn(f64) -> f64 + Send + Sync>,
    },
}

/// A radial kernel profile: density plus tail-integral ladder on `[0, 1]`.
pub struct KernelProfile {
    id: String,
    kind: ProfileKind,
}

impl KernelProfile {
    /// The built-in cosine profile `R(r) = (1 + cos(pi r)) / 2`.
    ///
    /// All levels are closed-form (polynomial plus trigonometric):
    /// `bar = ((1-r) - sin(pi r)/pi)/2`,
    /// `dbar = ((1-r)^2/2 - (1+cos(pi r))/pi^2)/2`,
    /// `tbar = ((1-r)^3/6 - (1-r)/pi^2 + sin(pi r)/pi^3)/2`.
    pub fn cosine() -> Self {
        KernelProfile {
            id: "cosine".to_string(),
            kind: ProfileKind::Cosine,
        }
    }

    /// A profile from explicit level functions. The functions are trusted
    /// as given; run [`validate_profile`] before using one in a study.
    pub fn custom(
        id: impl Into<String>,
        plain: impl Fn(f64) -> f64 + Send + Sync + 'static,
        bar: impl Fn(f64) -> f64 + Send + Sync + 'static,
        dbar: impl Fn(f64) -> f64 + Send + Sync + 'static,
        tbar: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        KernelProfile {
            id: id.into(),
            kind: ProfileKind::Custom {
                plain: Box::new(plain),
                bar: Box::new(bar),
                dbar: Box::new(dbar),
                tbar: Box::new(tbar),
            },
        }
    }

    /// A profile from a density alone; the tail integrals are built by
    /// adaptive composite Simpson quadrature on `[r, 1]`. Handy for
    /// experimenting with alternative densities without deriving closed
    /// forms (at some evaluation cost).
    pub fn from_plain_numeric(
        id: impl Into<String>,
        plain: impl Fn(f64) -> f64 + Send + Sync + Clone + 'static,
    ) -> Self {
        let p1 = plain.clone();
        let bar = move |r: f64| simpson_tail(&p1, r);
        let p2 = plain.clone();
        let dbar = move |r: f64| simpson_tail(&|s| simpson_tail(&p2, s), r);
        let p3 = plain.clone();
        let tbar = move |r: f64| {
            let inner = |s: f64| simpson_tail(&|t| simpson_tail(&p3, t), s);
            simpson_tail(&inner, r)
        };
        KernelProfile {
            id: id.into(),
            kind: ProfileKind::Custom {
                plain: Box::new(plain),
                bar: Box::new(bar),
                dbar: Box::new(dbar),
                tbar: Box::new(tbar),
            },
        }
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    /// Evaluate one ladder level at radial coordinate `r >= 0`.
    /// Everything vanishes outside the support `r > 1`.
    pub fn eval(&self, level: KernelLevel, r: f64) -> f64 {
        debug_assert!(r >= 0.0, "radial coordinate must be nonnegative");
        if r >= 1.0 {
            return 0.0;
        }
        match &self.kind {
            ProfileKind::Cosine => match level {
                KernelLevel::Plain => 0.5 * (1.0 + (PI * r).cos()),
                KernelLevel::Bar => 0.5 * ((1.0 - r) - (PI * r).sin() / PI),
                KernelLevel::DoubleBar => {
                    let t = 1.0 - r;
                    0.5 * (0.5 * t * t - (1.0 + (PI * r).cos()) / (PI * PI))
                }
                KernelLevel::TripleBar => {
                    let t = 1.0 - r;
                    0.5 * (t * t * t / 6.0 - t / (PI * PI) + (PI * r).sin() / (PI * PI * PI))
                }
            },
            ProfileKind::Custom {
                plain,
                bar,
                dbar,
                tbar,
            } => match level {
                KernelLevel::Plain => plain(r),
                KernelLevel::Bar => bar(r),
                KernelLevel::DoubleBar => dbar(r),
                KernelLevel::TripleBar => tbar(r),
            },
        }
    }

    /// Density and first tail integral in one call. For the cosine profile
    /// this shares a single `sin_cos`, which matters in the pair loops.
    pub fn eval_plain_bar(&self, r: f64) -> (f64, f64) {
        if r >= 1.0 {
            return (0.0, 0.0);
        }
        match &self.kind {
            ProfileKind::Cosine => {
                let (s, c) = (PI * r).sin_cos();
                (0.5 * (1.0 + c), 0.5 * ((1.0 - r) - s / PI))
            }
            _ => (
                self.eval(KernelLevel::Plain, r),
                self.eval(KernelLevel::Bar, r),
            ),
        }
    }

    /// First and second tail integrals in one call (boundary-operator pair).
    pub fn eval_bar_dbar(&self, r: f64) -> (f64, f64) {
        if r >= 1.0 {
            return (0.0, 0.0);
        }
        match &self.kind {
            ProfileKind::Cosine => {
                let (s, c) = (PI * r).sin_cos();
                let t = 1.0 - r;
                (
                    0.5 * (t - s / PI),
                    0.5 * (0.5 * t * t - (1.0 + c) / (PI * PI)),
                )
            }
            _ => (
                self.eval(KernelLevel::Bar, r),
                self.eval(KernelLevel::DoubleBar, r),
            ),
        }
    }
}

/// Composite-Simpson tail integral `int_r^1 f` with a fixed fine grid.
fn simpson_tail(f: &(impl Fn(f64) -> f64 + ?Sized), r: f64) -> f64 {
    if r >= 1.0 {
        return 0.0;
    }
    let n = 256; // panels; even
    let h = (1.0 - r) / n as f64;
    let mut acc = f(r) + f(1.0);
    for k in 1..n {
        let w = if k % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(r + k as f64 * h);
    }
    acc * h / 3.0
}

/// A kernel profile pinned to a radius `delta` and intrinsic dimension `m`,
/// with the normalization `C_delta = (4 pi delta^2)^(-m/2)` baked in.
#[derive(Clone)]
pub struct ScaledKernel {
    profile: Arc<KernelProfile>,
    delta: f64,
    dim: usize,
    c_delta: f64,
    inv_four_d2: f64,
    support_sq: f64,
}

impl ScaledKernel {
    pub fn new(profile: Arc<KernelProfile>, delta: f64, dim: usize) -> Result<Self> {
        if !(delta > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "delta must be positive, got {delta}"
            )));
        }
        if dim == 0 {
            return Err(Error::InvalidParameter(
                "intrinsic dimension must be at least 1".into(),
            ));
        }
        let four_d2 = 4.0 * delta * delta;
        let c_delta = (PI * four_d2).powf(-(dim as f64) / 2.0);
        Ok(ScaledKernel {
            profile,
            delta,
            dim,
            c_delta,
            inv_four_d2: 1.0 / four_d2,
            support_sq: four_d2,
        })
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn normalization(&self) -> f64 {
        self.c_delta
    }

    /// Kernel support radius in ambient distance: `2 delta`.
    pub fn support_radius(&self) -> f64 {
        2.0 * self.delta
    }

    /// Squared support radius, for cheap cutoff tests in pair loops.
    pub fn support_radius_sq(&self) -> f64 {
        self.support_sq
    }

    /// Evaluate a level at a squared ambient distance.
    pub fn eval_sq(&self, level: KernelLevel, dist_sq: f64) -> f64 {
        if dist_sq >= self.support_sq {
            return 0.0;
        }
        self.c_delta * self.profile.eval(level, dist_sq * self.inv_four_d2)
    }

    /// Evaluate a level at an ambient point pair.
    pub fn eval(&self, level: KernelLevel, x: &[f64], y: &[f64]) -> f64 {
        self.eval_sq(level, dist_sq(x, y))
    }

    /// Scaled `(R, bar)` pair at a squared distance, one trig call.
    pub fn plain_bar_sq(&self, dist_sq: f64) -> (f64, f64) {
        if dist_sq >= self.support_sq {
            return (0.0, 0.0);
        }
        let (p, b) = self.profile.eval_plain_bar(dist_sq * self.inv_four_d2);
        (self.c_delta * p, self.c_delta * b)
    }

    /// Scaled `(bar, dbar)` pair at a squared distance, one trig call.
    pub fn bar_dbar_sq(&self, dist_sq: f64) -> (f64, f64) {
        if dist_sq >= self.support_sq {
            return (0.0, 0.0);
        }
        let (b, d) = self.profile.eval_bar_dbar(dist_sq * self.inv_four_d2);
        (self.c_delta * b, self.c_delta * d)
    }
}

#[inline]
pub(crate) fn dist_sq(x: &[f64], y: &[f64]) -> f64 {
    debug_assert_eq!(x.len(), y.len());
    match x.len() {
        1 => {
            let d = x[0] - y[0];
            d * d
        }
        2 => {
            let d0 = x[0] - y[0];
            let d1 = x[1] - y[1];
            d0 * d0 + d1 * d1
        }
        3 => {
            let d0 = x[0] - y[0];
            let d1 = x[1] - y[1];
            let d2 = x[2] - y[2];
            d0 * d0 + d1 * d1 + d2 * d2
        }
        _ => x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum(),
    }
}

/// One structural check inside a [`ProfileReport`].
#[derive(Debug, Clone, serde::Serialize)]
pub struct ProfileCheck {
    pub name: &'static str,
    pub pass: bool,
    /// The measured quantity the check judged (defect, minimum, ...).
    pub measured: f64,
    pub threshold: f64,
    pub detail: String,
}

/// Outcome of [`validate_profile`]: failures are reported, never thrown.
#[derive(Debug, Clone, serde::Serialize)]
pub struct ProfileReport {
    pub profile_id: String,
    pub checks: Vec<ProfileCheck>,
    /// Nondegeneracy floor: `min R` over `[0, 1/2]`.
    pub delta0: f64,
    /// Largest second-derivative magnitude observed on the grid.
    pub max_second_derivative: f64,
}

impl ProfileReport {
    pub fn pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    /// Convert a failed report into an error (for study entry points).
    pub fn ensure_valid(&self) -> Result<()> {
        if self.pass() {
            return Ok(());
        }
        let failed: Vec<&str> = self
            .checks
            .iter()
            .filter(|c| !c.pass)
            .map(|c| c.name)
            .collect();
        Err(Error::KernelValidation {
            profile: self.profile_id.clone(),
            reason: format!("failed checks: {}", failed.join(", ")),
        })
    }
}

/// Finite-difference step for the derivative checks in [`validate_profile`].
pub const VALIDATE_FD_STEP: f64 = 1e-5;

/// A profile's minimum over `[0, 1/2]` must clear this floor for the
/// nonlocal operators to stay coercive; a density positive merely in the
/// grid-rounding sense does not count.
pub const DELTA0_FLOOR: f64 = 1e-6;

/// Verify the structural assumptions a profile must satisfy:
///
/// 1. bounded second derivative on the support,
/// 2. nonnegativity on the support,
/// 3. compact support (all four levels decay continuously to zero at
///    `r = 1`; values past the edge are clipped by construction),
/// 4. nondegeneracy (`R >= delta0 > 0` on `[0, 1/2]`),
/// 5. the ladder actually consists of antiderivatives
///    (`bar' = -R`, `dbar' = -bar`, `tbar' = -dbar`, by central differences).
///
/// `grid_step` controls the sampling grid on `[0, 2]` (0.01 is plenty).
pub fn validate_profile(profile: &KernelProfile, grid_step: f64) -> ProfileReport {
    let step = if grid_step > 0.0 && grid_step <= 0.25 {
        grid_step
    } else {
        0.01
    };
    let fd = VALIDATE_FD_STEP;
    let n_support = (1.0 / step).round() as usize;

    // 1. bounded |R''| by second central differences, interior of support.
    let mut max_d2 = 0.0f64;
    for k in 1..n_support {
        let r = k as f64 * step;
        if r + fd >= 1.0 {
            break;
        }
        let d2 = (profile.eval(KernelLevel::Plain, r + fd)
            - 2.0 * profile.eval(KernelLevel::Plain, r)
            + profile.eval(KernelLevel::Plain, r - fd))
            / (fd * fd);
        max_d2 = max_d2.max(d2.abs());
    }
    const D2_BOUND: f64 = 1e6;

    // 2. nonnegativity on [0, 1].
    let mut min_on_support = f64::INFINITY;
    for k in 0..=n_support {
        let r = (k as f64 * step).min(1.0);
        min_on_support = min_on_support.min(profile.eval(KernelLevel::Plain, r));
    }

    // 3. compact support: evaluation clips to zero past r = 1 by
    // construction, so what remains to verify is that every level decays
    // *continuously* to zero at the support edge rather than jumping.
    let mut max_outside = 0.0f64;
    for k in (n_support + 1)..=(2 * n_support) {
        let r = k as f64 * step;
        max_outside = max_outside.max(profile.eval(KernelLevel::Plain, r).abs());
    }
    let edge = profile
        .eval(KernelLevel::Plain, 1.0 - 1e-9)
        .abs()
        .max(profile.eval(KernelLevel::Bar, 1.0 - 1e-9).abs())
        .max(profile.eval(KernelLevel::DoubleBar, 1.0 - 1e-9).abs())
        .max(profile.eval(KernelLevel::TripleBar, 1.0 - 1e-9).abs());
    let support_defect = max_outside.max(edge);

    // 4. nondegeneracy floor on [0, 1/2].
    let mut delta0 = f64::INFINITY;
    let mut r = 0.0f64;
    while r <= 0.5 + 1e-12 {
        delta0 = delta0.min(profile.eval(KernelLevel::Plain, r.min(0.5)));
        r += step;
    }

    // 5. antiderivative chain by central differences, away from the edge.
    let chain = [
        (KernelLevel::Bar, KernelLevel::Plain),
        (KernelLevel::DoubleBar, KernelLevel::Bar),
        (KernelLevel::TripleBar, KernelLevel::DoubleBar),
    ];
    let mut chain_defect = 0.0f64;
    for (upper, lower) in chain {
        for k in 1..n_support {
            let r = k as f64 * step;
            if r + fd >= 1.0 {
                break;
            }
            let deriv =
                (profile.eval(upper, r + fd) - profile.eval(upper, r - fd)) / (2.0 * fd);
            chain_defect = chain_defect.max((deriv + profile.eval(lower, r)).abs());
        }
    }

    let checks = vec![
        ProfileCheck {
            name: "bounded_second_derivative",
            pass: max_d2.is_finite() && max_d2 < D2_BOUND,
            measured: max_d2,
            threshold: D2_BOUND,
            detail: format!("max |R''| = {max_d2:.6e} on the support grid"),
        },
        ProfileCheck {
            name: "nonnegative_on_support",
            pass: min_on_support >= -1e-12,
            measured: min_on_support,
            threshold: -1e-12,
            detail: format!("min R on [0,1] grid = {min_on_support:.6e}"),
        },
        ProfileCheck {
            name: "compact_support",
            pass: support_defect <= 1e-12,
            measured: support_defect,
            threshold: 1e-12,
            detail: format!(
                "max |level| outside/at the support edge = {support_defect:.6e}"
            ),
        },
        ProfileCheck {
            name: "nondegenerate_core",
            pass: delta0 > DELTA0_FLOOR,
            measured: delta0,
            threshold: DELTA0_FLOOR,
            detail: format!("min R on [0, 1/2] grid = {delta0:.6e}"),
        },
        ProfileCheck {
            name: "antiderivative_chain",
            pass: chain_defect < 1e-8,
            measured: chain_defect,
            threshold: 1e-8,
            detail: format!(
                "max central-difference defect over the three ladder rungs = {chain_defect:.6e}"
            ),
        },
    ];

    ProfileReport {
        profile_id: profile.id().to_string(),
        checks,
        delta0,
        max_second_derivative: max_d2,
    }
}

/// Registry of built-in profiles, for the CLI `kernels` listing.
pub fn builtin_profile(id: &str) -> Result<KernelProfile> {
    match id {
        "cosine" => Ok(KernelProfile::cosine()),
        other => Err(Error::UnknownProfile(other.to_string())),
    }
}

pub fn builtin_profile_ids() -> &'static [&'static str] {
    &["cosine"]
}
