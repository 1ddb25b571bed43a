//! Discrete nonlocal operators over a quadrature cloud.
//!
//! Every operator is a kernel-weighted sum over the nodes within the
//! interaction radius `2δ` of the target point. Neighbor candidates come
//! from uniform cell grids (one over the interior nodes, one over the
//! boundary nodes), so each application costs O(n · k) with k the typical
//! neighborhood size instead of O(n²).
//!
//! Targets are processed in parallel, but each target's sum runs serially
//! in a fixed candidate order, so results are bit-identical regardless of
//! thread count.
//!
//! Two variants of the boundary treatment are provided. [`Mode::Corrected`]
//! applies the first-order curvature and conormal corrections near the
//! boundary; [`Mode::Legacy`] keeps only the flat factor-two terms. The
//! legacy variant is retained deliberately: its residual stalls near first
//! order in the boundary layer, which is the contrast the studies measure.

use crate::error::{Error, Result};
use crate::kernel::{dist_sq, KernelLevel, ScaledKernel};
use crate::sampling::{CellGrid, QuadratureCloud};
use crate::solve::{CsrMatrix, SystemMatrix};
use nalgebra::DMatrix;
use rayon::prelude::*;

/// Boundary-treatment variant.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// Curvature-aware boundary corrections (the default).
    Corrected,
    /// Flat-space factor-two boundary terms only.
    Legacy,
}

impl Mode {
    pub fn label(self) -> &'static str {
        match self {
            Mode::Corrected => "corrected",
            Mode::Legacy => "legacy",
        }
    }
}

/// The kernel radius must cover at least one node spacing, or the
/// neighborhood sums are empty and the operators degenerate.
pub const MIN_RESOLUTION_RATIO: f64 = 1.0;

/// Unknown counts at or below this assemble a dense matrix; larger systems
/// go to CSR and the iterative path.
pub const DENSE_LIMIT: usize = 1500;

/// The six nonlocal operators bound to one cloud, one scaled kernel, and
/// one boundary-treatment mode.
pub struct NonlocalOps<'a> {
    pub cloud: &'a QuadratureCloud,
    pub kernel: &'a ScaledKernel,
    pub mode: Mode,
    interior_grid: CellGrid,
    boundary_grid: Option<CellGrid>,
}

impl<'a> NonlocalOps<'a> {
    pub fn new(cloud: &'a QuadratureCloud, kernel: &'a ScaledKernel, mode: Mode) -> Result<Self> {
        if kernel.dim() != cloud.dim {
            return Err(Error::DimensionMismatch {
                expected: cloud.dim,
                got: kernel.dim(),
                context: "kernel normalization dimension vs cloud intrinsic dimension",
            });
        }
        let ratio = kernel.delta() / cloud.spacing;
        if !(ratio >= MIN_RESOLUTION_RATIO) {
            return Err(Error::ResolutionTooCoarse {
                ratio,
                min: MIN_RESOLUTION_RATIO,
            });
        }
        // Cell size slightly above the support diameter: any pair within
        // range is then guaranteed to sit in adjacent buckets.
        let cell = kernel.support_radius() * (1.0 + 1e-9);
        let interior_grid = CellGrid::build(&cloud.positions, cloud.ambient, cell)?;
        let boundary_grid = if cloud.n_boundary() > 0 {
            Some(CellGrid::build(&cloud.bd_positions, cloud.ambient, cell)?)
        } else {
            None
        };
        Ok(NonlocalOps {
            cloud,
            kernel,
            mode,
            interior_grid,
            boundary_grid,
        })
    }

    fn expect_len(got: usize, expected: usize, context: &'static str) -> Result<()> {
        if got == expected {
            Ok(())
        } else {
            Err(Error::DimensionMismatch {
                expected,
                got,
                context,
            })
        }
    }

    /// Point diffusion: `(1/δ²) Σ_j w_j (u(x_i) − u(x_j)) R_δ`.
    ///
    /// Constants are annihilated exactly — every term carries the factor
    /// `u_i − u_j`, which is a floating-point zero for a constant field.
    pub fn apply_l(&self, u: &[f64]) -> Result<Vec<f64>> {
        let n = self.cloud.n_interior();
        Self::expect_len(u.len(), n, "interior field for the diffusion operator")?;
        let inv_d2 = 1.0 / (self.kernel.delta() * self.kernel.delta());
        let out = (0..n)
            .into_par_iter()
            .map_init(Vec::new, |buf, i| {
                let xi = self.cloud.position(i);
                self.interior_grid.neighbors(xi, buf);
                let mut acc = 0.0;
                for &jq in buf.iter() {
                    let j = jq as usize;
                    let r = self.kernel.eval_sq(
                        KernelLevel::Plain,
                        dist_sq(xi, self.cloud.position(j)),
                    );
                    if r != 0.0 {
                        acc += self.cloud.weights[j] * (u[i] - u[j]) * r;
                    }
                }
                acc * inv_d2
            })
            .collect();
        Ok(out)
    }

    /// Boundary-flux transfer: maps conormal-derivative data `v` on the
    /// boundary to interior values `Σ_b s_b v_b (2 + (x−y_b)·κ_b n_b) R̄_δ`.
    pub fn apply_g(&self, v: &[f64]) -> Result<Vec<f64>> {
        let n = self.cloud.n_interior();
        let m = self.cloud.n_boundary();
        Self::expect_len(v.len(), m, "boundary field for the flux operator")?;
        let legacy = self.mode == Mode::Legacy;
        let out = (0..n)
            .into_par_iter()
            .map_init(Vec::new, |buf, i| {
                let xi = self.cloud.position(i);
                let mut acc = 0.0;
                if let Some(grid) = &self.boundary_grid {
                    grid.neighbors(xi, buf);
                    for &bq in buf.iter() {
                        let b = bq as usize;
                        let yb = self.cloud.bd_position(b);
                        let rb = self.kernel.eval_sq(KernelLevel::Bar, dist_sq(xi, yb));
                        if rb == 0.0 {
                            continue;
                        }
                        let coeff = if legacy {
                            2.0
                        } else {
                            let nb = self.cloud.bd_conormal(b);
                            let kb = self.cloud.bd_kappa[b];
                            let mut dot = 0.0;
                            for c in 0..self.cloud.ambient {
                                dot += (xi[c] - yb[c]) * nb[c];
                            }
                            2.0 + kb * dot
                        };
                        acc += self.cloud.bd_weights[b] * v[b] * coeff * rb;
                    }
                }
                acc
            })
            .collect();
        Ok(out)
    }

    /// Source mollifier: volume term `Σ_j w_j f_j R̄_δ` minus (in corrected
    /// mode) the boundary compensation `Σ_b s_b ((x−y_b)·n_b) f_b R̄_δ`.
    pub fn apply_p(&self, f_int: &[f64], f_bd: &[f64]) -> Result<Vec<f64>> {
        let n = self.cloud.n_interior();
        let m = self.cloud.n_boundary();
        Self::expect_len(f_int.len(), n, "interior source for the mollifier")?;
        Self::expect_len(f_bd.len(), m, "boundary source for the mollifier")?;
        let legacy = self.mode == Mode::Legacy;
        let out = (0..n)
            .into_par_iter()
            .map_init(Vec::new, |buf, i| {
                let xi = self.cloud.position(i);
                self.interior_grid.neighbors(xi, buf);
                let mut acc = 0.0;
                for &jq in buf.iter() {
                    let j = jq as usize;
                    let rb = self.kernel.eval_sq(
                        KernelLevel::Bar,
                        dist_sq(xi, self.cloud.position(j)),
                    );
                    if rb != 0.0 {
                        acc += self.cloud.weights[j] * f_int[j] * rb;
                    }
                }
                if !legacy {
                    if let Some(grid) = &self.boundary_grid {
                        grid.neighbors(xi, buf);
                        for &bq in buf.iter() {
                            let b = bq as usize;
                            let yb = self.cloud.bd_position(b);
                            let rb = self.kernel.eval_sq(KernelLevel::Bar, dist_sq(xi, yb));
                            if rb == 0.0 {
                                continue;
                            }
                            let nb = self.cloud.bd_conormal(b);
                            let mut dot = 0.0;
                            for c in 0..self.cloud.ambient {
                                dot += (xi[c] - yb[c]) * nb[c];
                            }
                            acc -= self.cloud.bd_weights[b] * dot * f_bd[b] * rb;
                        }
                    }
                }
                acc
            })
            .collect();
        Ok(out)
    }

    /// Interior-to-boundary transfer: at each boundary node,
    /// `Σ_j w_j u_j (2 − (x_b−x_j)·κ_b n_b) R̄_δ`.
    pub fn apply_d(&self, u: &[f64]) -> Result<Vec<f64>> {
        let n = self.cloud.n_interior();
        let m = self.cloud.n_boundary();
        Self::expect_len(u.len(), n, "interior field for the trace operator")?;
        let legacy = self.mode == Mode::Legacy;
        let out = (0..m)
            .into_par_iter()
            .map_init(Vec::new, |buf, b| {
                let xb = self.cloud.bd_position(b);
                let nb = self.cloud.bd_conormal(b);
                let kb = self.cloud.bd_kappa[b];
                self.interior_grid.neighbors(xb, buf);
                let mut acc = 0.0;
                for &jq in buf.iter() {
                    let j = jq as usize;
                    let yj = self.cloud.position(j);
                    let rb = self.kernel.eval_sq(KernelLevel::Bar, dist_sq(xb, yj));
                    if rb == 0.0 {
                        continue;
                    }
                    let coeff = if legacy {
                        2.0
                    } else {
                        let mut dot = 0.0;
                        for c in 0..self.cloud.ambient {
                            dot += (xb[c] - yj[c]) * nb[c];
                        }
                        2.0 - kb * dot
                    };
                    acc += self.cloud.weights[j] * u[j] * coeff * rb;
                }
                acc
            })
            .collect();
        Ok(out)
    }

    /// Diagonal boundary reaction coefficient:
    /// `4δ² Σ_b' s_b' R̿_δ − κ_b Σ_j w_j ((x_b−x_j)·n_b)² R̄_δ`
    /// (the curvature term is dropped in legacy mode).
    pub fn tilde_r(&self) -> Vec<f64> {
        let m = self.cloud.n_boundary();
        let four_d2 = 4.0 * self.kernel.delta() * self.kernel.delta();
        let legacy = self.mode == Mode::Legacy;
        (0..m)
            .into_par_iter()
            .map_init(Vec::new, |buf, b| {
                let xb = self.cloud.bd_position(b);
                let mut acc = 0.0;
                if let Some(grid) = &self.boundary_grid {
                    grid.neighbors(xb, buf);
                    for &bq in buf.iter() {
                        let b2 = bq as usize;
                        let rdd = self.kernel.eval_sq(
                            KernelLevel::DoubleBar,
                            dist_sq(xb, self.cloud.bd_position(b2)),
                        );
                        acc += self.cloud.bd_weights[b2] * rdd;
                    }
                }
                acc *= four_d2;
                if !legacy {
                    let nb = self.cloud.bd_conormal(b);
                    let kb = self.cloud.bd_kappa[b];
                    if kb != 0.0 {
                        self.interior_grid.neighbors(xb, buf);
                        let mut curv = 0.0;
                        for &jq in buf.iter() {
                            let j = jq as usize;
                            let yj = self.cloud.position(j);
                            let rb = self.kernel.eval_sq(KernelLevel::Bar, dist_sq(xb, yj));
                            if rb == 0.0 {
                                continue;
                            }
                            let mut dot = 0.0;
                            for c in 0..self.cloud.ambient {
                                dot += (xb[c] - yj[c]) * nb[c];
                            }
                            curv += self.cloud.weights[j] * dot * dot * rb;
                        }
                        acc -= kb * curv;
                    }
                }
                acc
            })
            .collect()
    }

    /// Boundary source mollifier: `−2δ² Σ_j w_j f_j R̿_δ` at boundary nodes.
    pub fn apply_q(&self, f_int: &[f64]) -> Result<Vec<f64>> {
        let n = self.cloud.n_interior();
        let m = self.cloud.n_boundary();
        Self::expect_len(f_int.len(), n, "interior source for the boundary mollifier")?;
        let neg_two_d2 = -2.0 * self.kernel.delta() * self.kernel.delta();
        let out = (0..m)
            .into_par_iter()
            .map_init(Vec::new, |buf, b| {
                let xb = self.cloud.bd_position(b);
                self.interior_grid.neighbors(xb, buf);
                let mut acc = 0.0;
                for &jq in buf.iter() {
                    let j = jq as usize;
                    let rdd = self.kernel.eval_sq(
                        KernelLevel::DoubleBar,
                        dist_sq(xb, self.cloud.position(j)),
                    );
                    if rdd != 0.0 {
                        acc += self.cloud.weights[j] * f_int[j] * rdd;
                    }
                }
                acc * neg_two_d2
            })
            .collect();
        Ok(out)
    }

    /// Apply the full coupled operator to stacked unknowns `[u; v]`:
    /// the interior block is `L u − G v`, the boundary block `D u + r̃ v`.
    pub fn apply_coupled(&self, uv: &[f64]) -> Result<Vec<f64>> {
        let n = self.cloud.n_interior();
        let m = self.cloud.n_boundary();
        Self::expect_len(uv.len(), n + m, "stacked unknown vector")?;
        let (u, v) = uv.split_at(n);
        let lu = self.apply_l(u)?;
        let gv = self.apply_g(v)?;
        let du = self.apply_d(u)?;
        let tr = self.tilde_r();
        let mut out = Vec::with_capacity(n + m);
        for i in 0..n {
            out.push(lu[i] - gv[i]);
        }
        for b in 0..m {
            out.push(du[b] + tr[b] * v[b]);
        }
        Ok(out)
    }

    /// Assemble the coupled system with right-hand side `[P f; Q f]`.
    pub fn assemble(&self, f_int: &[f64], f_bd: &[f64]) -> Result<CoupledSystem> {
        self.assemble_with_limit(f_int, f_bd, DENSE_LIMIT)
    }

    /// Assembly with an explicit dense/sparse crossover (exposed so the two
    /// storage paths can be compared on the same system).
    pub fn assemble_with_limit(
        &self,
        f_int: &[f64],
        f_bd: &[f64],
        dense_limit: usize,
    ) -> Result<CoupledSystem> {
        let n = self.cloud.n_interior();
        let m = self.cloud.n_boundary();
        Self::expect_len(f_int.len(), n, "interior source for assembly")?;
        Self::expect_len(f_bd.len(), m, "boundary source for assembly")?;
        let total = n + m;

        let rows: Vec<Vec<(u32, f64)>> = (0..total)
            .into_par_iter()
            .map_init(Vec::new, |buf, row| {
                if row < n {
                    self.interior_row(row, buf)
                } else {
                    self.boundary_row(row - n, buf)
                }
            })
            .collect();

        let mut rhs = self.apply_p(f_int, f_bd)?;
        rhs.extend(self.apply_q(f_int)?);

        let matrix = if total <= dense_limit {
            let mut dense = DMatrix::<f64>::zeros(total, total);
            for (i, row) in rows.iter().enumerate() {
                for &(j, v) in row {
                    dense[(i, j as usize)] += v;
                }
            }
            SystemMatrix::Dense(dense)
        } else {
            SystemMatrix::Sparse(CsrMatrix::from_rows(total, rows))
        };

        Ok(CoupledSystem {
            matrix,
            rhs,
            n_interior: n,
            n_boundary: m,
        })
    }

    /// Row of the interior block: the diffusion stencil and `−G` columns.
    fn interior_row(&self, i: usize, buf: &mut Vec<u32>) -> Vec<(u32, f64)> {
        let n = self.cloud.n_interior();
        let xi = self.cloud.position(i);
        let inv_d2 = 1.0 / (self.kernel.delta() * self.kernel.delta());
        let legacy = self.mode == Mode::Legacy;

        self.interior_grid.neighbors(xi, buf);
        let mut entries = Vec::with_capacity(buf.len() + 8);
        let mut diag = 0.0;
        for &jq in buf.iter() {
            let j = jq as usize;
            if j == i {
                continue; // the self-term of the difference stencil is structurally zero
            }
            let r = self
                .kernel
                .eval_sq(KernelLevel::Plain, dist_sq(xi, self.cloud.position(j)));
            if r == 0.0 {
                continue;
            }
            let c = inv_d2 * self.cloud.weights[j] * r;
            diag += c;
            entries.push((jq, -c));
        }
        entries.push((i as u32, diag));

        if let Some(grid) = &self.boundary_grid {
            grid.neighbors(xi, buf);
            for &bq in buf.iter() {
                let b = bq as usize;
                let yb = self.cloud.bd_position(b);
                let rb = self.kernel.eval_sq(KernelLevel::Bar, dist_sq(xi, yb));
                if rb == 0.0 {
                    continue;
                }
                let coeff = if legacy {
                    2.0
                } else {
                    let nb = self.cloud.bd_conormal(b);
                    let mut dot = 0.0;
                    for c in 0..self.cloud.ambient {
                        dot += (xi[c] - yb[c]) * nb[c];
                    }
                    2.0 + self.cloud.bd_kappa[b] * dot
                };
                entries.push(((n + b) as u32, -self.cloud.bd_weights[b] * coeff * rb));
            }
        }
        entries
    }

    /// Row of the boundary block: the trace stencil and the diagonal
    /// reaction coefficient.
    fn boundary_row(&self, b: usize, buf: &mut Vec<u32>) -> Vec<(u32, f64)> {
        let n = self.cloud.n_interior();
        let xb = self.cloud.bd_position(b);
        let nb = self.cloud.bd_conormal(b).to_vec();
        let kb = self.cloud.bd_kappa[b];
        let legacy = self.mode == Mode::Legacy;
        let four_d2 = 4.0 * self.kernel.delta() * self.kernel.delta();

        self.interior_grid.neighbors(xb, buf);
        let mut entries = Vec::with_capacity(buf.len() + 2);
        let mut curv = 0.0;
        for &jq in buf.iter() {
            let j = jq as usize;
            let yj = self.cloud.position(j);
            let rb = self.kernel.eval_sq(KernelLevel::Bar, dist_sq(xb, yj));
            if rb == 0.0 {
                continue;
            }
            let mut dot = 0.0;
            for c in 0..self.cloud.ambient {
                dot += (xb[c] - yj[c]) * nb[c];
            }
            let coeff = if legacy { 2.0 } else { 2.0 - kb * dot };
            entries.push((jq, self.cloud.weights[j] * coeff * rb));
            if !legacy {
                curv += self.cloud.weights[j] * dot * dot * rb;
            }
        }

        let mut tilde = 0.0;
        if let Some(grid) = &self.boundary_grid {
            grid.neighbors(xb, buf);
            for &bq in buf.iter() {
                let b2 = bq as usize;
                let rdd = self.kernel.eval_sq(
                    KernelLevel::DoubleBar,
                    dist_sq(xb, self.cloud.bd_position(b2)),
                );
                tilde += self.cloud.bd_weights[b2] * rdd;
            }
        }
        tilde *= four_d2;
        if !legacy {
            tilde -= kb * curv;
        }
        entries.push(((n + b) as u32, tilde));
        entries
    }
}

/// Assembled coupled system: matrix, right-hand side, and the block split.
pub struct CoupledSystem {
    pub matrix: SystemMatrix,
    pub rhs: Vec<f64>,
    pub n_interior: usize,
    pub n_boundary: usize,
}
