//! Linear solvers for the assembled coupled systems.
//!
//! Small systems go through dense LU with partial pivoting. Larger ones —
//! a disk at kernel radius 0.05 couples ~8·10⁴ unknowns, far past what a
//! dense factorization fits in memory — use restarted GMRES on a
//! row-equilibrated copy of the sparse matrix. Both paths verify the
//! residual of the *original* system after solving and report a (crude)
//! condition estimate. All reductions are fixed-order serial loops, so
//! repeated solves produce bit-identical results.

use crate::error::{Error, Result};
use nalgebra::{DMatrix, DVector};

/// Compressed sparse row matrix.
#[derive(Debug, Clone)]
pub struct CsrMatrix {
    pub nrows: usize,
    pub ncols: usize,
    /// Row start offsets, length `nrows + 1`.
    pub indptr: Vec<usize>,
    pub indices: Vec<u32>,
    pub values: Vec<f64>,
}

impl CsrMatrix {
    /// Assemble from per-row `(column, value)` lists. Rows need not be
    /// sorted; they are sorted (stably) here so the matvec order is fixed.
    pub fn from_rows(ncols: usize, mut rows: Vec<Vec<(u32, f64)>>) -> Self {
        let nrows = rows.len();
        let mut indptr = Vec::with_capacity(nrows + 1);
        indptr.push(0usize);
        let nnz: usize = rows.iter().map(|r| r.len()).sum();
        let mut indices = Vec::with_capacity(nnz);
        let mut values = Vec::with_capacity(nnz);
        for row in rows.iter_mut() {
            row.sort_by_key(|e| e.0);
            for &(c, v) in row.iter() {
                indices.push(c);
                values.push(v);
            }
            indptr.push(indices.len());
        }
        CsrMatrix {
            nrows,
            ncols,
            indptr,
            indices,
            values,
        }
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn matvec(&self, x: &[f64], out: &mut [f64]) {
        debug_assert_eq!(x.len(), self.ncols);
        debug_assert_eq!(out.len(), self.nrows);
        for i in 0..self.nrows {
            let mut acc = 0.0;
            for idx in self.indptr[i]..self.indptr[i + 1] {
                acc += self.values[idx] * x[self.indices[idx] as usize];
            }
            out[i] = acc;
        }
    }

    /// Largest absolute entry of each row (zero rows give 0).
    pub fn row_max_abs(&self) -> Vec<f64> {
        (0..self.nrows)
            .map(|i| {
                self.values[self.indptr[i]..self.indptr[i + 1]]
                    .iter()
                    .fold(0.0f64, |m, v| m.max(v.abs()))
            })
            .collect()
    }
}

/// Either storage form of the coupled matrix.
#[derive(Debug, Clone)]
pub enum SystemMatrix {
    Dense(DMatrix<f64>),
    Sparse(CsrMatrix),
}

impl SystemMatrix {
    pub fn nrows(&self) -> usize {
        match self {
            SystemMatrix::Dense(a) => a.nrows(),
            SystemMatrix::Sparse(a) => a.nrows,
        }
    }

    pub fn matvec(&self, x: &[f64], out: &mut [f64]) {
        match self {
            SystemMatrix::Dense(a) => {
                let y = a * DVector::from_column_slice(x);
                out.copy_from_slice(y.as_slice());
            }
            SystemMatrix::Sparse(a) => a.matvec(x, out),
        }
    }
}

/// What the solver did and how well it went.
#[derive(Debug, Clone)]
pub struct SolveReport {
    pub unknowns: usize,
    pub method: &'static str,
    /// Relative residual |Ax - b| / |b| of the returned solution.
    pub residual: f64,
    /// Crude condition estimate: pivot ratio for LU, Hessenberg singular
    /// value ratio for GMRES. Order-of-magnitude information only.
    pub condition_estimate: f64,
    /// Matrix-vector products consumed (0 for the dense path).
    pub iterations: usize,
}

/// Relative residual the returned solution must meet.
pub const RESIDUAL_ACCEPT: f64 = 1e-10;

/// Solve `A x = b`, choosing the path from the storage form.
pub fn solve_system(matrix: &SystemMatrix, rhs: &[f64]) -> Result<(Vec<f64>, SolveReport)> {
    if matrix.nrows() != rhs.len() {
        return Err(Error::DimensionMismatch {
            expected: matrix.nrows(),
            got: rhs.len(),
            context: "system right-hand side",
        });
    }
    let (x, mut report) = match matrix {
        SystemMatrix::Dense(a) => dense_lu(a, rhs)?,
        SystemMatrix::Sparse(a) => gmres_equilibrated(a, rhs, &GmresOptions::default())?,
    };
    // Trust nothing: check the residual of the original system.
    let mut ax = vec![0.0; rhs.len()];
    matrix.matvec(&x, &mut ax);
    let mut num = 0.0f64;
    let mut den = 0.0f64;
    for i in 0..rhs.len() {
        num += (ax[i] - rhs[i]) * (ax[i] - rhs[i]);
        den += rhs[i] * rhs[i];
    }
    report.residual = (num / den.max(1e-300)).sqrt();
    if !report.residual.is_finite() || report.residual > RESIDUAL_ACCEPT {
        return Err(Error::SolverStagnated(format!(
            "{} finished with relative residual {:.3e} (accept {:.1e}) on {} unknowns",
            report.method, report.residual, RESIDUAL_ACCEPT, report.unknowns
        )));
    }
    Ok((x, report))
}

fn dense_lu(a: &DMatrix<f64>, rhs: &[f64]) -> Result<(Vec<f64>, SolveReport)> {
    let lu = a.clone().lu();
    let diag = lu.u().diagonal();
    let mut min_piv = f64::INFINITY;
    let mut max_piv = 0.0f64;
    for v in diag.iter() {
        min_piv = min_piv.min(v.abs());
        max_piv = max_piv.max(v.abs());
    }
    if !(min_piv > 1e-12 * max_piv) {
        return Err(Error::SingularSystem(format!(
            "LU pivot ratio {:.3e} below 1e-12 (min {:.3e}, max {:.3e})",
            min_piv / max_piv.max(1e-300),
            min_piv,
            max_piv
        )));
    }
    let x = lu
        .solve(&DVector::from_column_slice(rhs))
        .ok_or_else(|| Error::SingularSystem("LU back-substitution failed".into()))?;
    Ok((
        x.as_slice().to_vec(),
        SolveReport {
            unknowns: rhs.len(),
            method: "dense-lu",
            residual: f64::NAN, // filled by the caller
            condition_estimate: max_piv / min_piv,
            iterations: 0,
        },
    ))
}

/// Restarted-GMRES knobs.
#[derive(Debug, Clone)]
pub struct GmresOptions {
    pub restart: usize,
    /// Total matvec budget across restarts.
    pub max_matvecs: usize,
    /// Relative residual target (on the equilibrated system).
    pub tol: f64,
}

impl Default for GmresOptions {
    fn default() -> Self {
        GmresOptions {
            restart: 150,
            max_matvecs: 20_000,
            tol: 1e-12,
        }
    }
}

/// GMRES with row max-norm equilibration. Rows of the coupled system live
/// on very different scales (interior rows carry 1/δ², boundary rows δ²),
/// so scaling each row to unit max-norm is cheap insurance.
pub fn gmres_equilibrated(
    a: &CsrMatrix,
    rhs: &[f64],
    opts: &GmresOptions,
) -> Result<(Vec<f64>, SolveReport)> {
    let n = a.nrows;
    let row_scale: Vec<f64> = a
        .row_max_abs()
        .iter()
        .map(|&m| if m > 0.0 { 1.0 / m } else { 1.0 })
        .collect();
    let b: Vec<f64> = rhs.iter().zip(&row_scale).map(|(v, s)| v * s).collect();
    let b_norm = norm(&b);
    if b_norm == 0.0 {
        return Ok((
            vec![0.0; n],
            SolveReport {
                unknowns: n,
                method: "gmres",
                residual: f64::NAN,
                condition_estimate: 1.0,
                iterations: 0,
            },
        ));
    }

    let matvec_scaled = |x: &[f64], out: &mut [f64]| {
        a.matvec(x, out);
        for (o, s) in out.iter_mut().zip(&row_scale) {
            *o *= s;
        }
    };

    let restart = opts.restart.min(n);
    let mut x = vec![0.0; n];
    let mut matvecs = 0usize;
    let mut cond = 1.0f64;
    let mut scratch = vec![0.0; n];

    while matvecs < opts.max_matvecs {
        // r = b - A x
        matvec_scaled(&x, &mut scratch);
        matvecs += 1;
        let mut r = vec![0.0; n];
        for i in 0..n {
            r[i] = b[i] - scratch[i];
        }
        let beta = norm(&r);
        if beta <= opts.tol * b_norm {
            break;
        }

        // Arnoldi with modified Gram-Schmidt.
        let mut basis: Vec<Vec<f64>> = Vec::with_capacity(restart + 1);
        basis.push(r.iter().map(|v| v / beta).collect());
        let mut h = DMatrix::<f64>::zeros(restart + 1, restart);
        // Givens-rotated least squares state.
        let mut cs = vec![0.0f64; restart];
        let mut sn = vec![0.0f64; restart];
        let mut g = vec![0.0f64; restart + 1];
        g[0] = beta;
        let mut k_used = 0;

        for k in 0..restart {
            matvec_scaled(&basis[k], &mut scratch);
            matvecs += 1;
            let mut w = scratch.clone();
            for (j, vj) in basis.iter().enumerate() {
                let hjk = dot(vj, &w);
                h[(j, k)] = hjk;
                for i in 0..n {
                    w[i] -= hjk * vj[i];
                }
            }
            let wn = norm(&w);
            h[(k + 1, k)] = wn;

            // Apply accumulated rotations to the new column.
            for j in 0..k {
                let t = cs[j] * h[(j, k)] + sn[j] * h[(j + 1, k)];
                h[(j + 1, k)] = -sn[j] * h[(j, k)] + cs[j] * h[(j + 1, k)];
                h[(j, k)] = t;
            }
            let denom = (h[(k, k)] * h[(k, k)] + wn * wn).sqrt();
            if denom == 0.0 {
                k_used = k;
                break;
            }
            cs[k] = h[(k, k)] / denom;
            sn[k] = wn / denom;
            h[(k, k)] = denom;
            g[k + 1] = -sn[k] * g[k];
            g[k] *= cs[k];
            k_used = k + 1;

            let converged = g[k + 1].abs() <= opts.tol * b_norm;
            if !converged && wn > 0.0 && matvecs < opts.max_matvecs {
                basis.push(w.iter().map(|v| v / wn).collect());
                continue;
            }
            break;
        }

        if k_used == 0 {
            break;
        }
        // Back-substitute the rotated upper triangle.
        let mut y = vec![0.0f64; k_used];
        for j in (0..k_used).rev() {
            let mut acc = g[j];
            for l in (j + 1)..k_used {
                acc -= h[(j, l)] * y[l];
            }
            y[j] = acc / h[(j, j)];
        }
        for (j, &yj) in y.iter().enumerate() {
            let vj = &basis[j];
            for i in 0..n {
                x[i] += yj * vj[i];
            }
        }

        // Hessenberg singular-value spread as a condition hint.
        let hk = h.view((0, 0), (k_used, k_used)).into_owned();
        let svals = hk.singular_values();
        let smax = svals.max();
        let smin = svals.min();
        if smin > 0.0 {
            cond = cond.max(smax / smin);
        }

        if g[k_used].abs() <= opts.tol * b_norm {
            break;
        }
    }

    Ok((
        x,
        SolveReport {
            unknowns: n,
            method: "gmres",
            residual: f64::NAN, // filled by the caller
            condition_estimate: cond,
            iterations: matvecs,
        },
    ))
}

fn norm(v: &[f64]) -> f64 {
    dot(v, v).sqrt()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = 0.0;
    for i in 0..a.len() {
        acc += a[i] * b[i];
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn random_sparse(n: usize, seed: u64) -> (CsrMatrix, DMatrix<f64>) {
        // Diagonally dominant, a few off-diagonals per row.
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut dense = DMatrix::<f64>::zeros(n, n);
        let mut rows = Vec::with_capacity(n);
        for i in 0..n {
            let mut row = Vec::new();
            let mut offsum = 0.0;
            for _ in 0..5 {
                let j = rng.gen_range(0..n);
                if j == i {
                    continue;
                }
                let v: f64 = rng.gen_range(-1.0..1.0);
                row.push((j as u32, v));
                offsum += v.abs();
            }
            row.push((i as u32, offsum + 1.0 + rng.gen_range(0.0..1.0)));
            // Duplicate columns are possible from the random draw; collapse
            // them the way assembly would.
            row.sort_by_key(|e| e.0);
            row.dedup_by(|b, a| {
                if a.0 == b.0 {
                    a.1 += b.1;
                    true
                } else {
                    false
                }
            });
            for &(j, v) in &row {
                dense[(i, j as usize)] += v;
            }
            rows.push(row);
        }
        (CsrMatrix::from_rows(n, rows), dense)
    }

    #[test]
    fn csr_matvec_matches_dense() {
        let (csr, dense) = random_sparse(40, 7);
        let x: Vec<f64> = (0..40).map(|i| (i as f64 * 0.37).sin()).collect();
        let mut out = vec![0.0; 40];
        csr.matvec(&x, &mut out);
        let reference = dense * DVector::from_column_slice(&x);
        for i in 0..40 {
            assert_relative_eq!(out[i], reference[i], epsilon = 1e-13);
        }
    }

    #[test]
    fn dense_path_solves_and_reports() {
        let (_, dense) = random_sparse(30, 3);
        let x_true: Vec<f64> = (0..30).map(|i| 1.0 + (i as f64).cos()).collect();
        let b = &dense * DVector::from_column_slice(&x_true);
        let (x, report) =
            solve_system(&SystemMatrix::Dense(dense.clone()), b.as_slice()).unwrap();
        for i in 0..30 {
            assert_relative_eq!(x[i], x_true[i], epsilon = 1e-10);
        }
        assert_eq!(report.method, "dense-lu");
        assert!(report.residual < RESIDUAL_ACCEPT);
        assert!(report.condition_estimate >= 1.0);
    }

    #[test]
    fn singular_dense_is_rejected() {
        let mut a = DMatrix::<f64>::zeros(4, 4);
        a[(0, 0)] = 1.0;
        a[(1, 1)] = 1.0;
        a[(2, 2)] = 1.0;
        // Row 3 equals row 2: rank deficient.
        a[(3, 2)] = 1.0;
        let out = solve_system(&SystemMatrix::Dense(a), &[1.0, 2.0, 3.0, 3.0]);
        assert!(matches!(out, Err(Error::SingularSystem(_))));
    }

    #[test]
    fn gmres_matches_dense_solution() {
        let (csr, dense) = random_sparse(120, 11);
        let x_true: Vec<f64> = (0..120).map(|i| (0.05 * i as f64).sin() + 0.3).collect();
        let b = &dense * DVector::from_column_slice(&x_true);
        let (x, report) = solve_system(&SystemMatrix::Sparse(csr), b.as_slice()).unwrap();
        assert_eq!(report.method, "gmres");
        assert!(report.residual < RESIDUAL_ACCEPT);
        for i in 0..120 {
            assert_relative_eq!(x[i], x_true[i], epsilon = 1e-8);
        }
    }

    #[test]
    fn gmres_handles_badly_scaled_rows() {
        // Same system, but rows rescaled over 12 orders of magnitude;
        // equilibration must absorb it.
        let (csr, dense) = random_sparse(80, 23);
        let mut scaled = csr.clone();
        let mut dense_scaled = dense.clone();
        for i in 0..80 {
            let s = 10f64.powi((i % 13) as i32 - 6);
            for idx in scaled.indptr[i]..scaled.indptr[i + 1] {
                scaled.values[idx] *= s;
            }
            for j in 0..80 {
                dense_scaled[(i, j)] *= s;
            }
        }
        let x_true: Vec<f64> = (0..80).map(|i| 1.0 / (1.0 + i as f64)).collect();
        let b = &dense_scaled * DVector::from_column_slice(&x_true);
        let (x, report) = solve_system(&SystemMatrix::Sparse(scaled), b.as_slice()).unwrap();
        assert!(report.residual < RESIDUAL_ACCEPT);
        for i in 0..80 {
            assert_relative_eq!(x[i], x_true[i], epsilon = 1e-7);
        }
    }

    #[test]
    fn repeated_solves_are_bit_identical() {
        let (csr, dense) = random_sparse(60, 5);
        let b = (&dense * DVector::from_element(60, 1.0)).as_slice().to_vec();
        let m = SystemMatrix::Sparse(csr);
        let (x1, _) = solve_system(&m, &b).unwrap();
        let (x2, _) = solve_system(&m, &b).unwrap();
        let bits1: Vec<u64> = x1.iter().map(|v| v.to_bits()).collect();
        let bits2: Vec<u64> = x2.iter().map(|v| v.to_bits()).collect();
        assert_eq!(bits1, bits2);
    }

    #[test]
    fn zero_rhs_gives_zero_solution() {
        let (csr, _) = random_sparse(25, 9);
        let (x, _) = solve_system(&SystemMatrix::Sparse(csr), &vec![0.0; 25]).unwrap();
        assert!(x.iter().all(|&v| v == 0.0));
    }
}
