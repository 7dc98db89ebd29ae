//! Dense linear solves for the per-matrix hitting-time systems.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Pivots below this magnitude are treated as a singular system.
pub const PIVOT_THRESHOLD: f64 = 1e-14;

/// Solves `a x = b` for a row-major `n x n` matrix by LU with partial pivoting.
pub fn solve_dense(a: Vec<f64>, b: Vec<f64>) -> Result<Vec<f64>> {
    let n = b.len();
    debug_assert_eq!(a.len(), n * n);
    if n == 0 {
        return Ok(b);
    }
    let lu = DMatrix::from_row_slice(n, n, &a).lu();
    let u = lu.u();
    if let Some(k) = (0..n).find(|&k| u[(k, k)].is_nan() || u[(k, k)].abs() < PIVOT_THRESHOLD) {
        return Err(Error::SingularSystem {
            column: k,
            size: n,
            pivot: u[(k, k)].abs(),
        });
    }
    let x = lu
        .solve(&DVector::from_vec(b))
        .ok_or(Error::SingularSystem {
            column: 0,
            size: n,
            pivot: 0.0,
        })?;
    Ok(x.data.into())
}
