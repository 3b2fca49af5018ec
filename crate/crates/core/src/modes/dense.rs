use faer::{Mat, Side};

use super::{Eigenpairs, HeffOperator, ModeRequest, ModeSolver};
use crate::error::{Error, Result};

/// Full symmetric eigendecomposition of the assembled matrix. O(n³); meant
/// for small grids and as a reference for the iterative solvers.
#[derive(Debug, Clone, Copy, Default)]
pub struct DenseSolver;

impl ModeSolver for DenseSolver {
    fn name(&self) -> &'static str {
        "dense"
    }

    fn lowest(&self, op: &HeffOperator, request: &ModeRequest) -> Result<Eigenpairs> {
        if op.len() > 6000 {
            return Err(Error::validation(
                "basis.solver",
                format!("dense solver refused for {} grid points", op.len()),
            ));
        }
        let m = op.to_dense();
        let eig = m
            .self_adjoint_eigen(Side::Lower)
            .map_err(|e| Error::Numeric(format!("dense eigensolver failed: {e:?}")))?;
        let s = eig.S().column_vector();
        let values: Vec<f64> = (0..s.nrows()).map(|i| s[i]).collect();
        let keep = request.keep(&values);
        let u = eig.U();
        let vectors = Mat::from_fn(op.len(), keep, |i, j| u[(i, j)]);
        Ok(Eigenpairs {
            values: values[..keep].to_vec(),
            vectors,
            iterations: 1,
        })
    }
}
