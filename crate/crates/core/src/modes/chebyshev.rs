use faer::linalg::matmul::matmul;
use faer::linalg::triangular_solve::solve_lower_triangular_in_place;
use faer::{Accum, Mat, MatRef, Par, Side};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Eigenpairs, HeffOperator, ModeRequest, ModeSolver};
use crate::error::{Error, Result};

/// Chebyshev-filtered subspace iteration with Rayleigh–Ritz projection.
///
/// Works with matrix-free products only, so memory stays at a few blocks of
/// grid vectors. The block grows until it holds every eigenvalue below the
/// cutoff (plus one) or the mode cap is reached.
#[derive(Debug, Clone)]
pub struct ChebyshevSubspace {
    /// Extra vectors carried beyond the wanted ones; at least this many,
    /// or a fifth of the wanted count.
    pub min_guard: usize,
    pub max_degree: usize,
    /// Columns processed per H·X chunk in the projection step.
    pub chunk: usize,
}

impl Default for ChebyshevSubspace {
    fn default() -> Self {
        ChebyshevSubspace {
            min_guard: 16,
            max_degree: 200,
            chunk: 32,
        }
    }
}

impl ChebyshevSubspace {
    fn guard(&self, want: usize) -> usize {
        self.min_guard.max(want / 5)
    }

    /// In-place p(H) x for the scaled Chebyshev filter damping [a, b] and
    /// amplifying toward `a0`.
    #[allow(clippy::too_many_arguments)]
    fn filter_column(
        op: &HeffOperator,
        col: &mut [f64],
        degree: usize,
        a: f64,
        b: f64,
        a0: f64,
        y: &mut Vec<f64>,
        z: &mut Vec<f64>,
        x: &mut Vec<f64>,
    ) {
        let e = 0.5 * (b - a);
        let c = 0.5 * (b + a);
        let mut sigma = e / (a0 - c);
        let tau = 2.0 / sigma;
        x.copy_from_slice(col);
        op.apply(x, y);
        let s1 = sigma / e;
        y.iter_mut()
            .zip(x.iter())
            .for_each(|(yi, xi)| *yi = (*yi - c * xi) * s1);
        for _ in 1..degree {
            let sigma_new = 1.0 / (tau - sigma);
            op.apply(y, z);
            let s2 = 2.0 * sigma_new / e;
            let s3 = sigma * sigma_new;
            for ((zi, yi), xi) in z.iter_mut().zip(y.iter()).zip(x.iter()) {
                *zi = (*zi - c * yi) * s2 - s3 * xi;
            }
            std::mem::swap(x, y);
            std::mem::swap(y, z);
            sigma = sigma_new;
        }
        col.copy_from_slice(y);
    }

    fn filter(&self, op: &HeffOperator, block: &mut Mat<f64>, degree: usize, a: f64, b: f64, a0: f64) {
        let n = op.len();
        let (mut y, mut z, mut x) = (vec![0.0; n], vec![0.0; n], vec![0.0; n]);
        for j in 0..block.ncols() {
            Self::filter_column(op, block.col_as_slice_mut(j), degree, a, b, a0, &mut y, &mut z, &mut x);
        }
    }

    /// Rayleigh–Ritz on span(block); returns Ritz values and replaces
    /// `block` with the Ritz vectors.
    fn rayleigh_ritz(&self, op: &HeffOperator, block: &mut Mat<f64>) -> Result<Vec<f64>> {
        orthonormalize(block);
        let (n, m) = (block.nrows(), block.ncols());
        let mut proj = Mat::<f64>::zeros(m, m);
        let mut hx = Mat::<f64>::zeros(n, self.chunk.min(m));
        let mut start = 0;
        while start < m {
            let width = self.chunk.min(m - start);
            for j in 0..width {
                op.apply(block.col_as_slice(start + j), hx.col_as_slice_mut(j));
            }
            matmul(
                proj.as_mut().submatrix_mut(0, start, m, width),
                Accum::Replace,
                block.transpose(),
                hx.as_ref().subcols(0, width),
                1.0,
                Par::Seq,
            );
            start += width;
        }
        let sym = Mat::from_fn(m, m, |i, j| 0.5 * (proj[(i, j)] + proj[(j, i)]));
        let eig = sym
            .self_adjoint_eigen(Side::Lower)
            .map_err(|e| Error::Numeric(format!("Rayleigh-Ritz eigensolve failed: {e:?}")))?;
        let s = eig.S().column_vector();
        let values = (0..m).map(|i| s[i]).collect();
        *block = &*block * eig.U();
        Ok(values)
    }
}

/// Two passes of Cholesky QR, falling back to Householder QR when the Gram
/// matrix is numerically singular.
fn orthonormalize(block: &mut Mat<f64>) {
    for _ in 0..2 {
        if !cholesky_qr_step(block) {
            *block = block.qr().compute_thin_Q();
            return;
        }
    }
}

fn cholesky_qr_step(block: &mut Mat<f64>) -> bool {
    let m = block.ncols();
    let gram = block.transpose() * &*block;
    let Ok(llt) = gram.llt(Side::Lower) else {
        return false;
    };
    let l: MatRef<'_, f64> = llt.L();
    let mut inv = Mat::<f64>::identity(m, m);
    solve_lower_triangular_in_place(l, inv.as_mut(), Par::Seq);
    if inv.norm_max().is_finite() && inv.norm_max() < 1e12 {
        *block = &*block * inv.transpose();
        true
    } else {
        false
    }
}

/// Guess for the number of eigenvalues below `cutoff` from a Weyl-type
/// count N(E) ∝ (E − e0)^{d/2}, with 20% headroom and at least 1.5× growth.
fn grown_count(count: usize, e0: f64, e_top: f64, cutoff: f64, dim: usize) -> usize {
    let ratio = ((cutoff - e0) / (e_top - e0).max(f64::MIN_POSITIVE)).max(1.0);
    let weyl = count as f64 * ratio.powf(dim as f64 / 2.0) * 1.2;
    let floor = count + count.div_ceil(2);
    if weyl.is_finite() {
        (weyl.ceil() as usize).max(floor)
    } else {
        usize::MAX
    }
}

fn residual_norms(op: &HeffOperator, block: &Mat<f64>, values: &[f64], count: usize) -> Vec<f64> {
    let mut y = vec![0.0; op.len()];
    (0..count)
        .map(|j| {
            let x = block.col_as_slice(j);
            op.apply(x, &mut y);
            y.iter()
                .zip(x)
                .map(|(h, v)| (h - values[j] * v).powi(2))
                .sum::<f64>()
                .sqrt()
        })
        .collect()
}

impl ModeSolver for ChebyshevSubspace {
    fn name(&self) -> &'static str {
        "chebyshev"
    }

    fn lowest(&self, op: &HeffOperator, request: &ModeRequest) -> Result<Eigenpairs> {
        let n = op.len();
        let (_, upper) = op.spectral_bounds();
        let mut rng = ChaCha8Rng::seed_from_u64(request.seed);
        let cap = request.max_modes.min(n);

        let mut want = cap.clamp(1, 8);
        let mut width = (want + self.guard(want)).min(n);
        let mut block = Mat::from_fn(n, width, |_, _| rng.gen_range(-1.0..1.0));
        let mut values = self.rayleigh_ritz(op, &mut block)?;
        let mut iterations = 0;
        // residual reached the requested relative tolerance; a tenth of it
        // is kept as margin for the later grid normalization
        let tol = 0.1 * request.tolerance;

        loop {
            if width == n {
                // the subspace is the whole space; Rayleigh-Ritz is exact
                break;
            }
            let lambda_want = values[want - 1];
            let a = values[width - 1];
            let a0 = values[0];
            let e = 0.5 * (upper - a);
            let c = 0.5 * (upper + a);
            let xw = ((c - lambda_want) / e).max(1.0 + 1e-12);
            let degree = ((1e3f64).acosh() / xw.acosh()).ceil() as usize;
            let degree = degree.clamp(8, self.max_degree);

            self.filter(op, &mut block, degree, a, upper, a0);
            values = self.rayleigh_ritz(op, &mut block)?;
            iterations += 1;

            let res = residual_norms(op, &block, &values, want);
            let converged = res
                .iter()
                .zip(&values)
                .take_while(|(r, v)| **r <= tol * v.abs().max(1.0))
                .count();

            if converged == want {
                if values[want - 1] > request.cutoff_hz || want == cap {
                    break;
                }
                // every converged value is still below the cutoff: grow
                let new_want =
                    grown_count(want, values[0], values[want - 1], request.cutoff_hz, op.grid().dim()).min(cap);
                let new_width = (new_want + self.guard(new_want)).min(n);
                let mut grown = Mat::from_fn(n, new_width, |_, _| rng.gen_range(-1.0..1.0));
                grown.as_mut().subcols_mut(0, width).copy_from(&block);
                block = grown;
                want = new_want;
                width = new_width;
                values = self.rayleigh_ritz(op, &mut block)?;
            }
            if iterations >= request.max_iterations {
                let res = residual_norms(op, &block, &values, want);
                let worst = res.iter().cloned().fold(0.0, f64::max);
                return Err(Error::SolverNotConverged {
                    iterations,
                    residual: worst,
                });
            }
        }
        let keep = request.keep(&values[..want.min(values.len())]);
        Ok(Eigenpairs {
            values: values[..keep].to_vec(),
            vectors: block.subcols(0, keep).to_owned(),
            iterations,
        })
    }
}
