use faer::Mat;

use super::{Eigenpairs, HeffOperator, ModeRequest, ModeSolver};
use crate::error::{Error, Result};

/// One-dimensional grids only: Sturm-sequence bisection for the
/// eigenvalues, inverse iteration for the vectors.
#[derive(Debug, Clone, Copy, Default)]
pub struct TridiagonalSolver;

/// Number of eigenvalues strictly below `x` for diag `d`, constant
/// off-diagonal `-t`.
fn sturm_count(d: &[f64], t: f64, x: f64, pivmin: f64) -> usize {
    let mut count = 0;
    let mut q = 1.0;
    for (i, di) in d.iter().enumerate() {
        q = if i == 0 { di - x } else { di - x - t * t / q };
        if q.abs() < pivmin {
            q = -pivmin;
        }
        if q < 0.0 {
            count += 1;
        }
    }
    count
}

fn bisect(d: &[f64], t: f64, k: usize, lo: f64, hi: f64, tol: f64, pivmin: f64) -> f64 {
    let (mut a, mut b) = (lo, hi);
    while b - a > tol {
        let mid = 0.5 * (a + b);
        if mid <= a || mid >= b {
            break;
        }
        if sturm_count(d, t, mid, pivmin) > k {
            b = mid;
        } else {
            a = mid;
        }
    }
    0.5 * (a + b)
}

/// Solves (T − λ) x = rhs in place by Gaussian elimination with partial
/// pivoting on the tridiagonal band.
fn shifted_solve(d: &[f64], t: f64, lambda: f64, rhs: &mut [f64], tiny: f64) {
    let n = d.len();
    // Row i after elimination: u0[i] x_i + u1[i] x_{i+1} + u2[i] x_{i+2}
    let mut u0 = vec![0.0; n];
    let mut u1 = vec![0.0; n];
    let mut u2 = vec![0.0; n];
    // current row (a, b, c) acting on columns (i, i+1, i+2)
    let mut a = d[0] - lambda;
    let mut b = if n > 1 { -t } else { 0.0 };
    let mut c = 0.0;
    for i in 0..n {
        if i + 1 == n {
            u0[i] = if a.abs() < tiny { tiny } else { a };
            break;
        }
        // next original row on columns (i, i+1, i+2)
        let na = -t;
        let nb = d[i + 1] - lambda;
        let nc = if i + 2 < n { -t } else { 0.0 };
        if na.abs() > a.abs() {
            // swap rows
            u0[i] = na;
            u1[i] = nb;
            u2[i] = nc;
            rhs.swap(i, i + 1);
            let m = a / na;
            rhs[i + 1] -= m * rhs[i];
            a = b - m * nb;
            b = c - m * nc;
        } else {
            let piv = if a.abs() < tiny { tiny } else { a };
            u0[i] = piv;
            u1[i] = b;
            u2[i] = c;
            let m = na / piv;
            rhs[i + 1] -= m * rhs[i];
            a = nb - m * b;
            b = nc - m * c;
        }
        c = 0.0;
    }
    for i in (0..n).rev() {
        let mut s = rhs[i];
        if i + 1 < n {
            s -= u1[i] * rhs[i + 1];
        }
        if i + 2 < n {
            s -= u2[i] * rhs[i + 2];
        }
        rhs[i] = s / u0[i];
    }
}

fn normalize(v: &mut [f64]) -> f64 {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 0.0 {
        v.iter_mut().for_each(|x| *x /= norm);
    }
    norm
}

impl ModeSolver for TridiagonalSolver {
    fn name(&self) -> &'static str {
        "tridiagonal"
    }

    fn lowest(&self, op: &HeffOperator, request: &ModeRequest) -> Result<Eigenpairs> {
        if op.grid().dim() != 1 {
            return Err(Error::validation(
                "basis.solver",
                "tridiagonal solver needs a one-dimensional grid",
            ));
        }
        let d = op.diagonal_hz();
        let t = op.hopping_hz()[0];
        let n = d.len();
        let (lo, hi) = op.spectral_bounds();
        let scale = lo.abs().max(hi.abs()).max(f64::MIN_POSITIVE);
        let eps = f64::EPSILON;
        let pivmin = f64::MIN_POSITIVE.max(eps * eps * t * t);
        let tol = 4.0 * eps * scale;

        let mut values = Vec::new();
        for k in 0..n.min(request.max_modes) {
            let v = bisect(d, t, k, lo - tol, hi + tol, tol, pivmin);
            values.push(v);
            if v > request.cutoff_hz {
                break;
            }
        }
        let keep = request.keep(&values);
        values.truncate(keep);

        let mut vectors = Mat::<f64>::zeros(n, keep);
        let cluster_gap = 1e-3 * scale;
        let tiny = eps * scale;
        let mut iterations = 0;
        for k in 0..keep {
            let lambda = values[k];
            let mut v: Vec<f64> = (0..n)
                .map(|i| 1.0 + 0.5 * (((i * 7919 + k * 104_729) % 1009) as f64 / 1009.0 - 0.5))
                .collect();
            normalize(&mut v);
            for _ in 0..5 {
                iterations += 1;
                shifted_solve(d, t, lambda, &mut v, tiny);
                // keep close eigenvalues orthogonal
                for j in (0..k).rev() {
                    if lambda - values[j] > cluster_gap {
                        break;
                    }
                    let col = vectors.col_as_slice(j);
                    let dot: f64 = col.iter().zip(&v).map(|(a, b)| a * b).sum();
                    v.iter_mut().zip(col).for_each(|(x, c)| *x -= dot * c);
                }
                let growth = normalize(&mut v);
                if growth * tiny > 1e-3 {
                    break;
                }
            }
            vectors.col_as_slice_mut(k).copy_from_slice(&v);
        }
        Ok(Eigenpairs {
            values,
            vectors,
            iterations,
        })
    }
}
