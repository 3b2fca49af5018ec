//! Fixes the gauge of computed eigenvectors so that results do not depend
//! on solver internals: degenerate subspaces are rotated onto the
//! eigenbasis of a fixed generic observable, and every vector gets a
//! deterministic sign.

use faer::{Mat, Side};

use crate::grid::GridSpec;

const CLUSTER_RTOL: f64 = 1e-7;

// Irrational-ish weights so that no lattice symmetry survives.
const LINEAR: [f64; 3] = [std::f64::consts::FRAC_1_PI, 0.207_879_576, 0.141_421_356];
const QUADRATIC: [f64; 3] = [0.271_828_183, 0.161_803_399, 0.113_137_085];
const CROSS: [f64; 3] = [0.057_721_566, 0.043_429_448, 0.031_830_989];

fn probe(grid: &GridSpec) -> Vec<f64> {
    let half = grid.half_extents().to_vec();
    grid.sample(|r| {
        let u: Vec<f64> = r.iter().zip(&half).map(|(x, l)| x / l).collect();
        let mut w = 0.0;
        for a in 0..u.len() {
            w += LINEAR[a] * u[a] + QUADRATIC[a] * u[a] * u[a];
            let b = (a + 1) % u.len();
            if b != a {
                w += CROSS[a] * u[a] * u[b];
            }
        }
        w
    })
}

fn sign_weight(grid: &GridSpec) -> Vec<f64> {
    let half = grid.half_extents().to_vec();
    grid.sample(|r| {
        r.iter()
            .zip(&half)
            .zip(LINEAR)
            .map(|((x, l), c)| 3.0 * c * x / l)
            .sum::<f64>()
            .exp()
    })
}

pub(crate) fn canonicalize(grid: &GridSpec, values: Vec<f64>, mut vectors: Mat<f64>) -> (Vec<f64>, Mat<f64>) {
    let m = values.len();
    let mut probe_w: Option<Vec<f64>> = None;
    let mut start = 0;
    while start < m {
        let mut end = start + 1;
        while end < m && values[end] - values[end - 1] <= CLUSTER_RTOL * values[end].abs().max(1.0) {
            end += 1;
        }
        let k = end - start;
        if k > 1 {
            let w = probe_w.get_or_insert_with(|| probe(grid));
            let block = vectors.as_ref().subcols(start, k).to_owned();
            let weighted = Mat::from_fn(block.nrows(), k, |i, j| w[i] * block[(i, j)]);
            let p = block.transpose() * &weighted;
            let p = Mat::from_fn(k, k, |i, j| 0.5 * (p[(i, j)] + p[(j, i)]));
            if let Ok(eig) = p.self_adjoint_eigen(Side::Lower) {
                let rotated = &block * eig.U();
                vectors.as_mut().subcols_mut(start, k).copy_from(&rotated);
            }
        }
        start = end;
    }

    let weight = sign_weight(grid);
    for j in 0..m {
        let col = vectors.col_as_slice_mut(j);
        let mut s: f64 = col.iter().zip(&weight).map(|(v, w)| v * w).sum();
        if s.abs() < 1e-12 {
            s = col
                .iter()
                .cloned()
                .fold(0.0, |acc, v| if v.abs() > acc.abs() { v } else { acc });
        }
        if s < 0.0 {
            col.iter_mut().for_each(|v| *v = -*v);
        }
    }
    (values, vectors)
}
