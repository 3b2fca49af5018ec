//! Mode-space pair-creation Hamiltonian and its Bogoliubov spectrum.
//!
//! With D = diag(ε_n + q) and the coupling A, the fluctuation dynamics are
//! governed by the 2M×2M matrix [[D, A], [−A, −D]]. Solvers are strategies
//! behind [`BdgSolver`], selected by name from a [`BdgSolverRegistry`].

use faer::linalg::matmul::matmul;
use faer::{c64, Accum, Mat, Par};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::meanfield::EffectiveFields;
use crate::modes::ModeBasis;

/// |Im ξ| below this many Hz counts as real.
pub const REAL_TOLERANCE_HZ: f64 = 1e-6;

const COUPLING_ROW_CHUNK: usize = 4096;

/// A_nn' = ∫ Ω_eff φ_n φ_n' in Hz, exactly symmetric.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingMatrix {
    pub a: Mat<f64>,
}

impl CouplingMatrix {
    pub fn from_matrix(a: Mat<f64>) -> Result<Self> {
        if a.nrows() != a.ncols() {
            return Err(Error::validation("coupling", "coupling matrix must be square"));
        }
        let n = a.nrows();
        Ok(CouplingMatrix {
            a: Mat::from_fn(n, n, |i, j| 0.5 * (a[(i, j)] + a[(j, i)])),
        })
    }

    pub fn diagonal(values: &[f64]) -> Self {
        let n = values.len();
        CouplingMatrix {
            a: Mat::from_fn(n, n, |i, j| if i == j { values[i] } else { 0.0 }),
        }
    }

    pub fn len(&self) -> usize {
        self.a.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.a.nrows() == 0
    }

    /// Leading `m`×`m` block, for truncated bases.
    pub fn truncated(&self, m: usize) -> CouplingMatrix {
        CouplingMatrix {
            a: self.a.as_ref().submatrix(0, 0, m, m).to_owned(),
        }
    }
}

pub fn coupling_matrix(basis: &ModeBasis, fields: &EffectiveFields) -> Result<CouplingMatrix> {
    basis.grid.ensure_same(&fields.grid, "fields")?;
    let (n, m) = (basis.modes.nrows(), basis.modes.ncols());
    let dv = basis.grid.cell_volume();
    let mut a = Mat::<f64>::zeros(m, m);
    let mut weighted = Mat::<f64>::zeros(COUPLING_ROW_CHUNK.min(n), m);
    let mut start = 0;
    while start < n {
        let rows = COUPLING_ROW_CHUNK.min(n - start);
        let phi = basis.modes.as_ref().subrows(start, rows);
        for j in 0..m {
            for i in 0..rows {
                weighted[(i, j)] = fields.omega_eff_hz[start + i] * dv * phi[(i, j)];
            }
        }
        let accum = if start == 0 { Accum::Replace } else { Accum::Add };
        matmul(
            a.as_mut(),
            accum,
            phi.transpose(),
            weighted.as_ref().subrows(0, rows),
            1.0,
            Par::Seq,
        );
        start += rows;
    }
    CouplingMatrix::from_matrix(a)
}

/// Bogoliubov spectrum at one q.
#[derive(Debug, Clone, PartialEq)]
pub struct BdgSpectrum {
    pub q_hz: f64,
    /// All 2M eigenvalues ξ, in Hz.
    pub eigenvalues: Vec<c64>,
    /// max |Im ξ|
    pub lambda_hz: f64,
    /// Number of eigenvalues with Im ξ above [`REAL_TOLERANCE_HZ`].
    pub unstable_count: usize,
    /// Upper-block mode coefficients of the fastest-growing eigenvector,
    /// when the solver computes eigenvectors.
    pub most_unstable: Option<Vec<c64>>,
}

impl BdgSpectrum {
    fn from_eigenvalues(q_hz: f64, eigenvalues: Vec<c64>, most_unstable: Option<Vec<c64>>) -> Self {
        let lambda_hz = eigenvalues.iter().map(|x| x.im.abs()).fold(0.0, f64::max);
        let unstable_count = eigenvalues.iter().filter(|x| x.im > REAL_TOLERANCE_HZ).count();
        BdgSpectrum {
            q_hz,
            eigenvalues,
            lambda_hz,
            unstable_count,
            most_unstable,
        }
    }

    pub fn is_stable(&self) -> bool {
        self.lambda_hz < REAL_TOLERANCE_HZ
    }

    /// Density |Σ_n c_n φ_n|² of the fastest-growing mode on the grid,
    /// normalized to unit integral.
    pub fn most_unstable_density(&self, basis: &ModeBasis) -> Option<Vec<f64>> {
        let coeffs = self.most_unstable.as_ref()?;
        if coeffs.len() > basis.len() {
            return None;
        }
        let n = basis.grid.len();
        let mut re = vec![0.0; n];
        let mut im = vec![0.0; n];
        for (k, c) in coeffs.iter().enumerate() {
            for (i, p) in basis.mode(k).iter().enumerate() {
                re[i] += c.re * p;
                im[i] += c.im * p;
            }
        }
        let mut density: Vec<f64> = re.iter().zip(&im).map(|(r, i)| r * r + i * i).collect();
        let total = basis.grid.integrate(&density);
        if total > 0.0 {
            density.iter_mut().for_each(|d| *d /= total);
        }
        Some(density)
    }
}

/// Strategy for the Bogoliubov eigenproblem with D = diag(energies + q).
pub trait BdgSolver: Send + Sync {
    fn name(&self) -> &'static str;
    fn spectrum(&self, energies_hz: &[f64], coupling: &CouplingMatrix, q_hz: f64) -> Result<BdgSpectrum>;
}

fn check_shapes(energies_hz: &[f64], coupling: &CouplingMatrix) -> Result<()> {
    if energies_hz.len() != coupling.len() {
        return Err(Error::validation(
            "coupling",
            format!(
                "{} mode energies but a {}×{} coupling",
                energies_hz.len(),
                coupling.len(),
                coupling.len()
            ),
        ));
    }
    Ok(())
}

fn eigen_failure(what: &str, d: &[f64], a: &Mat<f64>, err: impl std::fmt::Debug) -> Error {
    let dmax = d.iter().map(|x| x.abs()).fold(0.0, f64::max);
    Error::Numeric(format!(
        "{what} eigensolve failed ({err:?}); max|D| = {dmax:.6e} Hz, max|A| = {:.6e} Hz, M = {}",
        a.norm_max(),
        d.len()
    ))
}

/// Full 2M×2M non-symmetric eigensolve; also yields the most unstable
/// eigenvector.
#[derive(Debug, Clone, Copy, Default)]
pub struct BlockSolver;

impl BdgSolver for BlockSolver {
    fn name(&self) -> &'static str {
        "block"
    }

    fn spectrum(&self, energies_hz: &[f64], coupling: &CouplingMatrix, q_hz: f64) -> Result<BdgSpectrum> {
        check_shapes(energies_hz, coupling)?;
        let m = energies_hz.len();
        let d: Vec<f64> = energies_hz.iter().map(|e| e + q_hz).collect();
        let a = &coupling.a;
        let h = Mat::from_fn(2 * m, 2 * m, |i, j| {
            let (bi, bj) = (i / m, j / m);
            let (ii, jj) = (i % m, j % m);
            let diag = if ii == jj { d[ii] } else { 0.0 };
            match (bi, bj) {
                (0, 0) => diag,
                (0, 1) => a[(ii, jj)],
                (1, 0) => -a[(ii, jj)],
                _ => -diag,
            }
        });
        let eig = h.eigen().map_err(|e| eigen_failure("block", &d, a, e))?;
        let s = eig.S().column_vector();
        let values: Vec<c64> = (0..2 * m).map(|i| s[i]).collect();
        let best = (0..2 * m).max_by(|&x, &y| {
            values[x]
                .im
                .partial_cmp(&values[y].im)
                .unwrap_or(std::cmp::Ordering::Equal)
        });
        let most_unstable = best.map(|k| {
            let u = eig.U();
            (0..m).map(|i| u[(i, k)]).collect()
        });
        Ok(BdgSpectrum::from_eigenvalues(q_hz, values, most_unstable))
    }
}

/// ξ² from the eigenvalues of the M×M product (D − A)(D + A).
#[derive(Debug, Clone, Copy, Default)]
pub struct ProductSolver;

impl BdgSolver for ProductSolver {
    fn name(&self) -> &'static str {
        "product"
    }

    fn spectrum(&self, energies_hz: &[f64], coupling: &CouplingMatrix, q_hz: f64) -> Result<BdgSpectrum> {
        check_shapes(energies_hz, coupling)?;
        let m = energies_hz.len();
        let d: Vec<f64> = energies_hz.iter().map(|e| e + q_hz).collect();
        let a = &coupling.a;
        let minus = Mat::from_fn(m, m, |i, j| if i == j { d[i] - a[(i, j)] } else { -a[(i, j)] });
        let plus = Mat::from_fn(m, m, |i, j| if i == j { d[i] + a[(i, j)] } else { a[(i, j)] });
        let mut product = Mat::<f64>::zeros(m, m);
        matmul(
            product.as_mut(),
            Accum::Replace,
            minus.as_ref(),
            plus.as_ref(),
            1.0,
            Par::Seq,
        );
        let squares = product.eigenvalues().map_err(|e| eigen_failure("product", &d, a, e))?;
        let mut values = Vec::with_capacity(2 * m);
        for lam in squares {
            let root = lam.sqrt();
            // principal branch has Re ≥ 0; report the root with Im ≥ 0 first
            let root = if root.im < 0.0 { -root } else { root };
            values.push(root);
            values.push(-root);
        }
        Ok(BdgSpectrum::from_eigenvalues(q_hz, values, None))
    }
}

type BdgFactory = fn() -> Box<dyn BdgSolver>;

/// Name → Bogoliubov solver lookup.
pub struct BdgSolverRegistry {
    entries: Vec<(&'static str, BdgFactory)>,
}

impl Default for BdgSolverRegistry {
    fn default() -> Self {
        let mut r = BdgSolverRegistry { entries: Vec::new() };
        r.register("product", || Box::new(ProductSolver));
        r.register("block", || Box::new(BlockSolver));
        r
    }
}

impl BdgSolverRegistry {
    pub fn register(&mut self, name: &'static str, factory: BdgFactory) {
        self.entries.retain(|(n, _)| *n != name);
        self.entries.push((name, factory));
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.entries.iter().map(|(n, _)| *n).collect()
    }

    pub fn get(&self, name: &str) -> Result<Box<dyn BdgSolver>> {
        self.entries
            .iter()
            .find(|(n, _)| *n == name)
            .map(|(_, f)| f())
            .ok_or_else(|| {
                Error::config(
                    "bdg.solver",
                    format!("unknown BdG solver `{name}`; known: {:?}", self.names()),
                )
            })
    }
}

/// Λ(q) with the default product-form solver.
pub fn instability_rate(q_hz: f64, basis: &ModeBasis, coupling: &CouplingMatrix) -> Result<f64> {
    Ok(ProductSolver.spectrum(&basis.energies_hz, coupling, q_hz)?.lambda_hz)
}

/// Summary written next to a per-q spectrum export.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumSummary {
    pub q: f64,
    pub lambda_hz: f64,
    pub unstable_count: usize,
}

impl From<&BdgSpectrum> for SpectrumSummary {
    fn from(s: &BdgSpectrum) -> Self {
        SpectrumSummary {
            q: s.q_hz,
            lambda_hz: s.lambda_hz,
            unstable_count: s.unstable_count,
        }
    }
}
