//! Finite-difference discretization of H_eff = −ħ²∇²/2m + V_eff and its
//! lowest eigenpairs.
//!
//! Eigensolvers are interchangeable strategies behind [`ModeSolver`] and
//! are looked up by name in a [`ModeSolverRegistry`].

mod canonical;
mod chebyshev;
mod dense;
mod tridiagonal;

use faer::Mat;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::GridSpec;
use crate::meanfield::EffectiveFields;
use crate::units::{kinetic_prefactor_hz, SpeciesParams, HBAR, PLANCK};

pub use chebyshev::ChebyshevSubspace;
pub use dense::DenseSolver;
pub use tridiagonal::TridiagonalSolver;

/// Second-order central-difference operator on a [`GridSpec`] with
/// homogeneous Dirichlet walls. Entries are in Hz.
#[derive(Debug, Clone, PartialEq)]
pub struct HeffOperator {
    grid: GridSpec,
    /// Nearest-neighbour hopping t_a = ħ²/(2m d_a²) per axis.
    hopping_hz: Vec<f64>,
    /// V_eff + 2 Σ_a t_a
    diagonal_hz: Vec<f64>,
}

impl HeffOperator {
    /// Operator for an arbitrary potential sampled on `grid`, with no
    /// resolution check.
    pub fn from_potential(grid: &GridSpec, mass_kg: f64, potential_hz: &[f64]) -> Result<Self> {
        if potential_hz.len() != grid.len() {
            return Err(Error::validation("potential", "potential does not match the grid"));
        }
        let c = kinetic_prefactor_hz(mass_kg);
        let hopping_hz: Vec<f64> = grid.spacings().iter().map(|d| c / (d * d)).collect();
        let onsite: f64 = 2.0 * hopping_hz.iter().sum::<f64>();
        Ok(HeffOperator {
            grid: grid.clone(),
            hopping_hz,
            diagonal_hz: potential_hz.iter().map(|v| v + onsite).collect(),
        })
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn len(&self) -> usize {
        self.diagonal_hz.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diagonal_hz.is_empty()
    }

    pub fn hopping_hz(&self) -> &[f64] {
        &self.hopping_hz
    }

    pub fn diagonal_hz(&self) -> &[f64] {
        &self.diagonal_hz
    }

    /// Same operator plus a constant `shift_hz` on the diagonal.
    pub fn shifted(&self, shift_hz: f64) -> HeffOperator {
        HeffOperator {
            grid: self.grid.clone(),
            hopping_hz: self.hopping_hz.clone(),
            diagonal_hz: self.diagonal_hz.iter().map(|d| d + shift_hz).collect(),
        }
    }

    /// y = H x
    pub fn apply(&self, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.len());
        debug_assert_eq!(y.len(), self.len());
        for ((yi, xi), d) in y.iter_mut().zip(x).zip(&self.diagonal_hz) {
            *yi = d * xi;
        }
        let points = self.grid.points();
        let strides = self.grid.strides();
        let n = self.len();
        for axis in 0..self.grid.dim() {
            let t = self.hopping_hz[axis];
            let s = strides[axis];
            let na = points[axis];
            let block = na * s;
            if s == 1 {
                for line in (0..n).step_by(na) {
                    let xs = &x[line..line + na];
                    let ys = &mut y[line..line + na];
                    for k in 0..na {
                        let left = if k > 0 { xs[k - 1] } else { 0.0 };
                        let right = if k + 1 < na { xs[k + 1] } else { 0.0 };
                        ys[k] -= t * (left + right);
                    }
                }
            } else {
                for base in (0..n).step_by(block) {
                    for k in 0..na {
                        let row = base + k * s;
                        if k > 0 {
                            for j in row..row + s {
                                y[j] -= t * x[j - s];
                            }
                        }
                        if k + 1 < na {
                            for j in row..row + s {
                                y[j] -= t * x[j + s];
                            }
                        }
                    }
                }
            }
        }
    }

    /// Bounds [lo, hi] containing the whole spectrum: the Laplacian part is
    /// positive semi-definite with norm below 4 Σ t_a.
    pub fn spectral_bounds(&self) -> (f64, f64) {
        let kin: f64 = self.hopping_hz.iter().sum();
        let (mut vmin, mut vmax) = (f64::INFINITY, f64::NEG_INFINITY);
        for d in &self.diagonal_hz {
            let v = d - 2.0 * kin;
            vmin = vmin.min(v);
            vmax = vmax.max(v);
        }
        (vmin, vmax + 4.0 * kin)
    }

    /// Explicit dense matrix; only sensible for small grids.
    pub fn to_dense(&self) -> Mat<f64> {
        let n = self.len();
        let strides = self.grid.strides();
        let points = self.grid.points();
        let mut m = Mat::<f64>::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = self.diagonal_hz[i];
            let idx = self.grid.unravel(i);
            for axis in 0..self.grid.dim() {
                if idx[axis] + 1 < points[axis] {
                    let j = i + strides[axis];
                    m[(i, j)] = -self.hopping_hz[axis];
                    m[(j, i)] = -self.hopping_hz[axis];
                }
            }
        }
        m
    }
}

/// Assembles H_eff on the fields' grid and checks that the grid resolves
/// the spin healing length ħ/√(2m |U1| n_peak) with at least two points.
pub fn discretize_heff(fields: &EffectiveFields, species: &SpeciesParams, grid: &GridSpec) -> Result<HeffOperator> {
    grid.ensure_same(&fields.grid, "fields")?;
    let peak_spin_hz = fields.omega_eff_hz.iter().fold(0.0f64, |m, o| m.max(o.abs()));
    if peak_spin_hz > 0.0 {
        let healing = HBAR / (2.0 * species.mass_kg * PLANCK * peak_spin_hz).sqrt();
        let required = healing / 2.0;
        for axis in 0..grid.dim() {
            let d = grid.spacing(axis);
            if d > required {
                return Err(Error::Resolution {
                    axis,
                    spacing_m: d,
                    required_m: required,
                });
            }
        }
    }
    HeffOperator::from_potential(grid, species.mass_kg, &fields.v_eff_hz)
}

/// What a [`ModeSolver`] is asked to deliver.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeRequest {
    /// Hard cap on the number of modes.
    pub max_modes: usize,
    /// Modes are collected up to and including the first one above this energy.
    pub cutoff_hz: f64,
    /// Relative residual bound ‖Hφ − εφ‖ ≤ tol · max(1, |ε|).
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Seed for random starting vectors.
    pub seed: u64,
}

impl ModeRequest {
    pub fn new(max_modes: usize, cutoff_hz: f64) -> Self {
        ModeRequest {
            max_modes,
            cutoff_hz,
            tolerance: 1e-8,
            max_iterations: 400,
            seed: 0x5eed,
        }
    }

    /// Number of modes to keep out of an ascending list of eigenvalues.
    pub(crate) fn keep(&self, ascending: &[f64]) -> usize {
        let below = ascending.iter().take_while(|&&e| e <= self.cutoff_hz).count();
        (below + 1).min(self.max_modes).min(ascending.len())
    }
}

/// Eigenpairs in Euclidean normalization, ascending.
#[derive(Debug, Clone)]
pub struct Eigenpairs {
    pub values: Vec<f64>,
    /// One unit column per eigenvalue.
    pub vectors: Mat<f64>,
    pub iterations: usize,
}

/// A strategy for the lowest eigenpairs of a [`HeffOperator`].
///
/// Implementations return at least `request.keep(values)` converged pairs
/// in ascending order; the caller trims to the cutoff.
pub trait ModeSolver: Send + Sync {
    fn name(&self) -> &'static str;
    fn lowest(&self, op: &HeffOperator, request: &ModeRequest) -> Result<Eigenpairs>;
}

type SolverFactory = fn() -> Box<dyn ModeSolver>;

/// Name → mode solver lookup.
pub struct ModeSolverRegistry {
    entries: Vec<(&'static str, SolverFactory)>,
}

impl Default for ModeSolverRegistry {
    fn default() -> Self {
        let mut r = ModeSolverRegistry { entries: Vec::new() };
        r.register("dense", || Box::new(DenseSolver));
        r.register("tridiagonal", || Box::new(TridiagonalSolver));
        r.register("chebyshev", || Box::new(ChebyshevSubspace::default()));
        r
    }
}

impl ModeSolverRegistry {
    pub fn register(&mut self, name: &'static str, factory: SolverFactory) {
        self.entries.retain(|(n, _)| *n != name);
        self.entries.push((name, factory));
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.entries.iter().map(|(n, _)| *n).collect()
    }

    /// Looks up `name`; `"auto"` picks a solver from the operator shape.
    pub fn get(&self, name: &str, op: &HeffOperator) -> Result<Box<dyn ModeSolver>> {
        let name = if name == "auto" { auto_solver_name(op) } else { name };
        self.entries
            .iter()
            .find(|(n, _)| *n == name)
            .map(|(_, f)| f())
            .ok_or_else(|| {
                Error::config(
                    "basis.solver",
                    format!("unknown mode solver `{name}`; known: {:?}", self.names()),
                )
            })
    }
}

fn auto_solver_name(op: &HeffOperator) -> &'static str {
    if op.grid().dim() == 1 {
        "tridiagonal"
    } else if op.len() <= 1200 {
        "dense"
    } else {
        "chebyshev"
    }
}

/// Orthonormal eigenbasis of H_eff on a grid.
#[derive(Debug, Clone)]
pub struct ModeBasis {
    pub grid: GridSpec,
    pub energies_hz: Vec<f64>,
    /// Columns φ_n with Σ φ_n φ_m dV = δ_nm.
    pub modes: Mat<f64>,
    pub energy_cutoff_hz: f64,
    pub max_modes: usize,
}

impl ModeBasis {
    pub fn len(&self) -> usize {
        self.energies_hz.len()
    }

    pub fn is_empty(&self) -> bool {
        self.energies_hz.is_empty()
    }

    pub fn mode(&self, n: usize) -> &[f64] {
        self.modes.col_as_slice(n)
    }

    /// Basis built from explicit energies and modes (already L²-normalized).
    pub fn from_parts(grid: GridSpec, energies_hz: Vec<f64>, modes: Mat<f64>) -> Result<Self> {
        if modes.ncols() != energies_hz.len() || modes.nrows() != grid.len() {
            return Err(Error::validation("modes", "mode matrix shape mismatch"));
        }
        let max_modes = energies_hz.len();
        let energy_cutoff_hz = energies_hz.last().copied().unwrap_or(0.0);
        Ok(ModeBasis {
            grid,
            energies_hz,
            modes,
            energy_cutoff_hz,
            max_modes,
        })
    }

    /// max |⟨φ_n|φ_m⟩ − δ_nm| under the discrete inner product.
    pub fn orthonormality_error(&self) -> f64 {
        let g = self.modes.transpose() * &self.modes;
        let dv = self.grid.cell_volume();
        let mut worst = 0.0f64;
        for i in 0..g.nrows() {
            for j in 0..g.ncols() {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((g[(i, j)] * dv - target).abs());
            }
        }
        worst
    }

    /// max_n ‖Hφ_n − ε_n φ_n‖ / max(1, |ε_n|).
    pub fn max_relative_residual(&self, op: &HeffOperator) -> f64 {
        let dv = self.grid.cell_volume();
        let mut y = vec![0.0; op.len()];
        let mut worst = 0.0f64;
        for (n, e) in self.energies_hz.iter().enumerate() {
            let phi = self.mode(n);
            op.apply(phi, &mut y);
            let r: f64 = y.iter().zip(phi).map(|(h, p)| (h - e * p).powi(2)).sum::<f64>() * dv;
            worst = worst.max(r.sqrt() / e.abs().max(1.0));
        }
        worst
    }
}

/// Lowest eigenpairs of `op` up to the cutoff, canonicalized and
/// L²-normalized on the grid.
pub fn solve_lowest_modes(op: &HeffOperator, solver: &dyn ModeSolver, request: &ModeRequest) -> Result<ModeBasis> {
    if request.max_modes == 0 {
        return Err(Error::validation("basis.max_modes", "need at least one mode"));
    }
    let pairs = solver.lowest(op, request)?;
    let keep = request.keep(&pairs.values);
    let values = pairs.values[..keep].to_vec();
    let vectors = pairs.vectors.subcols(0, keep).to_owned();
    let (values, vectors) = canonical::canonicalize(op.grid(), values, vectors);

    let scale = 1.0 / op.grid().cell_volume().sqrt();
    let modes = Mat::from_fn(vectors.nrows(), vectors.ncols(), |i, j| vectors[(i, j)] * scale);
    let basis = ModeBasis {
        grid: op.grid().clone(),
        energies_hz: values,
        modes,
        energy_cutoff_hz: request.cutoff_hz,
        max_modes: request.max_modes,
    };
    let residual = basis.max_relative_residual(op);
    if !(residual <= request.tolerance) {
        return Err(Error::SolverNotConverged {
            iterations: pairs.iterations,
            residual,
        });
    }
    Ok(basis)
}

/// Lowest eigenvalue of −ħ²∇²/2m + V + U0 n0 − μ_ref: the energy of the
/// condensate's own phase mode on the grid.
pub fn goldstone_offset_hz(
    fields: &EffectiveFields,
    species: &SpeciesParams,
    solver: &dyn ModeSolver,
    request: &ModeRequest,
) -> Result<f64> {
    let op = HeffOperator::from_potential(&fields.grid, species.mass_kg, &fields.condensate_potential_hz())?;
    let req = ModeRequest {
        max_modes: 1,
        cutoff_hz: f64::NEG_INFINITY,
        ..request.clone()
    };
    let pairs = solver.lowest(&op, &req)?;
    Ok(pairs.values[0])
}
