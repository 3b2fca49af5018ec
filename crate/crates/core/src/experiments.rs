//! Scenario layer: prepared bases, Λ(q) sweeps and the fits built on them.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bdg::{coupling_matrix, BdgSolver, BdgSolverRegistry, CouplingMatrix, REAL_TOLERANCE_HZ};
use crate::config::ScenarioConfig;
use crate::error::{Error, Result};
use crate::meanfield::{effective_fields, grid_for, solve_tf, CondensateState, EffectiveFields, EnergyReference};
use crate::modes::{
    discretize_heff, goldstone_offset_hz, solve_lowest_modes, ModeBasis, ModeRequest, ModeSolverRegistry,
};
use crate::units::{SpeciesParams, TrapGeometry};

/// Environment variable overriding the sweep worker count.
pub const WORKERS_ENV: &str = "SPINOR_WORKERS";

/// Everything that does not depend on q, computed once per scenario.
#[derive(Debug, Clone)]
pub struct PreparedScenario {
    pub species: SpeciesParams,
    pub trap: TrapGeometry,
    pub state: CondensateState,
    pub fields: EffectiveFields,
    /// Shift applied for the Goldstone energy reference.
    pub goldstone_offset_hz: Option<f64>,
    pub basis: ModeBasis,
    pub coupling: CouplingMatrix,
}

impl PreparedScenario {
    /// Peak spin energy |U1| n_peak in Hz.
    pub fn peak_spin_energy_hz(&self) -> f64 {
        self.state.peak_spin_energy_hz(&self.species)
    }
}

/// Default mode cutoff: the largest |q| swept plus four times the peak spin
/// energy.
pub fn default_cutoff_hz(config: &ScenarioConfig, peak_spin_energy_hz: f64) -> f64 {
    config.sweep.max_abs_q() + 4.0 * peak_spin_energy_hz
}

pub fn prepare(config: &ScenarioConfig) -> Result<PreparedScenario> {
    prepare_with_atoms(config, config.condensate.atom_number)
}

/// Runs the q-independent pipeline: Thomas–Fermi state, effective fields,
/// mode basis and coupling matrix.
pub fn prepare_with_atoms(config: &ScenarioConfig, atom_number: f64) -> Result<PreparedScenario> {
    config.validate()?;
    // one eigensolve per thread; parallelism lives in the sweep
    faer::set_global_parallelism(faer::Par::Seq);
    let species = config.species_params()?;
    let trap = config.trap_geometry()?;
    let grid = grid_for(
        &species,
        &trap,
        atom_number,
        config.grid.points.clone(),
        config.grid.margin,
    )?;
    let state = solve_tf(&species, &trap, atom_number, &grid)?;
    let mut fields = effective_fields(&species, &trap, &state)?;

    let registry = ModeSolverRegistry::default();
    let cutoff = config
        .basis
        .cutoff_hz
        .unwrap_or_else(|| default_cutoff_hz(config, state.peak_spin_energy_hz(&species)));
    let request = ModeRequest {
        max_modes: config.basis.max_modes.unwrap_or(800),
        cutoff_hz: cutoff,
        tolerance: config.basis.tolerance,
        max_iterations: config.basis.max_iterations,
        seed: config.basis.seed,
    };

    let goldstone_offset_hz = match config.condensate.energy_reference {
        EnergyReference::ThomasFermi => None,
        EnergyReference::Goldstone => {
            let probe =
                crate::modes::HeffOperator::from_potential(&grid, species.mass_kg, &fields.condensate_potential_hz())?;
            let solver = registry.get(&config.basis.solver, &probe)?;
            let offset = goldstone_offset_hz(&fields, &species, solver.as_ref(), &request)?;
            fields = fields.shifted(offset);
            Some(offset)
        }
    };

    let op = discretize_heff(&fields, &species, &grid)?;
    let solver = registry.get(&config.basis.solver, &op)?;
    let basis = solve_lowest_modes(&op, solver.as_ref(), &request)?;
    let coupling = coupling_matrix(&basis, &fields)?;
    Ok(PreparedScenario {
        species,
        trap,
        state,
        fields,
        goldstone_offset_hz,
        basis,
        coupling,
    })
}

/// A local extremum of the sampled curve, refined by a parabola through
/// the sample and its two neighbours.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Extremum {
    pub q_hz: f64,
    pub lambda_hz: f64,
    /// Index of the sample that is the discrete extremum.
    pub index: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub q_hz: Vec<f64>,
    pub lambda_hz: Vec<f64>,
    pub resonances: Vec<Extremum>,
    pub minima: Vec<Extremum>,
    pub q_tilde_cr_hz: Option<f64>,
}

impl SweepResult {
    /// Builds the result from samples and detects extrema; the arc fit is
    /// attempted and left empty if it fails.
    pub fn from_samples(q_hz: Vec<f64>, lambda_hz: Vec<f64>) -> Result<Self> {
        if q_hz.len() != lambda_hz.len() {
            return Err(Error::validation("sweep", "q and Λ sample counts differ"));
        }
        if q_hz.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::validation("sweep", "q samples must be strictly increasing"));
        }
        let resonances = local_extrema(&q_hz, &lambda_hz, true);
        let minima = local_extrema(&q_hz, &lambda_hz, false);
        let mut sweep = SweepResult {
            q_hz,
            lambda_hz,
            resonances,
            minima,
            q_tilde_cr_hz: None,
        };
        sweep.q_tilde_cr_hz = fit_q_tilde_cr(&sweep).ok();
        Ok(sweep)
    }

    /// Λ at `q` by linear interpolation between samples.
    pub fn lambda_at(&self, q: f64) -> Option<f64> {
        let k = self.q_hz.windows(2).position(|w| w[0] <= q && q <= w[1])?;
        let (q0, q1) = (self.q_hz[k], self.q_hz[k + 1]);
        let t = (q - q0) / (q1 - q0);
        Some(self.lambda_hz[k] * (1.0 - t) + self.lambda_hz[k + 1] * t)
    }

    /// The resonance nearest the stable side: the peak of the low-|q| lobe.
    pub fn first_resonance(&self) -> Option<Extremum> {
        let unstable_side_negative = self.unstable_side_negative();
        let peaks = self.resonances.iter().copied();
        if unstable_side_negative {
            peaks.max_by(|a, b| a.q_hz.total_cmp(&b.q_hz))
        } else {
            peaks.min_by(|a, b| a.q_hz.total_cmp(&b.q_hz))
        }
    }

    /// Whether the instability sits at negative q (the U1 > 0 case).
    fn unstable_side_negative(&self) -> bool {
        let weight: f64 = self.q_hz.iter().zip(&self.lambda_hz).map(|(q, l)| q * l).sum();
        weight <= 0.0
    }

    /// Number of separate q-intervals where Λ ≥ `fraction` · max Λ.
    pub fn maximum_regions(&self, fraction: f64) -> usize {
        let top = self.lambda_hz.iter().cloned().fold(0.0, f64::max);
        if top < REAL_TOLERANCE_HZ {
            return 0;
        }
        let mut regions = 0;
        let mut inside = false;
        for l in &self.lambda_hz {
            let now = *l >= fraction * top;
            if now && !inside {
                regions += 1;
            }
            inside = now;
        }
        regions
    }
}

fn parabolic_vertex(q: [f64; 3], y: [f64; 3]) -> (f64, f64) {
    let (d1, d2) = (q[1] - q[0], q[2] - q[1]);
    let s1 = (y[1] - y[0]) / d1;
    let s2 = (y[2] - y[1]) / d2;
    let curvature = (s2 - s1) / (q[2] - q[0]);
    if curvature == 0.0 {
        return (q[1], y[1]);
    }
    // y = y1 + b (x − q1) + c (x − q1)², with b the centred slope
    let b = s1 + curvature * d1;
    let dx = (-b / (2.0 * curvature)).clamp(-d1, d2);
    (q[1] + dx, y[1] + b * dx + curvature * dx * dx)
}

fn local_extrema(q: &[f64], y: &[f64], maxima: bool) -> Vec<Extremum> {
    let mut out = Vec::new();
    for k in 1..q.len().saturating_sub(1) {
        let (a, b, c) = (y[k - 1], y[k], y[k + 1]);
        let hit = if maxima {
            b > a && b > c && b > REAL_TOLERANCE_HZ
        } else {
            b < a && b < c
        };
        if hit {
            let (qv, yv) = parabolic_vertex([q[k - 1], q[k], q[k + 1]], [a, b, c]);
            out.push(Extremum {
                q_hz: qv,
                lambda_hz: yv,
                index: k,
            });
        }
    }
    out
}

fn worker_pool() -> Result<rayon::ThreadPool> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var(WORKERS_ENV) {
        let n: usize = v
            .trim()
            .parse()
            .map_err(|_| Error::config(WORKERS_ENV, format!("expected a worker count, got `{v}`")))?;
        builder = builder.num_threads(n);
    }
    builder
        .build()
        .map_err(|e| Error::Numeric(format!("cannot start worker pool: {e}")))
}

/// Λ(q) on `q_grid` from a shared basis and coupling.
pub fn sweep_lambda(prepared: &PreparedScenario, solver: &dyn BdgSolver, q_grid: &[f64]) -> Result<SweepResult> {
    if q_grid.len() < 16 {
        return Err(Error::validation("sweep.steps", "a sweep needs at least 16 q values"));
    }
    if q_grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::validation("sweep", "q grid must be strictly increasing"));
    }
    let pool = worker_pool()?;
    let lambdas: Vec<f64> = pool.install(|| {
        q_grid
            .par_iter()
            .map(|&q| {
                solver
                    .spectrum(&prepared.basis.energies_hz, &prepared.coupling, q)
                    .map(|s| s.lambda_hz)
                    .map_err(|e| e.at_q(q))
            })
            .collect::<Result<Vec<f64>>>()
    })?;
    SweepResult::from_samples(q_grid.to_vec(), lambdas)
}

/// Prepares the scenario and sweeps its configured q range with the
/// configured BdG solver.
pub fn run_sweep(config: &ScenarioConfig) -> Result<(PreparedScenario, SweepResult)> {
    let prepared = prepare(config)?;
    let solver = BdgSolverRegistry::default().get(&config.bdg.solver)?;
    let sweep = sweep_lambda(&prepared, solver.as_ref(), &config.sweep.q_grid())?;
    Ok((prepared, sweep))
}

fn arc(q: f64, q_tilde: f64) -> f64 {
    (q_tilde * q_tilde - (q - q_tilde).powi(2)).max(0.0).sqrt()
}

/// Least-squares fit of Λ ≈ √(q̃² − (q − q̃)²) over the low-|q| lobe: the
/// samples between q = 0 and the first resonance.
pub fn fit_q_tilde_cr(sweep: &SweepResult) -> Result<f64> {
    let negative = sweep.unstable_side_negative();
    let edge = match sweep.first_resonance() {
        Some(peak) => sweep.q_hz[peak.index],
        None => {
            if negative {
                f64::NEG_INFINITY
            } else {
                f64::INFINITY
            }
        }
    };
    let points: Vec<(f64, f64)> = sweep
        .q_hz
        .iter()
        .zip(&sweep.lambda_hz)
        .filter(|(q, _)| {
            if negative {
                **q >= edge && **q <= 0.0
            } else {
                **q <= edge && **q >= 0.0
            }
        })
        .map(|(q, l)| (*q, *l))
        .collect();
    if !points.iter().any(|(_, l)| *l > REAL_TOLERANCE_HZ) {
        return Err(Error::Fit("no unstable samples in the low-|q| lobe".into()));
    }
    let span = points.iter().map(|(q, _)| q.abs()).fold(0.0, f64::max);
    let sign = if negative { -1.0 } else { 1.0 };
    let cost = |t: f64| -> f64 { points.iter().map(|(q, l)| (arc(*q, t) - l).powi(2)).sum() };

    // coarse scan over |q̃| in (0, 4·span], then golden-section refinement
    let samples = 800;
    let mut best = (f64::INFINITY, 0.0);
    for k in 1..=samples {
        let t = sign * 4.0 * span * k as f64 / samples as f64;
        let c = cost(t);
        if c < best.0 {
            best = (c, t);
        }
    }
    let step = 4.0 * span / samples as f64;
    let (mut a, mut b) = (best.1 - step, best.1 + step);
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = b - g * (b - a);
    let mut x2 = a + g * (b - a);
    let (mut f1, mut f2) = (cost(x1), cost(x2));
    for _ in 0..200 {
        if (b - a).abs() <= 1e-13 * span.max(1.0) {
            break;
        }
        if f1 < f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - g * (b - a);
            f1 = cost(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + g * (b - a);
            f2 = cost(x2);
        }
    }
    Ok(0.5 * (a + b))
}

/// Power law y = c·x^γ fitted in log-log space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerLawFit {
    pub gamma: f64,
    pub gamma_stderr: f64,
    pub log_prefactor: f64,
    /// ln y − fit, per point.
    pub residuals: Vec<f64>,
}

pub fn power_law_fit(x: &[f64], y: &[f64]) -> Result<PowerLawFit> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(Error::Fit("need at least two (x, y) pairs".into()));
    }
    if x.iter().chain(y).any(|v| !(*v > 0.0)) {
        return Err(Error::Fit("power-law fit needs positive data".into()));
    }
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let (slope, intercept, residuals) = linear_fit(&lx, &ly)?;
    let n = lx.len() as f64;
    let mean = lx.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|v| (v - mean).powi(2)).sum();
    let stderr = if lx.len() > 2 {
        (residuals.iter().map(|r| r * r).sum::<f64>() / (n - 2.0) / sxx).sqrt()
    } else {
        0.0
    };
    Ok(PowerLawFit {
        gamma: slope,
        gamma_stderr: stderr,
        log_prefactor: intercept,
        residuals,
    })
}

fn linear_fit(x: &[f64], y: &[f64]) -> Result<(f64, f64, Vec<f64>)> {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::Fit("all abscissae coincide".into()));
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residuals = x.iter().zip(y).map(|(a, b)| b - (intercept + slope * a)).collect();
    Ok((slope, intercept, residuals))
}

/// Coefficient of determination of a straight-line fit.
pub fn linear_r_squared(x: &[f64], y: &[f64]) -> Result<f64> {
    let (_, _, residuals) = linear_fit(x, y)?;
    let my = y.iter().sum::<f64>() / y.len() as f64;
    let total: f64 = y.iter().map(|v| (v - my).powi(2)).sum();
    let rss: f64 = residuals.iter().map(|r| r * r).sum();
    Ok(if total == 0.0 { 1.0 } else { 1.0 - rss / total })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingPoint {
    pub atom_number: f64,
    pub peak_density_m3: f64,
    /// |q| of the low-|q| resonance.
    pub q_res_hz: f64,
    pub q_tilde_cr_hz: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingFit {
    pub points: Vec<ScalingPoint>,
    pub fit: PowerLawFit,
    /// R² of q̃_cr against peak density, when every point has a q̃_cr.
    pub q_tilde_density_r2: Option<f64>,
}

/// Sweeps the scenario at each atom number and fits q_res ∝ N^γ.
pub fn scaling_fit(config: &ScenarioConfig, atom_numbers: &[f64]) -> Result<ScalingFit> {
    if atom_numbers.len() < 2 {
        return Err(Error::validation(
            "scaling.atom_numbers",
            "need at least two atom numbers",
        ));
    }
    let solver = BdgSolverRegistry::default().get(&config.bdg.solver)?;
    let q_grid = config.sweep.q_grid();
    let mut order: Vec<f64> = atom_numbers.to_vec();
    order.sort_by(f64::total_cmp);
    let mut points = Vec::new();
    let mut failures = Vec::new();
    for &n in &order {
        let prepared = prepare_with_atoms(config, n)?;
        let sweep = sweep_lambda(&prepared, solver.as_ref(), &q_grid)?;
        match sweep.first_resonance() {
            Some(peak) => points.push(ScalingPoint {
                atom_number: n,
                peak_density_m3: prepared.state.peak_density,
                q_res_hz: peak.q_hz.abs(),
                q_tilde_cr_hz: sweep.q_tilde_cr_hz,
            }),
            None => failures.push(n),
        }
    }
    if !failures.is_empty() {
        return Err(Error::Fit(format!(
            "no low-|q| resonance for atom numbers {failures:?}; found for {:?}",
            points.iter().map(|p| p.atom_number).collect::<Vec<_>>()
        )));
    }
    let x: Vec<f64> = points.iter().map(|p| p.atom_number).collect();
    let y: Vec<f64> = points.iter().map(|p| p.q_res_hz).collect();
    let fit = power_law_fit(&x, &y)?;
    let q_tilde_density_r2 = if points.iter().all(|p| p.q_tilde_cr_hz.is_some()) {
        let d: Vec<f64> = points.iter().map(|p| p.peak_density_m3).collect();
        let t: Vec<f64> = points.iter().map(|p| p.q_tilde_cr_hz.unwrap_or(0.0)).collect();
        linear_r_squared(&d, &t).ok()
    } else {
        None
    };
    Ok(ScalingFit {
        points,
        fit,
        q_tilde_density_r2,
    })
}

/// Qualitative pair population after time `t_s` for the dominant mode
/// pair, seeded with `seed_atoms` plus vacuum. Valid only while the m_F = 0
/// condensate is undepleted; it is not an absolute prediction.
pub fn growth_estimate(lambda_hz: f64, t_s: f64, seed_atoms: f64) -> f64 {
    let s = (2.0 * std::f64::consts::PI * lambda_hz * t_s).sinh();
    (seed_atoms + 0.5) * s * s * 2.0
}

/// Plateau and decay diagnostics of an F = 1 sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlateauReport {
    pub plateau_min_hz: f64,
    pub plateau_max_hz: f64,
    pub plateau_mean_hz: f64,
    /// max |Λ − mean| / mean over the plateau window.
    pub plateau_spread: f64,
    pub lambda_at_minus5_hz: f64,
    /// Λ(−5 Hz) / plateau mean.
    pub decay_ratio: f64,
    /// Separate regions with Λ ≥ 0.9 max Λ.
    pub maximum_regions: usize,
}

pub fn plateau_report(sweep: &SweepResult, window: (f64, f64)) -> Result<PlateauReport> {
    let inside: Vec<f64> = sweep
        .q_hz
        .iter()
        .zip(&sweep.lambda_hz)
        .filter(|(q, _)| **q > window.0 && **q < window.1)
        .map(|(_, l)| *l)
        .collect();
    if inside.is_empty() {
        return Err(Error::Fit("no samples inside the plateau window".into()));
    }
    let mean = inside.iter().sum::<f64>() / inside.len() as f64;
    let lo = inside.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = inside.iter().cloned().fold(0.0, f64::max);
    let spread = if mean > 0.0 {
        inside.iter().map(|l| (l - mean).abs()).fold(0.0, f64::max) / mean
    } else {
        f64::INFINITY
    };
    let at = sweep
        .lambda_at(-5.0)
        .ok_or_else(|| Error::Fit("sweep does not cover q = −5 Hz".into()))?;
    Ok(PlateauReport {
        plateau_min_hz: lo,
        plateau_max_hz: hi,
        plateau_mean_hz: mean,
        plateau_spread: spread,
        lambda_at_minus5_hz: at,
        decay_ratio: if mean > 0.0 { at / mean } else { f64::INFINITY },
        maximum_regions: sweep.maximum_regions(0.9),
    })
}

/// The F = 1 elongated-trap scenario: sweep plus plateau report over
/// 0 < q < 6 Hz.
pub fn scenario_f1_leslie(config: &ScenarioConfig) -> Result<(SweepResult, PlateauReport)> {
    let species = config.species_params()?;
    if species.u1 >= 0.0 {
        return Err(Error::config("species", "the F = 1 scenario needs U1 < 0"));
    }
    let (_, sweep) = run_sweep(config)?;
    let report = plateau_report(&sweep, (0.0, 6.0))?;
    Ok((sweep, report))
}
