//! Thomas–Fermi ground state of the m_F = 0 condensate and the effective
//! fields seen by the m_F = ±1 fluctuations.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::GridSpec;
use crate::units::{hz_to_joule, joule_to_hz, SpeciesParams, TrapGeometry, HBAR};

#[derive(Debug, Clone, PartialEq)]
pub struct CondensateState {
    pub grid: GridSpec,
    pub mu_hz: f64,
    /// Density n0 on the grid, m^-d.
    pub density: Vec<f64>,
    pub atom_number: f64,
    pub peak_density: f64,
}

impl CondensateState {
    /// Density healing length ħ/√(2m U0 n_peak).
    pub fn healing_length(&self, species: &SpeciesParams) -> f64 {
        HBAR / (2.0 * species.mass_kg * species.u0 * self.peak_density).sqrt()
    }

    /// Spin healing length ħ/√(2m |U1| n_peak); infinite when U1 = 0.
    pub fn spin_healing_length(&self, species: &SpeciesParams) -> f64 {
        HBAR / (2.0 * species.mass_kg * species.u1.abs() * self.peak_density).sqrt()
    }

    /// Peak spin energy |U1| n_peak in Hz.
    pub fn peak_spin_energy_hz(&self, species: &SpeciesParams) -> f64 {
        joule_to_hz(species.u1.abs() * self.peak_density)
    }
}

/// Volume of the d-dimensional unit ball times 2/(d+2): the integral of
/// `1 - |u|²` over the unit ball.
fn tf_shape_integral(dim: usize) -> f64 {
    match dim {
        1 => 4.0 / 3.0,
        2 => PI / 2.0,
        _ => 8.0 * PI / 15.0,
    }
}

/// Closed-form Thomas–Fermi chemical potential (Hz) in the continuum.
pub fn closed_form_mu_hz(species: &SpeciesParams, trap: &TrapGeometry, atom_number: f64) -> f64 {
    match trap {
        TrapGeometry::Harmonic { omega } => {
            let d = omega.len() as f64;
            let prod_omega: f64 = omega.iter().product();
            // N = c_d μ^{1+d/2} (2/m)^{d/2} / (U0 Πω)
            let rhs = atom_number * species.u0 * prod_omega * (species.mass_kg / 2.0).powf(d / 2.0)
                / tf_shape_integral(omega.len());
            joule_to_hz(rhs.powf(1.0 / (1.0 + d / 2.0)))
        }
        TrapGeometry::Box { half_widths_m } => {
            let vol: f64 = half_widths_m.iter().map(|w| 2.0 * w).product();
            joule_to_hz(atom_number * species.u0 / vol)
        }
    }
}

/// Thomas–Fermi radii for chemical potential `mu_hz`; box half-widths for a box.
pub fn thomas_fermi_radii(species: &SpeciesParams, trap: &TrapGeometry, mu_hz: f64) -> Vec<f64> {
    match trap {
        TrapGeometry::Harmonic { omega } => omega
            .iter()
            .map(|w| (2.0 * hz_to_joule(mu_hz) / (species.mass_kg * w * w)).sqrt())
            .collect(),
        TrapGeometry::Box { half_widths_m } => half_widths_m.clone(),
    }
}

/// Default grid for a trap: `margin` times the closed-form Thomas–Fermi
/// radii for a harmonic trap, the box itself for a box.
pub fn grid_for(
    species: &SpeciesParams,
    trap: &TrapGeometry,
    atom_number: f64,
    points: Vec<usize>,
    margin: f64,
) -> Result<GridSpec> {
    match trap {
        TrapGeometry::Harmonic { .. } => {
            let mu = closed_form_mu_hz(species, trap, atom_number);
            GridSpec::enclosing(&thomas_fermi_radii(species, trap, mu), points, margin)
        }
        TrapGeometry::Box { half_widths_m } => GridSpec::new(half_widths_m.clone(), points),
    }
}

fn tf_density(mu_hz: f64, potential_hz: &[f64], u0: f64) -> impl Iterator<Item = f64> + '_ {
    potential_hz.iter().map(move |v| (hz_to_joule(mu_hz - v) / u0).max(0.0))
}

/// Thomas–Fermi ground state normalized to `atom_number` on the grid.
pub fn solve_tf(
    species: &SpeciesParams,
    trap: &TrapGeometry,
    atom_number: f64,
    grid: &GridSpec,
) -> Result<CondensateState> {
    if !(atom_number > 0.0 && atom_number.is_finite()) {
        return Err(Error::validation("atom_number", "atom number must be positive"));
    }
    if species.u0 <= 0.0 {
        return Err(Error::validation("u0", "Thomas–Fermi solution needs U0 > 0"));
    }
    if grid.dim() != trap.dim() {
        return Err(Error::validation(
            "grid.points",
            format!("grid has {} axes, trap has {}", grid.dim(), trap.dim()),
        ));
    }
    let potential = grid.sample(|r| trap.potential_hz(species.mass_kg, r));
    let dv = grid.cell_volume();
    let count = |mu: f64| tf_density(mu, &potential, species.u0).sum::<f64>() * dv;

    let mu = match trap {
        TrapGeometry::Box { .. } => joule_to_hz(atom_number * species.u0 / (grid.len() as f64 * dv)),
        TrapGeometry::Harmonic { .. } => {
            let estimate = closed_form_mu_hz(species, trap, atom_number);
            let (mut lo, mut hi) = (0.0, 10.0 * estimate);
            if count(hi) < atom_number {
                return Err(Error::Domain(format!(
                    "grid cannot hold {atom_number} atoms below μ = {hi:.3} Hz; increase the grid margin"
                )));
            }
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if count(mid) < atom_number {
                    lo = mid;
                } else {
                    hi = mid;
                }
                if (count(hi) - atom_number).abs() <= 1e-10 * atom_number {
                    break;
                }
            }
            // count is piecewise linear in μ; one secant step on the bracket
            // lands on the target up to rounding.
            let (clo, chi) = (count(lo), count(hi));
            if chi > clo {
                lo + (atom_number - clo) * (hi - lo) / (chi - clo)
            } else {
                hi
            }
        }
    };

    let density: Vec<f64> = tf_density(mu, &potential, species.u0).collect();
    if matches!(trap, TrapGeometry::Harmonic { .. }) && (0..grid.len()).any(|i| density[i] > 0.0 && grid.is_boundary(i))
    {
        return Err(Error::Domain(
            "Thomas–Fermi surface reaches the grid edge; increase the grid margin".into(),
        ));
    }
    let peak_density = density.iter().cloned().fold(0.0, f64::max);
    Ok(CondensateState {
        grid: grid.clone(),
        mu_hz: mu,
        density,
        atom_number,
        peak_density,
    })
}

/// Which chemical potential sets the zero of the fluctuation energies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EnergyReference {
    /// μ from the Thomas–Fermi normalization.
    #[default]
    ThomasFermi,
    /// μ shifted to the lowest eigenvalue of −ħ²∇²/2m + V + U0 n0 on the
    /// grid, so the m_F = 0 phase mode sits at zero energy.
    Goldstone,
}

/// Effective trap and pair coupling for the m_F = ±1 components, in Hz.
#[derive(Debug, Clone, PartialEq)]
pub struct EffectiveFields {
    pub grid: GridSpec,
    /// V + (U0 + U1) n0 − μ_ref
    pub v_eff_hz: Vec<f64>,
    /// U1 n0
    pub omega_eff_hz: Vec<f64>,
    /// Chemical potential used as energy zero.
    pub mu_reference_hz: f64,
}

impl EffectiveFields {
    /// Fields with the energy zero moved down by `offset_hz` (μ_ref → μ_ref + offset).
    pub fn shifted(&self, offset_hz: f64) -> EffectiveFields {
        EffectiveFields {
            grid: self.grid.clone(),
            v_eff_hz: self.v_eff_hz.iter().map(|v| v - offset_hz).collect(),
            omega_eff_hz: self.omega_eff_hz.clone(),
            mu_reference_hz: self.mu_reference_hz + offset_hz,
        }
    }

    /// Same fields with Ω_eff multiplied by `factor`.
    pub fn with_coupling_scaled(&self, factor: f64) -> EffectiveFields {
        EffectiveFields {
            omega_eff_hz: self.omega_eff_hz.iter().map(|o| o * factor).collect(),
            ..self.clone()
        }
    }

    /// Potential of the condensate's own linearized operator minus the
    /// kinetic term: V + U0 n0 − μ_ref.
    pub fn condensate_potential_hz(&self) -> Vec<f64> {
        self.v_eff_hz
            .iter()
            .zip(&self.omega_eff_hz)
            .map(|(v, o)| v - o)
            .collect()
    }
}

pub fn effective_fields(
    species: &SpeciesParams,
    trap: &TrapGeometry,
    state: &CondensateState,
) -> Result<EffectiveFields> {
    effective_fields_with_mu(species, trap, state, state.mu_hz)
}

pub fn effective_fields_with_mu(
    species: &SpeciesParams,
    trap: &TrapGeometry,
    state: &CondensateState,
    mu_reference_hz: f64,
) -> Result<EffectiveFields> {
    if state.density.len() != state.grid.len() || state.grid.dim() != trap.dim() {
        return Err(Error::validation(
            "state",
            "condensate density does not match the grid or trap",
        ));
    }
    let potential = state.grid.sample(|r| trap.potential_hz(species.mass_kg, r));
    let v_eff_hz = potential
        .iter()
        .zip(&state.density)
        .map(|(v, n)| v + joule_to_hz((species.u0 + species.u1) * n) - mu_reference_hz)
        .collect();
    let omega_eff_hz = state.density.iter().map(|n| joule_to_hz(species.u1 * n)).collect();
    Ok(EffectiveFields {
        grid: state.grid.clone(),
        v_eff_hz,
        omega_eff_hz,
        mu_reference_hz,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::units::{ATOMIC_MASS_UNIT, BOHR_RADIUS};

    fn rb87_f2() -> SpeciesParams {
        SpeciesParams::build(
            "rb87_f2",
            86.909_180_527 * ATOMIC_MASS_UNIT,
            2,
            &[
                (0, 87.93 * BOHR_RADIUS),
                (2, 91.28 * BOHR_RADIUS),
                (4, 99.18 * BOHR_RADIUS),
            ],
            None,
        )
        .unwrap()
    }

    #[test]
    fn box_trap_is_flat() {
        let s = rb87_f2();
        let trap = TrapGeometry::boxed(&[5e-6, 5e-6, 5e-6]).unwrap();
        let grid = GridSpec::new(vec![5e-6; 3], vec![8, 8, 8]).unwrap();
        let st = solve_tf(&s, &trap, 1e5, &grid).unwrap();
        let vol = grid.len() as f64 * grid.cell_volume();
        let n = 1e5 / vol;
        for d in &st.density {
            assert!((d - n).abs() <= 1e-12 * n);
        }
        assert!((st.mu_hz - joule_to_hz(1e5 * s.u0 / vol)).abs() <= 1e-12 * st.mu_hz);
        assert!((grid.integrate(&st.density) - 1e5).abs() <= 1e-9);
    }

    #[test]
    fn closed_form_matches_textbook_3d() {
        let s = rb87_f2();
        let trap = TrapGeometry::harmonic_hz(&[176.0, 132.0, 46.0]).unwrap();
        let n = 7e4;
        let wbar = trap.mean_omega().unwrap();
        let abar = (HBAR / (s.mass_kg * wbar)).sqrt();
        let a = s.u0 * s.mass_kg / (4.0 * PI * HBAR * HBAR);
        let textbook = joule_to_hz(0.5 * HBAR * wbar * (15.0 * n * a / abar).powf(0.4));
        let mu = closed_form_mu_hz(&s, &trap, n);
        assert!((mu - textbook).abs() <= 1e-10 * textbook);
    }

    #[test]
    fn harmonic_normalization_and_support() {
        let s = rb87_f2();
        let trap = TrapGeometry::harmonic_hz(&[176.0, 132.0, 46.0]).unwrap();
        let grid = grid_for(&s, &trap, 7e4, vec![24, 24, 32], 1.5).unwrap();
        let st = solve_tf(&s, &trap, 7e4, &grid).unwrap();
        assert!((grid.integrate(&st.density) - 7e4).abs() <= 1e-6 * 7e4);
        let pot = grid.sample(|r| trap.potential_hz(s.mass_kg, r));
        for (n, v) in st.density.iter().zip(&pot) {
            assert!(*n >= 0.0);
            if *v >= st.mu_hz {
                assert_eq!(*n, 0.0);
            }
        }
    }

    #[test]
    fn small_grid_is_a_domain_error() {
        let s = rb87_f2();
        let trap = TrapGeometry::harmonic_hz(&[176.0, 132.0, 46.0]).unwrap();
        let mu = closed_form_mu_hz(&s, &trap, 7e4);
        let r = thomas_fermi_radii(&s, &trap, mu);
        let grid = GridSpec::new(r.iter().map(|x| 0.7 * x).collect(), vec![16, 16, 16]).unwrap();
        assert!(matches!(solve_tf(&s, &trap, 7e4, &grid), Err(Error::Domain(_))));
    }

    #[test]
    fn effective_fields_identities() {
        let s = rb87_f2();
        let trap = TrapGeometry::harmonic_hz(&[176.0, 132.0, 46.0]).unwrap();
        let grid = grid_for(&s, &trap, 7e4, vec![21, 21, 21], 1.5).unwrap();
        let st = solve_tf(&s, &trap, 7e4, &grid).unwrap();
        let f = effective_fields(&s, &trap, &st).unwrap();
        let pot = grid.sample(|r| trap.potential_hz(s.mass_kg, r));
        let ratio = s.u1 / s.u0;
        for i in 0..grid.len() {
            if st.density[i] > 0.0 {
                let expect = ratio * (st.mu_hz - pot[i]);
                assert!((f.v_eff_hz[i] - expect).abs() <= 1e-9 * st.mu_hz);
            } else {
                assert!((f.v_eff_hz[i] - (pot[i] - st.mu_hz)).abs() <= 1e-9 * st.mu_hz);
                assert_eq!(f.omega_eff_hz[i], 0.0);
            }
            assert!(f.v_eff_hz[i] >= -1e-9 * st.mu_hz);
            assert!((f.omega_eff_hz[i] - joule_to_hz(s.u1 * st.density[i])).abs() <= 1e-15);
        }
        // Mexican hat: the centre node (odd counts) sits at (U1/U0) μ, above the rim.
        let centre = grid.len() / 2;
        assert!((f.v_eff_hz[centre] - ratio * st.mu_hz).abs() <= 1e-9 * st.mu_hz);
        let min = f.v_eff_hz.iter().cloned().fold(f64::INFINITY, f64::min);
        assert!(min < f.v_eff_hz[centre]);
        let peak_omega = f.omega_eff_hz.iter().cloned().fold(0.0, f64::max);
        assert!((peak_omega - joule_to_hz(s.u1 * st.peak_density)).abs() <= 1e-12 * peak_omega);
    }

    #[test]
    fn zero_spin_coupling_flattens_inside() {
        let s = SpeciesParams::from_interactions("u1=0", 1.44e-25, 5e-51, 0.0).unwrap();
        let trap = TrapGeometry::harmonic_hz(&[100.0]).unwrap();
        let grid = grid_for(&s, &trap, 1e3, vec![101], 1.5).unwrap();
        let st = solve_tf(&s, &trap, 1e3, &grid).unwrap();
        let f = effective_fields(&s, &trap, &st).unwrap();
        let pot = grid.sample(|r| trap.potential_hz(s.mass_kg, r));
        for i in 0..grid.len() {
            let expect = (pot[i] - st.mu_hz).max(0.0);
            assert!((f.v_eff_hz[i] - expect).abs() <= 1e-9 * st.mu_hz);
        }
    }
}
