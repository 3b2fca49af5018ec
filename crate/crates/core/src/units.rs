//! Physical constants, species and trap descriptions, and the quadratic
//! Zeeman conversion.
//!
//! Energies that leave this crate are expressed in Hz, i.e. the SI energy
//! divided by Planck's constant. Lengths stay in metres.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Planck constant, J·s (exact SI value).
pub const PLANCK: f64 = 6.626_070_15e-34;
/// Reduced Planck constant, J·s.
pub const HBAR: f64 = PLANCK / (2.0 * PI);
/// Bohr radius, m.
pub const BOHR_RADIUS: f64 = 5.291_772_109_03e-11;
/// Atomic mass unit, kg.
pub const ATOMIC_MASS_UNIT: f64 = 1.660_539_066_60e-27;

#[inline]
pub fn hz_to_joule(e_hz: f64) -> f64 {
    e_hz * PLANCK
}

#[inline]
pub fn joule_to_hz(e_j: f64) -> f64 {
    e_j / PLANCK
}

/// Contact coupling g = 4πħ²a/m for one collision channel, J·m³.
pub fn contact_coupling(scattering_length_m: f64, mass_kg: f64) -> f64 {
    4.0 * PI * HBAR * HBAR * scattering_length_m / mass_kg
}

/// `ħ²/(2m)` in Hz·m².
pub fn kinetic_prefactor_hz(mass_kg: f64) -> f64 {
    joule_to_hz(HBAR * HBAR / (2.0 * mass_kg))
}

/// Atomic species in a given hyperfine manifold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpeciesParams {
    pub name: String,
    pub mass_kg: f64,
    pub hyperfine_f: u8,
    /// Total-spin channel → s-wave scattering length (m). Even channels only.
    pub scattering_lengths: BTreeMap<u8, f64>,
    /// Density interaction strength, J·m^d.
    pub u0: f64,
    /// Spin interaction strength, J·m^d.
    pub u1: f64,
    /// Quadratic Zeeman coefficient in Hz/G², signed.
    pub qze_hz_per_gauss2: Option<f64>,
}

impl SpeciesParams {
    /// Builds a species from its even-channel scattering lengths.
    ///
    /// F = 1 needs channels {0, 2}; F = 2 needs {0, 2, 4}. Input order does
    /// not matter, the lengths are keyed by channel.
    pub fn build(
        name: &str,
        mass_kg: f64,
        hyperfine_f: u8,
        lengths: &[(u8, f64)],
        qze_hz_per_gauss2: Option<f64>,
    ) -> Result<Self> {
        if !(mass_kg > 0.0 && mass_kg.is_finite()) {
            return Err(Error::validation("mass_kg", "mass must be positive"));
        }
        let channels: &[u8] = match hyperfine_f {
            1 => &[0, 2],
            2 => &[0, 2, 4],
            f => {
                return Err(Error::config(
                    "F",
                    format!("unsupported hyperfine level {f}, expected 1 or 2"),
                ))
            }
        };
        if lengths.len() != channels.len() {
            return Err(Error::config(
                "scattering_lengths",
                format!(
                    "F = {hyperfine_f} needs {} channels, got {}",
                    channels.len(),
                    lengths.len()
                ),
            ));
        }
        let mut map = BTreeMap::new();
        for &(channel, a) in lengths {
            if !channels.contains(&channel) {
                return Err(Error::config(
                    "scattering_lengths",
                    format!("channel {channel} is not an allowed even channel for F = {hyperfine_f}"),
                ));
            }
            if !(a > 0.0 && a.is_finite()) {
                return Err(Error::validation(
                    format!("a{channel}_m"),
                    "scattering length must be positive",
                ));
            }
            if map.insert(channel, a).is_some() {
                return Err(Error::config(
                    "scattering_lengths",
                    format!("channel {channel} given twice"),
                ));
            }
        }
        let g = |ch: u8| contact_coupling(map[&ch], mass_kg);
        let (u0, u1) = match hyperfine_f {
            1 => ((g(0) + 2.0 * g(2)) / 3.0, (g(2) - g(0)) / 3.0),
            _ => (
                (7.0 * g(0) + 10.0 * g(2) + 18.0 * g(4)) / 35.0,
                (-7.0 * g(0) - 5.0 * g(2) + 12.0 * g(4)) / 35.0,
            ),
        };
        if u0 <= 0.0 {
            return Err(Error::validation("u0", "density interaction must be repulsive"));
        }
        Ok(SpeciesParams {
            name: name.to_string(),
            mass_kg,
            hyperfine_f,
            scattering_lengths: map,
            u0,
            u1,
            qze_hz_per_gauss2,
        })
    }

    /// Species given directly by its interaction strengths. Used for reduced
    /// one- and two-dimensional models where the couplings carry J·m^d units.
    pub fn from_interactions(name: &str, mass_kg: f64, u0: f64, u1: f64) -> Result<Self> {
        if !(mass_kg > 0.0 && mass_kg.is_finite()) {
            return Err(Error::validation("mass_kg", "mass must be positive"));
        }
        if !(u0 > 0.0) {
            return Err(Error::validation("u0", "density interaction must be repulsive"));
        }
        Ok(SpeciesParams {
            name: name.to_string(),
            mass_kg,
            hyperfine_f: 0,
            scattering_lengths: BTreeMap::new(),
            u0,
            u1,
            qze_hz_per_gauss2: None,
        })
    }

    /// Quadratic Zeeman energy for field `b_gauss`.
    pub fn b_to_q(&self, b_gauss: f64) -> Result<f64> {
        let c = self
            .qze_hz_per_gauss2
            .ok_or_else(|| Error::config("qze_hz_per_gauss2", "species has no quadratic Zeeman coefficient"))?;
        Ok(c * b_gauss * b_gauss)
    }

    /// `ħ²/(2m)` in Hz·m².
    pub fn kinetic_prefactor_hz(&self) -> f64 {
        kinetic_prefactor_hz(self.mass_kg)
    }
}

/// Free-function form of [`SpeciesParams::b_to_q`].
pub fn b_to_q(b_gauss: f64, species: &SpeciesParams) -> Result<f64> {
    species.b_to_q(b_gauss)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TrapGeometry {
    /// Angular trap frequencies ω (rad/s), one per active axis.
    Harmonic { omega: Vec<f64> },
    /// Hard-wall box, V = 0 for |x_i| < w_i.
    Box { half_widths_m: Vec<f64> },
}

impl TrapGeometry {
    pub fn harmonic_hz(frequencies_hz: &[f64]) -> Result<Self> {
        let trap = TrapGeometry::Harmonic {
            omega: frequencies_hz.iter().map(|f| 2.0 * PI * f).collect(),
        };
        trap.validate()?;
        Ok(trap)
    }

    pub fn boxed(half_widths_m: &[f64]) -> Result<Self> {
        let trap = TrapGeometry::Box {
            half_widths_m: half_widths_m.to_vec(),
        };
        trap.validate()?;
        Ok(trap)
    }

    pub fn validate(&self) -> Result<()> {
        let (field, values) = match self {
            TrapGeometry::Harmonic { omega } => ("trap.frequencies_hz", omega),
            TrapGeometry::Box { half_widths_m } => ("trap.half_widths_m", half_widths_m),
        };
        if values.is_empty() || values.len() > 3 {
            return Err(Error::validation(
                field,
                format!("expected 1 to 3 axes, got {}", values.len()),
            ));
        }
        if values.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
            return Err(Error::validation(field, "all entries must be strictly positive"));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        match self {
            TrapGeometry::Harmonic { omega } => omega.len(),
            TrapGeometry::Box { half_widths_m } => half_widths_m.len(),
        }
    }

    /// Potential energy in Hz at position `r` (metres). Zero everywhere inside
    /// a box; the walls are imposed by the grid boundary.
    pub fn potential_hz(&self, mass_kg: f64, r: &[f64]) -> f64 {
        match self {
            TrapGeometry::Harmonic { omega } => {
                let e: f64 = omega.iter().zip(r).map(|(w, x)| 0.5 * mass_kg * w * w * x * x).sum();
                joule_to_hz(e)
            }
            TrapGeometry::Box { .. } => 0.0,
        }
    }

    /// Geometric-mean angular frequency for harmonic traps.
    pub fn mean_omega(&self) -> Option<f64> {
        match self {
            TrapGeometry::Harmonic { omega } => {
                let p: f64 = omega.iter().product();
                Some(p.powf(1.0 / omega.len() as f64))
            }
            TrapGeometry::Box { .. } => None,
        }
    }
}

/// Quadratic Zeeman setting.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZeemanConfig {
    pub q_hz: f64,
    pub b_gauss: Option<f64>,
}

impl ZeemanConfig {
    pub fn from_q(q_hz: f64) -> Self {
        ZeemanConfig { q_hz, b_gauss: None }
    }

    pub fn from_field(b_gauss: f64, species: &SpeciesParams) -> Result<Self> {
        Ok(ZeemanConfig {
            q_hz: species.b_to_q(b_gauss)?,
            b_gauss: Some(b_gauss),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const RB87: f64 = 86.909_180_527 * ATOMIC_MASS_UNIT;

    #[test]
    fn f1_equal_lengths_cancel_spin_term() {
        let a = 100.0 * BOHR_RADIUS;
        let s = SpeciesParams::build("x", RB87, 1, &[(0, a), (2, a)], None).unwrap();
        assert_eq!(s.u1, 0.0);
    }

    #[test]
    fn f2_equal_lengths() {
        let a = 95.0 * BOHR_RADIUS;
        let s = SpeciesParams::build("x", RB87, 2, &[(0, a), (2, a), (4, a)], None).unwrap();
        let g = contact_coupling(a, RB87);
        assert!((s.u0 - g).abs() <= 1e-15 * g);
        assert!(s.u1.abs() <= 1e-15 * g);
    }

    #[test]
    fn rb87_signs() {
        let f2 = SpeciesParams::build(
            "rb87_f2",
            RB87,
            2,
            &[
                (0, 87.93 * BOHR_RADIUS),
                (2, 91.28 * BOHR_RADIUS),
                (4, 99.18 * BOHR_RADIUS),
            ],
            None,
        )
        .unwrap();
        assert!(f2.u1 > 0.0);
        let f1 = SpeciesParams::build(
            "rb87_f1",
            RB87,
            1,
            &[(0, 101.8 * BOHR_RADIUS), (2, 100.4 * BOHR_RADIUS)],
            None,
        )
        .unwrap();
        assert!(f1.u1 < 0.0);
    }

    #[test]
    fn channel_errors() {
        let a = 90.0 * BOHR_RADIUS;
        let e = SpeciesParams::build("x", RB87, 2, &[(0, a), (2, a)], None).unwrap_err();
        assert!(matches!(e, Error::Config { .. }));
        let e = SpeciesParams::build("x", RB87, 1, &[(0, a), (2, -a)], None).unwrap_err();
        assert!(matches!(e, Error::Validation { .. }));
        let e = SpeciesParams::build("x", 0.0, 1, &[(0, a), (2, a)], None).unwrap_err();
        assert!(matches!(e, Error::Validation { .. }));
        let e = SpeciesParams::build("x", RB87, 3, &[(0, a), (2, a)], None).unwrap_err();
        assert!(matches!(e, Error::Config { .. }));
    }

    #[test]
    fn zeeman_conversion() {
        let mut s = SpeciesParams::from_interactions("x", RB87, 1e-50, 1e-52).unwrap();
        assert!(matches!(s.b_to_q(1.0), Err(Error::Config { .. })));
        s.qze_hz_per_gauss2 = Some(-71.9);
        assert_eq!(s.b_to_q(0.0).unwrap(), 0.0);
        assert_eq!(s.b_to_q(1.0).unwrap(), -71.9);
        assert_eq!(s.b_to_q(2.0).unwrap(), 4.0 * -71.9);
        let z = ZeemanConfig::from_field(2.0, &s).unwrap();
        assert_eq!(z.q_hz, 4.0 * -71.9);
    }

    #[test]
    fn trap_validation() {
        assert!(TrapGeometry::harmonic_hz(&[176.0, 132.0, 46.0]).is_ok());
        assert!(TrapGeometry::harmonic_hz(&[176.0, 0.0]).is_err());
        assert!(TrapGeometry::boxed(&[]).is_err());
        assert!(TrapGeometry::boxed(&[1e-6, 1e-6, 1e-6, 1e-6]).is_err());
    }

    proptest! {
        #[test]
        fn channel_order_irrelevant(a0 in 80.0f64..110.0, a2 in 80.0f64..110.0, a4 in 80.0f64..110.0) {
            let l = [(0u8, a0 * BOHR_RADIUS), (2, a2 * BOHR_RADIUS), (4, a4 * BOHR_RADIUS)];
            let s1 = SpeciesParams::build("x", RB87, 2, &l, None).unwrap();
            let s2 = SpeciesParams::build("x", RB87, 2, &[l[2], l[0], l[1]], None).unwrap();
            prop_assert_eq!(s1.u0, s2.u0);
            prop_assert_eq!(s1.u1, s2.u1);
        }

        #[test]
        fn interactions_linear_in_couplings(a0 in 80.0f64..110.0, a2 in 80.0f64..110.0, a4 in 80.0f64..110.0) {
            let l = [(0u8, a0 * BOHR_RADIUS), (2, a2 * BOHR_RADIUS), (4, a4 * BOHR_RADIUS)];
            let l2: Vec<_> = l.iter().map(|&(c, a)| (c, 2.0 * a)).collect();
            let s1 = SpeciesParams::build("x", RB87, 2, &l, None).unwrap();
            let s2 = SpeciesParams::build("x", RB87, 2, &l2, None).unwrap();
            prop_assert!((s2.u0 - 2.0 * s1.u0).abs() <= 1e-14 * s1.u0);
            prop_assert!((s2.u1 - 2.0 * s1.u1).abs() <= 1e-13 * s1.u0);
        }

        #[test]
        fn field_sign_irrelevant(b in -5.0f64..5.0) {
            let mut s = SpeciesParams::from_interactions("x", RB87, 1e-50, 1e-52).unwrap();
            s.qze_hz_per_gauss2 = Some(71.9);
            prop_assert_eq!(s.b_to_q(b).unwrap(), s.b_to_q(-b).unwrap());
        }

        #[test]
        fn hz_joule_roundtrip(e in -1e6f64..1e6) {
            let back = joule_to_hz(hz_to_joule(e));
            prop_assert!((back - e).abs() <= 1e-12 * e.abs().max(f64::MIN_POSITIVE));
        }
    }
}
