//! Closed-form instability rates for a homogeneous condensate and for a
//! flat condensate in a hard-wall box.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::units::{joule_to_hz, HBAR, PLANCK};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HomogeneousRegime {
    Stable,
    /// Most unstable mode at k = 0.
    UnstableZeroK,
    /// Plateau |q_cr| carried by modes with ħ²k²/2m = h(q_cr − q).
    UnstableFiniteK,
}

impl HomogeneousRegime {
    pub fn label(self) -> &'static str {
        match self {
            HomogeneousRegime::Stable => "stable",
            HomogeneousRegime::UnstableZeroK => "unstable_zero_k",
            HomogeneousRegime::UnstableFiniteK => "unstable_finite_k",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HomogeneousRate {
    pub q_hz: f64,
    pub q_cr_hz: f64,
    pub rate_hz: f64,
    pub regime: HomogeneousRegime,
}

impl HomogeneousRate {
    /// Wavenumber of the most unstable modes (m⁻¹) in the finite-k regime.
    pub fn k_max(&self, mass_kg: f64) -> Option<f64> {
        match self.regime {
            HomogeneousRegime::UnstableFiniteK => {
                let e = PLANCK * (self.q_cr_hz - self.q_hz);
                Some((2.0 * mass_kg * e).sqrt() / HBAR)
            }
            _ => None,
        }
    }
}

/// q_cr = −U1 n0 in Hz.
pub fn critical_q_hz(u1: f64, density: f64) -> f64 {
    -joule_to_hz(u1 * density)
}

/// Instability rate of a homogeneous condensate in m_F = 0.
pub fn homogeneous_rate(q_hz: f64, q_cr_hz: f64) -> HomogeneousRate {
    let upper = q_cr_hz + q_cr_hz.abs();
    let (rate_hz, regime) = if q_hz >= upper {
        (0.0, HomogeneousRegime::Stable)
    } else if q_hz > q_cr_hz {
        let d = q_hz - q_cr_hz;
        (
            (q_cr_hz * q_cr_hz - d * d).max(0.0).sqrt(),
            HomogeneousRegime::UnstableZeroK,
        )
    } else {
        (q_cr_hz.abs(), HomogeneousRegime::UnstableFiniteK)
    };
    HomogeneousRate {
        q_hz,
        q_cr_hz,
        rate_hz,
        regime,
    }
}

/// Flat condensate in a hard-wall box: kinetic level energies plus the
/// uniform spin energy U1 n0.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxModel {
    levels_hz: Vec<f64>,
    first_quantum_number: usize,
    spin_energy_hz: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoxRate {
    pub rate_hz: f64,
    /// Quantum number of the level carrying the instability.
    pub level: usize,
}

impl BoxModel {
    /// `levels_hz[k]` is the kinetic energy of quantum number
    /// `first_quantum_number + k`; `spin_energy_hz` is U1 n0 / h (signed).
    pub fn new(levels_hz: Vec<f64>, first_quantum_number: usize, spin_energy_hz: f64) -> Result<Self> {
        if levels_hz.len() < 2 {
            return Err(Error::validation("levels", "need at least two box levels"));
        }
        if levels_hz.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::validation("levels", "box levels must be strictly increasing"));
        }
        Ok(BoxModel {
            levels_hz,
            first_quantum_number,
            spin_energy_hz,
        })
    }

    /// One-dimensional box of width `width_m`: ε_n = n² ε₁, n = 1..=count.
    pub fn one_d(width_m: f64, mass_kg: f64, count: usize, u1: f64, density: f64) -> Result<Self> {
        let e1 = joule_to_hz(std::f64::consts::PI.powi(2) * HBAR * HBAR / (2.0 * mass_kg * width_m * width_m));
        let levels = (1..=count).map(|n| (n * n) as f64 * e1).collect();
        BoxModel::new(levels, 1, joule_to_hz(u1 * density))
    }

    pub fn levels_hz(&self) -> &[f64] {
        &self.levels_hz
    }

    pub fn first_quantum_number(&self) -> usize {
        self.first_quantum_number
    }

    pub fn spin_energy_hz(&self) -> f64 {
        self.spin_energy_hz
    }

    /// Detuning η(q) = −q − U1 n0: the level energy that is resonant at q.
    pub fn eta(&self, q_hz: f64) -> f64 {
        -q_hz - self.spin_energy_hz
    }

    /// ξ² = (ε + q)(ε + q + 2 U1 n0) for level index `k`.
    pub fn xi_squared(&self, k: usize, q_hz: f64) -> f64 {
        let x = self.levels_hz[k] + q_hz;
        x * (x + 2.0 * self.spin_energy_hz)
    }

    fn rate_of(&self, k: usize, q_hz: f64) -> f64 {
        (-self.xi_squared(k, q_hz)).max(0.0).sqrt()
    }
}

/// Instability rate of the box model and the level that carries it.
pub fn box_rate(model: &BoxModel, q_hz: f64) -> BoxRate {
    let eta = model.eta(q_hz);
    let levels = &model.levels_hz;
    let k = if eta > 0.5 * (levels[0] + levels[1]) {
        // Closest level to η; lower level wins ties.
        let mut best = 0;
        for (i, e) in levels.iter().enumerate() {
            if (e - eta).abs() < (levels[best] - eta).abs() {
                best = i;
            }
        }
        best
    } else {
        let mut best = 0;
        for i in 1..levels.len() {
            if model.rate_of(i, q_hz) > model.rate_of(best, q_hz) {
                best = i;
            }
        }
        best
    };
    BoxRate {
        rate_hz: model.rate_of(k, q_hz),
        level: k + model.first_quantum_number,
    }
}
