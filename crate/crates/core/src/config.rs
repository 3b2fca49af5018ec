//! Scenario configuration: TOML with unit-suffixed keys, species and
//! scenario presets, validation, and a lossless echo.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::meanfield::EnergyReference;
use crate::units::{SpeciesParams, TrapGeometry};

const SPECIES_PRESETS: &[(&str, &str)] = &[
    ("rb87_f1", include_str!("../presets/species/rb87_f1.toml")),
    ("rb87_f2", include_str!("../presets/species/rb87_f2.toml")),
];

const SCENARIO_PRESETS: &[(&str, &str)] = &[
    ("f2_hannover", include_str!("../presets/scenarios/f2_hannover.toml")),
    ("f1_leslie", include_str!("../presets/scenarios/f1_leslie.toml")),
    ("box_oracle", include_str!("../presets/scenarios/box_oracle.toml")),
];

pub fn species_preset_names() -> Vec<&'static str> {
    SPECIES_PRESETS.iter().map(|(n, _)| *n).collect()
}

pub fn scenario_preset_names() -> Vec<&'static str> {
    SCENARIO_PRESETS.iter().map(|(n, _)| *n).collect()
}

/// Species entry: a preset name, explicit fields, or a preset with
/// individual fields overridden.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpeciesSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mass_kg: Option<f64>,
    #[serde(rename = "F", default, skip_serializing_if = "Option::is_none")]
    pub hyperfine_f: Option<u8>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a0_m: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a2_m: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a4_m: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub qze_hz_per_gauss2: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<String>,
}

impl SpeciesSection {
    fn overlay(self, over: SpeciesSection) -> SpeciesSection {
        SpeciesSection {
            preset: over.preset.or(self.preset),
            name: over.name.or(self.name),
            mass_kg: over.mass_kg.or(self.mass_kg),
            hyperfine_f: over.hyperfine_f.or(self.hyperfine_f),
            a0_m: over.a0_m.or(self.a0_m),
            a2_m: over.a2_m.or(self.a2_m),
            a4_m: over.a4_m.or(self.a4_m),
            qze_hz_per_gauss2: over.qze_hz_per_gauss2.or(self.qze_hz_per_gauss2),
            source: over.source.or(self.source),
        }
    }

    /// Fills unset fields from the named preset (embedded name or file path).
    fn resolve(self, base_dir: Option<&Path>) -> Result<SpeciesSection> {
        let Some(preset) = self.preset.clone() else {
            return Ok(self);
        };
        let text = match SPECIES_PRESETS.iter().find(|(n, _)| *n == preset) {
            Some((_, text)) => text.to_string(),
            None => {
                let path = base_dir
                    .map(|d| d.join(&preset))
                    .unwrap_or_else(|| PathBuf::from(&preset));
                if !path.is_file() {
                    return Err(Error::config(
                        "species.preset",
                        format!(
                            "unknown species preset `{preset}`; known: {:?} or a file path",
                            species_preset_names()
                        ),
                    ));
                }
                std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?
            }
        };
        let base: SpeciesSection = parse_toml(&text, "species preset")?;
        Ok(base.overlay(self))
    }

    pub fn build(&self) -> Result<SpeciesParams> {
        let need =
            |v: Option<f64>, field: &str| v.ok_or_else(|| Error::config(format!("species.{field}"), "missing field"));
        let f = self
            .hyperfine_f
            .ok_or_else(|| Error::config("species.F", "missing field"))?;
        let mut lengths = vec![(0u8, need(self.a0_m, "a0_m")?), (2, need(self.a2_m, "a2_m")?)];
        if f == 2 {
            lengths.push((4, need(self.a4_m, "a4_m")?));
        } else if self.a4_m.is_some() {
            return Err(Error::config("species.a4_m", "F = 1 has no spin-4 channel"));
        }
        SpeciesParams::build(
            self.name.as_deref().unwrap_or("custom"),
            need(self.mass_kg, "mass_kg")?,
            f,
            &lengths,
            self.qze_hz_per_gauss2,
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TrapSection {
    Harmonic { frequencies_hz: Vec<f64> },
    Box { half_widths_m: Vec<f64> },
}

impl TrapSection {
    pub fn build(&self) -> Result<TrapGeometry> {
        match self {
            TrapSection::Harmonic { frequencies_hz } => TrapGeometry::harmonic_hz(frequencies_hz),
            TrapSection::Box { half_widths_m } => TrapGeometry::boxed(half_widths_m),
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            TrapSection::Harmonic { frequencies_hz } => frequencies_hz.len(),
            TrapSection::Box { half_widths_m } => half_widths_m.len(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CondensateSection {
    /// Atoms; in fewer than three dimensions, per unit length (2D) or
    /// area (1D) of the frozen axes.
    pub atom_number: f64,
    #[serde(default)]
    pub energy_reference: EnergyReference,
}

fn default_margin() -> f64 {
    1.5
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub points: Vec<usize>,
    /// Multiple of the Thomas–Fermi radius enclosed per axis (harmonic traps).
    #[serde(default = "default_margin")]
    pub margin: f64,
}

fn default_solver() -> String {
    "auto".into()
}

fn default_seed() -> u64 {
    24301
}

fn default_tolerance() -> f64 {
    1e-8
}

fn default_max_iterations() -> usize {
    400
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BasisSection {
    /// Defaults to 400 below three dimensions and 800 in three.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_modes: Option<usize>,
    /// Defaults to max|q| of the sweep plus 4 |U1| n_peak.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cutoff_hz: Option<f64>,
    #[serde(default = "default_solver")]
    pub solver: String,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
    #[serde(default = "default_max_iterations")]
    pub max_iterations: usize,
}

impl Default for BasisSection {
    fn default() -> Self {
        BasisSection {
            max_modes: None,
            cutoff_hz: None,
            solver: default_solver(),
            seed: default_seed(),
            tolerance: default_tolerance(),
            max_iterations: default_max_iterations(),
        }
    }
}

fn default_bdg_solver() -> String {
    "product".into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BdgSection {
    #[serde(default = "default_bdg_solver")]
    pub solver: String,
}

impl Default for BdgSection {
    fn default() -> Self {
        BdgSection {
            solver: default_bdg_solver(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub q_min_hz: f64,
    pub q_max_hz: f64,
    pub steps: usize,
}

impl SweepSection {
    /// Evenly spaced q values, endpoints included.
    pub fn q_grid(&self) -> Vec<f64> {
        let n = self.steps;
        let span = self.q_max_hz - self.q_min_hz;
        (0..n)
            .map(|k| {
                if k + 1 == n {
                    self.q_max_hz
                } else {
                    self.q_min_hz + span * k as f64 / (n - 1) as f64
                }
            })
            .collect()
    }

    pub fn max_abs_q(&self) -> f64 {
        self.q_min_hz.abs().max(self.q_max_hz.abs())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScalingSection {
    #[serde(default)]
    pub atom_numbers: Vec<f64>,
}

fn default_output_dir() -> String {
    "out".into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default = "default_output_dir")]
    pub dir: String,
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection {
            dir: default_output_dir(),
        }
    }
}

/// A fully specified run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default = "default_name")]
    pub name: String,
    pub species: SpeciesSection,
    pub trap: TrapSection,
    pub condensate: CondensateSection,
    pub grid: GridSection,
    #[serde(default)]
    pub basis: BasisSection,
    #[serde(default)]
    pub bdg: BdgSection,
    pub sweep: SweepSection,
    #[serde(default)]
    pub scaling: ScalingSection,
    #[serde(default)]
    pub output: OutputSection,
}

fn default_name() -> String {
    "scenario".into()
}

fn parse_toml<T: serde::de::DeserializeOwned>(text: &str, what: &str) -> Result<T> {
    toml::from_str(text).map_err(|e| {
        let line = e
            .span()
            .map(|s| format!("line {}: ", text[..s.start].lines().count().max(1)))
            .unwrap_or_default();
        Error::config(what, format!("{line}{}", e.message().trim()))
    })
}

/// 1-based line where the dotted `key` (e.g. `sweep.q_min_hz`) is assigned.
fn line_of(text: &str, key: &str) -> Option<usize> {
    let (section, leaf) = key.rsplit_once('.').unwrap_or(("", key));
    let mut current = String::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if let Some(header) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
            current = header.trim().to_string();
            continue;
        }
        let assigns = line
            .strip_prefix(leaf)
            .map(|rest| rest.trim_start().starts_with('='))
            .unwrap_or(false);
        if assigns && current == section {
            return Some(i + 1);
        }
    }
    None
}

impl ScenarioConfig {
    /// Parses, resolves presets, applies defaults and validates.
    pub fn from_toml_str(text: &str, base_dir: Option<&Path>) -> Result<Self> {
        let raw: ScenarioConfig = parse_toml(text, "config")?;
        raw.resolved(base_dir).map_err(|e| match e {
            Error::Config { field, message } | Error::Validation { field, message } => {
                let message = match line_of(text, &field) {
                    Some(line) => format!("line {line}: {message}"),
                    None => message,
                };
                Error::Config { field, message }
            }
            other => other,
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text, path.parent())
    }

    pub fn preset(name: &str) -> Result<Self> {
        let (_, text) = SCENARIO_PRESETS.iter().find(|(n, _)| *n == name).ok_or_else(|| {
            Error::config(
                "preset",
                format!("unknown scenario preset `{name}`; known: {:?}", scenario_preset_names()),
            )
        })?;
        Self::from_toml_str(text, None)
    }

    fn resolved(mut self, base_dir: Option<&Path>) -> Result<Self> {
        self.species = self.species.resolve(base_dir)?;
        if self.basis.max_modes.is_none() {
            self.basis.max_modes = Some(if self.trap.dim() == 3 { 800 } else { 400 });
        }
        self.validate()?;
        Ok(self)
    }

    /// Full consistency check; run before any computation.
    pub fn validate(&self) -> Result<()> {
        self.species.build()?;
        self.trap.build()?;
        let dim = self.trap.dim();
        if self.grid.points.len() != dim {
            return Err(Error::validation(
                "grid.points",
                format!("{} grid axes for a {dim}-dimensional trap", self.grid.points.len()),
            ));
        }
        if self.grid.points.iter().any(|&n| n < 3) {
            return Err(Error::validation("grid.points", "need at least 3 points per axis"));
        }
        if !(self.grid.margin >= 1.2) || !self.grid.margin.is_finite() {
            return Err(Error::validation("grid.margin", "margin must be at least 1.2"));
        }
        if !(self.condensate.atom_number > 0.0) || !self.condensate.atom_number.is_finite() {
            return Err(Error::validation(
                "condensate.atom_number",
                "atom number must be positive",
            ));
        }
        if self.basis.max_modes == Some(0) {
            return Err(Error::validation("basis.max_modes", "need at least one mode"));
        }
        if let Some(c) = self.basis.cutoff_hz {
            if !c.is_finite() {
                return Err(Error::validation("basis.cutoff_hz", "cutoff must be finite"));
            }
        }
        if !(self.basis.tolerance > 0.0) {
            return Err(Error::validation("basis.tolerance", "tolerance must be positive"));
        }
        let known = ["auto", "dense", "tridiagonal", "chebyshev"];
        if !known.contains(&self.basis.solver.as_str()) {
            return Err(Error::config(
                "basis.solver",
                format!("unknown mode solver `{}`; known: {known:?}", self.basis.solver),
            ));
        }
        if !["product", "block"].contains(&self.bdg.solver.as_str()) {
            return Err(Error::config(
                "bdg.solver",
                format!(
                    "unknown BdG solver `{}`; known: [\"product\", \"block\"]",
                    self.bdg.solver
                ),
            ));
        }
        let s = &self.sweep;
        if !s.q_min_hz.is_finite() || !s.q_max_hz.is_finite() {
            return Err(Error::validation("sweep.q_min_hz", "q range must be finite"));
        }
        if !(s.q_max_hz > s.q_min_hz) {
            return Err(Error::validation(
                "sweep.q_max_hz",
                format!("q range inverted or empty: [{}, {}] Hz", s.q_min_hz, s.q_max_hz),
            ));
        }
        if s.steps < 16 {
            return Err(Error::validation("sweep.steps", "a sweep needs at least 16 q values"));
        }
        if self.scaling.atom_numbers.iter().any(|n| !(*n > 0.0)) {
            return Err(Error::validation(
                "scaling.atom_numbers",
                "atom numbers must be positive",
            ));
        }
        Ok(())
    }

    pub fn species_params(&self) -> Result<SpeciesParams> {
        self.species.build()
    }

    pub fn trap_geometry(&self) -> Result<TrapGeometry> {
        self.trap.build()
    }

    /// The resolved configuration as TOML; loading it gives back `self`.
    pub fn echo(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Numeric(format!("cannot serialize config: {e}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_load_and_round_trip() {
        for name in scenario_preset_names() {
            let c = ScenarioConfig::preset(name).unwrap();
            let echo = c.echo().unwrap();
            let again = ScenarioConfig::from_toml_str(&echo, None).unwrap();
            assert_eq!(c, again, "{name}");
        }
    }

    #[test]
    fn species_presets_have_expected_signs() {
        let c = ScenarioConfig::preset("f2_hannover").unwrap();
        let s = c.species_params().unwrap();
        assert!(s.u1 > 0.0);
        assert!(s.qze_hz_per_gauss2.unwrap() < 0.0);
        let c = ScenarioConfig::preset("f1_leslie").unwrap();
        let s = c.species_params().unwrap();
        assert!(s.u1 < 0.0);
        assert!(s.qze_hz_per_gauss2.unwrap() > 0.0);
    }

    const MINIMAL: &str = r#"
[species]
preset = "rb87_f2"

[trap]
kind = "harmonic"
frequencies_hz = [100.0]

[condensate]
atom_number = 1e12

[grid]
points = [200]

[sweep]
q_min_hz = -20.0
q_max_hz = 5.0
steps = 26
"#;

    #[test]
    fn defaults_are_applied() {
        let c = ScenarioConfig::from_toml_str(MINIMAL, None).unwrap();
        assert_eq!(c.basis.max_modes, Some(400));
        assert_eq!(c.grid.margin, 1.5);
        assert_eq!(c.bdg.solver, "product");
        assert_eq!(c.condensate.energy_reference, EnergyReference::ThomasFermi);
        assert_eq!(c.sweep.q_grid().len(), 26);
        assert_eq!(c.sweep.q_grid()[25], 5.0);
    }

    #[test]
    fn inverted_range_cites_field_and_line() {
        let text = MINIMAL.replace("q_max_hz = 5.0", "q_max_hz = -30.0");
        match ScenarioConfig::from_toml_str(&text, None) {
            Err(Error::Config { field, message }) => {
                assert_eq!(field, "sweep.q_max_hz");
                assert!(message.starts_with("line 17:"), "{message}");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn missing_species_is_named() {
        let text = MINIMAL.replace("preset = \"rb87_f2\"", "");
        match ScenarioConfig::from_toml_str(&text, None) {
            Err(Error::Config { field, .. }) => assert_eq!(field, "species.F"),
            other => panic!("{other:?}"),
        }
        let text = MINIMAL.replace("rb87_f2", "cs133");
        match ScenarioConfig::from_toml_str(&text, None) {
            Err(Error::Config { field, message }) => {
                assert_eq!(field, "species.preset");
                assert!(message.contains("line 3"), "{message}");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn keys_without_units_are_rejected() {
        let text = MINIMAL.replace("q_min_hz", "q_min");
        match ScenarioConfig::from_toml_str(&text, None) {
            Err(Error::Config { message, .. }) => assert!(message.contains("q_min"), "{message}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn inline_fields_override_preset() {
        let text = MINIMAL.replace(
            "preset = \"rb87_f2\"",
            "preset = \"rb87_f2\"\nqze_hz_per_gauss2 = -70.0",
        );
        let c = ScenarioConfig::from_toml_str(&text, None).unwrap();
        assert_eq!(c.species.qze_hz_per_gauss2, Some(-70.0));
        assert_eq!(c.species.hyperfine_f, Some(2));
    }
}
