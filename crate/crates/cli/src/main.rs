use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use spinor_core::bdg::{BdgSolver, BlockSolver, SpectrumSummary};
use spinor_core::config::ScenarioConfig;
use spinor_core::error::ErrorKind;
use spinor_core::experiments::{prepare, run_sweep, scaling_fit};
use spinor_core::io;
use spinor_core::meanfield::{grid_for, solve_tf, thomas_fermi_radii};
use spinor_core::oracles::{box_rate, homogeneous_rate, BoxModel};
use spinor_core::Error;

const EXIT_USAGE: u8 = 2;
const EXIT_CONFIG: u8 = 3;
const EXIT_NUMERIC: u8 = 4;
const EXIT_IO: u8 = 5;

/// Bogoliubov instability spectra of trapped spinor condensates.
#[derive(Parser, Debug)]
#[command(name = "spinor", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Thomas–Fermi ground state: chemical potential, peak density, radii.
    Tf(ScenarioArgs),
    /// Energies of the effective-trap modes.
    Modes {
        #[command(flatten)]
        scenario: ScenarioArgs,
        /// Also export these mode profiles as binary fields.
        #[arg(long, value_delimiter = ',')]
        export: Vec<usize>,
    },
    /// Instability rate Λ(q) over a q range.
    Sweep {
        #[command(flatten)]
        scenario: ScenarioArgs,
        #[command(flatten)]
        range: RangeArgs,
    },
    /// Power-law fit of the low-|q| resonance position against atom number.
    Scaling {
        #[command(flatten)]
        scenario: ScenarioArgs,
        #[command(flatten)]
        range: RangeArgs,
        /// Atom numbers, comma separated (defaults to the config's list).
        #[arg(long = "n", value_delimiter = ',')]
        atom_numbers: Vec<f64>,
    },
    /// Closed-form reference models.
    #[command(subcommand)]
    Oracle(OracleCommand),
    /// Spectrum and fastest-growing mode profile at one q.
    ModeProfile {
        #[command(flatten)]
        scenario: ScenarioArgs,
        #[arg(long, allow_hyphen_values = true)]
        q: f64,
    },
}

#[derive(Subcommand, Debug)]
enum OracleCommand {
    /// Uniform condensate: three-regime rate for a given q_cr.
    Homogeneous {
        #[arg(long, allow_hyphen_values = true)]
        qcr: f64,
        #[command(flatten)]
        qs: QList,
    },
    /// Hard-wall box with levels ε_n = n² ε₁.
    Box {
        /// ε₁ in Hz.
        #[arg(long)]
        level_hz: f64,
        #[arg(long, default_value_t = 40)]
        count: usize,
        /// U1 n0 in Hz (signed).
        #[arg(long, allow_hyphen_values = true)]
        spin_hz: f64,
        #[command(flatten)]
        qs: QList,
    },
}

#[derive(Args, Debug)]
struct QList {
    /// Explicit q values in Hz, comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    q: Vec<f64>,
    #[command(flatten)]
    range: RangeArgs,
}

#[derive(Args, Debug, Default)]
struct RangeArgs {
    #[arg(long, allow_hyphen_values = true)]
    q_min: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    q_max: Option<f64>,
    #[arg(long)]
    steps: Option<usize>,
}

#[derive(Args, Debug)]
struct ScenarioArgs {
    /// Built-in scenario name.
    #[arg(long, conflicts_with = "config")]
    preset: Option<String>,
    /// Scenario TOML file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory (overrides the config).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Grid points per axis, comma separated.
    #[arg(long, value_delimiter = ',')]
    points: Vec<usize>,
    /// Atom number override.
    #[arg(long)]
    atoms: Option<f64>,
}

fn load(args: &ScenarioArgs, range: Option<&RangeArgs>) -> Result<(ScenarioConfig, PathBuf), Error> {
    let mut config = match (&args.preset, &args.config) {
        (Some(name), None) => ScenarioConfig::preset(name)?,
        (None, Some(path)) => ScenarioConfig::load(path)?,
        _ => return Err(Error::config("preset", "give exactly one of --preset or --config")),
    };
    if let Some(out) = &args.out {
        config.output.dir = out.display().to_string();
    }
    if !args.points.is_empty() {
        config.grid.points = args.points.clone();
    }
    if let Some(n) = args.atoms {
        config.condensate.atom_number = n;
    }
    if let Some(r) = range {
        if let Some(v) = r.q_min {
            config.sweep.q_min_hz = v;
        }
        if let Some(v) = r.q_max {
            config.sweep.q_max_hz = v;
        }
        if let Some(v) = r.steps {
            config.sweep.steps = v;
        }
    }
    config.validate()?;
    let dir = PathBuf::from(&config.output.dir);
    io::write_config_echo(&dir, &config)?;
    Ok((config, dir))
}

fn q_values(list: &QList) -> Result<Vec<f64>, Error> {
    if !list.q.is_empty() {
        return Ok(list.q.clone());
    }
    match (list.range.q_min, list.range.q_max, list.range.steps) {
        (Some(a), Some(b), Some(n)) if n >= 2 && b > a => {
            Ok((0..n).map(|k| a + (b - a) * k as f64 / (n - 1) as f64).collect())
        }
        (Some(_), Some(_), Some(_)) => Err(Error::validation("q", "need q_max > q_min and at least 2 steps")),
        _ => Err(Error::config("q", "give --q or all of --q-min, --q-max, --steps")),
    }
}

fn print_json(value: &serde_json::Value) {
    println!("{}", serde_json::to_string_pretty(value).unwrap_or_default());
}

fn cmd_tf(args: &ScenarioArgs) -> Result<(), Error> {
    let (config, dir) = load(args, None)?;
    let species = config.species_params()?;
    let trap = config.trap_geometry()?;
    let n = config.condensate.atom_number;
    let grid = grid_for(&species, &trap, n, config.grid.points.clone(), config.grid.margin)?;
    let state = solve_tf(&species, &trap, n, &grid)?;
    let radii = match &trap {
        spinor_core::units::TrapGeometry::Harmonic { .. } => Some(thomas_fermi_radii(&species, &trap, state.mu_hz)),
        _ => None,
    };
    let summary = json!({
        "mu_hz": state.mu_hz,
        "peak_density_m3": state.peak_density,
        "atom_number": state.atom_number,
        "tf_radii_m": radii,
        "healing_length_m": state.healing_length(&species),
        "spin_healing_length_m": state.spin_healing_length(&species),
        "peak_spin_energy_hz": state.peak_spin_energy_hz(&species),
    });
    io::write_json(&dir.join("tf.json"), &summary)?;
    io::write_field_binary(&dir.join("density.bin"), &grid, &state.density)?;
    print_json(&summary);
    Ok(())
}

fn cmd_modes(args: &ScenarioArgs, export: &[usize]) -> Result<(), Error> {
    let (config, dir) = load(args, None)?;
    let prepared = prepare(&config)?;
    let basis = &prepared.basis;
    io::write_modes_csv(&dir.join("modes.csv"), basis)?;
    for &n in export {
        if n >= basis.len() {
            return Err(Error::validation(
                "export",
                format!("mode {n} not in a basis of {}", basis.len()),
            ));
        }
        io::write_field_binary(&dir.join(format!("mode_{n}.bin")), &basis.grid, basis.mode(n))?;
    }
    let summary = json!({
        "mode_count": basis.len(),
        "lowest_hz": basis.energies_hz.first(),
        "highest_hz": basis.energies_hz.last(),
        "energy_cutoff_hz": basis.energy_cutoff_hz,
        "goldstone_offset_hz": prepared.goldstone_offset_hz,
        "orthonormality_error": basis.orthonormality_error(),
    });
    io::write_json(&dir.join("modes.json"), &summary)?;
    print_json(&summary);
    Ok(())
}

fn cmd_sweep(args: &ScenarioArgs, range: &RangeArgs) -> Result<(), Error> {
    let (config, dir) = load(args, Some(range))?;
    let (prepared, sweep) = run_sweep(&config)?;
    io::write_sweep_csv(&dir.join("sweep.csv"), &sweep)?;
    let summary = io::SweepSummary {
        scenario: &config.name,
        resonances: &sweep.resonances,
        minima: &sweep.minima,
        q_tilde_cr: sweep.q_tilde_cr_hz,
        gamma: None,
        mode_count: prepared.basis.len(),
        goldstone_offset_hz: prepared.goldstone_offset_hz,
    };
    io::write_json(&dir.join("summary.json"), &summary)?;
    print_json(&serde_json::to_value(&summary).unwrap_or_default());
    Ok(())
}

fn cmd_scaling(args: &ScenarioArgs, range: &RangeArgs, atom_numbers: &[f64]) -> Result<(), Error> {
    let (mut config, dir) = load(args, Some(range))?;
    if !atom_numbers.is_empty() {
        config.scaling.atom_numbers = atom_numbers.to_vec();
        config.validate()?;
        io::write_config_echo(&dir, &config)?;
    }
    let fit = scaling_fit(&config, &config.scaling.atom_numbers)?;
    let summary = json!({
        "scenario": config.name,
        "gamma": fit.fit.gamma,
        "gamma_stderr": fit.fit.gamma_stderr,
        "log_prefactor": fit.fit.log_prefactor,
        "residuals": fit.fit.residuals,
        "points": fit.points,
        "q_tilde_density_r2": fit.q_tilde_density_r2,
        "thomas_fermi_gamma": 0.4,
        "measured_reference": { "gamma": 0.36, "stderr": 0.02 },
    });
    io::write_json(&dir.join("scaling.json"), &summary)?;
    print_json(&summary);
    Ok(())
}

fn cmd_mode_profile(args: &ScenarioArgs, q: f64) -> Result<(), Error> {
    let (config, dir) = load(args, None)?;
    let prepared = prepare(&config)?;
    let spectrum = BlockSolver
        .spectrum(&prepared.basis.energies_hz, &prepared.coupling, q)
        .map_err(|e| e.at_q(q))?;
    io::write_spectrum_csv(&dir.join("spectrum.csv"), &spectrum)?;
    let summary = SpectrumSummary::from(&spectrum);
    io::write_json(&dir.join("spectrum.json"), &summary)?;
    if let Some(density) = spectrum.most_unstable_density(&prepared.basis) {
        io::write_field_binary(&dir.join("mode_profile.bin"), &prepared.basis.grid, &density)?;
    }
    print_json(&serde_json::to_value(&summary).unwrap_or_default());
    Ok(())
}

fn cmd_oracle(cmd: &OracleCommand) -> Result<(), Error> {
    let stdout = std::io::stdout().lock();
    let io_err = |e| Error::io(Path::new("<stdout>"), e);
    match cmd {
        OracleCommand::Homogeneous { qcr, qs } => {
            let mut w = io::CsvWriter::new(stdout, io::ORACLE_HOMOGENEOUS_SCHEMA, &["q_hz", "rate_hz", "regime"])
                .map_err(io_err)?;
            for q in q_values(qs)? {
                let r = homogeneous_rate(q, *qcr);
                w.row(&[io::fmt_f64(q), io::fmt_f64(r.rate_hz), r.regime.label().to_string()])
                    .map_err(io_err)?;
            }
            w.finish().map_err(io_err).map(drop)?;
        }
        OracleCommand::Box {
            level_hz,
            count,
            spin_hz,
            qs,
        } => {
            if !(*level_hz > 0.0) {
                return Err(Error::validation("level_hz", "level energy must be positive"));
            }
            let levels = (1..=*count).map(|n| (n * n) as f64 * level_hz).collect();
            let model = BoxModel::new(levels, 1, *spin_hz)?;
            let mut w =
                io::CsvWriter::new(stdout, io::ORACLE_BOX_SCHEMA, &["q_hz", "rate_hz", "level"]).map_err(io_err)?;
            for q in q_values(qs)? {
                let r = box_rate(&model, q);
                w.row(&[io::fmt_f64(q), io::fmt_f64(r.rate_hz), r.level.to_string()])
                    .map_err(io_err)?;
            }
            w.finish().map_err(io_err).map(drop)?;
        }
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), Error> {
    match &cli.command {
        Command::Tf(args) => cmd_tf(args),
        Command::Modes { scenario, export } => cmd_modes(scenario, export),
        Command::Sweep { scenario, range } => cmd_sweep(scenario, range),
        Command::Scaling {
            scenario,
            range,
            atom_numbers,
        } => cmd_scaling(scenario, range, atom_numbers),
        Command::Oracle(cmd) => cmd_oracle(cmd),
        Command::ModeProfile { scenario, q } => cmd_mode_profile(scenario, *q),
    }
}

fn report(kind: &str, message: String, extra: serde_json::Value) {
    let mut body = json!({ "error": kind, "message": message });
    if let (Some(obj), serde_json::Value::Object(more)) = (body.as_object_mut(), extra) {
        obj.extend(more);
    }
    eprintln!("{body}");
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind as K;
            if matches!(e.kind(), K::DisplayHelp | K::DisplayVersion) {
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            report("usage", e.render().to_string().trim().to_string(), json!({}));
            return ExitCode::from(EXIT_USAGE);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let extra = match &e {
                Error::Config { field, .. } | Error::Validation { field, .. } => json!({ "field": field }),
                Error::AtQ { q_hz, .. } => json!({ "q_hz": q_hz }),
                _ => json!({}),
            };
            report(e.tag(), e.to_string(), extra);
            ExitCode::from(match e.kind() {
                ErrorKind::Config => EXIT_CONFIG,
                ErrorKind::Numeric => EXIT_NUMERIC,
                ErrorKind::Io => EXIT_IO,
            })
        }
    }
}
