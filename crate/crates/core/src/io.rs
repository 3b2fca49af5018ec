//! Output formats: versioned CSV, JSON summaries, binary fields and the
//! config echo.
//!
//! Every CSV starts with a `# schema=<name>.v<k>` line followed by the
//! column header. Floats are written with 17 significant digits.
//!
//! Binary field layout (little-endian): magic `SPFIELD1`, u32 rank, rank ×
//! u64 point counts, rank × f64 spacings (m), rank × f64 first-node
//! coordinates (m), then the values as f64 in row-major order (last axis
//! fastest).

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::bdg::BdgSpectrum;
use crate::config::ScenarioConfig;
use crate::error::{Error, Result};
use crate::experiments::SweepResult;
use crate::grid::GridSpec;
use crate::modes::ModeBasis;

pub const SWEEP_SCHEMA: &str = "sweep.v1";
pub const SPECTRUM_SCHEMA: &str = "spectrum.v1";
pub const MODES_SCHEMA: &str = "modes.v1";
pub const FIELD_SCHEMA: &str = "field.v1";
pub const ORACLE_HOMOGENEOUS_SCHEMA: &str = "oracle_homogeneous.v1";
pub const ORACLE_BOX_SCHEMA: &str = "oracle_box.v1";
pub const CONFIG_ECHO: &str = "config.echo.toml";
const FIELD_MAGIC: &[u8; 8] = b"SPFIELD1";

/// Float formatting used in every text output.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// Minimal CSV writer that always emits the schema line first.
pub struct CsvWriter<W: Write> {
    out: W,
    columns: usize,
}

impl<W: Write> CsvWriter<W> {
    pub fn new(mut out: W, schema: &str, columns: &[&str]) -> std::io::Result<Self> {
        writeln!(out, "# schema={schema}")?;
        writeln!(out, "{}", columns.join(","))?;
        Ok(CsvWriter {
            out,
            columns: columns.len(),
        })
    }

    pub fn row(&mut self, cells: &[String]) -> std::io::Result<()> {
        debug_assert_eq!(cells.len(), self.columns);
        writeln!(self.out, "{}", cells.join(","))
    }

    pub fn finish(mut self) -> std::io::Result<W> {
        self.out.flush()?;
        Ok(self.out)
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
    }
    File::create(path).map(BufWriter::new).map_err(|e| Error::io(path, e))
}

fn csv_file(path: &Path, schema: &str, columns: &[&str], rows: impl Iterator<Item = Vec<String>>) -> Result<()> {
    let io = |e| Error::io(path, e);
    let mut w = CsvWriter::new(create(path)?, schema, columns).map_err(io)?;
    for r in rows {
        w.row(&r).map_err(io)?;
    }
    w.finish().map_err(io)?;
    Ok(())
}

pub fn write_sweep_csv(path: &Path, sweep: &SweepResult) -> Result<()> {
    csv_file(
        path,
        SWEEP_SCHEMA,
        &["q_hz", "lambda_hz"],
        sweep
            .q_hz
            .iter()
            .zip(&sweep.lambda_hz)
            .map(|(q, l)| vec![fmt_f64(*q), fmt_f64(*l)]),
    )
}

pub fn write_spectrum_csv(path: &Path, spectrum: &BdgSpectrum) -> Result<()> {
    csv_file(
        path,
        SPECTRUM_SCHEMA,
        &["q_hz", "re_xi", "im_xi"],
        spectrum
            .eigenvalues
            .iter()
            .map(|x| vec![fmt_f64(spectrum.q_hz), fmt_f64(x.re), fmt_f64(x.im)]),
    )
}

pub fn write_modes_csv(path: &Path, basis: &ModeBasis) -> Result<()> {
    csv_file(
        path,
        MODES_SCHEMA,
        &["n", "energy_hz"],
        basis
            .energies_hz
            .iter()
            .enumerate()
            .map(|(n, e)| vec![n.to_string(), fmt_f64(*e)]),
    )
}

/// Flattened field: index, one coordinate column per axis, value.
pub fn write_field_csv(path: &Path, grid: &GridSpec, values: &[f64]) -> Result<()> {
    grid_matches(grid, values)?;
    let axes = ["x_m", "y_m", "z_m"];
    let mut columns = vec!["index"];
    columns.extend(&axes[..grid.dim()]);
    columns.push("value");
    csv_file(
        path,
        FIELD_SCHEMA,
        &columns,
        values.iter().enumerate().map(|(i, v)| {
            let mut row = vec![i.to_string()];
            row.extend(grid.position(i).into_iter().map(fmt_f64));
            row.push(fmt_f64(*v));
            row
        }),
    )
}

fn grid_matches(grid: &GridSpec, values: &[f64]) -> Result<()> {
    if grid.len() != values.len() {
        return Err(Error::validation(
            "field",
            format!("{} values for a grid of {} points", values.len(), grid.len()),
        ));
    }
    Ok(())
}

pub fn write_field_binary(path: &Path, grid: &GridSpec, values: &[f64]) -> Result<()> {
    grid_matches(grid, values)?;
    let mut w = create(path)?;
    let mut bytes = Vec::with_capacity(16 + 24 * grid.dim() + 8 * values.len());
    bytes.extend_from_slice(FIELD_MAGIC);
    bytes.extend_from_slice(&(grid.dim() as u32).to_le_bytes());
    for &n in grid.points() {
        bytes.extend_from_slice(&(n as u64).to_le_bytes());
    }
    for d in grid.spacings() {
        bytes.extend_from_slice(&d.to_le_bytes());
    }
    for axis in 0..grid.dim() {
        bytes.extend_from_slice(&grid.coord(axis, 0).to_le_bytes());
    }
    for v in values {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    w.write_all(&bytes)
        .and_then(|_| w.flush())
        .map_err(|e| Error::io(path, e))
}

/// Contents of a binary field file.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldFile {
    pub points: Vec<usize>,
    pub spacings_m: Vec<f64>,
    pub origin_m: Vec<f64>,
    pub values: Vec<f64>,
}

pub fn read_field_binary(path: &Path) -> Result<FieldFile> {
    let mut bytes = Vec::new();
    File::open(path)
        .and_then(|mut f| f.read_to_end(&mut bytes))
        .map_err(|e| Error::io(path, e))?;
    let bad = || Error::validation("field", format!("{} is not a field file", path.display()));
    let mut at = 0usize;
    let mut take = |n: usize| -> Result<&[u8]> {
        let s = bytes.get(at..at + n).ok_or_else(bad)?;
        at += n;
        Ok(s)
    };
    if take(8)? != FIELD_MAGIC {
        return Err(bad());
    }
    let rank = u32::from_le_bytes(take(4)?.try_into().map_err(|_| bad())?) as usize;
    if rank == 0 || rank > 3 {
        return Err(bad());
    }
    let mut points = Vec::new();
    for _ in 0..rank {
        points.push(u64::from_le_bytes(take(8)?.try_into().map_err(|_| bad())?) as usize);
    }
    let mut f64s = |count: usize| -> Result<Vec<f64>> {
        (0..count)
            .map(|_| Ok(f64::from_le_bytes(take(8)?.try_into().map_err(|_| bad())?)))
            .collect()
    };
    let spacings_m = f64s(rank)?;
    let origin_m = f64s(rank)?;
    let values = f64s(points.iter().product())?;
    Ok(FieldFile {
        points,
        spacings_m,
        origin_m,
        values,
    })
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = create(path)?;
    let text =
        serde_json::to_string_pretty(value).map_err(|e| Error::Numeric(format!("cannot serialize JSON: {e}")))?;
    w.write_all(text.as_bytes())
        .and_then(|_| w.write_all(b"\n"))
        .and_then(|_| w.flush())
        .map_err(|e| Error::io(path, e))
}

/// Writes the resolved config next to the outputs and returns its path.
pub fn write_config_echo(dir: &Path, config: &ScenarioConfig) -> Result<PathBuf> {
    let path = dir.join(CONFIG_ECHO);
    let mut w = create(&path)?;
    w.write_all(config.echo()?.as_bytes())
        .and_then(|_| w.flush())
        .map_err(|e| Error::io(&path, e))?;
    Ok(path)
}

/// JSON summary of a sweep.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepSummary<'a> {
    pub scenario: &'a str,
    pub resonances: &'a [crate::experiments::Extremum],
    pub minima: &'a [crate::experiments::Extremum],
    pub q_tilde_cr: Option<f64>,
    pub gamma: Option<f64>,
    pub mode_count: usize,
    pub goldstone_offset_hz: Option<f64>,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binary_field_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let grid = GridSpec::new(vec![1e-6, 2e-6], vec![3, 4]).unwrap();
        let values: Vec<f64> = (0..12).map(|i| i as f64 * 0.1 - 0.3).collect();
        let path = dir.path().join("f.bin");
        write_field_binary(&path, &grid, &values).unwrap();
        let f = read_field_binary(&path).unwrap();
        assert_eq!(f.points, vec![3, 4]);
        assert_eq!(f.values, values);
        assert_eq!(f.spacings_m, grid.spacings());
        assert_eq!(f.origin_m[1], grid.coord(1, 0));
    }

    #[test]
    fn csv_has_schema_header_and_full_precision() {
        let dir = tempfile::tempdir().unwrap();
        let q: Vec<f64> = (0..16).map(|k| k as f64 / 3.0).collect();
        let sweep = SweepResult::from_samples(q.clone(), vec![0.0; 16]).unwrap();
        let path = dir.path().join("s.csv");
        write_sweep_csv(&path, &sweep).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("# schema=sweep.v1"));
        assert_eq!(lines.next(), Some("q_hz,lambda_hz"));
        let rows: Vec<&str> = lines.collect();
        assert_eq!(rows.len(), 16);
        let back: f64 = rows[1].split(',').next().unwrap().parse().unwrap();
        assert_eq!(back, q[1]);
    }

    #[test]
    fn truncated_field_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.bin");
        std::fs::write(&path, b"SPFIELD1\x01\x00").unwrap();
        assert!(read_field_binary(&path).is_err());
    }
}
