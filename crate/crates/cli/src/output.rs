use std::fs;
use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::error::CliError;

pub fn to_pretty<T: Serialize>(value: &T) -> Result<String, CliError> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    Ok(text)
}

/// Prints to stdout; a closed pipe on the reading side is not an error.
pub fn print_json<T: Serialize>(value: &T) -> Result<(), CliError> {
    let text = to_pretty(value)?;
    let mut out = std::io::stdout().lock();
    match out.write_all(text.as_bytes()).and_then(|()| out.flush()) {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(e.into()),
        _ => Ok(()),
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    fs::write(path, to_pretty(value)?)?;
    Ok(())
}

/// Headered CSV, one row per serialized record.
pub fn write_csv<T: Serialize>(path: &Path, rows: impl IntoIterator<Item = T>) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path)?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir)?;
    Ok(())
}

#[derive(Serialize)]
pub struct HistogramRow {
    pub bin_lo: f64,
    pub bin_hi: f64,
    pub first: f64,
    pub second: f64,
}

/// Rows of two histograms over a shared binning of `[0, 1]`.
pub fn histogram_rows(
    first: &[f64],
    second: &[f64],
    bins: usize,
) -> Result<Vec<HistogramRow>, CliError> {
    let a = ske_core::analysis::histogram(first, bins)?;
    let b = ske_core::analysis::histogram(second, bins)?;
    let width = 1.0 / bins as f64;
    Ok(a.into_iter()
        .zip(b)
        .enumerate()
        .map(|(i, (first, second))| HistogramRow {
            bin_lo: i as f64 * width,
            bin_hi: (i + 1) as f64 * width,
            first,
            second,
        })
        .collect())
}

/// Writes a two-class histogram with the given column names.
pub fn write_histogram(
    path: &Path,
    names: [&str; 2],
    first: &[f64],
    second: &[f64],
    bins: usize,
) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["bin_lo", "bin_hi", names[0], names[1]])?;
    for r in histogram_rows(first, second, bins)? {
        w.write_record([
            r.bin_lo.to_string(),
            r.bin_hi.to_string(),
            r.first.to_string(),
            r.second.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
