//! Output files and field-file input.
//!
//! JSON is canonical: keys sorted, floats in shortest round-trip form, no
//! timestamps. CSV floats use the same shortest form.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;

use dispersive_core::iteration::Solution;
use dispersive_core::{Complex64, Grid, SpectralField};

use crate::scenario::Prepared;

/// Sorted-key JSON followed by a newline.
pub fn to_canonical_json<T: Serialize>(value: &T) -> String {
    // `serde_json::Map` is ordered by key unless `preserve_order` is enabled
    let v = serde_json::to_value(value).expect("serializable report");
    let mut s = serde_json::to_string_pretty(&v).expect("JSON value");
    s.push('\n');
    s
}

#[derive(Serialize)]
struct Report<'a> {
    summary: &'a dispersive_core::iteration::SolveSummary,
    norms: &'a dispersive_core::norms::NormReport,
    high_norms: &'a [f64],
    monomials: &'a [dispersive_core::nonlinearity::Monomial],
    original_points: usize,
    original_length: f64,
    time_samples: usize,
}

type IoFailure = (PathBuf, std::io::Error);

fn write_file(path: PathBuf, text: &str) -> Result<(), IoFailure> {
    let mut f = std::fs::File::create(&path).map_err(|e| (path.clone(), e))?;
    f.write_all(text.as_bytes()).map_err(|e| (path, e))
}

pub fn write_solve_artifacts(out: &Path, prepared: &Prepared, solution: &Solution) -> Result<(), IoFailure> {
    std::fs::create_dir_all(out).map_err(|e| (out.to_path_buf(), e))?;

    let u = &solution.u;
    let grid = u.grid();
    let mut csv = String::from("t,x,re,im\n");
    for (n, slice) in u.slices().iter().enumerate().step_by(prepared.scenario.snapshot_stride) {
        let t = u.time().time(n);
        for (i, z) in slice.values().iter().enumerate() {
            writeln!(csv, "{},{},{},{}", t, grid.x(i), z.re, z.im).expect("string write");
        }
    }
    write_file(out.join("solution.csv"), &csv)?;

    let mut trace = String::new();
    for record in &solution.trace.records {
        let v = serde_json::to_value(record).expect("serializable record");
        trace.push_str(&serde_json::to_string(&v).expect("JSON value"));
        trace.push('\n');
    }
    write_file(out.join("trace.jsonl"), &trace)?;

    let report = Report {
        summary: &solution.summary,
        norms: &solution.norms,
        high_norms: &solution.trace.high_norms,
        monomials: prepared.nonlinearity.monomials(),
        original_points: grid.n_points(),
        original_length: grid.length(),
        time_samples: u.time().samples(),
    };
    write_file(out.join("report.json"), &to_canonical_json(&report))
}

#[derive(Debug, thiserror::Error)]
pub enum FieldFileError {
    #[error("{path}: {source}", path = .0.display(), source = .1)]
    Io(PathBuf, std::io::Error),
    #[error("{0}")]
    Parse(String),
    #[error("{0}")]
    Grid(dispersive_core::SolverError),
}

/// Reads `x,re,im` samples of one period on a uniform power-of-two grid.
pub fn read_field_csv(path: &Path) -> Result<SpectralField, FieldFileError> {
    let text = std::fs::read_to_string(path).map_err(|e| FieldFileError::Io(path.to_path_buf(), e))?;
    parse_field_csv(&text)
}

pub fn parse_field_csv(text: &str) -> Result<SpectralField, FieldFileError> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines.next().ok_or_else(|| FieldFileError::Parse("empty field file".into()))?;
    let columns: Vec<&str> = header.split(',').map(str::trim).collect();
    if columns != ["x", "re", "im"] {
        return Err(FieldFileError::Parse(format!("expected header `x,re,im`, got `{header}`")));
    }
    let mut xs = Vec::new();
    let mut values = Vec::new();
    for (row, line) in lines.enumerate() {
        let parsed: Result<Vec<f64>, _> = line.split(',').map(|f| f.trim().parse::<f64>()).collect();
        match parsed.as_deref() {
            Ok([x, re, im]) => {
                xs.push(*x);
                values.push(Complex64::new(*re, *im));
            }
            _ => return Err(FieldFileError::Parse(format!("row {}: expected three numbers, got `{line}`", row + 1))),
        }
    }
    if xs.len() < 2 {
        return Err(FieldFileError::Parse("need at least two samples".into()));
    }
    let dx = xs[1] - xs[0];
    let length = dx * xs.len() as f64;
    for (i, x) in xs.iter().enumerate() {
        if (x - (xs[0] + i as f64 * dx)).abs() > 1e-9 * length.abs() {
            return Err(FieldFileError::Parse(format!("samples are not uniformly spaced at row {}", i + 1)));
        }
    }
    let grid = Grid::new(xs.len(), length).map_err(FieldFileError::Grid)?;
    Ok(SpectralField::from_values(&grid, &values))
}
