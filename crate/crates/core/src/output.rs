//! CSV emission. Floats use Rust's shortest round-trip formatting, so equal
//! inputs give byte-identical files.

use std::io::Write;
use std::path::Path;

use thiserror::Error;

use crate::sim::{CellLimit, GridField, SimReport, Snapshot, SweepRow};

#[derive(Debug, Error)]
pub enum OutputError {
    #[error("cannot write {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("cannot write {path}: {source}")]
    Csv { path: String, source: csv::Error },
}

pub const SNAPSHOT_HEADER: [&str; 13] =
    ["t", "x", "species", "rho", "u1", "u2", "u3", "p11", "p22", "p33", "p12", "p13", "p23"];

/// Shortest round-trip form, switching to exponent notation for very
/// small or large magnitudes.
fn f(v: f64) -> String {
    format!("{v:?}")
}

/// Writes records to any sink; the path only labels errors.
struct Table<W: Write> {
    w: csv::Writer<W>,
    path: String,
}

impl<W: Write> Table<W> {
    fn new(sink: W, path: &str) -> Self {
        Table { w: csv::Writer::from_writer(sink), path: path.to_string() }
    }

    fn row<I, S>(&mut self, fields: I) -> Result<(), OutputError>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<[u8]>,
    {
        self.w.write_record(fields).map_err(|source| OutputError::Csv { path: self.path.clone(), source })
    }

    fn finish(mut self) -> Result<(), OutputError> {
        self.w.flush().map_err(|source| OutputError::Io { path: self.path, source })
    }
}

fn open(path: &Path) -> Result<Table<std::fs::File>, OutputError> {
    let label = path.display().to_string();
    let file = std::fs::File::create(path).map_err(|source| OutputError::Io { path: label.clone(), source })?;
    Ok(Table::new(file, &label))
}

fn snapshot_rows<W: Write>(t: &mut Table<W>, time: f64, grid: &GridField) -> Result<(), OutputError> {
    for (j, cell) in grid.cells.iter().enumerate() {
        let x = grid.center(j);
        for (i, s) in cell.iter().enumerate() {
            let mut rec = vec![f(time), f(x), i.to_string(), f(s.rho)];
            rec.extend(s.u.iter().map(|v| f(*v)));
            rec.extend(s.p.0.iter().map(|v| f(*v)));
            t.row(rec)?;
        }
    }
    Ok(())
}

pub fn write_snapshots(path: &Path, snapshots: &[Snapshot]) -> Result<(), OutputError> {
    let mut t = open(path)?;
    t.row(SNAPSHOT_HEADER)?;
    for s in snapshots {
        snapshot_rows(&mut t, s.t, &s.grid)?;
    }
    t.finish()
}

pub fn write_report(path: &Path, report: &SimReport) -> Result<(), OutputError> {
    let mut t = open(path)?;
    let s = report.first().totals.masses.len();
    let mut header: Vec<String> = vec!["t".into(), "step".into()];
    header.extend((0..s).map(|i| format!("mass_{i}")));
    header.extend(
        [
            "momentum1",
            "momentum2",
            "momentum3",
            "energy",
            "internal_energy",
            "max_compat_residual",
            "momentum_source_balance",
            "energy_source_balance",
        ]
        .map(String::from),
    );
    t.row(&header)?;
    for r in &report.rows {
        let tot = &r.totals;
        let mut rec = vec![f(r.t), r.step.to_string()];
        rec.extend(tot.masses.iter().map(|m| f(*m)));
        rec.extend(tot.momentum.iter().map(|m| f(*m)));
        rec.extend([
            f(tot.energy),
            f(tot.internal_energy),
            f(tot.max_compat_residual),
            f(tot.momentum_source_balance),
            f(tot.energy_source_balance),
        ]);
        t.row(rec)?;
    }
    t.finish()
}

/// Per cell and species: limit velocity, deviatoric diagonals, `beta` and
/// the cell's compatibility residual and dominance margin.
pub fn write_limit(path: &Path, grid: &GridField, limits: &[CellLimit]) -> Result<(), OutputError> {
    let mut t = open(path)?;
    t.row([
        "x", "species", "rho", "p", "u1", "u2", "u3", "dev11", "dev22", "dev33", "beta11", "beta22", "beta33",
        "compat_residual", "min_margin",
    ])?;
    for (cell, l) in grid.cells.iter().zip(limits) {
        for (i, s) in cell.iter().enumerate() {
            let mut rec = vec![f(l.x), i.to_string(), f(s.rho), f(s.scalar_pressure())];
            rec.extend(l.velocities[i].iter().map(|v| f(*v)));
            rec.extend(l.dev_diag[i].iter().map(|v| f(*v)));
            rec.extend(l.beta[i].iter().map(|v| f(*v)));
            rec.extend([f(l.compat_residual), f(l.min_margin)]);
            t.row(rec)?;
        }
    }
    t.finish()
}

/// Entries of `M` per cell.
pub fn write_limit_matrices(path: &Path, limits: &[CellLimit]) -> Result<(), OutputError> {
    let mut t = open(path)?;
    t.row(["x", "row", "col", "m"])?;
    for l in limits {
        for r in 0..l.m.nrows() {
            for c in 0..l.m.ncols() {
                t.row([f(l.x), r.to_string(), c.to_string(), f(l.m[(r, c)])])?;
            }
        }
    }
    t.finish()
}

fn opt(v: Option<f64>) -> String {
    v.map(f).unwrap_or_default()
}

pub fn write_sweep(path: &Path, rows: &[SweepRow]) -> Result<(), OutputError> {
    let mut t = open(path)?;
    t.row([
        "alpha",
        "t_final",
        "steps",
        "quasi_steady",
        "final_rate",
        "velocity_error",
        "velocity_order",
        "deviatoric_error",
        "deviatoric_order",
    ])?;
    for r in rows {
        t.row([
            f(r.alpha),
            f(r.t_final),
            r.steps.to_string(),
            r.quasi_steady.to_string(),
            f(r.final_rate),
            f(r.velocity_error),
            opt(r.velocity_order),
            f(r.deviatoric_error),
            opt(r.deviatoric_order),
        ])?;
    }
    t.finish()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::SpeciesState;
    use crate::sim::Boundary;

    #[test]
    fn snapshot_columns() {
        let g = GridField::new(0.25, Boundary::Periodic, vec![vec![SpeciesState::at_rest(1.0, 2.0); 2]; 4]).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.csv");
        write_snapshots(&path, &[Snapshot { t: 0.5, grid: g }]).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), SNAPSHOT_HEADER.join(","));
        assert_eq!(lines.next().unwrap(), "0.5,0.125,0,1.0,0.0,0.0,0.0,2.0,2.0,2.0,0.0,0.0,0.0");
        assert_eq!(text.lines().count(), 1 + 8);
    }

    #[test]
    fn floats_round_trip() {
        for v in [1e-22, -3.5, 0.1 + 0.2, 6.02e23] {
            assert_eq!(f(v).parse::<f64>().unwrap(), v);
        }
        assert_eq!(f(4e-22), "4e-22");
    }
}
