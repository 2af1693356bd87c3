//! One-dimensional finite-volume integrator for the truncated moment system.
//!
//! Time is the slow diffusive variable; every species carries
//! `(rho, rho u, alpha^2 rho u u + p)`. A step is a Strang split of
//! backward-Euler collision sources around one explicit Rusanov transport
//! step.

mod diagnostics;
pub mod flux;
mod grid;
mod run;
pub mod source;
mod sweep;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::limit::LimitError;
use crate::model::{ideal_gas_pressure, MixtureSpec, SpeciesState, SymTensor};

pub use diagnostics::{grid_limit, totals, CellLimit, Totals};
pub use flux::{cfl_dt, explicit_flux_update, Conserved};
pub use grid::{reflect, Boundary, GridField, MIN_CELLS};
pub use run::{run, RunOutput, SimReport, SimSettings, Snapshot, DEFAULT_CFL};
pub use sweep::{run_alpha_sweep, SweepRow, SweepSettings};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("time step {dt} exceeds the stability limit {limit}")]
    CflViolation { dt: f64, limit: f64 },
    #[error("alpha must be positive, got {0}")]
    NonPositiveAlpha(f64),
    #[error("time step must be positive, got {0}")]
    NonPositiveStep(f64),
    #[error("linear source solve failed{}", cell.map(|c| format!(" in cell {c}")).unwrap_or_default())]
    LinearSolveFailure { cell: Option<usize> },
    #[error("every cell is vacuum")]
    VacuumEverywhere,
    #[error("positivity lost in cell {cell}, species {species}: {quantity}")]
    PositivityLoss { cell: usize, species: usize, quantity: Quantity },
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("grid carries {grid} species but the mixture has {spec}")]
    SpeciesMismatch { grid: usize, spec: usize },
    #[error("limit solve failed in cell {cell}: {source}")]
    Limit { cell: usize, source: LimitError },
    #[error("sweep needs at least 3 strictly decreasing alphas")]
    BadSweep,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Quantity {
    Density,
    PressureTensor,
}

impl std::fmt::Display for Quantity {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Quantity::Density => "density",
            Quantity::PressureTensor => "pressure tensor not positive definite",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Mode {
    /// Scalar pressures are reset to the ideal-gas value at `temperature`
    /// after every step; deviatoric parts are kept.
    Isothermal { temperature: f64 },
    NonIsothermal,
}

/// Backward-Euler source step on one cell's states.
pub fn implicit_source_update(
    cell: &[SpeciesState],
    spec: &MixtureSpec,
    alpha: f64,
    dt: f64,
) -> Result<Vec<SpeciesState>, SimError> {
    if !(alpha > 0.0) {
        return Err(SimError::NonPositiveAlpha(alpha));
    }
    if !(dt > 0.0) {
        return Err(SimError::NonPositiveStep(dt));
    }
    source::implicit_source_cell(cell, spec, alpha, dt).map_err(|_| SimError::LinearSolveFailure { cell: None })
}

fn source_sweep(grid: &GridField, spec: &MixtureSpec, dt: f64) -> Result<GridField, SimError> {
    let alpha = spec.alpha();
    let cells = grid
        .cells
        .par_iter()
        .enumerate()
        .map(|(j, cell)| {
            source::implicit_source_cell(cell, spec, alpha, dt)
                .map_err(|_| SimError::LinearSolveFailure { cell: Some(j) })
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(GridField { dx: grid.dx, bc: grid.bc, cells })
}

fn isothermal_reset(grid: &mut GridField, spec: &MixtureSpec, temperature: f64) {
    for cell in grid.cells.iter_mut() {
        for (i, s) in cell.iter_mut().enumerate() {
            let p = if s.rho > 0.0 { 5.0 / 3.0 * s.rho * temperature / spec.mass(i) } else { 0.0 };
            let (_, dev) = s.p.decompose();
            s.p = SymTensor::recompose(p, &dev);
        }
    }
}

/// Rejects negative or non-finite densities and pressure tensors that are
/// not positive definite in non-vacuum species.
pub fn positivity_guard(grid: &GridField) -> Result<(), SimError> {
    for (j, cell) in grid.cells.iter().enumerate() {
        for (i, s) in cell.iter().enumerate() {
            let loss = |quantity| SimError::PositivityLoss { cell: j, species: i, quantity };
            if !(s.rho >= 0.0) || !s.rho.is_finite() {
                return Err(loss(Quantity::Density));
            }
            if s.p.0.iter().any(|v| !v.is_finite()) || (s.rho > 0.0 && !s.p.is_positive_definite()) {
                return Err(loss(Quantity::PressureTensor));
            }
        }
    }
    Ok(())
}

pub(crate) fn check_species(grid: &GridField, spec: &MixtureSpec) -> Result<(), SimError> {
    if grid.species_count() != spec.species_count() {
        return Err(SimError::SpeciesMismatch { grid: grid.species_count(), spec: spec.species_count() });
    }
    Ok(())
}

/// Half source, full transport, half source, then the isothermal reset
/// when requested and the positivity guard.
pub fn step(grid: &GridField, spec: &MixtureSpec, dt: f64, mode: Mode) -> Result<GridField, SimError> {
    check_species(grid, spec)?;
    if !(dt > 0.0) {
        return Err(SimError::NonPositiveStep(dt));
    }
    let alpha = spec.alpha();
    let half = source_sweep(grid, spec, 0.5 * dt)?;
    let inc = explicit_flux_update(&half, alpha, dt)?;
    let moved = flux::apply_increments(&half, &inc, alpha);
    positivity_guard(&moved)?;
    let mut out = source_sweep(&moved, spec, 0.5 * dt)?;
    if let Mode::Isothermal { temperature } = mode {
        isothermal_reset(&mut out, spec, temperature);
    }
    positivity_guard(&out)?;
    Ok(out)
}

/// Cell states of a uniform mixture at rest with ideal-gas scalar pressures
/// and the deviatoric stresses of the algebraic limit, which makes the
/// state a fixed point of the source step for every kernel.
pub fn equilibrium_cell(spec: &MixtureSpec, densities: &[f64], temperature: f64) -> Result<Vec<SpeciesState>, SimError> {
    let pressures: Vec<f64> = densities
        .iter()
        .enumerate()
        .map(|(i, &r)| ideal_gas_pressure(r, temperature, spec.mass(i)).unwrap_or(0.0))
        .collect();
    let assembly = crate::limit::assemble(spec, densities, &pressures)
        .map_err(|source| SimError::Limit { cell: 0, source })?;
    let dev = crate::limit::solve_deviatoric(&assembly).map_err(|source| SimError::Limit { cell: 0, source })?;
    Ok(densities
        .iter()
        .zip(&pressures)
        .zip(&dev)
        .map(|((&r, &p), d)| {
            SpeciesState::new(r, crate::model::Vec3::zeros(), SymTensor::diag(p + d[0], p + d[1], p + d[2]))
        })
        .collect())
}
