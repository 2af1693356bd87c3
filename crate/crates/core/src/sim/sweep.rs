use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::model::MixtureSpec;

use super::diagnostics::l2;
use super::{cfl_dt, check_species, grid_limit, step, GridField, Mode, SimError, DEFAULT_CFL};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepSettings {
    pub temperature: f64,
    /// Quasi-steady threshold on `max |d rho^i / dt| / rho^i`.
    pub rate_tolerance: f64,
    /// Time cap for each run.
    pub max_time: f64,
    pub cfl: f64,
}

impl Default for SweepSettings {
    fn default() -> Self {
        SweepSettings { temperature: 1.0, rate_tolerance: 1e-6, max_time: 10.0, cfl: DEFAULT_CFL }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub alpha: f64,
    pub t_final: f64,
    pub steps: usize,
    /// Whether the rate threshold was met before the time cap.
    pub quasi_steady: bool,
    pub final_rate: f64,
    /// `|u_sim - u_lim|_2 / |u_lim|_2` over all species, `x_1` component.
    pub velocity_error: f64,
    /// `|p_<kk>,sim - p_<kk>,lim|_2` over all species and directions.
    pub deviatoric_error: f64,
    /// Observed orders against the previous row.
    pub velocity_order: Option<f64>,
    pub deviatoric_order: Option<f64>,
}

fn max_relative_rate(old: &GridField, new: &GridField, dt: f64) -> f64 {
    old.cells
        .iter()
        .flatten()
        .zip(new.cells.iter().flatten())
        .filter(|(a, _)| a.rho > 0.0)
        .map(|(a, b)| (b.rho - a.rho).abs() / (a.rho * dt))
        .fold(0.0, f64::max)
}

/// Errors of a simulated grid against the limit evaluated on its own fields.
pub fn limit_errors(grid: &GridField, spec: &MixtureSpec) -> Result<(f64, f64), SimError> {
    let lim = grid_limit(grid, spec)?;
    let s = grid.species_count();
    let n = grid.n_cells();
    let mut du = DVector::zeros(n * s);
    let mut ul = DVector::zeros(n * s);
    let mut dd = DVector::zeros(3 * n * s);
    for (j, (cell, l)) in grid.cells.iter().zip(&lim).enumerate() {
        for i in 0..s {
            du[j * s + i] = cell[i].u[0] - l.velocities[i][0];
            ul[j * s + i] = l.velocities[i][0];
            let (_, dev) = cell[i].p.decompose();
            for k in 0..3 {
                dd[3 * (j * s + i) + k] = dev.get(k, k) - l.dev_diag[i][k];
            }
        }
    }
    let scale = l2(&ul, grid.dx);
    let velocity_error = if scale > 0.0 { l2(&du, grid.dx) / scale } else { l2(&du, grid.dx) };
    Ok((velocity_error, l2(&dd, grid.dx)))
}

fn order(prev: Option<(f64, f64)>, alpha: f64, err: f64) -> Option<f64> {
    prev.map(|(a0, e0)| (e0 / err).ln() / (a0 / alpha).ln())
}

/// Runs the isothermal system to a quasi-steady state for each `alpha` and
/// compares against the algebraic limit.
pub fn run_alpha_sweep(
    initial: &GridField,
    spec: &MixtureSpec,
    alphas: &[f64],
    settings: &SweepSettings,
) -> Result<Vec<SweepRow>, SimError> {
    check_species(initial, spec)?;
    if alphas.len() < 3 || alphas.windows(2).any(|w| !(w[1] < w[0])) || alphas.iter().any(|a| !(*a > 0.0)) {
        return Err(SimError::BadSweep);
    }
    let mode = Mode::Isothermal { temperature: settings.temperature };
    let mut rows: Vec<SweepRow> = Vec::with_capacity(alphas.len());
    for &alpha in alphas {
        let spec_a = spec.with_alpha(alpha).map_err(|_| SimError::NonPositiveAlpha(alpha))?;
        let mut grid = initial.clone();
        let (mut t, mut steps, mut rate) = (0.0, 0usize, f64::INFINITY);
        while t < settings.max_time && rate >= settings.rate_tolerance {
            let dt = cfl_dt(&grid, alpha, settings.cfl)?.min(settings.max_time - t);
            let next = step(&grid, &spec_a, dt, mode)?;
            rate = max_relative_rate(&grid, &next, dt);
            grid = next;
            t += dt;
            steps += 1;
        }
        let (velocity_error, deviatoric_error) = limit_errors(&grid, &spec_a)?;
        let prev = rows.last();
        rows.push(SweepRow {
            alpha,
            t_final: t,
            steps,
            quasi_steady: rate < settings.rate_tolerance,
            final_rate: rate,
            velocity_error,
            deviatoric_error,
            velocity_order: order(prev.map(|r| (r.alpha, r.velocity_error)), alpha, velocity_error),
            deviatoric_order: order(prev.map(|r| (r.alpha, r.deviatoric_error)), alpha, deviatoric_error),
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::SpeciesState;
    use crate::sim::Boundary;

    #[test]
    fn rejects_bad_alpha_lists() {
        let spec = MixtureSpec::uniform_kernel(vec![1.0], 2.0, 0.5, 0.1).unwrap();
        let g = GridField::new(0.25, Boundary::Periodic, vec![vec![SpeciesState::at_rest(1.0, 1.0)]; 4]).unwrap();
        let s = SweepSettings::default();
        assert_eq!(run_alpha_sweep(&g, &spec, &[0.1, 0.05], &s), Err(SimError::BadSweep));
        assert_eq!(run_alpha_sweep(&g, &spec, &[0.1, 0.2, 0.05], &s), Err(SimError::BadSweep));
    }

    #[test]
    fn order_formula() {
        assert!((order(Some((0.1, 4.0)), 0.05, 1.0).unwrap() - 2.0).abs() < 1e-14);
        assert_eq!(order(None, 0.1, 1.0), None);
    }
}
