use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::collision::{energy_source, momentum_source};
use crate::limit::{assemble, compatibility_residual, ms_velocity_solve_projected, solve_deviatoric};
use crate::model::{MixtureSpec, Vec3};

use super::{GridField, SimError};

/// Integrated conserved quantities and per-time residual checks.
#[derive(Debug, Clone, PartialEq)]
pub struct Totals {
    pub masses: Vec<f64>,
    /// `alpha^2 sum_i rho^i u^i`, integrated.
    pub momentum: Vec3,
    /// `alpha^3 sum_i rho^i |u^i|^2 + 3 alpha sum_i p^i`, integrated.
    pub energy: f64,
    /// `3 alpha sum_i p^i`, integrated.
    pub internal_energy: f64,
    /// Largest relative compatibility residual over cells.
    pub max_compat_residual: f64,
    /// Largest `|sum_ij R^ij| / sum_ij |R^ij|` over cells.
    pub momentum_source_balance: f64,
    /// Same for the energy sources.
    pub energy_source_balance: f64,
}

fn balance(net: f64, scale: f64) -> f64 {
    if scale > 0.0 {
        net.abs() / scale
    } else {
        0.0
    }
}

pub fn totals(grid: &GridField, spec: &MixtureSpec) -> Totals {
    let alpha = spec.alpha();
    let s = grid.species_count();
    let dx = grid.dx;
    let mut momentum = Vec3::zeros();
    let mut kinetic = 0.0;
    let mut internal = 0.0;
    let (mut compat, mut mom_bal, mut en_bal) = (0.0_f64, 0.0_f64, 0.0_f64);
    for cell in &grid.cells {
        for st in cell {
            momentum += st.u * st.rho;
            kinetic += st.rho * st.u.norm_squared();
            internal += st.p.trace();
        }
        let rho: Vec<f64> = cell.iter().map(|c| c.rho).collect();
        let p: Vec<f64> = cell.iter().map(|c| c.scalar_pressure()).collect();
        compat = compat.max(compatibility_residual(spec, &rho, &p).relative());
        let (mut rn, mut rs, mut en, mut es) = (Vec3::zeros(), 0.0, 0.0, 0.0);
        for i in 0..s {
            for j in 0..s {
                let r = momentum_source(i, j, cell, spec);
                rn += r;
                rs += r.abs().sum();
                let e = energy_source(i, j, cell, spec, alpha).unwrap_or(f64::NAN);
                en += e;
                es += e.abs();
            }
        }
        mom_bal = mom_bal.max(balance(rn.abs().max(), rs));
        en_bal = en_bal.max(balance(en, es));
    }
    Totals {
        masses: grid.species_masses(),
        momentum: momentum * (alpha * alpha * dx),
        energy: (alpha.powi(3) * kinetic + alpha * internal) * dx,
        internal_energy: alpha * internal * dx,
        max_compat_residual: compat,
        momentum_source_balance: mom_bal,
        energy_source_balance: en_bal,
    }
}

/// Algebraic limit evaluated on one cell of a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct CellLimit {
    pub x: f64,
    /// Per species `(p_<11>, p_<22>, p_<33>)`.
    pub dev_diag: Vec<[f64; 3]>,
    pub velocities: Vec<Vec3>,
    /// Relative compatibility residual.
    pub compat_residual: f64,
    pub min_margin: f64,
    pub m: DMatrix<f64>,
    /// Per species `(beta^11, beta^22, beta^33)`.
    pub beta: Vec<[f64; 3]>,
}

/// Evaluates the limit system cell by cell on the grid's own density and
/// scalar pressure fields.
///
/// The velocity solve uses central differences of `p^i + p^i_<11>` with
/// the grid's ghost rule and the cell's own mixture momentum as closure.
pub fn grid_limit(grid: &GridField, spec: &MixtureSpec) -> Result<Vec<CellLimit>, SimError> {
    super::check_species(grid, spec)?;
    let s = grid.species_count();
    let n = grid.n_cells();
    let local = grid
        .cells
        .par_iter()
        .enumerate()
        .map(|(j, cell)| {
            let rho: Vec<f64> = cell.iter().map(|c| c.rho).collect();
            let p: Vec<f64> = cell.iter().map(|c| c.scalar_pressure()).collect();
            let asm = assemble(spec, &rho, &p).map_err(|source| SimError::Limit { cell: j, source })?;
            let dev = solve_deviatoric(&asm).map_err(|source| SimError::Limit { cell: j, source })?;
            let min_margin = asm.margins.iter().cloned().fold(f64::INFINITY, f64::min);
            let compat = compatibility_residual(spec, &rho, &p).relative();
            let beta: Vec<[f64; 3]> = (0..s).map(|i| [asm.beta[0][i], asm.beta[1][i], asm.beta[2][i]]).collect();
            Ok((rho, p, dev, min_margin, compat, asm.m, beta))
        })
        .collect::<Result<Vec<_>, SimError>>()?;

    let q: Vec<Vec<f64>> = (0..s)
        .map(|i| local.iter().map(|(_, p, dev, ..)| p[i] + dev[i][0]).collect())
        .collect();
    (0..n)
        .map(|j| {
            let (rho, _, dev, min_margin, compat, m, beta) = &local[j];
            let jj = j as isize;
            let gradients: Vec<Vec3> = (0..s)
                .map(|i| {
                    let g = (grid.scalar_at(&q[i], jj + 1) - grid.scalar_at(&q[i], jj - 1)) / (2.0 * grid.dx);
                    Vec3::new(g, 0.0, 0.0)
                })
                .collect();
            let mean: Vec3 = grid.cells[j].iter().map(|c| c.u * c.rho).sum();
            let velocities = ms_velocity_solve_projected(spec, rho, &gradients, &mean)
                .map_err(|source| SimError::Limit { cell: j, source })?;
            Ok(CellLimit {
                x: grid.center(j),
                dev_diag: dev.clone(),
                velocities,
                compat_residual: *compat,
                min_margin: *min_margin,
                m: m.clone(),
                beta: beta.clone(),
            })
        })
        .collect()
}

/// `sqrt(dx sum v^2)` over a flattened per-cell field.
pub(crate) fn l2(values: &DVector<f64>, dx: f64) -> f64 {
    (values.norm_squared() * dx).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{SpeciesState, SymTensor};
    use crate::sim::Boundary;

    #[test]
    fn totals_of_simple_grid() {
        let spec = MixtureSpec::uniform_kernel(vec![1.0], 2.0, 0.5, 0.5).unwrap();
        let cells = vec![vec![SpeciesState::new(2.0, Vec3::new(1.0, 0.0, 0.0), SymTensor::isotropic(1.0))]; 4];
        let g = GridField::new(0.25, Boundary::Periodic, cells).unwrap();
        let t = totals(&g, &spec);
        assert!((t.masses[0] - 2.0).abs() < 1e-15);
        assert!((t.momentum[0] - 0.25 * 2.0).abs() < 1e-15);
        assert!((t.energy - (0.125 * 2.0 + 1.5)).abs() < 1e-14);
        assert!((t.internal_energy - 1.5).abs() < 1e-14);
    }

    #[test]
    fn sinusoidal_limit_velocities_balance_gradients() {
        let spec = MixtureSpec::uniform_kernel(vec![1.0, 1.0], 2.0, 2.0 / 3.0, 0.1).unwrap();
        let n = 32;
        let cells: Vec<_> = (0..n)
            .map(|j| {
                let x = (j as f64 + 0.5) / n as f64;
                let w = 0.1 * (2.0 * std::f64::consts::PI * x).sin();
                vec![SpeciesState::at_rest(1.0 + w, 1.0 + w), SpeciesState::at_rest(1.0 - w, 1.0 - w)]
            })
            .collect();
        let g = GridField::new(1.0 / n as f64, Boundary::Periodic, cells).unwrap();
        let lim = grid_limit(&g, &spec).unwrap();
        for (c, cell) in lim.iter().zip(&g.cells) {
            let u = &c.velocities;
            let net = cell[0].rho * u[0][0] + cell[1].rho * u[1][0];
            assert!(net.abs() < 1e-12 * u[0][0].abs().max(1e-3));
            assert!(c.dev_diag.iter().flatten().all(|d| d.abs() < 1e-14));
        }
    }
}
