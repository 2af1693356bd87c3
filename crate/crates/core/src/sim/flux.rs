//! First-order Rusanov transport for the truncated moment system.
//!
//! Per species the conserved vector is `(rho, rho u, E_kl)` with the raw
//! second moment `E = alpha^2 rho u u + p`. The flux along `x_1` is
//!
//! ```text
//! rho u_1
//! rho u_1 u_l + p_1l / alpha^2
//! u_k p_l1 + u_l p_1k + u_1 p_kl
//! ```
//!
//! in the slow time variable of the diffusive scaling. The cubic
//! `alpha^2 rho u u u` part of the third moment is dropped.

use rayon::prelude::*;

use crate::model::{SpeciesState, SymTensor, Vec3, SYM_PAIRS};

use super::{GridField, SimError};

pub const NCONS: usize = 10;
pub type Conserved = [f64; NCONS];

pub fn raw_second_moment(s: &SpeciesState, alpha: f64) -> SymTensor {
    s.p.add(&SymTensor::outer(&s.u).scale(alpha * alpha * s.rho))
}

pub fn conserved(s: &SpeciesState, alpha: f64) -> Conserved {
    let mut c = [0.0; NCONS];
    c[0] = s.rho;
    for l in 0..3 {
        c[1 + l] = s.rho * s.u[l];
    }
    c[4..].copy_from_slice(&raw_second_moment(s, alpha).0);
    c
}

pub fn primitive(c: &Conserved, alpha: f64) -> SpeciesState {
    let rho = c[0];
    let u = if rho != 0.0 {
        Vec3::new(c[1] / rho, c[2] / rho, c[3] / rho)
    } else {
        Vec3::zeros()
    };
    let mut e = [0.0; 6];
    e.copy_from_slice(&c[4..]);
    let p = SymTensor(e).sub(&SymTensor::outer(&u).scale(alpha * alpha * rho));
    SpeciesState { rho, u, p }
}

pub fn physical_flux(s: &SpeciesState, alpha: f64) -> Conserved {
    let inv_a2 = 1.0 / (alpha * alpha);
    let u = &s.u;
    let p = &s.p;
    let mut f = [0.0; NCONS];
    f[0] = s.rho * u[0];
    for l in 0..3 {
        f[1 + l] = s.rho * u[0] * u[l] + p.get(0, l) * inv_a2;
    }
    for (c, &(k, l)) in SYM_PAIRS.iter().enumerate() {
        f[4 + c] = u[k] * p.get(l, 0) + u[l] * p.get(0, k) + u[0] * p.get(k, l);
    }
    f
}

/// Bound on the characteristic speeds of one species, in slow-time units.
///
/// With `w = alpha u_1` and `c^2 = 3 p_11 / rho` the longitudinal speeds are
/// `(2 w +- sqrt(w^2 + c^2)) / alpha`; all other waves are slower.
pub fn signal_speed(s: &SpeciesState, alpha: f64) -> f64 {
    if s.rho <= 0.0 {
        return 0.0;
    }
    let w = alpha * s.u[0].abs();
    let c2 = 3.0 * s.p.get(0, 0).max(0.0) / s.rho;
    (2.0 * w + (w * w + c2).sqrt()) / alpha
}

pub fn max_signal(grid: &GridField, alpha: f64) -> f64 {
    grid.cells
        .iter()
        .flat_map(|c| c.iter())
        .map(|s| signal_speed(s, alpha))
        .fold(0.0, f64::max)
}

/// Largest stable step `cfl * dx / max_signal`.
pub fn cfl_dt(grid: &GridField, alpha: f64, cfl: f64) -> Result<f64, SimError> {
    if grid.cells.iter().flatten().all(|s| s.rho <= 0.0) {
        return Err(SimError::VacuumEverywhere);
    }
    let smax = max_signal(grid, alpha);
    if !(smax > 0.0) {
        return Err(SimError::VacuumEverywhere);
    }
    Ok(cfl * grid.dx / smax)
}

fn interface_flux(left: &[SpeciesState], right: &[SpeciesState], alpha: f64) -> Vec<Conserved> {
    let speed = left
        .iter()
        .chain(right.iter())
        .map(|s| signal_speed(s, alpha))
        .fold(0.0, f64::max);
    left.iter()
        .zip(right)
        .map(|(l, r)| {
            let (fl, fr) = (physical_flux(l, alpha), physical_flux(r, alpha));
            let (ul, ur) = (conserved(l, alpha), conserved(r, alpha));
            let mut f = [0.0; NCONS];
            for c in 0..NCONS {
                f[c] = 0.5 * (fl[c] + fr[c]) - 0.5 * speed * (ur[c] - ul[c]);
            }
            f
        })
        .collect()
}

/// Conservative increments `-dt/dx (F_{j+1/2} - F_{j-1/2})` per cell and species.
pub fn explicit_flux_update(grid: &GridField, alpha: f64, dt: f64) -> Result<Vec<Vec<Conserved>>, SimError> {
    if !(alpha > 0.0) {
        return Err(SimError::NonPositiveAlpha(alpha));
    }
    let limit = cfl_dt(grid, alpha, 1.0)?;
    if dt > limit {
        return Err(SimError::CflViolation { dt, limit });
    }
    let n = grid.n_cells();
    let s = grid.species_count();
    // Interface k sits between cells k-1 and k.
    let fluxes: Vec<Vec<Conserved>> = (0..=n)
        .into_par_iter()
        .map(|k| {
            let k = k as isize;
            let left: Vec<SpeciesState> = (0..s).map(|i| grid.state_at(k - 1, i)).collect();
            let right: Vec<SpeciesState> = (0..s).map(|i| grid.state_at(k, i)).collect();
            interface_flux(&left, &right, alpha)
        })
        .collect();
    let lambda = dt / grid.dx;
    Ok((0..n)
        .map(|j| {
            (0..s)
                .map(|i| {
                    let mut d = [0.0; NCONS];
                    for c in 0..NCONS {
                        d[c] = -lambda * (fluxes[j + 1][i][c] - fluxes[j][i][c]);
                    }
                    d
                })
                .collect()
        })
        .collect())
}

/// Adds increments to the conserved variables of every cell.
pub fn apply_increments(grid: &GridField, increments: &[Vec<Conserved>], alpha: f64) -> GridField {
    let cells = grid
        .cells
        .iter()
        .zip(increments)
        .map(|(cell, inc)| {
            cell.iter()
                .zip(inc)
                .map(|(s, d)| {
                    let mut c = conserved(s, alpha);
                    for k in 0..NCONS {
                        c[k] += d[k];
                    }
                    primitive(&c, alpha)
                })
                .collect()
        })
        .collect();
    GridField { dx: grid.dx, bc: grid.bc, cells }
}
