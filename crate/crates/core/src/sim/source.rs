//! Backward-Euler treatment of the collision sources at frozen densities.
//!
//! Velocities relax first. The raw second moment `E = alpha^2 rho u u + p`
//! is left alone by that sub-step, so friction heat moves into `p`. The
//! second sub-step solves the stiff block implicitly for `E` (equivalently
//! `p`, since `u` is frozen) with the velocity-quadratic block explicit.

use nalgebra::{DMatrix, DVector};

use crate::collision::{kinetic_block, stiff_block};
use crate::model::{MixtureSpec, SpeciesState, SymTensor, Vec3};

use super::flux::raw_second_moment;

/// Failure of one cell's source solve; the caller attaches the cell index.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SolveFailure;

/// `K_ij rho_i rho_j` coupling matrix: `R_i = sum_j G_ij u_j` per direction.
fn friction_matrix(spec: &MixtureSpec, rho: &[f64]) -> DMatrix<f64> {
    let s = rho.len();
    let mut g = DMatrix::zeros(s, s);
    for i in 0..s {
        for j in 0..s {
            if i != j {
                let k = spec.friction(i, j) * rho[i] * rho[j];
                g[(i, j)] += k;
                g[(i, i)] -= k;
            }
        }
    }
    g
}

/// Velocity relaxation `rho_i du_i/dt = R_i / alpha^2` over `h`.
///
/// The exchange rows sum to mixture momentum conservation, so one of them
/// is replaced by that constraint; this keeps `sum rho u` exact to rounding
/// however stiff the step.
pub fn relax_velocities(cell: &[SpeciesState], spec: &MixtureSpec, h_scaled: f64) -> Result<Vec<Vec3>, SolveFailure> {
    let s = cell.len();
    let rho: Vec<f64> = cell.iter().map(|c| c.rho).collect();
    let mut a = -friction_matrix(spec, &rho).scale(h_scaled);
    let mut constraint_row = None;
    for i in 0..s {
        if rho[i] > 0.0 {
            a[(i, i)] += rho[i];
            constraint_row = Some(i);
        } else {
            a.row_mut(i).fill(0.0);
            a[(i, i)] = 1.0;
        }
    }
    let Some(last) = constraint_row else {
        return Ok(cell.iter().map(|c| c.u).collect());
    };
    for j in 0..s {
        a[(last, j)] = rho[j];
    }
    let lu = a.lu();
    let mut u: Vec<Vec3> = cell.iter().map(|c| c.u).collect();
    for dir in 0..3 {
        let mut rhs = DVector::from_iterator(s, cell.iter().map(|c| if c.rho > 0.0 { c.rho * c.u[dir] } else { c.u[dir] }));
        rhs[last] = cell.iter().map(|c| c.rho * c.u[dir]).sum();
        let x = lu.solve(&rhs).ok_or(SolveFailure)?;
        for i in 0..s {
            u[i][dir] = x[i];
        }
    }
    Ok(u)
}

/// Matrix of the summed stiff block acting on the packed `6 S` pressure
/// components, assembled column by column.
pub fn stiff_matrix(spec: &MixtureSpec, rho: &[f64]) -> DMatrix<f64> {
    let s = rho.len();
    let n = 6 * s;
    let mut l = DMatrix::zeros(n, n);
    let mut basis = vec![SymTensor::ZERO; s];
    for q in 0..s {
        for c in 0..6 {
            basis[q].0[c] = 1.0;
            for i in 0..s {
                let mut out = SymTensor::ZERO;
                for j in 0..s {
                    out = out.add(&stiff_block(i, j, spec, rho[i], rho[j], &basis[i], &basis[j]));
                }
                for r in 0..6 {
                    l[(6 * i + r, 6 * q + c)] = out.0[r];
                }
            }
            basis[q].0[c] = 0.0;
        }
    }
    l
}

/// One backward-Euler source step of length `dt` on a single cell.
pub fn implicit_source_cell(
    cell: &[SpeciesState],
    spec: &MixtureSpec,
    alpha: f64,
    dt: f64,
) -> Result<Vec<SpeciesState>, SolveFailure> {
    let s = cell.len();
    let a2 = alpha * alpha;
    let h_scaled = dt / a2;

    let u_star = relax_velocities(cell, spec, h_scaled)?;
    let mut mid: Vec<SpeciesState> = cell
        .iter()
        .zip(&u_star)
        .map(|(c, u)| {
            let e = raw_second_moment(c, alpha);
            let p = e.sub(&SymTensor::outer(u).scale(a2 * c.rho));
            SpeciesState { rho: c.rho, u: *u, p }
        })
        .collect();

    let rho: Vec<f64> = cell.iter().map(|c| c.rho).collect();
    let l = stiff_matrix(spec, &rho);
    let p0 = DVector::from_iterator(6 * s, mid.iter().flat_map(|c| c.p.0));
    let mut kin = DVector::zeros(6 * s);
    for i in 0..s {
        let mut k = SymTensor::ZERO;
        for j in 0..s {
            k = k.add(&kinetic_block(i, j, &mid, spec));
        }
        for r in 0..6 {
            kin[6 * i + r] = k.0[r];
        }
    }
    let system = DMatrix::identity(6 * s, 6 * s) - l.scale(h_scaled);
    let rhs = (&l * &p0).scale(h_scaled) + kin.scale(dt);
    let dp = system.lu().solve(&rhs).ok_or(SolveFailure)?;
    if dp.iter().any(|v| !v.is_finite()) {
        return Err(SolveFailure);
    }
    for (i, c) in mid.iter_mut().enumerate() {
        for r in 0..6 {
            c.p.0[r] += dp[6 * i + r];
        }
    }
    Ok(mid)
}
