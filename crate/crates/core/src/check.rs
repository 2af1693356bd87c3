//! Invariant checks on a grid state, without time stepping.

use crate::closure::{build_closure, quadrature_moments, GaussHermite, DEFAULT_POINTS};
use crate::collision::{energy_source, momentum_flux_source, momentum_source};
use crate::limit::{build_m, compatibility_residual};
use crate::model::MixtureSpec;
use crate::sim::{positivity_guard, GridField};

#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    /// Worst value found.
    pub value: f64,
    pub tolerance: f64,
}

fn check(name: &'static str, value: f64, tolerance: f64) -> CheckResult {
    CheckResult { name, passed: value <= tolerance, value, tolerance }
}

fn rel(a: f64, scale: f64) -> f64 {
    if scale > 0.0 {
        a.abs() / scale
    } else {
        a.abs()
    }
}

/// Runs every check over every cell and returns one line per check.
pub fn run_checks(grid: &GridField, spec: &MixtureSpec) -> Vec<CheckResult> {
    let alpha = spec.alpha();
    let s = grid.species_count();
    let mut out = vec![CheckResult {
        name: "states admissible",
        passed: positivity_guard(grid).is_ok() && s == spec.species_count(),
        value: 0.0,
        tolerance: 0.0,
    }];
    if !out[0].passed {
        return out;
    }
    let rule = GaussHermite::new(DEFAULT_POINTS);
    let (mut compat, mut mom, mut en, mut tr, mut margin, mut moments) = (0.0_f64, 0.0_f64, 0.0_f64, 0.0_f64, f64::INFINITY, 0.0_f64);
    for cell in &grid.cells {
        let rho: Vec<f64> = cell.iter().map(|c| c.rho).collect();
        let p: Vec<f64> = cell.iter().map(|c| c.scalar_pressure()).collect();
        compat = compat.max(compatibility_residual(spec, &rho, &p).relative());
        for i in 0..s {
            for j in 0..s {
                let (si, sj) = (&cell[i], &cell[j]);
                let (mi, mj) = (spec.mass(i), spec.mass(j));
                let (rij, rji) = (momentum_source(i, j, cell, spec), momentum_source(j, i, cell, spec));
                let mom_scale = spec.friction(i, j) * si.rho * sj.rho * (si.u.amax() + sj.u.amax());
                mom = mom.max(rel((rij + rji).amax(), mom_scale));
                // Size of the individual terms, so cancellation at equilibrium
                // is not mistaken for a large relative error.
                let c = 2.0 * std::f64::consts::PI * spec.l1(i, j) / ((mi + mj) * (mi + mj));
                let e_scale = c
                    * (6.0 * (mi * sj.rho * si.scalar_pressure().abs() + mj * si.rho * sj.scalar_pressure().abs()) / alpha
                        + 2.0 * alpha * si.rho * sj.rho * (mi + mj) * (si.u.norm() + sj.u.norm()).powi(2));
                let eij = energy_source(i, j, cell, spec, alpha).unwrap_or(f64::NAN);
                let eji = energy_source(j, i, cell, spec, alpha).unwrap_or(f64::NAN);
                en = en.max(rel(eij + eji, e_scale));
                let trace = momentum_flux_source(i, j, cell, spec, alpha).map(|t| t.trace()).unwrap_or(f64::NAN);
                tr = tr.max(rel(trace - eij, e_scale));
            }
        }
        if rho.iter().all(|r| *r > 0.0) {
            if let Ok((_, m)) = build_m(spec, &rho) {
                margin = margin.min(m.iter().cloned().fold(f64::INFINITY, f64::min));
            }
        }
        for (i, st) in cell.iter().enumerate() {
            if st.rho <= 0.0 {
                continue;
            }
            let Ok(cl) = build_closure(st, spec.mass(i), alpha) else {
                moments = f64::INFINITY;
                continue;
            };
            let Ok(ms) = quadrature_moments(&cl, &rule, 2) else {
                moments = f64::INFINITY;
                continue;
            };
            moments = moments.max(rel(ms.density - st.rho, st.rho));
            let c2 = ms.second_central.unwrap_or_default();
            let scale = st.p.max_abs();
            for k in 0..3 {
                moments = moments.max(rel(ms.first_central.unwrap_or_default()[k], st.rho));
                for l in 0..3 {
                    moments = moments.max(rel(c2[k][l] - st.p.get(k, l), scale));
                }
            }
        }
    }
    out.push(check("compatibility residual (relative)", compat, 1e-13));
    out.push(check("momentum source antisymmetry", mom, 1e-13));
    out.push(check("energy source antisymmetry", en, 1e-13));
    out.push(check("trace of momentum-flux source equals energy source", tr, 1e-13));
    out.push(CheckResult {
        name: "column dominance margins of M positive",
        passed: margin > 0.0,
        value: margin,
        tolerance: 0.0,
    });
    out.push(check("closure moments reproduce (rho, 0, p)", moments, 1e-9));
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets::{preset_state, GridShape, Preset};
    use crate::sim::Boundary;

    #[test]
    fn uniform_equilibrium_passes_everything() {
        let spec = MixtureSpec::uniform_kernel(vec![1.0, 2.0], 2.0, 2.0 / 3.0, 0.1).unwrap();
        let shape = GridShape { n_cells: 8, length: 1.0, bc: Boundary::Periodic };
        let g = preset_state(&Preset::UniformEquilibrium(Default::default()), shape, &spec, 1.0).unwrap();
        let res = run_checks(&g, &spec);
        assert_eq!(res.len(), 7);
        assert!(res.iter().all(|r| r.passed), "{res:?}");
    }
}
