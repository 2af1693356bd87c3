//! Closed-form collision moments for Maxwell molecules.
//!
//! Every function returns the contribution of one ordered species pair
//! `(i, j)`; totals are sums over `j`. The momentum-flux source is the only
//! term with a `1/alpha` part, and it is available split into its stiff and
//! non-stiff blocks through [`flux_source_split`].

use std::f64::consts::PI;

use thiserror::Error;

use crate::model::{MixtureSpec, SpeciesState, SymTensor, Vec3, SYM_PAIRS};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CollisionError {
    #[error("kernel scalars must satisfy 0 <= B <= ||b||_L1 (got L1 = {l1}, B = {b})")]
    InvalidKernelScalars { l1: f64, b: f64 },
    #[error("alpha = {0} must be strictly positive")]
    NonPositiveAlpha(f64),
}

/// Angular integrals `A_kl = int b(cos theta) sin theta sigma_k sigma_l`.
/// Only the diagonal survives the azimuthal integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AngularCoeffs {
    pub diag: [f64; 3],
}

impl AngularCoeffs {
    pub fn get(&self, k: usize, l: usize) -> f64 {
        if k == l {
            self.diag[k]
        } else {
            0.0
        }
    }

    pub fn trace(&self) -> f64 {
        self.diag[0] + self.diag[1] + self.diag[2]
    }
}

pub fn angular_coeffs(l1: f64, b: f64) -> Result<AngularCoeffs, CollisionError> {
    if !(b >= 0.0 && b <= l1) || !l1.is_finite() {
        return Err(CollisionError::InvalidKernelScalars { l1, b });
    }
    Ok(pair_angular(l1, b))
}

// A_33 = 2 pi B and A_11 + A_22 = 2 pi (L1 - B): the trace is 2 pi L1.
fn pair_angular(l1: f64, b: f64) -> AngularCoeffs {
    let transverse = PI * (l1 - b);
    AngularCoeffs {
        diag: [transverse, transverse, 2.0 * PI * b],
    }
}

/// Momentum exchange `R^{ij} = 2 pi ||b^{ij}|| / (m_i + m_j) rho^i rho^j (u^j - u^i)`,
/// without any power of alpha.
pub fn momentum_source(i: usize, j: usize, states: &[SpeciesState], spec: &MixtureSpec) -> Vec3 {
    let (si, sj) = (&states[i], &states[j]);
    (sj.u - si.u) * (spec.friction(i, j) * si.rho * sj.rho)
}

/// Momentum-flux source of pair `(i, j)` separated by its power of alpha:
/// the full source is `stiff / alpha + alpha * kinetic`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FluxSourceSplit {
    /// Coefficient of `1/alpha`; linear in the two pressure tensors.
    pub stiff: SymTensor,
    /// Coefficient of `alpha`; quadratic in the velocities.
    pub kinetic: SymTensor,
}

impl FluxSourceSplit {
    pub fn total(&self, alpha: f64) -> SymTensor {
        let mut t = [0.0; 6];
        for (c, out) in t.iter_mut().enumerate() {
            *out = self.stiff.0[c] / alpha + alpha * self.kinetic.0[c];
        }
        SymTensor(t)
    }
}

/// Pair constants `2 pi L1 / (m_i + m_j)^2` and `m_j A / (m_i + m_j)^2`.
struct PairFactors {
    c: f64,
    mi: f64,
    mj: f64,
    a_weight: [f64; 3],
}

impl PairFactors {
    fn new(i: usize, j: usize, spec: &MixtureSpec) -> Self {
        let (mi, mj) = (spec.mass(i), spec.mass(j));
        let sum2 = (mi + mj) * (mi + mj);
        let a = pair_angular(spec.l1(i, j), spec.b(i, j));
        PairFactors {
            c: 2.0 * PI * spec.l1(i, j) / sum2,
            mi,
            mj,
            a_weight: a.diag.map(|x| mj * x / sum2),
        }
    }
}

/// Stiff block of the pair source as a function of the densities and the
/// two pressure tensors only. Linear in `(p_i, p_j)`; the simulator builds
/// its implicit matrix from this function.
pub fn stiff_block(
    i: usize,
    j: usize,
    spec: &MixtureSpec,
    rho_i: f64,
    rho_j: f64,
    p_i: &SymTensor,
    p_j: &SymTensor,
) -> SymTensor {
    let f = PairFactors::new(i, j, spec);
    let exchange = 3.0 * (rho_j * p_i.mean() + rho_i * p_j.mean());
    let mut t = [0.0; 6];
    for (c, &(k, l)) in SYM_PAIRS.iter().enumerate() {
        let mut v = f.c * (-(2.0 * f.mi + f.mj) * rho_j * p_i.0[c] + f.mj * rho_i * p_j.0[c]);
        if k == l {
            v += f.a_weight[k] * exchange;
        }
        t[c] = v;
    }
    SymTensor(t)
}

/// Velocity-quadratic block of the pair source.
pub fn kinetic_block(i: usize, j: usize, states: &[SpeciesState], spec: &MixtureSpec) -> SymTensor {
    let f = PairFactors::new(i, j, spec);
    let (si, sj) = (&states[i], &states[j]);
    let rr = si.rho * sj.rho;
    let rel2 = (si.u - sj.u).norm_squared();
    let (ui, uj) = (&si.u, &sj.u);
    let mut t = [0.0; 6];
    for (c, &(k, l)) in SYM_PAIRS.iter().enumerate() {
        let mut v = f.c
            * rr
            * (-(2.0 * f.mi + f.mj) * ui[k] * ui[l]
                + f.mi * (ui[k] * uj[l] + ui[l] * uj[k])
                + f.mj * uj[k] * uj[l]);
        if k == l {
            v += f.a_weight[k] * rr * rel2;
        }
        t[c] = v;
    }
    SymTensor(t)
}

pub fn flux_source_split(i: usize, j: usize, states: &[SpeciesState], spec: &MixtureSpec) -> FluxSourceSplit {
    let (si, sj) = (&states[i], &states[j]);
    FluxSourceSplit {
        stiff: stiff_block(i, j, spec, si.rho, sj.rho, &si.p, &sj.p),
        kinetic: kinetic_block(i, j, states, spec),
    }
}

/// Right-hand side of the momentum-flux balance for pair `(i, j)`.
pub fn momentum_flux_source(
    i: usize,
    j: usize,
    states: &[SpeciesState],
    spec: &MixtureSpec,
    alpha: f64,
) -> Result<SymTensor, CollisionError> {
    check_alpha(alpha)?;
    Ok(flux_source_split(i, j, states, spec).total(alpha))
}

/// Right-hand side of the species energy balance for pair `(i, j)`.
pub fn energy_source(
    i: usize,
    j: usize,
    states: &[SpeciesState],
    spec: &MixtureSpec,
    alpha: f64,
) -> Result<f64, CollisionError> {
    check_alpha(alpha)?;
    let (si, sj) = (&states[i], &states[j]);
    let (mi, mj) = (spec.mass(i), spec.mass(j));
    let c = 2.0 * PI * spec.l1(i, j) / ((mi + mj) * (mi + mj));
    let (pi, pj) = (si.scalar_pressure(), sj.scalar_pressure());
    let stiff = -6.0 * mi * sj.rho * pi + 6.0 * mj * si.rho * pj;
    let kinetic = si.rho
        * sj.rho
        * (-2.0 * mi * si.u.norm_squared() + 2.0 * (mi - mj) * si.u.dot(&sj.u) + 2.0 * mj * sj.u.norm_squared());
    Ok(c * (stiff / alpha + alpha * kinetic))
}

fn check_alpha(alpha: f64) -> Result<(), CollisionError> {
    if alpha > 0.0 {
        Ok(())
    } else {
        Err(CollisionError::NonPositiveAlpha(alpha))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pair_spec() -> MixtureSpec {
        MixtureSpec::new(
            vec![1.0, 2.5],
            vec![vec![2.0, 1.3], vec![1.3, 0.7]],
            vec![vec![2.0 / 3.0, 0.4], vec![0.4, 0.1]],
            0.2,
        )
        .unwrap()
    }

    fn pair_states() -> Vec<SpeciesState> {
        vec![
            SpeciesState::new(0.8, Vec3::new(0.3, -0.2, 0.5), SymTensor::new(1.1, 0.9, 1.3, 0.05, -0.1, 0.02)),
            SpeciesState::new(1.7, Vec3::new(-0.4, 0.1, 0.0), SymTensor::new(0.6, 0.7, 0.5, -0.03, 0.0, 0.08)),
        ]
    }

    #[test]
    fn angular_examples() {
        let a = angular_coeffs(2.0, 2.0 / 3.0).unwrap();
        for k in 0..3 {
            assert!((a.diag[k] - 4.0 * PI / 3.0).abs() < 1e-14);
        }
        let a = angular_coeffs(2.0 / 3.0, 2.0 / 5.0).unwrap();
        assert!((a.diag[0] - 4.0 * PI / 15.0).abs() < 1e-14);
        assert!((a.diag[1] - 4.0 * PI / 15.0).abs() < 1e-14);
        assert!((a.diag[2] - 4.0 * PI / 5.0).abs() < 1e-14);
        let a = angular_coeffs(1.0, 0.0).unwrap();
        assert_eq!(a.diag, [PI, PI, 0.0]);
        assert_eq!(a.get(0, 1), 0.0);
        assert!(angular_coeffs(1.0, 1.5).is_err());
        assert!(angular_coeffs(1.0, -0.1).is_err());
    }

    #[test]
    fn momentum_source_examples() {
        let spec = MixtureSpec::uniform_kernel(vec![1.0, 1.0], 2.0, 2.0 / 3.0, 0.1).unwrap();
        let states = vec![
            SpeciesState::new(1.0, Vec3::new(1.0, 0.0, 0.0), SymTensor::isotropic(1.0)),
            SpeciesState::new(1.0, Vec3::zeros(), SymTensor::isotropic(1.0)),
        ];
        let r = momentum_source(0, 1, &states, &spec);
        assert!((r - Vec3::new(-2.0 * PI, 0.0, 0.0)).norm() < 1e-14);
        assert_eq!(momentum_source(0, 0, &states, &spec), Vec3::zeros());
        assert_eq!(momentum_source(1, 0, &states, &spec), -r);
    }

    #[test]
    fn isotropic_single_species_is_fixed_point() {
        let spec = MixtureSpec::uniform_kernel(vec![1.0], 2.0, 2.0 / 3.0, 0.1).unwrap();
        let states = vec![SpeciesState::at_rest(1.0, 1.7)];
        let s = momentum_flux_source(0, 0, &states, &spec, 0.1).unwrap();
        assert!(s.max_abs() < 1e-13);
    }

    #[test]
    fn split_recombines_exactly() {
        let spec = pair_spec();
        let states = pair_states();
        for (i, j) in [(0, 1), (1, 0), (0, 0)] {
            let split = flux_source_split(i, j, &states, &spec);
            let full = momentum_flux_source(i, j, &states, &spec, 0.2).unwrap();
            assert_eq!(split.total(0.2), full);
        }
    }

    #[test]
    fn trace_matches_energy_source() {
        let spec = pair_spec();
        let states = pair_states();
        for (i, j) in [(0, 1), (1, 0), (0, 0), (1, 1)] {
            let t = momentum_flux_source(i, j, &states, &spec, 0.2).unwrap().trace();
            let e = energy_source(i, j, &states, &spec, 0.2).unwrap();
            assert!((t - e).abs() <= 1e-13 * t.abs().max(e.abs()).max(1.0), "{i}{j}: {t} vs {e}");
        }
    }

    #[test]
    fn energy_source_examples() {
        let spec = pair_spec();
        let states = pair_states();
        assert!(energy_source(0, 0, &states, &spec, 0.2).unwrap().abs() < 1e-14);
        let e01 = energy_source(0, 1, &states, &spec, 0.2).unwrap();
        let e10 = energy_source(1, 0, &states, &spec, 0.2).unwrap();
        assert!((e01 + e10).abs() <= 1e-13 * e01.abs());

        let same = MixtureSpec::uniform_kernel(vec![1.3, 1.3], 1.0, 0.2, 0.2).unwrap();
        let s = SpeciesState::new(0.9, Vec3::new(0.2, 0.1, -0.3), SymTensor::isotropic(0.8));
        assert!(energy_source(0, 1, &[s, s], &same, 0.2).unwrap().abs() < 1e-15);
    }

    #[test]
    fn off_diagonal_has_no_angular_part() {
        // With p and u chosen so only the A-block could contribute off the
        // diagonal, the off-diagonal entries vanish.
        let spec = pair_spec();
        let states = vec![
            SpeciesState::new(1.0, Vec3::new(1.0, 0.0, 0.0), SymTensor::isotropic(1.0)),
            SpeciesState::new(1.0, Vec3::new(0.0, 0.0, 0.0), SymTensor::isotropic(2.0)),
        ];
        let s = momentum_flux_source(0, 1, &states, &spec, 0.5).unwrap();
        assert_eq!(s.get(0, 1), 0.0);
        assert_eq!(s.get(0, 2), 0.0);
        assert_eq!(s.get(1, 2), 0.0);
    }

    #[test]
    fn alpha_must_be_positive() {
        let spec = pair_spec();
        let states = pair_states();
        assert!(momentum_flux_source(0, 1, &states, &spec, 0.0).is_err());
        assert!(energy_source(0, 1, &states, &spec, -1.0).is_err());
    }
}
