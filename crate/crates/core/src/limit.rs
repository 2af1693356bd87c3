//! Algebraic system obtained as `alpha -> 0`.
//!
//! At leading order the momentum-flux balance forces the off-diagonal
//! deviatoric stresses to zero and ties the diagonal ones to the scalar
//! pressures through the `S x S` matrix `M`. The momentum balance becomes a
//! generalized Maxwell-Stefan relation between pressure gradients and
//! velocity differences.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::model::{MixtureSpec, Vec3};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LimitError {
    #[error("every species is vacuum")]
    AllSpeciesVacuum,
    #[error("species {0} is vacuum")]
    VacuumSpecies(usize),
    #[error("summed gradient {sum:e} in direction {direction} exceeds tolerance {tolerance:e}")]
    IncompatibleGradients { direction: usize, sum: f64, tolerance: f64 },
    #[error("limit matrix is singular")]
    SingularMatrix,
    #[error("expected {expected} entries, got {got}")]
    LengthMismatch { expected: usize, got: usize },
}

/// Relative tolerance for the zero-sum gradient condition.
pub const GRADIENT_SUM_TOLERANCE: f64 = 1e-10;

/// `M`, the three `beta` vectors and the column dominance margins of `M`.
#[derive(Debug, Clone, PartialEq)]
pub struct LimitAssembly {
    pub m: DMatrix<f64>,
    /// `beta^{11}`, `beta^{22}`, `beta^{33}`.
    pub beta: [DVector<f64>; 3],
    pub margins: Vec<f64>,
}

/// Leading-order solution at one point.
#[derive(Debug, Clone, PartialEq)]
pub struct AsymptoticSolution {
    /// Per species `(p_<11>, p_<22>, p_<33>)`.
    pub dev_diag: Vec<[f64; 3]>,
    pub velocities: Vec<Vec3>,
    pub compat_residual: f64,
}

fn check_len(expected: usize, got: usize) -> Result<(), LimitError> {
    if expected == got {
        Ok(())
    } else {
        Err(LimitError::LengthMismatch { expected, got })
    }
}

/// Builds `M` and its transpose dominance margins `|M_ii| - sum_{j != i} |M_ji|`.
pub fn build_m(spec: &MixtureSpec, densities: &[f64]) -> Result<(DMatrix<f64>, Vec<f64>), LimitError> {
    let s = spec.species_count();
    check_len(s, densities.len())?;
    if !densities.iter().any(|&r| r > 0.0) {
        return Err(LimitError::AllSpeciesVacuum);
    }
    let mut m = DMatrix::zeros(s, s);
    for i in 0..s {
        let mi = spec.mass(i);
        for j in 0..s {
            let mj = spec.mass(j);
            let c = 2.0 * PI * spec.l1(i, j) / ((mi + mj) * (mi + mj));
            if j != i {
                m[(i, j)] = c * mj * densities[i];
            }
            m[(i, i)] -= c * (2.0 * mi + mj) * densities[j];
        }
        m[(i, i)] += 2.0 * PI * spec.l1(i, i) / (4.0 * mi * mi) * mi * densities[i];
    }
    let margins = (0..s)
        .map(|i| m[(i, i)].abs() - (0..s).filter(|&j| j != i).map(|j| m[(j, i)].abs()).sum::<f64>())
        .collect();
    Ok((m, margins))
}

/// `beta^{11} = beta^{22}` and `beta^{33}` evaluated from the scalar pressures.
pub fn build_beta(spec: &MixtureSpec, densities: &[f64], pressures: &[f64]) -> [DVector<f64>; 3] {
    let s = spec.species_count();
    let mut b11 = DVector::zeros(s);
    let mut b33 = DVector::zeros(s);
    for i in 0..s {
        let (mi, ri, pi) = (spec.mass(i), densities[i], pressures[i]);
        for j in 0..s {
            let (mj, rj, pj) = (spec.mass(j), densities[j], pressures[j]);
            let w = PI / ((mi + mj) * (mi + mj));
            let (l1, b) = (spec.l1(i, j), spec.b(i, j));
            let exchange = rj * pi + ri * pj;
            b11[i] += w * (l1 * ((mj - 4.0 * mi) * rj * pi + 5.0 * mj * ri * pj) - 3.0 * mj * b * exchange);
            b33[i] += w * 2.0 * (l1 * (-(2.0 * mi + mj) * rj * pi + mj * ri * pj) + 3.0 * mj * b * exchange);
        }
    }
    [b11.clone(), b11, b33]
}

pub fn assemble(spec: &MixtureSpec, densities: &[f64], pressures: &[f64]) -> Result<LimitAssembly, LimitError> {
    check_len(spec.species_count(), pressures.len())?;
    let (m, margins) = build_m(spec, densities)?;
    let beta = build_beta(spec, densities, pressures);
    Ok(LimitAssembly { m, beta, margins })
}

/// Diagonal deviatoric stresses at leading order, from `M P_<ll> + beta^{ll} = 0`.
pub fn solve_deviatoric(assembly: &LimitAssembly) -> Result<Vec<[f64; 3]>, LimitError> {
    let s = assembly.m.nrows();
    let lu = assembly.m.clone().lu();
    let mut out = vec![[0.0; 3]; s];
    for (l, beta) in assembly.beta.iter().enumerate() {
        let x = lu.solve(&(-beta)).ok_or(LimitError::SingularMatrix)?;
        if x.iter().any(|v| !v.is_finite()) {
            return Err(LimitError::SingularMatrix);
        }
        for i in 0..s {
            out[i][l] = x[i];
        }
    }
    Ok(out)
}

/// Per-species compatibility residuals and their sum.
#[derive(Debug, Clone, PartialEq)]
pub struct CompatResidual {
    pub per_species: Vec<f64>,
    pub sum: f64,
    /// Largest single pair term, for relative comparisons.
    pub scale: f64,
}

impl CompatResidual {
    pub fn max_abs(&self) -> f64 {
        self.per_species.iter().fold(0.0_f64, |m, r| m.max(r.abs()))
    }

    /// `max_abs / scale`, zero for an all-vacuum point.
    pub fn relative(&self) -> f64 {
        if self.scale > 0.0 {
            self.max_abs() / self.scale
        } else {
            0.0
        }
    }
}

/// `r_i = sum_j ||b^{ij}|| / (m_i + m_j)^2 (m_j rho^i p^j - m_i rho^j p^i)`.
pub fn compatibility_residual(spec: &MixtureSpec, densities: &[f64], pressures: &[f64]) -> CompatResidual {
    let s = spec.species_count();
    let mut per_species = vec![0.0; s];
    let mut scale = 0.0_f64;
    for i in 0..s {
        for j in 0..s {
            let (mi, mj) = (spec.mass(i), spec.mass(j));
            let w = spec.l1(i, j) / ((mi + mj) * (mi + mj));
            let a = w * mj * densities[i] * pressures[j];
            let b = w * mi * densities[j] * pressures[i];
            scale = scale.max(a.abs()).max(b.abs());
            per_species[i] += a - b;
        }
    }
    let sum = per_species.iter().sum();
    CompatResidual { per_species, sum, scale }
}

/// Solves `g^i = sum_j K_ij rho^i rho^j (u^j - u^i)` in every direction,
/// closed by `sum_i rho^i u^i = mean_momentum`.
///
/// Gradients whose species sum is within tolerance of zero are projected
/// onto the zero-sum subspace first; larger sums are rejected.
pub fn ms_velocity_solve(
    spec: &MixtureSpec,
    densities: &[f64],
    gradients: &[Vec3],
    mean_momentum: &Vec3,
) -> Result<Vec<Vec3>, LimitError> {
    velocity_solve(spec, densities, gradients, mean_momentum, Some(GRADIENT_SUM_TOLERANCE))
}

/// As [`ms_velocity_solve`] but always projects the gradients, whatever
/// their species sum. Used on simulated fields, where the total pressure
/// gradient only vanishes up to the truncation order.
pub fn ms_velocity_solve_projected(
    spec: &MixtureSpec,
    densities: &[f64],
    gradients: &[Vec3],
    mean_momentum: &Vec3,
) -> Result<Vec<Vec3>, LimitError> {
    velocity_solve(spec, densities, gradients, mean_momentum, None)
}

fn velocity_solve(
    spec: &MixtureSpec,
    densities: &[f64],
    gradients: &[Vec3],
    mean_momentum: &Vec3,
    relative_tolerance: Option<f64>,
) -> Result<Vec<Vec3>, LimitError> {
    let s = spec.species_count();
    check_len(s, densities.len())?;
    check_len(s, gradients.len())?;
    if let Some(i) = densities.iter().position(|&r| !(r > 0.0)) {
        return Err(LimitError::VacuumSpecies(i));
    }
    let scale = gradients.iter().fold(0.0_f64, |m, g| m.max(g.amax()));

    // Rows 0..S-1 are the exchange equations, the last row is replaced by
    // the momentum constraint.
    let mut a = DMatrix::zeros(s, s);
    for i in 0..s {
        for j in 0..s {
            if i != j {
                let k = spec.friction(i, j) * densities[i] * densities[j];
                a[(i, j)] += k;
                a[(i, i)] -= k;
            }
        }
    }
    for j in 0..s {
        a[(s - 1, j)] = densities[j];
    }
    let lu = a.lu();

    let mut out = vec![Vec3::zeros(); s];
    for dir in 0..3 {
        let sum: f64 = gradients.iter().map(|g| g[dir]).sum();
        if let Some(rel) = relative_tolerance {
            let tolerance = rel * scale;
            if sum.abs() > tolerance {
                return Err(LimitError::IncompatibleGradients { direction: dir, sum, tolerance });
            }
        }
        let shift = sum / s as f64;
        let mut rhs = DVector::from_iterator(s, gradients.iter().map(|g| g[dir] - shift));
        rhs[s - 1] = mean_momentum[dir];
        let x = lu.solve(&rhs).ok_or(LimitError::SingularMatrix)?;
        if x.iter().any(|v| !v.is_finite()) {
            return Err(LimitError::SingularMatrix);
        }
        for i in 0..s {
            out[i][dir] = x[i];
        }
    }
    Ok(out)
}

/// Deviatoric stresses, velocities and compatibility at one point, given
/// the gradients of `p^i + p^i_<ll>`.
pub fn solve_point(
    spec: &MixtureSpec,
    densities: &[f64],
    pressures: &[f64],
    gradients: &[Vec3],
    mean_momentum: &Vec3,
) -> Result<AsymptoticSolution, LimitError> {
    let assembly = assemble(spec, densities, pressures)?;
    let dev_diag = solve_deviatoric(&assembly)?;
    let velocities = ms_velocity_solve(spec, densities, gradients, mean_momentum)?;
    let compat_residual = compatibility_residual(spec, densities, pressures).max_abs();
    Ok(AsymptoticSolution { dev_diag, velocities, compat_residual })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ideal_gas_pressure;

    #[test]
    fn single_species_matrix() {
        let spec = MixtureSpec::uniform_kernel(vec![1.0], 2.0, 2.0 / 3.0, 0.1).unwrap();
        let (m, margins) = build_m(&spec, &[1.0]).unwrap();
        assert!((m[(0, 0)] + 2.0 * PI).abs() < 1e-14);
        assert!((margins[0] - 2.0 * PI).abs() < 1e-14);
    }

    #[test]
    fn binary_margins_match_closed_form() {
        let spec = MixtureSpec::new(
            vec![1.5, 1.5],
            vec![vec![1.0, 2.0], vec![2.0, 0.5]],
            vec![vec![0.2, 0.3], vec![0.3, 0.1]],
            0.1,
        )
        .unwrap();
        let rho = [0.7, 1.9];
        let (_, margins) = build_m(&spec, &rho).unwrap();
        let m = 1.5;
        for i in 0..2 {
            let j = 1 - i;
            let expected = PI * spec.l1(i, i) * rho[i] / m + 2.0 * PI * spec.l1(i, j) * rho[j] / (2.0 * m);
            assert!((margins[i] - expected).abs() < 1e-13, "{} vs {}", margins[i], expected);
        }
    }

    #[test]
    fn vacuum_matrix_rejected() {
        let spec = MixtureSpec::uniform_kernel(vec![1.0, 2.0], 1.0, 0.1, 0.1).unwrap();
        assert_eq!(build_m(&spec, &[0.0, 0.0]), Err(LimitError::AllSpeciesVacuum));
    }

    #[test]
    fn beta_single_species() {
        let spec = MixtureSpec::uniform_kernel(vec![1.0], 2.0, 2.0 / 3.0, 0.1).unwrap();
        let b = build_beta(&spec, &[1.3], &[0.9]);
        assert!(b[0][0].abs() < 1e-14 && b[2][0].abs() < 1e-14);

        let spec = MixtureSpec::uniform_kernel(vec![2.0], 1.0, 0.0, 0.1).unwrap();
        let (rho, p, m) = (1.3, 0.9, 2.0);
        let b = build_beta(&spec, &[rho], &[p]);
        assert!((b[0][0] - PI * rho * p / (2.0 * m)).abs() < 1e-14);
        assert!((b[2][0] + PI * rho * p / m).abs() < 1e-14);
        assert!((2.0 * b[0][0] + b[2][0]).abs() < 1e-14);
        assert_eq!(b[0], b[1]);
    }

    #[test]
    fn constant_kernel_single_species_has_no_deviator() {
        let spec = MixtureSpec::uniform_kernel(vec![1.0], 2.0, 2.0 / 3.0, 0.1).unwrap();
        let a = assemble(&spec, &[1.0], &[5.0 / 3.0]).unwrap();
        let d = solve_deviatoric(&a).unwrap();
        assert!(d[0].iter().all(|x| x.abs() < 1e-15));
    }

    #[test]
    fn compat_examples() {
        let spec = MixtureSpec::uniform_kernel(vec![1.0], 1.0, 0.2, 0.1).unwrap();
        let r = compatibility_residual(&spec, &[1.2], &[0.4]);
        assert_eq!(r.per_species[0], 0.0);

        let spec = MixtureSpec::new(
            vec![1.0, 3.0],
            vec![vec![1.0, 0.8], vec![0.8, 1.4]],
            vec![vec![0.2, 0.2], vec![0.2, 0.3]],
            0.1,
        )
        .unwrap();
        let rho = [0.6, 1.4];
        let t = 1.2;
        let p: Vec<f64> = (0..2).map(|i| ideal_gas_pressure(rho[i], t, spec.mass(i)).unwrap()).collect();
        let r = compatibility_residual(&spec, &rho, &p);
        assert!(r.max_abs() <= 1e-13 * r.scale);
        let r = compatibility_residual(&spec, &rho, &[p[0] * 1.1, p[1]]);
        assert!(r.per_species[0].abs() > 1e-3);
        assert!((r.per_species[0] + r.per_species[1]).abs() < 1e-15);
    }

    #[test]
    fn hand_solved_binary_velocities() {
        let spec = MixtureSpec::uniform_kernel(vec![1.0, 1.0], 2.0, 2.0 / 3.0, 0.1).unwrap();
        let g = 0.37;
        let u = ms_velocity_solve(
            &spec,
            &[1.0, 1.0],
            &[Vec3::new(g, 0.0, 0.0), Vec3::new(-g, 0.0, 0.0)],
            &Vec3::zeros(),
        )
        .unwrap();
        assert!((u[0][0] + g / (4.0 * PI)).abs() < 1e-15);
        assert!((u[1][0] - g / (4.0 * PI)).abs() < 1e-15);
        assert_eq!(u[0][1], 0.0);
    }

    #[test]
    fn zero_gradients_give_mean_drift() {
        let spec = MixtureSpec::uniform_kernel(vec![1.0, 2.0, 3.0], 1.0, 0.3, 0.1).unwrap();
        let rho = [0.5, 1.0, 1.5];
        let c = Vec3::new(0.3, -0.6, 1.2);
        let u = ms_velocity_solve(&spec, &rho, &[Vec3::zeros(); 3], &c).unwrap();
        for ui in &u {
            assert!((ui - c / 3.0).norm() < 1e-14);
        }
    }

    #[test]
    fn incompatible_gradients_rejected() {
        let spec = MixtureSpec::uniform_kernel(vec![1.0, 1.0], 2.0, 0.5, 0.1).unwrap();
        let r = ms_velocity_solve(
            &spec,
            &[1.0, 1.0],
            &[Vec3::new(1.0, 0.0, 0.0), Vec3::new(-0.9, 0.0, 0.0)],
            &Vec3::zeros(),
        );
        assert!(matches!(r, Err(LimitError::IncompatibleGradients { direction: 0, .. })));
        let r = ms_velocity_solve(&spec, &[1.0, 0.0], &[Vec3::zeros(); 2], &Vec3::zeros());
        assert_eq!(r, Err(LimitError::VacuumSpecies(1)));
    }
}
