//! Ten-moment maximum-entropy closure.
//!
//! Each species is described by an anisotropic Gaussian whose covariance is
//! `p / rho`. The module evaluates that density, checks its moments by
//! tensorized Gauss-Hermite quadrature and provides the closed-form flux of
//! the momentum flux used by the solver.

use std::f64::consts::PI;

use nalgebra::{Matrix3, SymmetricEigen};
use thiserror::Error;

use crate::model::{SpeciesState, Vec3};

/// Default number of Gauss-Hermite points per axis.
pub const DEFAULT_POINTS: usize = 16;
/// Fewest points per axis accepted by [`quadrature_moments`].
pub const MIN_POINTS: usize = 8;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ClosureError {
    #[error("density {0} must be strictly positive")]
    NonPositiveDensity(f64),
    #[error("pressure tensor is not positive definite")]
    NonPositiveDefinitePressure,
    #[error("quadrature needs at least {MIN_POINTS} points per axis, got {0}")]
    QuadratureOrderTooLow(usize),
    #[error("moment order {0} is above 3")]
    OrderTooHigh(usize),
}

pub type Tensor3 = [[[f64; 3]; 3]; 3];

/// Gauss-Hermite rule for `int exp(-x^2) g(x) dx`.
#[derive(Debug, Clone)]
pub struct GaussHermite {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussHermite {
    /// Nodes by Newton iteration on the orthonormal Hermite recurrence.
    pub fn new(n: usize) -> Self {
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let pim4 = PI.powf(-0.25);
        let m = n.div_ceil(2);
        let nf = n as f64;
        let mut z = 0.0_f64;
        for i in 0..m {
            z = match i {
                0 => (2.0 * nf + 1.0).sqrt() - 1.85575 * (2.0 * nf + 1.0).powf(-1.0 / 6.0),
                1 => z - 1.14 * nf.powf(0.426) / z,
                2 => 1.86 * z - 0.86 * nodes[0],
                3 => 1.91 * z - 0.91 * nodes[1],
                _ => 2.0 * z - nodes[i - 2],
            };
            let mut pp = 0.0;
            for _ in 0..100 {
                let mut p1 = pim4;
                let mut p2 = 0.0;
                for j in 0..n {
                    let p3 = p2;
                    p2 = p1;
                    let jf = j as f64;
                    p1 = z * (2.0 / (jf + 1.0)).sqrt() * p2 - (jf / (jf + 1.0)).sqrt() * p3;
                }
                pp = (2.0 * nf).sqrt() * p2;
                let z1 = z;
                z = z1 - p1 / pp;
                if (z - z1).abs() <= 1e-15 * z.abs().max(1.0) {
                    break;
                }
            }
            nodes[i] = z;
            nodes[n - 1 - i] = -z;
            weights[i] = 2.0 / (pp * pp);
            weights[n - 1 - i] = weights[i];
        }
        GaussHermite { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

/// The maximum-entropy distribution of one species.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianClosure {
    pub mass: f64,
    /// `rho / m`.
    pub number_density: f64,
    /// `alpha * u`.
    pub mean: Vec3,
    /// `p / rho`.
    pub covariance: Matrix3<f64>,
    rho: f64,
    p_inverse: Matrix3<f64>,
    prefactor: f64,
}

pub fn build_closure(state: &SpeciesState, mass: f64, alpha: f64) -> Result<GaussianClosure, ClosureError> {
    if !(state.rho > 0.0) {
        return Err(ClosureError::NonPositiveDensity(state.rho));
    }
    if !state.p.is_positive_definite() {
        return Err(ClosureError::NonPositiveDefinitePressure);
    }
    let p = state.p.to_matrix();
    let det = p.determinant();
    let p_inverse = p.try_inverse().ok_or(ClosureError::NonPositiveDefinitePressure)?;
    let rho = state.rho;
    let prefactor = rho / mass * (rho / (2.0 * PI)).powf(1.5) / det.sqrt();
    Ok(GaussianClosure {
        mass,
        number_density: rho / mass,
        mean: state.u * alpha,
        covariance: p / rho,
        rho,
        p_inverse,
        prefactor,
    })
}

impl GaussianClosure {
    /// `f(v) = (rho/m) (rho / 2 pi)^{3/2} det(p)^{-1/2} exp(-(rho/2) c^T p^{-1} c)`.
    pub fn density_at(&self, v: &Vec3) -> f64 {
        let c = v - self.mean;
        self.prefactor * (-0.5 * self.rho * c.dot(&(self.p_inverse * c))).exp()
    }
}

/// Isotropic local Maxwellian with internal energy `eps`.
pub fn local_maxwellian(rho: f64, mean: &Vec3, eps: f64, mass: f64, v: &Vec3) -> f64 {
    let c2 = (v - mean).norm_squared();
    rho / mass * (3.0 / (4.0 * PI * eps)).powf(1.5) * (-3.0 * c2 / (4.0 * eps)).exp()
}

/// Moments `int m psi f dv` up to third order. Central moments use the
/// peculiar velocity `c = v - alpha u`; raw moments use `v`.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentSet {
    pub density: f64,
    pub first_central: Option<[f64; 3]>,
    pub second_central: Option<[[f64; 3]; 3]>,
    pub third_central: Option<Tensor3>,
    pub first_raw: Option<[f64; 3]>,
    pub second_raw: Option<[[f64; 3]; 3]>,
    pub third_raw: Option<Tensor3>,
}

/// Integrates moments of the closure by a tensorized Gauss-Hermite rule in
/// the eigenframe of the covariance. The integrand is the closure density
/// itself divided by the Gaussian weight, so the prefactor and exponent are
/// checked rather than assumed.
pub fn quadrature_moments(
    closure: &GaussianClosure,
    rule: &GaussHermite,
    max_order: usize,
) -> Result<MomentSet, ClosureError> {
    if rule.len() < MIN_POINTS {
        return Err(ClosureError::QuadratureOrderTooLow(rule.len()));
    }
    if max_order > 3 {
        return Err(ClosureError::OrderTooHigh(max_order));
    }
    let eig = SymmetricEigen::new(closure.covariance);
    // v = mean + Q diag(sqrt(2 lambda)) x
    let mut map = eig.eigenvectors;
    for k in 0..3 {
        let s = (2.0 * eig.eigenvalues[k]).sqrt();
        for r in 0..3 {
            map[(r, k)] *= s;
        }
    }
    let jacobian = map.determinant().abs();

    let mut density = 0.0;
    let mut c1 = [0.0; 3];
    let mut r1 = [0.0; 3];
    let mut c2 = [[0.0; 3]; 3];
    let mut r2 = [[0.0; 3]; 3];
    let mut c3 = [[[0.0; 3]; 3]; 3];
    let mut r3 = [[[0.0; 3]; 3]; 3];
    let n = rule.len();
    for a in 0..n {
        for b in 0..n {
            for c in 0..n {
                let x = Vec3::new(rule.nodes[a], rule.nodes[b], rule.nodes[c]);
                let v = closure.mean + map * x;
                let w = rule.weights[a] * rule.weights[b] * rule.weights[c];
                let f = closure.density_at(&v) * x.norm_squared().exp();
                let mw = closure.mass * w * f * jacobian;
                density += mw;
                if max_order == 0 {
                    continue;
                }
                let pc = v - closure.mean;
                for k in 0..3 {
                    c1[k] += mw * pc[k];
                    r1[k] += mw * v[k];
                    if max_order < 2 {
                        continue;
                    }
                    for l in 0..3 {
                        c2[k][l] += mw * pc[k] * pc[l];
                        r2[k][l] += mw * v[k] * v[l];
                        if max_order < 3 {
                            continue;
                        }
                        for m in 0..3 {
                            c3[k][l][m] += mw * pc[k] * pc[l] * pc[m];
                            r3[k][l][m] += mw * v[k] * v[l] * v[m];
                        }
                    }
                }
            }
        }
    }
    Ok(MomentSet {
        density,
        first_central: (max_order >= 1).then_some(c1),
        second_central: (max_order >= 2).then_some(c2),
        third_central: (max_order >= 3).then_some(c3),
        first_raw: (max_order >= 1).then_some(r1),
        second_raw: (max_order >= 2).then_some(r2),
        third_raw: (max_order >= 3).then_some(r3),
    })
}

/// Total flux of the momentum flux for the Gaussian closure:
/// `alpha^3 rho u_k u_l u_n + alpha (u_k p_ln + u_l p_nk + u_n p_kl)`.
pub fn third_order_flux(state: &SpeciesState, alpha: f64) -> Tensor3 {
    let u = &state.u;
    let p = &state.p;
    let a3 = alpha * alpha * alpha;
    let mut t = [[[0.0; 3]; 3]; 3];
    for k in 0..3 {
        for l in 0..3 {
            for n in 0..3 {
                t[k][l][n] = a3 * state.rho * u[k] * u[l] * u[n]
                    + alpha * (u[k] * p.get(l, n) + u[l] * p.get(n, k) + u[n] * p.get(k, l));
            }
        }
    }
    t
}
