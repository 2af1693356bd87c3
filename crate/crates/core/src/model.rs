//! Domain types shared by every other module: the mixture description,
//! per-species moment state, symmetric pressure tensors, the ideal-gas
//! equation of state and mixture-level aggregates.
//!
//! All quantities are dimensionless. Velocities `u` are the scaled species
//! velocities, so the physical drift of species `i` inside the velocity
//! distribution is `alpha * u`.

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type Vec3 = Vector3<f64>;

/// Relative tolerance used when checking positive definiteness through
/// leading principal minors.
pub const PD_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpecError {
    #[error("mixture needs at least one species")]
    NoSpecies,
    #[error("{name} has shape mismatch: expected {expected}x{expected}")]
    ShapeMismatch { name: &'static str, expected: usize },
    #[error("{name}[{i}][{j}] = {a} differs from {name}[{j}][{i}] = {b}")]
    NonSymmetricKernel {
        name: &'static str,
        i: usize,
        j: usize,
        a: f64,
        b: f64,
    },
    #[error("{name}[{i}][{j}] = {value} is negative or not finite")]
    NegativeKernel {
        name: &'static str,
        i: usize,
        j: usize,
        value: f64,
    },
    #[error("kernel_b[{i}][{j}] = {b} exceeds kernel_l1[{i}][{j}] = {l1}")]
    BExceedsL1 { i: usize, j: usize, b: f64, l1: f64 },
    #[error("masses[{i}] = {value} must be strictly positive")]
    NonPositiveMass { i: usize, value: f64 },
    #[error("alpha = {0} must be strictly positive and at most 1")]
    NonPositiveAlpha(f64),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("input tensor is not symmetric (entry ({k},{l}) vs ({l},{k}))")]
    NonSymmetricInput { k: usize, l: usize },
    #[error("temperature {0} must be strictly positive")]
    NonPositiveTemperature(f64),
    #[error("mass {0} must be strictly positive")]
    NonPositiveMass(f64),
    #[error("density {0} must be nonnegative")]
    NegativeDensity(f64),
    #[error("every species is vacuum")]
    AllSpeciesVacuum,
}

/// Mixture of `S` monatomic species interacting as Maxwell molecules.
///
/// Each pair kernel `b^{ij}(eta)` enters every formula only through the two
/// integrals `||b||_{L1}` and `B = int eta^2 b(eta) d eta`, so those two
/// scalars are all that is stored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSpec", into = "RawSpec")]
pub struct MixtureSpec {
    masses: Vec<f64>,
    kernel_l1: Vec<Vec<f64>>,
    kernel_b: Vec<Vec<f64>>,
    alpha: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSpec {
    masses: Vec<f64>,
    kernel_l1: Vec<Vec<f64>>,
    kernel_b: Vec<Vec<f64>>,
    alpha: f64,
}

impl TryFrom<RawSpec> for MixtureSpec {
    type Error = SpecError;
    fn try_from(raw: RawSpec) -> Result<Self, SpecError> {
        MixtureSpec::new(raw.masses, raw.kernel_l1, raw.kernel_b, raw.alpha)
    }
}

impl From<MixtureSpec> for RawSpec {
    fn from(s: MixtureSpec) -> Self {
        RawSpec {
            masses: s.masses,
            kernel_l1: s.kernel_l1,
            kernel_b: s.kernel_b,
            alpha: s.alpha,
        }
    }
}

impl MixtureSpec {
    /// Builds and validates a mixture description.
    pub fn new(
        masses: Vec<f64>,
        kernel_l1: Vec<Vec<f64>>,
        kernel_b: Vec<Vec<f64>>,
        alpha: f64,
    ) -> Result<Self, SpecError> {
        validate_spec(MixtureSpec {
            masses,
            kernel_l1,
            kernel_b,
            alpha,
        })
    }

    /// Same kernel for every pair.
    pub fn uniform_kernel(masses: Vec<f64>, l1: f64, b: f64, alpha: f64) -> Result<Self, SpecError> {
        let s = masses.len();
        MixtureSpec::new(masses, vec![vec![l1; s]; s], vec![vec![b; s]; s], alpha)
    }

    pub fn species_count(&self) -> usize {
        self.masses.len()
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    pub fn mass(&self, i: usize) -> f64 {
        self.masses[i]
    }

    pub fn l1(&self, i: usize, j: usize) -> f64 {
        self.kernel_l1[i][j]
    }

    pub fn b(&self, i: usize, j: usize) -> f64 {
        self.kernel_b[i][j]
    }

    pub fn kernel_l1(&self) -> &[Vec<f64>] {
        &self.kernel_l1
    }

    pub fn kernel_b(&self) -> &[Vec<f64>] {
        &self.kernel_b
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Copy of this mixture with a different scaling parameter.
    pub fn with_alpha(&self, alpha: f64) -> Result<Self, SpecError> {
        MixtureSpec::new(
            self.masses.clone(),
            self.kernel_l1.clone(),
            self.kernel_b.clone(),
            alpha,
        )
    }

    /// Momentum exchange coefficient `2 pi ||b^{ij}|| / (m_i + m_j)`.
    pub fn friction(&self, i: usize, j: usize) -> f64 {
        2.0 * std::f64::consts::PI * self.l1(i, j) / (self.mass(i) + self.mass(j))
    }
}

/// Checks every `MixtureSpec` invariant and hands the spec back unchanged.
pub fn validate_spec(spec: MixtureSpec) -> Result<MixtureSpec, SpecError> {
    let s = spec.masses.len();
    if s == 0 {
        return Err(SpecError::NoSpecies);
    }
    for (name, k) in [("kernel_l1", &spec.kernel_l1), ("kernel_b", &spec.kernel_b)] {
        if k.len() != s || k.iter().any(|row| row.len() != s) {
            return Err(SpecError::ShapeMismatch { name, expected: s });
        }
    }
    for (i, &m) in spec.masses.iter().enumerate() {
        if !(m > 0.0) || !m.is_finite() {
            return Err(SpecError::NonPositiveMass { i, value: m });
        }
    }
    for (name, k) in [("kernel_l1", &spec.kernel_l1), ("kernel_b", &spec.kernel_b)] {
        for i in 0..s {
            for j in 0..s {
                let v = k[i][j];
                if !(v >= 0.0) || !v.is_finite() {
                    return Err(SpecError::NegativeKernel { name, i, j, value: v });
                }
                if v != k[j][i] {
                    return Err(SpecError::NonSymmetricKernel {
                        name,
                        i,
                        j,
                        a: v,
                        b: k[j][i],
                    });
                }
            }
        }
    }
    for i in 0..s {
        for j in 0..s {
            let (l1, b) = (spec.kernel_l1[i][j], spec.kernel_b[i][j]);
            if b > l1 {
                return Err(SpecError::BExceedsL1 { i, j, b, l1 });
            }
        }
    }
    if !(spec.alpha > 0.0 && spec.alpha <= 1.0) {
        return Err(SpecError::NonPositiveAlpha(spec.alpha));
    }
    Ok(spec)
}

/// Symmetric 3x3 tensor stored as its six independent components in the
/// order `[11, 22, 33, 12, 13, 23]`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SymTensor(pub [f64; 6]);

/// Component index of `(k, l)` in the packed layout.
pub const fn sym_index(k: usize, l: usize) -> usize {
    match (k, l) {
        (0, 0) => 0,
        (1, 1) => 1,
        (2, 2) => 2,
        (0, 1) | (1, 0) => 3,
        (0, 2) | (2, 0) => 4,
        _ => 5,
    }
}

/// `(k, l)` pairs of the packed layout, in storage order.
pub const SYM_PAIRS: [(usize, usize); 6] = [(0, 0), (1, 1), (2, 2), (0, 1), (0, 2), (1, 2)];

impl SymTensor {
    pub const ZERO: SymTensor = SymTensor([0.0; 6]);

    pub fn diag(a: f64, b: f64, c: f64) -> Self {
        SymTensor([a, b, c, 0.0, 0.0, 0.0])
    }

    pub fn isotropic(p: f64) -> Self {
        SymTensor::diag(p, p, p)
    }

    pub fn new(p11: f64, p22: f64, p33: f64, p12: f64, p13: f64, p23: f64) -> Self {
        SymTensor([p11, p22, p33, p12, p13, p23])
    }

    /// Symmetric outer product `(a b^T + b a^T) / 2`.
    pub fn sym_outer(a: &Vec3, b: &Vec3) -> Self {
        let mut t = [0.0; 6];
        for (c, &(k, l)) in SYM_PAIRS.iter().enumerate() {
            t[c] = 0.5 * (a[k] * b[l] + a[l] * b[k]);
        }
        SymTensor(t)
    }

    pub fn outer(a: &Vec3) -> Self {
        SymTensor::sym_outer(a, a)
    }

    /// Reads a general 3x3 matrix, rejecting anything not exactly symmetric.
    pub fn try_from_matrix(m: &Matrix3<f64>) -> Result<Self, ModelError> {
        for k in 0..3 {
            for l in (k + 1)..3 {
                if m[(k, l)] != m[(l, k)] {
                    return Err(ModelError::NonSymmetricInput { k, l });
                }
            }
        }
        Ok(SymTensor([
            m[(0, 0)],
            m[(1, 1)],
            m[(2, 2)],
            m[(0, 1)],
            m[(0, 2)],
            m[(1, 2)],
        ]))
    }

    pub fn get(&self, k: usize, l: usize) -> f64 {
        self.0[sym_index(k, l)]
    }

    pub fn set(&mut self, k: usize, l: usize, v: f64) {
        self.0[sym_index(k, l)] = v;
    }

    pub fn trace(&self) -> f64 {
        self.0[0] + self.0[1] + self.0[2]
    }

    /// Scalar pressure `trace / 3`.
    pub fn mean(&self) -> f64 {
        self.trace() / 3.0
    }

    pub fn to_matrix(&self) -> Matrix3<f64> {
        let t = &self.0;
        Matrix3::new(t[0], t[3], t[4], t[3], t[1], t[5], t[4], t[5], t[2])
    }

    pub fn scale(&self, a: f64) -> Self {
        SymTensor(self.0.map(|x| a * x))
    }

    pub fn add(&self, o: &SymTensor) -> Self {
        let mut t = self.0;
        for (x, y) in t.iter_mut().zip(o.0.iter()) {
            *x += y;
        }
        SymTensor(t)
    }

    pub fn sub(&self, o: &SymTensor) -> Self {
        self.add(&o.scale(-1.0))
    }

    pub fn det(&self) -> f64 {
        self.to_matrix().determinant()
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
    }

    /// Frobenius norm with off-diagonal entries counted twice.
    pub fn norm(&self) -> f64 {
        let t = &self.0;
        (t[0] * t[0] + t[1] * t[1] + t[2] * t[2] + 2.0 * (t[3] * t[3] + t[4] * t[4] + t[5] * t[5]))
            .sqrt()
    }

    /// Positive definiteness through the three leading principal minors,
    /// each compared against `PD_TOLERANCE * trace^k`.
    pub fn is_positive_definite(&self) -> bool {
        let t = &self.0;
        let tr = self.trace();
        if !(tr > 0.0) {
            return false;
        }
        let m1 = t[0];
        let m2 = t[0] * t[1] - t[3] * t[3];
        let m3 = self.det();
        m1 > PD_TOLERANCE * tr && m2 > PD_TOLERANCE * tr * tr && m3 > PD_TOLERANCE * tr * tr * tr
    }

    /// Splits into the spherical part `p` and the traceless deviator.
    pub fn decompose(&self) -> (f64, SymTensor) {
        let p = self.mean();
        let mut dev = self.0;
        dev[0] -= p;
        dev[1] -= p;
        dev[2] -= p;
        (p, SymTensor(dev))
    }

    /// Inverse of [`SymTensor::decompose`].
    pub fn recompose(p: f64, dev: &SymTensor) -> SymTensor {
        let mut t = dev.0;
        t[0] += p;
        t[1] += p;
        t[2] += p;
        SymTensor(t)
    }
}

/// Spherical/deviatoric split of a general 3x3 pressure matrix.
pub fn pressure_decompose(p_tensor: &Matrix3<f64>) -> Result<(f64, SymTensor), ModelError> {
    Ok(SymTensor::try_from_matrix(p_tensor)?.decompose())
}

/// Scaled ideal-gas law `p = (5/3) rho T / m`.
pub fn ideal_gas_pressure(rho: f64, temperature: f64, mass: f64) -> Result<f64, ModelError> {
    if !(temperature > 0.0) {
        return Err(ModelError::NonPositiveTemperature(temperature));
    }
    if !(mass > 0.0) {
        return Err(ModelError::NonPositiveMass(mass));
    }
    if rho < 0.0 {
        return Err(ModelError::NegativeDensity(rho));
    }
    Ok(5.0 / 3.0 * rho * temperature / mass)
}

/// Moment state of one species at one point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpeciesState {
    pub rho: f64,
    pub u: Vec3,
    pub p: SymTensor,
}

impl SpeciesState {
    pub fn new(rho: f64, u: Vec3, p: SymTensor) -> Self {
        SpeciesState { rho, u, p }
    }

    pub fn at_rest(rho: f64, p: f64) -> Self {
        SpeciesState::new(rho, Vec3::zeros(), SymTensor::isotropic(p))
    }

    pub fn scalar_pressure(&self) -> f64 {
        self.p.mean()
    }

    pub fn is_vacuum(&self) -> bool {
        self.rho == 0.0
    }
}

/// Mixture density, mass-average velocity, internal energy density,
/// pressure tensor and internal energy flux.
#[derive(Debug, Clone, PartialEq)]
pub struct MixtureAggregates {
    pub rho: f64,
    pub u: Vec3,
    pub rho_eps: f64,
    pub p: SymTensor,
    pub q: Vec3,
}

pub fn mixture_aggregates(states: &[SpeciesState], alpha: f64) -> Result<MixtureAggregates, ModelError> {
    let rho: f64 = states.iter().map(|s| s.rho).sum();
    if !(rho > 0.0) {
        return Err(ModelError::AllSpeciesVacuum);
    }
    let momentum = states.iter().fold(Vec3::zeros(), |acc, s| acc + s.u * s.rho);
    let u = momentum / rho;
    let a2 = alpha * alpha;

    let mut rho_eps = 0.0;
    let mut p = SymTensor::ZERO;
    let mut q = Vec3::zeros();
    for s in states {
        let w = s.u - u;
        let species_energy = 1.5 * s.scalar_pressure() + 0.5 * a2 * s.rho * w.norm_squared();
        rho_eps += species_energy;
        p = p.add(&s.p).add(&SymTensor::outer(&w).scale(a2 * s.rho));
        q += w * species_energy + s.p.to_matrix() * w;
    }
    Ok(MixtureAggregates { rho, u, rho_eps, p, q })
}
