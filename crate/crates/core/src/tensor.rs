//! Constant fourth-order tensors on symmetric 2×2 matrices.
//!
//! The space of symmetric 2×2 matrices is identified with ℝ³ through the
//! orthonormal basis `{E₁₁, E₂₂, (E₁₂+E₂₁)/√2}` (orthonormal for the Frobenius
//! product `⟨A,B⟩ = Σ AᵢⱼBᵢⱼ`). A tensor with the major and minor symmetries
//! then induces a plain symmetric 3×3 matrix, and coercivity, square roots and
//! eigen-analysis reduce to that matrix.

use serde::{Deserialize, Serialize};
use std::f64::consts::SQRT_2;
use std::ops::{Add, Mul, Sub};
use thiserror::Error;

/// Absolute tolerance used when validating tensor symmetries.
pub const SYMMETRY_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TensorError {
    #[error("isotropic tensor requires mu > 0 (got mu = {0})")]
    NonPositiveShear(f64),
    #[error("tensor violates index symmetry {which} (max deviation {deviation:.3e})")]
    NotSymmetric { which: &'static str, deviation: f64 },
    #[error("tensor is not coercive on symmetric matrices (smallest eigenvalue {0:.6e})")]
    NotCoercive(f64),
    #[error("matrix is not symmetric (a12 = {a12}, a21 = {a21})")]
    AsymmetricMatrix { a12: f64, a21: f64 },
    #[error("explicit tensor needs 16 entries, got {0}")]
    WrongLength(usize),
}

/// Symmetric 2×2 matrix stored by its three independent entries.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SymMatrix2 {
    pub a11: f64,
    pub a22: f64,
    pub a12: f64,
}

impl SymMatrix2 {
    pub const ZERO: SymMatrix2 = SymMatrix2 { a11: 0.0, a22: 0.0, a12: 0.0 };
    pub const IDENTITY: SymMatrix2 = SymMatrix2 { a11: 1.0, a22: 1.0, a12: 0.0 };

    pub const fn new(a11: f64, a22: f64, a12: f64) -> Self {
        Self { a11, a22, a12 }
    }

    /// Builds from a full matrix, rejecting any asymmetry.
    pub fn from_full(m: [[f64; 2]; 2]) -> Result<Self, TensorError> {
        if m[0][1] != m[1][0] {
            return Err(TensorError::AsymmetricMatrix { a12: m[0][1], a21: m[1][0] });
        }
        Ok(Self::new(m[0][0], m[1][1], m[0][1]))
    }

    pub fn to_full(self) -> [[f64; 2]; 2] {
        [[self.a11, self.a12], [self.a12, self.a22]]
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        match (i, j) {
            (0, 0) => self.a11,
            (1, 1) => self.a22,
            _ => self.a12,
        }
    }

    #[inline]
    pub fn trace(&self) -> f64 {
        self.a11 + self.a22
    }

    /// Frobenius product `⟨A,B⟩`.
    #[inline]
    pub fn dot(&self, other: &SymMatrix2) -> f64 {
        self.a11 * other.a11 + self.a22 * other.a22 + 2.0 * self.a12 * other.a12
    }

    #[inline]
    pub fn norm_sq(&self) -> f64 {
        self.dot(self)
    }

    #[inline]
    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    /// Coordinates in the orthonormal basis.
    #[inline]
    pub fn to_vec3(self) -> [f64; 3] {
        [self.a11, self.a22, SQRT_2 * self.a12]
    }

    #[inline]
    pub fn from_vec3(x: [f64; 3]) -> Self {
        Self::new(x[0], x[1], x[2] / SQRT_2)
    }
}

impl Add for SymMatrix2 {
    type Output = SymMatrix2;
    fn add(self, o: SymMatrix2) -> SymMatrix2 {
        SymMatrix2::new(self.a11 + o.a11, self.a22 + o.a22, self.a12 + o.a12)
    }
}

impl Sub for SymMatrix2 {
    type Output = SymMatrix2;
    fn sub(self, o: SymMatrix2) -> SymMatrix2 {
        SymMatrix2::new(self.a11 - o.a11, self.a22 - o.a22, self.a12 - o.a12)
    }
}

impl Mul<SymMatrix2> for f64 {
    type Output = SymMatrix2;
    fn mul(self, a: SymMatrix2) -> SymMatrix2 {
        SymMatrix2::new(self * a.a11, self * a.a22, self * a.a12)
    }
}

/// Dense fourth-order tensor for n = 2, 16 entries row-major in `(i,j,k,l)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tensor4 {
    entries: [f64; 16],
}

#[inline]
const fn idx(i: usize, j: usize, k: usize, l: usize) -> usize {
    ((i * 2 + j) * 2 + k) * 2 + l
}

/// The orthonormal basis of symmetric matrices, as full matrices.
const BASIS: [[[f64; 2]; 2]; 3] = [
    [[1.0, 0.0], [0.0, 0.0]],
    [[0.0, 0.0], [0.0, 1.0]],
    [[0.0, std::f64::consts::FRAC_1_SQRT_2], [std::f64::consts::FRAC_1_SQRT_2, 0.0]],
];

impl Tensor4 {
    /// Isotropic tensor `A ↦ 2μA + λ tr(A) I`.
    pub fn isotropic(lambda: f64, mu: f64) -> Result<Self, TensorError> {
        if !(mu > 0.0) {
            return Err(TensorError::NonPositiveShear(mu));
        }
        Ok(Self::isotropic_unchecked(lambda, mu))
    }

    /// Same as [`Tensor4::isotropic`] without the shear check; used when
    /// probing non-coercive parameter choices.
    pub fn isotropic_unchecked(lambda: f64, mu: f64) -> Self {
        let delta = |a: usize, b: usize| if a == b { 1.0 } else { 0.0 };
        let mut entries = [0.0; 16];
        for i in 0..2 {
            for j in 0..2 {
                for k in 0..2 {
                    for l in 0..2 {
                        entries[idx(i, j, k, l)] = lambda * delta(i, j) * delta(k, l)
                            + mu * (delta(i, k) * delta(j, l) + delta(i, l) * delta(j, k));
                    }
                }
            }
        }
        Self { entries }
    }

    /// Explicit row-major entries; both symmetries are checked.
    pub fn from_row_major(entries: &[f64]) -> Result<Self, TensorError> {
        if entries.len() != 16 {
            return Err(TensorError::WrongLength(entries.len()));
        }
        let mut e = [0.0; 16];
        e.copy_from_slice(entries);
        let t = Self { entries: e };
        t.check_symmetries()?;
        Ok(t)
    }

    /// Tensor inducing the given symmetric 3×3 matrix on the orthonormal basis.
    pub fn from_induced(m: &[[f64; 3]; 3]) -> Self {
        let mut entries = [0.0; 16];
        for a in 0..3 {
            for b in 0..3 {
                if m[a][b] == 0.0 {
                    continue;
                }
                for i in 0..2 {
                    for j in 0..2 {
                        for k in 0..2 {
                            for l in 0..2 {
                                entries[idx(i, j, k, l)] += m[a][b] * BASIS[a][i][j] * BASIS[b][k][l];
                            }
                        }
                    }
                }
            }
        }
        Self { entries }
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize, k: usize, l: usize) -> f64 {
        self.entries[idx(i, j, k, l)]
    }

    pub fn entries(&self) -> &[f64; 16] {
        &self.entries
    }

    /// Largest deviation from `T_ijkl = T_klij` and `T_ijkl = T_jikl`.
    pub fn check_symmetries(&self) -> Result<(), TensorError> {
        let mut major: f64 = 0.0;
        let mut minor: f64 = 0.0;
        for i in 0..2 {
            for j in 0..2 {
                for k in 0..2 {
                    for l in 0..2 {
                        let t = self.get(i, j, k, l);
                        major = major.max((t - self.get(k, l, i, j)).abs());
                        minor = minor.max((t - self.get(j, i, k, l)).abs());
                    }
                }
            }
        }
        let scale = self.entries.iter().fold(1.0_f64, |m, x| m.max(x.abs()));
        if major > SYMMETRY_TOL * scale {
            return Err(TensorError::NotSymmetric { which: "T_ijkl = T_klij", deviation: major });
        }
        if minor > SYMMETRY_TOL * scale {
            return Err(TensorError::NotSymmetric { which: "T_ijkl = T_jikl", deviation: minor });
        }
        Ok(())
    }

    /// `(T:A)_ij = Σ_kl T_ijkl A_kl`.
    #[inline]
    pub fn contract(&self, a: &SymMatrix2) -> SymMatrix2 {
        let e = &self.entries;
        let r = |i: usize, j: usize| {
            e[idx(i, j, 0, 0)] * a.a11
                + e[idx(i, j, 1, 1)] * a.a22
                + (e[idx(i, j, 0, 1)] + e[idx(i, j, 1, 0)]) * a.a12
        };
        SymMatrix2::new(r(0, 0), r(1, 1), r(0, 1))
    }

    /// Matrix of `A ↦ T:A` on the orthonormal basis of symmetric matrices.
    pub fn induced_matrix(&self) -> [[f64; 3]; 3] {
        let mut m = [[0.0; 3]; 3];
        for (b, eb) in BASIS.iter().enumerate() {
            let tb = self.contract(&SymMatrix2::new(eb[0][0], eb[1][1], eb[0][1])).to_vec3();
            for a in 0..3 {
                m[a][b] = tb[a];
            }
        }
        // symmetric for tensors with both symmetries; average out rounding
        for a in 0..3 {
            for b in (a + 1)..3 {
                let s = 0.5 * (m[a][b] + m[b][a]);
                m[a][b] = s;
                m[b][a] = s;
            }
        }
        m
    }

    /// Eigenvalues (ascending) of the induced map.
    pub fn eigenvalues(&self) -> [f64; 3] {
        symmetric_eigen3(&self.induced_matrix()).0
    }

    /// Largest eigenvalue of the induced map.
    pub fn upper_constant(&self) -> f64 {
        self.eigenvalues()[2]
    }

    /// `a·self + b·other`.
    pub fn combine(&self, a: f64, other: &Tensor4, b: f64) -> Tensor4 {
        let mut entries = [0.0; 16];
        for (k, e) in entries.iter_mut().enumerate() {
            *e = a * self.entries[k] + b * other.entries[k];
        }
        Tensor4 { entries }
    }
}

/// Smallest eigenvalue of the induced self-adjoint map; positive iff the
/// tensor is coercive on symmetric matrices.
pub fn coercivity_constant(t: &Tensor4) -> f64 {
    t.eigenvalues()[0]
}

/// Principal square root `S` with `S:(S:A) = T:A`.
pub fn sqrt_tensor(t: &Tensor4) -> Result<Tensor4, TensorError> {
    let (vals, vecs) = symmetric_eigen3(&t.induced_matrix());
    if !(vals[0] > 0.0) {
        return Err(TensorError::NotCoercive(vals[0]));
    }
    let mut m = [[0.0; 3]; 3];
    for (k, &lam) in vals.iter().enumerate() {
        let s = lam.sqrt();
        for a in 0..3 {
            for b in 0..3 {
                m[a][b] += s * vecs[a][k] * vecs[b][k];
            }
        }
    }
    Ok(Tensor4::from_induced(&m))
}

/// Cyclic Jacobi eigen-decomposition of a symmetric 3×3 matrix.
///
/// Returns eigenvalues in ascending order and the matrix whose columns are the
/// corresponding orthonormal eigenvectors.
pub fn symmetric_eigen3(m: &[[f64; 3]; 3]) -> ([f64; 3], [[f64; 3]; 3]) {
    let mut a = *m;
    let mut v = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
    let scale = a.iter().flatten().fold(0.0_f64, |s, x| s.max(x.abs()));
    for _sweep in 0..64 {
        let off = a[0][1].powi(2) + a[0][2].powi(2) + a[1][2].powi(2);
        if off.sqrt() <= 1e-15 * scale || off == 0.0 {
            break;
        }
        for (p, q) in [(0usize, 1usize), (0, 2), (1, 2)] {
            if a[p][q] == 0.0 {
                continue;
            }
            let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
            let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
            let t = if theta == 0.0 { 1.0 } else { t };
            let c = 1.0 / (t * t + 1.0).sqrt();
            let s = t * c;
            for k in 0..3 {
                let akp = a[k][p];
                let akq = a[k][q];
                a[k][p] = c * akp - s * akq;
                a[k][q] = s * akp + c * akq;
            }
            for k in 0..3 {
                let apk = a[p][k];
                let aqk = a[q][k];
                a[p][k] = c * apk - s * aqk;
                a[q][k] = s * apk + c * aqk;
            }
            for row in v.iter_mut() {
                let vp = row[p];
                let vq = row[q];
                row[p] = c * vp - s * vq;
                row[q] = s * vp + c * vq;
            }
        }
    }
    let mut order = [0usize, 1, 2];
    order.sort_by(|&i, &j| a[i][i].total_cmp(&a[j][j]));
    let vals = [a[order[0]][order[0]], a[order[1]][order[1]], a[order[2]][order[2]]];
    let mut vecs = [[0.0; 3]; 3];
    for (col, &o) in order.iter().enumerate() {
        for r in 0..3 {
            vecs[r][col] = v[r][o];
        }
    }
    (vals, vecs)
}

/// Serialized tensor description: isotropic parameters or 16 explicit entries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TensorSpec {
    Isotropic { lambda: f64, mu: f64 },
    Explicit(Vec<f64>),
}

impl TensorSpec {
    pub fn build(&self) -> Result<Tensor4, TensorError> {
        match self {
            TensorSpec::Isotropic { lambda, mu } => Tensor4::isotropic(*lambda, *mu),
            TensorSpec::Explicit(entries) => Tensor4::from_row_major(entries),
        }
    }
}

/// Viscosity tensor 𝔻, elasticity tensor ℂ and thermal coupling matrix 𝔹,
/// together with their coercivity constants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ElasticityTensors {
    pub viscosity: Tensor4,
    pub elasticity: Tensor4,
    pub coupling: SymMatrix2,
    pub k_d: f64,
    pub k_c: f64,
}

impl ElasticityTensors {
    /// Validates symmetry and coercivity of both tensors.
    pub fn new(viscosity: Tensor4, elasticity: Tensor4, coupling: SymMatrix2) -> Result<Self, TensorError> {
        viscosity.check_symmetries()?;
        elasticity.check_symmetries()?;
        let k_d = coercivity_constant(&viscosity);
        let k_c = coercivity_constant(&elasticity);
        if !(k_d > 0.0) {
            return Err(TensorError::NotCoercive(k_d));
        }
        if !(k_c > 0.0) {
            return Err(TensorError::NotCoercive(k_c));
        }
        Ok(Self { viscosity, elasticity, coupling, k_d, k_c })
    }

    /// Frobenius norm `|𝔹|`.
    pub fn coupling_norm(&self) -> f64 {
        self.coupling.norm()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: SymMatrix2, b: SymMatrix2, tol: f64) -> bool {
        (a - b).norm() <= tol
    }

    #[test]
    fn isotropic_examples() {
        let t = Tensor4::isotropic(1.0, 2.0).unwrap();
        assert!(close(t.contract(&SymMatrix2::IDENTITY), 6.0 * SymMatrix2::IDENTITY, 1e-15));
        let off = SymMatrix2::new(0.0, 0.0, 1.0);
        let r = t.contract(&off);
        assert!(close(r, SymMatrix2::new(0.0, 0.0, 4.0), 1e-15));
        assert_eq!(r.dot(&off), 8.0);
        let a = SymMatrix2::new(0.3, -1.1, 0.7);
        let t01 = Tensor4::isotropic(0.0, 1.0).unwrap();
        assert!(close(t01.contract(&a), 2.0 * a, 1e-15));
        assert!(close(t01.contract(&SymMatrix2::IDENTITY), 2.0 * SymMatrix2::IDENTITY, 0.0));
        let diag = SymMatrix2::new(1.0, -1.0, 0.0);
        assert!(close(t.contract(&diag), SymMatrix2::new(4.0, -4.0, 0.0), 1e-15));
    }

    #[test]
    fn rejects_nonpositive_shear() {
        assert_eq!(Tensor4::isotropic(1.0, 0.0), Err(TensorError::NonPositiveShear(0.0)));
        assert!(Tensor4::isotropic(1.0, -1.0).is_err());
    }

    #[test]
    fn coercivity_examples() {
        let c = coercivity_constant(&Tensor4::isotropic(0.0, 1.0).unwrap());
        assert!((c - 2.0).abs() < 1e-14);
        let ev = Tensor4::isotropic(1.0, 1.0).unwrap().eigenvalues();
        assert!((ev[0] - 2.0).abs() < 1e-14 && (ev[1] - 2.0).abs() < 1e-14 && (ev[2] - 4.0).abs() < 1e-14);
        assert!(coercivity_constant(&Tensor4::isotropic_unchecked(1.0, -1.0)) < 0.0);
    }

    #[test]
    fn sqrt_of_scaled_identity() {
        let t = Tensor4::isotropic(0.0, 2.0).unwrap(); // T:A = 4A
        let s = sqrt_tensor(&t).unwrap();
        let a = SymMatrix2::new(0.4, 1.3, -0.2);
        assert!(close(s.contract(&a), 2.0 * a, 1e-13));
        assert!(sqrt_tensor(&Tensor4::isotropic_unchecked(1.0, -1.0)).is_err());
    }

    #[test]
    fn explicit_tensor_validation() {
        let t = Tensor4::isotropic(1.0, 2.0).unwrap();
        assert_eq!(Tensor4::from_row_major(t.entries()).unwrap(), t);
        let mut bad = *t.entries();
        bad[idx(0, 1, 0, 0)] += 0.5;
        assert!(matches!(Tensor4::from_row_major(&bad), Err(TensorError::NotSymmetric { .. })));
        assert_eq!(Tensor4::from_row_major(&[0.0; 3]), Err(TensorError::WrongLength(3)));
    }

    #[test]
    fn from_full_rejects_asymmetry() {
        assert!(SymMatrix2::from_full([[1.0, 2.0], [2.0, 3.0]]).is_ok());
        assert!(SymMatrix2::from_full([[1.0, 2.0], [2.5, 3.0]]).is_err());
    }

    #[test]
    fn tensor_spec_serde_roundtrip() {
        let spec: TensorSpec = toml::from_str("isotropic = { lambda = 1.0, mu = 2.0 }").unwrap();
        assert_eq!(spec, TensorSpec::Isotropic { lambda: 1.0, mu: 2.0 });
        assert!(spec.build().is_ok());
    }
}
