//! Dense complex operators, density operators and spectral decomposition.
//!
//! Everything downstream is built on [`Operator`], a square complex matrix
//! tagged with its Hilbert-space dimension. Index conventions are row-major;
//! tensor factors follow the leftmost-slowest convention of
//! [`crate::composition::tensor`].

use std::ops::{Add, Mul, Sub};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{DensityViolation, QmError, Result};

pub type C64 = Complex64;
pub type Ket = DVector<C64>;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

/// Numerical tolerances shared by every validation in the crate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    pub trace: f64,
    pub herm: f64,
    pub psd: f64,
    pub recon: f64,
    pub degen: f64,
    /// Probability below which a conditional post-measurement state is undefined.
    pub prob: f64,
    pub unitary: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            trace: 1e-10,
            herm: 1e-10,
            psd: 1e-10,
            recon: 1e-9,
            degen: 1e-8,
            prob: 1e-12,
            unitary: 1e-9,
        }
    }
}

/// Square complex matrix acting on a `dim`-dimensional Hilbert space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "OperatorJson", into = "OperatorJson")]
pub struct Operator {
    mat: DMatrix<C64>,
}

/// Wire form: `{dim, entries: [[re, im], ...]}` in row-major order.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OperatorJson {
    pub dim: usize,
    pub entries: Vec<[f64; 2]>,
}

impl TryFrom<OperatorJson> for Operator {
    type Error = QmError;

    fn try_from(j: OperatorJson) -> Result<Self> {
        if j.entries.len() != j.dim * j.dim {
            return Err(QmError::DimensionMismatch {
                expected: j.dim * j.dim,
                found: j.entries.len(),
            });
        }
        let data: Vec<C64> = j.entries.iter().map(|[re, im]| C64::new(*re, *im)).collect();
        Operator::from_matrix(DMatrix::from_row_slice(j.dim, j.dim, &data))
    }
}

impl From<Operator> for OperatorJson {
    fn from(op: Operator) -> Self {
        let dim = op.dim();
        let mut entries = Vec::with_capacity(dim * dim);
        for i in 0..dim {
            for j in 0..dim {
                let z = op.mat[(i, j)];
                entries.push([z.re, z.im]);
            }
        }
        OperatorJson { dim, entries }
    }
}

impl Operator {
    pub fn from_matrix(mat: DMatrix<C64>) -> Result<Self> {
        if mat.nrows() != mat.ncols() || mat.nrows() == 0 {
            return Err(QmError::BadShape { rows: mat.nrows(), cols: mat.ncols() });
        }
        Ok(Operator { mat })
    }

    /// Builds from `dim*dim` row-major entries.
    pub fn from_row_slice(dim: usize, entries: &[C64]) -> Result<Self> {
        if dim == 0 || entries.len() != dim * dim {
            return Err(QmError::DimensionMismatch { expected: dim * dim, found: entries.len() });
        }
        Ok(Operator { mat: DMatrix::from_row_slice(dim, dim, entries) })
    }

    pub fn from_fn(dim: usize, f: impl FnMut(usize, usize) -> C64) -> Self {
        assert!(dim > 0, "operator dimension must be positive");
        Operator { mat: DMatrix::from_fn(dim, dim, f) }
    }

    pub fn zeros(dim: usize) -> Self {
        Self::from_fn(dim, |_, _| ZERO)
    }

    pub fn identity(dim: usize) -> Self {
        assert!(dim > 0, "operator dimension must be positive");
        Operator { mat: DMatrix::identity(dim, dim) }
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Self {
        Self::from_fn(diag.len(), |i, j| if i == j { C64::from(diag[i]) } else { ZERO })
    }

    /// |ψ⟩⟨ψ| (no normalization applied).
    pub fn outer(psi: &Ket) -> Self {
        Operator { mat: psi * psi.adjoint() }
    }

    pub fn pauli_x() -> Self {
        Self::from_fn(2, |i, j| if i != j { ONE } else { ZERO })
    }

    pub fn pauli_y() -> Self {
        Self::from_row_slice(2, &[ZERO, -I, I, ZERO]).unwrap()
    }

    pub fn pauli_z() -> Self {
        Self::from_real_diagonal(&[1.0, -1.0])
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.mat
    }

    pub fn into_matrix(self) -> DMatrix<C64> {
        self.mat
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.mat[(i, j)]
    }

    pub fn adjoint(&self) -> Self {
        Operator { mat: self.mat.adjoint() }
    }

    fn same_dim(&self, other: &Operator) -> Result<()> {
        if self.dim() != other.dim() {
            return Err(QmError::DimensionMismatch { expected: self.dim(), found: other.dim() });
        }
        Ok(())
    }

    pub fn try_mul(&self, other: &Operator) -> Result<Operator> {
        self.same_dim(other)?;
        Ok(Operator { mat: &self.mat * &other.mat })
    }

    pub fn try_add(&self, other: &Operator) -> Result<Operator> {
        self.same_dim(other)?;
        Ok(Operator { mat: &self.mat + &other.mat })
    }

    pub fn try_sub(&self, other: &Operator) -> Result<Operator> {
        self.same_dim(other)?;
        Ok(Operator { mat: &self.mat - &other.mat })
    }

    pub fn scale(&self, s: C64) -> Operator {
        Operator { mat: &self.mat * s }
    }

    pub fn scale_real(&self, s: f64) -> Operator {
        self.scale(C64::from(s))
    }

    pub fn trace(&self) -> C64 {
        self.mat.trace()
    }

    pub fn apply(&self, psi: &Ket) -> Result<Ket> {
        if psi.len() != self.dim() {
            return Err(QmError::DimensionMismatch { expected: self.dim(), found: psi.len() });
        }
        Ok(&self.mat * psi)
    }

    /// [A, B] = AB − BA.
    pub fn commutator(&self, other: &Operator) -> Result<Operator> {
        self.same_dim(other)?;
        Ok(Operator { mat: &self.mat * &other.mat - &other.mat * &self.mat })
    }

    /// Largest singular value.
    pub fn operator_norm(&self) -> f64 {
        self.mat.clone().singular_values().max()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.mat.norm()
    }

    pub fn max_abs(&self) -> f64 {
        self.mat.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Frobenius distance to another operator of the same dimension.
    pub fn distance(&self, other: &Operator) -> f64 {
        assert_eq!(self.dim(), other.dim(), "distance between operators of different dimension");
        (&self.mat - &other.mat).norm()
    }

    /// Frobenius norm of A − A†.
    pub fn hermiticity_residual(&self) -> f64 {
        (&self.mat - self.mat.adjoint()).norm()
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermiticity_residual() <= tol
    }

    /// (A + A†)/2.
    pub fn hermitian_part(&self) -> Operator {
        Operator { mat: (&self.mat + self.mat.adjoint()) * C64::from(0.5) }
    }

    pub fn ensure_hermitian(&self, tol: f64) -> Result<()> {
        let residual = self.hermiticity_residual();
        if residual > tol {
            return Err(QmError::NotHermitian { residual });
        }
        Ok(())
    }

    /// Eigenvalues (ascending) and matching orthonormal eigenvectors as columns.
    /// Only the Hermitian part of `self` is diagonalized.
    pub fn eigh(&self) -> (Vec<f64>, DMatrix<C64>) {
        let eig = self.hermitian_part().mat.symmetric_eigen();
        let mut order: Vec<usize> = (0..self.dim()).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
        let vectors = DMatrix::from_fn(self.dim(), self.dim(), |i, c| eig.eigenvectors[(i, order[c])]);
        (values, vectors)
    }

    /// Smallest eigenvalue of the Hermitian part.
    pub fn min_eigenvalue(&self) -> f64 {
        self.hermitian_part().mat.symmetric_eigenvalues().min()
    }

    /// Tr(A²) for Hermitian A; the purity when A is a state.
    pub fn purity(&self) -> f64 {
        (&self.mat * &self.mat).trace().re
    }
}

impl Mul for &Operator {
    type Output = Operator;

    fn mul(self, rhs: &Operator) -> Operator {
        self.try_mul(rhs).expect("operator product dimension mismatch")
    }
}

impl Add for &Operator {
    type Output = Operator;

    fn add(self, rhs: &Operator) -> Operator {
        self.try_add(rhs).expect("operator sum dimension mismatch")
    }
}

impl Sub for &Operator {
    type Output = Operator;

    fn sub(self, rhs: &Operator) -> Operator {
        self.try_sub(rhs).expect("operator difference dimension mismatch")
    }
}

/// A validated state: Hermitian, positive, unit trace.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityOperator {
    op: Operator,
}

impl DensityOperator {
    pub fn op(&self) -> &Operator {
        &self.op
    }

    pub fn into_op(self) -> Operator {
        self.op
    }

    pub fn dim(&self) -> usize {
        self.op.dim()
    }

    /// I/dim.
    pub fn maximally_mixed(dim: usize) -> Self {
        DensityOperator { op: Operator::identity(dim).scale_real(1.0 / dim as f64) }
    }

    /// |ψ⟩⟨ψ| for a unit vector.
    pub fn pure(psi: &Ket) -> Result<Self> {
        let norm = psi.norm();
        if (norm - 1.0).abs() > 1e-10 {
            return Err(QmError::NotNormalized { norm });
        }
        Ok(DensityOperator { op: Operator::outer(psi) })
    }

    pub fn purity(&self) -> f64 {
        self.op.purity()
    }

    /// Wraps the normalized output of a completely positive map (Kraus
    /// conjugation or unitary evolution), whose positivity holds by construction.
    pub(crate) fn from_cp_output(op: Operator) -> Self {
        DensityOperator { op }
    }
}

/// Checks trace, Hermiticity and positivity, returning every violation found.
pub fn validate_density(op: Operator, tol: &Tolerances) -> Result<DensityOperator> {
    let mut violations = Vec::new();
    let tr = op.trace();
    if (tr.re - 1.0).abs() > tol.trace || tr.im.abs() > tol.trace {
        violations.push(DensityViolation::Trace { trace: tr.re });
    }
    let residual = op.hermiticity_residual();
    if residual > tol.herm {
        violations.push(DensityViolation::NonHermitian { residual });
    }
    let min = op.min_eigenvalue();
    if min < -tol.psd {
        violations.push(DensityViolation::NegativeEigenvalue { min });
    }
    if violations.is_empty() {
        Ok(DensityOperator { op })
    } else {
        Err(QmError::InvalidDensity(violations))
    }
}

/// Born rule ⟨A⟩_ρ = Re Tr(ρA).
pub fn expectation(rho: &DensityOperator, a: &Operator) -> Result<f64> {
    expectation_with(rho, a, &Tolerances::default())
}

pub fn expectation_with(rho: &DensityOperator, a: &Operator, tol: &Tolerances) -> Result<f64> {
    rho.op.same_dim(a)?;
    a.ensure_hermitian(tol.herm)?;
    let tr = trace_of_product(rho.op.matrix(), a.matrix());
    if tr.im.abs() > tol.herm.max(tol.herm * a.frobenius_norm()) {
        return Err(QmError::Numerical(format!(
            "Tr(rho A) has imaginary part {:e}",
            tr.im
        )));
    }
    Ok(tr.re)
}

/// Tr(XY) without forming the product.
pub fn trace_of_product(x: &DMatrix<C64>, y: &DMatrix<C64>) -> C64 {
    let n = x.nrows();
    let mut acc = ZERO;
    for i in 0..n {
        for k in 0..n {
            acc += x[(i, k)] * y[(k, i)];
        }
    }
    acc
}

/// Finite spectral resolution A = Σ a_i E_i with distinct a_i.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralDecomposition {
    pub eigenvalues: Vec<f64>,
    pub projectors: Vec<Operator>,
}

impl SpectralDecomposition {
    pub fn reconstruct(&self) -> Operator {
        let dim = self.projectors[0].dim();
        let mut acc = Operator::zeros(dim);
        for (a, e) in self.eigenvalues.iter().zip(&self.projectors) {
            acc = &acc + &e.scale_real(*a);
        }
        acc
    }

    /// Σ f(a_i) E_i.
    pub fn map(&self, f: impl Fn(f64) -> C64) -> Operator {
        let dim = self.projectors[0].dim();
        let mut acc = Operator::zeros(dim);
        for (a, e) in self.eigenvalues.iter().zip(&self.projectors) {
            acc = &acc + &e.scale(f(*a));
        }
        acc
    }
}

pub fn spectral(a: &Operator) -> Result<SpectralDecomposition> {
    spectral_with(a, &Tolerances::default())
}

/// Eigenvalues closer than `tol.degen` (chained) share one projector.
pub fn spectral_with(a: &Operator, tol: &Tolerances) -> Result<SpectralDecomposition> {
    a.ensure_hermitian(tol.herm)?;
    let (values, vectors) = a.eigh();
    let dim = a.dim();

    let mut groups: Vec<Vec<usize>> = Vec::new();
    for k in 0..dim {
        match groups.last_mut() {
            Some(g) if values[k] - values[*g.last().unwrap()] < tol.degen => g.push(k),
            _ => groups.push(vec![k]),
        }
    }

    let mut eigenvalues = Vec::with_capacity(groups.len());
    let mut projectors = Vec::with_capacity(groups.len());
    for g in groups {
        let mean = g.iter().map(|&k| values[k]).sum::<f64>() / g.len() as f64;
        let cols = DMatrix::from_fn(dim, g.len(), |i, c| vectors[(i, g[c])]);
        eigenvalues.push(mean);
        projectors.push(Operator { mat: &cols * cols.adjoint() });
    }
    Ok(SpectralDecomposition { eigenvalues, projectors })
}

/// Positive square root of a positive semidefinite operator. Eigenvalues in
/// [−tol_psd, 0) are clipped to zero.
pub fn hermitian_sqrt(a: &Operator) -> Result<Operator> {
    hermitian_sqrt_with(a, &Tolerances::default())
}

pub fn hermitian_sqrt_with(a: &Operator, tol: &Tolerances) -> Result<Operator> {
    a.ensure_hermitian(tol.herm)?;
    let (values, vectors) = a.eigh();
    if let Some(&min) = values.first() {
        if min < -tol.psd {
            return Err(QmError::NotPositive { min });
        }
    }
    let roots = DMatrix::from_fn(a.dim(), a.dim(), |i, j| {
        if i == j {
            C64::from(values[i].max(0.0).sqrt())
        } else {
            ZERO
        }
    });
    Ok(Operator { mat: &vectors * roots * vectors.adjoint() })
}
