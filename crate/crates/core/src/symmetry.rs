//! U(1) internal symmetry: integer charges, superselection sectors, and the
//! check that the internal representation commutes with space and spin.

use std::f64::consts::PI;

use nalgebra::DMatrix;

use crate::composition::CompositeSpace;
use crate::error::{QmError, Result};
use crate::linalg::{Operator, I, ZERO};
use crate::space::{spin_rotation, translation_unitary, Lattice, LatticeVector, SpinRep};

/// Points of the τ grid used to test commutation with the whole U(1) orbit.
pub const TAU_GRID: usize = 16;

/// Integer-valued diagonal charge Q.
#[derive(Debug, Clone, PartialEq)]
pub struct ChargeOperator {
    charges: Vec<i64>,
}

impl ChargeOperator {
    pub fn from_charges(charges: &[i64]) -> Result<Self> {
        if charges.is_empty() {
            return Err(QmError::InvalidCharge("empty".into()));
        }
        Ok(ChargeOperator { charges: charges.to_vec() })
    }

    /// Accepts a Hermitian operator that is diagonal with integer entries (within 1e-10).
    pub fn new(q: &Operator) -> Result<Self> {
        let m = q.matrix();
        for i in 0..q.dim() {
            for j in 0..q.dim() {
                if i != j && m[(i, j)].norm() > 1e-10 {
                    return Err(QmError::InvalidCharge(format!("off-diagonal entry at ({i}, {j})")));
                }
            }
        }
        let charges = (0..q.dim())
            .map(|i| {
                let z = m[(i, i)];
                let r = z.re.round();
                if (z.re - r).abs() > 1e-10 || z.im.abs() > 1e-10 {
                    Err(QmError::InvalidCharge(format!("diagonal entry {z} is not an integer")))
                } else {
                    Ok(r as i64)
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(ChargeOperator { charges })
    }

    /// Rotates a Hermitian charge with integer spectrum into its eigenbasis.
    /// Returns the diagonal charge and the unitary V with Q = V·diag·V†.
    pub fn diagonalize(q: &Operator) -> Result<(ChargeOperator, Operator)> {
        q.ensure_hermitian(1e-10)?;
        let (values, vectors) = q.eigh();
        let diag = Operator::from_real_diagonal(&values);
        Ok((ChargeOperator::new(&diag)?, Operator::from_matrix(vectors)?))
    }

    pub fn charges(&self) -> &[i64] {
        &self.charges
    }

    pub fn dim(&self) -> usize {
        self.charges.len()
    }

    pub fn operator(&self) -> Operator {
        Operator::from_real_diagonal(&self.charges.iter().map(|&q| q as f64).collect::<Vec<_>>())
    }
}

/// U(τ) = exp(iτQ).
pub fn u1_unitary(q: &ChargeOperator, tau: f64) -> Operator {
    let n = q.dim();
    Operator::from_matrix(DMatrix::from_fn(n, n, |i, j| {
        if i == j { (I * tau * q.charges[i] as f64).exp() } else { ZERO }
    }))
    .unwrap()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SectorDecomposition {
    /// (charge, projector) in ascending charge order.
    pub sectors: Vec<(i64, Operator)>,
}

impl SectorDecomposition {
    pub fn dims(&self) -> Vec<(i64, usize)> {
        self.sectors.iter().map(|(q, p)| (*q, p.trace().re.round() as usize)).collect()
    }
}

pub fn sectors(q: &ChargeOperator) -> SectorDecomposition {
    let mut values: Vec<i64> = q.charges.clone();
    values.sort_unstable();
    values.dedup();
    let sectors = values
        .into_iter()
        .map(|v| {
            let diag: Vec<f64> = q.charges.iter().map(|&c| if c == v { 1.0 } else { 0.0 }).collect();
            (v, Operator::from_real_diagonal(&diag))
        })
        .collect();
    SectorDecomposition { sectors }
}

/// Largest Frobenius norm of Π_q A Π_q' over distinct sectors.
pub fn off_sector_residual(a: &Operator, dec: &SectorDecomposition) -> Result<f64> {
    let dim = dec.sectors[0].1.dim();
    if a.dim() != dim {
        return Err(QmError::DimensionMismatch { expected: dim, found: a.dim() });
    }
    let mut worst: f64 = 0.0;
    for (i, (_, p)) in dec.sectors.iter().enumerate() {
        for (j, (_, p2)) in dec.sectors.iter().enumerate() {
            if i != j {
                worst = worst.max((&(p * a) * p2).frobenius_norm());
            }
        }
    }
    Ok(worst)
}

/// True iff A has no matrix elements between different charge sectors.
pub fn check_superselection(a: &Operator, dec: &SectorDecomposition) -> Result<bool> {
    Ok(off_sector_residual(a, dec)? <= 1e-10)
}

/// max_τ ‖[A, U(τ)]‖ over the τ grid {2πk/16}.
pub fn u1_commutator_residual(a: &Operator, q: &ChargeOperator) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for k in 0..TAU_GRID {
        let tau = 2.0 * PI * k as f64 / TAU_GRID as f64;
        worst = worst.max(a.commutator(&u1_unitary(q, tau))?.frobenius_norm());
    }
    Ok(worst)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FactorRole {
    Internal,
    Spin,
    Space,
}

/// Ordered tensor layout naming which factor carries which representation.
#[derive(Debug, Clone, PartialEq)]
pub struct CompositeLayout {
    roles: Vec<FactorRole>,
    space: CompositeSpace,
}

impl CompositeLayout {
    pub fn new(factors: Vec<(FactorRole, usize)>) -> Result<Self> {
        for role in [FactorRole::Internal, FactorRole::Spin, FactorRole::Space] {
            if factors.iter().filter(|(r, _)| *r == role).count() > 1 {
                return Err(QmError::LayoutMismatch(format!("{role:?} factor appears twice")));
            }
        }
        let (roles, dims): (Vec<_>, Vec<_>) = factors.into_iter().unzip();
        Ok(CompositeLayout { roles, space: CompositeSpace::new(dims)? })
    }

    pub fn space(&self) -> &CompositeSpace {
        &self.space
    }

    pub fn factor(&self, role: FactorRole) -> Option<usize> {
        self.roles.iter().position(|&r| r == role)
    }

    fn require(&self, role: FactorRole) -> Result<usize> {
        self.factor(role).ok_or_else(|| QmError::LayoutMismatch(format!("no {role:?} factor")))
    }

    pub fn lift(&self, op: &Operator, role: FactorRole) -> Result<Operator> {
        self.space.lift(op, self.require(role)?)
    }
}

/// Lattice translations and spin rotations to test against.
#[derive(Debug, Clone)]
pub struct SpaceGroupSample<'a> {
    pub lattice: &'a Lattice,
    pub translations: &'a [LatticeVector],
    pub spin: Option<&'a SpinRep>,
    pub rotations: &'a [([f64; 3], f64)],
}

/// Largest ‖[X, U]‖ with X already on the full composite and U ranging over
/// the lifted translations and rotations.
pub fn space_commutator_residual(
    full: &Operator,
    layout: &CompositeLayout,
    group: &SpaceGroupSample<'_>,
) -> Result<f64> {
    if full.dim() != layout.space.dim() {
        return Err(QmError::LayoutMismatch(format!(
            "operator dimension {} vs layout dimension {}",
            full.dim(),
            layout.space.dim()
        )));
    }
    let mut worst: f64 = 0.0;
    if !group.translations.is_empty() {
        let idx = layout.require(FactorRole::Space)?;
        if layout.space.factors()[idx] != group.lattice.sites() {
            return Err(QmError::LayoutMismatch("space factor does not match lattice".into()));
        }
        for a in group.translations {
            let u = layout.space.lift(&translation_unitary(group.lattice, a), idx)?;
            worst = worst.max(full.commutator(&u)?.frobenius_norm());
        }
    }
    if let Some(rep) = group.spin {
        let idx = layout.require(FactorRole::Spin)?;
        if layout.space.factors()[idx] != rep.dim() {
            return Err(QmError::LayoutMismatch("spin factor does not match representation".into()));
        }
        for &(axis, angle) in group.rotations {
            let u = layout.space.lift(&spin_rotation(rep, axis, angle)?, idx)?;
            worst = worst.max(full.commutator(&u)?.frobenius_norm());
        }
    }
    Ok(worst)
}

/// Lifts an internal-factor operator to the composite and checks that it
/// commutes with every sampled translation and rotation to 1e-12.
pub fn check_commutes_with_space(
    uint: &Operator,
    layout: &CompositeLayout,
    group: &SpaceGroupSample<'_>,
) -> Result<bool> {
    let full = layout.lift(uint, FactorRole::Internal)?;
    Ok(space_commutator_residual(&full, layout, group)? <= 1e-12)
}

/// Builds a block-diagonal operator with the given per-sector blocks, in
/// the basis ordering of `q`.
pub fn assemble_blocks(q: &ChargeOperator, blocks: &[(i64, Operator)]) -> Result<Operator> {
    let mut out = Operator::zeros(q.dim()).into_matrix();
    for (charge, block) in blocks {
        let idx: Vec<usize> = (0..q.dim()).filter(|&i| q.charges[i] == *charge).collect();
        if idx.len() != block.dim() {
            return Err(QmError::DimensionMismatch { expected: idx.len(), found: block.dim() });
        }
        for (r, &i) in idx.iter().enumerate() {
            for (c, &j) in idx.iter().enumerate() {
                out[(i, j)] = block.get(r, c);
            }
        }
    }
    Operator::from_matrix(out)
}
