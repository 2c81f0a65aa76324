//! Seeded random instances for property checks: Ginibre states, Hermitian
//! matrices, Haar-ish unitaries and POVMs.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::linalg::{DensityOperator, Ket, Operator, Tolerances, C64, ZERO};

pub fn ginibre<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> DMatrix<C64> {
    DMatrix::from_fn(rows, cols, |_, _| {
        C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    })
}

pub fn random_ket<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> Ket {
    let v = ginibre(rng, dim, 1).column(0).into_owned();
    let n = v.norm();
    v / C64::from(n)
}

pub fn random_hermitian<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> Operator {
    let g = ginibre(rng, dim, dim);
    Operator::from_matrix((&g + g.adjoint()) * C64::from(0.5)).unwrap()
}

/// Full-rank mixed state GG†/Tr(GG†).
pub fn random_density<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> DensityOperator {
    let g = ginibre(rng, dim, dim);
    let p = &g * g.adjoint();
    let tr = p.trace().re;
    let op = Operator::from_matrix(p / C64::from(tr)).unwrap().hermitian_part();
    crate::linalg::validate_density(op, &Tolerances::default()).expect("Ginibre state is valid")
}

pub fn random_unitary<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> Operator {
    let qr = ginibre(rng, dim, dim).qr();
    let (q, r) = qr.unpack();
    // fix column phases so the distribution does not depend on the QR sign convention
    let phases = DMatrix::from_fn(dim, dim, |i, j| {
        if i == j {
            let d = r[(i, i)];
            if d.norm() > 0.0 { d / C64::from(d.norm()) } else { C64::from(1.0) }
        } else {
            ZERO
        }
    });
    Operator::from_matrix(q * phases).unwrap()
}

/// `count` effects E_i = S^{-1/2} P_i S^{-1/2} with S = Σ P_i, summing to I.
pub fn random_povm_effects<R: Rng + ?Sized>(rng: &mut R, dim: usize, count: usize) -> Vec<Operator> {
    let parts: Vec<DMatrix<C64>> = (0..count)
        .map(|_| {
            let g = ginibre(rng, dim, dim);
            &g * g.adjoint()
        })
        .collect();
    let total = parts.iter().fold(DMatrix::zeros(dim, dim), |acc, p| acc + p);
    let (values, vectors) = Operator::from_matrix(total).unwrap().eigh();
    let inv_sqrt = DMatrix::from_fn(dim, dim, |i, j| {
        if i == j { C64::from(values[i].powf(-0.5)) } else { ZERO }
    });
    let s = &vectors * inv_sqrt * vectors.adjoint();
    parts
        .into_iter()
        .map(|p| Operator::from_matrix(&s * p * &s).unwrap().hermitian_part())
        .collect()
}
