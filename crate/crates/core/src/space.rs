//! Periodic lattice stand-in for R^d: exact translation representations,
//! covariant position projectors, SU(2) spin and the Pauli Hamiltonian.
//!
//! Sites are indexed row-major over axes (axis 0 slowest). Composite
//! single-particle spaces are ordered spin ⊗ lattice.

use serde::{Deserialize, Serialize};

use crate::composition::tensor;
use crate::dynamics::exp_i_hermitian;
use crate::error::{QmError, Result};
use crate::linalg::{Ket, Operator, Tolerances, C64, I, ONE, ZERO};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Lattice {
    d: usize,
    n: usize,
    dx: f64,
}

impl Lattice {
    pub fn new(d: usize, n: usize, dx: f64) -> Result<Self> {
        if !(1..=3).contains(&d) {
            return Err(QmError::InvalidLattice(format!("dimension {d} not in 1..=3")));
        }
        if n < 2 {
            return Err(QmError::InvalidLattice(format!("{n} points per axis, need at least 2")));
        }
        if !(dx > 0.0 && dx.is_finite()) {
            return Err(QmError::InvalidLattice(format!("spacing {dx} must be positive")));
        }
        Ok(Lattice { d, n, dx })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    /// n^d.
    pub fn sites(&self) -> usize {
        self.n.pow(self.d as u32)
    }

    pub fn coords(&self, site: usize) -> Vec<usize> {
        let mut out = vec![0; self.d];
        let mut rest = site;
        for k in (0..self.d).rev() {
            out[k] = rest % self.n;
            rest /= self.n;
        }
        out
    }

    pub fn index(&self, coords: &[usize]) -> usize {
        coords.iter().fold(0, |acc, &c| acc * self.n + c % self.n)
    }

    pub fn vector(&self, components: &[i64]) -> Result<LatticeVector> {
        if components.len() != self.d {
            return Err(QmError::DimensionMismatch { expected: self.d, found: components.len() });
        }
        let n = self.n as i64;
        Ok(LatticeVector { components: components.iter().map(|c| c.rem_euclid(n) as usize).collect() })
    }

    /// Site reached from `site` by shifting with `a`.
    pub fn shift(&self, site: usize, a: &LatticeVector) -> usize {
        let c: Vec<usize> =
            self.coords(site).iter().zip(&a.components).map(|(x, s)| (x + s) % self.n).collect();
        self.index(&c)
    }

    /// Minimal-image displacement of a site from a point, per axis, in length units.
    pub fn displacement(&self, site: usize, center: &[f64]) -> Vec<f64> {
        let len = self.n as f64 * self.dx;
        self.coords(site)
            .iter()
            .zip(center)
            .map(|(&x, &c)| {
                let mut r = (x as f64 * self.dx - c).rem_euclid(len);
                if r > len / 2.0 {
                    r -= len;
                }
                r
            })
            .collect()
    }

    /// Sites whose periodic distance from `center` is strictly below `radius`.
    pub fn ball(&self, center: &[f64], radius: f64) -> Vec<usize> {
        (0..self.sites())
            .filter(|&s| {
                let r2: f64 = self.displacement(s, center).iter().map(|x| x * x).sum();
                r2.sqrt() < radius
            })
            .collect()
    }

    fn check_region(&self, region: &[usize]) -> Result<()> {
        match region.iter().find(|&&s| s >= self.sites()) {
            Some(&site) => Err(QmError::SiteOutOfRange { site, sites: self.sites() }),
            None => Ok(()),
        }
    }
}

/// Lattice translation in units of dx, components reduced mod n.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LatticeVector {
    components: Vec<usize>,
}

impl LatticeVector {
    pub fn components(&self) -> &[usize] {
        &self.components
    }

    pub fn add(&self, other: &LatticeVector, lat: &Lattice) -> LatticeVector {
        LatticeVector {
            components: self.components.iter().zip(&other.components).map(|(a, b)| (a + b) % lat.n).collect(),
        }
    }
}

/// Permutation matrix with U|x⟩ = |x + a⟩.
pub fn translation_unitary(lat: &Lattice, a: &LatticeVector) -> Operator {
    let mut u = Operator::zeros(lat.sites()).into_matrix();
    for x in 0..lat.sites() {
        u[(lat.shift(x, a), x)] = ONE;
    }
    Operator::from_matrix(u).unwrap()
}

/// Diagonal 0/1 projector onto the span of the region's sites.
pub fn position_projector(lat: &Lattice, region: &[usize]) -> Result<Operator> {
    lat.check_region(region)?;
    let mut p = Operator::zeros(lat.sites()).into_matrix();
    for &s in region {
        p[(s, s)] = ONE;
    }
    Operator::from_matrix(p)
}

/// α_a(B) = B + a (mod n).
pub fn translate_region(lat: &Lattice, region: &[usize], a: &LatticeVector) -> Vec<usize> {
    let mut out: Vec<usize> = region.iter().map(|&s| lat.shift(s, a)).collect();
    out.sort_unstable();
    out.dedup();
    out
}

/// Exact check of U(a) P_B U(a)† = P_{B+a}.
pub fn check_covariance(lat: &Lattice, a: &LatticeVector, region: &[usize]) -> Result<bool> {
    let u = translation_unitary(lat, a);
    let lhs = &(&u * &position_projector(lat, region)?) * &u.adjoint();
    let rhs = position_projector(lat, &translate_region(lat, region, a))?;
    Ok(lhs == rhs)
}

/// Diagonal coordinate operator along one axis, values in [0, n·dx).
pub fn position_operator(lat: &Lattice, axis: usize) -> Operator {
    let diag: Vec<f64> = (0..lat.sites()).map(|s| lat.coords(s)[axis] as f64 * lat.dx).collect();
    Operator::from_real_diagonal(&diag)
}

/// Normalized ψ(x) ∝ exp(−|x − c|²/(4w²)) with minimal-image distances, so
/// |ψ|² has standard deviation ≈ w per axis.
pub fn gaussian_packet(lat: &Lattice, center: &[f64], width: f64) -> Result<Ket> {
    if center.len() != lat.d {
        return Err(QmError::DimensionMismatch { expected: lat.d, found: center.len() });
    }
    if !(width > 0.0) {
        return Err(QmError::InvalidLattice(format!("packet width {width} must be positive")));
    }
    let v = Ket::from_fn(lat.sites(), |s, _| {
        let r2: f64 = lat.displacement(s, center).iter().map(|x| x * x).sum();
        C64::from((-r2 / (4.0 * width * width)).exp())
    });
    let norm = v.norm();
    Ok(v / C64::from(norm))
}

/// Irreducible SU(2) representation of spin j = two_j/2 in the |j, m⟩ basis
/// ordered by descending m.
#[derive(Debug, Clone, PartialEq)]
pub struct SpinRep {
    two_j: u32,
    pub jx: Operator,
    pub jy: Operator,
    pub jz: Operator,
}

impl SpinRep {
    pub fn two_j(&self) -> u32 {
        self.two_j
    }

    pub fn j(&self) -> f64 {
        self.two_j as f64 / 2.0
    }

    pub fn dim(&self) -> usize {
        self.two_j as usize + 1
    }

    pub fn is_half_integer(&self) -> bool {
        self.two_j % 2 == 1
    }

    /// n·J.
    pub fn along(&self, axis: [f64; 3]) -> Operator {
        &(&self.jx.scale_real(axis[0]) + &self.jy.scale_real(axis[1])) + &self.jz.scale_real(axis[2])
    }

    /// J_x² + J_y² + J_z².
    pub fn casimir(&self) -> Operator {
        &(&(&self.jx * &self.jx) + &(&self.jy * &self.jy)) + &(&self.jz * &self.jz)
    }
}

pub fn spin_rep(two_j: u32) -> Result<SpinRep> {
    if two_j == 0 {
        return Err(QmError::InvalidSpin { two_j });
    }
    let j = two_j as f64 / 2.0;
    let dim = two_j as usize + 1;
    let m = |k: usize| j - k as f64;
    // J+|j,m⟩ = sqrt(j(j+1) − m(m+1)) |j,m+1⟩; row k−1 holds m+1
    let jp = Operator::from_fn(dim, |r, c| {
        if r + 1 == c {
            C64::from((j * (j + 1.0) - m(c) * (m(c) + 1.0)).sqrt())
        } else {
            ZERO
        }
    });
    let jm = jp.adjoint();
    let jx = (&jp + &jm).scale_real(0.5);
    let jy = (&jp - &jm).scale(-I * 0.5);
    let jz = Operator::from_real_diagonal(&(0..dim).map(m).collect::<Vec<_>>());
    Ok(SpinRep { two_j, jx, jy, jz })
}

/// U = exp(−iθ n·J).
pub fn spin_rotation(rep: &SpinRep, axis: [f64; 3], angle: f64) -> Result<Operator> {
    let norm = axis.iter().map(|a| a * a).sum::<f64>().sqrt();
    if (norm - 1.0).abs() > 1e-9 {
        return Err(QmError::BadAxis { norm });
    }
    exp_i_hermitian(&rep.along(axis), angle, &Tolerances::default())
}

/// Discrete p²/2m with the periodic 3-point stencil on every axis (ħ = 1).
pub fn kinetic_operator(lat: &Lattice, mass: f64) -> Result<Operator> {
    if !(mass > 0.0) {
        return Err(QmError::InvalidMass(mass));
    }
    let c = 1.0 / (2.0 * mass * lat.dx * lat.dx);
    let mut t = Operator::zeros(lat.sites()).into_matrix();
    for x in 0..lat.sites() {
        for axis in 0..lat.d {
            let mut fwd = vec![0i64; lat.d];
            fwd[axis] = 1;
            let mut bwd = vec![0i64; lat.d];
            bwd[axis] = -1;
            let xp = lat.shift(x, &lat.vector(&fwd)?);
            let xm = lat.shift(x, &lat.vector(&bwd)?);
            t[(x, x)] += C64::from(2.0 * c);
            t[(x, xp)] -= C64::from(c);
            t[(x, xm)] -= C64::from(c);
        }
    }
    Operator::from_matrix(t)
}

/// Schrödinger-Pauli Hamiltonian on C² ⊗ lattice:
/// H = I₂ ⊗ p²/2m − μ (σ·B) ⊗ I.
pub fn pauli_hamiltonian(lat: &Lattice, mass: f64, field: [f64; 3], mu: f64) -> Result<Operator> {
    let kinetic = kinetic_operator(lat, mass)?;
    let sigma_b = &(&Operator::pauli_x().scale_real(field[0]) + &Operator::pauli_y().scale_real(field[1]))
        + &Operator::pauli_z().scale_real(field[2]);
    let spin_part = tensor(&sigma_b.scale_real(-mu), &Operator::identity(lat.sites()));
    Ok(&tensor(&Operator::identity(2), &kinetic) + &spin_part)
}
