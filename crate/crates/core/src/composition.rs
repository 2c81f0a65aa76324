//! Tensor products, partial traces and identical-particle projectors.
//!
//! Factor convention everywhere: row-major with the leftmost factor slowest,
//! (i₁, i₂) ↦ i₁·dim₂ + i₂.

use serde::{Deserialize, Serialize};

use crate::error::{QmError, Result};
use crate::linalg::{DensityOperator, Operator, C64, ZERO};
use crate::space::SpinRep;

/// Largest N-fold tensor power for which (anti)symmetrizers are materialized.
pub const MAX_SYMMETRIZER_DIM: usize = 4096;
/// Largest particle number for the explicit N!-term permutation sum.
pub const MAX_SYMMETRIZER_PARTICLES: usize = 8;

/// Kronecker product A ⊗ B.
pub fn tensor(a: &Operator, b: &Operator) -> Operator {
    Operator::from_matrix(a.matrix().kronecker(b.matrix())).unwrap()
}

/// Left-to-right Kronecker product of all factors.
pub fn tensor_all(ops: &[Operator]) -> Operator {
    let (first, rest) = ops.split_first().expect("tensor_all needs at least one factor");
    rest.iter().fold(first.clone(), |acc, op| tensor(&acc, op))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CompositeSpace {
    factors: Vec<usize>,
}

impl CompositeSpace {
    pub fn new(factors: Vec<usize>) -> Result<Self> {
        if factors.is_empty() || factors.contains(&0) {
            return Err(QmError::LayoutMismatch(format!("invalid factor dimensions {factors:?}")));
        }
        Ok(CompositeSpace { factors })
    }

    pub fn factors(&self) -> &[usize] {
        &self.factors
    }

    pub fn dim(&self) -> usize {
        self.factors.iter().product()
    }

    fn check_factor(&self, index: usize) -> Result<()> {
        if index >= self.factors.len() {
            return Err(QmError::BadFactor { index, factors: self.factors.len() });
        }
        Ok(())
    }

    /// (left, factor, right) block sizes around one factor.
    fn split(&self, index: usize) -> (usize, usize, usize) {
        let left = self.factors[..index].iter().product();
        let right = self.factors[index + 1..].iter().product();
        (left, self.factors[index], right)
    }

    /// I ⊗ … ⊗ op ⊗ … ⊗ I with `op` on factor `index`.
    pub fn lift(&self, op: &Operator, index: usize) -> Result<Operator> {
        self.check_factor(index)?;
        if op.dim() != self.factors[index] {
            return Err(QmError::DimensionMismatch { expected: self.factors[index], found: op.dim() });
        }
        let (left, _, right) = self.split(index);
        Ok(tensor(&tensor(&Operator::identity(left), op), &Operator::identity(right)))
    }
}

/// Trace over every factor except `keep`.
pub fn partial_trace_op(op: &Operator, space: &CompositeSpace, keep: usize) -> Result<Operator> {
    space.check_factor(keep)?;
    if op.dim() != space.dim() {
        return Err(QmError::DimensionMismatch { expected: space.dim(), found: op.dim() });
    }
    let (left, dk, right) = space.split(keep);
    let m = op.matrix();
    Ok(Operator::from_fn(dk, |a, b| {
        let mut acc = ZERO;
        for l in 0..left {
            for r in 0..right {
                acc += m[((l * dk + a) * right + r, (l * dk + b) * right + r)];
            }
        }
        acc
    }))
}

pub fn partial_trace(rho: &DensityOperator, space: &CompositeSpace, keep: usize) -> Result<DensityOperator> {
    let out = partial_trace_op(rho.op(), space, keep)?;
    Ok(DensityOperator::from_cp_output(out.hermitian_part()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Statistics {
    Boson,
    Fermion,
    Distinguishable,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExchangeSymmetry {
    pub kind: Statistics,
    pub particles: usize,
    pub single_dim: usize,
}

impl ExchangeSymmetry {
    pub fn new(kind: Statistics, particles: usize, single_dim: usize) -> Result<Self> {
        if particles == 0 || single_dim == 0 {
            return Err(QmError::LayoutMismatch(format!(
                "need N >= 1 and d >= 1, got N = {particles}, d = {single_dim}"
            )));
        }
        Ok(ExchangeSymmetry { kind, particles, single_dim })
    }

    /// Projector onto the admissible N-particle subspace.
    pub fn projector(&self) -> Result<Operator> {
        match self.kind {
            Statistics::Boson => symmetrizer(self.particles, self.single_dim),
            Statistics::Fermion => antisymmetrizer(self.particles, self.single_dim),
            Statistics::Distinguishable => {
                Ok(Operator::identity(checked_power(self.single_dim, self.particles)?))
            }
        }
    }

    /// Bosons must carry integer spin and fermions half-integer spin.
    pub fn consistent_with_spin(&self, rep: &SpinRep) -> bool {
        match self.kind {
            Statistics::Boson => !rep.is_half_integer(),
            Statistics::Fermion => rep.is_half_integer(),
            Statistics::Distinguishable => true,
        }
    }
}

fn checked_power(d: usize, n: usize) -> Result<usize> {
    let mut size: usize = 1;
    for _ in 0..n {
        size = size.checked_mul(d).filter(|&s| s <= MAX_SYMMETRIZER_DIM).ok_or(QmError::SizeGuard {
            what: "tensor power dimension",
            size: usize::MAX,
            limit: MAX_SYMMETRIZER_DIM,
        })?;
    }
    Ok(size)
}

/// All permutations of 0..n in lexicographic order.
pub fn permutations(n: usize) -> Vec<Vec<usize>> {
    let mut p: Vec<usize> = (0..n).collect();
    let mut out = vec![p.clone()];
    loop {
        let Some(i) = (1..n).rev().find(|&i| p[i - 1] < p[i]) else { break };
        let j = (i..n).rev().find(|&j| p[j] > p[i - 1]).unwrap();
        p.swap(i - 1, j);
        p[i..].reverse();
        out.push(p.clone());
    }
    out
}

pub fn cycle_count(perm: &[usize]) -> usize {
    let mut seen = vec![false; perm.len()];
    let mut cycles = 0;
    for start in 0..perm.len() {
        if !seen[start] {
            cycles += 1;
            let mut k = start;
            while !seen[k] {
                seen[k] = true;
                k = perm[k];
            }
        }
    }
    cycles
}

pub fn sign(perm: &[usize]) -> f64 {
    if (perm.len() - cycle_count(perm)) % 2 == 0 { 1.0 } else { -1.0 }
}

/// Basis index of W_π|i₁…i_N⟩, where factor k moves to slot π(k).
fn permuted_index(index: usize, perm: &[usize], d: usize) -> usize {
    let n = perm.len();
    let mut digits = vec![0; n];
    let mut rest = index;
    for k in (0..n).rev() {
        digits[k] = rest % d;
        rest /= d;
    }
    let mut moved = vec![0; n];
    for k in 0..n {
        moved[perm[k]] = digits[k];
    }
    moved.iter().fold(0, |acc, &x| acc * d + x)
}

/// Permutation operator W_π on (C^d)^{⊗N}.
pub fn permutation_operator(perm: &[usize], d: usize) -> Result<Operator> {
    let dim = checked_power(d, perm.len())?;
    let mut w = Operator::zeros(dim).into_matrix();
    for col in 0..dim {
        w[(permuted_index(col, perm, d), col)] = C64::from(1.0);
    }
    Operator::from_matrix(w)
}

fn permutation_sum(n: usize, d: usize, signed: bool) -> Result<Operator> {
    if n == 0 {
        return Err(QmError::LayoutMismatch("N must be at least 1".into()));
    }
    let dim = checked_power(d, n)?;
    if n > MAX_SYMMETRIZER_PARTICLES {
        return Err(QmError::SizeGuard { what: "particle number", size: n, limit: MAX_SYMMETRIZER_PARTICLES });
    }
    let perms = permutations(n);
    let weight = 1.0 / perms.len() as f64;
    let mut p = Operator::zeros(dim).into_matrix();
    for perm in &perms {
        let w = if signed { sign(perm) * weight } else { weight };
        for col in 0..dim {
            p[(permuted_index(col, perm, d), col)] += C64::from(w);
        }
    }
    Operator::from_matrix(p)
}

/// P_S = (1/N!) Σ_π W_π.
pub fn symmetrizer(n: usize, d: usize) -> Result<Operator> {
    permutation_sum(n, d, false)
}

/// P_A = (1/N!) Σ_π sgn(π) W_π.
pub fn antisymmetrizer(n: usize, d: usize) -> Result<Operator> {
    permutation_sum(n, d, true)
}

/// Transposition of factors `i < j` (0-based) among `n`.
pub fn exchange_operator(n: usize, d: usize, i: usize, j: usize) -> Result<Operator> {
    if !(i < j && j < n) {
        return Err(QmError::BadTransposition { i, j, n });
    }
    let mut perm: Vec<usize> = (0..n).collect();
    perm.swap(i, j);
    permutation_operator(&perm, d)
}

/// Rank of a projector as its rounded trace.
pub fn projector_rank(p: &Operator) -> usize {
    p.trace().re.round() as usize
}

/// Tr P_S (or Tr P_A when `signed`) computed class by class:
/// (1/N!) Σ_λ |C_λ| (±1)^{N−ℓ(λ)} d^{ℓ(λ)} over cycle types λ ⊢ N.
/// Needs no matrices, so it covers every N with d^N ≤ 4096.
pub fn projector_trace_by_classes(n: usize, d: usize, signed: bool) -> u64 {
    let factorial = |k: usize| (1..=k as i128).product::<i128>();
    let mut total: i128 = 0;
    for parts in partitions(n) {
        let mut denom: i128 = 1;
        let mut counts = std::collections::BTreeMap::new();
        for &k in &parts {
            *counts.entry(k).or_insert(0usize) += 1;
        }
        for (&k, &m) in &counts {
            denom *= (k as i128).pow(m as u32) * factorial(m);
        }
        let class_size = factorial(n) / denom;
        let sgn = if signed && (n - parts.len()) % 2 == 1 { -1 } else { 1 };
        total += sgn * class_size * (d as i128).pow(parts.len() as u32);
    }
    let nf = factorial(n);
    assert_eq!(total % nf, 0, "class sum not divisible by N!");
    (total / nf) as u64
}

/// Integer partitions of n as non-increasing part lists.
fn partitions(n: usize) -> Vec<Vec<usize>> {
    fn go(rest: usize, max: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if rest == 0 {
            out.push(cur.clone());
            return;
        }
        for k in (1..=max.min(rest)).rev() {
            cur.push(k);
            go(rest - k, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    go(n, n, &mut Vec::new(), &mut out);
    out
}
