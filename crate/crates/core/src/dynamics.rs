//! Unitary propagators solving i∂U/∂t = H(t)U in units with ħ = 1.

use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;

use crate::error::{QmError, Result};
use crate::linalg::{DensityOperator, Ket, Operator, Tolerances, I, ZERO};

/// Energy operator. A time-dependent Hamiltonian is assumed piecewise
/// continuous in t; the stepping order claims only hold under that assumption.
#[derive(Clone)]
pub enum Hamiltonian {
    Constant(Operator),
    TimeDependent(Arc<dyn Fn(f64) -> Operator + Send + Sync>),
}

impl fmt::Debug for Hamiltonian {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Hamiltonian::Constant(h) => f.debug_tuple("Constant").field(&h.dim()).finish(),
            Hamiltonian::TimeDependent(_) => f.write_str("TimeDependent(..)"),
        }
    }
}

impl Hamiltonian {
    pub fn time_dependent(f: impl Fn(f64) -> Operator + Send + Sync + 'static) -> Self {
        Hamiltonian::TimeDependent(Arc::new(f))
    }

    pub fn at(&self, t: f64) -> Operator {
        match self {
            Hamiltonian::Constant(h) => h.clone(),
            Hamiltonian::TimeDependent(f) => f(t),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Propagator {
    pub u: Operator,
    pub t0: f64,
    pub t1: f64,
}

impl Propagator {
    /// ‖U†U − I‖ (Frobenius).
    pub fn unitarity_residual(&self) -> f64 {
        (&self.u.adjoint() * &self.u).distance(&Operator::identity(self.u.dim()))
    }
}

/// exp(−iHt) for Hermitian H via its eigendecomposition.
pub fn exp_i_hermitian(h: &Operator, t: f64, tol: &Tolerances) -> Result<Operator> {
    h.ensure_hermitian(tol.herm)?;
    let (values, vectors) = h.eigh();
    let n = h.dim();
    let phases = DMatrix::from_fn(n, n, |i, j| if i == j { (-I * values[i] * t).exp() } else { ZERO });
    Operator::from_matrix(&vectors * phases * vectors.adjoint())
}

pub fn propagator_const(h: &Operator, t: f64) -> Result<Propagator> {
    propagator_const_with(h, t, &Tolerances::default())
}

pub fn propagator_const_with(h: &Operator, t: f64, tol: &Tolerances) -> Result<Propagator> {
    Ok(Propagator { u: exp_i_hermitian(h, t, tol)?, t0: 0.0, t1: t })
}

/// Midpoint-exponential product U = Π_k exp(−iH(t_k + Δ/2)Δ), later times on
/// the left. Second order in Δ.
pub fn propagator_td(h: &Hamiltonian, t0: f64, t1: f64, steps: usize) -> Result<Propagator> {
    propagator_td_with(h, t0, t1, steps, &Tolerances::default())
}

pub fn propagator_td_with(
    h: &Hamiltonian,
    t0: f64,
    t1: f64,
    steps: usize,
    tol: &Tolerances,
) -> Result<Propagator> {
    if steps == 0 {
        return Err(QmError::InvalidSteps);
    }
    let dt = (t1 - t0) / steps as f64;
    if let Hamiltonian::Constant(h0) = h {
        // every step is the same exponential
        let step = exp_i_hermitian(h0, dt, tol)?;
        let mut u = Operator::identity(h0.dim());
        for _ in 0..steps {
            u = &step * &u;
        }
        return Ok(Propagator { u, t0, t1 });
    }
    let mut u: Option<Operator> = None;
    for k in 0..steps {
        let mid = t0 + (k as f64 + 0.5) * dt;
        let step = exp_i_hermitian(&h.at(mid), dt, tol)?;
        u = Some(match u {
            None => step,
            Some(acc) => step.try_mul(&acc)?,
        });
    }
    Ok(Propagator { u: u.unwrap(), t0, t1 })
}

/// ρ ↦ UρU†.
pub fn evolve(rho: &DensityOperator, p: &Propagator) -> Result<DensityOperator> {
    let out = p.u.try_mul(rho.op())?.try_mul(&p.u.adjoint())?;
    let tr = out.trace().re;
    Ok(DensityOperator::from_cp_output(out.hermitian_part().scale_real(1.0 / tr)))
}

/// ψ ↦ Uψ for a unit vector ψ.
pub fn evolve_vector(psi: &Ket, p: &Propagator) -> Result<Ket> {
    let norm = psi.norm();
    if (norm - 1.0).abs() > 1e-10 {
        return Err(QmError::NotNormalized { norm });
    }
    p.u.apply(psi)
}

/// Least-squares angular velocity of the unwrapped phase atan2(y, x) of a
/// sampled rotation in the (x, y) plane.
pub fn fit_phase_frequency(times: &[f64], x: &[f64], y: &[f64]) -> f64 {
    assert!(times.len() == x.len() && x.len() == y.len() && times.len() >= 2);
    let mut phases = Vec::with_capacity(times.len());
    let mut prev = y[0].atan2(x[0]);
    let mut offset = 0.0;
    phases.push(prev);
    for k in 1..times.len() {
        let raw = y[k].atan2(x[k]);
        let mut jump = raw - prev;
        while jump > std::f64::consts::PI {
            offset -= 2.0 * std::f64::consts::PI;
            jump -= 2.0 * std::f64::consts::PI;
        }
        while jump < -std::f64::consts::PI {
            offset += 2.0 * std::f64::consts::PI;
            jump += 2.0 * std::f64::consts::PI;
        }
        prev = raw;
        phases.push(raw + offset);
    }
    let n = times.len() as f64;
    let mt = times.iter().sum::<f64>() / n;
    let mp = phases.iter().sum::<f64>() / n;
    let cov: f64 = times.iter().zip(&phases).map(|(t, p)| (t - mt) * (p - mp)).sum();
    let var: f64 = times.iter().map(|t| (t - mt) * (t - mt)).sum();
    cov / var
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{expectation, ONE};
    use crate::sample;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    #[test]
    fn diagonal_hamiltonian() {
        let omega = 1.3;
        let t = 0.7;
        let h = Operator::pauli_z().scale_real(omega / 2.0);
        let p = propagator_const(&h, t).unwrap();
        let expected = Operator::from_fn(2, |i, j| match (i, j) {
            (0, 0) => (-I * omega * t / 2.0).exp(),
            (1, 1) => (I * omega * t / 2.0).exp(),
            _ => ZERO,
        });
        assert!(p.u.distance(&expected) < 1e-12);
    }

    #[test]
    fn zero_hamiltonian_is_identity() {
        let p = propagator_const(&Operator::zeros(3), 5.0).unwrap();
        assert!(p.u.distance(&Operator::identity(3)) < 1e-14);
    }

    #[test]
    fn pauli_x_flip() {
        let omega = 2.0;
        let h = Operator::pauli_x().scale_real(omega / 2.0);
        let p = propagator_const(&h, PI / omega).unwrap();
        // exp(-iθσx/2) = cos(θ/2) I − i sin(θ/2) σx at θ = π
        let expected = Operator::pauli_x().scale(-I);
        assert!(p.u.distance(&expected) < 1e-12);

        let rho0 = DensityOperator::pure(&Ket::from_row_slice(&[ONE, ZERO])).unwrap();
        let rho1 = evolve(&rho0, &p).unwrap();
        assert!(rho1.op().distance(&Operator::from_real_diagonal(&[0.0, 1.0])) < 1e-12);
    }

    #[test]
    fn non_hermitian_rejected() {
        let a = Operator::from_row_slice(2, &[ZERO, ONE, ZERO, ZERO]).unwrap();
        assert!(matches!(propagator_const(&a, 1.0), Err(QmError::NotHermitian { .. })));
        let h = Hamiltonian::time_dependent(move |_| a.clone());
        assert!(propagator_td(&h, 0.0, 1.0, 4).is_err());
        assert!(matches!(
            propagator_td(&Hamiltonian::Constant(Operator::pauli_z()), 0.0, 1.0, 0),
            Err(QmError::InvalidSteps)
        ));
    }

    #[test]
    fn stepping_constant_matches_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let h0 = sample::random_hermitian(&mut rng, 4);
        let exact = propagator_const(&h0, 1.5).unwrap();
        let h0c = h0.clone();
        let td = Hamiltonian::time_dependent(move |_| h0c.clone());
        for steps in [1, 3, 17] {
            let p = propagator_td(&td, 0.0, 1.5, steps).unwrap();
            assert!(p.u.distance(&exact.u) < 1e-10, "steps {steps}");
            let pc = propagator_td(&Hamiltonian::Constant(h0.clone()), 0.0, 1.5, steps).unwrap();
            assert!(pc.u.distance(&exact.u) < 1e-10);
        }
    }

    #[test]
    fn commuting_family_closed_form() {
        // H(t) = f(t) σz, U = exp(−iσz ∫f), ∫_0^2 (1 + t²) dt = 2 + 8/3
        let h = Hamiltonian::time_dependent(|t| Operator::pauli_z().scale_real(1.0 + t * t));
        let integral = 2.0 + 8.0 / 3.0;
        let exact = propagator_const(&Operator::pauli_z(), integral).unwrap();
        let p = propagator_td(&h, 0.0, 2.0, 2000).unwrap();
        // midpoint rule error for f'' = 2: (b−a)Δ²/12 · 2
        let dt = 2.0 / 2000.0;
        let bound = 2.0 * dt * dt / 12.0 * 2.0 * 2f64.sqrt() * 1.01;
        assert!(p.u.distance(&exact.u) < bound);
    }

    #[test]
    fn second_order_self_convergence() {
        let h = Hamiltonian::time_dependent(|t| {
            &Operator::pauli_z() + &Operator::pauli_x().scale_real(t)
        });
        let reference = propagator_td(&h, 0.0, 1.0, 10_000).unwrap();
        let err = |steps| propagator_td(&h, 0.0, 1.0, steps).unwrap().u.distance(&reference.u);
        for steps in [8, 16, 32] {
            let ratio = err(steps) / err(2 * steps);
            assert!((ratio - 4.0).abs() <= 1.0, "steps {steps}: ratio {ratio}");
        }
    }

    #[test]
    fn evolve_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let u = Propagator { u: sample::random_unitary(&mut rng, 2), t0: 0.0, t1: 1.0 };
        let mixed = DensityOperator::maximally_mixed(2);
        assert!(evolve(&mixed, &u).unwrap().op().distance(mixed.op()) < 1e-14);

        let rho = sample::random_density(&mut rng, 5);
        let h = sample::random_hermitian(&mut rng, 5);
        let p = propagator_const(&h, 0.9).unwrap();
        let out = evolve(&rho, &p).unwrap();
        assert!((out.purity() - rho.purity()).abs() < 1e-12);
        crate::linalg::validate_density(out.op().clone(), &Tolerances::default()).unwrap();

        assert!(matches!(
            evolve(&DensityOperator::maximally_mixed(3), &p),
            Err(QmError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn evolve_vector_examples() {
        let psi = Ket::from_row_slice(&[ONE, ZERO]);
        let id = Propagator { u: Operator::identity(2), t0: 0.0, t1: 0.0 };
        assert_eq!(evolve_vector(&psi, &id).unwrap(), psi);

        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let h = sample::random_hermitian(&mut rng, 6);
        let phi = sample::random_ket(&mut rng, 6);
        let p = propagator_const(&h, 2.1).unwrap();
        let back = Propagator { u: p.u.adjoint(), t0: 2.1, t1: 0.0 };
        let round = evolve_vector(&evolve_vector(&phi, &p).unwrap(), &back).unwrap();
        assert!((round - &phi).norm() < 1e-10);

        let unnormalized = Ket::from_row_slice(&[ONE, ONE]);
        assert!(matches!(evolve_vector(&unnormalized, &id), Err(QmError::NotNormalized { .. })));
    }

    #[test]
    fn rabi_oscillation() {
        let omega = 1.7;
        let h = Operator::pauli_x().scale_real(omega / 2.0);
        let psi = Ket::from_row_slice(&[ONE, ZERO]);
        for k in 0..10 {
            let t = 0.37 * k as f64;
            let out = evolve_vector(&psi, &propagator_const(&h, t).unwrap()).unwrap();
            let p1 = out[1].norm_sqr();
            assert!((p1 - (omega * t / 2.0).sin().powi(2)).abs() < 1e-12);
        }
    }

    #[test]
    fn energy_conserved_and_group_law() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let h = sample::random_hermitian(&mut rng, 8);
        let rho = sample::random_density(&mut rng, 8);
        let (s, t) = (0.4, 1.1);
        let us = propagator_const(&h, s).unwrap();
        let ut = propagator_const(&h, t).unwrap();
        let ust = propagator_const(&h, s + t).unwrap();
        assert!((&us.u * &ut.u).distance(&ust.u) < 1e-9);
        assert!(ust.unitarity_residual() < 1e-9);
        let before = expectation(&rho, &h).unwrap();
        let after = expectation(&evolve(&rho, &ust).unwrap(), &h).unwrap();
        assert!((before - after).abs() < 1e-9);
    }

    #[test]
    fn phase_fit_recovers_frequency() {
        let w = -3.3;
        let times: Vec<f64> = (0..200).map(|k| k as f64 * 0.05).collect();
        let x: Vec<f64> = times.iter().map(|t| (w * t).cos()).collect();
        let y: Vec<f64> = times.iter().map(|t| (w * t).sin()).collect();
        assert!((fit_phase_frequency(&times, &x, &y) - w).abs() < 1e-12);
    }
}
