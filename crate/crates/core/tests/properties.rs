use std::f64::consts::{FRAC_1_SQRT_2, PI};

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use qm_core::bell::{self, DetectorConfig, TwoParticleState, TSIRELSON};
use qm_core::composition::{partial_trace, tensor, CompositeSpace};
use qm_core::dynamics::{evolve, propagator_const};
use qm_core::linalg::{spectral, validate_density, Operator, Tolerances};
use qm_core::measurement::{luders_instrument, OutcomeSpace, Povm};
use qm_core::sample;
use qm_core::space::{check_covariance, Lattice};
use qm_core::symmetry::{assemble_blocks, check_superselection, sectors, u1_commutator_residual, ChargeOperator};

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn random_states_are_valid(seed in any::<u64>(), dim in 1usize..10) {
        let rho = sample::random_density(&mut rng(seed), dim);
        prop_assert!((rho.op().trace().re - 1.0).abs() < 1e-12);
        prop_assert!(rho.op().min_eigenvalue() > -1e-12);
        prop_assert!(rho.purity() <= 1.0 + 1e-12);
        prop_assert!(validate_density(rho.op().clone(), &Tolerances::default()).is_ok());
    }

    #[test]
    fn spectral_reconstruction(seed in any::<u64>(), dim in 1usize..12) {
        let a = sample::random_hermitian(&mut rng(seed), dim);
        let dec = spectral(&a).unwrap();
        prop_assert!(dec.reconstruct().distance(&a) < 1e-9);
        let total = dec.projectors.iter().fold(Operator::zeros(dim), |acc, p| &acc + p);
        prop_assert!(total.distance(&Operator::identity(dim)) < 1e-9);
    }

    #[test]
    fn tensor_mixed_product(seed in any::<u64>(), d1 in 1usize..4, d2 in 1usize..4) {
        let mut r = rng(seed);
        let (a, c) = (sample::random_hermitian(&mut r, d1), sample::random_hermitian(&mut r, d1));
        let (b, d) = (sample::random_hermitian(&mut r, d2), sample::random_hermitian(&mut r, d2));
        let lhs = &tensor(&a, &b) * &tensor(&c, &d);
        let rhs = tensor(&(&a * &c), &(&b * &d));
        prop_assert!(lhs.distance(&rhs) < 1e-12);
    }

    #[test]
    fn partial_trace_of_product(seed in any::<u64>(), d1 in 1usize..4, d2 in 1usize..5) {
        let mut r = rng(seed);
        let a = sample::random_density(&mut r, d1);
        let b = sample::random_density(&mut r, d2);
        let ab = validate_density(tensor(a.op(), b.op()), &Tolerances::default()).unwrap();
        let space = CompositeSpace::new(vec![d1, d2]).unwrap();
        prop_assert!(partial_trace(&ab, &space, 0).unwrap().op().distance(a.op()) < 1e-12);
        prop_assert!(partial_trace(&ab, &space, 1).unwrap().op().distance(b.op()) < 1e-12);
    }

    #[test]
    fn luders_instrument_is_complete(seed in any::<u64>(), dim in 1usize..6, count in 1usize..5) {
        let mut r = rng(seed);
        let effects = sample::random_povm_effects(&mut r, dim, count);
        let labels = (0..count).map(|i| format!("o{i}")).collect();
        let povm = Povm::new(OutcomeSpace::new(labels).unwrap(), effects, &Tolerances::default()).unwrap();
        let inst = luders_instrument(&povm).unwrap();
        let rho = sample::random_density(&mut r, dim);
        let total: f64 = povm.space().labels().iter().map(|l| inst.map(l, rho.op()).unwrap().trace().re).sum();
        prop_assert!((total - 1.0).abs() < 1e-10);
    }

    #[test]
    fn unitary_evolution_keeps_states(seed in any::<u64>(), dim in 1usize..8, t in -5.0f64..5.0) {
        let mut r = rng(seed);
        let h = sample::random_hermitian(&mut r, dim);
        let p = propagator_const(&h, t).unwrap();
        prop_assert!(p.unitarity_residual() < 1e-9);
        let rho = sample::random_density(&mut r, dim);
        let out = evolve(&rho, &p).unwrap();
        prop_assert!(validate_density(out.op().clone(), &Tolerances::default()).is_ok());
        prop_assert!((out.purity() - rho.purity()).abs() < 1e-10);
    }

    #[test]
    fn position_covariance_is_exact(seed in any::<u64>(), n in 2usize..17, shift in 0i64..64) {
        let mut r = rng(seed);
        let lat = Lattice::new(1, n, 1.0).unwrap();
        let region: Vec<usize> = (0..n).filter(|_| r.random_bool(0.5)).collect();
        let a = lat.vector(&[shift]).unwrap();
        prop_assert!(check_covariance(&lat, &a, &region).unwrap());
    }

    #[test]
    fn superselection_matches_u1_invariance(seed in any::<u64>(), block in any::<bool>()) {
        let mut r = rng(seed);
        let charges: Vec<i64> = (0..5).map(|_| r.random_range(-1..=1)).collect();
        let q = ChargeOperator::from_charges(&charges).unwrap();
        let dec = sectors(&q);
        let a = if block {
            let blocks: Vec<(i64, Operator)> =
                dec.dims().into_iter().map(|(c, d)| (c, sample::random_hermitian(&mut r, d))).collect();
            assemble_blocks(&q, &blocks).unwrap()
        } else {
            sample::random_hermitian(&mut r, 5)
        };
        let by_blocks = check_superselection(&a, &dec).unwrap();
        let by_tau = u1_commutator_residual(&a, &q).unwrap() <= 1e-9;
        prop_assert_eq!(by_blocks, by_tau);
        if block {
            prop_assert!(by_blocks);
        }
    }

    #[test]
    fn chsh_respects_scaled_bounds(seed in any::<u64>()) {
        let mut r = rng(seed);
        let lat = Lattice::new(1, 16, 1.0).unwrap();
        let state = TwoParticleState::singlet_gaussian(lat, &[8.0], &[7.0], 2.0).unwrap();
        let wa: Vec<usize> = (0..16).filter(|_| r.random_bool(0.6)).collect();
        let wb: Vec<usize> = (0..16).filter(|_| r.random_bool(0.6)).collect();
        let phis: [f64; 4] = std::array::from_fn(|_| r.random_range(0.0..2.0 * PI));
        let a = DetectorConfig::new(&lat, phis[0], &wa).unwrap();
        let b = DetectorConfig::new(&lat, phis[2], &wb).unwrap();
        let s = bell::chsh(&state, &a, &a.with_phi(phis[1]), &b, &b.with_phi(phis[3])).unwrap();
        let g = bell::localization_factor(&state, &a, &b);
        prop_assert!(s.abs() <= TSIRELSON * g + 1e-9);
        if g <= FRAC_1_SQRT_2 {
            prop_assert!(s.abs() <= 2.0 + 1e-9);
        }
    }

    #[test]
    fn factored_correlation_matches_dense(seed in any::<u64>()) {
        let mut r = rng(seed);
        let lat = Lattice::new(1, 6, 1.0).unwrap();
        let p1 = sample::random_ket(&mut r, 6);
        let p2 = sample::random_ket(&mut r, 6);
        let spin = sample::random_density(&mut r, 4);
        let state = TwoParticleState::new(lat, spin, p1, p2).unwrap();
        let wa: Vec<usize> = (0..6).filter(|_| r.random_bool(0.5)).collect();
        let wb: Vec<usize> = (0..6).filter(|_| r.random_bool(0.5)).collect();
        let a = DetectorConfig::new(&lat, r.random_range(0.0..2.0 * PI), &wa).unwrap();
        let b = DetectorConfig::new(&lat, r.random_range(0.0..2.0 * PI), &wb).unwrap();
        let fast = bell::correlation(&state, &a, &b).unwrap();
        let dense = bell::correlation_dense(&state, &a, &b).unwrap();
        prop_assert!((fast - dense).abs() < 1e-10);
    }
}
