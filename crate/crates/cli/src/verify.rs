//! Invariant suites for the seven axioms, run against the example system
//! described by a [`RunConfig`].

use std::f64::consts::PI;

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use qm_core::composition::{
    partial_trace, projector_rank, projector_trace_by_classes, symmetrizer, antisymmetrizer, tensor,
    CompositeSpace, ExchangeSymmetry, Statistics,
};
use qm_core::dynamics::{evolve, propagator_const_with, propagator_td_with, Hamiltonian};
use qm_core::linalg::{expectation_with, spectral_with, validate_density, DensityOperator, Operator, Tolerances};
use qm_core::measurement::{luders_instrument_with, Instrument, OutcomeSpace, Povm};
use qm_core::sample;
use qm_core::space::{check_covariance, spin_rep, spin_rotation, translation_unitary, Lattice, LatticeVector};
use qm_core::symmetry::{
    check_commutes_with_space, check_superselection, off_sector_residual, sectors, space_commutator_residual,
    u1_commutator_residual, u1_unitary, ChargeOperator, FactorRole, SpaceGroupSample,
};
use qm_core::system::{example_system, SystemDescriptor};

use crate::config::RunConfig;
use crate::CliError;

/// Largest composite dimension `verify` will build densely.
pub const MAX_VERIFY_DIM: usize = 512;
/// Commutators of exactly commuting dense operators stay below this.
const COMMUTE_TOL: f64 = 1e-12;
/// Superselection equivalence: [A, U(τ)] vanishes on the τ grid.
const TAU_COMMUTE_TOL: f64 = 1e-9;
/// Σᵢ Tr Γᵢ(ρ) = 1.
const COMPLETENESS_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    /// Measured deviation; exact checks report a count of mismatches.
    pub residual: f64,
    pub tolerance: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct AxiomReport {
    pub axiom: u8,
    pub name: &'static str,
    pub passed: bool,
    pub max_residual: f64,
    pub checks: Vec<CheckResult>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SystemSummary {
    pub d: usize,
    pub n: usize,
    pub dx: f64,
    pub factors: Vec<usize>,
    pub dim: usize,
    pub outcomes: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyReport {
    pub seed: u64,
    pub system: SystemSummary,
    pub passed: bool,
    pub axioms: Vec<AxiomReport>,
}

impl VerifyReport {
    pub fn axiom(&self, k: u8) -> Option<&AxiomReport> {
        self.axioms.iter().find(|a| a.axiom == k)
    }

    /// One line per axiom plus one per failing check.
    pub fn to_text(&self) -> String {
        let mut out = format!("seed {}  system dim {} factors {:?}\n", self.seed, self.system.dim, self.system.factors);
        for a in &self.axioms {
            out.push_str(&format!(
                "axiom {} {:<22} {}  checks {:>2}  max residual {:.3e}\n",
                a.axiom,
                a.name,
                if a.passed { "PASS" } else { "FAIL" },
                a.checks.len(),
                a.max_residual
            ));
            for c in a.checks.iter().filter(|c| !c.passed) {
                out.push_str(&format!("    failed: {} residual {:.3e} > {:.3e}", c.name, c.residual, c.tolerance));
                if let Some(e) = &c.error {
                    out.push_str(&format!(" ({e})"));
                }
                out.push('\n');
            }
        }
        out.push_str(if self.passed { "all axioms pass\n" } else { "some checks failed\n" });
        out
    }
}

struct Suite {
    axiom: u8,
    name: &'static str,
    checks: Vec<CheckResult>,
}

impl Suite {
    fn new(axiom: u8, name: &'static str) -> Self {
        Suite { axiom, name, checks: Vec::new() }
    }

    /// Records `residual <= tolerance`; an error counts as a failure.
    fn check(&mut self, name: impl Into<String>, tolerance: f64, residual: qm_core::Result<f64>) {
        let name = name.into();
        let result = match residual {
            Ok(r) => CheckResult { name, passed: r <= tolerance, residual: r, tolerance, error: None },
            Err(e) => CheckResult { name, passed: false, residual: f64::INFINITY, tolerance, error: Some(e.to_string()) },
        };
        self.checks.push(result);
    }

    /// Records an exact condition as a mismatch count.
    fn exact(&mut self, name: impl Into<String>, mismatches: qm_core::Result<usize>) {
        self.check(name, 0.0, mismatches.map(|m| m as f64));
    }

    fn finish(self) -> AxiomReport {
        let passed = self.checks.iter().all(|c| c.passed);
        let max_residual = self.checks.iter().map(|c| c.residual).fold(0.0, f64::max);
        AxiomReport { axiom: self.axiom, name: self.name, passed, max_residual, checks: self.checks }
    }
}

fn density_residual(rho: &Operator) -> f64 {
    let tr = (rho.trace().re - 1.0).abs().max(rho.trace().im.abs());
    tr.max(rho.hermiticity_residual()).max((-rho.min_eigenvalue()).max(0.0))
}

fn completeness(inst: &Instrument, rho: &DensityOperator) -> qm_core::Result<f64> {
    let mut total = 0.0;
    for label in inst.space().labels() {
        total += inst.map(label, rho.op())?.trace().re;
    }
    Ok((total - 1.0).abs())
}

/// Runs every suite. Config problems surface as `Err`; failed checks are
/// reported inside the returned report.
pub fn run(cfg: &RunConfig) -> Result<VerifyReport, CliError> {
    cfg.validate()?;
    let tol = cfg.tolerances();
    let lat = cfg.lattice()?;
    if 4 * lat.sites() > MAX_VERIFY_DIM {
        return Err(CliError::Config(format!(
            "verify builds the system with an internal qubit densely; 4·n^d = {} exceeds {MAX_VERIFY_DIM}",
            4 * lat.sites()
        )));
    }
    let sys = example_system(&cfg.example_params()?, &Tolerances::default())?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);

    let extra_povm = load_json::<Povm>(cfg.povm_file.as_deref())?;
    let extra_instrument = load_json::<Instrument>(cfg.instrument_file.as_deref())?;

    let axioms = vec![
        hilbert_space(&sys, &tol, &mut rng),
        measurements(&sys, &tol, &mut rng, extra_povm.as_ref(), extra_instrument.as_ref()),
        time(&sys, &tol),
        space(&sys, cfg, &mut rng),
        composite(&sys, &tol, &mut rng),
        bose_fermi(),
        internal(&sys, &tol, &mut rng),
    ];
    let passed = axioms.iter().all(|a| a.passed);
    Ok(VerifyReport {
        seed: cfg.seed,
        system: SystemSummary {
            d: lat.d(),
            n: lat.n(),
            dx: lat.dx(),
            factors: sys.layout.space().factors().to_vec(),
            dim: sys.dim(),
            outcomes: sys.povm.space().labels().to_vec(),
        },
        passed,
        axioms,
    })
}

fn load_json<T: serde::de::DeserializeOwned>(path: Option<&std::path::Path>) -> Result<Option<T>, CliError> {
    let Some(path) = path else { return Ok(None) };
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map(Some)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

fn hilbert_space(sys: &SystemDescriptor, tol: &Tolerances, rng: &mut ChaCha8Rng) -> AxiomReport {
    let mut s = Suite::new(1, "Hilbert space");
    let dim = sys.dim();
    s.check("example state is a density operator", tol.trace.min(tol.herm), Ok(density_residual(sys.state.op())));
    s.check("example state revalidates", 0.0, validate_density(sys.state.op().clone(), tol).map(|_| 0.0));

    let mut worst = Ok(0.0f64);
    for _ in 0..4 {
        let rho = sample::random_density(rng, dim);
        worst = worst.map(|w| w.max(density_residual(rho.op())));
    }
    s.check("random densities are valid", tol.trace.max(tol.psd), worst);

    let a = sample::random_hermitian(rng, dim);
    s.check(
        "Born rule equals spectral sum",
        1e-10,
        (|| {
            let dec = spectral_with(&a, tol)?;
            let born = expectation_with(&sys.state, &a, tol)?;
            let mut sum = 0.0;
            for (v, p) in dec.eigenvalues.iter().zip(&dec.projectors) {
                sum += v * sys.state.op().try_mul(p)?.trace().re;
            }
            Ok((born - sum).abs())
        })(),
    );
    s.check(
        "spectral reconstruction of H",
        tol.recon,
        spectral_with(&sys.hamiltonian, tol).map(|d| d.reconstruct().distance(&sys.hamiltonian)),
    );
    s.check("H is self-adjoint", tol.herm, Ok(sys.hamiltonian.hermiticity_residual()));
    s.finish()
}

fn measurements(
    sys: &SystemDescriptor,
    tol: &Tolerances,
    rng: &mut ChaCha8Rng,
    extra_povm: Option<&Povm>,
    extra_instrument: Option<&Instrument>,
) -> AxiomReport {
    let mut s = Suite::new(2, "Measurements");
    let dim = sys.dim();
    let effects_sum = |p: &Povm| p.effects().iter().fold(Operator::zeros(p.dim()), |acc, e| &acc + e);
    s.check("effects sum to identity", tol.herm, Ok(effects_sum(&sys.povm).distance(&Operator::identity(dim))));
    s.check("instrument completeness on example state", COMPLETENESS_TOL, completeness(&sys.instrument, &sys.state));

    let mut worst = Ok(0.0f64);
    for _ in 0..4 {
        let rho = sample::random_density(rng, dim);
        worst = worst.and_then(|w| Ok(w.max(completeness(&sys.instrument, &rho)?)));
    }
    s.check("instrument completeness on random states", COMPLETENESS_TOL, worst);

    s.check(
        "instrument induces its POVM",
        tol.herm,
        sys.instrument.povm().map(|p| {
            p.effects().iter().zip(sys.povm.effects()).map(|(a, b)| a.distance(b)).fold(0.0, f64::max)
        }),
    );
    s.check(
        "Born probabilities match instrument traces",
        1e-12,
        (|| {
            let mut worst: f64 = 0.0;
            for label in sys.povm.space().labels() {
                let p = sys.povm.probability(label, &sys.state)?;
                let t = sys.instrument.map(label, sys.state.op())?.trace().re;
                worst = worst.max((p - t).abs());
            }
            Ok(worst)
        })(),
    );
    s.check(
        "repeated projective outcome is certain",
        1e-10,
        (|| {
            let mut worst: f64 = 0.0;
            for label in sys.povm.space().labels() {
                let first = sys.instrument.apply_with(label, &sys.state, tol)?;
                if let Some(post) = first.post_state {
                    let again = sys.instrument.apply_with(label, &post, tol)?;
                    worst = worst.max((again.probability - 1.0).abs());
                }
            }
            Ok(worst)
        })(),
    );
    s.check(
        "unsharp spin POVM instrument completeness",
        COMPLETENESS_TOL,
        (|| {
            let eta = 0.6;
            let sz = tensor(&Operator::pauli_z(), &Operator::identity(sys.lattice.sites()));
            let id = Operator::identity(dim);
            let plus = (&id + &sz.scale_real(eta)).scale_real(0.5);
            let minus = (&id - &sz.scale_real(eta)).scale_real(0.5);
            let povm = Povm::new(OutcomeSpace::new(vec!["+".into(), "-".into()])?, vec![plus, minus], tol)?;
            completeness(&luders_instrument_with(&povm, tol)?, &sys.state)
        })(),
    );
    s.check(
        "event additivity of the instrument",
        1e-12,
        (|| {
            let labels = sys.instrument.space().labels();
            let whole = sys.instrument.map_event(labels, sys.state.op())?;
            let mut parts = Operator::zeros(dim);
            for l in labels {
                parts = &parts + &sys.instrument.map(l, sys.state.op())?;
            }
            Ok(whole.distance(&parts))
        })(),
    );
    if let Some(p) = extra_povm {
        s.check("configured POVM sums to identity", tol.herm, Ok(effects_sum(p).distance(&Operator::identity(p.dim()))));
    }
    if let Some(inst) = extra_instrument {
        let d = inst.dim();
        s.check("configured instrument completeness", COMPLETENESS_TOL, completeness(inst, &DensityOperator::maximally_mixed(d)));
        let rho = sample::random_density(rng, d);
        s.check("configured instrument completeness on a random state", COMPLETENESS_TOL, completeness(inst, &rho));
    }
    s.finish()
}

fn time(sys: &SystemDescriptor, tol: &Tolerances) -> AxiomReport {
    let mut s = Suite::new(3, "Time");
    let h = &sys.hamiltonian;
    for t in [0.5, 1.0, 10.0] {
        s.check(format!("propagator unitarity t={t}"), tol.unitary, propagator_const_with(h, t, tol).map(|p| p.unitarity_residual()));
    }
    s.check(
        "group law U(s)U(t) = U(s+t)",
        tol.unitary,
        (|| {
            let a = propagator_const_with(h, 0.3, tol)?;
            let b = propagator_const_with(h, 0.9, tol)?;
            let ab = propagator_const_with(h, 1.2, tol)?;
            Ok((&a.u * &b.u).distance(&ab.u))
        })(),
    );
    s.check(
        "evolved state stays a density operator",
        tol.trace.max(tol.psd),
        (|| {
            let p = propagator_const_with(h, 2.0, tol)?;
            Ok(density_residual(evolve(&sys.state, &p)?.op()))
        })(),
    );
    s.check(
        "time-dependent propagator unitarity",
        tol.unitary,
        (|| {
            let sites = sys.lattice.sites();
            let h0 = h.clone();
            let drive = tensor(&Operator::pauli_x(), &Operator::identity(sites));
            let ht = Hamiltonian::time_dependent(move |t| &h0 + &drive.scale_real(t.sin()));
            Ok(propagator_td_with(&ht, 0.0, 1.0, 16, tol)?.unitarity_residual())
        })(),
    );
    s.finish()
}

fn random_region(rng: &mut ChaCha8Rng, sites: usize) -> Vec<usize> {
    (0..sites).filter(|_| rng.random_bool(0.3)).collect()
}

fn space(sys: &SystemDescriptor, cfg: &RunConfig, rng: &mut ChaCha8Rng) -> AxiomReport {
    let mut s = Suite::new(4, "Space");
    let lat: &Lattice = &sys.lattice;
    let shifts: Vec<LatticeVector> = all_shifts(lat);

    s.exact(
        "translations are exact permutations",
        Ok(shifts
            .iter()
            .filter(|a| {
                let u = translation_unitary(lat, a);
                &u.adjoint() * &u != Operator::identity(lat.sites())
            })
            .count()),
    );
    s.exact(
        "position POVM covariance (exact)",
        (|| {
            let mut mismatches = 0;
            for _ in 0..6 {
                let region = random_region(rng, lat.sites());
                for a in &shifts {
                    if !check_covariance(lat, a, &region)? {
                        mismatches += 1;
                    }
                }
            }
            Ok(mismatches)
        })(),
    );
    s.exact(
        "translation group law (exact)",
        Ok((0..8)
            .filter(|_| {
                let a = shifts.choose(rng).unwrap();
                let b = shifts.choose(rng).unwrap();
                &translation_unitary(lat, a) * &translation_unitary(lat, b) != translation_unitary(lat, &a.add(b, lat))
            })
            .count()),
    );
    s.check(
        "su(2) commutation relations",
        1e-12,
        spin_rep(1).map(|r| {
            let c = |a: &Operator, b: &Operator| &(a * b) - &(b * a);
            let i = qm_core::linalg::I;
            c(&r.jx, &r.jy).distance(&r.jz.scale(i))
                .max(c(&r.jy, &r.jz).distance(&r.jx.scale(i)))
                .max(c(&r.jz, &r.jx).distance(&r.jy.scale(i)))
        }),
    );
    s.check(
        "2π rotation of spin ½ is −I",
        1e-12,
        spin_rotation(&sys.spin, [0.0, 0.0, 1.0], 2.0 * PI).map(|u| u.distance(&Operator::identity(2).scale_real(-1.0))),
    );
    let bnorm = cfg.field.iter().map(|x| x * x).sum::<f64>().sqrt();
    let axis = if bnorm > 0.0 { cfg.field.map(|x| x / bnorm) } else { [0.0, 0.0, 1.0] };
    let rotations: Vec<([f64; 3], f64)> = (0..4).map(|_| (axis, rng.random_range(0.0..2.0 * PI))).collect();
    let sampled: Vec<LatticeVector> = (0..4).map(|_| shifts.choose(rng).unwrap().clone()).collect();
    let group = SpaceGroupSample { lattice: lat, translations: &sampled, spin: Some(&sys.spin), rotations: &rotations };
    s.check(
        "Pauli Hamiltonian commutes with translations and rotations about B",
        COMMUTE_TOL,
        space_commutator_residual(&sys.hamiltonian, &sys.layout, &group),
    );
    s.finish()
}

/// Every lattice vector when there are at most 64 sites, otherwise the
/// unit shifts along each axis and their small multiples.
fn all_shifts(lat: &Lattice) -> Vec<LatticeVector> {
    if lat.sites() <= 64 {
        return (0..lat.sites())
            .map(|s| {
                let c: Vec<i64> = lat.coords(s).iter().map(|&x| x as i64).collect();
                lat.vector(&c).unwrap()
            })
            .collect();
    }
    let mut out = Vec::new();
    for axis in 0..lat.d() {
        for k in 0..lat.n() as i64 {
            let mut c = vec![0i64; lat.d()];
            c[axis] = k;
            out.push(lat.vector(&c).unwrap());
        }
    }
    out
}

fn composite(sys: &SystemDescriptor, tol: &Tolerances, rng: &mut ChaCha8Rng) -> AxiomReport {
    let mut s = Suite::new(5, "Composite systems");
    let space = sys.layout.space();
    s.check(
        "reduced spin state is a density operator",
        tol.trace.max(tol.psd),
        partial_trace(&sys.state, space, 0).map(|r| density_residual(r.op())),
    );
    s.check(
        "partial trace inverts the product",
        1e-12,
        (|| {
            let a = sample::random_density(rng, 2);
            let b = sample::random_density(rng, 3);
            let ab = validate_density(tensor(a.op(), b.op()), tol)?;
            let cs = CompositeSpace::new(vec![2, 3])?;
            let ra = partial_trace(&ab, &cs, 0)?;
            let rb = partial_trace(&ab, &cs, 1)?;
            Ok(ra.op().distance(a.op()).max(rb.op().distance(b.op())))
        })(),
    );
    s.check(
        "operators on different factors commute",
        COMMUTE_TOL,
        (|| {
            let a = space.lift(&sample::random_hermitian(rng, 2), 0)?;
            let b = space.lift(&sample::random_hermitian(rng, sys.lattice.sites()), 1)?;
            Ok(a.commutator(&b)?.frobenius_norm())
        })(),
    );
    s.check(
        "trace is multiplicative over tensor products",
        1e-10,
        (|| {
            let a = sample::random_hermitian(rng, 3);
            let b = sample::random_hermitian(rng, 4);
            Ok((tensor(&a, &b).trace() - a.trace() * b.trace()).norm())
        })(),
    );
    s.finish()
}

fn binomial(n: u128, k: u128) -> u128 {
    if k > n {
        return 0;
    }
    (0..k).fold(1u128, |acc, i| acc * (n - i) / (i + 1))
}

/// (N, d) pairs with N ≥ 1, d ≥ 1, d^N ≤ 4096 and N ≤ 12.
pub fn symmetrizer_cases() -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for n in 1..=12u32 {
        let mut d = 1usize;
        while d.checked_pow(n).is_some_and(|p| p <= 4096) {
            out.push((n as usize, d));
            d += 1;
        }
    }
    out
}

fn bose_fermi() -> AxiomReport {
    let mut s = Suite::new(6, "Bose-Fermi alternative");
    let cases = symmetrizer_cases();
    s.exact(
        format!("symmetric ranks C(d+N-1, N) over {} cases with d^N <= 4096", cases.len()),
        Ok(cases
            .iter()
            .filter(|&&(n, d)| projector_trace_by_classes(n, d, false) as u128 != binomial((d + n - 1) as u128, n as u128))
            .count()),
    );
    s.exact(
        format!("antisymmetric ranks C(d, N) over {} cases with d^N <= 4096", cases.len()),
        Ok(cases
            .iter()
            .filter(|&&(n, d)| projector_trace_by_classes(n, d, true) as u128 != binomial(d as u128, n as u128))
            .count()),
    );
    s.check(
        "dense projectors: idempotent, Hermitian, ranks match",
        1e-10,
        (|| {
            let mut worst: f64 = 0.0;
            for &(n, d) in cases.iter().filter(|&&(n, d)| n >= 2 && n <= 4 && d.pow(n as u32) <= 256) {
                for (p, want) in [
                    (symmetrizer(n, d)?, binomial((d + n - 1) as u128, n as u128)),
                    (antisymmetrizer(n, d)?, binomial(d as u128, n as u128)),
                ] {
                    worst = worst.max((&p * &p).distance(&p)).max(p.hermiticity_residual());
                    if projector_rank(&p) as u128 != want {
                        worst = f64::INFINITY;
                    }
                }
            }
            Ok(worst)
        })(),
    );
    s.exact(
        "fermions carry half-integer spin in the example",
        (|| {
            let fermions = ExchangeSymmetry::new(Statistics::Fermion, 2, 2)?;
            let bosons = ExchangeSymmetry::new(Statistics::Boson, 2, 2)?;
            let half = spin_rep(1)?;
            Ok(usize::from(!fermions.consistent_with_spin(&half)) + usize::from(bosons.consistent_with_spin(&half)))
        })(),
    );
    s.finish()
}

fn internal(sys: &SystemDescriptor, tol: &Tolerances, rng: &mut ChaCha8Rng) -> AxiomReport {
    let mut s = Suite::new(7, "Internal symmetries");
    let built = (|| -> qm_core::Result<SystemDescriptor> {
        let q = ChargeOperator::from_charges(&[0, 1])?;
        let rho_int = validate_density(Operator::from_real_diagonal(&[0.25, 0.75]), tol)?;
        sys.with_internal(q, &rho_int, tol)
    })();
    let ext = match built {
        Ok(e) => e,
        Err(e) => {
            s.check("charged extension of the example", 0.0, Err(e));
            return s.finish();
        }
    };
    let q_int = ext.charge.clone().unwrap();
    let dim = ext.dim();
    let q_full = (|| -> qm_core::Result<ChargeOperator> {
        ChargeOperator::new(&ext.layout.lift(&q_int.operator(), FactorRole::Internal)?)
    })();
    let q_full = match q_full {
        Ok(q) => q,
        Err(e) => {
            s.check("lifted charge", 0.0, Err(e));
            return s.finish();
        }
    };
    let dec = sectors(&q_full);

    s.check("Hamiltonian is sector diagonal", 1e-10, off_sector_residual(&ext.hamiltonian, &dec));
    s.check("Hamiltonian commutes with U(τ) on the τ grid", TAU_COMMUTE_TOL, u1_commutator_residual(&ext.hamiltonian, &q_full));

    s.exact(
        "superselection ⟺ U(1) invariance on random observables",
        (|| {
            let mut mismatches = 0;
            for k in 0..6 {
                let a = if k % 2 == 0 {
                    let blocks: Vec<(i64, Operator)> = dec
                        .dims()
                        .into_iter()
                        .map(|(c, d)| (c, sample::random_hermitian(rng, d)))
                        .collect();
                    qm_core::symmetry::assemble_blocks(&q_full, &blocks)?
                } else {
                    sample::random_hermitian(rng, dim)
                };
                let by_blocks = check_superselection(&a, &dec)?;
                let by_tau = u1_commutator_residual(&a, &q_full)? <= TAU_COMMUTE_TOL;
                if by_blocks != by_tau || by_blocks != (k % 2 == 0) {
                    mismatches += 1;
                }
            }
            Ok(mismatches)
        })(),
    );
    s.check(
        "charge-violating observable has zero mean in a sector-diagonal state",
        1e-10,
        (|| {
            let a = ext.layout.lift(&Operator::pauli_x(), FactorRole::Internal)?;
            Ok(expectation_with(&ext.state, &a, tol)?.abs())
        })(),
    );
    s.check(
        "sector projectors invariant under the dynamics",
        1e-10,
        (|| {
            let p = propagator_const_with(&ext.hamiltonian, 1.7, tol)?;
            let mut worst: f64 = 0.0;
            for (_, proj) in &dec.sectors {
                worst = worst.max((&(&p.u * proj) * &p.u.adjoint()).distance(proj));
            }
            Ok(worst)
        })(),
    );
    s.exact(
        "U(1) commutes with translations and rotations for 10 random τ",
        (|| {
            let lat = &ext.lattice;
            let shifts = all_shifts(lat);
            let sampled: Vec<LatticeVector> = (0..3).map(|_| shifts.choose(rng).unwrap().clone()).collect();
            let rotations: Vec<([f64; 3], f64)> = (0..3)
                .map(|_| {
                    let v: [f64; 3] = std::array::from_fn(|_| rng.random_range(-1.0..1.0));
                    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
                    (v.map(|x| x / n), rng.random_range(0.0..2.0 * PI))
                })
                .collect();
            let group = SpaceGroupSample { lattice: lat, translations: &sampled, spin: Some(&ext.spin), rotations: &rotations };
            let mut failures = 0;
            for _ in 0..10 {
                let tau = rng.random_range(0.0..2.0 * PI);
                if !check_commutes_with_space(&u1_unitary(&q_int, tau), &ext.layout, &group)? {
                    failures += 1;
                }
            }
            Ok(failures)
        })(),
    );
    s.exact(
        "mis-lifted operator is caught",
        (|| {
            // σ_x placed on the spin factor must fail to commute with rotations
            let lat = &ext.lattice;
            let group = SpaceGroupSample {
                lattice: lat,
                translations: &[],
                spin: Some(&ext.spin),
                rotations: &[([0.0, 0.0, 1.0], PI / 2.0)],
            };
            let wrong = ext.layout.lift(&Operator::pauli_x(), FactorRole::Spin)?;
            let r = space_commutator_residual(&wrong, &ext.layout, &group)?;
            Ok(usize::from(r <= COMMUTE_TOL))
        })(),
    );
    s.finish()
}
