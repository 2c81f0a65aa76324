//! The data tuple {H, U(g), ρ, (Ω, F, α_g), {E_B, Γ_B}} of one quantum system.

use crate::composition::tensor;
use crate::error::{QmError, Result};
use crate::linalg::{validate_density, DensityOperator, Ket, Operator, Tolerances};
use crate::measurement::{luders_instrument_with, Instrument, OutcomeSpace, Povm};
use crate::space::{gaussian_packet, pauli_hamiltonian, position_projector, spin_rep, Lattice, SpinRep};
use crate::symmetry::{ChargeOperator, CompositeLayout, FactorRole};

/// A named assembly of the pieces every module operates on.
#[derive(Debug, Clone)]
pub struct SystemDescriptor {
    pub layout: CompositeLayout,
    pub lattice: Lattice,
    pub spin: SpinRep,
    pub state: DensityOperator,
    pub hamiltonian: Operator,
    pub povm: Povm,
    pub instrument: Instrument,
    /// Generator of the internal U(1), when the system has one.
    pub charge: Option<ChargeOperator>,
}

/// Parameters of the spin-½ lattice particle.
#[derive(Debug, Clone, PartialEq)]
pub struct ExampleParams {
    pub lattice: Lattice,
    pub center: Vec<f64>,
    pub width: f64,
    pub mass: f64,
    pub field: [f64; 3],
    pub mu: f64,
    /// Bloch vector of the initial spin state.
    pub spin_direction: [f64; 3],
}

/// Spin state pointing along `n`: the +1 eigenvector of σ·n.
pub fn spin_coherent(n: [f64; 3]) -> Result<Ket> {
    let norm = (n[0] * n[0] + n[1] * n[1] + n[2] * n[2]).sqrt();
    if (norm - 1.0).abs() > 1e-9 {
        return Err(QmError::BadAxis { norm });
    }
    let rep = spin_rep(1)?;
    let (vals, vecs) = rep.along(n).scale_real(2.0).eigh();
    debug_assert!((vals[1] - 1.0).abs() < 1e-9);
    Ok(vecs.column(1).into_owned())
}

/// Spin-½ particle on a periodic lattice, H = C² ⊗ ℓ²(lattice), evolving
/// under the Pauli Hamiltonian. The measurement is spin along z jointly
/// with which half of the lattice the particle is found in.
pub fn example_system(p: &ExampleParams, tol: &Tolerances) -> Result<SystemDescriptor> {
    let lat = p.lattice;
    let spin = spin_rep(1)?;
    let layout = CompositeLayout::new(vec![(FactorRole::Spin, 2), (FactorRole::Space, lat.sites())])?;

    let chi = spin_coherent(p.spin_direction)?;
    let packet = gaussian_packet(&lat, &p.center, p.width)?;
    let psi = Ket::from_iterator(
        2 * lat.sites(),
        chi.iter().flat_map(|&s| packet.iter().map(move |&x| s * x)),
    );
    let state = validate_density(Operator::outer(&psi), tol)?;

    let hamiltonian = pauli_hamiltonian(&lat, p.mass, p.field, p.mu)?;

    let left: Vec<usize> = (0..lat.sites()).filter(|&s| lat.coords(s)[0] < lat.n() / 2).collect();
    let right: Vec<usize> = (0..lat.sites()).filter(|&s| lat.coords(s)[0] >= lat.n() / 2).collect();
    let regions = [("L", position_projector(&lat, &left)?), ("R", position_projector(&lat, &right)?)];
    let up = Operator::from_real_diagonal(&[1.0, 0.0]);
    let down = Operator::from_real_diagonal(&[0.0, 1.0]);
    let mut labels = Vec::new();
    let mut effects = Vec::new();
    for (s, proj) in [("up", &up), ("down", &down)] {
        for (r, region) in &regions {
            labels.push(format!("{s}:{r}"));
            effects.push(tensor(proj, region));
        }
    }
    let povm = Povm::new(OutcomeSpace::new(labels)?, effects, tol)?;
    let instrument = luders_instrument_with(&povm, tol)?;

    let sys = SystemDescriptor { layout, lattice: lat, spin, state, hamiltonian, povm, instrument, charge: None };
    sys.check_consistency()?;
    Ok(sys)
}

impl SystemDescriptor {
    pub fn dim(&self) -> usize {
        self.layout.space().dim()
    }

    /// Every component acts on the same Hilbert space and the layout's spin
    /// and space factors match the representations.
    pub fn check_consistency(&self) -> Result<()> {
        let dim = self.dim();
        let dims = [
            ("state", self.state.dim()),
            ("hamiltonian", self.hamiltonian.dim()),
            ("povm", self.povm.dim()),
            ("instrument", self.instrument.dim()),
        ];
        for (what, found) in dims {
            if found != dim {
                return Err(QmError::LayoutMismatch(format!("{what} has dimension {found}, system has {dim}")));
            }
        }
        if self.povm.space() != self.instrument.space() {
            return Err(QmError::LayoutMismatch("povm and instrument outcome spaces differ".into()));
        }
        let factors = self.layout.space().factors();
        let check = |role: FactorRole, want: usize| match self.layout.factor(role) {
            Some(i) if factors[i] == want => Ok(()),
            Some(i) => Err(QmError::LayoutMismatch(format!("{role:?} factor {} vs {want}", factors[i]))),
            None => Err(QmError::LayoutMismatch(format!("no {role:?} factor"))),
        };
        check(FactorRole::Spin, self.spin.dim())?;
        check(FactorRole::Space, self.lattice.sites())?;
        if let Some(q) = &self.charge {
            check(FactorRole::Internal, q.dim())?;
        }
        Ok(())
    }

    /// Same system with an extra internal factor carrying charge `q`,
    /// placed first in the layout. The state becomes ρ_int ⊗ ρ, H and the
    /// effects are extended by the identity on the internal factor.
    pub fn with_internal(&self, q: ChargeOperator, internal_state: &DensityOperator, tol: &Tolerances) -> Result<Self> {
        if internal_state.dim() != q.dim() {
            return Err(QmError::DimensionMismatch { expected: q.dim(), found: internal_state.dim() });
        }
        let mut factors = vec![(FactorRole::Internal, q.dim())];
        factors.push((FactorRole::Spin, self.spin.dim()));
        factors.push((FactorRole::Space, self.lattice.sites()));
        if self.layout.factor(FactorRole::Internal).is_some() {
            return Err(QmError::LayoutMismatch("system already has an internal factor".into()));
        }
        let layout = CompositeLayout::new(factors)?;
        let id = Operator::identity(q.dim());
        let state = validate_density(tensor(internal_state.op(), self.state.op()), tol)?;
        let hamiltonian = tensor(&id, &self.hamiltonian);
        let effects = self.povm.effects().iter().map(|e| tensor(&id, e)).collect();
        let povm = Povm::new(self.povm.space().clone(), effects, tol)?;
        let instrument = luders_instrument_with(&povm, tol)?;
        let sys = SystemDescriptor {
            layout,
            lattice: self.lattice,
            spin: self.spin.clone(),
            state,
            hamiltonian,
            povm,
            instrument,
            charge: Some(q),
        };
        sys.check_consistency()?;
        Ok(sys)
    }
}
