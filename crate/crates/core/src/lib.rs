//! Executable axioms of non-relativistic quantum mechanics on dense operators.
//!
//! * [`linalg`]: operators, density operators, Born rule, spectral decomposition
//! * [`measurement`]: outcome spaces, POVMs, Lüders instruments
//! * [`dynamics`]: unitary propagators for constant and time-dependent Hamiltonians
//! * [`space`]: periodic lattice translations, position POVMs, SU(2) spin, Pauli Hamiltonian
//! * [`composition`]: tensor products, partial trace, (anti)symmetrizers
//! * [`symmetry`]: U(1) charge, superselection sectors, commutation with space
//! * [`bell`]: localized spin correlations, CHSH scans, local realist field model
//! * [`system`]: the assembled data tuple of a quantum system

pub mod bell;
pub mod composition;
pub mod dynamics;
pub mod error;
pub mod linalg;
pub mod measurement;
pub mod sample;
pub mod space;
pub mod symmetry;
pub mod system;

pub use error::{QmError, Result};
pub use linalg::{DensityOperator, Ket, Operator, Tolerances, C64};
