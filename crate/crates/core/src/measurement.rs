//! Outcome spaces, POVMs and instruments (state transformers).
//!
//! An [`Instrument`] stores one Kraus list per outcome label; the outcome
//! σ-algebra is the power set of the labels, so an event is any subset.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{QmError, Result};
use crate::linalg::{self, DensityOperator, Operator, Tolerances};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<String>", into = "Vec<String>")]
pub struct OutcomeSpace {
    labels: Vec<String>,
}

impl TryFrom<Vec<String>> for OutcomeSpace {
    type Error = QmError;

    fn try_from(labels: Vec<String>) -> Result<Self> {
        OutcomeSpace::new(labels)
    }
}

impl From<OutcomeSpace> for Vec<String> {
    fn from(s: OutcomeSpace) -> Self {
        s.labels
    }
}

impl OutcomeSpace {
    pub fn new(labels: Vec<String>) -> Result<Self> {
        if labels.is_empty() {
            return Err(QmError::InvalidOutcomeSpace("no labels".into()));
        }
        let distinct: BTreeSet<&String> = labels.iter().collect();
        if distinct.len() != labels.len() {
            return Err(QmError::InvalidOutcomeSpace("duplicate labels".into()));
        }
        Ok(OutcomeSpace { labels })
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn index_of(&self, label: &str) -> Result<usize> {
        self.labels
            .iter()
            .position(|l| l == label)
            .ok_or_else(|| QmError::UnknownOutcome(label.to_string()))
    }

    /// Resolves an event (any subset of labels) to sorted distinct indices.
    pub fn event_indices<S: AsRef<str>>(&self, event: &[S]) -> Result<Vec<usize>> {
        let set: BTreeSet<usize> =
            event.iter().map(|l| self.index_of(l.as_ref())).collect::<Result<_>>()?;
        Ok(set.into_iter().collect())
    }
}

/// Formats an eigenvalue as an outcome label, rounded to 1e-9.
pub fn format_outcome(value: f64) -> String {
    let r = (value * 1e9).round() / 1e9;
    let r = if r == 0.0 { 0.0 } else { r };
    format!("{r}")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PovmJson", into = "PovmJson")]
pub struct Povm {
    space: OutcomeSpace,
    effects: Vec<Operator>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PovmJson {
    pub labels: Vec<String>,
    pub effects: Vec<Operator>,
}

impl TryFrom<PovmJson> for Povm {
    type Error = QmError;

    fn try_from(j: PovmJson) -> Result<Self> {
        Povm::new(OutcomeSpace::new(j.labels)?, j.effects, &Tolerances::default())
    }
}

impl From<Povm> for PovmJson {
    fn from(p: Povm) -> Self {
        PovmJson { labels: p.space.labels, effects: p.effects }
    }
}

impl Povm {
    pub fn new(space: OutcomeSpace, effects: Vec<Operator>, tol: &Tolerances) -> Result<Self> {
        if effects.len() != space.len() {
            return Err(QmError::InvalidPovm(format!(
                "{} labels but {} effects",
                space.len(),
                effects.len()
            )));
        }
        let dim = effects[0].dim();
        let mut total = Operator::zeros(dim);
        for (label, e) in space.labels().iter().zip(&effects) {
            if e.dim() != dim {
                return Err(QmError::DimensionMismatch { expected: dim, found: e.dim() });
            }
            e.ensure_hermitian(tol.herm)?;
            let (values, _) = e.eigh();
            let (lo, hi) = (values[0], values[values.len() - 1]);
            if lo < -tol.psd || hi > 1.0 + tol.psd {
                return Err(QmError::InvalidPovm(format!(
                    "effect {label:?} has spectrum outside [0, 1]: [{lo}, {hi}]"
                )));
            }
            total = &total + e;
        }
        let residual = total.distance(&Operator::identity(dim));
        if residual > tol.herm {
            return Err(QmError::InvalidPovm(format!("effects sum to I only within {residual:e}")));
        }
        Ok(Povm { space, effects })
    }

    pub fn space(&self) -> &OutcomeSpace {
        &self.space
    }

    pub fn effects(&self) -> &[Operator] {
        &self.effects
    }

    pub fn dim(&self) -> usize {
        self.effects[0].dim()
    }

    pub fn effect(&self, label: &str) -> Result<&Operator> {
        Ok(&self.effects[self.space.index_of(label)?])
    }

    /// E_B = Σ_{i∈B} E_i.
    pub fn event_effect<S: AsRef<str>>(&self, event: &[S]) -> Result<Operator> {
        let mut acc = Operator::zeros(self.dim());
        for i in self.space.event_indices(event)? {
            acc = &acc + &self.effects[i];
        }
        Ok(acc)
    }

    pub fn probability(&self, label: &str, rho: &DensityOperator) -> Result<f64> {
        linalg::expectation(rho, self.effect(label)?)
    }
}

/// Projection-valued measure of a Hermitian observable: one label per
/// distinct eigenvalue, effects are the spectral projectors.
pub fn pvm_from_observable(a: &Operator) -> Result<Povm> {
    pvm_from_observable_with(a, &Tolerances::default())
}

pub fn pvm_from_observable_with(a: &Operator, tol: &Tolerances) -> Result<Povm> {
    let dec = linalg::spectral_with(a, tol)?;
    let labels = dec.eigenvalues.iter().map(|&v| format_outcome(v)).collect();
    Povm::new(OutcomeSpace::new(labels)?, dec.projectors, tol)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "InstrumentJson", into = "InstrumentJson")]
pub struct Instrument {
    space: OutcomeSpace,
    kraus: Vec<Vec<Operator>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstrumentJson {
    pub labels: Vec<String>,
    pub kraus: Vec<Vec<Operator>>,
}

impl TryFrom<InstrumentJson> for Instrument {
    type Error = QmError;

    fn try_from(j: InstrumentJson) -> Result<Self> {
        Instrument::new(OutcomeSpace::new(j.labels)?, j.kraus, &Tolerances::default())
    }
}

impl From<Instrument> for InstrumentJson {
    fn from(i: Instrument) -> Self {
        InstrumentJson { labels: i.space.labels, kraus: i.kraus }
    }
}

/// Outcome probability and conditional state.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub probability: f64,
    /// `None` when the probability is below `tol.prob`.
    pub post_state: Option<DensityOperator>,
}

impl Instrument {
    pub fn new(space: OutcomeSpace, kraus: Vec<Vec<Operator>>, tol: &Tolerances) -> Result<Self> {
        if kraus.len() != space.len() {
            return Err(QmError::InvalidInstrument(format!(
                "{} labels but {} Kraus lists",
                space.len(),
                kraus.len()
            )));
        }
        let dim = kraus
            .iter()
            .flatten()
            .next()
            .map(Operator::dim)
            .ok_or_else(|| QmError::InvalidInstrument("no Kraus operators".into()))?;
        let mut total = Operator::zeros(dim);
        for (label, ks) in space.labels().iter().zip(&kraus) {
            let mut effect = Operator::zeros(dim);
            for k in ks {
                if k.dim() != dim {
                    return Err(QmError::DimensionMismatch { expected: dim, found: k.dim() });
                }
                effect = &effect + &(&k.adjoint() * k);
            }
            if !ks.is_empty() {
                let (values, _) = effect.eigh();
                let hi = values[values.len() - 1];
                if hi > 1.0 + tol.psd {
                    return Err(QmError::InvalidInstrument(format!(
                        "map {label:?} increases trace (largest eigenvalue {hi})"
                    )));
                }
            }
            total = &total + &effect;
        }
        let residual = total.distance(&Operator::identity(dim));
        if residual > tol.herm {
            return Err(QmError::InvalidInstrument(format!(
                "total map is not trace preserving (residual {residual:e})"
            )));
        }
        Ok(Instrument { space, kraus })
    }

    pub fn space(&self) -> &OutcomeSpace {
        &self.space
    }

    pub fn kraus(&self, label: &str) -> Result<&[Operator]> {
        Ok(&self.kraus[self.space.index_of(label)?])
    }

    pub fn dim(&self) -> usize {
        self.kraus.iter().flatten().next().map(Operator::dim).unwrap()
    }

    fn check_dim(&self, op: &Operator) -> Result<()> {
        if op.dim() != self.dim() {
            return Err(QmError::DimensionMismatch { expected: self.dim(), found: op.dim() });
        }
        Ok(())
    }

    fn map_index(&self, index: usize, op: &Operator) -> Operator {
        let mut acc = Operator::zeros(op.dim());
        for k in &self.kraus[index] {
            acc = &acc + &(&(k * op) * &k.adjoint());
        }
        acc
    }

    /// Γ_i applied to an arbitrary operator (the map is linear).
    pub fn map(&self, label: &str, op: &Operator) -> Result<Operator> {
        self.check_dim(op)?;
        Ok(self.map_index(self.space.index_of(label)?, op))
    }

    /// Γ_B = Σ_{i∈B} Γ_i applied to an arbitrary operator.
    pub fn map_event<S: AsRef<str>>(&self, event: &[S], op: &Operator) -> Result<Operator> {
        self.check_dim(op)?;
        let mut acc = Operator::zeros(op.dim());
        for i in self.space.event_indices(event)? {
            acc = &acc + &self.map_index(i, op);
        }
        Ok(acc)
    }

    /// Induced POVM E_i = Σ_k K_k†K_k.
    pub fn povm(&self) -> Result<Povm> {
        let effects = self
            .kraus
            .iter()
            .map(|ks| {
                ks.iter().fold(Operator::zeros(self.dim()), |acc, k| &acc + &(&k.adjoint() * k))
            })
            .collect();
        Povm::new(self.space.clone(), effects, &Tolerances::default())
    }

    pub fn apply(&self, label: &str, rho: &DensityOperator) -> Result<Outcome> {
        self.apply_with(label, rho, &Tolerances::default())
    }

    pub fn apply_with(&self, label: &str, rho: &DensityOperator, tol: &Tolerances) -> Result<Outcome> {
        let out = self.map(label, rho.op())?;
        Ok(condition(out, tol))
    }

    pub fn apply_event<S: AsRef<str>>(&self, event: &[S], rho: &DensityOperator) -> Result<Outcome> {
        self.apply_event_with(event, rho, &Tolerances::default())
    }

    pub fn apply_event_with<S: AsRef<str>>(
        &self,
        event: &[S],
        rho: &DensityOperator,
        tol: &Tolerances,
    ) -> Result<Outcome> {
        let out = self.map_event(event, rho.op())?;
        Ok(condition(out, tol))
    }
}

fn condition(out: Operator, tol: &Tolerances) -> Outcome {
    let probability = out.trace().re;
    let post_state = if probability > tol.prob {
        Some(DensityOperator::from_cp_output(out.hermitian_part().scale_real(1.0 / probability)))
    } else {
        None
    };
    Outcome { probability: probability.clamp(0.0, 1.0), post_state }
}

/// Dirac-von Neumann / Lüders instrument: Kraus operator E_i for projector
/// effects, √E_i otherwise.
pub fn luders_instrument(p: &Povm) -> Result<Instrument> {
    luders_instrument_with(p, &Tolerances::default())
}

pub fn luders_instrument_with(p: &Povm, tol: &Tolerances) -> Result<Instrument> {
    let kraus = p
        .effects
        .iter()
        .map(|e| {
            let idempotence = (e * e).distance(e);
            let k = if idempotence <= tol.herm { e.clone() } else { linalg::hermitian_sqrt_with(e, tol)? };
            Ok(vec![k])
        })
        .collect::<Result<Vec<_>>>()?;
    Instrument::new(p.space.clone(), kraus, tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{Ket, C64, ONE, ZERO};
    use crate::sample;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn labels(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    fn plus_state() -> DensityOperator {
        let s = C64::from(std::f64::consts::FRAC_1_SQRT_2);
        DensityOperator::pure(&Ket::from_row_slice(&[s, s])).unwrap()
    }

    #[test]
    fn outcome_space_rejects_empty_and_duplicates() {
        assert!(OutcomeSpace::new(vec![]).is_err());
        assert!(OutcomeSpace::new(labels(&["a", "a"])).is_err());
    }

    #[test]
    fn pvm_of_sigma_z() {
        let p = pvm_from_observable(&Operator::pauli_z()).unwrap();
        assert_eq!(p.space().labels(), &labels(&["-1", "1"])[..]);
        assert!(p.effect("1").unwrap().distance(&Operator::from_real_diagonal(&[1.0, 0.0])) < 1e-12);
    }

    #[test]
    fn pvm_of_identity_is_single_outcome() {
        let p = pvm_from_observable(&Operator::identity(3)).unwrap();
        assert_eq!(p.space().labels(), &labels(&["1"])[..]);
        assert!(p.effects()[0].distance(&Operator::identity(3)) < 1e-12);
    }

    #[test]
    fn pvm_effects_are_orthogonal() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let a = sample::random_hermitian(&mut rng, 5);
        let p = pvm_from_observable(&a).unwrap();
        for (i, ei) in p.effects().iter().enumerate() {
            for (j, ej) in p.effects().iter().enumerate() {
                let prod = ei * ej;
                let expected = if i == j { ei.clone() } else { Operator::zeros(5) };
                assert!(prod.distance(&expected) < 1e-10);
            }
        }
    }

    #[test]
    fn luders_pvm_uses_projectors() {
        let p = pvm_from_observable(&Operator::pauli_z()).unwrap();
        let ins = luders_instrument(&p).unwrap();
        for (label, e) in p.space().labels().iter().zip(p.effects()) {
            let ks = ins.kraus(label).unwrap();
            assert_eq!(ks.len(), 1);
            assert_eq!(&ks[0], e);
        }
    }

    #[test]
    fn luders_povm_uses_square_roots() {
        let e0 = Operator::from_real_diagonal(&[0.8, 0.2]);
        let e1 = Operator::from_real_diagonal(&[0.2, 0.8]);
        let p = Povm::new(OutcomeSpace::new(labels(&["a", "b"])).unwrap(), vec![e0, e1], &Tolerances::default())
            .unwrap();
        let ins = luders_instrument(&p).unwrap();
        let expect_a = Operator::from_real_diagonal(&[0.8f64.sqrt(), 0.2f64.sqrt()]);
        let expect_b = Operator::from_real_diagonal(&[0.2f64.sqrt(), 0.8f64.sqrt()]);
        assert!(ins.kraus("a").unwrap()[0].distance(&expect_a) < 1e-12);
        assert!(ins.kraus("b").unwrap()[0].distance(&expect_b) < 1e-12);
    }

    #[test]
    fn trivial_povm_is_identity_channel() {
        let p = Povm::new(OutcomeSpace::new(labels(&["all"])).unwrap(), vec![Operator::identity(2)], &Tolerances::default())
            .unwrap();
        let ins = luders_instrument(&p).unwrap();
        let rho = plus_state();
        let out = ins.apply("all", &rho).unwrap();
        assert!((out.probability - 1.0).abs() < 1e-14);
        assert!(out.post_state.unwrap().op().distance(rho.op()) < 1e-14);
    }

    #[test]
    fn apply_projective_examples() {
        let ins = luders_instrument(&pvm_from_observable(&Operator::pauli_z()).unwrap()).unwrap();
        let up = Operator::from_real_diagonal(&[1.0, 0.0]);

        let out = ins.apply("1", &plus_state()).unwrap();
        assert!((out.probability - 0.5).abs() < 1e-12);
        assert!(out.post_state.unwrap().op().distance(&up) < 1e-12);

        let rho0 = DensityOperator::pure(&Ket::from_row_slice(&[ONE, ZERO])).unwrap();
        let out = ins.apply("1", &rho0).unwrap();
        assert!((out.probability - 1.0).abs() < 1e-12);
        assert!(out.post_state.unwrap().op().distance(&up) < 1e-12);

        let out = ins.apply("-1", &rho0).unwrap();
        assert!(out.probability.abs() < 1e-14);
        assert!(out.post_state.is_none());
    }

    #[test]
    fn apply_errors() {
        let ins = luders_instrument(&pvm_from_observable(&Operator::pauli_z()).unwrap()).unwrap();
        assert!(matches!(ins.apply("0", &plus_state()), Err(QmError::UnknownOutcome(_))));
        let rho3 = DensityOperator::maximally_mixed(3);
        assert!(matches!(ins.apply("1", &rho3), Err(QmError::DimensionMismatch { .. })));
        assert!(matches!(ins.apply_event(&["1", "7"], &plus_state()), Err(QmError::UnknownOutcome(_))));
    }

    #[test]
    fn events() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let obs = Operator::from_real_diagonal(&[-1.0, 0.0, 1.0]);
        let ins = luders_instrument(&pvm_from_observable(&obs).unwrap()).unwrap();
        let rho = sample::random_density(&mut rng, 3);

        let all = ins.apply_event(&["-1", "0", "1"], &rho).unwrap();
        assert!((all.probability - 1.0).abs() < 1e-12);

        let none = ins.apply_event::<&str>(&[], &rho).unwrap();
        assert_eq!(none.probability, 0.0);
        assert!(none.post_state.is_none());

        let pm = ins.apply_event(&["-1", "1"], &rho).unwrap().probability;
        let sum = ins.apply("-1", &rho).unwrap().probability + ins.apply("1", &rho).unwrap().probability;
        assert!((pm - sum).abs() < 1e-12);
    }

    #[test]
    fn invalid_povm_and_instrument() {
        let tol = Tolerances::default();
        let space = OutcomeSpace::new(labels(&["a", "b"])).unwrap();
        let half = Operator::identity(2).scale_real(0.5);
        assert!(Povm::new(space.clone(), vec![half.clone(), half.scale_real(0.5)], &tol).is_err());
        let big = Operator::from_real_diagonal(&[1.5, 0.0]);
        let rest = Operator::from_real_diagonal(&[-0.5, 1.0]);
        assert!(Povm::new(space.clone(), vec![big, rest], &tol).is_err());
        assert!(Instrument::new(space, vec![vec![Operator::identity(2)], vec![Operator::identity(2)]], &tol).is_err());
    }

    #[test]
    fn json_schemas() {
        let p = pvm_from_observable(&Operator::pauli_z()).unwrap();
        let v = serde_json::to_value(&p).unwrap();
        assert_eq!(v["labels"], serde_json::json!(["-1", "1"]));
        assert_eq!(v["effects"][1]["dim"], 2);
        let back: Povm = serde_json::from_value(v).unwrap();
        assert_eq!(back, p);

        let ins = luders_instrument(&p).unwrap();
        let v = serde_json::to_value(&ins).unwrap();
        assert!(v["kraus"][0].is_array());
        let back: Instrument = serde_json::from_value(v).unwrap();
        assert_eq!(back, ins);

        let not_complete = r#"{"labels":["a"],"effects":[{"dim":1,"entries":[[0.5,0.0]]}]}"#;
        assert!(serde_json::from_str::<Povm>(not_complete).is_err());
    }
}
