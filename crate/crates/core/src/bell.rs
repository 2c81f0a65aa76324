//! Spin correlations measured by spatially localized detectors.
//!
//! Each particle lives in C² ⊗ L²(lattice). A detector measures σ·m with
//! m = (cos φ, sin φ, 0) but only fires inside its window X, so its
//! observable is A_m(X) = (σ·m) ⊗ P_X with eigenvalues {−1, 0, +1}. For
//! product spatial packets the two-particle correlation factorizes into the
//! spin correlation times the capture probabilities g₁ = ‖P_X ψ₁‖² and
//! g₂ = ‖P_Y ψ₂‖². Their product g is the localization factor.
//!
//! CHSH sign convention: S = E(a,b) − E(a,b') + E(a',b) + E(a',b').

use std::f64::consts::{FRAC_1_SQRT_2, PI, SQRT_2};

use rayon::prelude::*;
use serde::Serialize;

use crate::composition::tensor;
use crate::error::{QmError, Result};
use crate::linalg::{self, DensityOperator, Ket, Operator, C64, ZERO};
use crate::space::{gaussian_packet, position_projector, spin_rep, Lattice, SpinRep};

/// Tsirelson bound 2√2.
pub const TSIRELSON: f64 = 2.0 * SQRT_2;
/// Largest g for which localized singlet correlations obey |S| ≤ 2.
pub const BELL_THRESHOLD: f64 = FRAC_1_SQRT_2;
/// Quadrature points over the hidden variable λ.
pub const QUADRATURE_POINTS: usize = 1 << 10;
/// Angle grid per detector used by [`realist_match`].
pub const MATCH_GRID: usize = 64;
/// Largest two-particle dimension for the dense cross-check path.
pub const MAX_DENSE_DIM: usize = 1024;

/// Single particle: spin one half on a lattice, C² ⊗ C^{n^d}.
#[derive(Debug, Clone, PartialEq)]
pub struct ParticleSpace {
    pub spin: SpinRep,
    pub lattice: Lattice,
}

impl ParticleSpace {
    pub fn new(lattice: Lattice) -> Self {
        ParticleSpace { spin: spin_rep(1).unwrap(), lattice }
    }

    pub fn dim(&self) -> usize {
        2 * self.lattice.sites()
    }
}

/// Analyzer angle in the x-y plane plus the set of sites where it detects.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DetectorConfig {
    pub phi: f64,
    window: Vec<usize>,
}

impl DetectorConfig {
    pub fn new(lattice: &Lattice, phi: f64, window: &[usize]) -> Result<Self> {
        let mut window = window.to_vec();
        window.sort_unstable();
        window.dedup();
        if let Some(&site) = window.iter().find(|&&s| s >= lattice.sites()) {
            return Err(QmError::SiteOutOfRange { site, sites: lattice.sites() });
        }
        Ok(DetectorConfig { phi, window })
    }

    pub fn full(lattice: &Lattice, phi: f64) -> Self {
        DetectorConfig { phi, window: (0..lattice.sites()).collect() }
    }

    pub fn window(&self) -> &[usize] {
        &self.window
    }

    pub fn with_phi(&self, phi: f64) -> Self {
        DetectorConfig { phi, window: self.window.clone() }
    }
}

/// σ·m for m = (cos φ, sin φ, 0).
pub fn spin_observable(phi: f64) -> Operator {
    &Operator::pauli_x().scale_real(phi.cos()) + &Operator::pauli_y().scale_real(phi.sin())
}

/// (|01⟩ − |10⟩)/√2.
pub fn singlet() -> DensityOperator {
    let s = C64::from(FRAC_1_SQRT_2);
    let psi = Ket::from_row_slice(&[ZERO, s, -s, ZERO]);
    DensityOperator::pure(&psi).unwrap()
}

/// Spin state on C² ⊗ C² times a product of two spatial packets.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoParticleState {
    pub particle: ParticleSpace,
    spin_state: DensityOperator,
    packet1: Ket,
    packet2: Ket,
}

impl TwoParticleState {
    pub fn new(lattice: Lattice, spin_state: DensityOperator, packet1: Ket, packet2: Ket) -> Result<Self> {
        if spin_state.dim() != 4 {
            return Err(QmError::DimensionMismatch { expected: 4, found: spin_state.dim() });
        }
        for p in [&packet1, &packet2] {
            if p.len() != lattice.sites() {
                return Err(QmError::DimensionMismatch { expected: lattice.sites(), found: p.len() });
            }
            let norm = p.norm();
            if (norm - 1.0).abs() > 1e-10 {
                return Err(QmError::NotNormalized { norm });
            }
        }
        Ok(TwoParticleState { particle: ParticleSpace::new(lattice), spin_state, packet1, packet2 })
    }

    /// Singlet spin state with Gaussian packets of width `width` at `c1`, `c2`.
    pub fn singlet_gaussian(lattice: Lattice, c1: &[f64], c2: &[f64], width: f64) -> Result<Self> {
        let p1 = gaussian_packet(&lattice, c1, width)?;
        let p2 = gaussian_packet(&lattice, c2, width)?;
        Self::new(lattice, singlet(), p1, p2)
    }

    pub fn lattice(&self) -> &Lattice {
        &self.particle.lattice
    }

    pub fn spin_state(&self) -> &DensityOperator {
        &self.spin_state
    }

    pub fn packets(&self) -> (&Ket, &Ket) {
        (&self.packet1, &self.packet2)
    }

    /// The full two-particle density operator on (C² ⊗ L) ⊗ (C² ⊗ L).
    pub fn dense_state(&self) -> Result<Operator> {
        let sites = self.lattice().sites();
        let dim = 4 * sites * sites;
        if dim > MAX_DENSE_DIM {
            return Err(QmError::SizeGuard { what: "dense two-particle dimension", size: dim, limit: MAX_DENSE_DIM });
        }
        let one = 2 * sites;
        let sigma = self.spin_state.op();
        let (p1, p2) = (&self.packet1, &self.packet2);
        // index of particle k is s_k * sites + x_k; pair index is i1 * one + i2
        Ok(Operator::from_fn(dim, |r, c| {
            let (r1, r2) = (r / one, r % one);
            let (c1, c2) = (c / one, c % one);
            let (s1, x1, s2, x2) = (r1 / sites, r1 % sites, r2 / sites, r2 % sites);
            let (t1, y1, t2, y2) = (c1 / sites, c1 % sites, c2 / sites, c2 % sites);
            sigma.get(2 * s1 + s2, 2 * t1 + t2)
                * p1[x1]
                * p1[y1].conj()
                * p2[x2]
                * p2[y2].conj()
        }))
    }
}

/// A_m(X) = (σ·m) ⊗ P_X on one particle.
pub fn localized_observable(p: &ParticleSpace, det: &DetectorConfig) -> Result<Operator> {
    let proj = position_projector(&p.lattice, &det.window)?;
    Ok(tensor(&spin_observable(det.phi), &proj))
}

/// ⟨σ·m ⊗ σ·n⟩ in a two-spin state.
pub fn spin_correlation(spin_state: &DensityOperator, phi_a: f64, phi_b: f64) -> Result<f64> {
    linalg::expectation(spin_state, &tensor(&spin_observable(phi_a), &spin_observable(phi_b)))
}

/// ‖P_X ψ‖².
pub fn capture(packet: &Ket, window: &[usize]) -> f64 {
    window.iter().map(|&s| packet[s].norm_sqr()).sum()
}

/// (g₁, g₂) for a detector pair.
pub fn capture_factors(state: &TwoParticleState, det_a: &DetectorConfig, det_b: &DetectorConfig) -> (f64, f64) {
    (capture(&state.packet1, &det_a.window), capture(&state.packet2, &det_b.window))
}

/// g = g₁·g₂.
pub fn localization_factor(state: &TwoParticleState, det_a: &DetectorConfig, det_b: &DetectorConfig) -> f64 {
    let (g1, g2) = capture_factors(state, det_a, det_b);
    g1 * g2
}

/// Tr(ρ A_m(X) ⊗ B_n(Y)) through the product-packet factorization.
pub fn correlation(state: &TwoParticleState, det_a: &DetectorConfig, det_b: &DetectorConfig) -> Result<f64> {
    let sites = state.lattice().sites();
    for det in [det_a, det_b] {
        if let Some(&site) = det.window.iter().find(|&&s| s >= sites) {
            return Err(QmError::SiteOutOfRange { site, sites });
        }
    }
    Ok(spin_correlation(&state.spin_state, det_a.phi, det_b.phi)? * localization_factor(state, det_a, det_b))
}

/// Tr(ρ A ⊗ B) by contracting the full two-particle density operator.
pub fn correlation_dense(state: &TwoParticleState, det_a: &DetectorConfig, det_b: &DetectorConfig) -> Result<f64> {
    let rho = state.dense_state()?;
    let a = localized_observable(&state.particle, det_a)?;
    let b = localized_observable(&state.particle, det_b)?;
    let ab = tensor(&a, &b);
    Ok(linalg::trace_of_product(rho.matrix(), ab.matrix()).re)
}

/// CHSH value for detectors (a, a') on particle 1 and (b, b') on particle 2.
pub fn chsh(
    state: &TwoParticleState,
    a: &DetectorConfig,
    a_prime: &DetectorConfig,
    b: &DetectorConfig,
    b_prime: &DetectorConfig,
) -> Result<f64> {
    Ok(correlation(state, a, b)? - correlation(state, a, b_prime)?
        + correlation(state, a_prime, b)?
        + correlation(state, a_prime, b_prime)?)
}

/// Analyzer angles (a, a', b, b') maximizing |S| for the singlet; S = −2√2.
pub const OPTIMAL_ANGLES: [f64; 4] = [0.0, PI / 2.0, PI / 4.0, 3.0 * PI / 4.0];
/// Same with b, b' turned by π, which flips the sign: S = +2√2.
pub const OPTIMAL_ANGLES_POSITIVE: [f64; 4] = [0.0, PI / 2.0, 5.0 * PI / 4.0, 7.0 * PI / 4.0];

/// One member of a nested window family.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowPair {
    pub param: f64,
    pub window_a: Vec<usize>,
    pub window_b: Vec<usize>,
}

/// Windows of radius r around each packet center, one row per radius.
pub fn centered_window_family(lattice: &Lattice, c1: &[f64], c2: &[f64], radii: &[f64]) -> Vec<WindowPair> {
    radii
        .iter()
        .map(|&r| WindowPair { param: r, window_a: lattice.ball(c1, r), window_b: lattice.ball(c2, r) })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScanRow {
    pub window_param: f64,
    pub g: f64,
    #[serde(rename = "S")]
    pub s: f64,
    pub bell_satisfied: bool,
}

fn is_subset(small: &[usize], large: &[usize]) -> bool {
    let set: std::collections::BTreeSet<&usize> = large.iter().collect();
    small.iter().all(|s| set.contains(s))
}

/// CHSH value per member of a nested window family, widest window first.
/// Every row satisfies |S| ≤ 2√2·g + 1e-9; rows with g ≤ 1/√2 are flagged
/// as Bell-satisfying.
pub fn scan_localization(state: &TwoParticleState, angles: [f64; 4], family: &[WindowPair]) -> Result<Vec<ScanRow>> {
    let mut ordered: Vec<&WindowPair> = family.iter().collect();
    ordered.sort_by(|x, y| x.param.total_cmp(&y.param));
    for (k, pair) in ordered.windows(2).enumerate() {
        if !is_subset(&pair[0].window_a, &pair[1].window_a) || !is_subset(&pair[0].window_b, &pair[1].window_b) {
            return Err(QmError::NonNestedFamily { row: k + 1 });
        }
    }
    let lat = state.lattice();
    let mut rows = ordered
        .par_iter()
        .map(|pair| {
            let a = DetectorConfig::new(lat, angles[0], &pair.window_a)?;
            let a2 = a.with_phi(angles[1]);
            let b = DetectorConfig::new(lat, angles[2], &pair.window_b)?;
            let b2 = b.with_phi(angles[3]);
            let g = localization_factor(state, &a, &b);
            // adding 0.0 turns −0 into 0
            let s = chsh(state, &a, &a2, &b, &b2)? + 0.0;
            if s.abs() > TSIRELSON * g + 1e-9 {
                return Err(QmError::Numerical(format!("|S| = {s} exceeds 2*sqrt(2)*g = {}", TSIRELSON * g)));
            }
            Ok(ScanRow { window_param: pair.param, g, s, bell_satisfied: g <= BELL_THRESHOLD + 1e-12 })
        })
        .collect::<Result<Vec<_>>>()?;
    rows.reverse();
    Ok(rows)
}

/// Row whose g is closest to 1/√2.
pub fn threshold_row(rows: &[ScanRow]) -> Option<&ScanRow> {
    rows.iter().min_by(|x, y| (x.g - BELL_THRESHOLD).abs().total_cmp(&(y.g - BELL_THRESHOLD).abs()))
}

/// CSV with header `window_param,g,S,bell_satisfied`, LF line endings.
pub fn scan_csv(rows: &[ScanRow]) -> String {
    let mut out = String::from("window_param,g,S,bell_satisfied\n");
    for r in rows {
        out.push_str(&format!("{},{},{},{}\n", r.window_param, r.g, r.s, r.bell_satisfied));
    }
    out
}

/// Periodic runs of consecutive site indices (every start, every length);
/// in one dimension these are the contiguous windows.
fn arc_windows(sites: usize) -> Vec<(usize, usize)> {
    let mut out = vec![(0, 0)];
    for len in 1..sites {
        for start in 0..sites {
            out.push((start, len));
        }
    }
    out.push((0, sites));
    out
}

fn arc(start: usize, len: usize, sites: usize) -> Vec<usize> {
    (0..len).map(|k| (start + k) % sites).collect()
}

/// Searches window pairs (runs of consecutive sites) for the localization
/// factor closest to `target`. Returns (window_a, window_b, g).
pub fn tune_windows(state: &TwoParticleState, target: f64) -> (Vec<usize>, Vec<usize>, f64) {
    let sites = state.lattice().sites();
    let arcs = arc_windows(sites);
    let g_of = |packet: &Ket, (start, len): (usize, usize)| {
        (0..len).map(|k| packet[(start + k) % sites].norm_sqr()).sum::<f64>()
    };
    let mut second: Vec<(f64, (usize, usize))> = arcs.iter().map(|&w| (g_of(&state.packet2, w), w)).collect();
    second.sort_by(|x, y| x.0.total_cmp(&y.0));

    let mut best = (f64::INFINITY, (0, 0), (0, 0), 0.0);
    for &w1 in &arcs {
        let g1 = g_of(&state.packet1, w1);
        if g1 <= 0.0 {
            continue;
        }
        let want = target / g1;
        let k = second.partition_point(|(g, _)| *g < want);
        for idx in [k.saturating_sub(1), k.min(second.len() - 1)] {
            let (g2, w2) = second[idx];
            let err = (g1 * g2 - target).abs();
            if err < best.0 {
                best = (err, w1, w2, g1 * g2);
            }
        }
    }
    let (_, (s1, l1), (s2, l2), g) = best;
    (arc(s1, l1, sites), arc(s2, l2, sites), g)
}

/// ξ(λ) = √2·u·cos(φ_a − λ), η(λ) = −√2·v·cos(φ_b − λ), λ uniform on [0, 2π).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RealistFieldModel {
    pub u: f64,
    pub v: f64,
}

impl RealistFieldModel {
    /// Requires √2·u ≤ 1 and √2·v ≤ 1 so that |ξ|, |η| ≤ 1.
    pub fn new(u: f64, v: f64) -> Result<Self> {
        let (a, b) = (SQRT_2 * u, SQRT_2 * v);
        if !(0.0..=1.0 + 1e-12).contains(&a) || !(0.0..=1.0 + 1e-12).contains(&b) {
            return Err(QmError::Unbounded { a, b });
        }
        Ok(RealistFieldModel { u, v })
    }

    pub fn xi(&self, phi_a: f64, lambda: f64) -> f64 {
        SQRT_2 * self.u * (phi_a - lambda).cos()
    }

    pub fn eta(&self, phi_b: f64, lambda: f64) -> f64 {
        -SQRT_2 * self.v * (phi_b - lambda).cos()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RealistExpectation {
    /// −u·v·cos(φ_a − φ_b).
    pub closed_form: f64,
    /// Trapezoid rule over λ on 2¹⁰ uniform points.
    pub quadrature: f64,
}

/// E[ξη] two ways; fails if they differ by more than 1e-9.
pub fn realist_expectation(model: &RealistFieldModel, phi_a: f64, phi_b: f64) -> Result<RealistExpectation> {
    let closed_form = -model.u * model.v * (phi_a - phi_b).cos();
    // periodic trapezoid: uniform weights
    let h = 2.0 * PI / QUADRATURE_POINTS as f64;
    let quadrature = (0..QUADRATURE_POINTS)
        .map(|k| {
            let lambda = k as f64 * h;
            model.xi(phi_a, lambda) * model.eta(phi_b, lambda)
        })
        .sum::<f64>()
        / QUADRATURE_POINTS as f64;
    if (closed_form - quadrature).abs() > 1e-9 {
        return Err(QmError::Numerical(format!("quadrature {quadrature} vs closed form {closed_form}")));
    }
    Ok(RealistExpectation { closed_form, quadrature })
}

/// (max |ξ|, max |η|) over `points` uniform λ values.
pub fn field_bound(model: &RealistFieldModel, phi_a: f64, phi_b: f64, points: usize) -> (f64, f64) {
    let h = 2.0 * PI / points as f64;
    (0..points).fold((0.0f64, 0.0f64), |(mx, my), k| {
        let l = k as f64 * h;
        (mx.max(model.xi(phi_a, l).abs()), my.max(model.eta(phi_b, l).abs()))
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum RealistMatch {
    /// Field model with u = g₁, v = g₂ reproduces every correlation on the grid.
    Matched { g1: f64, g2: f64, max_deviation: f64, grid_points: usize },
    /// Some capture factor exceeds 1/√2, so this construction has no bounded fields.
    NoBoundedModel { g1: f64, g2: f64 },
}

impl RealistMatch {
    pub fn max_deviation(&self) -> Option<f64> {
        match self {
            RealistMatch::Matched { max_deviation, .. } => Some(*max_deviation),
            RealistMatch::NoBoundedModel { .. } => None,
        }
    }
}

/// Compares the localized quantum correlation with E[ξη] of the field model
/// u = g₁, v = g₂ over a 64 × 64 grid of analyzer angles.
pub fn realist_match(state: &TwoParticleState, det_a: &DetectorConfig, det_b: &DetectorConfig) -> Result<RealistMatch> {
    let (g1, g2) = capture_factors(state, det_a, det_b);
    let model = match RealistFieldModel::new(g1, g2) {
        Ok(m) => m,
        Err(QmError::Unbounded { .. }) => return Ok(RealistMatch::NoBoundedModel { g1, g2 }),
        Err(e) => return Err(e),
    };
    let grid: Vec<f64> = (0..MATCH_GRID).map(|k| 2.0 * PI * k as f64 / MATCH_GRID as f64).collect();
    let mut max_deviation: f64 = 0.0;
    for &pa in &grid {
        for &pb in &grid {
            let quantum = correlation(state, &det_a.with_phi(pa), &det_b.with_phi(pb))?;
            let realist = realist_expectation(&model, pa, pb)?;
            max_deviation = max_deviation.max((quantum - realist.quadrature).abs());
        }
    }
    Ok(RealistMatch::Matched { g1, g2, max_deviation, grid_points: grid.len() * grid.len() })
}
