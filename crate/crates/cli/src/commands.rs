//! The experiment subcommands. Each returns its report as a value; `main`
//! decides where the bytes go.

use std::f64::consts::FRAC_1_SQRT_2;

use serde::Serialize;

use qm_core::bell::{self, DetectorConfig, RealistMatch, ScanRow, BELL_THRESHOLD};
use qm_core::dynamics::{fit_phase_frequency, propagator_const_with};
use qm_core::linalg::{Ket, Operator};
use qm_core::composition::tensor;
use qm_core::space::{gaussian_packet, pauli_hamiltonian, position_operator};
use qm_core::system::spin_coherent;

use crate::config::{Format, RunConfig};
use crate::CliError;

/// Largest single-particle dimension `evolve` will diagonalize.
pub const MAX_EVOLVE_DIM: usize = 2048;
/// Relative error allowed on the fitted precession frequency.
pub const LARMOR_REL_TOL: f64 = 1e-3;
/// Norm drift allowed over the whole run.
pub const NORM_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Serialize)]
pub struct ScanReport {
    pub seed: u64,
    pub angles: [f64; 4],
    pub bell_threshold: f64,
    pub rows: Vec<ScanRow>,
    pub threshold_row: Option<ScanRow>,
}

impl ScanReport {
    pub fn summary(&self) -> String {
        match &self.threshold_row {
            Some(r) => format!(
                "threshold row (g nearest {BELL_THRESHOLD:.6}): window_param={} g={} S={} bell_satisfied={}",
                r.window_param, r.g, r.s, r.bell_satisfied
            ),
            None => "threshold row: none (empty scan)".to_string(),
        }
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Csv => bell::scan_csv(&self.rows),
            Format::Json => serde_json::to_string_pretty(self).unwrap() + "\n",
        }
    }

    /// Rows flagged Bell-satisfying must have |S| ≤ 2.
    pub fn violations(&self) -> Vec<&ScanRow> {
        self.rows.iter().filter(|r| r.bell_satisfied && r.s.abs() > 2.0 + 1e-9).collect()
    }
}

pub fn chsh_scan(cfg: &RunConfig) -> Result<ScanReport, CliError> {
    cfg.validate()?;
    let state = cfg.two_particle_state()?;
    let family = cfg.window_family()?;
    let rows = bell::scan_localization(&state, cfg.angles, &family)?;
    let threshold_row = bell::threshold_row(&rows).cloned();
    Ok(ScanReport { seed: cfg.seed, angles: cfg.angles, bell_threshold: BELL_THRESHOLD, rows, threshold_row })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EvolveRow {
    pub t: f64,
    pub norm: f64,
    pub sx: f64,
    pub sy: f64,
    pub sz: f64,
    pub position: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LarmorFit {
    pub omega: f64,
    /// 2μ|B|.
    pub expected: f64,
    pub rel_error: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct EvolveReport {
    pub seed: u64,
    pub rows: Vec<EvolveRow>,
    /// Present when B is along z and nonzero, so ⟨σ_x⟩ + i⟨σ_y⟩ rotates
    /// in the x-y plane.
    pub larmor: Option<LarmorFit>,
    pub max_norm_error: f64,
}

impl EvolveReport {
    pub fn csv(&self, time_scale: f64) -> String {
        let mut out = String::from("t,norm,sx,sy,sz,position\n");
        for r in &self.rows {
            out.push_str(&format!("{},{},{},{},{},{}\n", r.t * time_scale, r.norm, r.sx, r.sy, r.sz, r.position));
        }
        out
    }

    pub fn summary(&self) -> String {
        let mut s = format!("max |norm - 1| = {:.3e}", self.max_norm_error);
        if let Some(f) = &self.larmor {
            s.push_str(&format!(
                "; larmor omega fitted {} expected {} rel_error {:.3e}",
                f.omega, f.expected, f.rel_error
            ));
        }
        s
    }

    pub fn failures(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.max_norm_error > NORM_TOL {
            out.push(format!("norm drift {:.3e} exceeds {NORM_TOL:e}", self.max_norm_error));
        }
        if let Some(f) = &self.larmor {
            if !(f.rel_error <= LARMOR_REL_TOL) {
                out.push(format!("larmor frequency relative error {:.3e} exceeds {LARMOR_REL_TOL:e}", f.rel_error));
            }
        }
        out
    }
}

/// Frequency of ⟨σ_x⟩ + i⟨σ_y⟩ from the sampled rows.
pub fn larmor_fit(rows: &[EvolveRow], mu: f64, field: [f64; 3]) -> LarmorFit {
    let t: Vec<f64> = rows.iter().map(|r| r.t).collect();
    let x: Vec<f64> = rows.iter().map(|r| r.sx).collect();
    let y: Vec<f64> = rows.iter().map(|r| r.sy).collect();
    let omega = fit_phase_frequency(&t, &x, &y).abs();
    let b = field.iter().map(|v| v * v).sum::<f64>().sqrt();
    let expected = 2.0 * mu.abs() * b;
    LarmorFit { omega, expected, rel_error: (omega - expected).abs() / expected }
}

/// Evolves the example state (spin along `spin_init` times a Gaussian
/// packet) under the Pauli Hamiltonian, sampling every `dt` for `steps`
/// steps.
pub fn evolve(cfg: &RunConfig, steps: usize, dt: f64) -> Result<EvolveReport, CliError> {
    cfg.validate()?;
    if steps == 0 {
        return Err(CliError::Config("--steps must be at least 1".into()));
    }
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(CliError::Config(format!("--dt {dt} must be positive")));
    }
    let lat = cfg.lattice()?;
    let dim = 2 * lat.sites();
    if dim > MAX_EVOLVE_DIM {
        return Err(CliError::Config(format!("2·n^d = {dim} exceeds {MAX_EVOLVE_DIM}")));
    }
    let tol = cfg.tolerances();
    let h = pauli_hamiltonian(&lat, cfg.mass, cfg.field, cfg.mu)?;
    let step = propagator_const_with(&h, dt, &tol)?;

    let id = Operator::identity(lat.sites());
    let paulis = [Operator::pauli_x(), Operator::pauli_y(), Operator::pauli_z()];
    let spin_ops: Vec<Operator> = paulis.iter().map(|s| tensor(s, &id)).collect();
    let x_op = tensor(&Operator::identity(2), &position_operator(&lat, 0));
    let mean = |a: &Operator, psi: &Ket| psi.dotc(&(a.matrix() * psi)).re;

    let chi = spin_coherent(cfg.spin_init)?;
    let packet = gaussian_packet(&lat, &cfg.centers().0, cfg.width)?;
    let mut psi = Ket::from_iterator(dim, chi.iter().flat_map(|&s| packet.iter().map(move |&x| s * x)));
    let mut rows = Vec::with_capacity(steps + 1);
    let mut max_norm_error: f64 = 0.0;
    for k in 0..=steps {
        let norm = psi.norm();
        max_norm_error = max_norm_error.max((norm - 1.0).abs());
        rows.push(EvolveRow {
            t: k as f64 * dt,
            norm,
            sx: mean(&spin_ops[0], &psi),
            sy: mean(&spin_ops[1], &psi),
            sz: mean(&spin_ops[2], &psi),
            position: mean(&x_op, &psi),
        });
        if k < steps {
            // no renormalization, so the norm column shows any drift
            psi = step.u.apply(&psi)?;
        }
    }
    let along_z = cfg.field[0] == 0.0 && cfg.field[1] == 0.0 && cfg.field[2] != 0.0 && cfg.mu != 0.0;
    let larmor = (along_z && rows.len() >= 2).then(|| larmor_fit(&rows, cfg.mu, cfg.field));
    Ok(EvolveReport { seed: cfg.seed, rows, larmor, max_norm_error })
}

#[derive(Debug, Clone, Serialize)]
pub struct RealistRow {
    pub window_param: f64,
    #[serde(flatten)]
    pub result: RealistMatch,
}

#[derive(Debug, Clone, Serialize)]
pub struct RealistReport {
    pub seed: u64,
    /// The construction needs both capture factors at most this.
    pub construction_bound: f64,
    pub tolerance: f64,
    pub rows: Vec<RealistRow>,
    pub passed: bool,
}

pub const REALIST_TOL: f64 = 1e-9;

/// realist_match for every member of the window family, widest first.
pub fn realist_check(cfg: &RunConfig) -> Result<RealistReport, CliError> {
    cfg.validate()?;
    let state = cfg.two_particle_state()?;
    let lat = *state.lattice();
    let mut family = cfg.window_family()?;
    family.sort_by(|a, b| b.param.total_cmp(&a.param));
    let mut rows = Vec::with_capacity(family.len());
    for pair in &family {
        let a = DetectorConfig::new(&lat, 0.0, &pair.window_a)?;
        let b = DetectorConfig::new(&lat, 0.0, &pair.window_b)?;
        rows.push(RealistRow { window_param: pair.param, result: bell::realist_match(&state, &a, &b)? });
    }
    let passed = rows.iter().all(|r| r.result.max_deviation().is_none_or(|d| d <= REALIST_TOL));
    Ok(RealistReport { seed: cfg.seed, construction_bound: FRAC_1_SQRT_2, tolerance: REALIST_TOL, rows, passed })
}
