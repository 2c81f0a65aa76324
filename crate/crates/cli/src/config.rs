use std::path::{Path, PathBuf};

use qm_core::bell::{centered_window_family, TwoParticleState, WindowPair, OPTIMAL_ANGLES_POSITIVE};
use qm_core::space::Lattice;
use qm_core::system::ExampleParams;
use qm_core::Tolerances;
use serde::{Deserialize, Serialize};

use crate::CliError;

/// Environment variable overriding the configured seed.
pub const SEED_ENV: &str = "QM_SEED";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

/// One flat JSON document drives every subcommand. Missing keys take their
/// defaults; unknown keys are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub d: usize,
    pub n: usize,
    pub dx: f64,
    /// Packet width w, in length units.
    pub width: f64,
    /// Packet centers; the lattice midpoint when absent.
    pub c1: Option<Vec<f64>>,
    pub c2: Option<Vec<f64>>,
    /// Analyzer angles (a, a', b, b') in radians. The default gives S = +2√2
    /// for full windows.
    pub angles: [f64; 4],
    /// Radii of the centered window family; 0, dx, 2dx, ... up to the
    /// whole lattice when absent.
    pub window_radii: Option<Vec<f64>>,
    pub tol_trace: Option<f64>,
    pub tol_herm: Option<f64>,
    pub tol_psd: Option<f64>,
    pub tol_recon: Option<f64>,
    pub tol_degen: Option<f64>,
    pub tol_prob: Option<f64>,
    pub tol_unitary: Option<f64>,
    pub format: Format,
    pub seed: u64,
    pub mass: f64,
    pub field: [f64; 3],
    pub mu: f64,
    /// Bloch vector of the initial spin for `evolve` and `verify`.
    pub spin_init: [f64; 3],
    /// Multiplies the time column on output only.
    pub time_scale: f64,
    /// Extra POVM ({labels, effects}) validated by `verify`.
    pub povm_file: Option<PathBuf>,
    /// Extra instrument ({labels, kraus}) validated by `verify`.
    pub instrument_file: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            d: 1,
            n: 32,
            dx: 1.0,
            width: 3.0,
            c1: None,
            c2: None,
            angles: OPTIMAL_ANGLES_POSITIVE,
            window_radii: None,
            tol_trace: None,
            tol_herm: None,
            tol_psd: None,
            tol_recon: None,
            tol_degen: None,
            tol_prob: None,
            tol_unitary: None,
            format: Format::Csv,
            seed: 20240917,
            mass: 1.0,
            field: [0.0, 0.0, 1.0],
            mu: 0.5,
            spin_init: [1.0, 0.0, 0.0],
            time_scale: 1.0,
            povm_file: None,
            instrument_file: None,
        }
    }
}

impl RunConfig {
    /// Reads a config file, or the defaults when `path` is `None`. Relative
    /// POVM and instrument paths resolve against the config's directory.
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let Some(path) = path else {
            return Ok(RunConfig::default());
        };
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg: RunConfig = serde_json::from_str(&text)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        for p in [&mut cfg.povm_file, &mut cfg.instrument_file].into_iter().flatten() {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(cfg)
    }

    /// Applies `QM_SEED` if set.
    pub fn with_env_seed(mut self) -> Result<Self, CliError> {
        if let Ok(v) = std::env::var(SEED_ENV) {
            self.seed = v
                .trim()
                .parse()
                .map_err(|_| CliError::Config(format!("{SEED_ENV}={v:?} is not an unsigned integer")))?;
        }
        Ok(self)
    }

    pub fn tolerances(&self) -> Tolerances {
        let mut tol = Tolerances::default();
        let overrides = [
            (&mut tol.trace, self.tol_trace),
            (&mut tol.herm, self.tol_herm),
            (&mut tol.psd, self.tol_psd),
            (&mut tol.recon, self.tol_recon),
            (&mut tol.degen, self.tol_degen),
            (&mut tol.prob, self.tol_prob),
            (&mut tol.unitary, self.tol_unitary),
        ];
        for (slot, value) in overrides {
            if let Some(v) = value {
                *slot = v;
            }
        }
        tol
    }

    pub fn lattice(&self) -> Result<Lattice, CliError> {
        Ok(Lattice::new(self.d, self.n, self.dx)?)
    }

    fn midpoint(&self) -> Vec<f64> {
        vec![self.n as f64 * self.dx / 2.0; self.d]
    }

    pub fn centers(&self) -> (Vec<f64>, Vec<f64>) {
        (
            self.c1.clone().unwrap_or_else(|| self.midpoint()),
            self.c2.clone().unwrap_or_else(|| self.midpoint()),
        )
    }

    pub fn radii(&self) -> Vec<f64> {
        self.window_radii.clone().unwrap_or_else(|| {
            // the last radius exceeds every minimal-image distance
            let reach = (self.n / 2) * self.d + 1;
            (0..=reach).map(|k| k as f64 * self.dx).collect()
        })
    }

    pub fn example_params(&self) -> Result<ExampleParams, CliError> {
        Ok(ExampleParams {
            lattice: self.lattice()?,
            center: self.centers().0,
            width: self.width,
            mass: self.mass,
            field: self.field,
            mu: self.mu,
            spin_direction: self.spin_init,
        })
    }

    pub fn two_particle_state(&self) -> Result<TwoParticleState, CliError> {
        let (c1, c2) = self.centers();
        Ok(TwoParticleState::singlet_gaussian(self.lattice()?, &c1, &c2, self.width)?)
    }

    pub fn window_family(&self) -> Result<Vec<WindowPair>, CliError> {
        let (c1, c2) = self.centers();
        let radii = self.radii();
        if radii.iter().any(|r| !r.is_finite() || *r < 0.0) {
            return Err(CliError::Config("window_radii must be finite and non-negative".into()));
        }
        Ok(centered_window_family(&self.lattice()?, &c1, &c2, &radii))
    }

    /// Checks everything that can be checked without running a command.
    pub fn validate(&self) -> Result<(), CliError> {
        let lat = self.lattice()?;
        let (c1, c2) = self.centers();
        for c in [&c1, &c2] {
            if c.len() != lat.d() {
                return Err(CliError::Config(format!("packet center {c:?} must have {} components", lat.d())));
            }
        }
        if !(self.width > 0.0) {
            return Err(CliError::Config(format!("width {} must be positive", self.width)));
        }
        if !(self.mass > 0.0) {
            return Err(CliError::Config(format!("mass {} must be positive", self.mass)));
        }
        if !(self.time_scale > 0.0) {
            return Err(CliError::Config(format!("time_scale {} must be positive", self.time_scale)));
        }
        let t = self.tolerances();
        for (name, v) in [
            ("tol_trace", t.trace),
            ("tol_herm", t.herm),
            ("tol_psd", t.psd),
            ("tol_recon", t.recon),
            ("tol_degen", t.degen),
            ("tol_prob", t.prob),
            ("tol_unitary", t.unitary),
        ] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(CliError::Config(format!("{name} = {v} must be a finite non-negative number")));
            }
        }
        let norm = self.spin_init.iter().map(|x| x * x).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > 1e-9 {
            return Err(CliError::Config(format!("spin_init must be a unit vector, norm {norm}")));
        }
        self.window_family()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_document_is_default() {
        let cfg: RunConfig = serde_json::from_str("{}").unwrap();
        assert_eq!(cfg, RunConfig::default());
        cfg.validate().unwrap();
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(serde_json::from_str::<RunConfig>(r#"{"lattice_n": 4}"#).is_err());
    }

    #[test]
    fn tolerance_overrides() {
        let cfg: RunConfig = serde_json::from_str(r#"{"tol_unitary": 1e-30}"#).unwrap();
        let t = cfg.tolerances();
        assert_eq!(t.unitary, 1e-30);
        assert_eq!(t.trace, Tolerances::default().trace);
    }

    #[test]
    fn default_family_reaches_whole_lattice() {
        let cfg = RunConfig::default();
        let family = cfg.window_family().unwrap();
        assert_eq!(family.first().unwrap().window_a.len(), 0);
        assert_eq!(family.last().unwrap().window_a.len(), 32);
    }

    #[test]
    fn bad_values_are_config_errors() {
        for text in [r#"{"n": 1}"#, r#"{"width": 0}"#, r#"{"c1": [1, 2]}"#, r#"{"spin_init": [1, 1, 0]}"#] {
            let cfg: RunConfig = serde_json::from_str(text).unwrap();
            assert!(matches!(cfg.validate(), Err(CliError::Config(_)) | Err(CliError::Core(_))), "{text}");
        }
    }
}
