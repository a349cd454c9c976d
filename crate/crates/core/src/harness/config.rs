//! Sweep configuration and its flat TOML file format.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::schedule::ScheduleKind;
use crate::error::{NtkError, Result};
use crate::stats::DEFAULT_BOOTSTRAP;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Dispersion,
    Nondiag,
    GdStep,
    Structure,
    TheoryOnly,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::Dispersion => "dispersion",
            Self::Nondiag => "nondiag",
            Self::GdStep => "gd_step",
            Self::Structure => "structure",
            Self::TheoryOnly => "theory_only",
        }
    }
}

/// Everything needed to reproduce a sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub kind: ExperimentKind,
    /// Grid of σw² values.
    pub sigma_w_sq: Vec<f64>,
    /// Grid of depths `L`.
    pub depths: Vec<usize>,
    /// Width scale `M` of the hidden layers.
    pub width: usize,
    /// Input width as a fraction of `M`.
    pub alpha0: f64,
    /// Initializations per cell (`N`); seeded runs for `structure`.
    pub samples: usize,
    pub seed: u64,
    /// Input cosines `⟨x, x̃⟩` for `nondiag` and `theory_only`.
    #[serde(default)]
    pub cosines: Vec<f64>,
    /// Learning rate for `gd_step` and `structure`.
    #[serde(default = "default_eta")]
    pub eta: f64,
    #[serde(default = "default_bootstrap")]
    pub bootstrap: usize,
    /// Width schedules evaluated by `theory_only`.
    #[serde(default = "default_schedules")]
    pub schedules: Vec<ScheduleKind>,
    /// Schedule endpoints for `theory_only`; when absent every schedule is
    /// constant at `width`.
    #[serde(default)]
    pub m1: Option<usize>,
    #[serde(default)]
    pub m2: Option<usize>,
    /// Full-batch GD epochs for `structure`.
    #[serde(default = "default_epochs")]
    pub epochs: usize,
    #[serde(default)]
    pub out: Option<String>,
}

fn default_eta() -> f64 {
    1e-3
}

fn default_bootstrap() -> usize {
    DEFAULT_BOOTSTRAP
}

fn default_schedules() -> Vec<ScheduleKind> {
    vec![ScheduleKind::Constant]
}

fn default_epochs() -> usize {
    2000
}

impl SweepConfig {
    /// Desk-scale defaults for each experiment.
    pub fn default_for(kind: ExperimentKind) -> Self {
        let base = Self {
            kind,
            sigma_w_sq: vec![1.0, 2.0, 3.0],
            depths: vec![10, 30, 50, 80],
            width: 100,
            alpha0: 1.0,
            samples: 500,
            seed: 0,
            cosines: Vec::new(),
            eta: default_eta(),
            bootstrap: DEFAULT_BOOTSTRAP,
            schedules: default_schedules(),
            m1: None,
            m2: None,
            epochs: default_epochs(),
            out: None,
        };
        match kind {
            ExperimentKind::Dispersion => base,
            ExperimentKind::Nondiag => {
                Self { sigma_w_sq: vec![1.0], depths: vec![20, 60, 100], cosines: vec![0.1, 0.5, 0.9], ..base }
            }
            ExperimentKind::GdStep => {
                Self { sigma_w_sq: vec![1.0, 3.0], depths: vec![20, 40, 60], samples: 100, ..base }
            }
            ExperimentKind::Structure => {
                Self { sigma_w_sq: vec![2.0], depths: vec![3], width: 64, alpha0: 0.25, samples: 10, eta: 0.05, ..base }
            }
            ExperimentKind::TheoryOnly => Self {
                sigma_w_sq: vec![1.0, 1.9, 2.0, 3.0],
                depths: vec![10, 50, 100, 150, 200, 250, 300],
                width: 300,
                cosines: vec![0.5],
                schedules: vec![ScheduleKind::Constant, ScheduleKind::RampUp, ScheduleKind::RampDown],
                m1: Some(100),
                m2: Some(500),
                ..base
            },
        }
    }

    pub fn from_toml_str(s: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(s).map_err(|e| NtkError::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| NtkError::Parse(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("sweep config serializes")
    }

    /// Input width `n₀ = max(1, round(α₀ M))`.
    pub fn n0(&self) -> usize {
        ((self.alpha0 * self.width as f64).round() as usize).max(1)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(NtkError::InvalidConfig(msg));
        if self.samples < 3 {
            return bad(format!("samples must be at least 3, got {}", self.samples));
        }
        if self.width == 0 {
            return bad("width must be positive".into());
        }
        if !(self.alpha0.is_finite() && self.alpha0 > 0.0) {
            return bad(format!("alpha0 must be positive, got {}", self.alpha0));
        }
        if self.sigma_w_sq.is_empty() || self.depths.is_empty() {
            return bad("sigma_w_sq and depths must be non-empty".into());
        }
        if let Some(s) = self.sigma_w_sq.iter().find(|s| !(s.is_finite() && **s > 0.0)) {
            return bad(format!("sigma_w_sq values must be positive, got {s}"));
        }
        if self.depths.contains(&0) {
            return bad("depths must be positive".into());
        }
        if let Some(c) = self.cosines.iter().find(|c| !(c.abs() <= 1.0)) {
            return bad(format!("cosines must lie in [-1, 1], got {c}"));
        }
        if self.bootstrap < 2 {
            return bad(format!("bootstrap must be at least 2, got {}", self.bootstrap));
        }
        if !(self.eta.is_finite() && self.eta >= 0.0) {
            return bad(format!("eta must be non-negative, got {}", self.eta));
        }
        match self.kind {
            ExperimentKind::Nondiag if self.cosines.is_empty() => bad("nondiag needs at least one cosine".into()),
            ExperimentKind::Nondiag if self.n0() < 2 && self.cosines.iter().any(|c| c.abs() < 1.0) => {
                bad("cosines other than ±1 need an input width of at least 2".into())
            }
            ExperimentKind::Structure if self.eta <= 0.0 => bad("structure needs eta > 0".into()),
            ExperimentKind::TheoryOnly if self.m1 == Some(0) || self.m2 == Some(0) => {
                bad("m1 and m2 must be positive".into())
            }
            ExperimentKind::TheoryOnly if self.m1.is_some() != self.m2.is_some() => {
                bad("m1 and m2 must be given together".into())
            }
            _ => Ok(()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate_and_round_trip() {
        for kind in [
            ExperimentKind::Dispersion,
            ExperimentKind::Nondiag,
            ExperimentKind::GdStep,
            ExperimentKind::Structure,
            ExperimentKind::TheoryOnly,
        ] {
            let cfg = SweepConfig::default_for(kind);
            cfg.validate().unwrap();
            assert_eq!(SweepConfig::from_toml_str(&cfg.to_toml_string()).unwrap(), cfg);
        }
    }

    #[test]
    fn minimal_file() {
        let cfg = SweepConfig::from_toml_str(
            "kind = \"dispersion\"\nsigma_w_sq = [2.0]\ndepths = [5]\nwidth = 20\nalpha0 = 1.0\nsamples = 10\nseed = 3\n",
        )
        .unwrap();
        assert_eq!(cfg.eta, 1e-3);
        assert_eq!(cfg.bootstrap, 1000);
        assert_eq!(cfg.n0(), 20);
    }

    #[test]
    fn unknown_keys_rejected() {
        let text = "kind = \"dispersion\"\nsigma_w_sq = [2.0]\ndepths = [5]\nwidth = 20\nalpha0 = 1.0\nsamples = 10\nseed = 3\nlearning_rate = 0.1\n";
        assert!(matches!(SweepConfig::from_toml_str(text), Err(NtkError::Parse(_))));
    }

    #[test]
    fn invalid_values_rejected() {
        let mut cfg = SweepConfig::default_for(ExperimentKind::Dispersion);
        cfg.samples = 2;
        assert!(cfg.validate().is_err());
        let mut cfg = SweepConfig::default_for(ExperimentKind::Nondiag);
        cfg.cosines = vec![1.5];
        assert!(cfg.validate().is_err());
        cfg.cosines.clear();
        assert!(cfg.validate().is_err());
        let mut cfg = SweepConfig::default_for(ExperimentKind::GdStep);
        cfg.eta = -1.0;
        assert!(cfg.validate().is_err());
    }
}
