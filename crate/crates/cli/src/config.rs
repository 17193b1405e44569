//! Experiment configuration files (TOML).

use clap::ValueEnum;
use fermibath::bath::{BathSpectrum, CouplingProfile, ModelParams};
use fermibath::density::{InjectionState, LevelWindow};
use fermibath::greens::{PropagatorKind, TruncationPolicy, DEFAULT_SLACK};
use fermibath::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

/// Slack around the injected levels when no window is configured.
pub const COVERING_SLACK: i32 = 2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: ModelParams,
    pub bath: BathSpectrum,
    #[serde(default)]
    pub coupling: CouplingConfig,
    pub time: TimeGrid,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window: Option<WindowConfig>,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default)]
    pub greens: GreensConfig,
    #[serde(default)]
    pub flags: Flags,
    #[serde(default)]
    pub truncation: TruncationConfig,
    pub injection: Vec<Injection>,
}

/// `f_q = "cm-only"` or an explicit list `f_q = [f_1, f_2, ...]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CouplingConfig {
    pub f_q: Amplitudes,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Amplitudes {
    Named(String),
    List(Vec<f64>),
}

impl Default for CouplingConfig {
    fn default() -> Self {
        Self {
            f_q: Amplitudes::Named("cm-only".into()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Injection {
    pub n0: i32,
    pub re: f64,
    #[serde(default)]
    pub im: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeGrid {
    pub t_start: f64,
    pub t_end: f64,
    pub n_points: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WindowConfig {
    pub lo: i32,
    pub hi: i32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default)]
    pub format: Format,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GreensConfig {
    pub kind: PropagatorKind,
}

impl Default for GreensConfig {
    fn default() -> Self {
        Self {
            kind: PropagatorKind::Hole,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Flags {
    #[serde(default)]
    pub limiting: bool,
    #[serde(default)]
    pub closed_form: bool,
    #[serde(default)]
    pub exact_cm: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TruncationConfig {
    pub slack: i32,
    #[serde(default)]
    pub verify: bool,
}

impl Default for TruncationConfig {
    fn default() -> Self {
        Self {
            slack: DEFAULT_SLACK,
            verify: false,
        }
    }
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn to_toml(&self) -> Result<String, CliError> {
        toml::to_string(self).map_err(|e| CliError::Config(e.to_string()))
    }

    /// Structural checks that do not need the numerical library.
    pub fn validate(&self) -> Result<(), CliError> {
        self.model.validate()?;
        self.bath.validate()?;
        self.profile()?;
        self.injection_state()?;
        self.times()?;
        if let Some(w) = self.window {
            LevelWindow::new(w.lo, w.hi)?;
        }
        if self.truncation.slack < 0 {
            return Err(CliError::Config("truncation slack must be >= 0".into()));
        }
        Ok(())
    }

    pub fn profile(&self) -> Result<CouplingProfile, CliError> {
        match &self.coupling.f_q {
            Amplitudes::Named(name) if name == "cm-only" => Ok(CouplingProfile::center_of_mass()),
            Amplitudes::Named(name) => Err(CliError::Config(format!(
                "unknown coupling profile \"{name}\" (use \"cm-only\" or a list of f_q)"
            ))),
            Amplitudes::List(f) => Ok(CouplingProfile::from_amplitudes(f.clone())?),
        }
    }

    pub fn injection_state(&self) -> Result<InjectionState, CliError> {
        let amps = self
            .injection
            .iter()
            .map(|i| (i.n0, Complex64::new(i.re, i.im)))
            .collect();
        Ok(InjectionState::new(amps)?)
    }

    /// Uniform grid from `t_start` to `t_end` inclusive.
    pub fn times(&self) -> Result<Vec<f64>, CliError> {
        let g = self.time;
        if g.n_points == 0 {
            return Err(CliError::Usage("empty time grid (n_points = 0)".into()));
        }
        if !(g.t_start.is_finite() && g.t_end.is_finite()) {
            return Err(CliError::Config("time grid bounds must be finite".into()));
        }
        if g.n_points == 1 {
            return Ok(vec![g.t_start]);
        }
        if g.t_end <= g.t_start {
            return Err(CliError::Config(format!(
                "time grid must be strictly increasing, got t_start={} t_end={}",
                g.t_start, g.t_end
            )));
        }
        let step = (g.t_end - g.t_start) / (g.n_points - 1) as f64;
        Ok((0..g.n_points)
            .map(|k| {
                if k + 1 == g.n_points {
                    g.t_end
                } else {
                    g.t_start + step * k as f64
                }
            })
            .collect())
    }

    /// Configured window, or one covering the injected state.
    pub fn level_window(&self) -> Result<LevelWindow, CliError> {
        match self.window {
            Some(w) => Ok(LevelWindow::new(w.lo, w.hi)?),
            None => Ok(LevelWindow::covering(
                &self.model,
                &self.injection_state()?,
                COVERING_SLACK,
            )),
        }
    }

    pub fn policy(&self) -> TruncationPolicy {
        TruncationPolicy {
            slack: self.truncation.slack,
            verify: self.truncation.verify,
        }
    }
}
