//! Experiment configuration: one JSON file fully determines a run.

use std::path::Path;

use lyapunov_core::{make_grid, GridSpec, TimePolicy};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{path}: {message}")]
    Parse { path: String, message: String },
    #[error("invalid configuration:\n{}", .0.join("\n"))]
    Invalid(Vec<String>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub grid: GridSection,
    pub dense: DenseSection,
    pub times: TimesSection,
    pub state: StateSection,
    pub tolerances: Tolerances,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub n_sigma: usize,
    pub sigma_max: f64,
    pub k_dim: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DenseSection {
    /// Half-line bins of the dense tier.
    pub n_dense: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimesSection {
    pub t_max: f64,
    pub n_steps: usize,
    /// Snap requested times to the dual lattice instead of rejecting them.
    pub snap_times: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateSection {
    pub kind: StateKind,
    /// Kind-specific; see [`StateSpec`].
    pub parameters: serde_json::Value,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StateKind {
    Rational,
    Witness,
    Random,
}

#[derive(Debug, Clone, PartialEq)]
pub enum StateSpec {
    Rational(RationalParams),
    Witness(WitnessParams),
    Random(RandomParams),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PoleParams {
    pub mu_re: f64,
    pub mu_im: f64,
    pub order: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RationalParams {
    pub poles: Vec<PoleParams>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WitnessParams {
    pub mu_re: f64,
    pub mu_im: f64,
    pub t0: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RandomParams {
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    pub algebraic: f64,
    pub continuum: f64,
}

impl Default for Config {
    /// The kernel witness with a carrier at 25, supported on `[0, 1]`.
    fn default() -> Self {
        Config {
            grid: GridSection {
                n_sigma: 4096,
                sigma_max: 100.0,
                k_dim: 1,
            },
            dense: DenseSection { n_dense: 512 },
            times: TimesSection {
                t_max: 4.0,
                n_steps: 64,
                snap_times: true,
            },
            state: StateSection {
                kind: StateKind::Witness,
                parameters: serde_json::json!({"mu_re": 25.0, "mu_im": -1.0, "t0": 1.0}),
                seed: 20_240_601,
            },
            tolerances: Tolerances {
                algebraic: 1e-8,
                continuum: 0.05,
            },
        }
    }
}

pub fn load(path: &Path) -> Result<Config, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse(&text)
}

pub fn parse(text: &str) -> Result<Config, ConfigError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let config: Config = serde_path_to_error::deserialize(de).map_err(|e| ConfigError::Parse {
        path: e.path().to_string(),
        message: e.inner().to_string(),
    })?;
    config.validate()?;
    Ok(config)
}

fn typed<T: serde::de::DeserializeOwned>(v: &serde_json::Value) -> Result<T, ConfigError> {
    serde_path_to_error::deserialize(v).map_err(|e| {
        let inner = e.path().to_string();
        ConfigError::Parse {
            path: if inner == "." { "state.parameters".into() } else { format!("state.parameters.{inner}") },
            message: e.inner().to_string(),
        }
    })
}

fn power_of_two(n: usize, min: usize) -> bool {
    n >= min && n.is_power_of_two()
}

impl Config {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let mut errs = Vec::new();
        let mut bad = |field: &str, msg: String| errs.push(format!("{field}: {msg}"));
        let g = &self.grid;
        if !power_of_two(g.n_sigma, 8) {
            bad("grid.n_sigma", format!("must be a power of two >= 8, got {}", g.n_sigma));
        }
        if !(g.sigma_max.is_finite() && g.sigma_max > 0.0) {
            bad("grid.sigma_max", format!("must be positive, got {}", g.sigma_max));
        }
        if g.k_dim == 0 {
            bad("grid.k_dim", "must be at least 1".into());
        }
        let n = self.dense.n_dense;
        if !power_of_two(n, 4) {
            bad("dense.n_dense", format!("must be a power of two >= 4, got {n}"));
        } else if 2 * n > g.n_sigma {
            bad("dense.n_dense", format!("must not exceed grid.n_sigma / 2 = {}", g.n_sigma / 2));
        }
        let t = &self.times;
        if !(t.t_max.is_finite() && t.t_max > 0.0) {
            bad("times.t_max", format!("must be positive, got {}", t.t_max));
        }
        if t.n_steps == 0 {
            bad("times.n_steps", "must be at least 1".into());
        }
        let spec = self.state_spec()?;
        match &spec {
            StateSpec::Rational(p) => {
                if p.poles.is_empty() {
                    bad("state.parameters.poles", "needs at least one pole".into());
                }
                for (i, pole) in p.poles.iter().enumerate() {
                    if !(pole.mu_im < 0.0) {
                        bad(&format!("state.parameters.poles[{i}].mu_im"), "must be negative".into());
                    }
                    if pole.order != 1 && pole.order != 2 {
                        bad(&format!("state.parameters.poles[{i}].order"), "must be 1 or 2".into());
                    }
                }
            }
            StateSpec::Witness(p) => {
                if !(p.mu_im < 0.0) {
                    bad("state.parameters.mu_im", "must be negative".into());
                }
                if !(p.t0.is_finite() && p.t0 > 0.0) {
                    bad("state.parameters.t0", "must be positive".into());
                }
            }
            StateSpec::Random(p) => {
                if p.count == 0 {
                    bad("state.parameters.count", "must be at least 1".into());
                }
            }
        }
        for (name, v) in [("tolerances.algebraic", self.tolerances.algebraic), ("tolerances.continuum", self.tolerances.continuum)] {
            if !(v.is_finite() && v > 0.0) {
                bad(name, format!("must be positive, got {v}"));
            }
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(ConfigError::Invalid(errs))
        }
    }

    pub fn state_spec(&self) -> Result<StateSpec, ConfigError> {
        let p = &self.state.parameters;
        Ok(match self.state.kind {
            StateKind::Rational => StateSpec::Rational(typed(p)?),
            StateKind::Witness => StateSpec::Witness(typed(p)?),
            StateKind::Random => StateSpec::Random(typed(p)?),
        })
    }

    pub fn grid(&self) -> lyapunov_core::Result<GridSpec> {
        make_grid(self.grid.n_sigma, self.grid.sigma_max, self.grid.k_dim)
    }

    /// Same energy spacing as the main grid, `2 n_dense` bins.
    pub fn dense_grid(&self) -> lyapunov_core::Result<GridSpec> {
        let n = 2 * self.dense.n_dense;
        make_grid(n, self.grid.sigma_max * n as f64 / self.grid.n_sigma as f64, self.grid.k_dim)
    }

    pub fn policy(&self) -> TimePolicy {
        if self.times.snap_times {
            TimePolicy::Snap
        } else {
            TimePolicy::Reject
        }
    }

    /// Fiber direction of every generated state: the first basis vector of the fiber.
    pub fn fiber(&self) -> Vec<Complex64> {
        let mut v = vec![Complex64::new(0.0, 0.0); self.grid.k_dim];
        v[0] = Complex64::new(1.0, 0.0);
        v
    }
}
