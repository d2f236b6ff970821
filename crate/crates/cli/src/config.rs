//! Run configuration: what to compute, on which model, and where to write it.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use qel_core::fclt::ScalingEntry;
use qel_core::{InitialWorkload, ServiceDistribution};

use crate::error::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    BusyPeriod,
    Moments,
    Lst,
    Simulate,
    Crossing,
    Fclt,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Self::BusyPeriod => "busy-period",
            Self::Moments => "moments",
            Self::Lst => "lst",
            Self::Simulate => "simulate",
            Self::Crossing => "crossing",
            Self::Fclt => "fclt",
        }
    }

    pub fn samples(self) -> bool {
        matches!(self, Self::Simulate | Self::Fclt)
    }

    fn needs_x(self) -> bool {
        matches!(
            self,
            Self::Moments | Self::Lst | Self::Simulate | Self::Fclt
        )
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    #[default]
    Json,
}

/// Law of the initial workload `v`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum InitSpec {
    Fixed {
        v: f64,
    },
    /// Stationary workload of the model itself.
    Stationary,
    /// `v` drawn from a parametric law.
    Law {
        dist: ServiceDistribution,
    },
}

impl Default for InitSpec {
    fn default() -> Self {
        Self::Fixed { v: 0.0 }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dist: Option<ServiceDistribution>,
    #[serde(default)]
    pub init: InitSpec,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Experiment {
    pub reps: usize,
    pub seed: Option<u64>,
    /// Marginal-service grid (`x_1 < x_2 < ...` for `simulate`, `lst` and `fclt`).
    pub x: Vec<f64>,
    /// Lag for the `moments` covariance: `Cov(E(x), E(x + x2))`.
    pub x2: f64,
    /// Crossing levels.
    pub y: Vec<f64>,
    /// Transform arguments, one per `x`.
    pub alpha: Vec<f64>,
    pub s_max: usize,
    pub max_events: u64,
}

impl Default for Experiment {
    fn default() -> Self {
        Self {
            reps: 10_000,
            seed: None,
            x: Vec::new(),
            x2: 1.0,
            y: Vec::new(),
            alpha: Vec::new(),
            s_max: 200,
            max_events: qel_core::sim::DEFAULT_MAX_EVENTS,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Output {
    /// Directory for report files; stdout when absent.
    pub path: Option<PathBuf>,
    pub format: Format,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub command: Command,
    #[serde(default)]
    pub model: ModelSpec,
    /// Scaling sequence `(λ_n, B_n)` for `fclt`.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub sequence: Vec<ScalingEntry>,
    #[serde(default)]
    pub experiment: Experiment,
    #[serde(default)]
    pub output: Output,
}

impl RunConfig {
    pub fn new(command: Command) -> Self {
        Self {
            command,
            model: ModelSpec::default(),
            sequence: Vec::new(),
            experiment: Experiment::default(),
            output: Output::default(),
        }
    }

    /// Parses a JSON config; errors carry the line and column.
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Config(format!("invalid config: {e}")))
    }

    pub fn from_file(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text).map_err(|e| match e {
            CliError::Config(msg) => CliError::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    /// Every reason this config cannot run; empty when it can.
    pub fn validate(&self) -> Vec<String> {
        let mut out = Vec::new();
        let cmd = self.command;
        let exp = &self.experiment;

        if cmd == Command::Fclt {
            if self.sequence.len() < 3 {
                out.push(format!(
                    "sequence needs at least 3 models, got {}",
                    self.sequence.len()
                ));
            }
            for (i, e) in self.sequence.iter().enumerate() {
                if let Some(msg) = stability(e.lambda, &e.dist) {
                    out.push(format!("sequence[{i}]: {msg}"));
                }
            }
            match self.model.init {
                InitSpec::Fixed { v } if !(v >= 0.0 && v.is_finite()) => {
                    out.push(format!("v must be finite and non-negative, got {v}"))
                }
                InitSpec::Fixed { .. } => {}
                _ => out.push("fclt needs a fixed initial workload".into()),
            }
        } else {
            match (self.model.lambda, &self.model.dist) {
                (Some(lambda), Some(dist)) => out.extend(stability(lambda, dist)),
                (lambda, dist) => {
                    if lambda.is_none() {
                        out.push(format!("lambda is required for {}", cmd.name()));
                    }
                    if dist.is_none() {
                        out.push(format!("dist is required for {}", cmd.name()));
                    }
                }
            }
            match &self.model.init {
                InitSpec::Fixed { v } if !(*v >= 0.0 && v.is_finite()) => {
                    out.push(format!("v must be finite and non-negative, got {v}"))
                }
                InitSpec::Fixed { v } if cmd == Command::Crossing && *v != 0.0 => {
                    out.push("crossing times are defined for v = 0 only".into())
                }
                InitSpec::Law { .. } | InitSpec::Stationary if cmd == Command::Crossing => {
                    out.push("crossing times are defined for v = 0 only".into())
                }
                _ => {}
            }
        }

        if cmd.needs_x() {
            out.extend(grid("x", &exp.x));
        }
        if cmd == Command::Moments && !(exp.x2 >= 0.0 && exp.x2.is_finite()) {
            out.push(format!(
                "x2 must be finite and non-negative, got {}",
                exp.x2
            ));
        }
        if cmd == Command::Lst {
            if exp.alpha.len() != exp.x.len() {
                out.push(format!(
                    "need one alpha per x, got {} alpha and {} x values",
                    exp.alpha.len(),
                    exp.x.len()
                ));
            }
            if let Some(a) = exp.alpha.iter().find(|a| !(**a >= 0.0 && a.is_finite())) {
                out.push(format!(
                    "alpha values must be finite and non-negative, got {a}"
                ));
            }
        }
        if cmd == Command::Crossing {
            out.extend(grid("y", &exp.y));
            if let Some(y) = exp.y.iter().find(|y| **y <= 0.0) {
                out.push(format!("crossing levels must be positive, got {y}"));
            }
            if let Some(top) = exp.y.last() {
                if top.ceil() > exp.s_max as f64 + 1.0 {
                    out.push(format!(
                        "level {top} needs s_max >= {}, got {}",
                        top.ceil() - 1.0,
                        exp.s_max
                    ));
                }
            }
        }
        if matches!(cmd, Command::BusyPeriod | Command::Crossing) && exp.s_max == 0 {
            out.push("s_max must be >= 1".into());
        }
        if cmd.samples() {
            let min = if cmd == Command::Fclt { 2 } else { 1 };
            if exp.reps < min {
                out.push(format!("reps must be >= {min}, got {}", exp.reps));
            }
            if exp.seed.is_none() {
                out.push(format!("a seed is required for {}", cmd.name()));
            }
            if exp.max_events == 0 {
                out.push("max_events must be >= 1".into());
            }
        }
        out
    }

    /// Initial workload for single-model commands; call after `validate`.
    pub fn initial_workload(&self) -> Result<InitialWorkload, CliError> {
        Ok(match &self.model.init {
            InitSpec::Fixed { v } => InitialWorkload::fixed(*v)?,
            InitSpec::Stationary => {
                InitialWorkload::stationary(self.lambda(), self.dist().clone())?
            }
            InitSpec::Law { dist } => InitialWorkload::random(dist.clone()),
        })
    }

    pub fn lambda(&self) -> f64 {
        self.model.lambda.expect("validated config has lambda")
    }

    pub fn dist(&self) -> &ServiceDistribution {
        self.model.dist.as_ref().expect("validated config has dist")
    }
}

fn stability(lambda: f64, dist: &ServiceDistribution) -> Option<String> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Some(format!("lambda must be positive and finite, got {lambda}"));
    }
    let rho = dist.load(&lambda);
    (!(rho < 1.0)).then(|| format!("rho must be < 1, got {rho}"))
}

/// At most one diagnostic per grid.
fn grid(name: &str, values: &[f64]) -> Option<String> {
    if values.is_empty() {
        return Some(format!("{name} grid must not be empty"));
    }
    if let Some(v) = values.iter().find(|v| !(**v >= 0.0 && v.is_finite())) {
        return Some(format!(
            "{name} values must be finite and non-negative, got {v}"
        ));
    }
    if values.windows(2).any(|w| w[1] <= w[0]) {
        return Some(format!(
            "{name} grid must be strictly increasing, got {values:?}"
        ));
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    fn moments_config(rate: f64) -> RunConfig {
        let mut c = RunConfig::new(Command::Moments);
        c.model.lambda = Some(1.2);
        c.model.dist = Some(ServiceDistribution::exponential(rate).unwrap());
        c.experiment.x = vec![1.0];
        c
    }

    #[test]
    fn valid_config_has_no_diagnostics() {
        assert_eq!(moments_config(2.0).validate(), Vec::<String>::new());
    }

    #[test]
    fn unstable_model_is_reported() {
        assert_eq!(
            moments_config(1.0).validate(),
            vec!["rho must be < 1, got 1.2".to_string()]
        );
    }

    #[test]
    fn empty_grid_gives_one_diagnostic() {
        let mut c = moments_config(2.0);
        c.experiment.x.clear();
        assert_eq!(c.validate().len(), 1);
    }

    #[test]
    fn all_violations_are_listed() {
        let mut c = RunConfig::new(Command::Simulate);
        c.experiment.reps = 0;
        let d = c.validate();
        assert!(d.iter().any(|m| m.contains("lambda is required")));
        assert!(d.iter().any(|m| m.contains("dist is required")));
        assert!(d.iter().any(|m| m.contains("x grid")));
        assert!(d.iter().any(|m| m.contains("reps")));
        assert!(d.iter().any(|m| m.contains("seed")));
    }

    #[test]
    fn grids_must_increase() {
        let mut c = moments_config(2.0);
        c.command = Command::Simulate;
        c.experiment.seed = Some(1);
        c.experiment.x = vec![1.0, 1.0];
        assert_eq!(c.validate().len(), 1);
    }

    #[test]
    fn json_round_trip() {
        let mut c = moments_config(2.0);
        c.model.init = InitSpec::Law {
            dist: ServiceDistribution::erlang(2, 3.0).unwrap(),
        };
        let text = serde_json::to_string_pretty(&c).unwrap();
        assert_eq!(RunConfig::from_json(&text).unwrap(), c);
    }

    #[test]
    fn parse_errors_name_the_line() {
        let text = "{\n  \"command\": \"moments\",\n  \"model\": {\"lambda\": 1, \"dist\": {\"type\": \"exponential\", \"rate\": -2}}\n}";
        let err = RunConfig::from_json(text).unwrap_err().to_string();
        assert!(err.contains("line 3"), "{err}");
        let err = RunConfig::from_json("{\"command\": \"moments\", \"bogus\": 1}")
            .unwrap_err()
            .to_string();
        assert!(err.contains("bogus"), "{err}");
    }
}
