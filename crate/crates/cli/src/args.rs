//! Command-line flags, turned into a [`RunConfig`].

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use qel_core::fclt::ScalingEntry;
use qel_core::ServiceDistribution;

use crate::config::{Command, Format, InitSpec, RunConfig};
use crate::error::CliError;

#[derive(Debug, Parser)]
#[command(
    name = "qel",
    version,
    about = "Externalities of the FCFS M/G/1 queue: exact analytics and simulation"
)]
pub struct Cli {
    /// Upper bound on worker threads (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Sub,
}

fn parse_dist(text: &str) -> Result<ServiceDistribution, String> {
    serde_json::from_str(text).map_err(|e| format!("bad distribution JSON: {e}"))
}

fn parse_init_dist(text: &str) -> Result<InitSpec, String> {
    if text.trim() == "stationary" {
        Ok(InitSpec::Stationary)
    } else {
        parse_dist(text).map(|dist| InitSpec::Law { dist })
    }
}

/// A whole scaling sequence given as one JSON argument.
#[derive(Clone, Debug)]
pub struct Sequence(pub Vec<ScalingEntry>);

fn parse_sequence(text: &str) -> Result<Sequence, String> {
    serde_json::from_str(text)
        .map(Sequence)
        .map_err(|e| format!("bad sequence JSON: {e}"))
}

#[derive(Debug, Args)]
pub struct ModelArgs {
    /// Arrival rate λ.
    #[arg(long)]
    pub lambda: f64,
    /// Service law as JSON, e.g. '{"type":"exponential","rate":2}'.
    #[arg(long, value_parser = parse_dist)]
    pub dist: ServiceDistribution,
}

#[derive(Debug, Args)]
pub struct InitArgs {
    /// Fixed initial workload.
    #[arg(long, conflicts_with = "v_dist")]
    pub v: Option<f64>,
    /// Random initial workload: a distribution JSON, or `stationary`.
    #[arg(long, value_parser = parse_init_dist)]
    pub v_dist: Option<InitSpec>,
}

impl InitArgs {
    fn spec(self) -> InitSpec {
        match (self.v, self.v_dist) {
            (_, Some(spec)) => spec,
            (Some(v), None) => InitSpec::Fixed { v },
            (None, None) => InitSpec::default(),
        }
    }
}

#[derive(Debug, Args)]
pub struct SamplingArgs {
    #[arg(long, default_value_t = 10_000)]
    pub reps: usize,
    /// Master seed; falls back to QEL_SEED, then to a logged random seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Event cap per path.
    #[arg(long, default_value_t = qel_core::sim::DEFAULT_MAX_EVENTS)]
    pub max_events: u64,
}

#[derive(Debug, Args)]
pub struct OutputArgs {
    /// Directory for report files (stdout when absent).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Stdout format.
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
}

#[derive(Debug, Subcommand)]
pub enum Sub {
    /// Busy-period count pmf N(s) and moments η_1..η_3.
    BusyPeriod {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, default_value_t = 200)]
        s_max: usize,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Mean, variance, Cov(E(x), E(x + x2)) and correlation for each x.
    Moments {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        init: InitArgs,
        #[arg(long, value_delimiter = ',')]
        x: Vec<f64>,
        #[arg(long, default_value_t = 1.0)]
        x2: f64,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Joint transform E exp{-Σ α_l E(X_l)} at points X_1 < X_2 < ...
    Lst {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        init: InitArgs,
        #[arg(long, value_delimiter = ',')]
        x: Vec<f64>,
        #[arg(long, value_delimiter = ',')]
        alpha: Vec<f64>,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Per-replication externality vectors from the pathwise simulator.
    Simulate {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        init: InitArgs,
        #[arg(long, value_delimiter = ',')]
        x: Vec<f64>,
        #[command(flatten)]
        sampling: SamplingArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Moments of the crossing times of the derivative process (v = 0).
    Crossing {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, value_delimiter = ',')]
        y: Vec<f64>,
        #[arg(long, default_value_t = 200)]
        s_max: usize,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Scaled externalities along a sequence of models against the Gaussian limit.
    Fclt {
        /// JSON list of {"lambda": .., "dist": {..}}.
        #[arg(long, value_parser = parse_sequence)]
        sequence: Sequence,
        #[arg(long, default_value_t = 0.0)]
        v: f64,
        #[arg(long = "x-grid", alias = "x", value_delimiter = ',')]
        x: Vec<f64>,
        #[command(flatten)]
        sampling: SamplingArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Runs a JSON config file.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the config's output directory.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Overrides the config's seed.
        #[arg(long)]
        seed: Option<u64>,
    },
}

fn with_model(command: Command, model: ModelArgs, init: InitSpec, output: OutputArgs) -> RunConfig {
    let mut c = RunConfig::new(command);
    c.model.lambda = Some(model.lambda);
    c.model.dist = Some(model.dist);
    c.model.init = init;
    c.output.path = output.out;
    c.output.format = output.format;
    c
}

fn sampling(c: &mut RunConfig, s: SamplingArgs) {
    c.experiment.reps = s.reps;
    c.experiment.seed = s.seed;
    c.experiment.max_events = s.max_events;
}

impl Sub {
    /// The config this invocation stands for (seed not yet resolved).
    pub fn into_config(self) -> Result<RunConfig, CliError> {
        Ok(match self {
            Sub::BusyPeriod {
                model,
                s_max,
                output,
            } => {
                let mut c = with_model(Command::BusyPeriod, model, InitSpec::default(), output);
                c.experiment.s_max = s_max;
                c
            }
            Sub::Moments {
                model,
                init,
                x,
                x2,
                output,
            } => {
                let mut c = with_model(Command::Moments, model, init.spec(), output);
                c.experiment.x = x;
                c.experiment.x2 = x2;
                c
            }
            Sub::Lst {
                model,
                init,
                x,
                alpha,
                output,
            } => {
                let mut c = with_model(Command::Lst, model, init.spec(), output);
                c.experiment.x = x;
                c.experiment.alpha = alpha;
                c
            }
            Sub::Simulate {
                model,
                init,
                x,
                sampling: s,
                output,
            } => {
                let mut c = with_model(Command::Simulate, model, init.spec(), output);
                c.experiment.x = x;
                sampling(&mut c, s);
                c
            }
            Sub::Crossing {
                model,
                y,
                s_max,
                output,
            } => {
                let mut c = with_model(Command::Crossing, model, InitSpec::default(), output);
                c.experiment.y = y;
                c.experiment.s_max = s_max;
                c
            }
            Sub::Fclt {
                sequence,
                v,
                x,
                sampling: s,
                output,
            } => {
                let mut c = RunConfig::new(Command::Fclt);
                c.sequence = sequence.0;
                c.model.init = InitSpec::Fixed { v };
                c.experiment.x = x;
                sampling(&mut c, s);
                c.output.path = output.out;
                c.output.format = output.format;
                c
            }
            Sub::Run { config, out, seed } => {
                let mut c = RunConfig::from_file(&config)?;
                if out.is_some() {
                    c.output.path = out;
                }
                if seed.is_some() {
                    c.experiment.seed = seed;
                }
                c
            }
        })
    }
}
