//! Front end for `qel-core`: a JSON-serialisable [`RunConfig`], validation,
//! dispatch to the library and CSV/JSON report emission.

pub mod args;
pub mod config;
pub mod error;
pub mod run;

pub use config::{Command, Format, InitSpec, RunConfig};
pub use error::CliError;
pub use run::{emit, resolve_seed, run, Report};

/// Resolves, validates, runs and emits one invocation.
pub fn execute(cli: args::Cli) -> Result<(), CliError> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build_global()
            .map_err(|e| CliError::Config(format!("cannot size the thread pool: {e}")))?;
    }
    let mut config = cli.command.into_config()?;
    resolve_seed(&mut config)?;
    let report = run(&config)?;
    emit(&report, &config, &mut std::io::stdout().lock())
}
