//! Command-line pipeline (`ingest`, `build`, `suggest`, `eval`) and the HTTP
//! service (`serve`) on top of `qsuggest-core`.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error, 3 I/O error.

use std::ffi::OsString;
use std::io::Write;
use std::sync::Arc;

use clap::Parser;

pub mod args;
pub mod commands;
mod error;
pub mod render;
pub mod service;

pub use error::CliError;

use args::{Cli, Command, EvalCommand};

/// Parses `argv` and runs the command; returns the process exit code.
pub fn run<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                let _ = write!(err, "{text}");
                1
            } else {
                let _ = write!(out, "{text}");
                CliError::SUCCESS
            };
        }
    };
    match dispatch(cli.command, out) {
        Ok(()) => CliError::SUCCESS,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

fn dispatch(command: Command, out: &mut dyn Write) -> Result<(), CliError> {
    match command {
        Command::Ingest(a) => commands::cmd_ingest(&a, out).map(drop),
        Command::Build(a) => commands::cmd_build(&a, out).map(drop),
        Command::Suggest(a) => commands::cmd_suggest(&a, out).map(drop),
        Command::Eval(EvalCommand::Sample(a)) => commands::cmd_eval_sample(&a, out),
        Command::Eval(EvalCommand::Aggregate(a)) => commands::cmd_eval_aggregate(&a, out).map(drop),
        Command::Serve(a) => {
            let (engine, built) = match commands::open_artifacts(&a.artifacts) {
                Ok(loaded) => {
                    let opts = loaded.manifest.settings.options;
                    (Some(Arc::new(loaded)), opts)
                }
                Err(e) => {
                    log::error!("{e}; answering 503 until restarted with valid artifacts");
                    (None, Default::default())
                }
            };
            let opts = commands::resolve_options(&a.options, built)?;
            let config = service::ServeConfig {
                bind: a.bind,
                artifacts: a.artifacts.clone(),
                k: opts.k,
                m: opts.m,
                enrich_long_tail: opts.enrich_long_tail,
                request_log: a.request_log,
            };
            let runtime = tokio::runtime::Builder::new_multi_thread()
                .enable_all()
                .build()
                .map_err(|e| CliError::Io(format!("cannot start runtime: {e}")))?;
            runtime
                .block_on(service::serve(config, engine))
                .map_err(|e| CliError::Io(format!("{}: {e}", a.bind)))
        }
    }
}
