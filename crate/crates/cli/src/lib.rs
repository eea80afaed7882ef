//! Command-line front end for `evoimage-core`.
//!
//! Exit status: 0 on success, 1 on usage or configuration errors, 2 on I/O
//! errors.

pub mod analyze;
pub mod args;
pub mod config;
pub mod error;
pub mod imageio;
pub mod run;
pub mod synth;

use std::ffi::OsString;

use clap::error::ErrorKind;
use clap::Parser;

use crate::args::{Cli, Command};
pub use crate::error::CliError;

pub fn dispatch(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Transition(args) => run::execute(&run::resolve_transition(args)?).map(|_| ()),
        Command::Paint(args) => run::execute(&run::resolve_paint(args)?).map(|_| ()),
        Command::Analyze(args) => analyze::analyze(&args.frames, args.out.as_deref()),
        Command::Synth(args) => synth::synth(args.kind),
    }
}

/// Parses `argv`, runs the command and returns the process exit status.
pub fn main_with_args<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
        }
    };
    match dispatch(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("evoimage: {e}");
            e.exit_code()
        }
    }
}
