use std::process::ExitCode;

use clap::Parser;
use game_cli::commands::{error_line, execute, set_quiet, Cli};
use game_cli::CliError;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            eprint!("{e}");
            let err = CliError::Usage(e.kind().to_string());
            print!("{}", error_line(&err));
            return ExitCode::from(err.code() as u8);
        }
    };
    set_quiet(cli.quiet);
    match execute(cli.command) {
        Ok(status) => {
            print!("{}", status.render());
            if status.violations.is_empty() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(3)
            }
        }
        Err(e) => {
            eprintln!("{e}");
            print!("{}", error_line(&e));
            ExitCode::from(e.code() as u8)
        }
    }
}
