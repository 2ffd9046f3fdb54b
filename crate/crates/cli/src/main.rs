use std::process::ExitCode;

use clap::Parser;

fn main() -> ExitCode {
    let cli = match rotcocycle_cli::Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let usage = e.use_stderr();
            let _ = e.print();
            return ExitCode::from(if usage { rotcocycle_cli::EXIT_USAGE as u8 } else { 0 });
        }
    };
    ExitCode::from(rotcocycle_cli::run(cli) as u8)
}
