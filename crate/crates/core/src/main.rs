use std::process::ExitCode;

use clap::Parser;
use kinkwire::cli::{run, Cli, Failure};

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            // --help / --version
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let failure = Failure {
                stage: "args".into(),
                detail: e.to_string().trim().to_string(),
                code: 1,
            };
            eprintln!("{}", failure.to_json());
            return ExitCode::from(1);
        }
    };
    match run(&cli) {
        Ok(outcome) => {
            for line in &outcome.lines {
                println!("{line}");
            }
            ExitCode::from(outcome.code)
        }
        Err(failure) => {
            eprintln!("{}", failure.to_json());
            ExitCode::from(failure.code)
        }
    }
}
