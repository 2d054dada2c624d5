use std::process::ExitCode;

use clap::Parser;
use xorsat_lab::{ExperimentConfig, Status};

fn main() -> ExitCode {
    let flags = ExperimentConfig::parse();
    let result = ExperimentConfig::resolve(flags).and_then(|cfg| xorsat_lab::run(&cfg));
    match result {
        Ok(Status::Ok) => ExitCode::SUCCESS,
        Ok(status @ Status::Breach(_)) => {
            if let Status::Breach(why) = &status {
                eprintln!("invariant breach: {why}");
            }
            ExitCode::from(status.exit_code())
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
