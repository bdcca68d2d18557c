use std::io::Write;
use std::process::ExitCode;

use clap::Parser;
use coopfront_cli::app::{execute, report_failure, Cli};

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(outcome) => {
            let text = serde_json::to_string_pretty(&outcome.output).expect("json output");
            // a closed pipe on stdout is not a failure of the command
            let _ = writeln!(std::io::stdout().lock(), "{text}");
            ExitCode::from(outcome.exit_code)
        }
        Err((failure, dir)) => ExitCode::from(report_failure(&failure, dir.as_deref())),
    }
}
