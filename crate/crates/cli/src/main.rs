use std::io::Write;
use std::process::ExitCode;
use std::time::Instant;

use clap::Parser;

use formsys_cli::args::Cli;
use formsys_cli::commands;
use formsys_cli::report::validate;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let common = cli.command.common();
    if let Some(w) = common.workers {
        if w == 0 {
            eprintln!("error: --workers must be positive");
            return ExitCode::from(1);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(w).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    let start = Instant::now();
    let mut report = match commands::run(&cli.command) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };
    if common.timing {
        report.elapsed_ms = Some(start.elapsed().as_secs_f64() * 1e3);
    }
    let json = report.to_json();
    if let Err(e) = validate(&json) {
        eprintln!("internal error: report does not match the schema: {e}");
        return ExitCode::from(2);
    }
    let mut out = std::io::stdout().lock();
    let text = serde_json::to_string_pretty(&json).expect("report serializes");
    if writeln!(out, "{text}").is_err() {
        return ExitCode::from(1);
    }
    ExitCode::from(report.status.exit_code())
}
