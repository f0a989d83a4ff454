mod args;
mod output;
mod run;

use clap::Parser;
use std::io::{IsTerminal, Write};
use std::process::ExitCode;
use std::time::Instant;

fn main() -> ExitCode {
    let cli = match args::Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let style = output::Style { color: std::env::var_os("NO_COLOR").is_none() && std::io::stderr().is_terminal() };
    let start = Instant::now();
    let mut err = std::io::stderr().lock();

    let report = match run::run(&cli) {
        Ok(r) => r,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return ExitCode::from(e.exit_code());
        }
    };
    let bytes = match output::render(&report, cli.format) {
        Ok(b) => b,
        Err(e) => {
            let _ = writeln!(err, "error: cannot encode output: {e}");
            return ExitCode::from(2);
        }
    };
    let written = match &cli.out {
        Some(path) => std::fs::write(path, &bytes),
        None => std::io::stdout().lock().write_all(&bytes),
    };
    if let Err(e) = written {
        let _ = writeln!(err, "error: cannot write output: {e}");
        return ExitCode::from(2);
    }
    let _ = output::summary(&mut err, &report, &style);
    // wall time stays out of the report so reruns are byte-identical
    let _ = writeln!(err, "elapsed: {:.2?}", start.elapsed());
    if report.all_pass() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}
