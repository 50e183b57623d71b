//! `scenrep`: scenario generation and representativeness experiments.

mod args;
mod run;

use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;

use args::Cli;

const INPUT_ERROR: u8 = 1;
const INTERNAL_ERROR: u8 = 2;

/// One machine-parsable line: `scenrep: error kind=<kind> exit=<code> msg=<json string>`.
fn diagnostic(kind: &str, code: u8, msg: &str) {
    let msg = serde_json::to_string(msg).unwrap_or_else(|_| "\"\"".into());
    eprintln!("scenrep: error kind={kind} exit={code} msg={msg}");
}

fn configure_threads() -> Result<(), String> {
    let Ok(raw) = std::env::var("SCENREP_THREADS") else { return Ok(()) };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| format!("SCENREP_THREADS must be a positive integer, got `{raw}`"))?;
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| e.to_string())
}

fn main() -> ExitCode {
    std::panic::set_hook(Box::new(|info| {
        diagnostic("panic", INTERNAL_ERROR, &info.to_string());
        std::process::exit(INTERNAL_ERROR.into());
    }));

    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let text = e.render().to_string();
            let first = text.lines().next().unwrap_or("invalid arguments");
            diagnostic("usage", INPUT_ERROR, first.trim_start_matches("error: "));
            return ExitCode::from(INPUT_ERROR);
        }
    };
    if let Err(msg) = configure_threads() {
        diagnostic("invalid_argument", INPUT_ERROR, &msg);
        return ExitCode::from(INPUT_ERROR);
    }
    eprintln!("scenrep: seed={}", cli.common.seed);

    match run::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let code = if e.is_input_error() { INPUT_ERROR } else { INTERNAL_ERROR };
            diagnostic(e.kind(), code, &e.to_string());
            ExitCode::from(code)
        }
    }
}
