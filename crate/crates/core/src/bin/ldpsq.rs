use std::process::ExitCode;

use clap::{CommandFactory, FromArgMatches};
use ldpsq::experiment::{output_dir, resolve, Cli};
use ldpsq::Error;

const EXIT_ERROR: u8 = 1;
const EXIT_REFUSED: u8 = 2;
const EXIT_CHECK_FAILED: u8 = 3;

fn fail(e: &Error) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(if e.is_refusal() { EXIT_REFUSED } else { EXIT_ERROR })
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let matches = match Cli::command().try_get_matches() {
        Ok(m) => m,
        Err(e) => {
            // help and version go to stdout with status 0
            let code = if e.use_stderr() { EXIT_ERROR } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let cli = Cli::from_arg_matches(&matches).expect("matches come from this parser");
    let text = match cli.config.as_deref().map(std::fs::read_to_string).transpose() {
        Ok(t) => t,
        Err(e) => return fail(&e.into()),
    };
    let cfg = match resolve(&matches, text.as_deref()) {
        Ok(c) => c,
        Err(e) => return fail(&e),
    };
    let art = match cfg.run() {
        Ok(a) => a,
        Err(e) => return fail(&e),
    };
    let dir = output_dir(cli.out.as_deref());
    match art.write(&dir) {
        Ok(files) => {
            println!("{}", art.summary);
            for f in files {
                println!("wrote {}", f.display());
            }
        }
        Err(e) => return fail(&e),
    }
    if let Some(check) = &art.check {
        println!("check: {} ({})", if check.passed { "pass" } else { "FAIL" }, check.detail);
        if cli.check && !check.passed {
            return ExitCode::from(EXIT_CHECK_FAILED);
        }
    }
    ExitCode::SUCCESS
}
