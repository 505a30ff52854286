use std::io::Write;
use std::process::ExitCode;

use clap::Parser;
use qhyp::cli::{run, Args, EXIT_MALFORMED};

fn main() -> ExitCode {
    let args = Args::parse();
    if let Ok(v) = std::env::var("QHYP_THREADS") {
        match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
            _ => {
                eprintln!("error: QHYP_THREADS must be a positive integer, got {v:?}");
                return ExitCode::from(EXIT_MALFORMED as u8);
            }
        }
    }
    match run(&args) {
        Ok(out) => {
            let _ = std::io::stdout().write_all(out.as_bytes());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code as u8)
        }
    }
}
