use std::process::ExitCode;

use clap::Parser;
use pcqc_cli::cli::{run, Args};

fn main() -> ExitCode {
    let args = Args::parse();
    match run(&args) {
        Ok(session) => {
            if !args.quiet {
                print!("{}", session.report.as_str());
                for p in &session.written {
                    println!("wrote {}", p.display());
                }
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
