use std::process::ExitCode;

use clap::Parser;
use resetq_cli::cli::Cli;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match resetq_cli::run(&cli) {
        Ok(report) => {
            for line in &report.lines {
                println!("{line}");
            }
            if report.flagged > 0 {
                eprintln!("numeric failure: {} flagged points", report.flagged);
                ExitCode::from(3)
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
