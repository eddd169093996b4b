use clap::Parser;
use std::process::ExitCode;

fn main() -> ExitCode {
    let cli = symdesk::Cli::parse();
    match symdesk::run(&cli) {
        Ok(report) => {
            eprint!("{}", report.summary());
            ExitCode::from(report.exit_code() as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
