use clap::error::ErrorKind;
use clap::Parser;
use costvalley::cli::{run, Cli};
use costvalley::{CliError, ExitCode};

fn main() -> std::process::ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            let _ = e.print();
            return std::process::ExitCode::SUCCESS;
        }
        Err(e) => {
            let _ = e.print();
            let err = CliError::Usage(e.kind().to_string());
            eprintln!("{}", err.record());
            return std::process::ExitCode::from(ExitCode::Usage as u8);
        }
    };
    match run(cli) {
        Ok(()) => std::process::ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("{}", err.record());
            std::process::ExitCode::from(err.exit_code() as u8)
        }
    }
}
