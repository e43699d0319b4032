use std::process::ExitCode;

use clap::Parser;
use qellip_cli::{cli, Cli};

fn main() -> ExitCode {
    let args = Cli::parse();
    let result = cli::run(&args.command).and_then(|out| {
        cli::emit(args.command.out(), &out.body)?;
        Ok(out.code)
    });
    match result {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("qellip: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
