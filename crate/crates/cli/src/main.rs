use std::io::{self, Write};
use std::process::ExitCode;

use clap::Parser;
use g2t_cli::{run, Cli};

fn main() -> ExitCode {
    let cli = Cli::parse();
    let stdin = io::stdin();
    let stdout = io::stdout();
    let mut out = stdout.lock();
    let result = run(&cli, &mut stdin.lock(), &mut out);
    let _ = out.flush();
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("g2t: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
