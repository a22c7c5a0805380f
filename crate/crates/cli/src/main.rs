use std::io::{self, Write};
use std::process::ExitCode;

use clap::Parser;
use subgraph_space_cli::commands::{run, Cli};
use subgraph_space_cli::error_line;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let stdout = io::stdout();
    let mut out = io::BufWriter::new(stdout.lock());
    let mut err = io::stderr();
    let result = run(cli, &mut out, &mut err).and_then(|()| Ok(out.flush()?));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let _ = out.flush();
            let _ = writeln!(err, "{}", error_line(&e));
            ExitCode::FAILURE
        }
    }
}
