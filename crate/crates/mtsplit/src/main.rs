use std::io::{Read, Write};
use std::process::ExitCode;

use clap::Parser;
use mtsplit::cli::{run, CliConfig, EXIT_INVALID};

fn main() -> ExitCode {
    let config = CliConfig::parse();
    let mut input = Vec::new();
    if config.command.reads_input() {
        let read = match config.command.input_path() {
            Some(path) => std::fs::read(path).map(|bytes| input = bytes),
            None => std::io::stdin().read_to_end(&mut input).map(|_| ()),
        };
        if let Err(e) = read {
            eprintln!("error: cannot read input: {e}");
            return ExitCode::from(EXIT_INVALID as u8);
        }
    }
    let out = run(&config, &input);
    // Write failures (e.g. a closed pipe) leave nothing useful to report.
    let _ = std::io::stdout().write_all(&out.stdout);
    let _ = std::io::stderr().write_all(&out.stderr);
    ExitCode::from(out.code as u8)
}
