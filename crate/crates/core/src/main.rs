use std::io::{self, Write};

use clap::Parser;
use infowar_core::cli::{self, Cli};

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let stdin = io::stdin();
    let mut input = stdin.lock();
    let mut stdout = io::stdout();
    let mut stderr = io::stderr();
    let code = cli::run(&cli, &mut input, &mut stdout, &mut stderr);
    stdout.flush().ok();
    std::process::exit(code);
}
