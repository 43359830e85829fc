use clap::Parser;

use optorouter::cli_io::{self, Cli};

fn main() {
    let cli = Cli::parse();
    if let Err(err) = cli_io::run(&cli) {
        eprintln!("error: {err}");
        std::process::exit(err.exit_code());
    }
}
