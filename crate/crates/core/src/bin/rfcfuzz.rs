use clap::Parser;

use rfcfuzz_core::cli::{run, Cli};

fn main() {
    let cli = Cli::parse();
    if let Err(err) = run(cli) {
        eprintln!("rfcfuzz: {err}");
        std::process::exit(err.exit_code());
    }
}
