mod cli;

use clap::Parser;

fn main() {
    let args = cli::Cli::parse();
    if let Err(e) = cli::run(args) {
        eprintln!("{}", e.to_json());
        std::process::exit(e.exit_code());
    }
}
