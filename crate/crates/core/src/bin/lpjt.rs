use clap::Parser;
use lpjt::cli::{run, Cli};

fn main() {
    std::process::exit(run(Cli::parse()));
}
