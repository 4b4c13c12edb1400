use clap::Parser;

fn main() {
    let cli = hedgebound_cli::Cli::parse();
    std::process::exit(hedgebound_cli::run(cli));
}
