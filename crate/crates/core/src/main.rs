use clap::Parser;

fn main() {
    let cli = kbbm_core::cli::Cli::parse();
    std::process::exit(kbbm_core::cli::run(cli));
}
