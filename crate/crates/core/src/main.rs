use clap::Parser;

fn main() {
    let cli = sigma_align::cli::Cli::parse();
    std::process::exit(sigma_align::cli::run(cli));
}
