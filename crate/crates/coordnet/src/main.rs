use clap::Parser;

fn main() {
    let cli = coordnet::cli::Cli::parse();
    if let Err(err) = coordnet::cli::run(cli) {
        eprintln!("error: {err:#}");
        std::process::exit(1);
    }
}
