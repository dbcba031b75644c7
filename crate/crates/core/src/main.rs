use clap::Parser;

fn main() {
    let cli = dp_coalitions::cli::Cli::parse();
    if let Err(e) = dp_coalitions::cli::run(&cli) {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}
