use clap::Parser;

fn main() {
    let cli = dynjsq::Cli::parse();
    if let Err(e) = dynjsq::run(cli, &mut std::io::stdout().lock()) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
