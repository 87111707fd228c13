use clap::Parser;

fn main() {
    let cli = ocp_rom::cli::Cli::parse();
    std::process::exit(ocp_rom::cli::run(cli));
}
