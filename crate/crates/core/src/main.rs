use clap::Parser;

fn main() {
    let args = covtrans::cli::Args::parse();
    std::process::exit(covtrans::cli::main_with_args(args));
}
