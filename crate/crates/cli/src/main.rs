use clap::Parser;

fn main() {
    let cli = cvclone_cli::args::Cli::parse();
    std::process::exit(cvclone_cli::run(&cli));
}
