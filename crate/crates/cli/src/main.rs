use clap::Parser;

fn main() {
    let cli = dstc_sim::Cli::parse();
    std::process::exit(dstc_sim::run(cli));
}
