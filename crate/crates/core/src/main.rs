use clap::Parser;

fn main() -> anyhow::Result<()> {
    streamcode::cli::run(streamcode::cli::Cli::parse())
}
