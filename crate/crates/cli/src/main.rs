mod args;
mod commands;

use clap::Parser;

fn main() {
    let cli = args::Cli::parse();
    match commands::run(cli.command) {
        Ok(code) => std::process::exit(code),
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(e.exit_code());
        }
    }
}
