use clap::Parser;

fn main() {
    let cli = rig_cli::Cli::parse();
    match rig_cli::run(cli) {
        Ok(text) => print!("{text}"),
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(e.exit_code());
        }
    }
}
