use clap::Parser;
use nil_cli::{run, Cli};

fn main() {
    let cli = Cli::parse();
    let code = match run(cli).and_then(|o| o.emit().map(|()| o.exit_code())) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("nil: {e}");
            e.exit_code()
        }
    };
    std::process::exit(code);
}
