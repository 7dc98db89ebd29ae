use clap::Parser;
use wimc::cli::{self, Cli};

fn main() {
    // usage errors share the input-error code; 2 is reserved for R1 violations
    let cli = Cli::try_parse().unwrap_or_else(|e| {
        let code = if e.use_stderr() { cli::EXIT_INPUT } else { cli::EXIT_OK };
        let _ = e.print();
        std::process::exit(code);
    });
    cli::configure_threads();
    let code = cli::run(&cli, &mut std::io::stdout().lock(), &mut std::io::stderr().lock());
    std::process::exit(code);
}
