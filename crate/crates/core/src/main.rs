use clap::Parser;

use fracdeg::cli::{error_exit_code, run, Cli, EXIT_FAILURE};

fn main() {
    let cli = Cli::parse();
    if let Some(threads) = std::env::var("FRACDEG_THREADS").ok().and_then(|v| v.parse::<usize>().ok()) {
        if threads > 0 {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
        }
    }
    let cfg = match cli.resolve() {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(EXIT_FAILURE);
        }
    };
    match run(&cfg) {
        Ok(outcome) => {
            for (name, pass, value) in &outcome.checks {
                println!("{} {name} ({value:.3e})", if *pass { "PASS" } else { "FAIL" });
            }
            std::process::exit(outcome.exit_code());
        }
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(error_exit_code(&e));
        }
    }
}
