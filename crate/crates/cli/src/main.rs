use clap::Parser;

use oqc_cli::{error_exit_code, execute, render_report, schema_text, Cli};

fn main() {
    let cli = Cli::parse();

    if let Some(name) = &cli.schema {
        match schema_text(name) {
            Some(text) => {
                println!("{}", text);
                std::process::exit(0);
            }
            None => {
                eprintln!(
                    "unknown schema {:?}; available: orbifold, correlators, potentials, fm, transform, hlpair",
                    name
                );
                std::process::exit(2);
            }
        }
    }

    match execute(&cli) {
        Ok(report) => {
            let text = render_report(&report, cli.table);
            match &cli.out {
                Some(path) => {
                    if let Err(e) = std::fs::write(path, text) {
                        eprintln!("cannot write {}: {}", path.display(), e);
                        std::process::exit(1);
                    }
                }
                None => println!("{}", text),
            }
            std::process::exit(if report.all_pass() { 0 } else { 1 });
        }
        Err(e) => {
            eprintln!("error: {}", e);
            std::process::exit(error_exit_code(&e));
        }
    }
}
