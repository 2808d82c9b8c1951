//! Batch front-end for the teleportation simulator.
//!
//! Exit codes: 0 — run completed and every check passed; 1 — a
//! verification property failed; 2 — configuration or I/O error.

mod config;
mod modes;
mod report;

fn main() {
    let code = match config::load().and_then(|cfg| modes::run(&cfg)) {
        Ok(code) => code,
        Err(error) => {
            eprintln!("error: {error:#}");
            2
        }
    };
    std::process::exit(code);
}
