//! Run a grid experiment from a config file and print the CSV.
//!
//! cargo run --example run_experiment -- configs/threshold.json

use cpdzip::experiment::{run_experiment, ExperimentConfig};

fn main() -> cpdzip::Result<()> {
    let path = std::env::args()
        .nth(1)
        .unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/configs/threshold.json").into());
    let cfg = ExperimentConfig::load(&path)?;
    let result = run_experiment(&cfg)?;
    if let Some(dir) = cfg.csv_path().parent() {
        std::fs::create_dir_all(dir)?;
    }
    let (csv, _) = result.write()?;
    print!("{}", std::fs::read_to_string(&csv)?);
    Ok(())
}
