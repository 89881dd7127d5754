//! Per-n codebook length against the entropy threshold for a rank-one model.
//!
//! cargo run --example entropy_threshold

use cpdzip::codec::measure_scheme;
use cpdzip::model::{Alphabet, Distribution, ModelSpec};
use cpdzip::typicality::TypicalityParams;
use cpdzip::Budget;

fn main() -> cpdzip::Result<()> {
    let skewed = Distribution::from_ratios(&[(3, 4), (1, 4)])?;
    let gamma = TypicalityParams::parse("1/10")?;
    println!("{:>3} {:>10} {:>12} {:>12} {:>12}", "n", "|M|", "ln|M|/n", "sum H", "bound/n");
    for n in 2..=6 {
        let m = ModelSpec::iid(3, n, 1, Alphabet::signs(), skewed.clone())?;
        let r = measure_scheme(&m, &gamma, Budget::default())?;
        println!(
            "{n:>3} {:>10} {:>12.6} {:>12.6} {:>12.6}",
            r.codebook_size,
            r.threshold_per_n,
            r.entropy_threshold,
            r.nats_bound / n as f64
        );
    }
    Ok(())
}
