//! Concentration of the normalized log-likelihood around the entropy sum.
//!
//! cargo run --release --example information_spectrum

use cpdzip::model::theoretical_threshold;
use cpdzip::typicality::{spectrum_samples, summarize};
use cpdzip::{Alphabet, Distribution, ModelSpec};

fn main() -> cpdzip::Result<()> {
    let m = ModelSpec::iid(3, 8, 2, Alphabet::signs(), Distribution::from_ratios(&[(3, 4), (1, 4)])?)?;
    println!("sum H = {:.6} nats", theoretical_threshold(&m));
    for n in [8, 16, 32, 64] {
        let s = summarize(&spectrum_samples(&m.with_dim(n)?, 10_000, 5));
        println!(
            "n={n:>2}: mean {:.6} +- {:.6}, variance {:.6}, n*variance {:.4}",
            s.mean,
            s.stderr,
            s.variance,
            n as f64 * s.variance
        );
    }
    Ok(())
}
