//! Exact rank-deficiency probability beside its geometric bound and a Monte-Carlo estimate.
//!
//! cargo run --example full_rank_bound

use cpdzip::analysis::{exact_rank_deficiency_prob, full_rank_prob_bound};
use cpdzip::rational::{format, to_f64};
use cpdzip::sampling::estimate_full_rank_prob;
use cpdzip::{Alphabet, Budget, Distribution, ModelSpec};

fn main() -> cpdzip::Result<()> {
    let d = Distribution::from_ratios(&[(3, 4), (1, 4)])?;
    for n in 2..=6 {
        let m = ModelSpec::iid(2, n, 2, Alphabet::signs(), d.clone())?;
        let exact = exact_rank_deficiency_prob(&m, 0, Budget::default())?;
        let bound = full_rank_prob_bound(&m)?;
        let est = estimate_full_rank_prob(&m, 20_000, 3)[0];
        println!(
            "n={n}: Pr(rank < 2) = {} ({:.5}) <= zeta = {:.5}; MC full rank {:.4} +- {:.4}",
            format(&exact),
            to_f64(&exact),
            bound.zeta_per_mode[0],
            est.estimate,
            est.stderr
        );
    }
    Ok(())
}
