//! Encode sampled tensors to codewords, serialize, parse and decode them.
//!
//! cargo run --example typical_codec

use cpdzip::codec::{Codebook, Codeword, Flag};
use cpdzip::sampling::{trial_rng, ModelSampler};
use cpdzip::typicality::TypicalityParams;
use cpdzip::{Alphabet, Budget, Distribution, ModelSpec};

fn main() -> cpdzip::Result<()> {
    let m = ModelSpec::iid(3, 5, 1, Alphabet::signs(), Distribution::from_ratios(&[(3, 4), (1, 4)])?)?;
    let book = Codebook::build(&m, &TypicalityParams::parse("1/2")?, Budget::default())?;
    println!(
        "|M| = {} ({} distinct tensors), ln|M| = {:.4} nats",
        book.size(),
        book.distinct_tensors(),
        book.log_size()
    );
    let sampler = ModelSampler::new(&m);
    let mut fallbacks = 0;
    for trial in 0..20 {
        let t = sampler.sample_tuple(&mut trial_rng(9, trial)).compose();
        let bytes = book.encode(&t)?.to_bytes();
        let cw = Codeword::from_bytes(&bytes)?;
        let back = book.decode(&cw)?;
        let status = match cw.flag {
            Flag::Typical => "typical, recovered exactly",
            Flag::Fallback => {
                fallbacks += 1;
                "fallback"
            }
        };
        assert_eq!(back == t, cw.flag == Flag::Typical || book.fallback() == &t);
        println!("trial {trial:>2}: index {:>5}, {} bytes, {status}", cw.index, bytes.len());
    }
    println!("{fallbacks} of 20 fell back");
    Ok(())
}
