//! Exact rank, Kruskal rank, and the Kruskal uniqueness condition.
//!
//! cargo run --example kruskal_rank

use cpdzip::tensor::{kruskal_rank, rank_exact, FactorMatrix, FactorTuple, RationalMatrix};
use cpdzip::Alphabet;

fn main() -> cpdzip::Result<()> {
    // rank 2 but two equal columns, so k-rank 1
    let m = RationalMatrix::from_ints(3, 3, &[1, 1, 0, 1, 1, 1, 0, 0, 1])?;
    println!("rank {} k-rank {}", rank_exact(&m), kruskal_rank(&m));

    let x = |mode, rows: &[&[i64]]| FactorMatrix::from_int_rows(mode, Alphabet::signs(), rows);
    let tuple = FactorTuple::new(vec![
        x(0, &[&[1, 1], &[1, -1], &[-1, 1]])?,
        x(1, &[&[1, -1], &[1, 1], &[-1, -1]])?,
        x(2, &[&[-1, 1], &[1, 1], &[1, -1]])?,
    ])?;
    let ks: Vec<usize> = tuple.matrices().iter().map(|x| x.kruskal_rank()).collect();
    println!(
        "k-ranks {ks:?}, sum {} vs 2R + N - 1 = {}: unique = {}",
        ks.iter().sum::<usize>(),
        2 * tuple.components() + tuple.order() - 1,
        tuple.kruskal_condition()?
    );
    Ok(())
}
