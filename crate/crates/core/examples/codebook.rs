//! Rank and unrank supports in the enumerative codebook: all subsets of size
//! at most k', ordered by size and then colexicographically.
//!
//! cargo run --example codebook

use num_bigint::BigUint;
use rtopk::codec::{codebook_size, Codebook};

fn main() -> rtopk::Result<()> {
    let book = Codebook::new(4, 2);
    println!("d=4, k'=2: {} codewords", book.size());
    let mut r = BigUint::from(0u8);
    while &r < book.size() {
        println!("  {r:>2} <-> {:?}", book.unrank(&r)?);
        r += 1u8;
    }

    // Large codebooks switch to arbitrary precision transparently.
    let big = Codebook::new(1000, 30);
    let support: Vec<usize> = (0..30).map(|i| i * 33).collect();
    let rank = big.rank(&support)?;
    assert_eq!(big.unrank(&rank)?, support);
    println!("d=1000, k'=30: {} bits per rank, round trip ok", codebook_size(1000, 30).bits());
    Ok(())
}
