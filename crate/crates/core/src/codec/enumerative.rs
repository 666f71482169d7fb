//! Enumerative codebook for binary vectors of length `d` with at most `k'`
//! ones.
//!
//! Codewords are ordered by popcount first, then colexicographically by
//! support within each popcount class. The rank of a support
//! `s₀ < s₁ < … < s_{m-1}` is therefore
//!
//! ```text
//! Σ_{j<m} C(d, j)  +  Σ_i C(sᵢ, i + 1)
//! ```
//!
//! Ranks use `u128` arithmetic whenever the whole codebook fits, and
//! arbitrary precision otherwise.

use std::ops::{AddAssign, SubAssign};

use num_bigint::BigUint;
use num_traits::{ToPrimitive, Zero};

use crate::error::{Error, Result};

/// Number of codewords with at most `kprime` ones: `Σ_{j≤kprime} C(d, j)`.
pub fn codebook_size(d: usize, kprime: usize) -> BigUint {
    let mut term = BigUint::from(1u8);
    let mut total = term.clone();
    for j in 0..kprime.min(d) {
        term = term * BigUint::from(d - j) / BigUint::from(j + 1);
        total += &term;
    }
    total
}

trait Word: Clone + Ord + Zero + for<'a> AddAssign<&'a Self> + for<'a> SubAssign<&'a Self> {}
impl<T> Word for T where T: Clone + Ord + Zero + for<'a> AddAssign<&'a T> + for<'a> SubAssign<&'a T> {}

/// Pascal table `C(c, i)` for `c ≤ d`, `i ≤ kprime`, plus class offsets.
#[derive(Debug, Clone)]
struct Table<T> {
    width: usize,
    binom: Vec<T>,
    /// `offsets[m] = Σ_{j<m} C(d, j)`, for `m = 0..=kprime + 1`.
    offsets: Vec<T>,
}

impl<T: Word + From<u8>> Table<T> {
    fn build(d: usize, kprime: usize) -> Self {
        let width = kprime + 1;
        let mut binom = vec![T::zero(); (d + 1) * width];
        for c in 0..=d {
            binom[c * width] = T::from(1u8);
            for i in 1..=kprime.min(c) {
                let mut v = binom[(c - 1) * width + i - 1].clone();
                v += &binom[(c - 1) * width + i];
                binom[c * width + i] = v;
            }
        }
        let mut offsets = Vec::with_capacity(kprime + 2);
        let mut acc = T::zero();
        offsets.push(acc.clone());
        for j in 0..=kprime {
            acc += &binom[d * width + j];
            offsets.push(acc.clone());
        }
        Self { width, binom, offsets }
    }

    fn binom(&self, c: usize, i: usize) -> &T {
        &self.binom[c * self.width + i]
    }

    #[cfg(test)]
    fn size(&self) -> &T {
        self.offsets.last().expect("offsets are never empty")
    }

    fn rank(&self, support: &[usize]) -> T {
        let mut r = self.offsets[support.len()].clone();
        for (i, &s) in support.iter().enumerate() {
            r += self.binom(s, i + 1);
        }
        r
    }

    /// Popcount class of an in-range rank.
    fn class_of(&self, rank: &T) -> usize {
        // offsets is strictly increasing; the class is the last offset <= rank.
        self.offsets.partition_point(|o| o <= rank) - 1
    }

    fn unrank(&self, rank: &T, d: usize) -> Vec<usize> {
        let m = self.class_of(rank);
        let mut r = rank.clone();
        r -= &self.offsets[m];
        let mut out = Vec::with_capacity(m);
        // Elements are recovered from the largest down; `hi` bounds the next one.
        let mut hi = d;
        for i in (1..=m).rev() {
            // Largest c in [i-1, hi) with C(c, i) <= r. C(i-1, i) = 0 so the
            // search always succeeds.
            let (mut lo, mut up) = (i - 1, hi);
            while up - lo > 1 {
                let mid = lo + (up - lo) / 2;
                if self.binom(mid, i) <= &r {
                    lo = mid;
                } else {
                    up = mid;
                }
            }
            r -= self.binom(lo, i);
            out.push(lo);
            hi = lo;
        }
        out.reverse();
        out
    }
}

#[derive(Debug, Clone)]
enum Backing {
    Small(Table<u128>),
    Big(Table<BigUint>),
}

/// Bijection between supports of size `≤ kprime` in `[0, d)` and
/// `[0, codebook_size(d, kprime))`.
#[derive(Debug, Clone)]
pub struct Codebook {
    d: usize,
    kprime: usize,
    size: BigUint,
    backing: Backing,
}

impl Codebook {
    pub fn new(d: usize, kprime: usize) -> Self {
        let kprime = kprime.min(d);
        let size = codebook_size(d, kprime);
        let backing = if size.bits() <= 127 {
            Backing::Small(Table::build(d, kprime))
        } else {
            Backing::Big(Table::build(d, kprime))
        };
        Self { d, kprime, size, backing }
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn kprime(&self) -> usize {
        self.kprime
    }

    pub fn size(&self) -> &BigUint {
        &self.size
    }

    fn check_support(&self, support: &[usize]) -> Result<()> {
        if support.len() > self.kprime {
            return Err(Error::TooManyOnes { ones: support.len(), kprime: self.kprime });
        }
        if support.windows(2).any(|w| w[0] >= w[1]) || support.last().is_some_and(|&s| s >= self.d) {
            return Err(Error::InvalidArgument(format!(
                "support must be strictly increasing indices below d={}",
                self.d
            )));
        }
        Ok(())
    }

    pub fn rank(&self, support: &[usize]) -> Result<BigUint> {
        self.check_support(support)?;
        Ok(match &self.backing {
            Backing::Small(t) => BigUint::from(t.rank(support)),
            Backing::Big(t) => t.rank(support),
        })
    }

    pub fn unrank(&self, rank: &BigUint) -> Result<Vec<usize>> {
        if rank >= &self.size {
            return Err(Error::RankOutOfRange { size: self.size.to_string() });
        }
        Ok(match &self.backing {
            Backing::Small(t) => t.unrank(&rank.to_u128().expect("rank below a 127-bit size"), self.d),
            Backing::Big(t) => t.unrank(rank, self.d),
        })
    }

    /// Popcount of the codeword with this rank.
    pub fn class_of(&self, rank: &BigUint) -> Result<usize> {
        if rank >= &self.size {
            return Err(Error::RankOutOfRange { size: self.size.to_string() });
        }
        Ok(match &self.backing {
            Backing::Small(t) => t.class_of(&rank.to_u128().expect("rank below a 127-bit size")),
            Backing::Big(t) => t.class_of(rank),
        })
    }

    #[cfg(test)]
    fn is_small(&self) -> bool {
        matches!(self.backing, Backing::Small(_))
    }

    #[cfg(test)]
    fn force_big(d: usize, kprime: usize) -> Self {
        let kprime = kprime.min(d);
        Self { d, kprime, size: codebook_size(d, kprime), backing: Backing::Big(Table::build(d, kprime)) }
    }

    #[cfg(test)]
    fn total_check(&self) -> bool {
        match &self.backing {
            Backing::Small(t) => BigUint::from(*t.size()) == self.size,
            Backing::Big(t) => t.size() == &self.size,
        }
    }
}

/// Rank of `support` in the `(d, kprime)` codebook.
pub fn rank_sparse(support: &[usize], d: usize, kprime: usize) -> Result<BigUint> {
    Codebook::new(d, kprime).rank(support)
}

/// Inverse of [`rank_sparse`].
pub fn unrank_sparse(rank: &BigUint, d: usize, kprime: usize) -> Result<Vec<usize>> {
    Codebook::new(d, kprime).unrank(rank)
}
