//! Fixed-budget per-node encoder for sparse binary observations.
//!
//! A `k`-bit message has three big-endian fields:
//!
//! | field   | width                  | content                                   |
//! |---------|------------------------|-------------------------------------------|
//! | count   | `⌈log₂(d+1)⌉`          | `‖X‖₁`, the number of ones before subsampling |
//! | payload | `k - header - signs`   | codebook rank of the kept support          |
//! | signs   | `k'` (signed codec) or 0 | one bit per kept index, `1` = negative, zero-padded |
//!
//! When `‖X‖₁ > k'` the node keeps a uniformly random `k'`-subset of its
//! ones. The count header lets the decoder undo that thinning.

mod bits;
pub mod enumerative;

use std::fmt;
use std::sync::Arc;

use num_bigint::BigUint;
use num_traits::ToPrimitive;
use rand::seq::index;

pub use bits::BitString;
pub use enumerative::{codebook_size, rank_sparse, unrank_sparse, Codebook};

use crate::error::{Error, Result};
use crate::model::Observation;
use crate::rng::Stream;

/// `⌈log₂ x⌉` for `x ≥ 1`.
pub fn ceil_log2(x: usize) -> usize {
    assert!(x >= 1, "ceil_log2 of zero");
    (usize::BITS - (x - 1).leading_zeros()) as usize
}

/// Layout of a `k`-bit message for dimension `d`.
#[derive(Clone)]
pub struct CodecConfig {
    d: usize,
    k: usize,
    header_bits: usize,
    payload_bits: usize,
    sign_bits: usize,
    kprime: usize,
    signed: bool,
    codebook: Arc<Codebook>,
}

impl fmt::Debug for CodecConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CodecConfig")
            .field("d", &self.d)
            .field("k", &self.k)
            .field("header_bits", &self.header_bits)
            .field("payload_bits", &self.payload_bits)
            .field("sign_bits", &self.sign_bits)
            .field("kprime", &self.kprime)
            .field("signed", &self.signed)
            .finish()
    }
}

impl PartialEq for CodecConfig {
    fn eq(&self, other: &Self) -> bool {
        (self.d, self.k, self.header_bits, self.payload_bits, self.sign_bits, self.kprime, self.signed)
            == (other.d, other.k, other.header_bits, other.payload_bits, other.sign_bits, other.kprime, other.signed)
    }
}

/// Builds the unsigned layout: the largest `k'` whose codebook fits in
/// `k - ⌈log₂(d+1)⌉` payload bits.
pub fn make_config(d: usize, k: usize) -> Result<CodecConfig> {
    build_config(d, k, false)
}

/// Builds the signed layout, which also spends one bit per kept index on
/// its sign: `k'` is the largest value with
/// `⌈log₂ |codebook(k')|⌉ + k' ≤ k - ⌈log₂(d+1)⌉`.
pub fn make_signed_config(d: usize, k: usize) -> Result<CodecConfig> {
    build_config(d, k, true)
}

fn build_config(d: usize, k: usize, signed: bool) -> Result<CodecConfig> {
    if d < 2 {
        return Err(Error::InvalidArgument(format!("dimension d={d} must be at least 2")));
    }
    let header_bits = ceil_log2(d + 1);
    if k < header_bits + 1 {
        return Err(Error::BudgetTooSmall { d, k, needed: header_bits + 1 });
    }
    let budget = k - header_bits;
    // Walk the cumulative binomial sums until the next class no longer fits.
    let mut kprime = 0;
    let mut term = BigUint::from(1u8);
    let mut total = term.clone();
    while kprime < d {
        term = term * BigUint::from(d - kprime) / BigUint::from(kprime + 1);
        let next_total = &total + &term;
        let next = kprime + 1;
        let needed = ceil_log2_big(&next_total) + if signed { next } else { 0 };
        if needed > budget {
            break;
        }
        kprime = next;
        total = next_total;
    }
    let sign_bits = if signed { kprime } else { 0 };
    Ok(CodecConfig {
        d,
        k,
        header_bits,
        payload_bits: budget - sign_bits,
        sign_bits,
        kprime,
        signed,
        codebook: Arc::new(Codebook::new(d, kprime)),
    })
}

/// `⌈log₂ x⌉` for a positive big integer.
fn ceil_log2_big(x: &BigUint) -> usize {
    let one = BigUint::from(1u8);
    if x <= &one {
        0
    } else {
        (x - one).bits() as usize
    }
}

impl CodecConfig {
    pub fn d(&self) -> usize {
        self.d
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn header_bits(&self) -> usize {
        self.header_bits
    }

    pub fn payload_bits(&self) -> usize {
        self.payload_bits
    }

    pub fn sign_bits(&self) -> usize {
        self.sign_bits
    }

    pub fn kprime(&self) -> usize {
        self.kprime
    }

    pub fn is_signed(&self) -> bool {
        self.signed
    }

    /// A degenerate layout can only transmit the empty support.
    pub fn is_degenerate(&self) -> bool {
        self.kprime == 0
    }

    /// `2⌈log₂ d⌉ ≤ k`, the budget regime assumed by the upper bound.
    pub fn in_upper_bound_regime(&self) -> bool {
        2 * ceil_log2(self.d) <= self.k
    }

    pub fn codebook(&self) -> &Codebook {
        &self.codebook
    }
}

/// A node's `k`-bit transcript.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Message {
    pub count: usize,
    pub payload_index: BigUint,
    /// Signs of the kept indices in support order; `None` for unsigned codecs.
    pub signs: Option<Vec<i8>>,
    pub bit_length: usize,
}

/// What the decoder learns from one message: the kept support and the
/// original number of ones.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubsampledObservation {
    pub d: usize,
    pub support: Vec<usize>,
    pub signs: Option<Vec<i8>>,
    pub original_count: usize,
}

impl SubsampledObservation {
    pub fn kept(&self) -> usize {
        self.support.len()
    }
}

/// Keeps every one when `‖X‖₁ ≤ k'`, otherwise a uniformly random
/// `k'`-subset of them.
pub fn subsample(obs: &Observation, cfg: &CodecConfig, rng: &mut Stream) -> Result<SubsampledObservation> {
    if obs.d() != cfg.d {
        return Err(Error::DimensionMismatch { expected: cfg.d, got: obs.d() });
    }
    let count = obs.count();
    let (support, signs) = if count <= cfg.kprime {
        (obs.support().to_vec(), obs.signs().map(<[i8]>::to_vec))
    } else {
        let mut picks = index::sample(rng, count, cfg.kprime).into_vec();
        picks.sort_unstable();
        let support = picks.iter().map(|&p| obs.support()[p]).collect();
        let signs = obs.signs().map(|s| picks.iter().map(|&p| s[p]).collect());
        (support, signs)
    };
    Ok(SubsampledObservation { d: cfg.d, support, signs, original_count: count })
}

/// Encodes one observation into a `k`-bit message.
pub fn encode(obs: &Observation, cfg: &CodecConfig, rng: &mut Stream) -> Result<Message> {
    if obs.is_signed() != cfg.signed {
        return Err(Error::InvalidArgument(if obs.is_signed() {
            "signed observation requires a signed codec".into()
        } else {
            "unsigned observation given to a signed codec".into()
        }));
    }
    let kept = subsample(obs, cfg, rng)?;
    Ok(Message {
        count: kept.original_count,
        payload_index: cfg.codebook.rank(&kept.support)?,
        signs: kept.signs,
        bit_length: cfg.k,
    })
}

/// Decodes a message back into the kept support and the original count.
pub fn decode(msg: &Message, cfg: &CodecConfig) -> Result<SubsampledObservation> {
    if msg.bit_length != cfg.k {
        return Err(Error::MalformedMessage(format!(
            "bit length {} does not match k={}",
            msg.bit_length, cfg.k
        )));
    }
    if msg.count > cfg.d {
        return Err(Error::MalformedMessage(format!("count {} exceeds d={}", msg.count, cfg.d)));
    }
    let support = cfg
        .codebook
        .unrank(&msg.payload_index)
        .map_err(|e| Error::MalformedMessage(e.to_string()))?;
    if support.len() != msg.count.min(cfg.kprime) {
        return Err(Error::MalformedMessage(format!(
            "payload holds {} ones but count {} with k'={} implies {}",
            support.len(),
            msg.count,
            cfg.kprime,
            msg.count.min(cfg.kprime)
        )));
    }
    let signs = match (&msg.signs, cfg.signed) {
        (Some(s), true) if s.len() == support.len() && s.iter().all(|&v| v == 1 || v == -1) => Some(s.clone()),
        (None, false) => None,
        _ => return Err(Error::MalformedMessage("sign field inconsistent with codec".into())),
    };
    Ok(SubsampledObservation { d: cfg.d, support, signs, original_count: msg.count })
}

/// Lays the message out as exactly `k` bits.
pub fn serialize(msg: &Message, cfg: &CodecConfig) -> Result<BitString> {
    if msg.bit_length != cfg.k {
        return Err(Error::LengthMismatch { expected: cfg.k, got: msg.bit_length });
    }
    let mut bits = BitString::new();
    bits.push_uint(&BigUint::from(msg.count), cfg.header_bits)?;
    bits.push_uint(&msg.payload_index, cfg.payload_bits)?;
    let signs = msg.signs.as_deref().unwrap_or(&[]);
    if signs.len() > cfg.sign_bits {
        return Err(Error::MalformedMessage("more signs than sign bits".into()));
    }
    for slot in 0..cfg.sign_bits {
        bits.push(signs.get(slot).is_some_and(|&s| s < 0));
    }
    debug_assert_eq!(bits.len(), cfg.k);
    Ok(bits)
}

/// Parses `k` bits back into a message, rejecting out-of-range fields.
pub fn deserialize(bits: &BitString, cfg: &CodecConfig) -> Result<Message> {
    if bits.len() != cfg.k {
        return Err(Error::LengthMismatch { expected: cfg.k, got: bits.len() });
    }
    let count = bits
        .read_uint(0, cfg.header_bits)
        .to_usize()
        .filter(|&c| c <= cfg.d)
        .ok_or_else(|| Error::MalformedMessage(format!("count field exceeds d={}", cfg.d)))?;
    let payload_index = bits.read_uint(cfg.header_bits, cfg.payload_bits);
    let signs = if cfg.signed {
        let ones = cfg
            .codebook
            .class_of(&payload_index)
            .map_err(|e| Error::MalformedMessage(e.to_string()))?;
        let sign_field = &bits.bits()[cfg.header_bits + cfg.payload_bits..];
        if sign_field[ones..].iter().any(|&b| b) {
            return Err(Error::MalformedMessage("padding sign bits must be zero".into()));
        }
        Some(sign_field[..ones].iter().map(|&neg| if neg { -1 } else { 1 }).collect())
    } else {
        None
    };
    Ok(Message { count, payload_index, signs, bit_length: cfg.k })
}
