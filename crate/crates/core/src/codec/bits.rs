use std::fmt;
use std::str::FromStr;

use num_bigint::BigUint;

use crate::error::{Error, Result};

/// A fixed-length string of bits, most significant first.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct BitString(Vec<bool>);

impl BitString {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn bits(&self) -> &[bool] {
        &self.0
    }

    pub fn push(&mut self, bit: bool) {
        self.0.push(bit);
    }

    /// Appends `value` as a big-endian field of exactly `width` bits.
    pub fn push_uint(&mut self, value: &BigUint, width: usize) -> Result<()> {
        if value.bits() > width as u64 {
            return Err(Error::MalformedMessage(format!(
                "value needs {} bits but the field holds {width}",
                value.bits()
            )));
        }
        for i in (0..width as u64).rev() {
            self.0.push(value.bit(i));
        }
        Ok(())
    }

    /// Reads a big-endian field of `width` bits starting at `offset`.
    pub fn read_uint(&self, offset: usize, width: usize) -> BigUint {
        let mut value = BigUint::default();
        for (i, &bit) in self.0[offset..offset + width].iter().rev().enumerate() {
            if bit {
                value.set_bit(i as u64, true);
            }
        }
        value
    }

    /// Packs into bytes, most significant bit first, zero-padding the tail.
    pub fn to_bytes(&self) -> Vec<u8> {
        self.0
            .chunks(8)
            .map(|chunk| chunk.iter().enumerate().fold(0u8, |b, (i, &bit)| b | (u8::from(bit) << (7 - i))))
            .collect()
    }
}

impl From<Vec<bool>> for BitString {
    fn from(bits: Vec<bool>) -> Self {
        Self(bits)
    }
}

impl fmt::Display for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.0 {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl FromStr for BitString {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        s.chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(Error::InvalidArgument(format!("invalid bit character {other:?}"))),
            })
            .collect::<Result<Vec<bool>>>()
            .map(BitString)
    }
}
