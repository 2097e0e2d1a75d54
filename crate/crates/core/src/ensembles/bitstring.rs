use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use num_bigint::BigUint;
use num_traits::Zero;
use serde::{Serialize, Serializer};

use crate::error::ParseError;

/// A finite binary word. Ordered shortlex: by length, then lexicographically.
#[derive(Clone, Default, PartialEq, Eq, Hash)]
pub struct BitString {
    bits: Vec<bool>,
}

impl BitString {
    pub fn empty() -> Self {
        BitString { bits: Vec::new() }
    }

    pub fn from_bits(bits: Vec<bool>) -> Self {
        BitString { bits }
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn bit(&self, i: usize) -> bool {
        self.bits[i]
    }

    pub fn push(&mut self, b: bool) {
        self.bits.push(b);
    }

    pub fn extend_from(&mut self, other: &BitString) {
        self.bits.extend_from_slice(&other.bits);
    }

    pub fn concat(&self, other: &BitString) -> BitString {
        let mut out = self.clone();
        out.extend_from(other);
        out
    }

    pub fn repeat(b: bool, n: usize) -> Self {
        BitString { bits: vec![b; n] }
    }

    /// True if `self` is a proper or improper prefix of `other`.
    pub fn is_prefix_of(&self, other: &BitString) -> bool {
        self.len() <= other.len() && other.bits[..self.len()] == self.bits[..]
    }

    /// `n` in binary without leading zeros (`0` is `"0"`).
    pub fn binary_of(n: u64) -> Self {
        if n == 0 {
            return BitString { bits: vec![false] };
        }
        let width = 64 - n.leading_zeros() as usize;
        Self::fixed_width(&BigUint::from(n), width)
    }

    /// The low `width` bits of `v`, most significant first.
    pub fn fixed_width(v: &BigUint, width: usize) -> Self {
        let bits = (0..width).rev().map(|i| v.bit(i as u64)).collect();
        BitString { bits }
    }

    /// The bits read as an unsigned integer.
    pub fn to_uint(&self) -> BigUint {
        let mut v = BigUint::zero();
        for &b in &self.bits {
            v <<= 1u32;
            if b {
                v += 1u32;
            }
        }
        v
    }

    /// Every string of length `len`, in lexicographic order.
    pub fn all_of_length(len: usize) -> impl Iterator<Item = BitString> {
        assert!(len < 64, "length too large to list");
        (0u64..(1u64 << len)).map(move |v| Self::fixed_width(&BigUint::from(v), len))
    }

    /// The next string in shortlex order.
    pub fn successor(&self) -> BitString {
        let mut bits = self.bits.clone();
        for i in (0..bits.len()).rev() {
            if bits[i] {
                bits[i] = false;
            } else {
                bits[i] = true;
                return BitString { bits };
            }
        }
        BitString {
            bits: vec![false; self.len() + 1],
        }
    }

    /// Snapshot-file token: bits, or `-` for the empty string.
    pub fn to_token(&self) -> String {
        if self.is_empty() {
            "-".to_string()
        } else {
            self.to_string()
        }
    }

    pub fn from_token(s: &str) -> Result<Self, ParseError> {
        if s == "-" {
            Ok(Self::empty())
        } else {
            s.parse()
        }
    }
}

impl Ord for BitString {
    fn cmp(&self, other: &Self) -> Ordering {
        self.len()
            .cmp(&other.len())
            .then_with(|| self.bits.cmp(&other.bits))
    }
}

impl PartialOrd for BitString {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl FromStr for BitString {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, ParseError> {
        let bits = s
            .chars()
            .filter(|c| *c != ' ' && *c != '_')
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                _ => Err(ParseError::Number(s.to_string())),
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(BitString { bits })
    }
}

impl fmt::Display for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.bits {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl fmt::Debug for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_empty() {
            f.write_str("λ")
        } else {
            write!(f, "{self}")
        }
    }
}

impl Serialize for BitString {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}
