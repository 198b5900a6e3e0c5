//! Finite words over `{a, b}`: sites of the infinite binary tree and elements
//! of the free monoid acting on trees.
//!
//! Words are read left to right as descent letters: `ab` means "go to the
//! `a` child, then to its `b` child".

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Letter {
    A,
    B,
}

impl Letter {
    /// 0 for `a` (left), 1 for `b` (right).
    #[inline]
    pub fn bit(self) -> u64 {
        match self {
            Letter::A => 0,
            Letter::B => 1,
        }
    }

    #[inline]
    pub fn from_bit(bit: u64) -> Letter {
        if bit & 1 == 0 {
            Letter::A
        } else {
            Letter::B
        }
    }

    pub fn as_char(self) -> char {
        match self {
            Letter::A => 'a',
            Letter::B => 'b',
        }
    }
}

/// A word over `{a, b}`. The empty word is printed as `e`.
///
/// Ordered by length, then lexicographically with `a < b`.
#[derive(Clone, Default, PartialEq, Eq, Hash)]
pub struct Address {
    letters: Vec<Letter>,
}

impl Address {
    pub fn empty() -> Self {
        Address::default()
    }

    pub fn new(letters: Vec<Letter>) -> Self {
        Address { letters }
    }

    /// The address at level `len`, position `pos` (a = 0, b = 1, first letter most significant).
    pub fn from_position(len: usize, pos: u64) -> Self {
        debug_assert!(len >= 64 || pos >> len == 0);
        let letters = (0..len)
            .map(|i| Letter::from_bit(pos >> (len - 1 - i)))
            .collect();
        Address { letters }
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    pub fn letters(&self) -> &[Letter] {
        &self.letters
    }

    /// Left-to-right position of this site within its line.
    pub fn position(&self) -> u64 {
        debug_assert!(self.len() < 64);
        self.letters.iter().fold(0, |acc, l| (acc << 1) | l.bit())
    }

    /// Level-order index of this site: `2^|w| - 1 + position`.
    pub fn level_order_index(&self) -> usize {
        (1usize << self.len()) - 1 + self.position() as usize
    }

    pub fn push(&mut self, letter: Letter) {
        self.letters.push(letter);
    }

    pub fn concat(&self, other: &Address) -> Address {
        let mut letters = self.letters.clone();
        letters.extend_from_slice(&other.letters);
        Address { letters }
    }

    pub fn prefix(&self, len: usize) -> Address {
        Address {
            letters: self.letters[..len].to_vec(),
        }
    }

    pub fn suffix(&self, len: usize) -> Address {
        Address {
            letters: self.letters[self.len() - len..].to_vec(),
        }
    }

    /// `w_1 ... w_n w_0`.
    pub fn rotate_left(&self) -> Address {
        let mut letters = self.letters.clone();
        if !letters.is_empty() {
            letters.rotate_left(1);
        }
        Address { letters }
    }

    /// All words of length `len` in increasing order.
    pub fn all_of_length(len: usize) -> impl Iterator<Item = Address> {
        (0..1u64 << len).map(move |pos| Address::from_position(len, pos))
    }

    /// All words with `1 <= |w| <= max_len` in increasing order.
    pub fn all_up_to(max_len: usize) -> impl Iterator<Item = Address> {
        (1..=max_len).flat_map(Address::all_of_length)
    }
}

impl Ord for Address {
    fn cmp(&self, other: &Self) -> Ordering {
        self.len()
            .cmp(&other.len())
            .then_with(|| self.letters.cmp(&other.letters))
    }
}

impl PartialOrd for Address {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Address {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.letters.is_empty() {
            return f.write_str("e");
        }
        for l in &self.letters {
            write!(f, "{}", l.as_char())?;
        }
        Ok(())
    }
}

impl fmt::Debug for Address {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Address({self})")
    }
}

impl FromStr for Address {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "e" || s.is_empty() {
            return Ok(Address::empty());
        }
        s.chars()
            .map(|c| match c {
                'a' => Ok(Letter::A),
                'b' => Ok(Letter::B),
                _ => Err(Error::Parse(format!("invalid letter {c:?} in address {s:?}"))),
            })
            .collect::<Result<Vec<_>, _>>()
            .map(Address::new)
    }
}

impl Serialize for Address {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Address {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}
