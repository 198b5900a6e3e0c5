//! Line structure and the inverse of the substitution.
//!
//! Lines of the Jacaranda tree at odd levels are concatenations of `10`; a
//! line at level `2^n (2m + 1)` is a concatenation of the blocks `chi^n(10)` and
//! `chi^n(00)`. Trees rooted at even levels are exactly substitution images,
//! and [`source`] inverts the substitution on them.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::address::{Address, Letter};
use crate::bits::Bits;
use crate::error::{Error, Result};
use crate::tree::{Substreetution, TreePrefix};

/// Odd/even classification of a tree, with the `2^n`-type exponent for even trees.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TypeTag {
    Odd,
    /// Of `2^n`-type, `n >= 1`.
    Even(u32),
    /// Even, with the exponent only known to be at least this value: the
    /// available depth ran out before an odd source was reached.
    EvenAtLeast(u32),
    Unresolved,
}

impl TypeTag {
    pub fn is_odd(self) -> bool {
        self == TypeTag::Odd
    }

    pub fn is_even(self) -> bool {
        matches!(self, TypeTag::Even(_) | TypeTag::EvenAtLeast(_))
    }
}

impl fmt::Display for TypeTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TypeTag::Odd => f.write_str("odd"),
            TypeTag::Even(n) => write!(f, "2^{n}-type"),
            TypeTag::EvenAtLeast(n) => write!(f, "2^(>={n})-type"),
            TypeTag::Unresolved => f.write_str("unresolved"),
        }
    }
}

/// A word of length `2^level`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct LineWord {
    bits: Bits,
    level: u32,
}

impl LineWord {
    pub fn new(bits: Bits) -> Result<Self> {
        let len = bits.len();
        if len == 0 || !len.is_power_of_two() {
            return Err(Error::NotPowerOfTwo(len));
        }
        Ok(LineWord {
            level: len.trailing_zeros(),
            bits,
        })
    }

    pub fn parse(s: &str) -> Result<Self> {
        let bits = Bits::parse(s).ok_or_else(|| Error::Parse(format!("bad word {s:?}")))?;
        LineWord::new(bits)
    }

    pub fn bits(&self) -> &Bits {
        &self.bits
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }
}

impl fmt::Display for LineWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.bits.fmt(f)
    }
}

/// `chi(10) = 0010`, `chi(00) = 0000`, `chi(CD) = chi(D) chi(D) chi(C) chi(D)`.
pub fn chi(w: &LineWord) -> Result<LineWord> {
    if w.len() < 2 {
        return Err(Error::NotPowerOfTwo(w.len()));
    }
    let mut out = Vec::with_capacity(2 * w.len());
    chi_into(&w.bits, 0, w.len(), &mut out)?;
    LineWord::new(Bits::from_bools(out))
}

pub fn chi_pow(w: &LineWord, n: u32) -> Result<LineWord> {
    let mut cur = w.clone();
    for _ in 0..n {
        cur = chi(&cur)?;
    }
    Ok(cur)
}

fn chi_into(src: &Bits, off: usize, len: usize, out: &mut Vec<bool>) -> Result<()> {
    if len == 2 {
        return match (src.get(off), src.get(off + 1)) {
            (true, false) => {
                out.extend_from_slice(&[false, false, true, false]);
                Ok(())
            }
            (false, false) => {
                out.extend_from_slice(&[false; 4]);
                Ok(())
            }
            (x, y) => Err(Error::ChiBasePair {
                offset: off,
                pair: format!("{}{}", x as u8, y as u8),
            }),
        };
    }
    let half = len / 2;
    let mut c = Vec::with_capacity(len);
    let mut d = Vec::with_capacity(len);
    chi_into(src, off, half, &mut c)?;
    chi_into(src, off + half, half, &mut d)?;
    out.extend_from_slice(&d);
    out.extend_from_slice(&d);
    out.extend_from_slice(&c);
    out.extend_from_slice(&d);
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LevelCheck {
    pub level: u32,
    /// 2-adic valuation of the level.
    pub exponent: u32,
    pub block_len: usize,
    pub blocks: usize,
    pub passed: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LineViolation {
    pub level: u32,
    /// Bit offset of the offending block within its line.
    pub offset: usize,
    pub found: String,
    pub allowed: Vec<String>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LineStructureReport {
    pub depth: u32,
    pub levels: Vec<LevelCheck>,
    pub violations: Vec<LineViolation>,
}

impl LineStructureReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks every line `1 <= level < depth` against its block pattern: odd
/// levels must be `(10)*`, level `2^n (2m+1)` must be a concatenation of
/// aligned `chi^n(10)` / `chi^n(00)` blocks.
pub fn verify_line_structure(t: &TreePrefix) -> LineStructureReport {
    let ten = LineWord::parse("10").expect("valid");
    let zero = LineWord::parse("00").expect("valid");
    let mut blocks: Vec<Vec<Bits>> = vec![vec![ten.bits.clone()]];
    let mut report = LineStructureReport {
        depth: t.depth(),
        ..Default::default()
    };
    for level in 1..t.depth() {
        let exponent = level.trailing_zeros();
        while blocks.len() <= exponent as usize {
            let n = blocks.len() as u32;
            blocks.push(vec![
                chi_pow(&ten, n).expect("chi of 10").bits,
                chi_pow(&zero, n).expect("chi of 00").bits,
            ]);
        }
        let allowed = &blocks[exponent as usize];
        let block_len = allowed[0].len();
        let line = t.line(level).expect("level in range");
        let count = line.len() / block_len;
        let mut passed = true;
        for i in 0..count {
            let off = i * block_len;
            if !allowed
                .iter()
                .any(|b| line.range_eq(off, b, 0, block_len))
            {
                passed = false;
                report.violations.push(LineViolation {
                    level,
                    offset: off,
                    found: line.slice(off, block_len).to_string(),
                    allowed: allowed.iter().map(|b| b.to_string()).collect(),
                });
            }
        }
        report.levels.push(LevelCheck {
            level,
            exponent,
            block_len,
            blocks: count,
            passed,
        });
    }
    report
}

/// Odd/even decision from the first lines of a tree in the orbit closure.
///
/// Even trees have line 1 = `10` and line 2 in {`0010`, `0000`}; odd trees
/// have line 1 in {`00`, `10`} and line 2 = `1010`. Returns `EvenAtLeast(1)`
/// for an even verdict, `Unresolved` when the lines available do not decide
/// or match neither pattern.
pub fn parity_from_patch(p: &TreePrefix) -> Result<TypeTag> {
    if p.depth() < 2 {
        return Err(Error::PatchDepth {
            n: 2,
            depth: p.depth(),
        });
    }
    let line1 = p.line(1)?.read(0, 2);
    if line1 != 0b10 && line1 != 0b00 {
        return Ok(TypeTag::Unresolved);
    }
    if p.depth() < 3 {
        return Ok(if line1 == 0b00 {
            TypeTag::Odd
        } else {
            TypeTag::Unresolved
        });
    }
    let line2 = p.line(2)?.read(0, 4);
    Ok(match (line1, line2) {
        (_, 0b1010) => TypeTag::Odd,
        (0b10, 0b0010) | (0b10, 0b0000) => TypeTag::EvenAtLeast(1),
        _ => TypeTag::Unresolved,
    })
}

/// Type of `T_w(J)`: odd for odd `|w|`, `2^v`-type with `v` the 2-adic valuation otherwise.
pub fn type_of_address(w: &Address) -> Result<TypeTag> {
    if w.is_empty() {
        return Err(Error::EmptyAddress);
    }
    let v = w.len().trailing_zeros();
    Ok(if v == 0 {
        TypeTag::Odd
    } else {
        TypeTag::Even(v)
    })
}

/// Full type of a patch: applies [`source`] until the parity test reports odd.
/// The exponent is a lower bound (`EvenAtLeast`) when depth runs out first.
pub fn type_of_patch(p: &TreePrefix, s: &Substreetution) -> Result<TypeTag> {
    let mut cur = p.clone();
    let mut exponent = 0;
    loop {
        let tag = if cur.depth() >= 2 {
            parity_from_patch(&cur)?
        } else {
            TypeTag::Unresolved
        };
        match tag {
            TypeTag::Odd => {
                return Ok(if exponent == 0 {
                    TypeTag::Odd
                } else {
                    TypeTag::Even(exponent)
                })
            }
            TypeTag::EvenAtLeast(_) => {
                exponent += 1;
                let even = cur.truncate(cur.depth() & !1)?;
                match source(&even, s) {
                    Ok(b) => cur = b,
                    Err(_) => return Ok(TypeTag::EvenAtLeast(exponent)),
                }
            }
            _ => {
                return Ok(if exponent == 0 {
                    TypeTag::Unresolved
                } else {
                    TypeTag::EvenAtLeast(exponent)
                })
            }
        }
    }
}

/// Grammar slots (`aa = 0 .. bb = 3`) read by default for each child subtree:
/// the last slot carrying that letter (`ba` and `bb` for `BBAB`).
pub fn default_source_slots(s: &Substreetution) -> Result<(usize, usize)> {
    let last = |letter| {
        (0..4).rev().find(|&d| s.slot(d) == letter).ok_or_else(|| {
            Error::InvalidSubstitution(format!(
                "grammar {} never uses the {letter:?} subtree, no inverse",
                s.grammar_string()
            ))
        })
    };
    Ok((last(Letter::A)?, last(Letter::B)?))
}

/// The unique depth-`n` prefix `B` with `H(B)` equal to the depth-`2n` prefix `t`.
pub fn source(t: &TreePrefix, s: &Substreetution) -> Result<TreePrefix> {
    let (a_slot, b_slot) = default_source_slots(s)?;
    source_via(t, s, a_slot, b_slot)
}

/// [`source`], reading the `a`-subtree from grammar slot `a_slot` and the
/// `b`-subtree from `b_slot`. Every slot choice consistent with the grammar
/// gives the same answer on genuine images.
pub fn source_via(
    t: &TreePrefix,
    s: &Substreetution,
    a_slot: usize,
    b_slot: usize,
) -> Result<TreePrefix> {
    if !t.depth().is_multiple_of(2) {
        return Err(Error::OddDepth(t.depth()));
    }
    if a_slot > 3 || b_slot > 3 || s.slot(a_slot) != Letter::A || s.slot(b_slot) != Letter::B {
        return Err(Error::InvalidParameters(format!(
            "slots ({a_slot}, {b_slot}) do not carry (A, B) in grammar {}",
            s.grammar_string()
        )));
    }
    let n = t.depth() / 2;
    let unmark = s.mark(0) == 1;
    let mut colors: Vec<bool> = Vec::with_capacity((1usize << n) - 1);
    let mut positions: Vec<usize> = vec![0];
    for k in 0..n {
        if k > 0 {
            positions = positions
                .iter()
                .flat_map(|&p| [4 * p + a_slot, 4 * p + b_slot])
                .collect();
        }
        colors.extend(positions.iter().map(|&p| t.bit_at(2 * k, p) ^ unmark));
    }
    let b = TreePrefix::new(n, Bits::from_bools(colors))?;
    let image = s.apply(&b)?;
    if let Some((level, pos)) = image.first_difference(t) {
        return Err(Error::NotAnImage {
            witness: Address::from_position(level as usize, pos as u64),
        });
    }
    Ok(b)
}

/// The word `s~(w)` of length `|w|/2` with `T_w . H = H . T_{s~(w)}`: each
/// consecutive letter pair is mapped to the child named by its grammar slot.
pub fn source_word(w: &Address, s: &Substreetution) -> Result<Address> {
    if !w.len().is_multiple_of(2) {
        return Err(Error::OddLength(w.clone()));
    }
    Ok(Address::new(
        w.letters()
            .chunks(2)
            .map(|pair| s.slot((2 * pair[0].bit() + pair[1].bit()) as usize))
            .collect(),
    ))
}
