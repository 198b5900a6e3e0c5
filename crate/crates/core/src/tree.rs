//! Colored binary tree prefixes and length-2 tree substitutions.
//!
//! A [`TreePrefix`] of depth `n` stores the first `n` lines of a tree with
//! colors in `{0, 1}`, bit-packed in level order: line `k` occupies offsets
//! `2^k - 1 .. 2^(k+1) - 2`, the `a` child of index `i` sits at `2i + 1` and the
//! `b` child at `2i + 2`.

use std::cmp::Ordering;
use std::fmt;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::address::{Address, Letter};
use crate::bits::Bits;
use crate::error::{Error, Result};

/// Largest depth a prefix may have (2^36 bits is already 8 GiB).
pub const MAX_DEPTH: u32 = 36;

const SBTR_MAGIC: &[u8; 4] = b"SBTR";
const SBTR_VERSION: u8 = 1;

#[inline]
fn line_offset(level: u32) -> usize {
    (1usize << level) - 1
}

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TreePrefix {
    depth: u32,
    bits: Bits,
}

impl TreePrefix {
    pub fn new(depth: u32, bits: Bits) -> Result<Self> {
        if depth == 0 {
            return Err(Error::ZeroDepth);
        }
        if depth > MAX_DEPTH {
            return Err(Error::DepthTooLarge {
                depth,
                max: MAX_DEPTH,
            });
        }
        if bits.len() != (1usize << depth) - 1 {
            return Err(Error::Format(format!(
                "expected {} bits for depth {depth}, got {}",
                (1usize << depth) - 1,
                bits.len()
            )));
        }
        Ok(TreePrefix { depth, bits })
    }

    pub(crate) fn zeros(depth: u32) -> Self {
        TreePrefix {
            depth,
            bits: Bits::zeros((1usize << depth) - 1),
        }
    }

    pub fn single(color: u8) -> Self {
        let mut t = TreePrefix::zeros(1);
        t.bits.set(0, color != 0);
        t
    }

    /// Builds a prefix from its lines written as `0`/`1` strings.
    pub fn from_lines<S: AsRef<str>>(lines: &[S]) -> Result<Self> {
        let depth = lines.len() as u32;
        if depth == 0 {
            return Err(Error::ZeroDepth);
        }
        let mut t = TreePrefix::zeros(depth);
        for (k, s) in lines.iter().enumerate() {
            let line = Bits::parse(s.as_ref())
                .ok_or_else(|| Error::Parse(format!("bad line {:?}", s.as_ref())))?;
            if line.len() != 1 << k {
                return Err(Error::Parse(format!(
                    "line {k} must have {} bits, got {}",
                    1 << k,
                    line.len()
                )));
            }
            t.bits.copy_from(line_offset(k as u32), &line, 0, line.len());
        }
        Ok(t)
    }

    pub fn depth(&self) -> u32 {
        self.depth
    }

    /// Level-order bits.
    pub fn bits(&self) -> &Bits {
        &self.bits
    }

    pub fn root(&self) -> u8 {
        self.bits.get(0) as u8
    }

    #[inline]
    pub(crate) fn bit_at(&self, level: u32, pos: usize) -> bool {
        self.bits.get(line_offset(level) + pos)
    }

    pub fn line(&self, level: u32) -> Result<Bits> {
        if level >= self.depth {
            return Err(Error::LineOutOfRange {
                level,
                depth: self.depth,
            });
        }
        Ok(self.bits.slice(line_offset(level), 1 << level))
    }

    pub fn lines(&self) -> impl Iterator<Item = Bits> + '_ {
        (0..self.depth).map(move |k| self.bits.slice(line_offset(k), 1 << k))
    }

    fn check_address(&self, address: &Address) -> Result<()> {
        if address.len() >= self.depth as usize {
            return Err(Error::AddressTooDeep {
                address: address.clone(),
                depth: self.depth,
            });
        }
        Ok(())
    }

    pub fn node_at(&self, address: &Address) -> Result<u8> {
        self.check_address(address)?;
        Ok(self.bits.get(address.level_order_index()) as u8)
    }

    /// Copy of this prefix with the color at `address` replaced.
    pub fn with_node(&self, address: &Address, color: u8) -> Result<Self> {
        self.check_address(address)?;
        let mut t = self.clone();
        t.bits.set(address.level_order_index(), color != 0);
        Ok(t)
    }

    /// The subtree rooted at `address`, of depth `depth - |address|`.
    pub fn shift(&self, address: &Address) -> Result<Self> {
        self.check_address(address)?;
        let level = address.len() as u32;
        Ok(self.window_at(level, address.position() as usize, self.depth - level))
    }

    /// The depth-`n` window rooted at `address`: `shift` followed by `truncate`.
    pub fn window(&self, address: &Address, n: u32) -> Result<Self> {
        if n == 0 {
            return Err(Error::ZeroDepth);
        }
        let level = address.len() as u32;
        if level + n > self.depth {
            return Err(Error::PatchDepth {
                n: level + n,
                depth: self.depth,
            });
        }
        Ok(self.window_at(level, address.position() as usize, n))
    }

    /// Depth-`n` window rooted at line `level`, position `pos`. Caller checks bounds.
    pub(crate) fn window_at(&self, level: u32, pos: usize, n: u32) -> Self {
        debug_assert!(level + n <= self.depth && n >= 1);
        let mut out = TreePrefix::zeros(n);
        for k in 0..n {
            let width = 1usize << k;
            let src = line_offset(level + k) + pos * width;
            out.bits.copy_from(line_offset(k), &self.bits, src, width);
        }
        out
    }

    pub fn truncate(&self, n: u32) -> Result<Self> {
        if n == 0 {
            return Err(Error::ZeroDepth);
        }
        if n > self.depth {
            return Err(Error::PatchDepth {
                n,
                depth: self.depth,
            });
        }
        Ok(TreePrefix {
            depth: n,
            bits: self.bits.slice(0, (1usize << n) - 1),
        })
    }

    /// Tree ultrametric: `2^-N` where `N` is the first line with a disagreement.
    pub fn distance(&self, other: &TreePrefix) -> Result<Dyadic> {
        if self.depth != other.depth {
            return Err(Error::DepthMismatch {
                left: self.depth,
                right: other.depth,
            });
        }
        Ok(self.first_difference(other).map_or(Dyadic::Agree, |(level, _)| {
            Dyadic::Pow(level)
        }))
    }

    /// First differing site as (line, position), scanning in level order.
    pub(crate) fn first_difference(&self, other: &TreePrefix) -> Option<(u32, usize)> {
        let n = self.depth.min(other.depth);
        let len = (1usize << n) - 1;
        let i = self.bits.first_difference(0, &other.bits, 0, len)?;
        let level = usize::BITS - 1 - (i + 1).leading_zeros();
        Some((level, i - line_offset(level)))
    }

    pub fn to_sbtr_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(9 + self.bits.len().div_ceil(8));
        out.extend_from_slice(SBTR_MAGIC);
        out.push(SBTR_VERSION);
        out.extend_from_slice(&self.depth.to_le_bytes());
        out.extend_from_slice(&self.bits.to_bytes());
        out
    }

    pub fn from_sbtr_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < 9 || &bytes[..4] != SBTR_MAGIC {
            return Err(Error::Format("missing SBTR header".into()));
        }
        if bytes[4] != SBTR_VERSION {
            return Err(Error::Format(format!("unsupported version {}", bytes[4])));
        }
        let depth = u32::from_le_bytes(bytes[5..9].try_into().expect("4 bytes"));
        if depth == 0 {
            return Err(Error::ZeroDepth);
        }
        if depth > MAX_DEPTH {
            return Err(Error::DepthTooLarge {
                depth,
                max: MAX_DEPTH,
            });
        }
        let nbits = (1usize << depth) - 1;
        let bits = Bits::from_bytes(&bytes[9..], nbits).ok_or_else(|| {
            Error::Format(format!(
                "payload of {} bytes does not hold {nbits} bits with zero padding",
                bytes.len() - 9
            ))
        })?;
        TreePrefix::new(depth, bits)
    }

    pub fn write_sbtr<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(&self.to_sbtr_bytes())?;
        Ok(())
    }

    pub fn read_sbtr<R: Read>(mut r: R) -> Result<Self> {
        let mut buf = Vec::new();
        r.read_to_end(&mut buf)?;
        TreePrefix::from_sbtr_bytes(&buf)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_sbtr_bytes())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        TreePrefix::from_sbtr_bytes(&std::fs::read(path)?)
    }

    /// Lines joined by `/`, e.g. `0/10/0010`.
    pub fn render(&self) -> String {
        self.lines()
            .map(|l| l.to_string())
            .collect::<Vec<_>>()
            .join("/")
    }

    /// Stable text encoding: `<depth>:<hex of the level-order bytes>`.
    pub fn encode(&self) -> String {
        let hex: String = self
            .bits
            .to_bytes()
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect();
        format!("{}:{}", self.depth, hex)
    }

    pub fn decode(s: &str) -> Result<Self> {
        let (d, hex) = s
            .split_once(':')
            .ok_or_else(|| Error::Parse(format!("bad patch encoding {s:?}")))?;
        let depth: u32 = d
            .parse()
            .map_err(|_| Error::Parse(format!("bad depth in {s:?}")))?;
        if depth == 0 || depth > MAX_DEPTH {
            return Err(Error::Parse(format!("bad depth in {s:?}")));
        }
        if hex.len() % 2 != 0 {
            return Err(Error::Parse(format!("odd hex length in {s:?}")));
        }
        let bytes = (0..hex.len())
            .step_by(2)
            .map(|i| u8::from_str_radix(&hex[i..i + 2], 16))
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|_| Error::Parse(format!("bad hex in {s:?}")))?;
        let bits = Bits::from_bytes(&bytes, (1usize << depth) - 1)
            .ok_or_else(|| Error::Parse(format!("bad payload in {s:?}")))?;
        TreePrefix::new(depth, bits)
    }
}

impl Serialize for TreePrefix {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.encode())
    }
}

impl<'de> Deserialize<'de> for TreePrefix {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        TreePrefix::decode(&s).map_err(serde::de::Error::custom)
    }
}

impl fmt::Display for TreePrefix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render())
    }
}

impl fmt::Debug for TreePrefix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.depth <= 6 {
            write!(f, "TreePrefix({})", self.render())
        } else {
            write!(f, "TreePrefix(depth {}, {})", self.depth, self.encode())
        }
    }
}

/// A distance value of the tree ultrametric: `2^-N`, or "no disagreement
/// within the available depth".
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Dyadic {
    /// `2^-N`.
    Pow(u32),
    /// The prefixes agree on every available line.
    Agree,
}

impl Dyadic {
    pub fn value(self) -> f64 {
        match self {
            Dyadic::Pow(n) => 0.5f64.powi(n as i32),
            Dyadic::Agree => 0.0,
        }
    }
}

impl Ord for Dyadic {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (Dyadic::Agree, Dyadic::Agree) => Ordering::Equal,
            (Dyadic::Agree, Dyadic::Pow(_)) => Ordering::Less,
            (Dyadic::Pow(_), Dyadic::Agree) => Ordering::Greater,
            (Dyadic::Pow(a), Dyadic::Pow(b)) => b.cmp(a),
        }
    }
}

impl PartialOrd for Dyadic {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Dyadic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Dyadic::Pow(n) => write!(f, "2^-{n}"),
            Dyadic::Agree => f.write_str("0"),
        }
    }
}

/// Image of a single site: root color and the colors of its `a` and `b` children.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RootImage {
    pub root: u8,
    pub a: u8,
    pub b: u8,
}

/// A constant-length-2 substitution on colored binary trees.
///
/// Each site of color `c` becomes `images[c]`; the four grandchildren slots
/// `aa, ab, ba, bb` carry the images of the child subtrees selected by the
/// grammar word (`A` = the `a`-subtree, `B` = the `b`-subtree).
#[derive(Clone, PartialEq, Eq)]
pub struct Substreetution {
    images: [RootImage; 2],
    grammar: [Letter; 4],
    flips: bool,
    phi_tables: [Vec<u64>; 4],
    child_table: Vec<u16>,
}

impl Substreetution {
    pub fn new(images: [RootImage; 2], grammar: [Letter; 4]) -> Result<Self> {
        for im in &images {
            if im.root > 1 || im.a > 1 || im.b > 1 {
                return Err(Error::InvalidSubstitution(format!(
                    "colors must be 0 or 1: {im:?}"
                )));
            }
        }
        if images[0].root == images[1].root {
            return Err(Error::InvalidSubstitution(
                "root colors of the two images must differ (marked substitution)".into(),
            ));
        }
        let flips = images[0].root == 1;
        let phi_tables = std::array::from_fn(|k| {
            (0..1u64 << (1 << k))
                .map(|w| phi_small(&grammar, k as u32, w))
                .collect()
        });
        let child_table = (0..256u32)
            .map(|byte| {
                (0..8).fold(0u16, |acc, i| {
                    let c = ((byte >> (7 - i)) & 1) as usize;
                    (acc << 2) | ((images[c].a as u16) << 1) | images[c].b as u16
                })
            })
            .collect();
        Ok(Substreetution {
            images,
            grammar,
            flips,
            phi_tables,
            child_table,
        })
    }

    /// `0 -> 0(1,0)`, `1 -> 1(1,0)` with grammar `BBAB`.
    pub fn jacaranda() -> Self {
        Substreetution::new(
            [
                RootImage { root: 0, a: 1, b: 0 },
                RootImage { root: 1, a: 1, b: 0 },
            ],
            [Letter::B, Letter::B, Letter::A, Letter::B],
        )
        .expect("jacaranda rules are valid")
    }

    pub fn images(&self) -> &[RootImage; 2] {
        &self.images
    }

    pub fn grammar(&self) -> &[Letter; 4] {
        &self.grammar
    }

    pub fn grammar_string(&self) -> String {
        self.grammar
            .iter()
            .map(|l| l.as_char().to_ascii_uppercase())
            .collect()
    }

    /// The marking bijection `m`.
    pub fn mark(&self, color: u8) -> u8 {
        self.images[color as usize].root
    }

    pub fn fixes(&self, color: u8) -> bool {
        color <= 1 && self.mark(color) == color
    }

    /// Child subtree selected at grandchild slot `d` (`aa = 0, ab, ba, bb = 3`).
    pub fn slot(&self, d: usize) -> Letter {
        self.grammar[d]
    }

    /// Writes the `4^k` input colors feeding line `2k` of the image, given the
    /// `2^k` colors of input line `k` at `src[src_off..]`.
    fn phi(&self, src: &Bits, src_off: usize, k: u32, dst: &mut Bits, dst_off: usize) {
        if k <= 3 {
            let w = src.read(src_off, 1 << k) as usize;
            dst.write(dst_off, 1 << (2 * k), self.phi_tables[k as usize][w]);
            return;
        }
        let half = 1usize << (k - 1);
        let part = 1usize << (2 * (k - 1));
        for (d, letter) in self.grammar.iter().enumerate() {
            let off = match letter {
                Letter::A => src_off,
                Letter::B => src_off + half,
            };
            self.phi(src, off, k - 1, dst, dst_off + d * part);
        }
    }

    /// Applies the substitution to a depth-`n` prefix, giving depth `2n`.
    pub fn apply(&self, t: &TreePrefix) -> Result<TreePrefix> {
        if 2 * t.depth > MAX_DEPTH {
            return Err(Error::DepthTooLarge {
                depth: 2 * t.depth,
                max: MAX_DEPTH,
            });
        }
        Ok(self.apply_truncated(t, 2 * t.depth))
    }

    /// The first `min(2n, max_depth)` lines of the image (`max_depth` is
    /// clamped to [`MAX_DEPTH`]).
    pub fn apply_truncated(&self, t: &TreePrefix, max_depth: u32) -> TreePrefix {
        let out_depth = (2 * t.depth).min(max_depth).clamp(1, MAX_DEPTH);
        let mut out = TreePrefix::zeros(out_depth);
        for k in 0..out_depth.div_ceil(2) {
            let width = 1usize << (2 * k);
            let mut colors = Bits::zeros(width);
            self.phi(&t.bits, line_offset(k), k, &mut colors, 0);
            let even = line_offset(2 * k);
            out.bits.copy_from(even, &colors, 0, width);
            if self.flips {
                let mut marked = colors.clone();
                marked.invert();
                out.bits.copy_from(even, &marked, 0, width);
            }
            if 2 * k + 1 < out_depth {
                let odd = line_offset(2 * k + 1);
                let mut i = 0;
                while i < width {
                    let r = (width - i).min(8);
                    let chunk = (colors.read(i, r) << (8 - r)) as usize;
                    let kids = (self.child_table[chunk] >> (16 - 2 * r)) as u64;
                    out.bits.write(odd + 2 * i, 2 * r, kids);
                    i += r;
                }
            }
        }
        out
    }

    /// Prefix of depth `n` of the unique fixed point with the given root color.
    pub fn fixed_point(&self, root: u8, n: u32) -> Result<TreePrefix> {
        if n == 0 {
            return Err(Error::ZeroDepth);
        }
        if n > MAX_DEPTH {
            return Err(Error::DepthTooLarge {
                depth: n,
                max: MAX_DEPTH,
            });
        }
        if !self.fixes(root) {
            return Err(Error::NonFixedRoot { color: root });
        }
        let mut t = TreePrefix::single(root);
        while t.depth < n {
            t = self.apply_truncated(&t, n);
        }
        Ok(t)
    }
}

/// `phi` on a single short line (`k <= 3`), packed into a `u64`.
fn phi_small(grammar: &[Letter; 4], k: u32, w: u64) -> u64 {
    if k == 0 {
        return w & 1;
    }
    let half = 1 << (k - 1);
    let c = w >> half;
    let d = w & ((1 << half) - 1);
    let part = 1u32 << (2 * (k - 1));
    grammar.iter().fold(0, |acc, letter| {
        let sub = match letter {
            Letter::A => c,
            Letter::B => d,
        };
        (acc << part) | phi_small(grammar, k - 1, sub)
    })
}

impl fmt::Debug for Substreetution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Substreetution")
            .field("images", &self.images)
            .field("grammar", &self.grammar_string())
            .finish()
    }
}

impl FromStr for Substreetution {
    type Err = Error;

    /// Parses `"010,110;BBAB"`: root/a/b colors for 0, then for 1, then the grammar.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Parse(format!("bad substitution {s:?}"));
        let (rules, grammar) = s.split_once(';').ok_or_else(bad)?;
        let (r0, r1) = rules.split_once(',').ok_or_else(bad)?;
        let image = |r: &str| -> Result<RootImage> {
            let d: Vec<u8> = r
                .chars()
                .map(|c| c.to_digit(2).map(|v| v as u8).ok_or_else(bad))
                .collect::<Result<_>>()?;
            match d[..] {
                [root, a, b] => Ok(RootImage { root, a, b }),
                _ => Err(bad()),
            }
        };
        let letters: Vec<Letter> = grammar
            .chars()
            .map(|c| match c {
                'A' => Ok(Letter::A),
                'B' => Ok(Letter::B),
                _ => Err(bad()),
            })
            .collect::<Result<_>>()?;
        let grammar: [Letter; 4] = letters.try_into().map_err(|_| bad())?;
        Substreetution::new([image(r0)?, image(r1)?], grammar)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn w(s: &str) -> Address {
        s.parse().unwrap()
    }

    fn jac(n: u32) -> TreePrefix {
        Substreetution::jacaranda().fixed_point(0, n).unwrap()
    }

    #[test]
    fn apply_single_nodes() {
        let h = Substreetution::jacaranda();
        assert_eq!(h.apply(&TreePrefix::single(0)).unwrap().render(), "0/10");
        assert_eq!(h.apply(&TreePrefix::single(1)).unwrap().render(), "1/10");
    }

    #[test]
    fn apply_depth_two() {
        let h = Substreetution::jacaranda();
        let t = TreePrefix::from_lines(&["0", "10"]).unwrap();
        assert_eq!(h.apply(&t).unwrap().render(), "0/10/0010/10101010");
    }

    #[test]
    fn fixed_point_examples() {
        let h = Substreetution::jacaranda();
        assert_eq!(jac(3).render(), "0/10/0010");
        assert_eq!(jac(5).line(4).unwrap().to_string(), "0010001000000010");
        let twin = h.fixed_point(1, 3).unwrap();
        assert_eq!(twin.render(), "1/10/0010");
        assert_eq!(jac(1).render(), "0");
        assert!(matches!(h.fixed_point(0, 0), Err(Error::ZeroDepth)));
    }

    #[test]
    fn fixed_point_rejects_non_fixed_root() {
        let flip: Substreetution = "110,010;BBAB".parse().unwrap();
        assert!(matches!(
            flip.fixed_point(0, 4),
            Err(Error::NonFixedRoot { color: 0 })
        ));
        assert!("010,010;BBAB".parse::<Substreetution>().is_err());
    }

    #[test]
    fn fixed_point_is_fixed() {
        let h = Substreetution::jacaranda();
        for n in 1..=20 {
            let p = jac(n);
            assert_eq!(h.apply_truncated(&p, n), p, "depth {n}");
            if n <= 10 {
                assert_eq!(h.apply(&p).unwrap().truncate(n).unwrap(), p);
            }
        }
        assert!(matches!(h.apply(&jac(19)), Err(Error::DepthTooLarge { .. })));
    }

    #[test]
    fn shift_examples() {
        let j = jac(4);
        assert_eq!(j.shift(&w("e")).unwrap(), j);
        assert_eq!(j.shift(&w("a")).unwrap().render(), "1/00/1010");
        assert_eq!(j.shift(&w("ba")).unwrap().render(), "1/10");
        assert!(matches!(
            j.shift(&w("abab")),
            Err(Error::AddressTooDeep { .. })
        ));
    }

    #[test]
    fn node_at_examples() {
        let j = jac(12);
        assert_eq!(j.node_at(&w("e")).unwrap(), 0);
        assert_eq!(j.node_at(&w("b")).unwrap(), 0);
        for k in 1..12 {
            let path = Address::new(vec![Letter::B; k]);
            assert_eq!(j.node_at(&path).unwrap(), 0);
        }
        assert!(j.node_at(&Address::new(vec![Letter::B; 12])).is_err());
    }

    #[test]
    fn distance_examples() {
        let j = jac(4);
        assert_eq!(j.distance(&j).unwrap(), Dyadic::Agree);
        let twin = j.with_node(&w("e"), 1).unwrap();
        assert_eq!(j.distance(&twin).unwrap(), Dyadic::Pow(0));
        assert_eq!(Dyadic::Pow(0).value(), 1.0);
        let deep = j.with_node(&w("bab"), 1 - j.node_at(&w("bab")).unwrap()).unwrap();
        assert_eq!(j.distance(&deep).unwrap(), Dyadic::Pow(3));
        assert!(matches!(
            j.distance(&jac(5)),
            Err(Error::DepthMismatch { .. })
        ));
        assert!(Dyadic::Agree < Dyadic::Pow(5));
        assert!(Dyadic::Pow(5) < Dyadic::Pow(2));
    }

    #[test]
    fn line_examples() {
        let j = jac(4);
        assert_eq!(j.line(1).unwrap().to_string(), "10");
        assert_eq!(j.line(2).unwrap().to_string(), "0010");
        assert_eq!(j.line(3).unwrap().to_string(), "10101010");
        assert!(matches!(j.line(4), Err(Error::LineOutOfRange { .. })));
    }

    #[test]
    fn sbtr_layout() {
        let j = jac(5);
        let bytes = j.to_sbtr_bytes();
        assert_eq!(&bytes[..4], b"SBTR");
        assert_eq!(bytes[4], 1);
        assert_eq!(&bytes[5..9], &5u32.to_le_bytes());
        assert_eq!(bytes.len(), 9 + 4);
        // 0 10 0010 10101010 0010001000000010 then one padding bit
        assert_eq!(&bytes[9..], &[0b0100_0101, 0b0101_0100, 0b0100_0100, 0b0000_0100]);
        assert_eq!(TreePrefix::from_sbtr_bytes(&bytes).unwrap(), j);
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(TreePrefix::from_sbtr_bytes(&bad).is_err());
        let mut bad = bytes.clone();
        *bad.last_mut().unwrap() |= 1;
        assert!(TreePrefix::from_sbtr_bytes(&bad).is_err());
    }

    #[test]
    fn text_encoding_round_trip() {
        for n in 1..9 {
            let j = jac(n);
            assert_eq!(TreePrefix::decode(&j.encode()).unwrap(), j);
        }
        assert!(TreePrefix::decode("3:zz").is_err());
    }
}
