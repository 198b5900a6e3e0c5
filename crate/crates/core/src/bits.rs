//! Fixed-length bit buffer, most-significant-bit first.
//!
//! Bit `i` lives in word `i / 64` at bit position `63 - i % 64`. Serializing
//! the words big-endian therefore yields the MSB-first byte layout used by the
//! on-disk tree format. Bits past `len` are always zero, so derived equality,
//! ordering and hashing agree with the logical bit sequence.

use std::fmt;

#[derive(Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Bits {
    words: Vec<u64>,
    len: usize,
}

#[inline]
fn words_for(len: usize) -> usize {
    len.div_ceil(64)
}

impl Bits {
    pub fn zeros(len: usize) -> Self {
        Bits {
            words: vec![0; words_for(len)],
            len,
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        debug_assert!(i < self.len);
        (self.words[i >> 6] >> (63 - (i & 63))) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, i: usize, value: bool) {
        debug_assert!(i < self.len);
        let mask = 1u64 << (63 - (i & 63));
        if value {
            self.words[i >> 6] |= mask;
        } else {
            self.words[i >> 6] &= !mask;
        }
    }

    /// Reads `n <= 64` bits starting at `off`, right-aligned, first bit most significant.
    #[inline]
    pub fn read(&self, off: usize, n: usize) -> u64 {
        debug_assert!(n <= 64 && off + n <= self.len);
        if n == 0 {
            return 0;
        }
        let w = off >> 6;
        let b = off & 63;
        let mut hi = self.words[w] << b;
        if b + n > 64 {
            hi |= self.words[w + 1] >> (64 - b);
        }
        hi >> (64 - n)
    }

    /// Writes the low `n <= 64` bits of `value` at `off`.
    #[inline]
    pub fn write(&mut self, off: usize, n: usize, value: u64) {
        debug_assert!(n <= 64 && off + n <= self.len);
        if n == 0 {
            return;
        }
        let v = value << (64 - n);
        let mask = u64::MAX << (64 - n);
        let w = off >> 6;
        let b = off & 63;
        self.words[w] = (self.words[w] & !(mask >> b)) | (v >> b);
        if b + n > 64 {
            let s = 64 - b;
            self.words[w + 1] = (self.words[w + 1] & !(mask << s)) | (v << s);
        }
    }

    /// Copies `len` bits from `src[src_off..]` into `self[dst_off..]`.
    pub fn copy_from(&mut self, dst_off: usize, src: &Bits, src_off: usize, len: usize) {
        let mut done = 0;
        while done < len {
            let n = (len - done).min(64);
            let v = src.read(src_off + done, n);
            self.write(dst_off + done, n, v);
            done += n;
        }
    }

    /// Copy of the bit range `[off, off + len)`.
    pub fn slice(&self, off: usize, len: usize) -> Bits {
        let mut out = Bits::zeros(len);
        out.copy_from(0, self, off, len);
        out
    }

    pub fn range_eq(&self, off: usize, other: &Bits, other_off: usize, len: usize) -> bool {
        let mut done = 0;
        while done < len {
            let n = (len - done).min(64);
            if self.read(off + done, n) != other.read(other_off + done, n) {
                return false;
            }
            done += n;
        }
        true
    }

    /// Offset of the first differing bit in the two ranges, if any.
    pub fn first_difference(
        &self,
        off: usize,
        other: &Bits,
        other_off: usize,
        len: usize,
    ) -> Option<usize> {
        let mut done = 0;
        while done < len {
            let n = (len - done).min(64);
            let x = self.read(off + done, n) ^ other.read(other_off + done, n);
            if x != 0 {
                return Some(done + (x.leading_zeros() as usize - (64 - n)));
            }
            done += n;
        }
        None
    }

    pub fn invert(&mut self) {
        for w in &mut self.words {
            *w = !*w;
        }
        self.clear_tail();
    }

    fn clear_tail(&mut self) {
        let r = self.len & 63;
        if r != 0 {
            if let Some(last) = self.words.last_mut() {
                *last &= u64::MAX << (64 - r);
            }
        }
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    /// MSB-first packed bytes, `ceil(len / 8)` of them, zero padded.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out: Vec<u8> = self.words.iter().flat_map(|w| w.to_be_bytes()).collect();
        out.truncate(self.len.div_ceil(8));
        out
    }

    /// Inverse of [`Bits::to_bytes`]. Returns `None` when the byte count is
    /// wrong or padding bits are set.
    pub fn from_bytes(bytes: &[u8], len: usize) -> Option<Bits> {
        if bytes.len() != len.div_ceil(8) {
            return None;
        }
        let mut out = Bits::zeros(len);
        for (i, chunk) in bytes.chunks(8).enumerate() {
            let mut buf = [0u8; 8];
            buf[..chunk.len()].copy_from_slice(chunk);
            out.words[i] = u64::from_be_bytes(buf);
        }
        let before = out.words.last().copied();
        out.clear_tail();
        if out.words.last().copied() != before {
            return None;
        }
        Some(out)
    }

    pub fn from_bools<I: IntoIterator<Item = bool>>(iter: I) -> Bits {
        let v: Vec<bool> = iter.into_iter().collect();
        let mut out = Bits::zeros(v.len());
        for (i, b) in v.into_iter().enumerate() {
            out.set(i, b);
        }
        out
    }

    /// Parses a string of `0`/`1`, ignoring spaces.
    pub fn parse(s: &str) -> Option<Bits> {
        let mut v = Vec::with_capacity(s.len());
        for c in s.chars() {
            match c {
                '0' => v.push(false),
                '1' => v.push(true),
                ' ' | '_' => {}
                _ => return None,
            }
        }
        Some(Bits::from_bools(v))
    }

    pub fn iter(&self) -> impl Iterator<Item = bool> + '_ {
        (0..self.len).map(move |i| self.get(i))
    }
}

impl fmt::Display for Bits {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in self.iter() {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl fmt::Debug for Bits {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Bits({self})")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn read_write_across_word_boundary() {
        let mut b = Bits::zeros(200);
        b.write(60, 10, 0b1011001110);
        assert_eq!(b.read(60, 10), 0b1011001110);
        assert!(b.get(60));
        assert!(!b.get(61));
        assert_eq!(b.count_ones(), 6);
        b.write(0, 64, u64::MAX);
        assert_eq!(b.read(0, 64), u64::MAX);
        assert_eq!(b.read(60, 10), 0b1111001110);
    }

    #[test]
    fn bytes_are_msb_first() {
        let b = Bits::parse("1000000001").unwrap();
        assert_eq!(b.to_bytes(), vec![0x80, 0x40]);
        assert_eq!(Bits::from_bytes(&[0x80, 0x40], 10).unwrap(), b);
        // padding bit set
        assert!(Bits::from_bytes(&[0x80, 0x60], 10).is_none());
        assert!(Bits::from_bytes(&[0x80], 10).is_none());
    }

    #[test]
    fn invert_keeps_tail_clear() {
        let mut b = Bits::zeros(3);
        b.invert();
        assert_eq!(b, Bits::parse("111").unwrap());
        assert_eq!(b.to_bytes(), vec![0xE0]);
    }

    proptest! {
        #[test]
        fn copy_matches_bitwise(src in proptest::collection::vec(any::<bool>(), 1..300),
                                a in 0usize..300, b in 0usize..300, l in 0usize..300) {
            let src = Bits::from_bools(src);
            let n = src.len();
            let so = a % n;
            let len = l % (n - so + 1);
            let mut dst = Bits::zeros(len + b);
            dst.copy_from(b, &src, so, len);
            for i in 0..len {
                prop_assert_eq!(dst.get(b + i), src.get(so + i));
            }
            prop_assert!(dst.range_eq(b, &src, so, len));
            prop_assert_eq!(dst.count_ones(), (0..len).filter(|&i| src.get(so + i)).count());
        }

        #[test]
        fn bytes_round_trip(v in proptest::collection::vec(any::<bool>(), 0..200)) {
            let b = Bits::from_bools(v);
            prop_assert_eq!(Bits::from_bytes(&b.to_bytes(), b.len()).unwrap(), b);
        }
    }
}
