//! Finite binary strings, the prefix order, self-delimiting codes and pairing.
//!
//! [`BitString`] is the carrier for programs, outputs and the supports of
//! every measure in the crate. Bits are packed MSB-first into `u64` words so
//! that equal-length strings compare lexicographically word by word.
//!
//! The derived-looking `Ord` impl is *shortlex* (length first, then
//! lexicographic). That is the canonical program order used by enumeration
//! and by the halting-sequence index, so sorted collections of bit strings
//! come out in that order for free.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

const WORD: usize = 64;

/// A finite string over {0, 1}. The empty string plays the role of ⊥.
#[derive(Clone, Default, PartialEq, Eq, Hash)]
pub struct BitString {
    len: usize,
    // Unused trailing bits of the last word are always zero.
    words: Vec<u64>,
}

impl BitString {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_capacity(bits: usize) -> Self {
        Self { len: 0, words: Vec::with_capacity(bits.div_ceil(WORD)) }
    }

    /// `0^n`.
    pub fn zeros(n: usize) -> Self {
        Self { len: n, words: vec![0; n.div_ceil(WORD)] }
    }

    /// `1^n`.
    pub fn ones(n: usize) -> Self {
        let mut s = Self::with_capacity(n);
        for _ in 0..n {
            s.push(true);
        }
        s
    }

    pub fn from_bits<I: IntoIterator<Item = bool>>(bits: I) -> Self {
        let mut s = Self::new();
        for b in bits {
            s.push(b);
        }
        s
    }

    /// The `width`-bit big-endian representation of `value`.
    pub fn from_u64(value: u64, width: usize) -> Self {
        assert!(width <= 64 || value == 0, "width {width} too large for a u64 value");
        let mut s = Self::with_capacity(width);
        for i in (0..width).rev() {
            s.push(i < 64 && (value >> i) & 1 == 1);
        }
        s
    }

    /// Inverse of [`BitString::canonical_index`]: the `index`-th string in
    /// shortlex order (⊥, 0, 1, 00, 01, ...).
    pub fn from_canonical_index(index: u64) -> Self {
        // Strings of length n occupy indices 2^n - 1 .. 2^(n+1) - 2.
        let len = 63 - (index + 1).leading_zeros() as usize;
        let value = index + 1 - (1u64 << len);
        Self::from_u64(value, len)
    }

    /// Position of this string in shortlex order. Defined for lengths < 64.
    pub fn canonical_index(&self) -> u64 {
        assert!(self.len < 64, "canonical index undefined for length {}", self.len);
        (1u64 << self.len) - 1 + self.to_u64()
    }

    /// The big-endian integer value. Panics on lengths above 64.
    pub fn to_u64(&self) -> u64 {
        assert!(self.len <= 64, "value of a {}-bit string does not fit in u64", self.len);
        match self.len {
            0 => 0,
            n => self.words[0] >> (WORD - n),
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn get(&self, i: usize) -> Option<bool> {
        (i < self.len).then(|| self.words[i / WORD] >> (WORD - 1 - i % WORD) & 1 == 1)
    }

    pub fn push(&mut self, bit: bool) {
        if self.len % WORD == 0 {
            self.words.push(0);
        }
        if bit {
            let i = self.len;
            self.words[i / WORD] |= 1 << (WORD - 1 - i % WORD);
        }
        self.len += 1;
    }

    pub fn pop(&mut self) -> Option<bool> {
        let last = self.get(self.len.checked_sub(1)?)?;
        self.truncate(self.len - 1);
        Some(last)
    }

    pub fn extend_from(&mut self, other: &BitString) {
        for b in other.iter() {
            self.push(b);
        }
    }

    pub fn concat(&self, other: &BitString) -> BitString {
        let mut out = Self::with_capacity(self.len + other.len);
        out.extend_from(self);
        out.extend_from(other);
        out
    }

    /// Keep the first `n` bits (no-op when `n >= len`).
    pub fn truncate(&mut self, n: usize) {
        if n >= self.len {
            return;
        }
        self.len = n;
        self.words.truncate(n.div_ceil(WORD));
        if n % WORD != 0 {
            let last = self.words.len() - 1;
            self.words[last] &= !0u64 << (WORD - n % WORD);
        }
    }

    /// `x_{≤n}`: the first `min(n, len)` bits.
    pub fn prefix(&self, n: usize) -> BitString {
        let mut out = self.clone();
        out.truncate(n);
        out
    }

    /// `x_{>n}`: everything after the first `n` bits.
    pub fn suffix_after(&self, n: usize) -> BitString {
        Self::from_bits(self.iter().skip(n))
    }

    /// `y⁻`, the parent of a nonempty string (its last bit removed).
    pub fn parent(&self) -> Result<BitString> {
        if self.is_empty() {
            return Err(Error::NoParent);
        }
        Ok(self.prefix(self.len - 1))
    }

    /// `x ⊑ y`.
    pub fn is_prefix_of(&self, other: &BitString) -> bool {
        if self.len > other.len {
            return false;
        }
        let full = self.len / WORD;
        if self.words[..full] != other.words[..full] {
            return false;
        }
        match self.len % WORD {
            0 => true,
            r => {
                let mask = !0u64 << (WORD - r);
                (other.words[full] & mask) == self.words[full]
            }
        }
    }

    /// `x ⊏ y`.
    pub fn is_strict_prefix_of(&self, other: &BitString) -> bool {
        self.len < other.len && self.is_prefix_of(other)
    }

    /// True when one of the two is a prefix of the other.
    pub fn comparable(&self, other: &BitString) -> bool {
        self.is_prefix_of(other) || other.is_prefix_of(self)
    }

    pub fn child(&self, bit: bool) -> BitString {
        let mut c = self.clone();
        c.push(bit);
        c
    }

    pub fn iter(&self) -> impl DoubleEndedIterator<Item = bool> + ExactSizeIterator + '_ {
        (0..self.len).map(move |i| self.words[i / WORD] >> (WORD - 1 - i % WORD) & 1 == 1)
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    fn lex_cmp(&self, other: &BitString) -> Ordering {
        for (a, b) in self.words.iter().zip(&other.words) {
            match a.cmp(b) {
                Ordering::Equal => {}
                o => return o,
            }
        }
        // Equal on the common words; the shorter one is a prefix.
        self.len.cmp(&other.len)
    }

    /// All `2^n` strings of length `n`, in increasing numeric order.
    pub fn all_of_length(n: usize) -> impl Iterator<Item = BitString> {
        assert!(n < 64);
        (0..1u64 << n).map(move |v| BitString::from_u64(v, n))
    }

    /// Every string of length `≤ n` in shortlex order.
    pub fn all_up_to(n: usize) -> impl Iterator<Item = BitString> {
        (0..=n).flat_map(BitString::all_of_length)
    }
}

impl Ord for BitString {
    fn cmp(&self, other: &Self) -> Ordering {
        self.len.cmp(&other.len).then_with(|| self.lex_cmp(other))
    }
}

impl PartialOrd for BitString {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_empty() {
            return f.write_str("eps");
        }
        let s: String = self.iter().map(|b| if b { '1' } else { '0' }).collect();
        f.write_str(&s)
    }
}

impl fmt::Debug for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "\"{self}\"")
    }
}

impl FromStr for BitString {
    type Err = Error;

    /// Accepts ASCII `0`/`1`; the empty string and `eps` both denote ⊥.
    fn from_str(s: &str) -> Result<Self> {
        if s == "eps" {
            return Ok(Self::new());
        }
        let mut out = Self::with_capacity(s.len());
        for c in s.chars() {
            match c {
                '0' => out.push(false),
                '1' => out.push(true),
                _ => return Err(Error::Parse(format!("not a bit string: {s:?}"))),
            }
        }
        Ok(out)
    }
}

/// Shorthand for tests and catalogs: panics on malformed input.
pub fn bits(s: &str) -> BitString {
    s.parse().expect("malformed bit-string literal")
}

/// `⟨x⟩ = 1^{‖x‖} 0 x`.
pub fn self_delimit(x: &BitString) -> BitString {
    let mut out = BitString::with_capacity(2 * x.len() + 1);
    for _ in 0..x.len() {
        out.push(true);
    }
    out.push(false);
    out.extend_from(x);
    out
}

/// Split `s` into the leading self-delimited code's payload and the rest.
pub fn parse_self_delimited(s: &BitString) -> Result<(BitString, BitString)> {
    let n = s
        .iter()
        .position(|b| !b)
        .ok_or_else(|| Error::MalformedCode(format!("{s}: no terminator")))?;
    let start = n + 1;
    if s.len() < start + n {
        return Err(Error::MalformedCode(format!(
            "{s}: payload needs {n} bits, {} available",
            s.len() - start
        )));
    }
    let payload = BitString::from_bits(s.iter().skip(start).take(n));
    Ok((payload, s.suffix_after(start + n)))
}

/// Joint encoding `⟨x⟩⟨y⟩`, injective on pairs without external length data.
pub fn pair_encode(x: &BitString, y: &BitString) -> BitString {
    self_delimit(x).concat(&self_delimit(y))
}

/// `⟨x⟩y`; only injective when the length of `y` is known from context.
pub fn delimit_then(x: &BitString, y: &BitString) -> BitString {
    self_delimit(x).concat(y)
}

/// Inverse of [`pair_encode`]; the whole input must be consumed.
pub fn pair_decode(s: &BitString) -> Result<(BitString, BitString)> {
    let (x, rest) = parse_self_delimited(s)?;
    let (y, rest) = parse_self_delimited(&rest)?;
    if !rest.is_empty() {
        return Err(Error::MalformedCode(format!("{s}: {} trailing bits", rest.len())));
    }
    Ok((x, y))
}

/// `x ⊲ y`: strict numeric order on strings of equal length.
pub fn numeric_less(x: &BitString, y: &BitString) -> Result<bool> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch { left: x.len(), right: y.len() });
    }
    Ok(x.lex_cmp(y) == Ordering::Less)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn self_delimit_examples() {
        assert_eq!(self_delimit(&BitString::new()), bits("0"));
        assert_eq!(self_delimit(&bits("1")), bits("101"));
        assert_eq!(self_delimit(&bits("01")), bits("11001"));
    }

    #[test]
    fn parse_examples() {
        assert_eq!(parse_self_delimited(&bits("0")).unwrap(), (bits(""), bits("")));
        assert_eq!(parse_self_delimited(&bits("10111")).unwrap(), (bits("1"), bits("11")));
        assert!(matches!(parse_self_delimited(&bits("111")), Err(Error::MalformedCode(_))));
        assert!(matches!(parse_self_delimited(&bits("1101")), Err(Error::MalformedCode(_))));
    }

    #[test]
    fn pair_examples() {
        assert_eq!(pair_encode(&bits(""), &bits("")), bits("00"));
        assert_eq!(pair_encode(&bits("1"), &bits("0")), bits("101100"));
        assert_ne!(pair_encode(&bits("1"), &bits("")), pair_encode(&bits(""), &bits("1")));
        assert_eq!(delimit_then(&bits("1"), &bits("0")), bits("1010"));
        assert_eq!(pair_decode(&bits("101100")).unwrap(), (bits("1"), bits("0")));
    }

    #[test]
    fn numeric_less_examples() {
        assert!(numeric_less(&bits("01"), &bits("10")).unwrap());
        assert!(!numeric_less(&bits("11"), &bits("11")).unwrap());
        assert!(matches!(
            numeric_less(&bits("0"), &bits("10")),
            Err(Error::LengthMismatch { left: 1, right: 2 })
        ));
    }

    #[test]
    fn parent_of_bottom_is_an_error() {
        assert!(matches!(BitString::new().parent(), Err(Error::NoParent)));
        assert_eq!(bits("10").parent().unwrap(), bits("1"));
        assert_eq!(bits("11").parent().unwrap(), bits("1"));
    }

    #[test]
    fn shortlex_order_and_index() {
        let all: Vec<_> = BitString::all_up_to(3).collect();
        for (i, s) in all.iter().enumerate() {
            assert_eq!(s.canonical_index(), i as u64);
            assert_eq!(&BitString::from_canonical_index(i as u64), s);
        }
        assert!(all.windows(2).all(|w| w[0] < w[1]));
        assert!(bits("1") < bits("00"));
    }

    #[test]
    fn long_strings_cross_word_boundaries() {
        let mut s = BitString::ones(70);
        s.push(false);
        assert_eq!(s.len(), 71);
        assert!(BitString::ones(65).is_prefix_of(&s));
        assert!(!BitString::ones(72).is_prefix_of(&s));
        s.truncate(64);
        assert_eq!(s, BitString::ones(64));
        assert_eq!(s.pop(), Some(true));
        assert_eq!(s, BitString::ones(63));
        assert_eq!(bits("eps"), BitString::new());
        assert_eq!(BitString::new().to_string(), "eps");
    }

    #[test]
    fn round_trip_exhaustive() {
        let tails: Vec<_> = BitString::all_up_to(4).collect();
        for x in BitString::all_up_to(16) {
            let code = self_delimit(&x);
            for r in &tails {
                let (px, pr) = parse_self_delimited(&code.concat(r)).unwrap();
                assert_eq!((&px, &pr), (&x, r));
            }
        }
    }

    #[test]
    fn prefix_freeness_exhaustive() {
        let codes: Vec<_> = BitString::all_up_to(10).map(|x| self_delimit(&x)).collect();
        // Codes of distinct strings: sorting makes any prefix pair adjacent
        // in lexicographic order, so checking neighbours is enough.
        let mut lex = codes.clone();
        lex.sort_by(|a, b| a.lex_cmp(b));
        for w in lex.windows(2) {
            assert!(!w[0].is_prefix_of(&w[1]), "{} prefixes {}", w[0], w[1]);
        }
        assert_eq!(lex.len(), (1 << 11) - 1);
    }

    #[test]
    fn numeric_less_is_strict_total_order() {
        for n in 0..=8 {
            let all: Vec<_> = BitString::all_of_length(n).collect();
            for x in &all {
                assert!(!numeric_less(x, x).unwrap());
                for y in &all {
                    let (a, b) = (numeric_less(x, y).unwrap(), numeric_less(y, x).unwrap());
                    assert!(!(a && b));
                    assert_eq!(a || b, x != y);
                    assert_eq!(a, x.to_u64() < y.to_u64());
                }
            }
        }
    }
}
