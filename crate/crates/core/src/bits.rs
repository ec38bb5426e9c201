//! Packed binary sequences, run decompositions and run vectors.

use std::fmt;
use std::str::FromStr;

use rand::Rng;

use crate::error::{Error, Result};

const WORD: usize = 64;

/// A finite binary sequence packed 64 bits per word.
///
/// Bit `i` lives in word `i / 64` at bit position `i % 64`. Bits past `len`
/// in the last word are always zero, so the derived equality, hashing and
/// ordering only depend on the logical contents.
#[derive(Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BitSeq {
    words: Vec<u64>,
    len: usize,
}

impl BitSeq {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_capacity(bits: usize) -> Self {
        BitSeq {
            words: Vec::with_capacity(bits.div_ceil(WORD)),
            len: 0,
        }
    }

    pub fn zeros(len: usize) -> Self {
        BitSeq {
            words: vec![0; len.div_ceil(WORD)],
            len,
        }
    }

    /// `len` i.i.d. Bernoulli(1/2) bits drawn from `rng`.
    pub fn random<R: Rng + ?Sized>(len: usize, rng: &mut R) -> Self {
        let mut words: Vec<u64> = (0..len.div_ceil(WORD)).map(|_| rng.random()).collect();
        let tail = len % WORD;
        if tail != 0 {
            if let Some(last) = words.last_mut() {
                *last &= (1u64 << tail) - 1;
            }
        }
        BitSeq { words, len }
    }

    /// Builds a sequence from the low `len` bits of `value` (bit 0 first).
    pub fn from_u64(value: u64, len: usize) -> Self {
        assert!(len <= WORD, "from_u64 holds at most 64 bits");
        let masked = if len == WORD {
            value
        } else {
            value & ((1u64 << len) - 1)
        };
        BitSeq {
            words: if len == 0 { Vec::new() } else { vec![masked] },
            len,
        }
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.len
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        assert!(i < self.len, "bit index {i} out of range for length {}", self.len);
        (self.words[i / WORD] >> (i % WORD)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, i: usize, bit: bool) {
        assert!(i < self.len, "bit index {i} out of range for length {}", self.len);
        let mask = 1u64 << (i % WORD);
        if bit {
            self.words[i / WORD] |= mask;
        } else {
            self.words[i / WORD] &= !mask;
        }
    }

    #[inline]
    pub fn push(&mut self, bit: bool) {
        if self.len % WORD == 0 {
            self.words.push(0);
        }
        if bit {
            self.words[self.len / WORD] |= 1u64 << (self.len % WORD);
        }
        self.len += 1;
    }

    pub fn extend_from(&mut self, other: &BitSeq) {
        for bit in other.iter() {
            self.push(bit);
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = bool> + '_ {
        (0..self.len).map(move |i| (self.words[i / WORD] >> (i % WORD)) & 1 == 1)
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    /// Positions of the set bits in increasing order.
    pub fn ones(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(wi, &w)| {
            let mut rest = w;
            std::iter::from_fn(move || {
                if rest == 0 {
                    return None;
                }
                let tz = rest.trailing_zeros() as usize;
                rest &= rest - 1;
                Some(wi * WORD + tz)
            })
        })
    }

    pub fn complement(&self) -> BitSeq {
        let mut out = BitSeq {
            words: self.words.iter().map(|w| !w).collect(),
            len: self.len,
        };
        out.clear_tail();
        out
    }

    pub fn xor(&self, other: &BitSeq) -> BitSeq {
        assert_eq!(self.len, other.len, "xor of sequences with different lengths");
        BitSeq {
            words: self
                .words
                .iter()
                .zip(&other.words)
                .map(|(a, b)| a ^ b)
                .collect(),
            len: self.len,
        }
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    /// The low 128 bits packed into an integer (bit 0 first).
    pub fn to_u128(&self) -> u128 {
        assert!(self.len <= 128, "to_u128 holds at most 128 bits");
        self.words
            .iter()
            .enumerate()
            .fold(0u128, |acc, (i, &w)| acc | (u128::from(w) << (i * WORD)))
    }

    /// Positions `i >= 1` where bit `i` differs from bit `i - 1`.
    pub fn transitions(&self) -> Vec<usize> {
        let mut out = Vec::new();
        let mut carry = 0u64;
        for (wi, &w) in self.words.iter().enumerate() {
            let prev = (w << 1) | carry;
            let mut diff = w ^ prev;
            if wi == 0 {
                diff &= !1;
            }
            let base = wi * WORD;
            let valid = self.len.saturating_sub(base).min(WORD);
            if valid < WORD {
                diff &= (1u64 << valid) - 1;
            }
            while diff != 0 {
                let tz = diff.trailing_zeros() as usize;
                out.push(base + tz);
                diff &= diff - 1;
            }
            carry = w >> (WORD - 1);
        }
        out
    }

    fn clear_tail(&mut self) {
        let tail = self.len % WORD;
        if tail != 0 {
            if let Some(last) = self.words.last_mut() {
                *last &= (1u64 << tail) - 1;
            }
        }
    }
}

impl FromIterator<bool> for BitSeq {
    fn from_iter<I: IntoIterator<Item = bool>>(iter: I) -> Self {
        let mut out = BitSeq::new();
        for bit in iter {
            out.push(bit);
        }
        out
    }
}

impl fmt::Display for BitSeq {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for bit in self.iter() {
            f.write_str(if bit { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl fmt::Debug for BitSeq {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BitSeq(\"{self}\")")
    }
}

impl FromStr for BitSeq {
    type Err = Error;

    /// Parses the canonical text form, e.g. `"0011"`. Whitespace, `|` and `_`
    /// are accepted as visual separators and skipped.
    fn from_str(s: &str) -> Result<Self> {
        let mut out = BitSeq::with_capacity(s.len());
        for c in s.chars() {
            match c {
                '0' => out.push(false),
                '1' => out.push(true),
                c if c.is_whitespace() || c == '|' || c == '_' => {}
                other => {
                    return Err(Error::usage(format!(
                        "invalid bit character {other:?} in {s:?}"
                    )))
                }
            }
        }
        Ok(out)
    }
}

/// Maximal runs of a sequence: the first symbol and the run lengths in order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RunDecomposition {
    pub first_symbol: bool,
    pub run_lengths: Vec<usize>,
}

impl RunDecomposition {
    /// Number of runs `M`.
    pub fn len(&self) -> usize {
        self.run_lengths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.run_lengths.is_empty()
    }

    pub fn total(&self) -> usize {
        self.run_lengths.iter().sum()
    }

    /// Symbol carried by run `j`.
    #[inline]
    pub fn symbol(&self, j: usize) -> bool {
        self.first_symbol ^ (j % 2 == 1)
    }

    /// Start position of every run.
    pub fn starts(&self) -> Vec<usize> {
        let mut acc = 0;
        self.run_lengths
            .iter()
            .map(|&l| {
                let s = acc;
                acc += l;
                s
            })
            .collect()
    }

    /// Index of the run containing each position.
    pub fn run_index(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.total());
        for (j, &l) in self.run_lengths.iter().enumerate() {
            out.extend(std::iter::repeat_n(j, l));
        }
        out
    }

    pub fn reconstruct(&self) -> BitSeq {
        let mut out = BitSeq::with_capacity(self.total());
        for (j, &l) in self.run_lengths.iter().enumerate() {
            let bit = self.symbol(j);
            for _ in 0..l {
                out.push(bit);
            }
        }
        out
    }
}

pub fn runs_of(x: &BitSeq) -> RunDecomposition {
    if x.is_empty() {
        return RunDecomposition {
            first_symbol: false,
            run_lengths: Vec::new(),
        };
    }
    let mut run_lengths = Vec::new();
    let mut prev = 0;
    for t in x.transitions() {
        run_lengths.push(t - prev);
        prev = t;
    }
    run_lengths.push(x.len() - prev);
    RunDecomposition {
        first_symbol: x.get(0),
        run_lengths,
    }
}

/// Per-input-run output lengths `(|Y(1)|, ..., |Y(M)|)`.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RunVector(pub Vec<usize>);

impl RunVector {
    pub fn lengths(&self) -> &[usize] {
        &self.0
    }

    pub fn total(&self) -> usize {
        self.0.iter().sum()
    }

    /// Output offsets at which each run image starts.
    pub fn offsets(&self) -> Vec<usize> {
        let mut acc = 0;
        self.0
            .iter()
            .map(|&k| {
                let o = acc;
                acc += k;
                o
            })
            .collect()
    }
}

impl fmt::Display for RunVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("(")?;
        for (i, k) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{k}")?;
        }
        f.write_str(")")
    }
}
