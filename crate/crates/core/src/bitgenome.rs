//! Bit-string genomes and the OneMax / LeadingOnes function families.
//!
//! Positions are 0-based in the Rust API except where noted:
//! [`FitnessSpec::with_relevant_positions`] takes the 1-based indices
//! `b_1, ..., b_n` used in the literature.
//!
//! With an XOR mask `z`, a bit counts as "good" when it agrees with `z`, so
//! `z` itself is the unique optimum of the generalized functions.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::rng::RngStream;

const WORD: usize = 64;

#[inline]
fn words_for(len: usize) -> usize {
    len.div_ceil(WORD)
}

/// Mask of the valid bits in the last word of a `len`-bit string.
#[inline]
fn tail_mask(len: usize) -> u64 {
    match len % WORD {
        0 => !0,
        r => (1u64 << r) - 1,
    }
}

/// Fixed-length bit vector packed into 64-bit words (bit `i` lives in word
/// `i / 64` at bit `i % 64`). Bits past `len` are always zero.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BitGenome {
    words: Vec<u64>,
    len: usize,
}

impl BitGenome {
    pub fn zeros(len: usize) -> Result<Self> {
        if len == 0 {
            return Err(invalid("len", "genome length must be at least 1"));
        }
        Ok(Self {
            words: vec![0; words_for(len)],
            len,
        })
    }

    pub fn ones(len: usize) -> Result<Self> {
        let mut g = Self::zeros(len)?;
        g.words.iter_mut().for_each(|w| *w = !0);
        g.clear_tail();
        Ok(g)
    }

    pub fn from_bools(bits: &[bool]) -> Result<Self> {
        let mut g = Self::zeros(bits.len())?;
        for (i, &b) in bits.iter().enumerate() {
            g.set(i, b);
        }
        Ok(g)
    }

    /// Uniformly random genome.
    pub fn random(len: usize, rng: &mut RngStream) -> Result<Self> {
        let mut g = Self::zeros(len)?;
        for w in g.words.iter_mut() {
            *w = rng.next_u64();
        }
        g.clear_tail();
        Ok(g)
    }

    #[inline]
    fn clear_tail(&mut self) {
        let m = tail_mask(self.len);
        if let Some(last) = self.words.last_mut() {
            *last &= m;
        }
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.len
    }

    /// Always false; genomes have at least one position.
    pub fn is_empty(&self) -> bool {
        false
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        debug_assert!(i < self.len);
        (self.words[i / WORD] >> (i % WORD)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, i: usize, bit: bool) {
        assert!(i < self.len, "position {i} out of range for length {}", self.len);
        let m = 1u64 << (i % WORD);
        if bit {
            self.words[i / WORD] |= m;
        } else {
            self.words[i / WORD] &= !m;
        }
    }

    #[inline]
    pub fn flip(&mut self, i: usize) {
        debug_assert!(i < self.len);
        self.words[i / WORD] ^= 1u64 << (i % WORD);
    }

    /// XOR a word mask of the same length into the genome.
    #[inline]
    pub fn xor_words(&mut self, mask: &[u64]) {
        debug_assert_eq!(mask.len(), self.words.len());
        for (w, m) in self.words.iter_mut().zip(mask) {
            *w ^= m;
        }
        self.clear_tail();
    }

    pub fn complement(&self) -> Self {
        let mut g = self.clone();
        g.words.iter_mut().for_each(|w| *w = !*w);
        g.clear_tail();
        g
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    /// Number of positions at which the two genomes differ.
    pub fn hamming(&self, other: &Self) -> Result<usize> {
        if self.len != other.len {
            return Err(Error::LengthMismatch {
                expected: self.len,
                actual: other.len,
            });
        }
        Ok(self
            .words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (a ^ b).count_ones() as usize)
            .sum())
    }

    #[inline]
    pub fn words(&self) -> &[u64] {
        &self.words
    }

    pub fn iter(&self) -> impl Iterator<Item = bool> + '_ {
        (0..self.len).map(move |i| self.get(i))
    }
}

impl fmt::Display for BitGenome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in self.iter() {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl fmt::Debug for BitGenome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BitGenome({self})")
    }
}

impl FromStr for BitGenome {
    type Err = Error;

    /// Parses strings like `"1011"`; character `i` is position `i`.
    fn from_str(s: &str) -> Result<Self> {
        let bits = s
            .chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(invalid("bits", format!("unexpected character {other:?}"))),
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_bools(&bits)
    }
}

/// Samples each of `len` bits independently and fairly.
pub fn random_genome(len: usize, rng: &mut RngStream) -> Result<BitGenome> {
    BitGenome::random(len, rng)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    OneMax,
    LeadingOnes,
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Family::OneMax => "OneMax",
            Family::LeadingOnes => "LeadingOnes",
        })
    }
}

/// A fitness function: family, genome length, optional XOR target and
/// optional list of relevant positions.
#[derive(Clone, Debug, PartialEq)]
pub struct FitnessSpec {
    family: Family,
    genome_len: usize,
    xor_mask: Option<BitGenome>,
    /// 0-based, in the order given by the caller.
    positions: Option<Vec<usize>>,
    /// Word mask of the relevant positions (only when `positions` is set).
    relevant_words: Option<Vec<u64>>,
}

impl FitnessSpec {
    /// Plain `OneMax_n` / `LeadingOnes_n` on all `genome_len` positions.
    pub fn new(family: Family, genome_len: usize) -> Result<Self> {
        if genome_len == 0 {
            return Err(invalid("genome_len", "must be at least 1"));
        }
        Ok(Self {
            family,
            genome_len,
            xor_mask: None,
            positions: None,
            relevant_words: None,
        })
    }

    pub fn one_max(n: usize) -> Result<Self> {
        Self::new(Family::OneMax, n)
    }

    pub fn leading_ones(n: usize) -> Result<Self> {
        Self::new(Family::LeadingOnes, n)
    }

    /// Generalize through an XOR with the hidden target `z`.
    pub fn with_mask(mut self, z: BitGenome) -> Result<Self> {
        if z.len() != self.genome_len {
            return Err(Error::LengthMismatch {
                expected: self.genome_len,
                actual: z.len(),
            });
        }
        self.xor_mask = Some(z);
        Ok(self)
    }

    /// Restrict fitness to the 1-based positions `b_1, ..., b_n`.
    pub fn with_relevant_positions(mut self, positions: &[usize]) -> Result<Self> {
        if positions.is_empty() {
            return Err(invalid("relevant_positions", "at least one position required"));
        }
        let mut words = vec![0u64; words_for(self.genome_len)];
        let mut zero_based = Vec::with_capacity(positions.len());
        for &b in positions {
            if b == 0 || b > self.genome_len {
                return Err(invalid(
                    "relevant_positions",
                    format!("position {b} outside [1, {}]", self.genome_len),
                ));
            }
            let i = b - 1;
            let m = 1u64 << (i % WORD);
            if words[i / WORD] & m != 0 {
                return Err(invalid("relevant_positions", format!("position {b} repeated")));
            }
            words[i / WORD] |= m;
            zero_based.push(i);
        }
        self.positions = Some(zero_based);
        self.relevant_words = Some(words);
        Ok(self)
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn genome_len(&self) -> usize {
        self.genome_len
    }

    pub fn xor_mask(&self) -> Option<&BitGenome> {
        self.xor_mask.as_ref()
    }

    /// Relevant positions, 1-based, if restricted.
    pub fn relevant_positions(&self) -> Option<Vec<usize>> {
        self.positions
            .as_ref()
            .map(|p| p.iter().map(|i| i + 1).collect())
    }

    /// Effective solution length `n`.
    pub fn solution_len(&self) -> usize {
        self.positions.as_ref().map_or(self.genome_len, Vec::len)
    }

    pub fn max_fitness(&self) -> u64 {
        self.solution_len() as u64
    }

    /// True when LeadingOnes reads positions `0, 1, 2, ...`, the shape the
    /// event-skipping engine relies on. A mask does not matter there.
    pub(crate) fn is_plain_prefix(&self) -> bool {
        self.family == Family::LeadingOnes && self.positions.is_none()
    }

    /// Mask-adjusted word `w`: a set bit means "agrees with the optimum".
    #[inline]
    fn adjusted(&self, x: &BitGenome, w: usize) -> u64 {
        match &self.xor_mask {
            None => x.words[w],
            Some(z) => !(x.words[w] ^ z.words[w]),
        }
    }

    #[inline]
    fn adjusted_bit(&self, x: &BitGenome, i: usize) -> bool {
        match &self.xor_mask {
            None => x.get(i),
            Some(z) => x.get(i) == z.get(i),
        }
    }

    /// The genome with every bit replaced by its mask-adjusted value.
    pub fn adjust(&self, x: &BitGenome) -> Result<BitGenome> {
        self.check_len(x)?;
        let mut g = x.clone();
        for w in 0..g.words.len() {
            g.words[w] = self.adjusted(x, w);
        }
        g.clear_tail();
        Ok(g)
    }

    fn check_len(&self, x: &BitGenome) -> Result<()> {
        if x.len() != self.genome_len {
            return Err(Error::LengthMismatch {
                expected: self.genome_len,
                actual: x.len(),
            });
        }
        Ok(())
    }

    pub fn evaluate(&self, x: &BitGenome) -> Result<u64> {
        self.check_len(x)?;
        Ok(self.eval_unchecked(x))
    }

    pub fn is_optimal(&self, x: &BitGenome) -> Result<bool> {
        Ok(self.evaluate(x)? == self.max_fitness())
    }

    pub(crate) fn eval_unchecked(&self, x: &BitGenome) -> u64 {
        let nw = x.words.len();
        match (self.family, &self.positions) {
            (Family::OneMax, None) => {
                let mut total = 0u64;
                for w in 0..nw {
                    let mut a = self.adjusted(x, w);
                    if w + 1 == nw {
                        a &= tail_mask(self.genome_len);
                    }
                    total += a.count_ones() as u64;
                }
                total
            }
            (Family::OneMax, Some(_)) => {
                let rel = self.relevant_words.as_ref().expect("mask built with positions");
                (0..nw)
                    .map(|w| (self.adjusted(x, w) & rel[w]).count_ones() as u64)
                    .sum()
            }
            (Family::LeadingOnes, None) => {
                let mut total = 0usize;
                for w in 0..nw {
                    let a = self.adjusted(x, w);
                    if a == !0 {
                        total += WORD;
                    } else {
                        total += a.trailing_ones() as usize;
                        break;
                    }
                }
                total.min(self.genome_len) as u64
            }
            (Family::LeadingOnes, Some(pos)) => pos
                .iter()
                .take_while(|&&i| self.adjusted_bit(x, i))
                .count() as u64,
        }
    }
}

/// Fitness of `x` under `spec`.
pub fn evaluate(spec: &FitnessSpec, x: &BitGenome) -> Result<u64> {
    spec.evaluate(x)
}

/// Whether `x` attains the maximal fitness `n`.
pub fn is_optimal(spec: &FitnessSpec, x: &BitGenome) -> Result<bool> {
    spec.is_optimal(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn g(s: &str) -> BitGenome {
        s.parse().unwrap()
    }

    #[test]
    fn one_max_counts_ones() {
        let spec = FitnessSpec::one_max(4).unwrap();
        assert_eq!(evaluate(&spec, &g("1011")).unwrap(), 3);
    }

    #[test]
    fn leading_ones_counts_prefix() {
        let spec = FitnessSpec::leading_ones(5).unwrap();
        assert_eq!(evaluate(&spec, &g("11010")).unwrap(), 2);
    }

    #[test]
    fn leading_ones_follows_listed_order() {
        let spec = FitnessSpec::leading_ones(3)
            .unwrap()
            .with_relevant_positions(&[3, 1, 2])
            .unwrap();
        assert_eq!(evaluate(&spec, &g("101")).unwrap(), 2);
    }

    #[test]
    fn mask_counts_agreements() {
        let spec = FitnessSpec::one_max(4).unwrap().with_mask(g("1100")).unwrap();
        assert_eq!(evaluate(&spec, &g("1010")).unwrap(), 2);
        assert!(is_optimal(&spec, &g("1100")).unwrap());
    }

    #[test]
    fn optimality() {
        assert!(is_optimal(&FitnessSpec::one_max(3).unwrap(), &g("111")).unwrap());
        assert!(!is_optimal(&FitnessSpec::leading_ones(3).unwrap(), &g("110")).unwrap());
        let scattered = FitnessSpec::one_max(6)
            .unwrap()
            .with_relevant_positions(&[2, 5])
            .unwrap();
        assert!(is_optimal(&scattered, &g("010010")).unwrap());
    }

    #[test]
    fn length_mismatch_is_an_error() {
        let spec = FitnessSpec::one_max(4).unwrap();
        assert!(matches!(
            evaluate(&spec, &g("101")),
            Err(Error::LengthMismatch { expected: 4, actual: 3 })
        ));
        assert!(is_optimal(&spec, &g("11111")).is_err());
    }

    #[test]
    fn zero_length_rejected() {
        let mut rng = RngStream::new(0);
        assert!(random_genome(0, &mut rng).is_err());
        assert!(FitnessSpec::one_max(0).is_err());
    }

    #[test]
    fn bad_positions_rejected() {
        let base = FitnessSpec::one_max(4).unwrap();
        assert!(base.clone().with_relevant_positions(&[0]).is_err());
        assert!(base.clone().with_relevant_positions(&[5]).is_err());
        assert!(base.clone().with_relevant_positions(&[2, 2]).is_err());
        assert!(base.with_relevant_positions(&[]).is_err());
    }

    #[test]
    fn long_leading_ones_spans_words() {
        let mut x = BitGenome::ones(150).unwrap();
        let spec = FitnessSpec::leading_ones(150).unwrap();
        assert_eq!(spec.evaluate(&x).unwrap(), 150);
        x.set(130, false);
        assert_eq!(spec.evaluate(&x).unwrap(), 130);
        let om = FitnessSpec::one_max(150).unwrap();
        assert_eq!(om.evaluate(&x).unwrap(), 149);
    }

    #[test]
    fn random_genome_is_fair() {
        let mut rng = RngStream::new(11);
        let draws = 100_000;
        let ones: usize = (0..draws)
            .map(|_| random_genome(8, &mut rng).unwrap().count_ones())
            .sum();
        let mean = ones as f64 / draws as f64;
        assert!((mean - 4.0).abs() < 0.05, "mean popcount {mean}");

        let single: usize = (0..draws)
            .map(|_| random_genome(1, &mut rng).unwrap().count_ones())
            .sum();
        let p1 = single as f64 / draws as f64;
        assert!((p1 - 0.5).abs() < 0.01, "P(1) = {p1}");
    }

    #[test]
    fn display_round_trips() {
        assert_eq!(g("0110").to_string(), "0110");
        assert!("01a".parse::<BitGenome>().is_err());
    }
}
