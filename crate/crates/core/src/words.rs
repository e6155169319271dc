//! The semigroup `G = ⟨T1, T2 | T1³T2 = T2T1³⟩`.
//!
//! Words are reduced with the single length-preserving rule
//! `T1 T1 T1 T2 → T2 T1 T1 T1`. The left side has no self-overlap, so the
//! system has no critical pairs; every T2 moving left strictly decreases the
//! sum of T2 positions, so it terminates. Normal forms are therefore unique
//! and two words are equal in `G` iff their normal forms coincide.
//!
//! Textual syntax: `1` for T1, `2` for T2, `e` for the empty word.

use std::cmp::Ordering;
use std::collections::HashMap;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Default ceiling on the number of products an independence search may form.
pub const DEFAULT_PRODUCT_CEILING: u64 = 1_000_000;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum WordError {
    #[error("invalid letter {0:?} in word (expected '1', '2' or 'e')")]
    InvalidLetter(char),
    #[error("independence search needs {needed} products, ceiling is {ceiling}")]
    TooManyProducts { needed: u64, ceiling: u64 },
    #[error("independence search needs at least one element and one factor")]
    EmptySearch,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Generator {
    T1,
    T2,
}

impl Generator {
    pub fn symbol(self) -> char {
        match self {
            Generator::T1 => '1',
            Generator::T2 => '2',
        }
    }
}

/// A finite word over `{T1, T2}`; `canonical` records whether it is already
/// in normal form. Equality, hashing and ordering look at the letters only.
#[derive(Clone, Debug, Default)]
pub struct Word {
    letters: Vec<Generator>,
    canonical: bool,
}

fn has_redex(letters: &[Generator]) -> bool {
    redex_positions(letters).next().is_some()
}

fn redex_positions(letters: &[Generator]) -> impl Iterator<Item = usize> + '_ {
    letters.windows(4).enumerate().filter_map(|(i, w)| {
        (w == [Generator::T1, Generator::T1, Generator::T1, Generator::T2]).then_some(i)
    })
}

/// Appends `g` to a canonical letter sequence, keeping it canonical.
fn push_canonical(letters: &mut Vec<Generator>, g: Generator) {
    if g == Generator::T2 {
        let trailing = letters.iter().rev().take_while(|&&l| l == Generator::T1).count();
        let shift = trailing - trailing % 3;
        letters.insert(letters.len() - shift, Generator::T2);
    } else {
        letters.push(g);
    }
}

impl Word {
    pub fn empty() -> Self {
        Word { letters: Vec::new(), canonical: true }
    }

    pub fn from_letters(letters: Vec<Generator>) -> Self {
        let canonical = !has_redex(&letters);
        Word { letters, canonical }
    }

    pub fn letters(&self) -> &[Generator] {
        &self.letters
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    pub fn is_canonical(&self) -> bool {
        self.canonical
    }

    pub fn normalize(&self) -> Word {
        if self.canonical {
            return self.clone();
        }
        let mut out = Vec::with_capacity(self.letters.len());
        for &g in &self.letters {
            push_canonical(&mut out, g);
        }
        Word { letters: out, canonical: true }
    }

    /// Normal form of `self · g`.
    pub fn append(&self, g: Generator) -> Word {
        let mut w = self.normalize();
        push_canonical(&mut w.letters, g);
        w
    }

    /// Normal form of `self · other`.
    pub fn compose(&self, other: &Word) -> Word {
        let mut w = self.normalize();
        for &g in &other.letters {
            push_canonical(&mut w.letters, g);
        }
        w
    }

    /// Applies the rewrite at position `pos`, which must be a redex.
    pub fn rewrite_at(&self, pos: usize) -> Option<Word> {
        let l = &self.letters;
        if pos + 4 > l.len() || l[pos..pos + 4] != [Generator::T1, Generator::T1, Generator::T1, Generator::T2] {
            return None;
        }
        let mut letters = l.clone();
        letters[pos..pos + 4].copy_from_slice(&[Generator::T2, Generator::T1, Generator::T1, Generator::T1]);
        Some(Word::from_letters(letters))
    }

    pub fn redexes(&self) -> Vec<usize> {
        redex_positions(&self.letters).collect()
    }

    /// Packs a word of at most 58 letters into a `u64`: the letters in the
    /// low bits (T2 = 1) and the length in the top six bits.
    pub fn key(&self) -> Option<u64> {
        if self.letters.len() > 58 {
            return None;
        }
        let mut bits = 0u64;
        for (i, &g) in self.letters.iter().enumerate() {
            if g == Generator::T2 {
                bits |= 1 << i;
            }
        }
        Some(bits | ((self.letters.len() as u64) << 58))
    }
}

impl PartialEq for Word {
    fn eq(&self, other: &Self) -> bool {
        self.letters == other.letters
    }
}

impl Eq for Word {}

impl Hash for Word {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.letters.hash(state)
    }
}

/// Length-lexicographic with `T1 < T2`.
impl Ord for Word {
    fn cmp(&self, other: &Self) -> Ordering {
        self.letters
            .len()
            .cmp(&other.letters.len())
            .then_with(|| self.letters.cmp(&other.letters))
    }
}

impl PartialOrd for Word {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.letters.is_empty() {
            return f.write_str("e");
        }
        for g in &self.letters {
            write!(f, "{}", g.symbol())?;
        }
        Ok(())
    }
}

impl FromStr for Word {
    type Err = WordError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if s == "e" || s.is_empty() {
            return Ok(Word::empty());
        }
        let letters = s
            .chars()
            .map(|c| match c {
                '1' => Ok(Generator::T1),
                '2' => Ok(Generator::T2),
                other => Err(WordError::InvalidLetter(other)),
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Word::from_letters(letters))
    }
}

impl Serialize for Word {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Word {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Parses a word literal, panicking on bad input. Handy for constants.
pub fn w(s: &str) -> Word {
    s.parse().expect("valid word literal")
}

/// Returns the composition `normalize(u·v)` and whether `u = v` in `G`.
pub fn compose_equal(u: &Word, v: &Word) -> (Word, bool) {
    (u.compose(v), u.normalize() == v.normalize())
}

/// All canonical words of exactly `length` letters, in lexicographic order.
pub fn enumerate_normal(length: usize) -> Vec<Word> {
    fn go(prefix: &mut Vec<Generator>, trailing_t1: usize, left: usize, out: &mut Vec<Word>) {
        if left == 0 {
            out.push(Word { letters: prefix.clone(), canonical: true });
            return;
        }
        prefix.push(Generator::T1);
        go(prefix, trailing_t1 + 1, left - 1, out);
        prefix.pop();
        if trailing_t1 < 3 {
            prefix.push(Generator::T2);
            go(prefix, 0, left - 1, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    go(&mut Vec::with_capacity(length), 0, length, &mut out);
    out
}

/// Number of canonical words of exactly `length` letters, without
/// materialising them.
pub fn count_normal(length: usize) -> u64 {
    // State: trailing T1 run length, capped at 3.
    let mut counts = [1u64, 0, 0, 0];
    for _ in 0..length {
        let total_t2 = counts[0] + counts[1] + counts[2];
        counts = [total_t2, counts[0], counts[1], counts[2] + counts[3]];
    }
    counts.iter().sum()
}

/// Canonical words of every length in length-lexicographic order.
pub fn normal_words() -> impl Iterator<Item = Word> {
    (0usize..).flat_map(enumerate_normal)
}

/// One syllable of a word in `⟨T1, T2 | T1³ = e⟩`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Syllable {
    /// `T1^k` with `k ∈ {1, 2}`.
    T1(u8),
    /// `T2^k` with `k ≥ 1`.
    T2(u32),
}

/// Reduced image of a word in the quotient where `T1³` is the identity:
/// alternating syllables, T1 exponents in `{1, 2}`, T2 runs merged.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct QuotientWord {
    syllables: Vec<Syllable>,
}

impl QuotientWord {
    pub fn identity() -> Self {
        Self::default()
    }

    pub fn syllables(&self) -> &[Syllable] {
        &self.syllables
    }

    /// Appends one syllable, reducing T1 exponents mod 3. When a T1 syllable
    /// cancels, the T2 run before it becomes the tail and absorbs the next
    /// T2 pushed, so runs stay merged.
    fn push(&mut self, s: Syllable) {
        match s {
            Syllable::T2(0) => {}
            Syllable::T2(b) => match self.syllables.last_mut() {
                Some(Syllable::T2(a)) => *a += b,
                _ => self.syllables.push(s),
            },
            Syllable::T1(b) => {
                let b = b % 3;
                if b == 0 {
                    return;
                }
                match self.syllables.last_mut() {
                    Some(Syllable::T1(a)) => {
                        let k = (*a + b) % 3;
                        if k == 0 {
                            self.syllables.pop();
                        } else {
                            *a = k;
                        }
                    }
                    _ => self.syllables.push(Syllable::T1(b)),
                }
            }
        }
    }

    /// Quotient product `self · other`.
    pub fn mul(&self, other: &QuotientWord) -> QuotientWord {
        let mut out = self.clone();
        for &s in &other.syllables {
            out.push(s);
        }
        out
    }

    /// A representative word using T1 exponents in `{1, 2}`.
    pub fn to_word(&self) -> Word {
        let mut letters = Vec::new();
        for s in &self.syllables {
            match *s {
                Syllable::T1(k) => letters.extend(std::iter::repeat_n(Generator::T1, k as usize)),
                Syllable::T2(k) => letters.extend(std::iter::repeat_n(Generator::T2, k as usize)),
            }
        }
        Word::from_letters(letters)
    }
}

impl fmt::Display for QuotientWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_word())
    }
}

/// Image of `w` in `⟨T1, T2 | T1³ = e⟩`.
pub fn quotient_normalize(w: &Word) -> QuotientWord {
    let mut q = QuotientWord::identity();
    for &g in w.letters() {
        let s = match g {
            Generator::T1 => Syllable::T1(1),
            Generator::T2 => Syllable::T2(1),
        };
        q.push(s);
    }
    q
}

/// Outcome of a bounded independence search.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum IndependenceVerdict {
    /// No two distinct factor sequences of length `≤ max_factors` share a
    /// normal form.
    NoCollision { max_factors: usize, products_checked: u64 },
    /// Two distinct factor sequences (0-based element indices) with equal
    /// products.
    Collision { first: Vec<usize>, second: Vec<usize>, product: Word },
}

impl IndependenceVerdict {
    pub fn is_independent(&self) -> bool {
        matches!(self, IndependenceVerdict::NoCollision { .. })
    }
}

fn products_needed(n: u64, max_factors: usize) -> Option<u64> {
    let mut total = 0u64;
    let mut layer = 1u64;
    for _ in 0..max_factors {
        layer = layer.checked_mul(n)?;
        total = total.checked_add(layer)?;
    }
    Some(total)
}

fn decode_sequence(mut index: u64, n: u64, factors: usize) -> Vec<usize> {
    let mut seq = vec![0usize; factors];
    for slot in seq.iter_mut().rev() {
        *slot = (index % n) as usize;
        index /= n;
    }
    seq
}

/// Forms every product of 1 to `max_factors` elements (as ordered sequences)
/// and reports the first pair of distinct sequences with the same normal
/// form. Strata are evaluated in parallel and merged in a fixed order, so the
/// reported collision is deterministic.
pub fn independence_check(
    elements: &[Word],
    max_factors: usize,
    ceiling: u64,
) -> Result<IndependenceVerdict, WordError> {
    if elements.is_empty() || max_factors == 0 {
        return Err(WordError::EmptySearch);
    }
    let n = elements.len() as u64;
    let needed = products_needed(n, max_factors).unwrap_or(u64::MAX);
    if needed > ceiling {
        return Err(WordError::TooManyProducts { needed, ceiling });
    }
    let normal: Vec<Word> = elements.iter().map(Word::normalize).collect();
    let mut seen: HashMap<Word, Vec<usize>> = HashMap::new();
    for factors in 1..=max_factors {
        let count = n.pow(factors as u32);
        let products: Vec<Word> = (0..count)
            .into_par_iter()
            .map(|idx| {
                let seq = decode_sequence(idx, n, factors);
                let mut letters = Vec::new();
                for &i in &seq {
                    for &g in normal[i].letters() {
                        push_canonical(&mut letters, g);
                    }
                }
                Word { letters, canonical: true }
            })
            .collect();
        for (idx, product) in products.into_iter().enumerate() {
            let seq = decode_sequence(idx as u64, n, factors);
            if let Some(prev) = seen.get(&product) {
                return Ok(IndependenceVerdict::Collision { first: prev.clone(), second: seq, product });
            }
            seen.insert(product, seq);
        }
    }
    Ok(IndependenceVerdict::NoCollision { max_factors, products_checked: needed })
}

/// The seven elements whose independence drives the pathway argument,
/// in order `g1 … g7`.
pub fn pathway_elements() -> [Word; 7] {
    [
        w("222212222"),
        w("2222122121"),
        w("22221221122"),
        w("2222122111"),
        w("2222121111"),
        w("222212211"),
        w("22221221"),
    ]
}

/// Their images in the `T1³ = e` quotient, `h1 … h7`.
pub fn pathway_reductions() -> [Word; 7] {
    [
        w("222212222"),
        w("2222122121"),
        w("22221221122"),
        w("2222122"),
        w("2222121"),
        w("222212211"),
        w("22221221"),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normalize_examples() {
        assert_eq!(w("1112").normalize(), w("2111"));
        assert_eq!(w("12").normalize(), w("12"));
        assert_eq!(w("11112").normalize(), w("12111"));
        assert_eq!(w("1111112").normalize(), w("2111111"));
        assert!(w("2111").is_canonical());
        assert!(!w("1112").is_canonical());
    }

    #[test]
    fn compose_equal_examples() {
        assert!(compose_equal(&w("1112"), &w("2111")).1);
        assert!(!compose_equal(&w("12"), &w("21")).1);
        assert_eq!(compose_equal(&w("11"), &w("12")).0, w("2111"));
    }

    #[test]
    fn enumeration_examples() {
        assert_eq!(enumerate_normal(0), vec![Word::empty()]);
        assert_eq!(enumerate_normal(1), vec![w("1"), w("2")]);
        assert_eq!(enumerate_normal(4).len(), 15);
        assert!(!enumerate_normal(4).contains(&w("1112")));
        for n in 0..=14 {
            assert_eq!(enumerate_normal(n).len() as u64, count_normal(n), "length {n}");
        }
        let words = enumerate_normal(5);
        assert!(words.windows(2).all(|p| p[0] < p[1]));
    }

    #[test]
    fn normal_stream_is_length_lex() {
        let first: Vec<String> = normal_words().take(7).map(|w| w.to_string()).collect();
        assert_eq!(first, ["e", "1", "2", "11", "12", "21", "22"]);
    }

    #[test]
    fn quotient_examples() {
        let g = pathway_elements();
        assert_eq!(quotient_normalize(&g[3]).to_word(), w("2222122"));
        assert_eq!(quotient_normalize(&g[4]).to_word(), w("2222121"));
        assert_eq!(quotient_normalize(&w("111")), QuotientWord::identity());
        assert_eq!(quotient_normalize(&w("21112")).to_word(), w("22"));
        assert_eq!(quotient_normalize(&w("2111112")).to_word(), w("2112"));
    }

    #[test]
    fn pathway_elements_reduce_to_printed_images() {
        for (g, h) in pathway_elements().iter().zip(pathway_reductions().iter()) {
            assert_eq!(&quotient_normalize(g).to_word(), h, "{g}");
        }
    }

    #[test]
    fn quotient_product_cancels_across_seam() {
        let u = quotient_normalize(&w("21"));
        let v = quotient_normalize(&w("112"));
        assert_eq!(u.mul(&v).to_word(), w("22"));
    }

    #[test]
    fn independence_examples() {
        let collision = independence_check(&[w("1112"), w("2111")], 1, DEFAULT_PRODUCT_CEILING).unwrap();
        assert_eq!(
            collision,
            IndependenceVerdict::Collision { first: vec![0], second: vec![1], product: w("2111") }
        );
        let collision = independence_check(&[w("1"), w("11")], 2, DEFAULT_PRODUCT_CEILING).unwrap();
        assert!(matches!(
            collision,
            IndependenceVerdict::Collision { ref first, ref second, .. } if first == &vec![1] && second == &vec![0, 0]
        ));
        assert_eq!(
            independence_check(&[w("1")], 0, 10),
            Err(WordError::EmptySearch)
        );
        assert!(matches!(
            independence_check(&pathway_elements(), 8, DEFAULT_PRODUCT_CEILING),
            Err(WordError::TooManyProducts { .. })
        ));
    }

    #[test]
    fn parse_and_display() {
        assert_eq!(Word::empty().to_string(), "e");
        assert_eq!("e".parse::<Word>().unwrap(), Word::empty());
        assert_eq!("1x".parse::<Word>(), Err(WordError::InvalidLetter('x')));
        assert_eq!(w("1212").to_string(), "1212");
    }

    #[test]
    fn word_keys_are_injective_on_small_words() {
        let mut keys = std::collections::HashSet::new();
        for n in 0..=8 {
            for word in enumerate_normal(n) {
                assert!(keys.insert(word.key().unwrap()));
            }
        }
    }
}
