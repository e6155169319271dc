//! The colouring rule: perturbed identity matrices `A_x` on the auxiliary
//! sheets, the zero-one tensors `B0`/`B1` on the main sheet, and the argmax
//! correspondence they define.
//!
//! Pure colours are `c1, c2, c3` with successor taken mod 3 on `{1, 2, 3}`.
//! Row evaluations never break ties; callers get the whole argmax set.

use std::fmt;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exactnum::{rat, Rational};
use crate::sim::{Colouring, Region};
use crate::words::{normal_words, Word};

/// Default number of series terms per off-diagonal entry of `A_x`.
pub const DEFAULT_SERIES_DEPTH: usize = 40;

/// Off-diagonal slots in stream order.
pub const OFF_DIAGONAL: [(usize, usize); 6] = [(0, 1), (0, 2), (1, 0), (1, 2), (2, 0), (2, 1)];

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RuleError {
    #[error("no coordinate bit available for word {0}")]
    MissingBit(Word),
    #[error("colour weights must be nonnegative and sum to 1")]
    NotInSimplex,
    #[error("A-matrix must have unit diagonal and off-diagonal entries of size at most 1/100")]
    BadAMatrix,
    #[error("colour index must be 1, 2 or 3, got {0}")]
    BadColourIndex(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum PureColour {
    C1,
    C2,
    C3,
}

impl PureColour {
    pub const ALL: [PureColour; 3] = [PureColour::C1, PureColour::C2, PureColour::C3];

    /// 1-based index.
    pub fn index(self) -> usize {
        self.slot() + 1
    }

    /// 0-based slot for array indexing.
    pub fn slot(self) -> usize {
        match self {
            PureColour::C1 => 0,
            PureColour::C2 => 1,
            PureColour::C3 => 2,
        }
    }

    pub fn from_slot(slot: usize) -> PureColour {
        PureColour::ALL[slot % 3]
    }

    pub fn from_index(index: usize) -> Result<PureColour, RuleError> {
        match index {
            1..=3 => Ok(PureColour::ALL[index - 1]),
            _ => Err(RuleError::BadColourIndex(index)),
        }
    }

    pub fn succ(self) -> PureColour {
        PureColour::from_slot(self.slot() + 1)
    }
}

impl fmt::Display for PureColour {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.index())
    }
}

/// A subset of `{c1, c2, c3}`; the vertex set of a face of the simplex.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct ColourSet(u8);

impl ColourSet {
    pub fn empty() -> Self {
        ColourSet(0)
    }

    pub fn singleton(c: PureColour) -> Self {
        ColourSet(1 << c.slot())
    }

    pub fn insert(&mut self, c: PureColour) {
        self.0 |= 1 << c.slot();
    }

    pub fn contains(self, c: PureColour) -> bool {
        self.0 & (1 << c.slot()) != 0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn iter(self) -> impl Iterator<Item = PureColour> {
        PureColour::ALL.into_iter().filter(move |c| self.contains(*c))
    }

    /// Lowest-index member.
    pub fn first(self) -> Option<PureColour> {
        self.iter().next()
    }

    /// Whether a simplex point lies in the face spanned by this set.
    pub fn spans(self, p: &SimplexColour) -> bool {
        PureColour::ALL.iter().all(|&c| self.contains(c) || p.weight(c).is_zero())
    }
}

impl fmt::Display for ColourSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.iter().map(|c| format!("c{c}")).collect();
        write!(f, "{{{}}}", parts.join(","))
    }
}

/// A point of the colour simplex.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SimplexColour {
    weights: [Rational; 3],
}

impl SimplexColour {
    pub fn new(weights: [Rational; 3]) -> Result<Self, RuleError> {
        let sum: Rational = weights.iter().cloned().sum();
        if weights.iter().any(|w| w.is_negative()) || !sum.is_one() {
            return Err(RuleError::NotInSimplex);
        }
        Ok(SimplexColour { weights })
    }

    pub fn pure(c: PureColour) -> Self {
        let mut weights = [Rational::zero(), Rational::zero(), Rational::zero()];
        weights[c.slot()] = Rational::one();
        SimplexColour { weights }
    }

    pub fn weights(&self) -> &[Rational; 3] {
        &self.weights
    }

    pub fn weight(&self, c: PureColour) -> &Rational {
        &self.weights[c.slot()]
    }

    pub fn as_pure(&self) -> Option<PureColour> {
        PureColour::ALL.into_iter().find(|c| self.weights[c.slot()].is_one())
    }

    /// Uniform mixture of the face's vertices.
    pub fn barycentre(face: ColourSet) -> Option<Self> {
        let n = face.len();
        if n == 0 {
            return None;
        }
        let mut weights = [Rational::zero(), Rational::zero(), Rational::zero()];
        for c in face.iter() {
            weights[c.slot()] = rat(1, n as i64);
        }
        Some(SimplexColour { weights })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Sheet {
    A,
    B,
    C,
}

/// `A_x`: unit diagonal, off-diagonal entries in `[-1/100, 1/100]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AMatrix {
    entries: [[Rational; 3]; 3],
}

impl AMatrix {
    pub fn new(entries: [[Rational; 3]; 3]) -> Result<Self, RuleError> {
        let bound = rat(1, 100);
        for (i, row) in entries.iter().enumerate() {
            for (j, e) in row.iter().enumerate() {
                let ok = if i == j { e.is_one() } else { e.abs() <= bound };
                if !ok {
                    return Err(RuleError::BadAMatrix);
                }
            }
        }
        Ok(AMatrix { entries })
    }

    pub fn identity() -> Self {
        AMatrix {
            entries: std::array::from_fn(|i| {
                std::array::from_fn(|j| if i == j { Rational::one() } else { Rational::zero() })
            }),
        }
    }

    pub fn entry(&self, i: usize, j: usize) -> &Rational {
        &self.entries[i][j]
    }

    /// Row values `A·p`.
    pub fn apply(&self, p: &SimplexColour) -> [Rational; 3] {
        std::array::from_fn(|i| {
            self.entries[i]
                .iter()
                .zip(p.weights.iter())
                .filter(|(_, w)| !w.is_zero())
                .map(|(a, w)| a * w)
                .sum()
        })
    }
}

/// The six ordered word streams feeding the off-diagonal entries of `A_x`:
/// canonical words in length-lex order dealt round-robin over
/// [`OFF_DIAGONAL`].
#[derive(Debug, Clone)]
pub struct StreamAssignment {
    depth: usize,
    slots: [Vec<Word>; 6],
}

impl StreamAssignment {
    pub fn round_robin(depth: usize) -> Self {
        let mut slots: [Vec<Word>; 6] = Default::default();
        for (n, word) in normal_words().take(6 * depth).enumerate() {
            slots[n % 6].push(word);
        }
        StreamAssignment { depth, slots }
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    /// Words of the stream for off-diagonal slot `(i, j)` (0-based).
    pub fn stream(&self, i: usize, j: usize) -> &[Word] {
        let k = OFF_DIAGONAL.iter().position(|&p| p == (i, j)).expect("off-diagonal slot");
        &self.slots[k]
    }

    pub fn all_words(&self) -> impl Iterator<Item = &Word> {
        self.slots.iter().flatten()
    }

    /// Upper bound on the tail of every truncated series: `2^-depth / 100`.
    pub fn truncation_bound(&self) -> Rational {
        Rational::new(BigInt::one(), BigInt::from(100) * (BigInt::one() << self.depth))
    }
}

/// Builds `A_x` from the coordinates of `x`: entry `(i, j)` is
/// `(1/100)·Σ_{l=1..depth} 2^{-l}·bit(g_l)` over the `(i, j)` stream.
pub fn a_matrix<F>(bits: F, streams: &StreamAssignment) -> Result<AMatrix, RuleError>
where
    F: Fn(&Word) -> Option<bool>,
{
    let depth = streams.depth;
    let denom = BigInt::from(100) * (BigInt::one() << depth);
    let mut entries: [[Rational; 3]; 3] = AMatrix::identity().entries;
    for (k, &(i, j)) in OFF_DIAGONAL.iter().enumerate() {
        let mut mantissa = BigInt::zero();
        for (l, word) in streams.slots[k].iter().enumerate() {
            let bit = bits(word).ok_or_else(|| RuleError::MissingBit(word.clone()))?;
            if bit {
                mantissa += BigInt::one() << (depth - 1 - l);
            }
        }
        entries[i][j] = Rational::new(mantissa, denom.clone());
    }
    Ok(AMatrix { entries })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BVariant {
    B0,
    B1,
}

/// `b[i][j][k] ∈ {0, 1}` with exactly one firing row per column pair.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BTensor {
    variant: BVariant,
    bits: [[[bool; 3]; 3]; 3],
}

/// The unique row firing in column pair `(j, k)`.
fn firing_row(variant: BVariant, j: PureColour, k: PureColour) -> PureColour {
    match variant {
        BVariant::B1 => j.succ(),
        BVariant::B0 => match (j, k) {
            (PureColour::C3, PureColour::C1) => PureColour::C3,
            (PureColour::C3, _) => PureColour::C1,
            (_, PureColour::C1) => j.succ(),
            _ => j,
        },
    }
}

impl BTensor {
    pub fn variant(&self) -> BVariant {
        self.variant
    }

    pub fn get(&self, i: PureColour, j: PureColour, k: PureColour) -> bool {
        self.bits[i.slot()][j.slot()][k.slot()]
    }

    pub fn fires(&self, j: PureColour, k: PureColour) -> PureColour {
        firing_row(self.variant, j, k)
    }

    /// Row values `Σ_j Σ_k p_j q_k b[i][j][k]`.
    pub fn row_values(&self, p: &SimplexColour, q: &SimplexColour) -> [Rational; 3] {
        let mut rows = [Rational::zero(), Rational::zero(), Rational::zero()];
        for j in PureColour::ALL {
            for k in PureColour::ALL {
                let w = p.weight(j) * q.weight(k);
                if !w.is_zero() {
                    rows[self.fires(j, k).slot()] += w;
                }
            }
        }
        rows
    }

    /// Row values against a joint distribution `q[j][k]` over column pairs.
    pub fn row_values_joint(&self, joint: &[[Rational; 3]; 3]) -> [Rational; 3] {
        let mut rows = [Rational::zero(), Rational::zero(), Rational::zero()];
        for j in PureColour::ALL {
            for k in PureColour::ALL {
                let w = &joint[j.slot()][k.slot()];
                if !w.is_zero() {
                    rows[self.fires(j, k).slot()] += w;
                }
            }
        }
        rows
    }
}

impl fmt::Display for BTensor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{:?}: row fired for (j, k)", self.variant)?;
        write!(f, "     ")?;
        for k in PureColour::ALL {
            write!(f, " k={k}")?;
        }
        writeln!(f)?;
        for j in PureColour::ALL {
            write!(f, "j={j}: ")?;
            for k in PureColour::ALL {
                write!(f, "  c{}", self.fires(j, k))?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

pub fn b_tensor(e_bit: bool) -> BTensor {
    let variant = if e_bit { BVariant::B1 } else { BVariant::B0 };
    let mut bits = [[[false; 3]; 3]; 3];
    for j in PureColour::ALL {
        for k in PureColour::ALL {
            bits[firing_row(variant, j, k).slot()][j.slot()][k.slot()] = true;
        }
    }
    BTensor { variant, bits }
}

/// All maximising indices of three exactly comparable values.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RowArgmax<T> {
    pub set: ColourSet,
    pub values: [T; 3],
}

impl<T> RowArgmax<T> {
    pub fn is_tie(&self) -> bool {
        self.set.len() > 1
    }
}

pub fn row_argmax<T: Ord + Clone>(values: [T; 3]) -> RowArgmax<T> {
    let best = values.iter().max().expect("three values").clone();
    let mut set = ColourSet::empty();
    for c in PureColour::ALL {
        if values[c.slot()] == best {
            set.insert(c);
        }
    }
    RowArgmax { set, values }
}

/// The rule on pure inputs: the row firing for `(j, k)` in the tensor
/// selected by the point's own coordinate bit.
pub fn apply_rule_pure(e_bit: bool, j: PureColour, k: PureColour) -> PureColour {
    firing_row(if e_bit { BVariant::B1 } else { BVariant::B0 }, j, k)
}

/// The face of allowed colours given the colours `p` of sheet b and `q` of
/// sheet c.
pub fn correspondence_f(e_bit: bool, p: &SimplexColour, q: &SimplexColour) -> ColourSet {
    row_argmax(b_tensor(e_bit).row_values(p, q)).set
}

/// Integer fast path of [`correspondence_f`] for pure inputs.
pub fn allowed_face_pure(e_bit: bool, j: PureColour, k: PureColour) -> ColourSet {
    let tensor = b_tensor(e_bit);
    let rows: [u8; 3] = std::array::from_fn(|i| tensor.get(PureColour::ALL[i], j, k) as u8);
    row_argmax(rows).set
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub node: usize,
    pub word: Word,
    pub expected: ColourSet,
    pub actual: PureColour,
}

/// Every interior node whose colour falls outside the face determined by
/// its bit and its two descendants. Frontier nodes are exempt.
pub fn check_satisfaction(region: &Region, colouring: &Colouring) -> Vec<Violation> {
    let mut out = Vec::new();
    for node in 0..region.len() {
        let Some((d1, d2)) = region.descendants(node) else { continue };
        let face = allowed_face_pure(region.bit(node), colouring.get(d1), colouring.get(d2));
        let actual = colouring.get(node);
        if !face.contains(actual) {
            out.push(Violation { node, word: region.word(node).clone(), expected: face, actual });
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::words::w;
    use PureColour::*;

    fn simplex(a: (i64, i64), b: (i64, i64), c: (i64, i64)) -> SimplexColour {
        SimplexColour::new([rat(a.0, a.1), rat(b.0, b.1), rat(c.0, c.1)]).unwrap()
    }

    #[test]
    fn successor_wraps() {
        assert_eq!(C1.succ(), C2);
        assert_eq!(C2.succ(), C3);
        assert_eq!(C3.succ(), C1);
    }

    #[test]
    fn simplex_validation() {
        assert!(SimplexColour::new([rat(1, 2), rat(1, 2), rat(1, 2)]).is_err());
        assert!(SimplexColour::new([rat(3, 2), rat(-1, 2), rat(0, 1)]).is_err());
        assert_eq!(simplex((0, 1), (1, 1), (0, 1)).as_pure(), Some(C2));
    }

    #[test]
    fn a_matrix_validation() {
        let mut e = AMatrix::identity().entries;
        e[0][1] = rat(1, 99);
        assert_eq!(AMatrix::new(e.clone()), Err(RuleError::BadAMatrix));
        e[0][1] = rat(-1, 100);
        assert!(AMatrix::new(e.clone()).is_ok());
        e[2][2] = rat(99, 100);
        assert_eq!(AMatrix::new(e), Err(RuleError::BadAMatrix));
    }

    #[test]
    fn a_matrix_examples() {
        let streams = StreamAssignment::round_robin(DEFAULT_SERIES_DEPTH);
        let zero = a_matrix(|_| Some(false), &streams).unwrap();
        assert_eq!(zero, AMatrix::identity());

        let ones = a_matrix(|_| Some(true), &streams).unwrap();
        let tail = streams.truncation_bound();
        for &(i, j) in &OFF_DIAGONAL {
            assert_eq!(ones.entry(i, j) + &tail, rat(1, 100));
        }

        let first = streams.stream(0, 1)[0].clone();
        let single = a_matrix(|word| Some(*word == first), &streams).unwrap();
        for &(i, j) in &OFF_DIAGONAL {
            let expected = if (i, j) == (0, 1) { rat(1, 200) } else { rat(0, 1) };
            assert_eq!(single.entry(i, j), &expected);
        }

        let missing = a_matrix(|word| (word.len() < 2).then_some(false), &streams);
        assert!(matches!(missing, Err(RuleError::MissingBit(_))));
    }

    #[test]
    fn streams_are_round_robin_over_length_lex() {
        let streams = StreamAssignment::round_robin(3);
        assert_eq!(streams.stream(0, 1), &[w("e"), w("22"), w("212")]);
        assert_eq!(streams.stream(2, 1)[0], w("21"));
        assert_eq!(streams.all_words().count(), 18);
    }

    #[test]
    fn b_tensor_examples() {
        let b1 = b_tensor(true);
        for k in PureColour::ALL {
            assert!(b1.get(C2, C1, k));
        }
        let b0 = b_tensor(false);
        assert!(b0.get(C3, C3, C1));
        assert!(b0.get(C2, C2, C3));
    }

    #[test]
    fn b_tensors_are_well_formed() {
        for e in [false, true] {
            let t = b_tensor(e);
            let mut ones = 0;
            for j in PureColour::ALL {
                for k in PureColour::ALL {
                    let firing = PureColour::ALL.iter().filter(|&&i| t.get(i, j, k)).count();
                    assert_eq!(firing, 1);
                    ones += firing;
                }
            }
            assert_eq!(ones, 9);
        }
    }

    #[test]
    fn b0_case_table() {
        // k ≠ 1, j ≠ 3 → i = j; k ≠ 1, j = 3 → i = 1; k = 1, j ≠ 3 → i = j+1; (3,1) → 3.
        for j in [C1, C2] {
            for k in [C2, C3] {
                assert_eq!(apply_rule_pure(false, j, k), j);
            }
            assert_eq!(apply_rule_pure(false, j, C1), j.succ());
        }
        for k in [C2, C3] {
            assert_eq!(apply_rule_pure(false, C3, k), C1);
        }
        assert_eq!(apply_rule_pure(false, C3, C1), C3);
    }

    #[test]
    fn row_argmax_examples() {
        let id = AMatrix::identity();
        let r = row_argmax(id.apply(&SimplexColour::pure(C2)));
        assert_eq!(r.set, ColourSet::singleton(C2));
        assert_eq!(r.values, [rat(0, 1), rat(1, 1), rat(0, 1)]);

        let b1 = b_tensor(true);
        let r = row_argmax(b1.row_values(&SimplexColour::pure(C1), &SimplexColour::pure(C3)));
        assert_eq!(r.values, [rat(0, 1), rat(1, 1), rat(0, 1)]);
        assert_eq!(r.set, ColourSet::singleton(C2));

        let mut e = AMatrix::identity().entries;
        e[0][1] = rat(1, 100);
        let a = AMatrix::new(e).unwrap();
        let r = row_argmax(a.apply(&simplex((1, 2), (1, 2), (0, 1))));
        assert_eq!(r.values, [rat(101, 200), rat(1, 2), rat(0, 1)]);
        assert_eq!(r.set, ColourSet::singleton(C1));

        let tie = row_argmax(AMatrix::identity().apply(&simplex((1, 2), (1, 2), (0, 1))));
        assert!(tie.is_tie());
    }

    #[test]
    fn apply_rule_pure_examples() {
        for k in PureColour::ALL {
            assert_eq!(apply_rule_pure(true, C3, k), C1);
        }
        assert_eq!(apply_rule_pure(false, C3, C1), C3);
        assert_eq!(apply_rule_pure(false, C1, C2), C1);
    }

    #[test]
    fn correspondence_examples() {
        let face = correspondence_f(true, &SimplexColour::pure(C1), &simplex((1, 3), (1, 3), (1, 3)));
        assert_eq!(face, ColourSet::singleton(C2));

        let p = simplex((1, 2), (0, 1), (1, 2));
        let t = b_tensor(false);
        assert_eq!(t.row_values(&p, &SimplexColour::pure(C1)), [rat(0, 1), rat(1, 2), rat(1, 2)]);
        let face = correspondence_f(false, &p, &SimplexColour::pure(C1));
        assert_eq!(face.iter().collect::<Vec<_>>(), vec![C2, C3]);
        assert!(face.spans(&simplex((0, 1), (1, 4), (3, 4))));
        assert!(!face.spans(&SimplexColour::pure(C1)));

        let face = correspondence_f(false, &SimplexColour::pure(C2), &SimplexColour::pure(C2));
        assert_eq!(face, ColourSet::singleton(C2));
    }

    #[test]
    fn pure_correspondence_matches_pure_rule() {
        for e in [false, true] {
            for j in PureColour::ALL {
                for k in PureColour::ALL {
                    let face = correspondence_f(e, &SimplexColour::pure(j), &SimplexColour::pure(k));
                    assert_eq!(face, ColourSet::singleton(apply_rule_pure(e, j, k)));
                    assert_eq!(allowed_face_pure(e, j, k), face);
                }
            }
        }
    }

    #[test]
    fn joint_row_values_reduce_to_product_case() {
        let t = b_tensor(false);
        let p = simplex((1, 2), (1, 4), (1, 4));
        let q = simplex((1, 3), (0, 1), (2, 3));
        let joint: [[Rational; 3]; 3] =
            std::array::from_fn(|j| std::array::from_fn(|k| &p.weights[j] * &q.weights[k]));
        assert_eq!(t.row_values_joint(&joint), t.row_values(&p, &q));
    }
}
