//! Exact stochastic analysis of the random-colouring regime.
//!
//! Convention: every transition matrix is column-stochastic, entry `(i, j)`
//! is `P(new colour = c_i | old colour = c_j)`, and distributions are column
//! vectors. This holds for the 3×3 chains in Q(√7) and for the general
//! rational chains used by the product-chain check.

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exactnum::{rat, Q7Number, Rational, Sign};

pub mod closed_forms;
pub mod linalg;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MarkovError {
    #[error("parameter z = {0} lies outside [0, 1]")]
    Domain(String),
    #[error("not a distribution: entries must be nonnegative and sum to 1")]
    NotDistribution,
    #[error("not column-stochastic: {0}")]
    NotStochastic(String),
    #[error("chain parameters must lie in [0, 1/2]")]
    BadChain,
    #[error("certification failed: {0}")]
    Certification(String),
}

/// A probability distribution over the three colours.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Distribution3 {
    entries: [Q7Number; 3],
}

impl Distribution3 {
    pub fn new(entries: [Q7Number; 3]) -> Result<Self, MarkovError> {
        let sum: Q7Number = entries.iter().sum();
        if entries.iter().any(Q7Number::is_negative) || sum != Q7Number::one() {
            return Err(MarkovError::NotDistribution);
        }
        Ok(Distribution3 { entries })
    }

    pub fn point_mass(slot: usize) -> Self {
        let mut entries = [Q7Number::zero(), Q7Number::zero(), Q7Number::zero()];
        entries[slot] = Q7Number::one();
        Distribution3 { entries }
    }

    pub fn entries(&self) -> &[Q7Number; 3] {
        &self.entries
    }

    pub fn get(&self, slot: usize) -> &Q7Number {
        &self.entries[slot]
    }

    pub fn to_f64(&self) -> [f64; 3] {
        std::array::from_fn(|i| self.entries[i].to_f64())
    }

    /// Convex combination `Σ w_i · d_i`.
    pub fn mixture(weights: &Distribution3, parts: &[Distribution3; 3]) -> Distribution3 {
        let entries = std::array::from_fn(|k| {
            (0..3).map(|i| &weights.entries[i] * &parts[i].entries[k]).sum()
        });
        Distribution3 { entries }
    }
}

/// Column-stochastic 3×3 matrix over Q(√7).
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TransitionMatrix {
    entries: [[Q7Number; 3]; 3],
}

impl TransitionMatrix {
    pub fn new(entries: [[Q7Number; 3]; 3]) -> Result<Self, MarkovError> {
        for j in 0..3 {
            let col: Q7Number = (0..3).map(|i| &entries[i][j]).sum();
            if col != Q7Number::one() {
                return Err(MarkovError::NotStochastic(format!("column {} sums to {col}", j + 1)));
            }
            for row in &entries {
                let e = &row[j];
                if e.is_negative() || e > &Q7Number::one() {
                    return Err(MarkovError::NotStochastic(format!("entry {e} outside [0, 1]")));
                }
            }
        }
        Ok(TransitionMatrix { entries })
    }

    pub fn entries(&self) -> &[[Q7Number; 3]; 3] {
        &self.entries
    }

    pub fn entry(&self, i: usize, j: usize) -> &Q7Number {
        &self.entries[i][j]
    }

    pub fn column(&self, j: usize) -> Distribution3 {
        Distribution3 { entries: std::array::from_fn(|i| self.entries[i][j].clone()) }
    }

    pub fn mul(&self, rhs: &TransitionMatrix) -> TransitionMatrix {
        let entries = std::array::from_fn(|i| {
            std::array::from_fn(|j| (0..3).map(|k| &self.entries[i][k] * &rhs.entries[k][j]).sum())
        });
        TransitionMatrix { entries }
    }

    pub fn pow(&self, n: u32) -> TransitionMatrix {
        let mut acc = TransitionMatrix::identity();
        for _ in 0..n {
            acc = acc.mul(self);
        }
        acc
    }

    pub fn identity() -> TransitionMatrix {
        TransitionMatrix {
            entries: std::array::from_fn(|i| {
                std::array::from_fn(|j| if i == j { Q7Number::one() } else { Q7Number::zero() })
            }),
        }
    }

    pub fn apply(&self, d: &Distribution3) -> Distribution3 {
        Distribution3 {
            entries: std::array::from_fn(|i| (0..3).map(|j| &self.entries[i][j] * &d.entries[j]).sum()),
        }
    }
}

/// `C_z`: the colour law of a point given an independent pair of
/// descendants, where the T1-descendant has colour `c_j` (column `j`) and the
/// T2-descendant is `c1` with probability `z`.
pub fn c_matrix(z: &Q7Number) -> Result<TransitionMatrix, MarkovError> {
    if z.is_negative() || z > &Q7Number::one() {
        return Err(MarkovError::Domain(z.to_string()));
    }
    let half = rat(1, 2);
    let one = Q7Number::one();
    let two = Q7Number::from_integer(2);
    let h = |x: Q7Number| x.scale(&half);
    TransitionMatrix::new([
        [h(&one - z), Q7Number::zero(), h(&two - z)],
        [h(z + &one), h(&one - z), Q7Number::zero()],
        [Q7Number::zero(), h(z + &one), h(z.clone())],
    ])
}

/// The stationary colour law of the random regime, `(3−√7, 3−√7, 2√7−5)`.
pub fn fixed_point_distribution() -> Distribution3 {
    Distribution3 {
        entries: [Q7Number::frac(3, -1, 1), Q7Number::frac(3, -1, 1), Q7Number::frac(-5, 2, 1)],
    }
}

/// The three scalar equations `C_{y1} y = y`, written out, as residuals
/// `lhs − rhs`.
pub fn fixed_point_residuals(y: &[Q7Number; 3]) -> [Q7Number; 3] {
    let half = rat(1, 2);
    let one = Q7Number::one();
    let [y1, y2, y3] = y;
    let not1 = &one - y1;
    let r1 = y1 - &(y3 + &(&(&not1 * y1) + &(&not1 * y3))).scale(&half);
    let r2 = y2 - &(y1 + &(&(&not1 * y2) + &(y1 * y1))).scale(&half);
    let r3 = y3 - &(y2 + &(&(y1 * y3) + &(y1 * y2))).scale(&half);
    [r1, r2, r3]
}

/// Certificate for the stationary point.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FixedPointCertificate {
    pub point: Distribution3,
    pub residuals: [Q7Number; 3],
    pub stationary: bool,
    /// Independent iteration `y ← C_{y1}(y)·y` on a dyadic grid, from the
    /// uniform law.
    pub iterate: [Q7Number; 3],
    pub iterations: usize,
    /// `|iterate − point| < 10⁻¹²` componentwise, decided exactly.
    pub iterate_agrees: bool,
}

/// Bits of the dyadic grid used by the numeric cross-check.
const ITERATION_BITS: usize = 128;

fn round_dyadic(x: &Rational, bits: usize) -> Rational {
    let scale = BigInt::one() << bits;
    let n = (x * Rational::from_integer(scale.clone())).round().to_integer();
    Rational::new(n, scale)
}

/// Returns the closed-form stationary point together with its exact
/// certification and a numeric cross-check. Fails only on an arithmetic bug.
pub fn fixed_point() -> Result<FixedPointCertificate, MarkovError> {
    let point = fixed_point_distribution();
    let residuals = fixed_point_residuals(point.entries());
    if residuals.iter().any(|r| !r.is_zero()) {
        return Err(MarkovError::Certification("displayed equations not satisfied".into()));
    }
    let c = c_matrix(point.get(0))?;
    let stationary = c.apply(&point) == point;
    if !stationary {
        return Err(MarkovError::Certification("C_{y1} y ≠ y".into()));
    }

    let mut y: [Rational; 3] = std::array::from_fn(|_| rat(1, 3));
    let tol = Rational::new(BigInt::one(), BigInt::one() << 110);
    let mut iterations = 0;
    for _ in 0..10_000 {
        iterations += 1;
        let z = y[0].clone();
        let half = rat(1, 2);
        let one = Rational::one();
        let next = [
            &half * ((&one - &z) * &y[0] + (Rational::from_integer(2.into()) - &z) * &y[2]),
            &half * ((&z + &one) * &y[0] + (&one - &z) * &y[1]),
            &half * ((&z + &one) * &y[1] + &z * &y[2]),
        ];
        let next: [Rational; 3] = std::array::from_fn(|i| round_dyadic(&next[i], ITERATION_BITS));
        let delta = (0..3).map(|i| (&next[i] - &y[i]).abs()).max().unwrap_or_default();
        y = next;
        if delta < tol {
            break;
        }
    }
    let iterate: [Q7Number; 3] = std::array::from_fn(|i| Q7Number::from_rational(y[i].clone()));
    let eps = Q7Number::from_rational(Rational::new(BigInt::one(), BigInt::from(10).pow(12)));
    let iterate_agrees = (0..3).all(|i| (&iterate[i] - point.get(i)).abs() < eps);
    if !iterate_agrees {
        return Err(MarkovError::Certification("numeric iteration disagrees with closed form".into()));
    }
    Ok(FixedPointCertificate { point, residuals, stationary, iterate, iterations, iterate_agrees })
}

/// The chain driving a randomly coloured point through `T1`-preimages:
/// `p, q, r` are half the probabilities of random colouring conditioned on
/// the current colour being `c1, c2, c3`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RandomColouringChain {
    pub p: Rational,
    pub q: Rational,
    pub r: Rational,
}

impl RandomColouringChain {
    pub fn new(p: Rational, q: Rational, r: Rational) -> Result<Self, MarkovError> {
        let half = rat(1, 2);
        if [&p, &q, &r].iter().any(|x| x.is_negative() || **x > half) {
            return Err(MarkovError::BadChain);
        }
        Ok(RandomColouringChain { p, q, r })
    }

    pub fn matrix(&self) -> [[Rational; 3]; 3] {
        let one = Rational::one();
        let z = Rational::zero();
        [
            [self.p.clone(), z.clone(), &one - &self.r],
            [&one - &self.p, self.q.clone(), z.clone()],
            [z, &one - &self.q, self.r.clone()],
        ]
    }

    /// `b = 1 − r − p − q`.
    pub fn b(&self) -> Rational {
        Rational::one() - &self.r - &self.p - &self.q
    }

    /// `d = rp + rq + qp`.
    pub fn d(&self) -> Rational {
        &self.r * &self.p + &self.r * &self.q + &self.q * &self.p
    }

    pub fn any_positive(&self) -> bool {
        [&self.p, &self.q, &self.r].iter().any(|x| x.is_positive())
    }
}

/// Moduli of the two non-unit eigenvalues.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SubdominantRoots {
    /// Conjugate pair (or double real root); both have squared modulus
    /// `norm_sq = b + d`.
    ComplexPair { norm_sq: Rational },
    /// Two distinct real roots `(−b ± √disc)/2`.
    RealPair { b: Rational, discriminant: Rational },
}

#[derive(Debug, Clone)]
pub struct ChainSpectrum {
    /// Characteristic polynomial `det(M − xI)`, coefficients of `x⁰ … x³`.
    pub char_poly: [Rational; 4],
    /// `det(M − xI) / (1 − x)`, coefficients of `x⁰ … x²`.
    pub quotient: [Rational; 3],
    pub remainder: Rational,
    pub b: Rational,
    pub d: Rational,
    /// Whether the quotient is exactly `x² + bx + (b + d)`.
    pub quotient_matches: bool,
    pub roots: SubdominantRoots,
    /// Whether both non-unit eigenvalues have modulus below 1, decided exactly.
    pub below_one: bool,
}

impl ChainSpectrum {
    pub fn divides(&self) -> bool {
        self.remainder.is_zero()
    }

    /// Squared modulus of the subdominant eigenvalues when it is rational.
    pub fn norm_sq(&self) -> Option<&Rational> {
        match &self.roots {
            SubdominantRoots::ComplexPair { norm_sq } => Some(norm_sq),
            SubdominantRoots::RealPair { .. } => None,
        }
    }
}

/// Characteristic polynomial `det(M − xI)` of a 3×3 rational matrix.
pub fn characteristic_polynomial(m: &[[Rational; 3]; 3]) -> [Rational; 4] {
    let trace = &m[0][0] + &m[1][1] + &m[2][2];
    let minor = |i: usize, j: usize| &m[i][i] * &m[j][j] - &m[i][j] * &m[j][i];
    let minors = minor(0, 1) + minor(0, 2) + minor(1, 2);
    let det = &m[0][0] * (&m[1][1] * &m[2][2] - &m[1][2] * &m[2][1])
        - &m[0][1] * (&m[1][0] * &m[2][2] - &m[1][2] * &m[2][0])
        + &m[0][2] * (&m[1][0] * &m[2][1] - &m[1][1] * &m[2][0]);
    [det, -minors, trace, -Rational::one()]
}

pub fn chain_spectrum(chain: &RandomColouringChain) -> ChainSpectrum {
    let char_poly = characteristic_polynomial(&chain.matrix());
    // Synthetic division of P by (x − 1), then negate for (1 − x).
    let [c0, c1, c2, c3] = char_poly.clone();
    let s2 = c3;
    let s1 = &c2 + &s2;
    let s0 = &c1 + &s1;
    let remainder = &c0 + &s0;
    let quotient = [-s0, -s1, -s2];

    let b = chain.b();
    let d = chain.d();
    let quotient_matches =
        quotient == [&b + &d, b.clone(), Rational::one()];
    let disc = &b * &b - Rational::from_integer(4.into()) * (&b + &d);
    let (roots, below_one) = if !disc.is_positive() {
        let norm_sq = &b + &d;
        let below = norm_sq < Rational::one();
        (SubdominantRoots::ComplexPair { norm_sq }, below)
    } else {
        // max |root| = (|b| + √disc)/2 < 1  ⇔  |b| < 2 and disc < (2 − |b|)².
        let gap = Rational::from_integer(2.into()) - b.abs();
        let below = gap.is_positive() && disc < &gap * &gap;
        (SubdominantRoots::RealPair { b: b.clone(), discriminant: disc }, below)
    };
    ChainSpectrum { char_poly, quotient, remainder, b, d, quotient_matches, roots, below_one }
}

/// Draws an admissible chain with parameters on a random rational grid in
/// `[0, 1/2]`.
pub fn random_chain<R: Rng>(rng: &mut R) -> RandomColouringChain {
    let mut draw = || {
        let den: i64 = rng.gen_range(1..=64);
        let num: i64 = rng.gen_range(0..=den);
        rat(num, 2 * den)
    };
    let (p, q, r) = (draw(), draw(), draw());
    RandomColouringChain::new(p, q, r).expect("parameters drawn in [0, 1/2]")
}

/// Everything the pathway computation produces, in exact arithmetic.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PathwayReport {
    pub fixed_point: Distribution3,
    pub c_squared: TransitionMatrix,
    /// Law of `T2x` given the colour of the confluence point (column).
    pub c_cubed: TransitionMatrix,
    /// `C_0·y*` and `C_1·y*`.
    pub c0_fixed: Distribution3,
    pub c1_fixed: Distribution3,
    /// `C_{y1}² C_0 y*`: law of `T1x` when the confluence is `c2` or `c3`.
    pub branch_v0: Distribution3,
    /// `C_{y1}² C_1 y*`: law of `T1x` when the confluence is `c1`.
    pub branch_v1: Distribution3,
    /// `z(i)`: probability that `T2x` is `c1` given confluence colour `c_i`.
    pub mixing: [Q7Number; 3],
    pub recombination_matrices: [TransitionMatrix; 3],
    /// Law of `x` given confluence colour `c_i`.
    pub recombinations: [Distribution3; 3],
    /// `y*`-weighted mixture of the recombinations.
    pub final_distribution: Distribution3,
    /// `final − y*`, componentwise.
    pub discrepancy: [Q7Number; 3],
    /// Sign of `final₁ − y*₁ − 1/5000`.
    pub excess_sign: Sign,
}

impl PathwayReport {
    pub fn discrepancy_certified(&self) -> bool {
        self.excess_sign == Sign::Positive
    }
}

/// Joint law of `T1x`, `T2x` and `x` built up along the two pathways to the
/// confluence point `T1³T2x = T2T1³x`, conditioned on its colour and then
/// mixed with the stationary law.
pub fn pathway_analysis() -> Result<PathwayReport, MarkovError> {
    let y = fixed_point_distribution();
    let c = c_matrix(y.get(0))?;
    let c_squared = c.mul(&c);
    let c_cubed = c_squared.mul(&c);
    let c0 = c_matrix(&Q7Number::zero())?;
    let c1 = c_matrix(&Q7Number::one())?;
    let c0_fixed = c0.apply(&y);
    let c1_fixed = c1.apply(&y);
    let branch_v0 = c_squared.apply(&c0_fixed);
    let branch_v1 = c_squared.apply(&c1_fixed);
    let mixing: [Q7Number; 3] = std::array::from_fn(|i| c_cubed.entry(0, i).clone());
    let recombination_matrices: [TransitionMatrix; 3] = [
        c_matrix(&mixing[0])?,
        c_matrix(&mixing[1])?,
        c_matrix(&mixing[2])?,
    ];
    let recombinations: [Distribution3; 3] = std::array::from_fn(|i| {
        let branch = if i == 0 { &branch_v1 } else { &branch_v0 };
        recombination_matrices[i].apply(branch)
    });
    let final_distribution = Distribution3::mixture(&y, &recombinations);
    for d in recombinations.iter().chain([&branch_v0, &branch_v1, &final_distribution]) {
        Distribution3::new(d.entries().clone())?;
    }
    let discrepancy: [Q7Number; 3] =
        std::array::from_fn(|i| final_distribution.get(i) - y.get(i));
    let excess_sign = (&discrepancy[0] - &Q7Number::from_rational(rat(1, 5000))).sign();
    Ok(PathwayReport {
        fixed_point: y,
        c_squared,
        c_cubed,
        c0_fixed,
        c1_fixed,
        branch_v0,
        branch_v1,
        mixing,
        recombination_matrices,
        recombinations,
        final_distribution,
        discrepancy,
        excess_sign,
    })
}

/// Column-stochastic rational matrix of any size.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StochasticMatrix {
    entries: Vec<Vec<Rational>>,
}

impl StochasticMatrix {
    pub fn new(entries: Vec<Vec<Rational>>) -> Result<Self, MarkovError> {
        let n = entries.len();
        if n == 0 || entries.iter().any(|row| row.len() != n) {
            return Err(MarkovError::NotStochastic("matrix must be square and non-empty".into()));
        }
        for j in 0..n {
            let col: Rational = entries.iter().map(|row| row[j].clone()).sum();
            if !col.is_one() || entries.iter().any(|row| row[j].is_negative()) {
                return Err(MarkovError::NotStochastic(format!("column {}", j + 1)));
            }
        }
        Ok(StochasticMatrix { entries })
    }

    pub fn size(&self) -> usize {
        self.entries.len()
    }

    pub fn entry(&self, i: usize, j: usize) -> &Rational {
        &self.entries[i][j]
    }

    pub fn mul(&self, rhs: &StochasticMatrix) -> StochasticMatrix {
        let n = self.size();
        let entries = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| (0..n).map(|k| &self.entries[i][k] * &rhs.entries[k][j]).sum())
                    .collect()
            })
            .collect();
        StochasticMatrix { entries }
    }

    /// Transitions on `S × T` made independently in each factor; state
    /// `(s, t)` has index `s·|T| + t`.
    pub fn kronecker(&self, other: &StochasticMatrix) -> StochasticMatrix {
        let (n, m) = (self.size(), other.size());
        let mut entries = vec![vec![Rational::zero(); n * m]; n * m];
        for (s2, row_s) in self.entries.iter().enumerate() {
            for (t2, row_t) in other.entries.iter().enumerate() {
                for s in 0..n {
                    for t in 0..m {
                        entries[s2 * m + t2][s * m + t] = &row_s[s] * &row_t[t];
                    }
                }
            }
        }
        StochasticMatrix { entries }
    }

    /// Basis of the invariant space `{π : Mπ = π}`.
    pub fn invariant_space(&self) -> Vec<Vec<Rational>> {
        let n = self.size();
        let shifted: Vec<Vec<Rational>> = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| {
                        let e = self.entries[i][j].clone();
                        if i == j { e - Rational::one() } else { e }
                    })
                    .collect()
            })
            .collect();
        linalg::nullspace(&shifted)
    }

    /// The invariant distribution when it is unique.
    pub fn unique_invariant(&self) -> Option<Vec<Rational>> {
        let basis = self.invariant_space();
        if basis.len() != 1 {
            return None;
        }
        let v = &basis[0];
        let sum: Rational = v.iter().cloned().sum();
        if sum.is_zero() {
            return None;
        }
        Some(v.iter().map(|x| x / &sum).collect())
    }

    /// Smallest `k` such that some state is reachable from every state in
    /// exactly `k` steps, searched up to `2n² + 1`. Its existence rules out
    /// periodicity and multiple closed classes.
    pub fn doeblin_exponent(&self) -> Option<usize> {
        let n = self.size();
        let mut power = self.clone();
        for k in 1..=(2 * n * n + 1) {
            if power.entries.iter().any(|row| row.iter().all(|x| x.is_positive())) {
                return Some(k);
            }
            power = power.mul(self);
        }
        None
    }

    /// Draws a random chain whose columns are normalised small integers;
    /// zeros occur, so some draws violate the product-chain preconditions.
    pub fn random<R: Rng>(rng: &mut R, n: usize) -> StochasticMatrix {
        let mut entries = vec![vec![Rational::zero(); n]; n];
        for j in 0..n {
            let mut weights: Vec<i64> = (0..n).map(|_| rng.gen_range(0..=5)).collect();
            if weights.iter().all(|&w| w == 0) {
                weights[rng.gen_range(0..n)] = 1;
            }
            let total: i64 = weights.iter().sum();
            for i in 0..n {
                entries[i][j] = rat(weights[i], total);
            }
        }
        StochasticMatrix { entries }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ProductChainVerdict {
    /// The product chain has exactly one invariant distribution and it is
    /// the outer product of the factor invariants.
    Confirmed { invariant: Vec<Rational> },
    /// The conclusion fails on an admissible pair.
    Refuted { invariant_dimension: usize, outer_product: Vec<Rational> },
    /// A factor violates the preconditions.
    Inapplicable { reason: String },
}

impl ProductChainVerdict {
    pub fn is_confirmed(&self) -> bool {
        matches!(self, ProductChainVerdict::Confirmed { .. })
    }
}

fn precondition(m: &StochasticMatrix, name: &str) -> Result<Vec<Rational>, String> {
    let Some(pi) = m.unique_invariant() else {
        return Err(format!("chain {name} has no unique invariant distribution"));
    };
    if m.size() > 1 && (0..m.size()).any(|i| m.entry(i, i).is_one()) {
        return Err(format!("chain {name} has a state it never leaves"));
    }
    if m.doeblin_exponent().is_none() {
        return Err(format!("chain {name} is periodic or has several closed classes"));
    }
    Ok(pi)
}

/// Checks that the product of two independent chains has a unique invariant
/// law equal to the product of the factor invariants, by exact linear solve.
pub fn product_chain_check(s: &StochasticMatrix, t: &StochasticMatrix) -> ProductChainVerdict {
    let (pi_s, pi_t) = match (precondition(s, "S"), precondition(t, "T")) {
        (Ok(a), Ok(b)) => (a, b),
        (Err(reason), _) | (_, Err(reason)) => return ProductChainVerdict::Inapplicable { reason },
    };
    let outer: Vec<Rational> = pi_s.iter().flat_map(|a| pi_t.iter().map(move |b| a * b)).collect();
    let product = s.kronecker(t);
    let basis = product.invariant_space();
    match product.unique_invariant() {
        Some(invariant) if invariant == outer => ProductChainVerdict::Confirmed { invariant },
        _ => ProductChainVerdict::Refuted { invariant_dimension: basis.len(), outer_product: outer },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn q(a: i64, b: i64, den: i64) -> Q7Number {
        Q7Number::frac(a, b, den)
    }

    #[test]
    fn c_matrix_examples() {
        let c0 = c_matrix(&Q7Number::zero()).unwrap();
        let expect0 = [[q(1, 0, 2), q(0, 0, 1), q(1, 0, 1)], [q(1, 0, 2), q(1, 0, 2), q(0, 0, 1)], [
            q(0, 0, 1),
            q(1, 0, 2),
            q(0, 0, 1),
        ]];
        assert_eq!(c0.entries(), &expect0);
        let c1 = c_matrix(&Q7Number::one()).unwrap();
        let expect1 = [[q(0, 0, 1), q(0, 0, 1), q(1, 0, 2)], [q(1, 0, 1), q(0, 0, 1), q(0, 0, 1)], [
            q(0, 0, 1),
            q(1, 0, 1),
            q(1, 0, 2),
        ]];
        assert_eq!(c1.entries(), &expect1);
        assert!(matches!(c_matrix(&q(3, 0, 2)), Err(MarkovError::Domain(_))));
        assert!(matches!(c_matrix(&q(0, -1, 1)), Err(MarkovError::Domain(_))));
    }

    #[test]
    fn fixed_point_certifies() {
        let cert = fixed_point().unwrap();
        assert!(cert.stationary && cert.iterate_agrees);
        assert_eq!(cert.point.get(0), &q(3, -1, 1));
        assert_eq!(cert.point.get(2), &q(-5, 2, 1));
        let decimals: Vec<String> = cert.point.entries().iter().map(|x| x.to_decimal(5)).collect();
        assert_eq!(decimals, ["0.35425", "0.35425", "0.29150"]);
        assert_eq!(cert.point.entries().iter().sum::<Q7Number>(), Q7Number::one());
    }

    #[test]
    fn residuals_detect_wrong_points() {
        let r = fixed_point_residuals(&[q(1, 0, 3), q(1, 0, 3), q(1, 0, 3)]);
        assert!(r.iter().any(|x| !x.is_zero()));
    }

    #[test]
    fn spectrum_examples() {
        let half = rat(1, 2);
        let s = chain_spectrum(&RandomColouringChain::new(half.clone(), half.clone(), half.clone()).unwrap());
        assert!(s.divides() && s.quotient_matches && s.below_one);
        assert_eq!(s.norm_sq(), Some(&rat(1, 4)));

        let s = chain_spectrum(&RandomColouringChain::new(half.clone(), rat(0, 1), rat(0, 1)).unwrap());
        assert_eq!((s.b.clone(), s.d.clone()), (rat(1, 2), rat(0, 1)));
        assert_eq!(s.norm_sq(), Some(&rat(1, 2)));

        let s = chain_spectrum(&RandomColouringChain::new(rat(0, 1), rat(0, 1), rat(0, 1)).unwrap());
        assert_eq!(s.quotient, [rat(1, 1), rat(1, 1), rat(1, 1)]);
        assert_eq!(s.norm_sq(), Some(&rat(1, 1)));
        assert!(!s.below_one);
    }

    #[test]
    fn char_poly_matches_expanded_form() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..50 {
            let ch = random_chain(&mut rng);
            let (p, q, r) = (&ch.p, &ch.q, &ch.r);
            let one = Rational::one();
            let expected = [
                (&one - r) * (&one - q) * (&one - p) + p * q * r,
                -(q * r + q * p + p * r),
                p + q + r,
                -one.clone(),
            ];
            assert_eq!(characteristic_polynomial(&ch.matrix()), expected);
        }
    }

    #[test]
    fn chain_rejects_out_of_range() {
        assert_eq!(
            RandomColouringChain::new(rat(3, 5), rat(0, 1), rat(0, 1)),
            Err(MarkovError::BadChain)
        );
    }

    #[test]
    fn pathway_values_match_closed_forms() {
        let r = pathway_analysis().unwrap();
        assert_eq!(r.c_cubed.entry(0, 0), &q(-129, 50, 8));
        assert_eq!(r.branch_v0.entries(), &[q(-307, 117, 8), q(258, -97, 4), q(-201, 77, 8)]);
        assert_eq!(r.branch_v1.entries(), &[q(-248, 95, 8), q(429, -161, 8), q(-173, 66, 8)]);
        assert_eq!(
            r.recombinations[0].entries(),
            &[q(-115411, 43635, 128), q(178381, -67402, 128), q(-62842, 23767, 128)]
        );
        assert_eq!(
            r.final_distribution.entries(),
            &[q(75588, -28561, 64), q(-251801, 95189, 128), q(100753, -38067, 128)]
        );
        assert!(r.discrepancy_certified());
    }

    #[test]
    fn pathway_matches_every_closed_form() {
        let r = pathway_analysis().unwrap();
        assert_eq!(r.c_squared.entries(), &closed_forms::c_squared());
        assert_eq!(r.c_cubed.entries(), &closed_forms::c_cubed());
        assert_eq!(r.c0_fixed.entries(), &closed_forms::c0_fixed());
        assert_eq!(r.c1_fixed.entries(), &closed_forms::c1_fixed());
        assert_eq!(r.branch_v0.entries(), &closed_forms::branch_v0());
        assert_eq!(r.branch_v1.entries(), &closed_forms::branch_v1());
        for i in 0..3 {
            assert_eq!(r.recombination_matrices[i].entries(), &closed_forms::recombination_matrices()[i]);
            assert_eq!(r.recombinations[i].entries(), &closed_forms::recombinations()[i]);
        }
        assert_eq!(r.final_distribution.entries(), &closed_forms::final_distribution());
        // The quoted decimals are truncated, not rounded.
        for (x, quoted) in r.final_distribution.entries().iter().zip(closed_forms::FINAL_DECIMALS) {
            let q = Q7Number::from_rational(crate::exactnum::parse_rational(quoted).unwrap());
            assert!((x - &q).abs() < Q7Number::from_rational(rat(1, 100_000)));
        }
    }

    #[test]
    fn product_chain_examples() {
        let one = StochasticMatrix::new(vec![vec![rat(1, 1)]]).unwrap();
        assert_eq!(
            product_chain_check(&one, &one),
            ProductChainVerdict::Confirmed { invariant: vec![rat(1, 1)] }
        );
        let half = StochasticMatrix::new(vec![vec![rat(1, 2), rat(1, 2)], vec![rat(1, 2), rat(1, 2)]]).unwrap();
        assert_eq!(
            product_chain_check(&half, &half),
            ProductChainVerdict::Confirmed { invariant: vec![rat(1, 4); 4] }
        );
    }

    #[test]
    fn periodic_and_reducible_chains_are_inapplicable() {
        let swap = StochasticMatrix::new(vec![vec![rat(0, 1), rat(1, 1)], vec![rat(1, 1), rat(0, 1)]]).unwrap();
        assert!(matches!(product_chain_check(&swap, &swap), ProductChainVerdict::Inapplicable { .. }));
        // The swap chain alone has a unique invariant, yet the product of two
        // swaps has two: the check must not be run on it.
        assert_eq!(swap.kronecker(&swap).invariant_space().len(), 2);
        let id = StochasticMatrix::new(vec![vec![rat(1, 1), rat(0, 1)], vec![rat(0, 1), rat(1, 1)]]).unwrap();
        assert!(matches!(product_chain_check(&id, &id), ProductChainVerdict::Inapplicable { .. }));
    }

    #[test]
    fn stochastic_validation() {
        assert!(StochasticMatrix::new(vec![vec![rat(1, 2), rat(1, 1)], vec![rat(1, 3), rat(0, 1)]]).is_err());
        assert!(StochasticMatrix::new(vec![]).is_err());
    }
}
