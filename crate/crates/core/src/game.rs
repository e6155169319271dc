//! The two-player Bayesian game on the three sheets `a, b, c` over a region.
//!
//! Player I's information set anchored at `u` is `(u, a)` together with the
//! T1-preimages of `u` on sheet b and the T2-preimages on sheet c, so one
//! colour chosen at `u` is what Player II sees at `(x, b)` for `x = T1⁻¹u`.
//! Player II's set at `x` is `{x} × {a, b, c}`, where it picks a law `q` on
//! pairs `(j, k)`. Both players weight the three parts of a set by 1/3.
//!
//! Stability and equilibrium checks cover non-frontier nodes only; the
//! empirical measure is uniform over them.

use std::fmt;

use num_traits::{One, Signed};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exactnum::{rat, rational_string, Rational};
use crate::rule::{
    a_matrix, b_tensor, row_argmax, AMatrix, PureColour, RuleError, SimplexColour, StreamAssignment,
    DEFAULT_SERIES_DEPTH,
};
use crate::sim::{Colouring, Region};
use crate::words::{w, Generator, Word};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GameError {
    #[error("action weights must be nonnegative and sum to 1")]
    NotInSimplex,
    #[error("profile covers {got} nodes, region has {expected}")]
    ProfileSize { got: usize, expected: usize },
    #[error("threshold must be nonnegative")]
    NegativeThreshold,
    #[error(transparent)]
    Rule(#[from] RuleError),
    #[error("csv: {0}")]
    Csv(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Player {
    I,
    II,
}

impl fmt::Display for Player {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Player::I => "I",
            Player::II => "II",
        })
    }
}

/// Sheet tag of a member point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SheetTag {
    A,
    B,
    C,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InfoSetI {
    pub anchor: usize,
    /// `(node, sheet)` members: the anchor on sheet a, then preimages.
    pub members: Vec<(usize, SheetTag)>,
}

impl InfoSetI {
    pub fn new(region: &Region, anchor: usize) -> Self {
        let mut members = vec![(anchor, SheetTag::A)];
        for (parent, g) in region.shape().parents(anchor) {
            members.push((parent, if g == Generator::T1 { SheetTag::B } else { SheetTag::C }));
        }
        InfoSetI { anchor, members }
    }

    /// Weight of each of the three blocks.
    pub fn block_weight() -> Rational {
        rat(1, 3)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct InfoSetII {
    pub node: usize,
}

impl InfoSetII {
    pub fn members(&self) -> [(usize, SheetTag); 3] {
        [(self.node, SheetTag::A), (self.node, SheetTag::B), (self.node, SheetTag::C)]
    }
}

/// Player II's mixed action: a law on pairs `(j, k)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ActionII {
    q: [[Rational; 3]; 3],
}

impl ActionII {
    pub fn new(q: [[Rational; 3]; 3]) -> Result<Self, GameError> {
        let total: Rational = q.iter().flatten().cloned().sum();
        if !total.is_one() || q.iter().flatten().any(Signed::is_negative) {
            return Err(GameError::NotInSimplex);
        }
        Ok(ActionII { q })
    }

    pub fn pure(j: PureColour, k: PureColour) -> Self {
        let mut q: [[Rational; 3]; 3] = Default::default();
        q[j.slot()][k.slot()] = Rational::one();
        ActionII { q }
    }

    /// The independent action `p ⊗ s`.
    pub fn product(r: &SimplexColour, s: &SimplexColour) -> Self {
        ActionII { q: std::array::from_fn(|j| std::array::from_fn(|k| &r.weights()[j] * &s.weights()[k])) }
    }

    pub fn weights(&self) -> &[[Rational; 3]; 3] {
        &self.q
    }

    /// Marginal on the first coordinate.
    pub fn r(&self) -> [Rational; 3] {
        std::array::from_fn(|j| self.q[j].iter().cloned().sum())
    }

    /// Marginal on the second coordinate.
    pub fn s(&self) -> [Rational; 3] {
        std::array::from_fn(|k| (0..3).map(|j| self.q[j][k].clone()).sum())
    }
}

fn dot(a: &[Rational; 3], b: &[Rational; 3]) -> Rational {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Player I's local payoff from playing `row` at an information set whose
/// a-point has coordinate `e_bit`, facing `opponent` there.
pub fn payoff_i(row: &SimplexColour, opponent: &ActionII, e_bit: bool) -> Rational {
    let values = b_tensor(e_bit).row_values_joint(opponent.weights());
    dot(row.weights(), &values) * InfoSetI::block_weight()
}

/// Player II's payoff `r·A_b·p + s·A_c·q_c`, before the 1/3 weighting.
pub fn payoff_ii(action: &ActionII, p: &SimplexColour, q_c: &SimplexColour, a_b: &AMatrix, a_c: &AMatrix) -> Rational {
    dot(&action.r(), &a_b.apply(p)) + dot(&action.s(), &a_c.apply(q_c))
}

/// Per-region data the payoffs need: the `A` matrices at `x·212` (sheet b)
/// and `x·121` (sheet c) for every non-frontier node.
pub struct GameContext<'a> {
    region: &'a Region,
    a_b: Vec<Option<AMatrix>>,
    a_c: Vec<Option<AMatrix>>,
}

impl<'a> GameContext<'a> {
    pub fn new(region: &'a Region) -> Result<Self, GameError> {
        Self::with_depth(region, DEFAULT_SERIES_DEPTH)
    }

    pub fn with_depth(region: &'a Region, series_depth: usize) -> Result<Self, GameError> {
        let streams = StreamAssignment::round_robin(series_depth);
        let (b_word, c_word) = (w("212"), w("121"));
        let build = |offset: &Word| -> Result<Vec<Option<AMatrix>>, GameError> {
            (0..region.len())
                .into_par_iter()
                .map(|node| {
                    if region.is_frontier(node) {
                        return Ok(None);
                    }
                    let at = region.word(node).compose(offset);
                    Ok(Some(a_matrix(|g| Some(region.coordinate(&at.compose(g))), &streams)?))
                })
                .collect()
        };
        Ok(GameContext { region, a_b: build(&b_word)?, a_c: build(&c_word)? })
    }

    pub fn region(&self) -> &Region {
        self.region
    }

    pub fn a_b(&self, node: usize) -> Option<&AMatrix> {
        self.a_b[node].as_ref()
    }

    pub fn a_c(&self, node: usize) -> Option<&AMatrix> {
        self.a_c[node].as_ref()
    }

    fn interior(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.region.len()).filter(|&n| !self.region.is_frontier(n))
    }
}

/// Behaviour of both players on every node.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Profile {
    pub player_i: Vec<SimplexColour>,
    pub player_ii: Vec<ActionII>,
}

impl Profile {
    /// Player I plays the colouring; Player II best-responds pointwise to
    /// the colours it sees at `(x, b)` and `(x, c)`, lowest index on ties.
    /// Frontier nodes get the action `(c1, c1)`.
    pub fn induced(ctx: &GameContext<'_>, colouring: &Colouring) -> Profile {
        let region = ctx.region;
        let player_i = (0..region.len()).map(|n| SimplexColour::pure(colouring.get(n))).collect();
        let player_ii = (0..region.len())
            .map(|n| match region.descendants(n) {
                None => ActionII::pure(PureColour::C1, PureColour::C1),
                Some((d1, d2)) => {
                    let pick = |a: &AMatrix, c: PureColour| {
                        row_argmax(a.apply(&SimplexColour::pure(c))).set.first().expect("nonempty")
                    };
                    let j = pick(ctx.a_b(n).expect("interior"), colouring.get(d1));
                    let k = pick(ctx.a_c(n).expect("interior"), colouring.get(d2));
                    ActionII::pure(j, k)
                }
            })
            .collect();
        Profile { player_i, player_ii }
    }

    /// Replaces Player I's behaviour, keeping Player II's.
    pub fn with_player_i(mut self, colouring: &Colouring) -> Profile {
        self.player_i = colouring.as_slice().iter().map(|&c| SimplexColour::pure(c)).collect();
        self
    }

    fn check_size(&self, region: &Region) -> Result<(), GameError> {
        for got in [self.player_i.len(), self.player_ii.len()] {
            if got != region.len() {
                return Err(GameError::ProfileSize { got, expected: region.len() });
            }
        }
        Ok(())
    }
}

fn best_gain(values: [Rational; 3], current: &Rational) -> Rational {
    let best = values.into_iter().max().expect("three values");
    best - current
}

/// Player I's possible improvement at `node`'s information set with
/// everything else fixed.
pub fn improvement_t(ctx: &GameContext<'_>, node: usize, profile: &Profile) -> Rational {
    let bit = ctx.region.bit(node);
    let q = &profile.player_ii[node];
    let values = b_tensor(bit).row_values_joint(q.weights());
    let current = dot(profile.player_i[node].weights(), &values);
    best_gain(values, &current) * InfoSetI::block_weight()
}

/// Player II's possible improvement at `node`, each marginal optimised
/// separately.
pub fn improvement_ii(ctx: &GameContext<'_>, node: usize, profile: &Profile) -> Option<Rational> {
    let (d1, d2) = ctx.region.descendants(node)?;
    let action = &profile.player_ii[node];
    let vb = ctx.a_b(node)?.apply(&profile.player_i[d1]);
    let vc = ctx.a_c(node)?.apply(&profile.player_i[d2]);
    let gain_b = best_gain(vb.clone(), &dot(&action.r(), &vb));
    let gain_c = best_gain(vc.clone(), &dot(&action.s(), &vc));
    Some((gain_b + gain_c) * rat(1, 3))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeImprovement {
    pub word: Word,
    #[serde(with = "rational_string")]
    pub t: Rational,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StabilityReport {
    pub nodes: usize,
    pub improvements: Vec<NodeImprovement>,
    /// Mean improvement: the γ this colouring certifies.
    #[serde(with = "rational_string")]
    pub mean: Rational,
    #[serde(with = "rational_string")]
    pub delta: Rational,
    pub above_delta: usize,
    /// Share of nodes with `t > δ`.
    #[serde(with = "rational_string")]
    pub measure_above: Rational,
    /// `δ·measure{t > δ} ≤ mean`, checked on the numbers above.
    pub markov_holds: bool,
}

impl StabilityReport {
    /// Whether `mean ≤ ε·δ` holds, in which case `measure{t > δ} ≤ ε`
    /// follows.
    pub fn certifies(&self, eps: &Rational) -> bool {
        self.mean <= eps * &self.delta
    }
}

pub fn gamma_stability(ctx: &GameContext<'_>, profile: &Profile, delta: &Rational) -> Result<StabilityReport, GameError> {
    if delta.is_negative() {
        return Err(GameError::NegativeThreshold);
    }
    profile.check_size(ctx.region)?;
    let improvements: Vec<NodeImprovement> = ctx
        .interior()
        .map(|n| NodeImprovement { word: ctx.region.word(n).clone(), t: improvement_t(ctx, n, profile) })
        .collect();
    let nodes = improvements.len();
    let total: Rational = improvements.iter().map(|i| i.t.clone()).sum();
    let denom = Rational::from_integer(nodes.max(1).into());
    let mean = total / &denom;
    let above_delta = improvements.iter().filter(|i| &i.t > delta).count();
    let measure_above = Rational::from_integer(above_delta.into()) / &denom;
    let markov_holds = delta * &measure_above <= mean;
    Ok(StabilityReport { nodes, improvements, mean, delta: delta.clone(), above_delta, measure_above, markov_holds })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EquilibriumViolation {
    pub anchor: Word,
    pub player: Player,
    #[serde(with = "rational_string")]
    pub gain: Rational,
}

/// Information sets on non-frontier nodes where a unilateral change gains
/// more than `eps`, Player I's first, each in node order.
pub fn equilibrium_check(
    ctx: &GameContext<'_>,
    profile: &Profile,
    eps: &Rational,
) -> Result<Vec<EquilibriumViolation>, GameError> {
    if eps.is_negative() {
        return Err(GameError::NegativeThreshold);
    }
    profile.check_size(ctx.region)?;
    let mut out = Vec::new();
    for n in ctx.interior() {
        let gain = improvement_t(ctx, n, profile);
        if &gain > eps {
            out.push(EquilibriumViolation { anchor: ctx.region.word(n).clone(), player: Player::I, gain });
        }
    }
    for n in ctx.interior() {
        let gain = improvement_ii(ctx, n, profile).expect("interior");
        if &gain > eps {
            out.push(EquilibriumViolation { anchor: ctx.region.word(n).clone(), player: Player::II, gain });
        }
    }
    Ok(out)
}

#[derive(Debug, Serialize, Deserialize)]
struct ViolationRow {
    anchor: String,
    player: String,
    gain: String,
}

/// CSV with header `anchor,player,gain`.
pub fn violations_csv(violations: &[EquilibriumViolation]) -> Result<String, GameError> {
    let mut wtr = csv::Writer::from_writer(Vec::new());
    wtr.write_record(["anchor", "player", "gain"]).map_err(|e| GameError::Csv(e.to_string()))?;
    for v in violations {
        wtr.write_record([v.anchor.to_string(), v.player.to_string(), v.gain.to_string()])
            .map_err(|e| GameError::Csv(e.to_string()))?;
    }
    let bytes = wtr.into_inner().map_err(|e| GameError::Csv(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| GameError::Csv(e.to_string()))
}

pub fn parse_violations_csv(text: &str) -> Result<Vec<EquilibriumViolation>, GameError> {
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    rdr.deserialize::<ViolationRow>()
        .map(|row| {
            let row = row.map_err(|e| GameError::Csv(e.to_string()))?;
            let bad = |what: &str| GameError::Csv(format!("bad {what}"));
            Ok(EquilibriumViolation {
                anchor: row.anchor.parse().map_err(|_| bad("anchor"))?,
                player: match row.player.as_str() {
                    "I" => Player::I,
                    "II" => Player::II,
                    _ => return Err(bad("player")),
                },
                gain: crate::exactnum::parse_rational(&row.gain).map_err(|_| bad("gain"))?,
            })
        })
        .collect()
}
