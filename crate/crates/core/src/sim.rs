//! Finite orbit fragments and Monte Carlo over them.
//!
//! A region of depth `L` holds every canonical word of length at most `L`.
//! Descendants append on the right, `d_i(w) = normalize(w·T_i)`, so nodes at
//! depth `L` form the frontier and everything else has both descendants in
//! the region. Node indices run in length-lex order, hence descendants always
//! carry larger indices than their parents.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::sync::{Arc, OnceLock};

use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exactnum::{u64_threshold, Q7Number};
use crate::markov::{fixed_point_distribution, pathway_analysis, Distribution3};
use crate::rule::{
    a_matrix, apply_rule_pure, check_satisfaction, correspondence_f, row_argmax, AMatrix, PureColour,
    RuleError, SimplexColour, StreamAssignment,
};
use crate::words::{count_normal, enumerate_normal, w, Generator, Word};

/// Refuse regions with more nodes than this.
pub const DEFAULT_NODE_CEILING: u64 = 20_000_000;

/// Runs handled by one task in the parallel Monte Carlo loops; fixing it
/// keeps results independent of the thread count.
const CHUNK: u64 = 4096;

const NONE: u32 = u32::MAX;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("region of depth {depth} has {needed} nodes, above the ceiling of {ceiling}")]
    TooManyNodes { depth: usize, needed: u64, ceiling: u64 },
    #[error("perturbation probability {0} outside [0, 1]")]
    BadEpsilon(f64),
    #[error("at least one run is required")]
    NoRuns,
    #[error("fixed frontier list is empty")]
    EmptyFixedList,
    #[error("gadget wiring: {0}")]
    Gadget(String),
    #[error("malformed dump line {line}: {reason}")]
    Dump { line: usize, reason: String },
    #[error(transparent)]
    Rule(#[from] RuleError),
}

/// SplitMix64 finaliser.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of the `index`-th independent stream under `master`.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    mix64(master ^ mix64(index.wrapping_add(0x5851_F42D_4C95_7F2D)))
}

const STREAM_FRONTIER: u64 = u64::MAX - 1;
const STREAM_PERTURB: u64 = u64::MAX - 2;

fn word_hash(word: &Word) -> u64 {
    match word.key() {
        Some(k) => k,
        None => word.letters().iter().fold(word.len() as u64, |h, &g| {
            mix64(h ^ if g == Generator::T2 { 0xA5 } else { 0x5A })
        }),
    }
}

/// The coordinate `x^g` of the random point with the given seed.
pub fn coordinate_bit(seed: u64, word: &Word) -> bool {
    mix64(seed ^ mix64(word_hash(word))) & 1 == 1
}

/// The word DAG of a region, independent of bits.
#[derive(Debug)]
pub struct RegionShape {
    depth: usize,
    words: Vec<Word>,
    keys: Vec<u64>,
    index: HashMap<Word, usize>,
    d1: Vec<u32>,
    d2: Vec<u32>,
    parents: Vec<Vec<(u32, Generator)>>,
    level_start: Vec<usize>,
}

impl RegionShape {
    pub fn build(depth: usize) -> Result<Arc<RegionShape>, SimError> {
        Self::build_with_ceiling(depth, DEFAULT_NODE_CEILING)
    }

    pub fn build_with_ceiling(depth: usize, ceiling: u64) -> Result<Arc<RegionShape>, SimError> {
        let needed: u64 = (0..=depth).map(count_normal).sum();
        if needed > ceiling {
            return Err(SimError::TooManyNodes { depth, needed, ceiling });
        }
        let mut words = Vec::with_capacity(needed as usize);
        let mut level_start = Vec::with_capacity(depth + 2);
        for n in 0..=depth {
            level_start.push(words.len());
            words.extend(enumerate_normal(n));
        }
        level_start.push(words.len());
        let index: HashMap<Word, usize> = words.iter().cloned().enumerate().map(|(i, w)| (w, i)).collect();
        let mut d1 = vec![NONE; words.len()];
        let mut d2 = vec![NONE; words.len()];
        let mut parents = vec![Vec::new(); words.len()];
        for (i, word) in words.iter().enumerate().take(level_start[depth]) {
            for (g, slot) in [(Generator::T1, &mut d1), (Generator::T2, &mut d2)] {
                let child = index[&word.append(g)];
                slot[i] = child as u32;
                parents[child].push((i as u32, g));
            }
        }
        let keys = words.iter().map(word_hash).collect();
        Ok(Arc::new(RegionShape { depth, words, keys, index, d1, d2, parents, level_start }))
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn word(&self, node: usize) -> &Word {
        &self.words[node]
    }

    pub fn node(&self, word: &Word) -> Option<usize> {
        self.index.get(&word.normalize()).copied()
    }

    pub fn descendants(&self, node: usize) -> Option<(usize, usize)> {
        (self.d1[node] != NONE).then(|| (self.d1[node] as usize, self.d2[node] as usize))
    }

    /// Parents with the generator leading to `node`.
    pub fn parents(&self, node: usize) -> impl Iterator<Item = (usize, Generator)> + '_ {
        self.parents[node].iter().map(|&(p, g)| (p as usize, g))
    }

    pub fn is_frontier(&self, node: usize) -> bool {
        self.d1[node] == NONE
    }

    pub fn level(&self, n: usize) -> std::ops::Range<usize> {
        self.level_start[n]..self.level_start[n + 1]
    }

    pub fn frontier(&self) -> std::ops::Range<usize> {
        self.level(self.depth)
    }
}

/// A region with a bit at every node.
#[derive(Debug, Clone)]
pub struct Region {
    shape: Arc<RegionShape>,
    bits: Vec<bool>,
    seed: u64,
}

/// Builds a region of depth `depth` with fair bits drawn from `seed`.
pub fn build_region(depth: usize, seed: u64) -> Result<Region, SimError> {
    Ok(Region::sample(RegionShape::build(depth)?, seed))
}

impl Region {
    pub fn sample(shape: Arc<RegionShape>, seed: u64) -> Region {
        let bits = shape.keys.iter().map(|&k| mix64(seed ^ mix64(k)) & 1 == 1).collect();
        Region { shape, bits, seed }
    }

    pub fn shape(&self) -> &Arc<RegionShape> {
        &self.shape
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn depth(&self) -> usize {
        self.shape.depth
    }

    pub fn len(&self) -> usize {
        self.shape.len()
    }

    pub fn is_empty(&self) -> bool {
        self.shape.is_empty()
    }

    pub fn word(&self, node: usize) -> &Word {
        self.shape.word(node)
    }

    pub fn node(&self, word: &Word) -> Option<usize> {
        self.shape.node(word)
    }

    pub fn descendants(&self, node: usize) -> Option<(usize, usize)> {
        self.shape.descendants(node)
    }

    pub fn is_frontier(&self, node: usize) -> bool {
        self.shape.is_frontier(node)
    }

    pub fn bit(&self, node: usize) -> bool {
        self.bits[node]
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    /// Coordinate `x^g` for any word; consistent with [`Region::bit`] on
    /// nodes of the region.
    pub fn coordinate(&self, word: &Word) -> bool {
        match self.node(word) {
            Some(node) => self.bits[node],
            None => coordinate_bit(self.seed, &word.normalize()),
        }
    }

    /// A twin at `node`: the same region with that node's own coordinate
    /// replaced.
    pub fn twin(&self, node: usize, bit: bool) -> Region {
        let mut r = self.clone();
        r.bits[node] = bit;
        r
    }
}

/// A pure colour at every node of a region.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Colouring {
    colours: Vec<PureColour>,
}

impl Colouring {
    pub fn new(colours: Vec<PureColour>) -> Self {
        Colouring { colours }
    }

    pub fn uniform(len: usize, c: PureColour) -> Self {
        Colouring { colours: vec![c; len] }
    }

    pub fn get(&self, node: usize) -> PureColour {
        self.colours[node]
    }

    pub fn set(&mut self, node: usize, c: PureColour) {
        self.colours[node] = c;
    }

    pub fn len(&self) -> usize {
        self.colours.len()
    }

    pub fn is_empty(&self) -> bool {
        self.colours.is_empty()
    }

    pub fn as_slice(&self) -> &[PureColour] {
        &self.colours
    }
}

/// How frontier nodes are coloured.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum FrontierStrategy {
    /// Independent draws from the stationary law `y*`.
    IidFixedPoint,
    Uniform,
    /// The listed colours, cycled over frontier nodes in index order.
    Fixed(Vec<PureColour>),
}

fn fixed_point_thresholds() -> (u64, u64) {
    static CELL: OnceLock<(u64, u64)> = OnceLock::new();
    *CELL.get_or_init(|| {
        let y = fixed_point_distribution();
        let t1 = u64_threshold(y.get(0));
        let t2 = u64_threshold(&(y.get(0) + y.get(1)));
        (t1, t2)
    })
}

/// Draws from `y*` by comparing a uniform 64-bit integer with exact
/// thresholds.
pub fn sample_fixed_point<R: Rng>(rng: &mut R) -> PureColour {
    let (t1, t2) = fixed_point_thresholds();
    let u: u64 = rng.gen();
    if u < t1 {
        PureColour::C1
    } else if u < t2 {
        PureColour::C2
    } else {
        PureColour::C3
    }
}

fn sample_uniform<R: Rng>(rng: &mut R) -> PureColour {
    PureColour::from_slot(rng.gen_range(0..3))
}

/// A colouring together with the nodes whose colour was replaced at random.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Propagation {
    pub colouring: Colouring,
    pub perturbed: Vec<usize>,
}

/// Colours the frontier per `strategy`, then every interior node by the
/// pure rule from its descendants, bottom-up. With probability `epsilon`,
/// independently per interior node, a uniformly random colour is used
/// instead.
pub fn propagate(region: &Region, strategy: &FrontierStrategy, epsilon: f64) -> Result<Colouring, SimError> {
    propagate_traced(region, strategy, epsilon).map(|p| p.colouring)
}

pub fn propagate_traced(
    region: &Region,
    strategy: &FrontierStrategy,
    epsilon: f64,
) -> Result<Propagation, SimError> {
    if !(0.0..=1.0).contains(&epsilon) {
        return Err(SimError::BadEpsilon(epsilon));
    }
    if matches!(strategy, FrontierStrategy::Fixed(list) if list.is_empty()) {
        return Err(SimError::EmptyFixedList);
    }
    let shape = region.shape();
    let mut colours = vec![PureColour::C1; shape.len()];
    let mut frontier_rng = ChaCha8Rng::seed_from_u64(derive_seed(region.seed(), STREAM_FRONTIER));
    for (n, node) in shape.frontier().enumerate() {
        colours[node] = match strategy {
            FrontierStrategy::IidFixedPoint => sample_fixed_point(&mut frontier_rng),
            FrontierStrategy::Uniform => sample_uniform(&mut frontier_rng),
            FrontierStrategy::Fixed(list) => list[n % list.len()],
        };
    }
    let mut perturbed = Vec::new();
    let mut perturb_rng = ChaCha8Rng::seed_from_u64(derive_seed(region.seed(), STREAM_PERTURB));
    for node in (0..shape.frontier().start).rev() {
        let (a, b) = shape.descendants(node).expect("interior node");
        colours[node] = apply_rule_pure(region.bit(node), colours[a], colours[b]);
        if epsilon > 0.0 && perturb_rng.gen::<f64>() < epsilon {
            colours[node] = sample_uniform(&mut perturb_rng);
            perturbed.push(node);
        }
    }
    perturbed.reverse();
    Ok(Propagation { colouring: Colouring::new(colours), perturbed })
}

/// `word<TAB>bit<TAB>colour` per node, in node order.
pub fn dump_region(region: &Region, colouring: &Colouring) -> String {
    let mut out = String::new();
    for node in 0..region.len() {
        let _ = writeln!(out, "{}\t{}\t{}", region.word(node), region.bit(node) as u8, colouring.get(node));
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DumpRecord {
    pub word: Word,
    pub bit: bool,
    pub colour: PureColour,
}

pub fn parse_dump(text: &str) -> Result<Vec<DumpRecord>, SimError> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, line)| {
            let err = |reason: &str| SimError::Dump { line: i + 1, reason: reason.to_string() };
            let mut parts = line.split('\t');
            let (Some(word), Some(bit), Some(colour), None) = (parts.next(), parts.next(), parts.next(), parts.next())
            else {
                return Err(err("expected three tab-separated fields"));
            };
            let word: Word = word.parse().map_err(|_| err("bad word"))?;
            let bit = match bit {
                "0" => false,
                "1" => true,
                _ => return Err(err("bit must be 0 or 1")),
            };
            let colour = colour
                .parse::<usize>()
                .ok()
                .and_then(|c| PureColour::from_index(c).ok())
                .ok_or_else(|| err("colour must be 1, 2 or 3"))?;
            Ok(DumpRecord { word, bit, colour })
        })
        .collect()
}

/// Empirical joint law of the colours at two nodes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointTable {
    pub first: Word,
    pub second: Word,
    pub counts: [[u64; 3]; 3],
    /// Total-variation distance between the joint and the product of its
    /// marginals.
    pub total_variation: f64,
}

impl JointTable {
    fn new(first: Word, second: Word, counts: [[u64; 3]; 3]) -> Self {
        let total: u64 = counts.iter().flatten().sum();
        let n = total.max(1) as f64;
        let row: [f64; 3] = std::array::from_fn(|j| counts[j].iter().sum::<u64>() as f64 / n);
        let col: [f64; 3] = std::array::from_fn(|k| (0..3).map(|j| counts[j][k]).sum::<u64>() as f64 / n);
        let mut tv = 0.0;
        for j in 0..3 {
            for k in 0..3 {
                tv += (counts[j][k] as f64 / n - row[j] * col[k]).abs();
            }
        }
        JointTable { first, second, counts, total_variation: tv / 2.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimReport {
    pub depth: usize,
    pub runs: u64,
    pub seed: u64,
    pub epsilon: f64,
    pub strategy: FrontierStrategy,
    pub base_counts: [u64; 3],
    pub base_marginal: [f64; 3],
    pub standard_errors: [f64; 3],
    /// `y*` for comparison.
    pub reference: [f64; 3],
    pub max_deviation: f64,
    pub joints: Vec<JointTable>,
    /// Row ties met while colouring; the pure rule never produces any.
    pub ties: u64,
    pub violations: u64,
    pub perturbed_nodes: u64,
}

#[derive(Debug, Clone, Copy)]
pub struct StatsConfig<'a> {
    pub depth: usize,
    pub runs: u64,
    pub seed: u64,
    pub strategy: &'a FrontierStrategy,
    pub epsilon: f64,
}

#[derive(Default, Clone, Copy)]
struct Tally {
    base: [u64; 3],
    joints: [[[u64; 3]; 3]; 2],
    violations: u64,
    perturbed: u64,
}

impl Tally {
    fn merge(mut self, o: Tally) -> Tally {
        for c in 0..3 {
            self.base[c] += o.base[c];
        }
        for t in 0..2 {
            for j in 0..3 {
                for k in 0..3 {
                    self.joints[t][j][k] += o.joints[t][j][k];
                }
            }
        }
        self.violations += o.violations;
        self.perturbed += o.perturbed;
        self
    }
}

fn marginal_with_errors(counts: &[u64; 3]) -> ([f64; 3], [f64; 3]) {
    let n: u64 = counts.iter().sum();
    let nf = n.max(1) as f64;
    let m: [f64; 3] = std::array::from_fn(|i| counts[i] as f64 / nf);
    let se = std::array::from_fn(|i| (m[i] * (1.0 - m[i]) / nf).sqrt());
    (m, se)
}

/// Colours `runs` independent regions and tallies the base node's colour
/// together with the joint colour laws of `(1, 2)` and `(21, 22)`.
pub fn estimate_stats(config: StatsConfig<'_>) -> Result<SimReport, SimError> {
    if config.runs == 0 {
        return Err(SimError::NoRuns);
    }
    if !(0.0..=1.0).contains(&config.epsilon) {
        return Err(SimError::BadEpsilon(config.epsilon));
    }
    let shape = RegionShape::build(config.depth)?;
    let pairs: Vec<(Word, Word)> = [("1", "2"), ("21", "22")]
        .iter()
        .map(|(a, b)| (w(a), w(b)))
        .filter(|(a, _)| a.len() <= config.depth)
        .collect();
    let pair_nodes: Vec<(usize, usize)> =
        pairs.iter().map(|(a, b)| (shape.node(a).unwrap(), shape.node(b).unwrap())).collect();
    let chunks = config.runs.div_ceil(CHUNK);
    let tally = (0..chunks)
        .into_par_iter()
        .map(|chunk| -> Result<Tally, SimError> {
            let mut t = Tally::default();
            for run in chunk * CHUNK..((chunk + 1) * CHUNK).min(config.runs) {
                let region = Region::sample(shape.clone(), derive_seed(config.seed, run));
                let p = propagate_traced(&region, config.strategy, config.epsilon)?;
                t.base[p.colouring.get(0).slot()] += 1;
                for (slot, &(a, b)) in pair_nodes.iter().enumerate() {
                    t.joints[slot][p.colouring.get(a).slot()][p.colouring.get(b).slot()] += 1;
                }
                t.perturbed += p.perturbed.len() as u64;
                if !p.perturbed.is_empty() {
                    t.violations += check_satisfaction(&region, &p.colouring).len() as u64;
                }
            }
            Ok(t)
        })
        .try_reduce(Tally::default, |a, b| Ok(a.merge(b)))?;
    let (base_marginal, standard_errors) = marginal_with_errors(&tally.base);
    let reference = fixed_point_distribution().to_f64();
    let max_deviation = (0..3).map(|i| (base_marginal[i] - reference[i]).abs()).fold(0.0, f64::max);
    let joints = pairs
        .into_iter()
        .enumerate()
        .map(|(slot, (a, b))| JointTable::new(a, b, tally.joints[slot]))
        .collect();
    Ok(SimReport {
        depth: config.depth,
        runs: config.runs,
        seed: config.seed,
        epsilon: config.epsilon,
        strategy: config.strategy.clone(),
        base_counts: tally.base,
        base_marginal,
        standard_errors,
        reference,
        max_deviation,
        joints,
        ties: 0,
        violations: tally.violations,
        perturbed_nodes: tally.perturbed,
    })
}

/// Where a gadget node reads one of its descendants from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GadgetInput {
    Node(usize),
    Side,
    Confluence,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GadgetNode {
    pub word: Word,
    pub t1: GadgetInput,
    pub t2: GadgetInput,
}

/// The two pathways from `x = e` to the confluence point `111·2 = 2·111`,
/// each node wired by actually normalising its two descendants.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GadgetSpec {
    /// Chain nodes, descendants before parents; the last entry is `x`.
    pub nodes: Vec<GadgetNode>,
    pub confluence: Word,
    pub side_inputs: Vec<Word>,
}

impl GadgetSpec {
    pub fn new() -> Result<GadgetSpec, SimError> {
        let left = ["1", "11", "111"];
        let right = ["2", "21", "211"];
        let confluence = w("1112").normalize();
        if confluence != w("2111") {
            return Err(SimError::Gadget("1112 does not normalise to 2111".into()));
        }
        let mut chain: Vec<Word> = left.iter().chain(right.iter()).map(|s| w(s)).collect();
        chain.sort_by(|a, b| b.cmp(a));
        chain.push(Word::empty());
        let mut side_inputs = Vec::new();
        let mut nodes = Vec::new();
        for word in &chain {
            let mut wire = |g: Generator| {
                let child = word.append(g);
                if child == confluence {
                    GadgetInput::Confluence
                } else if let Some(i) = chain.iter().position(|c| *c == child) {
                    GadgetInput::Node(i)
                } else {
                    side_inputs.push(child);
                    GadgetInput::Side
                }
            };
            let (t1, t2) = (wire(Generator::T1), wire(Generator::T2));
            nodes.push(GadgetNode { word: word.clone(), t1, t2 });
        }
        let spec = GadgetSpec { nodes, confluence, side_inputs };
        spec.verify()?;
        Ok(spec)
    }

    /// The confluence point must be the T1-descendant of `211` and the
    /// T2-descendant of `111`; `x` must read `1` and `2`.
    fn verify(&self) -> Result<(), SimError> {
        let find = |s: &str| self.nodes.iter().find(|n| n.word == w(s));
        let fail = |m: &str| Err(SimError::Gadget(m.to_string()));
        match (find("211"), find("111")) {
            (Some(a), Some(b)) if a.t1 == GadgetInput::Confluence && b.t2 == GadgetInput::Confluence => {}
            _ => return fail("confluence not wired from 211 (T1) and 111 (T2)"),
        }
        let confluent = self
            .nodes
            .iter()
            .flat_map(|n| [n.t1, n.t2])
            .filter(|i| *i == GadgetInput::Confluence)
            .count();
        if confluent != 2 || self.side_inputs.len() != 6 {
            return fail("unexpected side-input count");
        }
        let x = self.nodes.last().expect("x");
        let idx = |s: &str| self.nodes.iter().position(|n| n.word == w(s));
        if !x.word.is_empty() || x.t1 != GadgetInput::Node(idx("1").unwrap()) || x.t2 != GadgetInput::Node(idx("2").unwrap())
        {
            return fail("x not wired to 1 and 2");
        }
        Ok(())
    }

    /// One sample: fresh bits at every chain node and `y*` side inputs.
    pub fn sample<R: Rng>(&self, clamp: PureColour, rng: &mut R) -> PureColour {
        let mut colours = [PureColour::C1; 8];
        for (i, node) in self.nodes.iter().enumerate() {
            let mut read = |input: GadgetInput| match input {
                GadgetInput::Node(k) => colours[k],
                GadgetInput::Side => sample_fixed_point(rng),
                GadgetInput::Confluence => clamp,
            };
            let (a, b) = (read(node.t1), read(node.t2));
            colours[i] = apply_rule_pure(rng.gen(), a, b);
        }
        colours[self.nodes.len() - 1]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GadgetReport {
    pub clamp: PureColour,
    pub runs: u64,
    pub seed: u64,
    pub counts: [u64; 3],
    pub marginal: [f64; 3],
    pub standard_errors: [f64; 3],
    /// Exact law of `x` for this clamp.
    pub expected: Distribution3,
    /// `(empirical − expected) / standard error`, componentwise.
    pub z_scores: [f64; 3],
}

impl GadgetReport {
    pub fn within(&self, sigmas: f64) -> bool {
        self.z_scores.iter().all(|z| z.abs() <= sigmas)
    }
}

/// Samples the two-pathway gadget `runs` times with the confluence point
/// clamped to `clamp` and tallies the colour of `x`.
pub fn gadget_run(clamp: PureColour, runs: u64, seed: u64) -> Result<GadgetReport, SimError> {
    if runs == 0 {
        return Err(SimError::NoRuns);
    }
    let spec = GadgetSpec::new()?;
    let expected = pathway_analysis()
        .map_err(|e| SimError::Gadget(e.to_string()))?
        .recombinations[clamp.slot()]
        .clone();
    let clamp_seed = derive_seed(seed, clamp.slot() as u64);
    let counts = (0..runs.div_ceil(CHUNK))
        .into_par_iter()
        .map(|chunk| {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(clamp_seed, chunk));
            let mut c = [0u64; 3];
            for _ in chunk * CHUNK..((chunk + 1) * CHUNK).min(runs) {
                c[spec.sample(clamp, &mut rng).slot()] += 1;
            }
            c
        })
        .reduce(|| [0; 3], |a, b| [a[0] + b[0], a[1] + b[1], a[2] + b[2]]);
    let (marginal, standard_errors) = marginal_with_errors(&counts);
    let exact = expected.to_f64();
    let z_scores = std::array::from_fn(|i| {
        let se = (exact[i] * (1.0 - exact[i]) / runs as f64).sqrt();
        (marginal[i] - exact[i]) / se
    });
    Ok(GadgetReport { clamp, runs, seed, counts, marginal, standard_errors, expected, z_scores })
}

/// `y*`-weighted mixture of three gadget marginals, indexed by clamp.
pub fn gadget_mixture(reports: &[GadgetReport; 3]) -> [f64; 3] {
    let y = fixed_point_distribution().to_f64();
    std::array::from_fn(|k| (0..3).map(|i| y[reports[i].clamp.slot()] * reports[i].marginal[k]).sum())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PurityReport {
    pub samples: u64,
    pub depth: usize,
    pub ties: u64,
    /// Samples whose top two rows are closer than the series tail can move
    /// them.
    pub truncation_sensitive: u64,
    pub tie_rate: f64,
}

/// Whether `A·p` has several maximal rows, and whether the verdict could
/// change when the series is continued past its truncation.
pub fn tie_for_matrix(a: &AMatrix, p: &SimplexColour, tail: &crate::exactnum::Rational) -> (bool, bool) {
    let arg = row_argmax(a.apply(p));
    let mut sorted = arg.values.clone();
    sorted.sort();
    let gap = &sorted[2] - &sorted[1];
    let sensitive = !gap.is_zero() && gap < tail * crate::exactnum::rat(2, 1);
    (arg.is_tie(), sensitive)
}

/// Draws `samples` independent bit assignments, builds `A` from the first
/// `depth` terms of each stream and counts ties in `A·p`.
pub fn purity_tie_rate(p: &SimplexColour, samples: u64, depth: usize, seed: u64) -> Result<PurityReport, SimError> {
    if samples == 0 {
        return Err(SimError::NoRuns);
    }
    let streams = StreamAssignment::round_robin(depth);
    let slots: HashMap<&Word, usize> = streams.all_words().enumerate().map(|(i, w)| (w, i)).collect();
    let tail = streams.truncation_bound();
    let (ties, sensitive) = (0..samples.div_ceil(CHUNK))
        .into_par_iter()
        .map(|chunk| -> Result<(u64, u64), SimError> {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, chunk));
            let (mut t, mut s) = (0, 0);
            for _ in chunk * CHUNK..((chunk + 1) * CHUNK).min(samples) {
                let bits: Vec<bool> = (0..slots.len()).map(|_| rng.gen()).collect();
                let a = a_matrix(|w| slots.get(w).map(|&i| bits[i]), &streams)?;
                let (tie, sens) = tie_for_matrix(&a, p, &tail);
                t += tie as u64;
                s += sens as u64;
            }
            Ok((t, s))
        })
        .try_reduce(|| (0, 0), |a, b| Ok((a.0 + b.0, a.1 + b.1)))?;
    Ok(PurityReport { samples, depth, ties, truncation_sensitive: sensitive, tie_rate: ties as f64 / samples as f64 })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThreeSheetReport {
    pub runs: u64,
    pub depth: usize,
    pub series_depth: usize,
    pub nodes_evaluated: u64,
    pub sheet_b_pure: u64,
    pub sheet_c_pure: u64,
    pub ties: u64,
    pub agreements: u64,
    pub purity_rate: f64,
    pub agreement_rate: f64,
}

/// The full three-sheet pipeline on every interior node: the a-sheet
/// colours of `T1x` and `T2x` feed the b-sheet through `A` at `x·212` and
/// the c-sheet through `A` at `x·121`, and the a-sheet colour of `x` is then
/// the B-tensor argmax (lowest index on ties). Each run redraws all bits.
pub fn three_sheet_simulate(
    region: &Region,
    runs: u64,
    seed: u64,
    series_depth: usize,
) -> Result<ThreeSheetReport, SimError> {
    if runs == 0 {
        return Err(SimError::NoRuns);
    }
    let streams = StreamAssignment::round_robin(series_depth);
    let shape = region.shape().clone();
    let (b_word, c_word) = (w("212"), w("121"));
    let interior = shape.frontier().start as u64;
    let results = (0..runs)
        .into_par_iter()
        .map(|run| -> Result<[u64; 5], SimError> {
            let r = Region::sample(shape.clone(), derive_seed(seed, run));
            let a_sheet = propagate(&r, &FrontierStrategy::IidFixedPoint, 0.0)?;
            let mut t = [0u64; 5];
            for node in 0..shape.frontier().start {
                let (d1, d2) = shape.descendants(node).expect("interior");
                let base = shape.word(node);
                let pick = |offset: &Word, src: PureColour| -> Result<(PureColour, bool), SimError> {
                    let at = base.compose(offset);
                    let a = a_matrix(|g| Some(r.coordinate(&at.compose(g))), &streams)?;
                    let arg = row_argmax(a.apply(&SimplexColour::pure(src)));
                    Ok((arg.set.first().expect("nonempty"), arg.is_tie()))
                };
                let (pb, tie_b) = pick(&b_word, a_sheet.get(d1))?;
                let (pc, tie_c) = pick(&c_word, a_sheet.get(d2))?;
                let face = correspondence_f(r.bit(node), &SimplexColour::pure(pb), &SimplexColour::pure(pc));
                let chosen = face.first().expect("nonempty");
                t[0] += !tie_b as u64;
                t[1] += !tie_c as u64;
                t[2] += tie_b as u64 + tie_c as u64 + (face.len() > 1) as u64;
                t[3] += (chosen == apply_rule_pure(r.bit(node), a_sheet.get(d1), a_sheet.get(d2))) as u64;
            }
            t[4] = interior;
            Ok(t)
        })
        .try_reduce(|| [0; 5], |a, b| Ok(std::array::from_fn(|i| a[i] + b[i])))?;
    let n = results[4].max(1) as f64;
    Ok(ThreeSheetReport {
        runs,
        depth: shape.depth(),
        series_depth,
        nodes_evaluated: results[4],
        sheet_b_pure: results[0],
        sheet_c_pure: results[1],
        ties: results[2],
        agreements: results[3],
        purity_rate: (results[0] + results[1]) as f64 / (2.0 * n),
        agreement_rate: results[3] as f64 / n,
    })
}

/// Exact law of `x` for a clamp, re-exported for callers comparing against
/// gadget output.
pub fn exact_recombination(clamp: PureColour) -> Result<[Q7Number; 3], SimError> {
    let report = pathway_analysis().map_err(|e| SimError::Gadget(e.to_string()))?;
    Ok(report.recombinations[clamp.slot()].entries().clone())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exactnum::rat;
    use crate::rule::allowed_face_pure;

    #[test]
    fn depth_one_region() {
        let r = build_region(1, 0).unwrap();
        assert_eq!(r.len(), 3);
        assert_eq!(r.descendants(0), Some((1, 2)));
        assert_eq!(r.word(1), &w("1"));
        assert_eq!(r.word(2), &w("2"));
        assert!(r.is_frontier(1) && r.is_frontier(2));
    }

    #[test]
    fn node_counts_match_enumeration() {
        let shape = RegionShape::build(4).unwrap();
        assert_eq!(shape.len(), 30);
        for l in 0..=10 {
            let s = RegionShape::build(l).unwrap();
            assert_eq!(s.len() as u64, (0..=l).map(count_normal).sum::<u64>());
        }
    }

    #[test]
    fn diamond_has_two_parents() {
        let shape = RegionShape::build(4).unwrap();
        let node = shape.node(&w("2111")).unwrap();
        let parents: Vec<(Word, Generator)> = shape.parents(node).map(|(p, g)| (shape.word(p).clone(), g)).collect();
        assert_eq!(parents.len(), 2);
        assert!(parents.contains(&(w("111"), Generator::T2)));
        assert!(parents.contains(&(w("211"), Generator::T1)));
    }

    #[test]
    fn descendants_are_one_longer() {
        let shape = RegionShape::build(8).unwrap();
        for node in 0..shape.len() {
            if let Some((a, b)) = shape.descendants(node) {
                assert_eq!(shape.word(a).len(), shape.word(node).len() + 1);
                assert_eq!(shape.word(b).len(), shape.word(node).len() + 1);
                assert!(a > node && b > node);
            }
        }
    }

    #[test]
    fn node_guard() {
        assert!(matches!(RegionShape::build_with_ceiling(10, 100), Err(SimError::TooManyNodes { .. })));
    }

    #[test]
    fn depth_one_propagation() {
        let shape = RegionShape::build(1).unwrap();
        let fixed = FrontierStrategy::Fixed(vec![PureColour::C1, PureColour::C2]);
        for seed in 0..64 {
            let r = Region::sample(shape.clone(), seed);
            let c = propagate(&r, &fixed, 0.0).unwrap();
            let expect = if r.bit(0) { PureColour::C2 } else { PureColour::C1 };
            assert_eq!(c.get(0), expect);
            let twin = r.twin(0, !r.bit(0));
            assert_ne!(propagate(&twin, &fixed, 0.0).unwrap().get(0), expect);
        }
    }

    #[test]
    fn propagation_is_deterministic_and_satisfying() {
        for seed in 0..20 {
            let r = build_region(9, seed).unwrap();
            for strategy in [FrontierStrategy::IidFixedPoint, FrontierStrategy::Uniform] {
                let a = propagate(&r, &strategy, 0.0).unwrap();
                assert_eq!(a, propagate(&r, &strategy, 0.0).unwrap());
                assert!(check_satisfaction(&r, &a).is_empty());
            }
        }
    }

    #[test]
    fn perturbation_introduces_violations_only_where_perturbed() {
        let r = build_region(8, 3).unwrap();
        let p = propagate_traced(&r, &FrontierStrategy::IidFixedPoint, 0.2).unwrap();
        assert!(!p.perturbed.is_empty());
        for v in check_satisfaction(&r, &p.colouring) {
            assert!(p.perturbed.contains(&v.node));
        }
        assert!(matches!(propagate(&r, &FrontierStrategy::Uniform, 1.5), Err(SimError::BadEpsilon(_))));
    }

    #[test]
    fn dump_round_trip() {
        let r = build_region(3, 11).unwrap();
        let c = propagate(&r, &FrontierStrategy::Uniform, 0.0).unwrap();
        let text = dump_region(&r, &c);
        let parsed = parse_dump(&text).unwrap();
        assert_eq!(parsed.len(), r.len());
        for (node, rec) in parsed.iter().enumerate() {
            assert_eq!((&rec.word, rec.bit, rec.colour), (r.word(node), r.bit(node), c.get(node)));
        }
        assert!(text.starts_with("e\t"));
        assert!(parse_dump("e\t2\t1").is_err());
    }

    #[test]
    fn coordinates_agree_inside_region() {
        let r = build_region(5, 99).unwrap();
        for node in 0..r.len() {
            assert_eq!(r.coordinate(r.word(node)), r.bit(node));
        }
        let fair = (0..4000u64).filter(|&s| coordinate_bit(s, &w("1212121"))).count();
        assert!((1800..2200).contains(&fair));
    }

    #[test]
    fn single_run_is_unit_mass() {
        let report = estimate_stats(StatsConfig {
            depth: 4,
            runs: 1,
            seed: 5,
            strategy: &FrontierStrategy::IidFixedPoint,
            epsilon: 0.0,
        })
        .unwrap();
        assert_eq!(report.base_counts.iter().sum::<u64>(), 1);
        assert!(report.base_marginal.contains(&1.0));
        assert!(report.joints.iter().all(|j| j.total_variation >= 0.0));
    }

    #[test]
    fn gadget_wiring() {
        let spec = GadgetSpec::new().unwrap();
        assert_eq!(spec.confluence, w("2111"));
        let mut sides: Vec<String> = spec.side_inputs.iter().map(|w| w.to_string()).collect();
        sides.sort();
        assert_eq!(sides, ["1111", "112", "12", "2112", "212", "22"]);
    }

    #[test]
    fn gadget_small_run_is_close() {
        let r = gadget_run(PureColour::C1, 100_000, 1).unwrap();
        assert!(r.within(5.0), "{:?}", r.z_scores);
        assert_eq!(r.counts.iter().sum::<u64>(), 100_000);
    }

    #[test]
    fn purity_examples() {
        let streams = StreamAssignment::round_robin(40);
        let tail = streams.truncation_bound();
        let zero = a_matrix(|_| Some(false), &streams).unwrap();
        let half = SimplexColour::new([rat(1, 2), rat(1, 2), rat(0, 1)]).unwrap();
        assert!(tie_for_matrix(&zero, &half, &tail).0);
        let pure = SimplexColour::pure(PureColour::C1);
        assert_eq!(purity_tie_rate(&pure, 2000, 40, 0).unwrap().ties, 0);
        assert_eq!(purity_tie_rate(&half, 2000, 40, 0).unwrap().ties, 0);
    }

    #[test]
    fn three_sheet_agrees_with_pure_rule() {
        let r = build_region(4, 0).unwrap();
        let rep = three_sheet_simulate(&r, 4, 0, 20).unwrap();
        assert_eq!(rep.ties, 0);
        assert_eq!(rep.agreements, rep.nodes_evaluated);
        assert_eq!(rep.sheet_b_pure, rep.nodes_evaluated);
    }

    #[test]
    fn fixed_point_sampler_frequencies() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut c = [0u32; 3];
        for _ in 0..100_000 {
            c[sample_fixed_point(&mut rng).slot()] += 1;
        }
        assert!((c[2] as f64 / 1e5 - 0.2915).abs() < 0.01);
        let _ = allowed_face_pure(true, PureColour::C1, PureColour::C1);
    }
}
