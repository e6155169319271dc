//! Command-line front end. Every subcommand produces a [`ReportDocument`];
//! the process exits with 0 exactly when all its checks pass.

pub mod report;

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use num_traits::{Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::exactnum::{parse_rational, rat, Q7Number, Rational, Sign};
use crate::game::{equilibrium_check, gamma_stability, violations_csv, GameContext, Player, Profile};
use crate::markov::{
    chain_spectrum, closed_forms, fixed_point, pathway_analysis, product_chain_check, random_chain,
    Distribution3, ProductChainVerdict, RandomColouringChain, StochasticMatrix,
};
use crate::rule::{check_satisfaction, PureColour, DEFAULT_SERIES_DEPTH};
use crate::sim::{
    dump_region, estimate_stats, gadget_mixture, gadget_run, propagate_traced, FrontierStrategy, RegionShape,
    Region, SimError, StatsConfig, DEFAULT_NODE_CEILING,
};
use crate::words::{
    independence_check, pathway_elements, pathway_reductions, quotient_normalize, IndependenceVerdict,
    DEFAULT_PRODUCT_CEILING,
};

pub use report::{
    parse_report, write_report, CheckRecord, CommandConfig, Format, NamedValue, ReportDocument, ReportValue,
};

/// Seed used when none is given.
pub const DEFAULT_SEED: u64 = 42;

/// Largest accepted run count.
pub const MAX_RUNS: u64 = 100_000_000;

/// Environment variable naming the directory relative output paths resolve
/// against.
pub const OUT_DIR_ENV: &str = "PARACOLOUR_OUT_DIR";

#[derive(Debug, Error)]
pub enum CliError {
    #[error("refused: {0}")]
    Refused(String),
    #[error("invalid argument: {0}")]
    Invalid(String),
    #[error("cannot write {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Report(#[from] report::ReportError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Game(#[from] crate::game::GameError),
}

#[derive(Parser, Debug)]
#[command(name = "paracolour", version, about = "Exact checks and simulations for a paradoxical colouring rule")]
pub struct Cli {
    /// Write the report here instead of standard output.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Record wall-clock time per check (makes output non-reproducible).
    #[arg(long, global = true)]
    pub timings: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Exact verification of the stochastic analysis.
    Verify {
        #[arg(value_enum)]
        target: VerifyTarget,
        /// Random chains for the spectrum check.
        #[arg(long, default_value_t = 1000)]
        samples: u64,
        /// Admissible chain pairs for the product-chain check.
        #[arg(long, default_value_t = 200)]
        pairs: u64,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
    },
    /// Bounded search for a relation among the seven pathway elements.
    Independence {
        #[arg(long, default_value_t = 5)]
        max_factors: usize,
        #[arg(long, default_value_t = DEFAULT_PRODUCT_CEILING)]
        ceiling: u64,
    },
    /// Colour one region and check the rule.
    Construct {
        #[arg(long, default_value_t = 8)]
        depth: usize,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        /// `iid`, `uniform` or `fixed:1,2,3`.
        #[arg(long, default_value = "iid")]
        strategy: String,
        #[arg(long, default_value_t = 0.0)]
        epsilon: f64,
        /// Also write the `word<TAB>bit<TAB>colour` dump here.
        #[arg(long)]
        dump: Option<PathBuf>,
    },
    /// Monte Carlo estimate of the base colour law.
    Simulate {
        #[arg(long, default_value_t = 12)]
        depth: usize,
        #[arg(long, default_value_t = 100_000)]
        runs: u64,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        #[arg(long, default_value = "iid")]
        strategy: String,
        #[arg(long, default_value_t = 0.0)]
        epsilon: f64,
        /// Allowed distance of each marginal from the stationary law.
        #[arg(long, default_value = "0.005")]
        tolerance: String,
    },
    /// Two-pathway gadget against the exact recombination vectors.
    Gadget {
        #[arg(long, value_enum, default_value_t = ClampArg::All)]
        clamp: ClampArg,
        #[arg(long, default_value_t = 1_000_000)]
        runs: u64,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
    },
    /// Improvement potential and equilibrium check on a coloured region.
    Stability {
        #[arg(long, default_value_t = 6)]
        depth: usize,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        /// Perturbation probability used when colouring.
        #[arg(long, default_value_t = 0.0)]
        epsilon: f64,
        /// Threshold for point-wise optimality.
        #[arg(long, default_value = "0")]
        delta: String,
        /// Equilibrium tolerance.
        #[arg(long, default_value = "0")]
        tolerance: String,
        #[arg(long, default_value_t = DEFAULT_SERIES_DEPTH)]
        series_depth: usize,
        /// Also write the violators as CSV here.
        #[arg(long)]
        violations: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum VerifyTarget {
    Lemma2,
    Fixedpoint,
    Lemma3,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ClampArg {
    #[value(name = "1")]
    C1,
    #[value(name = "2")]
    C2,
    #[value(name = "3")]
    C3,
    All,
}

pub fn parse_strategy(s: &str) -> Result<FrontierStrategy, CliError> {
    match s {
        "iid" => Ok(FrontierStrategy::IidFixedPoint),
        "uniform" => Ok(FrontierStrategy::Uniform),
        _ => {
            let list = s.strip_prefix("fixed:").ok_or_else(|| CliError::Invalid(format!("strategy {s}")))?;
            let colours = list
                .split(',')
                .map(|c| {
                    c.trim()
                        .parse::<usize>()
                        .ok()
                        .and_then(|i| PureColour::from_index(i).ok())
                        .ok_or_else(|| CliError::Invalid(format!("colour {c}")))
                })
                .collect::<Result<Vec<_>, _>>()?;
            Ok(FrontierStrategy::Fixed(colours))
        }
    }
}

fn parse_nonneg(name: &str, s: &str) -> Result<Rational, CliError> {
    let x = parse_rational(s).map_err(|_| CliError::Invalid(format!("{name} = {s}")))?;
    if x.is_negative() {
        return Err(CliError::Invalid(format!("{name} must be nonnegative")));
    }
    Ok(x)
}

fn guard_runs(runs: u64) -> Result<(), CliError> {
    if runs == 0 {
        return Err(CliError::Invalid("runs must be positive".into()));
    }
    if runs > MAX_RUNS {
        return Err(CliError::Refused(format!("{runs} runs exceed the limit of {MAX_RUNS}")));
    }
    Ok(())
}

fn guard_epsilon(epsilon: f64) -> Result<(), CliError> {
    if !(0.0..=1.0).contains(&epsilon) {
        return Err(CliError::Invalid(format!("epsilon {epsilon} outside [0, 1]")));
    }
    Ok(())
}

fn shape(depth: usize) -> Result<std::sync::Arc<RegionShape>, CliError> {
    RegionShape::build_with_ceiling(depth, DEFAULT_NODE_CEILING).map_err(|e| match e {
        SimError::TooManyNodes { .. } => CliError::Refused(e.to_string()),
        e => e.into(),
    })
}

/// The path a report or side file goes to.
pub fn resolve_output(path: &Path) -> PathBuf {
    match std::env::var_os(OUT_DIR_ENV) {
        Some(dir) if path.is_relative() => Path::new(&dir).join(path),
        _ => path.to_path_buf(),
    }
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let path = resolve_output(path);
    fs::write(&path, bytes).map_err(|source| CliError::Io { path, source })
}

struct Checks {
    list: Vec<CheckRecord>,
    timings: bool,
}

impl Checks {
    fn run(&mut self, name: &str, anchor: &str, f: impl FnOnce() -> (bool, Vec<NamedValue>)) {
        let start = Instant::now();
        let (passed, values) = f();
        let runtime_ms = self.timings.then(|| start.elapsed().as_millis() as u64);
        self.list.push(CheckRecord { name: name.into(), anchor: anchor.into(), values, passed, runtime_ms });
    }
}

fn exact_values(prefix: &str, xs: &[Q7Number]) -> Vec<NamedValue> {
    xs.iter().enumerate().map(|(i, x)| NamedValue::new(format!("{prefix}{}", i + 1), ReportValue::exact(x))).collect()
}

fn matrix_values(prefix: &str, m: &[[Q7Number; 3]; 3]) -> Vec<NamedValue> {
    let mut out = Vec::new();
    for (i, row) in m.iter().enumerate() {
        for (j, x) in row.iter().enumerate() {
            out.push(NamedValue::new(format!("{prefix}[{}][{}]", i + 1, j + 1), ReportValue::exact(x)));
        }
    }
    out
}

fn sums_to_one(d: &Distribution3) -> bool {
    d.entries().iter().sum::<Q7Number>() == Q7Number::one()
}

fn verify_fixed_point(checks: &mut Checks) {
    let cert = fixed_point();
    checks.run("fixed point", "stationary law of y -> C_{y1} y", || match &cert {
        Ok(c) => {
            let mut v = exact_values("y", c.point.entries());
            v.extend(exact_values("residual", &c.residuals));
            (c.stationary && c.residuals.iter().all(Q7Number::is_zero) && sums_to_one(&c.point), v)
        }
        Err(e) => (false, vec![NamedValue::new("error", ReportValue::text(e.to_string()))]),
    });
    let Ok(cert) = cert else { return };
    checks.run("fixed point decimals", "quoted decimals (.35425, .35425, .2915)", || {
        let tol = Q7Number::from_rational(rat(5, 100_000));
        let mut ok = true;
        let mut values = Vec::new();
        for (i, quoted) in closed_forms::FIXED_POINT_DECIMALS.iter().enumerate() {
            let q = Q7Number::from_rational(parse_rational(quoted).expect("literal"));
            ok &= (cert.point.get(i) - &q).abs() < tol;
            values.push(NamedValue::new(format!("y{}", i + 1), ReportValue::Approx { decimal: cert.point.get(i).to_decimal(5) }));
        }
        (ok, values)
    });
    checks.run("independent iteration", "dyadic iteration from the uniform law", || {
        let mut values: Vec<NamedValue> = cert
            .iterate
            .iter()
            .enumerate()
            .map(|(i, x)| NamedValue::new(format!("y{}", i + 1), ReportValue::Approx { decimal: x.to_decimal(15) }))
            .collect();
        values.push(NamedValue::new("iterations", ReportValue::Count(cert.iterations as u64)));
        (cert.iterate_agrees, values)
    });
}

fn verify_pathways(checks: &mut Checks) {
    let report = match pathway_analysis() {
        Ok(r) => r,
        Err(e) => {
            checks.run("pathway analysis", "two-pathway recombination", || {
                (false, vec![NamedValue::new("error", ReportValue::text(e.to_string()))])
            });
            return;
        }
    };
    checks.run("C_{y1}^2", "two steps of the stationary chain", || {
        (report.c_squared.entries() == &closed_forms::c_squared(), matrix_values("C2", report.c_squared.entries()))
    });
    checks.run("C_{y1}^3", "law of T2x given the confluence colour", || {
        (report.c_cubed.entries() == &closed_forms::c_cubed(), matrix_values("C3", report.c_cubed.entries()))
    });
    let vectors = [
        ("C_0 y*", "confluence point not c1", &report.c0_fixed, closed_forms::c0_fixed()),
        ("C_1 y*", "confluence point c1", &report.c1_fixed, closed_forms::c1_fixed()),
        ("branch v0", "law of T1x, confluence c2 or c3", &report.branch_v0, closed_forms::branch_v0()),
        ("branch v1", "law of T1x, confluence c1", &report.branch_v1, closed_forms::branch_v1()),
    ];
    for (name, anchor, got, expected) in vectors {
        checks.run(name, anchor, || (got.entries() == &expected && sums_to_one(got), exact_values("v", got.entries())));
    }
    for i in 0..3 {
        let m = &report.recombination_matrices[i];
        checks.run(&format!("recombination matrix c{}", i + 1), "C_z with z = P(T2x = c1)", || {
            (m.entries() == &closed_forms::recombination_matrices()[i], matrix_values("C", m.entries()))
        });
        let d = &report.recombinations[i];
        checks.run(&format!("recombination c{}", i + 1), "law of x given the confluence colour", || {
            (d.entries() == &closed_forms::recombinations()[i] && sums_to_one(d), exact_values("x", d.entries()))
        });
    }
    checks.run("final distribution", "y*-mixture of the recombinations", || {
        let d = &report.final_distribution;
        let tol = Q7Number::from_rational(rat(1, 100_000));
        let decimals_ok = d.entries().iter().zip(closed_forms::FINAL_DECIMALS).all(|(x, q)| {
            (x - &Q7Number::from_rational(parse_rational(q).expect("literal"))).abs() < tol
        });
        (d.entries() == &closed_forms::final_distribution() && sums_to_one(d) && decimals_ok, exact_values("d", d.entries()))
    });
    checks.run("discrepancy certificate", "d*_1 - y*_1 exceeds 1/5000", || {
        let mut values = exact_values("d-y", &report.discrepancy);
        let excess = &report.discrepancy[0] - &Q7Number::from_rational(rat(1, 5000));
        values.push(NamedValue::new("excess over 1/5000", ReportValue::exact(&excess)));
        values.push(NamedValue::new("sign", ReportValue::text(format!("{:?}", report.excess_sign).to_lowercase())));
        (report.excess_sign == Sign::Positive, values)
    });
}

fn verify_spectrum(checks: &mut Checks, samples: u64, pairs: u64, seed: u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let chains: Vec<RandomColouringChain> = (0..samples).map(|_| random_chain(&mut rng)).collect();
    let spectra: Vec<_> = chains.iter().map(chain_spectrum).collect();
    checks.run("(1 - x) divides the characteristic polynomial", "random-colouring chain spectrum", || {
        let bad = spectra.iter().filter(|s| !s.divides() || !s.quotient_matches).count() as u64;
        (bad == 0, vec![NamedValue::new("chains", ReportValue::Count(samples)), NamedValue::new("failures", ReportValue::Count(bad))])
    });
    checks.run("subdominant modulus below one", "random-colouring chain spectrum", || {
        let positive: Vec<_> = chains.iter().zip(&spectra).filter(|(c, _)| c.any_positive()).collect();
        let bad = positive.iter().filter(|(_, s)| !s.below_one).count() as u64;
        (
            bad == 0,
            vec![
                NamedValue::new("chains with a positive parameter", ReportValue::Count(positive.len() as u64)),
                NamedValue::new("failures", ReportValue::Count(bad)),
            ],
        )
    });
    checks.run("boundary chain (1/2, 1/2, 1/2)", "subdominant modulus 1/2", || {
        let half = rat(1, 2);
        let chain = RandomColouringChain::new(half.clone(), half.clone(), half).expect("admissible");
        let s = chain_spectrum(&chain);
        let norm_sq = s.norm_sq().cloned().unwrap_or_else(Rational::zero);
        (norm_sq == rat(1, 4), vec![NamedValue::new("modulus squared", ReportValue::rational(&norm_sq))])
    });
    checks.run("product chain invariant", "unique invariant law of independent chains", || {
        let (mut confirmed, mut refuted, mut skipped) = (0u64, 0u64, 0u64);
        let mut attempts = 0u64;
        while confirmed + refuted < pairs && attempts < 100 * pairs.max(1) {
            attempts += 1;
            let (n, m) = (rng.gen_range(1..=4), rng.gen_range(1..=4));
            let s = StochasticMatrix::random(&mut rng, n);
            let t = StochasticMatrix::random(&mut rng, m);
            match product_chain_check(&s, &t) {
                ProductChainVerdict::Confirmed { .. } => confirmed += 1,
                ProductChainVerdict::Refuted { .. } => refuted += 1,
                ProductChainVerdict::Inapplicable { .. } => skipped += 1,
            }
        }
        (
            confirmed == pairs && refuted == 0,
            vec![
                NamedValue::new("confirmed", ReportValue::Count(confirmed)),
                NamedValue::new("refuted", ReportValue::Count(refuted)),
                NamedValue::new("inapplicable (skipped)", ReportValue::Count(skipped)),
            ],
        )
    });
}

fn independence(checks: &mut Checks, max_factors: usize, ceiling: u64) -> Result<(), CliError> {
    if ceiling > DEFAULT_PRODUCT_CEILING {
        return Err(CliError::Refused(format!("product ceiling {ceiling} above {DEFAULT_PRODUCT_CEILING}")));
    }
    let verdict = independence_check(&pathway_elements(), max_factors, ceiling).map_err(|e| match e {
        crate::words::WordError::TooManyProducts { .. } => CliError::Refused(e.to_string()),
        e => CliError::Invalid(e.to_string()),
    })?;
    checks.run("no normal-form collision", "independence of g1..g7", || match &verdict {
        IndependenceVerdict::NoCollision { max_factors, products_checked } => (
            true,
            vec![
                NamedValue::new("max factors", ReportValue::Count(*max_factors as u64)),
                NamedValue::new("products", ReportValue::Count(*products_checked)),
            ],
        ),
        IndependenceVerdict::Collision { first, second, product } => (
            false,
            vec![
                NamedValue::new("first", ReportValue::text(format!("{first:?}"))),
                NamedValue::new("second", ReportValue::text(format!("{second:?}"))),
                NamedValue::new("product", ReportValue::text(product.to_string())),
            ],
        ),
    });
    checks.run("quotient images", "images h1..h7 under T1^3 = e", || {
        let mut ok = true;
        let mut values = Vec::new();
        for (i, (g, h)) in pathway_elements().iter().zip(pathway_reductions()).enumerate() {
            let image = quotient_normalize(g).to_word();
            ok &= image == h;
            values.push(NamedValue::new(format!("h{}", i + 1), ReportValue::text(image.to_string())));
        }
        (ok, values)
    });
    Ok(())
}

fn colour_counts(region: &Region, colours: &crate::sim::Colouring) -> [u64; 3] {
    let mut c = [0u64; 3];
    for node in 0..region.len() {
        c[colours.get(node).slot()] += 1;
    }
    c
}

fn construct(
    checks: &mut Checks,
    depth: usize,
    seed: u64,
    strategy: &FrontierStrategy,
    epsilon: f64,
    dump: Option<&Path>,
) -> Result<(), CliError> {
    let region = Region::sample(shape(depth)?, seed);
    let p = propagate_traced(&region, strategy, epsilon)?;
    let violations = check_satisfaction(&region, &p.colouring);
    checks.run("rule satisfied", "pure colouring of a finite fragment", || {
        let outside = violations.iter().filter(|v| p.perturbed.binary_search(&v.node).is_err()).count() as u64;
        let ok = if epsilon == 0.0 { violations.is_empty() } else { outside == 0 };
        let counts = colour_counts(&region, &p.colouring);
        let mut values = vec![
            NamedValue::new("nodes", ReportValue::Count(region.len() as u64)),
            NamedValue::new("perturbed", ReportValue::Count(p.perturbed.len() as u64)),
            NamedValue::new("violations", ReportValue::Count(violations.len() as u64)),
            NamedValue::new("violations at unperturbed nodes", ReportValue::Count(outside)),
            NamedValue::new("base colour", ReportValue::text(format!("c{}", p.colouring.get(0)))),
        ];
        for (i, c) in counts.iter().enumerate() {
            values.push(NamedValue::new(format!("nodes coloured c{}", i + 1), ReportValue::Count(*c)));
        }
        (ok, values)
    });
    if let Some(path) = dump {
        write_file(path, dump_region(&region, &p.colouring).as_bytes())?;
    }
    Ok(())
}

fn simulate(checks: &mut Checks, config: StatsConfig<'_>, tolerance: &Rational) -> Result<(), CliError> {
    shape(config.depth)?;
    let report = estimate_stats(config)?;
    let tol = num_traits::ToPrimitive::to_f64(tolerance).unwrap_or(f64::INFINITY);
    checks.run("base marginal near the stationary law", "global colour law of the random regime", || {
        let mut values = vec![NamedValue::new("runs", ReportValue::Count(report.runs))];
        for i in 0..3 {
            values.push(NamedValue::new(format!("count c{}", i + 1), ReportValue::Count(report.base_counts[i])));
            values.push(NamedValue::new(format!("marginal c{}", i + 1), ReportValue::approx(report.base_marginal[i])));
            values.push(NamedValue::new(format!("std err c{}", i + 1), ReportValue::approx(report.standard_errors[i])));
        }
        values.push(NamedValue::new("max deviation", ReportValue::approx(report.max_deviation)));
        (report.max_deviation <= tol, values)
    });
    for joint in &report.joints {
        checks.run(&format!("joint law at ({}, {})", joint.first, joint.second), "dependence between descendants", || {
            let mut values = Vec::new();
            for j in 0..3 {
                for k in 0..3 {
                    values.push(NamedValue::new(format!("c{}c{}", j + 1, k + 1), ReportValue::Count(joint.counts[j][k])));
                }
            }
            values.push(NamedValue::new("total variation", ReportValue::approx(joint.total_variation)));
            (joint.total_variation >= 0.0, values)
        });
    }
    checks.run("rule violations", "perturbed runs only", || {
        (
            config.epsilon > 0.0 || report.violations == 0,
            vec![
                NamedValue::new("violations", ReportValue::Count(report.violations)),
                NamedValue::new("perturbed nodes", ReportValue::Count(report.perturbed_nodes)),
                NamedValue::new("ties", ReportValue::Count(report.ties)),
            ],
        )
    });
    Ok(())
}

fn gadget(checks: &mut Checks, clamp: ClampArg, runs: u64, seed: u64) -> Result<(), CliError> {
    let clamps: Vec<PureColour> = match clamp {
        ClampArg::C1 => vec![PureColour::C1],
        ClampArg::C2 => vec![PureColour::C2],
        ClampArg::C3 => vec![PureColour::C3],
        ClampArg::All => PureColour::ALL.to_vec(),
    };
    let mut reports = Vec::new();
    for c in clamps {
        let r = gadget_run(c, runs, seed)?;
        checks.run(&format!("gadget clamp c{}", c), "recombination vector within 4 standard errors", || {
            let mut values = Vec::new();
            for i in 0..3 {
                values.push(NamedValue::new(format!("empirical c{}", i + 1), ReportValue::approx(r.marginal[i])));
                values.push(NamedValue::new(format!("exact c{}", i + 1), ReportValue::exact(r.expected.get(i))));
                values.push(NamedValue::new(format!("z c{}", i + 1), ReportValue::approx(r.z_scores[i])));
            }
            (r.within(4.0), values)
        });
        reports.push(r);
    }
    if let Ok(all) = <[_; 3]>::try_from(reports) {
        checks.run("gadget mixture", "y*-mixture of the three clamps", || {
            let mix = gadget_mixture(&all);
            let values = (0..3).map(|i| NamedValue::new(format!("x c{}", i + 1), ReportValue::approx(mix[i]))).collect();
            ((mix.iter().sum::<f64>() - 1.0).abs() < 1e-9, values)
        });
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn stability(
    checks: &mut Checks,
    depth: usize,
    seed: u64,
    epsilon: f64,
    delta: &Rational,
    tolerance: &Rational,
    series_depth: usize,
    violations_out: Option<&Path>,
) -> Result<(), CliError> {
    let region = Region::sample(shape(depth)?, seed);
    let p = propagate_traced(&region, &FrontierStrategy::IidFixedPoint, epsilon)?;
    let ctx = GameContext::with_depth(&region, series_depth)?;
    let profile = Profile::induced(&ctx, &p.colouring);
    let report = gamma_stability(&ctx, &profile, delta)?;
    let violators = equilibrium_check(&ctx, &profile, tolerance)?;
    let rule_violations = check_satisfaction(&region, &p.colouring);
    checks.run("stability", "mean improvement potential", || {
        (
            report.markov_holds,
            vec![
                NamedValue::new("interior nodes", ReportValue::Count(report.nodes as u64)),
                NamedValue::new("mean t", ReportValue::rational(&report.mean)),
                NamedValue::new("delta", ReportValue::rational(&report.delta)),
                NamedValue::new("nodes with t > delta", ReportValue::Count(report.above_delta as u64)),
                NamedValue::new("measure of t > delta", ReportValue::rational(&report.measure_above)),
            ],
        )
    });
    checks.run("equilibrium", "equilibrium iff rule satisfaction", || {
        let player_i: Vec<_> = violators.iter().filter(|v| v.player == Player::I).map(|v| v.anchor.clone()).collect();
        let player_ii = violators.len() - player_i.len();
        let rule: Vec<_> = rule_violations.iter().map(|v| v.word.clone()).collect();
        let consistent = !tolerance.is_zero() || (player_i == rule && player_ii == 0);
        (
            consistent,
            vec![
                NamedValue::new("violators (player I)", ReportValue::Count(player_i.len() as u64)),
                NamedValue::new("violators (player II)", ReportValue::Count(player_ii as u64)),
                NamedValue::new("rule violations", ReportValue::Count(rule.len() as u64)),
                NamedValue::new("perturbed", ReportValue::Count(p.perturbed.len() as u64)),
            ],
        )
    });
    if let Some(path) = violations_out {
        write_file(path, violations_csv(&violators)?.as_bytes())?;
    }
    Ok(())
}

/// Runs the parsed command and returns its report. Side files (dumps,
/// violator lists) are written along the way.
pub fn execute(cli: &Cli) -> Result<ReportDocument, CliError> {
    let mut checks = Checks { list: Vec::new(), timings: cli.timings };
    let mut config = CommandConfig {
        output: cli.out.as_ref().map(|p| p.display().to_string()),
        format: Some(cli.format),
        ..Default::default()
    };
    match &cli.command {
        Command::Verify { target, samples, pairs, seed } => {
            config.command = format!("verify {}", target.to_possible_value().expect("named").get_name());
            match target {
                VerifyTarget::Fixedpoint => verify_fixed_point(&mut checks),
                VerifyTarget::Lemma3 => verify_pathways(&mut checks),
                VerifyTarget::Lemma2 => {
                    config.samples = Some(*samples);
                    config.pairs = Some(*pairs);
                    config.seed = Some(*seed);
                    if samples.max(pairs) > &MAX_RUNS {
                        return Err(CliError::Refused("sample count too large".into()));
                    }
                    verify_spectrum(&mut checks, *samples, *pairs, *seed);
                }
            }
        }
        Command::Independence { max_factors, ceiling } => {
            config.command = "independence".into();
            config.max_factors = Some(*max_factors);
            config.ceiling = Some(*ceiling);
            independence(&mut checks, *max_factors, *ceiling)?;
        }
        Command::Construct { depth, seed, strategy, epsilon, dump } => {
            config.command = "construct".into();
            config.depth = Some(*depth);
            config.seed = Some(*seed);
            config.strategy = Some(strategy.clone());
            config.epsilon = Some(*epsilon);
            guard_epsilon(*epsilon)?;
            construct(&mut checks, *depth, *seed, &parse_strategy(strategy)?, *epsilon, dump.as_deref())?;
        }
        Command::Simulate { depth, runs, seed, strategy, epsilon, tolerance } => {
            config.command = "simulate".into();
            config.depth = Some(*depth);
            config.runs = Some(*runs);
            config.seed = Some(*seed);
            config.strategy = Some(strategy.clone());
            config.epsilon = Some(*epsilon);
            config.tolerance = Some(tolerance.clone());
            guard_runs(*runs)?;
            guard_epsilon(*epsilon)?;
            let tol = parse_nonneg("tolerance", tolerance)?;
            let strategy = parse_strategy(strategy)?;
            let stats = StatsConfig { depth: *depth, runs: *runs, seed: *seed, strategy: &strategy, epsilon: *epsilon };
            simulate(&mut checks, stats, &tol)?;
        }
        Command::Gadget { clamp, runs, seed } => {
            config.command = "gadget".into();
            config.runs = Some(*runs);
            config.seed = Some(*seed);
            config.clamp = Some(clamp.to_possible_value().expect("named").get_name().to_string());
            guard_runs(*runs)?;
            gadget(&mut checks, *clamp, *runs, *seed)?;
        }
        Command::Stability { depth, seed, epsilon, delta, tolerance, series_depth, violations } => {
            config.command = "stability".into();
            config.depth = Some(*depth);
            config.seed = Some(*seed);
            config.epsilon = Some(*epsilon);
            config.delta = Some(delta.clone());
            config.tolerance = Some(tolerance.clone());
            config.series_depth = Some(*series_depth);
            guard_epsilon(*epsilon)?;
            if *series_depth == 0 || *series_depth > 256 {
                return Err(CliError::Invalid("series depth must lie in 1..=256".into()));
            }
            let delta = parse_nonneg("delta", delta)?;
            let tol = parse_nonneg("tolerance", tolerance)?;
            stability(&mut checks, *depth, *seed, *epsilon, &delta, &tol, *series_depth, violations.as_deref())?;
        }
    }
    Ok(ReportDocument::new(config, checks.list))
}

/// Entry point: parses `args`, runs, writes the report and returns the
/// process exit code (0 all checks passed, 1 a check failed, 2 usage
/// error, 3 refusal or I/O failure).
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let doc = match execute(&cli) {
        Ok(doc) => doc,
        Err(e) => {
            eprintln!("paracolour: {e}");
            return match e {
                CliError::Invalid(_) => 2,
                _ => 3,
            };
        }
    };
    let bytes = match write_report(&doc, cli.format) {
        Ok(b) => b,
        Err(e) => {
            eprintln!("paracolour: {e}");
            return 3;
        }
    };
    let written = match &cli.out {
        Some(path) => write_file(path, &bytes),
        None => {
            use std::io::Write;
            std::io::stdout().write_all(&bytes).map_err(|source| CliError::Io { path: "<stdout>".into(), source })
        }
    };
    if let Err(e) = written {
        eprintln!("paracolour: {e}");
        return 3;
    }
    if doc.passed {
        0
    } else {
        1
    }
}
