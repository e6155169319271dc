use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use paracolour::exactnum::{rat, Q7Number, Rational, Sign};
use paracolour::game::{gamma_stability, improvement_t, GameContext, Profile};
use paracolour::markov::{
    c_matrix, chain_spectrum, product_chain_check, Distribution3, ProductChainVerdict, RandomColouringChain,
    StochasticMatrix,
};
use paracolour::rule::{
    a_matrix, apply_rule_pure, b_tensor, correspondence_f, row_argmax, ColourSet, PureColour, SimplexColour,
    StreamAssignment,
};
use paracolour::sim::{
    build_region, dump_region, parse_dump, propagate, propagate_traced, FrontierStrategy, RegionShape,
};
use paracolour::words::{count_normal, quotient_normalize, Generator, Word};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn rational() -> impl Strategy<Value = Rational> {
    (-60i64..60, 1i64..25).prop_map(|(n, d)| rat(n, d))
}

fn q7() -> impl Strategy<Value = Q7Number> {
    (rational(), rational()).prop_map(|(a, b)| Q7Number::new(a, b))
}

fn word(max: usize) -> impl Strategy<Value = Word> {
    prop::collection::vec(any::<bool>(), 0..=max).prop_map(|bits| {
        Word::from_letters(bits.into_iter().map(|b| if b { Generator::T2 } else { Generator::T1 }).collect())
    })
}

fn unit_interval() -> impl Strategy<Value = Rational> {
    (0i64..=64).prop_map(|n| rat(n, 64))
}

fn half_interval() -> impl Strategy<Value = Rational> {
    (1i64..=40).prop_flat_map(|d| (0..=d).prop_map(move |n| rat(n, 2 * d)))
}

/// Sign of `a + b·√7` from a 30-digit enclosure of `√7`.
fn interval_sign(x: &Q7Number) -> Sign {
    let scale = BigInt::from(10).pow(30);
    let lo = Rational::new((BigInt::from(7) * &scale * &scale).sqrt(), scale.clone());
    let hi = &lo + Rational::new(BigInt::one(), scale);
    let (p, q) = (x.a() + x.b() * &lo, x.a() + x.b() * &hi);
    let (min, max) = if p <= q { (p, q) } else { (q, p) };
    if min.is_positive() {
        Sign::Positive
    } else if max.is_negative() {
        Sign::Negative
    } else {
        assert!(x.is_zero(), "enclosure too wide for {x}");
        Sign::Zero
    }
}

fn random_normal_form(w: &Word, picks: &[usize]) -> Word {
    let mut cur = w.clone();
    let mut i = 0;
    loop {
        let redexes = cur.redexes();
        if redexes.is_empty() {
            return cur;
        }
        let pick = picks.get(i).copied().unwrap_or(0) % redexes.len();
        cur = cur.rewrite_at(redexes[pick]).unwrap();
        i += 1;
    }
}

fn distribution() -> impl Strategy<Value = Distribution3> {
    (0i64..=20, 0i64..=20, 0i64..=20).prop_filter("nonzero", |(a, b, c)| a + b + c > 0).prop_map(|(a, b, c)| {
        let t = a + b + c;
        Distribution3::new([a, b, c].map(|x| Q7Number::from_rational(rat(x, t)))).unwrap()
    })
}

proptest! {
    #[test]
    fn field_axioms(x in q7(), y in q7(), z in q7()) {
        prop_assert_eq!(&(&x + &y) + &z, &x + &(&y + &z));
        prop_assert_eq!(&(&x * &y) * &z, &x * &(&y * &z));
        prop_assert_eq!(&x * &(&y + &z), &(&x * &y) + &(&x * &z));
        prop_assert_eq!(&x * &y, &y * &x);
        if !x.is_zero() {
            prop_assert_eq!(&x * &x.inv().unwrap(), Q7Number::one());
        }
        prop_assert_eq!((&x * &x.conjugate()).b().clone(), Rational::zero());
    }


    #[test]
    fn canonical_forms_are_stable(x in q7()) {
        let again = Q7Number::new(x.a().clone(), x.b().clone());
        prop_assert_eq!(&again, &x);
        let json = serde_json::to_string(&x).unwrap();
        let back: Q7Number = serde_json::from_str(&json).unwrap();
        prop_assert_eq!(&back, &x);
        prop_assert_eq!(serde_json::to_string(&back).unwrap(), json);
    }

    #[test]
    fn decimal_rendering_brackets_value(x in q7()) {
        let shown: f64 = x.to_decimal(5).parse().unwrap();
        prop_assert!((shown - x.to_f64()).abs() <= 5.0e-6 + 1e-12);
    }

    #[test]
    fn normalisation_is_idempotent_and_length_preserving(w in word(16)) {
        let n = w.normalize();
        prop_assert_eq!(n.len(), w.len());
        prop_assert!(n.is_canonical());
        prop_assert_eq!(n.normalize(), n.clone());
    }

    #[test]
    fn any_rewrite_order_reaches_the_normal_form(w in word(14), picks in prop::collection::vec(0usize..8, 0..40)) {
        prop_assert_eq!(random_normal_form(&w, &picks), w.normalize());
    }

    #[test]
    fn composition_is_associative(u in word(6), v in word(6), x in word(6)) {
        prop_assert_eq!(u.compose(&v).compose(&x), u.compose(&v.compose(&x)));
    }

    #[test]
    fn quotient_is_a_homomorphism(u in word(10), v in word(10)) {
        let lhs = quotient_normalize(&u.compose(&v));
        let rhs = quotient_normalize(&u).mul(&quotient_normalize(&v));
        prop_assert_eq!(lhs, rhs);
        prop_assert_eq!(quotient_normalize(&u), quotient_normalize(&u.normalize()));
    }

    #[test]
    fn c_matrices_are_column_stochastic(z in unit_interval(), y in distribution()) {
        let c = c_matrix(&Q7Number::from_rational(z)).unwrap();
        for j in 0..3 {
            let col: Q7Number = (0..3).map(|i| c.entry(i, j).clone()).sum();
            prop_assert_eq!(col, Q7Number::one());
            prop_assert!((0..3).all(|i| !c.entry(i, j).is_negative()));
        }
        let out = c.apply(&y);
        prop_assert_eq!(out.entries().iter().sum::<Q7Number>(), Q7Number::one());
    }

    #[test]
    fn pure_rule_matches_transition_columns(z in unit_interval()) {
        let c = c_matrix(&Q7Number::from_rational(z.clone())).unwrap();
        for other in [PureColour::C2, PureColour::C3] {
            for j in PureColour::ALL {
                let mut law = [Rational::zero(), Rational::zero(), Rational::zero()];
                for e in [false, true] {
                    law[apply_rule_pure(e, j, PureColour::C1).slot()] += &z / rat(2, 1);
                    law[apply_rule_pure(e, j, other).slot()] += (Rational::one() - &z) / rat(2, 1);
                }
                for i in 0..3 {
                    prop_assert_eq!(Q7Number::from_rational(law[i].clone()), c.entry(i, j.slot()).clone());
                }
            }
        }
    }

    #[test]
    fn subdominant_modulus_below_one(p in half_interval(), q in half_interval(), r in half_interval()) {
        let chain = RandomColouringChain::new(p, q, r).unwrap();
        let s = chain_spectrum(&chain);
        prop_assert!(s.divides() && s.quotient_matches);
        if chain.any_positive() {
            prop_assert!(s.below_one);
        }
    }

    #[test]
    fn product_chains_never_refute(seed in any::<u64>(), n in 1usize..=4, m in 1usize..=4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = StochasticMatrix::random(&mut rng, n);
        let t = StochasticMatrix::random(&mut rng, m);
        let verdict = product_chain_check(&s, &t);
        prop_assert!(!matches!(verdict, ProductChainVerdict::Refuted { .. }), "{:?}", verdict);
        if let ProductChainVerdict::Confirmed { invariant } = verdict {
            prop_assert_eq!(invariant.iter().sum::<Rational>(), Rational::one());
            prop_assert_eq!(s.kronecker(&t).unique_invariant(), Some(invariant));
        }
    }

    #[test]
    fn diagonal_dominance(bits in prop::collection::vec(any::<bool>(), 240), j in 0usize..3) {
        let streams = StreamAssignment::round_robin(40);
        let words: Vec<&Word> = streams.all_words().collect();
        let a = a_matrix(|w| words.iter().position(|x| *x == w).map(|i| bits[i]), &streams).unwrap();
        let c = PureColour::from_slot(j);
        let arg = row_argmax(a.apply(&SimplexColour::pure(c)));
        prop_assert!(!arg.is_tie());
        prop_assert_eq!(arg.set, ColourSet::singleton(c));
    }

    #[test]
    fn pure_correspondence_is_the_rule(e in any::<bool>(), j in 0usize..3, k in 0usize..3) {
        let (j, k) = (PureColour::from_slot(j), PureColour::from_slot(k));
        let face = correspondence_f(e, &SimplexColour::pure(j), &SimplexColour::pure(k));
        prop_assert_eq!(face, ColourSet::singleton(apply_rule_pure(e, j, k)));
        prop_assert_eq!(b_tensor(e).fires(j, k), apply_rule_pure(e, j, k));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10_000))]

    #[test]
    fn sign_matches_enclosure(x in q7()) {
        prop_assert_eq!(x.sign(), interval_sign(&x));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn exact_propagation_satisfies_rule(depth in 0usize..=14, seed in any::<u64>()) {
        let region = build_region(depth, seed).unwrap();
        let c = propagate(&region, &FrontierStrategy::IidFixedPoint, 0.0).unwrap();
        prop_assert!(paracolour::rule::check_satisfaction(&region, &c).is_empty());
    }

    #[test]
    fn propagation_is_deterministic(depth in 0usize..=9, seed in any::<u64>(), eps in 0u32..=4) {
        let epsilon = eps as f64 / 8.0;
        let region = build_region(depth, seed).unwrap();
        let a = propagate_traced(&region, &FrontierStrategy::Uniform, epsilon).unwrap();
        let b = propagate_traced(&build_region(depth, seed).unwrap(), &FrontierStrategy::Uniform, epsilon).unwrap();
        prop_assert_eq!(a.colouring.as_slice(), b.colouring.as_slice());
        prop_assert_eq!(a.perturbed, b.perturbed);
    }

    #[test]
    fn dumps_round_trip(depth in 0usize..=6, seed in any::<u64>()) {
        let region = build_region(depth, seed).unwrap();
        let c = propagate(&region, &FrontierStrategy::IidFixedPoint, 0.0).unwrap();
        let records = parse_dump(&dump_region(&region, &c)).unwrap();
        prop_assert_eq!(records.len(), region.len());
        for (n, r) in records.iter().enumerate() {
            prop_assert_eq!(&r.word, region.word(n));
            prop_assert_eq!(r.bit, region.bit(n));
            prop_assert_eq!(r.colour, c.get(n));
        }
    }

    #[test]
    fn stability_reports_respect_markov(depth in 2usize..=6, seed in any::<u64>(), eps in 0u32..=4, delta in 0i64..=6) {
        let region = build_region(depth, seed).unwrap();
        let ctx = GameContext::with_depth(&region, 10).unwrap();
        let exact = propagate(&region, &FrontierStrategy::IidFixedPoint, 0.0).unwrap();
        let noisy = propagate(&region, &FrontierStrategy::IidFixedPoint, eps as f64 / 8.0).unwrap();
        let profile = Profile::induced(&ctx, &exact).with_player_i(&noisy);
        let report = gamma_stability(&ctx, &profile, &rat(delta, 12)).unwrap();
        prop_assert!(report.markov_holds);
        for imp in &report.improvements {
            prop_assert!(!imp.t.is_negative() && imp.t <= rat(102, 100));
        }
        let flipped = (0..region.len()).filter(|&n| !region.is_frontier(n) && exact.get(n) != noisy.get(n)).count();
        prop_assert_eq!(report.mean.clone(), rat(flipped as i64, 3 * report.nodes.max(1) as i64));
    }
}

#[test]
fn region_sizes_match_normal_word_counts() {
    for depth in 0..=14 {
        let shape = RegionShape::build(depth).unwrap();
        let expected: u64 = (0..=depth).map(count_normal).sum();
        assert_eq!(shape.len() as u64, expected, "depth {depth}");
        for n in 0..shape.len() {
            assert_eq!(shape.node(shape.word(n)), Some(n));
        }
    }
}

#[test]
fn diamond_nodes_have_consistent_parents() {
    let shape = RegionShape::build(10).unwrap();
    let mut diamonds = 0;
    for n in 0..shape.len() {
        let parents: Vec<_> = shape.parents(n).collect();
        for &(p, g) in &parents {
            let (d1, d2) = shape.descendants(p).unwrap();
            assert_eq!(if g == Generator::T1 { d1 } else { d2 }, n);
            assert_eq!(shape.word(p).append(g), *shape.word(n));
        }
        diamonds += (parents.len() == 2) as usize;
    }
    assert!(diamonds > 0);
}

#[test]
fn interior_improvement_vanishes_on_exact_colourings() {
    for seed in 0..5 {
        let region = build_region(6, seed).unwrap();
        let ctx = GameContext::with_depth(&region, 12).unwrap();
        let c = propagate(&region, &FrontierStrategy::IidFixedPoint, 0.0).unwrap();
        let profile = Profile::induced(&ctx, &c);
        for n in (0..region.len()).filter(|&n| !region.is_frontier(n)) {
            assert!(improvement_t(&ctx, n, &profile).is_zero());
        }
    }
}
