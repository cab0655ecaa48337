use super::*;
use crate::graph::replay;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn ints(v: &[i64]) -> Configuration {
    Configuration::from_ints(v)
}

fn d(s: &str) -> Dyadic {
    s.parse().unwrap()
}

fn check(c: &Configuration, strategy: &str) -> SynthesisReport {
    let r = perfect_mix(c, strategy).unwrap_or_else(|e| panic!("{strategy} on {c}: {e}"));
    let out = replay(c, &r.sequence).unwrap();
    assert_eq!(out, Configuration::uniform(c.n(), c.mean().unwrap()));
    let sim = r.graph.simulate_config(c).unwrap();
    assert_eq!(sim.outputs, Configuration::uniform(c.n(), c.mean().unwrap()));
    r
}

#[test]
fn small_and_trivial_inputs() {
    let r = check(&ints(&[3, 3, 3]), "poly");
    assert_eq!(r.path, SynthesisPath::Trivial);
    assert_eq!(r.steps(), 0);
    let r = check(&ints(&[0, 1]), "poly");
    assert_eq!(r.steps(), 1);
    let r = check(&ints(&[0, 2, 4]), "greedy");
    assert_eq!(r.path, SynthesisPath::Direct);
    let r = check(&ints(&[0, 0, 1, 3]), "poly");
    assert_eq!(r.path, SynthesisPath::PowerOfTwo);
}

#[test]
fn unmixable_is_rejected() {
    assert!(matches!(
        perfect_mix(&ints(&[0, 0, 0, 5, 5]), "poly"),
        Err(SynthesisError::Unmixable(_))
    ));
    assert!(matches!(
        perfect_mix(&ints(&[0, 0, 0, 3, 7]), "nope"),
        Err(SynthesisError::UnknownStrategy(_))
    ));
}

#[test]
fn known_mixable_examples() {
    check(&ints(&[0, 0, 0, 3, 7]), "poly");
    check(&ints(&[0, 0, 0, 3, 7]), "greedy");
    let dyadic = Configuration::from_values(["1/16", "3/16", "7/32", "11/32", "7/16"].iter().map(|s| d(s)));
    check(&dyadic, "poly");
    check(&dyadic, "greedy");
    let seq_fixture = Configuration::from_values(["0", "0", "0", "1", "1"].iter().map(|s| d(s)));
    assert!(perfect_mix(&seq_fixture, "poly").is_err());
}

fn random_mixable(rng: &mut ChaCha8Rng, n: usize, hi: i64) -> Configuration {
    loop {
        let v: Vec<i64> = (0..n).map(|_| rng.gen_range(0..hi)).collect();
        let c = ints(&v);
        if c.m() > 1 && is_perfectly_mixable(&c).unwrap().mixable {
            return c;
        }
    }
}

#[test]
fn random_runs_both_strategies() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for n in 4..=24 {
        for _ in 0..6 {
            let c = random_mixable(&mut rng, n, 64);
            check(&c, "poly");
            check(&c, "greedy");
        }
    }
}

#[test]
fn normalization_is_structural() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for n in [5, 6, 7, 9, 12, 15] {
        let c = random_mixable(&mut rng, n, 40);
        let base = check(&c, "poly");
        let shifted = check(&c.offset(&Dyadic::from_int(-17)), "poly");
        let scaled = check(&c.scale_int(&3.into()), "poly");
        assert_eq!(base.graph, shifted.graph);
        assert_eq!(base.graph, scaled.graph);
    }
}

#[test]
fn registry_lists_strategies() {
    let r = StrategyRegistry::with_defaults();
    assert_eq!(r.names(), vec!["greedy", "poly"]);
    assert_eq!(r.get("poly").unwrap().name(), "poly");
    assert!(r.get("missing").is_none());
}
