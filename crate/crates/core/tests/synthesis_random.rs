//! Randomized end-to-end synthesis over many sizes, value ranges and
//! fractional inputs. `MIXGRAPH_STRESS` scales the number of cases.

use mixgraph::graph::replay;
use mixgraph::synthesis::{perfect_mix, SynthesisPath};
use mixgraph::{is_perfectly_mixable, Configuration, Dyadic};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn scale() -> usize {
    std::env::var("MIXGRAPH_STRESS").ok().and_then(|s| s.parse().ok()).unwrap_or(1)
}

fn random_config(rng: &mut ChaCha8Rng, n: usize) -> Configuration {
    let hi: i64 = *[4i64, 16, 64, 1000].get(rng.gen_range(0..4)).unwrap();
    let neg = rng.gen_bool(0.3);
    let frac = rng.gen_range(0..4u32);
    let distinct = rng.gen_range(1..=n);
    let pool: Vec<i64> = (0..distinct)
        .map(|_| if neg { rng.gen_range(-hi..hi) } else { rng.gen_range(0..hi) })
        .collect();
    Configuration::from_values((0..n).map(|_| Dyadic::new(pool[rng.gen_range(0..pool.len())], frac)))
}

fn run(strategy: &str, seed: u64, sizes: std::ops::RangeInclusive<usize>, per_size: usize) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut mixed = 0;
    for n in sizes {
        let mut done = 0;
        let mut tries = 0;
        while done < per_size && tries < per_size * 50 {
            tries += 1;
            let c = random_config(&mut rng, n);
            let Ok(v) = is_perfectly_mixable(&c) else { continue };
            if !v.mixable {
                assert!(perfect_mix(&c, strategy).is_err());
                continue;
            }
            let r = perfect_mix(&c, strategy).unwrap_or_else(|e| panic!("{strategy} n={n} {c}: {e}"));
            let mu = c.mean().unwrap();
            assert_eq!(replay(&c, &r.sequence).unwrap(), Configuration::uniform(n, mu.clone()));
            let m = r.graph.metrics_config(&c).unwrap();
            let mu_prec = mu.precision();
            assert!(m.max_precision <= c.precision().max(mu_prec) + 1, "{c}");
            if r.path == SynthesisPath::Invariant {
                assert!((r.steps() - r.prefix_steps) as f64 <= r.ceiling);
            }
            done += 1;
            mixed += 1;
        }
    }
    assert!(mixed > 0);
}

#[test]
fn poly_small_sizes() {
    run("poly", 1, 4..=21, 8 * scale());
}

#[test]
fn greedy_small_sizes() {
    run("greedy", 2, 4..=21, 8 * scale());
}

#[test]
fn poly_large_sizes() {
    run("poly", 3, 22..=40, 3 * scale());
}

#[test]
fn greedy_large_sizes() {
    run("greedy", 4, 22..=40, 3 * scale());
}
