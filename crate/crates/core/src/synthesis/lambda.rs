//! Mixing a sub-multiset until it has no pair that is safe for the invariant,
//! by furthest-apart safe mixes and a split at an empty segment whenever no
//! safe pair is far enough apart.

use num_bigint::BigInt;

use crate::config::Configuration;
use crate::numeric::Dyadic;

use super::safety::lambda_safe_pairs;
use super::{MixState, SynthesisError};

/// Mixes the droplets of `a` (a sub-multiset of `state.e`) until no pair in
/// `a` is safe. Returns early once the whole configuration is near-final.
pub fn lambda_mix_subset(state: &mut MixState, a: &mut Configuration) -> Result<(), SynthesisError> {
    loop {
        if state.is_near_final() {
            return Ok(());
        }
        let k = a.n();
        if a.m() < 2 {
            return Ok(());
        }
        let pairs = lambda_safe_pairs(&state.e, a.values(), &state.ctx);
        let Some((x, y)) = furthest(&pairs) else {
            return Ok(());
        };
        let diam = a.diam();
        if (&y - &x).mul_int(&BigInt::from(k)) >= diam {
            state.mix_checked(&x, &y, "furthest-apart safe mix")?;
            a.mix_in_place(&x, &y)?;
            continue;
        }
        let (lo, _) = (a.min().unwrap().clone(), a.max().unwrap().clone());
        let kb = BigInt::from(k);
        // segment i is [lo + i*diam/k, lo + (i+1)*diam/k]; compare after scaling by k
        let scaled = |v: &Dyadic| (v - &lo).mul_int(&kb);
        let seg = (0..k)
            .find(|&i| {
                let l = diam.mul_int(&BigInt::from(i));
                let r = diam.mul_int(&BigInt::from(i + 1));
                !a.values().any(|v| {
                    let s = scaled(v);
                    s > l && s < r
                })
            })
            .ok_or_else(|| SynthesisError::LemmaGap {
                lemma: "empty segment",
                state: a.to_string(),
            })?;
        let l = diam.mul_int(&BigInt::from(seg));
        let mut a1 = Configuration::new();
        let mut a2 = Configuration::new();
        for (v, m) in a.entries() {
            if scaled(v) <= l {
                a1.add(v.clone(), m);
            } else {
                a2.add(v.clone(), m);
            }
        }
        lambda_mix_subset(state, &mut a1)?;
        lambda_mix_subset(state, &mut a2)?;
        *a = a1.union(&a2);
    }
}

fn furthest(pairs: &[(Dyadic, Dyadic)]) -> Option<(Dyadic, Dyadic)> {
    pairs
        .iter()
        .max_by(|p, q| {
            let gp = &p.1 - &p.0;
            let gq = &q.1 - &q.0;
            // larger gap wins; on ties the lexicographically smaller pair wins
            gp.cmp(&gq).then_with(|| q.cmp(p))
        })
        .cloned()
}
