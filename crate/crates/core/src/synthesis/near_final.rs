//! Near-final configurations: partitions into power-of-two blocks sharing the
//! global average, and the direct mixing of such blocks.
//!
//! Deciding near-finality in general is NP-complete, so only the shapes the
//! mixing lemmas actually produce are recognized.

use crate::config::Configuration;
use crate::graph::{MixStep, MixingSequence};
use crate::numeric::{is_power_of_two, odd_part, Dyadic};

use super::SynthesisError;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NearFinalPartition {
    pub blocks: Vec<Configuration>,
}

/// A near-final partition for configurations of the recognized shapes.
pub fn structured_near_final_partition(e: &Configuration) -> Option<NearFinalPartition> {
    let n = e.n();
    let mu = e.mean()?;
    if n == 0 {
        return None;
    }
    let singles = |k: usize| (0..k).map(|_| Configuration::uniform(1, mu.clone())).collect::<Vec<_>>();
    if e.m() == 1 {
        return Some(NearFinalPartition { blocks: singles(n) });
    }
    if is_power_of_two(n as u64) {
        return Some(NearFinalPartition {
            blocks: vec![e.clone()],
        });
    }
    let k_mu = e.multiplicity(&mu);
    let mut rest = e.clone();
    while rest.remove(&mu) {}
    let r = rest.n();
    if is_power_of_two(r as u64) {
        let mut blocks = vec![rest];
        blocks.extend(singles(k_mu));
        return Some(NearFinalPartition { blocks });
    }
    if rest.m() == 2 {
        let sigma = odd_part(r as u64) as usize;
        let ents: Vec<(Dyadic, usize)> = rest.entries().map(|(v, k)| (v.clone(), k)).collect();
        if ents.iter().all(|(_, k)| k % sigma == 0) {
            let block = Configuration::from_entries(ents.iter().map(|(v, k)| (v.clone(), k / sigma)));
            if block.mean().as_ref() == Some(&mu) {
                let mut blocks = vec![block; sigma];
                blocks.extend(singles(k_mu));
                return Some(NearFinalPartition { blocks });
            }
        }
    }
    // values symmetric about mu with matching multiplicities
    let two_mu = mu.mul_pow2(1);
    let mut blocks = singles(k_mu);
    for (v, k) in rest.entries() {
        let mirror = &two_mu - v;
        if rest.multiplicity(&mirror) != k {
            return None;
        }
        if *v < mirror {
            for _ in 0..k {
                blocks.push(Configuration::from_values([v.clone(), mirror.clone()]));
            }
        }
    }
    Some(NearFinalPartition { blocks })
}

pub fn is_structured_near_final(e: &Configuration) -> bool {
    structured_near_final_partition(e).is_some()
}

/// Mixes a configuration of power-of-two size to its average by repeatedly
/// mixing the farthest-apart same-parity pair.
pub fn mix_power_of_two(e: &Configuration) -> Result<MixingSequence, SynthesisError> {
    let n = e.n();
    if !is_power_of_two(n as u64) {
        return Err(SynthesisError::Precondition(format!(
            "{e} does not have power-of-two size"
        )));
    }
    let mu = e.mean().expect("power-of-two size has a dyadic average");
    let p = e.precision().max(mu.precision()) as i64;
    let mut w = e.scale_pow2(p);
    let mut seq = Vec::new();
    while w.m() > 1 {
        let (even, odd) = w.parity_split().expect("integral frame");
        let mut best: Option<(Dyadic, Dyadic, Dyadic)> = None;
        for class in [even, odd] {
            if class.m() < 2 {
                continue;
            }
            let (lo, hi) = (class.min().unwrap().clone(), class.max().unwrap().clone());
            let gap = &hi - &lo;
            let better = match &best {
                None => true,
                Some((g, blo, bhi)) => gap > *g || (gap == *g && (&lo, &hi) < (blo, bhi)),
            };
            if better {
                best = Some((gap, lo, hi));
            }
        }
        let Some((_, lo, hi)) = best else {
            return Err(SynthesisError::LemmaGap {
                lemma: "power-of-two mixing",
                state: w.to_string(),
            });
        };
        w.mix_in_place(&lo, &hi).expect("values present");
        seq.push(MixStep::new(lo.mul_pow2(-p), hi.mul_pow2(-p)));
    }
    Ok(seq)
}

/// Mixes every block of a near-final partition of `e` to the common average.
pub fn mix_near_final(
    e: &Configuration,
    partition: &NearFinalPartition,
) -> Result<MixingSequence, SynthesisError> {
    let mu = e.mean().ok_or_else(|| SynthesisError::Precondition(format!("{e} has no dyadic average")))?;
    let mut union = Configuration::new();
    for b in &partition.blocks {
        if !is_power_of_two(b.n() as u64) || b.mean().as_ref() != Some(&mu) {
            return Err(SynthesisError::Precondition(format!(
                "block {b} is not a power-of-two block with average {mu}"
            )));
        }
        union = union.union(b);
    }
    if union != *e {
        return Err(SynthesisError::Precondition(format!(
            "blocks do not partition {e}"
        )));
    }
    let mut seq = Vec::new();
    for b in &partition.blocks {
        seq.extend(mix_power_of_two(b)?);
    }
    Ok(seq)
}

/// Ceiling on the mixing steps of a near-final configuration.
pub fn near_final_ceiling(n: usize, s: f64) -> f64 {
    144.0 * (n as f64).powi(3) * s * s
}

/// Ceiling on the mixing steps of the power-of-two procedure.
pub fn power_of_two_ceiling(n: usize, s: f64) -> f64 {
    288.0 * (n as f64).powi(2) * s * s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::replay;
    use proptest::prelude::*;

    fn ints(v: &[i64]) -> Configuration {
        Configuration::from_ints(v)
    }

    #[test]
    fn recognized_shapes() {
        // mu singletons plus a block of four
        let e = ints(&[4, 4, 4, 0, 2, 6, 8]);
        let p = structured_near_final_partition(&e).unwrap();
        assert_eq!(p.blocks.len(), 4);
        // two values, sigma copies
        let e = ints(&[0, 0, 0, 8, 8, 8]);
        let p = structured_near_final_partition(&e).unwrap();
        assert_eq!(p.blocks.len(), 3);
        let e = ints(&[0, 0, 0, 0, 0, 0, 8, 8, 8, 8, 8, 8, 8, 8, 8, 8]);
        assert!(structured_near_final_partition(&e).is_some());
        // mirrored pairs
        let e = ints(&[1, 9, 3, 7, 3, 7, 5]);
        let p = structured_near_final_partition(&e).unwrap();
        assert_eq!(p.blocks.len(), 4);
        assert!(structured_near_final_partition(&ints(&[0, 0, 4, 4, 12])).is_none());
    }

    #[test]
    fn power_of_two_mixing() {
        let e = ints(&[0, 1, 3, 4]);
        let seq = mix_power_of_two(&e).unwrap();
        assert_eq!(replay(&e, &seq).unwrap(), ints(&[2, 2, 2, 2]));
        assert!(mix_power_of_two(&ints(&[0, 1, 2])).is_err());
    }

    proptest! {
        #[test]
        fn power_of_two_reaches_average(v in prop::collection::vec(-40i64..40, 1..5usize).prop_flat_map(|v| {
            let k = 1usize << v.len().min(4);
            prop::collection::vec(-40i64..40, k)
        })) {
            let e = ints(&v);
            let seq = mix_power_of_two(&e).unwrap();
            let out = replay(&e, &seq).unwrap();
            prop_assert_eq!(out, Configuration::uniform(e.n(), e.mean().unwrap()));
            let s = e.size_bits();
            prop_assert!((seq.len() as f64) <= power_of_two_ceiling(e.n(), s));
        }

        #[test]
        fn recognized_partitions_are_valid(v in prop::collection::vec(0i64..12, 3..10)) {
            let e = ints(&v);
            if let Some(p) = structured_near_final_partition(&e) {
                let seq = mix_near_final(&e, &p).unwrap();
                prop_assert_eq!(replay(&e, &seq).unwrap(), Configuration::uniform(e.n(), e.mean().unwrap()));
            }
        }
    }
}
