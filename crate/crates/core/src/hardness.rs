//! Generators for the hardness constructions: the waste-free target family
//! that defeats depth-bounded minimum-waste search, and the reduction from
//! numerical three-dimensional matching to depth-bounded reachability.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::Configuration;
use crate::graph::{GraphBuilder, MixingGraph};
use crate::numeric::Dyadic;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum HardnessError {
    #[error("parameter out of range: {0}")]
    Range(String),
    #[error("malformed instance: {0}")]
    Parse(String),
}

#[derive(Debug, Clone)]
pub struct Counterexample {
    pub inputs: Configuration,
    pub target: Configuration,
    pub graph: MixingGraph,
}

/// Pure inputs, target `{2^-d, ((d-1)2^d+1) : 1-2^-d}` and the waste-free graph
/// built from a central 0-1 mix, two dilution chains, recombination mixers
/// and one tree per recombined droplet.
pub fn dinh_counterexample(d: u32) -> Result<Counterexample, HardnessError> {
    if !(2..=20).contains(&d) {
        return Err(HardnessError::Range(format!("d = {d}, expected 2..=20")));
    }
    let zero = Dyadic::zero();
    let one = Dyadic::from_int(1);
    let low = |a: u32| Dyadic::new(1, a);
    let high = |a: u32| &one - &low(a);
    let n = ((d as usize) - 1) * (1usize << d) + 2;
    let zeros = d as usize;
    let inputs = Configuration::from_entries([(zero.clone(), zeros), (one.clone(), n - zeros)]);
    let target = Configuration::from_entries([(low(d), 1), (high(d), n - 1)]);

    let mut b = GraphBuilder::new(&inputs.droplets());
    let mix = |b: &mut GraphBuilder, x: &Dyadic, y: &Dyadic| {
        b.mix(x, y).expect("construction droplet available");
    };
    mix(&mut b, &zero, &one);
    for a in 2..=d {
        mix(&mut b, &low(a - 1), &zero);
        mix(&mut b, &high(a - 1), &one);
    }
    for a in 2..=d {
        mix(&mut b, &low(a), &high(a));
    }
    // trees, level by level: every open 1 - 2^-k with k < d is mixed with a 1
    for k in 1..d {
        let v = high(k);
        let count = b.open_values().multiplicity(&v);
        for _ in 0..count {
            mix(&mut b, &v, &one);
        }
    }
    Ok(Counterexample {
        inputs,
        target,
        graph: b.finish(),
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ThreeDMInstance {
    pub x: Vec<u64>,
    pub y: Vec<u64>,
    pub z: Vec<u64>,
    pub s: u64,
}

impl ThreeDMInstance {
    pub fn new(x: Vec<u64>, y: Vec<u64>, z: Vec<u64>, s: u64) -> Result<Self, HardnessError> {
        if x.len() != y.len() || y.len() != z.len() {
            return Err(HardnessError::Parse(format!(
                "cardinalities differ: {} {} {}",
                x.len(),
                y.len(),
                z.len()
            )));
        }
        Ok(ThreeDMInstance { x, y, z, s })
    }

    pub fn m(&self) -> usize {
        self.x.len()
    }
}

impl FromStr for ThreeDMInstance {
    type Err = HardnessError;

    fn from_str(text: &str) -> Result<Self, Self::Err> {
        let (mut x, mut y, mut z, mut s) = (None, None, None, None);
        for line in text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#')) {
            let (key, rest) = line
                .split_once(':')
                .ok_or_else(|| HardnessError::Parse(format!("expected `KEY: values`, got `{line}`")))?;
            let nums = rest
                .split_whitespace()
                .map(|t| t.parse::<u64>().map_err(|e| HardnessError::Parse(format!("`{t}`: {e}"))))
                .collect::<Result<Vec<_>, _>>()?;
            let slot = match key.trim() {
                "X" => &mut x,
                "Y" => &mut y,
                "Z" => &mut z,
                "S" => {
                    if nums.len() != 1 {
                        return Err(HardnessError::Parse("S takes exactly one value".into()));
                    }
                    s = Some(nums[0]);
                    continue;
                }
                other => return Err(HardnessError::Parse(format!("unknown key `{other}`"))),
            };
            if slot.replace(nums).is_some() {
                return Err(HardnessError::Parse(format!("duplicate key `{}`", key.trim())));
            }
        }
        let missing = |k: &str| HardnessError::Parse(format!("missing `{k}`"));
        ThreeDMInstance::new(
            x.ok_or_else(|| missing("X"))?,
            y.ok_or_else(|| missing("Y"))?,
            z.ok_or_else(|| missing("Z"))?,
            s.ok_or_else(|| missing("S"))?,
        )
    }
}

impl fmt::Display for ThreeDMInstance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let join = |v: &[u64]| v.iter().map(u64::to_string).collect::<Vec<_>>().join(" ");
        writeln!(f, "X: {}", join(&self.x))?;
        writeln!(f, "Y: {}", join(&self.y))?;
        writeln!(f, "Z: {}", join(&self.z))?;
        writeln!(f, "S: {}", self.s)
    }
}

fn int(v: u64) -> Dyadic {
    Dyadic::from_int(BigInt::from(v))
}

/// `a_i = 2x_i + 1/2`, `b_i = 2y_i + 1`, and two droplets `c_i = S - z_i + 3/4`.
pub fn reduce_3dm(inst: &ThreeDMInstance) -> (Configuration, Configuration) {
    let half = Dyadic::new(1, 1);
    let one = Dyadic::from_int(1);
    let three_q = Dyadic::new(3, 2);
    let mut i = Configuration::new();
    let mut t = Configuration::new();
    for k in 0..inst.m() {
        i.add(&int(2 * inst.x[k]) + &half, 1);
        i.add(&int(2 * inst.y[k]) + &one, 1);
        t.add(&(&int(inst.s) - &int(inst.z[k])) + &three_q, 2);
    }
    (i, t)
}

/// Depth-`sigma` variant: `a_i = 2^σ x_i + 2^-σ`, `b_i = 2^σ y_i + 1`,
/// `m(2^σ - 2)` zeros, and `2^σ` droplets `c_i = S - z_i + 2^-σ + 2^-2σ`.
pub fn reduce_3dm_sigma(inst: &ThreeDMInstance, sigma: u32) -> Result<(Configuration, Configuration), HardnessError> {
    if !(2..=16).contains(&sigma) {
        return Err(HardnessError::Range(format!("sigma = {sigma}, expected 2..=16")));
    }
    let m = inst.m();
    let width = 1usize << sigma;
    let tag = &Dyadic::new(1, sigma) + &Dyadic::new(1, 2 * sigma);
    let mut i = Configuration::new();
    let mut t = Configuration::new();
    if m > 0 {
        i.add(Dyadic::zero(), m * (width - 2));
    }
    for k in 0..m {
        i.add(&int(inst.x[k]).mul_pow2(sigma as i64) + &Dyadic::new(1, sigma), 1);
        i.add(&int(inst.y[k]).mul_pow2(sigma as i64) + &Dyadic::from_int(1), 1);
        t.add(&(&int(inst.s) - &int(inst.z[k])) + &tag, width);
    }
    Ok((i, t))
}

/// A matching as index triples into `(x, y, z)`.
pub type Matching = Vec<(usize, usize, usize)>;

/// Exhaustive search; factorial in `m`.
pub fn solve_3dm_bruteforce(inst: &ThreeDMInstance) -> Option<Matching> {
    let m = inst.m();
    let mut used_y = vec![false; m];
    let mut used_z = vec![false; m];
    let mut out = Vec::with_capacity(m);
    solve_rec(inst, 0, &mut used_y, &mut used_z, &mut out).then_some(out)
}

fn solve_rec(
    inst: &ThreeDMInstance,
    i: usize,
    used_y: &mut [bool],
    used_z: &mut [bool],
    out: &mut Matching,
) -> bool {
    if i == inst.m() {
        return true;
    }
    for j in 0..inst.m() {
        if used_y[j] || inst.x[i] + inst.y[j] > inst.s {
            continue;
        }
        let need = inst.s - inst.x[i] - inst.y[j];
        for k in 0..inst.m() {
            if used_z[k] || inst.z[k] != need {
                continue;
            }
            used_y[j] = true;
            used_z[k] = true;
            out.push((i, j, k));
            if solve_rec(inst, i + 1, used_y, used_z, out) {
                return true;
            }
            out.pop();
            used_y[j] = false;
            used_z[k] = false;
            // equal z values are interchangeable
            break;
        }
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::depth1_decide;

    fn d(s: &str) -> Dyadic {
        s.parse().unwrap()
    }

    #[test]
    fn counterexample_d3() {
        let c = dinh_counterexample(3).unwrap();
        assert_eq!(c.inputs, Configuration::from_entries([(d("0"), 3), (d("1"), 15)]));
        assert_eq!(c.target, Configuration::from_entries([(d("1/8"), 1), (d("7/8"), 17)]));
        let sim = c.graph.simulate_config(&c.inputs).unwrap();
        assert_eq!(sim.outputs, c.target);
        assert_eq!(c.graph.sinks().count(), c.target.n());
    }

    #[test]
    fn counterexample_family() {
        for k in 2..=6u32 {
            let c = dinh_counterexample(k).unwrap();
            let n = (k as usize - 1) * (1 << k) + 2;
            assert_eq!(c.inputs.n(), n);
            assert_eq!(c.inputs.sum(), c.target.sum());
            assert_eq!(c.graph.simulate_config(&c.inputs).unwrap().outputs, c.target);
            // the construction as described runs one mixer longer than the lower bound
            assert_eq!(c.graph.depth().unwrap(), 2 * k as usize);
        }
        assert!(dinh_counterexample(1).is_err());
    }

    #[test]
    fn counterexample_d2_minimum_depth() {
        use crate::oracle::{min_depth_search, DepthSearch};
        let c = dinh_counterexample(2).unwrap();
        assert_eq!(min_depth_search(&c.inputs, &c.target, 2), DepthSearch::None);
        assert_eq!(min_depth_search(&c.inputs, &c.target, 3), DepthSearch::None);
        match min_depth_search(&c.inputs, &c.target, 4) {
            DepthSearch::Found(g) => {
                assert_eq!(g.depth().unwrap(), 4);
                assert_eq!(g.simulate_config(&c.inputs).unwrap().outputs, c.target);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn reduction_examples() {
        let inst = ThreeDMInstance::new(vec![0], vec![0], vec![0], 0).unwrap();
        let (i, t) = reduce_3dm(&inst);
        assert_eq!(i, Configuration::from_values([d("1/2"), d("1")]));
        assert_eq!(t, Configuration::from_entries([(d("3/4"), 2)]));
        assert!(depth1_decide(&i, &t).is_some());
        assert_eq!(solve_3dm_bruteforce(&inst), Some(vec![(0, 0, 0)]));

        let inst = ThreeDMInstance::new(vec![1], vec![1], vec![1], 2).unwrap();
        assert_eq!(solve_3dm_bruteforce(&inst), None);
        let (i, t) = reduce_3dm(&inst);
        assert!(depth1_decide(&i, &t).is_none());

        let inst = ThreeDMInstance::new(vec![1, 2], vec![0, 1], vec![1, 2], 3).unwrap();
        let (i, t) = reduce_3dm(&inst);
        assert_eq!(i, Configuration::from_values(["5/2", "9/2", "1", "3"].iter().map(|s| d(s))));
        assert_eq!(t, Configuration::from_entries([(d("11/4"), 2), (d("7/4"), 2)]));
        // 1+2+0+1+1+2 = 7 is not 2*3, so no matching and unequal sums
        assert_ne!(i.sum(), t.sum());
        assert!(solve_3dm_bruteforce(&inst).is_none());
        assert!(depth1_decide(&i, &t).is_none());

        let inst = ThreeDMInstance::new(vec![1, 2], vec![0, 1], vec![2, 0], 3).unwrap();
        let (i, t) = reduce_3dm(&inst);
        assert_eq!(i.sum(), t.sum());
        let m = solve_3dm_bruteforce(&inst).unwrap();
        assert!(m.iter().all(|&(a, b, c)| inst.x[a] + inst.y[b] + inst.z[c] == 3));
        let pairs = depth1_decide(&i, &t).unwrap();
        assert_eq!(pairs.pairs.len(), 2);
    }

    #[test]
    fn sigma_reduction() {
        let inst = ThreeDMInstance::new(vec![0], vec![0], vec![0], 0).unwrap();
        let (i, t) = reduce_3dm_sigma(&inst, 2).unwrap();
        assert_eq!(i, Configuration::from_values([d("1/4"), d("1"), d("0"), d("0")]));
        assert_eq!(t, Configuration::from_entries([(d("5/16"), 4)]));
        assert_eq!(i.sum(), t.sum());
        assert!(reduce_3dm_sigma(&inst, 1).is_err());
    }

    #[test]
    fn instance_text_round_trip() {
        let inst: ThreeDMInstance = "X: 1 2\nY: 0 1\nZ: 1 2\nS: 3\n".parse().unwrap();
        assert_eq!(inst, ThreeDMInstance::new(vec![1, 2], vec![0, 1], vec![1, 2], 3).unwrap());
        assert_eq!(inst.to_string().parse::<ThreeDMInstance>().unwrap(), inst);
        assert!("X: 1\nY: 1 2\nZ: 1\nS: 1".parse::<ThreeDMInstance>().is_err());
        assert!("X: 1\nY: 1\nZ: 1".parse::<ThreeDMInstance>().is_err());
        assert!("X: 1\nY: 1\nZ: 1\nS: -1".parse::<ThreeDMInstance>().is_err());
    }
}

