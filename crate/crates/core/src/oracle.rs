//! Brute-force ground truth: bounded-precision reachability search over
//! configurations, an exhaustive mixability decider, layered minimum-depth
//! search and the depth-one matcher.

use std::collections::{BTreeMap, HashMap, HashSet, VecDeque};

use num_traits::ToPrimitive;
use serde::Serialize;
use thiserror::Error;

use crate::config::Configuration;
use crate::graph::{GraphBuilder, MixStep, MixingGraph, MixingSequence};
use crate::numeric::Dyadic;

pub const DEFAULT_MAX_STATES: usize = 10_000_000;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "status", content = "witness", rename_all = "snake_case")]
pub enum OracleStatus {
    Reachable(MixingSequence),
    /// Exhausted every state within the precision cap.
    UnreachableWithinBound,
    /// Exhausted a search known to be complete, or a necessary condition fails.
    UnreachableProven,
    BudgetExceeded,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct OracleVerdict {
    pub status: OracleStatus,
    pub states_explored: usize,
}

impl OracleVerdict {
    pub fn is_reachable(&self) -> bool {
        matches!(self.status, OracleStatus::Reachable(_))
    }

    pub fn witness(&self) -> Option<&MixingSequence> {
        match &self.status {
            OracleStatus::Reachable(s) => Some(s),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OracleError {
    #[error("search budget of {0} states exceeded")]
    BudgetExceeded(usize),
    #[error("values too large for exhaustive search")]
    Overflow,
    #[error("precondition violated: {0}")]
    Precondition(String),
}

/// Droplets scaled by `2^shift` to machine integers, ascending.
fn scaled(c: &Configuration, shift: u32) -> Option<Vec<i64>> {
    let mut out = Vec::with_capacity(c.n());
    for (v, k) in c.entries() {
        let w = v.mul_pow2(shift as i64).to_integer()?.to_i64()?;
        // leave headroom for sums of two values
        if w.unsigned_abs() > (i64::MAX as u64) / 4 {
            return None;
        }
        out.extend(std::iter::repeat_n(w, k));
    }
    Some(out)
}

fn unscale(w: i64, shift: u32) -> Dyadic {
    Dyadic::from_int(w).mul_pow2(-(shift as i64))
}

/// Breadth-first search from `i` to `t` over configurations whose values
/// have precision at most `max(prec(i), prec(t)) + extra_bits`.
pub fn reachable_bfs(i: &Configuration, t: &Configuration, extra_bits: u32, max_states: usize) -> OracleVerdict {
    let proven = |states| OracleVerdict {
        status: OracleStatus::UnreachableProven,
        states_explored: states,
    };
    if i.n() != t.n() || i.sum() != t.sum() {
        return proven(0);
    }
    if i == t {
        return OracleVerdict {
            status: OracleStatus::Reachable(Vec::new()),
            states_explored: 1,
        };
    }
    let cap = i.precision().max(t.precision()) + extra_bits;
    let (Some(start), Some(goal)) = (scaled(i, cap), scaled(t, cap)) else {
        return OracleVerdict {
            status: OracleStatus::BudgetExceeded,
            states_explored: 0,
        };
    };
    // a perfect-mixing target with a spare bit is complete: any witness can be
    // made to stay within one bit of the input precision
    let complete = extra_bits >= 1 && t.m() == 1 && i.mean().as_ref() == t.min();

    let mut index: HashMap<Vec<i64>, usize> = HashMap::new();
    let mut parent: Vec<(usize, i64, i64)> = Vec::new();
    let mut states: Vec<Vec<i64>> = Vec::new();
    index.insert(start.clone(), 0);
    parent.push((usize::MAX, 0, 0));
    states.push(start);
    let mut queue = VecDeque::from([0usize]);
    while let Some(cur) = queue.pop_front() {
        let s = states[cur].clone();
        let mut seen_pairs: HashSet<(i64, i64)> = HashSet::new();
        for a in 0..s.len() {
            for b in a + 1..s.len() {
                let (x, y) = (s[a], s[b]);
                if x == y || (x + y) % 2 != 0 || !seen_pairs.insert((x, y)) {
                    continue;
                }
                let mid = (x + y) / 2;
                let mut next = s.clone();
                next[a] = mid;
                next[b] = mid;
                next.sort_unstable();
                if index.contains_key(&next) {
                    continue;
                }
                let id = states.len();
                index.insert(next.clone(), id);
                parent.push((cur, x, y));
                if next == goal {
                    return OracleVerdict {
                        status: OracleStatus::Reachable(witness(&parent, id, cap)),
                        states_explored: id + 1,
                    };
                }
                states.push(next);
                if states.len() >= max_states {
                    return OracleVerdict {
                        status: OracleStatus::BudgetExceeded,
                        states_explored: states.len(),
                    };
                }
                queue.push_back(id);
            }
        }
    }
    if complete {
        proven(states.len())
    } else {
        OracleVerdict {
            status: OracleStatus::UnreachableWithinBound,
            states_explored: states.len(),
        }
    }
}

fn witness(parent: &[(usize, i64, i64)], mut id: usize, cap: u32) -> MixingSequence {
    let mut seq = Vec::new();
    while parent[id].0 != usize::MAX {
        let (p, x, y) = parent[id];
        seq.push(MixStep::new(unscale(x, cap), unscale(y, cap)));
        id = p;
    }
    seq.reverse();
    seq
}

/// Exhaustive perfect-mixability for integral inputs; one spare bit of
/// precision makes the search complete.
pub fn mixable_bruteforce(c_int: &Configuration) -> Result<bool, OracleError> {
    mixable_bruteforce_with_budget(c_int, DEFAULT_MAX_STATES)
}

pub fn mixable_bruteforce_with_budget(c_int: &Configuration, max_states: usize) -> Result<bool, OracleError> {
    if c_int.is_empty() {
        return Err(OracleError::Precondition("empty configuration".into()));
    }
    if !c_int.is_integral() {
        return Err(OracleError::Precondition(format!("{c_int} is not integral")));
    }
    let Some(mu) = c_int.mean().filter(|m| m.is_integer()) else {
        return Ok(false);
    };
    let t = Configuration::uniform(c_int.n(), mu);
    let v = reachable_bfs(c_int, &t, 1, max_states);
    match v.status {
        OracleStatus::Reachable(_) => Ok(true),
        OracleStatus::UnreachableProven | OracleStatus::UnreachableWithinBound => Ok(false),
        OracleStatus::BudgetExceeded => Err(OracleError::BudgetExceeded(v.states_explored)),
    }
}

/// Disjoint pairs mixed in one layer, in the scaled frame.
type Layer = Vec<(i64, i64)>;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DepthSearch {
    Found(MixingGraph),
    None,
    Inconclusive { states_explored: usize },
}

/// Layered search for a waste-free graph of depth at most `max_depth`
/// converting `i` into `t`. Each layer mixes disjoint pairs of droplets.
pub fn min_depth_search(i: &Configuration, t: &Configuration, max_depth: usize) -> DepthSearch {
    min_depth_search_with_budget(i, t, max_depth, DEFAULT_MAX_STATES)
}

pub fn min_depth_search_with_budget(
    i: &Configuration,
    t: &Configuration,
    max_depth: usize,
    max_states: usize,
) -> DepthSearch {
    if i.n() != t.n() || i.sum() != t.sum() {
        return DepthSearch::None;
    }
    // depth bounds the precision of every value
    let cap = i.precision().max(t.precision()) + max_depth as u32;
    let (Some(start), Some(goal)) = (scaled(i, cap), scaled(t, cap)) else {
        return DepthSearch::Inconclusive { states_explored: 0 };
    };
    let mut parent: HashMap<Vec<i64>, (Vec<i64>, Layer)> = HashMap::new();
    let mut layer: HashSet<Vec<i64>> = HashSet::from([start.clone()]);
    let mut explored = 1usize;
    let mut seen: HashSet<Vec<i64>> = layer.clone();
    for depth in 0..=max_depth {
        if layer.contains(&goal) {
            let mut layers = Vec::new();
            let mut cur = goal.clone();
            while cur != start {
                let (prev, pairs) = parent[&cur].clone();
                layers.push(pairs);
                cur = prev;
            }
            layers.reverse();
            return DepthSearch::Found(layered_graph(i, &layers, cap));
        }
        if depth == max_depth {
            break;
        }
        let mut next_layer = HashSet::new();
        let mut frontier: Vec<&Vec<i64>> = layer.iter().collect();
        frontier.sort();
        for s in frontier {
            let mut outcomes = HashMap::new();
            matchings(s, &mut Vec::new(), &mut vec![false; s.len()], &mut outcomes);
            for (next, pairs) in outcomes {
                // a state first reached at a shallower layer never needs revisiting
                if !seen.insert(next.clone()) {
                    continue;
                }
                explored += 1;
                if explored > max_states {
                    return DepthSearch::Inconclusive { states_explored: explored };
                }
                parent.insert(next.clone(), (s.clone(), pairs));
                next_layer.insert(next);
            }
        }
        layer = next_layer;
    }
    DepthSearch::None
}

/// Every outcome of mixing a set of disjoint pairs with distinct values.
fn matchings(
    s: &[i64],
    pairs: &mut Vec<(i64, i64)>,
    used: &mut Vec<bool>,
    out: &mut HashMap<Vec<i64>, Vec<(i64, i64)>>,
) {
    let Some(first) = (0..s.len()).find(|&k| !used[k]) else {
        if !pairs.is_empty() {
            let mut next: Vec<i64> = s.to_vec();
            // replace each mixed pair by two midpoints
            let mut taken = vec![false; s.len()];
            for &(x, y) in pairs.iter() {
                for v in [x, y] {
                    let k = (0..s.len()).find(|&k| !taken[k] && s[k] == v).unwrap();
                    taken[k] = true;
                    next[k] = (x + y) / 2;
                }
            }
            next.sort_unstable();
            out.entry(next).or_insert_with(|| pairs.clone());
        }
        return;
    };
    used[first] = true;
    // leave the first free droplet unmixed
    matchings(s, pairs, used, out);
    let mut tried = HashSet::new();
    for k in first + 1..s.len() {
        if used[k] || s[k] == s[first] || (s[k] + s[first]) % 2 != 0 || !tried.insert(s[k]) {
            continue;
        }
        used[k] = true;
        pairs.push((s[first], s[k]));
        matchings(s, pairs, used, out);
        pairs.pop();
        used[k] = false;
    }
    used[first] = false;
}

fn layered_graph(i: &Configuration, layers: &[Vec<(i64, i64)>], cap: u32) -> MixingGraph {
    let mut b = GraphBuilder::new(&i.droplets());
    for pairs in layers {
        // take every input of this layer before adding its outputs
        let mut takes = Vec::new();
        for &(x, y) in pairs {
            let (dx, dy) = (unscale(x, cap), unscale(y, cap));
            let px = b.take_value(&dx).expect("layer input present");
            let py = b.take_value(&dy).expect("layer input present");
            takes.push((px, py, dx.mid(&dy)));
        }
        for (px, py, mid) in takes {
            b.mix_nodes(px, py, mid);
        }
    }
    b.finish()
}

/// Pairs mixed and droplets passed through by a depth-one graph.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Depth1Matching {
    pub pairs: Vec<(Dyadic, Dyadic)>,
    pub wires: Vec<Dyadic>,
}

/// Whether `t` arises from `i` by mixing disjoint pairs once.
pub fn depth1_decide(i: &Configuration, t: &Configuration) -> Option<Depth1Matching> {
    if i.n() != t.n() {
        return None;
    }
    let drops = i.droplets();
    let mut need: BTreeMap<Dyadic, usize> = t.entries().map(|(v, k)| (v.clone(), k)).collect();
    let mut used = vec![false; drops.len()];
    let mut m = Depth1Matching {
        pairs: Vec::new(),
        wires: Vec::new(),
    };
    depth1_rec(&drops, &mut used, &mut need, &mut m).then_some(m)
}

fn take(need: &mut BTreeMap<Dyadic, usize>, v: &Dyadic, k: usize) -> bool {
    match need.get_mut(v) {
        Some(c) if *c >= k => {
            *c -= k;
            true
        }
        _ => false,
    }
}

fn give(need: &mut BTreeMap<Dyadic, usize>, v: &Dyadic, k: usize) {
    *need.entry(v.clone()).or_insert(0) += k;
}

fn depth1_rec(
    drops: &[Dyadic],
    used: &mut Vec<bool>,
    need: &mut BTreeMap<Dyadic, usize>,
    m: &mut Depth1Matching,
) -> bool {
    let Some(first) = (0..drops.len()).find(|&k| !used[k]) else {
        return true;
    };
    used[first] = true;
    let x = &drops[first];
    if take(need, x, 1) {
        m.wires.push(x.clone());
        if depth1_rec(drops, used, need, m) {
            return true;
        }
        m.wires.pop();
        give(need, x, 1);
    }
    let mut tried = HashSet::new();
    for k in first + 1..drops.len() {
        let y = &drops[k];
        if used[k] || y == x || !tried.insert(y.clone()) {
            continue;
        }
        let mid = x.mid(y);
        if !take(need, &mid, 2) {
            continue;
        }
        used[k] = true;
        m.pairs.push((x.clone(), y.clone()));
        if depth1_rec(drops, used, need, m) {
            return true;
        }
        m.pairs.pop();
        used[k] = false;
        give(need, &mid, 2);
    }
    used[first] = false;
    false
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::replay;

    fn d(s: &str) -> Dyadic {
        s.parse().unwrap()
    }

    fn cfg(v: &[&str]) -> Configuration {
        Configuration::from_values(v.iter().map(|s| d(s)))
    }

    #[test]
    fn bfs_examples() {
        let i = cfg(&["0", "1"]);
        let t = cfg(&["1/4", "3/4"]);
        for bits in 0..4 {
            let v = reachable_bfs(&i, &t, bits, 1000);
            assert_eq!(v.status, OracleStatus::UnreachableWithinBound);
        }
        let i = cfg(&["0", "0", "0", "1", "1"]);
        let t = cfg(&["1/8", "5/16", "5/16", "1/2", "3/4"]);
        let v = reachable_bfs(&i, &t, 2, DEFAULT_MAX_STATES);
        let w = v.witness().expect("reachable");
        assert_eq!(replay(&i, w).unwrap(), t);
        let v = reachable_bfs(&i, &i, 0, 10);
        assert_eq!(v.status, OracleStatus::Reachable(Vec::new()));
        assert_eq!(reachable_bfs(&i, &cfg(&["0"]), 0, 10).status, OracleStatus::UnreachableProven);
    }

    #[test]
    fn bruteforce_examples() {
        let ints = Configuration::from_ints;
        assert!(mixable_bruteforce(&ints(&[0, 0, 0, 3, 7])).unwrap());
        assert!(!mixable_bruteforce(&ints(&[0, 0, 0, 5, 5])).unwrap());
        assert!(!mixable_bruteforce(&ints(&[0, 1, 5])).unwrap());
        assert!(!mixable_bruteforce(&ints(&[0, 0, 1])).unwrap());
        assert!(mixable_bruteforce(&cfg(&["1/2", "0"])).is_err());
        // precision 0 is not enough for {0,0,0,3,7}
        let i = ints(&[0, 0, 0, 3, 7]);
        let v = reachable_bfs(&i, &Configuration::uniform(5, Dyadic::from_int(2)), 0, DEFAULT_MAX_STATES);
        assert_eq!(v.status, OracleStatus::UnreachableWithinBound);
        let v = reachable_bfs(&ints(&[0, 0, 0, 5, 5]), &Configuration::uniform(5, Dyadic::from_int(2)), 1, DEFAULT_MAX_STATES);
        assert_eq!(v.status, OracleStatus::UnreachableProven);
    }

    #[test]
    fn budget_is_reported() {
        let i = Configuration::from_ints(&[0, 0, 0, 0, 0, 0, 0, 64]);
        let v = reachable_bfs(&i, &Configuration::uniform(8, Dyadic::from_int(8)), 2, 5);
        assert_eq!(v.status, OracleStatus::BudgetExceeded);
    }

    #[test]
    fn depth_search_examples() {
        let i = cfg(&["0", "1", "0", "1"]);
        match min_depth_search(&i, &i, 0) {
            DepthSearch::Found(g) => assert_eq!(g.mixer_count(), 0),
            other => panic!("{other:?}"),
        }
        let t = cfg(&["1/2", "1/2", "1/2", "1/2"]);
        match min_depth_search(&i, &t, 1) {
            DepthSearch::Found(g) => {
                assert_eq!(g.depth().unwrap(), 1);
                assert_eq!(g.simulate_config(&i).unwrap().outputs, t);
            }
            other => panic!("{other:?}"),
        }
        let t = cfg(&["1/4", "3/4"]);
        assert_eq!(min_depth_search(&cfg(&["0", "1"]), &t, 3), DepthSearch::None);
    }

    #[test]
    fn depth1_examples() {
        let i = cfg(&["1/2", "1"]);
        let t = cfg(&["3/4", "3/4"]);
        let m = depth1_decide(&i, &t).unwrap();
        assert_eq!(m.pairs, vec![(d("1/2"), d("1"))]);
        let m = depth1_decide(&t, &t).unwrap();
        assert_eq!(m.wires.len(), 2);
        assert!(depth1_decide(&cfg(&["0", "1"]), &cfg(&["1/4", "3/4"])).is_none());
    }
}
