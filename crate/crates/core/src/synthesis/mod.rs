//! Constructive synthesis of perfect-mixing graphs.
//!
//! The input is normalized to an all-integral frame, mixed there by one of the
//! registered strategies while an invariant is maintained, and the resulting
//! sequence is mapped back and turned into a graph.

mod lambda;
mod lemmas;
mod near_final;
mod poly;
mod safety;
mod strategy;

use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::config::{normalize_hat, normalize_integral, normalize_reduced, ConfigError, Configuration, NormalizationRecord};
use crate::graph::{replay, sequence_to_graph, GraphError, MixStep, MixingGraph, MixingSequence};
use crate::mixability::{is_perfectly_mixable, MixabilityVerdict};
use crate::numeric::{is_power_of_two, Dyadic};

pub use lambda::lambda_mix_subset;
pub use lemmas::{build_e, find_safe_or_nearfinal_pair};
pub use near_final::{
    is_structured_near_final, mix_near_final, mix_power_of_two, near_final_ceiling,
    power_of_two_ceiling, structured_near_final_partition, NearFinalPartition,
};
pub use poly::poly_step;
pub use safety::{
    is_blocking, is_lambda_safe, is_p_congruent, is_pbar_incongruent, is_pbar_safe, is_pr_safe,
    lambda_safe_pairs, non_singletons, satisfies_invariant, unsafe_values, InvariantKind,
    SafetyContext,
};
pub use strategy::{GreedyStrategy, MixStrategy, PolyStrategy, StrategyRegistry};

#[derive(Debug, Error)]
pub enum SynthesisError {
    #[error("{0}")]
    Unmixable(MixabilityVerdict),
    /// A case analysis reached a state its lemma rules out.
    #[error("lemma {lemma} does not apply to {state}")]
    LemmaGap { lemma: &'static str, state: String },
    #[error("{what}: {steps} steps exceed the ceiling {ceiling}")]
    CeilingExceeded {
        what: &'static str,
        steps: usize,
        ceiling: f64,
    },
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("unknown strategy {0:?}")]
    UnknownStrategy(String),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

/// Mixing state in the normalized frame. Every mix goes through
/// [`MixState::mix_checked`].
#[derive(Debug, Clone)]
pub struct MixState {
    pub ctx: SafetyContext,
    pub e: Configuration,
    pub seq: MixingSequence,
    /// Mixes whose result was checked against the invariant.
    pub checked_mixes: usize,
    /// Steps spent mixing the final near-final configuration.
    pub near_final_steps: usize,
    pub step_budget: usize,
}

impl MixState {
    pub fn new(e: Configuration, ctx: SafetyContext) -> Self {
        MixState {
            ctx,
            e,
            seq: Vec::new(),
            checked_mixes: 0,
            near_final_steps: 0,
            step_budget: usize::MAX,
        }
    }

    pub fn mean(&self) -> Dyadic {
        self.e.mean().expect("integral average")
    }

    pub fn is_near_final(&self) -> bool {
        is_structured_near_final(&self.e)
    }

    pub fn is_perfectly_mixed(&self) -> bool {
        self.e.m() == 1
    }

    /// Mixes `x` and `y`; the result must satisfy the invariant or be
    /// near-final.
    pub fn mix_checked(&mut self, x: &Dyadic, y: &Dyadic, lemma: &'static str) -> Result<(), SynthesisError> {
        let gap = |why: &str| SynthesisError::LemmaGap {
            lemma,
            state: format!("{} (pair {x}, {y}: {why})", self.e),
        };
        if x == y || !self.e.contains(x) || !self.e.contains(y) {
            return Err(gap("not two distinct present values"));
        }
        if x.is_even() != y.is_even() || x.is_even().is_none() {
            return Err(gap("not a same-parity integral pair"));
        }
        let after = self.e.apply_mix(x, y)?;
        if !satisfies_invariant(&after, &self.ctx) && !is_structured_near_final(&after) {
            return Err(gap("result breaks the invariant and is not near-final"));
        }
        if self.seq.len() >= self.step_budget {
            return Err(SynthesisError::CeilingExceeded {
                what: "mixing",
                steps: self.seq.len() + 1,
                ceiling: self.step_budget as f64,
            });
        }
        self.e = after;
        self.seq.push(MixStep::new(x.clone(), y.clone()));
        self.checked_mixes += 1;
        Ok(())
    }

    /// Mixes the current structured near-final configuration to its average.
    pub fn finish_near_final(&mut self) -> Result<(), SynthesisError> {
        let part = structured_near_final_partition(&self.e).ok_or_else(|| SynthesisError::LemmaGap {
            lemma: "near-final",
            state: self.e.to_string(),
        })?;
        let steps = mix_near_final(&self.e, &part)?;
        let ceiling = near_final_ceiling(self.e.n(), self.e.size_bits());
        if steps.len() as f64 > ceiling {
            return Err(SynthesisError::CeilingExceeded {
                what: "near-final mixing",
                steps: steps.len(),
                ceiling,
            });
        }
        self.e = replay(&self.e, &steps)?;
        self.near_final_steps = steps.len();
        self.seq.extend(steps);
        Ok(())
    }

    /// Finds a same-parity pair whose mixing makes `e` structured near-final.
    pub fn near_final_pair(&self) -> Option<(Dyadic, Dyadic)> {
        let vals: Vec<&Dyadic> = self.e.values().collect();
        for (i, x) in vals.iter().enumerate() {
            for y in &vals[i + 1..] {
                if x.is_even() != y.is_even() {
                    continue;
                }
                let after = self.e.apply_mix(x, y).expect("present");
                if is_structured_near_final(&after) {
                    return Some(((*x).clone(), (*y).clone()));
                }
            }
        }
        None
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SynthesisPath {
    /// All concentrations already equal.
    Trivial,
    /// At most three droplets, mixed directly.
    Direct,
    PowerOfTwo,
    Invariant,
}

/// Everything produced by one synthesis run.
#[derive(Debug, Clone, Serialize)]
pub struct SynthesisReport {
    pub strategy: String,
    pub verdict: MixabilityVerdict,
    pub path: SynthesisPath,
    /// The configuration mixed by the strategy, in the integral frame.
    pub normalized: Option<Configuration>,
    pub prefix_steps: usize,
    pub main_steps: usize,
    pub near_final_steps: usize,
    pub checked_mixes: usize,
    /// Step ceiling this run was checked against.
    pub ceiling: f64,
    /// Sequence in the integral frame.
    pub normalized_sequence: MixingSequence,
    /// Sequence on the original concentrations.
    pub sequence: MixingSequence,
    pub graph: MixingGraph,
}

impl SynthesisReport {
    pub fn steps(&self) -> usize {
        self.sequence.len()
    }
}

impl fmt::Display for SynthesisReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "strategy: {}", self.strategy)?;
        writeln!(f, "{}", self.verdict)?;
        if let Some(e) = &self.normalized {
            writeln!(f, "normalized: {e}")?;
        }
        writeln!(f, "mixers: {}", self.sequence.len())?;
        for s in &self.sequence {
            writeln!(f, "{s}")?;
        }
        Ok(())
    }
}

/// Ceiling on the sequence length in the integral frame for `n` droplets of
/// size `s`.
pub fn step_ceiling(n: usize, s: f64) -> f64 {
    let nf = n as f64;
    if is_power_of_two(n as u64) {
        return power_of_two_ceiling(n, s);
    }
    let near_final = near_final_ceiling(n, s);
    if n < 22 {
        (8.0 * nf.powi(3) * s).powf(nf) + near_final
    } else {
        let g2 = 4.0;
        16384.0 * g2 * nf * nf * s * s + 64.0 * g2 * nf * s + near_final
    }
}

/// Synthesizes a perfect-mixing graph with the named strategy.
pub fn perfect_mix(c: &Configuration, strategy: &str) -> Result<SynthesisReport, SynthesisError> {
    let registry = StrategyRegistry::with_defaults();
    let s = registry
        .get(strategy)
        .ok_or_else(|| SynthesisError::UnknownStrategy(strategy.to_string()))?;
    perfect_mix_with(c, s)
}

pub fn perfect_mix_with(c: &Configuration, strategy: &dyn MixStrategy) -> Result<SynthesisReport, SynthesisError> {
    let verdict = is_perfectly_mixable(c)?;
    if !verdict.mixable {
        return Err(SynthesisError::Unmixable(verdict));
    }
    let mut report = SynthesisReport {
        strategy: strategy.name().to_string(),
        verdict,
        path: SynthesisPath::Trivial,
        normalized: None,
        prefix_steps: 0,
        main_steps: 0,
        near_final_steps: 0,
        checked_mixes: 0,
        ceiling: 0.0,
        normalized_sequence: Vec::new(),
        sequence: Vec::new(),
        graph: MixingGraph::default(),
    };
    let n = c.n();
    if c.m() > 1 && n <= 3 {
        // n = 2, or n = 3 with the middle value at the midpoint of the outer two
        let (lo, hi) = (c.min().unwrap().clone(), c.max().unwrap().clone());
        report.path = SynthesisPath::Direct;
        report.sequence = vec![MixStep::new(lo, hi)];
        report.normalized_sequence = report.sequence.clone();
        report.main_steps = 1;
        report.ceiling = 1.0;
    } else if c.m() > 1 {
        let (c_int, r1) = normalize_integral(c)?;
        let (record, seq) = if is_power_of_two(n as u64) {
            let (e, r2) = normalize_reduced(&c_int)?;
            let seq = mix_power_of_two(&e)?;
            report.path = SynthesisPath::PowerOfTwo;
            report.ceiling = power_of_two_ceiling(n, e.size_bits());
            report.main_steps = seq.len();
            report.normalized = Some(e);
            (r1.then(&r2), seq)
        } else {
            let (c_hat, r2) = normalize_hat(&c_int)?;
            let ctx = SafetyContext::for_n(n);
            let (e, prefix) = build_e(&c_hat, &ctx)?;
            if !satisfies_invariant(&e, &ctx) && !is_structured_near_final(&e) {
                return Err(SynthesisError::LemmaGap {
                    lemma: "initial configuration",
                    state: e.to_string(),
                });
            }
            let ceiling = step_ceiling(n, e.size_bits());
            let mut state = MixState::new(e.clone(), ctx);
            state.step_budget = if ceiling.is_finite() && ceiling < 1e15 {
                ceiling as usize
            } else {
                usize::MAX
            };
            strategy.mix(&mut state)?;
            if !state.is_perfectly_mixed() {
                return Err(SynthesisError::LemmaGap {
                    lemma: strategy.name(),
                    state: state.e.to_string(),
                });
            }
            let total = state.seq.len();
            if total as f64 > ceiling {
                return Err(SynthesisError::CeilingExceeded {
                    what: "synthesis",
                    steps: total,
                    ceiling,
                });
            }
            report.path = SynthesisPath::Invariant;
            report.prefix_steps = prefix.len();
            report.near_final_steps = state.near_final_steps;
            report.main_steps = total - state.near_final_steps;
            report.checked_mixes = state.checked_mixes;
            report.ceiling = ceiling;
            report.normalized = Some(e);
            let mut seq = prefix;
            seq.extend(state.seq);
            (r1.then(&r2), seq)
        };
        report.sequence = map_back(&seq, &record);
        report.normalized_sequence = seq;
    }
    report.graph = sequence_to_graph(c, &report.sequence)?;
    let out = replay(c, &report.sequence)?;
    let mu = c.mean().expect("mixable has dyadic average");
    if out != Configuration::uniform(n, mu) {
        return Err(SynthesisError::LemmaGap {
            lemma: "final replay",
            state: out.to_string(),
        });
    }
    Ok(report)
}

fn map_back(seq: &[MixStep], record: &NormalizationRecord) -> MixingSequence {
    seq.iter()
        .map(|s| MixStep::new(record.invert(&s.a), record.invert(&s.b)))
        .collect()
}

#[cfg(test)]
mod tests;
