//! Mixing strategies for configurations that satisfy the invariant, behind a
//! common trait and selected by name.

use std::collections::BTreeMap;

use super::lambda::lambda_mix_subset;
use super::lemmas::find_safe_or_nearfinal_pair;
use super::poly::poly_step;
use super::safety::lambda_safe_pairs;
use super::{MixState, SynthesisError};

pub trait MixStrategy: Send + Sync {
    fn name(&self) -> &'static str;

    /// Mixes `state.e` to a single concentration.
    fn mix(&self, state: &mut MixState) -> Result<(), SynthesisError>;
}

/// Furthest-apart safe mixing for `n < 22`, constant-factor potential bursts
/// for larger `n`.
#[derive(Debug, Default, Clone, Copy)]
pub struct PolyStrategy;

/// Repeatedly mixes whichever pair the case analysis for the current
/// configuration selects.
#[derive(Debug, Default, Clone, Copy)]
pub struct GreedyStrategy;

fn finish_with_near_final_pair(state: &mut MixState, lemma: &'static str) -> Result<(), SynthesisError> {
    if !state.is_near_final() {
        let (x, y) = state.near_final_pair().ok_or_else(|| SynthesisError::LemmaGap {
            lemma,
            state: state.e.to_string(),
        })?;
        state.mix_checked(&x, &y, lemma)?;
    }
    state.finish_near_final()
}

impl MixStrategy for PolyStrategy {
    fn name(&self) -> &'static str {
        "poly"
    }

    fn mix(&self, state: &mut MixState) -> Result<(), SynthesisError> {
        if state.is_perfectly_mixed() {
            return Ok(());
        }
        if state.ctx.n < 22 {
            let mut all = state.e.clone();
            lambda_mix_subset(state, &mut all)?;
            return finish_with_near_final_pair(state, "mixed configuration has a near-final pair");
        }
        loop {
            if state.is_near_final() {
                return state.finish_near_final();
            }
            if lambda_safe_pairs(&state.e, state.e.values(), &state.ctx).is_empty() {
                return finish_with_near_final_pair(state, "mixed configuration has a near-final pair");
            }
            poly_step(state)?;
        }
    }
}

impl MixStrategy for GreedyStrategy {
    fn name(&self) -> &'static str {
        "greedy"
    }

    fn mix(&self, state: &mut MixState) -> Result<(), SynthesisError> {
        if state.is_perfectly_mixed() {
            return Ok(());
        }
        loop {
            if state.is_near_final() {
                return state.finish_near_final();
            }
            let (x, y) = find_safe_or_nearfinal_pair(&state.e, &state.ctx)?;
            state.mix_checked(&x, &y, "safe or near-final pair")?;
        }
    }
}

/// Strategies by name.
pub struct StrategyRegistry {
    strategies: BTreeMap<&'static str, Box<dyn MixStrategy>>,
}

impl StrategyRegistry {
    pub fn empty() -> Self {
        StrategyRegistry {
            strategies: BTreeMap::new(),
        }
    }

    pub fn with_defaults() -> Self {
        let mut r = Self::empty();
        r.register(Box::new(PolyStrategy));
        r.register(Box::new(GreedyStrategy));
        r
    }

    pub fn register(&mut self, s: Box<dyn MixStrategy>) {
        self.strategies.insert(s.name(), s);
    }

    pub fn get(&self, name: &str) -> Option<&dyn MixStrategy> {
        self.strategies.get(name).map(|b| b.as_ref())
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.strategies.keys().copied().collect()
    }
}

impl Default for StrategyRegistry {
    fn default() -> Self {
        Self::with_defaults()
    }
}
