//! Exact synthesis of perfect-mixing graphs for droplet microfluidics.
//!
//! A mixer takes two droplets with concentrations `a` and `b` and produces two
//! droplets of concentration `(a + b) / 2`. This crate decides whether a
//! configuration of dyadic concentrations can be mixed into the uniform one,
//! builds such mixing graphs, and ships exhaustive oracles used to check them.

pub mod config;
pub mod graph;
pub mod hardness;
pub mod mixability;
pub mod numeric;
pub mod oracle;
pub mod synthesis;

pub use config::{ConfigError, ConfigStats, Configuration, NormalizationRecord};
pub use graph::{GraphError, GraphMetrics, MixStep, MixingGraph, MixingSequence};
pub use mixability::{is_perfectly_mixable, MixabilityVerdict, Reason};
pub use numeric::{Dyadic, NumericError};
pub use oracle::{depth1_decide, min_depth_search, mixable_bruteforce, reachable_bfs, OracleStatus, OracleVerdict};
pub use synthesis::{perfect_mix, SynthesisError, SynthesisReport};
