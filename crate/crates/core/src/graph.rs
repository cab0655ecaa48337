//! Mixing graphs: a DAG of sources, mixers and sinks, with exact simulation,
//! structural metrics, conversion from mixing sequences and serialization.

use std::collections::{BTreeMap, HashMap, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::{ConfigError, Configuration};
use crate::numeric::Dyadic;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NodeKind {
    Source,
    Mixer,
    Sink,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Node {
    pub id: usize,
    pub kind: NodeKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct MixingGraph {
    pub nodes: Vec<Node>,
    pub edges: Vec<(usize, usize)>,
    /// Source ids in the order input droplets are assigned to them.
    pub input_order: Vec<usize>,
}

/// One mixing operation on two concentration values.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MixStep {
    pub a: Dyadic,
    pub b: Dyadic,
}

impl MixStep {
    pub fn new(a: Dyadic, b: Dyadic) -> Self {
        if a <= b {
            MixStep { a, b }
        } else {
            MixStep { a: b, b: a }
        }
    }

    pub fn mid(&self) -> Dyadic {
        self.a.mid(&self.b)
    }
}

impl fmt::Display for MixStep {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "mix {} {} -> {}", self.a, self.b, self.mid())
    }
}

pub type MixingSequence = Vec<MixStep>;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct GraphMetrics {
    /// Largest number of mixers on a source-to-sink path.
    pub depth: usize,
    pub mixers: usize,
    /// Largest precision over every node value under the given input.
    pub max_precision: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GraphError {
    #[error("node {node}: {message}")]
    Malformed { node: usize, message: String },
    #[error("graph contains a cycle through node {node}")]
    Cycle { node: usize },
    #[error("edge ({from}, {to}) references an unknown node")]
    UnknownNode { from: usize, to: usize },
    #[error("graph has {expected} sources but {got} input droplets were given")]
    InputCount { expected: usize, got: usize },
    #[error("input_order must list every source exactly once")]
    InputOrder,
    #[error("step {step}: droplet {value} is not available")]
    MissingValue { step: usize, value: Dyadic },
    #[error("graph file: {0}")]
    Parse(String),
    #[error(transparent)]
    Config(#[from] ConfigError),
}

/// Result of propagating an input through a graph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Simulation {
    pub outputs: Configuration,
    pub node_values: BTreeMap<usize, Dyadic>,
}

struct Adjacency {
    index: HashMap<usize, usize>,
    succ: Vec<Vec<usize>>,
    pred: Vec<Vec<usize>>,
}

impl MixingGraph {
    pub fn sources(&self) -> impl Iterator<Item = usize> + '_ {
        self.nodes_of(NodeKind::Source)
    }

    pub fn sinks(&self) -> impl Iterator<Item = usize> + '_ {
        self.nodes_of(NodeKind::Sink)
    }

    pub fn mixer_count(&self) -> usize {
        self.nodes_of(NodeKind::Mixer).count()
    }

    fn nodes_of(&self, kind: NodeKind) -> impl Iterator<Item = usize> + '_ {
        self.nodes
            .iter()
            .filter(move |n| n.kind == kind)
            .map(|n| n.id)
    }

    fn adjacency(&self) -> Result<Adjacency, GraphError> {
        let mut index = HashMap::with_capacity(self.nodes.len());
        for (i, n) in self.nodes.iter().enumerate() {
            if index.insert(n.id, i).is_some() {
                return Err(GraphError::Malformed {
                    node: n.id,
                    message: "duplicate node id".into(),
                });
            }
        }
        let mut succ = vec![Vec::new(); self.nodes.len()];
        let mut pred = vec![Vec::new(); self.nodes.len()];
        for &(from, to) in &self.edges {
            let (Some(&f), Some(&t)) = (index.get(&from), index.get(&to)) else {
                return Err(GraphError::UnknownNode { from, to });
            };
            succ[f].push(t);
            pred[t].push(f);
        }
        Ok(Adjacency { index, succ, pred })
    }

    /// Checks degree constraints, acyclicity and `input_order`.
    pub fn validate(&self) -> Result<(), GraphError> {
        self.checked_order().map(|_| ())
    }

    fn checked_order(&self) -> Result<(Adjacency, Vec<usize>), GraphError> {
        let adj = self.adjacency()?;
        for (i, n) in self.nodes.iter().enumerate() {
            let (want_in, want_out) = match n.kind {
                NodeKind::Source => (0, 1),
                NodeKind::Mixer => (2, 2),
                NodeKind::Sink => (1, 0),
            };
            let (din, dout) = (adj.pred[i].len(), adj.succ[i].len());
            if din != want_in || dout != want_out {
                return Err(GraphError::Malformed {
                    node: n.id,
                    message: format!(
                        "{:?} has in-degree {din} and out-degree {dout}, expected {want_in} and {want_out}",
                        n.kind
                    ),
                });
            }
        }
        let mut sources: Vec<usize> = self.sources().collect();
        let mut order = self.input_order.clone();
        sources.sort_unstable();
        order.sort_unstable();
        if sources != order {
            return Err(GraphError::InputOrder);
        }
        if self.sources().count() != self.sinks().count() {
            return Err(GraphError::Malformed {
                node: self.sinks().next().or(self.sources().next()).unwrap_or(0),
                message: "number of sources and sinks differ".into(),
            });
        }
        let mut indeg: Vec<usize> = adj.pred.iter().map(Vec::len).collect();
        let mut queue: VecDeque<usize> = (0..self.nodes.len()).filter(|&i| indeg[i] == 0).collect();
        let mut topo = Vec::with_capacity(self.nodes.len());
        while let Some(i) = queue.pop_front() {
            topo.push(i);
            for &j in &adj.succ[i] {
                indeg[j] -= 1;
                if indeg[j] == 0 {
                    queue.push_back(j);
                }
            }
        }
        if topo.len() != self.nodes.len() {
            let stuck = (0..self.nodes.len()).find(|&i| indeg[i] > 0).unwrap();
            return Err(GraphError::Cycle {
                node: self.nodes[stuck].id,
            });
        }
        Ok((adj, topo))
    }

    /// Propagates `inputs` (assigned to sources in `input_order`) through the
    /// graph.
    pub fn simulate(&self, inputs: &[Dyadic]) -> Result<Simulation, GraphError> {
        let (adj, topo) = self.checked_order()?;
        if inputs.len() != self.input_order.len() {
            return Err(GraphError::InputCount {
                expected: self.input_order.len(),
                got: inputs.len(),
            });
        }
        let mut value: Vec<Option<Dyadic>> = vec![None; self.nodes.len()];
        for (id, v) in self.input_order.iter().zip(inputs) {
            value[adj.index[id]] = Some(v.clone());
        }
        for &i in &topo {
            match self.nodes[i].kind {
                NodeKind::Source => {}
                NodeKind::Mixer => {
                    let a = value[adj.pred[i][0]].as_ref().expect("topological order");
                    let b = value[adj.pred[i][1]].as_ref().expect("topological order");
                    value[i] = Some(a.mid(b));
                }
                NodeKind::Sink => value[i] = value[adj.pred[i][0]].clone(),
            }
        }
        let mut outputs = Configuration::new();
        let mut node_values = BTreeMap::new();
        for (i, n) in self.nodes.iter().enumerate() {
            let v = value[i].clone().expect("every node evaluated");
            if n.kind == NodeKind::Sink {
                outputs.add(v.clone(), 1);
            }
            node_values.insert(n.id, v);
        }
        Ok(Simulation {
            outputs,
            node_values,
        })
    }

    /// Simulates with the droplets of `c` in ascending order.
    pub fn simulate_config(&self, c: &Configuration) -> Result<Simulation, GraphError> {
        self.simulate(&c.droplets())
    }

    /// Largest number of mixers on any source-to-sink path.
    pub fn depth(&self) -> Result<usize, GraphError> {
        let (adj, topo) = self.checked_order()?;
        let mut d = vec![0usize; self.nodes.len()];
        for &i in &topo {
            let here = d[i] + usize::from(self.nodes[i].kind == NodeKind::Mixer);
            for &j in &adj.succ[i] {
                d[j] = d[j].max(here);
            }
            d[i] = here;
        }
        Ok(d.into_iter().max().unwrap_or(0))
    }

    pub fn metrics(&self, inputs: &[Dyadic]) -> Result<GraphMetrics, GraphError> {
        let sim = self.simulate(inputs)?;
        Ok(GraphMetrics {
            depth: self.depth()?,
            mixers: self.mixer_count(),
            max_precision: sim
                .node_values
                .values()
                .map(Dyadic::precision)
                .max()
                .unwrap_or(0),
        })
    }

    pub fn metrics_config(&self, c: &Configuration) -> Result<GraphMetrics, GraphError> {
        self.metrics(&c.droplets())
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("graph serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<MixingGraph, GraphError> {
        let g: MixingGraph =
            serde_json::from_str(text).map_err(|e| GraphError::Parse(e.to_string()))?;
        g.validate()?;
        Ok(g)
    }

    /// Graphviz rendering; mixers are labelled with their values when given.
    pub fn to_dot(&self, node_values: Option<&BTreeMap<usize, Dyadic>>) -> String {
        let mut s = String::from("digraph mixing {\n  rankdir=TB;\n");
        for n in &self.nodes {
            let value = node_values.and_then(|m| m.get(&n.id));
            let (shape, label) = match n.kind {
                NodeKind::Source => ("invtriangle", value.map_or("in".to_string(), |v| v.to_string())),
                NodeKind::Mixer => ("circle", value.map_or("M".to_string(), |v| v.to_string())),
                NodeKind::Sink => ("triangle", value.map_or("out".to_string(), |v| v.to_string())),
            };
            s.push_str(&format!("  n{} [shape={shape}, label=\"{label}\"];\n", n.id));
        }
        for (f, t) in &self.edges {
            s.push_str(&format!("  n{f} -> n{t};\n"));
        }
        s.push_str("}\n");
        s
    }
}

/// Incremental construction of a mixing graph over a pool of open droplet
/// terminals.
#[derive(Debug, Clone)]
pub struct GraphBuilder {
    graph: MixingGraph,
    /// Open terminals in creation order: `(value, producing node)`.
    open: Vec<(Dyadic, usize)>,
}

impl GraphBuilder {
    /// One source per droplet of `inputs`, in the given order.
    pub fn new(inputs: &[Dyadic]) -> Self {
        let mut b = GraphBuilder {
            graph: MixingGraph::default(),
            open: Vec::with_capacity(inputs.len()),
        };
        for v in inputs {
            let id = b.add_node(NodeKind::Source);
            b.graph.input_order.push(id);
            b.open.push((v.clone(), id));
        }
        b
    }

    fn add_node(&mut self, kind: NodeKind) -> usize {
        let id = self.graph.nodes.len();
        self.graph.nodes.push(Node { id, kind });
        id
    }

    /// Mixes the earliest open droplets of values `a` and `b`.
    pub fn mix(&mut self, a: &Dyadic, b: &Dyadic) -> Option<usize> {
        let ia = self.open.iter().position(|(x, _)| x == a)?;
        let ib = self
            .open
            .iter()
            .enumerate()
            .position(|(i, (x, _))| x == b && i != ia)?;
        let (pa, pb) = (self.open[ia].1, self.open[ib].1);
        self.open.remove(ia.max(ib));
        self.open.remove(ia.min(ib));
        Some(self.mix_nodes(pa, pb, a.mid(b)))
    }

    /// Adds a mixer fed by two producers whose outputs are known to carry
    /// values averaging to `value`.
    pub fn mix_nodes(&mut self, pa: usize, pb: usize, value: Dyadic) -> usize {
        let m = self.add_node(NodeKind::Mixer);
        self.graph.edges.push((pa, m));
        self.graph.edges.push((pb, m));
        self.open.push((value.clone(), m));
        self.open.push((value, m));
        m
    }

    /// Removes the earliest open droplet produced by `node`, returning its value.
    pub fn take_from(&mut self, node: usize) -> Option<Dyadic> {
        let pos = self.open.iter().position(|(_, p)| *p == node)?;
        Some(self.open.remove(pos).0)
    }

    /// Removes the earliest open droplet of value `v`, returning its producer.
    pub fn take_value(&mut self, v: &Dyadic) -> Option<usize> {
        let pos = self.open.iter().position(|(x, _)| x == v)?;
        Some(self.open.remove(pos).1)
    }

    pub fn open_values(&self) -> Configuration {
        Configuration::from_values(self.open.iter().map(|(v, _)| v.clone()))
    }

    /// Connects every open terminal to a sink.
    pub fn finish(mut self) -> MixingGraph {
        let open = std::mem::take(&mut self.open);
        for (_, p) in open {
            let s = self.add_node(NodeKind::Sink);
            self.graph.edges.push((p, s));
        }
        self.graph
    }
}

/// Builds the graph realizing `seq` on the droplets of `inputs` (ascending).
/// Each step consumes the earliest-created open droplets carrying its values;
/// steps mixing equal values are no-ops and are omitted.
pub fn sequence_to_graph(inputs: &Configuration, seq: &[MixStep]) -> Result<MixingGraph, GraphError> {
    let mut b = GraphBuilder::new(&inputs.droplets());
    for (i, step) in seq.iter().enumerate() {
        if step.a == step.b {
            continue;
        }
        if b.mix(&step.a, &step.b).is_none() {
            let missing = if b.open.iter().any(|(v, _)| *v == step.a) {
                step.b.clone()
            } else {
                step.a.clone()
            };
            return Err(GraphError::MissingValue {
                step: i,
                value: missing,
            });
        }
    }
    Ok(b.finish())
}

/// Folds `apply_mix` over `seq`.
pub fn replay(inputs: &Configuration, seq: &[MixStep]) -> Result<Configuration, GraphError> {
    let mut c = inputs.clone();
    for (i, step) in seq.iter().enumerate() {
        c.mix_in_place(&step.a, &step.b).map_err(|e| match e {
            ConfigError::MissingDroplet(value) => GraphError::MissingValue { step: i, value },
            other => GraphError::Config(other),
        })?;
    }
    Ok(c)
}

/// One `mix <a> <b> -> <mid>` line per step.
pub fn format_sequence(seq: &[MixStep]) -> String {
    seq.iter().map(|s| format!("{s}\n")).collect()
}
