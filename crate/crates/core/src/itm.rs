//! Instantaneous topological map.
//!
//! Nodes are placed at input samples and never moved afterwards. Each sample
//! links its two nearest nodes, prunes the BMU's edges that fail the Thales
//! (Delaunay) test against the second BMU, and may spawn a new node when it
//! lies farther than `beta` from the BMU. Node ids are stable: removed nodes
//! leave a tombstone and ids are never reused.
//!
//! Which far samples spawn a node is set by [`CreationRule`].

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::som::squared_distance;

pub type NodeId = usize;

/// Second condition for spawning a node, on top of `‖x − s*‖ > beta`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CreationRule {
    /// `x` lies outside the sphere with diameter `s*`–`s**`, i.e.
    /// `(s* − x)·(s** − x) > 0`.
    #[default]
    Thales,
    /// `‖s* − s**‖ < ‖x − s*‖`. A node whose nearest neighbour is far can
    /// then only be joined by samples even farther out, so regions around
    /// isolated nodes are never refined.
    PairSpacing,
}

impl CreationRule {
    pub fn parse(s: &str) -> Result<CreationRule> {
        match s.trim().to_ascii_lowercase().as_str() {
            "thales" => Ok(CreationRule::Thales),
            "pair_spacing" | "pair-spacing" => Ok(CreationRule::PairSpacing),
            other => Err(Error::InvalidConfig(format!("unknown ITM creation rule `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
struct Node {
    weight: Vec<f64>,
    edges: BTreeSet<NodeId>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "GraphRepr", try_from = "GraphRepr")]
pub struct ItmGraph {
    beta: f64,
    rule: CreationRule,
    dim: usize,
    nodes: Vec<Option<Node>>,
}

impl ItmGraph {
    /// Two-node graph connecting `a` and `b`.
    pub fn with_initial_pair(beta: f64, a: &[f64], b: &[f64]) -> Result<Self> {
        if !(beta > 0.0) || !beta.is_finite() {
            return Err(Error::InvalidConfig("beta must be > 0".into()));
        }
        if a.len() != b.len() {
            return Err(Error::DimensionMismatch {
                expected: a.len(),
                found: b.len(),
            });
        }
        if a.is_empty() {
            return Err(Error::NoFeatures);
        }
        if a == b {
            return Err(Error::TooFewDistinctSamples);
        }
        let mut g = ItmGraph {
            beta,
            rule: CreationRule::default(),
            dim: a.len(),
            nodes: Vec::new(),
        };
        let i = g.push_node(a.to_vec());
        let j = g.push_node(b.to_vec());
        g.connect(i, j);
        Ok(g)
    }

    /// Builds a graph from explicit nodes (ids `0..n`) and edges. Nodes
    /// without edges are allowed here so tests can stage arbitrary states.
    pub fn from_parts(beta: f64, weights: Vec<Vec<f64>>, edges: &[(NodeId, NodeId)]) -> Result<Self> {
        let dim = weights.first().map(Vec::len).ok_or(Error::EmptyGraph)?;
        if weights.iter().any(|w| w.len() != dim) {
            return Err(Error::InvalidConfig("node weights differ in dimension".into()));
        }
        let mut g = ItmGraph {
            beta,
            rule: CreationRule::default(),
            dim,
            nodes: Vec::new(),
        };
        for w in weights {
            g.push_node(w);
        }
        for &(a, b) in edges {
            if a == b || g.node(a).is_none() || g.node(b).is_none() {
                return Err(Error::InvalidConfig(format!("invalid edge ({a}, {b})")));
            }
            g.connect(a, b);
        }
        Ok(g)
    }

    pub fn with_rule(mut self, rule: CreationRule) -> Self {
        self.rule = rule;
        self
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn rule(&self) -> CreationRule {
        self.rule
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of live nodes.
    pub fn node_count(&self) -> usize {
        self.nodes.iter().flatten().count()
    }

    pub fn edge_count(&self) -> usize {
        self.nodes.iter().flatten().map(|n| n.edges.len()).sum::<usize>() / 2
    }

    /// Live node ids in creation order.
    pub fn node_ids(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.nodes
            .iter()
            .enumerate()
            .filter_map(|(i, n)| n.as_ref().map(|_| i))
    }

    pub fn weight(&self, id: NodeId) -> Option<&[f64]> {
        self.node(id).map(|n| n.weight.as_slice())
    }

    pub fn neighbors(&self, id: NodeId) -> Option<&BTreeSet<NodeId>> {
        self.node(id).map(|n| &n.edges)
    }

    /// Undirected edges as `(low, high)` id pairs in ascending order.
    pub fn edges(&self) -> Vec<(NodeId, NodeId)> {
        self.node_ids()
            .flat_map(|i| {
                self.nodes[i]
                    .as_ref()
                    .unwrap()
                    .edges
                    .iter()
                    .filter(move |&&j| j > i)
                    .map(move |&j| (i, j))
            })
            .collect()
    }

    fn node(&self, id: NodeId) -> Option<&Node> {
        self.nodes.get(id).and_then(Option::as_ref)
    }

    fn push_node(&mut self, weight: Vec<f64>) -> NodeId {
        self.nodes.push(Some(Node {
            weight,
            edges: BTreeSet::new(),
        }));
        self.nodes.len() - 1
    }

    fn connect(&mut self, a: NodeId, b: NodeId) {
        self.nodes[a].as_mut().unwrap().edges.insert(b);
        self.nodes[b].as_mut().unwrap().edges.insert(a);
    }

    fn disconnect(&mut self, a: NodeId, b: NodeId) {
        self.nodes[a].as_mut().unwrap().edges.remove(&b);
        self.nodes[b].as_mut().unwrap().edges.remove(&a);
    }

    fn is_orphan(&self, id: NodeId) -> bool {
        self.node(id).is_some_and(|n| n.edges.is_empty())
    }

    /// Deletes a node and its edges, then any neighbor left without edges.
    fn remove_node(&mut self, id: NodeId) {
        let Some(node) = self.nodes[id].take() else {
            return;
        };
        for m in node.edges {
            self.nodes[m].as_mut().unwrap().edges.remove(&id);
            if self.is_orphan(m) {
                self.nodes[m] = None;
            }
        }
    }

    /// Ids of the nearest and second-nearest nodes; ties go to the lower id.
    pub fn find_two_bmus(&self, x: &[f64]) -> Result<(NodeId, NodeId)> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: x.len(),
            });
        }
        let mut first = (usize::MAX, f64::INFINITY);
        let mut second = (usize::MAX, f64::INFINITY);
        for id in self.node_ids() {
            let d = squared_distance(x, &self.nodes[id].as_ref().unwrap().weight);
            if d < first.1 {
                second = first;
                first = (id, d);
            } else if d < second.1 {
                second = (id, d);
            }
        }
        if second.0 == usize::MAX {
            return Err(Error::EmptyGraph);
        }
        Ok((first.0, second.0))
    }

    fn dist(&self, a: NodeId, b: NodeId) -> f64 {
        squared_distance(self.weight(a).unwrap(), self.weight(b).unwrap()).sqrt()
    }

    /// Processes one sample.
    pub fn step(&mut self, x: &[f64]) -> Result<()> {
        let (bmu, second) = self.find_two_bmus(x)?;

        self.connect(bmu, second);

        // drop BMU edges whose far end sees the second BMU inside the Thales sphere
        let bw = self.weight(bmu).unwrap().to_vec();
        let sw = self.weight(second).unwrap().to_vec();
        let candidates: Vec<NodeId> = self.neighbors(bmu).unwrap().iter().copied().collect();
        for m in candidates.into_iter().filter(|&m| m != second) {
            let mw = self.weight(m).unwrap();
            let dot: f64 = bw
                .iter()
                .zip(&sw)
                .zip(mw)
                .map(|((b, s), m)| (b - s) * (m - s))
                .sum();
            if dot < 0.0 {
                self.disconnect(bmu, m);
                if self.is_orphan(m) {
                    self.nodes[m] = None;
                }
            }
        }

        let dx = squared_distance(x, &bw).sqrt();
        let spawn = dx > self.beta
            && match self.rule {
                CreationRule::Thales => {
                    bw.iter().zip(&sw).zip(x).map(|((b, s), x)| (b - x) * (s - x)).sum::<f64>() > 0.0
                }
                CreationRule::PairSpacing => self.dist(bmu, second) < dx,
            };
        if spawn {
            let new = self.push_node(x.to_vec());
            self.connect(bmu, new);
            if self.dist(bmu, second) < 0.5 * self.beta {
                self.remove_node(second);
            }
        }
        Ok(())
    }

    /// Runs [`ItmGraph::step`] over every sample after the initial pair.
    pub fn train(data: &Dataset, beta: f64) -> Result<Self> {
        Self::train_with_rule(data, beta, CreationRule::default())
    }

    pub fn train_with_rule(data: &Dataset, beta: f64, rule: CreationRule) -> Result<Self> {
        if data.len() < 2 {
            return Err(Error::TooFewDistinctSamples);
        }
        let first = data.sample(0);
        let second_idx = (1..data.len())
            .find(|&i| data.sample(i) != first)
            .ok_or(Error::TooFewDistinctSamples)?;
        let mut g = Self::with_initial_pair(beta, first, data.sample(second_idx))?.with_rule(rule);
        for x in data.samples().skip(second_idx + 1) {
            g.step(x)?;
        }
        Ok(g)
    }

    /// Node weights in creation order as a single-batch dataset.
    pub fn resampled_set(&self, feature_names: &[String]) -> Result<Dataset> {
        if feature_names.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: feature_names.len(),
            });
        }
        let values: Vec<f64> = self
            .node_ids()
            .flat_map(|i| self.nodes[i].as_ref().unwrap().weight.iter().copied())
            .collect();
        if values.is_empty() {
            return Err(Error::EmptyGraph);
        }
        Dataset::single_batch(feature_names.to_vec(), values, "ITM")
    }

    /// Mean distance from each sample to its nearest node.
    pub fn quantization_error(&self, data: &Dataset) -> Result<f64> {
        if self.node_count() == 0 {
            return Err(Error::EmptyGraph);
        }
        if data.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: data.dim(),
            });
        }
        let total: f64 = data
            .samples()
            .map(|x| {
                self.node_ids()
                    .map(|i| squared_distance(x, self.weight(i).unwrap()))
                    .fold(f64::INFINITY, f64::min)
                    .sqrt()
            })
            .sum();
        Ok(total / data.len() as f64)
    }
}

#[derive(Serialize, Deserialize)]
struct NodeRepr {
    id: NodeId,
    weight: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct GraphRepr {
    beta: f64,
    #[serde(default)]
    rule: CreationRule,
    dim: usize,
    next_id: NodeId,
    nodes: Vec<NodeRepr>,
    edges: Vec<(NodeId, NodeId)>,
}

impl From<ItmGraph> for GraphRepr {
    fn from(g: ItmGraph) -> Self {
        GraphRepr {
            beta: g.beta,
            rule: g.rule,
            dim: g.dim,
            next_id: g.nodes.len(),
            edges: g.edges(),
            nodes: g
                .node_ids()
                .map(|id| NodeRepr {
                    id,
                    weight: g.nodes[id].as_ref().unwrap().weight.clone(),
                })
                .collect(),
        }
    }
}

impl TryFrom<GraphRepr> for ItmGraph {
    type Error = String;

    fn try_from(r: GraphRepr) -> std::result::Result<Self, String> {
        let mut nodes: Vec<Option<Node>> = vec![None; r.next_id];
        for n in r.nodes {
            if n.weight.len() != r.dim {
                return Err(format!("node {} has dimension {}", n.id, n.weight.len()));
            }
            let slot = nodes.get_mut(n.id).ok_or(format!("node id {} >= next_id", n.id))?;
            *slot = Some(Node {
                weight: n.weight,
                edges: BTreeSet::new(),
            });
        }
        let mut g = ItmGraph {
            beta: r.beta,
            rule: r.rule,
            dim: r.dim,
            nodes,
        };
        for (a, b) in r.edges {
            if a == b || g.node(a).is_none() || g.node(b).is_none() {
                return Err(format!("invalid edge ({a}, {b})"));
            }
            g.connect(a, b);
        }
        Ok(g)
    }
}
