//! Weighted digraphs, node groups and edge rewirings.
//!
//! Nodes carry arbitrary string labels externally and dense `0..n` ids
//! internally. Every node must have at least one outgoing arc, so the
//! row-normalized transition matrix is stochastic; rewiring keeps the
//! out-degree sequence fixed and therefore preserves this.

use std::collections::HashMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type NodeId = usize;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Arc {
    pub target: NodeId,
    pub weight: f64,
}

/// Directed weighted graph with sorted out-adjacency lists.
#[derive(Debug, Clone)]
pub struct DirectedGraph {
    out: Vec<Vec<Arc>>,
    out_degree: Vec<f64>,
    labels: Vec<String>,
    index: HashMap<String, NodeId>,
    edge_count: usize,
}

/// Replace arc `(source, removed)` by `(source, added)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Rewiring {
    pub source: NodeId,
    pub removed: NodeId,
    pub added: NodeId,
}

impl Rewiring {
    pub fn new(source: NodeId, removed: NodeId, added: NodeId) -> Self {
        Self {
            source,
            removed,
            added,
        }
    }

    /// The rewiring that undoes this one.
    pub fn reversed(&self) -> Self {
        Self::new(self.source, self.added, self.removed)
    }

    pub fn as_tuple(&self) -> (NodeId, NodeId, NodeId) {
        (self.source, self.removed, self.added)
    }
}

impl DirectedGraph {
    /// Builds a graph on nodes `0..n` labelled by their ids.
    pub fn from_edges(n: usize, edges: &[(NodeId, NodeId, f64)]) -> Result<Self> {
        let labels = (0..n).map(|i| i.to_string()).collect();
        Self::from_labelled_edges(labels, edges)
    }

    pub fn from_unweighted(n: usize, edges: &[(NodeId, NodeId)]) -> Result<Self> {
        let weighted: Vec<_> = edges.iter().map(|&(u, v)| (u, v, 1.0)).collect();
        Self::from_edges(n, &weighted)
    }

    pub fn from_labelled_edges(
        labels: Vec<String>,
        edges: &[(NodeId, NodeId, f64)],
    ) -> Result<Self> {
        let n = labels.len();
        let mut index = HashMap::with_capacity(n);
        for (id, label) in labels.iter().enumerate() {
            if index.insert(label.clone(), id).is_some() {
                return Err(Error::InvalidGraph(format!("duplicate label {label:?}")));
            }
        }
        let mut out: Vec<Vec<Arc>> = vec![Vec::new(); n];
        for &(u, v, w) in edges {
            if u >= n || v >= n {
                return Err(Error::InvalidGraph(format!(
                    "arc ({u}, {v}) references a node outside 0..{n}"
                )));
            }
            if u == v {
                return Err(Error::InvalidGraph(format!(
                    "self-loop on node {:?}",
                    labels[u]
                )));
            }
            if !(w.is_finite() && w > 0.0) {
                return Err(Error::InvalidGraph(format!(
                    "arc ({:?}, {:?}) has non-positive weight {w}",
                    labels[u], labels[v]
                )));
            }
            out[u].push(Arc {
                target: v,
                weight: w,
            });
        }
        for (u, arcs) in out.iter_mut().enumerate() {
            arcs.sort_by_key(|a| a.target);
            if let Some(pair) = arcs.windows(2).find(|p| p[0].target == p[1].target) {
                return Err(Error::InvalidGraph(format!(
                    "duplicate arc ({:?}, {:?})",
                    labels[u], labels[pair[0].target]
                )));
            }
            if arcs.is_empty() {
                return Err(Error::DanglingNode {
                    label: labels[u].clone(),
                });
            }
        }
        let out_degree = out
            .iter()
            .map(|arcs| arcs.iter().map(|a| a.weight).sum())
            .collect();
        Ok(Self {
            out,
            out_degree,
            labels,
            index,
            edge_count: edges.len(),
        })
    }

    pub fn node_count(&self) -> usize {
        self.out.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    pub fn out_arcs(&self, node: NodeId) -> &[Arc] {
        &self.out[node]
    }

    /// Sum of outgoing weights.
    pub fn out_degree(&self, node: NodeId) -> f64 {
        self.out_degree[node]
    }

    pub fn out_count(&self, node: NodeId) -> usize {
        self.out[node].len()
    }

    /// Largest weighted out-degree.
    pub fn max_out_degree(&self) -> f64 {
        self.out_degree.iter().copied().fold(0.0, f64::max)
    }

    /// Largest number of out-neighbors.
    pub fn max_out_count(&self) -> usize {
        self.out.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn is_weighted(&self) -> bool {
        self.out.iter().flatten().any(|a| a.weight != 1.0)
    }

    pub fn weight(&self, from: NodeId, to: NodeId) -> Option<f64> {
        self.out[from]
            .binary_search_by_key(&to, |a| a.target)
            .ok()
            .map(|pos| self.out[from][pos].weight)
    }

    pub fn has_edge(&self, from: NodeId, to: NodeId) -> bool {
        self.weight(from, to).is_some()
    }

    /// Transition probability `w(i,j) / d_i`, zero for missing arcs.
    pub fn transition(&self, from: NodeId, to: NodeId) -> f64 {
        self.weight(from, to)
            .map_or(0.0, |w| w / self.out_degree[from])
    }

    pub fn label(&self, node: NodeId) -> &str {
        &self.labels[node]
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn node_id(&self, label: &str) -> Option<NodeId> {
        self.index.get(label).copied()
    }

    /// All arcs `(source, target, weight)` in lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = (NodeId, NodeId, f64)> + '_ {
        self.out
            .iter()
            .enumerate()
            .flat_map(|(u, arcs)| arcs.iter().map(move |a| (u, a.target, a.weight)))
    }

    pub fn out_degrees(&self) -> &[f64] {
        &self.out_degree
    }

    /// Checks the rewiring constraints against the current arc set.
    pub fn check_rewiring(&self, r: &Rewiring) -> Result<()> {
        let (i, j, k) = r.as_tuple();
        let fail = |reason| Err(Error::InvalidRewiring { i, j, k, reason });
        let n = self.node_count();
        if i >= n || j >= n || k >= n {
            return fail("node id out of range");
        }
        if j == k {
            return fail("removed and added targets coincide");
        }
        if i == k {
            return fail("added arc would be a self-loop");
        }
        if !self.has_edge(i, j) {
            return fail("removed arc is not in the graph");
        }
        if self.has_edge(i, k) {
            return fail("added arc is already in the graph");
        }
        Ok(())
    }

    pub fn is_legal(&self, r: &Rewiring) -> bool {
        self.check_rewiring(r).is_ok()
    }

    /// Applies a rewiring in place. The new arc inherits the removed arc's weight.
    pub fn apply_rewiring(&mut self, r: &Rewiring) -> Result<()> {
        self.check_rewiring(r)?;
        let arcs = &mut self.out[r.source];
        let pos = arcs
            .binary_search_by_key(&r.removed, |a| a.target)
            .map_err(|_| Error::Internal("removed arc vanished".into()))?;
        let weight = arcs.remove(pos).weight;
        let ins = arcs
            .binary_search_by_key(&r.added, |a| a.target)
            .unwrap_err();
        arcs.insert(
            ins,
            Arc {
                target: r.added,
                weight,
            },
        );
        Ok(())
    }

    /// Returns a rewired copy.
    pub fn rewired(&self, r: &Rewiring) -> Result<Self> {
        let mut g = self.clone();
        g.apply_rewiring(r)?;
        Ok(g)
    }

    /// Number of legal rewirings starting with arc `(source, _)`; the same for every out-arc.
    pub fn legal_targets_per_arc(&self, source: NodeId) -> usize {
        self.node_count() - 1 - self.out_count(source)
    }

    /// Edge-list text over dense ids; [`load_graph`] reads it back to the same arcs and ids.
    pub fn to_edge_list(&self) -> String {
        let mut s = String::new();
        for (u, v, w) in self.edges() {
            if w == 1.0 {
                let _ = writeln!(s, "{u} {v}");
            } else {
                let _ = writeln!(s, "{u} {v} {w}");
            }
        }
        s
    }
}

/// Parses an edge list: one arc per line as `src dst [weight]`, `#` starts a comment.
///
/// Labels that are all unsigned integers are numbered in numeric order;
/// otherwise ids follow first appearance. With `symmetrize`, every line
/// contributes both directions.
pub fn load_graph(text: &str, symmetrize: bool) -> Result<DirectedGraph> {
    let mut raw: Vec<(&str, &str, f64)> = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let parse_err = |message: String| Error::Parse {
            line: lineno + 1,
            message,
        };
        let fields: Vec<&str> = line.split_whitespace().collect();
        let weight = match fields.len() {
            2 => 1.0,
            3 => {
                let w: f64 = fields[2]
                    .parse()
                    .map_err(|_| parse_err(format!("bad weight {:?}", fields[2])))?;
                if !(w.is_finite() && w > 0.0) {
                    return Err(parse_err(format!("weight must be positive, got {w}")));
                }
                w
            }
            c => return Err(parse_err(format!("expected 2 or 3 fields, found {c}"))),
        };
        raw.push((fields[0], fields[1], weight));
    }

    let mut order: Vec<&str> = Vec::new();
    let mut seen: HashMap<&str, ()> = HashMap::new();
    for &(u, v, _) in &raw {
        for l in [u, v] {
            if seen.insert(l, ()).is_none() {
                order.push(l);
            }
        }
    }
    let numeric: Option<Vec<u64>> = order.iter().map(|l| l.parse::<u64>().ok()).collect();
    if let Some(values) = numeric {
        let mut paired: Vec<(u64, &str)> = values.into_iter().zip(order.iter().copied()).collect();
        paired.sort();
        order = paired.into_iter().map(|(_, l)| l).collect();
    }
    let ids: HashMap<&str, NodeId> = order.iter().enumerate().map(|(i, &l)| (l, i)).collect();

    let mut edges = Vec::with_capacity(raw.len() * if symmetrize { 2 } else { 1 });
    for &(u, v, w) in &raw {
        edges.push((ids[u], ids[v], w));
        if symmetrize {
            edges.push((ids[v], ids[u], w));
        }
    }
    let labels = order.into_iter().map(str::to_owned).collect();
    DirectedGraph::from_labelled_edges(labels, &edges)
}

/// The disadvantaged group `S` and its fairness threshold.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupPartition {
    mask: Vec<bool>,
    size: usize,
    threshold: f64,
}

impl GroupPartition {
    /// `threshold` defaults to the population ratio `|S|/n`.
    pub fn new(node_count: usize, members: &[NodeId], threshold: Option<f64>) -> Result<Self> {
        let mut mask = vec![false; node_count];
        for &m in members {
            if m >= node_count {
                return Err(Error::InvalidGroup(format!(
                    "member {m} outside 0..{node_count}"
                )));
            }
            mask[m] = true;
        }
        let size = mask.iter().filter(|&&b| b).count();
        if size == 0 {
            return Err(Error::InvalidGroup("group is empty".into()));
        }
        if size == node_count {
            return Err(Error::InvalidGroup("group contains every node".into()));
        }
        let threshold = threshold.unwrap_or(size as f64 / node_count as f64);
        if !(threshold > 0.0 && threshold <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "fairness threshold must lie in (0, 1], got {threshold}"
            )));
        }
        Ok(Self {
            mask,
            size,
            threshold,
        })
    }

    /// Reads one node label per line.
    pub fn parse(text: &str, graph: &DirectedGraph, threshold: Option<f64>) -> Result<Self> {
        let mut members = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let label = line.split('#').next().unwrap_or("").trim();
            if label.is_empty() {
                continue;
            }
            let id = graph.node_id(label).ok_or_else(|| Error::Parse {
                line: lineno + 1,
                message: format!("unknown node {label:?}"),
            })?;
            members.push(id);
        }
        Self::new(graph.node_count(), &members, threshold)
    }

    pub fn contains(&self, node: NodeId) -> bool {
        self.mask[node]
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    pub fn members(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.mask.iter().enumerate().filter(|(_, &b)| b).map(|(i, _)| i)
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn node_count(&self) -> usize {
        self.mask.len()
    }

    /// `|S| / n`.
    pub fn ratio(&self) -> f64 {
        self.size as f64 / self.mask.len() as f64
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }
}

/// Same topology as the source graph with `w_r(i,j) = w(i,j) / ((alpha/(1-alpha)) d_i)`.
///
/// Its forest matrix `(I + L_r)^{-1}` equals the PageRank matrix of the source graph.
#[derive(Debug, Clone)]
pub struct ReweightedGraph {
    alpha: f64,
    out: Vec<Vec<Arc>>,
}

pub fn build_reweighted(graph: &DirectedGraph, alpha: f64) -> Result<ReweightedGraph> {
    check_alpha(alpha)?;
    let scale = (1.0 - alpha) / alpha;
    let out = (0..graph.node_count())
        .map(|u| {
            let d = graph.out_degree(u);
            graph
                .out_arcs(u)
                .iter()
                .map(|a| Arc {
                    target: a.target,
                    weight: a.weight * scale / d,
                })
                .collect()
        })
        .collect();
    Ok(ReweightedGraph { alpha, out })
}

impl ReweightedGraph {
    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn node_count(&self) -> usize {
        self.out.len()
    }

    pub fn out_arcs(&self, node: NodeId) -> &[Arc] {
        &self.out[node]
    }

    pub fn out_weight(&self, node: NodeId) -> f64 {
        self.out[node].iter().map(|a| a.weight).sum()
    }

    pub fn weight(&self, from: NodeId, to: NodeId) -> Option<f64> {
        self.out[from]
            .binary_search_by_key(&to, |a| a.target)
            .ok()
            .map(|pos| self.out[from][pos].weight)
    }
}

pub(crate) fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "restart probability must lie in (0, 1), got {alpha}"
        )))
    }
}
