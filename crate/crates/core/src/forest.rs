//! Rooted spanning forest sampling on the reweighted graph.
//!
//! Wilson-style loop-erased random walks towards an absorbing super-node:
//! from `u` the walk is absorbed (making `u` a root) with probability
//! `1 / (1 + d_u)` in the reweighted graph, which is exactly `alpha` since
//! every node there has out-weight `(1 - alpha) / alpha`; otherwise it steps
//! to `j` with the original transition probability `p_uj`. Forests come out
//! with probability proportional to the product of their reweighted arc
//! weights, so root frequencies estimate entries of `Pi`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{check_alpha, DirectedGraph, GroupPartition, NodeId};

/// Hard stop on walk steps per forest.
pub const MAX_WALK_STEPS: u64 = 1_000_000_000;

const NONE: u32 = u32::MAX;

/// Compact transition structure for the walks.
///
/// Nodes without out-arcs are always absorbed.
#[derive(Debug, Clone)]
pub struct WalkGraph {
    alpha: f64,
    offsets: Vec<usize>,
    targets: Vec<u32>,
    // Cumulative transition probabilities per node; empty when every node is uniform.
    cumulative: Vec<f64>,
}

impl WalkGraph {
    pub fn new(graph: &DirectedGraph, alpha: f64) -> Result<Self> {
        let arcs: Vec<(NodeId, NodeId, f64)> = graph.edges().collect();
        Self::from_arcs(graph.node_count(), &arcs, alpha)
    }

    /// Builds from raw arcs; nodes may be dangling, arcs need not be sorted.
    pub fn from_arcs(n: usize, arcs: &[(NodeId, NodeId, f64)], alpha: f64) -> Result<Self> {
        check_alpha(alpha)?;
        if n >= NONE as usize {
            return Err(Error::InvalidParameter(format!(
                "{n} nodes exceed the sampler's 32-bit id space"
            )));
        }
        let mut sorted = arcs.to_vec();
        sorted.sort_by_key(|a| (a.0, a.1));
        let mut offsets = vec![0usize; n + 1];
        for &(u, v, w) in &sorted {
            if u >= n || v >= n || !(w > 0.0) {
                return Err(Error::InvalidGraph(format!("bad arc ({u}, {v}, {w})")));
            }
            offsets[u + 1] += 1;
        }
        for u in 0..n {
            offsets[u + 1] += offsets[u];
        }
        let targets = sorted.iter().map(|&(_, v, _)| v as u32).collect();
        let uniform = sorted.iter().all(|&(_, _, w)| w == sorted[0].2);
        let cumulative = if uniform {
            Vec::new()
        } else {
            let mut cum = Vec::with_capacity(sorted.len());
            for u in 0..n {
                let slice = &sorted[offsets[u]..offsets[u + 1]];
                let total: f64 = slice.iter().map(|a| a.2).sum();
                let mut acc = 0.0;
                for a in slice {
                    acc += a.2 / total;
                    cum.push(acc);
                }
            }
            cum
        };
        Ok(Self {
            alpha,
            offsets,
            targets,
            cumulative,
        })
    }

    pub fn node_count(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    // One uniform draw decides both absorption and, if not absorbed, the neighbor.
    #[inline]
    fn step(&self, u: usize, x: f64) -> Option<usize> {
        let lo = self.offsets[u];
        let deg = self.offsets[u + 1] - lo;
        if deg == 0 || x < self.alpha {
            return None;
        }
        let y = (x - self.alpha) / (1.0 - self.alpha);
        let idx = if self.cumulative.is_empty() {
            ((y * deg as f64) as usize).min(deg - 1)
        } else {
            let cum = &self.cumulative[lo..lo + deg];
            cum.partition_point(|&c| c <= y).min(deg - 1)
        };
        Some(self.targets[lo + idx] as usize)
    }
}

/// One sampled forest: the root and parent of every node.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ForestSample {
    pub root: Vec<NodeId>,
    /// `None` for roots.
    pub parent: Vec<Option<NodeId>>,
}

impl ForestSample {
    pub fn roots(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.root
            .iter()
            .enumerate()
            .filter(|(u, r)| *u == **r)
            .map(|(u, _)| u)
    }

    /// `|M(F, s)|` for every `s`: number of nodes rooted at `s`.
    pub fn component_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.root.len()];
        for &r in &self.root {
            sizes[r] += 1;
        }
        sizes
    }
}

/// Forests interleaved per batch in [`estimate_aux`]. On large graphs the walks
/// are bound by memory latency, and independent walks overlap their misses.
pub const LANES: usize = 8;

struct Lane {
    // `NONE` until the node joins the forest; doubles as the membership flag.
    root: Vec<u32>,
    // Last exit of the current walk, then the parent once in the forest.
    next: Vec<u32>,
    // Node whose walk is in progress; `n` once the forest is complete.
    start: usize,
    at: usize,
    steps: u64,
}

impl Lane {
    fn new(n: usize) -> Self {
        Self {
            root: vec![NONE; n],
            next: vec![NONE; n],
            start: 0,
            at: 0,
            steps: 0,
        }
    }

    fn reset(&mut self) {
        self.root.fill(NONE);
        self.next.fill(NONE);
        self.start = 0;
        self.at = 0;
        self.steps = 0;
    }
}

/// Reusable state for repeated sampling on one graph.
///
/// A batch samples one forest per lane. Lanes advance one walk step at a
/// time in turn, drawing from the same generator; every draw is fresh when
/// a lane takes it, so the forests stay independent.
pub struct ForestSampler<'g> {
    graph: &'g WalkGraph,
    lanes: Vec<Lane>,
    step_limit: u64,
}

impl<'g> ForestSampler<'g> {
    pub fn new(graph: &'g WalkGraph) -> Self {
        Self::with_lanes(graph, 1)
    }

    pub fn with_lanes(graph: &'g WalkGraph, lanes: usize) -> Self {
        let n = graph.node_count();
        Self {
            graph,
            lanes: (0..lanes.max(1)).map(|_| Lane::new(n)).collect(),
            step_limit: MAX_WALK_STEPS,
        }
    }

    /// Walk steps allowed per forest.
    pub fn with_step_limit(mut self, limit: u64) -> Self {
        self.step_limit = limit;
        self
    }

    pub fn lane_count(&self) -> usize {
        self.lanes.len()
    }

    /// Samples a forest into the first lane; returns the number of walk steps.
    pub fn sample<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<u64> {
        self.sample_batch(1, rng)
    }

    /// Samples a forest into each of the first `count` lanes; returns the total walk steps.
    pub fn sample_batch<R: Rng + ?Sized>(&mut self, count: usize, rng: &mut R) -> Result<u64> {
        assert!(count <= self.lanes.len(), "batch larger than the lane count");
        let g = self.graph;
        let n = g.node_count();
        let lanes = &mut self.lanes[..count];
        for lane in lanes.iter_mut() {
            lane.reset();
        }
        let mut active = count;
        while active > 0 {
            active = 0;
            for lane in lanes.iter_mut() {
                if lane.start >= n {
                    continue;
                }
                active += 1;
                let u = lane.at;
                if lane.root[u] != NONE {
                    // Retrace along the last exit of each visited node: this is the loop erasure.
                    let r = lane.root[u];
                    let mut w = lane.start;
                    while lane.root[w] == NONE {
                        lane.root[w] = r;
                        w = lane.next[w] as usize;
                    }
                    while lane.start < n && lane.root[lane.start] != NONE {
                        lane.start += 1;
                    }
                    lane.at = lane.start;
                    continue;
                }
                lane.steps += 1;
                if lane.steps > self.step_limit {
                    return Err(Error::SamplerStalled {
                        limit: self.step_limit,
                    });
                }
                match g.step(u, rng.random::<f64>()) {
                    None => {
                        lane.root[u] = u as u32;
                        lane.next[u] = NONE;
                    }
                    Some(v) => {
                        lane.next[u] = v as u32;
                        lane.at = v;
                    }
                }
            }
        }
        Ok(lanes.iter().map(|l| l.steps).sum())
    }

    /// Root of every node in the first lane's forest.
    pub fn roots(&self) -> impl ExactSizeIterator<Item = NodeId> + '_ {
        self.lane_roots(0)
    }

    pub fn lane_roots(&self, lane: usize) -> impl ExactSizeIterator<Item = NodeId> + '_ {
        self.lanes[lane].root.iter().map(|&r| r as usize)
    }

    pub fn root(&self, node: NodeId) -> NodeId {
        self.lane_root(0, node)
    }

    pub fn lane_root(&self, lane: usize, node: NodeId) -> NodeId {
        self.lanes[lane].root[node] as usize
    }

    pub fn to_sample(&self) -> ForestSample {
        self.lane_sample(0)
    }

    pub fn lane_sample(&self, lane: usize) -> ForestSample {
        ForestSample {
            root: self.lane_roots(lane).collect(),
            parent: self.lanes[lane]
                .next
                .iter()
                .map(|&p| (p != NONE).then_some(p as usize))
                .collect(),
        }
    }
}

pub fn sample_forest<R: Rng + ?Sized>(graph: &WalkGraph, rng: &mut R) -> Result<ForestSample> {
    let mut sampler = ForestSampler::new(graph);
    sampler.sample(rng)?;
    Ok(sampler.to_sample())
}

/// `psi = ceil(ln(2 / delta) / (2 eps^2))` forests bound each estimate's
/// deviation by `eps` with probability at least `1 - delta`.
pub fn required_samples(epsilon: f64, delta: f64) -> Result<usize> {
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "epsilon must be positive, got {epsilon}"
        )));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "delta must lie in (0, 1), got {delta}"
        )));
    }
    let exact = (2.0 / delta).ln() / (2.0 * epsilon * epsilon);
    // Absorb rounding noise so that integral values are not bumped up by one.
    let rounded = exact.round();
    let psi = if (exact - rounded).abs() <= 1e-9 * rounded.max(1.0) {
        rounded
    } else {
        exact.ceil()
    };
    Ok((psi as usize).max(1))
}

/// Seeds and parallelism for a batch of forests.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SamplingPlan {
    pub seed: u64,
    /// Distinguishes independent batches drawn with the same seed.
    pub stream: u64,
    pub workers: usize,
}

impl SamplingPlan {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            stream: 0,
            workers: 1,
        }
    }

    pub fn with_stream(mut self, stream: u64) -> Self {
        self.stream = stream;
        self
    }

    pub fn with_workers(mut self, workers: usize) -> Self {
        self.workers = workers.max(1);
        self
    }

    fn worker_rng(&self, worker: usize) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream((self.stream << 16) | worker as u64);
        rng
    }
}

/// Monte Carlo estimates of `sigma`, `eta` and optionally `sigma_tilde`.
#[derive(Debug, Clone)]
pub struct EstimatorSet {
    pub sigma: Vec<f64>,
    pub eta: Vec<f64>,
    pub sigma_tilde: Option<Vec<f64>>,
    pub samples: usize,
    pub seed: u64,
    /// Total walk steps over all forests.
    pub walk_steps: u64,
}

impl EstimatorSet {
    /// Estimated `pi(S)`: the mean of `eta` under a uniform jump vector.
    pub fn group_mass(&self) -> f64 {
        self.eta.iter().sum::<f64>() / self.eta.len() as f64
    }

    pub fn mean_walk_steps(&self) -> f64 {
        self.walk_steps as f64 / self.samples as f64
    }
}

#[derive(Default)]
struct Tally {
    sigma: Vec<u64>,
    eta: Vec<u64>,
    sigma_tilde: Vec<u64>,
    steps: u64,
}

/// Averages `psi` forests; worker tallies are integer counts so the merge is order-free.
pub fn estimate_aux(
    graph: &WalkGraph,
    psi: usize,
    group: &GroupPartition,
    source: Option<NodeId>,
    plan: SamplingPlan,
) -> Result<EstimatorSet> {
    if psi == 0 {
        return Err(Error::InvalidParameter("sample count must be at least 1".into()));
    }
    let n = graph.node_count();
    if group.node_count() != n {
        return Err(Error::InvalidGroup(format!(
            "group covers {} nodes, graph has {n}",
            group.node_count()
        )));
    }
    if let Some(v) = source {
        if v >= n {
            return Err(Error::InvalidParameter(format!("source {v} outside 0..{n}")));
        }
    }
    let workers = plan.workers.min(psi).max(1);
    let chunks: Vec<(usize, usize)> = (0..workers)
        .map(|w| (w, psi / workers + usize::from(w < psi % workers)))
        .collect();
    let mask = group.mask();
    let tallies: Vec<Result<Tally>> = chunks
        .into_par_iter()
        .map(|(w, count)| {
            let mut rng = plan.worker_rng(w);
            let mut sampler = ForestSampler::with_lanes(graph, LANES.min(count));
            let mut t = Tally {
                sigma: vec![0; n],
                eta: vec![0; n],
                sigma_tilde: if source.is_some() { vec![0; n] } else { Vec::new() },
                steps: 0,
            };
            let mut left = count;
            while left > 0 {
                let batch = left.min(sampler.lane_count());
                t.steps += sampler.sample_batch(batch, &mut rng)?;
                for lane in 0..batch {
                    for (u, r) in sampler.lane_roots(lane).enumerate() {
                        t.sigma[r] += 1;
                        if mask[r] {
                            t.eta[u] += 1;
                        }
                    }
                    if let Some(v) = source {
                        t.sigma_tilde[sampler.lane_root(lane, v)] += 1;
                    }
                }
                left -= batch;
            }
            Ok(t)
        })
        .collect();
    let mut total = Tally {
        sigma: vec![0; n],
        eta: vec![0; n],
        sigma_tilde: vec![0; if source.is_some() { n } else { 0 }],
        steps: 0,
    };
    for t in tallies {
        let t = t?;
        total.steps += t.steps;
        for (a, b) in total.sigma.iter_mut().zip(&t.sigma) {
            *a += b;
        }
        for (a, b) in total.eta.iter_mut().zip(&t.eta) {
            *a += b;
        }
        for (a, b) in total.sigma_tilde.iter_mut().zip(&t.sigma_tilde) {
            *a += b;
        }
    }
    let psi_f = psi as f64;
    Ok(EstimatorSet {
        sigma: total.sigma.iter().map(|&c| c as f64 / (n as f64 * psi_f)).collect(),
        eta: total.eta.iter().map(|&c| c as f64 / psi_f).collect(),
        sigma_tilde: source.map(|_| total.sigma_tilde.iter().map(|&c| c as f64 / psi_f).collect()),
        samples: psi,
        seed: plan.seed,
        walk_steps: total.steps,
    })
}

/// Per-node root frequencies over `psi` forests, for debugging output.
pub fn root_frequencies(graph: &WalkGraph, psi: usize, plan: SamplingPlan) -> Result<Vec<u64>> {
    let mut rng = plan.worker_rng(0);
    let mut sampler = ForestSampler::with_lanes(graph, LANES.min(psi.max(1)));
    let mut counts = vec![0u64; graph.node_count()];
    let mut left = psi;
    while left > 0 {
        let batch = left.min(sampler.lane_count());
        sampler.sample_batch(batch, &mut rng)?;
        for lane in 0..batch {
            for (u, r) in sampler.lane_roots(lane).enumerate() {
                if u == r {
                    counts[u] += 1;
                }
            }
        }
        left -= batch;
    }
    Ok(counts)
}
