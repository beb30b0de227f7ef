//! Seeded synthetic graphs for tests, benchmarks and demos.

use std::collections::BTreeSet;

use rand::seq::index::sample as sample_indices;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::graph::{DirectedGraph, GroupPartition, NodeId};

/// Every node gets between 1 and `max_out` distinct random out-neighbors.
pub fn random_digraph(n: usize, max_out: usize, seed: u64) -> DirectedGraph {
    assert!(n >= 2 && max_out >= 1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges = Vec::new();
    for u in 0..n {
        let d = rng.random_range(1..=max_out.min(n - 1));
        for t in sample_indices(&mut rng, n - 1, d) {
            let v = if t >= u { t + 1 } else { t };
            edges.push((u, v, 1.0));
        }
    }
    DirectedGraph::from_edges(n, &edges).expect("generated graph is valid")
}

/// Like [`random_digraph`] with weights drawn from `[0.5, 3)`.
pub fn random_weighted_digraph(n: usize, max_out: usize, seed: u64) -> DirectedGraph {
    let base = random_digraph(n, max_out, seed);
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let edges: Vec<_> = base
        .edges()
        .map(|(u, v, _)| (u, v, rng.random_range(0.5..3.0)))
        .collect();
    DirectedGraph::from_edges(n, &edges).expect("generated graph is valid")
}

/// Every node has exactly `degree` distinct random out-neighbors.
pub fn random_regular_digraph(n: usize, degree: usize, seed: u64) -> DirectedGraph {
    assert!(degree < n);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges = Vec::with_capacity(n * degree);
    let mut picked: Vec<NodeId> = Vec::with_capacity(degree);
    for u in 0..n {
        picked.clear();
        while picked.len() < degree {
            let v = rng.random_range(0..n);
            if v != u && !picked.contains(&v) {
                picked.push(v);
            }
        }
        edges.extend(picked.iter().map(|&v| (u, v, 1.0)));
    }
    DirectedGraph::from_edges(n, &edges).expect("generated graph is valid")
}

/// A random subset of `size` nodes.
pub fn random_group(n: usize, size: usize, seed: u64) -> GroupPartition {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let members = sample_indices(&mut rng, n, size).into_vec();
    GroupPartition::new(n, &members, None).expect("valid group")
}

/// Symmetric co-purchase-like network with 92 nodes and 748 arcs: a
/// lower-degree group of 49 nodes (the returned partition) and an
/// advantaged group of 43, with strong homophily.
pub fn two_group_surrogate(seed: u64) -> (DirectedGraph, GroupPartition) {
    const N: usize = 92;
    const S: usize = 49;
    const UNDIRECTED: usize = 374;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let popularity: Vec<f64> = (0..N)
        .map(|u| {
            let base: f64 = rng.random_range(0.5..1.5);
            if u < S {
                base
            } else {
                base * 1.6
            }
        })
        .collect();
    let total: f64 = popularity.iter().sum();
    let pick = |rng: &mut ChaCha8Rng| {
        let mut x = rng.random_range(0.0..total);
        for (u, &p) in popularity.iter().enumerate() {
            if x < p {
                return u;
            }
            x -= p;
        }
        N - 1
    };
    let mut pairs: BTreeSet<(usize, usize)> = BTreeSet::new();
    // A ring inside each group keeps every node connected.
    for u in 0..S {
        pairs.insert(ordered(u, (u + 1) % S));
    }
    for u in S..N {
        pairs.insert(ordered(u, S + (u - S + 1) % (N - S)));
    }
    while pairs.len() < UNDIRECTED {
        let u = pick(&mut rng);
        let v = pick(&mut rng);
        if u == v {
            continue;
        }
        let same = (u < S) == (v < S);
        if !same && rng.random::<f64>() > 0.15 {
            continue;
        }
        pairs.insert(ordered(u, v));
    }
    let edges: Vec<_> = pairs
        .iter()
        .flat_map(|&(u, v)| [(u, v, 1.0), (v, u, 1.0)])
        .collect();
    let graph = DirectedGraph::from_edges(N, &edges).expect("generated graph is valid");
    let members: Vec<NodeId> = (0..S).collect();
    let group = GroupPartition::new(N, &members, None).expect("valid group");
    (graph, group)
}

fn ordered(u: usize, v: usize) -> (usize, usize) {
    (u.min(v), u.max(v))
}

/// Deterministic family of small digraphs (4 to 12 nodes) with groups, for oracle checks.
pub fn small_fixture_family() -> Vec<(DirectedGraph, GroupPartition)> {
    let mut out = Vec::new();
    for (idx, n) in (4..=12).enumerate() {
        for variant in 0..3u64 {
            let seed = 1000 + 10 * idx as u64 + variant;
            let g = if variant == 2 {
                random_weighted_digraph(n, 3, seed)
            } else {
                random_digraph(n, 2 + variant as usize, seed)
            };
            let group = random_group(n, (n / 3).max(1), seed + 7);
            out.push((g, group));
        }
    }
    out
}
