//! Exact PageRank algebra on a dense `n x n` matrix.
//!
//! `Pi = alpha (I - (1 - alpha) P)^{-1}`; row `i` is the personalized
//! PageRank vector of node `i` and `v^T Pi` is PageRank with jump vector `v`.
//! A rewiring `(i, j, k)` is a rank-one change of `P`, so `Pi` and the
//! group-mass gains have closed forms.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::graph::{check_alpha, DirectedGraph, GroupPartition, NodeId, ReweightedGraph, Rewiring};

pub const DEFAULT_DENSE_CAP: usize = 20_000;

/// Row-sum drift beyond which the greedy loop recomputes `Pi` from scratch.
pub const DRIFT_REFRESH: f64 = 1e-6;

#[derive(Debug, Clone)]
pub struct PiMatrix {
    matrix: DMatrix<f64>,
    alpha: f64,
    jump: Vec<f64>,
}

/// `Pi` for `graph` with a uniform jump vector.
pub fn compute_pi(graph: &DirectedGraph, alpha: f64, cap: usize) -> Result<PiMatrix> {
    let n = graph.node_count();
    compute_pi_with_jump(graph, alpha, vec![1.0 / n as f64; n], cap)
}

pub fn compute_pi_with_jump(
    graph: &DirectedGraph,
    alpha: f64,
    jump: Vec<f64>,
    cap: usize,
) -> Result<PiMatrix> {
    check_alpha(alpha)?;
    let n = graph.node_count();
    if n > cap {
        return Err(Error::TooLarge { nodes: n, cap });
    }
    check_jump(&jump, n)?;
    let mut system = DMatrix::<f64>::identity(n, n);
    for (i, j, w) in graph.edges() {
        system[(i, j)] -= (1.0 - alpha) * w / graph.out_degree(i);
    }
    let rhs = DMatrix::<f64>::identity(n, n) * alpha;
    let matrix = system
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::Internal("LU solve of I - (1 - alpha) P failed".into()))?;
    Ok(PiMatrix {
        matrix,
        alpha,
        jump,
    })
}

fn check_jump(jump: &[f64], n: usize) -> Result<()> {
    if jump.len() != n {
        return Err(Error::InvalidParameter(format!(
            "jump vector has length {}, expected {n}",
            jump.len()
        )));
    }
    if jump.iter().any(|&x| !(x.is_finite() && x >= 0.0)) {
        return Err(Error::InvalidParameter(
            "jump vector entries must be finite and non-negative".into(),
        ));
    }
    let total: f64 = jump.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidParameter(format!(
            "jump vector must sum to 1, sums to {total}"
        )));
    }
    Ok(())
}

impl PiMatrix {
    pub fn node_count(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn jump(&self) -> &[f64] {
        &self.jump
    }

    pub fn get(&self, row: NodeId, col: NodeId) -> f64 {
        self.matrix[(row, col)]
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    /// Personalized PageRank vector of `source`.
    pub fn row(&self, source: NodeId) -> Vec<f64> {
        self.matrix.row(source).iter().copied().collect()
    }

    pub fn max_row_sum_drift(&self) -> f64 {
        self.matrix
            .row_iter()
            .map(|r| (r.sum() - 1.0).abs())
            .fold(0.0, f64::max)
    }

    /// `Pi 1_S`: PPR mass each node sends to the group.
    pub fn group_proximity(&self, group: &GroupPartition) -> Vec<f64> {
        let n = self.node_count();
        let mut eta = vec![0.0; n];
        for s in group.members() {
            for (u, e) in eta.iter_mut().enumerate() {
                *e += self.matrix[(u, s)];
            }
        }
        eta
    }

    /// `tau = alpha + (1 - alpha) p_ij (Pi_ji - Pi_ki)`, the Sherman-Morrison denominator.
    pub fn tau(&self, graph: &DirectedGraph, r: &Rewiring) -> f64 {
        tau_from(
            self.alpha,
            graph.transition(r.source, r.removed),
            self.get(r.removed, r.source),
            self.get(r.added, r.source),
        )
    }

    /// Rank-one update for a rewiring applied to `graph` (the graph before rewiring).
    pub fn update_in_place(&mut self, graph: &DirectedGraph, r: &Rewiring) {
        let (i, j, k) = r.as_tuple();
        let p = graph.transition(i, j);
        let scale = (1.0 - self.alpha) * p / self.tau(graph, r);
        let n = self.node_count();
        let col: Vec<f64> = (0..n).map(|u| scale * self.matrix[(u, i)]).collect();
        let diff: Vec<f64> = (0..n)
            .map(|c| self.matrix[(j, c)] - self.matrix[(k, c)])
            .collect();
        for (c, &d) in diff.iter().enumerate() {
            if d == 0.0 {
                continue;
            }
            let mut column = self.matrix.column_mut(c);
            for (u, &a) in col.iter().enumerate() {
                column[u] -= a * d;
            }
        }
    }
}

pub(crate) fn tau_from(alpha: f64, p_ij: f64, pi_ji: f64, pi_ki: f64) -> f64 {
    alpha + (1.0 - alpha) * p_ij * (pi_ji - pi_ki)
}

/// `Pi' = Pi - (1 - alpha)/tau * (p_ij Pi[:, i]) (Pi[j, :] - Pi[k, :])`.
pub fn sherman_morrison_update(pi: &PiMatrix, graph: &DirectedGraph, r: &Rewiring) -> Result<PiMatrix> {
    graph.check_rewiring(r)?;
    let mut next = pi.clone();
    next.update_in_place(graph, r);
    Ok(next)
}

pub fn tau(pi: &PiMatrix, graph: &DirectedGraph, r: &Rewiring) -> f64 {
    pi.tau(graph, r)
}

/// `pi^T = v^T Pi`.
pub fn pagerank_vector(pi: &PiMatrix) -> Vec<f64> {
    let n = pi.node_count();
    let mut out = vec![0.0; n];
    for (u, &vu) in pi.jump.iter().enumerate() {
        if vu == 0.0 {
            continue;
        }
        for (c, o) in out.iter_mut().enumerate() {
            *o += vu * pi.matrix[(u, c)];
        }
    }
    out
}

/// `pi(S)`: total mass of `scores` on the group.
pub fn group_mass(scores: &[f64], group: &GroupPartition) -> f64 {
    group.members().map(|s| scores[s]).sum()
}

/// `pi_v(S)`: personalized mass from `source` to the group.
pub fn ppr_mass(pi: &PiMatrix, source: NodeId, group: &GroupPartition) -> f64 {
    group.members().map(|s| pi.get(source, s)).sum()
}

/// Organic PPR mass: `(pi_v(S) - alpha 1[v in S]) / (1 - alpha)`.
pub fn normalized_ppr_mass(pi: &PiMatrix, source: NodeId, group: &GroupPartition) -> f64 {
    organic_mass(ppr_mass(pi, source, group), pi.alpha, group.contains(source))
}

pub fn organic_mass(mass: f64, alpha: f64, source_in_group: bool) -> f64 {
    let restart = if source_in_group { alpha } else { 0.0 };
    (mass - restart) / (1.0 - alpha)
}

/// Centrality, group proximity and (optionally) source proximity vectors.
#[derive(Debug, Clone)]
pub struct AuxVectors {
    /// `v^T Pi`; the column mean of `Pi` for a uniform jump vector.
    pub sigma: Vec<f64>,
    /// `Pi 1_S`.
    pub eta: Vec<f64>,
    /// Row `source` of `Pi`.
    pub sigma_tilde: Option<Vec<f64>>,
    pub source: Option<NodeId>,
}

impl AuxVectors {
    pub fn new(pi: &PiMatrix, group: &GroupPartition, source: Option<NodeId>) -> Self {
        Self {
            sigma: pagerank_vector(pi),
            eta: pi.group_proximity(group),
            sigma_tilde: source.map(|v| pi.row(v)),
            source,
        }
    }
}

/// Exact PageRank group-mass gain of a rewiring.
pub fn gain_pr(aux: &AuxVectors, pi: &PiMatrix, graph: &DirectedGraph, r: &Rewiring) -> f64 {
    closed_form_gain(&aux.sigma, &aux.eta, pi, graph, r)
}

/// Exact personalized gain `pi'_v(S) - pi_v(S)`; `aux` must carry `sigma_tilde`.
pub fn gain_ppr(aux: &AuxVectors, pi: &PiMatrix, graph: &DirectedGraph, r: &Rewiring) -> Result<f64> {
    let row = aux
        .sigma_tilde
        .as_ref()
        .ok_or_else(|| Error::InvalidParameter("source proximity vector not computed".into()))?;
    Ok(closed_form_gain(row, &aux.eta, pi, graph, r))
}

fn closed_form_gain(
    weights: &[f64],
    eta: &[f64],
    pi: &PiMatrix,
    graph: &DirectedGraph,
    r: &Rewiring,
) -> f64 {
    let (i, j, k) = r.as_tuple();
    let p = graph.transition(i, j);
    let t = pi.tau(graph, r);
    (1.0 - pi.alpha) * p * weights[i] * (eta[k] - eta[j]) / t
}

/// `(I + L_r)^{-1}` for the reweighted graph, where `L_r` is its out-degree Laplacian.
pub fn forest_matrix(gr: &ReweightedGraph) -> Result<DMatrix<f64>> {
    let n = gr.node_count();
    let mut m = DMatrix::<f64>::identity(n, n);
    for u in 0..n {
        for a in gr.out_arcs(u) {
            m[(u, u)] += a.weight;
            m[(u, a.target)] -= a.weight;
        }
    }
    m.try_inverse()
        .ok_or_else(|| Error::Internal("forest matrix is singular".into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::build_reweighted;

    const TOL: f64 = 1e-9;

    fn cycle2() -> DirectedGraph {
        DirectedGraph::from_unweighted(2, &[(0, 1), (1, 0)]).unwrap()
    }

    fn cycle3() -> DirectedGraph {
        DirectedGraph::from_unweighted(3, &[(0, 1), (1, 2), (2, 0)]).unwrap()
    }

    // Geometric series for the directed 3-cycle: Pi = k (I + 0.85 P + 0.7225 P^2).
    fn cycle3_pi(row: usize, col: usize) -> f64 {
        let k = 0.15 / (1.0 - 0.85f64.powi(3));
        match (col + 3 - row) % 3 {
            0 => k,
            1 => k * 0.85,
            _ => k * 0.7225,
        }
    }

    #[test]
    fn two_cycle_closed_form() {
        let pi = compute_pi(&cycle2(), 0.15, DEFAULT_DENSE_CAP).unwrap();
        let c = 0.15 / (1.0 - 0.85f64 * 0.85);
        assert!((pi.get(0, 0) - c).abs() < TOL);
        assert!((pi.get(0, 1) - c * 0.85).abs() < TOL);
        assert!((pi.get(0, 0) - 0.540_540_5).abs() < 1e-7);
        assert!((pi.get(1, 0) - 0.459_459_5).abs() < 1e-7);
    }

    #[test]
    fn three_cycle_matches_series() {
        let pi = compute_pi(&cycle3(), 0.15, DEFAULT_DENSE_CAP).unwrap();
        for r in 0..3 {
            for c in 0..3 {
                assert!((pi.get(r, c) - cycle3_pi(r, c)).abs() < TOL);
            }
        }
        assert!((pi.get(1, 0) - 0.28086).abs() < 1e-5);
        assert!((pi.get(2, 0) - 0.33042).abs() < 1e-5);
        assert!(pi.max_row_sum_drift() < TOL);
    }

    #[test]
    fn size_cap_is_enforced() {
        assert!(matches!(
            compute_pi(&cycle3(), 0.15, 2),
            Err(Error::TooLarge { nodes: 3, cap: 2 })
        ));
    }

    #[test]
    fn pagerank_satisfies_fixed_point() {
        let g = DirectedGraph::from_edges(
            4,
            &[(0, 1, 1.0), (0, 2, 2.0), (1, 2, 1.0), (2, 0, 1.0), (2, 3, 0.5), (3, 1, 1.0)],
        )
        .unwrap();
        let jump = vec![0.1, 0.2, 0.3, 0.4];
        let pi = compute_pi_with_jump(&g, 0.2, jump.clone(), DEFAULT_DENSE_CAP).unwrap();
        let scores = pagerank_vector(&pi);
        for c in 0..4 {
            let walk: f64 = (0..4).map(|u| scores[u] * g.transition(u, c)).sum();
            assert!((scores[c] - (0.8 * walk + 0.2 * jump[c])).abs() < TOL);
        }
        assert!((scores.iter().sum::<f64>() - 1.0).abs() < TOL);
    }

    #[test]
    fn pagerank_examples() {
        let pi = compute_pi(&cycle3(), 0.15, DEFAULT_DENSE_CAP).unwrap();
        for x in pagerank_vector(&pi) {
            assert!((x - 1.0 / 3.0).abs() < TOL);
        }
        let pi2 =
            compute_pi_with_jump(&cycle2(), 0.15, vec![1.0, 0.0], DEFAULT_DENSE_CAP).unwrap();
        let scores = pagerank_vector(&pi2);
        assert!((scores[0] - 0.540_540_540_5).abs() < 1e-9);
        assert!((scores[1] - 0.459_459_459_5).abs() < 1e-9);
    }

    #[test]
    fn group_masses() {
        let pi = compute_pi(&cycle3(), 0.15, DEFAULT_DENSE_CAP).unwrap();
        let s = GroupPartition::new(3, &[2], None).unwrap();
        assert!((group_mass(&pagerank_vector(&pi), &s) - 1.0 / 3.0).abs() < TOL);

        let pi2 = compute_pi(&cycle2(), 0.15, DEFAULT_DENSE_CAP).unwrap();
        let s0 = GroupPartition::new(2, &[0], None).unwrap();
        let organic = normalized_ppr_mass(&pi2, 0, &s0);
        assert!((organic - (pi2.get(0, 0) - 0.15) / 0.85).abs() < TOL);
        assert!((organic - 0.459_459_459_5).abs() < 1e-9);
        let s1 = GroupPartition::new(2, &[1], None).unwrap();
        assert!((normalized_ppr_mass(&pi2, 0, &s1) - pi2.get(0, 1) / 0.85).abs() < TOL);
    }

    #[test]
    fn tau_on_three_cycle() {
        let g = cycle3();
        let pi = compute_pi(&g, 0.15, DEFAULT_DENSE_CAP).unwrap();
        let t = tau(&pi, &g, &Rewiring::new(0, 1, 2));
        let expected = 0.15 + 0.85 * (cycle3_pi(1, 0) - cycle3_pi(2, 0));
        assert!((t - expected).abs() < 1e-12);
        assert!((t - 0.10787).abs() < 1e-5);
        assert!((tau_from(0.15, 0.0, 0.3, 0.9) - 0.15).abs() < 1e-15);
    }

    #[test]
    fn three_cycle_gains() {
        let g = cycle3();
        let s = GroupPartition::new(3, &[2], None).unwrap();
        let pi = compute_pi(&g, 0.15, DEFAULT_DENSE_CAP).unwrap();
        let aux = AuxVectors::new(&pi, &s, Some(0));
        let r = Rewiring::new(0, 1, 2);
        let d = gain_pr(&aux, &pi, &g, &r);
        let fresh = compute_pi(&g.rewired(&r).unwrap(), 0.15, DEFAULT_DENSE_CAP).unwrap();
        let after = group_mass(&pagerank_vector(&fresh), &s);
        assert!((d - (after - 1.0 / 3.0)).abs() < TOL);
        assert!((d - 0.153_153).abs() < 1e-6);
        assert!((after - 0.486_486).abs() < 1e-6);

        let dv = gain_ppr(&aux, &pi, &g, &r).unwrap();
        assert!((dv - (ppr_mass(&fresh, 0, &s) - ppr_mass(&pi, 0, &s))).abs() < TOL);
        assert!((dv - 0.178_604).abs() < 1e-6);
    }

    #[test]
    fn gain_ppr_needs_source_row() {
        let g = cycle3();
        let s = GroupPartition::new(3, &[2], None).unwrap();
        let pi = compute_pi(&g, 0.15, DEFAULT_DENSE_CAP).unwrap();
        let aux = AuxVectors::new(&pi, &s, None);
        assert!(gain_ppr(&aux, &pi, &g, &Rewiring::new(0, 1, 2)).is_err());
    }

    #[test]
    fn update_matches_fresh_and_reverses() {
        let g = cycle3();
        let r = Rewiring::new(0, 1, 2);
        let pi = compute_pi(&g, 0.15, DEFAULT_DENSE_CAP).unwrap();
        let updated = sherman_morrison_update(&pi, &g, &r).unwrap();
        let g2 = g.rewired(&r).unwrap();
        let fresh = compute_pi(&g2, 0.15, DEFAULT_DENSE_CAP).unwrap();
        assert!((updated.matrix() - fresh.matrix()).amax() < 1e-10);
        assert!(updated.max_row_sum_drift() < TOL);
        let back = sherman_morrison_update(&updated, &g2, &r.reversed()).unwrap();
        assert!((back.matrix() - pi.matrix()).amax() < TOL);
        assert!(sherman_morrison_update(&pi, &g, &Rewiring::new(0, 1, 1)).is_err());
    }

    #[test]
    fn forest_matrix_identity_on_weighted_graph() {
        let g = DirectedGraph::from_edges(
            4,
            &[(0, 1, 1.0), (0, 2, 2.0), (1, 2, 1.0), (2, 0, 1.0), (2, 3, 0.5), (3, 1, 1.0)],
        )
        .unwrap();
        for alpha in [0.05, 0.15, 0.5, 0.85] {
            let pi = compute_pi(&g, alpha, DEFAULT_DENSE_CAP).unwrap();
            let omega = forest_matrix(&build_reweighted(&g, alpha).unwrap()).unwrap();
            assert!((pi.matrix() - omega).amax() < TOL);
        }
    }

    #[test]
    fn rejects_bad_jump() {
        assert!(compute_pi_with_jump(&cycle2(), 0.15, vec![0.5], DEFAULT_DENSE_CAP).is_err());
        assert!(compute_pi_with_jump(&cycle2(), 0.15, vec![0.7, 0.7], DEFAULT_DENSE_CAP).is_err());
        assert!(compute_pi(&cycle2(), 1.2, DEFAULT_DENSE_CAP).is_err());
    }
}
