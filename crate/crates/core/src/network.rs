//! Friendship graphs, partner selection and reputation.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::IndexedRandom;
use rand::Rng;

use crate::config::Topology;
use crate::error::{Result, SimError};
use crate::model::{AgentId, TrustMatrix};

/// Baseline selection weight toward non-friends.
pub const NON_FRIEND_REACH: f64 = 0.05;

/// Influence edges lighter than this are dropped from the exported network.
pub const INFLUENCE_PRUNE_BELOW: f64 = 0.05;

/// Undirected simple graph on nodes `0..n`. Edges are stored as `(low, high)`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Graph {
    n: usize,
    edges: BTreeMap<(usize, usize), Option<f64>>,
}

impl Graph {
    pub fn new(n: usize) -> Self {
        Self {
            n,
            edges: BTreeMap::new(),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    fn key(a: usize, b: usize) -> (usize, usize) {
        if a < b {
            (a, b)
        } else {
            (b, a)
        }
    }

    /// Adds an edge. Returns `false` for self-loops, out-of-range nodes and duplicates.
    pub fn add_edge(&mut self, a: usize, b: usize, weight: Option<f64>) -> bool {
        if a == b || a >= self.n || b >= self.n {
            return false;
        }
        match self.edges.entry(Self::key(a, b)) {
            std::collections::btree_map::Entry::Occupied(_) => false,
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(weight);
                true
            }
        }
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        self.edges.contains_key(&Self::key(a, b))
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Edges in lexicographic `(source, target)` order with `source < target`.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, Option<f64>)> + '_ {
        self.edges.iter().map(|(&(a, b), &w)| (a, b, w))
    }

    pub fn degrees(&self) -> Vec<usize> {
        let mut d = vec![0; self.n];
        for &(a, b) in self.edges.keys() {
            d[a] += 1;
            d[b] += 1;
        }
        d
    }

    pub fn is_connected(&self) -> bool {
        if self.n <= 1 {
            return true;
        }
        let mut adj = vec![Vec::new(); self.n];
        for &(a, b) in self.edges.keys() {
            adj[a].push(b);
            adj[b].push(a);
        }
        let mut seen = vec![false; self.n];
        let mut stack = vec![0];
        seen[0] = true;
        let mut count = 1;
        while let Some(v) = stack.pop() {
            for &w in &adj[v] {
                if !seen[w] {
                    seen[w] = true;
                    count += 1;
                    stack.push(w);
                }
            }
        }
        count == self.n
    }
}

/// Builds the friendship graph for `topology` over `n` nodes.
pub fn generate_topology<R: Rng + ?Sized>(
    topology: Topology,
    n: usize,
    rng: &mut R,
) -> Result<Graph> {
    if n == 0 {
        return Err(SimError::Topology("population must be nonempty".into()));
    }
    let mut g = Graph::new(n);
    match topology {
        Topology::Complete => {
            for a in 0..n {
                for b in a + 1..n {
                    g.add_edge(a, b, None);
                }
            }
        }
        Topology::Tree { branching } => {
            if branching == 0 {
                return Err(SimError::Topology("tree branching must be >= 1".into()));
            }
            for v in 1..n {
                g.add_edge((v - 1) / branching, v, None);
            }
        }
        Topology::PreferentialAttachment { m } => {
            if m == 0 || m >= n {
                return Err(SimError::Topology(format!(
                    "preferential attachment needs 1 <= m < n, got m={m}, n={n}"
                )));
            }
            for a in 0..=m {
                for b in a + 1..=m {
                    g.add_edge(a, b, None);
                }
            }
            // Each node appears once per incident edge, so a uniform pick is
            // degree-proportional. Rejecting already chosen targets samples
            // without replacement in proportion to the remaining degrees.
            let mut endpoints: Vec<usize> =
                Vec::with_capacity(2 * (m * (m + 1) / 2 + (n - m - 1) * m));
            for (a, b, _) in g.edges() {
                endpoints.push(a);
                endpoints.push(b);
            }
            let mut targets = BTreeSet::new();
            for v in m + 1..n {
                targets.clear();
                while targets.len() < m {
                    let &t = endpoints.choose(rng).expect("seed clique has edges");
                    targets.insert(t);
                }
                for &t in &targets {
                    g.add_edge(t, v, None);
                    endpoints.push(t);
                    endpoints.push(v);
                }
            }
        }
    }
    Ok(g)
}

/// Picks `min(k, n-1)` distinct partners for `agent`, each draw weighted by
/// `(ε + friend) · propensity` over the candidates not yet chosen.
///
/// `propensities[j]` is `agent`'s learned multiplier toward `j`.
pub fn select_partners<R: Rng + ?Sized>(
    agent: AgentId,
    graph: &Graph,
    propensities: &[f64],
    k: usize,
    rng: &mut R,
) -> Vec<AgentId> {
    let n = graph.n();
    let mut candidates: Vec<(AgentId, f64)> = (0..n)
        .filter(|&j| j != agent)
        .map(|j| {
            let friend = if graph.has_edge(agent, j) { 1.0 } else { 0.0 };
            (j, (NON_FRIEND_REACH + friend) * propensities[j])
        })
        .collect();
    let picks = k.min(candidates.len());
    let mut chosen = Vec::with_capacity(picks);
    for _ in 0..picks {
        let total: f64 = candidates.iter().map(|&(_, w)| w).sum();
        let u: f64 = rng.random::<f64>() * total;
        let mut acc = 0.0;
        let mut idx = candidates.len() - 1;
        for (pos, &(_, w)) in candidates.iter().enumerate() {
            acc += w;
            if u < acc {
                idx = pos;
                break;
            }
        }
        chosen.push(candidates.remove(idx).0);
    }
    chosen
}

/// Mean incoming trust per agent. A lone agent has reputation 1.0.
pub fn compute_reputation(trust: &TrustMatrix) -> Vec<f64> {
    let n = trust.n();
    if n < 2 {
        return vec![1.0; n];
    }
    (0..n)
        .map(|j| {
            let sum: f64 = (0..n).filter(|&i| i != j).map(|i| trust.get(i, j)).sum();
            sum / (n - 1) as f64
        })
        .collect()
}

/// Weighted undirected view of mutual trust, with node reputations.
#[derive(Debug, Clone, PartialEq)]
pub struct InfluenceNetwork {
    pub graph: Graph,
    pub reputations: Vec<f64>,
}

/// Edge weight is the mean of both trust directions; light edges are pruned.
pub fn influence_network(trust: &TrustMatrix, reputations: &[f64]) -> InfluenceNetwork {
    let n = trust.n();
    let mut graph = Graph::new(n);
    for a in 0..n {
        for b in a + 1..n {
            let w = (trust.get(a, b) + trust.get(b, a)) / 2.0;
            if w >= INFLUENCE_PRUNE_BELOW {
                graph.add_edge(a, b, Some(w));
            }
        }
    }
    InfluenceNetwork {
        graph,
        reputations: reputations.to_vec(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::derive_stream;
    use proptest::prelude::*;

    fn stream() -> crate::rng::Stream {
        derive_stream(7, "topology")
    }

    #[test]
    fn complete_graph_edge_count() {
        let g = generate_topology(Topology::Complete, 4, &mut stream()).unwrap();
        assert_eq!(g.edge_count(), 6);
    }

    #[test]
    fn attachment_with_m_four_on_five_nodes_is_k5() {
        let g =
            generate_topology(Topology::PreferentialAttachment { m: 4 }, 5, &mut stream()).unwrap();
        assert_eq!(g.edge_count(), 10);
    }

    #[test]
    fn attachment_edge_count_by_construction() {
        let g = generate_topology(
            Topology::PreferentialAttachment { m: 2 },
            100,
            &mut stream(),
        )
        .unwrap();
        // Brute-force recount over all pairs.
        let mut count = 0;
        for a in 0..100 {
            for b in a + 1..100 {
                count += usize::from(g.has_edge(a, b));
            }
        }
        assert_eq!(count, 3 + 97 * 2);
        assert!(g.is_connected());
    }

    #[test]
    fn attachment_rejects_m_at_least_n() {
        assert!(
            generate_topology(Topology::PreferentialAttachment { m: 5 }, 5, &mut stream()).is_err()
        );
        assert!(
            generate_topology(Topology::PreferentialAttachment { m: 0 }, 5, &mut stream()).is_err()
        );
    }

    #[test]
    fn tree_is_breadth_first() {
        let g = generate_topology(Topology::Tree { branching: 2 }, 7, &mut stream()).unwrap();
        let edges: Vec<_> = g.edges().map(|(a, b, _)| (a, b)).collect();
        assert_eq!(edges, [(0, 1), (0, 2), (1, 3), (1, 4), (2, 5), (2, 6)]);
    }

    #[test]
    fn attachment_grows_hubs() {
        // Max degree exceeding m is near certain at n = 20; allow no failures
        // over 100 seeds since a hubless outcome needs every newcomer to
        // avoid every existing high-degree node.
        let mut failures = 0;
        for seed in 0..100 {
            let mut rng = derive_stream(seed, "topology");
            let g =
                generate_topology(Topology::PreferentialAttachment { m: 2 }, 20, &mut rng).unwrap();
            let degrees = g.degrees();
            assert_eq!(degrees.iter().sum::<usize>(), 2 * g.edge_count());
            assert!(g.is_connected());
            failures += usize::from(*degrees.iter().max().unwrap() <= 2);
        }
        assert_eq!(failures, 0);
    }

    #[test]
    fn partners_with_two_agents() {
        let g = Graph::new(2);
        for k in 1..4 {
            assert_eq!(select_partners(0, &g, &[1.0, 1.0], k, &mut stream()), [1]);
        }
    }

    #[test]
    fn lone_agent_has_no_partners() {
        assert!(select_partners(0, &Graph::new(1), &[1.0], 3, &mut stream()).is_empty());
    }

    #[test]
    fn friendless_agent_still_reaches_others() {
        let mut g = Graph::new(4);
        g.add_edge(1, 2, None);
        let p = select_partners(0, &g, &[1.0; 4], 2, &mut stream());
        assert_eq!(p.len(), 2);
        assert!(p.iter().all(|&j| j != 0 && j < 4));
        assert_ne!(p[0], p[1]);
    }

    #[test]
    fn uniform_selection_frequencies() {
        let n = 10;
        let g = generate_topology(Topology::Complete, n, &mut stream()).unwrap();
        let props = vec![1.0; n];
        let mut rng = derive_stream(99, "loop");
        let draws = 100_000;
        let mut counts = vec![0usize; n];
        for _ in 0..draws {
            counts[select_partners(0, &g, &props, 1, &mut rng)[0]] += 1;
        }
        assert_eq!(counts[0], 0);
        let p = 1.0 / (n - 1) as f64;
        let expected = draws as f64 * p;
        let sd = (draws as f64 * p * (1.0 - p)).sqrt();
        let mut chi2 = 0.0;
        for &c in &counts[1..] {
            assert!(
                (c as f64 - expected).abs() <= 3.0 * sd,
                "count {c} vs {expected}"
            );
            chi2 += (c as f64 - expected).powi(2) / expected;
        }
        // 99.9th percentile of chi-square with 8 degrees of freedom.
        assert!(chi2 < 26.12, "chi2 = {chi2}");
    }

    #[test]
    fn friends_are_preferred() {
        let mut g = Graph::new(3);
        g.add_edge(0, 1, None);
        let mut rng = derive_stream(5, "loop");
        let hits = (0..10_000)
            .filter(|_| select_partners(0, &g, &[1.0; 3], 1, &mut rng)[0] == 1)
            .count();
        // Expected share 1.05 / 1.10.
        assert!(hits > 9_300, "{hits}");
    }

    #[test]
    fn reputation_examples() {
        let t = TrustMatrix::from_rows(&[vec![1.0, 1.0], vec![0.5, 1.0]]);
        assert_eq!(compute_reputation(&t), [0.5, 1.0]);
        let flat = TrustMatrix::new(4, 0.3);
        assert!(compute_reputation(&flat)
            .iter()
            .all(|&r| (r - 0.3).abs() < 1e-15));
        assert_eq!(compute_reputation(&TrustMatrix::new(1, 0.0)), [1.0]);
    }

    #[test]
    fn reputation_is_column_mean_without_diagonal() {
        let rows = vec![
            vec![1.0, 0.2, 0.9],
            vec![0.4, 1.0, 0.1],
            vec![0.7, 0.3, 1.0],
        ];
        let rep = compute_reputation(&TrustMatrix::from_rows(&rows));
        let expect = [(0.4 + 0.7) / 2.0, (0.2 + 0.3) / 2.0, (0.9 + 0.1) / 2.0];
        for (r, e) in rep.iter().zip(expect) {
            assert!((r - e).abs() < 1e-15);
        }
    }

    #[test]
    fn influence_weights_and_pruning() {
        let t = TrustMatrix::from_rows(&[
            vec![1.0, 0.8, 0.0, 0.3],
            vec![0.8, 1.0, 0.2, 0.2],
            vec![0.04, 0.2, 1.0, 0.2],
            vec![0.7, 0.2, 0.2, 1.0],
        ]);
        let net = influence_network(&t, &compute_reputation(&t));
        let w: BTreeMap<_, _> = net
            .graph
            .edges()
            .map(|(a, b, w)| ((a, b), w.unwrap()))
            .collect();
        assert!((w[&(0, 1)] - 0.8).abs() < 1e-15);
        assert!(!w.contains_key(&(0, 2)));
        assert!((w[&(0, 3)] - 0.5).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn generated_graphs_are_simple(n in 1usize..400, m in 1usize..6, b in 1usize..5, seed: u64) {
            let mut rng = derive_stream(seed, "topology");
            let mut kinds = vec![Topology::Complete, Topology::Tree { branching: b }];
            if m < n {
                kinds.push(Topology::PreferentialAttachment { m });
            }
            for kind in kinds {
                if matches!(kind, Topology::Complete) && n > 120 {
                    continue;
                }
                let g = generate_topology(kind, n, &mut rng).unwrap();
                for (a, c, _) in g.edges() {
                    prop_assert!(a < c && c < n);
                }
                prop_assert_eq!(g.degrees().iter().sum::<usize>(), 2 * g.edge_count());
                prop_assert!(g.is_connected());
            }
        }

        #[test]
        fn reputation_in_range_and_equivariant(
            vals in proptest::collection::vec(0.0..=1.0f64, 16),
            perm in Just((0..4usize).collect::<Vec<_>>()).prop_shuffle(),
        ) {
            let rows: Vec<Vec<f64>> = vals.chunks(4).map(<[f64]>::to_vec).collect();
            let t = TrustMatrix::from_rows(&rows);
            let rep = compute_reputation(&t);
            prop_assert!(rep.iter().all(|r| (0.0..=1.0).contains(r)));
            let permuted: Vec<Vec<f64>> = (0..4)
                .map(|i| (0..4).map(|j| rows[perm[i]][perm[j]]).collect())
                .collect();
            let rep_p = compute_reputation(&TrustMatrix::from_rows(&permuted));
            for i in 0..4 {
                prop_assert!((rep_p[i] - rep[perm[i]]).abs() < 1e-12);
            }
        }
    }
}
