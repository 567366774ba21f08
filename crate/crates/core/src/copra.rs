//! Label-propagation community detection with hard labels.
//!
//! Every node starts with its own label. Updates are synchronous: each node
//! takes the label with the largest support among its neighbours, support
//! being a count (unweighted) or a sum of link weights (weighted). Several
//! seeded runs are made and the partition with the highest modularity wins.

use std::collections::BTreeMap;

use rand::Rng;
use thiserror::Error;

use crate::graph::{Graph, Partition};
use crate::metrics::modularity;
use crate::seed;

/// Supports within this relative distance of the maximum count as tied, so
/// that rescaling all weights cannot change which labels tie.
const TIE_EPS: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CopraError {
    #[error("v_max = {0} not supported; only hard labels (v_max = 1) are implemented")]
    OverlapUnsupported(usize),
    #[error("{0} must be at least 1")]
    ZeroCount(&'static str),
}

#[derive(Debug, Clone, PartialEq)]
pub struct CopraConfig {
    pub runs: usize,
    pub max_iters: usize,
    pub seed: u64,
    pub weighted: bool,
    pub v_max: usize,
}

impl Default for CopraConfig {
    fn default() -> Self {
        Self { runs: 10, max_iters: 100, seed: 0, weighted: false, v_max: 1 }
    }
}

impl CopraConfig {
    pub fn weighted(seed: u64) -> Self {
        Self { seed, weighted: true, ..Self::default() }
    }

    pub fn unweighted(seed: u64) -> Self {
        Self { seed, ..Self::default() }
    }

    fn validate(&self) -> Result<(), CopraError> {
        if self.v_max != 1 {
            return Err(CopraError::OverlapUnsupported(self.v_max));
        }
        if self.runs == 0 {
            return Err(CopraError::ZeroCount("runs"));
        }
        if self.max_iters == 0 {
            return Err(CopraError::ZeroCount("max_iters"));
        }
        Ok(())
    }
}

/// One label per node plus the number of updates applied so far.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelState {
    pub labels: Vec<usize>,
    pub iteration: usize,
}

impl LabelState {
    pub fn unique(n: usize) -> Self {
        Self { labels: (0..n).collect(), iteration: 0 }
    }

    fn counts(&self) -> BTreeMap<usize, usize> {
        let mut out = BTreeMap::new();
        for &l in &self.labels {
            *out.entry(l).or_default() += 1;
        }
        out
    }
}

/// Scratch space for tallying neighbour labels.
struct Tally {
    support: Vec<f64>,
    touched: Vec<usize>,
}

impl Tally {
    fn new(labels: usize) -> Self {
        Self { support: vec![0.0; labels], touched: Vec::new() }
    }

    /// Labels of maximal support around `v`, in order of first appearance.
    fn best(&mut self, g: &Graph, labels: &[usize], v: usize, weighted: bool, out: &mut Vec<usize>) {
        out.clear();
        for &(u, w) in g.neighbors(v) {
            let l = labels[u];
            if self.support[l] == 0.0 {
                self.touched.push(l);
            }
            self.support[l] += if weighted { w } else { 1.0 };
        }
        let max = self.touched.iter().map(|&l| self.support[l]).fold(0.0, f64::max);
        for &l in &self.touched {
            if self.support[l] >= max * (1.0 - TIE_EPS) {
                out.push(l);
            }
        }
        for &l in &self.touched {
            self.support[l] = 0.0;
        }
        self.touched.clear();
    }
}

fn step_with(g: &Graph, state: &LabelState, weighted: bool, rng: &mut impl Rng, tally: &mut Tally) -> (LabelState, bool) {
    let mut next = Vec::with_capacity(state.labels.len());
    let mut stable = true;
    let mut best = Vec::new();
    for v in 0..g.node_count() {
        let current = state.labels[v];
        tally.best(g, &state.labels, v, weighted, &mut best);
        let label = if best.is_empty() || best.contains(&current) {
            current
        } else {
            stable = false;
            if best.len() == 1 {
                best[0]
            } else {
                best[rng.gen_range(0..best.len())]
            }
        };
        next.push(label);
    }
    (LabelState { labels: next, iteration: state.iteration + 1 }, stable)
}

/// One synchronous update. A node whose current label already has maximal
/// support keeps it; otherwise ties among maximal labels are broken
/// uniformly at random. Isolated nodes keep their label.
pub fn propagate_step(g: &Graph, state: &LabelState, cfg: &CopraConfig, rng: &mut impl Rng) -> LabelState {
    let labels = state.labels.iter().max().map_or(0, |&m| m + 1);
    step_with(g, state, cfg.weighted, rng, &mut Tally::new(labels)).0
}

/// Splits each label class into its connected components and numbers the
/// resulting communities densely.
fn components_by_label(g: &Graph, labels: &[usize]) -> Partition {
    let n = g.node_count();
    let mut comp = vec![usize::MAX; n];
    let mut next = 0;
    let mut stack = Vec::new();
    for s in 0..n {
        if comp[s] != usize::MAX {
            continue;
        }
        comp[s] = next;
        stack.push(s);
        while let Some(v) = stack.pop() {
            for &(u, _) in g.neighbors(v) {
                if comp[u] == usize::MAX && labels[u] == labels[v] {
                    comp[u] = next;
                    stack.push(u);
                }
            }
        }
        next += 1;
    }
    Partition::new(comp).expect("component ids are dense")
}

/// Runs label propagation to termination: the per-label counts are unchanged
/// across an iteration and every node holds a label of maximal support. Falls
/// back to the last state after `max_iters` updates.
pub fn run_once(g: &Graph, cfg: &CopraConfig, rng: &mut impl Rng) -> Partition {
    let n = g.node_count();
    let mut state = LabelState::unique(n);
    let mut tally = Tally::new(n);
    let mut counts = state.counts();
    while state.iteration < cfg.max_iters {
        let (next, stable) = step_with(g, &state, cfg.weighted, rng, &mut tally);
        let next_counts = next.counts();
        let unchanged = next_counts == counts;
        state = next;
        counts = next_counts;
        if unchanged && stable {
            break;
        }
    }
    components_by_label(g, &state.labels)
}

/// Best of `cfg.runs` seeded runs by modularity; run `r` uses seed
/// `derive(cfg.seed, [r])`. Ties go to the earlier run.
pub fn detect(g: &Graph, cfg: &CopraConfig) -> Result<Partition, CopraError> {
    cfg.validate()?;
    let unit;
    let graph = if cfg.weighted {
        g
    } else {
        unit = g.with_unit_weights();
        &unit
    };
    if graph.edge_count() == 0 {
        return Ok(Partition::singletons(graph.node_count()));
    }
    let mut best: Option<(f64, Partition)> = None;
    for r in 0..cfg.runs {
        let mut rng = seed::rng(seed::derive(cfg.seed, &[r as u64]));
        let p = run_once(graph, cfg, &mut rng);
        let q = modularity(graph, &p).expect("graph has edges");
        let better = match &best {
            None => true,
            Some((bq, _)) => q > bq + TIE_EPS * bq.abs().max(1e-12),
        };
        if better {
            best = Some((q, p));
        }
    }
    Ok(best.expect("runs >= 1").1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::fixtures::*;

    #[test]
    fn strict_majority_wins() {
        // node 0 sees labels A, A, B
        let g = star(&[1.0, 1.0, 1.0]);
        let state = LabelState { labels: vec![9, 1, 1, 2], iteration: 0 };
        let mut rng = seed::rng(0);
        let next = propagate_step(&g, &state, &CopraConfig::default(), &mut rng);
        assert_eq!(next.labels[0], 1);
        assert_eq!(next.iteration, 1);
    }

    #[test]
    fn weights_decide_support() {
        // node 0 sees A over a light link and B over a heavy one
        let g = star(&[1.0, 5.0]);
        let state = LabelState { labels: vec![7, 1, 2], iteration: 0 };
        let weighted = CopraConfig { weighted: true, ..CopraConfig::default() };
        let mut rng = seed::rng(0);
        assert_eq!(propagate_step(&g, &state, &weighted, &mut rng).labels[0], 2);

        let mut seen = [0usize; 3];
        for s in 0..200 {
            let mut rng = seed::rng(s);
            let l = propagate_step(&g, &state, &CopraConfig::default(), &mut rng).labels[0];
            seen[l] += 1;
        }
        assert_eq!(seen[0], 0);
        assert!(seen[1] > 60 && seen[2] > 60, "{seen:?}");
    }

    #[test]
    fn consensus_is_a_fixed_point() {
        let g = two_triangles_bridged(1.0);
        let state = LabelState { labels: vec![4; 6], iteration: 3 };
        let mut rng = seed::rng(0);
        assert_eq!(propagate_step(&g, &state, &CopraConfig::default(), &mut rng).labels, state.labels);
    }

    #[test]
    fn disjoint_triangles_recovered() {
        // Monte Carlo over seeds
        let g = two_triangles();
        let truth = clique_partition();
        let hits = (0..100)
            .filter(|&s| run_once(&g, &CopraConfig::default(), &mut seed::rng(s)) == truth)
            .count();
        assert!(hits >= 95, "{hits}");
    }

    #[test]
    fn trivial_graphs() {
        let single = Graph::edgeless(1);
        assert_eq!(run_once(&single, &CopraConfig::default(), &mut seed::rng(0)), Partition::single(1));
        let k5 = complete(5);
        let hits = (0..100).filter(|&s| run_once(&k5, &CopraConfig::default(), &mut seed::rng(s)).community_count() == 1).count();
        assert!(hits >= 95, "{hits}");
    }

    #[test]
    fn label_split_by_connectivity() {
        let g = Graph::from_edges(4, [(0, 1, 1.0), (2, 3, 1.0)]).unwrap();
        let p = components_by_label(&g, &[5, 5, 5, 5]);
        assert_eq!(p.assignment(), &[0, 0, 1, 1]);
    }

    #[test]
    fn detect_examples() {
        let g = two_triangles_bridged(1.0);
        let cfg = CopraConfig { runs: 1, seed: 21, ..CopraConfig::default() };
        let once = run_once(&g.with_unit_weights(), &cfg, &mut seed::rng(seed::derive(21, &[0])));
        assert_eq!(detect(&g, &cfg).unwrap(), once);

        // exhaustive oracle: the clique split maximises modularity
        let parts = all_partitions(6);
        assert_eq!(parts.len(), 203);
        let best = parts
            .iter()
            .max_by(|a, b| modularity(&g, a).unwrap().partial_cmp(&modularity(&g, b).unwrap()).unwrap())
            .unwrap();
        assert_eq!(best, &clique_partition());
        let ten = CopraConfig { runs: 10, seed: 5, ..CopraConfig::default() };
        assert_eq!(detect(&g, &ten).unwrap(), clique_partition());

        let unit = g.with_unit_weights();
        let w = CopraConfig { weighted: true, ..ten.clone() };
        assert_eq!(detect(&unit, &w).unwrap(), detect(&unit, &ten).unwrap());

        assert_eq!(detect(&Graph::edgeless(3), &ten).unwrap(), Partition::singletons(3));
        assert!(detect(&g, &CopraConfig { v_max: 2, ..CopraConfig::default() }).is_err());
        assert!(detect(&g, &CopraConfig { runs: 0, ..CopraConfig::default() }).is_err());
    }
}
