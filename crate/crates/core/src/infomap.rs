//! Two-level map equation and a greedy optimiser for it.
//!
//! On an undirected graph the random walk's stationary visit rate of node `v`
//! is `strength(v) / 2W`. For a partition into modules, the code length is
//!
//! ```text
//! L = q H(Q) + sum_m p_m H(P_m)
//!   = plogp(q) - 2 sum_m plogp(q_m) - sum_v plogp(p_v) + sum_m plogp(q_m + p(m))
//! ```
//!
//! with `q_m` the flow leaving module `m` and `p(m)` the visit rate of its
//! nodes. The optimiser moves nodes greedily between neighbouring modules,
//! contracts modules into super-nodes when no move helps, and repeats.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use thiserror::Error;

use crate::graph::{Graph, Partition};
use crate::seed;

/// Candidate moves whose code-length changes differ by less than this are
/// treated as equal; the first one in adjacency order wins.
const TIE_EPS: f64 = 1e-12;
const MAX_SWEEPS: usize = 1000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum InfomapError {
    #[error("visit rates are undefined on a graph without edges")]
    Edgeless,
    #[error("invalid configuration: {0}")]
    Config(&'static str),
}

#[derive(Debug, Clone, PartialEq)]
pub struct InfomapConfig {
    pub seed: u64,
    pub outer_passes: usize,
    /// Minimum code-length decrease, in bits, for a move to be taken.
    pub move_tolerance: f64,
    pub weighted: bool,
}

impl Default for InfomapConfig {
    fn default() -> Self {
        Self { seed: 0, outer_passes: 10, move_tolerance: 1e-10, weighted: false }
    }
}

impl InfomapConfig {
    pub fn weighted(seed: u64) -> Self {
        Self { seed, weighted: true, ..Self::default() }
    }

    pub fn unweighted(seed: u64) -> Self {
        Self { seed, ..Self::default() }
    }
}

#[inline]
fn plogp(x: f64) -> f64 {
    if x > 0.0 {
        x * x.log2()
    } else {
        0.0
    }
}

/// Stationary visit rates `strength(v) / 2W`.
pub fn visit_rates(g: &Graph) -> Result<Vec<f64>, InfomapError> {
    if g.edge_count() == 0 {
        return Err(InfomapError::Edgeless);
    }
    let two_w = 2.0 * g.total_weight();
    Ok((0..g.node_count()).map(|v| g.strength(v) / two_w).collect())
}

/// Two-level code length of `p` in bits. Zero on an edgeless graph.
pub fn map_equation(g: &Graph, p: &Partition) -> f64 {
    let Ok(rates) = visit_rates(g) else {
        return 0.0;
    };
    let two_w = 2.0 * g.total_weight();
    let k = p.community_count();
    let mut exit = vec![0.0; k];
    let mut flow = vec![0.0; k];
    for (v, &r) in rates.iter().enumerate() {
        flow[p.community_of(v)] += r;
    }
    for &(u, v, w) in g.edges() {
        let (cu, cv) = (p.community_of(u), p.community_of(v));
        if cu != cv {
            exit[cu] += w / two_w;
            exit[cv] += w / two_w;
        }
    }
    let q: f64 = exit.iter().sum();
    let node_term: f64 = rates.iter().map(|&r| plogp(r)).sum();
    let exit_term: f64 = exit.iter().map(|&e| plogp(e)).sum();
    let module_term: f64 = exit.iter().zip(&flow).map(|(&e, &f)| plogp(e + f)).sum();
    (plogp(q) - 2.0 * exit_term - node_term + module_term).max(0.0)
}

/// A (possibly contracted) graph in flow units.
struct FlowGraph {
    flow: Vec<f64>,
    exit: Vec<f64>,
    /// Neighbour and flow on the link, one direction; no self links.
    adj: Vec<Vec<(usize, f64)>>,
}

impl FlowGraph {
    fn from_graph(g: &Graph) -> Self {
        let two_w = 2.0 * g.total_weight();
        let flow: Vec<f64> = (0..g.node_count()).map(|v| g.strength(v) / two_w).collect();
        let adj = (0..g.node_count())
            .map(|v| g.neighbors(v).iter().map(|&(u, w)| (u, w / two_w)).collect())
            .collect();
        Self { exit: flow.clone(), flow, adj }
    }

    fn len(&self) -> usize {
        self.flow.len()
    }

    fn contract(&self, module: &[usize], count: usize, mflow: &[f64], mexit: &[f64]) -> FlowGraph {
        let mut links: Vec<BTreeMap<usize, f64>> = vec![BTreeMap::new(); count];
        for (x, nbrs) in self.adj.iter().enumerate() {
            let mx = module[x];
            for &(y, f) in nbrs {
                let my = module[y];
                if mx != my {
                    *links[mx].entry(my).or_default() += f;
                }
            }
        }
        FlowGraph {
            flow: mflow.to_vec(),
            exit: mexit.to_vec(),
            adj: links.into_iter().map(|m| m.into_iter().collect()).collect(),
        }
    }
}

struct Modules {
    of: Vec<usize>,
    flow: Vec<f64>,
    exit: Vec<f64>,
    q: f64,
}

impl Modules {
    /// Code-length change for moving a node with (`flow_x`, `exit_x`) from
    /// module `a`, to which it links with flow `f_a`, into module `b`.
    fn delta(&self, flow_x: f64, exit_x: f64, a: usize, f_a: f64, b: usize, f_b: f64) -> f64 {
        let (ea, eb) = (self.exit[a], self.exit[b]);
        let (fa, fb) = (self.flow[a], self.flow[b]);
        let ea2 = (ea - exit_x + 2.0 * f_a).max(0.0);
        let eb2 = (eb + exit_x - 2.0 * f_b).max(0.0);
        let fa2 = (fa - flow_x).max(0.0);
        let fb2 = fb + flow_x;
        let q2 = (self.q - ea - eb + ea2 + eb2).max(0.0);
        plogp(q2) - plogp(self.q) - 2.0 * (plogp(ea2) + plogp(eb2) - plogp(ea) - plogp(eb))
            + plogp(ea2 + fa2)
            + plogp(eb2 + fb2)
            - plogp(ea + fa)
            - plogp(eb + fb)
    }

    fn apply(&mut self, flow_x: f64, exit_x: f64, a: usize, f_a: f64, b: usize, f_b: f64, x: usize) {
        let ea2 = (self.exit[a] - exit_x + 2.0 * f_a).max(0.0);
        let eb2 = (self.exit[b] + exit_x - 2.0 * f_b).max(0.0);
        self.q = (self.q - self.exit[a] - self.exit[b] + ea2 + eb2).max(0.0);
        self.exit[a] = ea2;
        self.exit[b] = eb2;
        self.flow[a] = (self.flow[a] - flow_x).max(0.0);
        self.flow[b] += flow_x;
        self.of[x] = b;
    }
}

/// Greedy node moves on one level until a full sweep changes nothing.
/// Returns the dense module of every node, the module count, and the module
/// flows and exits.
fn optimize_level(fg: &FlowGraph, tolerance: f64, rng: &mut seed::Rng) -> (Vec<usize>, usize, Vec<f64>, Vec<f64>) {
    let n = fg.len();
    let mut m = Modules { of: (0..n).collect(), flow: fg.flow.clone(), exit: fg.exit.clone(), q: fg.exit.iter().sum() };
    let mut link = vec![0.0; n];
    let mut touched: Vec<usize> = Vec::new();
    let mut order: Vec<usize> = (0..n).collect();
    for _ in 0..MAX_SWEEPS {
        order.shuffle(rng);
        let mut moved = false;
        for &x in &order {
            let a = m.of[x];
            for &(y, f) in &fg.adj[x] {
                let my = m.of[y];
                if link[my] == 0.0 && !touched.contains(&my) {
                    touched.push(my);
                }
                link[my] += f;
            }
            let f_a = link[a];
            let mut best = (0.0, usize::MAX);
            for &b in &touched {
                if b == a {
                    continue;
                }
                let d = m.delta(fg.flow[x], fg.exit[x], a, f_a, b, link[b]);
                if best.1 == usize::MAX || d < best.0 - TIE_EPS {
                    best = (d, b);
                }
            }
            if best.1 != usize::MAX && best.0 < -tolerance {
                let b = best.1;
                m.apply(fg.flow[x], fg.exit[x], a, f_a, b, link[b], x);
                moved = true;
            }
            for &t in &touched {
                link[t] = 0.0;
            }
            touched.clear();
        }
        if !moved {
            break;
        }
    }
    // renumber densely in order of first appearance
    let mut dense = vec![usize::MAX; n];
    let mut count = 0;
    let mut flow = Vec::new();
    let mut exit = Vec::new();
    let of = m
        .of
        .iter()
        .map(|&old| {
            if dense[old] == usize::MAX {
                dense[old] = count;
                count += 1;
                flow.push(m.flow[old]);
                exit.push(m.exit[old]);
            }
            dense[old]
        })
        .collect();
    (of, count, flow, exit)
}

fn greedy(g: &Graph, tolerance: f64, rng: &mut seed::Rng) -> Partition {
    let mut fg = FlowGraph::from_graph(g);
    let mut node_to_level: Vec<usize> = (0..g.node_count()).collect();
    loop {
        let (module, count, flow, exit) = optimize_level(&fg, tolerance, rng);
        if count == fg.len() {
            break;
        }
        for x in node_to_level.iter_mut() {
            *x = module[*x];
        }
        fg = fg.contract(&module, count, &flow, &exit);
    }
    Partition::from_labels(&node_to_level)
}

/// Minimises the map equation with `cfg.outer_passes` seeded restarts; restart
/// `r` uses seed `derive(cfg.seed, [r])` and ties go to the earlier restart.
/// Edgeless graphs yield singletons.
pub fn detect(g: &Graph, cfg: &InfomapConfig) -> Result<Partition, InfomapError> {
    if cfg.outer_passes == 0 {
        return Err(InfomapError::Config("outer_passes must be at least 1"));
    }
    if !(cfg.move_tolerance >= 0.0) {
        return Err(InfomapError::Config("move_tolerance must be non-negative"));
    }
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
    for r in 0..cfg.outer_passes {
        let mut rng = seed::rng(seed::derive(cfg.seed, &[r as u64]));
        let p = greedy(graph, cfg.move_tolerance, &mut rng);
        let l = map_equation(graph, &p);
        if best.as_ref().is_none_or(|(bl, _)| l < bl - TIE_EPS) {
            best = Some((l, p));
        }
    }
    Ok(best.expect("outer_passes >= 1").1)
}
