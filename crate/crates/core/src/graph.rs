//! Undirected weighted simple graphs, hard partitions, and their text formats.

use std::collections::{HashMap, HashSet};
use std::fmt::Write as _;

use thiserror::Error;

/// Errors raised while building or parsing graphs and partitions.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum GraphError {
    #[error("line {line}: self-loop on node {node}")]
    SelfLoop { line: usize, node: usize },
    #[error("line {line}: duplicate edge {u}-{v}")]
    DuplicateEdge { line: usize, u: usize, v: usize },
    #[error("line {line}: edge weight must be positive and finite, got {weight}")]
    NonPositiveWeight { line: usize, weight: f64 },
    #[error("line {line}: {msg}")]
    Malformed { line: usize, msg: String },
    #[error("node {node} out of range for graph with {n} nodes")]
    NodeOutOfRange { node: usize, n: usize },
    #[error("graph must have at least one node")]
    Empty,
    #[error("invalid partition: {0}")]
    InvalidPartition(String),
}

/// An undirected simple graph with strictly positive edge weights and dense
/// node ids `0..n`.
#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    n: usize,
    /// Canonical edges, `u < v`, sorted ascending.
    edges: Vec<(usize, usize, f64)>,
    adj: Vec<Vec<(usize, f64)>>,
    strength: Vec<f64>,
}

impl Graph {
    /// Builds a graph from an arbitrary edge list, validating all invariants.
    pub fn from_edges<I>(n: usize, edges: I) -> Result<Self, GraphError>
    where
        I: IntoIterator<Item = (usize, usize, f64)>,
    {
        let mut builder = GraphBuilder::new(n);
        for (i, (u, v, w)) in edges.into_iter().enumerate() {
            builder.add(i + 1, u, v, w)?;
        }
        builder.finish()
    }

    /// A graph with `n` nodes and no edges.
    pub fn edgeless(n: usize) -> Self {
        Self::assemble(n, Vec::new())
    }

    fn assemble(n: usize, mut edges: Vec<(usize, usize, f64)>) -> Self {
        edges.sort_by_key(|e| (e.0, e.1));
        let mut adj = vec![Vec::new(); n];
        for &(u, v, w) in &edges {
            adj[u].push((v, w));
            adj[v].push((u, w));
        }
        for list in &mut adj {
            list.sort_by_key(|&(x, _)| x);
        }
        let strength = adj.iter().map(|l| l.iter().map(|&(_, w)| w).sum()).collect();
        Self { n, edges, adj, strength }
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Edges as `(u, v, w)` with `u < v`, in ascending order.
    pub fn edges(&self) -> &[(usize, usize, f64)] {
        &self.edges
    }

    /// Neighbours of `v` with the connecting weight, sorted by neighbour id.
    pub fn neighbors(&self, v: usize) -> &[(usize, f64)] {
        &self.adj[v]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adj[v].len()
    }

    pub fn strength(&self, v: usize) -> f64 {
        self.strength[v]
    }

    pub fn total_weight(&self) -> f64 {
        self.edges.iter().map(|e| e.2).sum()
    }

    /// Weight of edge `{u, v}`, if present.
    pub fn weight(&self, u: usize, v: usize) -> Option<f64> {
        let list = self.adj.get(u)?;
        list.binary_search_by_key(&v, |&(x, _)| x).ok().map(|i| list[i].1)
    }

    /// Degree and strength of `v`.
    pub fn node_stats(&self, v: usize) -> Result<(usize, f64), GraphError> {
        if v >= self.n {
            return Err(GraphError::NodeOutOfRange { node: v, n: self.n });
        }
        Ok((self.degree(v), self.strength(v)))
    }

    /// Same topology with every weight set to 1.
    pub fn with_unit_weights(&self) -> Graph {
        Self::assemble(self.n, self.edges.iter().map(|&(u, v, _)| (u, v, 1.0)).collect())
    }

    /// Same topology with every weight multiplied by `factor` (> 0).
    pub fn scaled(&self, factor: f64) -> Graph {
        assert!(factor > 0.0 && factor.is_finite(), "scale factor must be positive");
        Self::assemble(self.n, self.edges.iter().map(|&(u, v, w)| (u, v, w * factor)).collect())
    }

    /// Same topology with new weights, given in the order of [`Graph::edges`].
    pub fn with_weights(&self, weights: &[f64]) -> Result<Graph, GraphError> {
        assert_eq!(weights.len(), self.edges.len());
        Graph::from_edges(
            self.n,
            self.edges.iter().zip(weights).map(|(&(u, v, _), &w)| (u, v, w)),
        )
    }
}

struct GraphBuilder {
    n: usize,
    seen: HashSet<(usize, usize)>,
    edges: Vec<(usize, usize, f64)>,
}

impl GraphBuilder {
    fn new(n: usize) -> Self {
        Self { n, seen: HashSet::new(), edges: Vec::new() }
    }

    fn add(&mut self, line: usize, u: usize, v: usize, w: f64) -> Result<(), GraphError> {
        if u == v {
            return Err(GraphError::SelfLoop { line, node: u });
        }
        if !(w > 0.0 && w.is_finite()) {
            return Err(GraphError::NonPositiveWeight { line, weight: w });
        }
        let (a, b) = if u < v { (u, v) } else { (v, u) };
        if b >= self.n {
            return Err(GraphError::NodeOutOfRange { node: b, n: self.n });
        }
        if !self.seen.insert((a, b)) {
            return Err(GraphError::DuplicateEdge { line, u: a, v: b });
        }
        self.edges.push((a, b, w));
        Ok(())
    }

    fn finish(self) -> Result<Graph, GraphError> {
        if self.n == 0 {
            return Err(GraphError::Empty);
        }
        Ok(Graph::assemble(self.n, self.edges))
    }
}

/// A total assignment of nodes to communities with dense community ids.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Partition {
    assignment: Vec<usize>,
    community_count: usize,
}

impl Partition {
    /// Builds a partition from arbitrary labels, relabelling them densely in
    /// order of first appearance.
    pub fn from_labels<T: Eq + std::hash::Hash + Clone>(labels: &[T]) -> Self {
        let mut ids: HashMap<T, usize> = HashMap::new();
        let assignment = labels
            .iter()
            .map(|l| {
                let next = ids.len();
                *ids.entry(l.clone()).or_insert(next)
            })
            .collect();
        Self { assignment, community_count: ids.len() }
    }

    /// Validates an assignment whose ids must already be dense and non-empty.
    pub fn new(assignment: Vec<usize>) -> Result<Self, GraphError> {
        let count = assignment.iter().max().map_or(0, |&m| m + 1);
        let mut used = vec![false; count];
        for &c in &assignment {
            used[c] = true;
        }
        if let Some(c) = used.iter().position(|&u| !u) {
            return Err(GraphError::InvalidPartition(format!("community {c} is empty")));
        }
        Ok(Self { assignment, community_count: count })
    }

    pub fn singletons(n: usize) -> Self {
        Self { assignment: (0..n).collect(), community_count: n }
    }

    pub fn single(n: usize) -> Self {
        Self { assignment: vec![0; n], community_count: usize::from(n > 0) }
    }

    pub fn node_count(&self) -> usize {
        self.assignment.len()
    }

    pub fn community_count(&self) -> usize {
        self.community_count
    }

    pub fn community_of(&self, v: usize) -> usize {
        self.assignment[v]
    }

    pub fn assignment(&self) -> &[usize] {
        &self.assignment
    }

    /// Members of each community, in ascending node order.
    pub fn communities(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.community_count];
        for (v, &c) in self.assignment.iter().enumerate() {
            out[c].push(v);
        }
        out
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut out = vec![0; self.community_count];
        for &c in &self.assignment {
            out[c] += 1;
        }
        out
    }
}

fn parse_weight(tok: &str, line: usize) -> Result<f64, GraphError> {
    tok.parse::<f64>().map_err(|_| GraphError::Malformed { line, msg: format!("bad weight {tok:?}") })
}

fn node_count_header(line: &str) -> Option<usize> {
    let rest = line.trim_start_matches('#').trim();
    rest.strip_prefix("nodes").and_then(|r| r.trim().parse().ok())
}

/// Parses a whitespace-separated `u v [w]` edge list. Lines starting with `#`
/// are comments, except that a `# nodes N` comment fixes the node count (so
/// trailing isolated nodes survive a round trip). Otherwise `n = 1 + max id`.
pub fn parse_edge_list(text: &str) -> Result<Graph, GraphError> {
    let mut declared = 0usize;
    let mut raw = Vec::new();
    let mut max_id = None::<usize>;
    for (idx, line) in text.lines().enumerate() {
        let lineno = idx + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        if trimmed.starts_with('#') {
            if let Some(n) = node_count_header(trimmed) {
                declared = declared.max(n);
            }
            continue;
        }
        let toks: Vec<&str> = trimmed.split_whitespace().collect();
        if toks.len() < 2 || toks.len() > 3 {
            return Err(GraphError::Malformed {
                line: lineno,
                msg: format!("expected 2 or 3 fields, found {}", toks.len()),
            });
        }
        let id = |t: &str| {
            t.parse::<usize>()
                .map_err(|_| GraphError::Malformed { line: lineno, msg: format!("bad node id {t:?}") })
        };
        let u = id(toks[0])?;
        let v = id(toks[1])?;
        let w = if toks.len() == 3 { parse_weight(toks[2], lineno)? } else { 1.0 };
        max_id = Some(max_id.map_or(u.max(v), |m: usize| m.max(u).max(v)));
        raw.push((lineno, u, v, w));
    }
    let n = declared.max(max_id.map_or(0, |m| m + 1));
    let mut builder = GraphBuilder::new(n);
    for (line, u, v, w) in raw {
        builder.add(line, u, v, w)?;
    }
    builder.finish()
}

/// Parses an edge list whose node tokens are arbitrary labels, compacting
/// them to dense ids in order of first appearance. Returns the original
/// label of every dense id.
pub fn parse_labeled_edge_list(text: &str) -> Result<(Graph, Vec<String>), GraphError> {
    let mut ids: HashMap<String, usize> = HashMap::new();
    let mut labels = Vec::new();
    let mut raw = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let lineno = idx + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let toks: Vec<&str> = trimmed.split_whitespace().collect();
        if toks.len() < 2 || toks.len() > 3 {
            return Err(GraphError::Malformed {
                line: lineno,
                msg: format!("expected 2 or 3 fields, found {}", toks.len()),
            });
        }
        let mut id = |t: &str| {
            *ids.entry(t.to_string()).or_insert_with(|| {
                labels.push(t.to_string());
                labels.len() - 1
            })
        };
        let u = id(toks[0]);
        let v = id(toks[1]);
        let w = if toks.len() == 3 { parse_weight(toks[2], lineno)? } else { 1.0 };
        raw.push((lineno, u, v, w));
    }
    let mut builder = GraphBuilder::new(labels.len());
    for (line, u, v, w) in raw {
        builder.add(line, u, v, w)?;
    }
    Ok((builder.finish()?, labels))
}

/// Formats a weight with at least ten significant digits.
fn format_weight(w: f64) -> String {
    if (1.0..1e15).contains(&w) {
        format!("{w:.9}")
    } else {
        format!("{w:.9e}")
    }
}

/// Writes the canonical edge list: a `# nodes N` header, then one
/// tab-separated `u v w` line per edge with `u < v` in ascending order.
pub fn write_edge_list(g: &Graph) -> String {
    let mut out = String::new();
    writeln!(out, "# nodes {}", g.node_count()).unwrap();
    out.push_str(&write_edge_lines(g));
    out
}

/// The edge lines of [`write_edge_list`] without any header.
pub fn write_edge_lines(g: &Graph) -> String {
    let mut out = String::with_capacity(g.edge_count() * 20);
    for &(u, v, w) in g.edges() {
        writeln!(out, "{u}\t{v}\t{}", format_weight(w)).unwrap();
    }
    out
}

/// One `node<TAB>community` line per node.
pub fn write_partition(p: &Partition) -> String {
    let mut out = String::with_capacity(p.node_count() * 8);
    for (v, &c) in p.assignment().iter().enumerate() {
        writeln!(out, "{v}\t{c}").unwrap();
    }
    out
}

/// Parses a `node<TAB>community` file. Every node in `0..n` must appear
/// exactly once; community labels may be arbitrary integers.
pub fn parse_partition(text: &str) -> Result<Partition, GraphError> {
    let mut pairs = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let lineno = idx + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let toks: Vec<&str> = trimmed.split_whitespace().collect();
        if toks.len() != 2 {
            return Err(GraphError::Malformed { line: lineno, msg: "expected node and community".into() });
        }
        let parse = |t: &str| {
            t.parse::<usize>()
                .map_err(|_| GraphError::Malformed { line: lineno, msg: format!("bad integer {t:?}") })
        };
        pairs.push((parse(toks[0])?, parse(toks[1])?));
    }
    let n = pairs.iter().map(|p| p.0 + 1).max().unwrap_or(0);
    let mut labels = vec![None; n];
    for (node, c) in pairs {
        if labels[node].replace(c).is_some() {
            return Err(GraphError::InvalidPartition(format!("node {node} listed twice")));
        }
    }
    let labels: Option<Vec<usize>> = labels.into_iter().collect();
    let labels = labels.ok_or_else(|| GraphError::InvalidPartition("missing node".into()))?;
    Ok(Partition::from_labels(&labels))
}


#[cfg(test)]
mod tests {
    use super::fixtures::*;
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn parses_weighted_lines() {
        let g = parse_edge_list("0 1 1.0\n1 2 2.0").unwrap();
        assert_eq!(g.node_count(), 3);
        assert_eq!(g.edges(), &[(0, 1, 1.0), (1, 2, 2.0)]);
    }

    #[test]
    fn missing_weight_defaults_to_one() {
        let g = parse_edge_list("0 1\n").unwrap();
        assert_eq!(g.node_count(), 2);
        assert_eq!(g.edges(), &[(0, 1, 1.0)]);
    }

    #[test]
    fn rejects_bad_lines() {
        assert_eq!(parse_edge_list("0 0 1.0"), Err(GraphError::SelfLoop { line: 1, node: 0 }));
        assert!(matches!(
            parse_edge_list("0 1\n# c\n1 0 2"),
            Err(GraphError::DuplicateEdge { line: 3, u: 0, v: 1 })
        ));
        assert!(matches!(parse_edge_list("0 1 0"), Err(GraphError::NonPositiveWeight { .. })));
        assert!(matches!(parse_edge_list("0 1 -2"), Err(GraphError::NonPositiveWeight { .. })));
        assert!(matches!(parse_edge_list("0 x 1"), Err(GraphError::Malformed { line: 1, .. })));
        assert!(matches!(parse_edge_list("0 1 1 1"), Err(GraphError::Malformed { .. })));
        assert!(matches!(parse_edge_list("0 1 abc"), Err(GraphError::Malformed { .. })));
    }

    #[test]
    fn tabs_spaces_and_comments() {
        let g = parse_edge_list("# header\n\n0\t1\t0.5\n  2   1 3\n").unwrap();
        assert_eq!(g.edges(), &[(0, 1, 0.5), (1, 2, 3.0)]);
    }

    #[test]
    fn node_stats_examples() {
        let t = triangle();
        for v in 0..3 {
            assert_eq!(t.node_stats(v).unwrap(), (2, 2.0));
        }
        let s = star(&[1.0, 2.0, 3.0]);
        assert_eq!(s.node_stats(0).unwrap(), (3, 6.0));
        let iso = Graph::from_edges(3, [(0, 1, 1.0)]).unwrap();
        assert_eq!(iso.node_stats(2).unwrap(), (0, 0.0));
        assert!(matches!(iso.node_stats(3), Err(GraphError::NodeOutOfRange { node: 3, n: 3 })));
    }

    #[test]
    fn unit_weights() {
        let g = Graph::from_edges(3, [(0, 1, 0.5), (1, 2, 7.0)]).unwrap();
        let u = g.with_unit_weights();
        assert_eq!(u.edges(), &[(0, 1, 1.0), (1, 2, 1.0)]);
        assert_eq!(u.with_unit_weights(), u);
        let e = Graph::edgeless(4);
        assert_eq!(e.with_unit_weights(), e);
    }

    #[test]
    fn writes_canonical_order() {
        let g = Graph::from_edges(2, [(1, 0, 2.0)]).unwrap();
        assert_eq!(write_edge_lines(&g), "0\t1\t2.000000000\n");
        assert_eq!(write_edge_list(&Graph::edgeless(5)), "# nodes 5\n");
        assert_eq!(parse_edge_list(&write_edge_list(&Graph::edgeless(5))).unwrap(), Graph::edgeless(5));
    }

    #[test]
    fn tiny_weights_keep_precision() {
        let g = Graph::from_edges(3, [(0, 1, 1.234567891234e-7), (1, 2, 0.3)]).unwrap();
        let back = parse_edge_list(&write_edge_list(&g)).unwrap();
        for (a, b) in g.edges().iter().zip(back.edges()) {
            assert!((a.2 - b.2).abs() <= 1e-9 * a.2);
        }
    }

    #[test]
    fn labeled_parse_compacts_ids() {
        let (g, labels) = parse_labeled_edge_list("alice bob 2\nbob 17\n").unwrap();
        assert_eq!(labels, vec!["alice", "bob", "17"]);
        assert_eq!(g.edges(), &[(0, 1, 2.0), (1, 2, 1.0)]);
    }

    #[test]
    fn partition_round_trip() {
        let p = Partition::from_labels(&[5, 5, 9, 2]);
        assert_eq!(p.assignment(), &[0, 0, 1, 2]);
        assert_eq!(parse_partition(&write_partition(&p)).unwrap(), p);
        assert!(parse_partition("0\t1\n0\t2\n").is_err());
        assert!(parse_partition("1\t1\n").is_err());
        assert!(Partition::new(vec![0, 2]).is_err());
    }

    fn arb_graph() -> impl Strategy<Value = Graph> {
        (2usize..25).prop_flat_map(|n| {
            proptest::collection::vec((0..n, 0..n, 1e-6f64..1e6), 0..60).prop_map(move |raw| {
                let mut seen = HashSet::new();
                let edges: Vec<_> = raw
                    .into_iter()
                    .filter(|&(u, v, _)| u != v && seen.insert((u.min(v), u.max(v))))
                    .collect();
                Graph::from_edges(n, edges).unwrap()
            })
        })
    }

    proptest! {
        #[test]
        fn handshake_and_round_trip(g in arb_graph()) {
            let deg: usize = (0..g.node_count()).map(|v| g.degree(v)).sum();
            prop_assert_eq!(deg, 2 * g.edge_count());
            let st: f64 = (0..g.node_count()).map(|v| g.strength(v)).sum();
            prop_assert!((st - 2.0 * g.total_weight()).abs() <= 1e-9 * st.max(1.0));
            for v in 0..g.node_count() {
                for &(u, w) in g.neighbors(v) {
                    prop_assert_eq!(g.weight(u, v), Some(w));
                }
            }

            let back = parse_edge_list(&write_edge_list(&g)).unwrap();
            prop_assert_eq!(back.node_count(), g.node_count());
            prop_assert_eq!(back.edge_count(), g.edge_count());
            for (a, b) in g.edges().iter().zip(back.edges()) {
                prop_assert_eq!((a.0, a.1), (b.0, b.1));
                prop_assert!((a.2 - b.2).abs() <= 1e-9 * a.2);
            }

            let u = g.with_unit_weights();
            for v in 0..g.node_count() {
                prop_assert_eq!(u.degree(v), g.degree(v));
                prop_assert_eq!(u.strength(v), g.degree(v) as f64);
            }
        }
    }
}
