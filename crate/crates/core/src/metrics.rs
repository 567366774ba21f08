//! Partition scores (NMI, weighted modularity) and the two local clustering
//! coefficients used as observable network features.

use std::collections::HashMap;

use crate::graph::{Graph, GraphError, Partition};

/// Mean unweighted and weighted local clustering over all nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusteringSummary {
    pub mean_c_uw: f64,
    pub mean_c_w: f64,
    pub per_node: Option<Vec<(f64, f64)>>,
}

/// Per-node numerators shared by both coefficients: the number of linked
/// neighbour pairs, and the sum of `w_vi + w_vj` over those pairs.
fn linked_pairs(g: &Graph, v: usize, mark: &mut [f64]) -> (f64, f64) {
    let nbrs = g.neighbors(v);
    for &(i, w) in nbrs {
        mark[i] = w;
    }
    let mut count = 0.0;
    let mut weighted = 0.0;
    for &(i, w_vi) in nbrs {
        for &(j, _) in g.neighbors(i) {
            // each unordered pair once
            if j > i && mark[j] > 0.0 {
                count += 1.0;
                weighted += w_vi + mark[j];
            }
        }
    }
    for &(i, _) in nbrs {
        mark[i] = 0.0;
    }
    (count, weighted)
}

fn coefficients(g: &Graph, v: usize, mark: &mut [f64]) -> (f64, f64) {
    let k = g.degree(v);
    if k < 2 {
        return (0.0, 0.0);
    }
    let (count, weighted) = linked_pairs(g, v, mark);
    let kf = k as f64;
    let c_uw = count / (kf * (kf - 1.0) / 2.0);
    let c_w = weighted / (g.strength(v) * (kf - 1.0));
    (c_uw, c_w)
}

/// Fraction of `v`'s neighbour pairs that are linked; 0 when degree < 2.
pub fn local_clustering_uw(g: &Graph, v: usize) -> f64 {
    coefficients(g, v, &mut vec![0.0; g.node_count()]).0
}

/// Weighted local clustering: linked neighbour pairs `{i, j}` contribute
/// `w_vi + w_vj`, normalised by `strength(v) * (k_v - 1)`. Reduces to the
/// unweighted coefficient when all incident weights are equal.
pub fn local_clustering_w(g: &Graph, v: usize) -> f64 {
    coefficients(g, v, &mut vec![0.0; g.node_count()]).1
}

pub fn mean_clustering(g: &Graph) -> ClusteringSummary {
    summarize(g, false)
}

pub fn mean_clustering_per_node(g: &Graph) -> ClusteringSummary {
    summarize(g, true)
}

fn summarize(g: &Graph, keep: bool) -> ClusteringSummary {
    let n = g.node_count();
    let mut mark = vec![0.0; n];
    let values: Vec<(f64, f64)> = (0..n).map(|v| coefficients(g, v, &mut mark)).collect();
    let mean = |f: fn(&(f64, f64)) -> f64| {
        if n == 0 {
            0.0
        } else {
            values.iter().map(f).sum::<f64>() / n as f64
        }
    };
    ClusteringSummary {
        mean_c_uw: mean(|x| x.0),
        mean_c_w: mean(|x| x.1),
        per_node: keep.then_some(values),
    }
}

fn entropy(counts: impl Iterator<Item = usize>, n: f64) -> f64 {
    counts
        .filter(|&c| c > 0)
        .map(|c| {
            let p = c as f64 / n;
            -p * p.ln()
        })
        .sum()
}

/// Normalised mutual information `2 I(A;B) / (H(A) + H(B))`.
///
/// Two single-community partitions score 1; if exactly one side has zero
/// entropy the score is 0.
pub fn nmi(a: &Partition, b: &Partition) -> Result<f64, GraphError> {
    if a.node_count() != b.node_count() {
        return Err(GraphError::InvalidPartition(format!(
            "node sets differ: {} vs {} nodes",
            a.node_count(),
            b.node_count()
        )));
    }
    let n = a.node_count();
    if n == 0 {
        return Ok(1.0);
    }
    let nf = n as f64;
    let mut joint: HashMap<(usize, usize), usize> = HashMap::new();
    for v in 0..n {
        *joint.entry((a.community_of(v), b.community_of(v))).or_default() += 1;
    }
    let sa = a.sizes();
    let sb = b.sizes();
    let ha = entropy(sa.iter().copied(), nf);
    let hb = entropy(sb.iter().copied(), nf);
    if ha + hb == 0.0 {
        return Ok(1.0);
    }
    if ha == 0.0 || hb == 0.0 {
        return Ok(0.0);
    }
    // iterate in a fixed order so the sum is reproducible
    let mut cells: Vec<_> = joint.into_iter().collect();
    cells.sort_unstable();
    let mi: f64 = cells
        .iter()
        .map(|&((i, j), c)| {
            let cf = c as f64;
            cf / nf * (cf * nf / (sa[i] as f64 * sb[j] as f64)).ln()
        })
        .sum();
    Ok((2.0 * mi / (ha + hb)).clamp(0.0, 1.0))
}

/// Weighted Newman modularity `sum_c [W_c / W - (S_c / 2W)^2]`.
pub fn modularity(g: &Graph, p: &Partition) -> Result<f64, GraphError> {
    if g.edge_count() == 0 {
        return Err(GraphError::InvalidPartition("modularity undefined on an edgeless graph".into()));
    }
    if p.node_count() != g.node_count() {
        return Err(GraphError::InvalidPartition("partition does not cover the graph".into()));
    }
    let total = g.total_weight();
    let k = p.community_count();
    let mut inner = vec![0.0; k];
    let mut strength = vec![0.0; k];
    for &(u, v, w) in g.edges() {
        let (cu, cv) = (p.community_of(u), p.community_of(v));
        if cu == cv {
            inner[cu] += w;
        }
        strength[cu] += w;
        strength[cv] += w;
    }
    Ok(inner
        .iter()
        .zip(&strength)
        .map(|(&wc, &sc)| wc / total - (sc / (2.0 * total)).powi(2))
        .sum())
}
