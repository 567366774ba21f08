use super::GenError;
use crate::graph::{Graph, Partition};

/// Per-sweep scale factors are clamped to this range so that weights stay
/// strictly positive even when a target strength is zero.
const MAX_FACTOR: f64 = 1e3;

/// Relative strength residual: mean over non-isolated nodes of
/// `(|S_int - T_int| + |S_ext - T_ext|) / s_v`.
fn residual(n: usize, degree: &[usize], current: &[[f64; 2]], target: &[[f64; 2]], total: &[f64]) -> f64 {
    let mut sum = 0.0;
    let mut count = 0usize;
    for v in 0..n {
        if degree[v] == 0 {
            continue;
        }
        sum += ((current[v][0] - target[v][0]).abs() + (current[v][1] - target[v][1]).abs()) / total[v];
        count += 1;
    }
    if count == 0 {
        0.0
    } else {
        sum / count as f64
    }
}

/// Assigns link weights so that node `v` has strength `k_v^beta`, a fraction
/// `mu_w` of it on links leaving its community.
///
/// Starting from unit weights, each sweep computes per node the factor that
/// would bring its internal (resp. external) strength onto target, and every
/// edge is multiplied by the geometric mean of its endpoints' factors for the
/// edge's class. Sweeps stop once the mean relative residual drops below
/// `tolerance`.
pub fn assign_weights(
    g: &Graph,
    truth: &Partition,
    beta: f64,
    mu_w: f64,
    tolerance: f64,
    max_sweeps: usize,
) -> Result<Graph, GenError> {
    let n = g.node_count();
    let degree: Vec<usize> = (0..n).map(|v| g.degree(v)).collect();
    let total: Vec<f64> = degree.iter().map(|&k| (k as f64).powf(beta)).collect();
    let target: Vec<[f64; 2]> = total.iter().map(|&s| [(1.0 - mu_w) * s, mu_w * s]).collect();
    let class: Vec<usize> = g
        .edges()
        .iter()
        .map(|&(u, v, _)| usize::from(truth.community_of(u) != truth.community_of(v)))
        .collect();
    let mut weights = vec![1.0; g.edge_count()];
    let mut current = vec![[0.0; 2]; n];

    let measure = |weights: &[f64], current: &mut [[f64; 2]]| {
        current.iter_mut().for_each(|c| *c = [0.0; 2]);
        for (i, &(u, v, _)) in g.edges().iter().enumerate() {
            current[u][class[i]] += weights[i];
            current[v][class[i]] += weights[i];
        }
    };

    measure(&weights, &mut current);
    let mut err = residual(n, &degree, &current, &target, &total);
    let mut sweeps = 0;
    while err >= tolerance {
        if sweeps == max_sweeps {
            return Err(GenError::WeightFit { residual: err, sweeps });
        }
        let factor: Vec<[f64; 2]> = (0..n)
            .map(|v| {
                let f = |c: usize| {
                    if current[v][c] > 0.0 {
                        (target[v][c] / current[v][c]).clamp(1.0 / MAX_FACTOR, MAX_FACTOR)
                    } else {
                        1.0
                    }
                };
                [f(0), f(1)]
            })
            .collect();
        for (i, &(u, v, _)) in g.edges().iter().enumerate() {
            let c = class[i];
            weights[i] *= (factor[u][c] * factor[v][c]).sqrt();
        }
        measure(&weights, &mut current);
        err = residual(n, &degree, &current, &target, &total);
        sweeps += 1;
    }
    g.with_weights(&weights).map_err(|e| GenError::Stage { stage: "weights", detail: e.to_string() })
}
