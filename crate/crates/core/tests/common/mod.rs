#![allow(dead_code)]

use commselect_core::copra::{self, CopraConfig};
use commselect_core::graph::Graph;
use commselect_core::infomap::{self, map_equation, InfomapConfig};
use commselect_core::metrics::{local_clustering_uw, local_clustering_w, modularity, nmi};
use commselect_core::{generate, seed, GenParams, Partition};
use proptest::prelude::*;
use proptest::test_runner::{Config, TestCaseError, TestRng, TestRunner};
use rand::Rng;

pub const PROPERTY_CASES: u32 = 500;

/// Every partition of `n` nodes, as restricted growth strings.
pub fn all_partitions(n: usize) -> Vec<Partition> {
    fn grow(labels: &mut Vec<usize>, n: usize, out: &mut Vec<Partition>) {
        if labels.len() == n {
            out.push(Partition::new(labels.clone()).unwrap());
            return;
        }
        let fresh = labels.iter().max().map_or(0, |&m| m + 1);
        for l in 0..=fresh {
            labels.push(l);
            grow(labels, n, out);
            labels.pop();
        }
    }
    let mut out = Vec::new();
    if n > 0 {
        grow(&mut Vec::new(), n, &mut out);
    }
    out
}

pub fn brute_force_min_code_length(g: &Graph) -> f64 {
    all_partitions(g.node_count()).iter().map(|p| map_equation(g, p)).fold(f64::INFINITY, f64::min)
}

pub fn cliques(sizes: &[usize], bridge: Option<f64>) -> Graph {
    let mut edges = Vec::new();
    let mut start = 0;
    let mut firsts = Vec::new();
    for &s in sizes {
        firsts.push(start);
        for i in start..start + s {
            for j in i + 1..start + s {
                edges.push((i, j, 1.0));
            }
        }
        start += s;
    }
    if let Some(w) = bridge {
        for pair in firsts.windows(2) {
            edges.push((pair[0], pair[1], w));
        }
    }
    Graph::from_edges(start, edges).unwrap()
}

pub fn path(n: usize) -> Graph {
    Graph::from_edges(n, (1..n).map(|i| (i - 1, i, 1.0))).unwrap()
}

pub fn star(leaves: usize) -> Graph {
    Graph::from_edges(leaves + 1, (1..=leaves).map(|i| (0, i, 1.0))).unwrap()
}

pub fn complete(n: usize) -> Graph {
    cliques(&[n], None)
}

/// Erdős–Rényi graph drawn from `seed`; weights uniform in [0.1, 10] when
/// `weighted`, else 1.
pub fn random_graph(n: usize, p: f64, seed: u64, weighted: bool) -> Graph {
    let mut rng = seed::rng(seed);
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if rng.gen_bool(p) {
                let w = if weighted { rng.gen_range(0.1..10.0) } else { 1.0 };
                edges.push((i, j, w));
            }
        }
    }
    Graph::from_edges(n, edges).unwrap()
}

pub fn pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    sxy / (sxx * syy).sqrt()
}

fn runner() -> TestRunner {
    let config = Config { cases: PROPERTY_CASES, failure_persistence: None, ..Config::default() };
    TestRunner::new_with_rng(config.clone(), TestRng::deterministic_rng(config.rng_algorithm))
}

fn graph_inputs() -> impl Strategy<Value = (usize, f64, u64)> {
    (2usize..=24, 0.05f64..0.7, any::<u64>())
}

fn check<S: Strategy>(strategy: S, test: impl Fn(S::Value) -> Result<(), TestCaseError>) -> Result<u32, String> {
    runner().run(&strategy, test).map(|_| PROPERTY_CASES).map_err(|e| e.to_string())
}

/// A graph whose link weights all equal `c` gives the same partition under
/// the weighted and unweighted variant.
pub fn uniform_weight_equivalence_copra() -> Result<u32, String> {
    check((graph_inputs(), 0.01f64..100.0, any::<u64>()), |((n, p, s), c, alg)| {
        let g = random_graph(n, p, s, false).scaled(c);
        prop_assert_eq!(
            copra::detect(&g, &CopraConfig::weighted(alg)).unwrap(),
            copra::detect(&g, &CopraConfig::unweighted(alg)).unwrap()
        );
        Ok(())
    })
}

pub fn uniform_weight_equivalence_infomap() -> Result<u32, String> {
    check((graph_inputs(), 0.01f64..100.0, any::<u64>()), |((n, p, s), c, alg)| {
        let g = random_graph(n, p, s, false).scaled(c);
        prop_assert_eq!(
            infomap::detect(&g, &InfomapConfig::weighted(alg)).unwrap(),
            infomap::detect(&g, &InfomapConfig::unweighted(alg)).unwrap()
        );
        Ok(())
    })
}

pub fn scale_invariance_copra() -> Result<u32, String> {
    check((graph_inputs(), 0.01f64..100.0, any::<u64>()), |((n, p, s), c, alg)| {
        let g = random_graph(n, p, s, true);
        let cfg = CopraConfig::weighted(alg);
        prop_assert_eq!(copra::detect(&g, &cfg).unwrap(), copra::detect(&g.scaled(c), &cfg).unwrap());
        Ok(())
    })
}

pub fn scale_invariance_infomap() -> Result<u32, String> {
    check((graph_inputs(), 0.01f64..100.0, any::<u64>()), |((n, p, s), c, alg)| {
        let g = random_graph(n, p, s, true);
        let cfg = InfomapConfig::weighted(alg);
        prop_assert_eq!(infomap::detect(&g, &cfg).unwrap(), infomap::detect(&g.scaled(c), &cfg).unwrap());
        Ok(())
    })
}

fn random_partition(n: usize, k: usize, seed: u64) -> Partition {
    let mut rng = seed::rng(seed);
    let labels: Vec<usize> = (0..n).map(|_| rng.gen_range(0..k)).collect();
    Partition::from_labels(&labels)
}

pub fn scale_invariance_modularity() -> Result<u32, String> {
    check((graph_inputs(), 0.01f64..100.0, 1usize..6, any::<u64>()), |((n, p, s), c, k, ps)| {
        let g = random_graph(n, p, s, true);
        prop_assume!(g.edge_count() > 0);
        let part = random_partition(n, k, ps);
        let q = modularity(&g, &part).unwrap();
        prop_assert!((q - modularity(&g.scaled(c), &part).unwrap()).abs() <= 1e-12);
        Ok(())
    })
}

pub fn scale_invariance_map_equation() -> Result<u32, String> {
    check((graph_inputs(), 0.01f64..100.0, 1usize..6, any::<u64>()), |((n, p, s), c, k, ps)| {
        let g = random_graph(n, p, s, true);
        let part = random_partition(n, k, ps);
        prop_assert!((map_equation(&g, &part) - map_equation(&g.scaled(c), &part)).abs() <= 1e-12);
        Ok(())
    })
}

/// With every weight equal, the weighted coefficient equals the unweighted
/// one: exactly for power-of-two weights, where all sums are exact, and to
/// rounding otherwise.
pub fn clustering_reduction() -> Result<u32, String> {
    check((graph_inputs(), -8i32..8, 0.01f64..100.0), |((n, p, s), e, c)| {
        let g = random_graph(n, p, s, false);
        let dyadic = g.scaled(2f64.powi(e));
        let other = g.scaled(c);
        for v in 0..n {
            let uw = local_clustering_uw(&g, v);
            prop_assert_eq!(local_clustering_w(&g, v), uw);
            prop_assert_eq!(local_clustering_w(&dyadic, v), uw);
            prop_assert!((local_clustering_w(&other, v) - uw).abs() <= 1e-12);
        }
        Ok(())
    })
}

pub fn nmi_symmetry_relabel() -> Result<u32, String> {
    check((1usize..40, 1usize..8, 1usize..8, any::<u64>()), |(n, ka, kb, s)| {
        let a = random_partition(n, ka, s);
        let b = random_partition(n, kb, s ^ 0x5555);
        let ab = nmi(&a, &b).unwrap();
        prop_assert!((0.0..=1.0).contains(&ab));
        prop_assert!((ab - nmi(&b, &a).unwrap()).abs() <= 1e-12);
        // reverse the community numbering of `a`
        let k = a.community_count();
        let relabelled = Partition::from_labels(&a.assignment().iter().map(|&c| k - 1 - c).collect::<Vec<_>>());
        let shuffled: Vec<usize> = a.assignment().iter().map(|&c| (c * 7 + 3) % 1000).collect();
        prop_assert!((ab - nmi(&relabelled, &b).unwrap()).abs() <= 1e-12);
        prop_assert!((ab - nmi(&Partition::from_labels(&shuffled), &b).unwrap()).abs() <= 1e-12);
        if k > 1 {
            prop_assert!((nmi(&a, &a).unwrap() - 1.0).abs() <= 1e-12);
        }
        Ok(())
    })
}

pub fn generator_determinism() -> Result<u32, String> {
    check((0.05f64..0.9, 0.05f64..0.9, any::<u64>()), |(mu_t, mu_w, s)| {
        let params = GenParams::default().with_mixing(mu_t, mu_w).with_seed(s);
        prop_assert_eq!(generate(&params), generate(&params));
        Ok(())
    })
}

pub type Property = fn() -> Result<u32, String>;

pub const PROPERTIES: [(&str, Property); 9] = [
    ("uniform-weight equivalence, label propagation", uniform_weight_equivalence_copra),
    ("uniform-weight equivalence, map equation", uniform_weight_equivalence_infomap),
    ("weight-scale invariance, label propagation", scale_invariance_copra),
    ("weight-scale invariance, map equation detector", scale_invariance_infomap),
    ("weight-scale invariance, modularity", scale_invariance_modularity),
    ("weight-scale invariance, code length", scale_invariance_map_equation),
    ("weighted clustering reduces to unweighted", clustering_reduction),
    ("nmi symmetry and relabelling", nmi_symmetry_relabel),
    ("generator determinism", generator_determinism),
];
