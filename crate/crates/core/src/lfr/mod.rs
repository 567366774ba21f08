//! Weighted benchmark networks with planted power-law communities.
//!
//! Generation runs in five stages: community sizes, node degrees, topology
//! with rewiring towards the topological mixing target, node strengths
//! `s_v = k_v^beta`, and link weights fitted to the weight mixing target.

mod power_law;
mod topology;
mod weights;

pub use power_law::{sample_community_sizes, sample_truncated_power_law, solve_k_min, truncated_mean, TruncatedPowerLaw};
pub use topology::{assign_communities, build_topology, internal_degree, TopologyCaps};
pub use weights::assign_weights;

use rand::Rng;
use thiserror::Error;

use crate::graph::{Graph, Partition};
use crate::seed;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GenError {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("{stage}: {detail}")]
    Stage { stage: &'static str, detail: String },
    #[error("topology: mixing target {target} not reached, achieved {achieved:.4}")]
    Mixing { target: f64, achieved: f64 },
    #[error("weights: residual {residual:.4} after {sweeps} sweeps")]
    WeightFit { residual: f64, sweeps: usize },
    #[error("generation failed after {attempts} attempts, last failure in {stage}: {last}")]
    Exhausted { attempts: usize, stage: &'static str, last: Box<GenError> },
}

impl GenError {
    /// Pipeline stage the error came from.
    pub fn stage(&self) -> &'static str {
        match self {
            GenError::InvalidParams(_) => "parameters",
            GenError::Stage { stage, .. } => stage,
            GenError::Mixing { .. } => "topology",
            GenError::WeightFit { .. } => "weights",
            GenError::Exhausted { stage, .. } => stage,
        }
    }
}

/// Parameter vector of the generator. `None` bounds take the defaults
/// resolved by [`GenParams::resolve`].
#[derive(Debug, Clone, PartialEq)]
pub struct GenParams {
    pub n: usize,
    pub tau1: f64,
    pub tau2: f64,
    pub avg_k: f64,
    pub k_max: Option<usize>,
    pub beta: f64,
    pub mu_t: f64,
    pub mu_w: f64,
    pub s_min: Option<usize>,
    pub s_max: Option<usize>,
    pub seed: u64,
    pub mix_tolerance: f64,
    pub max_rewire_sweeps: usize,
    pub weight_tolerance: f64,
    pub max_weight_sweeps: usize,
}

impl Default for GenParams {
    /// N = 100, k = 25, tau1 = 2, tau2 = 1, beta = 1.5.
    fn default() -> Self {
        Self {
            n: 100,
            tau1: 2.0,
            tau2: 1.0,
            avg_k: 25.0,
            k_max: None,
            beta: 1.5,
            mu_t: 0.1,
            mu_w: 0.1,
            s_min: None,
            s_max: None,
            seed: 0,
            mix_tolerance: 0.02,
            max_rewire_sweeps: 200,
            weight_tolerance: 0.01,
            max_weight_sweeps: 2000,
        }
    }
}

/// Degree and community-size bounds after defaults are applied.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Bounds {
    pub k_min: usize,
    pub k_max: usize,
    pub s_min: usize,
    pub s_max: usize,
}

/// Largest default degree and community size, as a fraction of `n`. Keeping
/// every community below half the network leaves room for its external
/// links.
const DEFAULT_MAX_FRACTION: f64 = 0.4;

impl GenParams {
    pub fn with_mixing(mut self, mu_t: f64, mu_w: f64) -> Self {
        self.mu_t = mu_t;
        self.mu_w = mu_w;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    fn default_k_max(&self) -> usize {
        ((DEFAULT_MAX_FRACTION * self.n as f64) as usize).max(self.avg_k.floor() as usize + 1)
    }

    pub fn validate(&self) -> Result<(), GenError> {
        let bad = |m: String| Err(GenError::InvalidParams(m));
        if self.n < 4 {
            return bad(format!("n = {} must be at least 4", self.n));
        }
        let k_max = self.k_max.unwrap_or_else(|| self.default_k_max());
        if !(self.avg_k > 1.0 && self.avg_k < k_max as f64 && k_max < self.n) {
            return bad(format!("need 1 < avg_k < k_max < n, got avg_k = {}, k_max = {k_max}, n = {}", self.avg_k, self.n));
        }
        for (name, mu) in [("mu_t", self.mu_t), ("mu_w", self.mu_w)] {
            if !(0.0..=1.0).contains(&mu) {
                return bad(format!("{name} = {mu} outside [0, 1]"));
            }
        }
        if !(self.tau1 > 1.0) || !(self.tau2 >= 1.0) || !(self.beta > 0.0) {
            return bad("need tau1 > 1, tau2 >= 1, beta > 0".into());
        }
        if self.s_min.is_some_and(|s| s < 2) {
            return bad("s_min must be at least 2".into());
        }
        if self.s_max.is_some_and(|s| s > self.n) {
            return bad("s_max cannot exceed n".into());
        }
        if !(self.mix_tolerance >= 0.0) || !(self.weight_tolerance > 0.0) {
            return bad("tolerances must be positive".into());
        }
        Ok(())
    }

    /// Resolves unset bounds: `k_max = max(0.4 n, avg_k + 1)`, `k_min` from the
    /// mean-degree condition, `s_min = k_min`, `s_max = k_max`.
    pub fn resolve(&self) -> Result<Bounds, GenError> {
        self.validate()?;
        let k_max = self.k_max.unwrap_or_else(|| self.default_k_max());
        let k_min = solve_k_min(self.tau1, self.avg_k, k_max)?;
        let s_min = self.s_min.unwrap_or(k_min.max(2)).min(self.n);
        let s_max = self.s_max.unwrap_or(k_max).max(s_min).min(self.n);
        Ok(Bounds { k_min, k_max, s_min, s_max })
    }
}

/// A generated network with its planted partition.
#[derive(Debug, Clone, PartialEq)]
pub struct PlantedNetwork {
    pub graph: Graph,
    pub truth: Partition,
    pub achieved_mu_t: f64,
    pub achieved_mu_w: f64,
    pub params: GenParams,
}

/// Global topological and weight mixing of `g` under `p`: the fraction of
/// link endpoints (resp. strength) that crosses community boundaries.
pub fn measured_mixing(g: &Graph, p: &Partition) -> (f64, f64) {
    let (mut ext_deg, mut ext_w) = (0.0, 0.0);
    for &(u, v, w) in g.edges() {
        if p.community_of(u) != p.community_of(v) {
            ext_deg += 2.0;
            ext_w += 2.0 * w;
        }
    }
    let deg = 2.0 * g.edge_count() as f64;
    let strength = 2.0 * g.total_weight();
    let ratio = |a: f64, b: f64| if b > 0.0 { a / b } else { 0.0 };
    (ratio(ext_deg, deg), ratio(ext_w, strength))
}

/// Whether nodes with the given internal degrees fit into the communities:
/// a community holds only nodes with internal degree below its size, and the
/// constraint sets are nested, so checking every threshold suffices.
fn placement_feasible(internal: &[usize], sizes: &[usize]) -> bool {
    let mut demand: Vec<usize> = internal.to_vec();
    demand.sort_unstable_by(|a, b| b.cmp(a));
    demand.iter().enumerate().all(|(i, &d)| {
        let room: usize = sizes.iter().filter(|&&s| s > d).sum();
        i < room
    })
}

const GENERATION_ATTEMPTS: usize = 10;
const SIZE_DRAWS: usize = 200;

fn attempt(params: &GenParams, bounds: &Bounds, rng: &mut seed::Rng) -> Result<PlantedNetwork, GenError> {
    let mut degrees = sample_truncated_power_law(params.tau1, bounds.k_min, bounds.k_max, params.n, rng)?;
    if degrees.iter().sum::<usize>() % 2 == 1 {
        let v = rng.gen_range(0..params.n);
        if degrees[v] < bounds.k_max {
            degrees[v] += 1;
        } else {
            degrees[v] -= 1;
        }
    }
    let internal: Vec<usize> = degrees.iter().map(|&k| internal_degree(k, params.mu_t)).collect();
    let mut sizes = None;
    for _ in 0..SIZE_DRAWS {
        let s = sample_community_sizes(params.n, params.tau2, bounds.s_min, bounds.s_max, rng)?;
        if placement_feasible(&internal, &s) {
            sizes = Some(s);
            break;
        }
    }
    let sizes = sizes.ok_or_else(|| GenError::Stage {
        stage: "community assignment",
        detail: "no sampled community sizes can hold the internal degrees".into(),
    })?;
    let caps = TopologyCaps { mix_tolerance: params.mix_tolerance, max_rewire_sweeps: params.max_rewire_sweeps };
    let (topology, truth) = build_topology(&degrees, &sizes, params.mu_t, &caps, rng)?;
    let graph = assign_weights(&topology, &truth, params.beta, params.mu_w, params.weight_tolerance, params.max_weight_sweeps)?;
    let (achieved_mu_t, achieved_mu_w) = measured_mixing(&graph, &truth);
    Ok(PlantedNetwork { graph, truth, achieved_mu_t, achieved_mu_w, params: params.clone() })
}

/// Generates a planted network. Deterministic in `params`; failed attempts
/// are retried with seeds derived from `params.seed` and the attempt index.
pub fn generate(params: &GenParams) -> Result<PlantedNetwork, GenError> {
    let bounds = params.resolve()?;
    let mut last = None;
    for i in 0..GENERATION_ATTEMPTS {
        let mut rng = seed::rng(seed::derive(params.seed, &[i as u64]));
        match attempt(params, &bounds, &mut rng) {
            Ok(net) => return Ok(net),
            Err(e @ GenError::InvalidParams(_)) => return Err(e),
            Err(e) => last = Some(e),
        }
    }
    let last = last.expect("at least one attempt");
    Err(GenError::Exhausted { attempts: GENERATION_ATTEMPTS, stage: last.stage(), last: Box::new(last) })
}
