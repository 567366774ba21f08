use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::Rng;

use super::{measured_mixing, GenError};
use crate::graph::{Graph, Partition};

/// Limits for the rewiring stage.
#[derive(Debug, Clone, Copy)]
pub struct TopologyCaps {
    pub mix_tolerance: f64,
    pub max_rewire_sweeps: usize,
}

const SWAP_ATTEMPTS: usize = 50;

/// Internal degree of a node of degree `k` at topological mixing `mu_t`.
pub fn internal_degree(k: usize, mu_t: f64) -> usize {
    (((1.0 - mu_t) * k as f64).round() as usize).min(k)
}

/// Places every node in a community strictly larger than its internal
/// degree. Nodes are handled in decreasing internal-degree order; each picks
/// a community with free slots at random (weighted by free slots) and, if that
/// one is too small, moves to the largest community that still has room.
pub fn assign_communities<R: Rng + ?Sized>(
    internal: &[usize],
    sizes: &[usize],
    rng: &mut R,
) -> Result<Vec<usize>, GenError> {
    let mut order: Vec<usize> = (0..internal.len()).collect();
    order.shuffle(rng);
    order.sort_by(|&a, &b| internal[b].cmp(&internal[a]));
    let mut free = sizes.to_vec();
    let mut remaining: usize = free.iter().sum();
    let mut community = vec![usize::MAX; internal.len()];
    for v in order {
        let mut pick = rng.gen_range(0..remaining);
        let mut chosen = 0;
        for (c, &f) in free.iter().enumerate() {
            if pick < f {
                chosen = c;
                break;
            }
            pick -= f;
        }
        if sizes[chosen] <= internal[v] {
            chosen = (0..sizes.len())
                .filter(|&c| free[c] > 0 && sizes[c] > internal[v])
                .max_by_key(|&c| (sizes[c], std::cmp::Reverse(c)))
                .ok_or_else(|| GenError::Stage {
                    stage: "community assignment",
                    detail: format!("no community with room holds internal degree {}", internal[v]),
                })?;
        }
        community[v] = chosen;
        free[chosen] -= 1;
        remaining -= 1;
    }
    Ok(community)
}

fn key(u: usize, v: usize) -> (usize, usize) {
    if u < v {
        (u, v)
    } else {
        (v, u)
    }
}

struct Wiring<'a> {
    community: &'a [usize],
    mult: HashMap<(usize, usize), u32>,
}

impl Wiring<'_> {
    fn bad(&self, e: [usize; 2], external: bool) -> bool {
        e[0] == e[1]
            || self.mult[&key(e[0], e[1])] > 1
            || (external && self.community[e[0]] == self.community[e[1]])
    }

    fn dec(&mut self, e: [usize; 2]) {
        if e[0] != e[1] {
            *self.mult.get_mut(&key(e[0], e[1])).unwrap() -= 1;
        }
    }

    fn inc(&mut self, e: [usize; 2]) {
        if e[0] != e[1] {
            *self.mult.entry(key(e[0], e[1])).or_default() += 1;
        }
    }

    fn fits(&self, e: [usize; 2], external: bool) -> bool {
        e[0] != e[1]
            && self.mult.get(&key(e[0], e[1])).copied().unwrap_or(0) == 0
            && (!external || self.community[e[0]] != self.community[e[1]])
    }

    /// Double-edge swap of `edges[i]` with a random partner; keeps every
    /// endpoint's degree within this edge class.
    fn try_fix<R: Rng + ?Sized>(&mut self, edges: &mut [[usize; 2]], i: usize, external: bool, rng: &mut R) -> bool {
        if edges.len() < 2 {
            return false;
        }
        for _ in 0..SWAP_ATTEMPTS.min(4 * edges.len()) {
            let j = rng.gen_range(0..edges.len());
            if j == i {
                continue;
            }
            let [a, b] = edges[i];
            let [x, y] = if rng.gen::<bool>() { edges[j] } else { [edges[j][1], edges[j][0]] };
            let first = [a, x];
            let second = [b, y];
            self.dec(edges[i]);
            self.dec(edges[j]);
            if key(a, x) != key(b, y) && self.fits(first, external) && self.fits(second, external) {
                self.inc(first);
                self.inc(second);
                edges[i] = first;
                edges[j] = second;
                return true;
            }
            self.inc(edges[i]);
            self.inc(edges[j]);
        }
        false
    }
}

fn pair_stubs<R: Rng + ?Sized>(stubs: &mut [usize], rng: &mut R) -> Vec<[usize; 2]> {
    stubs.shuffle(rng);
    stubs.chunks_exact(2).map(|c| [c[0], c[1]]).collect()
}

/// Builds a simple graph with planted communities. Internal edges come from a
/// configuration model inside each community, external edges from a global
/// one; rewiring sweeps then remove self-loops, multi-edges and external
/// stubs that landed inside a single community.
pub fn build_topology<R: Rng + ?Sized>(
    degrees: &[usize],
    sizes: &[usize],
    mu_t: f64,
    caps: &TopologyCaps,
    rng: &mut R,
) -> Result<(Graph, Partition), GenError> {
    let n = degrees.len();
    if sizes.iter().sum::<usize>() != n {
        return Err(GenError::InvalidParams("community sizes do not sum to the node count".into()));
    }
    let mut internal: Vec<usize> = degrees.iter().map(|&k| internal_degree(k, mu_t)).collect();
    let community = assign_communities(&internal, sizes, rng)?;

    let mut members = vec![Vec::new(); sizes.len()];
    for (v, &c) in community.iter().enumerate() {
        members[c].push(v);
    }
    // configuration model needs an even stub count per community: shift one
    // unit between a node's internal and external degree, or failing that
    // drop one internal stub
    let mut external: Vec<usize> = degrees.iter().zip(&internal).map(|(&k, &i)| k - i).collect();
    for (c, m) in members.iter().enumerate() {
        if m.iter().map(|&v| internal[v]).sum::<usize>() % 2 == 0 {
            continue;
        }
        let up: Vec<usize> = m.iter().copied().filter(|&v| external[v] > 0 && internal[v] + 1 < sizes[c]).collect();
        if let Some(&v) = up.choose(rng) {
            internal[v] += 1;
            external[v] -= 1;
            continue;
        }
        let down: Vec<usize> = m.iter().copied().filter(|&v| internal[v] > 0).collect();
        let &v = down.choose(rng).expect("odd stub sum implies a positive internal degree");
        internal[v] -= 1;
        if mu_t > 0.0 {
            external[v] += 1;
        }
    }
    if sizes.len() == 1 && external.iter().any(|&e| e > 0) {
        return Err(GenError::Stage {
            stage: "topology",
            detail: "external links requested but there is only one community".into(),
        });
    }

    let mut internal_edges: Vec<Vec<[usize; 2]>> = members
        .iter()
        .map(|m| {
            let mut stubs: Vec<usize> = m.iter().flat_map(|&v| std::iter::repeat_n(v, internal[v])).collect();
            pair_stubs(&mut stubs, rng)
        })
        .collect();
    let mut stubs: Vec<usize> = (0..n).flat_map(|v| std::iter::repeat_n(v, external[v])).collect();
    let mut external_edges = pair_stubs(&mut stubs, rng);

    let mut wiring = Wiring { community: &community, mult: HashMap::new() };
    for e in internal_edges.iter().flatten().chain(&external_edges) {
        wiring.inc(*e);
    }

    for _ in 0..caps.max_rewire_sweeps {
        let mut dirty = false;
        for edges in internal_edges.iter_mut() {
            for i in 0..edges.len() {
                if wiring.bad(edges[i], false) {
                    dirty = true;
                    wiring.try_fix(edges, i, false, rng);
                }
            }
        }
        for i in 0..external_edges.len() {
            if wiring.bad(external_edges[i], true) {
                dirty = true;
                wiring.try_fix(&mut external_edges, i, true, rng);
            }
        }
        if !dirty {
            break;
        }
    }

    // whatever could not be repaired: drop loops and duplicate copies
    let mut seen = std::collections::HashSet::new();
    let edges: Vec<(usize, usize, f64)> = internal_edges
        .iter()
        .flatten()
        .chain(&external_edges)
        .filter(|e| e[0] != e[1] && seen.insert(key(e[0], e[1])))
        .map(|e| {
            let (u, v) = key(e[0], e[1]);
            (u, v, 1.0)
        })
        .collect();
    let graph = Graph::from_edges(n, edges).map_err(|e| GenError::Stage { stage: "topology", detail: e.to_string() })?;
    let truth = Partition::new(community).map_err(|e| GenError::Stage { stage: "topology", detail: e.to_string() })?;
    let (achieved, _) = measured_mixing(&graph, &truth);
    if (achieved - mu_t).abs() > caps.mix_tolerance {
        return Err(GenError::Mixing { target: mu_t, achieved });
    }
    Ok((graph, truth))
}
