//! Can a graph hide a watermark? A `k`-node watermark has average degree
//! about `(k+1)/2` and `(C(k,2)+k-1)/2` internal edges, so the host must
//! have nodes of that degree and `k`-node regions of comparable density.
//!
//! Densities here are internal edge counts of a `k`-node set.

use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::{compute_k, watermark_density};
use crate::error::Result;
use crate::graph::{Graph, NodeId};

/// `(k+1)/2`.
pub fn threshold_degree(k: usize) -> f64 {
    (k as f64 + 1.0) / 2.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DegreeCriterion {
    pub threshold: f64,
    pub n_min: usize,
    pub n_max: usize,
    pub pass: bool,
}

pub fn degree_criterion(g: &Graph, k: usize) -> DegreeCriterion {
    let threshold = threshold_degree(k);
    let (n_min, n_max) = (g.min_degree(), g.max_degree());
    DegreeCriterion {
        threshold,
        n_min,
        n_max,
        pass: n_min as f64 <= threshold && threshold <= n_max as f64,
    }
}

/// Nodes with degree strictly above `(k+1)/2`, ascending.
pub fn eligible_nodes(g: &Graph, k: usize) -> Vec<NodeId> {
    let t = threshold_degree(k);
    g.nodes().filter(|&v| g.degree(v) as f64 > t).collect()
}

struct Sampler<'g> {
    g: &'g Graph,
    k: usize,
    eligible: Vec<bool>,
    order: Vec<NodeId>,
    seed: u64,
}

impl<'g> Sampler<'g> {
    fn new(g: &'g Graph, k: usize, seed: u64) -> Self {
        let mut order = eligible_nodes(g, k);
        let mut eligible = vec![false; g.node_count()];
        for &v in &order {
            eligible[v as usize] = true;
        }
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        Sampler { g, k, eligible, order, seed }
    }

    /// Grows a `k`-set from `start` through eligible neighbors and returns
    /// its internal edge count, or None if the growth gets stuck.
    fn grow(&self, start: NodeId, mut pick: impl FnMut(&HashMap<NodeId, usize>) -> NodeId) -> Option<usize> {
        if self.k == 0 {
            return Some(0);
        }
        let mut inside = vec![start];
        // frontier: eligible outside nodes -> edges into the set
        let mut frontier: HashMap<NodeId, usize> = HashMap::new();
        let mut edges = 0;
        let add = |v: NodeId, inside: &[NodeId], frontier: &mut HashMap<NodeId, usize>| {
            for &u in self.g.neighbors(v) {
                if self.eligible[u as usize] && !inside.contains(&u) {
                    *frontier.entry(u).or_insert(0) += 1;
                }
            }
        };
        add(start, &inside, &mut frontier);
        while inside.len() < self.k {
            if frontier.is_empty() {
                return None;
            }
            let v = pick(&frontier);
            edges += frontier.remove(&v).unwrap_or(0);
            inside.push(v);
            add(v, &inside, &mut frontier);
        }
        Some(edges)
    }

    fn greedy(&self, start: NodeId) -> Option<usize> {
        self.grow(start, |f| {
            // most edges into the set, lowest id on ties
            f.iter()
                .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(a.0)))
                .map(|(&v, _)| v)
                .expect("nonempty frontier")
        })
    }

    fn random(&self, trial: usize) -> Option<usize> {
        let start = self.order[trial % self.order.len()];
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(trial as u64 + 1);
        self.grow(start, |f| {
            let mut keys: Vec<NodeId> = f.keys().copied().collect();
            keys.sort_unstable();
            keys[rng.gen_range(0..keys.len())]
        })
    }

    fn greedy_runs(&self, trials: usize) -> Vec<Option<usize>> {
        let n = trials.min(self.order.len());
        self.order[..n].par_iter().map(|&s| self.greedy(s)).collect()
    }

    fn random_runs(&self, trials: usize) -> Vec<Option<usize>> {
        if self.order.is_empty() {
            return Vec::new();
        }
        (0..trials).into_par_iter().map(|t| self.random(t)).collect()
    }
}

/// Largest density found by greedy growth from up to `trials` eligible
/// starts, also counting the random growths of [`estimate_dmin`] so that
/// the two estimates stay ordered. None when no eligible `k`-set connects.
pub fn estimate_dmax(g: &Graph, k: usize, trials: usize, seed: u64) -> Option<usize> {
    let s = Sampler::new(g, k, seed);
    s.greedy_runs(trials)
        .into_iter()
        .chain(s.random_runs(trials))
        .flatten()
        .max()
}

/// Smallest density over `trials` random growths.
pub fn estimate_dmin(g: &Graph, k: usize, trials: usize, seed: u64) -> Option<usize> {
    Sampler::new(g, k, seed).random_runs(trials).into_iter().flatten().min()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensityCriterion {
    pub watermark_density: f64,
    pub d_min: Option<usize>,
    pub d_max: Option<usize>,
    pub pass: bool,
}

pub fn density_criterion(g: &Graph, k: usize, trials: usize, seed: u64) -> DensityCriterion {
    let s = Sampler::new(g, k, seed);
    let random: Vec<usize> = s.random_runs(trials).into_iter().flatten().collect();
    let d_min = random.iter().copied().min();
    let d_max = s.greedy_runs(trials).into_iter().flatten().chain(random).max();
    let wd = watermark_density(k);
    DensityCriterion {
        watermark_density: wd,
        d_min,
        d_max,
        pass: matches!((d_min, d_max), (Some(lo), Some(hi)) if lo as f64 <= wd && wd <= hi as f64),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DenseCore {
    pub size: usize,
    /// Average degree inside the induced subgraph.
    pub avg_degree: f64,
}

/// The subgraph induced by all nodes of degree above `(k+1)/2`.
pub fn dense_core_report(g: &Graph, k: usize) -> DenseCore {
    let nodes = eligible_nodes(g, k);
    let internal = g.internal_edges(&nodes);
    DenseCore {
        size: nodes.len(),
        avg_degree: if nodes.is_empty() {
            0.0
        } else {
            2.0 * internal as f64 / nodes.len() as f64
        },
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuitabilityReport {
    pub n: usize,
    pub edges: usize,
    pub delta: f64,
    pub k: usize,
    pub threshold_degree: f64,
    pub n_min: usize,
    pub n_max: usize,
    pub watermark_density: f64,
    pub d_min: Option<usize>,
    pub d_max: Option<usize>,
    pub dense_core_size: usize,
    pub dense_core_avg_degree: f64,
    pub watermark_avg_degree: f64,
    pub degree_ok: bool,
    pub density_ok: bool,
    pub suitable: bool,
}

pub fn suitability(g: &Graph, delta: f64, trials: usize, seed: u64) -> Result<SuitabilityReport> {
    let k = compute_k(g.node_count() as u64, delta)?;
    Ok(suitability_for_k(g, k, delta, trials, seed))
}

pub fn suitability_for_k(g: &Graph, k: usize, delta: f64, trials: usize, seed: u64) -> SuitabilityReport {
    let deg = degree_criterion(g, k);
    let dens = density_criterion(g, k, trials, seed);
    let core = dense_core_report(g, k);
    SuitabilityReport {
        n: g.node_count(),
        edges: g.edge_count(),
        delta,
        k,
        threshold_degree: deg.threshold,
        n_min: deg.n_min,
        n_max: deg.n_max,
        watermark_density: dens.watermark_density,
        d_min: dens.d_min,
        d_max: dens.d_max,
        dense_core_size: core.size,
        dense_core_avg_degree: core.avg_degree,
        watermark_avg_degree: 2.0 * dens.watermark_density / k as f64,
        degree_ok: deg.pass,
        density_ok: dens.pass,
        suitable: deg.pass && dens.pass,
    }
}
