use std::collections::VecDeque;

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{Graph, NodeId};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GraphMetrics {
    pub avg_degree: f64,
    pub assortativity: f64,
    pub avg_clustering: f64,
    pub sampled_avg_path: f64,
    pub sampled_diameter: u32,
    pub sample_size: usize,
    pub sample_seed: u64,
}

/// Structural summary. Path length and diameter come from BFS between
/// `sample_size` uniformly sampled nodes; unreachable pairs are skipped.
pub fn metrics(g: &Graph, sample_size: usize, rng_seed: u64) -> GraphMetrics {
    let (sampled_avg_path, sampled_diameter, sample_size) = sampled_paths(g, sample_size, rng_seed);
    GraphMetrics {
        avg_degree: g.average_degree(),
        assortativity: assortativity(g),
        avg_clustering: average_clustering(g),
        sampled_avg_path,
        sampled_diameter,
        sample_size,
        sample_seed: rng_seed,
    }
}

/// Degree assortativity: Pearson correlation of the degrees at either end of
/// an edge, counting each edge in both orientations. Returns 0 when the
/// correlation is undefined (every edge joins equal degrees).
pub fn assortativity(g: &Graph) -> f64 {
    let deg = g.degrees();
    let m = g.edge_count() as f64;
    if m == 0.0 {
        return 0.0;
    }
    let (mut prod, mut sum, mut sq) = (0f64, 0f64, 0f64);
    for (u, v) in g.edges() {
        let (a, b) = (deg[u as usize] as f64, deg[v as usize] as f64);
        prod += a * b;
        sum += 0.5 * (a + b);
        sq += 0.5 * (a * a + b * b);
    }
    let mean = sum / m;
    let num = prod / m - mean * mean;
    let den = sq / m - mean * mean;
    if den.abs() < 1e-12 {
        0.0
    } else {
        (num / den).clamp(-1.0, 1.0)
    }
}

/// Triangles through each node, by the degree-ordered forward algorithm.
pub(crate) fn triangles_per_node(g: &Graph) -> Vec<u64> {
    let n = g.node_count();
    let rank = |v: NodeId| (g.degree(v), v);
    let forward: Vec<Vec<NodeId>> = g
        .nodes()
        .map(|u| {
            g.neighbors(u)
                .iter()
                .copied()
                .filter(|&v| rank(v) > rank(u))
                .collect()
        })
        .collect();
    let mut tri = vec![0u64; n];
    let mut mark = vec![false; n];
    for u in 0..n {
        for &v in &forward[u] {
            mark[v as usize] = true;
        }
        for &v in &forward[u] {
            for &w in &forward[v as usize] {
                if mark[w as usize] {
                    tri[u] += 1;
                    tri[v as usize] += 1;
                    tri[w as usize] += 1;
                }
            }
        }
        for &v in &forward[u] {
            mark[v as usize] = false;
        }
    }
    tri
}

/// Mean local clustering coefficient; nodes of degree < 2 contribute 0.
pub fn average_clustering(g: &Graph) -> f64 {
    let n = g.node_count();
    if n == 0 {
        return 0.0;
    }
    let tri = triangles_per_node(g);
    let total: f64 = (0..n)
        .map(|v| {
            let d = g.degree(v as NodeId) as f64;
            if d < 2.0 {
                0.0
            } else {
                2.0 * tri[v] as f64 / (d * (d - 1.0))
            }
        })
        .sum();
    total / n as f64
}

/// Average shortest-path length and diameter among a uniform node sample.
/// Returns `(avg, diameter, effective_sample_size)`.
pub fn sampled_paths(g: &Graph, sample_size: usize, rng_seed: u64) -> (f64, u32, usize) {
    let n = g.node_count();
    let sample_size = sample_size.min(n);
    if sample_size < 2 {
        return (0.0, 0, sample_size);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let sample: Vec<NodeId> = index::sample(&mut rng, n, sample_size)
        .into_iter()
        .map(|i| i as NodeId)
        .collect();
    let mut in_sample = vec![false; n];
    for &s in &sample {
        in_sample[s as usize] = true;
    }

    let (sum, pairs, diameter) = sample
        .par_iter()
        .map_init(
            || (vec![u32::MAX; n], VecDeque::new(), Vec::new()),
            |(dist, queue, touched), &src| {
                let mut sum = 0u64;
                let mut pairs = 0u64;
                let mut ecc = 0u32;
                let mut remaining = sample_size - 1;
                dist[src as usize] = 0;
                touched.push(src);
                queue.push_back(src);
                while let Some(u) = queue.pop_front() {
                    let du = dist[u as usize];
                    for &w in g.neighbors(u) {
                        if dist[w as usize] == u32::MAX {
                            dist[w as usize] = du + 1;
                            touched.push(w);
                            if in_sample[w as usize] {
                                sum += (du + 1) as u64;
                                pairs += 1;
                                ecc = ecc.max(du + 1);
                                remaining -= 1;
                            }
                            queue.push_back(w);
                        }
                    }
                    if remaining == 0 {
                        break;
                    }
                }
                queue.clear();
                for &t in touched.iter() {
                    dist[t as usize] = u32::MAX;
                }
                touched.clear();
                (sum, pairs, ecc)
            },
        )
        .reduce(|| (0, 0, 0), |a, b| (a.0 + b.0, a.1 + b.1, a.2.max(b.2)));

    let avg = if pairs == 0 { 0.0 } else { sum as f64 / pairs as f64 };
    (avg, diameter, sample_size)
}
