//! Deterministic synthetic graphs for tests, experiments and examples.

use std::collections::HashSet;

use rand::distributions::{Distribution, WeightedIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Graph, NodeId};

pub fn path(n: usize) -> Graph {
    Graph::from_edges(n, (1..n as NodeId).map(|v| (v - 1, v)))
}

pub fn complete(n: usize) -> Graph {
    let n32 = n as NodeId;
    Graph::from_edges(n, (0..n32).flat_map(|u| (u + 1..n32).map(move |v| (u, v))))
}

/// `K_{1,leaves}` with the hub at node 0.
pub fn star(leaves: usize) -> Graph {
    Graph::from_edges(leaves + 1, (1..=leaves as NodeId).map(|v| (0, v)))
}

pub fn cycle(n: usize) -> Graph {
    let n32 = n as NodeId;
    Graph::from_edges(n, (0..n32).map(|v| (v, (v + 1) % n32)))
}

/// `rows x cols` lattice; degrees never exceed 4, like a road network.
pub fn grid(rows: usize, cols: usize) -> Graph {
    let id = |r: usize, c: usize| (r * cols + c) as NodeId;
    let mut edges = Vec::new();
    for r in 0..rows {
        for c in 0..cols {
            if c + 1 < cols {
                edges.push((id(r, c), id(r, c + 1)));
            }
            if r + 1 < rows {
                edges.push((id(r, c), id(r + 1, c)));
            }
        }
    }
    Graph::from_edges(rows * cols, edges)
}

/// Every node has degree exactly `d` (circulant graph); `n * d` must be even
/// and `d < n`.
pub fn regular(n: usize, d: usize) -> Graph {
    assert!(d < n && (n * d) % 2 == 0, "no {d}-regular circulant on {n} nodes");
    let n32 = n as NodeId;
    let mut edges = Vec::new();
    for v in 0..n32 {
        for s in 1..=(d / 2) as NodeId {
            edges.push((v, (v + s) % n32));
        }
        if d % 2 == 1 {
            edges.push((v, (v + n32 / 2) % n32));
        }
    }
    Graph::from_edges(n, edges)
}

/// G(n, p): every pair independently present with probability `p`.
pub fn erdos_renyi(n: usize, p: f64, seed: u64) -> Graph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges = Vec::new();
    if p <= 0.0 || n < 2 {
        return Graph::empty(n);
    }
    if p >= 0.05 {
        for u in 0..n as NodeId {
            for v in u + 1..n as NodeId {
                if rng.gen_bool(p.min(1.0)) {
                    edges.push((u, v));
                }
            }
        }
    } else {
        // geometric skipping over the pair sequence
        let lp = (1.0 - p).ln();
        let (mut v, mut w) = (1i64, -1i64);
        let n = n as i64;
        while v < n {
            let r: f64 = rng.gen::<f64>();
            w += 1 + ((1.0 - r).ln() / lp).floor() as i64;
            while w >= v && v < n {
                w -= v;
                v += 1;
            }
            if v < n {
                edges.push((w as NodeId, v as NodeId));
            }
        }
    }
    Graph::from_edges(n, edges)
}

/// Heavy-tailed graph with exactly `n` nodes and `m` edges.
///
/// Node `i` gets weight `(i + 1)^(-1 / (exponent - 1))`, which yields a
/// degree distribution with tail exponent close to `exponent`. Each node is
/// first attached to one weight-sampled partner, so there are no isolated
/// nodes; the remaining edges join weight-sampled endpoint pairs (Chung-Lu
/// style), rejecting loops and duplicates. Requires `n <= m`.
pub fn heavy_tailed(n: usize, m: usize, exponent: f64, seed: u64) -> Graph {
    assert!(n >= 2, "need at least two nodes");
    assert!(exponent > 1.0, "tail exponent must exceed 1");
    let max_edges = n * (n - 1) / 2;
    assert!(m >= n - 1 && m <= max_edges / 2, "edge count {m} outside [{}, {}]", n - 1, max_edges / 2);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let alpha = 1.0 / (exponent - 1.0);
    let weights: Vec<f64> = (0..n).map(|i| ((i + 1) as f64).powf(-alpha)).collect();
    let pick = WeightedIndex::new(&weights).expect("positive weights");

    let key = |u: NodeId, v: NodeId| -> u64 {
        let (a, b) = if u < v { (u, v) } else { (v, u) };
        ((a as u64) << 32) | b as u64
    };
    let mut seen: HashSet<u64> = HashSet::with_capacity(m * 2);
    let mut edges = Vec::with_capacity(m);

    // Attach node i to a partner. Node ids are shuffled so that high-weight
    // nodes are not simply the smallest ids.
    let mut label: Vec<NodeId> = (0..n as NodeId).collect();
    for i in (1..n).rev() {
        let j = rng.gen_range(0..=i);
        label.swap(i, j);
    }
    for i in 0..n {
        loop {
            let j = pick.sample(&mut rng);
            if j == i {
                continue;
            }
            let (u, v) = (label[i], label[j]);
            if seen.insert(key(u, v)) {
                edges.push((u, v));
                break;
            }
            // A low-weight node may keep hitting the same few hubs; fall back
            // to a uniform partner after a duplicate.
            let j = rng.gen_range(0..n);
            if j != i && seen.insert(key(label[i], label[j])) {
                edges.push((label[i], label[j]));
                break;
            }
        }
        if edges.len() >= m {
            break;
        }
    }
    while edges.len() < m {
        let i = pick.sample(&mut rng);
        let j = pick.sample(&mut rng);
        if i == j {
            continue;
        }
        let (u, v) = (label[i], label[j]);
        if seen.insert(key(u, v)) {
            edges.push((u, v));
        }
    }
    Graph::from_edges(n, edges)
}
