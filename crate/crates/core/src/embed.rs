//! Watermark generation and in-band embedding.
//!
//! A watermark is a random `k`-node graph drawn from a seed. It is embedded by
//! XOR-ing its edge pattern onto the induced subgraph of `k` seed-selected
//! nodes, then forcing the path `x_1 - x_2 - ... - x_k` so the embedded
//! subgraph stays connected.

use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::{Rng, RngCore};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{dk2_distance, dk2_series, metrics, Graph, GraphMetrics, NodeId};
use crate::keys::{GroupLabel, Provenance, Seed, Timestamp};
use crate::nsd::{all_labels, nsd_hash, NsdHash, NsdLabel};

/// Seed stream for watermark edges; selection for copy `c` uses stream `c`.
const EDGE_STREAM: u64 = 0;

/// Index of pair `(i, j)`, `i < j`, in lexicographic pair order.
pub fn pair_index(i: usize, j: usize, k: usize) -> usize {
    debug_assert!(i < j && j < k);
    i * (2 * k - i - 1) / 2 + (j - i - 1)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WatermarkGraph {
    k: usize,
    bits: Vec<bool>,
}

impl WatermarkGraph {
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        let (a, b) = if i < j { (i, j) } else { (j, i) };
        a != b && self.bits[pair_index(a, b, self.k)]
    }

    pub fn edge_count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let k = self.k;
        (0..k)
            .flat_map(move |i| (i + 1..k).map(move |j| (i, j)))
            .filter(move |&(i, j)| self.bits[pair_index(i, j, k)])
    }

    pub fn from_edges(k: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Self {
        let mut bits = vec![false; k * k.saturating_sub(1) / 2];
        for (i, j) in edges {
            let (a, b) = if i < j { (i, j) } else { (j, i) };
            assert!(a != b && b < k, "bad watermark pair ({i}, {j})");
            bits[pair_index(a, b, k)] = true;
        }
        WatermarkGraph { k, bits }
    }
}

/// Each of the `C(k,2)` pairs is present independently with probability 1/2.
pub fn gen_watermark_graph(seed: &Seed, k: usize) -> WatermarkGraph {
    assert!(k >= 2, "watermark needs at least two nodes");
    let mut rng = seed.rng(EDGE_STREAM);
    let pairs = k * (k - 1) / 2;
    WatermarkGraph {
        k,
        bits: (0..pairs).map(|_| rng.gen::<bool>()).collect(),
    }
}

/// All node ids sorted by `(NsdHash, id)`; the index that seeded draws pick
/// from.
#[derive(Clone, Debug)]
pub struct NodeOrdering {
    order: Vec<NodeId>,
}

impl NodeOrdering {
    pub fn new(g: &Graph) -> Self {
        let labels = all_labels(g);
        let mut keyed: Vec<(NsdHash, NodeId)> = labels
            .par_iter()
            .enumerate()
            .map(|(v, l)| (nsd_hash(l), v as NodeId))
            .collect();
        keyed.par_sort_unstable();
        NodeOrdering {
            order: keyed.into_iter().map(|(_, v)| v).collect(),
        }
    }

    pub fn as_slice(&self) -> &[NodeId] {
        &self.order
    }
}

/// Picks `k` distinct nodes outside `excluded`.
///
/// The eligible nodes, in [`NodeOrdering`] order, are indexed by seeded draws
/// reduced modulo their count; a draw that lands on an already chosen node is
/// discarded and drawn again.
pub fn select_nodes(
    ordering: &NodeOrdering,
    seed: &Seed,
    stream: u64,
    k: usize,
    excluded: &HashSet<NodeId>,
) -> Result<Vec<NodeId>> {
    let eligible: Vec<NodeId> = ordering
        .order
        .iter()
        .copied()
        .filter(|v| !excluded.contains(v))
        .collect();
    if eligible.len() < k {
        return Err(Error::NodeExhaustion {
            required: k,
            available: eligible.len(),
        });
    }
    let mut rng = seed.rng(stream);
    let mut chosen = Vec::with_capacity(k);
    let mut taken = HashSet::with_capacity(k);
    let len = eligible.len() as u64;
    while chosen.len() < k {
        let v = eligible[(rng.next_u64() % len) as usize];
        if taken.insert(v) {
            chosen.push(v);
        }
    }
    Ok(chosen)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Individual,
    Group(GroupLabel),
}

/// What the owner keeps to find one embedded copy again.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EmbeddingRecord {
    pub role: Role,
    /// 1-based copy number among the copies of the same watermark.
    pub copy_index: u32,
    pub provenance: Provenance,
    /// `x_1 .. x_k`, as ids of the owner's (pre-anonymization) graph.
    pub nodes: Vec<NodeId>,
    /// Edges of the embedded subgraph as index pairs `(i, j)`, `i < j`.
    pub edges: Vec<(u32, u32)>,
    /// NSD label of each `x_j` in the finished watermarked graph.
    pub reference_labels: Vec<NsdLabel>,
}

impl EmbeddingRecord {
    pub fn k(&self) -> usize {
        self.nodes.len()
    }

    /// Embedded subgraph as a watermark-shaped matrix over `0..k`.
    pub fn subgraph(&self) -> WatermarkGraph {
        WatermarkGraph::from_edges(self.k(), self.edges.iter().map(|&(i, j)| (i as usize, j as usize)))
    }
}

/// XORs `w` onto the subgraph induced by `x`, then forces the path edges.
/// Returns the embedded subgraph's edges as index pairs.
pub fn embed_one(g: &mut Graph, w: &WatermarkGraph, x: &[NodeId]) -> Vec<(u32, u32)> {
    let k = w.k();
    assert_eq!(x.len(), k, "need one graph node per watermark node");
    debug_assert_eq!(x.iter().collect::<HashSet<_>>().len(), k, "nodes must be distinct");
    for i in 0..k {
        for j in i + 2..k {
            if w.has_edge(i, j) {
                g.flip_edge(x[i], x[j]);
            }
        }
    }
    for i in 0..k - 1 {
        g.add_edge(x[i], x[i + 1]);
    }
    let mut edges = Vec::new();
    for i in 0..k {
        for j in i + 1..k {
            if g.edge_exists(x[i], x[j]) {
                edges.push((i as u32, j as u32));
            }
        }
    }
    edges
}

fn measure_labels(g: &Graph, records: &mut [EmbeddingRecord]) {
    let deg = g.degrees();
    for r in records {
        r.reference_labels = r
            .nodes
            .iter()
            .map(|&v| {
                let mut d: Vec<u32> = g.neighbors(v).iter().map(|&u| deg[u as usize]).collect();
                d.sort_unstable();
                NsdLabel(d)
            })
            .collect();
    }
}

fn place(
    g: &mut Graph,
    ordering: &NodeOrdering,
    seed: &Seed,
    role: Role,
    copy_index: u32,
    k: usize,
    used: &mut HashSet<NodeId>,
) -> Result<EmbeddingRecord> {
    let x = select_nodes(ordering, seed, copy_index as u64, k, used).map_err(|e| match e {
        Error::NodeExhaustion { available, .. } => Error::NodeExhaustion {
            required: used.len() + k,
            available: used.len() + available,
        },
        other => other,
    })?;
    let w = gen_watermark_graph(seed, k);
    let edges = embed_one(g, &w, &x);
    used.extend(x.iter().copied());
    Ok(EmbeddingRecord {
        role,
        copy_index,
        provenance: seed.provenance.clone(),
        nodes: x,
        edges,
        reference_labels: Vec::new(),
    })
}

/// Embeds the group watermarks (in the given order), then `m` copies of the
/// user's watermark. Every selection avoids all nodes used before it.
/// Reference labels are measured once everything is in place.
pub fn embed_all(
    g: &Graph,
    user_seed: &Seed,
    group_seeds: &[(GroupLabel, Seed)],
    m: u32,
    k: usize,
) -> Result<(Graph, Vec<EmbeddingRecord>)> {
    let ordering = NodeOrdering::new(g);
    let mut out = g.clone();
    let mut used = HashSet::new();
    let mut records = Vec::new();
    for (label, seed) in group_seeds {
        records.push(place(&mut out, &ordering, seed, Role::Group(*label), 1, k, &mut used)?);
    }
    for c in 1..=m {
        records.push(place(&mut out, &ordering, user_seed, Role::Individual, c, k, &mut used)?);
    }
    measure_labels(&out, &mut records);
    Ok((out, records))
}

/// Where each of the four group watermarks lives. Regions are chosen on the
/// original graph in the order `a1, a2, b1, b2`, pairwise disjoint, so that
/// every member of a group carries that group's watermark on the same nodes
/// with the same edges.
#[derive(Clone, Debug)]
pub struct GroupLayout {
    pub k: usize,
    pub regions: Vec<(GroupLabel, Seed, Vec<NodeId>)>,
}

impl GroupLayout {
    /// `seeds` must hold one seed per group in `a1, a2, b1, b2` order.
    pub fn new(ordering: &NodeOrdering, seeds: &[Seed], k: usize) -> Result<Self> {
        if seeds.len() != GroupLabel::ALL.len() {
            return Err(Error::param(format!("expected 4 group seeds, got {}", seeds.len())));
        }
        let mut used = HashSet::new();
        let mut regions = Vec::new();
        for (label, seed) in GroupLabel::ALL.iter().zip(seeds) {
            let x = select_nodes(ordering, seed, 1, k, &used)?;
            used.extend(x.iter().copied());
            regions.push((*label, seed.clone(), x));
        }
        Ok(GroupLayout { k, regions })
    }

    pub fn nodes(&self) -> HashSet<NodeId> {
        self.regions.iter().flat_map(|(_, _, x)| x.iter().copied()).collect()
    }

    fn region(&self, label: GroupLabel) -> &(GroupLabel, Seed, Vec<NodeId>) {
        self.regions.iter().find(|(l, _, _)| *l == label).expect("all four groups present")
    }
}

/// Embedding for one user under a fixed group layout: the user's two group
/// watermarks go into their layout regions, and the `m` individual copies
/// avoid all four regions.
pub fn embed_user(
    g: &Graph,
    ordering: &NodeOrdering,
    layout: Option<(&GroupLayout, [GroupLabel; 2])>,
    user_seed: &Seed,
    m: u32,
    k: usize,
) -> Result<(Graph, Vec<EmbeddingRecord>)> {
    let mut out = g.clone();
    let mut records = Vec::new();
    let mut used = HashSet::new();
    if let Some((layout, labels)) = layout {
        if layout.k != k {
            return Err(Error::param(format!("group layout built for k={}, not {k}", layout.k)));
        }
        used = layout.nodes();
        for label in labels {
            let (_, seed, x) = layout.region(label);
            let edges = embed_one(&mut out, &gen_watermark_graph(seed, k), x);
            records.push(EmbeddingRecord {
                role: Role::Group(label),
                copy_index: 1,
                provenance: seed.provenance.clone(),
                nodes: x.clone(),
                edges,
                reference_labels: Vec::new(),
            });
        }
    }
    for c in 1..=m {
        records.push(place(&mut out, ordering, user_seed, Role::Individual, c, k, &mut used)?);
    }
    measure_labels(&out, &mut records);
    Ok((out, records))
}

/// A graph ready to hand out: ids scrambled, nothing else attached.
#[derive(Clone, Debug)]
pub struct ReleasePackage {
    pub graph: Graph,
    pub party_id: String,
    pub timestamp: Timestamp,
}

/// Uniformly random relabeling. Also returns the permutation (`new_id[v]`)
/// for callers that need ground truth; it is not part of the package.
pub fn anonymize_with_permutation<R: RngCore>(g: &Graph, rng: &mut R) -> (Graph, Vec<NodeId>) {
    let mut perm: Vec<NodeId> = g.nodes().collect();
    perm.shuffle(rng);
    (g.permute(&perm), perm)
}

pub fn anonymize<R: RngCore>(g: &Graph, rng: &mut R, party_id: &str, timestamp: &Timestamp) -> ReleasePackage {
    ReleasePackage {
        graph: anonymize_with_permutation(g, rng).0,
        party_id: party_id.to_string(),
        timestamp: timestamp.clone(),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DistortionReport {
    pub nodes: usize,
    pub edges: usize,
    pub nodes_modified: usize,
    pub node_fraction: f64,
    pub edges_added: usize,
    pub edges_removed: usize,
    /// `(added + removed) / edges` of the original.
    pub edge_fraction: f64,
    pub dk2_distance: f64,
    pub before: GraphMetrics,
    pub after: GraphMetrics,
}

/// Compares two graphs over the same node ids.
pub fn distortion_report(original: &Graph, changed: &Graph, sample_size: usize, rng_seed: u64) -> Result<DistortionReport> {
    if original.node_count() != changed.node_count() {
        return Err(Error::param(format!(
            "node counts differ: {} vs {}",
            original.node_count(),
            changed.node_count()
        )));
    }
    let (mut touched, mut added, mut removed) = (0, 0, 0);
    for v in original.nodes() {
        let (a, b) = (original.neighbors(v), changed.neighbors(v));
        if a != b {
            touched += 1;
        }
        let (mut i, mut j) = (0, 0);
        while i < a.len() || j < b.len() {
            match (a.get(i), b.get(j)) {
                (Some(x), Some(y)) if x == y => {
                    i += 1;
                    j += 1;
                }
                (Some(x), Some(y)) if x < y => {
                    removed += (*x > v) as usize;
                    i += 1;
                }
                (Some(x), None) => {
                    removed += (*x > v) as usize;
                    i += 1;
                }
                (_, Some(y)) => {
                    added += (*y > v) as usize;
                    j += 1;
                }
                (None, None) => unreachable!(),
            }
        }
    }
    let n = original.node_count().max(1) as f64;
    let m = original.edge_count().max(1) as f64;
    Ok(DistortionReport {
        nodes: original.node_count(),
        edges: original.edge_count(),
        nodes_modified: touched,
        node_fraction: touched as f64 / n,
        edges_added: added,
        edges_removed: removed,
        edge_fraction: (added + removed) as f64 / m,
        dk2_distance: dk2_distance(&dk2_series(original), &dk2_series(changed)),
        before: metrics(original, sample_size, rng_seed),
        after: metrics(changed, sample_size, rng_seed),
    })
}
