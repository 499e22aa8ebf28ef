//! Adversaries: a single holder who edits edges at random, and colluders
//! who align their copies and keep the edges most of them agree on.

use std::collections::{BTreeMap, HashMap, HashSet};

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::embed::{EmbeddingRecord, Role};
use crate::error::{Error, Result};
use crate::extract::{extract_record, MatchConfig, SuspectIndex};
use crate::graph::{dk2_distance, dk2_series, Graph, NodeId};
use crate::nsd::multiset_overlap;

/// What to do with an edge present in exactly half of the colluding graphs.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TiePolicy {
    #[default]
    Drop,
    Keep,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AttackConfig {
    pub edges_to_modify: usize,
    /// Share of modifications that add an edge; the rest delete one.
    pub add_fraction: f64,
    pub seeds_matched: usize,
    /// How far the best expansion score must lead the runner-up.
    pub margin: usize,
    pub tie_policy: TiePolicy,
    pub seed: u64,
}

impl Default for AttackConfig {
    fn default() -> Self {
        AttackConfig {
            edges_to_modify: 0,
            add_fraction: 0.5,
            seeds_matched: 1000,
            margin: 1,
            tie_policy: TiePolicy::Drop,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AttackOutcome {
    #[serde(skip)]
    pub graph: Graph,
    pub edges_added: usize,
    pub edges_removed: usize,
    /// Nodes of the reference graph aligned in every other colluding graph.
    pub nodes_aligned: Option<usize>,
    pub normalized_distortion: Option<f64>,
}

impl AttackOutcome {
    /// Fills in [`normalized_distortion`] against the original graph.
    pub fn with_distortion(mut self, original: &Graph, clean_watermarked: &Graph) -> Self {
        self.normalized_distortion = normalized_distortion(original, clean_watermarked, &self.graph);
        self
    }
}

/// dK-2 distance of `attacked` from `original`, in units of the distance
/// the watermarks alone introduced. None if the watermarks changed nothing.
pub fn normalized_distortion(original: &Graph, clean_watermarked: &Graph, attacked: &Graph) -> Option<f64> {
    let base = dk2_series(original);
    let unit = dk2_distance(&base, &dk2_series(clean_watermarked));
    (unit > 0.0).then(|| dk2_distance(&base, &dk2_series(attacked)) / unit)
}

/// Deletes uniformly chosen edges and adds uniformly chosen non-edges,
/// `edges_to_modify` in total, never touching a pair twice.
pub fn single_attack(g: &Graph, cfg: &AttackConfig) -> Result<AttackOutcome> {
    if !(0.0..=1.0).contains(&cfg.add_fraction) {
        return Err(Error::param("add fraction must lie in [0, 1]"));
    }
    let total = cfg.edges_to_modify;
    if total > g.edge_count() {
        return Err(Error::param(format!(
            "cannot modify {total} edges of a graph with {}",
            g.edge_count()
        )));
    }
    let n_add = (total as f64 * cfg.add_fraction).round() as usize;
    let n_del = total - n_add;
    let n = g.node_count() as u64;
    let non_edges = n * n.saturating_sub(1) / 2 - g.edge_count() as u64;
    if n_add as u64 > non_edges {
        return Err(Error::param("not enough non-edges to add"));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let edges: Vec<(NodeId, NodeId)> = g.edges().collect();
    let doomed = sample(&mut rng, edges.len(), n_del);
    let mut added = HashSet::with_capacity(n_add);
    while added.len() < n_add {
        let u = rng.gen_range(0..n) as NodeId;
        let v = rng.gen_range(0..n) as NodeId;
        if u != v && !g.edge_exists(u, v) {
            added.insert((u.min(v), u.max(v)));
        }
    }
    let mut out = g.clone();
    for i in doomed {
        let (u, v) = edges[i];
        out.remove_edge(u, v);
    }
    let mut added: Vec<_> = added.into_iter().collect();
    added.sort_unstable();
    for &(u, v) in &added {
        out.add_edge(u, v);
    }
    Ok(AttackOutcome {
        graph: out,
        edges_added: n_add,
        edges_removed: n_del,
        nodes_aligned: None,
        normalized_distortion: None,
    })
}

fn sorted_label(g: &Graph, v: NodeId) -> Vec<u32> {
    let mut l: Vec<u32> = g.neighbors(v).iter().map(|&u| g.degree(u) as u32).collect();
    l.sort_unstable();
    l
}

fn top_degree(g: &Graph, count: usize) -> Vec<NodeId> {
    let mut v: Vec<NodeId> = g.nodes().collect();
    v.sort_by_key(|&x| (std::cmp::Reverse(g.degree(x)), x));
    v.truncate(count);
    v
}

/// Pairs the `seeds` highest-degree nodes of both graphs by neighbor-degree
/// similarity, keeping mutual best choices only.
fn seed_pairs(a: &Graph, b: &Graph, seeds: usize) -> Vec<(NodeId, NodeId)> {
    let ta = top_degree(a, seeds);
    let tb = top_degree(b, seeds);
    let la: Vec<Vec<u32>> = ta.iter().map(|&v| sorted_label(a, v)).collect();
    let lb: Vec<Vec<u32>> = tb.iter().map(|&v| sorted_label(b, v)).collect();
    let sim = |i: usize, j: usize| -> f64 {
        let (da, db) = (la[i].len(), lb[j].len());
        let longest = da.max(db);
        if longest == 0 || (da.min(db) as f64) < 0.8 * longest as f64 {
            return 0.0;
        }
        multiset_overlap(&la[i], &lb[j]) as f64 / longest as f64
    };
    let best_b: Vec<Option<(usize, f64)>> = (0..ta.len())
        .into_par_iter()
        .map(|i| {
            (0..tb.len())
                .map(|j| (j, sim(i, j)))
                .filter(|p| p.1 > 0.0)
                .max_by(|x, y| x.1.total_cmp(&y.1).then(y.0.cmp(&x.0)))
        })
        .collect();
    let best_a: Vec<Option<usize>> = (0..tb.len())
        .into_par_iter()
        .map(|j| {
            (0..ta.len())
                .map(|i| (i, sim(i, j)))
                .filter(|p| p.1 > 0.0)
                .max_by(|x, y| x.1.total_cmp(&y.1).then(y.0.cmp(&x.0)))
                .map(|p| p.0)
        })
        .collect();
    best_b
        .iter()
        .enumerate()
        .filter_map(|(i, b)| {
            let (j, _) = (*b)?;
            (best_a[j] == Some(i)).then_some((ta[i], tb[j]))
        })
        .collect()
}

/// Aligns `b` to `a`: `result[u]` is the node of `b` matched to `u`.
/// The mapping is injective. Seeds come from the top-degree nodes; the
/// rest is grown by counting already-matched common neighbors, accepting a
/// pair when its count is at least 2 and leads every rival by `margin`.
pub fn match_nodes(a: &Graph, b: &Graph, seeds_matched: usize, margin: usize) -> Vec<Option<NodeId>> {
    let mut fwd: Vec<Option<NodeId>> = vec![None; a.node_count()];
    let mut rev: Vec<Option<NodeId>> = vec![None; b.node_count()];
    for (u, v) in seed_pairs(a, b, seeds_matched) {
        fwd[u as usize] = Some(v);
        rev[v as usize] = Some(u);
    }
    let margin = margin.max(1);
    loop {
        // best proposal per unmatched node of `a`
        let proposals: Vec<(NodeId, NodeId, usize)> = a
            .nodes()
            .collect::<Vec<_>>()
            .par_iter()
            .filter(|&&u| fwd[u as usize].is_none())
            .filter_map(|&u| {
                let mut score: HashMap<NodeId, usize> = HashMap::new();
                for &w in a.neighbors(u) {
                    if let Some(mw) = fwd[w as usize] {
                        for &v in b.neighbors(mw) {
                            if rev[v as usize].is_none() {
                                *score.entry(v).or_insert(0) += 1;
                            }
                        }
                    }
                }
                let mut top: Option<(NodeId, usize)> = None;
                let mut second = 0;
                for (&v, &s) in &score {
                    match top {
                        Some((tv, ts)) if s < ts || (s == ts && v > tv) => second = second.max(s),
                        Some((_, ts)) => {
                            second = second.max(ts);
                            top = Some((v, s));
                        }
                        None => top = Some((v, s)),
                    }
                }
                let (v, s) = top?;
                (s >= 2 && s >= second + margin).then_some((u, v, s))
            })
            .collect();
        // one winner per target; a tie for a target rejects it this round
        let mut by_target: BTreeMap<NodeId, (usize, NodeId, bool)> = BTreeMap::new();
        for &(u, v, s) in &proposals {
            by_target
                .entry(v)
                .and_modify(|e| {
                    if s > e.0 {
                        *e = (s, u, false);
                    } else if s == e.0 {
                        e.2 = true;
                    }
                })
                .or_insert((s, u, false));
        }
        let mut grew = false;
        for (v, (_, u, tied)) in by_target {
            if !tied {
                fwd[u as usize] = Some(v);
                rev[v as usize] = Some(u);
                grew = true;
            }
        }
        if !grew {
            return fwd;
        }
    }
}

/// Majority vote over graphs aligned to the first one. Node pairs whose
/// endpoints are not both aligned in some graph take the reference graph's
/// value for that graph's vote.
pub fn collusion_attack(graphs: &[Graph], cfg: &AttackConfig) -> Result<AttackOutcome> {
    if graphs.len() < 2 {
        return Err(Error::param("collusion needs at least two graphs"));
    }
    let maps: Vec<Vec<Option<NodeId>>> = graphs[1..]
        .par_iter()
        .map(|g| match_nodes(&graphs[0], g, cfg.seeds_matched, cfg.margin))
        .collect();
    majority_vote(graphs, &maps, cfg.tie_policy)
}

/// The voting step of [`collusion_attack`] under a given alignment:
/// `maps[i][u]` is the node of `graphs[i + 1]` aligned to node `u` of
/// `graphs[0]`.
pub fn majority_vote(graphs: &[Graph], maps: &[Vec<Option<NodeId>>], tie_policy: TiePolicy) -> Result<AttackOutcome> {
    let m = graphs.len();
    if m < 2 {
        return Err(Error::param("collusion needs at least two graphs"));
    }
    let reference = &graphs[0];
    if maps.len() != m - 1 || maps.iter().any(|mp| mp.len() != reference.node_count()) {
        return Err(Error::param("need one alignment per non-reference graph"));
    }

    // every pair that is an edge in at least one aligned graph
    let mut pairs: HashSet<(NodeId, NodeId)> = reference.edges().collect();
    for (g, map) in graphs[1..].iter().zip(maps) {
        let mut back: Vec<Option<NodeId>> = vec![None; g.node_count()];
        for (u, v) in map.iter().enumerate() {
            if let Some(v) = v {
                back[*v as usize] = Some(u as NodeId);
            }
        }
        for (x, y) in g.edges() {
            if let (Some(u), Some(v)) = (back[x as usize], back[y as usize]) {
                pairs.insert((u.min(v), u.max(v)));
            }
        }
    }
    let mut pairs: Vec<_> = pairs.into_iter().collect();
    pairs.sort_unstable();

    let mut out = Graph::empty(reference.node_count());
    for (u, v) in pairs {
        let base = reference.edge_exists(u, v);
        let mut votes = base as usize;
        for (g, map) in graphs[1..].iter().zip(maps) {
            votes += match (map[u as usize], map[v as usize]) {
                (Some(x), Some(y)) => g.edge_exists(x, y),
                _ => base,
            } as usize;
        }
        let keep = 2 * votes > m || (2 * votes == m && tie_policy == TiePolicy::Keep);
        if keep {
            out.add_edge(u, v);
        }
    }
    let aligned = (0..reference.node_count())
        .filter(|&u| maps.iter().all(|mp| mp[u].is_some()))
        .count();
    let added = out.edges().filter(|&(u, v)| !reference.edge_exists(u, v)).count();
    let removed = reference.edges().filter(|&(u, v)| !out.edge_exists(u, v)).count();
    Ok(AttackOutcome {
        graph: out,
        edges_added: added,
        edges_removed: removed,
        nodes_aligned: Some(aligned),
        normalized_distortion: None,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    /// Edge modifications per point.
    pub strengths: Vec<usize>,
    pub repetitions: usize,
    pub add_fraction: f64,
    /// Named extraction settings to compare.
    pub modes: Vec<(String, MatchConfig)>,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Survival {
    /// Share of repetitions where some individual copy was found.
    pub individual: f64,
    /// Share where any record, individual or group, was found.
    pub any: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub strength: usize,
    pub normalized_distortion: Option<f64>,
    pub survival: BTreeMap<String, Survival>,
}

/// Attacks `watermarked` at each strength, `repetitions` times, and reports
/// how often each extraction mode still finds the user's watermarks.
pub fn robustness_sweep(
    original: &Graph,
    watermarked: &Graph,
    records: &[EmbeddingRecord],
    cfg: &SweepConfig,
) -> Result<Vec<SweepPoint>> {
    let reps = cfg.repetitions.max(1);
    let base = dk2_series(original);
    let unit = dk2_distance(&base, &dk2_series(watermarked));
    cfg.strengths
        .iter()
        .enumerate()
        .map(|(si, &strength)| {
            let runs: Vec<(f64, Vec<(bool, bool)>)> = (0..reps)
                .into_par_iter()
                .map(|r| {
                    let attack = AttackConfig {
                        edges_to_modify: strength,
                        add_fraction: cfg.add_fraction,
                        seed: cfg.seed ^ ((si as u64) << 32) ^ r as u64,
                        ..AttackConfig::default()
                    };
                    let out = single_attack(watermarked, &attack)?;
                    let dist = dk2_distance(&base, &dk2_series(&out.graph));
                    let index = SuspectIndex::new(&out.graph);
                    let mut per_mode = Vec::with_capacity(cfg.modes.len());
                    for (_, mc) in &cfg.modes {
                        let (mut ind, mut any) = (false, false);
                        for rec in records {
                            if extract_record(&index, rec, mc)?.matched {
                                any = true;
                                ind |= rec.role == Role::Individual;
                            }
                        }
                        per_mode.push((ind, any));
                    }
                    Ok((dist, per_mode))
                })
                .collect::<Result<_>>()?;
            let mut survival = BTreeMap::new();
            for (mi, (name, _)) in cfg.modes.iter().enumerate() {
                let ind = runs.iter().filter(|r| r.1[mi].0).count();
                let any = runs.iter().filter(|r| r.1[mi].1).count();
                survival.insert(
                    name.clone(),
                    Survival {
                        individual: ind as f64 / reps as f64,
                        any: any as f64 / reps as f64,
                    },
                );
            }
            let mean = runs.iter().map(|r| r.0).sum::<f64>() / reps as f64;
            Ok(SweepPoint {
                strength,
                normalized_distortion: (unit > 0.0).then(|| mean / unit),
                survival,
            })
        })
        .collect()
}
