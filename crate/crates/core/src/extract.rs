//! Finding embedded watermarks in a suspect graph.
//!
//! For each recorded watermark node `x_j` the suspect nodes whose NSD label
//! matches the recorded reference label become its candidates `C_j`. The
//! sets are pruned by connectivity, then a depth-first search assigns
//! `y_1, y_2, ...` in order, checking every new node's edges to the nodes
//! already placed against the recorded subgraph.

use std::collections::{BTreeMap, HashMap};
use std::sync::atomic::{AtomicU64, AtomicUsize, Ordering};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::{max_l, DEFAULT_DELTA, DEFAULT_TARGET};
use crate::embed::{EmbeddingRecord, Role};
use crate::error::{Error, Result};
use crate::graph::{Graph, NodeId};
use crate::keys::{GroupLabel, Registry};
use crate::nsd::NsdLabel;

/// Largest watermark the matcher handles (adjacency rows are `u128`).
pub const MAX_K: usize = 128;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MatchMode {
    Exact,
    Approx,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatchConfig {
    pub mode: MatchMode,
    pub bucket_size: u32,
    pub theta: f64,
    /// Edge-mismatch budget `L`.
    pub max_mismatch: u32,
    /// Give up on one record after this many search steps.
    pub step_limit: Option<u64>,
}

impl MatchConfig {
    pub fn exact() -> Self {
        MatchConfig {
            mode: MatchMode::Exact,
            bucket_size: 1,
            theta: 1.0,
            max_mismatch: 0,
            step_limit: None,
        }
    }

    /// B = 10, θ = 0.75 and L from the uniqueness bound for an `n`-node
    /// graph, capped at 8.
    pub fn approx(n: u64) -> Self {
        let l = max_l(n.max(2), DEFAULT_DELTA, DEFAULT_TARGET).unwrap_or(0).clamp(0, 8);
        MatchConfig {
            mode: MatchMode::Approx,
            bucket_size: 10,
            theta: 0.75,
            max_mismatch: l as u32,
            step_limit: None,
        }
    }

    /// Exact mode always means B = 1, θ = 1 and L = 0.
    pub fn normalized(&self) -> Self {
        match self.mode {
            MatchMode::Exact => MatchConfig {
                step_limit: self.step_limit,
                ..MatchConfig::exact()
            },
            MatchMode::Approx => self.clone(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.bucket_size == 0 {
            return Err(Error::param("bucket size must be at least 1"));
        }
        if !(self.theta > 0.0 && self.theta <= 1.0) {
            return Err(Error::param(format!("theta must lie in (0, 1], got {}", self.theta)));
        }
        Ok(())
    }
}

/// Per-suspect lookup tables, built once and shared by every record.
pub struct SuspectIndex<'g> {
    graph: &'g Graph,
    label_offsets: Vec<usize>,
    label_data: Vec<u32>,
    /// Node ids sorted by degree; `degree_start[d]..degree_start[d+1]` holds
    /// the nodes of degree `d`, each run in ascending id order.
    by_degree: Vec<NodeId>,
    degree_start: Vec<usize>,
    /// Node ids sorted by exact label, ties by id.
    by_label: Vec<NodeId>,
}

impl<'g> SuspectIndex<'g> {
    pub fn new(graph: &'g Graph) -> Self {
        let deg = graph.degrees();
        let n = graph.node_count();
        let mut label_offsets = Vec::with_capacity(n + 1);
        let mut label_data = Vec::with_capacity(2 * graph.edge_count());
        label_offsets.push(0);
        for v in graph.nodes() {
            let start = label_data.len();
            label_data.extend(graph.neighbors(v).iter().map(|&u| deg[u as usize]));
            label_data[start..].sort_unstable();
            label_offsets.push(label_data.len());
        }
        let max_deg = graph.max_degree();
        let mut degree_start = vec![0usize; max_deg + 2];
        for &d in &deg {
            degree_start[d as usize + 1] += 1;
        }
        for d in 1..degree_start.len() {
            degree_start[d] += degree_start[d - 1];
        }
        let mut fill = degree_start.clone();
        let mut by_degree = vec![0; n];
        for v in graph.nodes() {
            let d = deg[v as usize] as usize;
            by_degree[fill[d]] = v;
            fill[d] += 1;
        }
        let mut idx = SuspectIndex {
            graph,
            label_offsets,
            label_data,
            by_degree,
            degree_start,
            by_label: Vec::new(),
        };
        let mut by_label: Vec<NodeId> = graph.nodes().collect();
        by_label.par_sort_unstable_by(|&a, &b| idx.label(a).cmp(idx.label(b)).then(a.cmp(&b)));
        idx.by_label = by_label;
        idx
    }

    pub fn graph(&self) -> &'g Graph {
        self.graph
    }

    pub fn label(&self, v: NodeId) -> &[u32] {
        &self.label_data[self.label_offsets[v as usize]..self.label_offsets[v as usize + 1]]
    }

    fn nodes_of_degree(&self, d: usize) -> &[NodeId] {
        if d + 1 >= self.degree_start.len() {
            return &[];
        }
        &self.by_degree[self.degree_start[d]..self.degree_start[d + 1]]
    }

    fn exact_matches(&self, reference: &[u32]) -> Vec<NodeId> {
        let lo = self.by_label.partition_point(|&v| self.label(v) < reference);
        let hi = self.by_label.partition_point(|&v| self.label(v) <= reference);
        let mut out = self.by_label[lo..hi].to_vec();
        out.sort_unstable();
        out
    }

    fn approx_matches(&self, reference: &[u32], bucket: u32, theta: f64) -> Vec<NodeId> {
        let d_ref = reference.len();
        let ref_b: Vec<u32> = reference.iter().map(|d| d / bucket).collect();
        // overlap <= min(d, d_ref), so only degrees within a factor θ can pass
        let lo = (theta * d_ref as f64 - 1e-9).ceil().max(0.0) as usize;
        let hi = if theta > 0.0 {
            (d_ref as f64 / theta + 1e-9).floor() as usize
        } else {
            usize::MAX
        };
        let mut out = Vec::new();
        for d in lo..=hi.min(self.degree_start.len().saturating_sub(2)) {
            let need = theta * d.max(d_ref) as f64;
            for &v in self.nodes_of_degree(d) {
                let ov = bucket_overlap(&ref_b, self.label(v), bucket);
                if ov as f64 >= need - 1e-9 {
                    out.push(v);
                }
            }
        }
        out.sort_unstable();
        out
    }
}

/// Multiset overlap between bucketed `a` and raw `b` bucketed on the fly.
fn bucket_overlap(a: &[u32], b: &[u32], bucket: u32) -> usize {
    let (mut i, mut j, mut n) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        let bj = b[j] / bucket;
        match a[i].cmp(&bj) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                n += 1;
                i += 1;
                j += 1;
            }
        }
    }
    n
}

/// Candidate lists per watermark node, each in ascending suspect id.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CandidateSets {
    pub sets: Vec<Vec<NodeId>>,
    /// Sizes before connectivity pruning.
    pub initial_sizes: Vec<usize>,
}

impl CandidateSets {
    pub fn any_empty(&self) -> bool {
        self.sets.iter().any(Vec::is_empty)
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.sets.iter().map(Vec::len).collect()
    }
}

/// Recorded subgraph as rows of adjacency bits over watermark indices.
fn adjacency_rows(record: &EmbeddingRecord) -> Vec<u128> {
    let mut rows = vec![0u128; record.k()];
    for &(i, j) in &record.edges {
        rows[i as usize] |= 1 << j;
        rows[j as usize] |= 1 << i;
    }
    rows
}

fn check_record(record: &EmbeddingRecord) -> Result<()> {
    let k = record.k();
    if k < 2 || k > MAX_K {
        return Err(Error::param(format!("watermark size {k} outside 2..={MAX_K}")));
    }
    if record.reference_labels.len() != k {
        return Err(Error::param("record has no reference label per node"));
    }
    Ok(())
}

/// Label-matched candidates, before any pruning.
pub fn raw_candidates(index: &SuspectIndex, record: &EmbeddingRecord, cfg: &MatchConfig) -> Vec<Vec<NodeId>> {
    let cfg = cfg.normalized();
    record
        .reference_labels
        .par_iter()
        .map(|label: &NsdLabel| {
            if cfg.bucket_size == 1 && cfg.theta >= 1.0 {
                index.exact_matches(label.degrees())
            } else {
                index.approx_matches(label.degrees(), cfg.bucket_size, cfg.theta)
            }
        })
        .collect()
}

/// Removes candidates of `x_m` that lack a neighbor among `C_n` for more
/// than `L` of the recorded edges `(x_m, x_n)`, repeating until nothing
/// changes.
pub fn prune(graph: &Graph, record: &EmbeddingRecord, sets: &mut [Vec<NodeId>], max_mismatch: u32) {
    let rows = adjacency_rows(record);
    loop {
        let mut member: HashMap<NodeId, u128> = HashMap::new();
        for (j, set) in sets.iter().enumerate() {
            for &v in set {
                *member.entry(v).or_insert(0) |= 1 << j;
            }
        }
        let mut changed = false;
        for (m, set) in sets.iter_mut().enumerate() {
            let before = set.len();
            set.retain(|&c| {
                let mut reach = 0u128;
                for &u in graph.neighbors(c) {
                    if let Some(mask) = member.get(&u) {
                        reach |= mask;
                    }
                }
                (rows[m] & !reach).count_ones() <= max_mismatch
            });
            changed |= set.len() != before;
        }
        if !changed {
            return;
        }
    }
}

pub fn find_candidates(index: &SuspectIndex, record: &EmbeddingRecord, cfg: &MatchConfig) -> Result<CandidateSets> {
    check_record(record)?;
    cfg.validate()?;
    let cfg = cfg.normalized();
    let mut sets = raw_candidates(index, record, &cfg);
    let initial_sizes = sets.iter().map(Vec::len).collect();
    if !sets.iter().any(Vec::is_empty) {
        prune(index.graph(), record, &mut sets, cfg.max_mismatch);
    }
    Ok(CandidateSets { sets, initial_sizes })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExtractionResult {
    pub party_id: String,
    pub role: Role,
    pub copy_index: u32,
    pub matched: bool,
    /// `y_1 .. y_k` in suspect ids, when matched.
    pub mapping: Option<Vec<NodeId>>,
    pub mismatch_count: Option<u32>,
    pub candidate_sizes_initial: Vec<usize>,
    pub candidate_sizes: Vec<usize>,
    pub search_steps: u64,
    /// True when the search stopped at the step limit without an answer.
    pub gave_up: bool,
    pub elapsed_ms: f64,
}

/// Number of pairs whose adjacency under `mapping` differs from the record.
pub fn count_mismatches(graph: &Graph, record: &EmbeddingRecord, mapping: &[NodeId]) -> u32 {
    let rows = adjacency_rows(record);
    let k = record.k();
    let mut n = 0;
    for i in 0..k {
        for j in i + 1..k {
            let want = rows[i] >> j & 1 == 1;
            if graph.edge_exists(mapping[i], mapping[j]) != want {
                n += 1;
            }
        }
    }
    n
}

struct Search<'a> {
    graph: &'a Graph,
    rows: &'a [u128],
    sets: &'a [Vec<NodeId>],
    budget: u32,
    /// `cost[n][i]`: disagreements between candidate `sets[n][i]` and the
    /// nodes placed so far, over the pairs `(x_n, x_t)`.
    cost: Vec<Vec<u8>>,
    /// Cheapest entry of each `cost[n]`, valid for positions not yet placed.
    mins: Vec<u8>,
    /// Scratch adjacency flags over suspect nodes, all false between calls.
    mark: &'a mut Vec<bool>,
    placed: u128,
    /// `y[n]` once position `n` is placed.
    y: Vec<NodeId>,
    steps: u64,
    step_limit: u64,
    shared_steps: &'a AtomicU64,
    best_root: &'a AtomicUsize,
    root: usize,
}

enum Outcome {
    Found(u32),
    Exhausted,
    Stopped,
}

impl Search<'_> {
    /// Adds (or, with `undo`, removes) the cost of putting `v` at position
    /// `t` against every open position. Returns the sum of the open
    /// positions' cheapest candidates, a lower bound on what the rest of the
    /// assignment must still spend, and the open position with the fewest
    /// candidates affordable after spending `spent`.
    fn place(&mut self, t: usize, v: NodeId, undo: bool, spent: u32) -> (u32, Option<usize>) {
        for &u in self.graph.neighbors(v) {
            self.mark[u as usize] = true;
        }
        let open = !self.placed & !(1u128 << t);
        let mut bound = 0;
        let mut next: Option<(usize, usize)> = None;
        for n in 0..self.sets.len() {
            if open >> n & 1 == 0 {
                continue;
            }
            let want = self.rows[n] >> t & 1 == 1;
            let mut best = u8::MAX;
            let mut fits = 0;
            for (c, slot) in self.sets[n].iter().zip(self.cost[n].iter_mut()) {
                if *c != v && self.mark[*c as usize] != want {
                    if undo {
                        *slot -= 1;
                    } else {
                        *slot += 1;
                    }
                }
                best = best.min(*slot);
                fits += (*slot as u32 + spent <= self.budget) as usize;
            }
            self.mins[n] = best;
            bound += best as u32;
            if next.map_or(true, |(_, f)| fits < f) {
                next = Some((n, fits));
            }
        }
        for &u in self.graph.neighbors(v) {
            self.mark[u as usize] = false;
        }
        (bound, next.map(|(n, _)| n))
    }

    fn dfs(&mut self, used: u32, m: Option<usize>) -> Outcome {
        let Some(m) = m else {
            return Outcome::Found(used);
        };
        // what the other open positions must spend whatever goes here
        let open = !self.placed & !(1u128 << m);
        let rest: u32 = (0..self.sets.len())
            .filter(|&n| open >> n & 1 == 1)
            .map(|n| self.mins[n] as u32)
            .sum();
        for i in 0..self.sets[m].len() {
            let c = self.sets[m][i];
            let extra = self.cost[m][i] as u32;
            if used + extra + rest > self.budget || self.taken(c) {
                continue;
            }
            self.steps += 1;
            if self.steps % 1024 == 0 {
                if self.best_root.load(Ordering::Relaxed) < self.root {
                    return Outcome::Stopped;
                }
                if self.shared_steps.fetch_add(1024, Ordering::Relaxed) + 1024 > self.step_limit {
                    return Outcome::Stopped;
                }
            }
            let spent = used + extra;
            let (bound, next) = self.place(m, c, false, spent);
            if spent + bound <= self.budget {
                self.placed |= 1 << m;
                self.y[m] = c;
                match self.dfs(spent, next) {
                    Outcome::Exhausted => self.placed &= !(1 << m),
                    done => return done,
                }
            }
            self.place(m, c, true, spent);
        }
        Outcome::Exhausted
    }

    fn taken(&self, c: NodeId) -> bool {
        (0..self.sets.len()).any(|n| self.placed >> n & 1 == 1 && self.y[n] == c)
    }
}

struct Detection {
    mapping: Option<(Vec<NodeId>, u32)>,
    steps: u64,
    gave_up: bool,
}

/// Roots are the candidates of `x_1`, tried in order (in parallel); below a
/// root the search always extends the open position with the fewest
/// affordable candidates. The lowest successful root wins, so the answer
/// does not depend on the number of workers.
fn search(graph: &Graph, record: &EmbeddingRecord, sets: &[Vec<NodeId>], budget: u32, step_limit: Option<u64>) -> Detection {
    let rows = adjacency_rows(record);
    let best_root = AtomicUsize::new(usize::MAX);
    let shared_steps = AtomicU64::new(0);
    let step_limit = step_limit.unwrap_or(u64::MAX);
    let k = sets.len();

    let hits: Vec<(usize, Vec<NodeId>, u32, u64, bool)> = (0..sets[0].len())
        .into_par_iter()
        .map_init(
            || vec![false; graph.node_count()],
            |mark, ri| {
                if best_root.load(Ordering::Relaxed) < ri {
                    return None;
                }
                let mut s = Search {
                    graph,
                    rows: &rows,
                    sets,
                    budget,
                    cost: sets.iter().map(|c| vec![0u8; c.len()]).collect(),
                    mins: vec![0; k],
                    mark,
                    placed: 0,
                    y: vec![0; k],
                    steps: 1,
                    step_limit,
                    shared_steps: &shared_steps,
                    best_root: &best_root,
                    root: ri,
                };
                let root = sets[0][ri];
                let (bound, next) = s.place(0, root, false, 0);
                let outcome = if bound <= budget {
                    s.placed = 1;
                    s.y[0] = root;
                    s.dfs(0, next)
                } else {
                    Outcome::Exhausted
                };
                match outcome {
                    Outcome::Found(used) => {
                        best_root.fetch_min(ri, Ordering::Relaxed);
                        Some((ri, s.y, used, s.steps, false))
                    }
                    Outcome::Exhausted => Some((usize::MAX, Vec::new(), 0, s.steps, false)),
                    Outcome::Stopped => Some((usize::MAX, Vec::new(), 0, s.steps, true)),
                }
            },
        )
        .flatten()
        .collect();

    let steps = hits.iter().map(|h| h.3).sum();
    let best = hits.iter().filter(|h| h.0 != usize::MAX).min_by_key(|h| h.0);
    match best {
        Some((_, y, used, _, _)) => Detection {
            mapping: Some((y.clone(), *used)),
            steps,
            gave_up: false,
        },
        None => Detection {
            mapping: None,
            steps,
            // a stop caused by a lower root's success is not giving up
            gave_up: shared_steps.load(Ordering::Relaxed) > step_limit,
        },
    }
}

/// Searches for the recorded subgraph among the candidates. The matched
/// mapping is re-verified pair by pair before it is returned.
pub fn detect(suspect: &Graph, record: &EmbeddingRecord, candidates: &CandidateSets, cfg: &MatchConfig) -> ExtractionResult {
    let start = Instant::now();
    let cfg = cfg.normalized();
    let mut result = ExtractionResult {
        party_id: record.provenance.party_id.clone(),
        role: record.role,
        copy_index: record.copy_index,
        matched: false,
        mapping: None,
        mismatch_count: None,
        candidate_sizes_initial: candidates.initial_sizes.clone(),
        candidate_sizes: candidates.sizes(),
        search_steps: 0,
        gave_up: false,
        elapsed_ms: 0.0,
    };
    if candidates.sets.len() == record.k() && !candidates.any_empty() {
        let d = search(suspect, record, &candidates.sets, cfg.max_mismatch, cfg.step_limit);
        result.search_steps = d.steps;
        result.gave_up = d.gave_up;
        if let Some((y, used)) = d.mapping {
            let recount = count_mismatches(suspect, record, &y);
            assert_eq!(recount, used, "search mismatch tally disagrees with recount");
            assert!(recount <= cfg.max_mismatch, "match exceeds the mismatch budget");
            result.matched = true;
            result.mapping = Some(y);
            result.mismatch_count = Some(recount);
        }
    }
    result.elapsed_ms = start.elapsed().as_secs_f64() * 1e3;
    result
}

/// Candidates plus search for one record.
pub fn extract_record(index: &SuspectIndex, record: &EmbeddingRecord, cfg: &MatchConfig) -> Result<ExtractionResult> {
    let start = Instant::now();
    let cands = find_candidates(index, record, cfg)?;
    let mut r = detect(index.graph(), record, &cands, cfg);
    r.elapsed_ms = start.elapsed().as_secs_f64() * 1e3;
    Ok(r)
}

/// Runs `f` on a pool of `workers` threads (all cores when `None`).
pub fn with_workers<T: Send>(workers: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(w) = workers {
        b = b.num_threads(w.max(1));
    }
    let pool = b.build().map_err(|e| Error::param(format!("thread pool: {e}")))?;
    Ok(pool.install(f))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UserVerdict {
    pub party_id: String,
    /// Some individual copy of this user's watermark was found.
    pub individual_hit: bool,
    pub group_hits: Vec<GroupLabel>,
    pub records: Vec<ExtractionResult>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExtractionReport {
    pub config: MatchConfig,
    pub users: Vec<UserVerdict>,
    /// Users with at least one individual copy found.
    pub individual_hits: Vec<String>,
    /// Whether each group's watermark was found via any member's record.
    pub groups: BTreeMap<GroupLabel, bool>,
    pub elapsed_ms: f64,
}

impl ExtractionReport {
    pub fn any_hit(&self) -> bool {
        !self.individual_hits.is_empty() || self.groups.values().any(|&b| b)
    }
}

/// Tries every record of every registry entry against the suspect.
pub fn extract_all(suspect: &Graph, registry: &Registry, cfg: &MatchConfig) -> Result<ExtractionReport> {
    let start = Instant::now();
    cfg.validate()?;
    let index = SuspectIndex::new(suspect);
    let jobs: Vec<(usize, &EmbeddingRecord)> = registry
        .entries()
        .iter()
        .enumerate()
        .flat_map(|(i, e)| e.records.iter().map(move |r| (i, r)))
        .collect();
    let results: Vec<(usize, ExtractionResult)> = jobs
        .par_iter()
        .map(|&(i, r)| extract_record(&index, r, cfg).map(|res| (i, res)))
        .collect::<Result<_>>()?;

    let mut users: Vec<UserVerdict> = registry
        .entries()
        .iter()
        .map(|e| UserVerdict {
            party_id: e.party_id.clone(),
            individual_hit: false,
            group_hits: Vec::new(),
            records: Vec::new(),
        })
        .collect();
    let mut groups = BTreeMap::new();
    for (i, res) in results {
        let u = &mut users[i];
        match res.role {
            Role::Individual => u.individual_hit |= res.matched,
            Role::Group(g) => {
                let hit = groups.entry(g).or_insert(false);
                *hit |= res.matched;
                if res.matched && !u.group_hits.contains(&g) {
                    u.group_hits.push(g);
                }
            }
        }
        u.records.push(res);
    }
    let individual_hits = users
        .iter()
        .filter(|u| u.individual_hit)
        .map(|u| u.party_id.clone())
        .collect();
    Ok(ExtractionReport {
        config: cfg.normalized(),
        users,
        individual_hits,
        groups,
        elapsed_ms: start.elapsed().as_secs_f64() * 1e3,
    })
}
