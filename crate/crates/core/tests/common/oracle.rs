//! Exhaustive ordered-subset search for tiny graphs.

use graphmark::embed::{EmbeddingRecord, Role};
use graphmark::extract::{detect, find_candidates, MatchConfig, MatchMode, SuspectIndex};
use graphmark::graph::generate;
use graphmark::keys::Seed;
use graphmark::nsd::{all_labels, approx_match, bucketize, NsdLabel};
use graphmark::{Graph, NodeId};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub struct Instance {
    pub suspect: Graph,
    pub record: EmbeddingRecord,
}

/// A random clean graph on at most 12 nodes, a record of `k <= 4` of its
/// nodes, and a suspect that is the clean graph relabeled and lightly
/// perturbed, or an unrelated graph.
pub fn instance(seed: u64) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.gen_range(4..=12);
    let k = rng.gen_range(2..=4.min(n));
    let clean = generate::erdos_renyi(n, rng.gen_range(0.15..0.8), rng.gen());
    let mut nodes: Vec<NodeId> = (0..n as NodeId).collect();
    nodes.shuffle(&mut rng);
    nodes.truncate(k);
    let mut edges = Vec::new();
    for i in 0..k {
        for j in i + 1..k {
            if clean.edge_exists(nodes[i], nodes[j]) {
                edges.push((i as u32, j as u32));
            }
        }
    }
    let labels = all_labels(&clean);
    let record = EmbeddingRecord {
        role: Role::Individual,
        copy_index: 1,
        provenance: Seed::from_label("oracle").provenance,
        reference_labels: nodes.iter().map(|&v| labels[v as usize].clone()).collect(),
        nodes,
        edges,
    };
    let suspect = if rng.gen_bool(0.2) {
        generate::erdos_renyi(n, rng.gen_range(0.15..0.8), rng.gen())
    } else {
        let mut perm: Vec<NodeId> = (0..n as NodeId).collect();
        perm.shuffle(&mut rng);
        let mut s = clean.permute(&perm);
        for _ in 0..rng.gen_range(0..=2) {
            let u = rng.gen_range(0..n as NodeId);
            let v = rng.gen_range(0..n as NodeId);
            if u != v {
                s.flip_edge(u, v);
            }
        }
        s
    };
    Instance { suspect, record }
}

fn label_matches(cfg: &MatchConfig, reference: &NsdLabel, candidate: &NsdLabel) -> bool {
    match cfg.mode {
        MatchMode::Exact => reference == candidate,
        MatchMode::Approx => approx_match(
            &bucketize(reference, cfg.bucket_size),
            &bucketize(candidate, cfg.bucket_size),
            cfg.theta,
        ),
    }
}

/// Every ordered tuple of distinct suspect nodes whose labels match and
/// whose pairwise adjacency differs from the record in at most `L` pairs.
pub fn valid_tuples(inst: &Instance, cfg: &MatchConfig) -> Vec<Vec<NodeId>> {
    let g = &inst.suspect;
    let rec = &inst.record;
    let k = rec.k();
    let budget = match cfg.mode {
        MatchMode::Exact => 0,
        MatchMode::Approx => cfg.max_mismatch,
    };
    let labels = all_labels(g);
    let allowed: Vec<Vec<NodeId>> = (0..k)
        .map(|j| {
            g.nodes()
                .filter(|&v| label_matches(cfg, &rec.reference_labels[j], &labels[v as usize]))
                .collect()
        })
        .collect();
    let want = |i: usize, j: usize| rec.edges.contains(&(i as u32, j as u32));
    let mut out = Vec::new();
    let mut tuple = Vec::with_capacity(k);
    fn walk(
        j: usize,
        allowed: &[Vec<NodeId>],
        tuple: &mut Vec<NodeId>,
        out: &mut Vec<Vec<NodeId>>,
        check: &dyn Fn(&[NodeId]) -> bool,
    ) {
        if j == allowed.len() {
            if check(tuple) {
                out.push(tuple.clone());
            }
            return;
        }
        for &v in &allowed[j] {
            if !tuple.contains(&v) {
                tuple.push(v);
                walk(j + 1, allowed, tuple, out, check);
                tuple.pop();
            }
        }
    }
    let check = |t: &[NodeId]| {
        let mut miss = 0;
        for i in 0..k {
            for j in i + 1..k {
                miss += (g.edge_exists(t[i], t[j]) != want(i, j)) as u32;
            }
        }
        miss <= budget
    };
    walk(0, &allowed, &mut tuple, &mut out, &check);
    out
}

pub struct Comparison {
    pub agree: bool,
    pub pruning_sound: bool,
    pub oracle_found: bool,
}

/// Runs the real pipeline and the oracle on one instance.
pub fn compare(inst: &Instance, cfg: &MatchConfig) -> Comparison {
    let oracle = valid_tuples(inst, cfg);
    let index = SuspectIndex::new(&inst.suspect);
    let cands = find_candidates(&index, &inst.record, cfg).unwrap();
    let result = detect(&inst.suspect, &inst.record, &cands, cfg);
    let pruning_sound = oracle
        .iter()
        .all(|t| t.iter().enumerate().all(|(j, v)| cands.sets[j].contains(v)));
    let mapping_valid = match &result.mapping {
        Some(y) => oracle.contains(y),
        None => true,
    };
    Comparison {
        agree: result.matched == !oracle.is_empty() && mapping_valid,
        pruning_sound,
        oracle_found: !oracle.is_empty(),
    }
}

pub fn configs() -> Vec<(&'static str, MatchConfig)> {
    let approx = |b: u32, theta: f64, l: u32| MatchConfig {
        mode: MatchMode::Approx,
        bucket_size: b,
        theta,
        max_mismatch: l,
        step_limit: None,
    };
    vec![
        ("exact", MatchConfig::exact()),
        ("approx L=0", approx(1, 0.75, 0)),
        ("approx L=1", approx(1, 0.75, 1)),
        ("approx B=2 L=1", approx(2, 0.5, 1)),
    ]
}
