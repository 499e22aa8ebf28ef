//! Experiment drivers shared by the integration tests and the acceptance run.

use std::collections::BTreeSet;

use graphmark::attacks::{collusion_attack, majority_vote, robustness_sweep, single_attack, AttackConfig, SweepConfig};
use graphmark::bounds::{compute_k, DEFAULT_DELTA};
use graphmark::embed::{distortion_report, DistortionReport, Role};
use graphmark::extract::{extract_record, MatchConfig, SuspectIndex};
use graphmark::graph::{dk2_distance, dk2_series};
use graphmark::keys::{group_setup, GraphKey, GroupLabel, PartyKeyPair, Timestamp};
use graphmark::owner::Owner;
use graphmark::Graph;
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{scenario, seed_bytes};

pub struct Uniqueness {
    pub trials: usize,
    pub exact_hits: usize,
    pub approx_hits: usize,
    pub approx_cfg: MatchConfig,
}

/// Extraction attempts with another user's individual record: `users`
/// releases, each probed with records of `per_user` other users.
pub fn uniqueness(g: Graph, users: usize, per_user: usize, seed: u64) -> Uniqueness {
    let s = scenario(g, users, 3, false, seed);
    let approx_cfg = MatchConfig::approx(s.owner.graph().node_count() as u64);
    let (mut exact_hits, mut approx_hits, mut trials) = (0, 0, 0);
    for (i, issued) in s.issued.iter().enumerate() {
        let index = SuspectIndex::new(&issued.release.graph);
        for off in 1..=per_user {
            let j = (i + off) % users;
            let rec = &s.issued[j].entry.records[off % 3];
            assert_eq!(rec.role, Role::Individual);
            exact_hits += extract_record(&index, rec, &MatchConfig::exact()).unwrap().matched as usize;
            approx_hits += extract_record(&index, rec, &approx_cfg).unwrap().matched as usize;
            trials += 1;
        }
    }
    Uniqueness {
        trials,
        exact_hits,
        approx_hits,
        approx_cfg,
    }
}

pub struct Distortion {
    pub report: DistortionReport,
    pub watermarks: usize,
    /// dK-2 distance of a random perturbation of the same size and mix.
    pub noise_dk2: f64,
}

/// One user with three individual and two group watermarks.
pub fn distortion(g: Graph, metric_samples: usize, with_metrics: bool, seed: u64) -> Distortion {
    let s = scenario(g, 2, 3, true, seed);
    let original = s.owner.graph();
    let wm = &s.issued[0].watermarked;
    let report = if with_metrics {
        distortion_report(original, wm, metric_samples, seed).unwrap()
    } else {
        // metrics are the expensive part; keep the edge accounting only
        let mut r = distortion_report(&Graph::empty(0), &Graph::empty(0), 1, seed).unwrap();
        let (mut added, mut removed, mut touched) = (0, 0, 0);
        for v in original.nodes() {
            let (a, b) = (original.neighbors(v), wm.neighbors(v));
            if a != b {
                touched += 1;
                added += b.iter().filter(|&&u| u > v && !original.edge_exists(v, u)).count();
                removed += a.iter().filter(|&&u| u > v && !wm.edge_exists(v, u)).count();
            }
        }
        r.nodes = original.node_count();
        r.edges = original.edge_count();
        r.nodes_modified = touched;
        r.node_fraction = touched as f64 / r.nodes as f64;
        r.edges_added = added;
        r.edges_removed = removed;
        r.edge_fraction = (added + removed) as f64 / r.edges as f64;
        r.dk2_distance = dk2_distance(&dk2_series(original), &dk2_series(wm));
        r
    };
    let total = report.edges_added + report.edges_removed;
    let noise = single_attack(
        original,
        &AttackConfig {
            edges_to_modify: total,
            add_fraction: report.edges_added as f64 / total.max(1) as f64,
            seed,
            ..AttackConfig::default()
        },
    )
    .unwrap();
    Distortion {
        noise_dk2: dk2_distance(&dk2_series(original), &dk2_series(&noise.graph)),
        report,
        watermarks: s.issued[0].entry.records.len(),
    }
}

pub struct Robustness {
    /// Smallest tested strength where basic extraction fell below 100%.
    pub basic_break: Option<usize>,
    /// Improved-extraction survival at 50 times that strength.
    pub improved_at_50x: Option<f64>,
    pub improved_cfg: MatchConfig,
    pub points: Vec<(usize, f64, f64)>,
}

fn survival_at(
    original: &Graph,
    wm: &Graph,
    recs: &[graphmark::embed::EmbeddingRecord],
    strength: usize,
    modes: &[(String, MatchConfig)],
    reps: usize,
    seed: u64,
) -> Vec<f64> {
    let sc = SweepConfig {
        strengths: vec![strength],
        repetitions: reps,
        add_fraction: 0.5,
        modes: modes.to_vec(),
        seed,
    };
    let pt = &robustness_sweep(original, wm, recs, &sc).unwrap()[0];
    modes.iter().map(|(n, _)| pt.survival[n].individual).collect()
}

pub fn robustness(g: Graph, reps: usize, seed: u64) -> Robustness {
    let s = scenario(g, 1, 3, false, seed);
    let original = s.owner.graph();
    let wm = &s.issued[0].watermarked;
    let recs = &s.issued[0].entry.records;
    let improved_cfg = MatchConfig::approx(original.node_count() as u64);
    let modes = vec![
        ("basic".to_string(), MatchConfig::exact()),
        ("improved".to_string(), improved_cfg.clone()),
    ];
    let ladder = [1usize, 2, 3, 5, 8, 13, 20, 30, 50, 80, 130, 200, 300, 500];
    let mut points = Vec::new();
    let mut basic_break = None;
    for &st in &ladder {
        let r = survival_at(original, wm, recs, st, &modes, reps, seed);
        points.push((st, r[0], r[1]));
        if r[0] < 1.0 {
            basic_break = Some(st);
            break;
        }
    }
    let improved_at_50x = basic_break.map(|b| {
        let r = survival_at(original, wm, recs, 50 * b, &modes[1..], reps, seed ^ 0x50);
        points.push((50 * b, f64::NAN, r[0]));
        r[0]
    });
    Robustness {
        basic_break,
        improved_at_50x,
        improved_cfg,
        points,
    }
}

pub struct CollusionTrial {
    pub colluders: Vec<String>,
    /// Some group is held by at least two colluders.
    pub shared_group: bool,
    pub groups_surviving: BTreeSet<GroupLabel>,
    /// The first colluder, whose copy the vote is aligned to, holds a
    /// shared group.
    pub reference_shares: bool,
    /// Survivors when the vote uses the true node correspondence.
    pub surviving_exact_alignment: BTreeSet<GroupLabel>,
}

/// `ma` colluders drawn from `users` under a fresh random group assignment,
/// majority vote, then a search for every group watermark they carried.
pub fn collusion_trial(g: &Graph, users: usize, ma: usize, seed: u64) -> CollusionTrial {
    let k = compute_k(g.node_count() as u64, DEFAULT_DELTA).unwrap();
    let key = GraphKey::from_bytes(seed_bytes(seed, 0x3C));
    let names: Vec<String> = (0..users).map(|i| format!("user{i}")).collect();
    let assignment = group_setup(&names, &key, seed).unwrap();
    let owner = Owner::new(g.clone(), key, k, 3).with_groups(assignment.clone()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let picked: Vec<usize> = sample(&mut rng, users, ma).into_vec();
    let t = Timestamp::from_unix(1_800_000_000).unwrap();
    let issued: Vec<_> = picked
        .iter()
        .map(|&i| {
            let user = PartyKeyPair::from_secret(names[i].clone(), seed_bytes(seed, i as u8));
            owner.issue_to(&user, &t, &mut rng).unwrap()
        })
        .collect();
    let graphs: Vec<Graph> = issued.iter().map(|i| i.release.graph.clone()).collect();
    let out = collusion_attack(
        &graphs,
        &AttackConfig {
            seed,
            ..AttackConfig::default()
        },
    )
    .unwrap();
    let mut counts = std::collections::BTreeMap::new();
    for i in &issued {
        for l in i.entry.groups.unwrap() {
            *counts.entry(l).or_insert(0) += 1;
        }
    }
    let truth: Vec<Vec<Option<u32>>> = issued[1..]
        .iter()
        .map(|c| {
            let mut map = vec![None; g.node_count()];
            for (x, &u) in issued[0].permutation.iter().enumerate() {
                map[u as usize] = Some(c.permutation[x]);
            }
            map
        })
        .collect();
    let ideal = majority_vote(&graphs, &truth, AttackConfig::default().tie_policy).unwrap();
    let cfg = MatchConfig::approx(g.node_count() as u64);
    let survivors = |attacked: &Graph| {
        let index = SuspectIndex::new(attacked);
        let mut found = BTreeSet::new();
        for i in &issued {
            for rec in &i.entry.records {
                if let Role::Group(l) = rec.role {
                    if !found.contains(&l) && extract_record(&index, rec, &cfg).unwrap().matched {
                        found.insert(l);
                    }
                }
            }
        }
        found
    };
    let reference_shares = issued[0].entry.groups.unwrap().iter().any(|l| counts[l] >= 2);
    CollusionTrial {
        colluders: picked.iter().map(|&i| names[i].clone()).collect(),
        shared_group: counts.values().any(|&c| c >= 2),
        groups_surviving: survivors(&out.graph),
        reference_shares,
        surviving_exact_alignment: survivors(&ideal.graph),
    }
}
