#![allow(dead_code)]

pub mod experiments;
pub mod oracle;
pub mod tables;

use graphmark::bounds::{compute_k, DEFAULT_DELTA};
use graphmark::graph::{generate, load_edge_list};
use graphmark::keys::{group_setup, GraphKey, PartyKeyPair, Registry, Timestamp};
use graphmark::owner::{Issued, Owner};
use graphmark::Graph;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub const OREGON_NODES: usize = 11_174;
pub const OREGON_EDGES: usize = 23_409;

/// The Oregon AS graph if `GRAPHMARK_OREGON` names an edge list, otherwise a
/// heavy-tailed stand-in with the same node and edge counts.
pub fn oregon() -> Graph {
    if let Ok(path) = std::env::var("GRAPHMARK_OREGON") {
        if let Ok((g, _)) = load_edge_list(&path) {
            return g;
        }
    }
    generate::heavy_tailed(OREGON_NODES, OREGON_EDGES, 2.1, 1)
}

/// Heavy-tailed graph with average degree 6.
pub fn synthetic(n: usize, seed: u64) -> Graph {
    generate::heavy_tailed(n, 3 * n, 2.1, seed)
}

pub struct Scenario {
    pub owner: Owner,
    pub users: Vec<PartyKeyPair>,
    pub issued: Vec<Issued>,
    pub registry: Registry,
}

/// Issues one copy per user with `copies` individual watermarks each, plus
/// group watermarks when `groups` is set.
pub fn scenario(g: Graph, users: usize, copies: u32, groups: bool, seed: u64) -> Scenario {
    let k = compute_k(g.node_count() as u64, DEFAULT_DELTA).unwrap();
    let key = GraphKey::from_bytes(seed_bytes(seed, 0xA5));
    let users: Vec<PartyKeyPair> = (0..users)
        .map(|i| PartyKeyPair::from_secret(format!("user{i}"), seed_bytes(seed, i as u8)))
        .collect();
    let mut owner = Owner::new(g, key.clone(), k, copies);
    if groups {
        let names: Vec<String> = users.iter().map(|u| u.party_id.clone()).collect();
        owner = owner.with_groups(group_setup(&names, &key, seed).unwrap()).unwrap();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut registry = Registry::new("test-graph");
    let t = Timestamp::from_unix(1_700_000_000 + seed as i64).unwrap();
    let issued: Vec<Issued> = users
        .iter()
        .map(|u| owner.issue_to(u, &t, &mut rng).unwrap())
        .collect();
    for i in &issued {
        registry.push(i.entry.clone());
    }
    Scenario {
        owner,
        users,
        issued,
        registry,
    }
}

pub fn seed_bytes(seed: u64, tag: u8) -> [u8; 32] {
    let mut b = [tag; 32];
    b[..8].copy_from_slice(&seed.to_le_bytes());
    b
}
