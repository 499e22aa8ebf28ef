use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, ensure, Context as _, Result};
use graphmark::attacks::{
    collusion_attack, normalized_distortion, robustness_sweep, single_attack, AttackConfig, SweepConfig, TiePolicy,
};
use graphmark::bounds::{bounds_report, collusion_lambda, collusion_lambda_single, compute_k, BoundsReport};
use graphmark::embed::{distortion_report, Role};
use graphmark::extract::{extract_all, MatchConfig, MatchMode};
use graphmark::graph::{generate, metrics, IdRemap};
use graphmark::keys::{
    group_setup, registry_store, GraphKey, GroupAssignment, GroupLabel, PartyKeyPair, PublicIdentity, Registry,
    SignedTimestamp, Timestamp,
};
use graphmark::owner::Owner;
use graphmark::suitability::{suitability, suitability_for_k};
use graphmark::Graph;
use log::info;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::args::*;
use crate::report::{write_graph, write_json, Context, Outcome};

const GRAPH_KEY_FILE: &str = "graph.key";
const GROUPS_FILE: &str = "groups.json";

#[derive(Serialize, Deserialize)]
struct GraphKeyFile {
    graph_key: GraphKey,
}

/// What `respond` writes and `embed --response` reads.
#[derive(Serialize, Deserialize)]
struct Response {
    identity: PublicIdentity,
    response: SignedTimestamp,
}

pub fn run(command: &Command, ctx: &mut Context) -> Result<Outcome> {
    match command {
        Command::Keygen(a) => keygen(a, ctx),
        Command::Respond(a) => respond(a, ctx),
        Command::Bounds(a) => bounds(a),
        Command::Suitability(a) => suitability_cmd(a, ctx),
        Command::Embed(a) => embed(a, ctx),
        Command::Extract(a) => extract(a, ctx),
        Command::Attack(AttackCommand::Single(a)) => attack_single(a, ctx),
        Command::Attack(AttackCommand::Collude(a)) => attack_collude(a, ctx),
        Command::Metrics(a) => metrics_cmd(a, ctx),
        Command::Sweep(a) => sweep(a, ctx),
        Command::Generate(a) => generate_cmd(a, ctx),
    }
}

fn user_key_path(dir: &Path, user: &str) -> PathBuf {
    dir.join("users").join(format!("{user}.json"))
}

fn check_user_id(id: &str) -> Result<()> {
    let ok = !id.is_empty()
        && !id.starts_with('.')
        && id.chars().all(|c| c.is_ascii_alphanumeric() || "-_.@".contains(c));
    ensure!(ok, "invalid user id `{id}`: use letters, digits and - _ . @");
    Ok(())
}

fn timestamp(text: Option<&str>) -> Result<Timestamp> {
    Ok(match text {
        Some(t) => Timestamp::parse(t)?,
        None => Timestamp::now(),
    })
}

fn keygen(a: &KeygenArgs, ctx: &mut Context) -> Result<Outcome> {
    let key_path = a.dir.join(GRAPH_KEY_FILE);
    if key_path.exists() && !a.force {
        bail!("{} exists; pass --force to replace it", key_path.display());
    }
    for u in &a.users {
        check_user_id(u)?;
    }
    let mut rng = ChaCha20Rng::seed_from_u64(ctx.seed);
    let mut bytes = [0u8; 32];
    rng.fill_bytes(&mut bytes);
    let key = GraphKey::from_bytes(bytes);

    let mut users = Vec::new();
    for u in &a.users {
        let pair = PartyKeyPair::generate_with(u.clone(), &mut rng);
        let path = user_key_path(&a.dir, u);
        write_json(&path, &pair, a.force)?;
        users.push(json!({ "identity": pair.public(), "file": path }));
    }
    let mut groups = BTreeMap::new();
    if a.groups {
        let assignment = group_setup(&a.users, &key, ctx.seed)?;
        for label in GroupLabel::ALL {
            groups.insert(label.to_string(), assignment.group_members(label).map(String::from).collect::<Vec<_>>());
        }
        write_json(&a.dir.join(GROUPS_FILE), &assignment, a.force)?;
    }
    write_json(&key_path, &GraphKeyFile { graph_key: key }, a.force)?;
    Outcome::new(json!({
        "graph_key_file": key_path,
        "users": users,
        "groups": if a.groups { Some(groups) } else { None },
    }))
}

fn respond(a: &RespondArgs, ctx: &mut Context) -> Result<Outcome> {
    let pair: PartyKeyPair = ctx.read_json(&a.key)?;
    let t = timestamp(a.timestamp.as_deref())?;
    let out = Response {
        identity: pair.public(),
        response: pair.respond(&t),
    };
    write_json(&a.out, &out, true)?;
    Outcome::new(json!({ "party_id": pair.party_id, "timestamp": t, "out": a.out }))
}

#[derive(Serialize)]
struct BoundsOut {
    #[serde(flatten)]
    report: BoundsReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    collusion: Option<Collusion>,
}

#[derive(Serialize)]
struct Collusion {
    m_a: u32,
    j: u32,
    lambda: f64,
    lambda_single_partition: f64,
}

fn bounds(a: &BoundsArgs) -> Result<Outcome> {
    let report = bounds_report(a.n, a.delta, a.target)?;
    let collusion = match a.ma {
        Some(m) => Some(Collusion {
            m_a: m,
            j: a.j,
            lambda: collusion_lambda(m, a.j)?,
            lambda_single_partition: collusion_lambda_single(m, a.j)?,
        }),
        None => None,
    };
    Outcome::new(BoundsOut { report, collusion })
}

fn suitability_cmd(a: &SuitabilityArgs, ctx: &mut Context) -> Result<Outcome> {
    let g = ctx.read_graph(&a.graph)?;
    let report = match a.k {
        Some(k) => {
            ensure!(k >= 2, "--k must be at least 2");
            suitability_for_k(&g, k, a.delta, a.trials, ctx.seed)
        }
        None => suitability(&g, a.delta, a.trials, ctx.seed)?,
    };
    Outcome::new(report)
}

fn watermark_size(n: usize, delta: f64, k: Option<usize>) -> Result<usize> {
    match k {
        Some(k) => {
            ensure!((2..=graphmark::extract::MAX_K).contains(&k), "--k must lie in 2..={}", graphmark::extract::MAX_K);
            Ok(k)
        }
        None => Ok(compute_k(n as u64, delta)?),
    }
}

fn edge_changes(before: &Graph, after: &Graph) -> (usize, usize) {
    let added = after.edges().filter(|&(u, v)| !before.edge_exists(u, v)).count();
    let removed = before.edges().filter(|&(u, v)| !after.edge_exists(u, v)).count();
    (added, removed)
}

fn embed(a: &EmbedArgs, ctx: &mut Context) -> Result<Outcome> {
    check_user_id(&a.user)?;
    ensure!(a.copies >= 1, "--copies must be at least 1");
    let bytes = ctx.read(&a.graph)?;
    let graph_id = crate::report::digest(&bytes);
    let (g, ids) = graphmark::graph::parse_edge_list(std::io::Cursor::new(bytes), &a.graph)?;
    let k = watermark_size(g.node_count(), a.delta, a.k)?;
    let key: GraphKeyFile = ctx.read_json(&a.keys.join(GRAPH_KEY_FILE))?;

    let (identity, signed) = match &a.response {
        Some(path) => {
            ensure!(a.timestamp.is_none(), "--timestamp is fixed by the response file");
            let r: Response = ctx.read_json(path)?;
            ensure!(
                r.identity.party_id == a.user,
                "response file is from `{}`, not `{}`",
                r.identity.party_id,
                a.user
            );
            (r.identity, r.response)
        }
        None => {
            let pair: PartyKeyPair = ctx.read_json(&user_key_path(&a.keys, &a.user))?;
            let t = timestamp(a.timestamp.as_deref())?;
            (pair.public(), pair.respond(&t))
        }
    };

    let mut owner = Owner::new(g, key.graph_key, k, a.copies);
    if a.groups {
        let assignment: GroupAssignment = ctx.read_json(&a.keys.join(GROUPS_FILE))?;
        owner = owner.with_groups(assignment)?;
    }
    let mut registry = if a.registry.exists() {
        let r = ctx.read_registry(&a.registry)?;
        ensure!(
            r.graph_id == graph_id,
            "{} belongs to another graph ({})",
            a.registry.display(),
            r.graph_id
        );
        r
    } else {
        Registry::new(graph_id)
    };

    let mut rng = ChaCha20Rng::seed_from_u64(ctx.seed);
    let issued = owner.issue(&identity, &signed, &mut rng)?;
    let (added, removed) = edge_changes(owner.graph(), &issued.watermarked);
    let records: Vec<_> = issued
        .entry
        .records
        .iter()
        .map(|r| json!({ "role": r.role, "copy_index": r.copy_index, "embedded_edges": r.edges.len() }))
        .collect();
    let groups = issued.entry.groups;
    let timestamp = issued.entry.timestamp.clone();
    registry.push(issued.entry);
    registry_store(&a.registry, &registry)?;
    write_graph(&issued.release.graph, &a.out)?;
    if let Some(path) = &a.clean_out {
        write_graph_ids(&issued.watermarked, &ids, path)?;
    }
    info!("issued {} watermarks to {}", records.len(), a.user);
    Outcome::new(json!({
        "party_id": a.user,
        "timestamp": timestamp,
        "k": k,
        "copies": a.copies,
        "groups": groups,
        "records": records,
        "edges_added": added,
        "edges_removed": removed,
        "released": { "nodes": issued.release.graph.node_count(), "edges": issued.release.graph.edge_count(), "out": a.out },
        "registry": { "path": a.registry, "entries": registry.len() },
    }))
}

/// Writes `g` using the ids of the file it was loaded from.
fn write_graph_ids(g: &Graph, ids: &IdRemap, path: &Path) -> Result<()> {
    use std::io::Write;
    let file = fs::File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
    let mut w = std::io::BufWriter::new(file);
    for (u, v) in g.edges() {
        writeln!(w, "{} {}", ids.original(u), ids.original(v))?;
    }
    w.flush()?;
    Ok(())
}

fn match_config(
    mode: Mode,
    bucket: Option<u32>,
    theta: Option<f64>,
    max_mismatch: Option<u32>,
    step_limit: Option<u64>,
    n: usize,
) -> Result<MatchConfig> {
    let cfg = match mode {
        Mode::Exact => {
            ensure!(
                bucket.is_none() && theta.is_none() && max_mismatch.is_none(),
                "bucket, theta and L only apply to approx mode"
            );
            MatchConfig {
                step_limit,
                ..MatchConfig::exact()
            }
        }
        Mode::Approx => {
            let d = MatchConfig::approx(n as u64);
            MatchConfig {
                mode: MatchMode::Approx,
                bucket_size: bucket.unwrap_or(d.bucket_size),
                theta: theta.unwrap_or(d.theta),
                max_mismatch: max_mismatch.unwrap_or(d.max_mismatch),
                step_limit,
            }
        }
    };
    cfg.validate()?;
    Ok(cfg)
}

fn extract(a: &ExtractArgs, ctx: &mut Context) -> Result<Outcome> {
    let suspect = ctx.read_graph(&a.suspect)?;
    let registry = ctx.read_registry(&a.registry)?;
    let m = &a.matching;
    let cfg = match_config(m.mode, m.bucket, m.theta, m.max_mismatch, m.step_limit, suspect.node_count())?;
    let report = extract_all(&suspect, &registry, &cfg)?;
    info!(
        "{} individual hit(s), groups {:?}",
        report.individual_hits.len(),
        report.groups
    );
    let rows = report
        .users
        .iter()
        .flat_map(|u| {
            u.records.iter().map(move |r| {
                json!({
                    "party_id": u.party_id,
                    "role": role_name(r.role),
                    "copy_index": r.copy_index,
                    "matched": r.matched,
                    "mismatch_count": r.mismatch_count,
                    "search_steps": r.search_steps,
                    "gave_up": r.gave_up,
                    "elapsed_ms": r.elapsed_ms,
                })
            })
        })
        .collect();
    let found = report.any_hit();
    let mut out = Outcome::new(report)?.with_rows(rows);
    out.found = found;
    Ok(out)
}

fn role_name(role: Role) -> String {
    match role {
        Role::Individual => "individual".to_string(),
        Role::Group(g) => g.to_string(),
    }
}

fn attack_single(a: &SingleArgs, ctx: &mut Context) -> Result<Outcome> {
    ensure!(a.graphs.len() == 1, "a single attack takes exactly one graph");
    ensure!((0.0..=1.0).contains(&a.add_fraction), "--add-fraction must lie in [0, 1]");
    let g = ctx.read_graph(&a.graphs[0])?;
    let cfg = AttackConfig {
        edges_to_modify: a.strength,
        add_fraction: a.add_fraction,
        seed: ctx.seed,
        ..AttackConfig::default()
    };
    let mut outcome = single_attack(&g, &cfg)?;
    if let (Some(o), Some(c)) = (&a.original, &a.clean) {
        let original = ctx.read_graph(o)?;
        let clean = ctx.read_graph(c)?;
        outcome.normalized_distortion = normalized_distortion(&original, &clean, &outcome.graph);
    }
    write_graph(&outcome.graph, &a.out)?;
    Outcome::new(json!({ "outcome": outcome, "config": cfg, "out": a.out }))
}

fn attack_collude(a: &ColludeArgs, ctx: &mut Context) -> Result<Outcome> {
    if let Some(m) = a.ma {
        ensure!(m == a.graphs.len(), "--ma {m} but {} graphs given", a.graphs.len());
    }
    let graphs = a.graphs.iter().map(|p| ctx.read_graph(p)).collect::<Result<Vec<_>>>()?;
    let cfg = AttackConfig {
        seeds_matched: a.seeds_matched,
        margin: a.margin,
        tie_policy: match a.tie {
            Tie::Drop => TiePolicy::Drop,
            Tie::Keep => TiePolicy::Keep,
        },
        seed: ctx.seed,
        ..AttackConfig::default()
    };
    let outcome = collusion_attack(&graphs, &cfg)?;
    write_graph(&outcome.graph, &a.out)?;
    Outcome::new(json!({ "outcome": outcome, "config": cfg, "out": a.out }))
}

fn metrics_cmd(a: &MetricsArgs, ctx: &mut Context) -> Result<Outcome> {
    let bytes = ctx.read(&a.original)?;
    let (original, ids) = graphmark::graph::parse_edge_list(std::io::Cursor::new(bytes), &a.original)?;
    match &a.changed {
        None => Outcome::new(metrics(&original, a.samples, ctx.seed)),
        Some(path) => {
            let bytes = ctx.read(path)?;
            let (changed, changed_ids) = graphmark::graph::parse_edge_list(std::io::Cursor::new(bytes), path)?;
            let aligned = align(&changed, &changed_ids, &ids, original.node_count())?;
            Outcome::new(distortion_report(&original, &aligned, a.samples, ctx.seed)?)
        }
    }
}

/// Re-expresses `g` in the compact ids of another file's id table.
fn align(g: &Graph, own: &IdRemap, target: &IdRemap, n: usize) -> Result<Graph> {
    let index: HashMap<u64, u32> = (0..target.len() as u32).map(|c| (target.original(c), c)).collect();
    let map = |v: u32| -> Result<u32> {
        let raw = own.original(v);
        index
            .get(&raw)
            .copied()
            .with_context(|| format!("node {raw} does not occur in the original graph"))
    };
    let edges = g.edges().map(|(u, v)| Ok((map(u)?, map(v)?))).collect::<Result<Vec<_>>>()?;
    Ok(Graph::from_edges(n, edges))
}

fn default_copies() -> u32 {
    3
}
fn default_true() -> bool {
    true
}
fn default_delta() -> f64 {
    0.3
}
fn default_reps() -> usize {
    10
}
fn default_add() -> f64 {
    0.5
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SweepFile {
    /// Relative paths are taken from the config file's directory.
    graph: PathBuf,
    #[serde(default = "default_copies")]
    copies: u32,
    #[serde(default = "default_true")]
    groups: bool,
    #[serde(default = "default_delta")]
    delta: f64,
    k: Option<usize>,
    strengths: Vec<usize>,
    #[serde(default = "default_reps")]
    repetitions: usize,
    #[serde(default = "default_add")]
    add_fraction: f64,
    #[serde(default)]
    modes: Vec<ModeSpec>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModeSpec {
    name: Option<String>,
    mode: Mode,
    bucket: Option<u32>,
    theta: Option<f64>,
    #[serde(rename = "L")]
    max_mismatch: Option<u32>,
    step_limit: Option<u64>,
}

fn sweep(a: &SweepArgs, ctx: &mut Context) -> Result<Outcome> {
    let bytes = ctx.read(&a.config)?;
    let text = String::from_utf8(bytes).context("sweep config is not UTF-8")?;
    let cfg: SweepFile = if a.config.extension().is_some_and(|e| e == "toml") {
        toml::from_str(&text).with_context(|| format!("{}: bad sweep config", a.config.display()))?
    } else {
        serde_json::from_str(&text).with_context(|| format!("{}: bad sweep config", a.config.display()))?
    };
    ensure!(!cfg.strengths.is_empty(), "sweep config lists no strengths");
    let graph_path = match a.config.parent() {
        Some(dir) if cfg.graph.is_relative() => dir.join(&cfg.graph),
        _ => cfg.graph.clone(),
    };
    let g = ctx.read_graph(&graph_path)?;
    let k = watermark_size(g.node_count(), cfg.delta, cfg.k)?;
    let n = g.node_count();
    let modes = if cfg.modes.is_empty() {
        vec![
            ("exact".to_string(), match_config(Mode::Exact, None, None, None, None, n)?),
            ("approx".to_string(), match_config(Mode::Approx, None, None, None, None, n)?),
        ]
    } else {
        cfg.modes
            .iter()
            .enumerate()
            .map(|(i, m)| {
                let name = m.name.clone().unwrap_or_else(|| format!("mode{i}"));
                Ok((name, match_config(m.mode, m.bucket, m.theta, m.max_mismatch, m.step_limit, n)?))
            })
            .collect::<Result<Vec<_>>>()?
    };

    let mut rng = ChaCha20Rng::seed_from_u64(ctx.seed);
    let mut key = [0u8; 32];
    rng.fill_bytes(&mut key);
    let key = GraphKey::from_bytes(key);
    let user = PartyKeyPair::generate_with("sweep", &mut rng);
    let mut owner = Owner::new(g, key.clone(), k, cfg.copies);
    if cfg.groups {
        owner = owner.with_groups(group_setup(&[user.party_id.clone()], &key, ctx.seed)?)?;
    }
    let issued = owner.issue_to(&user, &Timestamp::from_unix(0)?, &mut rng)?;
    let cfg = SweepConfig {
        strengths: cfg.strengths.clone(),
        repetitions: cfg.repetitions,
        add_fraction: cfg.add_fraction,
        modes,
        seed: ctx.seed,
    };
    let points = robustness_sweep(owner.graph(), &issued.release.graph, &issued.entry.records, &cfg)?;
    let rows = points
        .iter()
        .flat_map(|p| {
            p.survival.iter().map(move |(mode, s)| {
                json!({
                    "strength": p.strength,
                    "normalized_distortion": p.normalized_distortion,
                    "mode": mode,
                    "individual": s.individual,
                    "any": s.any,
                })
            })
        })
        .collect();
    Ok(Outcome::new(json!({
        "k": k,
        "watermarks": issued.entry.records.len(),
        "config": cfg,
        "points": points,
    }))?
    .with_rows(rows))
}

fn generate_cmd(a: &GenerateArgs, ctx: &mut Context) -> Result<Outcome> {
    let g = match a.kind {
        Kind::HeavyTailed => {
            let m = a.m.unwrap_or(3 * a.n);
            ensure!(a.n >= 2, "--n must be at least 2");
            ensure!(a.exponent > 1.0, "--exponent must exceed 1");
            let cap = a.n * (a.n - 1) / 4;
            ensure!(m + 1 >= a.n && m <= cap, "--m must lie in [{}, {cap}]", a.n - 1);
            generate::heavy_tailed(a.n, m, a.exponent, ctx.seed)
        }
        Kind::ErdosRenyi => {
            ensure!((0.0..=1.0).contains(&a.p), "--p must lie in [0, 1]");
            generate::erdos_renyi(a.n, a.p, ctx.seed)
        }
        Kind::Grid => generate::grid(a.n, a.m.unwrap_or(a.n)),
    };
    ensure!(g.edge_count() > 0, "the generated graph has no edges");
    write_graph(&g, &a.out)?;
    Outcome::new(json!({
        "kind": a.kind,
        "nodes": g.node_count(),
        "edges": g.edge_count(),
        "out": a.out,
    }))
}
