//! End-to-end acceptance run: one PASS/FAIL line per criterion.
//!
//! Runs as a plain binary (`cargo test --test acceptance`). Failing
//! criteria are reported but do not change the exit status unless
//! `GRAPHMARK_ACCEPTANCE_STRICT=1` is set.

mod common;

use std::time::{Duration, Instant};

use graphmark::bounds::{
    collusion_lambda_exact, collusion_lambda_single_exact, compute_k, max_l, DEFAULT_DELTA, DEFAULT_TARGET,
};
use graphmark::embed::Role;
use graphmark::extract::{count_mismatches, extract_all, with_workers, MatchConfig};
use graphmark::graph::GraphMetrics;
use graphmark::Graph;
use num_rational::BigRational;

use common::experiments::{collusion_trial, distortion, robustness, uniqueness};
use common::oracle::{compare, configs, instance};
use common::tables::{nodes_of, GRAPH_SIZES, MAX_MISMATCH};
use common::{oregon, scenario, synthetic};

struct Ledger {
    passed: usize,
    failed: Vec<&'static str>,
}

impl Ledger {
    fn report(&mut self, id: &'static str, name: &str, pass: bool, detail: String) {
        println!("{id:<4} {} {name}: {detail}", if pass { "PASS" } else { "FAIL" });
        if pass {
            self.passed += 1;
        } else {
            self.failed.push(id);
        }
    }
}

fn info(text: String) {
    println!("     info {text}");
}

fn secs(d: Duration) -> String {
    format!("{:.2} s", d.as_secs_f64())
}

fn main() {
    let threads = std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1);
    println!("acceptance run on {threads} hardware thread(s)");
    let mut l = Ledger {
        passed: 0,
        failed: Vec::new(),
    };
    let oregon = oregon();
    let big = synthetic(100_000, 9);

    parameters(&mut l);
    mismatch_budget(&mut l);
    lambda(&mut l);
    roundtrip(&mut l, &oregon, &big);
    false_positives(&mut l, &oregon);
    distortion_criterion(&mut l, &big);
    robustness_criterion(&mut l, &oregon, &big);
    collusion(&mut l, &oregon);
    oracle(&mut l);
    scaling(&mut l, &big, threads);

    println!("{} of {} criteria passed", l.passed, l.passed + l.failed.len());
    if !l.failed.is_empty() {
        println!("failed: {}", l.failed.join(", "));
        if std::env::var("GRAPHMARK_ACCEPTANCE_STRICT").is_ok_and(|v| v == "1") {
            std::process::exit(1);
        }
    }
}

fn parameters(l: &mut Ledger) {
    let start = Instant::now();
    let wrong: Vec<String> = GRAPH_SIZES
        .iter()
        .filter_map(|&(name, n, k)| {
            let got = compute_k(n, DEFAULT_DELTA).ok()?;
            (got != k).then(|| format!("{name}: {got} vs {k}"))
        })
        .collect();
    let t = start.elapsed();
    l.report(
        "C1",
        "watermark size k",
        wrong.is_empty() && GRAPH_SIZES.len() >= 10 && t < Duration::from_secs(1),
        format!(
            "{}/{} rows exact in {:.1} ms{}",
            GRAPH_SIZES.len() - wrong.len(),
            GRAPH_SIZES.len(),
            t.as_secs_f64() * 1e3,
            if wrong.is_empty() { String::new() } else { format!("; {}", wrong.join("; ")) }
        ),
    );
}

fn mismatch_budget(l: &mut Ledger) {
    let start = Instant::now();
    let (mut exact, mut within, mut worst) = (0, 0, 0i64);
    for &(name, want) in MAX_MISMATCH {
        let got = max_l(nodes_of(name), DEFAULT_DELTA, DEFAULT_TARGET).unwrap();
        let diff = (got - want).abs();
        worst = worst.max(diff);
        exact += (diff == 0) as usize;
        within += (diff <= 1) as usize;
        if diff != 0 {
            info(format!("max_L discrepancy for {name}: computed {got}, published {want}"));
        }
    }
    let named = [("Oregon (1)", 0), ("Russia", 4), ("Twitter", 3), ("Livejournal", 12)]
        .iter()
        .all(|&(name, want)| max_l(nodes_of(name), DEFAULT_DELTA, DEFAULT_TARGET).unwrap() == want);
    let t = start.elapsed();
    l.report(
        "C2",
        "edge-mismatch budget max_L",
        within == MAX_MISMATCH.len() && named && t < Duration::from_secs(10),
        format!(
            "{exact}/{} rows exact, {within} within ±1 (worst {worst}), named rows {}, {}",
            MAX_MISMATCH.len(),
            if named { "exact" } else { "off" },
            secs(t)
        ),
    );
}

fn lambda(l: &mut Ledger) {
    let r = |a: i64, b: i64| BigRational::new(a.into(), b.into());
    let two = collusion_lambda_exact(2, 2).unwrap();
    let single = collusion_lambda_single_exact(2, 2).unwrap();
    let odd: Vec<BigRational> = [1, 3, 5, 7, 9].iter().map(|&m| collusion_lambda_exact(m, 2).unwrap()).collect();
    let pass = two == r(1, 4) && single == r(1, 2) && odd.iter().all(|x| *x == r(0, 1));
    l.report(
        "C3",
        "collusion probability",
        pass,
        format!("λ(2,2) = {two}, single partition {single}, odd M_a ∈ {{1,3,5,7,9}} → {:?}", odd.iter().map(|x| x.to_string()).collect::<Vec<_>>()),
    );
}

/// Ten users with three individual and two group watermarks each; every
/// release must trace to its own user only, with edge-exact matches.
fn roundtrips(g: &Graph, seed: u64) -> (usize, bool) {
    let s = scenario(g.clone(), 10, 3, true, seed);
    let mut ok = 0;
    let mut exact = true;
    for (i, issued) in s.issued.iter().enumerate() {
        let report = extract_all(&issued.release.graph, &s.registry, &MatchConfig::exact()).unwrap();
        ok += (report.individual_hits == [format!("user{i}")]) as usize;
        let own = &report.users[i];
        for (res, rec) in own.records.iter().zip(&issued.entry.records) {
            let Some(y) = &res.mapping else { continue };
            exact &= count_mismatches(&issued.release.graph, rec, y) == 0;
            let truth: Vec<u32> = rec.nodes.iter().map(|&x| issued.permutation[x as usize]).collect();
            exact &= count_mismatches(&issued.release.graph, rec, &truth) == 0;
        }
    }
    (ok, exact)
}

fn roundtrip(l: &mut Ledger, oregon: &Graph, big: &Graph) {
    let start = Instant::now();
    let (a, ea) = roundtrips(oregon, 41);
    let (b, eb) = roundtrips(big, 42);
    let t = start.elapsed();
    l.report(
        "C4",
        "roundtrip soundness",
        a == 10 && b == 10 && ea && eb && t < Duration::from_secs(120),
        format!(
            "Oregon-size {a}/10, 100K {b}/10, matched subgraphs edge-exact: {}, {}",
            ea && eb,
            secs(t)
        ),
    );
}

fn false_positives(l: &mut Ledger, oregon: &Graph) {
    let u = uniqueness(oregon.clone(), 20, 10, 11);
    l.report(
        "C5",
        "cross-user false positives",
        u.trials >= 200 && u.exact_hits == 0 && u.approx_hits == 0,
        format!(
            "{} trials: {} exact hits, {} hits with L = {} (B = {}, θ = {})",
            u.trials, u.exact_hits, u.approx_hits, u.approx_cfg.max_mismatch, u.approx_cfg.bucket_size, u.approx_cfg.theta
        ),
    );
}

/// Agreement to two significant digits: the values differ by at most half
/// a unit in the second significant digit of the larger magnitude, with an
/// absolute floor of 0.005 for values near zero.
fn same_two_digits(a: f64, b: f64) -> bool {
    let m = a.abs().max(b.abs());
    if m == 0.0 {
        return true;
    }
    let unit = 10f64.powf(m.log10().floor() - 1.0);
    (a - b).abs() <= (0.5 * unit).max(0.005)
}

fn metrics_agree(x: &GraphMetrics, y: &GraphMetrics) -> Vec<&'static str> {
    let mut off = Vec::new();
    for (name, a, b) in [
        ("avg_degree", x.avg_degree, y.avg_degree),
        ("assortativity", x.assortativity, y.assortativity),
        ("avg_clustering", x.avg_clustering, y.avg_clustering),
        ("avg_path", x.sampled_avg_path, y.sampled_avg_path),
        ("diameter", x.sampled_diameter as f64, y.sampled_diameter as f64),
    ] {
        if !same_two_digits(a, b) {
            off.push(name);
        }
    }
    off
}

fn distortion_criterion(l: &mut Ledger, big: &Graph) {
    let start = Instant::now();
    let d = distortion(big.clone(), 500, true, 6);
    let r = &d.report;
    let off = metrics_agree(&r.before, &r.after);
    let small = r.node_fraction < 0.001 && r.edge_fraction < 0.001;
    let quiet = r.dk2_distance <= 10.0 * d.noise_dk2;
    l.report(
        "C6",
        "distortion of five watermarks",
        d.watermarks == 5 && small && quiet && off.is_empty(),
        format!(
            "100K graph: {:.3}% of nodes, {:.3}% of edges (limit 0.1%); dK-2 {:.2e} vs noise {:.2e} ({:.2}x); metrics off at 2 digits: {:?}; {}",
            100.0 * r.node_fraction,
            100.0 * r.edge_fraction,
            r.dk2_distance,
            d.noise_dk2,
            r.dk2_distance / d.noise_dk2,
            off,
            secs(start.elapsed())
        ),
    );
    info(format!(
        "100K before/after: degree {:.3}/{:.3}, assortativity {:.4}/{:.4}, clustering {:.4}/{:.4}, path {:.3}/{:.3}, diameter {}/{}",
        r.before.avg_degree,
        r.after.avg_degree,
        r.before.assortativity,
        r.after.assortativity,
        r.before.avg_clustering,
        r.after.avg_clustering,
        r.before.sampled_avg_path,
        r.after.sampled_avg_path,
        r.before.sampled_diameter,
        r.after.sampled_diameter
    ));
    // at the size of the original comparison the same embedding is a much
    // smaller share of the graph
    let start = Instant::now();
    let g = graphmark::graph::generate::heavy_tailed(600_000, 7_600_000, 2.1, 13);
    let d = distortion(g, 0, false, 13);
    let r = &d.report;
    info(format!(
        "600K / 7.6M-edge graph: {:.3}% of nodes, {:.4}% of edges, dK-2 {:.2e} vs noise {:.2e}; {}",
        100.0 * r.node_fraction,
        100.0 * r.edge_fraction,
        r.dk2_distance,
        d.noise_dk2,
        secs(start.elapsed())
    ));
}

fn robustness_criterion(l: &mut Ledger, oregon: &Graph, big: &Graph) {
    let start = Instant::now();
    let mut pass = true;
    let mut parts = Vec::new();
    for (name, g, seed) in [("Oregon-size", oregon, 21u64), ("100K", big, 22)] {
        let r = robustness(g.clone(), 10, seed);
        let ok = r.improved_at_50x == Some(1.0);
        pass &= ok;
        parts.push(format!(
            "{name}: basic < 100% at {} edges, improved (L = {}) at 50x: {}",
            r.basic_break.map_or("never".into(), |b| b.to_string()),
            r.improved_cfg.max_mismatch,
            r.improved_at_50x.map_or("n/a".into(), |s| format!("{:.0}%", 100.0 * s))
        ));
        for (st, basic, improved) in &r.points {
            info(format!("{name} strength {st}: basic {basic:.2}, improved {improved:.2}"));
        }
    }
    parts.push(secs(start.elapsed()));
    l.report("C7", "robustness ordering", pass, parts.join("; "));
}

fn collusion(l: &mut Ledger, oregon: &Graph) {
    let start = Instant::now();
    let trials = 40;
    let mut destroyed = 0;
    let mut destroyed_ideal = 0;
    let mut consistent = true;
    for seed in 0..trials {
        let t = collusion_trial(oregon, 10, 2, 5000 + seed);
        destroyed += t.groups_surviving.is_empty() as usize;
        destroyed_ideal += t.surviving_exact_alignment.is_empty() as usize;
        consistent &= t.groups_surviving.is_empty() != t.shared_group;
    }
    let rate = destroyed as f64 / trials as f64;
    let three = 20;
    let (mut shared, mut kept, mut kept_ideal) = (0, 0, 0);
    let mut lost = Vec::new();
    for seed in 0..three {
        let t = collusion_trial(oregon, 10, 3, 7000 + seed);
        if t.shared_group {
            shared += 1;
            kept += !t.groups_surviving.is_empty() as usize;
            kept_ideal += !t.surviving_exact_alignment.is_empty() as usize;
            if t.groups_surviving.is_empty() {
                lost.push(format!(
                    "seed {}: reference copy {} a shared group",
                    7000 + seed,
                    if t.reference_shares { "holds" } else { "lacks" }
                ));
            }
        }
    }
    l.report(
        "C8",
        "collusion",
        (rate - 0.25).abs() <= 0.15 && kept == shared && shared > 0,
        format!(
            "M_a = 2: {destroyed}/{trials} trials destroyed every group watermark ({rate:.3}, target 0.25 ± 0.15), \
             survivors exactly the shared groups: {consistent}; M_a = 3: a group survived in {kept}/{shared} trials with a shared group; {}",
            secs(start.elapsed())
        ),
    );
    for x in lost {
        info(format!("M_a = 3 loss, {x}"));
    }
    info(format!(
        "with the true node correspondence instead of the matcher: M_a = 2 destroyed {destroyed_ideal}/{trials}, M_a = 3 kept a group in {kept_ideal}/{shared}"
    ));
}

fn oracle(l: &mut Ledger) {
    let start = Instant::now();
    let instances = 600;
    let mut bad = Vec::new();
    let mut positives = 0;
    for (name, cfg) in configs() {
        for seed in 0..instances {
            let c = compare(&instance(seed), &cfg);
            positives += c.oracle_found as usize;
            if !c.agree || !c.pruning_sound {
                bad.push(format!("{name} seed {seed}"));
            }
        }
    }
    l.report(
        "C9",
        "agreement with exhaustive search",
        bad.is_empty(),
        format!(
            "{} instances × {} settings ({} with a match): {} disagreements{}; {}",
            instances,
            configs().len(),
            positives,
            bad.len(),
            if bad.is_empty() { String::new() } else { format!(" ({})", bad.join(", ")) },
            secs(start.elapsed())
        ),
    );
}

fn median_time(reps: usize, mut f: impl FnMut()) -> f64 {
    let mut ts: Vec<f64> = (0..reps)
        .map(|_| {
            let s = Instant::now();
            f();
            s.elapsed().as_secs_f64()
        })
        .collect();
    ts.sort_by(f64::total_cmp);
    ts[reps / 2]
}

/// Least-squares slope of log(t) against log(n).
fn loglog_slope(points: &[(f64, f64)]) -> f64 {
    let xs: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let mx = xs.iter().sum::<f64>() / xs.len() as f64;
    let my = ys.iter().sum::<f64>() / ys.len() as f64;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

fn scaling(l: &mut Ledger, big: &Graph, threads: usize) {
    let start = Instant::now();
    let graphs = [synthetic(10_000, 31), big.clone(), synthetic(1_000_000, 33)];
    let mut exact = Vec::new();
    let mut approx = Vec::new();
    let mut largest = None;
    for (i, g) in graphs.into_iter().enumerate() {
        let n = g.node_count();
        let s = scenario(g, 1, 3, true, 60 + i as u64);
        let released = &s.issued[0].release.graph;
        let acfg = MatchConfig::approx(n as u64);
        let check = |cfg: &MatchConfig| {
            let r = extract_all(released, &s.registry, cfg).unwrap();
            assert_eq!(r.individual_hits.len(), 1);
            assert!(r.users[0].records.iter().filter(|x| x.role == Role::Individual).all(|x| x.matched));
        };
        exact.push((n as f64, median_time(3, || check(&MatchConfig::exact()))));
        approx.push((n as f64, median_time(3, || check(&acfg))));
        largest = Some(s);
    }
    let se = loglog_slope(&exact);
    let sa = loglog_slope(&approx);
    let fmt = |p: &[(f64, f64)]| p.iter().map(|(_, t)| format!("{:.0} ms", t * 1e3)).collect::<Vec<_>>().join(" / ");

    let s = largest.unwrap();
    let released = &s.issued[0].release.graph;
    let acfg = MatchConfig::approx(released.node_count() as u64);
    let run = |w: usize| {
        with_workers(Some(w), || median_time(3, || drop(extract_all(released, &s.registry, &acfg).unwrap()))).unwrap()
    };
    let one = run(1);
    let eight = run(8);
    let speedup = one / eight;
    l.report(
        "C10",
        "scaling",
        se <= 1.3 && sa <= 1.3 && speedup >= 4.0,
        format!(
            "10K/100K/1M exact {} (slope {se:.2}), approx {} (slope {sa:.2}); 1M approx 1 worker {:.0} ms, 8 workers {:.0} ms, speedup {speedup:.2}x on {threads} hardware thread(s); {}",
            fmt(&exact),
            fmt(&approx),
            one * 1e3,
            eight * 1e3,
            secs(start.elapsed())
        ),
    );
}
