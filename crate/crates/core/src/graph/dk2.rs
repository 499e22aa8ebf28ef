use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::Graph;

/// Joint degree distribution: edge counts keyed by the ordered degree pair
/// `(d1, d2)`, `d1 <= d2`, of each edge's endpoints.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dk2Series {
    entries: BTreeMap<(u32, u32), u64>,
}

impl Dk2Series {
    pub fn get(&self, d1: u32, d2: u32) -> u64 {
        let key = if d1 <= d2 { (d1, d2) } else { (d2, d1) };
        self.entries.get(&key).copied().unwrap_or(0)
    }

    pub fn insert(&mut self, d1: u32, d2: u32, count: u64) {
        let key = if d1 <= d2 { (d1, d2) } else { (d2, d1) };
        if count == 0 {
            self.entries.remove(&key);
        } else {
            self.entries.insert(key, count);
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn total(&self) -> u64 {
        self.entries.values().sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = ((u32, u32), u64)> + '_ {
        self.entries.iter().map(|(&k, &v)| (k, v))
    }
}

pub fn dk2_series(g: &Graph) -> Dk2Series {
    let deg = g.degrees();
    let mut series = Dk2Series::default();
    for (u, v) in g.edges() {
        let (a, b) = (deg[u as usize], deg[v as usize]);
        let key = if a <= b { (a, b) } else { (b, a) };
        *series.entries.entry(key).or_insert(0) += 1;
    }
    series
}

/// Scaled Euclidean distance `(1/D) * sqrt(sum (a - b)^2)`, where the sum and
/// `D` both range over the union of the two key sets and a missing entry
/// counts as zero.
pub fn dk2_distance(a: &Dk2Series, b: &Dk2Series) -> f64 {
    let mut keys = 0usize;
    let mut sum = 0f64;
    let mut ia = a.entries.iter().peekable();
    let mut ib = b.entries.iter().peekable();
    loop {
        let (x, y) = match (ia.peek(), ib.peek()) {
            (None, None) => break,
            (Some(_), None) => (*ia.next().unwrap().1, 0),
            (None, Some(_)) => (0, *ib.next().unwrap().1),
            (Some((ka, _)), Some((kb, _))) => match ka.cmp(kb) {
                std::cmp::Ordering::Less => (*ia.next().unwrap().1, 0),
                std::cmp::Ordering::Greater => (0, *ib.next().unwrap().1),
                std::cmp::Ordering::Equal => (*ia.next().unwrap().1, *ib.next().unwrap().1),
            },
        };
        keys += 1;
        let d = x as f64 - y as f64;
        sum += d * d;
    }
    if keys == 0 {
        0.0
    } else {
        sum.sqrt() / keys as f64
    }
}
