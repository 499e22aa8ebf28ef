//! Node structure descriptors: a node's sorted neighbor degrees, used to
//! recognize the same node after ids have been scrambled.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::graph::{Graph, NodeId};
use crate::hash::{Digest, HashAlgorithm};

#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NsdLabel(pub Vec<u32>);

impl NsdLabel {
    pub fn degrees(&self) -> &[u32] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Canonical text form, e.g. `2-4-6`; the empty label is the empty string.
impl fmt::Display for NsdLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, d) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str("-")?;
            }
            write!(f, "{d}")?;
        }
        Ok(())
    }
}

pub fn nsd_label(g: &Graph, v: NodeId) -> NsdLabel {
    let mut degs: Vec<u32> = g.neighbors(v).iter().map(|&u| g.degree(u) as u32).collect();
    degs.sort_unstable();
    NsdLabel(degs)
}

/// Labels of every node, indexed by node id.
pub fn all_labels(g: &Graph) -> Vec<NsdLabel> {
    let deg = g.degrees();
    g.nodes()
        .map(|v| {
            let mut d: Vec<u32> = g.neighbors(v).iter().map(|&u| deg[u as usize]).collect();
            d.sort_unstable();
            NsdLabel(d)
        })
        .collect()
}

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct NsdHash(pub Digest);

impl fmt::Debug for NsdHash {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "NsdHash({})", crate::hash::hex(&self.0[..8]))
    }
}

pub fn nsd_hash(label: &NsdLabel) -> NsdHash {
    nsd_hash_with(label, HashAlgorithm::default())
}

pub fn nsd_hash_with(label: &NsdLabel, alg: HashAlgorithm) -> NsdHash {
    NsdHash(alg.digest(&[label.to_string().as_bytes()]))
}

/// A label with every degree `d` replaced by `d / B`, kept sorted.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BucketLabel {
    pub bucket_size: u32,
    pub buckets: Vec<u32>,
}

pub fn bucketize(label: &NsdLabel, bucket_size: u32) -> BucketLabel {
    assert!(bucket_size >= 1, "bucket size must be at least 1");
    // floor is monotone, so a sorted label stays sorted
    BucketLabel {
        bucket_size,
        buckets: label.0.iter().map(|d| d / bucket_size).collect(),
    }
}

/// Size of the multiset intersection of two sorted sequences.
pub fn multiset_overlap(a: &[u32], b: &[u32]) -> usize {
    let (mut i, mut j, mut n) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
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

/// Overlap ratio `|a ∩ b| / max(|a|, |b|)`; two empty labels overlap fully.
pub fn overlap_ratio(a: &BucketLabel, b: &BucketLabel) -> f64 {
    assert_eq!(a.bucket_size, b.bucket_size, "labels use different bucket sizes");
    let longest = a.buckets.len().max(b.buckets.len());
    if longest == 0 {
        return 1.0;
    }
    multiset_overlap(&a.buckets, &b.buckets) as f64 / longest as f64
}

pub fn approx_match(a: &BucketLabel, b: &BucketLabel, theta: f64) -> bool {
    overlap_ratio(a, b) >= theta
}
