//! Owner-side log of issued watermarked graphs.
//!
//! On disk this is line-delimited JSON: a header object
//! `{"registry": "graphmark", "version": 1, "graph_id": ...}` followed by one
//! [`RegistryEntry`] per line. Binary fields are base64. Record indices in
//! errors count lines, so the header is record 0.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{GroupLabel, Seed, Timestamp};
use crate::embed::EmbeddingRecord;
use crate::error::{Error, Result};
use crate::hash::b64;

const FORMAT: &str = "graphmark";
const VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RegistryEntry {
    pub party_id: String,
    pub timestamp: Timestamp,
    #[serde(with = "b64")]
    pub signature: Vec<u8>,
    pub seed: Seed,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub groups: Option<[GroupLabel; 2]>,
    pub records: Vec<EmbeddingRecord>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Registry {
    pub graph_id: String,
    entries: Vec<RegistryEntry>,
}

#[derive(Serialize, Deserialize)]
struct Header {
    registry: String,
    version: u32,
    graph_id: String,
}

impl Registry {
    pub fn new(graph_id: impl Into<String>) -> Self {
        Registry {
            graph_id: graph_id.into(),
            entries: Vec::new(),
        }
    }

    /// Appends an entry. Reusing a `(party, timestamp)` pair is allowed but
    /// logged, since it reproduces the same seed.
    pub fn push(&mut self, entry: RegistryEntry) {
        if self
            .entries
            .iter()
            .any(|e| e.party_id == entry.party_id && e.timestamp == entry.timestamp)
        {
            log::warn!(
                "party `{}` already issued a graph at {}; the seed repeats",
                entry.party_id,
                entry.timestamp
            );
        }
        self.entries.push(entry);
    }

    pub fn entries(&self) -> &[RegistryEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn write_to<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = BufWriter::new(writer);
        let header = Header {
            registry: FORMAT.into(),
            version: VERSION,
            graph_id: self.graph_id.clone(),
        };
        let line_err = |e: std::io::Error| Error::io("<registry>", e);
        serde_json::to_writer(&mut w, &header)?;
        w.write_all(b"\n").map_err(line_err)?;
        for e in &self.entries {
            serde_json::to_writer(&mut w, e)?;
            w.write_all(b"\n").map_err(line_err)?;
        }
        w.flush().map_err(line_err)
    }

    pub fn read_from<R: BufRead>(reader: R) -> Result<Self> {
        let mut lines = reader
            .lines()
            .enumerate()
            .filter(|(_, l)| l.as_ref().map_or(true, |s| !s.trim().is_empty()));
        let corrupt = |index: usize, message: String| Error::CorruptRecord { index, message };

        let (_, first) = lines.next().ok_or_else(|| corrupt(0, "missing header".into()))?;
        let first = first.map_err(|e| corrupt(0, e.to_string()))?;
        let header: Header = serde_json::from_str(&first).map_err(|e| corrupt(0, e.to_string()))?;
        if header.registry != FORMAT || header.version != VERSION {
            return Err(corrupt(
                0,
                format!("unsupported registry `{}` v{}", header.registry, header.version),
            ));
        }
        let mut reg = Registry::new(header.graph_id);
        for (i, (_, line)) in lines.enumerate() {
            let index = i + 1;
            let line = line.map_err(|e| corrupt(index, e.to_string()))?;
            let entry: RegistryEntry = serde_json::from_str(&line).map_err(|e| corrupt(index, e.to_string()))?;
            reg.push(entry);
        }
        Ok(reg)
    }
}

pub fn registry_store(path: impl AsRef<Path>, registry: &Registry) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    registry.write_to(file)
}

pub fn registry_load(path: impl AsRef<Path>) -> Result<Registry> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    Registry::read_from(BufReader::new(file))
}
