//! SNAP-style edge lists: `#` comments, one whitespace-separated integer pair
//! per line. Extra columns (timestamps, weights) are ignored.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use super::{Graph, NodeId};
use crate::error::{Error, Result};

/// Original file ids, indexed by compact id.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct IdRemap {
    original: Vec<u64>,
}

impl IdRemap {
    pub fn original(&self, compact: NodeId) -> u64 {
        self.original[compact as usize]
    }

    pub fn compact(&self, original: u64) -> Option<NodeId> {
        // Linear lookup; the table is only consulted in tooling and tests.
        self.original
            .iter()
            .position(|&o| o == original)
            .map(|i| i as NodeId)
    }

    pub fn len(&self) -> usize {
        self.original.len()
    }

    pub fn is_empty(&self) -> bool {
        self.original.is_empty()
    }
}

pub fn load_edge_list(path: impl AsRef<Path>) -> Result<(Graph, IdRemap)> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    parse_edge_list(BufReader::new(file), path)
}

/// Parses an edge list from any reader; `origin` is only used in error messages.
pub fn parse_edge_list<R: BufRead>(reader: R, origin: &Path) -> Result<(Graph, IdRemap)> {
    let mut ids: HashMap<u64, NodeId> = HashMap::new();
    let mut original = Vec::new();
    let mut edges = Vec::new();

    let mut intern = |raw: u64, original: &mut Vec<u64>| -> NodeId {
        *ids.entry(raw).or_insert_with(|| {
            original.push(raw);
            (original.len() - 1) as NodeId
        })
    };

    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|e| Error::io(origin, e))?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut tokens = line.split_whitespace();
        let mut next = |what: &str| -> Result<u64> {
            let tok = tokens.next().ok_or_else(|| Error::Parse {
                path: origin.to_path_buf(),
                line: line_no,
                message: format!("missing {what} node id"),
            })?;
            tok.parse::<u64>().map_err(|_| Error::Parse {
                path: origin.to_path_buf(),
                line: line_no,
                message: format!("malformed node id `{tok}`"),
            })
        };
        let a = next("source")?;
        let b = next("target")?;
        let u = intern(a, &mut original);
        let v = intern(b, &mut original);
        edges.push((u, v));
    }

    let graph = Graph::from_edges(original.len(), edges);
    if graph.edge_count() == 0 {
        return Err(Error::EmptyGraph(origin.to_path_buf()));
    }
    Ok((graph, IdRemap { original }))
}

/// Canonical serialization: `u v` with `u < v`, sorted lexicographically.
pub fn write_edge_list<W: Write>(graph: &Graph, writer: W) -> std::io::Result<()> {
    let mut w = BufWriter::new(writer);
    for (u, v) in graph.edges() {
        writeln!(w, "{u} {v}")?;
    }
    w.flush()
}
