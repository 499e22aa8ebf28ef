use std::collections::BTreeMap;
use std::fs;
use std::io::{Cursor, Write};
use std::path::Path;

use anyhow::{bail, Context as _, Result};
use graphmark::graph::{parse_edge_list, write_edge_list};
use graphmark::hash::{hex, HashAlgorithm};
use graphmark::keys::Registry;
use graphmark::Graph;
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{Map, Value};

use crate::args::Format;

/// One invocation's output. Everything except `timing_ms` (and elapsed
/// times inside `result`) is a function of the inputs and the seed.
#[derive(Serialize)]
pub struct RunReport {
    pub command: String,
    pub version: &'static str,
    pub seed: u64,
    pub workers: Option<usize>,
    pub parameters: Value,
    /// SHA-256 of every file read, keyed by path as given.
    pub input_digests: BTreeMap<String, String>,
    pub timing_ms: f64,
    pub result: Value,
}

/// What a command hands back to be reported.
pub struct Outcome {
    pub result: Value,
    /// Row form for `--output csv`; the flattened result otherwise.
    pub rows: Option<Vec<Value>>,
    /// False when the command ran fine but found nothing (exit status 1).
    pub found: bool,
}

impl Outcome {
    pub fn new(result: impl Serialize) -> Result<Self> {
        Ok(Outcome {
            result: serde_json::to_value(result)?,
            rows: None,
            found: true,
        })
    }

    pub fn with_rows(mut self, rows: Vec<Value>) -> Self {
        self.rows = Some(rows);
        self
    }
}

/// Per-run state shared by the commands: the seed and the digests of inputs.
pub struct Context {
    pub seed: u64,
    pub digests: BTreeMap<String, String>,
}

impl Context {
    pub fn new(seed: u64) -> Self {
        Context {
            seed,
            digests: BTreeMap::new(),
        }
    }

    pub fn read(&mut self, path: &Path) -> Result<Vec<u8>> {
        let bytes = fs::read(path).with_context(|| format!("cannot read {}", path.display()))?;
        self.digests.insert(path.display().to_string(), digest(&bytes));
        Ok(bytes)
    }

    pub fn read_graph(&mut self, path: &Path) -> Result<Graph> {
        let bytes = self.read(path)?;
        Ok(parse_edge_list(Cursor::new(bytes), path)?.0)
    }

    pub fn read_json<T: DeserializeOwned>(&mut self, path: &Path) -> Result<T> {
        let bytes = self.read(path)?;
        serde_json::from_slice(&bytes).with_context(|| format!("{}: malformed JSON", path.display()))
    }

    pub fn read_registry(&mut self, path: &Path) -> Result<Registry> {
        let bytes = self.read(path)?;
        Registry::read_from(Cursor::new(bytes)).with_context(|| format!("{}: bad registry", path.display()))
    }
}

pub fn digest(bytes: &[u8]) -> String {
    hex(&HashAlgorithm::Sha256.digest(&[bytes]))
}

pub fn write_graph(g: &Graph, path: &Path) -> Result<()> {
    let file = fs::File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
    write_edge_list(g, file).with_context(|| format!("cannot write {}", path.display()))
}

/// Writes `data` as JSON, refusing to replace an existing file unless asked.
pub fn write_json(path: &Path, data: &impl Serialize, overwrite: bool) -> Result<()> {
    if !overwrite && path.exists() {
        bail!("{} already exists", path.display());
    }
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
    }
    let text = serde_json::to_string_pretty(data)?;
    fs::write(path, text + "\n").with_context(|| format!("cannot write {}", path.display()))
}

pub fn emit(report: &RunReport, rows: Option<&[Value]>, format: Format, pretty: bool, out: impl Write) -> Result<()> {
    match format {
        Format::Json => {
            let mut out = out;
            if pretty {
                serde_json::to_writer_pretty(&mut out, report)?;
            } else {
                serde_json::to_writer(&mut out, report)?;
            }
            writeln!(out)?;
        }
        Format::Csv => {
            let single = [report.result.clone()];
            write_csv(rows.unwrap_or(&single), out)?;
        }
    }
    Ok(())
}

/// Rows become CSV records with dotted column names for nested objects;
/// arrays are kept as JSON text. Columns are the union over all rows, in
/// first-seen order.
fn write_csv(rows: &[Value], out: impl Write) -> Result<()> {
    let flat: Vec<Map<String, Value>> = rows
        .iter()
        .map(|r| {
            let mut m = Map::new();
            flatten("", r, &mut m);
            m
        })
        .collect();
    let mut columns: Vec<String> = Vec::new();
    for row in &flat {
        for key in row.keys() {
            if !columns.contains(key) {
                columns.push(key.clone());
            }
        }
    }
    let mut w = csv::Writer::from_writer(out);
    w.write_record(&columns)?;
    for row in &flat {
        w.write_record(columns.iter().map(|c| match row.get(c) {
            None | Some(Value::Null) => String::new(),
            Some(Value::String(s)) => s.clone(),
            Some(v) => v.to_string(),
        }))?;
    }
    w.flush()?;
    Ok(())
}

fn flatten(prefix: &str, v: &Value, out: &mut Map<String, Value>) {
    match v {
        Value::Object(m) => {
            for (k, v) in m {
                let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                flatten(&key, v, out);
            }
        }
        _ => {
            let key = if prefix.is_empty() { "value".to_string() } else { prefix.to_string() };
            out.insert(key, v.clone());
        }
    }
}
