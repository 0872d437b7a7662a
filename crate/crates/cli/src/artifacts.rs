use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use g2t_core::genmodel::SampleStatus;
use g2t_core::TreeNode;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::error::{CliError, Result};

pub const TOOL: &str = "g2t";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Provenance {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub config: RunConfig,
}

impl Provenance {
    pub fn new(command: &str, config: &RunConfig) -> Self {
        Provenance {
            tool: TOOL.to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            config: config.clone(),
        }
    }
}

/// First line of every JSON-lines artifact.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Header {
    pub provenance: Provenance,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorpusRecord {
    pub id: String,
    pub tree: TreeNode,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SampleRecord {
    pub tokens: Vec<String>,
    pub tree: Option<TreeNode>,
    pub status: SampleStatus,
}

/// serde_json without the nesting limit; trees nest three levels per atom.
pub fn from_json<T: DeserializeOwned>(text: &str) -> serde_json::Result<T> {
    let mut de = serde_json::Deserializer::from_str(text);
    de.disable_recursion_limit();
    let value = T::deserialize(&mut de)?;
    de.end()?;
    Ok(value)
}

pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    serde_json::to_string(value).map_err(|e| CliError::Internal(format!("serialization failed: {e}")))
}

/// Writes `bytes` to a temporary file beside `path`, then renames it over
/// `path`, so readers never observe a partial artifact.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let mut builder = tempfile::Builder::new();
    #[cfg(unix)]
    {
        use std::os::unix::fs::PermissionsExt;
        builder.permissions(std::fs::Permissions::from_mode(0o644));
    }
    let mut tmp = builder.tempfile_in(dir).map_err(|e| CliError::io(dir, e))?;
    tmp.write_all(bytes).map_err(|e| CliError::io(tmp.path(), e))?;
    tmp.as_file().sync_all().map_err(|e| CliError::io(tmp.path(), e))?;
    tmp.persist(path).map_err(|e| CliError::io(path, e.error))?;
    Ok(())
}

/// Header line followed by one JSON record per line.
pub fn write_jsonl<T: Serialize>(path: &Path, provenance: &Provenance, records: &[T]) -> Result<()> {
    let mut out = to_json(&Header { provenance: provenance.clone() })?;
    out.push('\n');
    for r in records {
        out.push_str(&to_json(r)?);
        out.push('\n');
    }
    write_atomic(path, out.as_bytes())
}

/// Reads a JSON-lines artifact, returning its header (if present) and records.
pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<(Option<Provenance>, Vec<T>)> {
    let file = std::fs::File::open(path).map_err(|e| CliError::io(path, e))?;
    let mut provenance = None;
    let mut records = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| CliError::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        if i == 0 && line.starts_with("{\"provenance\"") {
            let h: Header = from_json(&line).map_err(|e| CliError::parse(format!("{}:1: {e}", path.display())))?;
            provenance = Some(h.provenance);
            continue;
        }
        records.push(from_json(&line).map_err(|e| CliError::parse(format!("{}:{}: {e}", path.display(), i + 1)))?);
    }
    Ok((provenance, records))
}

/// JSON document with a leading provenance block.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Document<T> {
    pub provenance: Provenance,
    #[serde(flatten)]
    pub body: T,
}

pub fn write_document<T: Serialize>(path: &Path, provenance: &Provenance, body: &T) -> Result<()> {
    let mut text = to_json(&Document { provenance: provenance.clone(), body })?;
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn jsonl_roundtrip_with_header() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("nested/corpus.jsonl");
        let rec = CorpusRecord { id: "m1".into(), tree: TreeNode::leaf(g2t_core::Element::C, 0) };
        let prov = Provenance::new("ingest", &RunConfig::default());
        write_jsonl(&path, &prov, std::slice::from_ref(&rec)).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.lines().nth(1).unwrap() == r#"{"id":"m1","tree":{"atom_name":"C","atom_id":0,"bonds":[]}}"#);
        let (p, records): (_, Vec<CorpusRecord>) = read_jsonl(&path).unwrap();
        assert_eq!(p, Some(prov));
        assert_eq!(records, vec![rec]);
        assert_eq!(std::fs::read_dir(path.parent().unwrap()).unwrap().count(), 1);
    }
}
