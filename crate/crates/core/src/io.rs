//! Configuration files, checkpoints, manifests and output tables.
//!
//! Checkpoints are JSON documents `{schema_version, kind, digest, payload}`
//! where `digest` is the sha256 of the compact payload encoding. Anything
//! written here is deterministic: maps are ordered and floats go through a
//! fixed format.

use std::fs;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub const SCHEMA_VERSION: u32 = 1;

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn file_digest(path: &Path) -> Result<String> {
    fs::read(path).map(|b| sha256_hex(&b)).map_err(|e| Error::io(path, e))
}

pub fn write_file(path: &Path, contents: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

/// Parses a TOML document into `T`. Errors name the offending field path.
pub fn parse_config<T: DeserializeOwned>(text: &str) -> Result<T> {
    let value: toml::Table = text.parse().map_err(|e: toml::de::Error| Error::Config {
        path: "<document>".into(),
        msg: e.message().to_string(),
    })?;
    match value.get("schema_version") {
        Some(toml::Value::Integer(v)) if *v == SCHEMA_VERSION as i64 => {}
        Some(other) => {
            return Err(Error::Config {
                path: "schema_version".into(),
                msg: format!("unsupported version {other}, expected {SCHEMA_VERSION}"),
            })
        }
        None => {
            return Err(Error::Config {
                path: "schema_version".into(),
                msg: "missing".into(),
            })
        }
    }
    serde_path_to_error::deserialize(toml::Value::Table(value)).map_err(|e| Error::Config {
        path: e.path().to_string(),
        msg: e.inner().to_string(),
    })
}

pub fn load_config<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_config(&text)
}

#[derive(Serialize, Deserialize)]
struct Envelope {
    schema_version: u32,
    kind: String,
    digest: String,
    payload: serde_json::Value,
}

/// Encoding of a checkpoint, exposed so callers can compare states byte for
/// byte.
pub fn encode_checkpoint<T: Serialize>(kind: &str, state: &T) -> Result<Vec<u8>> {
    let payload = serde_json::to_value(state)?;
    let digest = sha256_hex(&serde_json::to_vec(&payload)?);
    let env = Envelope {
        schema_version: SCHEMA_VERSION,
        kind: kind.into(),
        digest,
        payload,
    };
    let mut out = serde_json::to_vec_pretty(&env)?;
    out.push(b'\n');
    Ok(out)
}

pub fn write_checkpoint<T: Serialize>(path: &Path, kind: &str, state: &T) -> Result<()> {
    let bytes = encode_checkpoint(kind, state)?;
    // write-then-rename so an interrupted run never leaves a torn file
    let tmp = path.with_extension("tmp");
    write_file(&tmp, &bytes)?;
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

pub fn read_checkpoint<T: DeserializeOwned>(path: &Path, kind: &str) -> Result<T> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let bad = |msg: String| Error::Checkpoint {
        path: path.to_path_buf(),
        msg,
    };
    let env: Envelope = serde_json::from_slice(&bytes).map_err(|e| bad(format!("not a checkpoint: {e}")))?;
    if env.schema_version != SCHEMA_VERSION {
        return Err(bad(format!(
            "schema version {} (this build reads {SCHEMA_VERSION})",
            env.schema_version
        )));
    }
    if env.kind != kind {
        return Err(bad(format!("holds a `{}` state, expected `{kind}`", env.kind)));
    }
    let found = sha256_hex(&serde_json::to_vec(&env.payload)?);
    if found != env.digest {
        return Err(Error::DigestMismatch {
            path: path.to_path_buf(),
            expected: env.digest,
            found,
        });
    }
    serde_json::from_value(env.payload).map_err(|e| bad(format!("payload: {e}")))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FileRecord {
    pub path: PathBuf,
    pub sha256: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool_version: String,
    pub command: String,
    pub config_sha256: String,
    /// The resolved configuration, enough to rerun.
    pub config: serde_json::Value,
    pub seed: u64,
    pub rng: String,
    pub inputs: Vec<FileRecord>,
    pub outputs: Vec<FileRecord>,
    pub steps: u64,
    pub wall_clock_s: f64,
}

impl RunManifest {
    pub fn new<C: Serialize>(command: &str, config: &C, seed: u64) -> Result<Self> {
        let config = serde_json::to_value(config)?;
        Ok(RunManifest {
            tool_version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            config_sha256: sha256_hex(&serde_json::to_vec(&config)?),
            config,
            seed,
            rng: crate::rng::ALGORITHM.into(),
            inputs: Vec::new(),
            outputs: Vec::new(),
            steps: 0,
            wall_clock_s: 0.0,
        })
    }

    pub fn record_input(&mut self, path: &Path) -> Result<()> {
        self.inputs.push(FileRecord {
            path: path.to_path_buf(),
            sha256: file_digest(path)?,
        });
        Ok(())
    }

    /// Writes `contents` to `dir/name` and lists it.
    pub fn emit(&mut self, dir: &Path, name: &str, contents: &[u8]) -> Result<PathBuf> {
        let path = dir.join(name);
        write_file(&path, contents)?;
        self.outputs.push(FileRecord {
            path: PathBuf::from(name),
            sha256: sha256_hex(contents),
        });
        Ok(path)
    }

    pub fn write(&self, dir: &Path) -> Result<PathBuf> {
        let path = dir.join("manifest.json");
        let mut bytes = serde_json::to_vec_pretty(self)?;
        bytes.push(b'\n');
        write_file(&path, &bytes)?;
        Ok(path)
    }
}

/// Cell of an output table.
#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    Float(f64),
    Int(i64),
    Text(String),
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.into())
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Float(v) if v.is_finite() => format!("{v:.9e}"),
            Cell::Float(v) => format!("{v}"),
            Cell::Int(v) => v.to_string(),
            Cell::Text(s) => s.replace(['\t', '\n'], " "),
        }
    }
}

/// Tab-separated table with a header row.
pub fn render_table(headers: &[&str], rows: &[Vec<Cell>]) -> Result<String> {
    let mut out = headers.join("\t");
    out.push('\n');
    for (i, row) in rows.iter().enumerate() {
        if row.len() != headers.len() {
            return Err(Error::InvalidArgument(format!(
                "table row {i} has {} cells for {} columns",
                row.len(),
                headers.len()
            )));
        }
        out.push_str(&row.iter().map(Cell::render).collect::<Vec<_>>().join("\t"));
        out.push('\n');
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeMap;

    #[derive(Debug, PartialEq, Serialize, Deserialize)]
    #[serde(deny_unknown_fields)]
    struct Cfg {
        schema_version: u32,
        inner: Inner,
    }

    #[derive(Debug, PartialEq, Serialize, Deserialize)]
    #[serde(deny_unknown_fields)]
    struct Inner {
        sizes: Vec<usize>,
    }

    #[test]
    fn config_errors_name_the_field() {
        let ok: Cfg = parse_config("schema_version = 1\n[inner]\nsizes = [8, 16]\n").unwrap();
        assert_eq!(ok.inner.sizes, vec![8, 16]);
        match parse_config::<Cfg>("schema_version = 1\n[inner]\nsizes = [8, \"x\"]\n") {
            Err(Error::Config { path, .. }) => assert_eq!(path, "inner.sizes[1]"),
            other => panic!("{other:?}"),
        }
        match parse_config::<Cfg>("schema_version = 2\n") {
            Err(Error::Config { path, .. }) => assert_eq!(path, "schema_version"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn checkpoint_round_trip_and_corruption() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("state.json");
        let state: BTreeMap<String, f64> = [("a".to_string(), 0.1), ("b".to_string(), 1e-300)].into();
        write_checkpoint(&path, "test", &state).unwrap();
        let back: BTreeMap<String, f64> = read_checkpoint(&path, "test").unwrap();
        assert_eq!(back, state);
        assert_eq!(encode_checkpoint("test", &back).unwrap(), fs::read(&path).unwrap());
        assert!(matches!(
            read_checkpoint::<BTreeMap<String, f64>>(&path, "other"),
            Err(Error::Checkpoint { .. })
        ));
        let text = fs::read_to_string(&path).unwrap().replace("0.1", "0.2");
        fs::write(&path, text).unwrap();
        let err = read_checkpoint::<BTreeMap<String, f64>>(&path, "test").unwrap_err();
        assert!(matches!(err, Error::DigestMismatch { .. }));
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn empty_state_is_valid() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("empty.json");
        write_checkpoint(&path, "sweep", &BTreeMap::<String, f64>::new()).unwrap();
        assert!(read_checkpoint::<BTreeMap<String, f64>>(&path, "sweep").unwrap().is_empty());
    }

    #[test]
    fn tables() {
        let t = render_table(&["x", "n", "tag"], &[vec![0.5.into(), 3usize.into(), "a b".into()]]).unwrap();
        assert_eq!(t, "x\tn\ttag\n5.000000000e-1\t3\ta b\n");
        assert!(render_table(&["x"], &[vec![]]).is_err());
    }
}
