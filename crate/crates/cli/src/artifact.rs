//! Run artifacts: the JSON envelope with its determinism hash, CSV tables,
//! SVG plots, all written through a temp file and a rename.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};
use widom_lab::table::Table;

use crate::svg::Plot;

pub const SCHEMA: &str = "widom-lab/artifact/1";

/// Keys left out of the determinism hash.
const VOLATILE: [&str; 2] = ["timestamp_unix", "determinism_hash"];

pub struct Output {
    pub result: Value,
    pub truncation: Value,
    pub tables: Vec<(String, Table)>,
    /// Each plot names the table it renders.
    pub plots: Vec<(String, Plot)>,
}

pub fn envelope(command: &str, config: Value, seed: u64, truncation: Value, result: Value) -> Value {
    let mut v = json!({
        "schema": SCHEMA,
        "tool": "widom-lab",
        "version": env!("CARGO_PKG_VERSION"),
        "command": command,
        "config": config,
        "seed": seed,
        "truncation": truncation,
        "result": result,
    });
    let hash = determinism_hash(&v);
    let m = v.as_object_mut().expect("object");
    m.insert("determinism_hash".into(), Value::String(hash));
    let now = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs());
    m.insert("timestamp_unix".into(), json!(now));
    v
}

/// SHA-256 over the compact serialisation with the volatile keys removed.
pub fn determinism_hash(v: &Value) -> String {
    let mut m: Map<String, Value> = v.as_object().cloned().unwrap_or_default();
    for k in VOLATILE {
        m.remove(k);
    }
    let bytes = serde_json::to_vec(&Value::Object(m)).expect("serialisable");
    Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect()
}

pub fn write_atomic(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("artifact");
    let tmp = path.with_file_name(format!(".{name}.{}.tmp", std::process::id()));
    let mut f = fs::File::create(&tmp)?;
    f.write_all(bytes)?;
    f.sync_all()?;
    drop(f);
    fs::rename(&tmp, path).inspect_err(|_| {
        let _ = fs::remove_file(&tmp);
    })
}

#[derive(Clone, Copy, PartialEq, Eq)]
pub struct Formats {
    pub json: bool,
    pub csv: bool,
    pub svg: bool,
}

/// Writes the artifact set and returns the paths written.
pub fn write_all(dir: &Path, stem: &str, doc: &Value, out: &Output, formats: Formats) -> std::io::Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    if formats.json {
        let p = dir.join(format!("{stem}.json"));
        let mut bytes = serde_json::to_vec_pretty(doc).expect("serialisable");
        bytes.push(b'\n');
        write_atomic(&p, &bytes)?;
        written.push(p);
    }
    // a plot is only ever a rendering of a table, so the tables go out with it
    if formats.csv || formats.svg {
        for (name, t) in &out.tables {
            let p = dir.join(format!("{stem}-{name}.csv"));
            write_atomic(&p, t.to_csv().as_bytes())?;
            written.push(p);
        }
    }
    if formats.svg {
        for (name, plot) in &out.plots {
            let p = dir.join(format!("{stem}-{name}.svg"));
            write_atomic(&p, plot.render().as_bytes())?;
            written.push(p);
        }
    }
    Ok(written)
}
