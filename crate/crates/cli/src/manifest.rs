//! Run manifests: every artifact-writing command records the effective
//! parameters so a run is reproducible from its manifest alone. Content is
//! fully deterministic (no timestamps, no hostnames).

use std::path::Path;

use anyhow::Result;
use serde::Serialize;

#[derive(Serialize)]
pub struct Manifest {
    pub command: &'static str,
    pub version: &'static str,
    pub seed: u64,
    pub params: serde_json::Value,
}

impl Manifest {
    pub fn new(command: &'static str, seed: u64, params: serde_json::Value) -> Self {
        Manifest {
            command,
            version: env!("CARGO_PKG_VERSION"),
            seed,
            params,
        }
    }
}

pub fn write_manifest(out: &Path, manifest: &Manifest) -> Result<()> {
    std::fs::create_dir_all(out)?;
    let mut text = serde_json::to_string_pretty(manifest)?;
    text.push('\n');
    std::fs::write(out.join("manifest.json"), text)?;
    Ok(())
}
