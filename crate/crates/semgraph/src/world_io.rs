//! `world.json`: the persisted [`WorldGraph`].

use std::path::Path;

use serde::{Deserialize, Serialize};

use semgraph_core::worldgraph::{WorldGraph, WorldGraphParts};

use crate::{Error, Result};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorldFile {
    pub schema_version: u32,
    #[serde(flatten)]
    pub parts: WorldGraphParts,
}

/// Pretty JSON with a trailing newline; identical graphs give identical bytes.
pub fn world_to_json(world: &WorldGraph) -> String {
    let file = WorldFile {
        schema_version: SCHEMA_VERSION,
        parts: world.to_parts(),
    };
    let mut s = serde_json::to_string_pretty(&file).expect("world serializes");
    s.push('\n');
    s
}

pub fn world_from_json(text: &str, origin: &Path) -> Result<WorldGraph> {
    let file: WorldFile = serde_json::from_str(text).map_err(|e| Error::json(origin, e))?;
    if file.schema_version != SCHEMA_VERSION {
        return Err(Error::Config(format!(
            "{}: unsupported world schema version {}",
            origin.display(),
            file.schema_version
        )));
    }
    WorldGraph::from_parts(file.parts).map_err(Error::from)
}

pub fn write_world(path: &Path, world: &WorldGraph) -> Result<()> {
    std::fs::write(path, world_to_json(world)).map_err(|e| Error::io(path, e))
}

pub fn read_world(path: &Path) -> Result<WorldGraph> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    world_from_json(&text, path)
}
