//! Taxonomy and attribute-defaults files.
//!
//! Hierarchy files nest `{"name": ..., "children": [...]}` from an `Entity`
//! root. Attribute defaults are a list of
//! `{"node": id, "kind": "material|shape|color", "value": token}` records.

use std::path::Path;

use semgraph_core::taxonomy::{
    AttributeDefault, AttributeDefaults, HierarchyDocument, Taxonomy, TaxonomyStats,
};

use crate::{Error, Result};

/// Everyday-object hierarchy shipped with the crate (over 1500 classes
/// including the animal and person subtrees).
pub const BUNDLED_HIERARCHY: &str = include_str!("../data/label_hierarchy.json");

/// Small hierarchy for tests and examples.
pub const FIXTURE_HIERARCHY: &str = include_str!("../data/fixture_hierarchy.json");

pub const DEFAULT_PRUNE: [&str; 2] = ["animal", "person"];

pub fn parse_taxonomy(text: &str, origin: &Path) -> Result<Taxonomy> {
    if text.trim().is_empty() {
        return Err(semgraph_core::Error::Schema(format!(
            "{} is an empty hierarchy document",
            origin.display()
        ))
        .into());
    }
    let doc: HierarchyDocument =
        serde_json::from_str(text).map_err(|e| Error::json(origin, e))?;
    Ok(Taxonomy::from_document(&doc)?)
}

pub fn load_taxonomy(path: &Path) -> Result<Taxonomy> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_taxonomy(&text, path)
}

pub fn bundled_taxonomy() -> Taxonomy {
    parse_taxonomy(BUNDLED_HIERARCHY, Path::new("<bundled>")).expect("bundled hierarchy is valid")
}

pub fn fixture_taxonomy() -> Taxonomy {
    parse_taxonomy(FIXTURE_HIERARCHY, Path::new("<fixture>")).expect("fixture hierarchy is valid")
}

pub fn load_attribute_defaults(path: &Path, taxonomy: &Taxonomy) -> Result<AttributeDefaults> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let records: Vec<AttributeDefault> =
        serde_json::from_str(&text).map_err(|e| Error::json(path, e))?;
    Ok(AttributeDefaults::from_records(taxonomy, &records)?)
}

/// Counts before and after pruning, as printed by `semgraph taxonomy stats`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub struct PruneStats {
    pub total_nodes: usize,
    pub leaves: usize,
    pub max_depth: usize,
    pub removed_by_prune: usize,
    pub after_prune: TaxonomyStats,
}

pub fn prune_stats(taxonomy: &Taxonomy, prune: &[&str]) -> Result<PruneStats> {
    let before = taxonomy.stats();
    let after = if prune.is_empty() {
        before
    } else {
        taxonomy.prune(prune)?.stats()
    };
    Ok(PruneStats {
        total_nodes: before.nodes,
        leaves: before.leaves,
        max_depth: before.max_depth,
        removed_by_prune: before.nodes - after.nodes,
        after_prune: after,
    })
}
