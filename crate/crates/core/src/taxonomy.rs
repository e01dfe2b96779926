//! Entity-rooted class hierarchy, suffix-typed concepts and attribute
//! inheritance along ancestor paths.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub const ROOT_ID: &str = "entity";

/// Lowercases and joins whitespace-separated words with underscores.
pub fn normalize_label(raw: &str) -> String {
    let mut out = String::with_capacity(raw.len());
    for (i, word) in raw.split_whitespace().enumerate() {
        if i > 0 {
            out.push('_');
        }
        out.push_str(&word.to_lowercase());
    }
    out
}

/// Nested `{"name": ..., "children": [...]}` hierarchy document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HierarchyDocument {
    pub name: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub children: Vec<HierarchyDocument>,
}

impl HierarchyDocument {
    pub fn leaf(name: &str) -> Self {
        HierarchyDocument {
            name: name.into(),
            children: Vec::new(),
        }
    }

    pub fn node(name: &str, children: Vec<HierarchyDocument>) -> Self {
        HierarchyDocument {
            name: name.into(),
            children,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TaxonomyNode {
    pub id: String,
    pub display_name: String,
    pub parent: Option<usize>,
    pub children: Vec<usize>,
    pub depth: usize,
    /// Attached at run time for a label the hierarchy did not know.
    pub provisional: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaxonomyStats {
    pub nodes: usize,
    pub leaves: usize,
    pub max_depth: usize,
}

/// Arena-backed tree. Node 0 is always the root `entity`.
#[derive(Debug, Clone, PartialEq)]
pub struct Taxonomy {
    nodes: Vec<TaxonomyNode>,
    index: BTreeMap<String, usize>,
}

impl Taxonomy {
    pub fn from_document(doc: &HierarchyDocument) -> Result<Self> {
        if doc.name.trim().is_empty() {
            return Err(Error::Schema("empty hierarchy document".into()));
        }
        if normalize_label(&doc.name) != ROOT_ID {
            return Err(Error::Schema(format!(
                "root must be named Entity, found `{}`",
                doc.name
            )));
        }
        let mut t = Taxonomy {
            nodes: Vec::new(),
            index: BTreeMap::new(),
        };
        // iterative pre-order walk
        let mut stack: Vec<(&HierarchyDocument, Option<usize>)> = alloc::vec![(doc, None)];
        while let Some((d, parent)) = stack.pop() {
            let id = normalize_label(&d.name);
            if id.is_empty() {
                return Err(Error::Schema("node with empty name".into()));
            }
            let idx = t.push_node(id, d.name.trim().to_string(), parent, false)?;
            for child in d.children.iter().rev() {
                stack.push((child, Some(idx)));
            }
        }
        Ok(t)
    }

    fn push_node(
        &mut self,
        id: String,
        display_name: String,
        parent: Option<usize>,
        provisional: bool,
    ) -> Result<usize> {
        if self.index.contains_key(&id) {
            return Err(Error::Schema(format!("duplicate id `{id}`")));
        }
        let idx = self.nodes.len();
        let depth = parent.map_or(0, |p| self.nodes[p].depth + 1);
        if let Some(p) = parent {
            self.nodes[p].children.push(idx);
        }
        self.index.insert(id.clone(), idx);
        self.nodes.push(TaxonomyNode {
            id,
            display_name,
            parent,
            children: Vec::new(),
            depth,
            provisional,
        });
        Ok(idx)
    }

    /// Rebuilds the nested document form, children in insertion order.
    pub fn to_document(&self) -> HierarchyDocument {
        fn build(t: &Taxonomy, idx: usize) -> HierarchyDocument {
            let n = &t.nodes[idx];
            HierarchyDocument {
                name: n.display_name.clone(),
                children: n.children.iter().map(|&c| build(t, c)).collect(),
            }
        }
        build(self, 0)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn contains(&self, id: &str) -> bool {
        self.index.contains_key(id)
    }

    pub fn node(&self, id: &str) -> Result<&TaxonomyNode> {
        self.lookup(id).map(|i| &self.nodes[i])
    }

    pub fn nodes(&self) -> impl Iterator<Item = &TaxonomyNode> {
        self.nodes.iter()
    }

    pub fn parent(&self, id: &str) -> Result<Option<&str>> {
        let i = self.lookup(id)?;
        Ok(self.nodes[i].parent.map(|p| self.nodes[p].id.as_str()))
    }

    pub fn depth(&self, id: &str) -> Result<usize> {
        self.lookup(id).map(|i| self.nodes[i].depth)
    }

    pub fn is_provisional(&self, id: &str) -> Result<bool> {
        self.lookup(id).map(|i| self.nodes[i].provisional)
    }

    pub fn stats(&self) -> TaxonomyStats {
        TaxonomyStats {
            nodes: self.nodes.len(),
            leaves: self.nodes.iter().filter(|n| n.children.is_empty()).count(),
            max_depth: self.nodes.iter().map(|n| n.depth).max().unwrap_or(0),
        }
    }

    fn lookup(&self, id: &str) -> Result<usize> {
        self.index
            .get(id)
            .copied()
            .ok_or_else(|| Error::Lookup(id.into()))
    }

    /// Copy without the named subtrees.
    pub fn prune(&self, subtree_roots: &[&str]) -> Result<Taxonomy> {
        let mut removed = alloc::vec![false; self.nodes.len()];
        for &id in subtree_roots {
            let idx = self.lookup(id)?;
            if idx == 0 {
                return Err(Error::InvalidOperation("the root cannot be pruned".into()));
            }
            removed[idx] = true;
        }
        // parents precede children in the arena, so one forward pass suffices
        for i in 1..self.nodes.len() {
            if let Some(p) = self.nodes[i].parent {
                if removed[p] {
                    removed[i] = true;
                }
            }
        }
        let mut out = Taxonomy {
            nodes: Vec::new(),
            index: BTreeMap::new(),
        };
        let mut remap = alloc::vec![usize::MAX; self.nodes.len()];
        for (i, n) in self.nodes.iter().enumerate() {
            if removed[i] {
                continue;
            }
            let parent = n.parent.map(|p| remap[p]);
            remap[i] = out.push_node(n.id.clone(), n.display_name.clone(), parent, n.provisional)?;
        }
        Ok(out)
    }

    /// Case- and whitespace-insensitive match on id or display name.
    pub fn resolve_label(&self, raw_label: &str) -> Option<&str> {
        let key = normalize_label(raw_label);
        self.index
            .get_key_value(key.as_str())
            .map(|(k, _)| k.as_str())
    }

    /// Path from the parent up to the root; empty for the root.
    pub fn ancestors(&self, id: &str) -> Result<Vec<&str>> {
        let mut cur = self.nodes[self.lookup(id)?].parent;
        let mut out = Vec::new();
        while let Some(i) = cur {
            out.push(self.nodes[i].id.as_str());
            cur = self.nodes[i].parent;
        }
        Ok(out)
    }

    pub fn lowest_common_ancestor(&self, a: &str, b: &str) -> Result<&str> {
        let mut ia = self.lookup(a)?;
        let mut ib = self.lookup(b)?;
        while self.nodes[ia].depth > self.nodes[ib].depth {
            ia = self.nodes[ia].parent.expect("non-root has a parent");
        }
        while self.nodes[ib].depth > self.nodes[ia].depth {
            ib = self.nodes[ib].parent.expect("non-root has a parent");
        }
        while ia != ib {
            ia = self.nodes[ia].parent.expect("non-root has a parent");
            ib = self.nodes[ib].parent.expect("non-root has a parent");
        }
        Ok(&self.nodes[ia].id)
    }

    /// Adds an unknown label directly under the root, flagged provisional.
    /// Returns the id; an existing node is returned unchanged.
    pub fn attach_provisional(&mut self, raw_label: &str) -> Result<String> {
        let id = normalize_label(raw_label);
        if id.is_empty() {
            return Err(Error::InvalidParameter("empty label".into()));
        }
        if !self.contains(&id) {
            self.push_node(id.clone(), raw_label.trim().to_string(), Some(0), true)?;
        }
        Ok(id)
    }

    /// Nearest-definition attribute lookup: for each kind, the value set by
    /// the node itself or else by its closest ancestor.
    pub fn inherit_attributes(
        &self,
        defaults: &AttributeDefaults,
        id: &str,
    ) -> Result<Vec<(AttributeKind, String)>> {
        let mut cur = Some(self.lookup(id)?);
        let mut found: Vec<(AttributeKind, String)> = Vec::new();
        while let Some(i) = cur {
            for (kind, value) in defaults.get(&self.nodes[i].id) {
                if !found.iter().any(|(k, _)| k == kind) {
                    found.push((*kind, value.clone()));
                }
            }
            if found.len() == AttributeKind::ALL.len() {
                break;
            }
            cur = self.nodes[i].parent;
        }
        found.sort_by_key(|(k, _)| *k);
        Ok(found)
    }
}

/// The four concept groups and their one-letter suffixes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ConceptKind {
    Object,
    Material,
    Shape,
    Color,
}

impl ConceptKind {
    pub const ALL: [ConceptKind; 4] = [
        ConceptKind::Object,
        ConceptKind::Material,
        ConceptKind::Shape,
        ConceptKind::Color,
    ];

    pub fn suffix(self) -> char {
        match self {
            ConceptKind::Object => 'o',
            ConceptKind::Material => 'm',
            ConceptKind::Shape => 's',
            ConceptKind::Color => 'c',
        }
    }

    pub fn from_suffix(c: char) -> Option<Self> {
        ConceptKind::ALL.into_iter().find(|k| k.suffix() == c)
    }

    pub fn name(self) -> &'static str {
        match self {
            ConceptKind::Object => "object",
            ConceptKind::Material => "material",
            ConceptKind::Shape => "shape",
            ConceptKind::Color => "color",
        }
    }
}

/// Attribute kinds: every concept kind except `object`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AttributeKind {
    Material,
    Shape,
    Color,
}

impl AttributeKind {
    pub const ALL: [AttributeKind; 3] = [
        AttributeKind::Material,
        AttributeKind::Shape,
        AttributeKind::Color,
    ];

    pub fn concept_kind(self) -> ConceptKind {
        match self {
            AttributeKind::Material => ConceptKind::Material,
            AttributeKind::Shape => ConceptKind::Shape,
            AttributeKind::Color => ConceptKind::Color,
        }
    }

    pub fn name(self) -> &'static str {
        self.concept_kind().name()
    }
}

impl FromStr for AttributeKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_lowercase().as_str() {
            "material" => Ok(AttributeKind::Material),
            "shape" => Ok(AttributeKind::Shape),
            "color" | "colour" => Ok(AttributeKind::Color),
            other => Err(Error::Parse(format!("unknown attribute kind `{other}`"))),
        }
    }
}

impl fmt::Display for AttributeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A suffix-typed semantic token such as `chair.o` or `plastic.m`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Concept {
    name: String,
    kind: ConceptKind,
}

impl Concept {
    /// Normalizes `name`; fails when it is empty or contains a `.`.
    pub fn new(name: &str, kind: ConceptKind) -> Result<Self> {
        let name = normalize_label(name);
        if name.is_empty() {
            return Err(Error::InvalidParameter("empty concept name".into()));
        }
        if name.contains('.') {
            return Err(Error::InvalidParameter(format!(
                "concept name `{name}` contains a dot"
            )));
        }
        Ok(Concept { name, kind })
    }

    pub fn object(name: &str) -> Result<Self> {
        Concept::new(name, ConceptKind::Object)
    }

    pub fn attribute(kind: AttributeKind, value: &str) -> Result<Self> {
        Concept::new(value, kind.concept_kind())
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn kind(&self) -> ConceptKind {
        self.kind
    }
}

impl fmt::Display for Concept {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{}", self.name, self.kind.suffix())
    }
}

impl FromStr for Concept {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (name, suffix) = s
            .rsplit_once('.')
            .ok_or_else(|| Error::Parse(format!("concept `{s}` lacks a .o/.m/.s/.c suffix")))?;
        let mut chars = suffix.chars();
        let kind = match (chars.next(), chars.next()) {
            (Some(c), None) => ConceptKind::from_suffix(c),
            _ => None,
        }
        .ok_or_else(|| Error::Parse(format!("unknown concept suffix `.{suffix}` in `{s}`")))?;
        if name.is_empty() || name != normalize_label(name) {
            return Err(Error::Parse(format!("concept name `{name}` is not normalized")));
        }
        Concept::new(name, kind)
    }
}

impl Serialize for Concept {
    fn serialize<S: serde::Serializer>(&self, s: S) -> core::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Concept {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> core::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// One row of an attribute-defaults table.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttributeDefault {
    pub node: String,
    pub kind: AttributeKind,
    pub value: String,
}

/// Per-node default attributes used when a detection does not supply them.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AttributeDefaults {
    by_node: BTreeMap<String, Vec<(AttributeKind, String)>>,
}

impl AttributeDefaults {
    /// Validates every row against `taxonomy`. Node ids and values are
    /// normalized; a repeated (node, kind) keeps the first value.
    pub fn from_records(taxonomy: &Taxonomy, records: &[AttributeDefault]) -> Result<Self> {
        let mut by_node: BTreeMap<String, Vec<(AttributeKind, String)>> = BTreeMap::new();
        for r in records {
            let node = normalize_label(&r.node);
            if !taxonomy.contains(&node) {
                return Err(Error::Lookup(node));
            }
            let value = normalize_label(&r.value);
            if value.is_empty() {
                return Err(Error::Schema(format!("empty {} value for `{node}`", r.kind)));
            }
            let entry = by_node.entry(node).or_default();
            if !entry.iter().any(|(k, _)| *k == r.kind) {
                entry.push((r.kind, value));
            }
        }
        Ok(AttributeDefaults { by_node })
    }

    pub fn get(&self, node: &str) -> &[(AttributeKind, String)] {
        self.by_node.get(node).map_or(&[], Vec::as_slice)
    }

    pub fn is_empty(&self) -> bool {
        self.by_node.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn doc(name: &str, children: Vec<HierarchyDocument>) -> HierarchyDocument {
        HierarchyDocument::node(name, children)
    }

    fn leaf(name: &str) -> HierarchyDocument {
        HierarchyDocument::leaf(name)
    }

    fn small() -> Taxonomy {
        Taxonomy::from_document(&doc(
            "Entity",
            vec![
                doc("Animal", vec![leaf("Bee")]),
                leaf("Vehicle"),
                doc(
                    "Furniture",
                    vec![leaf("Chair"), doc("Table", vec![leaf("Coffee table")])],
                ),
            ],
        ))
        .unwrap()
    }

    #[test]
    fn minimal_tree() {
        let t = Taxonomy::from_document(&doc("Entity", vec![leaf("Vehicle"), leaf("Building")]))
            .unwrap();
        assert_eq!(t.len(), 3);
        assert_eq!(t.depth("entity").unwrap(), 0);
        assert_eq!(t.depth("vehicle").unwrap(), 1);
    }

    #[test]
    fn schema_errors() {
        let dup = doc("Entity", vec![leaf("Hammer"), doc("Tool", vec![leaf("hammer")])]);
        assert!(matches!(Taxonomy::from_document(&dup), Err(Error::Schema(_))));
        assert!(matches!(
            Taxonomy::from_document(&leaf("Thing")),
            Err(Error::Schema(_))
        ));
        assert!(matches!(Taxonomy::from_document(&leaf("  ")), Err(Error::Schema(_))));
    }

    #[test]
    fn prune_subtree() {
        let t = small().prune(&["animal"]).unwrap();
        assert!(!t.contains("animal") && !t.contains("bee"));
        assert_eq!(t.len(), 6);
        assert_eq!(t.ancestors("coffee_table").unwrap(), vec!["table", "furniture", "entity"]);
        assert_eq!(
            small().prune(&["entity"]).unwrap_err(),
            Error::InvalidOperation("the root cannot be pruned".into())
        );
        assert_eq!(small().prune(&["unicorn"]).unwrap_err(), Error::Lookup("unicorn".into()));
    }

    #[test]
    fn resolve_labels() {
        let t = small();
        assert_eq!(t.resolve_label("Chair"), Some("chair"));
        assert_eq!(t.resolve_label(" coffee  table "), Some("coffee_table"));
        assert_eq!(t.resolve_label("COFFEE_TABLE"), Some("coffee_table"));
        assert_eq!(t.resolve_label("warp drive"), None);
    }

    #[test]
    fn ancestors_and_lca() {
        let t = small();
        assert_eq!(t.ancestors("bee").unwrap(), vec!["animal", "entity"]);
        assert!(t.ancestors("entity").unwrap().is_empty());
        assert_eq!(t.lowest_common_ancestor("bee", "vehicle").unwrap(), "entity");
        assert_eq!(t.lowest_common_ancestor("chair", "chair").unwrap(), "chair");
        assert_eq!(t.lowest_common_ancestor("coffee_table", "furniture").unwrap(), "furniture");
        assert_eq!(t.lowest_common_ancestor("coffee_table", "chair").unwrap(), "furniture");
        assert!(t.lowest_common_ancestor("chair", "sofa").is_err());
        assert!(t.ancestors("sofa").is_err());
    }

    #[test]
    fn attribute_inheritance() {
        let t = small();
        let rec = |node: &str, kind, value: &str| AttributeDefault {
            node: node.into(),
            kind,
            value: value.into(),
        };
        let defaults = AttributeDefaults::from_records(
            &t,
            &[
                rec("furniture", AttributeKind::Shape, "cuboid"),
                rec("furniture", AttributeKind::Material, "wood"),
                rec("table", AttributeKind::Shape, "cylinder"),
            ],
        )
        .unwrap();
        assert_eq!(
            t.inherit_attributes(&defaults, "chair").unwrap(),
            vec![
                (AttributeKind::Material, "wood".into()),
                (AttributeKind::Shape, "cuboid".into())
            ]
        );
        assert_eq!(
            t.inherit_attributes(&defaults, "coffee_table").unwrap(),
            vec![
                (AttributeKind::Material, "wood".into()),
                (AttributeKind::Shape, "cylinder".into())
            ]
        );
        assert!(t.inherit_attributes(&defaults, "bee").unwrap().is_empty());
        assert!(t.inherit_attributes(&defaults, "sofa").is_err());
        assert!(AttributeDefaults::from_records(&t, &[rec("sofa", AttributeKind::Color, "red")])
            .is_err());
    }

    #[test]
    fn provisional_nodes_hang_off_the_root() {
        let mut t = small();
        let id = t.attach_provisional("Warp Drive").unwrap();
        assert_eq!(id, "warp_drive");
        assert_eq!(t.parent("warp_drive").unwrap(), Some("entity"));
        assert!(t.is_provisional("warp_drive").unwrap());
        assert!(!t.is_provisional("chair").unwrap());
        assert_eq!(t.attach_provisional("chair").unwrap(), "chair");
        assert!(!t.is_provisional("chair").unwrap());
    }

    #[test]
    fn stats_and_document_round_trip() {
        let t = small();
        assert_eq!(
            t.stats(),
            TaxonomyStats {
                nodes: 8,
                leaves: 4,
                max_depth: 3
            }
        );
        assert_eq!(Taxonomy::from_document(&t.to_document()).unwrap(), t);
    }

    #[test]
    fn concept_canonical_form() {
        let c = Concept::object("Coffee Table").unwrap();
        assert_eq!(c.to_string(), "coffee_table.o");
        for (s, kind) in [
            ("hat.o", ConceptKind::Object),
            ("plastic.m", ConceptKind::Material),
            ("cube.s", ConceptKind::Shape),
            ("red.c", ConceptKind::Color),
        ] {
            let c: Concept = s.parse().unwrap();
            assert_eq!(c.kind(), kind);
            assert_eq!(c.to_string(), s);
        }
        for bad in ["chair", "chair.x", "chair.oo", ".o", "Chair.o", "a b.o"] {
            assert!(bad.parse::<Concept>().is_err(), "{bad}");
        }
    }
}
