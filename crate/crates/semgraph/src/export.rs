//! Graph exports for external viewers: `graph.json` and Graphviz `graph.dot`.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use semgraph_core::taxonomy::{Concept, ConceptKind};
use semgraph_core::worldgraph::{Term, WorldGraph};

/// Predicate name of the export-only edge from an instance to its concept.
pub const INSTANCE_OF: &str = "InstanceOf";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphNode {
    pub id: String,
    /// `object`, `material`, `shape`, `color` or `instance`.
    pub kind: String,
    pub label: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub concept: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub centroid: Option<[f64; 3]>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub provisional: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphEdge {
    pub predicate: String,
    pub source: String,
    pub target: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphExport {
    pub nodes: Vec<GraphNode>,
    pub edges: Vec<GraphEdge>,
    /// Every stored triple in canonical form.
    pub triples: Vec<String>,
}

fn concept_node(c: &Concept) -> GraphNode {
    GraphNode {
        id: c.to_string(),
        kind: c.kind().name().into(),
        label: c.name().into(),
        concept: None,
        centroid: None,
        provisional: false,
    }
}

fn term_id(t: &Term) -> String {
    t.to_string()
}

pub fn graph_export(world: &WorldGraph) -> GraphExport {
    let mut nodes: BTreeMap<String, GraphNode> = BTreeMap::new();
    let mut edges = Vec::new();
    for inst in world.instances() {
        let id = format!("#{}", inst.instance_id);
        nodes.insert(
            id.clone(),
            GraphNode {
                id: id.clone(),
                kind: "instance".into(),
                label: format!("{} {id}", inst.concept.name()),
                concept: Some(inst.concept.to_string()),
                centroid: Some(inst.centroid.to_array()),
                provisional: inst.provisional,
            },
        );
        nodes
            .entry(inst.concept.to_string())
            .or_insert_with(|| concept_node(&inst.concept));
        edges.push(GraphEdge {
            predicate: INSTANCE_OF.into(),
            source: id,
            target: inst.concept.to_string(),
        });
    }
    let mut triples = Vec::new();
    for t in world.triples() {
        for term in [t.subject(), t.object()] {
            if let Term::Concept(c) = term {
                nodes.entry(c.to_string()).or_insert_with(|| concept_node(c));
            }
        }
        edges.push(GraphEdge {
            predicate: t.predicate().name().into(),
            source: term_id(t.subject()),
            target: term_id(t.object()),
        });
        triples.push(t.to_string());
    }
    edges.sort_by(|a, b| {
        (&a.source, &a.predicate, &a.target).cmp(&(&b.source, &b.predicate, &b.target))
    });
    GraphExport {
        nodes: nodes.into_values().collect(),
        edges,
        triples,
    }
}

pub fn graph_json(world: &WorldGraph) -> String {
    let mut s = serde_json::to_string_pretty(&graph_export(world)).expect("graph serializes");
    s.push('\n');
    s
}

fn fill(kind: &str) -> &'static str {
    match kind {
        "object" => "lightblue",
        "material" => "burlywood",
        "shape" => "palegreen",
        "color" => "khaki",
        _ => "white",
    }
}

fn quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for ch in s.chars() {
        if ch == '"' || ch == '\\' {
            out.push('\\');
        }
        out.push(ch);
    }
    out.push('"');
    out
}

pub fn graph_dot(world: &WorldGraph) -> String {
    let g = graph_export(world);
    let mut out = String::from("digraph world {\n  node [style=filled];\n");
    for n in &g.nodes {
        let shape = if n.kind == "instance" { "box" } else { "ellipse" };
        let _ = writeln!(
            out,
            "  {} [label={}, shape={shape}, fillcolor={}];",
            quote(&n.id),
            quote(&n.label),
            fill(&n.kind)
        );
    }
    for e in &g.edges {
        let style = match e.predicate.as_str() {
            INSTANCE_OF => ", style=dashed",
            "NearTo" => ", dir=none",
            _ => "",
        };
        let _ = writeln!(
            out,
            "  {} -> {} [label={}{style}];",
            quote(&e.source),
            quote(&e.target),
            quote(&e.predicate)
        );
    }
    out.push_str("}\n");
    out
}

/// Concept kind of an exported node id, if it names a concept.
pub fn node_kind(id: &str) -> Option<ConceptKind> {
    id.parse::<Concept>().ok().map(|c| c.kind())
}
