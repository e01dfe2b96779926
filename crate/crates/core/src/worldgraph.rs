//! The world model: merged object instances, typed triples and the
//! proximity topology between instances.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::taxonomy::{AttributeKind, Concept, ConceptKind, Taxonomy};
use crate::{Error, Result, Vec3};

pub const DEFAULT_MERGE_RADIUS: f64 = 0.5;
pub const DEFAULT_LINK_DISTANCE: f64 = 1.5;

pub type InstanceId = u64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Predicate {
    ObjHasColor,
    ObjHasMaterial,
    ObjHasShape,
    IsA,
    NearTo,
}

impl Predicate {
    pub const ALL: [Predicate; 5] = [
        Predicate::ObjHasColor,
        Predicate::ObjHasMaterial,
        Predicate::ObjHasShape,
        Predicate::IsA,
        Predicate::NearTo,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Predicate::ObjHasColor => "ObjHasColor",
            Predicate::ObjHasMaterial => "ObjHasMaterial",
            Predicate::ObjHasShape => "ObjHasShape",
            Predicate::IsA => "IsA",
            Predicate::NearTo => "NearTo",
        }
    }

    pub fn for_attribute(kind: AttributeKind) -> Predicate {
        match kind {
            AttributeKind::Color => Predicate::ObjHasColor,
            AttributeKind::Material => Predicate::ObjHasMaterial,
            AttributeKind::Shape => Predicate::ObjHasShape,
        }
    }
}

impl fmt::Display for Predicate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Predicate {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Predicate::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::Parse(format!("unknown predicate `{s}`")))
    }
}

/// Triple endpoint: a concept token or an instance reference (`#<id>`).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Term {
    Concept(Concept),
    Instance(InstanceId),
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Concept(c) => c.fmt(f),
            Term::Instance(id) => write!(f, "#{id}"),
        }
    }
}

impl FromStr for Term {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.strip_prefix('#') {
            Some(digits) => digits
                .parse()
                .map(Term::Instance)
                .map_err(|_| Error::Parse(format!("bad instance reference `{s}`"))),
            None => s.parse().map(Term::Concept),
        }
    }
}

impl From<Concept> for Term {
    fn from(c: Concept) -> Self {
        Term::Concept(c)
    }
}

/// A typed relation, rendered canonically as `subject Predicate object`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Triple {
    subject: Term,
    predicate: Predicate,
    object: Term,
}

impl Triple {
    /// Fails when the endpoints violate the predicate's typing rule.
    pub fn new(subject: Term, predicate: Predicate, object: Term) -> Result<Self> {
        let t = Triple {
            subject,
            predicate,
            object,
        };
        match t.typing_violation() {
            Some(msg) => Err(Error::Kind(msg)),
            None => Ok(t),
        }
    }

    pub fn subject(&self) -> &Term {
        &self.subject
    }

    pub fn predicate(&self) -> Predicate {
        self.predicate
    }

    pub fn object(&self) -> &Term {
        &self.object
    }

    fn typing_violation(&self) -> Option<String> {
        let kind_of = |t: &Term| match t {
            Term::Concept(c) => Some(c.kind()),
            Term::Instance(_) => None,
        };
        let (s, o) = (kind_of(&self.subject), kind_of(&self.object));
        let ok = match self.predicate {
            Predicate::ObjHasColor => s == Some(ConceptKind::Object) && o == Some(ConceptKind::Color),
            Predicate::ObjHasMaterial => {
                s == Some(ConceptKind::Object) && o == Some(ConceptKind::Material)
            }
            Predicate::ObjHasShape => s == Some(ConceptKind::Object) && o == Some(ConceptKind::Shape),
            Predicate::IsA => s == Some(ConceptKind::Object) && o == Some(ConceptKind::Object),
            Predicate::NearTo => {
                matches!((&self.subject, &self.object), (Term::Instance(a), Term::Instance(b)) if a != b)
            }
        };
        (!ok).then(|| format!("`{self}` violates the {} typing rule", self.predicate))
    }
}

impl fmt::Display for Triple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {}", self.subject, self.predicate, self.object)
    }
}

impl FromStr for Triple {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let tokens: Vec<&str> = s.split_whitespace().collect();
        let [sub, pred, obj] = tokens[..] else {
            return Err(Error::Parse(format!(
                "triple needs 3 tokens, found {} in `{s}`",
                tokens.len()
            )));
        };
        Triple::new(sub.parse()?, pred.parse()?, obj.parse()?)
    }
}

impl Serialize for Triple {
    fn serialize<S: serde::Serializer>(&self, s: S) -> core::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Triple {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> core::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// `(subject?, predicate?, object?)`; `None` matches anything.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TriplePattern {
    pub subject: Option<Term>,
    pub predicate: Option<Predicate>,
    pub object: Option<Term>,
}

impl TriplePattern {
    pub fn matches(&self, t: &Triple) -> bool {
        self.subject.as_ref().is_none_or(|s| *s == t.subject)
            && self.predicate.is_none_or(|p| p == t.predicate)
            && self.object.as_ref().is_none_or(|o| *o == t.object)
    }
}

impl FromStr for TriplePattern {
    type Err = Error;

    /// Three whitespace-separated tokens, `?` as wildcard.
    fn from_str(s: &str) -> Result<Self> {
        let tokens: Vec<&str> = s.split_whitespace().collect();
        let [sub, pred, obj] = tokens[..] else {
            return Err(Error::Parse(format!(
                "pattern needs 3 tokens (use `?` as wildcard), found {}",
                tokens.len()
            )));
        };
        let wild = |t: &str| t == "?";
        Ok(TriplePattern {
            subject: if wild(sub) { None } else { Some(sub.parse()?) },
            predicate: if wild(pred) { None } else { Some(pred.parse()?) },
            object: if wild(obj) { None } else { Some(obj.parse()?) },
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceAttribute {
    pub kind: AttributeKind,
    pub value: String,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectInstance {
    pub instance_id: InstanceId,
    pub concept: Concept,
    /// Running mean of observed centroids, map frame.
    pub centroid: Vec3,
    pub observations: u64,
    pub first_frame: String,
    pub last_frame: String,
    /// Sorted by (kind, value), one entry per pair holding the best score.
    pub attributes: Vec<InstanceAttribute>,
    #[serde(default)]
    pub provisional: bool,
}

impl ObjectInstance {
    fn merge_attributes(&mut self, incoming: &[InstanceAttribute]) {
        for a in incoming {
            match self
                .attributes
                .iter_mut()
                .find(|e| e.kind == a.kind && e.value == a.value)
            {
                Some(e) => e.score = e.score.max(a.score),
                None => self.attributes.push(a.clone()),
            }
        }
        self.attributes
            .sort_by(|a, b| a.kind.cmp(&b.kind).then_with(|| a.value.cmp(&b.value)));
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum UpsertOutcome {
    Created(InstanceId),
    Merged(InstanceId),
}

impl UpsertOutcome {
    pub fn id(self) -> InstanceId {
        match self {
            UpsertOutcome::Created(id) | UpsertOutcome::Merged(id) => id,
        }
    }
}

/// IsA emission policy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IsaMode {
    /// Only the immediate parent.
    #[default]
    Parent,
    /// Every ancestor up to the root.
    FullChain,
}

/// Flat, serializable view of a [`WorldGraph`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorldGraphParts {
    pub next_instance_id: InstanceId,
    pub instances: Vec<ObjectInstance>,
    pub triples: Vec<Triple>,
    pub frame_log: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WorldGraph {
    instances: BTreeMap<InstanceId, ObjectInstance>,
    triples: BTreeSet<Triple>,
    frame_log: Vec<String>,
    next_instance_id: InstanceId,
}

impl Default for WorldGraph {
    fn default() -> Self {
        WorldGraph::new()
    }
}

impl WorldGraph {
    pub fn new() -> Self {
        WorldGraph {
            instances: BTreeMap::new(),
            triples: BTreeSet::new(),
            frame_log: Vec::new(),
            next_instance_id: 1,
        }
    }

    pub fn instances(&self) -> impl Iterator<Item = &ObjectInstance> {
        self.instances.values()
    }

    pub fn instance(&self, id: InstanceId) -> Option<&ObjectInstance> {
        self.instances.get(&id)
    }

    pub fn instance_count(&self) -> usize {
        self.instances.len()
    }

    pub fn triples(&self) -> impl Iterator<Item = &Triple> {
        self.triples.iter()
    }

    pub fn triple_count(&self) -> usize {
        self.triples.len()
    }

    pub fn frame_log(&self) -> &[String] {
        &self.frame_log
    }

    pub fn log_frame(&mut self, frame_id: &str) {
        self.frame_log.push(frame_id.into());
    }

    /// Merges into the nearest same-concept instance closer than
    /// `merge_radius`, or creates a new instance.
    pub fn upsert_instance(
        &mut self,
        concept: &Concept,
        centroid: Vec3,
        attributes: &[InstanceAttribute],
        frame_id: &str,
        merge_radius: f64,
        provisional: bool,
    ) -> Result<UpsertOutcome> {
        if concept.kind() != ConceptKind::Object {
            return Err(Error::Kind(format!("instances need an object concept, got `{concept}`")));
        }
        if !(merge_radius > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "merge_radius must be positive, got {merge_radius}"
            )));
        }
        if !centroid.is_finite() {
            return Err(Error::InvalidParameter(format!("non-finite centroid {centroid:?}")));
        }
        let nearest = self
            .instances
            .values()
            .filter(|inst| inst.concept == *concept)
            .map(|inst| (inst.instance_id, inst.centroid.distance(centroid)))
            .filter(|&(_, d)| d < merge_radius)
            .min_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));

        if let Some((id, _)) = nearest {
            let inst = self.instances.get_mut(&id).expect("id came from the map");
            let n = inst.observations as f64;
            inst.centroid = (inst.centroid * n + centroid) / (n + 1.0);
            inst.observations += 1;
            inst.last_frame = frame_id.into();
            inst.merge_attributes(attributes);
            inst.provisional &= provisional;
            return Ok(UpsertOutcome::Merged(id));
        }

        let id = self.next_instance_id;
        self.next_instance_id += 1;
        let mut inst = ObjectInstance {
            instance_id: id,
            concept: concept.clone(),
            centroid,
            observations: 1,
            first_frame: frame_id.into(),
            last_frame: frame_id.into(),
            attributes: Vec::new(),
            provisional,
        };
        inst.merge_attributes(attributes);
        self.instances.insert(id, inst);
        Ok(UpsertOutcome::Created(id))
    }

    /// Attribute and IsA triples for one instance; returns the newly added
    /// ones in canonical order.
    pub fn emit_triples(
        &mut self,
        id: InstanceId,
        taxonomy: &Taxonomy,
        isa: IsaMode,
    ) -> Result<Vec<Triple>> {
        let inst = self
            .instances
            .get(&id)
            .ok_or_else(|| Error::Lookup(format!("#{id}")))?;
        let subject = Term::Concept(inst.concept.clone());
        let mut emitted = Vec::new();
        for a in &inst.attributes {
            emitted.push(Triple::new(
                subject.clone(),
                Predicate::for_attribute(a.kind),
                Term::Concept(Concept::attribute(a.kind, &a.value)?),
            )?);
        }
        let ancestors = taxonomy.ancestors(inst.concept.name())?;
        let chain = match isa {
            IsaMode::Parent => &ancestors[..ancestors.len().min(1)],
            IsaMode::FullChain => &ancestors[..],
        };
        for parent in chain {
            emitted.push(Triple::new(
                subject.clone(),
                Predicate::IsA,
                Term::Concept(Concept::object(parent)?),
            )?);
        }
        let mut added: Vec<Triple> = emitted
            .into_iter()
            .filter(|t| self.triples.insert(t.clone()))
            .collect();
        added.sort();
        Ok(added)
    }

    /// Recomputes every NearTo link: one per unordered instance pair whose
    /// centroids are at most `link_distance` apart, lower id first.
    pub fn build_topology(&mut self, link_distance: f64) -> Result<Vec<Triple>> {
        if !(link_distance > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "link_distance must be positive, got {link_distance}"
            )));
        }
        self.triples.retain(|t| t.predicate != Predicate::NearTo);
        let insts: Vec<&ObjectInstance> = self.instances.values().collect();
        let mut links = Vec::new();
        for (i, a) in insts.iter().enumerate() {
            for b in &insts[i + 1..] {
                if a.centroid.distance(b.centroid) <= link_distance {
                    links.push(Triple::new(
                        Term::Instance(a.instance_id),
                        Predicate::NearTo,
                        Term::Instance(b.instance_id),
                    )?);
                }
            }
        }
        self.triples.extend(links.iter().cloned());
        Ok(links)
    }

    /// Triples matching every bound position, in canonical order.
    pub fn query(&self, pattern: &TriplePattern) -> Vec<&Triple> {
        self.triples.iter().filter(|t| pattern.matches(t)).collect()
    }

    /// Full scan for typing and referential violations.
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        for t in &self.triples {
            if let Some(msg) = t.typing_violation() {
                out.push(msg);
            }
            for term in [&t.subject, &t.object] {
                if let Term::Instance(id) = term {
                    if !self.instances.contains_key(id) {
                        out.push(format!("`{t}` references missing instance #{id}"));
                    }
                }
            }
        }
        for inst in self.instances.values() {
            if inst.concept.kind() != ConceptKind::Object {
                out.push(format!("instance #{} has non-object concept", inst.instance_id));
            }
            if inst.observations == 0 {
                out.push(format!("instance #{} has zero observations", inst.instance_id));
            }
        }
        out
    }

    pub fn to_parts(&self) -> WorldGraphParts {
        WorldGraphParts {
            next_instance_id: self.next_instance_id,
            instances: self.instances.values().cloned().collect(),
            triples: self.triples.iter().cloned().collect(),
            frame_log: self.frame_log.clone(),
        }
    }

    /// Rebuilds a graph, rejecting duplicate ids or triples, dangling
    /// references and ids at or past `next_instance_id`.
    pub fn from_parts(parts: WorldGraphParts) -> Result<Self> {
        let mut instances = BTreeMap::new();
        for inst in parts.instances {
            let id = inst.instance_id;
            if id >= parts.next_instance_id {
                return Err(Error::Schema(format!(
                    "instance #{id} not below next_instance_id {}",
                    parts.next_instance_id
                )));
            }
            if instances.insert(id, inst).is_some() {
                return Err(Error::Schema(format!("duplicate instance #{id}")));
            }
        }
        let mut triples = BTreeSet::new();
        for t in parts.triples {
            if !triples.insert(t.clone()) {
                return Err(Error::Schema(format!("duplicate triple `{t}`")));
            }
        }
        let w = WorldGraph {
            instances,
            triples,
            frame_log: parts.frame_log,
            next_instance_id: parts.next_instance_id,
        };
        if let Some(v) = w.violations().into_iter().next() {
            return Err(Error::Schema(v));
        }
        Ok(w)
    }
}
