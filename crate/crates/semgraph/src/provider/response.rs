//! Adapter for the cloud vision response shape.
//!
//! Expected body (other fields are ignored):
//!
//! ```json
//! {"responses": [{"localizedObjectAnnotations": [{
//!     "name": "Chair", "score": 0.91,
//!     "boundingPoly": {"normalizedVertices": [{"x": 0.1, "y": 0.2}, ...]},
//!     "labelAnnotations": [{"description": "Blue", "score": 0.8}]
//! }]}]}
//! ```
//!
//! Omitted vertex coordinates mean 0, as the service drops zero fields.

use std::collections::BTreeMap;
use std::path::Path;

use base64::Engine;
use serde::Deserialize;
use serde_json::{json, Value};

use semgraph_core::detection::{
    normalize_frame, BoundingBox, Detection, DetectionAttribute, FrameDetections,
};
use semgraph_core::taxonomy::{normalize_label, AttributeKind};

use crate::{Error, Result};

const DEFAULT_KEYWORDS: &str = include_str!("../../data/keywords.toml");

/// Maps label descriptions onto attribute kinds.
#[derive(Debug, Clone, PartialEq)]
pub struct KeywordTable {
    entries: BTreeMap<String, AttributeKind>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct KeywordFile {
    #[serde(default)]
    color: Vec<String>,
    #[serde(default)]
    material: Vec<String>,
    #[serde(default)]
    shape: Vec<String>,
}

impl Default for KeywordTable {
    fn default() -> Self {
        KeywordTable::from_toml(DEFAULT_KEYWORDS).expect("bundled keyword table parses")
    }
}

impl KeywordTable {
    pub fn from_toml(text: &str) -> Result<Self> {
        let file: KeywordFile =
            toml::from_str(text).map_err(|e| Error::Config(format!("keyword table: {e}")))?;
        let mut entries = BTreeMap::new();
        for (kind, words) in [
            (AttributeKind::Color, file.color),
            (AttributeKind::Material, file.material),
            (AttributeKind::Shape, file.shape),
        ] {
            for w in words {
                let key = normalize_label(&w);
                if key.is_empty() {
                    return Err(Error::Config("keyword table: empty keyword".into()));
                }
                if let Some(prev) = entries.insert(key.clone(), kind) {
                    if prev != kind {
                        return Err(Error::Config(format!(
                            "keyword table: `{key}` listed under both {prev} and {kind}"
                        )));
                    }
                }
            }
        }
        Ok(KeywordTable { entries })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        KeywordTable::from_toml(&text)
    }

    pub fn kind_of(&self, description: &str) -> Option<AttributeKind> {
        self.entries.get(&normalize_label(description)).copied()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParsedResponse {
    pub detections: FrameDetections,
    /// Label annotations that matched no keyword.
    pub dropped_labels: Vec<String>,
}

/// Request body for one image.
pub fn build_request(image: &[u8]) -> Value {
    json!({
        "requests": [{
            "image": {"content": base64::engine::general_purpose::STANDARD.encode(image)},
            "features": [
                {"type": "OBJECT_LOCALIZATION"},
                {"type": "LABEL_DETECTION"}
            ]
        }]
    })
}

fn field<'a>(v: &'a Value, name: &str, at: &str) -> Result<&'a Value> {
    v.get(name)
        .ok_or_else(|| Error::ResponseParse(format!("missing field `{at}{name}`")))
}

fn number(v: &Value, name: &str, at: &str) -> Result<f64> {
    field(v, name, at)?
        .as_f64()
        .ok_or_else(|| Error::ResponseParse(format!("field `{at}{name}` is not a number")))
}

fn string<'a>(v: &'a Value, name: &str, at: &str) -> Result<&'a str> {
    field(v, name, at)?
        .as_str()
        .ok_or_else(|| Error::ResponseParse(format!("field `{at}{name}` is not a string")))
}

fn array<'a>(v: &'a Value, name: &str, at: &str) -> Result<&'a [Value]> {
    field(v, name, at)?
        .as_array()
        .map(Vec::as_slice)
        .ok_or_else(|| Error::ResponseParse(format!("field `{at}{name}` is not an array")))
}

fn coordinate(vertex: &Value, name: &str, at: &str) -> Result<f64> {
    match vertex.get(name) {
        None => Ok(0.0),
        Some(v) => v
            .as_f64()
            .ok_or_else(|| Error::ResponseParse(format!("field `{at}{name}` is not a number"))),
    }
}

/// Parses a response body. Labels stay raw; scores are not clamped here.
pub fn parse_response(body: &str, frame_id: &str, keywords: &KeywordTable) -> Result<ParsedResponse> {
    let root: Value =
        serde_json::from_str(body).map_err(|e| Error::ResponseParse(format!("invalid JSON: {e}")))?;
    let responses = array(&root, "responses", "")?;
    let first = responses
        .first()
        .ok_or_else(|| Error::ResponseParse("field `responses` is empty".into()))?;
    if let Some(err) = first.get("error") {
        let status = err
            .get("code")
            .and_then(Value::as_u64)
            .and_then(|c| u16::try_from(c).ok())
            .unwrap_or(0);
        let message = err.get("message").and_then(Value::as_str).unwrap_or_default();
        return Err(Error::Provider {
            status,
            body: message.into(),
        });
    }
    let objects = match first.get("localizedObjectAnnotations") {
        None => &[][..],
        Some(_) => array(first, "localizedObjectAnnotations", "responses[0].")?,
    };

    let mut detections = Vec::with_capacity(objects.len());
    let mut dropped_labels = Vec::new();
    for (i, obj) in objects.iter().enumerate() {
        let at = format!("responses[0].localizedObjectAnnotations[{i}].");
        let label = string(obj, "name", &at)?;
        let score = number(obj, "score", &at)?;
        let poly = field(obj, "boundingPoly", &at)?;
        let vat = format!("{at}boundingPoly.");
        let vertices = array(poly, "normalizedVertices", &vat)?
            .iter()
            .enumerate()
            .map(|(j, v)| {
                let at = format!("{vat}normalizedVertices[{j}].");
                Ok((coordinate(v, "x", &at)?, coordinate(v, "y", &at)?))
            })
            .collect::<Result<Vec<_>>>()?;
        let bbox = BoundingBox::from_vertices(&vertices)
            .map_err(|e| Error::ResponseParse(format!("{at}boundingPoly: {e}")))?;

        let mut attributes = Vec::new();
        if let Some(labels) = obj.get("labelAnnotations") {
            let labels = labels
                .as_array()
                .ok_or_else(|| Error::ResponseParse(format!("field `{at}labelAnnotations` is not an array")))?;
            for (j, l) in labels.iter().enumerate() {
                let lat = format!("{at}labelAnnotations[{j}].");
                let description = string(l, "description", &lat)?;
                let score = number(l, "score", &lat)?;
                match keywords.kind_of(description) {
                    Some(kind) => attributes.push(DetectionAttribute {
                        kind,
                        value: description.into(),
                        score,
                    }),
                    None => dropped_labels.push(description.into()),
                }
            }
        }
        detections.push(Detection {
            label: label.into(),
            score,
            bbox,
            attributes,
        });
    }
    Ok(ParsedResponse {
        detections: FrameDetections::new(frame_id, detections)?,
        dropped_labels,
    })
}

/// [`parse_response`] followed by the normalization every provider applies;
/// repairs and dropped labels are logged.
pub fn detections_from_response(body: &str, frame_id: &str, keywords: &KeywordTable) -> Result<FrameDetections> {
    let parsed = parse_response(body, frame_id, keywords)?;
    for label in &parsed.dropped_labels {
        log::warn!("frame {frame_id}: dropped unmapped label `{label}`");
    }
    let (fd, warnings) = normalize_frame(parsed.detections)?;
    for w in warnings {
        log::warn!("frame {frame_id}: {w}");
    }
    Ok(fd)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(body: &str) -> Result<ParsedResponse> {
        parse_response(body, "000001", &KeywordTable::default())
    }

    #[test]
    fn vertices_reduce_to_box() {
        let r = parse(
            r#"{"responses": [{"localizedObjectAnnotations": [{"name": "Chair", "score": 0.9,
                "boundingPoly": {"normalizedVertices": [
                    {"x": 0.1, "y": 0.2}, {"x": 0.4, "y": 0.2}, {"x": 0.4, "y": 0.6}, {"x": 0.1, "y": 0.6}]}}]}]}"#,
        )
        .unwrap();
        let d = &r.detections.detections[0];
        assert_eq!(d.label, "Chair");
        assert_eq!(d.bbox.to_array(), [0.1, 0.2, 0.4, 0.6]);
    }

    #[test]
    fn empty_and_absent_object_lists() {
        for body in [
            r#"{"responses": [{"localizedObjectAnnotations": []}]}"#,
            r#"{"responses": [{}]}"#,
        ] {
            assert!(parse(body).unwrap().detections.detections.is_empty());
        }
    }

    #[test]
    fn out_of_range_vertices_clamp_and_missing_coordinates_are_zero() {
        let r = parse(
            r#"{"responses": [{"localizedObjectAnnotations": [{"name": "Box", "score": 0.7,
                "boundingPoly": {"normalizedVertices": [{"y": -0.1}, {"x": 1.3, "y": 0.5}]}}]}]}"#,
        )
        .unwrap();
        assert_eq!(r.detections.detections[0].bbox.to_array(), [0.0, 0.0, 1.0, 0.5]);
    }

    #[test]
    fn missing_field_is_named() {
        let err = parse(
            r#"{"responses": [{"localizedObjectAnnotations": [{"name": "Box",
                "boundingPoly": {"normalizedVertices": []}}]}]}"#,
        )
        .unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("localizedObjectAnnotations[0].score"), "{msg}");
        let err = parse(r#"{"foo": 1}"#).unwrap_err().to_string();
        assert!(err.contains("`responses`"), "{err}");
    }

    #[test]
    fn embedded_error_is_provider_error() {
        let err = parse(r#"{"responses": [{"error": {"code": 403, "message": "denied"}}]}"#).unwrap_err();
        assert!(matches!(err, Error::Provider { status: 403, .. }));
    }

    #[test]
    fn labels_split_by_keyword_table() {
        let r = parse(
            r#"{"responses": [{"localizedObjectAnnotations": [{"name": "Table", "score": 0.8,
                "boundingPoly": {"normalizedVertices": [{"x": 0.1, "y": 0.1}, {"x": 0.3, "y": 0.3}]},
                "labelAnnotations": [{"description": "Wood", "score": 0.7},
                                     {"description": "Furniture", "score": 0.9},
                                     {"description": "Brown", "score": 0.6}]}]}]}"#,
        )
        .unwrap();
        let attrs = &r.detections.detections[0].attributes;
        assert_eq!(attrs.len(), 2);
        assert_eq!((attrs[0].kind, attrs[0].value.as_str()), (AttributeKind::Material, "Wood"));
        assert_eq!((attrs[1].kind, attrs[1].value.as_str()), (AttributeKind::Color, "Brown"));
        assert_eq!(r.dropped_labels, vec!["Furniture".to_string()]);
    }

    #[test]
    fn keyword_table_rejects_conflicts() {
        assert!(KeywordTable::from_toml("color = [\"gold\"]\nmaterial = [\"Gold\"]").is_err());
        assert!(KeywordTable::from_toml("colour = [\"red\"]").is_err());
        let t = KeywordTable::from_toml("shape = [\"Round Shape\"]").unwrap();
        assert_eq!(t.kind_of("round shape"), Some(AttributeKind::Shape));
        assert!(KeywordTable::default().len() > 40);
    }

    #[test]
    fn request_carries_base64_image() {
        let req = build_request(b"abc");
        assert_eq!(req["requests"][0]["image"]["content"], "YWJj");
        assert_eq!(req["requests"][0]["features"].as_array().unwrap().len(), 2);
    }
}
