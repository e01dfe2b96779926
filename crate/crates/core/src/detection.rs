//! Records produced by the remote perception branch.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::taxonomy::{normalize_label, AttributeKind};
use crate::{Error, Result};

pub const DEFAULT_SCORE_THRESHOLD: f64 = 0.5;

/// Axis-aligned box in normalized image coordinates.
/// Serialized as `[x_min, y_min, x_max, y_max]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 4]", into = "[f64; 4]")]
pub struct BoundingBox {
    x_min: f64,
    y_min: f64,
    x_max: f64,
    y_max: f64,
}

impl BoundingBox {
    pub fn new(x_min: f64, y_min: f64, x_max: f64, y_max: f64) -> Result<Self> {
        let ordered = 0.0 <= x_min && x_min < x_max && x_max <= 1.0;
        let ordered = ordered && 0.0 <= y_min && y_min < y_max && y_max <= 1.0;
        if !ordered {
            return Err(Error::InvalidParameter(format!(
                "bounding box ({x_min}, {y_min}, {x_max}, {y_max}) is not ordered inside [0,1]"
            )));
        }
        Ok(BoundingBox {
            x_min,
            y_min,
            x_max,
            y_max,
        })
    }

    /// Min/max hull of polygon vertices, each coordinate clamped into [0,1].
    pub fn from_vertices(vertices: &[(f64, f64)]) -> Result<Self> {
        if vertices.is_empty() {
            return Err(Error::EmptyInput("bounding polygon without vertices"));
        }
        let clamp = |v: f64| if v.is_nan() { 0.0 } else { v.clamp(0.0, 1.0) };
        let mut b = [f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY];
        for &(x, y) in vertices {
            let (x, y) = (clamp(x), clamp(y));
            b[0] = b[0].min(x);
            b[1] = b[1].min(y);
            b[2] = b[2].max(x);
            b[3] = b[3].max(y);
        }
        BoundingBox::new(b[0], b[1], b[2], b[3])
    }

    pub fn x_min(&self) -> f64 {
        self.x_min
    }

    pub fn y_min(&self) -> f64 {
        self.y_min
    }

    pub fn x_max(&self) -> f64 {
        self.x_max
    }

    pub fn y_max(&self) -> f64 {
        self.y_max
    }

    pub fn center(&self) -> (f64, f64) {
        ((self.x_min + self.x_max) / 2.0, (self.y_min + self.y_max) / 2.0)
    }

    /// Inclusive containment.
    pub fn contains(&self, (u, v): (f64, f64)) -> bool {
        self.x_min <= u && u <= self.x_max && self.y_min <= v && v <= self.y_max
    }

    pub fn to_array(&self) -> [f64; 4] {
        [self.x_min, self.y_min, self.x_max, self.y_max]
    }
}

impl TryFrom<[f64; 4]> for BoundingBox {
    type Error = Error;

    fn try_from(a: [f64; 4]) -> Result<Self> {
        BoundingBox::new(a[0], a[1], a[2], a[3])
    }
}

impl From<BoundingBox> for [f64; 4] {
    fn from(b: BoundingBox) -> Self {
        b.to_array()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionAttribute {
    pub kind: AttributeKind,
    pub value: String,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    pub label: String,
    pub score: f64,
    pub bbox: BoundingBox,
    #[serde(default)]
    pub attributes: Vec<DetectionAttribute>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameDetections {
    pub frame_id: String,
    pub detections: Vec<Detection>,
}

/// Something [`normalize_frame`] had to repair.
#[derive(Debug, Clone, PartialEq)]
pub enum NormalizationWarning {
    ScoreClamped {
        detection: usize,
        original: f64,
    },
    AttributeScoreClamped {
        detection: usize,
        attribute: usize,
        original: f64,
    },
}

impl core::fmt::Display for NormalizationWarning {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            NormalizationWarning::ScoreClamped { detection, original } => {
                write!(f, "detection {detection}: score {original} clamped into [0,1]")
            }
            NormalizationWarning::AttributeScoreClamped {
                detection,
                attribute,
                original,
            } => write!(
                f,
                "detection {detection} attribute {attribute}: score {original} clamped into [0,1]"
            ),
        }
    }
}

fn clamp_score(s: f64) -> f64 {
    if s.is_nan() {
        0.0
    } else {
        s.clamp(0.0, 1.0)
    }
}

/// Lowercases labels, normalizes attribute values and clamps scores.
/// Shared by every provider so replayed and live output agree.
pub fn normalize_frame(mut fd: FrameDetections) -> Result<(FrameDetections, Vec<NormalizationWarning>)> {
    if fd.frame_id.trim().is_empty() {
        return Err(Error::InvalidParameter("empty frame id".into()));
    }
    let mut warnings = Vec::new();
    for (i, det) in fd.detections.iter_mut().enumerate() {
        det.label = det.label.trim().to_lowercase();
        let clamped = clamp_score(det.score);
        if clamped != det.score {
            warnings.push(NormalizationWarning::ScoreClamped {
                detection: i,
                original: det.score,
            });
            det.score = clamped;
        }
        for (j, attr) in det.attributes.iter_mut().enumerate() {
            attr.value = normalize_label(&attr.value);
            let clamped = clamp_score(attr.score);
            if clamped != attr.score {
                warnings.push(NormalizationWarning::AttributeScoreClamped {
                    detection: i,
                    attribute: j,
                    original: attr.score,
                });
                attr.score = clamped;
            }
        }
    }
    Ok((fd, warnings))
}

impl FrameDetections {
    pub fn new(frame_id: &str, detections: Vec<Detection>) -> Result<Self> {
        if frame_id.trim().is_empty() {
            return Err(Error::InvalidParameter("empty frame id".into()));
        }
        Ok(FrameDetections {
            frame_id: frame_id.into(),
            detections,
        })
    }

    /// Drops detections scoring below `threshold`.
    pub fn retain_confident(&mut self, threshold: f64) {
        self.detections.retain(|d| d.score >= threshold);
    }
}
