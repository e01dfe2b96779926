//! `frame_id tx ty tz qx qy qz qw` trajectory files.

use std::fmt::Write as _;
use std::path::Path;

use semgraph_core::geometry::{Pose, Quaternion};
use semgraph_core::Vec3;

use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryEntry {
    pub frame_id: String,
    pub pose: Pose,
}

/// Parses trajectory text. Blank lines and `#` comments are skipped;
/// `path` only labels errors.
pub fn parse_trajectory(text: &str, path: &Path) -> Result<Vec<TrajectoryEntry>> {
    let mut entries = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        let err = |message: String| Error::TrajectoryParse {
            path: path.to_path_buf(),
            line: line_no,
            message,
        };
        let content = line.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let fields: Vec<&str> = content.split_whitespace().collect();
        if fields.len() != 8 {
            return Err(err(format!("expected 8 fields, found {}", fields.len())));
        }
        let mut nums = [0.0f64; 7];
        for (slot, field) in nums.iter_mut().zip(&fields[1..]) {
            *slot = field
                .parse()
                .map_err(|_| err(format!("`{field}` is not a number")))?;
        }
        let [tx, ty, tz, qx, qy, qz, qw] = nums;
        let rotation = Quaternion::new(qw, qx, qy, qz).map_err(|e| err(e.to_string()))?;
        let pose = Pose::new(Vec3::new(tx, ty, tz), rotation).map_err(|e| err(e.to_string()))?;
        entries.push(TrajectoryEntry {
            frame_id: fields[0].to_string(),
            pose,
        });
    }
    Ok(entries)
}

pub fn read_trajectory(path: &Path) -> Result<Vec<TrajectoryEntry>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_trajectory(&text, path)
}

pub fn format_trajectory(entries: &[TrajectoryEntry]) -> String {
    let mut out = String::from("# frame_id tx ty tz qx qy qz qw\n");
    for e in entries {
        let (t, q) = (e.pose.translation, e.pose.rotation);
        writeln!(
            out,
            "{} {} {} {} {} {} {} {}",
            e.frame_id, t.x, t.y, t.z, q.x, q.y, q.z, q.w
        )
        .expect("writing to a String");
    }
    out
}
