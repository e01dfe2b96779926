//! Recorded dataset layout:
//!
//! ```text
//! dataset/
//!   intrinsics.json            fx fy cx cy width height depth_scale
//!   trajectory.txt             frame_id tx ty tz qx qy qz qw
//!   depth/<frame_id>.png       16-bit grayscale, raw depth units
//!   detections/<frame_id>.json replay provider records
//!   rgb/<frame_id>.png         optional, sent to a remote provider
//! ```

use std::path::{Path, PathBuf};

use semgraph_core::geometry::{CameraIntrinsics, Pose};

use crate::trajectory::read_trajectory;
use crate::{Error, Result};

pub const INTRINSICS_FILE: &str = "intrinsics.json";
pub const TRAJECTORY_FILE: &str = "trajectory.txt";
pub const DEPTH_DIR: &str = "depth";
pub const DETECTIONS_DIR: &str = "detections";
pub const RGB_DIR: &str = "rgb";

#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    pub frame_id: String,
    pub depth_path: PathBuf,
    pub pose: Pose,
    pub detections_path: PathBuf,
    pub image_path: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub root: PathBuf,
    pub intrinsics: CameraIntrinsics,
    pub frames: Vec<Frame>,
}

pub fn read_intrinsics(path: &Path) -> Result<CameraIntrinsics> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::json(path, e))
}

pub fn write_intrinsics(path: &Path, k: &CameraIntrinsics) -> Result<()> {
    let mut text = serde_json::to_string_pretty(k).map_err(|e| Error::json(path, e))?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Frames come back in trajectory order. Every frame must have a depth
/// image; detection files are checked lazily by the replay provider.
pub fn load_dataset(dir: &Path) -> Result<Dataset> {
    let intrinsics_path = dir.join(INTRINSICS_FILE);
    if !intrinsics_path.is_file() {
        return Err(Error::Dataset(format!(
            "missing {}",
            intrinsics_path.display()
        )));
    }
    let trajectory_path = dir.join(TRAJECTORY_FILE);
    if !trajectory_path.is_file() {
        return Err(Error::Dataset(format!(
            "missing {}",
            trajectory_path.display()
        )));
    }
    let intrinsics = read_intrinsics(&intrinsics_path)?;
    let entries = read_trajectory(&trajectory_path)?;
    let mut frames = Vec::with_capacity(entries.len());
    for entry in entries {
        let depth_path = dir.join(DEPTH_DIR).join(format!("{}.png", entry.frame_id));
        if !depth_path.is_file() {
            return Err(Error::Dataset(format!(
                "frame `{}` has no depth image at {}",
                entry.frame_id,
                depth_path.display()
            )));
        }
        let image_path = dir.join(RGB_DIR).join(format!("{}.png", entry.frame_id));
        frames.push(Frame {
            detections_path: dir
                .join(DETECTIONS_DIR)
                .join(format!("{}.json", entry.frame_id)),
            image_path: image_path.is_file().then_some(image_path),
            frame_id: entry.frame_id,
            depth_path,
            pose: entry.pose,
        });
    }
    Ok(Dataset {
        root: dir.to_path_buf(),
        intrinsics,
        frames,
    })
}
