use std::path::{Path, PathBuf};

use semgraph_core::detection::{normalize_frame, FrameDetections, NormalizationWarning};

use super::{ImageRef, VisionProvider};
use crate::{Error, Result};

/// Reads `<dir>/<frame_id>.json` replay records.
#[derive(Debug, Clone)]
pub struct ReplayProvider {
    dir: PathBuf,
}

impl ReplayProvider {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        ReplayProvider { dir: dir.into() }
    }

    pub fn path_for(&self, frame_id: &str) -> PathBuf {
        self.dir.join(format!("{frame_id}.json"))
    }

    pub fn detect_with_warnings(
        &self,
        frame_id: &str,
    ) -> Result<(FrameDetections, Vec<NormalizationWarning>)> {
        let path = self.path_for(frame_id);
        if !path.is_file() {
            return Err(Error::DataMissing {
                frame_id: frame_id.into(),
                path,
            });
        }
        let fd = read_replay_file(&path)?;
        if fd.frame_id != frame_id {
            return Err(Error::ResponseParse(format!(
                "{} holds frame `{}`, expected `{frame_id}`",
                path.display(),
                fd.frame_id
            )));
        }
        Ok(normalize_frame(fd)?)
    }
}

impl VisionProvider for ReplayProvider {
    fn detect(&self, frame_id: &str, _image: ImageRef<'_>) -> Result<FrameDetections> {
        let (fd, warnings) = self.detect_with_warnings(frame_id)?;
        for w in warnings {
            log::warn!("frame {frame_id}: {w}");
        }
        Ok(fd)
    }
}

/// Parses a replay record without normalizing it.
pub fn read_replay_file(path: &Path) -> Result<FrameDetections> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::json(path, e))
}

/// Canonical replay serialization: pretty JSON with a trailing newline.
pub fn to_replay_json(fd: &FrameDetections) -> String {
    let mut s = serde_json::to_string_pretty(fd).expect("detections serialize");
    s.push('\n');
    s
}
