use std::path::Path;

use serde::{Deserialize, Serialize};

use super::replay::to_replay_json;
use super::{ImageRef, VisionProvider};
use crate::dataset::Frame;
use crate::{Error, Result};

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RecordFailure {
    pub frame_id: String,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct RecordManifest {
    pub recorded: Vec<String>,
    pub failed: Vec<RecordFailure>,
}

/// Asks `provider` about every frame and writes one replay file per success
/// into `out`, plus `manifest.json`. A failing frame is listed and skipped.
pub fn record_session(provider: &dyn VisionProvider, frames: &[Frame], out: &Path) -> Result<RecordManifest> {
    std::fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    let mut manifest = RecordManifest::default();
    for frame in frames {
        let image = match &frame.image_path {
            Some(p) => ImageRef::Path(p),
            None => ImageRef::Absent,
        };
        match provider.detect(&frame.frame_id, image) {
            Ok(fd) => {
                let path = out.join(format!("{}.json", frame.frame_id));
                std::fs::write(&path, to_replay_json(&fd)).map_err(|e| Error::io(&path, e))?;
                manifest.recorded.push(frame.frame_id.clone());
            }
            Err(e) => {
                log::error!("frame {}: {e}", frame.frame_id);
                manifest.failed.push(RecordFailure {
                    frame_id: frame.frame_id.clone(),
                    error: e.to_string(),
                });
            }
        }
    }
    let path = out.join(MANIFEST_FILE);
    let mut text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    text.push('\n');
    std::fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
    Ok(manifest)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::provider::ReplayProvider;
    use semgraph_core::geometry::Pose;

    fn frame(id: &str) -> Frame {
        Frame {
            frame_id: id.into(),
            depth_path: format!("depth/{id}.png").into(),
            pose: Pose::IDENTITY,
            detections_path: format!("detections/{id}.json").into(),
            image_path: None,
        }
    }

    #[test]
    fn partial_session_lists_failures_and_is_byte_stable() {
        let src = tempfile::tempdir().unwrap();
        std::fs::write(
            src.path().join("a.json"),
            r#"{"frame_id":"a","detections":[{"label":"Chair","score":0.9,"bbox":[0.1,0.1,0.5,0.5]}]}"#,
        )
        .unwrap();
        let provider = ReplayProvider::new(src.path());
        let frames = [frame("a"), frame("b")];
        let out1 = tempfile::tempdir().unwrap();
        let out2 = tempfile::tempdir().unwrap();
        let m = record_session(&provider, &frames, out1.path()).unwrap();
        record_session(&provider, &frames, out2.path()).unwrap();
        assert_eq!(m.recorded, vec!["a".to_string()]);
        assert_eq!(m.failed.len(), 1);
        assert_eq!(m.failed[0].frame_id, "b");
        for name in ["a.json", MANIFEST_FILE] {
            assert_eq!(
                std::fs::read(out1.path().join(name)).unwrap(),
                std::fs::read(out2.path().join(name)).unwrap()
            );
        }
        // The recording replays to the same records.
        let replayed = ReplayProvider::new(out1.path()).detect("a", ImageRef::Absent).unwrap();
        assert_eq!(replayed, provider.detect("a", ImageRef::Absent).unwrap());
    }
}
