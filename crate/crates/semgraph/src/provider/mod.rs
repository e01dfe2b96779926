//! The remote perception branch behind one seam: a [`VisionProvider`] turns
//! a frame into normalized [`FrameDetections`]. [`ReplayProvider`] reads
//! stored records and keeps runs deterministic; [`RemoteProvider`] talks to
//! a cloud vision endpoint.

use std::path::Path;

use semgraph_core::detection::FrameDetections;

use crate::Result;

mod record;
mod remote;
mod replay;
mod response;

pub use record::{record_session, RecordFailure, RecordManifest, MANIFEST_FILE};
pub use remote::{backoff_schedule, RemoteConfig, RemoteProvider, API_KEY_ENV};
pub use replay::{read_replay_file, to_replay_json, ReplayProvider};
pub use response::{
    build_request, detections_from_response, parse_response, KeywordTable, ParsedResponse,
};

/// Image content handed to a provider. Replay ignores it.
#[derive(Debug, Clone, Copy)]
pub enum ImageRef<'a> {
    Path(&'a Path),
    Bytes(&'a [u8]),
    Absent,
}

pub trait VisionProvider: Send + Sync {
    fn detect(&self, frame_id: &str, image: ImageRef<'_>) -> Result<FrameDetections>;
}
