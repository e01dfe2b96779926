use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Core(#[from] semgraph_core::Error),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{}: {source}", path.display())]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error("{}: {message}", path.display())]
    Image { path: PathBuf, message: String },
    #[error("dataset error: {0}")]
    Dataset(String),
    #[error("{}:{line}: {message}", path.display())]
    TrajectoryParse {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("no detections recorded for frame `{frame_id}` ({})", path.display())]
    DataMissing { frame_id: String, path: PathBuf },
    #[error("network error (retriable): {0}")]
    Network(String),
    #[error("vision provider returned HTTP {status}: {body}")]
    Provider { status: u16, body: String },
    #[error("malformed provider response: {0}")]
    ResponseParse(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("frame `{frame_id}`: {source}")]
    Frame {
        frame_id: String,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn json(path: impl Into<PathBuf>, source: serde_json::Error) -> Self {
        Error::Json {
            path: path.into(),
            source,
        }
    }

    /// Transport failures and throttling/server errors may succeed later.
    pub fn is_retriable(&self) -> bool {
        match self {
            Error::Network(_) => true,
            Error::Provider { status, .. } => *status == 429 || *status >= 500,
            _ => false,
        }
    }

    pub fn in_frame(self, frame_id: &str) -> Self {
        Error::Frame {
            frame_id: frame_id.into(),
            source: Box::new(self),
        }
    }
}
