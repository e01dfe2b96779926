use std::path::Path;
use std::sync::Mutex;
use std::thread;
use std::time::{Duration, Instant};

use semgraph_core::detection::FrameDetections;

use super::response::{build_request, detections_from_response, KeywordTable};
use super::{ImageRef, VisionProvider};
use crate::{Error, Result};

pub const API_KEY_ENV: &str = "SEMGRAPH_VISION_KEY";

#[derive(Debug, Clone)]
pub struct RemoteConfig {
    pub endpoint: String,
    pub api_key: String,
    /// Retries after the first attempt.
    pub retry_budget: u32,
    pub initial_backoff: Duration,
    pub rate_limit_per_s: f64,
    pub timeout: Duration,
    pub keywords: KeywordTable,
}

impl RemoteConfig {
    pub fn new(endpoint: &str, api_key: &str) -> Self {
        RemoteConfig {
            endpoint: endpoint.into(),
            api_key: api_key.into(),
            retry_budget: 3,
            initial_backoff: Duration::from_millis(500),
            rate_limit_per_s: 2.0,
            timeout: Duration::from_secs(30),
            keywords: KeywordTable::default(),
        }
    }

    /// Reads the credential from [`API_KEY_ENV`].
    pub fn from_env(endpoint: &str) -> Result<Self> {
        match std::env::var(API_KEY_ENV) {
            Ok(key) if !key.is_empty() => Ok(RemoteConfig::new(endpoint, &key)),
            _ => Err(Error::Config(format!("{API_KEY_ENV} is not set"))),
        }
    }
}

/// Sleeps before each retry: `initial`, `2·initial`, `4·initial`, ...
pub fn backoff_schedule(retry_budget: u32, initial: Duration) -> Vec<Duration> {
    (0..retry_budget)
        .map(|k| initial.saturating_mul(1u32.checked_shl(k).unwrap_or(u32::MAX)))
        .collect()
}

/// HTTP client for the cloud vision service. Requests from all threads pass
/// one at a time through a rate limiter.
pub struct RemoteProvider {
    config: RemoteConfig,
    agent: ureq::Agent,
    last_request: Mutex<Option<Instant>>,
}

impl std::fmt::Debug for RemoteProvider {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("RemoteProvider")
            .field("endpoint", &self.config.endpoint)
            .field("retry_budget", &self.config.retry_budget)
            .finish_non_exhaustive()
    }
}

impl RemoteProvider {
    pub fn new(config: RemoteConfig) -> Result<Self> {
        if config.endpoint.is_empty() {
            return Err(Error::Config("remote provider needs an endpoint".into()));
        }
        if !(config.rate_limit_per_s.is_finite() && config.rate_limit_per_s > 0.0) {
            return Err(Error::Config(format!(
                "rate_limit_per_s must be positive, got {}",
                config.rate_limit_per_s
            )));
        }
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(config.timeout))
            .http_status_as_error(false)
            .build()
            .into();
        Ok(RemoteProvider {
            config,
            agent,
            last_request: Mutex::new(None),
        })
    }

    pub fn config(&self) -> &RemoteConfig {
        &self.config
    }

    /// One POST, rate limited. Returns the body of a 2xx response.
    fn post_once(&self, body: &str) -> Result<String> {
        let mut last = self.last_request.lock().unwrap_or_else(|p| p.into_inner());
        let gap = Duration::from_secs_f64(1.0 / self.config.rate_limit_per_s);
        if let Some(prev) = *last {
            let ready = prev + gap;
            let now = Instant::now();
            if ready > now {
                thread::sleep(ready - now);
            }
        }
        *last = Some(Instant::now());

        let mut resp = self
            .agent
            .post(&self.config.endpoint)
            .header("x-goog-api-key", &self.config.api_key)
            .content_type("application/json")
            .send(body)
            .map_err(|e| Error::Network(e.to_string()))?;
        let status = resp.status().as_u16();
        let text = resp
            .body_mut()
            .read_to_string()
            .map_err(|e| Error::Network(e.to_string()))?;
        if !(200..300).contains(&status) {
            return Err(Error::Provider { status, body: text });
        }
        Ok(text)
    }

    /// POSTs with retries on retriable failures; returns the raw body.
    pub fn fetch(&self, image: &[u8]) -> Result<String> {
        let body = build_request(image).to_string();
        let mut waits = backoff_schedule(self.config.retry_budget, self.config.initial_backoff).into_iter();
        loop {
            match self.post_once(&body) {
                Ok(text) => return Ok(text),
                Err(e) if e.is_retriable() => match waits.next() {
                    Some(wait) => {
                        log::warn!("vision request failed ({e}); retrying in {wait:?}");
                        thread::sleep(wait);
                    }
                    None => return Err(e),
                },
                Err(e) => return Err(e),
            }
        }
    }

    /// Fetches and parses; the raw body is returned for recording.
    pub fn detect_raw(&self, frame_id: &str, image: ImageRef<'_>) -> Result<(FrameDetections, String)> {
        let bytes = match image {
            ImageRef::Path(p) => read_image(p)?,
            ImageRef::Bytes(b) => b.to_vec(),
            ImageRef::Absent => {
                return Err(Error::Config(format!(
                    "remote provider needs image content for frame `{frame_id}`"
                )))
            }
        };
        let text = self.fetch(&bytes)?;
        let fd = detections_from_response(&text, frame_id, &self.config.keywords)?;
        Ok((fd, text))
    }
}

fn read_image(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(|e| Error::io(path, e))
}

impl VisionProvider for RemoteProvider {
    fn detect(&self, frame_id: &str, image: ImageRef<'_>) -> Result<FrameDetections> {
        self.detect_raw(frame_id, image).map(|(fd, _)| fd)
    }
}
