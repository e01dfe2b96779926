//! Flat TOML pipeline configuration. Every key is optional.
//!
//! ```toml
//! stride = 2
//! max_range_m = 6.0
//! provider = "replay"
//! prune = ["animal", "person"]
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use semgraph_core::association::MatchStrategy;
use semgraph_core::clustering::ClusterParams;
use semgraph_core::worldgraph::IsaMode;

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProviderKind {
    #[default]
    Replay,
    Remote,
}

impl std::str::FromStr for ProviderKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "replay" => Ok(ProviderKind::Replay),
            "remote" => Ok(ProviderKind::Remote),
            other => Err(Error::Config(format!("unknown provider `{other}` (replay|remote)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    /// Pixel step for back-projection.
    pub stride: usize,
    pub max_range_m: f64,
    pub cluster_epsilon_m: f64,
    pub cluster_min_points: usize,
    pub min_cluster_size: usize,
    pub score_threshold: f64,
    pub merge_radius_m: f64,
    pub link_distance_m: f64,
    pub prune: Vec<String>,
    pub provider: ProviderKind,
    pub association: MatchStrategy,
    pub isa_full_chain: bool,
    /// Label hierarchy; the bundled one when unset.
    pub taxonomy_path: Option<PathBuf>,
    pub attribute_defaults_path: Option<PathBuf>,
    /// Replay directory; `<dataset>/detections` when unset.
    pub detections_dir: Option<PathBuf>,
    pub endpoint: Option<String>,
    pub keyword_table_path: Option<PathBuf>,
    pub retry_budget: u32,
    pub rate_limit_per_s: f64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            stride: 2,
            max_range_m: 6.0,
            cluster_epsilon_m: 0.05,
            cluster_min_points: 10,
            min_cluster_size: 30,
            score_threshold: 0.5,
            merge_radius_m: 0.5,
            link_distance_m: 1.5,
            prune: vec!["animal".into(), "person".into()],
            provider: ProviderKind::Replay,
            association: MatchStrategy::Optimal,
            isa_full_chain: false,
            taxonomy_path: None,
            attribute_defaults_path: None,
            detections_dir: None,
            endpoint: None,
            keyword_table_path: None,
            retry_budget: 3,
            rate_limit_per_s: 2.0,
        }
    }
}

impl PipelineConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: PipelineConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Loads a file; relative paths inside it resolve against its directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = PipelineConfig::from_toml(&text)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new(""));
        for p in [
            &mut cfg.taxonomy_path,
            &mut cfg.attribute_defaults_path,
            &mut cfg.detections_dir,
            &mut cfg.keyword_table_path,
        ]
        .into_iter()
        .flatten()
        {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("max_range_m", self.max_range_m),
            ("cluster_epsilon_m", self.cluster_epsilon_m),
            ("score_threshold", self.score_threshold),
            ("merge_radius_m", self.merge_radius_m),
            ("link_distance_m", self.link_distance_m),
            ("rate_limit_per_s", self.rate_limit_per_s),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("{name} must be positive, got {v}")));
            }
        }
        for (name, v) in [
            ("stride", self.stride),
            ("cluster_min_points", self.cluster_min_points),
            ("min_cluster_size", self.min_cluster_size),
        ] {
            if v == 0 {
                return Err(Error::Config(format!("{name} must be positive")));
            }
        }
        if self.score_threshold > 1.0 {
            return Err(Error::Config(format!(
                "score_threshold must be at most 1, got {}",
                self.score_threshold
            )));
        }
        Ok(())
    }

    pub fn cluster_params(&self) -> Result<ClusterParams> {
        Ok(ClusterParams::new(self.cluster_epsilon_m, self.cluster_min_points)?)
    }

    pub fn isa_mode(&self) -> IsaMode {
        if self.isa_full_chain {
            IsaMode::FullChain
        } else {
            IsaMode::Parent
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        assert_eq!(PipelineConfig::from_toml("").unwrap(), PipelineConfig::default());
    }

    #[test]
    fn overrides_and_enums() {
        let c = PipelineConfig::from_toml(
            "stride = 4\nprovider = \"remote\"\nassociation = \"greedy\"\nprune = []\nisa_full_chain = true",
        )
        .unwrap();
        assert_eq!(c.stride, 4);
        assert_eq!(c.provider, ProviderKind::Remote);
        assert_eq!(c.association, MatchStrategy::Greedy);
        assert!(c.prune.is_empty());
        assert_eq!(c.isa_mode(), IsaMode::FullChain);
    }

    #[test]
    fn rejects_invalid() {
        for bad in [
            "stride = 0",
            "merge_radius_m = -1.0",
            "score_threshold = 1.5",
            "provider = \"cloud\"",
            "unknown_key = 1",
            "cluster_epsilon_m = nan",
        ] {
            assert!(PipelineConfig::from_toml(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn relative_paths_follow_config_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.toml");
        std::fs::write(&path, "taxonomy_path = \"tax.json\"\ndetections_dir = \"/abs/dets\"").unwrap();
        let c = PipelineConfig::load(&path).unwrap();
        assert_eq!(c.taxonomy_path.unwrap(), dir.path().join("tax.json"));
        assert_eq!(c.detections_dir.unwrap(), PathBuf::from("/abs/dets"));
    }

    #[test]
    fn provider_from_str() {
        assert_eq!("replay".parse::<ProviderKind>().unwrap(), ProviderKind::Replay);
        assert!("x".parse::<ProviderKind>().is_err());
    }
}
