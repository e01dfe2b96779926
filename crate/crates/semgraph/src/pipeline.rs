//! Per-frame fusion of the geometric branch (depth, clusters, centroids) with
//! provider detections into a [`WorldGraph`].

use std::path::Path;

use serde::{Deserialize, Serialize};

use semgraph_core::association::{associate_with, frame_report};
use semgraph_core::clustering::{cluster, retain_min_size, ClusterParams};
use semgraph_core::geometry::{back_project_within_range, transform_cloud, CameraIntrinsics};
use semgraph_core::taxonomy::{AttributeDefaults, Concept, Taxonomy};
use semgraph_core::worldgraph::{InstanceAttribute, UpsertOutcome, WorldGraph};

use crate::config::{PipelineConfig, ProviderKind};
use crate::dataset::{Dataset, Frame, DETECTIONS_DIR};
use crate::depth_png::read_depth_png;
use crate::hierarchy::{bundled_taxonomy, load_attribute_defaults, load_taxonomy};
use crate::provider::{ImageRef, KeywordTable, RemoteConfig, RemoteProvider, ReplayProvider, VisionProvider};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct FrameStats {
    pub frame_id: String,
    pub points: usize,
    pub clusters: usize,
    /// Detections at or above the score threshold.
    pub detections: usize,
    pub matches: usize,
    pub dropped_detections: usize,
    pub dropped_clusters: usize,
    pub new_instances: usize,
    pub merged_instances: usize,
    /// Labels attached under the root because the taxonomy lacked them.
    pub provisional_labels: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkippedFrame {
    pub frame_id: String,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct RunReport {
    pub frames: Vec<FrameStats>,
    pub skipped: Vec<SkippedFrame>,
    pub instances: usize,
    pub triples: usize,
    pub near_links: usize,
}

/// Everything a run needs besides the world and the frames.
pub struct Pipeline {
    cfg: PipelineConfig,
    params: ClusterParams,
    stride: u32,
    taxonomy: Taxonomy,
    defaults: AttributeDefaults,
    provider: Box<dyn VisionProvider>,
}

impl std::fmt::Debug for Pipeline {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Pipeline")
            .field("cfg", &self.cfg)
            .field("taxonomy_nodes", &self.taxonomy.len())
            .finish_non_exhaustive()
    }
}

/// Loads the configured taxonomy (bundled when unset) and prunes it.
/// Prune roots absent from the hierarchy are skipped with a warning.
pub fn taxonomy_for(cfg: &PipelineConfig) -> Result<Taxonomy> {
    let tax = match &cfg.taxonomy_path {
        Some(p) => load_taxonomy(p)?,
        None => bundled_taxonomy(),
    };
    let roots: Vec<&str> = cfg
        .prune
        .iter()
        .map(String::as_str)
        .filter(|r| {
            let known = tax.contains(r);
            if !known {
                log::warn!("prune root `{r}` not in taxonomy; skipped");
            }
            known
        })
        .collect();
    if roots.is_empty() {
        Ok(tax)
    } else {
        Ok(tax.prune(&roots)?)
    }
}

/// Builds the configured provider for `dataset_root`.
pub fn provider_for(cfg: &PipelineConfig, dataset_root: &Path) -> Result<Box<dyn VisionProvider>> {
    match cfg.provider {
        ProviderKind::Replay => {
            let dir = cfg
                .detections_dir
                .clone()
                .unwrap_or_else(|| dataset_root.join(DETECTIONS_DIR));
            Ok(Box::new(ReplayProvider::new(dir)))
        }
        ProviderKind::Remote => {
            let endpoint = cfg
                .endpoint
                .as_deref()
                .ok_or_else(|| Error::Config("remote provider needs `endpoint`".into()))?;
            Ok(Box::new(RemoteProvider::new(remote_config(cfg, endpoint)?)?))
        }
    }
}

/// Remote client settings from the config; the credential comes from the
/// environment.
pub fn remote_config(cfg: &PipelineConfig, endpoint: &str) -> Result<RemoteConfig> {
    let mut rc = RemoteConfig::from_env(endpoint)?;
    rc.retry_budget = cfg.retry_budget;
    rc.rate_limit_per_s = cfg.rate_limit_per_s;
    if let Some(p) = &cfg.keyword_table_path {
        rc.keywords = KeywordTable::load(p)?;
    }
    Ok(rc)
}

impl Pipeline {
    pub fn new(
        cfg: PipelineConfig,
        taxonomy: Taxonomy,
        defaults: AttributeDefaults,
        provider: Box<dyn VisionProvider>,
    ) -> Result<Self> {
        cfg.validate()?;
        let params = cfg.cluster_params()?;
        let stride = u32::try_from(cfg.stride)
            .map_err(|_| Error::Config(format!("stride {} too large", cfg.stride)))?;
        Ok(Pipeline {
            cfg,
            params,
            stride,
            taxonomy,
            defaults,
            provider,
        })
    }

    /// Taxonomy, defaults and provider as named by `cfg`.
    pub fn from_config(cfg: PipelineConfig, dataset_root: &Path) -> Result<Self> {
        let taxonomy = taxonomy_for(&cfg)?;
        let defaults = match &cfg.attribute_defaults_path {
            Some(p) => load_attribute_defaults(p, &taxonomy)?,
            None => AttributeDefaults::default(),
        };
        let provider = provider_for(&cfg, dataset_root)?;
        Pipeline::new(cfg, taxonomy, defaults, provider)
    }

    pub fn config(&self) -> &PipelineConfig {
        &self.cfg
    }

    /// Includes any provisional nodes added so far.
    pub fn taxonomy(&self) -> &Taxonomy {
        &self.taxonomy
    }

    /// Runs one frame. Reading, clustering, detection and association all
    /// finish before `world` is touched.
    pub fn process_frame(
        &mut self,
        world: &mut WorldGraph,
        frame: &Frame,
        k: &CameraIntrinsics,
    ) -> Result<FrameStats> {
        self.process_frame_inner(world, frame, k)
            .map_err(|e| e.in_frame(&frame.frame_id))
    }

    fn process_frame_inner(
        &mut self,
        world: &mut WorldGraph,
        frame: &Frame,
        k: &CameraIntrinsics,
    ) -> Result<FrameStats> {
        let depth = read_depth_png(&frame.depth_path)?;
        let cam = back_project_within_range(&depth, k, self.stride, self.cfg.max_range_m)?;
        let map = transform_cloud(&cam, &frame.pose)?;
        let mut clusters = cluster(&map, &self.params)?;
        retain_min_size(&mut clusters, self.cfg.min_cluster_size);

        let image = match &frame.image_path {
            Some(p) => ImageRef::Path(p),
            None => ImageRef::Absent,
        };
        let mut dets = self.provider.detect(&frame.frame_id, image)?;
        if dets.frame_id != frame.frame_id {
            return Err(Error::ResponseParse(format!(
                "provider answered for frame `{}`",
                dets.frame_id
            )));
        }
        dets.retain_confident(self.cfg.score_threshold);
        let matches = associate_with(&dets, &clusters, &frame.pose, k, self.cfg.association);
        let counters = frame_report(&matches, dets.detections.len(), clusters.len());

        let mut stats = FrameStats {
            frame_id: frame.frame_id.clone(),
            points: map.len(),
            clusters: clusters.len(),
            detections: dets.detections.len(),
            matches: counters.matched,
            dropped_detections: counters.dropped_detections,
            dropped_clusters: counters.dropped_clusters,
            ..FrameStats::default()
        };

        for m in &matches {
            let det = &dets.detections[m.detection];
            let (node, provisional) = match self.taxonomy.resolve_label(&det.label) {
                Some(id) => (id.to_string(), false),
                None => {
                    let id = self.taxonomy.attach_provisional(&det.label)?;
                    log::warn!("frame {}: unknown label `{}` kept as provisional", frame.frame_id, det.label);
                    if !stats.provisional_labels.contains(&id) {
                        stats.provisional_labels.push(id.clone());
                    }
                    (id, true)
                }
            };
            let provisional = provisional || self.taxonomy.is_provisional(&node)?;
            let concept = Concept::object(&node)?;

            let mut attrs: Vec<InstanceAttribute> = det
                .attributes
                .iter()
                .filter(|a| !a.value.is_empty())
                .map(|a| InstanceAttribute {
                    kind: a.kind,
                    value: a.value.clone(),
                    score: a.score,
                })
                .collect();
            for (kind, value) in self.taxonomy.inherit_attributes(&self.defaults, &node)? {
                if !attrs.iter().any(|a| a.kind == kind) {
                    attrs.push(InstanceAttribute { kind, value, score: 0.0 });
                }
            }

            let centroid = clusters[m.cluster].centroid;
            let outcome = world.upsert_instance(
                &concept,
                centroid,
                &attrs,
                &frame.frame_id,
                self.cfg.merge_radius_m,
                provisional,
            )?;
            match outcome {
                UpsertOutcome::Created(_) => stats.new_instances += 1,
                UpsertOutcome::Merged(_) => stats.merged_instances += 1,
            }
            world.emit_triples(outcome.id(), &self.taxonomy, self.cfg.isa_mode())?;
        }
        world.log_frame(&frame.frame_id);
        Ok(stats)
    }

    /// Processes `frames` in order, then links nearby instances. With
    /// `skip_bad_frames` a failing frame is reported and skipped instead of
    /// ending the run.
    pub fn run(&mut self, dataset: &Dataset, skip_bad_frames: bool) -> Result<(WorldGraph, RunReport)> {
        let mut world = WorldGraph::new();
        let mut report = RunReport::default();
        for frame in &dataset.frames {
            match self.process_frame(&mut world, frame, &dataset.intrinsics) {
                Ok(stats) => report.frames.push(stats),
                Err(e) if skip_bad_frames => {
                    log::error!("{e}");
                    report.skipped.push(SkippedFrame {
                        frame_id: frame.frame_id.clone(),
                        error: e.to_string(),
                    });
                }
                Err(e) => return Err(e),
            }
        }
        report.near_links = world.build_topology(self.cfg.link_distance_m)?.len();
        report.instances = world.instance_count();
        report.triples = world.triple_count();
        Ok((world, report))
    }
}

/// Loads `dataset_dir` and runs it under `cfg`.
pub fn run(dataset_dir: &Path, cfg: PipelineConfig, skip_bad_frames: bool) -> Result<(WorldGraph, RunReport)> {
    let dataset = crate::dataset::load_dataset(dataset_dir)?;
    let mut pipeline = Pipeline::from_config(cfg, &dataset.root)?;
    pipeline.run(&dataset, skip_bad_frames)
}

pub fn report_json(report: &RunReport) -> String {
    let mut s = serde_json::to_string_pretty(report).expect("report serializes");
    s.push('\n');
    s
}
