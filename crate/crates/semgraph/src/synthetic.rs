//! Synthetic RGB-D datasets with known answers: axis-aligned boxes on the
//! ground plane, an orbiting camera, ray-cast depth and replay detections
//! cut from the visible extent of each box.

use std::f64::consts::TAU;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use semgraph_core::detection::{BoundingBox, Detection, DetectionAttribute, FrameDetections};
use semgraph_core::geometry::{CameraIntrinsics, DepthImage, Pose};
use semgraph_core::taxonomy::{normalize_label, AttributeKind};
use semgraph_core::Vec3;

use crate::dataset::{write_intrinsics, DEPTH_DIR, DETECTIONS_DIR, INTRINSICS_FILE, TRAJECTORY_FILE};
use crate::depth_png::write_depth_png;
use crate::provider::to_replay_json;
use crate::trajectory::{format_trajectory, TrajectoryEntry};
use crate::{Error, Result};

pub const GROUND_TRUTH_FILE: &str = "ground_truth.json";

/// Display names, all present in the bundled hierarchy.
pub const CATALOG: [&str; 12] = [
    "Chair",
    "Coffee table",
    "Refrigerator",
    "Television",
    "Suitcase",
    "Bookcase",
    "Microwave oven",
    "Washing machine",
    "Backpack",
    "Waste container",
    "Nightstand",
    "Filing cabinet",
];
pub const COLORS: [&str; 8] = ["red", "blue", "green", "yellow", "white", "black", "brown", "gray"];
pub const MATERIALS: [&str; 6] = ["wood", "metal", "plastic", "glass", "leather", "fabric"];

/// Fewest visible pixels for an object to be reported as a detection.
pub const MIN_VISIBLE_PIXELS: usize = 150;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneObject {
    /// Detector-style display name, e.g. `Coffee table`.
    pub label: String,
    /// Taxonomy id, e.g. `coffee_table`.
    pub concept: String,
    /// Box center in the map frame.
    pub center: Vec3,
    /// Full extents along x, y, z.
    pub size: Vec3,
    pub color: String,
    pub material: String,
}

impl SceneObject {
    pub fn new(label: &str, center: Vec3, size: Vec3, color: &str, material: &str) -> Self {
        SceneObject {
            label: label.into(),
            concept: normalize_label(label),
            center,
            size,
            color: color.into(),
            material: material.into(),
        }
    }

    fn min(&self) -> Vec3 {
        self.center - self.size / 2.0
    }

    fn max(&self) -> Vec3 {
        self.center + self.size / 2.0
    }

    /// Entry distance along `dir` from `origin`, if the ray hits.
    fn ray_hit(&self, origin: Vec3, dir: Vec3) -> Option<f64> {
        let (lo, hi) = (self.min(), self.max());
        let mut t_near = f64::NEG_INFINITY;
        let mut t_far = f64::INFINITY;
        for axis in 0..3 {
            let (o, d) = (origin[axis], dir[axis]);
            if d.abs() < 1e-12 {
                if o < lo[axis] || o > hi[axis] {
                    return None;
                }
                continue;
            }
            let (mut t0, mut t1) = ((lo[axis] - o) / d, (hi[axis] - o) / d);
            if t0 > t1 {
                std::mem::swap(&mut t0, &mut t1);
            }
            t_near = t_near.max(t0);
            t_far = t_far.min(t1);
        }
        (t_near <= t_far && t_near > 0.0).then_some(t_near)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scene {
    pub intrinsics: CameraIntrinsics,
    pub objects: Vec<SceneObject>,
    /// Camera poses, one per frame, in order.
    pub poses: Vec<Pose>,
}

/// `ground_truth.json` contents.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub seed: Option<u64>,
    pub objects: Vec<SceneObject>,
}

pub fn default_intrinsics() -> CameraIntrinsics {
    CameraIntrinsics::new(525.0, 525.0, 319.5, 239.5, 640, 480, 0.001).expect("valid intrinsics")
}

/// Frame ids are zero-padded indices: `000000`, `000001`, ...
pub fn frame_id(index: usize) -> String {
    format!("{index:06}")
}

/// Boxes spread around a ring of radius 1 m, seen by a camera orbiting at
/// 4 m radius and 2.5 m height. The raised camera keeps boxes on opposite
/// sides of the ring apart in the image.
pub fn random_scene(objects: usize, frames: usize, seed: u64) -> Result<Scene> {
    if objects > CATALOG.len() {
        return Err(Error::Config(format!(
            "at most {} objects supported, asked for {objects}",
            CATALOG.len()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut labels = CATALOG.to_vec();
    labels.shuffle(&mut rng);

    let phase = rng.random_range(0.0..TAU);
    let mut scene_objects = Vec::with_capacity(objects);
    for (i, label) in labels.into_iter().take(objects).enumerate() {
        let angle = phase + TAU * i as f64 / objects.max(1) as f64 + rng.random_range(-0.15..0.15);
        let radius = if objects == 1 { 0.0 } else { rng.random_range(0.9..1.1) };
        let size = Vec3::new(
            rng.random_range(0.15..0.25),
            rng.random_range(0.15..0.25),
            rng.random_range(0.15..0.25),
        );
        let center = Vec3::new(radius * angle.cos(), radius * angle.sin(), size.z / 2.0);
        let color = COLORS[rng.random_range(0..COLORS.len())];
        let material = MATERIALS[rng.random_range(0..MATERIALS.len())];
        scene_objects.push(SceneObject::new(label, center, size, color, material));
    }

    let start = rng.random_range(0.0..TAU);
    let poses = (0..frames)
        .map(|i| {
            let theta = start + TAU * i as f64 / frames as f64;
            let eye = Vec3::new(4.0 * theta.cos(), 4.0 * theta.sin(), 2.5);
            Pose::look_at(eye, Vec3::new(0.0, 0.0, 0.1), Vec3::new(0.0, 0.0, 1.0))
        })
        .collect::<std::result::Result<Vec<_>, _>>()?;
    Ok(Scene {
        intrinsics: default_intrinsics(),
        objects: scene_objects,
        poses,
    })
}

/// Pixel rectangle `(u0, v0, u1, v1)` covering the projected box, or the
/// whole image when a corner is behind the camera.
fn screen_rect(obj: &SceneObject, pose: &Pose, k: &CameraIntrinsics) -> (u32, u32, u32, u32) {
    let full = (0, 0, k.width - 1, k.height - 1);
    let (lo, hi) = (obj.min(), obj.max());
    let (mut u0, mut v0, mut u1, mut v1) = (f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY);
    for corner in 0..8 {
        let p = Vec3::new(
            if corner & 1 == 0 { lo.x } else { hi.x },
            if corner & 2 == 0 { lo.y } else { hi.y },
            if corner & 4 == 0 { lo.z } else { hi.z },
        );
        let c = pose.apply_inverse(p);
        if c.z <= 1e-6 {
            return full;
        }
        let (u, v) = (k.fx * c.x / c.z + k.cx, k.fy * c.y / c.z + k.cy);
        u0 = u0.min(u);
        v0 = v0.min(v);
        u1 = u1.max(u);
        v1 = v1.max(v);
    }
    let clamp = |x: f64, max: u32| x.clamp(0.0, f64::from(max)) as u32;
    if u1 < 0.0 || v1 < 0.0 || u0 > f64::from(k.width - 1) || v0 > f64::from(k.height - 1) {
        return (1, 1, 0, 0);
    }
    (
        clamp(u0.floor() - 1.0, k.width - 1),
        clamp(v0.floor() - 1.0, k.height - 1),
        clamp(u1.ceil() + 1.0, k.width - 1),
        clamp(v1.ceil() + 1.0, k.height - 1),
    )
}

/// Ray-cast depth plus, per pixel, the index of the object hit.
pub fn render(scene: &Scene, pose: &Pose) -> (DepthImage, Vec<Option<usize>>) {
    let k = &scene.intrinsics;
    let w = k.width as usize;
    let mut nearest = vec![f64::INFINITY; w * k.height as usize];
    let mut ids = vec![None; nearest.len()];
    let origin = pose.translation;
    for (i, obj) in scene.objects.iter().enumerate() {
        let (u0, v0, u1, v1) = screen_rect(obj, pose, k);
        for v in v0..=v1 {
            for u in u0..=u1 {
                // Unit z component, so the hit distance is the camera-frame depth.
                let ray = Vec3::new((f64::from(u) - k.cx) / k.fx, (f64::from(v) - k.cy) / k.fy, 1.0);
                if let Some(t) = obj.ray_hit(origin, pose.rotation.rotate(ray)) {
                    let p = v as usize * w + u as usize;
                    if t < nearest[p] {
                        nearest[p] = t;
                        ids[p] = Some(i);
                    }
                }
            }
        }
    }
    let mut depth = DepthImage::zeros(k.width, k.height);
    for (p, &z) in nearest.iter().enumerate() {
        let raw = (z / k.depth_scale).round();
        if raw >= 1.0 && raw <= f64::from(u16::MAX) {
            depth.set((p % w) as u32, (p / w) as u32, raw as u16);
        } else {
            ids[p] = None;
        }
    }
    (depth, ids)
}

/// Detections for the objects with enough visible pixels; the box is the
/// visible extent. One low-confidence distractor is appended per frame.
pub fn detections_for(
    scene: &Scene,
    ids: &[Option<usize>],
    frame: &str,
    rng: &mut ChaCha8Rng,
) -> Result<FrameDetections> {
    let k = &scene.intrinsics;
    let (w, h) = (k.width as usize, k.height as usize);
    let n = scene.objects.len();
    let mut extent = vec![(usize::MAX, usize::MAX, 0usize, 0usize, 0usize); n];
    for (p, id) in ids.iter().enumerate() {
        if let Some(i) = *id {
            let (u, v) = (p % w, p / w);
            let e = &mut extent[i];
            e.0 = e.0.min(u);
            e.1 = e.1.min(v);
            e.2 = e.2.max(u);
            e.3 = e.3.max(v);
            e.4 += 1;
        }
    }
    let mut detections = Vec::new();
    for (obj, &(u0, v0, u1, v1, count)) in scene.objects.iter().zip(&extent) {
        if count < MIN_VISIBLE_PIXELS {
            continue;
        }
        let bbox = BoundingBox::new(
            ((u0 as f64 - 0.5) / w as f64).max(0.0),
            ((v0 as f64 - 0.5) / h as f64).max(0.0),
            ((u1 as f64 + 0.5) / w as f64).min(1.0),
            ((v1 as f64 + 0.5) / h as f64).min(1.0),
        )?;
        detections.push(Detection {
            label: obj.label.clone(),
            score: rng.random_range(0.75..0.98),
            bbox,
            attributes: vec![
                DetectionAttribute {
                    kind: AttributeKind::Color,
                    value: obj.color.clone(),
                    score: rng.random_range(0.6..0.95),
                },
                DetectionAttribute {
                    kind: AttributeKind::Material,
                    value: obj.material.clone(),
                    score: rng.random_range(0.6..0.95),
                },
            ],
        });
    }
    let x = rng.random_range(0.0..0.8);
    let y = rng.random_range(0.0..0.8);
    detections.push(Detection {
        label: "Mug".into(),
        score: rng.random_range(0.1..0.4),
        bbox: BoundingBox::new(x, y, x + 0.2, y + 0.2)?,
        attributes: Vec::new(),
    });
    Ok(FrameDetections::new(frame, detections)?)
}

fn write(path: &Path, bytes: impl AsRef<[u8]>) -> Result<()> {
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

/// Writes a complete dataset for `scene` into `out`.
pub fn write_dataset(scene: &Scene, out: &Path, seed: Option<u64>) -> Result<()> {
    for dir in [out.to_path_buf(), out.join(DEPTH_DIR), out.join(DETECTIONS_DIR)] {
        std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    }
    write_intrinsics(&out.join(INTRINSICS_FILE), &scene.intrinsics)?;
    let entries: Vec<TrajectoryEntry> = scene
        .poses
        .iter()
        .enumerate()
        .map(|(i, pose)| TrajectoryEntry {
            frame_id: frame_id(i),
            pose: *pose,
        })
        .collect();
    write(&out.join(TRAJECTORY_FILE), format_trajectory(&entries))?;

    let mut rng = ChaCha8Rng::seed_from_u64(seed.unwrap_or(0) ^ 0x005e_edde_7ec7);
    for entry in &entries {
        let (depth, ids) = render(scene, &entry.pose);
        write_depth_png(&out.join(DEPTH_DIR).join(format!("{}.png", entry.frame_id)), &depth)?;
        let dets = detections_for(scene, &ids, &entry.frame_id, &mut rng)?;
        write(
            &out.join(DETECTIONS_DIR).join(format!("{}.json", entry.frame_id)),
            to_replay_json(&dets),
        )?;
    }
    let truth = GroundTruth {
        seed,
        objects: scene.objects.clone(),
    };
    let mut text = serde_json::to_string_pretty(&truth).expect("ground truth serializes");
    text.push('\n');
    write(&out.join(GROUND_TRUTH_FILE), text)
}

/// [`random_scene`] followed by [`write_dataset`].
pub fn generate(out: &Path, objects: usize, frames: usize, seed: u64) -> Result<Scene> {
    let scene = random_scene(objects, frames, seed)?;
    write_dataset(&scene, out, Some(seed))?;
    Ok(scene)
}

pub fn read_ground_truth(path: &Path) -> Result<GroundTruth> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::json(path, e))
}
