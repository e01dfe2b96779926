//! Pinhole camera model, rigid map-frame poses and depth back-projection.

use alloc::format;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::{Error, Result, Vec3};

/// Projections with camera-frame depth at or below this are rejected.
pub const MIN_PROJECTION_DEPTH: f64 = 1e-6;

/// Round-off allowance at the image's lower edges, in pixels: column and
/// row 0 must survive a back-project/project round trip.
const EDGE_SLACK_PX: f64 = 1e-6;

/// Default meters per raw depth unit (millimeter recordings).
pub const DEFAULT_DEPTH_SCALE: f64 = 0.001;

/// Pinhole intrinsics with image size and depth scaling.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "IntrinsicsFields")]
pub struct CameraIntrinsics {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub width: u32,
    pub height: u32,
    pub depth_scale: f64,
}

#[derive(Deserialize)]
struct IntrinsicsFields {
    fx: f64,
    fy: f64,
    cx: f64,
    cy: f64,
    width: u32,
    height: u32,
    #[serde(default = "default_depth_scale")]
    depth_scale: f64,
}

fn default_depth_scale() -> f64 {
    DEFAULT_DEPTH_SCALE
}

impl TryFrom<IntrinsicsFields> for CameraIntrinsics {
    type Error = Error;

    fn try_from(f: IntrinsicsFields) -> Result<Self> {
        CameraIntrinsics::new(f.fx, f.fy, f.cx, f.cy, f.width, f.height, f.depth_scale)
    }
}

impl CameraIntrinsics {
    pub fn new(
        fx: f64,
        fy: f64,
        cx: f64,
        cy: f64,
        width: u32,
        height: u32,
        depth_scale: f64,
    ) -> Result<Self> {
        if !(fx > 0.0 && fy > 0.0 && fx.is_finite() && fy.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "focal lengths must be positive, got fx={fx} fy={fy}"
            )));
        }
        if !(depth_scale > 0.0 && depth_scale.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "depth_scale must be positive, got {depth_scale}"
            )));
        }
        if !(cx >= 0.0 && cx < f64::from(width) && cy >= 0.0 && cy < f64::from(height)) {
            return Err(Error::InvalidParameter(format!(
                "principal point ({cx}, {cy}) outside {width}x{height} image"
            )));
        }
        Ok(CameraIntrinsics {
            fx,
            fy,
            cx,
            cy,
            width,
            height,
            depth_scale,
        })
    }
}

/// Unit quaternion in Hamilton convention, stored as (w, x, y, z).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Quaternion {
    pub w: f64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Quaternion {
    pub const IDENTITY: Quaternion = Quaternion {
        w: 1.0,
        x: 0.0,
        y: 0.0,
        z: 0.0,
    };

    /// Builds a unit quaternion, normalizing the input.
    pub fn new(w: f64, x: f64, y: f64, z: f64) -> Result<Self> {
        let norm = libm::sqrt(w * w + x * x + y * y + z * z);
        if !norm.is_finite() || norm < 1e-12 {
            return Err(Error::InvalidParameter(format!(
                "quaternion ({w}, {x}, {y}, {z}) cannot be normalized"
            )));
        }
        Ok(Quaternion {
            w: w / norm,
            x: x / norm,
            y: y / norm,
            z: z / norm,
        })
    }

    /// Rotation of `angle` radians about a (not necessarily unit) axis.
    pub fn from_axis_angle(axis: Vec3, angle: f64) -> Result<Self> {
        let n = axis.norm();
        if n < 1e-12 {
            return Err(Error::InvalidParameter("degenerate rotation axis".into()));
        }
        let s = libm::sin(angle / 2.0) / n;
        Quaternion::new(libm::cos(angle / 2.0), axis.x * s, axis.y * s, axis.z * s)
    }

    pub fn conjugate(self) -> Quaternion {
        Quaternion {
            w: self.w,
            x: -self.x,
            y: -self.y,
            z: -self.z,
        }
    }

    pub fn norm(self) -> f64 {
        libm::sqrt(self.w * self.w + self.x * self.x + self.y * self.y + self.z * self.z)
    }

    /// Rotates `v` by this quaternion.
    pub fn rotate(self, v: Vec3) -> Vec3 {
        // v' = v + 2w(u x v) + 2 u x (u x v), u = vector part
        let u = Vec3::new(self.x, self.y, self.z);
        let t = u.cross(v) * 2.0;
        v + t * self.w + u.cross(t)
    }
}

/// Rigid transform from the camera frame into the map frame: `p' = R p + t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pose {
    pub translation: Vec3,
    pub rotation: Quaternion,
}

impl Default for Pose {
    fn default() -> Self {
        Pose::IDENTITY
    }
}

impl Pose {
    pub const IDENTITY: Pose = Pose {
        translation: Vec3::ZERO,
        rotation: Quaternion::IDENTITY,
    };

    pub fn new(translation: Vec3, rotation: Quaternion) -> Result<Self> {
        if !translation.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "non-finite translation {translation:?}"
            )));
        }
        // re-normalize in case the caller built the quaternion by hand
        let rotation = Quaternion::new(rotation.w, rotation.x, rotation.y, rotation.z)?;
        Ok(Pose {
            translation,
            rotation,
        })
    }

    /// Camera placed at `eye` looking at `target`, with image "down" (+y)
    /// as close as possible to `-up`.
    pub fn look_at(eye: Vec3, target: Vec3, up: Vec3) -> Result<Self> {
        let forward = target - eye;
        if forward.norm() < 1e-12 {
            return Err(Error::InvalidParameter("eye coincides with target".into()));
        }
        let z = forward / forward.norm();
        let right = z.cross(up);
        if right.norm() < 1e-9 {
            return Err(Error::InvalidParameter("up vector parallel to viewing direction".into()));
        }
        let x = right / right.norm();
        let y = z.cross(x);
        Pose::new(eye, quaternion_from_columns(x, y, z))
    }

    /// Camera frame to map frame.
    pub fn apply(&self, p: Vec3) -> Vec3 {
        self.rotation.rotate(p) + self.translation
    }

    /// Map frame to camera frame.
    pub fn apply_inverse(&self, p: Vec3) -> Vec3 {
        self.rotation.conjugate().rotate(p - self.translation)
    }
}

/// Quaternion of the rotation matrix whose columns are `c0, c1, c2`.
fn quaternion_from_columns(c0: Vec3, c1: Vec3, c2: Vec3) -> Quaternion {
    let (m00, m01, m02) = (c0.x, c1.x, c2.x);
    let (m10, m11, m12) = (c0.y, c1.y, c2.y);
    let (m20, m21, m22) = (c0.z, c1.z, c2.z);
    let trace = m00 + m11 + m22;
    let (w, x, y, z) = if trace > 0.0 {
        let s = libm::sqrt(trace + 1.0) * 2.0;
        (0.25 * s, (m21 - m12) / s, (m02 - m20) / s, (m10 - m01) / s)
    } else if m00 > m11 && m00 > m22 {
        let s = libm::sqrt(1.0 + m00 - m11 - m22) * 2.0;
        ((m21 - m12) / s, 0.25 * s, (m01 + m10) / s, (m02 + m20) / s)
    } else if m11 > m22 {
        let s = libm::sqrt(1.0 + m11 - m00 - m22) * 2.0;
        ((m02 - m20) / s, (m01 + m10) / s, 0.25 * s, (m12 + m21) / s)
    } else {
        let s = libm::sqrt(1.0 + m22 - m00 - m11) * 2.0;
        ((m10 - m01) / s, (m02 + m20) / s, (m12 + m21) / s, 0.25 * s)
    };
    Quaternion::new(w, x, y, z).unwrap_or(Quaternion::IDENTITY)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CloudFrame {
    Camera,
    Map,
}

impl CloudFrame {
    fn name(self) -> &'static str {
        match self {
            CloudFrame::Camera => "camera",
            CloudFrame::Map => "map",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    points: Vec<Vec3>,
    frame: CloudFrame,
}

impl PointCloud {
    pub fn new(points: Vec<Vec3>, frame: CloudFrame) -> Result<Self> {
        if let Some(i) = points.iter().position(|p| !p.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "point {i} has a non-finite coordinate"
            )));
        }
        Ok(PointCloud { points, frame })
    }

    pub fn empty(frame: CloudFrame) -> Self {
        PointCloud {
            points: Vec::new(),
            frame,
        }
    }

    pub fn points(&self) -> &[Vec3] {
        &self.points
    }

    pub fn frame(&self) -> CloudFrame {
        self.frame
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn into_points(self) -> Vec<Vec3> {
        self.points
    }

    pub fn expect_frame(&self, expected: CloudFrame) -> Result<()> {
        if self.frame == expected {
            Ok(())
        } else {
            Err(Error::FrameMisuse {
                expected: expected.name(),
            })
        }
    }
}

/// Single-channel 16-bit depth raster, row-major. Zero marks invalid depth.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DepthImage {
    width: u32,
    height: u32,
    raw: Vec<u16>,
}

impl DepthImage {
    pub fn new(width: u32, height: u32, raw: Vec<u16>) -> Result<Self> {
        let expected = width as usize * height as usize;
        if raw.len() != expected {
            return Err(Error::InputShape(format!(
                "depth buffer has {} samples, expected {width}x{height} = {expected}",
                raw.len()
            )));
        }
        Ok(DepthImage { width, height, raw })
    }

    pub fn zeros(width: u32, height: u32) -> Self {
        DepthImage {
            width,
            height,
            raw: alloc::vec![0; width as usize * height as usize],
        }
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn raw(&self) -> &[u16] {
        &self.raw
    }

    pub fn get(&self, u: u32, v: u32) -> u16 {
        self.raw[v as usize * self.width as usize + u as usize]
    }

    pub fn set(&mut self, u: u32, v: u32, d: u16) {
        self.raw[v as usize * self.width as usize + u as usize] = d;
    }
}

/// Lifts every `stride`-th pixel (both axes) with non-zero depth into the
/// camera frame.
pub fn back_project(depth: &DepthImage, k: &CameraIntrinsics, stride: u32) -> Result<PointCloud> {
    back_project_within_range(depth, k, stride, f64::INFINITY)
}

/// [`back_project`] dropping points farther than `max_range` meters from
/// the camera center.
pub fn back_project_within_range(
    depth: &DepthImage,
    k: &CameraIntrinsics,
    stride: u32,
    max_range: f64,
) -> Result<PointCloud> {
    if depth.width != k.width || depth.height != k.height {
        return Err(Error::InputShape(format!(
            "depth image is {}x{}, intrinsics expect {}x{}",
            depth.width, depth.height, k.width, k.height
        )));
    }
    if stride == 0 {
        return Err(Error::InvalidParameter("stride must be at least 1".into()));
    }
    if !(max_range > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "max_range must be positive, got {max_range}"
        )));
    }
    let max_range_sq = max_range * max_range;
    let mut points = Vec::new();
    for v in (0..depth.height).step_by(stride as usize) {
        for u in (0..depth.width).step_by(stride as usize) {
            let d = depth.get(u, v);
            if d == 0 {
                continue;
            }
            let z = f64::from(d) * k.depth_scale;
            let p = Vec3::new(
                (f64::from(u) - k.cx) * z / k.fx,
                (f64::from(v) - k.cy) * z / k.fy,
                z,
            );
            if p.norm_squared() <= max_range_sq {
                points.push(p);
            }
        }
    }
    Ok(PointCloud {
        points,
        frame: CloudFrame::Camera,
    })
}

/// Moves a camera-frame cloud into the map frame.
pub fn transform_cloud(cloud: &PointCloud, pose: &Pose) -> Result<PointCloud> {
    cloud.expect_frame(CloudFrame::Camera)?;
    Ok(PointCloud {
        points: cloud.points.iter().map(|&p| pose.apply(p)).collect(),
        frame: CloudFrame::Map,
    })
}

/// Projects a map-frame point to pixel coordinates (not normalized).
/// `None` when behind the camera or outside the image.
pub fn project_to_pixel(p_map: Vec3, pose: &Pose, k: &CameraIntrinsics) -> Option<(f64, f64)> {
    let p = pose.apply_inverse(p_map);
    if !(p.z > MIN_PROJECTION_DEPTH) {
        return None;
    }
    let snap = |x: f64| if (-EDGE_SLACK_PX..0.0).contains(&x) { 0.0 } else { x };
    let u = snap(k.fx * p.x / p.z + k.cx);
    let v = snap(k.fy * p.y / p.z + k.cy);
    let inside = u >= 0.0 && u < f64::from(k.width) && v >= 0.0 && v < f64::from(k.height);
    inside.then_some((u, v))
}

/// Projects a map-frame point into normalized image coordinates in `[0, 1)`.
pub fn project_point(p_map: Vec3, pose: &Pose, k: &CameraIntrinsics) -> Option<(f64, f64)> {
    project_to_pixel(p_map, pose, k)
        .map(|(u, v)| (u / f64::from(k.width), v / f64::from(k.height)))
}
