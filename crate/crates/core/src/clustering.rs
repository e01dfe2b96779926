//! DBSCAN over map-frame point clouds and per-cluster centroids.
//!
//! A point is *core* when at least `min_points` points (itself included) lie
//! within `epsilon` of it. Clusters are the connected components of core
//! points under the epsilon relation, plus border points: non-core points
//! within `epsilon` of some core point. A border point reachable from
//! several clusters joins the cluster of its lowest-index core neighbor.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::geometry::{CloudFrame, PointCloud};
use crate::{Error, Result, Vec3};

pub const DEFAULT_EPSILON: f64 = 0.05;
pub const DEFAULT_MIN_POINTS: usize = 10;
pub const DEFAULT_MIN_CLUSTER_SIZE: usize = 30;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClusterParams {
    epsilon: f64,
    min_points: usize,
}

impl Default for ClusterParams {
    fn default() -> Self {
        ClusterParams {
            epsilon: DEFAULT_EPSILON,
            min_points: DEFAULT_MIN_POINTS,
        }
    }
}

impl ClusterParams {
    pub fn new(epsilon: f64, min_points: usize) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "epsilon must be positive, got {epsilon}"
            )));
        }
        if min_points == 0 {
            return Err(Error::InvalidParameter("min_points must be at least 1".into()));
        }
        Ok(ClusterParams {
            epsilon,
            min_points,
        })
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn min_points(&self) -> usize {
        self.min_points
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cluster {
    /// Strictly increasing indices into the source cloud.
    pub indices: Vec<usize>,
    pub centroid: Vec3,
}

impl Cluster {
    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }
}

/// Component-wise arithmetic mean.
pub fn centroid(points: &[Vec3]) -> Result<Vec3> {
    if points.is_empty() {
        return Err(Error::EmptyInput("centroid of an empty point set"));
    }
    let sum = points.iter().fold(Vec3::ZERO, |acc, &p| acc + p);
    Ok(sum / points.len() as f64)
}

/// Clusters a map-frame cloud. Clusters come back ordered by their smallest
/// member index.
pub fn cluster(cloud: &PointCloud, params: &ClusterParams) -> Result<Vec<Cluster>> {
    cloud.expect_frame(CloudFrame::Map)?;
    Ok(cluster_points(cloud.points(), params))
}

/// Drops clusters with fewer than `min_size` members.
pub fn retain_min_size(clusters: &mut Vec<Cluster>, min_size: usize) {
    clusters.retain(|c| c.len() >= min_size);
}

/// DBSCAN on a bare point slice.
pub fn cluster_points(points: &[Vec3], params: &ClusterParams) -> Vec<Cluster> {
    let n = points.len();
    if n == 0 {
        return Vec::new();
    }
    let grid = Grid::build(points, params.epsilon);
    let neighbors: Vec<Vec<usize>> = (0..n).map(|i| grid.neighbors(points, i)).collect();
    let is_core: Vec<bool> = neighbors
        .iter()
        .map(|nb| nb.len() >= params.min_points)
        .collect();

    // Label core components by flood fill in index order.
    const UNLABELED: usize = usize::MAX;
    let mut label = alloc::vec![UNLABELED; n];
    let mut next_label = 0;
    let mut stack = Vec::new();
    for seed in 0..n {
        if !is_core[seed] || label[seed] != UNLABELED {
            continue;
        }
        label[seed] = next_label;
        stack.push(seed);
        while let Some(p) = stack.pop() {
            for &q in &neighbors[p] {
                if is_core[q] && label[q] == UNLABELED {
                    label[q] = next_label;
                    stack.push(q);
                }
            }
        }
        next_label += 1;
    }

    // Border points follow their lowest-index core neighbor.
    for i in 0..n {
        if is_core[i] {
            continue;
        }
        if let Some(&c) = neighbors[i].iter().find(|&&q| is_core[q]) {
            label[i] = label[c];
        }
    }

    let mut members: Vec<Vec<usize>> = alloc::vec![Vec::new(); next_label];
    for (i, &l) in label.iter().enumerate() {
        if l != UNLABELED {
            members[l].push(i);
        }
    }
    let mut clusters: Vec<Cluster> = members
        .into_iter()
        .map(|indices| {
            let sum = indices.iter().fold(Vec3::ZERO, |acc, &i| acc + points[i]);
            let centroid = sum / indices.len() as f64;
            Cluster { indices, centroid }
        })
        .collect();
    clusters.sort_by_key(|c| c.indices[0]);
    clusters
}

/// Uniform voxel hash with cell edge `epsilon`; neighbors of a point lie in
/// the 27 surrounding cells.
struct Grid {
    epsilon: f64,
    cells: BTreeMap<(i64, i64, i64), Vec<usize>>,
}

impl Grid {
    fn build(points: &[Vec3], epsilon: f64) -> Self {
        let mut cells: BTreeMap<(i64, i64, i64), Vec<usize>> = BTreeMap::new();
        for (i, &p) in points.iter().enumerate() {
            cells.entry(cell_of(p, epsilon)).or_default().push(i);
        }
        Grid { epsilon, cells }
    }

    /// Sorted indices within `epsilon` of point `i`, including `i`.
    fn neighbors(&self, points: &[Vec3], i: usize) -> Vec<usize> {
        let p = points[i];
        let eps_sq = self.epsilon * self.epsilon;
        let (cx, cy, cz) = cell_of(p, self.epsilon);
        let mut out = Vec::new();
        for dx in -1..=1 {
            for dy in -1..=1 {
                for dz in -1..=1 {
                    if let Some(bucket) = self.cells.get(&(cx + dx, cy + dy, cz + dz)) {
                        out.extend(
                            bucket
                                .iter()
                                .copied()
                                .filter(|&j| points[j].distance_squared(p) <= eps_sq),
                        );
                    }
                }
            }
        }
        out.sort_unstable();
        out
    }
}

fn cell_of(p: Vec3, epsilon: f64) -> (i64, i64, i64) {
    (
        libm::floor(p.x / epsilon) as i64,
        libm::floor(p.y / epsilon) as i64,
        libm::floor(p.z / epsilon) as i64,
    )
}
