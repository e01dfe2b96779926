//! Matching map-frame cluster centroids to 2D detection boxes.
//!
//! A (detection, cluster) pair is a candidate when the centroid projects
//! into the image and falls inside the box. The default
//! [`MatchStrategy::Optimal`] picks the one-to-one matching with the most
//! pairs and, among those, the least total distance between projected
//! centroids and box centers. [`MatchStrategy::Greedy`] accepts candidates
//! by ascending center distance, ties going to the lower detection index and
//! then the lower cluster index.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::clustering::Cluster;
use crate::detection::{BoundingBox, FrameDetections};
use crate::geometry::{project_point, CameraIntrinsics, Pose};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Match {
    pub detection: usize,
    pub cluster: usize,
    /// Projected centroid, normalized image coordinates.
    pub pixel: (f64, f64),
    /// Normalized Euclidean distance from `pixel` to the box center.
    pub center_distance: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MatchStrategy {
    #[default]
    Optimal,
    Greedy,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct FrameReport {
    pub matched: usize,
    pub dropped_detections: usize,
    pub dropped_clusters: usize,
}

/// Projects every centroid and matches it against the frame's boxes.
/// Matches are returned ordered by detection index.
pub fn associate(
    dets: &FrameDetections,
    clusters: &[Cluster],
    pose: &Pose,
    k: &CameraIntrinsics,
) -> Vec<Match> {
    associate_with(dets, clusters, pose, k, MatchStrategy::default())
}

pub fn associate_with(
    dets: &FrameDetections,
    clusters: &[Cluster],
    pose: &Pose,
    k: &CameraIntrinsics,
    strategy: MatchStrategy,
) -> Vec<Match> {
    let pixels: Vec<Option<(f64, f64)>> = clusters
        .iter()
        .map(|c| project_point(c.centroid, pose, k))
        .collect();
    let boxes: Vec<BoundingBox> = dets.detections.iter().map(|d| d.bbox).collect();
    associate_projected(&boxes, &pixels, strategy)
}

/// Candidate pairs for already-projected centroids, unsorted.
pub fn candidates(boxes: &[BoundingBox], pixels: &[Option<(f64, f64)>]) -> Vec<Match> {
    let mut out = Vec::new();
    for (d, b) in boxes.iter().enumerate() {
        for (c, px) in pixels.iter().enumerate() {
            let Some(px) = *px else { continue };
            if b.contains(px) {
                let (bx, by) = b.center();
                let (dx, dy) = (px.0 - bx, px.1 - by);
                out.push(Match {
                    detection: d,
                    cluster: c,
                    pixel: px,
                    center_distance: libm::sqrt(dx * dx + dy * dy),
                });
            }
        }
    }
    out
}

/// One-to-one matching over already-projected centroids, ordered by
/// detection index.
pub fn associate_projected(
    boxes: &[BoundingBox],
    pixels: &[Option<(f64, f64)>],
    strategy: MatchStrategy,
) -> Vec<Match> {
    let cands = candidates(boxes, pixels);
    let mut matches = match strategy {
        MatchStrategy::Optimal => optimal(cands),
        MatchStrategy::Greedy => greedy(cands, boxes.len(), pixels.len()),
    };
    matches.sort_by_key(|m| m.detection);
    matches
}

/// Max-cardinality, min-total-distance assignment. Only rows and columns
/// with at least one candidate enter the cost matrix; non-candidate cells
/// cost more than any sum of real distances, so they are only used where no
/// larger matching exists and are discarded afterwards.
fn optimal(cands: Vec<Match>) -> Vec<Match> {
    if cands.is_empty() {
        return Vec::new();
    }
    let mut rows: Vec<usize> = cands.iter().map(|m| m.detection).collect();
    let mut cols: Vec<usize> = cands.iter().map(|m| m.cluster).collect();
    rows.sort_unstable();
    rows.dedup();
    cols.sort_unstable();
    cols.dedup();
    let transpose = rows.len() > cols.len();
    let (n, m) = if transpose {
        (cols.len(), rows.len())
    } else {
        (rows.len(), cols.len())
    };
    // normalized distances are at most sqrt(2) < 1.5
    let forbidden = 1.5 * n as f64 + 1.0;
    let mut cost = alloc::vec![alloc::vec![forbidden; m]; n];
    let mut cell: Vec<Vec<Option<usize>>> = alloc::vec![alloc::vec![None; m]; n];
    for (ci, c) in cands.iter().enumerate() {
        let r = rows.binary_search(&c.detection).expect("row present");
        let k = cols.binary_search(&c.cluster).expect("column present");
        let (i, j) = if transpose { (k, r) } else { (r, k) };
        cost[i][j] = c.center_distance;
        cell[i][j] = Some(ci);
    }
    hungarian(&cost)
        .into_iter()
        .enumerate()
        .filter_map(|(i, j)| cell[i][j].map(|ci| cands[ci]))
        .collect()
}

/// Minimum-cost assignment of every row of an `n x m` matrix (`n <= m`) to
/// a distinct column, by shortest augmenting paths with potentials.
/// Returns the column chosen for each row.
fn hungarian(cost: &[Vec<f64>]) -> Vec<usize> {
    let n = cost.len();
    let m = cost[0].len();
    debug_assert!(n <= m);
    // 1-based; column 0 is the virtual source
    let mut u = alloc::vec![0.0; n + 1];
    let mut v = alloc::vec![0.0; m + 1];
    let mut p = alloc::vec![0usize; m + 1];
    let mut way = alloc::vec![0usize; m + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = alloc::vec![f64::INFINITY; m + 1];
        let mut used = alloc::vec![false; m + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=m {
                if used[j] {
                    continue;
                }
                let cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=m {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut assignment = alloc::vec![0; n];
    for j in 1..=m {
        if p[j] != 0 {
            assignment[p[j] - 1] = j - 1;
        }
    }
    assignment
}

fn greedy(mut cands: Vec<Match>, detections: usize, clusters: usize) -> Vec<Match> {
    cands.sort_by(|a, b| {
        a.center_distance
            .total_cmp(&b.center_distance)
            .then(a.detection.cmp(&b.detection))
            .then(a.cluster.cmp(&b.cluster))
    });
    let mut det_used = alloc::vec![false; detections];
    let mut cluster_used = alloc::vec![false; clusters];
    let mut matches = Vec::new();
    for m in cands {
        if det_used[m.detection] || cluster_used[m.cluster] {
            continue;
        }
        det_used[m.detection] = true;
        cluster_used[m.cluster] = true;
        matches.push(m);
    }
    matches
}

pub fn frame_report(matches: &[Match], detections: usize, clusters: usize) -> FrameReport {
    FrameReport {
        matched: matches.len(),
        dropped_detections: detections - matches.len(),
        dropped_clusters: clusters - matches.len(),
    }
}
