//! Independent brute-force references shared by property and acceptance
//! tests. Nothing here calls into the implementation under test except for
//! plain data types.
#![allow(dead_code)]

use semgraph_core::detection::BoundingBox;
use semgraph_core::geometry::Quaternion;
use semgraph_core::Vec3;

/// Hamilton product `a * b` on (w, x, y, z) tuples.
fn hamilton(a: [f64; 4], b: [f64; 4]) -> [f64; 4] {
    [
        a[0] * b[0] - a[1] * b[1] - a[2] * b[2] - a[3] * b[3],
        a[0] * b[1] + a[1] * b[0] + a[2] * b[3] - a[3] * b[2],
        a[0] * b[2] - a[1] * b[3] + a[2] * b[0] + a[3] * b[1],
        a[0] * b[3] + a[1] * b[2] - a[2] * b[1] + a[3] * b[0],
    ]
}

/// Rotation through the sandwich product `q p q*`.
pub fn rotate_by_sandwich(q: Quaternion, p: Vec3) -> Vec3 {
    let qa = [q.w, q.x, q.y, q.z];
    let qc = [q.w, -q.x, -q.y, -q.z];
    let r = hamilton(hamilton(qa, [0.0, p.x, p.y, p.z]), qc);
    Vec3::new(r[1], r[2], r[3])
}

/// O(n^2) DBSCAN: full adjacency matrix, core labels propagated to a fixed
/// point by repeated min-label relaxation, borders to the lowest-index core
/// neighbor. Returns clusters as sorted index lists ordered by first index.
pub fn brute_force_dbscan(points: &[Vec3], epsilon: f64, min_points: usize) -> Vec<Vec<usize>> {
    let n = points.len();
    let eps_sq = epsilon * epsilon;
    let adj: Vec<Vec<bool>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    let d = points[i] - points[j];
                    d.x * d.x + d.y * d.y + d.z * d.z <= eps_sq
                })
                .collect()
        })
        .collect();
    let core: Vec<bool> = (0..n)
        .map(|i| adj[i].iter().filter(|&&b| b).count() >= min_points)
        .collect();
    let mut label: Vec<Option<usize>> = (0..n).map(|i| core[i].then_some(i)).collect();
    loop {
        let mut changed = false;
        for i in 0..n {
            for j in 0..n {
                if core[i] && core[j] && adj[i][j] && label[j] < label[i] {
                    label[i] = label[j];
                    changed = true;
                }
            }
        }
        if !changed {
            break;
        }
    }
    for i in 0..n {
        if !core[i] {
            label[i] = (0..n).find(|&j| core[j] && adj[i][j]).and_then(|j| label[j]);
        }
    }
    let mut roots: Vec<usize> = label.iter().flatten().copied().collect();
    roots.sort_unstable();
    roots.dedup();
    let mut clusters: Vec<Vec<usize>> = roots
        .iter()
        .map(|&r| (0..n).filter(|&i| label[i] == Some(r)).collect())
        .collect();
    clusters.sort_by_key(|c| c[0]);
    clusters
}

/// Connected components of the epsilon graph by union-find over all pairs.
pub fn epsilon_components(points: &[Vec3], epsilon: f64) -> Vec<Vec<usize>> {
    let n = points.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], mut i: usize) -> usize {
        while p[i] != i {
            p[i] = p[p[i]];
            i = p[i];
        }
        i
    }
    for i in 0..n {
        for j in i + 1..n {
            if points[i].distance_squared(points[j]) <= epsilon * epsilon {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                parent[a.max(b)] = a.min(b);
            }
        }
    }
    let mut groups: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
    for i in 0..n {
        let r = find(&mut parent, i);
        groups.entry(r).or_default().push(i);
    }
    let mut out: Vec<Vec<usize>> = groups.into_values().collect();
    out.sort_by_key(|c| c[0]);
    out
}

/// Containment candidates `(detection, cluster, center distance)`.
pub fn candidate_pairs(
    boxes: &[BoundingBox],
    pixels: &[Option<(f64, f64)>],
) -> Vec<(usize, usize, f64)> {
    let mut out = Vec::new();
    for (d, b) in boxes.iter().enumerate() {
        for (c, p) in pixels.iter().enumerate() {
            if let Some((u, v)) = *p {
                if b.x_min() <= u && u <= b.x_max() && b.y_min() <= v && v <= b.y_max() {
                    let cx = (b.x_min() + b.x_max()) / 2.0;
                    let cy = (b.y_min() + b.y_max()) / 2.0;
                    out.push((d, c, ((u - cx).powi(2) + (v - cy).powi(2)).sqrt()));
                }
            }
        }
    }
    out
}

/// Every one-to-one matching drawn from `cands`, as sorted (det, cluster)
/// lists paired with their total distance.
pub fn all_matchings(cands: &[(usize, usize, f64)]) -> Vec<(Vec<(usize, usize)>, f64)> {
    fn rec(
        cands: &[(usize, usize, f64)],
        i: usize,
        used_d: &mut Vec<usize>,
        used_c: &mut Vec<usize>,
        cur: &mut Vec<(usize, usize)>,
        total: f64,
        out: &mut Vec<(Vec<(usize, usize)>, f64)>,
    ) {
        if i == cands.len() {
            let mut m = cur.clone();
            m.sort_unstable();
            out.push((m, total));
            return;
        }
        rec(cands, i + 1, used_d, used_c, cur, total, out);
        let (d, c, dist) = cands[i];
        if !used_d.contains(&d) && !used_c.contains(&c) {
            used_d.push(d);
            used_c.push(c);
            cur.push((d, c));
            rec(cands, i + 1, used_d, used_c, cur, total + dist, out);
            cur.pop();
            used_c.pop();
            used_d.pop();
        }
    }
    let mut out = Vec::new();
    rec(cands, 0, &mut vec![], &mut vec![], &mut vec![], 0.0, &mut out);
    out
}

/// Outcome of the exhaustive assignment search.
pub enum Optimum {
    Unique(Vec<(usize, usize)>),
    Tied,
}

/// Maximum-cardinality matching of least total center distance. Two
/// candidates whose totals differ by at most `tie_tol` count as tied.
pub fn exhaustive_optimum(cands: &[(usize, usize, f64)], tie_tol: f64) -> Optimum {
    let all = all_matchings(cands);
    let best_len = all.iter().map(|(m, _)| m.len()).max().unwrap_or(0);
    let mut best: Vec<&(Vec<(usize, usize)>, f64)> =
        all.iter().filter(|(m, _)| m.len() == best_len).collect();
    best.sort_by(|a, b| a.1.total_cmp(&b.1));
    match best.as_slice() {
        [] => Optimum::Unique(vec![]),
        [only] => Optimum::Unique(only.0.clone()),
        [first, second, ..] if second.1 - first.1 > tie_tol => Optimum::Unique(first.0.clone()),
        _ => Optimum::Tied,
    }
}

/// True when `m` is one-to-one, uses only candidates, and no unused
/// candidate could be added.
pub fn is_maximal_matching(m: &[(usize, usize)], cands: &[(usize, usize, f64)]) -> bool {
    let dets: std::collections::BTreeSet<usize> = m.iter().map(|p| p.0).collect();
    let clusters: std::collections::BTreeSet<usize> = m.iter().map(|p| p.1).collect();
    if dets.len() != m.len() || clusters.len() != m.len() {
        return false;
    }
    if !m.iter().all(|&(d, c)| cands.iter().any(|&(cd, cc, _)| cd == d && cc == c)) {
        return false;
    }
    !cands
        .iter()
        .any(|&(d, c, _)| !dets.contains(&d) && !clusters.contains(&c))
}
