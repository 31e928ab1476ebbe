//! Point-cloud operations: radius-based outlier filtering, grid-accelerated
//! neighbor search, radius-connectivity clustering, and motion-part
//! extraction by bounding-box subtraction.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geom::{OrientedBoundingBox, PointCloud, Vec3};
use crate::obb::fit_obb;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum CloudError {
    /// Fewer than 3 points, or a collinear top-down projection; no box can
    /// be fitted. Callers skip the frame.
    #[error("degenerate cloud: too few points or collinear projection")]
    DegenerateCloud,
    /// No point survives bounding-box subtraction plus re-filtering. Signals
    /// insufficient displacement; callers keep manipulating.
    #[error("no motion-part points outside the body box")]
    EmptyMotionPart,
}

/// Radius-filter parameters: a point survives iff it has at least
/// `min_neighbors` *other* points within `radius`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FilterParams {
    /// Neighborhood radius in meters.
    pub radius: f64,
    /// Minimum neighbor count (>= 1).
    pub min_neighbors: usize,
}

impl FilterParams {
    pub fn new(radius: f64, min_neighbors: usize) -> Self {
        FilterParams { radius, min_neighbors }
    }

    pub fn is_valid(&self) -> bool {
        self.radius > 0.0 && self.min_neighbors >= 1
    }
}

impl Default for FilterParams {
    /// Defaults tuned for dense simulated clouds.
    fn default() -> Self {
        FilterParams { radius: 0.05, min_neighbors: 100 }
    }
}

/// Uniform hash grid over 3D space with cell edge equal to the query radius,
/// so a radius query only visits the 3x3x3 block of cells around the query
/// point.
pub struct SpatialGrid<'a> {
    points: &'a [Vec3],
    cell_size: f64,
    cells: HashMap<(i64, i64, i64), Vec<u32>>,
}

impl<'a> SpatialGrid<'a> {
    pub fn build(points: &'a [Vec3], cell_size: f64) -> Self {
        assert!(cell_size > 0.0, "cell size must be positive");
        let mut cells: HashMap<(i64, i64, i64), Vec<u32>> = HashMap::new();
        for (i, p) in points.iter().enumerate() {
            cells
                .entry(Self::cell_index(*p, cell_size))
                .or_default()
                .push(i as u32);
        }
        SpatialGrid { points, cell_size, cells }
    }

    fn cell_index(p: Vec3, cell_size: f64) -> (i64, i64, i64) {
        (
            (p.x / cell_size).floor() as i64,
            (p.y / cell_size).floor() as i64,
            (p.z / cell_size).floor() as i64,
        )
    }

    /// Visit the indices of all stored points within `radius` of `query`
    /// (distance <= radius, including zero distance). `radius` must not
    /// exceed the grid cell size.
    pub fn for_each_within(&self, query: Vec3, radius: f64, mut f: impl FnMut(usize)) {
        debug_assert!(radius <= self.cell_size * (1.0 + 1e-12));
        let (cx, cy, cz) = Self::cell_index(query, self.cell_size);
        let r2 = radius * radius;
        for dx in -1..=1 {
            for dy in -1..=1 {
                for dz in -1..=1 {
                    if let Some(bucket) = self.cells.get(&(cx + dx, cy + dy, cz + dz)) {
                        for &i in bucket {
                            if (self.points[i as usize] - query).norm_sq() <= r2 {
                                f(i as usize);
                            }
                        }
                    }
                }
            }
        }
    }

    /// Number of stored points `q` with `0 < |query - q| <= radius`.
    /// Zero-distance duplicates (and the query point itself, if stored) are
    /// excluded by the strict lower bound.
    pub fn count_within(&self, query: Vec3, radius: f64) -> usize {
        let mut n = 0;
        self.for_each_within(query, radius, |i| {
            if (self.points[i] - query).norm_sq() > 0.0 {
                n += 1;
            }
        });
        n
    }
}

/// Reference neighbor count: the number of cloud points `q` with
/// `0 < |p - q| <= radius`, by exhaustive scan. The grid-accelerated path in
/// [`filter_cloud`] must agree with this exactly.
pub fn neighbor_count(cloud: &PointCloud, p: Vec3, radius: f64) -> usize {
    let r2 = radius * radius;
    cloud
        .points
        .iter()
        .filter(|q| {
            let d2 = (**q - p).norm_sq();
            d2 > 0.0 && d2 <= r2
        })
        .count()
}

/// Keep exactly the points with at least `min_neighbors` other points within
/// `radius`, evaluated against the *original* cloud in a single pass (not
/// iterated to a fixpoint). Order and labels are preserved.
pub fn filter_cloud(cloud: &PointCloud, params: &FilterParams) -> PointCloud {
    assert!(params.is_valid(), "invalid filter parameters");
    let grid = SpatialGrid::build(&cloud.points, params.radius);
    let keep: Vec<bool> = cloud
        .points
        .iter()
        .map(|&p| grid.count_within(p, params.radius) >= params.min_neighbors)
        .collect();
    cloud.masked(&keep)
}

/// Connected components under radius connectivity: two points are linked iff
/// their distance is <= `radius`. Components are returned in order of their
/// smallest point index; indices within a component are ascending.
pub fn cluster_by_radius(points: &[Vec3], radius: f64) -> Vec<Vec<usize>> {
    let grid = SpatialGrid::build(points, radius);
    let mut visited = vec![false; points.len()];
    let mut clusters = Vec::new();
    for seed in 0..points.len() {
        if visited[seed] {
            continue;
        }
        visited[seed] = true;
        let mut component = vec![seed];
        let mut stack = vec![seed];
        while let Some(i) = stack.pop() {
            grid.for_each_within(points[i], radius, |j| {
                if !visited[j] {
                    visited[j] = true;
                    component.push(j);
                    stack.push(j);
                }
            });
        }
        component.sort_unstable();
        clusters.push(component);
    }
    clusters
}

/// Fit a box to the largest radius-connected cluster of the cloud, dropping
/// any smaller detached clusters (e.g. a handle floating in front of a
/// cabinet). Ties on point count go to the cluster with the larger z extent,
/// then to the one appearing first.
pub fn refine_body_obb(
    cloud: &PointCloud,
    params: &FilterParams,
) -> Result<OrientedBoundingBox, CloudError> {
    largest_cluster_obb(cloud, params.radius)
}

pub(crate) fn largest_cluster_obb(
    cloud: &PointCloud,
    radius: f64,
) -> Result<OrientedBoundingBox, CloudError> {
    if cloud.is_empty() {
        return Err(CloudError::DegenerateCloud);
    }
    let clusters = cluster_by_radius(&cloud.points, radius);
    let z_extent = |c: &[usize]| {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for &i in c {
            lo = lo.min(cloud.points[i].z);
            hi = hi.max(cloud.points[i].z);
        }
        hi - lo
    };
    // Clusters are ordered by first index, so replacing only on a strictly
    // better (count, z-extent) pair implements the first-index tie-break.
    let mut best: Option<(usize, f64, &Vec<usize>)> = None;
    for c in &clusters {
        let key = (c.len(), z_extent(c));
        match &best {
            Some((n, z, _)) if key.0 < *n || (key.0 == *n && key.1 <= *z) => {}
            _ => best = Some((key.0, key.1, c)),
        }
    }
    let (_, _, indices) = best.expect("nonempty cloud has at least one cluster");
    fit_obb(&cloud.subset(indices))
}

/// Parameters for motion-part extraction by box subtraction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MotionExtractionParams {
    /// Inflation applied to all six faces of the body box before subtraction,
    /// meters. Absorbs sensor noise at the body boundary.
    pub margin: f64,
    /// Second noise-reduction pass applied to the surviving points.
    pub refilter: FilterParams,
}

impl Default for MotionExtractionParams {
    fn default() -> Self {
        MotionExtractionParams {
            margin: 0.01,
            refilter: FilterParams::new(0.05, 3),
        }
    }
}

/// Points of `frame` strictly outside `body_obb` inflated by
/// `params.margin`, re-filtered with `params.refilter`. Labels are
/// preserved. Fails with [`CloudError::EmptyMotionPart`] when nothing
/// survives.
pub fn extract_motion_part(
    frame: &PointCloud,
    body_obb: &OrientedBoundingBox,
    params: &MotionExtractionParams,
) -> Result<PointCloud, CloudError> {
    let keep: Vec<bool> = frame
        .points
        .iter()
        .map(|&p| !body_obb.contains(p, params.margin))
        .collect();
    let outside = frame.masked(&keep);
    if outside.is_empty() {
        return Err(CloudError::EmptyMotionPart);
    }
    let filtered = filter_cloud(&outside, &params.refilter);
    if filtered.is_empty() {
        return Err(CloudError::EmptyMotionPart);
    }
    Ok(filtered)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::{PartLabel, Vec2};
    use crate::testutil;

    #[test]
    fn neighbor_count_excludes_self() {
        let cloud = PointCloud::new(vec![Vec3::ZERO]);
        assert_eq!(neighbor_count(&cloud, Vec3::ZERO, 1.0), 0);
    }

    #[test]
    fn neighbor_count_one_within_radius() {
        let cloud = PointCloud::new(vec![
            Vec3::ZERO,
            Vec3::new(0.5, 0.0, 0.0),
            Vec3::new(2.0, 0.0, 0.0),
        ]);
        assert_eq!(neighbor_count(&cloud, Vec3::ZERO, 1.0), 1);
    }

    #[test]
    fn neighbor_count_excludes_zero_distance_duplicates() {
        let cloud = PointCloud::new(vec![Vec3::ZERO, Vec3::ZERO, Vec3::new(0.1, 0.0, 0.0)]);
        assert_eq!(neighbor_count(&cloud, Vec3::ZERO, 1.0), 1);
    }

    #[test]
    fn grid_count_matches_scan_on_random_clouds() {
        let mut rng = testutil::rng(41);
        let points: Vec<Vec3> = (0..300).map(|_| testutil::rand_vec3(&mut rng, 0.5)).collect();
        let cloud = PointCloud::new(points.clone());
        let grid = SpatialGrid::build(&points, 0.2);
        for _ in 0..50 {
            let q = testutil::rand_vec3(&mut rng, 0.5);
            assert_eq!(grid.count_within(q, 0.2), neighbor_count(&cloud, q, 0.2));
        }
    }

    #[test]
    fn filter_removes_lone_outlier() {
        let mut points: Vec<Vec3> = (0..50)
            .map(|i| Vec3::new(0.001 * i as f64, 0.0, 0.0))
            .collect();
        points.push(Vec3::new(10.0, 0.0, 0.0));
        let cloud = PointCloud::new(points);
        let out = filter_cloud(&cloud, &FilterParams::new(0.05, 1));
        assert_eq!(out.len(), 50);
        assert!(out.points.iter().all(|p| p.x < 1.0));
    }

    #[test]
    fn filter_keeps_dense_cluster_drops_outliers() {
        // 200 points inside a ball of radius 0.01 (so every point has 199
        // neighbors within r = 0.05) plus 5 scattered singletons.
        let mut rng = testutil::rng(43);
        let mut points = Vec::new();
        for _ in 0..200 {
            points.push(testutil::rand_vec3(&mut rng, 0.005));
        }
        for i in 0..5 {
            points.push(Vec3::new(5.0 + i as f64, 5.0, 5.0));
        }
        let cloud = PointCloud::new(points.clone());
        let params = FilterParams::new(0.05, 100);
        let out = filter_cloud(&cloud, &params);
        // Brute-force oracle over the original cloud.
        let expect: Vec<Vec3> = points
            .iter()
            .copied()
            .filter(|&p| neighbor_count(&cloud, p, params.radius) >= params.min_neighbors)
            .collect();
        assert_eq!(out.len(), 200);
        assert_eq!(out.points, expect);
    }

    #[test]
    fn filter_is_identity_when_all_points_supported() {
        let mut rng = testutil::rng(47);
        let points: Vec<Vec3> = (0..100).map(|_| testutil::rand_vec3(&mut rng, 0.01)).collect();
        let labels = vec![PartLabel::Body; 100];
        let cloud = PointCloud::with_labels(points.clone(), labels.clone());
        let out = filter_cloud(&cloud, &FilterParams::new(0.05, 10));
        assert_eq!(out.points, points);
        assert_eq!(out.labels.unwrap(), labels);
    }

    #[test]
    fn filter_output_is_subset_preserving_order() {
        let mut rng = testutil::rng(53);
        for _ in 0..20 {
            let n = 200;
            let points: Vec<Vec3> = (0..n).map(|_| testutil::rand_vec3(&mut rng, 0.2)).collect();
            let cloud = PointCloud::new(points.clone());
            let out = filter_cloud(&cloud, &FilterParams::new(0.08, 4));
            // Subset in order: every output point appears in the input at or
            // after the previous match.
            let mut it = points.iter();
            for p in &out.points {
                assert!(it.any(|q| q == p), "output point missing from input");
            }
        }
    }

    #[test]
    fn clustering_separates_gapped_groups() {
        let mut points = Vec::new();
        for i in 0..30 {
            points.push(Vec3::new(0.01 * i as f64, 0.0, 0.0));
        }
        for i in 0..10 {
            points.push(Vec3::new(1.0 + 0.01 * i as f64, 0.0, 0.0));
        }
        let clusters = cluster_by_radius(&points, 0.05);
        assert_eq!(clusters.len(), 2);
        assert_eq!(clusters[0].len(), 30);
        assert_eq!(clusters[1].len(), 10);
    }

    #[test]
    fn refine_body_obb_drops_detached_handle() {
        // A flat slab plus a small detached bar in front of it.
        let mut rng = testutil::rng(59);
        let mut points = Vec::new();
        for _ in 0..2000 {
            points.push(Vec3::new(
                testutil::rand_range(&mut rng, -0.4, 0.4),
                testutil::rand_range(&mut rng, -0.02, 0.02),
                testutil::rand_range(&mut rng, 0.0, 0.8),
            ));
        }
        for _ in 0..100 {
            points.push(Vec3::new(
                testutil::rand_range(&mut rng, -0.05, 0.05),
                testutil::rand_range(&mut rng, 0.15, 0.17),
                testutil::rand_range(&mut rng, 0.35, 0.45),
            ));
        }
        let cloud = PointCloud::new(points);
        let params = FilterParams::new(0.05, 1);
        let full = fit_obb(&cloud).unwrap();
        let body = refine_body_obb(&cloud, &params).unwrap();
        assert!(body.rect.half_short < full.rect.half_short);
        assert!(body.rect.half_short <= 0.021);
        assert!((body.rect.half_long - 0.4).abs() < 0.01);
    }

    #[test]
    fn refine_body_obb_single_cluster_equals_fit() {
        let mut rng = testutil::rng(61);
        let points: Vec<Vec3> = (0..300).map(|_| testutil::rand_vec3(&mut rng, 0.02)).collect();
        let cloud = PointCloud::new(points);
        let a = refine_body_obb(&cloud, &FilterParams::new(0.05, 1)).unwrap();
        let b = fit_obb(&cloud).unwrap();
        assert_eq!(a.rect.center, b.rect.center);
        assert_eq!((a.z_min, a.z_max), (b.z_min, b.z_max));
    }

    #[test]
    fn refine_body_obb_tie_breaks_on_z_extent() {
        // Two clusters of equal size; the second is taller.
        let mut points = Vec::new();
        for i in 0..20 {
            let (gx, gy) = (i % 5, i / 5);
            points.push(Vec3::new(
                0.01 * gx as f64,
                0.01 * gy as f64,
                0.02 * ((i % 2) as f64),
            ));
            points.push(Vec3::new(
                5.0 + 0.01 * gx as f64,
                0.01 * gy as f64,
                0.08 * ((i % 2) as f64),
            ));
        }
        let body = refine_body_obb(&PointCloud::new(points), &FilterParams::new(0.1, 1)).unwrap();
        assert!(body.rect.center.x > 4.0, "taller cluster should win");
        assert!((body.z_max - body.z_min - 0.08).abs() <= 1e-12);
    }

    #[test]
    fn extract_motion_part_empty_on_initial_frame() {
        let mut rng = testutil::rng(67);
        let points: Vec<Vec3> = (0..500).map(|_| testutil::rand_vec3(&mut rng, 0.3)).collect();
        let cloud = PointCloud::new(points);
        let obb = fit_obb(&cloud).unwrap();
        let params = MotionExtractionParams { margin: 0.0, refilter: FilterParams::new(0.05, 1) };
        assert!(matches!(
            extract_motion_part(&cloud, &obb, &params),
            Err(CloudError::EmptyMotionPart)
        ));
    }

    #[test]
    fn extract_motion_part_points_lie_outside_inflated_box() {
        let mut rng = testutil::rng(71);
        let body = OrientedBoundingBox {
            rect: crate::geom::Rect2::new(Vec2::ZERO, 0.3, 0.2, 0.3),
            z_min: 0.0,
            z_max: 0.5,
        };
        let points: Vec<Vec3> = (0..2000)
            .map(|_| testutil::rand_vec3(&mut rng, 0.6) + Vec3::new(0.0, 0.0, 0.3))
            .collect();
        let cloud = PointCloud::new(points);
        let params = MotionExtractionParams { margin: 0.02, refilter: FilterParams::new(0.2, 1) };
        if let Ok(part) = extract_motion_part(&cloud, &body, &params) {
            for p in &part.points {
                assert!(!body.contains(*p, params.margin));
            }
        }
    }
}
