//! Minimum-area oriented bounding boxes for point clouds.
//!
//! The top-down rectangle is exact: one side of the minimum-area enclosing
//! rectangle is collinear with a convex-hull edge, so sweeping the hull edges
//! (rotating calipers) and keeping the best candidate finds the global
//! minimum rather than an angular approximation.

use crate::cloud::CloudError;
use crate::geom::{OrientedBoundingBox, PointCloud, Rect2, Vec2};

/// Convex hull of a 2D point set (monotone chain), counterclockwise, with
/// collinear and duplicate points dropped. Degenerate inputs yield fewer
/// than 3 vertices.
pub fn convex_hull(points: &[Vec2]) -> Vec<Vec2> {
    let mut pts: Vec<Vec2> = points.to_vec();
    pts.sort_by(|p, q| p.x.total_cmp(&q.x).then(p.y.total_cmp(&q.y)));
    pts.dedup_by(|a, b| a.x == b.x && a.y == b.y);
    if pts.len() < 3 {
        return pts;
    }

    let turn = |o: Vec2, a: Vec2, b: Vec2| (a - o).cross(b - o);
    let mut hull: Vec<Vec2> = Vec::with_capacity(pts.len() + 1);
    for &p in &pts {
        while hull.len() >= 2 && turn(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0 {
            hull.pop();
        }
        hull.push(p);
    }
    let lower_len = hull.len() + 1;
    for &p in pts.iter().rev().skip(1) {
        while hull.len() >= lower_len && turn(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0 {
            hull.pop();
        }
        hull.push(p);
    }
    hull.pop();
    hull
}

/// Minimum-area enclosing rectangle of a convex polygon, or `None` when the
/// polygon has fewer than 3 vertices.
pub fn min_area_rect(hull: &[Vec2]) -> Option<Rect2> {
    if hull.len() < 3 {
        return None;
    }

    struct Candidate {
        area: f64,
        u: Vec2,
        u_range: (f64, f64),
        v_range: (f64, f64),
    }
    let mut best: Option<Candidate> = None;

    for i in 0..hull.len() {
        let edge = hull[(i + 1) % hull.len()] - hull[i];
        let len = edge.norm();
        if len < 1e-15 {
            continue;
        }
        let u = edge * (1.0 / len);
        let v = u.perp();
        let (mut u_min, mut u_max) = (f64::INFINITY, f64::NEG_INFINITY);
        let (mut v_min, mut v_max) = (f64::INFINITY, f64::NEG_INFINITY);
        for &p in hull {
            let pu = p.dot(u);
            let pv = p.dot(v);
            u_min = u_min.min(pu);
            u_max = u_max.max(pu);
            v_min = v_min.min(pv);
            v_max = v_max.max(pv);
        }
        let area = (u_max - u_min) * (v_max - v_min);
        if best.as_ref().is_none_or(|b| area < b.area) {
            best = Some(Candidate { area, u, u_range: (u_min, u_max), v_range: (v_min, v_max) });
        }
    }

    let b = best?;
    let v = b.u.perp();
    let center = b.u * (0.5 * (b.u_range.0 + b.u_range.1)) + v * (0.5 * (b.v_range.0 + b.v_range.1));
    let half_u = 0.5 * (b.u_range.1 - b.u_range.0);
    let half_v = 0.5 * (b.v_range.1 - b.v_range.0);
    if half_u <= 0.0 && half_v <= 0.0 {
        return None;
    }
    let heading = b.u.y.atan2(b.u.x);
    Some(Rect2::new(center, half_u, half_v, heading))
}

/// Fit the z-aligned oriented bounding box of a cloud: the minimum-area
/// rectangle of the top-down projection extruded over the cloud's z range.
///
/// Fails with [`CloudError::DegenerateCloud`] when fewer than 3 points are
/// given or all projections are collinear.
pub fn fit_obb(cloud: &PointCloud) -> Result<OrientedBoundingBox, CloudError> {
    if cloud.len() < 3 {
        return Err(CloudError::DegenerateCloud);
    }
    let pts2: Vec<Vec2> = cloud.points.iter().map(|p| p.xy()).collect();
    let hull = convex_hull(&pts2);
    let rect = min_area_rect(&hull).ok_or(CloudError::DegenerateCloud)?;
    let mut z_min = f64::INFINITY;
    let mut z_max = f64::NEG_INFINITY;
    for p in &cloud.points {
        z_min = z_min.min(p.z);
        z_max = z_max.max(p.z);
    }
    Ok(OrientedBoundingBox { rect, z_min, z_max })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::Vec3;
    use crate::testutil;

    #[test]
    fn hull_of_square_is_square() {
        let pts = [
            Vec2::new(0.0, 0.0),
            Vec2::new(1.0, 0.0),
            Vec2::new(1.0, 1.0),
            Vec2::new(0.0, 1.0),
            Vec2::new(0.5, 0.5),
            Vec2::new(0.5, 0.0), // collinear on an edge
        ];
        let hull = convex_hull(&pts);
        assert_eq!(hull.len(), 4);
    }

    #[test]
    fn hull_collinear_is_degenerate() {
        let pts = [Vec2::new(0.0, 0.0), Vec2::new(1.0, 1.0), Vec2::new(2.0, 2.0)];
        assert!(convex_hull(&pts).len() < 3);
    }

    #[test]
    fn obb_of_unit_cube_corners() {
        let mut points = Vec::new();
        for x in [0.0, 1.0] {
            for y in [0.0, 1.0] {
                for z in [0.0, 1.0] {
                    points.push(Vec3::new(x, y, z));
                }
            }
        }
        let obb = fit_obb(&PointCloud::new(points)).unwrap();
        assert!((obb.rect.center - Vec2::new(0.5, 0.5)).norm() <= 1e-12);
        assert!((obb.rect.half_long - 0.5).abs() <= 1e-12);
        assert!((obb.rect.half_short - 0.5).abs() <= 1e-12);
        assert_eq!((obb.z_min, obb.z_max), (0.0, 1.0));
    }

    #[test]
    fn obb_of_rotated_unit_square() {
        let theta = 30f64.to_radians();
        let rot = |p: Vec2| Vec2::new(p.x * theta.cos() - p.y * theta.sin(), p.x * theta.sin() + p.y * theta.cos());
        let corners = [
            Vec2::new(-0.5, -0.5),
            Vec2::new(0.5, -0.5),
            Vec2::new(0.5, 0.5),
            Vec2::new(-0.5, 0.5),
        ];
        let points: Vec<Vec3> = corners.iter().map(|&c| rot(c).lift(0.0)).collect();
        let obb = fit_obb(&PointCloud::new(points)).unwrap();
        assert!((obb.rect.half_long - 0.5).abs() <= 1e-12);
        assert!((obb.rect.half_short - 0.5).abs() <= 1e-12);
        // Heading is only defined modulo 90° for a square.
        let h = obb.rect.heading.rem_euclid(std::f64::consts::FRAC_PI_2);
        let d = h.min(std::f64::consts::FRAC_PI_2 - h);
        let want = theta.rem_euclid(std::f64::consts::FRAC_PI_2);
        assert!((h - want).abs() <= 1e-9 || d <= 1e-9, "heading {h} vs {want}");
    }

    #[test]
    fn obb_degenerate_inputs() {
        let two = PointCloud::new(vec![Vec3::ZERO, Vec3::new(1.0, 0.0, 0.0)]);
        assert!(matches!(fit_obb(&two), Err(CloudError::DegenerateCloud)));
        let collinear = PointCloud::new(vec![
            Vec3::new(0.0, 0.0, 0.0),
            Vec3::new(1.0, 1.0, 0.5),
            Vec3::new(2.0, 2.0, 1.0),
        ]);
        assert!(matches!(fit_obb(&collinear), Err(CloudError::DegenerateCloud)));
    }

    /// Brute-force oracle: minimum box area over a fine heading sweep.
    fn sweep_min_area(points: &[Vec2], step_deg: f64) -> f64 {
        let mut best = f64::INFINITY;
        let mut deg = 0.0f64;
        while deg < 90.0 {
            let theta = deg.to_radians();
            let u = Vec2::new(theta.cos(), theta.sin());
            let v = u.perp();
            let (mut umin, mut umax) = (f64::INFINITY, f64::NEG_INFINITY);
            let (mut vmin, mut vmax) = (f64::INFINITY, f64::NEG_INFINITY);
            for p in points {
                umin = umin.min(p.dot(u));
                umax = umax.max(p.dot(u));
                vmin = vmin.min(p.dot(v));
                vmax = vmax.max(p.dot(v));
            }
            best = best.min((umax - umin) * (vmax - vmin));
            deg += step_deg;
        }
        best
    }

    #[test]
    fn calipers_beats_heading_sweep() {
        let mut rng = testutil::rng(23);
        for _ in 0..20 {
            let n = 200;
            let points: Vec<Vec3> = (0..n).map(|_| testutil::rand_vec3(&mut rng, 1.0)).collect();
            let cloud = PointCloud::new(points.clone());
            let obb = fit_obb(&cloud).unwrap();
            let pts2: Vec<Vec2> = points.iter().map(|p| p.xy()).collect();
            let sweep = sweep_min_area(&pts2, 0.1);
            assert!(
                obb.rect.area() <= sweep * (1.0 + 1e-6),
                "calipers {} vs sweep {}",
                obb.rect.area(),
                sweep
            );
            for p in &pts2 {
                assert!(obb.rect.contains(*p, 1e-9));
            }
        }
    }

    #[test]
    fn obb_translation_equivariance() {
        let mut rng = testutil::rng(29);
        let points: Vec<Vec3> = (0..120).map(|_| testutil::rand_vec3(&mut rng, 1.0)).collect();
        let base = fit_obb(&PointCloud::new(points.clone())).unwrap();
        for _ in 0..100 {
            let v = testutil::rand_vec3(&mut rng, 5.0);
            let moved: Vec<Vec3> = points.iter().map(|&p| p + v).collect();
            let obb = fit_obb(&PointCloud::new(moved)).unwrap();
            assert!((obb.center() - (base.center() + v)).norm() <= 1e-9);
        }
    }

    #[test]
    fn obb_rotation_equivariant_area() {
        let mut rng = testutil::rng(31);
        let points: Vec<Vec3> = (0..150).map(|_| testutil::rand_vec3(&mut rng, 1.0)).collect();
        let base = fit_obb(&PointCloud::new(points.clone())).unwrap().rect.area();
        for _ in 0..25 {
            let theta = testutil::rand_range(&mut rng, 0.0, std::f64::consts::TAU);
            let (s, c) = theta.sin_cos();
            let rotated: Vec<Vec3> = points
                .iter()
                .map(|p| Vec3::new(p.x * c - p.y * s, p.x * s + p.y * c, p.z))
                .collect();
            let area = fit_obb(&PointCloud::new(rotated)).unwrap().rect.area();
            assert!((area - base).abs() <= 1e-6 * base);
        }
    }
}
