//! Explicit joint-axis computation from pairs of motion-part bounding boxes,
//! plus the sliding-window refinement that re-estimates the axis as
//! manipulation progresses.
//!
//! Prismatic: the axis direction is the displacement between the two box
//! centers; the pivot is the start center.
//!
//! Revolute: the rectangle midline of a hinged panel (the central line
//! running along its longer edges) passes through the hinge at every opening
//! angle, so the midlines of two poses intersect at the pivot. The vertical
//! sign is recovered from the rotation sense of the center displacement
//! around the pivot.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cloud::largest_cluster_obb;
use crate::geom::{
    line_intersection_2d, AxisEvidence, JointAxis, JointKind, OrientedBoundingBox, PointCloud,
    Vec3, NEAR_SQUARE_ASPECT,
};
use crate::obb::fit_obb;

/// Minimum midline angle (radians) below which two rectangle poses cannot
/// pin down an intersection.
pub const MIN_MIDLINE_ANGLE: f64 = 1e-3;

/// Default displacement gate for a prismatic box pair, meters.
pub const DEFAULT_MIN_DISPLACEMENT: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum AxisError {
    /// Box centers moved less than the displacement gate; widen the window
    /// or keep manipulating.
    #[error("insufficient motion: displacement {displacement:.4} m below gate {gate:.4} m")]
    InsufficientMotion { displacement: f64, gate: f64 },
    /// Midlines are (near-)parallel or the rotation sense is undecidable;
    /// the rotation between the two poses is too small.
    #[error("degenerate rotation: midline angle {angle:.5} rad below gate {gate:.5} rad")]
    DegenerateRotation { angle: f64, gate: f64 },
    /// No frame pair in the sequence passed the window gates.
    #[error("no valid frame window")]
    NoValidWindow,
}

/// Frame-index window `[start, end]` an estimate was computed from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FrameWindow {
    pub start: usize,
    pub end: usize,
}

/// Sliding-window policy for [`refine_axis`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WindowPolicy {
    /// Maximum window length in manipulation steps: for frame `k` the window
    /// start is at least `k - max_window`.
    pub max_window: usize,
    /// Displacement gate for prismatic pairs, meters.
    pub min_displacement: f64,
    /// Midline-angle gate for revolute pairs, radians.
    pub min_rotation: f64,
    /// When set, each frame's box is fitted to the largest radius-connected
    /// cluster of its motion part (drops detached fragments such as a
    /// floating handle). `None` fits the whole cloud.
    pub cluster_radius: Option<f64>,
}

impl Default for WindowPolicy {
    fn default() -> Self {
        WindowPolicy {
            max_window: 4,
            min_displacement: DEFAULT_MIN_DISPLACEMENT,
            min_rotation: 2f64.to_radians(),
            cluster_radius: Some(0.05),
        }
    }
}

/// One axis estimate: the axis itself, the geometric evidence it was derived
/// from, a confidence flag, and the frame window it covers.
#[derive(Debug, Clone, Copy)]
pub struct AxisEstimate {
    pub axis: JointAxis,
    pub evidence: AxisEvidence,
    /// Set when either rectangle is near-square (longer-edge direction
    /// ambiguous) — the estimate is still produced but should be trusted
    /// less.
    pub low_confidence: bool,
    pub window: FrameWindow,
}

/// Estimate a prismatic axis from the start/end motion-part boxes: pivot at
/// the start center, direction along the center displacement.
pub fn estimate_prismatic(
    obb_st: &OrientedBoundingBox,
    obb_ed: &OrientedBoundingBox,
    min_displacement: f64,
) -> Result<AxisEstimate, AxisError> {
    let start_center = obb_st.center();
    let end_center = obb_ed.center();
    let displacement = end_center - start_center;
    let dist = displacement.norm();
    if dist < min_displacement {
        return Err(AxisError::InsufficientMotion { displacement: dist, gate: min_displacement });
    }
    let direction = displacement * (1.0 / dist);
    Ok(AxisEstimate {
        axis: JointAxis { kind: JointKind::Prismatic, pivot: start_center, direction },
        evidence: AxisEvidence {
            start_center,
            end_center,
            displacement,
            tangent: Vec3::ZERO,
            pivot_2d: start_center.xy(),
        },
        low_confidence: false,
        window: FrameWindow { start: 0, end: 1 },
    })
}

/// Estimate a vertical revolute axis from the start/end motion-part boxes.
///
/// The pivot is the intersection of the two top-down midlines, lifted to the
/// start box's mid-height. The direction is `+z` or `-z` depending on the
/// sign of `displacement . tangent`, where the tangent is
/// `(start_center -> pivot) × z`: a center moving along `+tangent` orbits
/// the pivot counterclockwise seen from above.
pub fn estimate_revolute(
    obb_st: &OrientedBoundingBox,
    obb_ed: &OrientedBoundingBox,
    min_angle: f64,
) -> Result<AxisEstimate, AxisError> {
    // Midline angle folded to [0, pi/2]: midlines are undirected.
    let mut angle = (obb_ed.rect.heading - obb_st.rect.heading).rem_euclid(std::f64::consts::PI);
    if angle > std::f64::consts::FRAC_PI_2 {
        angle = std::f64::consts::PI - angle;
    }
    let gate = min_angle.max(MIN_MIDLINE_ANGLE);
    if angle < gate {
        return Err(AxisError::DegenerateRotation { angle, gate });
    }
    let pivot_2d = line_intersection_2d(&obb_st.rect.midline(), &obb_ed.rect.midline())
        .ok_or(AxisError::DegenerateRotation { angle, gate })?;

    let start_center = obb_st.center();
    let end_center = obb_ed.center();
    let displacement = end_center - start_center;
    // Pivot at the start box's height so the radial arm is horizontal.
    let pivot = pivot_2d.lift(start_center.z);
    let tangent = (pivot - start_center).cross(Vec3::Z);
    let sense = displacement.dot(tangent);
    if sense == 0.0 {
        // No decidable rotation sense; treat as degenerate rather than guess.
        return Err(AxisError::DegenerateRotation { angle: 0.0, gate });
    }
    let direction = if sense > 0.0 { Vec3::Z } else { -Vec3::Z };
    let low_confidence =
        obb_st.rect.aspect() < NEAR_SQUARE_ASPECT || obb_ed.rect.aspect() < NEAR_SQUARE_ASPECT;
    Ok(AxisEstimate {
        axis: JointAxis { kind: JointKind::Revolute, pivot, direction },
        evidence: AxisEvidence { start_center, end_center, displacement, tangent, pivot_2d },
        low_confidence,
        window: FrameWindow { start: 0, end: 1 },
    })
}

/// Box used for axis estimation of one motion-part frame, honoring the
/// policy's cluster selection.
pub(crate) fn motion_part_obb(
    cloud: &PointCloud,
    policy: &WindowPolicy,
) -> Option<OrientedBoundingBox> {
    match policy.cluster_radius {
        Some(r) => largest_cluster_obb(cloud, r).ok(),
        None => fit_obb(cloud).ok(),
    }
}

/// Pairwise estimate for the window ending at `end`, with the start frame
/// chosen as the earliest usable frame within the policy's window length.
/// Returns `None` when no start frame exists or a gate fails.
pub(crate) fn estimate_from_window(
    obbs: &[Option<OrientedBoundingBox>],
    first_valid: usize,
    end: usize,
    kind: JointKind,
    policy: &WindowPolicy,
) -> Option<AxisEstimate> {
    let end_obb = obbs[end].as_ref()?;
    let lo = first_valid.max(end.saturating_sub(policy.max_window));
    let start = (lo..end).find(|&i| obbs[i].is_some())?;
    let start_obb = obbs[start].as_ref().unwrap();
    let pair = match kind {
        JointKind::Prismatic => estimate_prismatic(start_obb, end_obb, policy.min_displacement),
        JointKind::Revolute => estimate_revolute(start_obb, end_obb, policy.min_rotation),
    }
    .ok()?;
    Some(AxisEstimate { window: FrameWindow { start, end }, ..pair })
}

/// Run the sliding-window estimator over a recorded sequence of motion-part
/// clouds (`None` marks frames without a usable motion part, e.g. the
/// reference frame). For each frame `k` past the first usable one, a window
/// `[st, k]` is formed with `st` no older than `k - max_window`; frames
/// failing the displacement/rotation gate are skipped. The last estimate in
/// the returned sequence is the current belief.
pub fn refine_axis(
    frames: &[Option<PointCloud>],
    kind: JointKind,
    policy: &WindowPolicy,
) -> Result<Vec<AxisEstimate>, AxisError> {
    let obbs: Vec<Option<OrientedBoundingBox>> = frames
        .iter()
        .map(|f| f.as_ref().and_then(|c| motion_part_obb(c, policy)))
        .collect();
    let first_valid = match obbs.iter().position(|o| o.is_some()) {
        Some(i) => i,
        None => return Err(AxisError::NoValidWindow),
    };
    let mut estimates = Vec::new();
    for end in first_valid + 1..obbs.len() {
        if let Some(est) = estimate_from_window(&obbs, first_valid, end, kind, policy) {
            estimates.push(est);
        }
    }
    if estimates.is_empty() {
        return Err(AxisError::NoValidWindow);
    }
    Ok(estimates)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::{Rect2, Vec2};
    use crate::testutil;

    fn boxed(center: Vec2, half_long: f64, half_short: f64, heading: f64, z: (f64, f64)) -> OrientedBoundingBox {
        OrientedBoundingBox {
            rect: Rect2::new(center, half_long, half_short, heading),
            z_min: z.0,
            z_max: z.1,
        }
    }

    #[test]
    fn prismatic_axis_aligned_pull() {
        let st = boxed(Vec2::new(0.0, 0.0), 0.3, 0.1, 0.0, (0.0, 0.0));
        let ed = boxed(Vec2::new(0.0, 0.3), 0.3, 0.1, 0.0, (0.0, 0.0));
        let est = estimate_prismatic(&st, &ed, DEFAULT_MIN_DISPLACEMENT).unwrap();
        assert_eq!(est.axis.pivot, Vec3::ZERO);
        assert!((est.axis.direction - Vec3::new(0.0, 1.0, 0.0)).norm() <= 1e-12);
    }

    #[test]
    fn prismatic_diagonal_normalization() {
        let s = 0.1 / 2f64.sqrt();
        let st = boxed(Vec2::new(1.0, 1.0), 0.3, 0.1, 0.0, (0.0, 0.0));
        let ed = boxed(Vec2::new(1.0 + s, 1.0 + s), 0.3, 0.1, 0.0, (0.0, 0.0));
        let est = estimate_prismatic(&st, &ed, DEFAULT_MIN_DISPLACEMENT).unwrap();
        let want = Vec3::new(1.0 / 2f64.sqrt(), 1.0 / 2f64.sqrt(), 0.0);
        assert!((est.axis.direction - want).norm() <= 1e-12);
        assert!((est.axis.direction.norm() - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn prismatic_gate_rejects_small_displacement() {
        let st = boxed(Vec2::new(0.0, 0.0), 0.3, 0.1, 0.0, (0.0, 0.0));
        let ed = boxed(Vec2::new(0.0, 0.005), 0.3, 0.1, 0.0, (0.0, 0.0));
        assert!(matches!(
            estimate_prismatic(&st, &ed, DEFAULT_MIN_DISPLACEMENT),
            Err(AxisError::InsufficientMotion { .. })
        ));
    }

    #[test]
    fn prismatic_swap_flips_direction_exactly() {
        let mut rng = testutil::rng(73);
        for _ in 0..100 {
            let c1 = testutil::rand_vec2(&mut rng, 1.0);
            let c2 = testutil::rand_vec2(&mut rng, 1.0);
            if (c2 - c1).norm() < 0.02 {
                continue;
            }
            let st = boxed(c1, 0.3, 0.1, 0.2, (0.0, 0.4));
            let ed = boxed(c2, 0.3, 0.1, 0.2, (0.0, 0.4));
            let fwd = estimate_prismatic(&st, &ed, 0.01).unwrap();
            let back = estimate_prismatic(&ed, &st, 0.01).unwrap();
            assert_eq!(fwd.axis.direction, -back.axis.direction);
        }
    }

    /// Panel rectangle hinged at the origin: at opening angle `theta` the
    /// panel's midline passes through the hinge, its center sitting
    /// `half_width` along the midline.
    fn door_rect(hinge: Vec2, width: f64, thickness: f64, theta: f64) -> OrientedBoundingBox {
        let dir = Vec2::new(theta.cos(), theta.sin());
        let center = hinge + dir * (width / 2.0);
        boxed(center, width / 2.0, thickness / 2.0, theta, (0.0, 1.0))
    }

    #[test]
    fn revolute_recovers_hinge_clockwise_opening() {
        // Closed along +x, opened 30 degrees clockwise seen from above
        // (centers move toward -y): direction must be -z.
        let st = door_rect(Vec2::ZERO, 0.8, 0.05, 0.0);
        let ed = door_rect(Vec2::ZERO, 0.8, 0.05, -30f64.to_radians());
        let est = estimate_revolute(&st, &ed, MIN_MIDLINE_ANGLE).unwrap();
        assert!(est.evidence.pivot_2d.norm() <= 1e-9);
        assert_eq!(est.axis.direction, -Vec3::Z);
        assert_eq!(est.axis.pivot.z, 0.5);
    }

    #[test]
    fn revolute_sign_symmetry_counterclockwise() {
        let st = door_rect(Vec2::ZERO, 0.8, 0.05, 0.0);
        let ed = door_rect(Vec2::ZERO, 0.8, 0.05, 30f64.to_radians());
        let est = estimate_revolute(&st, &ed, MIN_MIDLINE_ANGLE).unwrap();
        assert!(est.evidence.pivot_2d.norm() <= 1e-9);
        assert_eq!(est.axis.direction, Vec3::Z);
    }

    #[test]
    fn revolute_direction_always_exactly_vertical() {
        let mut rng = testutil::rng(79);
        for _ in 0..200 {
            let hinge = testutil::rand_vec2(&mut rng, 1.0);
            let w = testutil::rand_range(&mut rng, 0.3, 0.8);
            let t0 = testutil::rand_range(&mut rng, 0.0, std::f64::consts::PI);
            let dth = testutil::rand_range(&mut rng, 0.05, 1.2)
                * if rng_bool(&mut rng) { 1.0 } else { -1.0 };
            let st = door_rect(hinge, w, 0.04, t0);
            let ed = door_rect(hinge, w, 0.04, t0 + dth);
            if let Ok(est) = estimate_revolute(&st, &ed, MIN_MIDLINE_ANGLE) {
                assert!(est.axis.direction == Vec3::Z || est.axis.direction == -Vec3::Z);
            }
        }
    }

    fn rng_bool(rng: &mut rand_chacha::ChaCha8Rng) -> bool {
        use rand::Rng;
        rng.random::<bool>()
    }

    #[test]
    fn revolute_hinge_sweep_half_degree_steps() {
        // Rigid rotation of a rectangle about a point on its midline: the
        // estimated pivot matches the hinge and the sign rule recovers the
        // rotation sense for every angle in (0.5, 90) degrees.
        let hinge = Vec2::new(0.4, -0.7);
        let w = 0.6;
        for sign in [1.0f64, -1.0] {
            let mut deg = 0.5f64;
            while deg < 90.0 {
                let st = door_rect(hinge, w, 0.05, 0.3);
                let ed = door_rect(hinge, w, 0.05, 0.3 + sign * deg.to_radians());
                let est = estimate_revolute(&st, &ed, 1e-4).unwrap();
                assert!(
                    (est.evidence.pivot_2d - hinge).norm() <= 1e-9,
                    "pivot error at {deg} deg"
                );
                let want = if sign > 0.0 { Vec3::Z } else { -Vec3::Z };
                assert_eq!(est.axis.direction, want, "sign at {deg} deg (sense {sign})");
                deg += 0.5;
            }
        }
    }

    #[test]
    fn revolute_translation_invariance() {
        let mut rng = testutil::rng(83);
        let st = door_rect(Vec2::new(0.1, 0.2), 0.7, 0.05, 0.4);
        let ed = door_rect(Vec2::new(0.1, 0.2), 0.7, 0.05, 0.9);
        let base = estimate_revolute(&st, &ed, MIN_MIDLINE_ANGLE).unwrap();
        for _ in 0..100 {
            let v = testutil::rand_vec2(&mut rng, 3.0);
            let shift = |o: &OrientedBoundingBox| OrientedBoundingBox {
                rect: Rect2::new(o.rect.center + v, o.rect.half_long, o.rect.half_short, o.rect.heading),
                z_min: o.z_min,
                z_max: o.z_max,
            };
            let est = estimate_revolute(&shift(&st), &shift(&ed), MIN_MIDLINE_ANGLE).unwrap();
            assert!((est.evidence.pivot_2d - (base.evidence.pivot_2d + v)).norm() <= 1e-9);
        }
    }

    #[test]
    fn revolute_near_parallel_is_degenerate() {
        let st = door_rect(Vec2::ZERO, 0.8, 0.05, 0.0);
        let ed = door_rect(Vec2::ZERO, 0.8, 0.05, 5e-4);
        assert!(matches!(
            estimate_revolute(&st, &ed, MIN_MIDLINE_ANGLE),
            Err(AxisError::DegenerateRotation { .. })
        ));
    }

    #[test]
    fn revolute_flags_near_square_rect() {
        let st = boxed(Vec2::ZERO, 0.1, 0.099, 0.0, (0.0, 1.0));
        let ed = boxed(Vec2::new(0.05, 0.05), 0.1, 0.099, 0.5, (0.0, 1.0));
        let est = estimate_revolute(&st, &ed, MIN_MIDLINE_ANGLE).unwrap();
        assert!(est.low_confidence);
    }

    /// Dense points on the two long faces of a door panel at angle `theta`,
    /// hinged at `hinge`.
    fn door_panel_cloud(hinge: Vec2, width: f64, thickness: f64, theta: f64) -> PointCloud {
        let dir = Vec2::new(theta.cos(), theta.sin());
        let nrm = dir.perp();
        let mut points = Vec::new();
        let n = 200;
        for i in 0..=n {
            let u = width * i as f64 / n as f64;
            for s in [-0.5, 0.5] {
                let p = hinge + dir * u + nrm * (s * thickness);
                for z in [0.0, 0.5, 1.0] {
                    points.push(p.lift(z));
                }
            }
        }
        PointCloud::new(points)
    }

    #[test]
    fn refine_two_frames_equals_pairwise() {
        let hinge = Vec2::new(0.2, 0.1);
        let frames = vec![
            Some(door_panel_cloud(hinge, 0.6, 0.04, 0.0)),
            Some(door_panel_cloud(hinge, 0.6, 0.04, 0.3)),
        ];
        let policy = WindowPolicy { cluster_radius: None, ..WindowPolicy::default() };
        let ests = refine_axis(&frames, JointKind::Revolute, &policy).unwrap();
        assert_eq!(ests.len(), 1);
        assert_eq!(ests[0].window, FrameWindow { start: 0, end: 1 });
        let o0 = fit_obb(frames[0].as_ref().unwrap()).unwrap();
        let o1 = fit_obb(frames[1].as_ref().unwrap()).unwrap();
        let pair = estimate_revolute(&o0, &o1, policy.min_rotation).unwrap();
        assert_eq!(ests[0].axis.pivot, pair.axis.pivot);
        assert_eq!(ests[0].axis.direction, pair.axis.direction);
    }

    #[test]
    fn refine_noise_free_door_errors_stay_tiny() {
        // 5 degrees per step for 10 steps; every estimate's pivot must sit on
        // the hinge to within 1e-6 m and the window must respect the policy.
        let hinge = Vec2::new(-0.3, 0.5);
        let policy = WindowPolicy { cluster_radius: None, ..WindowPolicy::default() };
        let frames: Vec<Option<PointCloud>> = (0..=10)
            .map(|k| Some(door_panel_cloud(hinge, 0.7, 0.04, 0.1 + 5f64.to_radians() * k as f64)))
            .collect();
        let ests = refine_axis(&frames, JointKind::Revolute, &policy).unwrap();
        assert!(!ests.is_empty());
        let mut prev_err = f64::INFINITY;
        for est in &ests {
            assert!(est.window.start < est.window.end);
            assert!(est.window.end - est.window.start <= policy.max_window);
            let err = (est.evidence.pivot_2d - hinge).norm();
            assert!(err <= 1e-6, "pivot error {err}");
            assert!(err <= prev_err + 1e-9, "error increased past numeric floor");
            prev_err = err;
            assert_eq!(est.axis.direction, Vec3::Z);
        }
    }

    #[test]
    fn refine_skips_gated_frames_and_reports_none_when_all_fail() {
        let hinge = Vec2::ZERO;
        // Two identical poses: rotation gate can never pass.
        let frames = vec![
            Some(door_panel_cloud(hinge, 0.6, 0.04, 0.2)),
            Some(door_panel_cloud(hinge, 0.6, 0.04, 0.2)),
        ];
        let policy = WindowPolicy { cluster_radius: None, ..WindowPolicy::default() };
        assert!(matches!(
            refine_axis(&frames, JointKind::Revolute, &policy),
            Err(AxisError::NoValidWindow)
        ));
    }

    #[test]
    fn refine_prismatic_minimal_window() {
        let cloud_at = |y: f64| {
            let mut points = Vec::new();
            for i in 0..100 {
                points.push(Vec3::new(0.002 * i as f64, y + 0.001 * (i % 7) as f64, 0.1));
                points.push(Vec3::new(0.002 * i as f64, y + 0.001 * (i % 7) as f64, 0.3));
            }
            Some(PointCloud::new(points))
        };
        let frames = vec![cloud_at(0.0), cloud_at(0.05)];
        let policy = WindowPolicy { cluster_radius: None, ..WindowPolicy::default() };
        let ests = refine_axis(&frames, JointKind::Prismatic, &policy).unwrap();
        assert_eq!(ests.len(), 1);
        let d = ests[0].axis.direction;
        assert!((d - Vec3::new(0.0, 1.0, 0.0)).norm() <= 1e-9);
    }
}
