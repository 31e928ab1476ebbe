//! Deterministic articulated-object simulator: parametric cabinet scenes
//! with a 1-DoF door or drawer and a floating bar handle, surface-sampled
//! labeled point clouds with optional Gaussian noise and outliers, and
//! constraint-projection manipulation dynamics with a grasp-slip failure
//! model.
//!
//! There are no forces or contacts: a commanded end-effector displacement is
//! projected onto the joint's feasible motion, and the grasp is lost when
//! the commanded and realized grip motions deviate by more than the slip
//! tolerance. That is exactly the failure mode that punishes stale axis
//! estimates.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geom::{rotate_about_axis, JointAxis, JointKind, PartLabel, PointCloud, Vec2, Vec3};

/// Full box extents along the local axes, meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoxDims {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl BoxDims {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        BoxDims { x, y, z }
    }

    pub fn surface_area(&self) -> f64 {
        2.0 * (self.x * self.y + self.y * self.z + self.x * self.z)
    }
}

/// Rigid placement of a scene: yaw about the vertical axis followed by a
/// ground-plane translation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScenePose {
    pub offset: Vec2,
    pub yaw: f64,
}

impl ScenePose {
    pub fn identity() -> Self {
        ScenePose { offset: Vec2::ZERO, yaw: 0.0 }
    }

    fn apply_point(&self, p: Vec3) -> Vec3 {
        let (s, c) = self.yaw.sin_cos();
        Vec3::new(
            c * p.x - s * p.y + self.offset.x,
            s * p.x + c * p.y + self.offset.y,
            p.z,
        )
    }

    fn apply_dir(&self, v: Vec3) -> Vec3 {
        let (s, c) = self.yaw.sin_cos();
        Vec3::new(c * v.x - s * v.y, s * v.x + c * v.y, v.z)
    }
}

/// Parametric cabinet with one movable part (door panel or drawer) and a
/// floating vertical bar handle rigidly attached to it. The joint state is
/// the opening amount: radians for a door, meters of extension for a drawer,
/// clamped to `[0, joint_limit]`.
///
/// Local frame: the body box is centered at the origin in x/y, rests on
/// z = 0, and its front face (where the movable part sits) faces +y.
#[derive(Debug, Clone)]
pub struct ArticulatedScene {
    pub kind: JointKind,
    pub pose: ScenePose,
    pub body: BoxDims,
    pub movable: BoxDims,
    pub handle: BoxDims,
    body_center: Vec3,
    movable_center_closed: Vec3,
    handle_center_closed: Vec3,
    /// Door only: top-down hinge position in the local frame.
    hinge: Vec2,
    /// Door only: +1 opens counterclockwise seen from above (+z), -1
    /// clockwise (-z).
    axis_sign: f64,
    /// Drawer only: local slide direction (unit, horizontal).
    slide_dir: Vec2,
    pub joint_state: f64,
    pub joint_limit: f64,
}

/// Thickness of the door panel, meters.
pub const DOOR_PANEL_THICKNESS: f64 = 0.02;
/// Thickness of the drawer face proud of the body front, meters.
pub const DRAWER_FACE_THICKNESS: f64 = 0.02;
/// Gap between the movable part's front face and the handle bar. Must
/// comfortably exceed the filter radius so the handle stays a detached
/// cluster even under sensor noise.
pub const HANDLE_STANDOFF: f64 = 0.10;
/// Handle bar cross-section and length, meters.
pub const HANDLE_DIMS: BoxDims = BoxDims::new(0.02, 0.02, 0.10);
/// Fraction of the door width from the hinge to the handle.
pub const HANDLE_PLACEMENT: f64 = 0.85;

impl ArticulatedScene {
    /// Cabinet with a hinged door panel mounted on the front face. The hinge
    /// is vertical, runs through the panel's mid-thickness plane at one
    /// lateral edge, and opens outward.
    pub fn door(body: BoxDims, panel_width: f64, hinge_on_right: bool, max_angle: f64, pose: ScenePose) -> Self {
        let t = DOOR_PANEL_THICKNESS;
        let panel_height = (body.z - 0.1).max(0.2);
        let y_mid = body.y / 2.0 + t / 2.0;
        let (hinge_x, axis_sign, toward_panel) = if hinge_on_right {
            (panel_width / 2.0, -1.0, -1.0)
        } else {
            (-panel_width / 2.0, 1.0, 1.0)
        };
        let z_lo = (body.z - panel_height) / 2.0;
        let z_mid = z_lo + panel_height / 2.0;
        let handle_x = hinge_x + toward_panel * HANDLE_PLACEMENT * panel_width;
        ArticulatedScene {
            kind: JointKind::Revolute,
            pose,
            body,
            movable: BoxDims::new(panel_width, t, panel_height),
            handle: HANDLE_DIMS,
            body_center: Vec3::new(0.0, 0.0, body.z / 2.0),
            movable_center_closed: Vec3::new(0.0, y_mid, z_mid),
            handle_center_closed: Vec3::new(
                handle_x,
                body.y / 2.0 + t + HANDLE_STANDOFF + HANDLE_DIMS.y / 2.0,
                z_mid,
            ),
            hinge: Vec2::new(hinge_x, y_mid),
            axis_sign,
            slide_dir: Vec2::ZERO,
            joint_state: 0.0,
            joint_limit: max_angle,
        }
    }

    /// Cabinet with a drawer sliding out of the front face along +y. The
    /// drawer face sits slightly proud of the body so the closed cloud is a
    /// single connected surface.
    pub fn drawer(body: BoxDims, drawer: BoxDims, center_height: f64, max_extension: f64, pose: ScenePose) -> Self {
        let y_front = body.y / 2.0 + DRAWER_FACE_THICKNESS;
        ArticulatedScene {
            kind: JointKind::Prismatic,
            pose,
            body,
            movable: drawer,
            handle: HANDLE_DIMS,
            body_center: Vec3::new(0.0, 0.0, body.z / 2.0),
            movable_center_closed: Vec3::new(0.0, y_front - drawer.y / 2.0, center_height),
            handle_center_closed: Vec3::new(
                0.0,
                y_front + HANDLE_STANDOFF + HANDLE_DIMS.y / 2.0,
                center_height,
            ),
            hinge: Vec2::ZERO,
            axis_sign: 0.0,
            slide_dir: Vec2::new(0.0, 1.0),
            joint_state: 0.0,
            joint_limit: max_extension,
        }
    }

    pub fn set_joint_state(&mut self, q: f64) {
        self.joint_state = q.clamp(0.0, self.joint_limit);
    }

    /// Ground-truth joint axis in world coordinates.
    pub fn true_axis(&self) -> JointAxis {
        match self.kind {
            JointKind::Revolute => {
                let pivot = self.pose.apply_point(self.hinge.lift(self.movable_center_closed.z));
                JointAxis { kind: JointKind::Revolute, pivot, direction: Vec3::Z * self.axis_sign }
            }
            JointKind::Prismatic => JointAxis {
                kind: JointKind::Prismatic,
                pivot: self.pose.apply_point(self.movable_center_closed),
                direction: self.pose.apply_dir(self.slide_dir.lift(0.0)),
            },
        }
    }

    /// Joint motion applied in the local frame (closed-state point to
    /// current-state point).
    fn joint_point(&self, p: Vec3) -> Vec3 {
        match self.kind {
            JointKind::Prismatic => p + self.slide_dir.lift(0.0) * self.joint_state,
            JointKind::Revolute => {
                let axis = JointAxis {
                    kind: JointKind::Revolute,
                    pivot: self.hinge.lift(0.0),
                    direction: Vec3::Z * self.axis_sign,
                };
                rotate_about_axis(p, &axis, self.joint_state)
            }
        }
    }

    fn joint_dir(&self, v: Vec3) -> Vec3 {
        match self.kind {
            JointKind::Prismatic => v,
            JointKind::Revolute => {
                let axis =
                    JointAxis { kind: JointKind::Revolute, pivot: Vec3::ZERO, direction: Vec3::Z * self.axis_sign };
                rotate_about_axis(v, &axis, self.joint_state)
            }
        }
    }

    /// Map a closed-state local point on the movable part (or handle) to
    /// world coordinates at the current joint state.
    pub fn movable_to_world(&self, p_closed: Vec3) -> Vec3 {
        self.pose.apply_point(self.joint_point(p_closed))
    }

    fn body_to_world(&self, p: Vec3) -> Vec3 {
        self.pose.apply_point(p)
    }

    /// Handle (grip) center in world coordinates at the current state.
    pub fn grip_point(&self) -> Vec3 {
        self.movable_to_world(self.handle_center_closed)
    }

    /// Outward normal of the movable part's front face in world coordinates
    /// at the current state. This is the pull direction used for the initial
    /// blind displacement.
    pub fn handle_outward_normal(&self) -> Vec3 {
        self.pose.apply_dir(self.joint_dir(Vec3::new(0.0, 1.0, 0.0)))
    }
}

/// Randomization ranges for scene generation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SceneRanges {
    pub body_dim_min: f64,
    pub body_dim_max: f64,
    pub door_width_min: f64,
    pub door_width_max: f64,
    /// Drawer scenes need enough depth for the extension targets.
    pub drawer_body_depth_min: f64,
    pub position_jitter: f64,
    pub yaw_jitter: f64,
    pub door_max_angle: f64,
}

impl Default for SceneRanges {
    fn default() -> Self {
        SceneRanges {
            body_dim_min: 0.4,
            body_dim_max: 1.0,
            door_width_min: 0.3,
            door_width_max: 0.8,
            drawer_body_depth_min: 0.55,
            position_jitter: 0.1,
            yaw_jitter: 10f64.to_radians(),
            door_max_angle: 85f64.to_radians(),
        }
    }
}

fn random_pose(rng: &mut impl Rng, ranges: &SceneRanges) -> ScenePose {
    ScenePose {
        offset: Vec2::new(
            rng.random_range(-ranges.position_jitter..=ranges.position_jitter),
            rng.random_range(-ranges.position_jitter..=ranges.position_jitter),
        ),
        yaw: rng.random_range(-ranges.yaw_jitter..=ranges.yaw_jitter),
    }
}

/// Random door cabinet within the configured ranges.
pub fn random_door(rng: &mut impl Rng, ranges: &SceneRanges) -> ArticulatedScene {
    let body = BoxDims::new(
        rng.random_range(ranges.body_dim_min..=ranges.body_dim_max),
        rng.random_range(ranges.body_dim_min..=ranges.body_dim_max),
        rng.random_range(ranges.body_dim_min..=ranges.body_dim_max),
    );
    let width = rng
        .random_range(ranges.door_width_min..=ranges.door_width_max)
        .min(body.x - 0.05);
    let hinge_on_right = rng.random::<bool>();
    let pose = random_pose(rng, ranges);
    ArticulatedScene::door(body, width, hinge_on_right, ranges.door_max_angle, pose)
}

/// Random drawer cabinet within the configured ranges.
pub fn random_drawer(rng: &mut impl Rng, ranges: &SceneRanges) -> ArticulatedScene {
    let body = BoxDims::new(
        rng.random_range(ranges.body_dim_min..=ranges.body_dim_max),
        rng.random_range(ranges.drawer_body_depth_min..=ranges.body_dim_max),
        rng.random_range(ranges.body_dim_min..=ranges.body_dim_max),
    );
    let depth = (body.y - 0.05).min(0.55);
    let drawer = BoxDims::new(body.x - 0.1, depth, (0.35 * body.z).clamp(0.12, 0.4));
    let center_height = 0.55 * body.z;
    let pose = random_pose(rng, ranges);
    ArticulatedScene::drawer(body, drawer, center_height, depth - 0.03, pose)
}

/// Axis-aligned world-space box for outlier generation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Aabb {
    pub min: Vec3,
    pub max: Vec3,
}

/// Synthetic depth-sensor model: uniform-area surface sampling with
/// isotropic Gaussian noise, optional uniform outliers, and optional
/// back-face culling. Deterministic for a given seed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SensorModel {
    /// Points per square meter of sampled surface.
    pub surface_density: f64,
    /// Isotropic Gaussian noise sigma, meters.
    pub noise_sigma: f64,
    /// Outlier count as a fraction of the surface point count, in [0, 1).
    pub outlier_fraction: f64,
    pub outlier_box: Aabb,
    /// When set, faces whose outward normal has non-negative dot product
    /// with this direction are skipped entirely.
    pub view_direction: Option<Vec3>,
    pub seed: u64,
}

impl Default for SensorModel {
    fn default() -> Self {
        SensorModel {
            surface_density: 800.0,
            noise_sigma: 0.0,
            outlier_fraction: 0.0,
            outlier_box: Aabb {
                min: Vec3::new(-1.5, -1.5, -0.2),
                max: Vec3::new(1.5, 1.5, 1.8),
            },
            view_direction: None,
            seed: 0,
        }
    }
}

impl SensorModel {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }
}

/// The six faces of an axis-aligned box as (normal, u axis, v axis).
const BOX_FACES: [(Vec3, Vec3, Vec3); 6] = [
    (Vec3::new(1.0, 0.0, 0.0), Vec3::new(0.0, 1.0, 0.0), Vec3::new(0.0, 0.0, 1.0)),
    (Vec3::new(-1.0, 0.0, 0.0), Vec3::new(0.0, 1.0, 0.0), Vec3::new(0.0, 0.0, 1.0)),
    (Vec3::new(0.0, 1.0, 0.0), Vec3::new(1.0, 0.0, 0.0), Vec3::new(0.0, 0.0, 1.0)),
    (Vec3::new(0.0, -1.0, 0.0), Vec3::new(1.0, 0.0, 0.0), Vec3::new(0.0, 0.0, 1.0)),
    (Vec3::new(0.0, 0.0, 1.0), Vec3::new(1.0, 0.0, 0.0), Vec3::new(0.0, 1.0, 0.0)),
    (Vec3::new(0.0, 0.0, -1.0), Vec3::new(1.0, 0.0, 0.0), Vec3::new(0.0, 1.0, 0.0)),
];

#[allow(clippy::too_many_arguments)]
fn sample_faces(
    rng: &mut ChaCha8Rng,
    sensor: &SensorModel,
    noise: Option<&Normal<f64>>,
    center: Vec3,
    dims: &BoxDims,
    to_world: &dyn Fn(Vec3) -> Vec3,
    dir_to_world: &dyn Fn(Vec3) -> Vec3,
    label: PartLabel,
    points: &mut Vec<Vec3>,
    labels: &mut Vec<PartLabel>,
) {
    let half = Vec3::new(dims.x / 2.0, dims.y / 2.0, dims.z / 2.0);
    for (normal, u_axis, v_axis) in BOX_FACES {
        if let Some(view) = sensor.view_direction {
            if dir_to_world(normal).dot(view) >= 0.0 {
                continue;
            }
        }
        let half_u = u_axis.dot(half).abs();
        let half_v = v_axis.dot(half).abs();
        let half_n = normal.dot(half).abs();
        let area = 4.0 * half_u * half_v;
        let count = (area * sensor.surface_density).round() as usize;
        let face_center = center + normal * half_n;
        for _ in 0..count {
            let u = rng.random_range(-half_u..half_u);
            let v = rng.random_range(-half_v..half_v);
            let mut p = to_world(face_center + u_axis * u + v_axis * v);
            if let Some(n) = noise {
                p += Vec3::new(n.sample(rng), n.sample(rng), n.sample(rng));
            }
            points.push(p);
            labels.push(label);
        }
    }
}

/// Sample a labeled point cloud of the scene's exterior surfaces at the
/// current joint state. Identical (scene, sensor) inputs produce
/// bit-identical clouds.
pub fn sample_cloud(scene: &ArticulatedScene, sensor: &SensorModel) -> PointCloud {
    let mut rng = ChaCha8Rng::seed_from_u64(sensor.seed);
    let noise = if sensor.noise_sigma > 0.0 {
        Some(Normal::new(0.0, sensor.noise_sigma).expect("valid sigma"))
    } else {
        None
    };
    let mut points = Vec::new();
    let mut labels = Vec::new();

    let body_to_world = |p: Vec3| scene.body_to_world(p);
    let body_dir = |v: Vec3| scene.pose.apply_dir(v);
    sample_faces(
        &mut rng,
        sensor,
        noise.as_ref(),
        scene.body_center,
        &scene.body,
        &body_to_world,
        &body_dir,
        PartLabel::Body,
        &mut points,
        &mut labels,
    );

    let movable_to_world = |p: Vec3| scene.movable_to_world(p);
    let movable_dir = |v: Vec3| scene.pose.apply_dir(scene.joint_dir(v));
    sample_faces(
        &mut rng,
        sensor,
        noise.as_ref(),
        scene.movable_center_closed,
        &scene.movable,
        &movable_to_world,
        &movable_dir,
        PartLabel::MotionPart,
        &mut points,
        &mut labels,
    );
    sample_faces(
        &mut rng,
        sensor,
        noise.as_ref(),
        scene.handle_center_closed,
        &scene.handle,
        &movable_to_world,
        &movable_dir,
        PartLabel::Handle,
        &mut points,
        &mut labels,
    );

    let n_outliers = (sensor.outlier_fraction * points.len() as f64).round() as usize;
    let lo = sensor.outlier_box.min;
    let hi = sensor.outlier_box.max;
    for _ in 0..n_outliers {
        points.push(Vec3::new(
            rng.random_range(lo.x..hi.x),
            rng.random_range(lo.y..hi.y),
            rng.random_range(lo.z..hi.z),
        ));
        labels.push(PartLabel::Outlier);
    }

    PointCloud::with_labels(points, labels)
}

/// Rigid attachment of the end effector to the handle.
#[derive(Debug, Clone, Copy)]
pub struct GraspModel {
    pub attached: bool,
    /// Current grip point in world coordinates; moves rigidly with the
    /// movable part while attached.
    pub grip_point: Vec3,
    /// Maximum allowed deviation between the commanded and realized grip
    /// motion per step, meters.
    pub slip_tolerance: f64,
}

impl GraspModel {
    /// Attach at the scene's handle center.
    pub fn attach(scene: &ArticulatedScene, slip_tolerance: f64) -> Self {
        GraspModel { attached: true, grip_point: scene.grip_point(), slip_tolerance }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum SimError {
    /// The commanded motion deviated from the feasible constrained motion by
    /// more than the slip tolerance; the grasp is lost. The joint state has
    /// already been advanced by the projected amount.
    #[error("grasp slipped: deviation {deviation:.4} m exceeds tolerance {tolerance:.4} m")]
    GraspLost { deviation: f64, tolerance: f64 },
    /// Motion commanded without an attached grasp has no effect.
    #[error("grasp is not attached")]
    NotAttached,
}

/// Outcome of one constrained manipulation step.
#[derive(Debug, Clone, Copy)]
pub struct RealizedMotion {
    /// Change actually applied to the joint state (after clamping).
    pub joint_delta: f64,
    /// Realized grip-point displacement.
    pub grip_delta: Vec3,
    /// `|commanded - realized|`.
    pub deviation: f64,
}

/// Project a commanded grip-point displacement onto the joint's feasible
/// motion, advance the joint state (clamped to its limits), and check the
/// grasp for slip.
///
/// Prismatic: the joint advances by the component of `delta` along the true
/// axis. Revolute: by the least-squares angular increment
/// `((pivot->grip) × delta) · axis / |(pivot->grip)_perp|^2`.
pub fn apply_end_effector_motion(
    scene: &mut ArticulatedScene,
    grasp: &mut GraspModel,
    delta: Vec3,
) -> Result<RealizedMotion, SimError> {
    if !grasp.attached {
        return Err(SimError::NotAttached);
    }
    let grip_before = scene.grip_point();
    let axis = scene.true_axis();
    let dq_raw = match scene.kind {
        JointKind::Prismatic => delta.dot(axis.direction),
        JointKind::Revolute => {
            let r = grip_before - axis.pivot;
            let r_perp = r - axis.direction * r.dot(axis.direction);
            let rho_sq = r_perp.norm_sq();
            if rho_sq < 1e-12 {
                0.0
            } else {
                r.cross(delta).dot(axis.direction) / rho_sq
            }
        }
    };
    let q_new = (scene.joint_state + dq_raw).clamp(0.0, scene.joint_limit);
    let joint_delta = q_new - scene.joint_state;
    scene.joint_state = q_new;
    let grip_after = scene.grip_point();
    grasp.grip_point = grip_after;
    let grip_delta = grip_after - grip_before;
    let deviation = (delta - grip_delta).norm();
    if deviation > grasp.slip_tolerance {
        grasp.attached = false;
        return Err(SimError::GraspLost { deviation, tolerance: grasp.slip_tolerance });
    }
    Ok(RealizedMotion { joint_delta, grip_delta, deviation })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil;

    fn unit_body_scene() -> ArticulatedScene {
        // Door scene whose movable/handle are irrelevant for body-only
        // sampling checks.
        ArticulatedScene::door(BoxDims::new(1.0, 1.0, 1.0), 0.5, false, 1.5, ScenePose::identity())
    }

    #[test]
    fn sample_count_matches_area_arithmetic() {
        let scene = unit_body_scene();
        let sensor = SensorModel { surface_density: 1000.0, ..SensorModel::default() };
        let cloud = sample_cloud(&scene, &sensor);
        let body_points = cloud
            .labels
            .as_ref()
            .unwrap()
            .iter()
            .filter(|&&l| l == PartLabel::Body)
            .count();
        // Unit cube: six 1 m^2 faces at 1000 points each.
        assert!((body_points as i64 - 6000).abs() <= 1, "body points {body_points}");
    }

    #[test]
    fn noise_free_points_lie_on_box_faces() {
        let scene = unit_body_scene();
        let sensor = SensorModel { surface_density: 500.0, ..SensorModel::default() };
        let cloud = sample_cloud(&scene, &sensor);
        for (p, l) in cloud.points.iter().zip(cloud.labels.as_ref().unwrap()) {
            if *l != PartLabel::Body {
                continue;
            }
            // Local frame (identity pose): on some face of the unit cube
            // centered at (0, 0, 0.5).
            let dx = (p.x.abs() - 0.5).abs();
            let dy = (p.y.abs() - 0.5).abs();
            let dz = ((p.z - 0.5).abs() - 0.5).abs();
            let on_face = dx <= 1e-12 || dy <= 1e-12 || dz <= 1e-12;
            assert!(on_face, "point not on a face: {p:?}");
        }
    }

    #[test]
    fn sampling_is_deterministic_per_seed() {
        let scene = testutil::default_drawer();
        let sensor = SensorModel {
            noise_sigma: 0.005,
            outlier_fraction: 0.01,
            seed: 99,
            ..SensorModel::default()
        };
        let a = sample_cloud(&scene, &sensor);
        let b = sample_cloud(&scene, &sensor);
        assert_eq!(a.points.len(), b.points.len());
        for (p, q) in a.points.iter().zip(&b.points) {
            assert_eq!(p, q);
        }
        assert_eq!(a.labels, b.labels);
    }

    #[test]
    fn open_drawer_motion_points_follow_rigid_transform() {
        let mut scene = testutil::default_drawer();
        scene.set_joint_state(0.2);
        let sensor = SensorModel::default();
        let cloud = sample_cloud(&scene, &sensor);
        let axis = scene.true_axis();
        // Every motion-part point must lie inside the drawer box translated
        // 0.2 m along the true axis: check by mapping back to local closed
        // coordinates.
        let shift = axis.direction * 0.2;
        let mut checked = 0;
        for (p, l) in cloud.points.iter().zip(cloud.labels.as_ref().unwrap()) {
            if *l != PartLabel::MotionPart {
                continue;
            }
            let back = *p - shift;
            // Undo the pose.
            let (s, c) = scene.pose.yaw.sin_cos();
            let q = Vec3::new(
                c * (back.x - scene.pose.offset.x) + s * (back.y - scene.pose.offset.y),
                -s * (back.x - scene.pose.offset.x) + c * (back.y - scene.pose.offset.y),
                back.z,
            );
            let d = q - scene.movable_center_closed;
            assert!(d.x.abs() <= scene.movable.x / 2.0 + 1e-9);
            assert!(d.y.abs() <= scene.movable.y / 2.0 + 1e-9);
            assert!(d.z.abs() <= scene.movable.z / 2.0 + 1e-9);
            checked += 1;
        }
        assert!(checked > 100);
    }

    #[test]
    fn back_face_culling_halves_the_cube() {
        let scene = unit_body_scene();
        let full = sample_cloud(&scene, &SensorModel { surface_density: 1000.0, ..SensorModel::default() });
        let culled = sample_cloud(
            &scene,
            &SensorModel {
                surface_density: 1000.0,
                view_direction: Some(Vec3::new(0.0, -1.0, 0.0)),
                ..SensorModel::default()
            },
        );
        // Only the +y-facing faces drop out (one body face of the cube and
        // the fronts of panel/handle); the culled cloud must be smaller.
        assert!(culled.len() < full.len());
        assert!(!culled.is_empty());
    }

    #[test]
    fn aligned_drawer_pull_advances_without_slip() {
        let mut scene = testutil::default_drawer();
        let mut grasp = GraspModel::attach(&scene, 0.02);
        let axis = scene.true_axis();
        let m = apply_end_effector_motion(&mut scene, &mut grasp, axis.direction * 0.05).unwrap();
        assert!((scene.joint_state - 0.05).abs() <= 1e-12);
        assert!((m.joint_delta - 0.05).abs() <= 1e-12);
        assert!(m.deviation <= 1e-12);
        assert!(grasp.attached);
    }

    #[test]
    fn orthogonal_drawer_command_slips() {
        let mut scene = testutil::default_drawer();
        let mut grasp = GraspModel::attach(&scene, 0.02);
        let axis = scene.true_axis();
        // Horizontal direction orthogonal to the slide axis.
        let ortho = Vec3::Z.cross(axis.direction);
        let err = apply_end_effector_motion(&mut scene, &mut grasp, ortho * 0.05);
        assert!(matches!(err, Err(SimError::GraspLost { .. })));
        assert_eq!(scene.joint_state, 0.0);
        assert!(!grasp.attached);
    }

    #[test]
    fn door_tangent_chord_deviation_is_second_order()  {
        let mut scene = testutil::default_door();
        scene.set_joint_state(0.3);
        let mut grasp = GraspModel::attach(&scene, 0.02);
        let axis = scene.true_axis();
        let grip = scene.grip_point();
        let r = grip - axis.pivot;
        let rho = (r - axis.direction * r.dot(axis.direction)).norm();
        // Exact tangent of the true circle, arc-length step.
        let tangent = axis.direction.cross(r).normalized().unwrap();
        let step = 0.05;
        let m = apply_end_effector_motion(&mut scene, &mut grasp, tangent * step).unwrap();
        assert!((m.joint_delta - step / rho).abs() <= 1e-3 * step / rho);
        assert!(m.deviation <= step * step / (2.0 * rho) + 1e-9, "deviation {}", m.deviation);
        assert!(grasp.attached);
    }

    #[test]
    fn joint_round_trip_returns_grip_to_start() {
        let mut rng = testutil::rng(101);
        for _ in 0..50 {
            let mut scene = if rng.random::<bool>() {
                random_door(&mut rng, &SceneRanges::default())
            } else {
                random_drawer(&mut rng, &SceneRanges::default())
            };
            let q0 = testutil::rand_range(&mut rng, 0.0, scene.joint_limit / 2.0);
            scene.set_joint_state(q0);
            let start = scene.grip_point();
            let dq = testutil::rand_range(&mut rng, 0.0, scene.joint_limit - q0);
            scene.set_joint_state(q0 + dq);
            scene.set_joint_state(q0);
            assert!((scene.grip_point() - start).norm() <= 1e-9);
        }
    }

    #[test]
    fn movable_points_equal_closed_points_under_joint_transform() {
        let mut rng = testutil::rng(103);
        for _ in 0..20 {
            let mut scene = random_door(&mut rng, &SceneRanges::default());
            let p_closed = scene.movable_center_closed
                + Vec3::new(
                    testutil::rand_range(&mut rng, -0.1, 0.1),
                    0.0,
                    testutil::rand_range(&mut rng, -0.1, 0.1),
                );
            scene.set_joint_state(testutil::rand_range(&mut rng, 0.0, scene.joint_limit));
            let world = scene.movable_to_world(p_closed);
            let axis = scene.true_axis();
            let expect = rotate_about_axis(
                scene.pose.apply_point(p_closed),
                &axis,
                scene.joint_state,
            );
            assert!((world - expect).norm() <= 1e-12);
        }
    }

    #[test]
    fn slip_is_monotone_in_tolerance() {
        let mut rng = testutil::rng(107);
        for _ in 0..50 {
            let scene0 = random_door(&mut rng, &SceneRanges::default());
            let delta = testutil::rand_vec3(&mut rng, 0.06);
            let deviation_at = |tol: f64| {
                let mut scene = scene0.clone();
                let mut grasp = GraspModel::attach(&scene, tol);
                apply_end_effector_motion(&mut scene, &mut grasp, delta).is_err()
            };
            // If a command slips at tolerance tau it must slip at every
            // smaller tolerance.
            let taus = [0.005, 0.01, 0.02, 0.04, 0.08];
            let slips: Vec<bool> = taus.iter().map(|&t| deviation_at(t)).collect();
            for w in slips.windows(2) {
                // slip at larger tolerance implies slip at smaller
                assert!(w[0] || !w[1], "slip not monotone: {slips:?}");
            }
        }
    }

    #[test]
    fn clamping_at_joint_limit_counts_as_deviation() {
        let mut scene = testutil::default_drawer();
        scene.set_joint_state(scene.joint_limit);
        let mut grasp = GraspModel::attach(&scene, 0.02);
        let axis = scene.true_axis();
        let err = apply_end_effector_motion(&mut scene, &mut grasp, axis.direction * 0.05);
        assert!(matches!(err, Err(SimError::GraspLost { .. })));
    }
}
