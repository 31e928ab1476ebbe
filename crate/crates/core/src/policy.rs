//! The manipulation policy: blind initial displacement, per-step axis
//! re-estimation, axis-guided waypoint planning, and the frozen-estimate
//! baseline it is compared against.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geom::{rotate_about_axis, JointAxis, JointKind, PointCloud, Vec3};
use crate::pipeline::{AxisTracker, PipelineParams};
use crate::sim::{
    apply_end_effector_motion, sample_cloud, ArticulatedScene, GraspModel, SensorModel, SimError,
};

/// Initial blind pulls use this fraction of the configured step size. The
/// pull direction (the movable part's face normal) deviates from the true
/// motion tangent when the handle stands off the panel, and a gentler pull
/// keeps that deviation inside the slip tolerance.
pub const INIT_STEP_SCALE: f64 = 0.5;

/// Grip-to-pivot distances below this make a revolute waypoint meaningless.
pub const MIN_PLAN_RADIUS: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicyMode {
    /// Re-estimate the axis after every step and plan against the latest
    /// estimate.
    ClosedLoop,
    /// Freeze the first estimate that becomes available and plan against it
    /// for the rest of the trial.
    OpenLoop,
    /// Plan against the simulator's true axis (sanity upper bound).
    GroundTruth,
}

impl PolicyMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            PolicyMode::ClosedLoop => "closed_loop",
            PolicyMode::OpenLoop => "open_loop",
            PolicyMode::GroundTruth => "ground_truth",
        }
    }
}

/// Per-trial policy configuration. The target and step size are in joint
/// units: radians/arc meters for doors, meters for drawers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolicyConfig {
    pub mode: PolicyMode,
    /// Commanded grip displacement per step (arc length for doors), meters.
    pub step_size: f64,
    /// Number of blind initial pulls.
    pub init_steps: usize,
    /// Total manipulation-step budget, identical across modes.
    pub max_steps: usize,
    /// Goal joint state (radians or meters).
    pub target: f64,
}

impl PolicyConfig {
    pub fn is_valid(&self) -> bool {
        self.step_size > 0.0 && self.max_steps >= self.init_steps + 1 && self.target >= 0.0
    }
}

impl Default for PolicyConfig {
    fn default() -> Self {
        PolicyConfig {
            mode: PolicyMode::ClosedLoop,
            step_size: 0.05,
            init_steps: 2,
            max_steps: 26,
            target: 0.3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum PolicyError {
    /// The estimated pivot (nearly) coincides with the grip point.
    #[error("degenerate estimate: grip within {radius:.4} m of the estimated pivot")]
    DegenerateEstimate { radius: f64 },
}

/// One manipulation step as recorded in a trial report. Error fields are
/// `None` for blind steps executed without an axis estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepRecord {
    /// 1-based step index.
    pub step: usize,
    /// Angle between the estimated and true axis directions, degrees.
    pub direction_error_deg: Option<f64>,
    /// Distance from the estimated pivot to the true axis line, meters.
    pub pivot_error_m: Option<f64>,
    pub slipped: bool,
}

/// Outcome of one manipulation trial.
#[derive(Debug, Clone)]
pub struct TrialReport {
    /// True iff the final joint state reached the target within budget.
    pub success: bool,
    pub steps_used: usize,
    pub final_joint_state: f64,
    pub per_step: Vec<StepRecord>,
    pub seed: u64,
    pub grasp_lost: bool,
}

/// Angle between two (unit) axis directions, degrees.
pub fn direction_error_deg(estimated: &JointAxis, truth: &JointAxis) -> f64 {
    estimated
        .direction
        .dot(truth.direction)
        .clamp(-1.0, 1.0)
        .acos()
        .to_degrees()
}

/// Distance from the estimated pivot to the true axis line, meters.
pub fn pivot_error_m(estimated: &JointAxis, truth: &JointAxis) -> f64 {
    truth.distance_to_line(estimated.pivot)
}

/// Compute the next commanded grip displacement from an axis estimate.
///
/// Prismatic: a full step along the estimated direction, flipped if it
/// opposes the last realized motion. Revolute: the chord of the circle
/// around the estimated pivot through the grip, with arc length equal to the
/// step size and the rotation sense given by the estimated direction.
pub fn plan_next_waypoint(
    axis: &JointAxis,
    grip: Vec3,
    step_size: f64,
    last_motion: Vec3,
) -> Result<Vec3, PolicyError> {
    match axis.kind {
        JointKind::Prismatic => {
            let mut dir = axis.direction;
            if dir.dot(last_motion) < 0.0 {
                dir = -dir;
            }
            Ok(dir * step_size)
        }
        JointKind::Revolute => {
            // Top-down distance between grip and pivot.
            let radius = (grip.xy() - axis.pivot.xy()).norm();
            if radius < MIN_PLAN_RADIUS {
                return Err(PolicyError::DegenerateEstimate { radius });
            }
            let angle = step_size / radius;
            Ok(rotate_about_axis(grip, axis, angle) - grip)
        }
    }
}

/// Execute the blind initial pulls: `init_steps` short pulls along the
/// movable part's current face normal, sampling a cloud after every step.
/// The returned frame list starts with the closed-state frame. A slip during
/// init aborts with the error; the scene keeps the partially advanced state.
pub fn init_manipulation(
    scene: &mut ArticulatedScene,
    grasp: &mut GraspModel,
    config: &PolicyConfig,
    sensor: &SensorModel,
    frame_seed: &mut impl FnMut() -> u64,
) -> Result<Vec<PointCloud>, SimError> {
    let mut frames = vec![sample_cloud(scene, &sensor.with_seed(frame_seed()))];
    for _ in 0..config.init_steps {
        let delta = scene.handle_outward_normal() * (config.step_size * INIT_STEP_SCALE);
        apply_end_effector_motion(scene, grasp, delta)?;
        frames.push(sample_cloud(scene, &sensor.with_seed(frame_seed())));
    }
    Ok(frames)
}

/// Run one complete manipulation trial: initial displacement, then the
/// perceive-plan-act loop until the target is reached, the step budget is
/// exhausted, or the grasp is lost. All failures are encoded in the report.
pub fn run_trial(
    mut scene: ArticulatedScene,
    sensor: &SensorModel,
    policy: &PolicyConfig,
    pipeline: &PipelineParams,
    slip_tolerance: f64,
    seed: u64,
) -> TrialReport {
    assert!(policy.is_valid(), "invalid policy configuration");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut grasp = GraspModel::attach(&scene, slip_tolerance);
    let mut tracker = AxisTracker::new(scene.kind, *pipeline);
    let truth = scene.true_axis();

    let mut per_step: Vec<StepRecord> = Vec::new();
    let mut steps_used = 0usize;
    let mut grasp_lost = false;
    let mut frozen: Option<JointAxis> = None;
    let mut last_motion = Vec3::ZERO;
    let mut last_delta: Option<Vec3> = None;
    let mut degenerate_streak = 0usize;

    // Closed-state reference frame.
    if policy.mode != PolicyMode::GroundTruth {
        let frame = sample_cloud(&scene, &sensor.with_seed(rng.random()));
        let _ = tracker.push_frame(&frame);
    }

    while scene.joint_state < policy.target && steps_used < policy.max_steps {
        let in_init = steps_used < policy.init_steps;
        let guidance: Option<JointAxis> = if in_init {
            None
        } else {
            match policy.mode {
                PolicyMode::GroundTruth => Some(truth),
                PolicyMode::ClosedLoop => tracker.latest().map(|e| e.axis),
                PolicyMode::OpenLoop => {
                    if frozen.is_none() {
                        frozen = tracker.latest().map(|e| e.axis);
                    }
                    frozen
                }
            }
        };

        let delta = match guidance {
            // No estimate yet (or still in init): keep pulling gently along
            // the face normal.
            None => scene.handle_outward_normal() * (policy.step_size * INIT_STEP_SCALE),
            Some(axis) => {
                match plan_next_waypoint(&axis, grasp.grip_point, policy.step_size, last_motion) {
                    Ok(d) => {
                        degenerate_streak = 0;
                        d
                    }
                    Err(PolicyError::DegenerateEstimate { .. }) => {
                        // Reuse the previous direction once, then give up.
                        degenerate_streak += 1;
                        match (degenerate_streak, last_delta) {
                            (1, Some(d)) => d,
                            _ => break,
                        }
                    }
                }
            }
        };

        let outcome = apply_end_effector_motion(&mut scene, &mut grasp, delta);
        steps_used += 1;
        last_delta = Some(delta);
        let slipped = matches!(outcome, Err(SimError::GraspLost { .. }));
        if let Ok(m) = &outcome {
            last_motion = m.grip_delta;
        }
        per_step.push(StepRecord {
            step: steps_used,
            direction_error_deg: guidance.map(|a| direction_error_deg(&a, &truth)),
            pivot_error_m: guidance.map(|a| pivot_error_m(&a, &truth)),
            slipped,
        });
        if slipped {
            grasp_lost = true;
            break;
        }
        if scene.joint_state >= policy.target || steps_used >= policy.max_steps {
            break;
        }
        if policy.mode != PolicyMode::GroundTruth {
            let frame = sample_cloud(&scene, &sensor.with_seed(rng.random()));
            let _ = tracker.push_frame(&frame);
        }
    }

    TrialReport {
        success: scene.joint_state >= policy.target,
        steps_used,
        final_joint_state: scene.joint_state,
        per_step,
        seed,
        grasp_lost,
    }
}
