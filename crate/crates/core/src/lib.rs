//! artaxis — closed-loop joint-axis estimation for articulated objects.
//!
//! The library implements the complete perception-action pipeline for
//! opening doors and drawers under axis guidance, plus the benchmark
//! infrastructure used to evaluate it:
//!
//! 1. **geom** – vectors, labeled point clouds, top-down rectangles,
//!    z-aligned oriented bounding boxes, joint axes.
//! 2. **cloud / obb** – radius outlier filtering with a spatial hash grid,
//!    radius-connectivity clustering, exact minimum-area bounding boxes via
//!    rotating calipers, motion-part extraction by box subtraction.
//! 3. **axis** – explicit prismatic/revolute axis computation from box
//!    pairs and the sliding-window refinement.
//! 4. **sim** – deterministic cabinet simulator: surface-sampled labeled
//!    clouds, constraint-projection dynamics, grasp slip.
//! 5. **policy** – the closed-loop manipulation policy, its frozen-estimate
//!    baseline, and a ground-truth sanity mode.
//! 6. **pipeline** – the incremental tracker tying filtering, subtraction,
//!    and estimation together.
//! 7. **bench / config / ply** – batch experiments, TOML configuration,
//!    CSV reporting, ASCII PLY ingestion for offline sequences.

pub mod axis;
pub mod bench;
pub mod cloud;
pub mod config;
pub mod geom;
pub mod obb;
pub mod pipeline;
pub mod ply;
pub mod policy;
pub mod sim;

pub use axis::{
    estimate_prismatic, estimate_revolute, refine_axis, AxisError, AxisEstimate, FrameWindow,
    WindowPolicy,
};
pub use cloud::{
    cluster_by_radius, extract_motion_part, filter_cloud, neighbor_count, refine_body_obb,
    CloudError, FilterParams, MotionExtractionParams, SpatialGrid,
};
pub use config::{default_targets, ConfigError, ExperimentConfig, TaskKind};
pub use geom::{
    line_intersection_2d, rotate_about_axis, AxisEvidence, JointAxis, JointKind, Line2,
    OrientedBoundingBox, PartLabel, PointCloud, Rect2, Vec2, Vec3,
};
pub use obb::{convex_hull, fit_obb, min_area_rect};
pub use pipeline::{AxisTracker, FrameStatus, PipelineParams};
pub use policy::{
    init_manipulation, plan_next_waypoint, run_trial, PolicyConfig, PolicyError, PolicyMode,
    StepRecord, TrialReport,
};
pub use sim::{
    apply_end_effector_motion, random_door, random_drawer, sample_cloud, Aabb, ArticulatedScene,
    BoxDims, GraspModel, RealizedMotion, SceneRanges, ScenePose, SensorModel, SimError,
};
