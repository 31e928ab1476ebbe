//! C ABI for the artaxis estimation pipeline.
//!
//! The surface mirrors how another process would consume the pipeline: an
//! opaque tracker handle fed with raw interleaved `x y z` frames, plain
//! structs for results, and integer status codes for every error path.
//! `include/artaxis.h` is generated by cbindgen at build time.

use std::os::raw::c_char;

use artaxis::axis::{estimate_prismatic, estimate_revolute, AxisEstimate, WindowPolicy};
use artaxis::cloud::{refine_body_obb, FilterParams, MotionExtractionParams};
use artaxis::geom::{JointKind, OrientedBoundingBox, PointCloud, Vec3};
use artaxis::obb::fit_obb;
use artaxis::pipeline::{AxisTracker, PipelineParams};

/// Status code for every fallible call.
#[repr(i32)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArtaxisStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    /// Too few points or a collinear projection; no box can be fitted.
    DegenerateCloud = 3,
    /// Displacement between the two frames is below the gate.
    InsufficientMotion = 4,
    /// Rotation between the two frames is too small to intersect midlines.
    DegenerateRotation = 5,
    /// The tracker has not produced an estimate yet.
    NoEstimate = 6,
}

/// Joint kind selector: 0 prismatic, 1 revolute.
pub const ARTAXIS_KIND_PRISMATIC: i32 = 0;
/// Joint kind selector: 0 prismatic, 1 revolute.
pub const ARTAXIS_KIND_REVOLUTE: i32 = 1;

/// An estimated joint axis.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct ArtaxisAxis {
    /// 0 prismatic, 1 revolute.
    pub kind: i32,
    /// Point on the axis line, meters.
    pub pivot: [f64; 3],
    /// Unit direction.
    pub direction: [f64; 3],
    /// 1 when the estimate came from a near-square rectangle.
    pub low_confidence: u8,
    /// Frame window the estimate covers.
    pub window_start: u32,
    pub window_end: u32,
}

/// Pipeline parameters for a tracker. Obtain defaults from
/// `artaxis_config_default` and override as needed.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct ArtaxisConfig {
    /// Outlier-filter neighborhood radius, meters.
    pub filter_radius: f64,
    /// Outlier-filter minimum neighbor count (>= 1).
    pub filter_min_neighbors: u32,
    /// Body-box inflation before subtraction, meters.
    pub extraction_margin: f64,
    /// Second-pass filter applied to the motion part.
    pub refilter_radius: f64,
    pub refilter_min_neighbors: u32,
    /// Maximum estimation window length, frames.
    pub max_window: u32,
    /// Displacement gate for prismatic pairs, meters.
    pub min_displacement: f64,
    /// Midline-angle gate for revolute pairs, radians.
    pub min_rotation: f64,
    /// Radius for largest-cluster selection of the motion part; <= 0
    /// disables cluster selection.
    pub cluster_radius: f64,
    /// Motion parts with fewer points are ignored.
    pub min_motion_points: u32,
    /// Motion parts whose box is shorter than this are ignored, meters.
    pub min_motion_extent: f64,
}

impl From<ArtaxisConfig> for PipelineParams {
    fn from(c: ArtaxisConfig) -> Self {
        PipelineParams {
            filter: FilterParams::new(c.filter_radius, c.filter_min_neighbors as usize),
            extraction: MotionExtractionParams {
                margin: c.extraction_margin,
                refilter: FilterParams::new(c.refilter_radius, c.refilter_min_neighbors as usize),
            },
            window: WindowPolicy {
                max_window: c.max_window as usize,
                min_displacement: c.min_displacement,
                min_rotation: c.min_rotation,
                cluster_radius: (c.cluster_radius > 0.0).then_some(c.cluster_radius),
            },
            min_motion_points: c.min_motion_points as usize,
            min_motion_extent: c.min_motion_extent,
        }
    }
}

/// Opaque incremental tracker handle.
pub struct ArtaxisTracker {
    inner: AxisTracker,
}

fn kind_from_i32(kind: i32) -> Option<JointKind> {
    match kind {
        ARTAXIS_KIND_PRISMATIC => Some(JointKind::Prismatic),
        ARTAXIS_KIND_REVOLUTE => Some(JointKind::Revolute),
        _ => None,
    }
}

fn axis_out(est: &AxisEstimate) -> ArtaxisAxis {
    ArtaxisAxis {
        kind: match est.axis.kind {
            JointKind::Prismatic => ARTAXIS_KIND_PRISMATIC,
            JointKind::Revolute => ARTAXIS_KIND_REVOLUTE,
        },
        pivot: [est.axis.pivot.x, est.axis.pivot.y, est.axis.pivot.z],
        direction: [est.axis.direction.x, est.axis.direction.y, est.axis.direction.z],
        low_confidence: est.low_confidence as u8,
        window_start: est.window.start as u32,
        window_end: est.window.end as u32,
    }
}

/// Build a cloud from `n` interleaved xyz triples.
///
/// # Safety
/// `xyz` must point to `3 * n` readable doubles.
unsafe fn cloud_from_raw(xyz: *const f64, n: usize) -> PointCloud {
    let raw = std::slice::from_raw_parts(xyz, 3 * n);
    let points = raw.chunks_exact(3).map(|c| Vec3::new(c[0], c[1], c[2])).collect();
    PointCloud::new(points)
}

/// Write the default pipeline configuration into `out`.
///
/// # Safety
/// `out` must point to writable `ArtaxisConfig` storage.
#[no_mangle]
pub unsafe extern "C" fn artaxis_config_default(out: *mut ArtaxisConfig) -> ArtaxisStatus {
    if out.is_null() {
        return ArtaxisStatus::NullPointer;
    }
    let p = PipelineParams::default();
    *out = ArtaxisConfig {
        filter_radius: p.filter.radius,
        filter_min_neighbors: p.filter.min_neighbors as u32,
        extraction_margin: p.extraction.margin,
        refilter_radius: p.extraction.refilter.radius,
        refilter_min_neighbors: p.extraction.refilter.min_neighbors as u32,
        max_window: p.window.max_window as u32,
        min_displacement: p.window.min_displacement,
        min_rotation: p.window.min_rotation,
        cluster_radius: p.window.cluster_radius.unwrap_or(0.0),
        min_motion_points: p.min_motion_points as u32,
        min_motion_extent: p.min_motion_extent,
    };
    ArtaxisStatus::Ok
}

/// Create a tracker for the given joint kind (0 prismatic, 1 revolute) and
/// configuration. Returns null on an invalid kind, null config, or invalid
/// parameter values. Free with `artaxis_tracker_free`.
///
/// # Safety
/// `config` must be null or point to a valid `ArtaxisConfig`.
#[no_mangle]
pub unsafe extern "C" fn artaxis_tracker_new(
    kind: i32,
    config: *const ArtaxisConfig,
) -> *mut ArtaxisTracker {
    let Some(kind) = kind_from_i32(kind) else {
        return std::ptr::null_mut();
    };
    if config.is_null() {
        return std::ptr::null_mut();
    }
    let params: PipelineParams = (*config).into();
    if !params.filter.is_valid() || !params.extraction.refilter.is_valid() {
        return std::ptr::null_mut();
    }
    Box::into_raw(Box::new(ArtaxisTracker { inner: AxisTracker::new(kind, params) }))
}

/// Destroy a tracker created by `artaxis_tracker_new`. Null is a no-op.
///
/// # Safety
/// `tracker` must be null or a pointer returned by `artaxis_tracker_new`
/// that has not yet been freed.
#[no_mangle]
pub unsafe extern "C" fn artaxis_tracker_free(tracker: *mut ArtaxisTracker) {
    if !tracker.is_null() {
        drop(Box::from_raw(tracker));
    }
}

/// Push one segmented object frame as `n_points` interleaved xyz doubles.
/// The first frame becomes the body reference; later frames update the
/// estimate when their motion part passes the gates. Skipped frames still
/// return `Ok`.
///
/// # Safety
/// `tracker` must be a live tracker pointer; `xyz` must point to
/// `3 * n_points` readable doubles.
#[no_mangle]
pub unsafe extern "C" fn artaxis_tracker_push_frame(
    tracker: *mut ArtaxisTracker,
    xyz: *const f64,
    n_points: usize,
) -> ArtaxisStatus {
    if tracker.is_null() || (xyz.is_null() && n_points > 0) {
        return ArtaxisStatus::NullPointer;
    }
    let cloud = cloud_from_raw(xyz, n_points);
    match (*tracker).inner.push_frame(&cloud) {
        Ok(_) => ArtaxisStatus::Ok,
        Err(_) => ArtaxisStatus::DegenerateCloud,
    }
}

/// Number of frames pushed so far.
///
/// # Safety
/// `tracker` must be a live tracker pointer.
#[no_mangle]
pub unsafe extern "C" fn artaxis_tracker_frame_count(tracker: *const ArtaxisTracker) -> usize {
    if tracker.is_null() {
        return 0;
    }
    (*tracker).inner.frame_count()
}

/// Number of estimates produced so far.
///
/// # Safety
/// `tracker` must be a live tracker pointer.
#[no_mangle]
pub unsafe extern "C" fn artaxis_tracker_estimate_count(tracker: *const ArtaxisTracker) -> usize {
    if tracker.is_null() {
        return 0;
    }
    (*tracker).inner.estimates().len()
}

/// Copy the current (most recent) axis estimate into `out`.
///
/// # Safety
/// `tracker` must be a live tracker pointer and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn artaxis_tracker_latest_axis(
    tracker: *const ArtaxisTracker,
    out: *mut ArtaxisAxis,
) -> ArtaxisStatus {
    if tracker.is_null() || out.is_null() {
        return ArtaxisStatus::NullPointer;
    }
    match (*tracker).inner.latest() {
        Some(est) => {
            *out = axis_out(est);
            ArtaxisStatus::Ok
        }
        None => ArtaxisStatus::NoEstimate,
    }
}

fn pair_obb(cloud: &PointCloud, cluster_radius: f64) -> Result<OrientedBoundingBox, ArtaxisStatus> {
    let fitted = if cluster_radius > 0.0 {
        refine_body_obb(cloud, &FilterParams::new(cluster_radius, 1))
    } else {
        fit_obb(cloud)
    };
    fitted.map_err(|_| ArtaxisStatus::DegenerateCloud)
}

/// One-shot axis estimate from two motion-part clouds (start and end of a
/// displacement), without tracker state. `cluster_radius > 0` keeps only the
/// largest connected cluster of each cloud before fitting.
///
/// # Safety
/// `st_xyz`/`ed_xyz` must point to `3 * st_len` / `3 * ed_len` readable
/// doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn artaxis_estimate_pair(
    kind: i32,
    st_xyz: *const f64,
    st_len: usize,
    ed_xyz: *const f64,
    ed_len: usize,
    cluster_radius: f64,
    out: *mut ArtaxisAxis,
) -> ArtaxisStatus {
    if st_xyz.is_null() || ed_xyz.is_null() || out.is_null() {
        return ArtaxisStatus::NullPointer;
    }
    let Some(kind) = kind_from_i32(kind) else {
        return ArtaxisStatus::InvalidArgument;
    };
    let st = cloud_from_raw(st_xyz, st_len);
    let ed = cloud_from_raw(ed_xyz, ed_len);
    let (st_obb, ed_obb) = match (pair_obb(&st, cluster_radius), pair_obb(&ed, cluster_radius)) {
        (Ok(a), Ok(b)) => (a, b),
        (Err(s), _) | (_, Err(s)) => return s,
    };
    let policy = WindowPolicy::default();
    let est = match kind {
        JointKind::Prismatic => estimate_prismatic(&st_obb, &ed_obb, policy.min_displacement)
            .map_err(|_| ArtaxisStatus::InsufficientMotion),
        JointKind::Revolute => estimate_revolute(&st_obb, &ed_obb, policy.min_rotation)
            .map_err(|_| ArtaxisStatus::DegenerateRotation),
    };
    match est {
        Ok(e) => {
            *out = axis_out(&e);
            ArtaxisStatus::Ok
        }
        Err(s) => s,
    }
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn artaxis_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}
