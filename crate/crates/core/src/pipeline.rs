//! Incremental perception pipeline: feed segmented object clouds frame by
//! frame and keep a continuously refined joint-axis estimate.
//!
//! Frame 0 is the closed-state reference: it is filtered and its largest
//! connected cluster becomes the body bounding box. Every later frame is
//! filtered, the (inflated) body box is subtracted, and the surviving motion
//! part — if it is substantial enough — enters the sliding-window axis
//! estimator.

use serde::{Deserialize, Serialize};

use crate::axis::{estimate_from_window, motion_part_obb, AxisEstimate, WindowPolicy};
use crate::cloud::{
    extract_motion_part, filter_cloud, refine_body_obb, CloudError, FilterParams,
    MotionExtractionParams,
};
use crate::geom::{JointKind, OrientedBoundingBox, PointCloud};

/// Everything the perception side of a trial needs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineParams {
    pub filter: FilterParams,
    pub extraction: MotionExtractionParams,
    pub window: WindowPolicy,
    /// A motion part with fewer points than this is ignored for estimation
    /// (it is likely just the detached handle or residual noise).
    pub min_motion_points: usize,
    /// Minimum longer extent (full length, meters) of the motion-part box.
    /// Rejects tiny fragments whose midline direction is meaningless.
    pub min_motion_extent: f64,
}

impl Default for PipelineParams {
    fn default() -> Self {
        PipelineParams {
            filter: FilterParams::new(0.05, 5),
            extraction: MotionExtractionParams::default(),
            window: WindowPolicy::default(),
            min_motion_points: 30,
            min_motion_extent: 0.08,
        }
    }
}

/// What happened to one pushed frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FrameStatus {
    /// Frame 0: consumed as the body reference.
    BodyReference,
    /// A usable motion part was recorded; `estimated` tells whether a new
    /// axis estimate was produced from it.
    Tracked { estimated: bool },
    /// No point survived body-box subtraction (insufficient displacement).
    SkippedEmptyMotion,
    /// The motion part was too small or too short to be trusted.
    SkippedSmallMotion,
    /// The motion part's box could not be fitted.
    SkippedDegenerate,
}

impl FrameStatus {
    pub fn describe(&self) -> &'static str {
        match self {
            FrameStatus::BodyReference => "body reference",
            FrameStatus::Tracked { estimated: true } => "tracked, estimate updated",
            FrameStatus::Tracked { estimated: false } => "tracked, window gates not met",
            FrameStatus::SkippedEmptyMotion => "skipped: no motion part",
            FrameStatus::SkippedSmallMotion => "skipped: motion part too small",
            FrameStatus::SkippedDegenerate => "skipped: degenerate motion part",
        }
    }
}

/// Incremental axis estimator over a stream of segmented object clouds.
pub struct AxisTracker {
    kind: JointKind,
    params: PipelineParams,
    body_obb: Option<OrientedBoundingBox>,
    obbs: Vec<Option<OrientedBoundingBox>>,
    first_valid: Option<usize>,
    estimates: Vec<AxisEstimate>,
}

impl AxisTracker {
    pub fn new(kind: JointKind, params: PipelineParams) -> Self {
        AxisTracker {
            kind,
            params,
            body_obb: None,
            obbs: Vec::new(),
            first_valid: None,
            estimates: Vec::new(),
        }
    }

    pub fn kind(&self) -> JointKind {
        self.kind
    }

    pub fn body_obb(&self) -> Option<&OrientedBoundingBox> {
        self.body_obb.as_ref()
    }

    /// Number of frames pushed so far.
    pub fn frame_count(&self) -> usize {
        self.obbs.len()
    }

    pub fn estimates(&self) -> &[AxisEstimate] {
        &self.estimates
    }

    /// Current belief: the most recent estimate.
    pub fn latest(&self) -> Option<&AxisEstimate> {
        self.estimates.last()
    }

    /// Ingest the next frame. Fails only when the body reference frame is
    /// degenerate; everything else is reported through [`FrameStatus`].
    pub fn push_frame(&mut self, raw: &PointCloud) -> Result<FrameStatus, CloudError> {
        let filtered = filter_cloud(raw, &self.params.filter);
        if self.body_obb.is_none() {
            let body = refine_body_obb(&filtered, &self.params.filter)?;
            self.body_obb = Some(body);
            self.obbs.push(None);
            return Ok(FrameStatus::BodyReference);
        }
        let body = self.body_obb.as_ref().unwrap();

        let status = match extract_motion_part(&filtered, body, &self.params.extraction) {
            Err(CloudError::EmptyMotionPart) => {
                self.obbs.push(None);
                FrameStatus::SkippedEmptyMotion
            }
            Err(CloudError::DegenerateCloud) => {
                self.obbs.push(None);
                FrameStatus::SkippedDegenerate
            }
            Ok(motion) => {
                if motion.len() < self.params.min_motion_points {
                    self.obbs.push(None);
                    FrameStatus::SkippedSmallMotion
                } else {
                    match motion_part_obb(&motion, &self.params.window) {
                        None => {
                            self.obbs.push(None);
                            FrameStatus::SkippedDegenerate
                        }
                        Some(obb) => {
                            if 2.0 * obb.rect.half_long < self.params.min_motion_extent {
                                self.obbs.push(None);
                                FrameStatus::SkippedSmallMotion
                            } else {
                                self.obbs.push(Some(obb));
                                let k = self.obbs.len() - 1;
                                if self.first_valid.is_none() {
                                    self.first_valid = Some(k);
                                }
                                let estimated = if let Some(first) = self.first_valid {
                                    if k > first {
                                        match estimate_from_window(
                                            &self.obbs,
                                            first,
                                            k,
                                            self.kind,
                                            &self.params.window,
                                        ) {
                                            Some(est) => {
                                                self.estimates.push(est);
                                                true
                                            }
                                            None => false,
                                        }
                                    } else {
                                        false
                                    }
                                } else {
                                    false
                                };
                                FrameStatus::Tracked { estimated }
                            }
                        }
                    }
                }
            }
        };
        Ok(status)
    }
}
