#ifndef ARTAXIS_H
#define ARTAXIS_H

/* Generated by cbindgen from artaxis-capi; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/*
 Joint kind selector: 0 prismatic, 1 revolute.
 */
#define ARTAXIS_KIND_PRISMATIC 0

/*
 Joint kind selector: 0 prismatic, 1 revolute.
 */
#define ARTAXIS_KIND_REVOLUTE 1

/*
 Status code for every fallible call.
 */
enum ArtaxisStatus
#ifdef __cplusplus
  : int32_t
#endif // __cplusplus
 {
  ARTAXIS_STATUS_OK = 0,
  ARTAXIS_STATUS_NULL_POINTER = 1,
  ARTAXIS_STATUS_INVALID_ARGUMENT = 2,
  /*
   Too few points or a collinear projection; no box can be fitted.
   */
  ARTAXIS_STATUS_DEGENERATE_CLOUD = 3,
  /*
   Displacement between the two frames is below the gate.
   */
  ARTAXIS_STATUS_INSUFFICIENT_MOTION = 4,
  /*
   Rotation between the two frames is too small to intersect midlines.
   */
  ARTAXIS_STATUS_DEGENERATE_ROTATION = 5,
  /*
   The tracker has not produced an estimate yet.
   */
  ARTAXIS_STATUS_NO_ESTIMATE = 6,
};
#ifndef __cplusplus
typedef int32_t ArtaxisStatus;
#endif // __cplusplus

/*
 Opaque incremental tracker handle.
 */
typedef struct ArtaxisTracker ArtaxisTracker;

/*
 Pipeline parameters for a tracker. Obtain defaults from
 `artaxis_config_default` and override as needed.
 */
typedef struct ArtaxisConfig {
  /*
   Outlier-filter neighborhood radius, meters.
   */
  double filter_radius;
  /*
   Outlier-filter minimum neighbor count (>= 1).
   */
  uint32_t filter_min_neighbors;
  /*
   Body-box inflation before subtraction, meters.
   */
  double extraction_margin;
  /*
   Second-pass filter applied to the motion part.
   */
  double refilter_radius;
  uint32_t refilter_min_neighbors;
  /*
   Maximum estimation window length, frames.
   */
  uint32_t max_window;
  /*
   Displacement gate for prismatic pairs, meters.
   */
  double min_displacement;
  /*
   Midline-angle gate for revolute pairs, radians.
   */
  double min_rotation;
  /*
   Radius for largest-cluster selection of the motion part; <= 0
   disables cluster selection.
   */
  double cluster_radius;
  /*
   Motion parts with fewer points are ignored.
   */
  uint32_t min_motion_points;
  /*
   Motion parts whose box is shorter than this are ignored, meters.
   */
  double min_motion_extent;
} ArtaxisConfig;

/*
 An estimated joint axis.
 */
typedef struct ArtaxisAxis {
  /*
   0 prismatic, 1 revolute.
   */
  int32_t kind;
  /*
   Point on the axis line, meters.
   */
  double pivot[3];
  /*
   Unit direction.
   */
  double direction[3];
  /*
   1 when the estimate came from a near-square rectangle.
   */
  uint8_t low_confidence;
  /*
   Frame window the estimate covers.
   */
  uint32_t window_start;
  uint32_t window_end;
} ArtaxisAxis;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Write the default pipeline configuration into `out`.

 # Safety
 `out` must point to writable `ArtaxisConfig` storage.
 */
ArtaxisStatus artaxis_config_default(struct ArtaxisConfig *out);

/*
 Create a tracker for the given joint kind (0 prismatic, 1 revolute) and
 configuration. Returns null on an invalid kind, null config, or invalid
 parameter values. Free with `artaxis_tracker_free`.

 # Safety
 `config` must be null or point to a valid `ArtaxisConfig`.
 */
struct ArtaxisTracker *artaxis_tracker_new(int32_t kind, const struct ArtaxisConfig *config);

/*
 Destroy a tracker created by `artaxis_tracker_new`. Null is a no-op.

 # Safety
 `tracker` must be null or a pointer returned by `artaxis_tracker_new`
 that has not yet been freed.
 */
void artaxis_tracker_free(struct ArtaxisTracker *tracker);

/*
 Push one segmented object frame as `n_points` interleaved xyz doubles.
 The first frame becomes the body reference; later frames update the
 estimate when their motion part passes the gates. Skipped frames still
 return `Ok`.

 # Safety
 `tracker` must be a live tracker pointer; `xyz` must point to
 `3 * n_points` readable doubles.
 */
ArtaxisStatus artaxis_tracker_push_frame(struct ArtaxisTracker *tracker,
                                         const double *xyz,
                                         uintptr_t n_points);

/*
 Number of frames pushed so far.

 # Safety
 `tracker` must be a live tracker pointer.
 */
uintptr_t artaxis_tracker_frame_count(const struct ArtaxisTracker *tracker);

/*
 Number of estimates produced so far.

 # Safety
 `tracker` must be a live tracker pointer.
 */
uintptr_t artaxis_tracker_estimate_count(const struct ArtaxisTracker *tracker);

/*
 Copy the current (most recent) axis estimate into `out`.

 # Safety
 `tracker` must be a live tracker pointer and `out` writable.
 */
ArtaxisStatus artaxis_tracker_latest_axis(const struct ArtaxisTracker *tracker,
                                          struct ArtaxisAxis *out);

/*
 One-shot axis estimate from two motion-part clouds (start and end of a
 displacement), without tracker state. `cluster_radius > 0` keeps only the
 largest connected cluster of each cloud before fitting.

 # Safety
 `st_xyz`/`ed_xyz` must point to `3 * st_len` / `3 * ed_len` readable
 doubles; `out` must be writable.
 */
ArtaxisStatus artaxis_estimate_pair(int32_t kind,
                                    const double *st_xyz,
                                    uintptr_t st_len,
                                    const double *ed_xyz,
                                    uintptr_t ed_len,
                                    double cluster_radius,
                                    struct ArtaxisAxis *out);

/*
 Library version as a static NUL-terminated string.
 */
const char *artaxis_version(void);

#ifdef __cplusplus
} // extern "C"
#endif // __cplusplus

#endif /* ARTAXIS_H */
