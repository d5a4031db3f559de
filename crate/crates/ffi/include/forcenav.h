#ifndef FORCENAV_H
#define FORCENAV_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

typedef enum {
  FORCENAV_SIDE_LEFT = 0,
  FORCENAV_SIDE_RIGHT = 1,
} ForcenavSide;

typedef enum {
  FORCENAV_STATUS_OK = 0,
  FORCENAV_STATUS_NULL_POINTER = 1,
  FORCENAV_STATUS_INVALID_ARGUMENT = 2,
  FORCENAV_STATUS_NOT_TARED = 3,
  FORCENAV_STATUS_NO_PATH = 4,
  FORCENAV_STATUS_OUT_OF_BOUNDS = 5,
  FORCENAV_STATUS_PARSE = 6,
  FORCENAV_STATUS_IO = 7,
  FORCENAV_STATUS_BUFFER_TOO_SMALL = 8,
  FORCENAV_STATUS_PANIC = 99,
} ForcenavStatus;

/**
 * Inflated costmap ready for planning.
 */
typedef struct ForcenavCostmap ForcenavCostmap;

/**
 * Dual-shoulder force intent pipeline.
 */
typedef struct ForcenavIntent ForcenavIntent;

/**
 * Waypoints returned by [`forcenav_plan`].
 */
typedef struct ForcenavPath ForcenavPath;

typedef struct {
  double dead_zone_n;
  double saturation_n;
  double max_speed_mps;
  double smooth_old;
  double smooth_new;
  double rate_hz;
  bool continuous_deadzone;
} ForcenavIntentConfig;

typedef struct {
  double x;
  double y;
  double z;
} ForcenavVec3;

typedef struct {
  ForcenavVec3 force;
  ForcenavVec3 torque;
} ForcenavWrench;

typedef struct {
  double vx;
  double vy;
  double omega;
} ForcenavTwist;

typedef struct {
  double min_range_m;
  uintptr_t decimation;
  uintptr_t outlier_window;
  double outlier_jump_m;
} ForcenavFilterConfig;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *forcenav_version(void);

/**
 * Message for the last failed call on this thread, or NULL. The pointer
 * stays valid until the next call into the library from this thread.
 */
const char *forcenav_last_error(void);

ForcenavStatus forcenav_intent_config_default(ForcenavIntentConfig *out);

/**
 * Creates a pipeline with the default shoulder frames. `cfg` may be NULL
 * for the default configuration.
 */
ForcenavStatus forcenav_intent_new(const ForcenavIntentConfig *cfg, ForcenavIntent **out);

void forcenav_intent_free(ForcenavIntent *handle);

/**
 * Stores `raw` as the zero reading of one shoulder.
 */
ForcenavStatus forcenav_intent_tare(ForcenavIntent *handle,
                                    ForcenavSide side,
                                    const ForcenavWrench *raw,
                                    double timestamp);

/**
 * One pipeline tick from raw sensor-frame readings; writes the smoothed
 * base velocity command to `out`.
 */
ForcenavStatus forcenav_intent_tick(ForcenavIntent *handle,
                                    const ForcenavWrench *left,
                                    const ForcenavWrench *right,
                                    double timestamp,
                                    ForcenavTwist *out);

ForcenavStatus forcenav_intent_reset(ForcenavIntent *handle);

/**
 * Stateless force-to-speed mapping of a base-frame force.
 */
ForcenavStatus forcenav_scale_force(const ForcenavIntentConfig *cfg,
                                    ForcenavVec3 force,
                                    ForcenavTwist *out);

/**
 * Loads a grid file and inflates it.
 */
ForcenavStatus forcenav_costmap_load(const char *path,
                                     double footprint_m,
                                     double inflation_m,
                                     ForcenavCostmap **out);

/**
 * Builds a costmap from a row-major cell array (row 0 at the bottom):
 * 0 free, 1 occupied, anything else unknown.
 */
ForcenavStatus forcenav_costmap_from_cells(uintptr_t width,
                                           uintptr_t height,
                                           double resolution,
                                           double origin_x,
                                           double origin_y,
                                           const uint8_t *cells,
                                           double footprint_m,
                                           double inflation_m,
                                           ForcenavCostmap **out);

void forcenav_costmap_free(ForcenavCostmap *handle);

/**
 * Cost (0..=254, 255 lethal) of the cell containing `(x, y)`.
 */
ForcenavStatus forcenav_costmap_cost(const ForcenavCostmap *handle,
                                     double x,
                                     double y,
                                     uint8_t *out);

/**
 * Plans from `(sx, sy)` to `(gx, gy)` with the default Dijkstra settings.
 */
ForcenavStatus forcenav_plan(const ForcenavCostmap *handle,
                             double sx,
                             double sy,
                             double gx,
                             double gy,
                             ForcenavPath **out);

void forcenav_path_free(ForcenavPath *path);

/**
 * Number of waypoints; 0 for NULL.
 */
uintptr_t forcenav_path_len(const ForcenavPath *path);

/**
 * Accumulated edge cost in cell units.
 */
double forcenav_path_cost(const ForcenavPath *path);

ForcenavStatus forcenav_path_point(const ForcenavPath *path, uintptr_t index, double *x, double *y);

ForcenavStatus forcenav_filter_config_default(ForcenavFilterConfig *out);

/**
 * Filters a scan of `n` rays. Rays with `hits[i] == false` are no-returns.
 * Writes up to `capacity` rays to `out_ranges`/`out_hits` and the filtered
 * count to `out_len`; returns `BUFFER_TOO_SMALL` (with `out_len` set) if
 * `capacity` is too small.
 */
ForcenavStatus forcenav_filter_scan(const ForcenavFilterConfig *cfg,
                                    double angle_min,
                                    double angle_increment,
                                    double range_max,
                                    const double *ranges,
                                    const bool *hits,
                                    uintptr_t n,
                                    double *out_ranges,
                                    bool *out_hits,
                                    uintptr_t capacity,
                                    uintptr_t *out_len);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* FORCENAV_H */
