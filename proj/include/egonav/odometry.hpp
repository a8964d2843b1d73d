#pragma once

#include <array>
#include <cstdint>
#include <cstddef>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "egonav/actuation.hpp"
#include "egonav/egodata.hpp"
#include "egonav/environment.hpp"
#include "egonav/geometry.hpp"

namespace egonav {

enum class OdometerKind { kGroundTruth, kDeadReckoning, kCalibrated, kScanMatch };

std::string_view to_string(OdometerKind k);
OdometerKind parse_odometer_kind(std::string_view name);

/// Static action -> egomotion lookup (the commanded motion).
MotionDelta dead_reckon(Action a);

/// Per-action mean egomotion fitted on an egomotion dataset.
struct CalibratedModel {
    std::array<MotionDelta, 3> mean{};   // indexed by motion_index
    std::array<std::size_t, 3> count{};
    std::array<bool, 3> fallback{};      // true when the action had no samples

    const MotionDelta& lookup(Action a) const { return mean[motion_index(a)]; }

    std::string to_json() const;
    static CalibratedModel from_json(std::string_view text);
};

/// Sample mean of gt_delta per action; actions without samples fall back to dead-reckoning
/// and are flagged. Throws std::invalid_argument on an empty dataset.
CalibratedModel fit_calibrated(std::span<const EgomotionSample> dataset);

struct ScanMatchParams {
    double translation_window = 0.15;
    double rotation_window = 15.0 * kPi / 180.0;
    double coarse_translation_step = 0.03;
    double coarse_rotation_step = 3.0 * kPi / 180.0;
    double fine_translation_step = 0.005;
    double fine_rotation_step = 0.5 * kPi / 180.0;
    int max_refinements = 4;
    std::size_t min_points = 5;
    /// Upper bound on the points used while scoring the coarse grid.
    std::size_t coarse_point_budget = 45;
    /// Adjacent prev endpoints further apart than this are not joined into one surface.
    double max_gap = 0.35;
    /// Per-point distance saturation of the alignment cost.
    double outlier_distance = 0.2;
    /// Cell size of the distance field the lattice search reads.
    double field_resolution = 0.01;

    void validate() const;
};

/// Valid (non max-range) ray endpoints in the sensor frame.
std::vector<Point2> scan_points(const DepthScan& scan, const SensorConfig& cfg);

struct Segment {
    Point2 a;
    Point2 b;
};

/// The surface a scan saw: segments joining endpoints of adjacent valid rays that lie at
/// most `max_gap` apart. A valid ray with no joined neighbour becomes a zero-length segment.
std::vector<Segment> scan_surface(const DepthScan& scan, const SensorConfig& cfg, double max_gap);

/// Exact point-to-surface distance queries against fixed segments, bucketed on a uniform grid.
class SurfaceIndex {
public:
    explicit SurfaceIndex(std::vector<Segment> segments, double bucket_size = 0.1);

    bool empty() const { return segments_.empty(); }
    std::size_t size() const { return segments_.size(); }
    /// Distance to the nearest segment, saturated at `cap`; infinity when empty.
    double distance(const Point2& q, double cap = std::numeric_limits<double>::infinity()) const;

private:
    std::vector<Segment> segments_;
    double bucket_ = 0.1;
    double min_x_ = 0.0, min_z_ = 0.0;
    int cols_ = 0, rows_ = 0;
    std::vector<std::size_t> start_;  // CSR offsets, size cols*rows + 1
    std::vector<std::uint32_t> members_;
};

/// Mean distance from curr points, moved by `delta` into the prev frame, to the prev surface.
/// Each point's distance saturates at `cap`, so surfaces only one scan saw count as a constant.
double alignment_cost(const SurfaceIndex& prev, std::span<const Point2> curr, const MotionDelta& delta,
                      double cap = std::numeric_limits<double>::infinity());

struct ScanMatchResult {
    MotionDelta delta;
    double score = 0.0;  // infinity when the scans were degenerate
};

/// Coarse-to-fine grid search for the egomotion aligning curr onto prev, centred on seed.
ScanMatchResult scan_match(const DepthScan& prev, const DepthScan& curr, const MotionDelta& seed,
                           const ScanMatchParams& p, const SensorConfig& cfg);

/// Sum over components of the smooth-L1 (Huber-style) loss with threshold beta.
double smooth_l1(const MotionDelta& pred, const MotionDelta& truth, double beta = 1.0);

/// Mean smooth_l1 of a per-action predictor over a dataset.
double mean_smooth_l1(std::span<const EgomotionSample> dataset,
                      const std::function<MotionDelta(const EgomotionSample&)>& predictor);

inline Pose integrate(const Pose& estimate, const MotionDelta& delta) { return compose(estimate, delta); }

/// Re-expresses a goal given in the previous agent frame in the frame reached by delta.
inline Point2 update_relative_goal(const Point2& goal_in_prev, const MotionDelta& delta) {
    return inverse_transform_point(as_pose(delta), goal_in_prev);
}

/// One egomotion estimator, fixed for an episode.
class Odometer {
public:
    static Odometer ground_truth();
    static Odometer dead_reckoning();
    static Odometer calibrated(CalibratedModel model);
    static Odometer scan_matching(ScanMatchParams params, SensorConfig sensor);

    OdometerKind kind() const { return kind_; }

    /// Egomotion estimate for one action. `true_delta` is consulted only by the
    /// ground-truth kind (and is required for it).
    MotionDelta predict(Action a, const DepthScan& prev_scan, const DepthScan& curr_scan,
                        const std::optional<MotionDelta>& true_delta = std::nullopt) const;

private:
    OdometerKind kind_ = OdometerKind::kDeadReckoning;
    CalibratedModel model_{};
    ScanMatchParams params_{};
    SensorConfig sensor_{};
};

}  // namespace egonav
