#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "egonav/geometry.hpp"
#include "egonav/grid_search.hpp"

namespace egonav {

class MapParseError : public std::runtime_error {
public:
    MapParseError(int line, const std::string& what, const std::string& source = "map")
        : std::runtime_error(source + " line " + std::to_string(line) + ": " + what), line_(line), detail_(what) {}
    int line() const { return line_; }
    const std::string& detail() const { return detail_; }

private:
    int line_;
    std::string detail_;
};

/// Ground-truth occupancy grid. Cell (col, row) covers
/// x in [origin.x + col*res, origin.x + (col+1)*res) and likewise z for row.
/// The first body row of a map file is row 0. Anything outside the grid is occupied.
class OccupancyGrid {
public:
    OccupancyGrid(int width, int height, double resolution, Point2 origin = {});

    int width() const { return cells_.width(); }
    int height() const { return cells_.height(); }
    double resolution() const { return resolution_; }
    const Point2& origin() const { return origin_; }

    bool occupied(const Cell& c) const { return cells_.blocked(c); }
    void set_occupied(const Cell& c, bool value) { cells_.set(c, value); }
    bool in_bounds(const Cell& c) const { return cells_.in_bounds(c); }

    Cell cell_of(const Point2& p) const;
    Point2 cell_center(const Cell& c) const;
    bool occupied_at(const Point2& p) const { return occupied(cell_of(p)); }

    std::size_t obstacle_count() const;
    const BlockedGrid& blocked_grid() const { return cells_; }

private:
    BlockedGrid cells_;
    double resolution_;
    Point2 origin_;
};

/// Parses the text map format: "resolution <float>" then equal-length rows of '#' / '.'.
OccupancyGrid parse_map(std::string_view text);
OccupancyGrid load_map(const std::filesystem::path& path);

struct SensorConfig {
    int num_rays = 91;
    double fov = 1.5 * kPi;
    double max_range = 4.0;
    double min_range = 0.1;

    void validate() const;
    /// Bearing of ray i relative to the agent heading.
    double ray_bearing(int i) const { return fov * (static_cast<double>(i) / (num_rays - 1) - 0.5); }
};

struct DepthScan {
    std::vector<double> depths;

    friend bool operator==(const DepthScan&, const DepthScan&) = default;
};

/// Exact grid traversal along each ray to the first occupied cell boundary.
/// Throws std::invalid_argument if the pose lies in an occupied cell.
DepthScan raycast(const OccupancyGrid& grid, const Pose& pose, const SensorConfig& cfg);

struct KinematicsConfig {
    int substeps = 10;
    double agent_radius = 0.1;
};

/// True when a disc of the given radius at p overlaps no occupied cell.
bool is_free(const OccupancyGrid& grid, const Point2& p, double radius);

struct KinematicStep {
    Pose pose;
    bool collided = false;
};

/// Executes a motion delta with sliding collisions: yaw is applied in full, translation
/// is split into substeps and any world-axis component blocked in a substep is dropped.
KinematicStep step_kinematics(const OccupancyGrid& grid, const Pose& pose, const MotionDelta& delta,
                              const KinematicsConfig& cfg = {});

/// Nearest free cell to p (p's own cell if free), by Euclidean distance to cell centres.
std::optional<Cell> snap_to_free(const OccupancyGrid& grid, const Point2& p);

/// True when the straight segment a-b crosses no occupied cell. Symmetric in a, b.
bool line_of_sight(const OccupancyGrid& grid, const Point2& a, const Point2& b);

/// Geodesic distances to one fixed target. The distance from a point is the
/// Euclidean length when the segment to the target is unobstructed, otherwise the
/// shortest 8-connected path between the snapped cells. nullopt means unreachable.
class GeodesicField {
public:
    GeodesicField(const OccupancyGrid& grid, const Point2& target);

    std::optional<double> distance_from(const Point2& p) const;
    const Point2& target() const { return target_; }

private:
    const OccupancyGrid* grid_;
    Point2 target_;
    std::optional<Cell> target_cell_;
    std::vector<GridCost> field_;
};

std::optional<double> geodesic_distance(const OccupancyGrid& grid, const Point2& a, const Point2& b);

/// Pure cell-path length between the snapped cells, without the line-of-sight shortcut.
std::optional<double> grid_path_distance(const OccupancyGrid& grid, const Point2& a, const Point2& b);

}  // namespace egonav
