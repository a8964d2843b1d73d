#pragma once

#include <cstdint>
#include <optional>
#include <queue>
#include <span>
#include <vector>

#include "egonav/actuation.hpp"
#include "egonav/environment.hpp"
#include "egonav/geometry.hpp"
#include "egonav/grid_search.hpp"

namespace egonav {

/// Hit-count occupancy map built from depth scans in the episode-start frame.
class BuiltMap {
public:
    /// Default geometry: 400 x 400 cells of 0.1 m centred on the frame origin.
    explicit BuiltMap(int width = 400, int height = 400, double resolution = 0.1,
                      std::optional<Point2> origin = std::nullopt, std::uint32_t obstacle_threshold = 3);

    int width() const { return width_; }
    int height() const { return height_; }
    double resolution() const { return resolution_; }
    const Point2& origin() const { return origin_; }
    std::uint32_t obstacle_threshold() const { return threshold_; }

    bool in_bounds(const Cell& c) const {
        return c.col >= 0 && c.row >= 0 && c.col < width_ && c.row < height_;
    }
    Cell cell_of(const Point2& p) const;
    Point2 cell_center(const Cell& c) const;

    std::uint32_t hits(const Cell& c) const { return counts_[index(c)]; }
    bool obstacle(const Cell& c) const { return in_bounds(c) && counts_[index(c)] >= threshold_; }

    /// Adds one hit; returns true when this hit made the cell cross the threshold.
    bool add_hit(const Cell& c);

private:
    std::size_t index(const Cell& c) const { return static_cast<std::size_t>(c.row) * width_ + c.col; }

    int width_;
    int height_;
    double resolution_;
    Point2 origin_;
    std::uint32_t threshold_;
    std::vector<std::uint32_t> counts_;
};

struct MapUpdateStats {
    std::size_t endpoints = 0;
    std::size_t dropped_out_of_bounds = 0;
    std::vector<Cell> new_obstacles;
};

/// Projects every ray with min_range < depth < max_range to its endpoint, moves it into the
/// map frame with est_pose, and adds one hit to the endpoint's cell.
MapUpdateStats update_map(BuiltMap& map, const DepthScan& scan, const Pose& est_pose, const SensorConfig& cfg);

/// Incremental shortest paths (D* Lite) on an 8-connected grid whose blocked cells change
/// over time. Costs follow edge_cost(), so results match dijkstra_field() on the same grid.
class DStarLite {
public:
    DStarLite(int width, int height);

    const BlockedGrid& grid() const { return grid_; }
    void set_blocked(const Cell& c, bool blocked);

    /// Shortest path start..goal (inclusive) or nullopt when unreachable.
    /// Throws std::out_of_range when start or goal is outside the grid.
    std::optional<std::vector<Cell>> plan(const Cell& start, const Cell& goal);

    /// Cost of the last planned start to the goal.
    GridCost start_cost() const;
    std::size_t expansions() const { return expansions_; }

private:
    struct Key {
        GridCost k1;
        GridCost k2;
        friend bool operator==(const Key&, const Key&) = default;
        friend auto operator<=>(const Key& a, const Key& b) {
            if (auto c = a.k1 <=> b.k1; c != 0) return c;
            return a.k2 <=> b.k2;
        }
    };
    struct Entry {
        Key key;
        std::size_t index;
        bool operator>(const Entry& o) const { return o.key < key; }
    };

    void reset(const Cell& start, const Cell& goal);
    Key calculate_key(std::size_t s) const;
    void update_vertex(std::size_t u);
    void compute_shortest_path();
    void push(std::size_t u);
    std::optional<Key> top_key();

    BlockedGrid grid_;
    std::vector<GridCost> g_;
    std::vector<GridCost> rhs_;
    std::vector<Key> queued_key_;
    std::vector<std::uint8_t> in_open_;
    std::priority_queue<Entry, std::vector<Entry>, std::greater<>> open_;
    std::vector<Cell> pending_;
    GridCost km_;
    std::optional<Cell> goal_;
    Cell start_;
    Cell last_start_;
    std::size_t expansions_ = 0;
};

/// First path point at least `min_distance` from the agent, else the last one.
Point2 select_waypoint(std::span<const Point2> path, const Pose& est_pose, double min_distance = 0.5);

struct ControllerConfig {
    double heading_tolerance = 15.0 * kPi / 180.0;
    double random_action_probability = 0.1;
    double stop_radius = 0.2;
};

/// Stop inside the stop radius; otherwise a uniformly random motion action with the
/// configured probability; otherwise forward when the waypoint bearing is within the
/// heading tolerance, else the turn that reduces the bearing error.
/// Draw order: one uniform real for the random branch, then one index if it fires.
Action controller_step(const Pose& est_pose, const Point2& waypoint, double est_goal_dist, Rng& rng,
                       const ControllerConfig& cfg = {});

struct ClassicConfig {
    int map_size = 400;
    double map_resolution = 0.1;
    std::uint32_t obstacle_threshold = 3;
    int inflation_cells = 1;
    double waypoint_distance = 0.5;
    ControllerConfig controller;
};

/// Map -> plan -> control loop driven by an external pose estimate. Positions are in the
/// episode-start frame, the frame the initial relative goal is expressed in.
class ClassicAgent {
public:
    ClassicAgent(const ClassicConfig& cfg, const SensorConfig& sensor, const Point2& goal_in_start_frame);

    Action act(const DepthScan& scan, const Pose& est_pose, double est_goal_dist, Rng& rng);

    const BuiltMap& map() const { return map_; }
    const std::vector<Point2>& last_path() const { return last_path_; }

private:
    void refresh_cell(const Cell& c);

    ClassicConfig cfg_;
    SensorConfig sensor_;
    Point2 goal_;
    BuiltMap map_;
    DStarLite planner_;
    std::vector<int> inflated_;  // obstacle count within the inflation window
    Cell goal_cell_;
    std::optional<Cell> start_cell_;
    std::vector<Point2> last_path_;
};

}  // namespace egonav
