#include "egonav/classic_nav.hpp"

#include <algorithm>
#include <stdexcept>

namespace egonav {

namespace {
// Ray endpoints sit exactly on an obstacle-cell boundary; pushing them slightly
// along the ray puts them inside the struck cell.
constexpr double kEndpointNudge = 1e-6;
}  // namespace

BuiltMap::BuiltMap(int width, int height, double resolution, std::optional<Point2> origin,
                   std::uint32_t obstacle_threshold)
    : width_(width),
      height_(height),
      resolution_(resolution),
      origin_(origin.value_or(Point2{-0.5 * width * resolution, -0.5 * height * resolution})),
      threshold_(obstacle_threshold),
      counts_(static_cast<std::size_t>(width) * height, 0) {
    if (width < 1 || height < 1 || !(resolution > 0.0)) throw std::invalid_argument("invalid built-map geometry");
    if (obstacle_threshold < 1) throw std::invalid_argument("obstacle threshold must be >= 1");
}

Cell BuiltMap::cell_of(const Point2& p) const {
    return {static_cast<int>(std::floor((p.x - origin_.x) / resolution_)),
            static_cast<int>(std::floor((p.z - origin_.z) / resolution_))};
}

Point2 BuiltMap::cell_center(const Cell& c) const {
    return {origin_.x + (c.col + 0.5) * resolution_, origin_.z + (c.row + 0.5) * resolution_};
}

bool BuiltMap::add_hit(const Cell& c) {
    std::uint32_t& n = counts_[index(c)];
    ++n;
    return n == threshold_;
}

MapUpdateStats update_map(BuiltMap& map, const DepthScan& scan, const Pose& est_pose, const SensorConfig& cfg) {
    if (scan.depths.size() != static_cast<std::size_t>(cfg.num_rays)) {
        throw std::invalid_argument("scan length does not match sensor config");
    }
    MapUpdateStats stats;
    for (int i = 0; i < cfg.num_rays; ++i) {
        const double d = scan.depths[static_cast<std::size_t>(i)];
        if (!(d > cfg.min_range && d < cfg.max_range)) continue;
        const double b = cfg.ray_bearing(i);
        const double r = d + kEndpointNudge;
        const Point2 world = transform_point(est_pose, {r * std::sin(b), r * std::cos(b)});
        const Cell c = map.cell_of(world);
        if (!map.in_bounds(c)) {
            ++stats.dropped_out_of_bounds;
            continue;
        }
        ++stats.endpoints;
        if (map.add_hit(c)) stats.new_obstacles.push_back(c);
    }
    return stats;
}

DStarLite::DStarLite(int width, int height)
    : grid_(width, height, false),
      g_(grid_.width() * static_cast<std::size_t>(grid_.height()), GridCost::infinity()),
      rhs_(g_.size(), GridCost::infinity()),
      queued_key_(g_.size()),
      in_open_(g_.size(), 0) {}

void DStarLite::set_blocked(const Cell& c, bool blocked) {
    if (grid_.blocked(c) == blocked) return;
    grid_.set(c, blocked);
    if (goal_) pending_.push_back(c);
}

void DStarLite::reset(const Cell& start, const Cell& goal) {
    std::fill(g_.begin(), g_.end(), GridCost::infinity());
    std::fill(rhs_.begin(), rhs_.end(), GridCost::infinity());
    std::fill(in_open_.begin(), in_open_.end(), 0);
    open_ = {};
    pending_.clear();
    km_ = GridCost{};
    goal_ = goal;
    start_ = last_start_ = start;
    const std::size_t gi = grid_.index(goal);
    rhs_[gi] = GridCost{};
    push(gi);
}

DStarLite::Key DStarLite::calculate_key(std::size_t s) const {
    const GridCost m = std::min(g_[s], rhs_[s]);
    return {m + octile_distance(start_, grid_.cell_at(s)) + km_, m};
}

void DStarLite::push(std::size_t u) {
    const Key k = calculate_key(u);
    queued_key_[u] = k;
    in_open_[u] = 1;
    open_.push({k, u});
}

std::optional<DStarLite::Key> DStarLite::top_key() {
    while (!open_.empty()) {
        const Entry& top = open_.top();
        if (in_open_[top.index] && queued_key_[top.index] == top.key) return top.key;
        open_.pop();  // stale
    }
    return std::nullopt;
}

void DStarLite::update_vertex(std::size_t u) {
    const Cell uc = grid_.cell_at(u);
    if (!(uc == *goal_)) {
        GridCost best = GridCost::infinity();
        for (const Cell& off : kNeighbourOffsets) {
            const Cell v{uc.col + off.col, uc.row + off.row};
            const GridCost w = edge_cost(grid_, uc, v);
            if (w.is_infinite()) continue;
            best = std::min(best, w + g_[grid_.index(v)]);
        }
        rhs_[u] = best;
    }
    in_open_[u] = 0;
    if (!(g_[u] == rhs_[u])) push(u);
}

void DStarLite::compute_shortest_path() {
    const std::size_t si = grid_.index(start_);
    while (true) {
        const std::optional<Key> top = top_key();
        if (!top) break;
        if (!(*top < calculate_key(si)) && rhs_[si] == g_[si]) break;
        const std::size_t u = open_.top().index;
        open_.pop();
        in_open_[u] = 0;
        ++expansions_;
        const Key k_new = calculate_key(u);
        const Cell uc = grid_.cell_at(u);
        if (*top < k_new) {
            push(u);
        } else if (g_[u] > rhs_[u]) {
            g_[u] = rhs_[u];
            for (const Cell& off : kNeighbourOffsets) {
                const Cell v{uc.col + off.col, uc.row + off.row};
                if (grid_.in_bounds(v)) update_vertex(grid_.index(v));
            }
        } else {
            g_[u] = GridCost::infinity();
            update_vertex(u);
            for (const Cell& off : kNeighbourOffsets) {
                const Cell v{uc.col + off.col, uc.row + off.row};
                if (grid_.in_bounds(v)) update_vertex(grid_.index(v));
            }
        }
    }
}

std::optional<std::vector<Cell>> DStarLite::plan(const Cell& start, const Cell& goal) {
    if (!grid_.in_bounds(start) || !grid_.in_bounds(goal)) throw std::out_of_range("plan endpoints outside grid");
    if (!goal_ || !(*goal_ == goal)) {
        reset(start, goal);
    } else {
        if (!(start == last_start_)) {
            km_ = km_ + octile_distance(last_start_, start);
            last_start_ = start;
        }
        start_ = start;
        // A changed cell alters its own edges and the diagonal edges cutting its corners,
        // all of which touch the cell or one of its neighbours.
        std::vector<Cell> changed;
        changed.swap(pending_);
        for (const Cell& c : changed) {
            for (int dr = -1; dr <= 1; ++dr) {
                for (int dc = -1; dc <= 1; ++dc) {
                    const Cell v{c.col + dc, c.row + dr};
                    if (grid_.in_bounds(v)) update_vertex(grid_.index(v));
                }
            }
        }
    }
    compute_shortest_path();

    if (g_[grid_.index(start_)].is_infinite()) return std::nullopt;
    std::vector<Cell> path{start_};
    Cell cur = start_;
    const std::size_t limit = g_.size();
    while (!(cur == goal) && path.size() <= limit) {
        GridCost best = GridCost::infinity();
        Cell next = cur;
        for (const Cell& off : kNeighbourOffsets) {
            const Cell v{cur.col + off.col, cur.row + off.row};
            const GridCost w = edge_cost(grid_, cur, v);
            if (w.is_infinite()) continue;
            const GridCost c = w + g_[grid_.index(v)];
            if (c < best) {
                best = c;
                next = v;
            }
        }
        if (best.is_infinite()) return std::nullopt;
        cur = next;
        path.push_back(cur);
    }
    if (!(cur == goal)) return std::nullopt;
    return path;
}

GridCost DStarLite::start_cost() const {
    if (!goal_) return GridCost::infinity();
    return g_[grid_.index(start_)];
}

Point2 select_waypoint(std::span<const Point2> path, const Pose& est_pose, double min_distance) {
    if (path.empty()) throw std::invalid_argument("cannot select a waypoint on an empty path");
    const Point2 here = est_pose.position();
    for (const Point2& p : path) {
        if (distance(p, here) >= min_distance) return p;
    }
    return path.back();
}

Action controller_step(const Pose& est_pose, const Point2& waypoint, double est_goal_dist, Rng& rng,
                       const ControllerConfig& cfg) {
    if (est_goal_dist < cfg.stop_radius) return Action::kStop;
    std::uniform_real_distribution<double> coin(0.0, 1.0);
    if (coin(rng) < cfg.random_action_probability) {
        std::uniform_int_distribution<int> pick(0, 2);
        return kMotionActions[static_cast<std::size_t>(pick(rng))];
    }
    const double err = bearing(inverse_transform_point(est_pose, waypoint));
    if (std::abs(err) <= cfg.heading_tolerance) return Action::kMoveForward;
    return err > 0.0 ? Action::kTurnLeft : Action::kTurnRight;
}

ClassicAgent::ClassicAgent(const ClassicConfig& cfg, const SensorConfig& sensor, const Point2& goal_in_start_frame)
    : cfg_(cfg),
      sensor_(sensor),
      goal_(goal_in_start_frame),
      map_(cfg.map_size, cfg.map_size, cfg.map_resolution, std::nullopt, cfg.obstacle_threshold),
      planner_(cfg.map_size, cfg.map_size),
      inflated_(static_cast<std::size_t>(cfg.map_size) * cfg.map_size, 0) {
    goal_cell_ = map_.cell_of(goal_);
    if (!map_.in_bounds(goal_cell_)) throw std::invalid_argument("goal lies outside the classic agent's map");
}

void ClassicAgent::refresh_cell(const Cell& c) {
    if (!map_.in_bounds(c)) return;
    const bool exempt = c == goal_cell_ || (start_cell_ && c == *start_cell_);
    planner_.set_blocked(c, !exempt && inflated_[static_cast<std::size_t>(c.row) * cfg_.map_size + c.col] > 0);
}

Action ClassicAgent::act(const DepthScan& scan, const Pose& est_pose, double est_goal_dist, Rng& rng) {
    const MapUpdateStats stats = update_map(map_, scan, est_pose, sensor_);
    const int r = cfg_.inflation_cells;
    for (const Cell& c : stats.new_obstacles) {
        for (int dr = -r; dr <= r; ++dr) {
            for (int dc = -r; dc <= r; ++dc) {
                const Cell v{c.col + dc, c.row + dr};
                if (!map_.in_bounds(v)) continue;
                ++inflated_[static_cast<std::size_t>(v.row) * cfg_.map_size + v.col];
                refresh_cell(v);
            }
        }
    }

    Cell start = map_.cell_of(est_pose.position());
    start.col = std::clamp(start.col, 0, cfg_.map_size - 1);
    start.row = std::clamp(start.row, 0, cfg_.map_size - 1);
    const std::optional<Cell> old_start = start_cell_;
    start_cell_ = start;
    if (old_start) refresh_cell(*old_start);
    refresh_cell(start);
    refresh_cell(goal_cell_);

    Point2 waypoint = goal_;
    last_path_.clear();
    if (const auto path = planner_.plan(start, goal_cell_)) {
        last_path_.reserve(path->size());
        for (const Cell& c : *path) last_path_.push_back(map_.cell_center(c));
        waypoint = select_waypoint(last_path_, est_pose, cfg_.waypoint_distance);
    }
    return controller_step(est_pose, waypoint, est_goal_dist, rng, cfg_.controller);
}

}  // namespace egonav
