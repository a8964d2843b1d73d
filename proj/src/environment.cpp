#include "egonav/environment.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <limits>
#include <sstream>

namespace egonav {

OccupancyGrid::OccupancyGrid(int width, int height, double resolution, Point2 origin)
    : cells_(width, height, false), resolution_(resolution), origin_(origin) {
    if (width < 1 || height < 1) throw std::invalid_argument("grid dimensions must be >= 1");
    if (!(resolution > 0.0)) throw std::invalid_argument("grid resolution must be > 0");
}

Cell OccupancyGrid::cell_of(const Point2& p) const {
    return {static_cast<int>(std::floor((p.x - origin_.x) / resolution_)),
            static_cast<int>(std::floor((p.z - origin_.z) / resolution_))};
}

Point2 OccupancyGrid::cell_center(const Cell& c) const {
    return {origin_.x + (c.col + 0.5) * resolution_, origin_.z + (c.row + 0.5) * resolution_};
}

std::size_t OccupancyGrid::obstacle_count() const {
    std::size_t n = 0;
    for (int r = 0; r < height(); ++r)
        for (int c = 0; c < width(); ++c) n += occupied({c, r}) ? 1 : 0;
    return n;
}

namespace {

std::string_view rstrip(std::string_view s) {
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

}  // namespace

OccupancyGrid parse_map(std::string_view text) {
    std::vector<std::string_view> lines;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const std::size_t nl = text.find('\n', pos);
        const std::size_t end = nl == std::string_view::npos ? text.size() : nl;
        lines.push_back(rstrip(text.substr(pos, end - pos)));
        if (nl == std::string_view::npos) break;
        pos = nl + 1;
    }
    while (!lines.empty() && lines.back().empty()) lines.pop_back();
    if (lines.empty()) throw MapParseError(1, "missing header");

    constexpr std::string_view kKey = "resolution ";
    const std::string_view header = lines.front();
    if (!header.starts_with(kKey)) throw MapParseError(1, "expected 'resolution <float>' header");
    std::string_view value = header.substr(kKey.size());
    while (!value.empty() && value.front() == ' ') value.remove_prefix(1);
    double resolution = 0.0;
    const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), resolution);
    if (ec != std::errc{} || ptr != value.data() + value.size() || !(resolution > 0.0) ||
        !std::isfinite(resolution)) {
        throw MapParseError(1, "invalid resolution '" + std::string(value) + "'");
    }

    if (lines.size() < 2) throw MapParseError(2, "map has no rows");
    const std::size_t width = lines[1].size();
    if (width == 0) throw MapParseError(2, "empty row");
    const int height = static_cast<int>(lines.size() - 1);

    OccupancyGrid grid(static_cast<int>(width), height, resolution);
    for (int row = 0; row < height; ++row) {
        const int line_no = row + 2;
        const std::string_view line = lines[row + 1];
        if (line.size() != width) {
            throw MapParseError(line_no, "row has length " + std::to_string(line.size()) + ", expected " +
                                             std::to_string(width));
        }
        for (std::size_t col = 0; col < width; ++col) {
            const char ch = line[col];
            if (ch != '#' && ch != '.') {
                throw MapParseError(line_no, std::string("unknown glyph '") + ch + "' at column " +
                                                 std::to_string(col + 1));
            }
            const bool wall = ch == '#';
            const bool border = row == 0 || row == height - 1 || col == 0 || col + 1 == width;
            if (border && !wall) {
                throw MapParseError(line_no, "boundary cell at column " + std::to_string(col + 1) +
                                                 " must be '#' (closed world)");
            }
            grid.set_occupied({static_cast<int>(col), row}, wall);
        }
    }
    return grid;
}

OccupancyGrid load_map(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open map file " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    try {
        return parse_map(buf.str());
    } catch (const MapParseError& e) {
        throw MapParseError(e.line(), e.detail(), path.string());
    }
}

void SensorConfig::validate() const {
    if (num_rays < 2) throw std::invalid_argument("sensor needs at least 2 rays");
    if (!(fov > 0.0 && fov <= 2.0 * kPi)) throw std::invalid_argument("sensor fov must be in (0, 2pi]");
    if (!(min_range > 0.0 && min_range < max_range)) {
        throw std::invalid_argument("sensor ranges must satisfy 0 < min_range < max_range");
    }
}

namespace {

/// Distance along (dir_x, dir_z) from p to the first occupied cell boundary, or max_range.
double cast_ray(const OccupancyGrid& grid, const Point2& p, double dir_x, double dir_z, double max_range) {
    const double res = grid.resolution();
    const double gx = (p.x - grid.origin().x) / res;
    const double gz = (p.z - grid.origin().z) / res;
    Cell cell{static_cast<int>(std::floor(gx)), static_cast<int>(std::floor(gz))};

    constexpr double kInf = std::numeric_limits<double>::infinity();
    const int step_x = dir_x > 0.0 ? 1 : -1;
    const int step_z = dir_z > 0.0 ? 1 : -1;
    double t_max_x = kInf, t_delta_x = kInf;
    double t_max_z = kInf, t_delta_z = kInf;
    if (dir_x != 0.0) {
        const double boundary = dir_x > 0.0 ? cell.col + 1.0 : static_cast<double>(cell.col);
        t_max_x = (boundary - gx) / dir_x * res;
        t_delta_x = res / std::abs(dir_x);
    }
    if (dir_z != 0.0) {
        const double boundary = dir_z > 0.0 ? cell.row + 1.0 : static_cast<double>(cell.row);
        t_max_z = (boundary - gz) / dir_z * res;
        t_delta_z = res / std::abs(dir_z);
    }

    while (true) {
        double t;
        if (t_max_x < t_max_z) {
            t = t_max_x;
            cell.col += step_x;
            t_max_x += t_delta_x;
        } else {
            t = t_max_z;
            cell.row += step_z;
            t_max_z += t_delta_z;
        }
        if (t >= max_range) return max_range;
        if (grid.occupied(cell)) return t;
    }
}

}  // namespace

DepthScan raycast(const OccupancyGrid& grid, const Pose& pose, const SensorConfig& cfg) {
    cfg.validate();
    const Point2 origin = pose.position();
    if (grid.occupied_at(origin)) throw std::invalid_argument("raycast origin lies inside an obstacle");

    DepthScan scan;
    scan.depths.resize(static_cast<std::size_t>(cfg.num_rays));
    for (int i = 0; i < cfg.num_rays; ++i) {
        const double heading = pose.yaw + cfg.ray_bearing(i);
        const double d = cast_ray(grid, origin, std::sin(heading), std::cos(heading), cfg.max_range);
        scan.depths[static_cast<std::size_t>(i)] = std::clamp(d, cfg.min_range, cfg.max_range);
    }
    return scan;
}

bool is_free(const OccupancyGrid& grid, const Point2& p, double radius) {
    if (grid.occupied_at(p)) return false;
    if (radius <= 0.0) return true;
    const Cell lo = grid.cell_of({p.x - radius, p.z - radius});
    const Cell hi = grid.cell_of({p.x + radius, p.z + radius});
    const double res = grid.resolution();
    for (int row = lo.row; row <= hi.row; ++row) {
        for (int col = lo.col; col <= hi.col; ++col) {
            if (!grid.occupied({col, row})) continue;
            const double x0 = grid.origin().x + col * res;
            const double z0 = grid.origin().z + row * res;
            const double ex = std::max({x0 - p.x, 0.0, p.x - (x0 + res)});
            const double ez = std::max({z0 - p.z, 0.0, p.z - (z0 + res)});
            if (ex * ex + ez * ez < radius * radius) return false;
        }
    }
    return true;
}

KinematicStep step_kinematics(const OccupancyGrid& grid, const Pose& pose, const MotionDelta& delta,
                              const KinematicsConfig& cfg) {
    const double c = std::cos(pose.yaw);
    const double s = std::sin(pose.yaw);
    const int n = std::max(1, cfg.substeps);
    const double sx = (c * delta.dx + s * delta.dz) / n;
    const double sz = (-s * delta.dx + c * delta.dz) / n;

    Point2 p = pose.position();
    bool collided = false;
    for (int i = 0; i < n; ++i) {
        const Point2 full{p.x + sx, p.z + sz};
        if (is_free(grid, full, cfg.agent_radius)) {
            p = full;
            continue;
        }
        collided = true;
        if (sx != 0.0 && is_free(grid, {p.x + sx, p.z}, cfg.agent_radius)) p.x += sx;
        if (sz != 0.0 && is_free(grid, {p.x, p.z + sz}, cfg.agent_radius)) p.z += sz;
    }
    return {{p.x, pose.y, p.z, normalize_angle(pose.yaw + delta.dyaw)}, collided};
}

std::optional<Cell> snap_to_free(const OccupancyGrid& grid, const Point2& p) {
    const Cell own = grid.cell_of(p);
    if (grid.in_bounds(own) && !grid.occupied(own)) return own;
    std::optional<Cell> best;
    double best_d = std::numeric_limits<double>::infinity();
    for (int row = 0; row < grid.height(); ++row) {
        for (int col = 0; col < grid.width(); ++col) {
            if (grid.occupied({col, row})) continue;
            const double d = distance(grid.cell_center({col, row}), p);
            if (d < best_d) {
                best_d = d;
                best = Cell{col, row};
            }
        }
    }
    return best;
}

namespace {

bool segment_clear(const OccupancyGrid& grid, const Point2& a, const Point2& b) {
    const double len = distance(a, b);
    if (grid.occupied_at(a)) return false;
    if (len == 0.0) return true;
    const double dx = (b.x - a.x) / len;
    const double dz = (b.z - a.z) / len;
    const double res = grid.resolution();
    const double gx = (a.x - grid.origin().x) / res;
    const double gz = (a.z - grid.origin().z) / res;
    Cell cell = grid.cell_of(a);
    const Cell last = grid.cell_of(b);
    constexpr double kInf = std::numeric_limits<double>::infinity();
    double t_max_x = kInf, t_delta_x = kInf, t_max_z = kInf, t_delta_z = kInf;
    if (dx != 0.0) {
        t_max_x = ((dx > 0.0 ? cell.col + 1.0 : cell.col) - gx) / dx * res;
        t_delta_x = res / std::abs(dx);
    }
    if (dz != 0.0) {
        t_max_z = ((dz > 0.0 ? cell.row + 1.0 : cell.row) - gz) / dz * res;
        t_delta_z = res / std::abs(dz);
    }
    while (!(cell == last)) {
        double t;
        if (t_max_x < t_max_z) {
            t = t_max_x;
            cell.col += dx > 0.0 ? 1 : -1;
            t_max_x += t_delta_x;
        } else {
            t = t_max_z;
            cell.row += dz > 0.0 ? 1 : -1;
            t_max_z += t_delta_z;
        }
        if (t > len) break;
        if (grid.occupied(cell)) return false;
    }
    return !grid.occupied(last);
}

}  // namespace

bool line_of_sight(const OccupancyGrid& grid, const Point2& a, const Point2& b) {
    return segment_clear(grid, a, b) && segment_clear(grid, b, a);
}

GeodesicField::GeodesicField(const OccupancyGrid& grid, const Point2& target)
    : grid_(&grid), target_(target), target_cell_(snap_to_free(grid, target)) {
    if (target_cell_) field_ = dijkstra_field(grid.blocked_grid(), *target_cell_);
}

std::optional<double> GeodesicField::distance_from(const Point2& p) const {
    if (!target_cell_) return std::nullopt;
    if (line_of_sight(*grid_, p, target_)) return distance(p, target_);
    const std::optional<Cell> cell = snap_to_free(*grid_, p);
    if (!cell) return std::nullopt;
    const GridCost cost = field_[grid_->blocked_grid().index(*cell)];
    if (cost.is_infinite()) return std::nullopt;
    return cost.meters(grid_->resolution());
}

std::optional<double> geodesic_distance(const OccupancyGrid& grid, const Point2& a, const Point2& b) {
    return GeodesicField(grid, b).distance_from(a);
}

std::optional<double> grid_path_distance(const OccupancyGrid& grid, const Point2& a, const Point2& b) {
    const auto ca = snap_to_free(grid, a);
    const auto cb = snap_to_free(grid, b);
    if (!ca || !cb) return std::nullopt;
    const auto field = dijkstra_field(grid.blocked_grid(), *cb);
    const GridCost cost = field[grid.blocked_grid().index(*ca)];
    if (cost.is_infinite()) return std::nullopt;
    return cost.meters(grid.resolution());
}

}  // namespace egonav
