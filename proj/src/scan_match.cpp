#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>

#include "egonav/odometry.hpp"

namespace egonav {

void ScanMatchParams::validate() const {
    if (!(translation_window > 0.0 && rotation_window > 0.0)) {
        throw std::invalid_argument("scan-match windows must be positive");
    }
    if (!(coarse_translation_step > 0.0 && coarse_rotation_step > 0.0 && fine_translation_step > 0.0 &&
          fine_rotation_step > 0.0)) {
        throw std::invalid_argument("scan-match steps must be positive");
    }
    if (fine_translation_step > coarse_translation_step || fine_rotation_step > coarse_rotation_step) {
        throw std::invalid_argument("scan-match fine steps must not exceed coarse steps");
    }
    if (max_refinements < 0) throw std::invalid_argument("scan-match max_refinements must be >= 0");
    if (!(max_gap >= 0.0 && outlier_distance > 0.0 && field_resolution > 0.0)) {
        throw std::invalid_argument("scan-match surface parameters must be positive");
    }
}

std::vector<Point2> scan_points(const DepthScan& scan, const SensorConfig& cfg) {
    if (scan.depths.size() != static_cast<std::size_t>(cfg.num_rays)) {
        throw std::invalid_argument("scan length does not match sensor config");
    }
    std::vector<Point2> pts;
    pts.reserve(scan.depths.size());
    for (int i = 0; i < cfg.num_rays; ++i) {
        const double d = scan.depths[static_cast<std::size_t>(i)];
        if (d >= cfg.max_range) continue;
        const double b = cfg.ray_bearing(i);
        pts.push_back({d * std::sin(b), d * std::cos(b)});
    }
    return pts;
}

std::vector<Segment> scan_surface(const DepthScan& scan, const SensorConfig& cfg, double max_gap) {
    if (scan.depths.size() != static_cast<std::size_t>(cfg.num_rays)) {
        throw std::invalid_argument("scan length does not match sensor config");
    }
    std::vector<std::optional<Point2>> ends(scan.depths.size());
    for (int i = 0; i < cfg.num_rays; ++i) {
        const double d = scan.depths[static_cast<std::size_t>(i)];
        if (d >= cfg.max_range) continue;
        const double b = cfg.ray_bearing(i);
        ends[static_cast<std::size_t>(i)] = Point2{d * std::sin(b), d * std::cos(b)};
    }
    std::vector<Segment> out;
    std::vector<bool> joined(ends.size(), false);
    for (std::size_t i = 0; i + 1 < ends.size(); ++i) {
        if (!ends[i] || !ends[i + 1]) continue;
        if (distance(*ends[i], *ends[i + 1]) > max_gap) continue;
        out.push_back({*ends[i], *ends[i + 1]});
        joined[i] = joined[i + 1] = true;
    }
    for (std::size_t i = 0; i < ends.size(); ++i) {
        if (ends[i] && !joined[i]) out.push_back({*ends[i], *ends[i]});
    }
    return out;
}

namespace {

double segment_distance2(const Segment& s, const Point2& q) {
    const double ux = s.b.x - s.a.x, uz = s.b.z - s.a.z;
    const double wx = q.x - s.a.x, wz = q.z - s.a.z;
    const double len2 = ux * ux + uz * uz;
    double t = len2 > 0.0 ? (wx * ux + wz * uz) / len2 : 0.0;
    t = std::clamp(t, 0.0, 1.0);
    const double dx = wx - t * ux, dz = wz - t * uz;
    return dx * dx + dz * dz;
}

}  // namespace

SurfaceIndex::SurfaceIndex(std::vector<Segment> segments, double bucket_size)
    : segments_(std::move(segments)), bucket_(bucket_size) {
    if (segments_.empty()) return;
    double max_x = segments_.front().a.x, max_z = segments_.front().a.z;
    min_x_ = max_x;
    min_z_ = max_z;
    for (const Segment& s : segments_) {
        for (const Point2& p : {s.a, s.b}) {
            min_x_ = std::min(min_x_, p.x);
            min_z_ = std::min(min_z_, p.z);
            max_x = std::max(max_x, p.x);
            max_z = std::max(max_z, p.z);
        }
    }
    cols_ = static_cast<int>((max_x - min_x_) / bucket_) + 1;
    rows_ = static_cast<int>((max_z - min_z_) / bucket_) + 1;
    auto col = [&](double x) { return std::min(cols_ - 1, static_cast<int>((x - min_x_) / bucket_)); };
    auto row = [&](double z) { return std::min(rows_ - 1, static_cast<int>((z - min_z_) / bucket_)); };

    // Each segment is registered in every bucket of its bounding box.
    const std::size_t n_buckets = static_cast<std::size_t>(cols_) * rows_;
    start_.assign(n_buckets + 1, 0);
    auto for_each_bucket = [&](const Segment& s, auto&& fn) {
        const int c0 = col(std::min(s.a.x, s.b.x)), c1 = col(std::max(s.a.x, s.b.x));
        const int r0 = row(std::min(s.a.z, s.b.z)), r1 = row(std::max(s.a.z, s.b.z));
        for (int r = r0; r <= r1; ++r)
            for (int c = c0; c <= c1; ++c) fn(static_cast<std::size_t>(r) * cols_ + c);
    };
    for (const Segment& s : segments_) for_each_bucket(s, [&](std::size_t b) { ++start_[b + 1]; });
    for (std::size_t b = 0; b < n_buckets; ++b) start_[b + 1] += start_[b];
    members_.resize(start_.back());
    std::vector<std::size_t> fill(start_.begin(), start_.end() - 1);
    for (std::size_t i = 0; i < segments_.size(); ++i) {
        for_each_bucket(segments_[i], [&](std::size_t b) { members_[fill[b]++] = static_cast<std::uint32_t>(i); });
    }
}

double SurfaceIndex::distance(const Point2& q, double cap) const {
    if (segments_.empty()) return std::numeric_limits<double>::infinity();
    const double cap2 = cap * cap;
    const int qc = std::clamp(static_cast<int>(std::floor((q.x - min_x_) / bucket_)), 0, cols_ - 1);
    const int qr = std::clamp(static_cast<int>(std::floor((q.z - min_z_) / bucket_)), 0, rows_ - 1);

    // Distance from q to the rectangle of its (clamped) start bucket.
    const double bx0 = min_x_ + qc * bucket_;
    const double bz0 = min_z_ + qr * bucket_;
    const double ox = std::max({bx0 - q.x, 0.0, q.x - (bx0 + bucket_)});
    const double oz = std::max({bz0 - q.z, 0.0, q.z - (bz0 + bucket_)});
    const double outside = std::hypot(ox, oz);

    double best2 = std::numeric_limits<double>::infinity();
    const int max_ring = std::max({qc, cols_ - 1 - qc, qr, rows_ - 1 - qr});
    auto scan_bucket = [&](int c, int r) {
        const std::size_t b = static_cast<std::size_t>(r) * cols_ + c;
        for (std::size_t i = start_[b]; i < start_[b + 1]; ++i) {
            best2 = std::min(best2, segment_distance2(segments_[members_[i]], q));
        }
    };
    for (int ring = 0; ring <= max_ring; ++ring) {
        // The nearest surface point of anything first met on this ring lies in a bucket
        // separated from the start bucket by ring-1 buckets.
        const double bound = (ring - 1) * bucket_ - outside;
        if (bound > 0.0 && (best2 <= bound * bound || cap2 <= bound * bound)) break;
        const int c0 = qc - ring, c1 = qc + ring, r0 = qr - ring, r1 = qr + ring;
        for (int c = std::max(c0, 0); c <= std::min(c1, cols_ - 1); ++c) {
            if (r0 >= 0) scan_bucket(c, r0);
            if (r1 < rows_ && r1 != r0) scan_bucket(c, r1);
        }
        for (int r = std::max(r0 + 1, 0); r <= std::min(r1 - 1, rows_ - 1); ++r) {
            if (c0 >= 0) scan_bucket(c0, r);
            if (c1 < cols_ && c1 != c0) scan_bucket(c1, r);
        }
    }
    return std::min(std::sqrt(best2), cap);
}

double alignment_cost(const SurfaceIndex& prev, std::span<const Point2> curr, const MotionDelta& delta,
                      double cap) {
    if (curr.empty() || prev.empty()) return std::numeric_limits<double>::infinity();
    const Pose frame = as_pose(delta);
    double total = 0.0;
    for (const Point2& q : curr) total += prev.distance(transform_point(frame, q), cap);
    return total / static_cast<double>(curr.size());
}

namespace {

/// Saturated surface distance sampled on a regular grid, read with bilinear interpolation.
class DistanceField {
public:
    DistanceField(std::span<const Segment> segments, double resolution, double cap) : res_(resolution), cap_(cap) {
        double max_x = -std::numeric_limits<double>::infinity(), max_z = max_x;
        min_x_ = min_z_ = std::numeric_limits<double>::infinity();
        for (const Segment& s : segments) {
            for (const Point2& p : {s.a, s.b}) {
                min_x_ = std::min(min_x_, p.x);
                min_z_ = std::min(min_z_, p.z);
                max_x = std::max(max_x, p.x);
                max_z = std::max(max_z, p.z);
            }
        }
        min_x_ -= cap;
        min_z_ -= cap;
        cols_ = static_cast<int>(std::ceil((max_x + cap - min_x_) / res_)) + 2;
        rows_ = static_cast<int>(std::ceil((max_z + cap - min_z_) / res_)) + 2;
        values_.assign(static_cast<std::size_t>(cols_) * rows_, static_cast<float>(cap));
        for (const Segment& s : segments) {
            const int c0 = std::max(0, static_cast<int>(std::floor((std::min(s.a.x, s.b.x) - cap - min_x_) / res_)));
            const int c1 = std::min(cols_ - 1, static_cast<int>(std::ceil((std::max(s.a.x, s.b.x) + cap - min_x_) / res_)));
            const int r0 = std::max(0, static_cast<int>(std::floor((std::min(s.a.z, s.b.z) - cap - min_z_) / res_)));
            const int r1 = std::min(rows_ - 1, static_cast<int>(std::ceil((std::max(s.a.z, s.b.z) + cap - min_z_) / res_)));
            for (int r = r0; r <= r1; ++r) {
                float* row = &values_[static_cast<std::size_t>(r) * cols_];
                const double z = min_z_ + r * res_;
                for (int c = c0; c <= c1; ++c) {
                    const double d2 = segment_distance2(s, {min_x_ + c * res_, z});
                    if (d2 < static_cast<double>(row[c]) * row[c]) row[c] = static_cast<float>(std::sqrt(d2));
                }
            }
        }
    }

    double operator()(double x, double z) const {
        const double fx = (x - min_x_) / res_;
        const double fz = (z - min_z_) / res_;
        if (!(fx >= 0.0 && fz >= 0.0 && fx < cols_ - 1 && fz < rows_ - 1)) return cap_;
        const int c = static_cast<int>(fx);
        const int r = static_cast<int>(fz);
        const double tx = fx - c, tz = fz - r;
        const float* p = &values_[static_cast<std::size_t>(r) * cols_ + c];
        const double top = p[0] + tx * (p[1] - p[0]);
        const double bottom = p[cols_] + tx * (p[cols_ + 1] - p[cols_]);
        return top + tz * (bottom - top);
    }

private:
    double res_;
    double cap_;
    double min_x_ = 0.0, min_z_ = 0.0;
    int cols_ = 0, rows_ = 0;
    std::vector<float> values_;
};

struct Candidate {
    MotionDelta delta;
    double cost = std::numeric_limits<double>::infinity();
};

/// Scores every (dx, dz, dyaw) on an axis-aligned lattice and returns the cheapest.
/// The lattice is centre + k*step for |k| <= n per axis, clipped to [lo, hi].
struct Lattice {
    MotionDelta centre;
    int n_trans = 0;
    int n_rot = 0;
    double trans_step = 0.0;
    double rot_step = 0.0;
};

struct Bounds {
    double dx_lo, dx_hi, dz_lo, dz_hi, yaw_lo, yaw_hi;
};

struct LatticeResult {
    Candidate best;
    bool on_edge = false;
};

LatticeResult search_lattice(const DistanceField& prev, std::span<const Point2> curr, const Lattice& l,
                             const Bounds& b) {
    LatticeResult out;
    std::vector<Point2> rotated(curr.size());
    constexpr double kEps = 1e-12;
    int best_i = 0, best_j = 0, best_k = 0;
    for (int k = -l.n_rot; k <= l.n_rot; ++k) {
        const double yaw = l.centre.dyaw + k * l.rot_step;
        if (yaw < b.yaw_lo - kEps || yaw > b.yaw_hi + kEps) continue;
        const double c = std::cos(yaw);
        const double s = std::sin(yaw);
        for (std::size_t q = 0; q < curr.size(); ++q) {
            rotated[q] = {c * curr[q].x + s * curr[q].z, -s * curr[q].x + c * curr[q].z};
        }
        for (int i = -l.n_trans; i <= l.n_trans; ++i) {
            const double dx = l.centre.dx + i * l.trans_step;
            if (dx < b.dx_lo - kEps || dx > b.dx_hi + kEps) continue;
            for (int j = -l.n_trans; j <= l.n_trans; ++j) {
                const double dz = l.centre.dz + j * l.trans_step;
                if (dz < b.dz_lo - kEps || dz > b.dz_hi + kEps) continue;
                double total = 0.0;
                for (const Point2& r : rotated) total += prev(r.x + dx, r.z + dz);
                const double cost = total / static_cast<double>(rotated.size());
                if (cost < out.best.cost) {
                    out.best = {{dx, 0.0, dz, yaw}, cost};
                    best_i = i;
                    best_j = j;
                    best_k = k;
                }
            }
        }
    }
    out.on_edge = std::abs(best_i) == l.n_trans || std::abs(best_j) == l.n_trans || std::abs(best_k) == l.n_rot;
    return out;
}

}  // namespace

ScanMatchResult scan_match(const DepthScan& prev, const DepthScan& curr, const MotionDelta& seed,
                           const ScanMatchParams& p, const SensorConfig& cfg) {
    if (prev.depths.size() != curr.depths.size()) throw std::invalid_argument("scan length mismatch");
    const std::vector<Point2> prev_pts = scan_points(prev, cfg);
    const std::vector<Point2> curr_pts = scan_points(curr, cfg);
    if (prev_pts.size() < p.min_points || curr_pts.size() < p.min_points) {
        return {seed, std::numeric_limits<double>::infinity()};
    }
    const std::vector<Segment> surface = scan_surface(prev, cfg, p.max_gap);
    const SurfaceIndex index(surface);
    const DistanceField field(surface, p.field_resolution, p.outlier_distance);

    const Bounds bounds{seed.dx - p.translation_window,   seed.dx + p.translation_window,
                        seed.dz - p.translation_window,   seed.dz + p.translation_window,
                        seed.dyaw - p.rotation_window, seed.dyaw + p.rotation_window};

    // Coarse pass on a thinned point set.
    std::vector<Point2> coarse_pts;
    const std::size_t stride = std::max<std::size_t>(1, (curr_pts.size() + p.coarse_point_budget - 1) /
                                                            std::max<std::size_t>(1, p.coarse_point_budget));
    for (std::size_t i = 0; i < curr_pts.size(); i += stride) coarse_pts.push_back(curr_pts[i]);
    const Lattice coarse{seed,
                         static_cast<int>(std::floor(p.translation_window / p.coarse_translation_step + 1e-9)),
                         static_cast<int>(std::floor(p.rotation_window / p.coarse_rotation_step + 1e-9)),
                         p.coarse_translation_step, p.coarse_rotation_step};
    MotionDelta centre = search_lattice(field, coarse_pts, coarse, bounds).best.delta;

    // Fine passes on every point, re-centred while the optimum sits on the lattice edge.
    const int n_fine_t = static_cast<int>(std::ceil(0.5 * p.coarse_translation_step / p.fine_translation_step - 1e-9));
    const int n_fine_r = static_cast<int>(std::ceil(0.5 * p.coarse_rotation_step / p.fine_rotation_step - 1e-9));
    Candidate best;
    for (int pass = 0; pass <= p.max_refinements; ++pass) {
        const Lattice fine{centre, std::max(1, n_fine_t), std::max(1, n_fine_r), p.fine_translation_step,
                           p.fine_rotation_step};
        const LatticeResult r = search_lattice(field, curr_pts, fine, bounds);
        const bool moved = r.best.cost < best.cost;
        if (moved) best = r.best;
        if (!moved || !r.on_edge) break;
        centre = r.best.delta;
    }

    best.delta.dyaw = normalize_angle(best.delta.dyaw);
    const double best_cost = alignment_cost(index, curr_pts, best.delta, p.outlier_distance);
    const double seed_cost = alignment_cost(index, curr_pts, seed, p.outlier_distance);
    if (!(best_cost < seed_cost)) return {seed, seed_cost};
    return {best.delta, best_cost};
}

}  // namespace egonav
