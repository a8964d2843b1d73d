#include "egonav/grid_search.hpp"

#include <cmath>
#include <algorithm>
#include <cstdlib>
#include <numbers>
#include <queue>

namespace egonav {

double GridCost::cells() const {
    if (infinite_) return std::numeric_limits<double>::infinity();
    return static_cast<double>(straight_) + static_cast<double>(diagonal_) * std::numbers::sqrt2;
}

std::strong_ordering operator<=>(const GridCost& a, const GridCost& b) {
    if (a.infinite_ || b.infinite_) {
        if (a.infinite_ && b.infinite_) return std::strong_ordering::equal;
        return a.infinite_ ? std::strong_ordering::greater : std::strong_ordering::less;
    }
    // a - b = ds + dd*sqrt(2); decide its sign with integer arithmetic only.
    const std::int64_t ds = a.straight_ - b.straight_;
    const std::int64_t dd = a.diagonal_ - b.diagonal_;
    auto sign = [](std::int64_t v) { return (v > 0) - (v < 0); };
    int s = 0;
    if (sign(ds) == sign(dd) || dd == 0 || ds == 0) {
        s = ds != 0 ? sign(ds) : sign(dd);
    } else {
        // Opposite signs: compare ds^2 with 2*dd^2, the larger magnitude wins.
        const std::int64_t lhs = ds * ds;
        const std::int64_t rhs = 2 * dd * dd;
        s = lhs > rhs ? sign(ds) : sign(dd);  // equality is impossible (sqrt2 irrational)
    }
    if (s < 0) return std::strong_ordering::less;
    if (s > 0) return std::strong_ordering::greater;
    return std::strong_ordering::equal;
}

GridCost octile_distance(const Cell& a, const Cell& b) {
    const std::int64_t dx = std::abs(a.col - b.col);
    const std::int64_t dy = std::abs(a.row - b.row);
    const std::int64_t diag = std::min(dx, dy);
    return {std::max(dx, dy) - diag, diag};
}

GridCost edge_cost(const BlockedGrid& grid, const Cell& from, const Cell& to) {
    const int dc = to.col - from.col;
    const int dr = to.row - from.row;
    if (std::abs(dc) > 1 || std::abs(dr) > 1 || (dc == 0 && dr == 0)) return GridCost::infinity();
    if (grid.blocked(from) || grid.blocked(to)) return GridCost::infinity();
    if (dc != 0 && dr != 0) {
        if (grid.blocked({from.col + dc, from.row}) || grid.blocked({from.col, from.row + dr})) {
            return GridCost::infinity();
        }
        return kDiagonalStep;
    }
    return kStraightStep;
}

std::vector<GridCost> dijkstra_field(const BlockedGrid& grid, const Cell& source) {
    const std::size_t n = static_cast<std::size_t>(grid.width()) * grid.height();
    std::vector<GridCost> dist(n, GridCost::infinity());
    if (grid.blocked(source)) return dist;

    struct Entry {
        GridCost cost;
        std::size_t index;
        bool operator>(const Entry& o) const { return cost > o.cost; }
    };
    std::priority_queue<Entry, std::vector<Entry>, std::greater<>> open;
    dist[grid.index(source)] = GridCost{};
    open.push({GridCost{}, grid.index(source)});
    while (!open.empty()) {
        const Entry top = open.top();
        open.pop();
        if (top.cost > dist[top.index]) continue;
        const Cell u = grid.cell_at(top.index);
        for (const Cell& off : kNeighbourOffsets) {
            const Cell v{u.col + off.col, u.row + off.row};
            const GridCost w = edge_cost(grid, u, v);
            if (w.is_infinite()) continue;
            const GridCost candidate = top.cost + w;
            const std::size_t vi = grid.index(v);
            if (candidate < dist[vi]) {
                dist[vi] = candidate;
                open.push({candidate, vi});
            }
        }
    }
    return dist;
}

}  // namespace egonav
