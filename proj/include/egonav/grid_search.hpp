#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <limits>
#include <optional>
#include <vector>

namespace egonav {

/// Integer grid cell; col indexes x, row indexes z.
struct Cell {
    int col = 0;
    int row = 0;

    friend bool operator==(const Cell&, const Cell&) = default;
};

/// Length of an 8-connected grid path, held exactly as straight + diagonal * sqrt(2)
/// (in cell units). Ordering is exact, so costs computed along different summation
/// orders compare equal whenever the paths have the same length.
class GridCost {
public:
    constexpr GridCost() = default;
    constexpr GridCost(std::int64_t straight, std::int64_t diagonal)
        : straight_(straight), diagonal_(diagonal) {}

    static constexpr GridCost infinity() {
        GridCost c;
        c.infinite_ = true;
        return c;
    }

    constexpr bool is_infinite() const { return infinite_; }
    constexpr std::int64_t straight() const { return straight_; }
    constexpr std::int64_t diagonal() const { return diagonal_; }

    /// Value in cell units; infinity for unreachable.
    double cells() const;
    double meters(double resolution) const { return cells() * resolution; }

    friend GridCost operator+(const GridCost& a, const GridCost& b) {
        if (a.infinite_ || b.infinite_) return infinity();
        return {a.straight_ + b.straight_, a.diagonal_ + b.diagonal_};
    }

    friend bool operator==(const GridCost& a, const GridCost& b) {
        if (a.infinite_ || b.infinite_) return a.infinite_ == b.infinite_;
        return a.straight_ == b.straight_ && a.diagonal_ == b.diagonal_;
    }
    friend std::strong_ordering operator<=>(const GridCost& a, const GridCost& b);

private:
    std::int64_t straight_ = 0;
    std::int64_t diagonal_ = 0;
    bool infinite_ = false;
};

inline constexpr GridCost kStraightStep{1, 0};
inline constexpr GridCost kDiagonalStep{0, 1};

/// Octile distance between two cells; admissible and consistent for the 8-connected grid.
GridCost octile_distance(const Cell& a, const Cell& b);

/// Row-major dense map of per-cell flags; out-of-range cells read as blocked.
class BlockedGrid {
public:
    BlockedGrid() = default;
    BlockedGrid(int width, int height, bool value = false)
        : width_(width), height_(height), cells_(static_cast<std::size_t>(width) * height, value) {}

    int width() const { return width_; }
    int height() const { return height_; }
    bool in_bounds(const Cell& c) const {
        return c.col >= 0 && c.row >= 0 && c.col < width_ && c.row < height_;
    }
    bool blocked(const Cell& c) const { return !in_bounds(c) || cells_[index(c)] != 0; }
    void set(const Cell& c, bool value) { cells_[index(c)] = value ? 1 : 0; }
    std::size_t index(const Cell& c) const {
        return static_cast<std::size_t>(c.row) * width_ + c.col;
    }
    Cell cell_at(std::size_t index) const {
        return {static_cast<int>(index % width_), static_cast<int>(index / width_)};
    }

private:
    int width_ = 0;
    int height_ = 0;
    std::vector<std::uint8_t> cells_;
};

/// Edge cost between adjacent cells under the project-wide connectivity rule:
/// both endpoints free, and a diagonal step additionally needs both orthogonal
/// corner cells free (no corner cutting). Infinity when the edge is unusable.
GridCost edge_cost(const BlockedGrid& grid, const Cell& from, const Cell& to);

/// The 8 neighbour offsets in a fixed order.
inline constexpr std::array<Cell, 8> kNeighbourOffsets{{
    {1, 0}, {-1, 0}, {0, 1}, {0, -1}, {1, 1}, {1, -1}, {-1, 1}, {-1, -1},
}};

/// Single-source Dijkstra over the 8-connected grid. Unreachable cells hold infinity.
std::vector<GridCost> dijkstra_field(const BlockedGrid& grid, const Cell& source);

}  // namespace egonav
