#include <gtest/gtest.h>

#include <random>
#include <string>

#include "egonav/environment.hpp"
#include "oracles.hpp"

using namespace egonav;

namespace {

// Closed box of free cells, w x h including the border.
std::string box_map(int w, int h, double res = 0.1) {
    std::string s = "resolution " + std::to_string(res) + "\n";
    for (int r = 0; r < h; ++r) {
        for (int c = 0; c < w; ++c) s += (r == 0 || c == 0 || r == h - 1 || c == w - 1) ? '#' : '.';
        s += '\n';
    }
    return s;
}

std::vector<std::vector<bool>> blocked_rows(const OccupancyGrid& g) {
    std::vector<std::vector<bool>> out(g.height(), std::vector<bool>(g.width()));
    for (int r = 0; r < g.height(); ++r)
        for (int c = 0; c < g.width(); ++c) out[r][c] = g.occupied({c, r});
    return out;
}

OccupancyGrid desk_map(const std::string& name) { return load_map(std::string(EGONAV_DATA_DIR) + "/maps/" + name + ".map"); }

}  // namespace

TEST(ParseMap, BorderOnlyGrid) {
    const OccupancyGrid g = parse_map("resolution 0.1\n###\n#.#\n###\n");
    EXPECT_EQ(g.width(), 3);
    EXPECT_EQ(g.height(), 3);
    EXPECT_EQ(g.obstacle_count(), 8u);
    EXPECT_FALSE(g.occupied({1, 1}));
}

TEST(ParseMap, ResolutionHeader) {
    const OccupancyGrid g = parse_map(box_map(5, 4, 0.1));
    EXPECT_DOUBLE_EQ(g.resolution(), 0.1);
    EXPECT_EQ(g.width(), 5);
    EXPECT_EQ(g.height(), 4);
}

TEST(ParseMap, RaggedRowNamesItsLine) {
    try {
        parse_map("resolution 0.1\n#####\n#...#\n#..#\n#####\n");
        FAIL() << "expected a parse error";
    } catch (const MapParseError& e) {
        EXPECT_EQ(e.line(), 4);
        EXPECT_NE(std::string(e.what()).find("line 4"), std::string::npos);
    }
}

TEST(ParseMap, RejectsBadInput) {
    EXPECT_THROW(parse_map(""), MapParseError);
    EXPECT_THROW(parse_map("res 0.1\n###\n"), MapParseError);
    EXPECT_THROW(parse_map("resolution -1\n###\n"), MapParseError);
    EXPECT_THROW(parse_map("resolution abc\n###\n"), MapParseError);
    try {
        parse_map("resolution 0.1\n###\n#x#\n###\n");
        FAIL();
    } catch (const MapParseError& e) {
        EXPECT_EQ(e.line(), 3);
    }
    // Open boundary violates the closed-world invariant.
    EXPECT_THROW(parse_map("resolution 0.1\n###\n..#\n###\n"), MapParseError);
}

TEST(ParseMap, TrailingSpacesAndBlankLinesAreIgnored) {
    const OccupancyGrid g = parse_map("resolution 0.1  \n###  \n#.#\r\n###\n\n\n");
    EXPECT_EQ(g.height(), 3);
    EXPECT_EQ(g.obstacle_count(), 8u);
}

TEST(ParseMap, BundledMapsLoad) {
    for (const char* name : {"open", "pillars", "two_rooms", "cluttered"}) {
        const OccupancyGrid g = desk_map(name);
        EXPECT_EQ(g.width(), 80) << name;
        EXPECT_EQ(g.height(), 80) << name;
    }
}

TEST(Raycast, WallStraightAhead) {
    // Agent at z = 0.6 facing +z; the far wall (row 16) starts at z = 1.6.
    const OccupancyGrid g = parse_map(box_map(21, 17));
    const SensorConfig cfg;
    const DepthScan s = raycast(g, Pose{1.05, 0, 0.6, 0}, cfg);
    ASSERT_EQ(s.depths.size(), 91u);
    EXPECT_NEAR(s.depths[45], 1.0, g.resolution());
}

TEST(Raycast, NothingInRangeGivesMaxRange) {
    const OccupancyGrid g = parse_map(box_map(120, 120));
    const DepthScan s = raycast(g, Pose{6.0, 0, 6.0, 0.3}, SensorConfig{});
    for (double d : s.depths) EXPECT_EQ(d, 4.0);
}

TEST(Raycast, RejectsPoseInsideObstacle) {
    const OccupancyGrid g = parse_map(box_map(10, 10));
    EXPECT_THROW(raycast(g, Pose{0.05, 0, 0.05, 0}, SensorConfig{}), std::invalid_argument);
}

TEST(Raycast, DepthsStayInRangeAndAreDeterministic) {
    const OccupancyGrid g = desk_map("cluttered");
    const SensorConfig cfg;
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(0.0, 8.0), a(-kPi, kPi);
    int checked = 0;
    while (checked < 10000) {
        const Pose p{u(rng), 0, u(rng), a(rng)};
        if (g.occupied_at(p.position())) continue;
        const DepthScan s = raycast(g, p, cfg);
        for (double d : s.depths) {
            ASSERT_GE(d, cfg.min_range);
            ASSERT_LE(d, cfg.max_range);
        }
        if (checked % 500 == 0) EXPECT_EQ(s, raycast(g, p, cfg));
        ++checked;
    }
}

TEST(Raycast, RayBearingsFollowTheSensorLayout) {
    SensorConfig cfg;
    cfg.num_rays = 5;
    cfg.fov = kPi;
    EXPECT_DOUBLE_EQ(cfg.ray_bearing(0), -kPi / 2);
    EXPECT_DOUBLE_EQ(cfg.ray_bearing(2), 0.0);
    EXPECT_DOUBLE_EQ(cfg.ray_bearing(4), kPi / 2);
    // Ray 4 points left (+x): the nearer left wall shows up there.
    const OccupancyGrid g = parse_map(box_map(40, 40));
    const DepthScan s = raycast(g, Pose{3.5, 0, 2.0, 0}, cfg);
    EXPECT_NEAR(s.depths[4], 0.4, 1e-9);
    EXPECT_NEAR(s.depths[0], 3.4, 1e-9);
}

TEST(StepKinematics, FreeForwardStep) {
    const OccupancyGrid g = parse_map(box_map(40, 40));
    const KinematicStep k = step_kinematics(g, Pose{2, 0, 2, 0}, MotionDelta{0, 0, 0.25, 0});
    EXPECT_FALSE(k.collided);
    EXPECT_NEAR(k.pose.z, 2.25, 1e-12);
    EXPECT_NEAR(k.pose.x, 2.0, 1e-12);
}

TEST(StepKinematics, BlockedByWallAhead) {
    const OccupancyGrid g = parse_map(box_map(40, 40));
    // Far wall starts at z = 3.9; agent edge is 0.1 m from it.
    const Pose start{2.0, 0, 3.7, 0};
    const KinematicStep k = step_kinematics(g, start, MotionDelta{0, 0, 0.25, 0});
    EXPECT_TRUE(k.collided);
    EXPECT_LT(k.pose.z - start.z, 0.25);
    EXPECT_TRUE(is_free(g, k.pose.position(), 0.1));
}

TEST(StepKinematics, SlidesAlongWallAtAnAngle) {
    const OccupancyGrid g = parse_map(box_map(40, 40));
    const Pose start{2.0, 0, 3.75, kPi / 4};
    const KinematicStep k = step_kinematics(g, start, MotionDelta{0, 0, 0.25, 0});
    EXPECT_TRUE(k.collided);
    const MotionDelta d = relative_pose(start, k.pose);
    // Only the world-x part survives, which shows up as a lateral component in the agent frame.
    EXPECT_GT(std::abs(d.dx), 0.01);
    EXPECT_LT(std::hypot(d.dx, d.dz), 0.25);
    EXPECT_NEAR(k.pose.yaw, kPi / 4, 1e-12);
}

TEST(StepKinematics, YawAlwaysAppliedInFull) {
    const OccupancyGrid g = parse_map(box_map(10, 10));
    const KinematicStep k = step_kinematics(g, Pose{0.3, 0, 0.3, 3.1}, MotionDelta{0, 0, 0.25, 0.2});
    EXPECT_NEAR(k.pose.yaw, normalize_angle(3.3), 1e-12);
}

TEST(StepKinematics, NeverEntersObstaclesAndNeverOvershoots) {
    const OccupancyGrid g = desk_map("cluttered");
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> u(0.0, 8.0), a(-kPi, kPi), m(-0.35, 0.35);
    int steps = 0;
    Pose p{};
    while (steps < 100000) {
        if (steps % 50 == 0 || !is_free(g, p.position(), 0.1)) {
            do p = Pose{u(rng), 0, u(rng), a(rng)};
            while (!is_free(g, p.position(), 0.1));
        }
        const MotionDelta d{m(rng), 0.0, m(rng), m(rng)};
        const KinematicStep k = step_kinematics(g, p, d);
        ASSERT_TRUE(is_free(g, k.pose.position(), 0.1));
        ASSERT_FALSE(g.occupied_at(k.pose.position()));
        ASSERT_LE(distance(p.position(), k.pose.position()), std::hypot(d.dx, d.dz) + 1e-12);
        ASSERT_EQ(k.pose.y, 0.0);
        p = k.pose;
        ++steps;
    }
}

TEST(Geodesic, SamePointIsZero) {
    const OccupancyGrid g = desk_map("pillars");
    EXPECT_EQ(*geodesic_distance(g, {1.05, 1.05}, {1.05, 1.05}), 0.0);
    EXPECT_EQ(*grid_path_distance(g, {1.05, 1.05}, {1.02, 1.08}), 0.0);
}

TEST(Geodesic, StraightCorridor) {
    // One-cell corridor with 10 free cells.
    const OccupancyGrid g = parse_map("resolution 0.1\n############\n#..........#\n############\n");
    const Point2 a = g.cell_center({1, 1}), b = g.cell_center({10, 1});
    EXPECT_NEAR(*geodesic_distance(g, a, b), 0.9, 1e-12);
    EXPECT_NEAR(*grid_path_distance(g, a, b), 0.9, 1e-12);
}

TEST(Geodesic, AroundAWallMatchesGraphOracle) {
    std::string m = "resolution 0.1\n";
    for (int r = 0; r < 12; ++r) {
        for (int c = 0; c < 12; ++c) {
            const bool border = r == 0 || c == 0 || r == 11 || c == 11;
            const bool wall = c == 6 && r >= 1 && r <= 8;
            m += border || wall ? '#' : '.';
        }
        m += '\n';
    }
    const OccupancyGrid g = parse_map(m);
    const Point2 a = g.cell_center({2, 3}), b = g.cell_center({9, 3});
    ASSERT_FALSE(line_of_sight(g, a, b));
    const auto cost = oracle::grid_costs(blocked_rows(g), 9, 3)[3 * 12 + 2];
    ASSERT_TRUE(cost.finite);
    const double expected = (cost.straight + cost.diagonal * std::sqrt(2.0)) * 0.1;
    EXPECT_NEAR(*geodesic_distance(g, a, b), expected, 1e-12);
    EXPECT_NEAR(*grid_path_distance(g, a, b), expected, 1e-12);
}

TEST(Geodesic, UnreachableIsExplicit) {
    const OccupancyGrid g = parse_map("resolution 0.1\n#######\n#..#..#\n#..#..#\n#######\n");
    EXPECT_FALSE(geodesic_distance(g, g.cell_center({1, 1}), g.cell_center({5, 1})).has_value());
    EXPECT_FALSE(grid_path_distance(g, g.cell_center({1, 1}), g.cell_center({5, 1})).has_value());
}

TEST(Geodesic, GridCostsMatchOracleOnDeskMap) {
    const OccupancyGrid g = desk_map("two_rooms");
    const auto rows = blocked_rows(g);
    const Cell target{70, 70};
    const auto oracle_cost = oracle::grid_costs(rows, target.col, target.row);
    const auto field = dijkstra_field(g.blocked_grid(), target);
    for (std::size_t i = 0; i < field.size(); ++i) {
        ASSERT_EQ(field[i].is_infinite(), !oracle_cost[i].finite);
        if (oracle_cost[i].finite) {
            ASSERT_EQ(field[i], GridCost(oracle_cost[i].straight, oracle_cost[i].diagonal));
        }
    }
}

TEST(Geodesic, SymmetricAndTriangleInequality) {
    const OccupancyGrid g = desk_map("two_rooms");
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0.0, 8.0);
    auto free_point = [&] {
        Point2 p;
        do p = {u(rng), u(rng)};
        while (!is_free(g, p, 0.1));
        return p;
    };
    const double tol = 2 * g.resolution();
    for (int i = 0; i < 60; ++i) {
        const Point2 a = free_point(), b = free_point(), c = free_point();
        const double ab = *geodesic_distance(g, a, b), ba = *geodesic_distance(g, b, a);
        const double bc = *geodesic_distance(g, b, c), ac = *geodesic_distance(g, a, c);
        EXPECT_NEAR(ab, ba, 1e-12);
        EXPECT_LE(ac, ab + bc + tol);
        EXPECT_GE(ab + 1e-12, distance(a, b) - tol);
    }
}

TEST(LineOfSight, SymmetricAndBlockedByWalls) {
    const OccupancyGrid g = desk_map("two_rooms");
    EXPECT_TRUE(line_of_sight(g, {0.5, 0.5}, {3.0, 0.5}));
    EXPECT_FALSE(line_of_sight(g, {0.5, 0.5}, {6.0, 0.5}));
    EXPECT_FALSE(line_of_sight(g, {6.0, 0.5}, {0.5, 0.5}));
}

TEST(SnapToFree, PicksNearestFreeCell) {
    const OccupancyGrid g = parse_map(box_map(6, 6));
    const auto c = snap_to_free(g, {0.02, 0.25});
    ASSERT_TRUE(c.has_value());
    EXPECT_EQ(*c, (Cell{1, 2}));
}
