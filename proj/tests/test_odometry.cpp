#include <gtest/gtest.h>

#include <random>

#include "egonav/odometry.hpp"
#include "oracles.hpp"

using namespace egonav;

namespace {

EgomotionSample sample_of(Action a, const MotionDelta& d) {
    EgomotionSample s;
    s.scene = "synthetic";
    s.action = a;
    s.gt_delta = d;
    return s;
}

OccupancyGrid desk_map(const std::string& name) { return load_map(std::string(EGONAV_DATA_DIR) + "/maps/" + name + ".map"); }

// A 1.2 m wide, 3.5 m long closed corridor; both end walls stay within sensor range.
OccupancyGrid corridor() {
    std::string m = "resolution 0.1\n";
    for (int r = 0; r < 35; ++r) {
        for (int c = 0; c < 14; ++c) m += c == 0 || c == 13 || r == 0 || r == 34 ? '#' : '.';
        m += '\n';
    }
    return parse_map(m);
}

}  // namespace

TEST(DeadReckon, MatchesNominalMotion) {
    for (Action a : kMotionActions) EXPECT_EQ(dead_reckon(a), nominal_motion(a));
    EXPECT_EQ(dead_reckon(Action::kMoveForward), (MotionDelta{0, 0, 0.25, 0}));
    EXPECT_THROW(dead_reckon(Action::kStop), std::invalid_argument);
}

TEST(FitCalibrated, ExactForwardSamples) {
    std::vector<EgomotionSample> data(20, sample_of(Action::kMoveForward, {0, 0, 0.25, 0}));
    data.push_back(sample_of(Action::kTurnLeft, {0, 0, 0, 0.2}));
    data.push_back(sample_of(Action::kTurnRight, {0, 0, 0, -0.2}));
    const CalibratedModel m = fit_calibrated(data);
    EXPECT_EQ(m.lookup(Action::kMoveForward), (MotionDelta{0, 0, 0.25, 0}));
    EXPECT_EQ(m.count[motion_index(Action::kMoveForward)], 20u);
    EXPECT_FALSE(m.fallback[0]);
}

TEST(FitCalibrated, RecoversNoiseModelMeans) {
    Rng rng(11);
    const NoiseModel noise = NoiseModel::locobot();
    std::vector<EgomotionSample> data;
    for (int i = 0; i < 3000; ++i) {
        const Action a = kMotionActions[i % 3];
        data.push_back(sample_of(a, sample_noisy_motion(a, noise, rng)));
    }
    const CalibratedModel m = fit_calibrated(data);
    const MotionDelta f = m.lookup(Action::kMoveForward);
    const double n = 1000;
    // Standard errors bounded by the untruncated sigmas.
    EXPECT_NEAR(f.dz, 0.264, 3 * std::sqrt(0.006 / n));
    EXPECT_NEAR(f.dx, 0.009, 3 * std::sqrt(0.005 / n));
    EXPECT_NEAR(f.dyaw, 0.008, 3 * 0.004 / std::sqrt(n));
    EXPECT_EQ(f.dy, 0.0);

    const Odometer odo = Odometer::calibrated(m);
    const DepthScan empty;
    EXPECT_EQ(odo.predict(Action::kMoveForward, empty, empty), f);
}

TEST(FitCalibrated, MissingActionFallsBackAndIsFlagged) {
    std::vector<EgomotionSample> data{sample_of(Action::kMoveForward, {0, 0, 0.25, 0}),
                                      sample_of(Action::kTurnLeft, {0, 0, 0, 0.17})};
    const CalibratedModel m = fit_calibrated(data);
    EXPECT_EQ(m.lookup(Action::kTurnRight), dead_reckon(Action::kTurnRight));
    EXPECT_TRUE(m.fallback[motion_index(Action::kTurnRight)]);
    EXPECT_EQ(m.count[motion_index(Action::kTurnRight)], 0u);
    EXPECT_THROW(fit_calibrated({}), std::invalid_argument);
}

TEST(FitCalibrated, ConvergesToDistributionMean) {
    std::mt19937_64 rng(12);
    for (int trial = 0; trial < 20; ++trial) {
        std::normal_distribution<double> dz(0.3, 0.05), dx(-0.02, 0.03), dyaw(0.1, 0.02);
        std::vector<EgomotionSample> data;
        const int n = 400;
        for (int i = 0; i < n; ++i) data.push_back(sample_of(Action::kTurnLeft, {dx(rng), 0, dz(rng), dyaw(rng)}));
        const MotionDelta m = fit_calibrated(data).lookup(Action::kTurnLeft);
        EXPECT_LE(std::abs(m.dz - 0.3), 3 * 0.05 / std::sqrt(n));
        EXPECT_LE(std::abs(m.dx + 0.02), 3 * 0.03 / std::sqrt(n));
        EXPECT_LE(std::abs(m.dyaw - 0.1), 3 * 0.02 / std::sqrt(n));
    }
}

TEST(CalibratedModel, JsonRoundTrip) {
    CalibratedModel m;
    m.mean = {MotionDelta{0.009, 0, 0.264, 0.008}, MotionDelta{0.003, 0, 0.003, 0.197},
              MotionDelta{0.003, 0, 0.003, -0.151}};
    m.count = {10, 4, 0};
    m.fallback = {false, false, true};
    const CalibratedModel back = CalibratedModel::from_json(m.to_json());
    EXPECT_EQ(back.mean, m.mean);
    EXPECT_EQ(back.count, m.count);
    EXPECT_EQ(back.fallback, m.fallback);
    EXPECT_THROW(CalibratedModel::from_json("{}"), std::invalid_argument);
}

TEST(Predict, DeadReckoningIgnoresScans) {
    const Odometer odo = Odometer::dead_reckoning();
    DepthScan a{{1.0, 2.0}}, b{{3.0, 0.5}};
    EXPECT_EQ(odo.predict(Action::kMoveForward, a, b), (MotionDelta{0, 0, 0.25, 0}));
    EXPECT_EQ(odo.predict(Action::kMoveForward, b, a), (MotionDelta{0, 0, 0.25, 0}));
}

TEST(Predict, ScanLengthMismatchIsAnError) {
    const Odometer odo = Odometer::dead_reckoning();
    EXPECT_THROW(odo.predict(Action::kMoveForward, DepthScan{{1.0}}, DepthScan{{1.0, 2.0}}), std::invalid_argument);
}

TEST(Predict, GroundTruthReturnsTheTrueDelta) {
    const Odometer odo = Odometer::ground_truth();
    const MotionDelta truth{0.01, 0, 0.2, 0.03};
    EXPECT_EQ(odo.predict(Action::kMoveForward, {}, {}, truth), truth);
    EXPECT_THROW(odo.predict(Action::kMoveForward, {}, {}), std::invalid_argument);
}

TEST(Predict, ScanMatchIdenticalScansWithTurnSeed) {
    const OccupancyGrid g = desk_map("two_rooms");
    const SensorConfig sensor;
    const ScanMatchParams params;
    const DepthScan s = raycast(g, Pose{2.0, 0, 4.0, 0.4}, sensor);
    const MotionDelta d = Odometer::scan_matching(params, sensor).predict(Action::kTurnLeft, s, s);
    EXPECT_LE(std::abs(d.dyaw), params.fine_rotation_step);
    EXPECT_LE(std::abs(d.dx), params.fine_translation_step);
    EXPECT_LE(std::abs(d.dz), params.fine_translation_step);
}

TEST(ScanMatch, IdentityAlignment) {
    const OccupancyGrid g = desk_map("pillars");
    const SensorConfig sensor;
    const DepthScan s = raycast(g, Pose{3.0, 0, 2.4, -1.0}, sensor);
    const ScanMatchResult r = scan_match(s, s, MotionDelta::zero(), ScanMatchParams{}, sensor);
    EXPECT_EQ(r.delta, MotionDelta::zero());
    EXPECT_NEAR(r.score, 0.0, 1e-12);
}

TEST(ScanMatch, RecoversForwardStepInCorridor) {
    const OccupancyGrid g = corridor();
    const SensorConfig sensor;
    const ScanMatchParams params;
    const Pose a{0.7, 0, 1.5, 0.0};
    const KinematicStep b = step_kinematics(g, a, nominal_motion(Action::kMoveForward));
    ASSERT_FALSE(b.collided);
    const ScanMatchResult r =
        scan_match(raycast(g, a, sensor), raycast(g, b.pose, sensor), MotionDelta{0.03, 0, 0.2, 0.05}, params, sensor);
    EXPECT_NEAR(r.delta.dz, 0.25, params.fine_translation_step);
    EXPECT_NEAR(r.delta.dx, 0.0, params.fine_translation_step);
    EXPECT_NEAR(r.delta.dyaw, 0.0, params.fine_rotation_step);
}

TEST(ScanMatch, DegenerateScansReturnSeed) {
    const SensorConfig sensor;
    const DepthScan blank{std::vector<double>(91, sensor.max_range)};
    const MotionDelta seed{0.0, 0.0, 0.25, 0.0};
    const ScanMatchResult r = scan_match(blank, blank, seed, ScanMatchParams{}, sensor);
    EXPECT_EQ(r.delta, seed);
    EXPECT_TRUE(std::isinf(r.score));
}

TEST(ScanMatch, NeverWorseThanSeed) {
    const SensorConfig sensor;
    const ScanMatchParams params;
    std::mt19937_64 rng(13);
    std::uniform_real_distribution<double> u(0.3, 7.7), a(-kPi, kPi);
    const NoiseModel noise = NoiseModel::locobot();
    for (const char* name : {"open", "pillars", "two_rooms", "cluttered"}) {
        const OccupancyGrid g = desk_map(name);
        for (int i = 0; i < 25; ++i) {
            Pose p;
            do p = {u(rng), 0, u(rng), a(rng)};
            while (!is_free(g, p.position(), 0.15));
            const Action act = kMotionActions[i % 3];
            const KinematicStep k = step_kinematics(g, p, sample_noisy_motion(act, noise, rng));
            const DepthScan s0 = raycast(g, p, sensor), s1 = raycast(g, k.pose, sensor);
            const MotionDelta seed = dead_reckon(act);
            const ScanMatchResult r = scan_match(s0, s1, seed, params, sensor);
            const SurfaceIndex surface(scan_surface(s0, sensor, params.max_gap));
            const std::vector<Point2> pts = scan_points(s1, sensor);
            const double at_seed = alignment_cost(surface, pts, seed, params.outlier_distance);
            const double at_result = alignment_cost(surface, pts, r.delta, params.outlier_distance);
            EXPECT_LE(at_result, at_seed) << name << " sample " << i;
            EXPECT_NEAR(r.score, at_result, 1e-12);
        }
    }
}

TEST(SurfaceIndex, MatchesBruteForce) {
    std::mt19937_64 rng(14);
    std::uniform_real_distribution<double> u(-3.0, 3.0), du(-0.3, 0.3), q(-5.0, 5.0);
    std::vector<Segment> segs;
    for (int i = 0; i < 60; ++i) {
        const Point2 a{u(rng), u(rng)};
        segs.push_back({a, {a.x + du(rng), a.z + du(rng)}});
    }
    segs.push_back({{1.0, 1.0}, {1.0, 1.0}});
    const SurfaceIndex index(segs);
    auto brute = [&](const Point2& p) {
        double best = std::numeric_limits<double>::infinity();
        for (const Segment& s : segs) {
            // Dense sampling of the segment as the reference.
            for (int k = 0; k <= 2000; ++k) {
                const double t = k / 2000.0;
                best = std::min(best, distance(p, {s.a.x + t * (s.b.x - s.a.x), s.a.z + t * (s.b.z - s.a.z)}));
            }
        }
        return best;
    };
    for (int i = 0; i < 200; ++i) {
        const Point2 p{q(rng), q(rng)};
        const double d = index.distance(p);
        EXPECT_NEAR(d, brute(p), 3e-4);
        EXPECT_LE(d, brute(p) + 1e-12);
        EXPECT_DOUBLE_EQ(index.distance(p, 0.05), std::min(d, 0.05));
    }
    EXPECT_TRUE(std::isinf(SurfaceIndex({}).distance({0, 0})));
}

TEST(ScanSurface, JoinsOnlyCloseNeighbours) {
    SensorConfig cfg;
    cfg.num_rays = 4;
    cfg.fov = kPi / 2;
    const DepthScan s{{1.0, 1.0, 4.0, 3.0}};
    const auto segs = scan_surface(s, cfg, 0.6);
    // Rays 0-1 join; ray 2 is max range; ray 3 stands alone.
    ASSERT_EQ(segs.size(), 2u);
    EXPECT_NE(segs[0].a, segs[0].b);
    EXPECT_EQ(segs[1].a, segs[1].b);
}

TEST(SmoothL1, Examples) {
    const MotionDelta t{0.1, 0.0, 0.2, 0.3};
    EXPECT_EQ(smooth_l1(t, t), 0.0);
    EXPECT_DOUBLE_EQ(smooth_l1(MotionDelta{0.5, 0, 0, 0}, MotionDelta{}), 0.125);
    EXPECT_DOUBLE_EQ(smooth_l1(MotionDelta{0, 0, 2.0, 0}, MotionDelta{}), 1.5);
    std::mt19937_64 rng(15);
    std::uniform_real_distribution<double> u(-3.0, 3.0);
    for (int i = 0; i < 200; ++i) {
        const MotionDelta p{u(rng), u(rng), u(rng), u(rng)}, q{u(rng), u(rng), u(rng), u(rng)};
        EXPECT_GE(smooth_l1(p, q), 0.0);
        EXPECT_DOUBLE_EQ(smooth_l1(p, q), smooth_l1(q, p));
        if (!(p == q)) EXPECT_GT(smooth_l1(p, q), 0.0);
    }
}

TEST(UpdateRelativeGoal, Examples) {
    EXPECT_EQ(update_relative_goal({0.3, 1.2}, MotionDelta::zero()), (Point2{0.3, 1.2}));
    const Point2 g = update_relative_goal({0, 1.0}, MotionDelta{0, 0, 0.25, 0});
    EXPECT_NEAR(g.x, 0.0, 1e-12);
    EXPECT_NEAR(g.z, 0.75, 1e-12);

    const double turn = deg_to_rad(10.0);
    const Point2 r = update_relative_goal({1, 1}, MotionDelta{0, 0, 0, turn});
    const Eigen::Vector4d o = oracle::pose_matrix(0, 0, 0, turn).inverse() * Eigen::Vector4d(1, 0, 1, 1);
    EXPECT_NEAR(r.x, o(0), 1e-12);
    EXPECT_NEAR(r.z, o(2), 1e-12);
}

TEST(UpdateRelativeGoal, AgreesWithIntegratedPose) {
    std::mt19937_64 rng(16);
    std::uniform_real_distribution<double> u(-0.3, 0.3), g(-8.0, 8.0);
    for (int trial = 0; trial < 20; ++trial) {
        const Point2 goal{g(rng), g(rng)};
        Point2 rel = goal;
        Pose est;
        for (int i = 0; i < 200; ++i) {
            const MotionDelta d{u(rng), 0, u(rng), u(rng)};
            est = integrate(est, d);
            rel = update_relative_goal(rel, d);
            const MotionDelta ref = relative_pose(est, Pose{goal.x, 0, goal.z, 0});
            ASSERT_NEAR(rel.x, ref.dx, 1e-6);
            ASSERT_NEAR(rel.z, ref.dz, 1e-6);
        }
    }
}

TEST(Integrate, EqualsCompose) {
    const Pose p{1, 0, 2, 0.3};
    const MotionDelta d{0.1, 0, 0.25, 0.17};
    EXPECT_EQ(integrate(p, d), compose(p, d));
}

TEST(ScanMatchParams, Validation) {
    ScanMatchParams p;
    EXPECT_NO_THROW(p.validate());
    p.fine_translation_step = 0.1;
    EXPECT_THROW(p.validate(), std::invalid_argument);
    p = {};
    p.rotation_window = 0.0;
    EXPECT_THROW(p.validate(), std::invalid_argument);
}
