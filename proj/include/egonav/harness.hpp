#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "egonav/actuation.hpp"
#include "egonav/classic_nav.hpp"
#include "egonav/environment.hpp"
#include "egonav/geometry.hpp"
#include "egonav/metrics.hpp"
#include "egonav/odometry.hpp"

namespace egonav {

enum class AgentKind { kGreedyGoal, kClassic };

std::string_view to_string(AgentKind k);
AgentKind parse_agent_kind(std::string_view name);

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct EpisodeSpec {
    std::string scene;
    Pose start;
    Point2 goal;
    int max_steps = 500;
    /// Explicit per-episode seed; when absent the run seed and episode index decide it.
    std::optional<std::uint64_t> seed;
};

/// Everything an episode needs besides the episode itself.
struct EpisodeSettings {
    AgentKind agent = AgentKind::kGreedyGoal;
    Odometer odometer = Odometer::ground_truth();
    bool noisy = false;
    NoiseModel noise = NoiseModel::locobot();
    SensorConfig sensor;
    KinematicsConfig kinematics;
    ClassicConfig classic;
    RewardConfig reward;
    double greedy_stop_radius = kSuccessRadius;
    bool keep_scans = false;
};

struct StepRecord {
    Action action = Action::kStop;
    Pose true_pose;       // after the action, world frame
    Pose est_pose;        // after the action, episode-start frame
    Point2 est_rel_goal;  // after the action, current estimated agent frame
    double reward = 0.0;
    bool collided = false;

    friend bool operator==(const StepRecord&, const StepRecord&) = default;
};

struct EpisodeRecord {
    std::string scene;
    Pose start;
    Point2 goal;
    Point2 initial_rel_goal;
    std::vector<StepRecord> steps;
    std::vector<DepthScan> scans;  // observation before each step, only with keep_scans
    EpisodeOutcome outcome;
    int collisions = 0;
    double terminal_localization_error = 0.0;
    double softspl = 0.0;
    double splv = 0.0;

    friend bool operator==(const EpisodeRecord&, const EpisodeRecord&) = default;
};

/// Stop within the radius, forward when the goal bearing is within half a turn quantum,
/// otherwise the turn that reduces the bearing error.
Action greedy_goal_policy(const Point2& est_rel_goal, double stop_radius = kSuccessRadius);

/// Runs one episode. Throws ConfigError if the start is blocked or the goal unreachable.
EpisodeRecord run_episode(const EpisodeSettings& settings, const OccupancyGrid& grid, const EpisodeSpec& episode);

/// Re-derives an agent's decisions from its observations alone: the scans it saw, the actions
/// it took, the initial relative goal and its odometer. Used to show that no ground-truth
/// pose reaches the policy.
std::vector<Action> replay_decisions(const EpisodeSettings& settings, const Point2& initial_rel_goal,
                                     std::span<const DepthScan> scans, std::span<const Action> actions,
                                     std::uint64_t seed);

/// Random episodes with start and goal at least `clearance` from obstacles and a
/// geodesic distance in [min_distance, max_distance].
struct EpisodeSampler {
    double min_distance = 2.0;
    double max_distance = 6.0;
    double clearance = 0.2;
    bool require_line_of_sight = false;
    int max_steps = 500;
    int max_tries = 10000;
};

std::vector<EpisodeSpec> sample_episodes(const OccupancyGrid& grid, const std::string& scene, int count,
                                         const EpisodeSampler& sampler, Rng& rng);

struct ReportRow {
    std::string agent;
    std::string odometer;
    bool noisy = false;
    double mean_soft_spl = 0.0;
    double mean_spl = 0.0;
    double success_rate = 0.0;
    double mean_geo_d_T = 0.0;
    double median_terminal_localization_error = 0.0;
    std::size_t episodes = 0;
};

/// Aggregates one configuration's records. Throws std::invalid_argument on an empty input.
ReportRow aggregate(std::span<const EpisodeRecord> records);

struct Report {
    std::vector<ReportRow> rows;

    std::string to_json() const;
    static Report from_json(std::string_view text);
};

/// Table with one line per configuration and the SoftSPL / SPL / Succ. / geo_d_T columns.
std::string format_table(std::span<const ReportRow> rows);

struct ConfigurationKey {
    AgentKind agent;
    OdometerKind odometer;
    bool noisy;
};

struct RunConfig {
    std::vector<std::pair<std::string, std::filesystem::path>> maps;
    std::vector<EpisodeSpec> episodes;
    std::vector<AgentKind> agents{AgentKind::kGreedyGoal};
    std::vector<OdometerKind> odometers{OdometerKind::kGroundTruth};
    std::vector<bool> noise_settings{false};
    NoiseModel noise = NoiseModel::locobot();
    std::optional<CalibratedModel> calibrated_noiseless;
    std::optional<CalibratedModel> calibrated_noisy;
    SensorConfig sensor;
    KinematicsConfig kinematics;
    ClassicConfig classic;
    ScanMatchParams scan_match;
    std::uint64_t seed = 0;
    int max_steps = 500;
    std::optional<std::filesystem::path> report_path;
    std::optional<std::filesystem::path> trajectories_dir;

    /// Parses the JSON config; relative paths resolve against base_dir.
    static RunConfig from_json(std::string_view text, const std::filesystem::path& base_dir = {});
    static RunConfig load(const std::filesystem::path& path);
};

struct RunResult {
    std::vector<std::pair<ConfigurationKey, std::vector<EpisodeRecord>>> configurations;
    Report report;
};

/// Runs the {agent} x {odometer} x {noise} matrix over every episode, in canonical order.
RunResult run_matrix(const RunConfig& cfg);

/// Per-step true / estimated track, both in the world frame.
void write_trajectory_csv(std::ostream& out, const EpisodeRecord& record);

}  // namespace egonav
