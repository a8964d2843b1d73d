#pragma once

namespace egonav {

inline constexpr double kSuccessRadius = 0.2;

struct EpisodeOutcome {
    double d_init = 0.0;  // geodesic distance to goal at start
    double d_T = 0.0;     // geodesic distance to goal at termination
    double s = 0.0;       // shortest-path length
    double p = 0.0;       // length of the path actually taken
    bool success = false;
    bool called_stop = false;
    int steps = 0;

    friend bool operator==(const EpisodeOutcome&, const EpisodeOutcome&) = default;
};

struct RewardConfig {
    double s_r = 1.0;      // success reward
    double slack = -0.01;  // lambda
};

/// Stop was called within kSuccessRadius (inclusive) of the goal.
bool is_success(double d_T, bool called_stop);

/// success * s / max(s, p). Throws std::invalid_argument when s <= 0.
double spl(const EpisodeOutcome& o);

/// (1 - d_T / d_init) * s / max(s, p); negative when the agent ended farther away than it began.
/// Throws std::invalid_argument when d_init <= 0 or s <= 0.
double soft_spl(const EpisodeOutcome& o);

/// SoftSPL with the progress term replaced by an arbitrary factor; progress = success gives SPL.
double progress_weighted_path_efficiency(double progress, double s, double p);

/// r_t = s_r * 1[success] + (d_{t-1} - d_t) + lambda
double step_reward(double d_prev, double d_curr, bool terminal_success, const RewardConfig& cfg = {});

}  // namespace egonav
