#include "egonav/metrics.hpp"

#include <algorithm>
#include <stdexcept>

namespace egonav {

bool is_success(double d_T, bool called_stop) { return called_stop && d_T <= kSuccessRadius; }

double progress_weighted_path_efficiency(double progress, double s, double p) {
    if (!(s > 0.0)) throw std::invalid_argument("shortest-path length must be > 0");
    return progress * (s / std::max(s, p));
}

double spl(const EpisodeOutcome& o) { return progress_weighted_path_efficiency(o.success ? 1.0 : 0.0, o.s, o.p); }

double soft_spl(const EpisodeOutcome& o) {
    if (!(o.d_init > 0.0)) throw std::invalid_argument("SoftSPL is undefined for d_init <= 0");
    return progress_weighted_path_efficiency(1.0 - o.d_T / o.d_init, o.s, o.p);
}

double step_reward(double d_prev, double d_curr, bool terminal_success, const RewardConfig& cfg) {
    return (terminal_success ? cfg.s_r : 0.0) + (d_prev - d_curr) + cfg.slack;
}

}  // namespace egonav
