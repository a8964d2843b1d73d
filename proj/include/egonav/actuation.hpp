#pragma once

#include <array>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>

#include "egonav/geometry.hpp"

namespace egonav {

enum class Action { kMoveForward, kTurnLeft, kTurnRight, kStop };

inline constexpr std::array<Action, 3> kMotionActions{Action::kMoveForward, Action::kTurnLeft,
                                                      Action::kTurnRight};

inline constexpr double kForwardStep = 0.25;
inline constexpr double kTurnStep = 10.0 * kPi / 180.0;

std::string_view to_string(Action a);
/// Accepts the names produced by to_string; throws std::invalid_argument otherwise.
Action parse_action(std::string_view name);

/// Index 0..2 for motion actions; throws for stop.
std::size_t motion_index(Action a);

/// Per-episode random stream. All stochastic choices in an episode draw from one of these.
using Rng = std::mt19937_64;

/// Derives an independent 64-bit seed from a base seed and a stream tag.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t tag);
std::uint64_t derive_seed(std::uint64_t base, std::string_view tag);

/// Translational (bivariate, diagonal covariance) and rotational (univariate) Gaussian
/// noise for one motion class. Variances are in m^2; the rotational spread is a sigma in rad.
struct MotionClassNoise {
    double mu_z = 0.0;
    double mu_x = 0.0;
    double var_z = 0.0;
    double var_x = 0.0;
    double mu_yaw = 0.0;
    double sigma_yaw = 0.0;
};

struct NoiseModel {
    MotionClassNoise linear;      // move-forward
    MotionClassNoise rotational;  // turn-left / turn-right
    double truncation_k = 2.0;

    /// LoCoBot ILQR parameters.
    static NoiseModel locobot();
    /// All means and spreads zero.
    static NoiseModel noiseless();

    const MotionClassNoise& for_action(Action a) const;
    void validate() const;

    /// Overrides fields of `base` from {"linear": {...}, "rotational": {...}, "truncation_k": k};
    /// class keys are mu_z, mu_x, var_z, var_x, mu_yaw, sigma_yaw.
    static NoiseModel from_json(std::string_view text, NoiseModel base = locobot());
};

/// Commanded motion of an action. Throws std::invalid_argument for stop.
MotionDelta nominal_motion(Action a);

/// Draws from N(mean, sigma^2) restricted to mean +- k*sigma by rejection.
double sample_truncated_normal(double mean, double sigma, double k, Rng& rng);

/// Nominal motion plus per-component truncated noise from the action's motion class.
/// Draw order per call: z, x, yaw.
MotionDelta sample_noisy_motion(Action a, const NoiseModel& m, Rng& rng);

}  // namespace egonav
