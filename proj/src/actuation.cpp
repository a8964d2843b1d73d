#include "egonav/actuation.hpp"

#include <cmath>

#include "json.hpp"

namespace egonav {

std::string_view to_string(Action a) {
    switch (a) {
        case Action::kMoveForward: return "move_forward";
        case Action::kTurnLeft: return "turn_left";
        case Action::kTurnRight: return "turn_right";
        case Action::kStop: return "stop";
    }
    return "unknown";
}

Action parse_action(std::string_view name) {
    for (Action a : {Action::kMoveForward, Action::kTurnLeft, Action::kTurnRight, Action::kStop}) {
        if (to_string(a) == name) return a;
    }
    throw std::invalid_argument("unknown action '" + std::string(name) + "'");
}

std::size_t motion_index(Action a) {
    switch (a) {
        case Action::kMoveForward: return 0;
        case Action::kTurnLeft: return 1;
        case Action::kTurnRight: return 2;
        case Action::kStop: break;
    }
    throw std::invalid_argument("stop has no motion index");
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t tag) {
    // splitmix64 finaliser over the combined words
    std::uint64_t z = base + 0x9E3779B97F4A7C15ULL * (tag + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

std::uint64_t derive_seed(std::uint64_t base, std::string_view tag) {
    std::uint64_t h = 0xCBF29CE484222325ULL;  // FNV-1a
    for (char c : tag) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001B3ULL;
    }
    return derive_seed(base, h);
}

NoiseModel NoiseModel::locobot() {
    NoiseModel m;
    m.linear = {.mu_z = 0.014, .mu_x = 0.009, .var_z = 0.006, .var_x = 0.005, .mu_yaw = 0.008, .sigma_yaw = 0.004};
    m.rotational = {.mu_z = 0.003, .mu_x = 0.003, .var_z = 0.002, .var_x = 0.003, .mu_yaw = 0.023, .sigma_yaw = 0.012};
    m.truncation_k = 2.0;
    return m;
}

NoiseModel NoiseModel::noiseless() { return NoiseModel{}; }

const MotionClassNoise& NoiseModel::for_action(Action a) const {
    switch (a) {
        case Action::kMoveForward: return linear;
        case Action::kTurnLeft:
        case Action::kTurnRight: return rotational;
        case Action::kStop: break;
    }
    throw std::invalid_argument("stop has no motion class");
}

void NoiseModel::validate() const {
    for (const MotionClassNoise* c : {&linear, &rotational}) {
        if (c->var_z < 0.0 || c->var_x < 0.0 || c->sigma_yaw < 0.0) {
            throw std::invalid_argument("noise spreads must be non-negative");
        }
    }
    if (!(truncation_k > 0.0)) throw std::invalid_argument("truncation bound k must be > 0");
}

MotionDelta nominal_motion(Action a) {
    switch (a) {
        case Action::kMoveForward: return {0.0, 0.0, kForwardStep, 0.0};
        case Action::kTurnLeft: return {0.0, 0.0, 0.0, kTurnStep};
        case Action::kTurnRight: return {0.0, 0.0, 0.0, -kTurnStep};
        case Action::kStop: break;
    }
    throw std::invalid_argument("stop has no nominal motion");
}

double sample_truncated_normal(double mean, double sigma, double k, Rng& rng) {
    if (sigma == 0.0) return mean;
    std::normal_distribution<double> dist(0.0, 1.0);
    while (true) {
        const double u = dist(rng);
        if (std::abs(u) <= k) return mean + sigma * u;
    }
}

MotionDelta sample_noisy_motion(Action a, const NoiseModel& m, Rng& rng) {
    const MotionDelta nominal = nominal_motion(a);
    const MotionClassNoise& c = m.for_action(a);
    const double k = m.truncation_k;
    const double nz = sample_truncated_normal(c.mu_z, std::sqrt(c.var_z), k, rng);
    const double nx = sample_truncated_normal(c.mu_x, std::sqrt(c.var_x), k, rng);
    const double nyaw = sample_truncated_normal(c.mu_yaw, c.sigma_yaw, k, rng);
    return {nominal.dx + nx, 0.0, nominal.dz + nz, normalize_angle(nominal.dyaw + nyaw)};
}

namespace {

void read_class(const nlohmann::json& j, MotionClassNoise& c) {
    c.mu_z = j.value("mu_z", c.mu_z);
    c.mu_x = j.value("mu_x", c.mu_x);
    c.var_z = j.value("var_z", c.var_z);
    c.var_x = j.value("var_x", c.var_x);
    c.mu_yaw = j.value("mu_yaw", c.mu_yaw);
    c.sigma_yaw = j.value("sigma_yaw", c.sigma_yaw);
}

}  // namespace

NoiseModel NoiseModel::from_json(std::string_view text, NoiseModel base) {
    try {
        const nlohmann::json j = nlohmann::json::parse(text);
        if (j.contains("linear")) read_class(j["linear"], base.linear);
        if (j.contains("rotational")) read_class(j["rotational"], base.rotational);
        base.truncation_k = j.value("truncation_k", base.truncation_k);
    } catch (const nlohmann::json::exception& e) {
        throw std::invalid_argument(std::string("noise model: ") + e.what());
    }
    base.validate();
    return base;
}

}  // namespace egonav
