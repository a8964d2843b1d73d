#include "egonav/odometry.hpp"

#include <cmath>

#include "json.hpp"

namespace egonav {

namespace {
constexpr std::array<std::string_view, 3> kActionKeys{"forward", "left", "right"};
}

std::string_view to_string(OdometerKind k) {
    switch (k) {
        case OdometerKind::kGroundTruth: return "ground_truth";
        case OdometerKind::kDeadReckoning: return "dead_reckoning";
        case OdometerKind::kCalibrated: return "calibrated";
        case OdometerKind::kScanMatch: return "scan_match";
    }
    return "unknown";
}

OdometerKind parse_odometer_kind(std::string_view name) {
    for (OdometerKind k : {OdometerKind::kGroundTruth, OdometerKind::kDeadReckoning, OdometerKind::kCalibrated,
                           OdometerKind::kScanMatch}) {
        if (to_string(k) == name) return k;
    }
    throw std::invalid_argument("unknown odometer kind '" + std::string(name) + "'");
}

MotionDelta dead_reckon(Action a) { return nominal_motion(a); }

std::string CalibratedModel::to_json() const {
    nlohmann::json j;
    for (std::size_t i = 0; i < 3; ++i) {
        const MotionDelta& m = mean[i];
        j[std::string(kActionKeys[i])] = {
            {"mean", {m.dx, m.dy, m.dz, m.dyaw}},
            {"count", count[i]},
            {"fallback", fallback[i]},
        };
    }
    return j.dump(2);
}

CalibratedModel CalibratedModel::from_json(std::string_view text) {
    CalibratedModel model;
    try {
        const nlohmann::json j = nlohmann::json::parse(text);
        for (std::size_t i = 0; i < 3; ++i) {
            const auto& entry = j.at(std::string(kActionKeys[i]));
            const auto& m = entry.at("mean");
            if (!m.is_array() || m.size() != 4) throw std::invalid_argument("mean must have 4 entries");
            model.mean[i] = {m[0].get<double>(), m[1].get<double>(), m[2].get<double>(), m[3].get<double>()};
            model.count[i] = entry.at("count").get<std::size_t>();
            model.fallback[i] = entry.value("fallback", false);
        }
    } catch (const nlohmann::json::exception& e) {
        throw std::invalid_argument(std::string("calibrated model: ") + e.what());
    }
    return model;
}

CalibratedModel fit_calibrated(std::span<const EgomotionSample> dataset) {
    if (dataset.empty()) throw std::invalid_argument("cannot fit an odometer on an empty dataset");
    std::array<std::array<double, 4>, 3> sums{};
    CalibratedModel model;
    for (const EgomotionSample& s : dataset) {
        const std::size_t i = motion_index(s.action);
        sums[i][0] += s.gt_delta.dx;
        sums[i][2] += s.gt_delta.dz;
        sums[i][3] += s.gt_delta.dyaw;
        ++model.count[i];
    }
    for (std::size_t i = 0; i < 3; ++i) {
        if (model.count[i] == 0) {
            model.mean[i] = dead_reckon(kMotionActions[i]);
            model.fallback[i] = true;
            continue;
        }
        const double n = static_cast<double>(model.count[i]);
        model.mean[i] = {sums[i][0] / n, 0.0, sums[i][2] / n, sums[i][3] / n};
    }
    return model;
}

double smooth_l1(const MotionDelta& pred, const MotionDelta& truth, double beta) {
    auto term = [beta](double e) {
        const double a = std::abs(e);
        return a < beta ? 0.5 * e * e / beta : a - 0.5 * beta;
    };
    return term(pred.dx - truth.dx) + term(pred.dy - truth.dy) + term(pred.dz - truth.dz) +
           term(pred.dyaw - truth.dyaw);
}

double mean_smooth_l1(std::span<const EgomotionSample> dataset,
                      const std::function<MotionDelta(const EgomotionSample&)>& predictor) {
    if (dataset.empty()) throw std::invalid_argument("cannot evaluate on an empty dataset");
    double total = 0.0;
    for (const EgomotionSample& s : dataset) total += smooth_l1(predictor(s), s.gt_delta);
    return total / static_cast<double>(dataset.size());
}

Odometer Odometer::ground_truth() {
    Odometer o;
    o.kind_ = OdometerKind::kGroundTruth;
    return o;
}

Odometer Odometer::dead_reckoning() { return Odometer{}; }

Odometer Odometer::calibrated(CalibratedModel model) {
    Odometer o;
    o.kind_ = OdometerKind::kCalibrated;
    o.model_ = model;
    return o;
}

Odometer Odometer::scan_matching(ScanMatchParams params, SensorConfig sensor) {
    params.validate();
    sensor.validate();
    Odometer o;
    o.kind_ = OdometerKind::kScanMatch;
    o.params_ = params;
    o.sensor_ = sensor;
    return o;
}

MotionDelta Odometer::predict(Action a, const DepthScan& prev_scan, const DepthScan& curr_scan,
                              const std::optional<MotionDelta>& true_delta) const {
    if (prev_scan.depths.size() != curr_scan.depths.size()) {
        throw std::invalid_argument("scan length mismatch: " + std::to_string(prev_scan.depths.size()) + " vs " +
                                    std::to_string(curr_scan.depths.size()));
    }
    switch (kind_) {
        case OdometerKind::kGroundTruth:
            if (!true_delta) throw std::invalid_argument("ground-truth odometer needs the true delta");
            motion_index(a);  // rejects stop
            return *true_delta;
        case OdometerKind::kDeadReckoning: return dead_reckon(a);
        case OdometerKind::kCalibrated: return model_.lookup(a);
        case OdometerKind::kScanMatch:
            return scan_match(prev_scan, curr_scan, dead_reckon(a), params_, sensor_).delta;
    }
    throw std::logic_error("unhandled odometer kind");
}

}  // namespace egonav
