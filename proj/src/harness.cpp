#include "egonav/harness.hpp"

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "json.hpp"

namespace egonav {

std::string_view to_string(AgentKind k) {
    switch (k) {
        case AgentKind::kGreedyGoal: return "greedy_goal";
        case AgentKind::kClassic: return "classic";
    }
    return "unknown";
}

AgentKind parse_agent_kind(std::string_view name) {
    for (AgentKind k : {AgentKind::kGreedyGoal, AgentKind::kClassic}) {
        if (to_string(k) == name) return k;
    }
    throw std::invalid_argument("unknown agent kind '" + std::string(name) + "'");
}

Action greedy_goal_policy(const Point2& est_rel_goal, double stop_radius) {
    if (norm(est_rel_goal) <= stop_radius) return Action::kStop;
    const double err = bearing(est_rel_goal);
    if (std::abs(err) <= 0.5 * kTurnStep) return Action::kMoveForward;
    return err > 0.0 ? Action::kTurnLeft : Action::kTurnRight;
}

namespace {

/// The agent side of the loop. It sees scans, its own actions and odometry output only.
class AgentRuntime {
public:
    AgentRuntime(const EpisodeSettings& settings, const Point2& initial_rel_goal, std::uint64_t seed)
        : settings_(settings), rel_goal_(initial_rel_goal), policy_rng_(derive_seed(seed, "policy")) {
        if (settings.agent == AgentKind::kClassic) {
            classic_.emplace(settings.classic, settings.sensor, initial_rel_goal);
        }
    }

    Action decide(const DepthScan& scan) {
        switch (settings_.agent) {
            case AgentKind::kGreedyGoal: return greedy_goal_policy(rel_goal_, settings_.greedy_stop_radius);
            case AgentKind::kClassic: return classic_->act(scan, est_pose_, norm(rel_goal_), policy_rng_);
        }
        throw std::logic_error("unhandled agent kind");
    }

    void integrate_delta(const MotionDelta& est_delta) {
        est_pose_ = integrate(est_pose_, est_delta);
        rel_goal_ = update_relative_goal(rel_goal_, est_delta);
    }

    void overwrite(const Pose& est_pose, const Point2& rel_goal) {
        est_pose_ = est_pose;
        rel_goal_ = rel_goal;
    }

    const Pose& est_pose() const { return est_pose_; }
    const Point2& rel_goal() const { return rel_goal_; }

private:
    const EpisodeSettings& settings_;
    Pose est_pose_;
    Point2 rel_goal_;
    Rng policy_rng_;
    std::optional<ClassicAgent> classic_;
};

double require_distance(const GeodesicField& field, const Point2& p) {
    const auto d = field.distance_from(p);
    if (!d) throw std::logic_error("agent left the goal's connected component");
    return *d;
}

}  // namespace

EpisodeRecord run_episode(const EpisodeSettings& settings, const OccupancyGrid& grid, const EpisodeSpec& episode) {
    if (episode.max_steps <= 0) throw ConfigError("max_steps must be > 0");
    if (!is_free(grid, episode.start.position(), settings.kinematics.agent_radius)) {
        throw ConfigError("episode start lies in an obstacle");
    }
    const GeodesicField field(grid, episode.goal);
    const auto d_init = field.distance_from(episode.start.position());
    if (!d_init) throw ConfigError("episode goal is unreachable from the start");
    if (!(*d_init > 0.0)) throw ConfigError("episode goal coincides with the start");

    EpisodeRecord rec;
    rec.scene = episode.scene;
    rec.start = episode.start;
    rec.goal = episode.goal;
    rec.initial_rel_goal = inverse_transform_point(episode.start, episode.goal);

    const bool ground_truth = settings.odometer.kind() == OdometerKind::kGroundTruth;
    const std::uint64_t seed = episode.seed.value_or(0);
    AgentRuntime agent(settings, rec.initial_rel_goal, seed);
    Rng actuation_rng(derive_seed(seed, "actuation"));

    Pose true_pose = episode.start;
    DepthScan scan = raycast(grid, true_pose, settings.sensor);
    double d_prev = *d_init;
    double path_length = 0.0;
    bool called_stop = false;

    for (int t = 0; t < episode.max_steps; ++t) {
        if (settings.keep_scans) rec.scans.push_back(scan);
        const Action action = agent.decide(scan);
        StepRecord step;
        step.action = action;
        if (action == Action::kStop) {
            called_stop = true;
            step.true_pose = true_pose;
            step.est_pose = agent.est_pose();
            step.est_rel_goal = agent.rel_goal();
            step.reward = step_reward(d_prev, d_prev, is_success(d_prev, true), settings.reward);
            rec.steps.push_back(step);
            break;
        }
        const MotionDelta commanded = settings.noisy ? sample_noisy_motion(action, settings.noise, actuation_rng)
                                                     : nominal_motion(action);
        const KinematicStep moved = step_kinematics(grid, true_pose, commanded, settings.kinematics);
        const MotionDelta true_delta = relative_pose(true_pose, moved.pose);
        DepthScan next_scan = raycast(grid, moved.pose, settings.sensor);

        const MotionDelta est_delta = settings.odometer.predict(action, scan, next_scan, true_delta);
        if (ground_truth) {
            agent.overwrite(as_pose(relative_pose(episode.start, moved.pose)),
                            inverse_transform_point(moved.pose, episode.goal));
        } else {
            agent.integrate_delta(est_delta);
        }

        path_length += distance(true_pose.position(), moved.pose.position());
        const double d_curr = require_distance(field, moved.pose.position());
        step.true_pose = moved.pose;
        step.est_pose = agent.est_pose();
        step.est_rel_goal = agent.rel_goal();
        step.collided = moved.collided;
        step.reward = step_reward(d_prev, d_curr, false, settings.reward);
        rec.collisions += moved.collided ? 1 : 0;
        rec.steps.push_back(step);

        true_pose = moved.pose;
        scan = std::move(next_scan);
        d_prev = d_curr;
    }

    EpisodeOutcome& o = rec.outcome;
    o.d_init = *d_init;
    o.d_T = d_prev;
    o.s = *d_init;
    o.p = path_length;
    o.called_stop = called_stop;
    o.success = is_success(o.d_T, called_stop);
    o.steps = static_cast<int>(rec.steps.size());
    rec.softspl = soft_spl(o);
    rec.splv = spl(o);
    const Pose true_in_start = as_pose(relative_pose(episode.start, true_pose));
    rec.terminal_localization_error = distance(agent.est_pose().position(), true_in_start.position());
    return rec;
}

std::vector<Action> replay_decisions(const EpisodeSettings& settings, const Point2& initial_rel_goal,
                                     std::span<const DepthScan> scans, std::span<const Action> actions,
                                     std::uint64_t seed) {
    if (settings.odometer.kind() == OdometerKind::kGroundTruth) {
        throw std::invalid_argument("ground-truth odometry cannot be replayed from observations");
    }
    if (scans.size() != actions.size()) throw std::invalid_argument("one scan per action is required");
    AgentRuntime agent(settings, initial_rel_goal, seed);
    std::vector<Action> decisions;
    for (std::size_t t = 0; t < actions.size(); ++t) {
        decisions.push_back(agent.decide(scans[t]));
        if (actions[t] == Action::kStop) break;
        if (t + 1 >= scans.size()) break;
        agent.integrate_delta(settings.odometer.predict(actions[t], scans[t], scans[t + 1]));
    }
    return decisions;
}

std::vector<EpisodeSpec> sample_episodes(const OccupancyGrid& grid, const std::string& scene, int count,
                                         const EpisodeSampler& sampler, Rng& rng) {
    std::vector<EpisodeSpec> out;
    const double w = grid.width() * grid.resolution();
    const double h = grid.height() * grid.resolution();
    std::uniform_real_distribution<double> ux(grid.origin().x, grid.origin().x + w);
    std::uniform_real_distribution<double> uz(grid.origin().z, grid.origin().z + h);
    std::uniform_real_distribution<double> uyaw(-kPi, kPi);
    int tries = 0;
    while (static_cast<int>(out.size()) < count) {
        if (++tries > sampler.max_tries) {
            throw ConfigError("could not sample enough episodes on scene '" + scene + "'");
        }
        const Point2 start{ux(rng), uz(rng)};
        const Point2 goal{ux(rng), uz(rng)};
        const double yaw = normalize_angle(uyaw(rng));
        if (!is_free(grid, start, sampler.clearance) || !is_free(grid, goal, sampler.clearance)) continue;
        if (sampler.require_line_of_sight && !line_of_sight(grid, start, goal)) continue;
        const auto d = geodesic_distance(grid, start, goal);
        if (!d || *d < sampler.min_distance || *d > sampler.max_distance) continue;
        EpisodeSpec e;
        e.scene = scene;
        e.start = {start.x, 0.0, start.z, yaw};
        e.goal = goal;
        e.max_steps = sampler.max_steps;
        out.push_back(e);
    }
    return out;
}

ReportRow aggregate(std::span<const EpisodeRecord> records) {
    if (records.empty()) throw std::invalid_argument("cannot aggregate zero episodes");
    ReportRow row;
    std::vector<double> loc_errors;
    for (const EpisodeRecord& r : records) {
        row.mean_soft_spl += r.softspl;
        row.mean_spl += r.splv;
        row.success_rate += r.outcome.success ? 1.0 : 0.0;
        row.mean_geo_d_T += r.outcome.d_T;
        loc_errors.push_back(r.terminal_localization_error);
    }
    const double n = static_cast<double>(records.size());
    row.mean_soft_spl /= n;
    row.mean_spl /= n;
    row.success_rate /= n;
    row.mean_geo_d_T /= n;
    std::sort(loc_errors.begin(), loc_errors.end());
    const std::size_t m = loc_errors.size();
    row.median_terminal_localization_error =
        m % 2 == 1 ? loc_errors[m / 2] : 0.5 * (loc_errors[m / 2 - 1] + loc_errors[m / 2]);
    row.episodes = records.size();
    return row;
}

std::string Report::to_json() const {
    nlohmann::json j;
    j["rows"] = nlohmann::json::array();
    for (const ReportRow& r : rows) {
        j["rows"].push_back({
            {"agent", r.agent},
            {"odometer", r.odometer},
            {"noisy", r.noisy},
            {"soft_spl", r.mean_soft_spl},
            {"spl", r.mean_spl},
            {"success", r.success_rate},
            {"geo_d_T", r.mean_geo_d_T},
            {"median_localization_error", r.median_terminal_localization_error},
            {"episodes", r.episodes},
        });
    }
    return j.dump(2) + "\n";
}

Report Report::from_json(std::string_view text) {
    Report report;
    try {
        const nlohmann::json j = nlohmann::json::parse(text);
        for (const auto& r : j.at("rows")) {
            ReportRow row;
            row.agent = r.at("agent").get<std::string>();
            row.odometer = r.at("odometer").get<std::string>();
            row.noisy = r.at("noisy").get<bool>();
            row.mean_soft_spl = r.at("soft_spl").get<double>();
            row.mean_spl = r.at("spl").get<double>();
            row.success_rate = r.at("success").get<double>();
            row.mean_geo_d_T = r.at("geo_d_T").get<double>();
            row.median_terminal_localization_error = r.at("median_localization_error").get<double>();
            row.episodes = r.at("episodes").get<std::size_t>();
            report.rows.push_back(row);
        }
    } catch (const nlohmann::json::exception& e) {
        throw std::invalid_argument(std::string("report: ") + e.what());
    }
    return report;
}

std::string format_table(std::span<const ReportRow> rows) {
    std::ostringstream os;
    os << std::left << std::setw(13) << "Agent" << std::setw(16) << "Odometer" << std::setw(10) << "Actuation"
       << std::right << std::setw(9) << "SoftSPL" << std::setw(8) << "SPL" << std::setw(8) << "Succ." << std::setw(9)
       << "geo_d_T" << std::setw(9) << "loc_err" << std::setw(6) << "N" << '\n';
    os << std::fixed << std::setprecision(3);
    for (const ReportRow& r : rows) {
        os << std::left << std::setw(13) << r.agent << std::setw(16) << r.odometer << std::setw(10)
           << (r.noisy ? "noisy" : "noiseless") << std::right << std::setw(9) << r.mean_soft_spl << std::setw(8)
           << r.mean_spl << std::setw(8) << r.success_rate << std::setw(9) << r.mean_geo_d_T << std::setw(9)
           << r.median_terminal_localization_error << std::setw(6) << r.episodes << '\n';
    }
    return os.str();
}

namespace {

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
    const std::filesystem::path path(p);
    return path.is_absolute() || base.empty() ? path : base / path;
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

}  // namespace

RunConfig RunConfig::from_json(std::string_view text, const std::filesystem::path& base_dir) {
    RunConfig cfg;
    nlohmann::ordered_json j;  // keeps maps in file order
    try {
        j = nlohmann::ordered_json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    try {
        for (const auto& [id, path] : j.at("maps").items()) {
            cfg.maps.emplace_back(id, resolve(base_dir, path.get<std::string>()));
        }
        if (cfg.maps.empty()) throw ConfigError("config lists no maps");
        cfg.seed = j.value("seed", cfg.seed);
        cfg.max_steps = j.value("max_steps", cfg.max_steps);
        if (cfg.max_steps <= 0) throw ConfigError("max_steps must be > 0");

        if (j.contains("agents")) {
            cfg.agents.clear();
            for (const auto& a : j["agents"]) cfg.agents.push_back(parse_agent_kind(a.get<std::string>()));
        }
        if (j.contains("odometers")) {
            cfg.odometers.clear();
            for (const auto& o : j["odometers"]) cfg.odometers.push_back(parse_odometer_kind(o.get<std::string>()));
        }
        if (j.contains("noise")) {
            cfg.noise_settings.clear();
            for (const auto& n : j["noise"]) cfg.noise_settings.push_back(n.get<bool>());
        }
        if (j.contains("noise_model")) {
            cfg.noise = NoiseModel::from_json(j["noise_model"].dump(), cfg.noise);
        }
        if (j.contains("calibrated_model")) {
            const auto& cm = j["calibrated_model"];
            auto load_model = [&](const nlohmann::ordered_json& v) {
                return CalibratedModel::from_json(read_file(resolve(base_dir, v.get<std::string>())));
            };
            if (cm.is_string()) {
                cfg.calibrated_noiseless = cfg.calibrated_noisy = load_model(cm);
            } else {
                if (cm.contains("noiseless")) cfg.calibrated_noiseless = load_model(cm["noiseless"]);
                if (cm.contains("noisy")) cfg.calibrated_noisy = load_model(cm["noisy"]);
            }
        }
        if (j.contains("sensor")) {
            const auto& s = j["sensor"];
            cfg.sensor.num_rays = s.value("num_rays", cfg.sensor.num_rays);
            if (s.contains("fov_deg")) cfg.sensor.fov = deg_to_rad(s["fov_deg"].get<double>());
            cfg.sensor.min_range = s.value("min_range", cfg.sensor.min_range);
            cfg.sensor.max_range = s.value("max_range", cfg.sensor.max_range);
        }
        cfg.sensor.validate();
        if (j.contains("kinematics")) {
            cfg.kinematics.substeps = j["kinematics"].value("substeps", cfg.kinematics.substeps);
            cfg.kinematics.agent_radius = j["kinematics"].value("agent_radius", cfg.kinematics.agent_radius);
        }
        if (j.contains("classic")) {
            const auto& c = j["classic"];
            cfg.classic.obstacle_threshold = c.value("obstacle_threshold", cfg.classic.obstacle_threshold);
            cfg.classic.inflation_cells = c.value("inflation_cells", cfg.classic.inflation_cells);
            cfg.classic.waypoint_distance = c.value("waypoint_distance", cfg.classic.waypoint_distance);
            cfg.classic.controller.random_action_probability =
                c.value("random_action_probability", cfg.classic.controller.random_action_probability);
        }
        if (j.contains("output")) {
            const auto& out = j["output"];
            if (out.contains("report")) cfg.report_path = resolve(base_dir, out["report"].get<std::string>());
            if (out.contains("trajectories")) {
                cfg.trajectories_dir = resolve(base_dir, out["trajectories"].get<std::string>());
            }
        }

        std::vector<std::pair<std::string, OccupancyGrid>> grids;
        for (const auto& [id, path] : cfg.maps) grids.emplace_back(id, load_map(path));
        auto grid_of = [&](const std::string& id) -> const OccupancyGrid& {
            for (const auto& [gid, g] : grids)
                if (gid == id) return g;
            throw ConfigError("episode references unknown scene '" + id + "'");
        };

        if (j.contains("episodes")) {
            for (const auto& e : j["episodes"]) {
                EpisodeSpec spec;
                spec.scene = e.at("scene").get<std::string>();
                const auto& s = e.at("start");
                spec.start = {s.at(0).get<double>(), 0.0, s.at(1).get<double>(),
                              normalize_angle(s.size() > 2 ? s.at(2).get<double>() : 0.0)};
                spec.goal = {e.at("goal").at(0).get<double>(), e.at("goal").at(1).get<double>()};
                spec.max_steps = e.value("max_steps", cfg.max_steps);
                if (e.contains("seed")) spec.seed = e["seed"].get<std::uint64_t>();
                const OccupancyGrid& g = grid_of(spec.scene);
                if (!is_free(g, spec.start.position(), cfg.kinematics.agent_radius)) {
                    throw ConfigError("episode start in scene '" + spec.scene + "' lies in an obstacle");
                }
                if (!geodesic_distance(g, spec.start.position(), spec.goal)) {
                    throw ConfigError("episode goal in scene '" + spec.scene + "' is unreachable");
                }
                cfg.episodes.push_back(spec);
            }
        }
        if (j.contains("episode_generator")) {
            const auto& gen = j["episode_generator"];
            EpisodeSampler sampler;
            sampler.min_distance = gen.value("min_distance", sampler.min_distance);
            sampler.max_distance = gen.value("max_distance", sampler.max_distance);
            sampler.clearance = gen.value("clearance", sampler.clearance);
            sampler.require_line_of_sight = gen.value("line_of_sight", sampler.require_line_of_sight);
            sampler.max_steps = cfg.max_steps;
            const int per_scene = gen.at("per_scene").get<int>();
            const std::uint64_t gen_seed = gen.value("seed", cfg.seed);
            for (const auto& [id, g] : grids) {
                Rng rng(derive_seed(gen_seed, "episodes:" + id));
                const auto eps = sample_episodes(g, id, per_scene, sampler, rng);
                cfg.episodes.insert(cfg.episodes.end(), eps.begin(), eps.end());
            }
        }
        if (cfg.episodes.empty()) throw ConfigError("config defines no episodes");
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("config: ") + e.what());
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    return cfg;
}

RunConfig RunConfig::load(const std::filesystem::path& path) {
    return from_json(read_file(path), path.parent_path());
}

RunResult run_matrix(const RunConfig& cfg) {
    std::vector<std::pair<std::string, OccupancyGrid>> grids;
    for (const auto& [id, path] : cfg.maps) grids.emplace_back(id, load_map(path));
    auto grid_of = [&](const std::string& id) -> const OccupancyGrid& {
        for (const auto& [gid, g] : grids)
            if (gid == id) return g;
        throw ConfigError("episode references unknown scene '" + id + "'");
    };

    RunResult result;
    for (AgentKind agent : cfg.agents) {
        for (OdometerKind odo : cfg.odometers) {
            for (bool noisy : cfg.noise_settings) {
                EpisodeSettings settings;
                settings.agent = agent;
                settings.noisy = noisy;
                settings.noise = cfg.noise;
                settings.sensor = cfg.sensor;
                settings.kinematics = cfg.kinematics;
                settings.classic = cfg.classic;
                switch (odo) {
                    case OdometerKind::kGroundTruth: settings.odometer = Odometer::ground_truth(); break;
                    case OdometerKind::kDeadReckoning: settings.odometer = Odometer::dead_reckoning(); break;
                    case OdometerKind::kScanMatch:
                        settings.odometer = Odometer::scan_matching(cfg.scan_match, cfg.sensor);
                        break;
                    case OdometerKind::kCalibrated: {
                        const auto& model = noisy ? cfg.calibrated_noisy : cfg.calibrated_noiseless;
                        if (!model) {
                            throw ConfigError(std::string("calibrated odometer needs a ") +
                                              (noisy ? "noisy" : "noiseless") + " calibrated model");
                        }
                        settings.odometer = Odometer::calibrated(*model);
                        break;
                    }
                }
                std::vector<EpisodeRecord> records;
                for (std::size_t i = 0; i < cfg.episodes.size(); ++i) {
                    EpisodeSpec ep = cfg.episodes[i];
                    if (!ep.seed) ep.seed = derive_seed(cfg.seed, static_cast<std::uint64_t>(i));
                    records.push_back(run_episode(settings, grid_of(ep.scene), ep));
                }
                ReportRow row = aggregate(records);
                row.agent = std::string(to_string(agent));
                row.odometer = std::string(to_string(odo));
                row.noisy = noisy;
                result.report.rows.push_back(row);
                result.configurations.push_back({{agent, odo, noisy}, std::move(records)});
            }
        }
    }
    return result;
}

void write_trajectory_csv(std::ostream& out, const EpisodeRecord& record) {
    out << "step,action,x_true,z_true,yaw_true,x_est,z_est,yaw_est,reward\n";
    out << std::setprecision(17);
    auto row = [&](int step, std::string_view action, const Pose& truth, const Pose& est_in_start, double reward) {
        const Pose est = compose(record.start, est_in_start);
        out << step << ',' << action << ',' << truth.x << ',' << truth.z << ',' << truth.yaw << ',' << est.x << ','
            << est.z << ',' << est.yaw << ',' << reward << '\n';
    };
    row(0, "none", record.start, Pose::identity(), 0.0);
    for (std::size_t i = 0; i < record.steps.size(); ++i) {
        const StepRecord& s = record.steps[i];
        row(static_cast<int>(i + 1), to_string(s.action), s.true_pose, s.est_pose, s.reward);
    }
}

}  // namespace egonav
