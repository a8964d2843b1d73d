#include "egonav/egodata.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>

#include "egonav/harness.hpp"
#include "json.hpp"

namespace egonav {

void DatasetSpec::validate() const {
    if (pairs_per_scene <= 0) throw std::invalid_argument("pairs per scene must be > 0");
    if (trajectories_per_scene <= 0) throw std::invalid_argument("trajectories per scene must be > 0");
    if (max_attempts_per_trajectory <= 0) throw std::invalid_argument("max attempts must be > 0");
    sensor.validate();
    noise.validate();
}

DatasetConfig load_dataset_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    DatasetConfig cfg;
    DatasetSpec& spec = cfg.spec;
    try {
        // Ordered so scenes keep the order they are listed in.
        const nlohmann::ordered_json j = nlohmann::ordered_json::parse(in);
        spec.pairs_per_scene = j.value("pairs_per_scene", spec.pairs_per_scene);
        spec.trajectories_per_scene = j.value("trajectories_per_scene", spec.trajectories_per_scene);
        spec.noisy = j.value("noisy", spec.noisy);
        spec.seed = j.value("seed", spec.seed);
        spec.min_goal_distance = j.value("min_goal_distance", spec.min_goal_distance);
        spec.max_goal_distance = j.value("max_goal_distance", spec.max_goal_distance);
        if (j.contains("noise_model")) spec.noise = NoiseModel::from_json(j["noise_model"].dump(), spec.noise);
        if (j.contains("sensor")) {
            const auto& s = j["sensor"];
            spec.sensor.num_rays = s.value("num_rays", spec.sensor.num_rays);
            if (s.contains("fov_deg")) spec.sensor.fov = deg_to_rad(s["fov_deg"].get<double>());
            spec.sensor.min_range = s.value("min_range", spec.sensor.min_range);
            spec.sensor.max_range = s.value("max_range", spec.sensor.max_range);
        }
        for (const auto& [id, p] : j.at("maps").items()) {
            std::filesystem::path map_path(p.get<std::string>());
            if (map_path.is_relative()) map_path = path.parent_path() / map_path;
            cfg.scenes.push_back({id, load_map(map_path)});
        }
    } catch (const nlohmann::json::exception& e) {
        throw std::invalid_argument(path.string() + ": " + e.what());
    }
    if (cfg.scenes.empty()) throw std::invalid_argument(path.string() + ": no maps listed");
    spec.validate();
    return cfg;
}

std::vector<int> trajectory_quotas(int pairs, int trajectories) {
    if (pairs < 1 || trajectories < 1) throw std::invalid_argument("pair and trajectory counts must be > 0");
    std::vector<int> q(static_cast<std::size_t>(trajectories), pairs / trajectories);
    for (int i = 0; i < pairs % trajectories; ++i) ++q[static_cast<std::size_t>(i)];
    return q;
}

UnrolledTrajectory unroll_classic(const Scene& scene, const DatasetSpec& spec, int /*index*/, Rng& rng) {
    EpisodeSampler sampler;
    sampler.min_distance = spec.min_goal_distance;
    sampler.max_distance = spec.max_goal_distance;
    const EpisodeSpec episode = [&] {
        EpisodeSpec e = sample_episodes(scene.grid, scene.id, 1, sampler, rng).front();
        e.seed = rng();
        return e;
    }();

    EpisodeSettings settings;
    settings.agent = AgentKind::kClassic;
    settings.odometer = Odometer::ground_truth();
    settings.noisy = spec.noisy;
    settings.noise = spec.noise;
    settings.sensor = spec.sensor;
    settings.kinematics = spec.kinematics;
    const EpisodeRecord rec = run_episode(settings, scene.grid, episode);

    UnrolledTrajectory traj;
    traj.poses.push_back(episode.start);
    for (const StepRecord& s : rec.steps) {
        if (s.action == Action::kStop) break;
        traj.actions.push_back(s.action);
        traj.poses.push_back(s.true_pose);
        traj.collided.push_back(s.collided);
    }
    traj.success = rec.outcome.success;
    return traj;
}

std::vector<EgomotionSample> collect(const DatasetSpec& spec, std::span<const Scene> scenes,
                                     const UnrollPolicy& policy) {
    spec.validate();
    std::vector<EgomotionSample> out;
    for (const Scene& scene : scenes) {
        const std::uint64_t scene_seed = derive_seed(spec.seed, scene.id);
        const std::vector<int> quotas = trajectory_quotas(spec.pairs_per_scene, spec.trajectories_per_scene);
        for (int t = 0; t < spec.trajectories_per_scene; ++t) {
            const int quota = quotas[static_cast<std::size_t>(t)];
            Rng rng(derive_seed(scene_seed, static_cast<std::uint64_t>(t)));
            std::optional<UnrolledTrajectory> traj;
            for (int attempt = 0; attempt < spec.max_attempts_per_trajectory && !traj; ++attempt) {
                UnrolledTrajectory candidate = policy(scene, spec, t, rng);
                if (candidate.success && static_cast<int>(candidate.actions.size()) >= quota) {
                    traj = std::move(candidate);
                }
            }
            if (!traj) {
                throw CollectionError("scene '" + scene.id + "': no successful trajectory with at least " +
                                      std::to_string(quota) + " steps for trajectory " + std::to_string(t));
            }

            // Uniform sample of adjacent-step pairs without replacement.
            std::vector<int> steps(traj->actions.size());
            std::iota(steps.begin(), steps.end(), 0);
            for (int i = 0; i < quota; ++i) {
                std::uniform_int_distribution<std::size_t> pick(static_cast<std::size_t>(i), steps.size() - 1);
                std::swap(steps[static_cast<std::size_t>(i)], steps[pick(rng)]);
            }
            steps.resize(static_cast<std::size_t>(quota));
            std::sort(steps.begin(), steps.end());

            for (int k : steps) {
                const auto i = static_cast<std::size_t>(k);
                const Pose& src = traj->poses[i];
                const Pose& tgt = traj->poses[i + 1];
                EgomotionSample s;
                s.scene = scene.id;
                s.trajectory = t;
                s.step = k;
                s.action = traj->actions[i];
                s.prev_scan = raycast(scene.grid, src, spec.sensor);
                s.curr_scan = raycast(scene.grid, tgt, spec.sensor);
                s.gt_delta = relative_pose(src, tgt);
                s.collided = traj->collided[i];
                const Pose check = compose(src, s.gt_delta);
                if (std::abs(check.x - tgt.x) > 1e-9 || std::abs(check.z - tgt.z) > 1e-9 ||
                    std::abs(normalize_angle(check.yaw - tgt.yaw)) > 1e-9) {
                    throw std::logic_error("egomotion label does not reproduce the target pose");
                }
                out.push_back(std::move(s));
            }
        }
    }
    return out;
}

namespace {

nlohmann::json to_json(const EgomotionSample& s) {
    return {
        {"scene", s.scene},
        {"traj", s.trajectory},
        {"step", s.step},
        {"action", std::string(to_string(s.action))},
        {"prev_depths", s.prev_scan.depths},
        {"curr_depths", s.curr_scan.depths},
        {"delta", {s.gt_delta.dx, s.gt_delta.dy, s.gt_delta.dz, s.gt_delta.dyaw}},
        {"collided", s.collided},
    };
}

EgomotionSample from_json(const nlohmann::json& j, int line) {
    auto field = [&](const char* name) -> const nlohmann::json& {
        if (!j.contains(name)) throw DatasetFormatError(line, std::string("missing field '") + name + "'");
        return j[name];
    };
    try {
        EgomotionSample s;
        s.scene = field("scene").get<std::string>();
        s.trajectory = field("traj").get<int>();
        s.step = field("step").get<int>();
        s.action = parse_action(field("action").get<std::string>());
        if (s.action == Action::kStop) throw DatasetFormatError(line, "stop is not an egomotion action");
        s.prev_scan.depths = field("prev_depths").get<std::vector<double>>();
        s.curr_scan.depths = field("curr_depths").get<std::vector<double>>();
        if (s.prev_scan.depths.size() != s.curr_scan.depths.size()) {
            throw DatasetFormatError(line, "prev_depths and curr_depths differ in length");
        }
        const auto& d = field("delta");
        if (!d.is_array() || d.size() != 4) throw DatasetFormatError(line, "field 'delta' must hold 4 numbers");
        s.gt_delta = {d[0].get<double>(), d[1].get<double>(), d[2].get<double>(), d[3].get<double>()};
        s.collided = field("collided").get<bool>();
        return s;
    } catch (const nlohmann::json::exception& e) {
        throw DatasetFormatError(line, e.what());
    } catch (const std::invalid_argument& e) {
        throw DatasetFormatError(line, e.what());
    }
}

}  // namespace

void write_jsonl(std::ostream& out, std::span<const EgomotionSample> samples) {
    for (const EgomotionSample& s : samples) out << to_json(s).dump() << '\n';
}

std::vector<EgomotionSample> read_jsonl(std::istream& in) {
    std::vector<EgomotionSample> out;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw DatasetFormatError(line_no, std::string("malformed JSON: ") + e.what());
        }
        if (!j.is_object()) throw DatasetFormatError(line_no, "expected a JSON object");
        out.push_back(from_json(j, line_no));
    }
    return out;
}

void write_jsonl(const std::filesystem::path& path, std::span<const EgomotionSample> samples) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    write_jsonl(out, samples);
}

std::vector<EgomotionSample> read_jsonl(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    return read_jsonl(in);
}

std::vector<std::string> scene_ids(std::span<const EgomotionSample> samples) {
    std::vector<std::string> ids;
    for (const EgomotionSample& s : samples) {
        if (std::find(ids.begin(), ids.end(), s.scene) == ids.end()) ids.push_back(s.scene);
    }
    return ids;
}

DatasetSplit split(std::span<const EgomotionSample> samples, double train_ratio,
                   const std::vector<std::string>& held_out_scenes, std::uint64_t seed) {
    if (!(train_ratio >= 0.0 && train_ratio <= 1.0)) throw std::invalid_argument("train ratio must be in [0, 1]");
    const std::vector<std::string> ids = scene_ids(samples);
    for (const std::string& h : held_out_scenes) {
        if (std::find(ids.begin(), ids.end(), h) == ids.end()) {
            throw std::invalid_argument("held-out scene '" + h + "' does not occur in the dataset");
        }
    }
    if (!held_out_scenes.empty() && held_out_scenes.size() >= ids.size()) {
        throw std::invalid_argument("a val-unseen split needs at least one training scene besides the held-out ones");
    }

    DatasetSplit out;
    for (const std::string& id : ids) {
        std::vector<std::size_t> idx;
        for (std::size_t i = 0; i < samples.size(); ++i)
            if (samples[i].scene == id) idx.push_back(i);
        const bool held_out = std::find(held_out_scenes.begin(), held_out_scenes.end(), id) != held_out_scenes.end();
        if (held_out) {
            for (std::size_t i : idx) out.val_unseen.push_back(samples[i]);
            continue;
        }
        Rng rng(derive_seed(seed, id));
        std::vector<std::size_t> order = idx;
        std::shuffle(order.begin(), order.end(), rng);
        const auto n_train = static_cast<std::size_t>(std::llround(train_ratio * static_cast<double>(idx.size())));
        std::vector<std::size_t> train(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
        std::vector<std::size_t> val(order.begin() + static_cast<std::ptrdiff_t>(n_train), order.end());
        std::sort(train.begin(), train.end());
        std::sort(val.begin(), val.end());
        for (std::size_t i : train) out.train.push_back(samples[i]);
        for (std::size_t i : val) out.val_seen.push_back(samples[i]);
    }
    return out;
}

}  // namespace egonav
