#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "egonav/actuation.hpp"
#include "egonav/environment.hpp"
#include "egonav/geometry.hpp"

namespace egonav {

/// One (src, tgt) pair of adjacent agent states and the egomotion between them.
struct EgomotionSample {
    std::string scene;
    int trajectory = 0;
    int step = 0;
    Action action = Action::kMoveForward;
    DepthScan prev_scan;
    DepthScan curr_scan;
    MotionDelta gt_delta;
    bool collided = false;

    friend bool operator==(const EgomotionSample&, const EgomotionSample&) = default;
};

struct Scene {
    std::string id;
    OccupancyGrid grid;
};

struct DatasetSpec {
    int pairs_per_scene = 250;
    int trajectories_per_scene = 10;
    bool noisy = false;
    NoiseModel noise = NoiseModel::locobot();
    std::uint64_t seed = 0;
    SensorConfig sensor;
    KinematicsConfig kinematics;
    /// Episode sampling for the unrolled trajectories.
    double min_goal_distance = 2.0;
    double max_goal_distance = 6.0;
    int max_attempts_per_trajectory = 40;

    void validate() const;
};

/// A collection job: the spec plus the scenes it runs on.
struct DatasetConfig {
    DatasetSpec spec;
    std::vector<Scene> scenes;
};

/// Reads {"maps": {id: path}, "pairs_per_scene", "trajectories_per_scene", "noisy", "seed",
/// "noise_model", "sensor", "min_goal_distance", "max_goal_distance"}; map paths resolve
/// against the config's directory.
DatasetConfig load_dataset_config(const std::filesystem::path& path);

/// Per-trajectory quotas: pairs split as evenly as possible, remainder to the earliest.
std::vector<int> trajectory_quotas(int pairs, int trajectories);

/// A trajectory unrolled by some policy: true poses t = 0..T and the actions between them.
struct UnrolledTrajectory {
    std::vector<Pose> poses;
    std::vector<Action> actions;
    std::vector<bool> collided;
    bool success = false;
};

/// Produces trajectory number `index` of a scene from its own RNG stream.
using UnrollPolicy = std::function<UnrolledTrajectory(const Scene&, const DatasetSpec&, int index, Rng& rng)>;

/// The default unroller: classic agent with ground-truth localization on random episodes.
UnrolledTrajectory unroll_classic(const Scene& scene, const DatasetSpec& spec, int index, Rng& rng);

class CollectionError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Collects adjacent-step egomotion pairs per scene; output is ordered by
/// (scene, trajectory, step). Throws CollectionError when a scene yields no usable trajectory.
std::vector<EgomotionSample> collect(const DatasetSpec& spec, std::span<const Scene> scenes,
                                     const UnrollPolicy& policy = unroll_classic);

class DatasetFormatError : public std::runtime_error {
public:
    DatasetFormatError(int line, const std::string& what)
        : std::runtime_error("dataset line " + std::to_string(line) + ": " + what), line_(line) {}
    int line() const { return line_; }

private:
    int line_;
};

void write_jsonl(std::ostream& out, std::span<const EgomotionSample> samples);
std::vector<EgomotionSample> read_jsonl(std::istream& in);
void write_jsonl(const std::filesystem::path& path, std::span<const EgomotionSample> samples);
std::vector<EgomotionSample> read_jsonl(const std::filesystem::path& path);

struct DatasetSplit {
    std::vector<EgomotionSample> train;
    std::vector<EgomotionSample> val_seen;
    std::vector<EgomotionSample> val_unseen;
};

/// val_unseen takes every sample of the held-out scenes. Samples of the remaining scenes
/// are shuffled per scene and split so that round(ratio * n) go to train, the rest to val_seen.
DatasetSplit split(std::span<const EgomotionSample> samples, double train_ratio,
                   const std::vector<std::string>& held_out_scenes, std::uint64_t seed);

/// Scene ids in first-appearance order.
std::vector<std::string> scene_ids(std::span<const EgomotionSample> samples);

}  // namespace egonav
