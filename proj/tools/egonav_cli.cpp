#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "egonav/egodata.hpp"
#include "egonav/harness.hpp"
#include "egonav/odometry.hpp"

namespace fs = std::filesystem;
using namespace egonav;

namespace {

fs::path output_dir() {
    const char* env = std::getenv("EGONAV_OUTPUT_DIR");
    return env && *env ? fs::path(env) : fs::path(".");
}

fs::path or_default(const std::string& given, const std::string& file_name) {
    return given.empty() ? output_dir() / file_name : fs::path(given);
}

std::string read_text(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_text(const fs::path& path, const std::string& text) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << text;
}

void require_file(const fs::path& path) {
    if (!fs::is_regular_file(path)) throw std::runtime_error("no such file: " + path.string());
}

int cmd_collect(const std::string& spec_path, const std::string& out, std::optional<std::uint64_t> seed,
                std::optional<bool> noisy) {
    require_file(spec_path);
    DatasetConfig cfg = load_dataset_config(spec_path);
    if (seed) cfg.spec.seed = *seed;
    if (noisy) cfg.spec.noisy = *noisy;
    const auto samples = collect(cfg.spec, cfg.scenes);
    const fs::path path = or_default(out, "dataset.jsonl");
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    write_jsonl(path, samples);
    std::size_t counts[3] = {0, 0, 0};
    for (const auto& s : samples) ++counts[motion_index(s.action)];
    std::cout << "wrote " << samples.size() << " samples to " << path.string() << " (forward " << counts[0]
              << ", left " << counts[1] << ", right " << counts[2] << ")\n";
    return 0;
}

int cmd_fit(const std::string& data, const std::string& out) {
    require_file(data);
    const auto samples = read_jsonl(fs::path(data));
    const CalibratedModel model = fit_calibrated(samples);
    const fs::path path = or_default(out, "calibrated.json");
    write_text(path, model.to_json());
    for (Action a : kMotionActions) {
        const std::size_t i = motion_index(a);
        const MotionDelta& m = model.mean[i];
        std::cout << std::left << std::setw(13) << to_string(a) << std::right << std::fixed << std::setprecision(4)
                  << " dx " << m.dx << " dz " << m.dz << " dyaw " << m.dyaw << "  n=" << model.count[i]
                  << (model.fallback[i] ? "  (fallback)" : "") << '\n';
    }
    std::cout << "wrote " << path.string() << '\n';
    return 0;
}

int cmd_eval(const std::string& data, const std::string& model_path, std::vector<std::string> held_out,
             double ratio, std::uint64_t seed) {
    require_file(data);
    const auto samples = read_jsonl(fs::path(data));
    if (samples.empty()) throw std::runtime_error("dataset is empty");
    if (held_out.empty()) held_out.push_back(scene_ids(samples).back());
    const DatasetSplit parts = split(samples, ratio, held_out, seed);
    CalibratedModel model;
    if (model_path.empty()) {
        model = fit_calibrated(parts.train);
    } else {
        require_file(model_path);
        model = CalibratedModel::from_json(read_text(model_path));
    }
    auto calibrated = [&](const EgomotionSample& s) { return model.lookup(s.action); };
    auto dead = [](const EgomotionSample& s) { return dead_reckon(s.action); };

    std::cout << std::left << std::setw(12) << "split" << std::right << std::setw(8) << "n" << std::setw(14)
              << "calibrated" << std::setw(16) << "dead_reckoning" << '\n';
    auto line = [&](const char* name, const std::vector<EgomotionSample>& set) {
        std::cout << std::left << std::setw(12) << name << std::right << std::setw(8) << set.size();
        if (set.empty()) {
            std::cout << std::setw(14) << "-" << std::setw(16) << "-" << '\n';
            return;
        }
        std::cout << std::scientific << std::setprecision(4) << std::setw(14) << mean_smooth_l1(set, calibrated)
                  << std::setw(16) << mean_smooth_l1(set, dead) << std::defaultfloat << '\n';
    };
    line("train", parts.train);
    line("val-seen", parts.val_seen);
    line("val-unseen", parts.val_unseen);
    return 0;
}

int cmd_run(const std::string& config, std::optional<std::uint64_t> seed, const std::string& out,
            const std::string& trajectories) {
    require_file(config);
    RunConfig cfg = RunConfig::load(config);
    if (seed) cfg.seed = *seed;
    if (!out.empty()) cfg.report_path = fs::path(out);
    if (!trajectories.empty()) cfg.trajectories_dir = fs::path(trajectories);
    if (!cfg.report_path) cfg.report_path = output_dir() / "report.json";

    const RunResult result = run_matrix(cfg);
    write_text(*cfg.report_path, result.report.to_json());
    if (cfg.trajectories_dir) {
        fs::create_directories(*cfg.trajectories_dir);
        for (const auto& [key, records] : result.configurations) {
            const std::string tag = std::string(to_string(key.agent)) + "_" + std::string(to_string(key.odometer)) +
                                    (key.noisy ? "_noisy" : "_noiseless");
            for (std::size_t i = 0; i < records.size(); ++i) {
                std::ostringstream name;
                name << tag << "_ep" << std::setw(3) << std::setfill('0') << i << ".csv";
                std::ofstream csv(*cfg.trajectories_dir / name.str());
                if (!csv) throw std::runtime_error("cannot write trajectory " + name.str());
                write_trajectory_csv(csv, records[i]);
            }
        }
    }
    std::cout << format_table(result.report.rows);
    std::cout << "wrote " << cfg.report_path->string() << '\n';
    return 0;
}

int cmd_report(const std::vector<std::string>& inputs) {
    Report merged;
    for (const auto& path : inputs) {
        require_file(path);
        const Report r = Report::from_json(read_text(path));
        merged.rows.insert(merged.rows.end(), r.rows.begin(), r.rows.end());
    }
    std::cout << format_table(merged.rows);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Desk-scale point-goal navigation lab"};
    app.require_subcommand(1);

    std::string spec_path, out, data, model, config, trajectories;
    std::optional<std::uint64_t> seed;
    std::optional<bool> noisy;
    std::vector<std::string> held_out, reports;
    double ratio = 0.8;
    std::uint64_t split_seed = 0;

    auto* collect_cmd = app.add_subcommand("collect", "Collect an egomotion dataset");
    collect_cmd->add_option("--spec", spec_path, "Dataset spec JSON")->required();
    collect_cmd->add_option("--out", out, "Output JSONL (default $EGONAV_OUTPUT_DIR/dataset.jsonl)");
    collect_cmd->add_option("--seed", seed, "Override the spec seed");
    collect_cmd->add_option("--noisy", noisy, "Override actuation noise (true/false)");

    auto* fit_cmd = app.add_subcommand("fit-odom", "Fit a calibrated odometer");
    fit_cmd->add_option("--data", data, "Dataset JSONL")->required();
    fit_cmd->add_option("--out", out, "Model JSON (default $EGONAV_OUTPUT_DIR/calibrated.json)");

    auto* eval_cmd = app.add_subcommand("eval-odom", "Smooth-L1 of calibrated vs dead-reckoning per split");
    eval_cmd->add_option("--data", data, "Dataset JSONL")->required();
    eval_cmd->add_option("--model", model, "Model JSON (default: fit on the train split)");
    eval_cmd->add_option("--held-out", held_out, "Scenes held out as val-unseen (default: the last scene)");
    eval_cmd->add_option("--ratio", ratio, "Train share of the remaining scenes")->check(CLI::Range(0.0, 1.0));
    eval_cmd->add_option("--seed", split_seed, "Split seed");

    auto* run_cmd = app.add_subcommand("run", "Run the episode matrix");
    run_cmd->add_option("--config", config, "Run config JSON")->required();
    run_cmd->add_option("--seed", seed, "Override the run seed");
    run_cmd->add_option("--out", out, "Report JSON (default: config, else $EGONAV_OUTPUT_DIR/report.json)");
    run_cmd->add_option("--trajectories", trajectories, "Directory for per-episode CSV tracks");

    auto* report_cmd = app.add_subcommand("report", "Merge reports into one table");
    report_cmd->add_option("reports", reports, "Report JSON files")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (collect_cmd->parsed()) return cmd_collect(spec_path, out, seed, noisy);
        if (fit_cmd->parsed()) return cmd_fit(data, out);
        if (eval_cmd->parsed()) return cmd_eval(data, model, held_out, ratio, split_seed);
        if (run_cmd->parsed()) return cmd_run(config, seed, out, trajectories);
        if (report_cmd->parsed()) return cmd_report(reports);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 1;
}
