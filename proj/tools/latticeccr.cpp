#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "latticeccr/experiment.hpp"

namespace fs = std::filesystem;
using namespace latticeccr;

namespace {

enum ExitCode { kOk = 0, kInternal = 1, kConfig = 2, kTolerance = 3, kLeakage = 4 };

struct Failure {
    ExitCode code;
    std::string reason_code;
    std::string message;
};

nlohmann::json load_document(const std::string& config_path, const std::string& experiment,
                             const std::vector<std::string>& overrides) {
    nlohmann::json doc = nlohmann::json::object();
    if (!config_path.empty()) {
        std::ifstream in(config_path);
        if (!in) throw ConfigError("--config", "cannot read config file " + config_path);
        std::stringstream text;
        text << in.rdbuf();
        try {
            doc = nlohmann::json::parse(text.str());
        } catch (const nlohmann::json::parse_error& e) {
            throw ConfigError("", config_path + ": syntax error at byte " + std::to_string(e.byte));
        }
        if (!doc.is_object()) throw ConfigError("", config_path + ": top level must be an object");
    }
    if (doc.contains("experiment") && doc["experiment"] != experiment) {
        throw ConfigError("experiment", "config names experiment " + doc["experiment"].dump() +
                                            " but the command is " + experiment);
    }
    doc["experiment"] = experiment;
    for (const auto& assignment : overrides) apply_override(doc, assignment);
    return doc;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Lattice canonical-commutation experiments"};
    std::string experiment;
    std::string config_path;
    std::vector<std::string> overrides;
    std::string out_dir = ".";
    std::vector<std::string> names;
    for (const auto& [value, name] : kExperimentNames) names.emplace_back(name);
    app.add_option("experiment", experiment, "Experiment to run")->required()->check(CLI::IsMember(names));
    app.add_option("--config", config_path, "JSON configuration file");
    app.add_option("--set", overrides, "Override a config field, key=value with dotted keys");
    app.add_option("--out", out_dir, "Output directory");
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kOk : kConfig;
    }

    const auto start = std::chrono::steady_clock::now();
    ManifestTiming timing{utc_now(), 0.0};
    std::optional<ExperimentConfig> cfg;
    std::optional<RunResult> result;
    std::optional<Failure> failure;
    try {
        cfg = config_from_json(load_document(config_path, experiment, overrides));
        result = run_experiment(*cfg);
    } catch (const ConfigError& e) {
        failure = Failure{kConfig, "config", e.what()};
    } catch (const LeakageError& e) {
        failure = Failure{kLeakage, "leakage", e.what()};
    } catch (const ToleranceError& e) {
        failure = Failure{kTolerance, "tolerance", e.what()};
    } catch (const ConvergenceError& e) {
        failure = Failure{kTolerance, "tolerance", e.what()};
    } catch (const InsufficientDataError& e) {
        failure = Failure{kTolerance, "tolerance", e.what()};
    } catch (const std::invalid_argument& e) {
        failure = Failure{kConfig, "config", e.what()};
    } catch (const std::out_of_range& e) {
        failure = Failure{kConfig, "config", e.what()};
    } catch (const std::exception& e) {
        failure = Failure{kInternal, "internal", e.what()};
    }

    const std::string file = cfg ? cfg->output_path : experiment + ".csv";
    const fs::path dataset_path = fs::path(out_dir) / file;
    try {
        if (result) emit_dataset(result->dataset, dataset_path, cfg->output_format);
        timing.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        const nlohmann::json manifest =
            build_manifest(cfg, result ? &*result : nullptr, failure ? "failed" : "ok",
                           failure ? failure->reason_code : "", failure ? failure->message : "", file, timing);
        write_atomic(manifest_path(dataset_path), manifest.dump(2) + "\n");
    } catch (const std::exception& e) {
        std::cerr << "latticeccr: " << e.what() << "\n";
        return kInternal;
    }

    if (failure) {
        std::cerr << "latticeccr " << experiment << ": " << failure->reason_code << " error: " << failure->message
                  << "\n";
        return failure->code;
    }
    for (const auto& w : result->warnings) std::cerr << "warning: " << w << "\n";
    std::cout << dataset_path.string() << " (" << result->dataset.rows.size() << " rows)\n";
    return kOk;
}
