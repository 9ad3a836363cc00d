#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "toolcal/config.hpp"
#include "toolcal/dataset.hpp"
#include "toolcal/metrics.hpp"
#include "toolcal/prior.hpp"

namespace toolcal {

// Command-line overrides applied on top of a loaded config.
struct RunOverrides {
    std::optional<BackendMode> backend_mode;
    bool simulate = false;  // every role uses the simulator
    std::optional<std::string> output_dir;
    std::optional<std::size_t> concurrency;
};

void apply_overrides(ExperimentConfig& config, const RunOverrides& overrides);

// Resolves the dataset described by the config into the dev/test split
// shared by every variant.
Split load_split(const ExperimentConfig& config);

struct RunSummary {
    std::filesystem::path run_dir;
    std::size_t tasks = 0;
    std::size_t failures = 0;
    std::optional<PriorTable> prior;
    std::vector<EvalOutcome> outcomes;
    nlohmann::json metrics;
    std::vector<std::string> warnings;
};

// Runs the configured variant end to end and writes config.json,
// split.json, runlog.jsonl, prior.json (when built), metrics.json and
// summary.txt into <output_dir>/<name>. Backend failures flag the task and
// the run continues; configuration problems throw before any model call.
RunSummary run_experiment(const ExperimentConfig& config);

// Prior collection alone: dev split only, writes prior.json.
RunSummary run_prior(const ExperimentConfig& config);

// Human readable variant label ("ART (V)", "DSP + SMARTCAL", ...).
std::string variant_label(const ExperimentConfig& config);
// Ablation column name ("w/ CPC, w/o SE", ...); empty for baseline runs.
std::string ablation_label(const ExperimentConfig& config);

// Records of runlog.jsonl whose task_id matches, in file order.
std::vector<nlohmann::json> find_task_records(const std::filesystem::path& runlog, const std::string& task_id);

// A copy of a run log record without its timestamps.
nlohmann::json strip_timestamps(nlohmann::json record);

} // namespace toolcal
