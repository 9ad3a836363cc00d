#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "toolcal/dataset.hpp"
#include "toolcal/http_backend.hpp"
#include "toolcal/reasoning.hpp"
#include "toolcal/simulator.hpp"

namespace toolcal {

enum class Variant { baseline, verbalized, smartcal };
enum class BackendMode { live, record, replay };
enum class BackendKind { http, simulator };

std::string_view to_string(Variant v) noexcept;
Variant parse_variant(std::string_view name);
std::string_view to_string(BackendMode m) noexcept;
BackendMode parse_backend_mode(std::string_view name);
std::string_view to_string(BackendKind k) noexcept;
BackendKind parse_backend_kind(std::string_view name);

inline constexpr const char* kAgentRole = "agent";
inline constexpr const char* kTeacherRole = "teacher";
inline constexpr const char* kCalibratorRole = "calibrator";

struct BackendSpec {
    BackendKind kind = BackendKind::simulator;
    std::string model;
    std::string base_url;
    std::string api_key_env = "OPENAI_API_KEY";
    ApiStyle api_style = ApiStyle::chat;
    int max_retries = 3;
    int timeout_s = 60;
    std::size_t max_in_flight = 4;
};

struct DatasetSpec {
    // canonical | mintaka | popqa | triplets | synthetic
    std::string loader = "synthetic";
    std::string path;
    std::string dev_path;
    std::string test_path;
    DatasetFormat format = DatasetFormat::jsonl;
    std::map<std::string, std::string> templates;  // triplets only
    std::size_t synthetic_count = 1000;
    std::uint64_t synthetic_seed = 1;
};

// A single JSON document describing one experiment. Relative paths are
// resolved against the directory of the config file.
struct ExperimentConfig {
    std::string name = "experiment";
    Dialect dialect = Dialect::art;
    Variant variant = Variant::smartcal;
    bool enable_se = true;
    bool enable_cpc = true;
    CalibrationMode calibration_mode = CalibrationMode::llm_edit;

    BackendMode backend_mode = BackendMode::live;
    std::string cache_path;
    std::map<std::string, BackendSpec> backends;  // agent, teacher, calibrator
    SimulatedAgentPolicy simulator;

    DatasetSpec dataset;
    SplitSpec split;
    RunLimits limits;
    double temperature = 0.7;
    double stepsize = 0.1;
    std::size_t concurrency = 4;

    std::string demos_path;
    std::string task_description = "Answer the factual question about the named entity.";
    std::string tool_catalog_path;
    std::optional<nlohmann::json> tool_registry;
    std::string corpus_path;
    std::optional<std::vector<std::string>> reference_allowed_tools;
    bool ece_include_unparsed = true;
    std::string output_dir = "runs";

    std::filesystem::path base_dir;

    std::filesystem::path resolve(const std::string& path) const;
    const BackendSpec& backend(const std::string& role) const;
    bool uses_se() const noexcept { return variant == Variant::smartcal && enable_se; }
    bool uses_cpc() const noexcept { return variant == Variant::smartcal && enable_cpc; }

    // Throws ConfigError describing the first violated rule.
    void validate() const;
    // Fully defaulted, key-sorted rendering.
    nlohmann::json to_json() const;
    // SHA-256 of the canonical rendering without output_dir, concurrency,
    // backend_mode and cache_path; independent of field order in the file.
    std::string fingerprint() const;
};

// Unknown top-level keys are rejected so typos surface early.
ExperimentConfig config_from_json(const nlohmann::json& j, std::filesystem::path base_dir = {});
ExperimentConfig load_config(const std::filesystem::path& path);

// Demonstrations used when demos_path is unset.
std::string default_demos(Dialect dialect);

} // namespace toolcal
