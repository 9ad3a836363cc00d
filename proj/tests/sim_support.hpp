#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "toolcal/config.hpp"
#include "toolcal/runner.hpp"

namespace toolcal::testkit {

// Fresh scratch directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name)
{
    auto dir = std::filesystem::temp_directory_path() / "toolcal_tests" / name;
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

// The simulated experiment used by the integration tests: misuse 0.25,
// bias +0.3, accuracies 0.6 / 0.3 over a synthetic dataset.
inline nlohmann::json sim_config_json(const std::string& name, const std::string& variant, std::size_t dev,
                                      std::size_t test)
{
    nlohmann::json j{
        {"name", name},
        {"variant", variant},
        {"dialect", "art"},
        {"simulator",
         {{"misuse_probability", 0.25},
          {"confidence_bias", 0.3},
          {"base_accuracy_correct_tools", 0.6},
          {"base_accuracy_misuse", 0.3},
          {"rng_seed", 42}}},
        {"dataset", {{"loader", "synthetic"}, {"synthetic_count", 2 * (dev + test)}, {"synthetic_seed", 1}}},
        {"split", {{"dev_size", dev}, {"test_size", test}}},
        {"rng_seed", 7},
        {"concurrency", 4},
        {"output_dir", "runs"},
    };
    if (variant == "smartcal") {
        j["calibration_mode"] = "table_direct";
    }
    return j;
}

inline ExperimentConfig sim_config(const nlohmann::json& j, const std::filesystem::path& base)
{
    return config_from_json(j, base);
}

inline std::vector<nlohmann::json> read_runlog(const std::filesystem::path& path)
{
    std::vector<nlohmann::json> out;
    std::ifstream in(path);
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty()) {
            out.push_back(nlohmann::json::parse(line));
        }
    }
    return out;
}

inline std::vector<nlohmann::json> stripped(const std::vector<nlohmann::json>& records)
{
    std::vector<nlohmann::json> out;
    for (const auto& r : records) out.push_back(strip_timestamps(r));
    return out;
}

} // namespace toolcal::testkit
