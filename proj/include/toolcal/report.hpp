#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

namespace toolcal {

struct ComparisonTable {
    struct Row {
        std::string dataset;
        std::string model;
        std::map<std::string, double> values;  // column -> value
    };

    std::string title;
    std::vector<std::string> columns;
    std::vector<Row> rows;
};

struct ComparisonReport {
    ComparisonTable accuracy;
    ComparisonTable ece;
    std::optional<ComparisonTable> ablation_accuracy;
    std::optional<ComparisonTable> ablation_ece;
};

// Reads metrics.json from each run directory. Rows are (dataset, model),
// columns are variants. Runs on the same dataset must share a split
// fingerprint; a mismatch throws InvalidArgument listing every run's
// fingerprint. Ablation tables appear when a run masks SE or CPC.
ComparisonReport build_report(const std::vector<std::filesystem::path>& run_dirs);
ComparisonReport build_report(const std::vector<nlohmann::json>& metrics);

std::string render_text(const ComparisonReport& report);
nlohmann::json to_json(const ComparisonReport& report);

} // namespace toolcal
