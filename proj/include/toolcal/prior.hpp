#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "toolcal/trace.hpp"

namespace toolcal {

struct ConfidenceBin {
    double lower = 0.0;
    double upper = 0.0;
    std::size_t count = 0;
    double accuracy = 0.0;                // 0 when empty
    double mean_stated_confidence = 0.0;  // 0 when empty

    bool empty() const noexcept { return count == 0; }
    friend bool operator==(const ConfidenceBin&, const ConfidenceBin&) = default;
};

struct PriorProvenance {
    std::string dataset_id;
    std::string model_name;
    std::string run_id;

    friend bool operator==(const PriorProvenance&, const PriorProvenance&) = default;
};

// Confidence -> empirical accuracy lookup collected on a heldout split.
// Tasks without an extractable confidence are counted in unparsed_bin, whose
// interval mirrors the first numeric bin.
struct PriorTable {
    double stepsize = 0.1;
    std::vector<ConfidenceBin> bins;
    ConfidenceBin unparsed_bin;
    PriorProvenance provenance;

    std::size_t total_count() const noexcept;
    friend bool operator==(const PriorTable&, const PriorTable&) = default;
};

struct ScoredResult {
    TaskConfidence confidence;
    bool correct = false;
};

// Throws InvalidArgument on an invalid stepsize or empty results.
PriorTable build_prior(std::span<const ScoredResult> results, double stepsize, PriorProvenance provenance = {});

// Unparsed confidences map to unparsed_bin; parsed ones to the unique
// numeric bin containing the value (the last bin is closed at 1.0).
const ConfidenceBin& lookup(const PriorTable& table, const TaskConfidence& confidence);

inline constexpr int kPriorSchemaVersion = 1;

std::string serialize_prior(const PriorTable& table);
// Throws SchemaError on malformed input or a schema version mismatch.
PriorTable deserialize_prior(std::string_view bytes);

} // namespace toolcal
