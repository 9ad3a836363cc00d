#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "toolcal/trace.hpp"

namespace toolcal {

// Bidirectional containment after normalization (lowercase, trim, collapse
// whitespace): the answer contains a label or a label contains the answer.
// An empty normalized answer never matches.
bool exact_match(std::string_view answer, std::span<const std::string> labels);

struct EvalOutcome {
    std::string task_id;
    std::string answer;
    bool correct = false;
    TaskConfidence task_confidence;
    ToolCounts tool_tags;
    std::optional<std::vector<std::string>> allowed_tools;
};

nlohmann::json to_json(const EvalOutcome& outcome);
EvalOutcome outcome_from_json(const nlohmann::json& j);

struct ReliabilityBin {
    double lower = 0.0;
    double upper = 0.0;
    std::size_t count = 0;
    double accuracy = 0.0;
    double mean_confidence = 0.0;
};

struct UnparsedSummary {
    std::size_t count = 0;
    double accuracy = 0.0;
    bool included = true;
};

struct ReliabilityReport {
    double stepsize = 0.1;
    std::vector<ReliabilityBin> bins;
    double ece = 0.0;
    // Outcomes entering the ECE sum (unparsed ones only when included).
    std::size_t n = 0;
    UnparsedSummary unparsed;
    std::vector<std::string> warnings;
};

// Count-weighted mean |accuracy - mean stated confidence| over non-empty
// bins. Unparsed confidences form their own bin scored at confidence 0
// when include_unparsed is set. Throws InvalidArgument on an empty input or
// an invalid stepsize.
ReliabilityReport ece(std::span<const EvalOutcome> outcomes, double stepsize, bool include_unparsed = true);

struct ToolShare {
    std::size_t count = 0;
    double fraction = 0.0;
};

std::map<std::string, ToolShare> tool_usage_distribution(std::span<const EvalOutcome> outcomes);

// Fraction of invocations whose tag is outside the outcome's allowed tools.
// Throws InvalidArgument naming the first task without allowed_tools.
// Returns 0 when there are no invocations.
double misuse_rate(std::span<const EvalOutcome> outcomes);

double accuracy(std::span<const EvalOutcome> outcomes);

nlohmann::json to_json(const ReliabilityReport& report);
nlohmann::json to_json(const std::map<std::string, ToolShare>& usage);

} // namespace toolcal
