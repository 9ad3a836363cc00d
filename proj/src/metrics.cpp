#include "toolcal/metrics.hpp"

#include <cmath>

#include "toolcal/binning.hpp"
#include "toolcal/error.hpp"
#include "toolcal/text.hpp"

namespace toolcal {

using nlohmann::json;

bool exact_match(std::string_view answer, std::span<const std::string> labels)
{
    const std::string a = text::normalize(answer);
    if (a.empty()) {
        return false;
    }
    for (const auto& label : labels) {
        const std::string l = text::normalize(label);
        if (l.empty()) {
            continue;
        }
        if (a.find(l) != std::string::npos || l.find(a) != std::string::npos) {
            return true;
        }
    }
    return false;
}

json to_json(const EvalOutcome& outcome)
{
    json j{{"task_id", outcome.task_id},
           {"answer", outcome.answer},
           {"correct", outcome.correct},
           {"task_confidence", outcome.task_confidence.parsed() ? json(outcome.task_confidence.value()) : json()},
           {"tool_tags", outcome.tool_tags}};
    j["allowed_tools"] = outcome.allowed_tools ? json(*outcome.allowed_tools) : json();
    return j;
}

EvalOutcome outcome_from_json(const json& j)
{
    EvalOutcome o;
    o.task_id = j.at("task_id").get<std::string>();
    o.answer = j.value("answer", "");
    o.correct = j.at("correct").get<bool>();
    if (j.contains("task_confidence") && !j["task_confidence"].is_null()) {
        o.task_confidence = TaskConfidence::of(j["task_confidence"].get<double>());
    }
    if (j.contains("tool_tags")) {
        o.tool_tags = j["tool_tags"].get<ToolCounts>();
    }
    if (j.contains("allowed_tools") && !j["allowed_tools"].is_null()) {
        o.allowed_tools = j["allowed_tools"].get<std::vector<std::string>>();
    }
    return o;
}

ReliabilityReport ece(std::span<const EvalOutcome> outcomes, double stepsize, bool include_unparsed)
{
    BinLayout layout(stepsize);
    if (outcomes.empty()) {
        throw InvalidArgument("ECE of an empty outcome set is undefined");
    }

    struct Acc {
        std::size_t count = 0;
        std::size_t correct = 0;
        double conf_sum = 0.0;
    };
    std::vector<Acc> acc(layout.count());
    Acc unparsed;
    for (const auto& o : outcomes) {
        if (!o.task_confidence.parsed()) {
            ++unparsed.count;
            unparsed.correct += o.correct ? 1 : 0;
            continue;
        }
        auto& a = acc[layout.index_of(o.task_confidence.value())];
        ++a.count;
        a.correct += o.correct ? 1 : 0;
        a.conf_sum += o.task_confidence.value();
    }

    ReliabilityReport report;
    report.stepsize = stepsize;
    report.unparsed.count = unparsed.count;
    report.unparsed.included = include_unparsed;
    if (unparsed.count > 0) {
        report.unparsed.accuracy = static_cast<double>(unparsed.correct) / static_cast<double>(unparsed.count);
    }

    double weighted = 0.0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < layout.count(); ++i) {
        ReliabilityBin bin{layout.lower(i), layout.upper(i), acc[i].count, 0.0, 0.0};
        if (acc[i].count > 0) {
            const double cnt = static_cast<double>(acc[i].count);
            bin.accuracy = static_cast<double>(acc[i].correct) / cnt;
            bin.mean_confidence = acc[i].conf_sum / cnt;
            weighted += cnt * std::abs(bin.accuracy - bin.mean_confidence);
            n += acc[i].count;
        }
        report.bins.push_back(bin);
    }
    if (include_unparsed && unparsed.count > 0) {
        // Scored at confidence 0, so the gap is the bin's accuracy.
        weighted += static_cast<double>(unparsed.count) * report.unparsed.accuracy;
        n += unparsed.count;
        report.warnings.push_back(std::to_string(unparsed.count) +
                                  " outcome(s) without an extractable confidence scored at confidence 0; "
                                  "ECE may understate miscalibration when most confidences are missing");
    } else if (unparsed.count > 0) {
        report.warnings.push_back(std::to_string(unparsed.count) +
                                  " outcome(s) without an extractable confidence excluded from ECE");
    }
    report.n = n;
    if (n == 0) {
        report.warnings.push_back("no outcome entered the ECE sum");
        report.ece = 0.0;
    } else {
        report.ece = weighted / static_cast<double>(n);
    }
    return report;
}

std::map<std::string, ToolShare> tool_usage_distribution(std::span<const EvalOutcome> outcomes)
{
    std::map<std::string, ToolShare> usage;
    std::size_t total = 0;
    for (const auto& o : outcomes) {
        for (const auto& [tool, count] : o.tool_tags) {
            usage[tool].count += count;
            total += count;
        }
    }
    for (auto& [tool, share] : usage) {
        share.fraction = total == 0 ? 0.0 : static_cast<double>(share.count) / static_cast<double>(total);
    }
    return usage;
}

double misuse_rate(std::span<const EvalOutcome> outcomes)
{
    std::size_t total = 0;
    std::size_t misused = 0;
    for (const auto& o : outcomes) {
        if (!o.allowed_tools) {
            throw InvalidArgument("task " + o.task_id + " has no allowed tool set; misuse rate is undefined");
        }
        for (const auto& [tool, count] : o.tool_tags) {
            total += count;
            bool allowed = false;
            for (const auto& a : *o.allowed_tools) {
                if (text::iequals(a, tool)) {
                    allowed = true;
                    break;
                }
            }
            if (!allowed) {
                misused += count;
            }
        }
    }
    return total == 0 ? 0.0 : static_cast<double>(misused) / static_cast<double>(total);
}

double accuracy(std::span<const EvalOutcome> outcomes)
{
    if (outcomes.empty()) {
        return 0.0;
    }
    std::size_t correct = 0;
    for (const auto& o : outcomes) {
        correct += o.correct ? 1 : 0;
    }
    return static_cast<double>(correct) / static_cast<double>(outcomes.size());
}

json to_json(const ReliabilityReport& report)
{
    json bins = json::array();
    for (const auto& b : report.bins) {
        bins.push_back({{"lower", b.lower},
                        {"upper", b.upper},
                        {"count", b.count},
                        {"accuracy", b.accuracy},
                        {"mean_confidence", b.mean_confidence}});
    }
    return json{{"stepsize", report.stepsize},
                {"ece", report.ece},
                {"n", report.n},
                {"bins", std::move(bins)},
                {"unparsed",
                 {{"count", report.unparsed.count},
                  {"accuracy", report.unparsed.accuracy},
                  {"included", report.unparsed.included}}},
                {"warnings", report.warnings}};
}

json to_json(const std::map<std::string, ToolShare>& usage)
{
    json j = json::object();
    for (const auto& [tool, share] : usage) {
        j[tool] = {{"count", share.count}, {"fraction", share.fraction}};
    }
    return j;
}

} // namespace toolcal
