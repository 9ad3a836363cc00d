#pragma once

#include <compare>
#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace toolcal {

// Host pipeline shape: multi-tool step loop (art) or retrieve-then-answer (dsp).
enum class Dialect { art, dsp };

std::string_view to_string(Dialect dialect) noexcept;
Dialect parse_dialect(std::string_view name);

// Half-open byte range [begin, end) into a trace's raw text.
struct Span {
    std::size_t begin = 0;
    std::size_t end = 0;

    std::size_t size() const noexcept { return end - begin; }
    friend bool operator==(const Span&, const Span&) = default;
};

struct ToolInvocation {
    std::string tool_name;
    Span raw_span;
    // Percent in [0,100]; absent when missing or malformed.
    std::optional<int> stated_confidence;
    // Digits of the confidence value, present iff stated_confidence is.
    std::optional<Span> confidence_span;
};

struct ReasoningStep {
    std::size_t index = 0;
    std::string text;
    std::vector<ToolInvocation> invocations;
};

enum class TraceSource { tool_use_agent, calibration_agent };

std::string_view to_string(TraceSource source) noexcept;

struct ReasoningTrace {
    std::string task_id;
    std::string raw_text;
    std::vector<ReasoningStep> steps;
    std::optional<std::string> final_answer;
    TraceSource source = TraceSource::tool_use_agent;
    Dialect dialect = Dialect::art;

    std::size_t invocation_count() const noexcept;
};

// Per-task confidence in [0,1]. `parsed == false` always carries value 0.
class TaskConfidence {
public:
    TaskConfidence() = default;

    static TaskConfidence unparsed() noexcept { return {}; }
    static TaskConfidence of(double value);

    double value() const noexcept { return value_; }
    bool parsed() const noexcept { return parsed_; }

    friend bool operator==(const TaskConfidence&, const TaskConfidence&) = default;

private:
    double value_ = 0.0;
    bool parsed_ = false;
};

// (step index, invocation index within that step)
struct InvocationPosition {
    std::size_t step = 0;
    std::size_t invocation = 0;

    friend auto operator<=>(const InvocationPosition&, const InvocationPosition&) = default;
};

std::string to_string(const InvocationPosition& position);

using ConfidenceEdits = std::map<InvocationPosition, int>;
using ToolCounts = std::map<std::string, std::size_t>;

// Total: never throws on content. Unrecognized text stays in step text or
// the preamble; malformed confidence brackets become absent confidences.
ReasoningTrace parse_trace(std::string raw_text, Dialect dialect, std::string task_id = {},
                           TraceSource source = TraceSource::tool_use_agent);

ToolCounts extract_tool_tags(const ReasoningTrace& trace);

// Mean of stated confidences over the invocations that carry one, scaled to
// [0,1]. No stated confidence at all yields TaskConfidence::unparsed().
TaskConfidence aggregate_task_confidence(const ReasoningTrace& trace);

// Replaces the digits of the addressed confidences; every other byte of
// trace.raw_text is preserved. Throws InvalidArgument naming the position
// when it does not address an invocation with a stated confidence, or when
// the new value is outside [0,100].
std::string rewrite_confidences(const ReasoningTrace& trace, const ConfidenceEdits& edits);

// raw_text with each confidence value replaced by a fixed placeholder; two
// traces with equal masks differ at most in their confidence values.
std::string mask_confidences(const ReasoningTrace& trace);

std::vector<int> stated_confidences(const ReasoningTrace& trace);

} // namespace toolcal
