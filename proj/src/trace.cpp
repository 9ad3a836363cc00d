#include "toolcal/trace.hpp"

#include <algorithm>
#include <cctype>

#include "toolcal/error.hpp"

namespace toolcal {

namespace {

bool is_space(char c) noexcept
{
    return c == ' ' || c == '\t' || c == '\r' || c == '\f' || c == '\v';
}

bool is_digit(char c) noexcept
{
    return c >= '0' && c <= '9';
}

std::size_t skip_spaces(std::string_view s, std::size_t pos) noexcept
{
    while (pos < s.size() && is_space(s[pos])) {
        ++pos;
    }
    return pos;
}

std::string trim_copy(std::string_view s)
{
    std::size_t b = 0;
    std::size_t e = s.size();
    while (b < e && (is_space(s[b]) || s[b] == '\n')) {
        ++b;
    }
    while (e > b && (is_space(s[e - 1]) || s[e - 1] == '\n')) {
        --e;
    }
    return std::string(s.substr(b, e - b));
}

// Matches `<label> *:` at the start of the line (after indentation) and
// returns the offset just past the colon.
std::optional<std::size_t> match_label(std::string_view line, std::string_view label)
{
    std::size_t pos = skip_spaces(line, 0);
    if (line.substr(pos, label.size()) != label) {
        return std::nullopt;
    }
    pos = skip_spaces(line, pos + label.size());
    if (pos < line.size() && line[pos] == ':') {
        return pos + 1;
    }
    return std::nullopt;
}

// `<prefix><digits> *:` with an optional space between prefix and digits.
bool match_numbered_label(std::string_view line, std::string_view prefix)
{
    std::size_t pos = skip_spaces(line, 0);
    if (line.substr(pos, prefix.size()) != prefix) {
        return false;
    }
    pos = skip_spaces(line, pos + prefix.size());
    std::size_t digits = pos;
    while (pos < line.size() && is_digit(line[pos])) {
        ++pos;
    }
    if (pos == digits) {
        return false;
    }
    pos = skip_spaces(line, pos);
    return pos < line.size() && line[pos] == ':';
}

bool is_step_marker(std::string_view line)
{
    return match_numbered_label(line, "Q") || match_numbered_label(line, "Step");
}

bool is_observation(std::string_view line)
{
    return match_numbered_label(line, "#");
}

// A bracket body that reads as a number (possibly with a decimal part or a
// percent sign). Such tokens are confidence candidates, never tool names.
bool is_numeric_like(std::string_view body)
{
    std::size_t pos = skip_spaces(body, 0);
    if (pos < body.size() && (body[pos] == '+' || body[pos] == '-')) {
        ++pos;
    }
    std::size_t digits = pos;
    while (pos < body.size() && is_digit(body[pos])) {
        ++pos;
    }
    if (pos == digits) {
        return false;
    }
    if (pos < body.size() && body[pos] == '.') {
        ++pos;
        while (pos < body.size() && is_digit(body[pos])) {
            ++pos;
        }
    }
    pos = skip_spaces(body, pos);
    if (pos < body.size() && body[pos] == '%') {
        pos = skip_spaces(body, pos + 1);
    }
    return pos == body.size();
}

struct ParsedPercent {
    int value;
    std::size_t digits_begin;
    std::size_t digits_end;
};

// Unsigned integer percent in [0,100], optionally followed by '%'.
std::optional<ParsedPercent> parse_percent(std::string_view body)
{
    std::size_t pos = skip_spaces(body, 0);
    std::size_t begin = pos;
    while (pos < body.size() && is_digit(body[pos])) {
        ++pos;
    }
    std::size_t end = pos;
    if (end == begin || end - begin > 3) {
        return std::nullopt;
    }
    pos = skip_spaces(body, pos);
    if (pos < body.size() && body[pos] == '%') {
        pos = skip_spaces(body, pos + 1);
    }
    if (pos != body.size()) {
        return std::nullopt;
    }
    int value = 0;
    for (std::size_t i = begin; i < end; ++i) {
        value = value * 10 + (body[i] - '0');
    }
    if (value > 100) {
        return std::nullopt;
    }
    return ParsedPercent{value, begin, end};
}

class TraceBuilder {
public:
    TraceBuilder(std::string_view raw, Dialect dialect) : raw_(raw), dialect_(dialect) {}

    void feed_line(std::size_t begin, std::size_t end);
    std::vector<ReasoningStep> finish();
    std::optional<std::string> final_answer() const { return final_answer_; }

private:
    struct OpenInvocation {
        ToolInvocation inv;
        bool confidence_consumed = false;
    };
    struct OpenStep {
        std::size_t begin = 0;
        std::size_t end = 0;
        std::vector<OpenInvocation> invocations;
        bool has_query = false;
    };

    void start_step(std::size_t begin);
    void extend_step(std::size_t end);
    std::vector<OpenInvocation> scan_brackets(std::size_t begin, std::size_t end) const;
    void attach_confidence(std::optional<ParsedPercent> percent, std::size_t body_offset,
                           Span label_span);

    std::string_view raw_;
    Dialect dialect_;
    std::vector<OpenStep> steps_;
    std::optional<std::string> final_answer_;
};

void TraceBuilder::start_step(std::size_t begin)
{
    steps_.push_back(OpenStep{begin, begin, {}, false});
}

void TraceBuilder::extend_step(std::size_t end)
{
    if (!steps_.empty()) {
        steps_.back().end = end;
    }
}

std::vector<TraceBuilder::OpenInvocation> TraceBuilder::scan_brackets(std::size_t begin,
                                                                      std::size_t end) const
{
    std::vector<OpenInvocation> found;
    std::size_t pos = begin;
    while (pos < end) {
        std::size_t open = raw_.find('[', pos);
        if (open == std::string_view::npos || open >= end) {
            break;
        }
        std::size_t close = open + 1;
        while (close < end && raw_[close] != ']' && raw_[close] != '[') {
            ++close;
        }
        if (close >= end) {
            break;
        }
        if (raw_[close] == '[') {
            pos = close;
            continue;
        }
        std::string_view body = raw_.substr(open + 1, close - open - 1);
        if (is_numeric_like(body)) {
            // A number only means something right after a tool tag.
            if (!found.empty() && !found.back().confidence_consumed) {
                auto& last = found.back();
                last.confidence_consumed = true;
                if (auto percent = parse_percent(body)) {
                    last.inv.stated_confidence = percent->value;
                    last.inv.confidence_span = Span{open + 1 + percent->digits_begin,
                                                    open + 1 + percent->digits_end};
                }
            }
        } else {
            std::string name = trim_copy(body);
            if (!name.empty()) {
                OpenInvocation next;
                next.inv.tool_name = std::move(name);
                next.inv.raw_span = Span{open, close + 1};
                found.push_back(std::move(next));
            }
        }
        pos = close + 1;
    }
    return found;
}

void TraceBuilder::attach_confidence(std::optional<ParsedPercent> percent, std::size_t body_offset,
                                     Span label_span)
{
    if (steps_.empty()) {
        start_step(label_span.begin);
    }
    auto& step = steps_.back();
    OpenInvocation* target = nullptr;
    for (auto it = step.invocations.rbegin(); it != step.invocations.rend(); ++it) {
        if (!it->confidence_consumed) {
            target = &*it;
            break;
        }
    }
    if (target == nullptr) {
        OpenInvocation implicit;
        implicit.inv.tool_name = "search";
        implicit.inv.raw_span = label_span;
        step.invocations.push_back(std::move(implicit));
        target = &step.invocations.back();
    }
    target->confidence_consumed = true;
    if (percent) {
        target->inv.stated_confidence = percent->value;
        target->inv.confidence_span =
            Span{body_offset + percent->digits_begin, body_offset + percent->digits_end};
    }
}

void TraceBuilder::feed_line(std::size_t begin, std::size_t end)
{
    std::string_view line = raw_.substr(begin, end - begin);

    std::string_view answer_label = dialect_ == Dialect::art ? "Ans" : "Answer";
    if (auto after = match_label(line, answer_label)) {
        std::string answer = trim_copy(line.substr(*after));
        if (!answer.empty()) {
            final_answer_ = std::move(answer);
        }
        extend_step(end);
        return;
    }
    if (is_observation(line)) {
        extend_step(end);
        return;
    }

    if (dialect_ == Dialect::dsp) {
        if (match_label(line, "Passage") || match_label(line, "Context")) {
            extend_step(end);
            return;
        }
        if (match_label(line, "Rationale")) {
            start_step(begin);
            extend_step(end);
            return;
        }
        if (auto after = match_label(line, "Search Query")) {
            if (steps_.empty() || steps_.back().has_query) {
                start_step(begin);
            }
            auto& step = steps_.back();
            step.has_query = true;
            std::size_t label_begin = begin + skip_spaces(line, 0);
            OpenInvocation query;
            query.inv.tool_name = "search";
            query.inv.raw_span = Span{label_begin, begin + *after};
            step.invocations.push_back(std::move(query));
            auto tagged = scan_brackets(begin + *after, end);
            for (auto& t : tagged) {
                step.invocations.push_back(std::move(t));
            }
            extend_step(end);
            return;
        }
        if (auto after = match_label(line, "Confidence score")) {
            std::size_t label_begin = begin + skip_spaces(line, 0);
            std::string_view body = line.substr(*after);
            attach_confidence(parse_percent(body), begin + *after, Span{label_begin, begin + *after});
            extend_step(end);
            return;
        }
    }

    auto tagged = scan_brackets(begin, end);
    bool starts_with_tag = false;
    if (!tagged.empty()) {
        starts_with_tag = tagged.front().inv.raw_span.begin == begin + skip_spaces(line, 0);
    }
    if (is_step_marker(line) || starts_with_tag || (steps_.empty() && !tagged.empty())) {
        start_step(begin);
    }
    if (!steps_.empty()) {
        for (auto& t : tagged) {
            steps_.back().invocations.push_back(std::move(t));
        }
    }
    extend_step(end);
}

std::vector<ReasoningStep> TraceBuilder::finish()
{
    std::vector<ReasoningStep> out;
    out.reserve(steps_.size());
    for (auto& open : steps_) {
        ReasoningStep step;
        step.index = out.size();
        step.text = std::string(raw_.substr(open.begin, open.end - open.begin));
        for (auto& inv : open.invocations) {
            step.invocations.push_back(std::move(inv.inv));
        }
        out.push_back(std::move(step));
    }
    return out;
}

} // namespace

std::string_view to_string(Dialect dialect) noexcept
{
    return dialect == Dialect::art ? "art" : "dsp";
}

Dialect parse_dialect(std::string_view name)
{
    if (name == "art") {
        return Dialect::art;
    }
    if (name == "dsp") {
        return Dialect::dsp;
    }
    throw InvalidArgument("unknown dialect '" + std::string(name) + "' (expected art or dsp)");
}

std::string_view to_string(TraceSource source) noexcept
{
    return source == TraceSource::tool_use_agent ? "tool_use_agent" : "calibration_agent";
}

std::size_t ReasoningTrace::invocation_count() const noexcept
{
    std::size_t n = 0;
    for (const auto& step : steps) {
        n += step.invocations.size();
    }
    return n;
}

TaskConfidence TaskConfidence::of(double value)
{
    if (!(value >= 0.0 && value <= 1.0)) {
        throw InvalidArgument("task confidence " + std::to_string(value) + " outside [0,1]");
    }
    TaskConfidence c;
    c.value_ = value;
    c.parsed_ = true;
    return c;
}

std::string to_string(const InvocationPosition& position)
{
    return "(" + std::to_string(position.step) + ", " + std::to_string(position.invocation) + ")";
}

ReasoningTrace parse_trace(std::string raw_text, Dialect dialect, std::string task_id,
                           TraceSource source)
{
    ReasoningTrace trace;
    trace.task_id = std::move(task_id);
    trace.raw_text = std::move(raw_text);
    trace.source = source;
    trace.dialect = dialect;

    std::string_view raw = trace.raw_text;
    TraceBuilder builder(raw, dialect);
    std::size_t begin = 0;
    while (begin < raw.size()) {
        std::size_t nl = raw.find('\n', begin);
        std::size_t end = nl == std::string_view::npos ? raw.size() : nl;
        builder.feed_line(begin, end);
        begin = end + 1;
    }
    trace.steps = builder.finish();
    trace.final_answer = builder.final_answer();
    return trace;
}

ToolCounts extract_tool_tags(const ReasoningTrace& trace)
{
    ToolCounts counts;
    for (const auto& step : trace.steps) {
        for (const auto& inv : step.invocations) {
            ++counts[inv.tool_name];
        }
    }
    return counts;
}

TaskConfidence aggregate_task_confidence(const ReasoningTrace& trace)
{
    long sum = 0;
    long count = 0;
    for (const auto& step : trace.steps) {
        for (const auto& inv : step.invocations) {
            if (inv.stated_confidence) {
                sum += *inv.stated_confidence;
                ++count;
            }
        }
    }
    if (count == 0) {
        return TaskConfidence::unparsed();
    }
    return TaskConfidence::of(static_cast<double>(sum) / static_cast<double>(count) / 100.0);
}

std::string rewrite_confidences(const ReasoningTrace& trace, const ConfidenceEdits& edits)
{
    std::vector<std::pair<Span, int>> replacements;
    replacements.reserve(edits.size());
    for (const auto& [position, value] : edits) {
        if (position.step >= trace.steps.size() ||
            position.invocation >= trace.steps[position.step].invocations.size()) {
            throw InvalidArgument("confidence edit targets unknown position " + to_string(position));
        }
        const auto& inv = trace.steps[position.step].invocations[position.invocation];
        if (!inv.confidence_span) {
            throw InvalidArgument("confidence edit targets position " + to_string(position) +
                                  " which has no stated confidence");
        }
        if (value < 0 || value > 100) {
            throw InvalidArgument("confidence edit at " + to_string(position) + " has value " +
                                  std::to_string(value) + " outside [0,100]");
        }
        replacements.emplace_back(*inv.confidence_span, value);
    }
    std::sort(replacements.begin(), replacements.end(),
              [](const auto& a, const auto& b) { return a.first.begin < b.first.begin; });

    std::string out;
    out.reserve(trace.raw_text.size() + 4 * replacements.size());
    std::size_t cursor = 0;
    for (const auto& [span, value] : replacements) {
        out.append(trace.raw_text, cursor, span.begin - cursor);
        out += std::to_string(value);
        cursor = span.end;
    }
    out.append(trace.raw_text, cursor, std::string::npos);
    return out;
}

std::string mask_confidences(const ReasoningTrace& trace)
{
    std::vector<Span> spans;
    for (const auto& step : trace.steps) {
        for (const auto& inv : step.invocations) {
            if (inv.confidence_span) {
                spans.push_back(*inv.confidence_span);
            }
        }
    }
    std::sort(spans.begin(), spans.end(), [](const Span& a, const Span& b) { return a.begin < b.begin; });
    std::string out;
    std::size_t cursor = 0;
    for (const auto& span : spans) {
        out.append(trace.raw_text, cursor, span.begin - cursor);
        out += '\x1f';
        cursor = span.end;
    }
    out.append(trace.raw_text, cursor, std::string::npos);
    return out;
}

std::vector<int> stated_confidences(const ReasoningTrace& trace)
{
    std::vector<int> out;
    for (const auto& step : trace.steps) {
        for (const auto& inv : step.invocations) {
            if (inv.stated_confidence) {
                out.push_back(*inv.stated_confidence);
            }
        }
    }
    return out;
}

} // namespace toolcal
