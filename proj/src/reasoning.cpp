#include "toolcal/reasoning.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <sstream>

#include "toolcal/error.hpp"
#include "toolcal/prompts.hpp"
#include "toolcal/text.hpp"

namespace toolcal {

namespace {

constexpr std::string_view kArtObservationCut = "\n#";
constexpr std::string_view kDspObservationCut = "\nPassage:";

std::string fixed(double v, int precision)
{
    std::array<char, 64> buf{};
    auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v, std::chars_format::fixed, precision);
    std::string s(buf.data(), res.ptr);
    // 0.2500 -> 0.25, 1.0000 -> 1.0
    auto dot = s.find('.');
    if (dot != std::string::npos) {
        while (s.size() > dot + 2 && s.back() == '0') {
            s.pop_back();
        }
    }
    return s;
}

std::string cut_at(std::string s, std::string_view marker)
{
    auto pos = s.find(marker);
    if (pos != std::string::npos) {
        s.erase(pos);
    }
    return s;
}

std::string rstrip(std::string s)
{
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) {
        s.pop_back();
    }
    return s;
}

bool has_answer_line(const std::string& out, Dialect dialect)
{
    std::string_view label = dialect == Dialect::art ? "Ans:" : "Answer:";
    std::istringstream lines(out);
    std::string line;
    while (std::getline(lines, line)) {
        if (text::starts_with_ci(text::trim(line), label)) {
            return true;
        }
    }
    return false;
}

// The tool call the agent just made and the text that follows its tag.
std::optional<std::pair<std::string, std::string>> last_call(const std::string& out, Dialect dialect)
{
    ReasoningTrace parsed = parse_trace(out, dialect);
    for (auto step = parsed.steps.rbegin(); step != parsed.steps.rend(); ++step) {
        if (step->invocations.empty()) {
            continue;
        }
        const auto& inv = step->invocations.back();
        std::string query;
        if (dialect == Dialect::dsp) {
            query = text::last_labeled_line(out, "Search Query:");
        } else {
            auto line_end = out.find('\n', inv.raw_span.end);
            query = text::trim(out.substr(inv.raw_span.end, line_end == std::string::npos
                                                                 ? std::string::npos
                                                                 : line_end - inv.raw_span.end));
            // Drop a trailing confidence bracket.
            if (inv.confidence_span) {
                auto open = query.rfind('[');
                if (open != std::string::npos) {
                    query = text::trim(query.substr(0, open));
                }
            }
        }
        return std::make_pair(inv.tool_name, query);
    }
    return std::nullopt;
}

std::string last_sentence(std::string_view s)
{
    std::string t = text::trim(s);
    while (!t.empty() && (t.back() == '.' || t.back() == '!' || t.back() == '?')) {
        t.pop_back();
    }
    auto cut = t.find_last_of(".!?");
    return text::trim(cut == std::string::npos ? t : t.substr(cut + 1));
}

std::string rationale_fallback(const std::string& raw)
{
    std::istringstream lines(raw);
    std::string line;
    std::string first;
    std::string last_rationale;
    bool seen_first = false;
    while (std::getline(lines, line)) {
        std::string t = text::trim(line);
        if (t.empty()) {
            continue;
        }
        if (text::starts_with_ci(t, "Rationale:")) {
            last_rationale = t.substr(10);
        } else if (!seen_first && t.find(':') == std::string::npos) {
            first = t;  // continuation of the prompt's own rationale line
        }
        seen_first = true;
    }
    return last_sentence(last_rationale.empty() ? first : last_rationale);
}

} // namespace

std::string insert_instruction(Dialect dialect, const std::string& base_prompt, const std::string& instruction_text)
{
    if (instruction_text.empty()) {
        return base_prompt;
    }
    std::string label = "\n" + std::string(dialect == Dialect::art ? markers::description : markers::dsp_question);
    auto pos = base_prompt.rfind(label);
    if (pos == std::string::npos) {
        throw InvalidArgument("agent prompt has no '" + label.substr(1) + "' line to place the instruction before");
    }
    std::string out = base_prompt.substr(0, pos + 1);
    out += text::trim(instruction_text);
    out += base_prompt.substr(pos);
    return out;
}

AugmentedPrompt augment_prompt(Dialect dialect, const std::string& demos, const std::string& description,
                               const QaRecord& task, const ToolUseInstruction* instruction)
{
    AugmentedPrompt p;
    p.dialect = dialect;
    if (dialect == Dialect::art) {
        if (demos.empty()) {
            throw InvalidArgument("art prompts need at least one demonstration");
        }
        p.base_prompt = render_prompt(PromptName::art_v, {demos, description, task.question});
    } else {
        p.base_prompt = render_prompt(PromptName::dsp_v, {"N/A", task.question});
    }
    if (instruction != nullptr) {
        p.instruction = *instruction;
    }
    p.text = insert_instruction(dialect, p.base_prompt, instruction ? instruction->instruction_text : std::string{});
    return p;
}

std::string_view to_string(RunFinish finish) noexcept
{
    switch (finish) {
    case RunFinish::answered: return "answered";
    case RunFinish::budget: return "budget";
    case RunFinish::stalled: return "stalled";
    case RunFinish::aborted: return "aborted";
    }
    return "aborted";
}

ToolUseRun run_tool_use(const AugmentedPrompt& prompt, ModelHandle& agent, const ToolRegistry& tools,
                        const RunLimits& limits, const QaRecord& task)
{
    const Dialect dialect = prompt.dialect;
    const std::string_view cut = dialect == Dialect::art ? kArtObservationCut : kDspObservationCut;
    const std::string template_name(to_string(dialect == Dialect::art ? PromptName::art_v : PromptName::dsp_v));

    ToolUseRun run;
    run.finish = RunFinish::budget;
    std::string transcript;
    for (std::size_t step = 0; step < limits.max_steps; ++step) {
        std::string out;
        try {
            out = agent.call(template_name, prompt.text + "\n" + transcript, limits.max_tokens,
                             {std::string(cut)}).text;
        } catch (const Error& e) {
            run.finish = RunFinish::aborted;
            run.flags.push_back(std::string("backend_error: ") + e.what());
            break;
        }
        out = rstrip(cut_at(std::move(out), cut));
        // Leading newlines would shift the transcript's line structure.
        while (!out.empty() && out.front() == '\n') {
            out.erase(0, 1);
        }
        transcript += out;
        transcript += '\n';

        if (has_answer_line(out, dialect)) {
            run.finish = RunFinish::answered;
            break;
        }
        auto call = last_call(out, dialect);
        if (!call) {
            run.finish = RunFinish::stalled;
            break;
        }
        Observation obs = tools.execute(call->first, task, call->second);
        if (obs.flagged) {
            run.flags.push_back("tool_observation_stubbed: " + call->first);
        }
        if (dialect == Dialect::art) {
            transcript += "#" + std::to_string(step + 1) + ": " + obs.text + "\n";
        } else {
            transcript += "Passage: " + obs.text + "\n";
        }
    }
    if (run.finish == RunFinish::budget) {
        run.flags.push_back("step_budget_exhausted");
    } else if (run.finish == RunFinish::stalled) {
        run.flags.push_back("no_tool_call_or_answer");
    }
    run.trace = parse_trace(transcript, dialect, task.id);
    return run;
}

std::string_view to_string(CalibrationMode mode) noexcept
{
    return mode == CalibrationMode::llm_edit ? "llm_edit" : "table_direct";
}

CalibrationMode parse_calibration_mode(std::string_view name)
{
    if (name == "llm_edit") return CalibrationMode::llm_edit;
    if (name == "table_direct") return CalibrationMode::table_direct;
    throw ConfigError("unknown calibration mode '" + std::string(name) + "'");
}

ConfidenceEdits table_direct_edits(const ReasoningTrace& trace, const PriorTable& prior)
{
    ConfidenceEdits edits;
    for (std::size_t s = 0; s < trace.steps.size(); ++s) {
        const auto& invs = trace.steps[s].invocations;
        for (std::size_t i = 0; i < invs.size(); ++i) {
            if (!invs[i].stated_confidence) {
                continue;
            }
            const auto& bin = lookup(prior, TaskConfidence::of(*invs[i].stated_confidence / 100.0));
            if (!bin.empty()) {
                edits[{s, i}] = static_cast<int>(std::lround(bin.accuracy * 100.0));
            }
        }
    }
    return edits;
}

std::string format_confidence_levels(const PriorTable& prior)
{
    std::vector<std::string> items;
    for (const auto& b : prior.bins) {
        items.push_back(fixed(b.lower, 2));
    }
    return "[" + text::join(items, ", ") + "]";
}

std::string format_accuracies(const PriorTable& prior)
{
    std::vector<std::string> items;
    for (const auto& b : prior.bins) {
        items.push_back(b.empty() ? std::string("N/A") : fixed(b.accuracy, 4));
    }
    return "[" + text::join(items, ", ") + "]";
}

namespace {

// Edits implied by a calibrator reply, or nullopt when the reply changes
// anything besides confidence values.
std::optional<ConfidenceEdits> edits_from_reply(const ReasoningTrace& trace, std::string reply)
{
    reply = text::trim(reply);
    if (text::starts_with_ci(reply, markers::edited_text)) {
        reply = text::trim(reply.substr(markers::edited_text.size()));
    }
    ReasoningTrace edited = parse_trace(reply, trace.dialect, trace.task_id, TraceSource::calibration_agent);
    ReasoningTrace original = parse_trace(text::trim(trace.raw_text), trace.dialect, trace.task_id);
    if (mask_confidences(edited) != mask_confidences(original)) {
        return std::nullopt;
    }
    if (edited.steps.size() != original.steps.size()) {
        return std::nullopt;
    }
    ConfidenceEdits edits;
    for (std::size_t s = 0; s < original.steps.size(); ++s) {
        const auto& a = original.steps[s].invocations;
        const auto& b = edited.steps[s].invocations;
        if (a.size() != b.size()) {
            return std::nullopt;
        }
        for (std::size_t i = 0; i < a.size(); ++i) {
            if (a[i].stated_confidence.has_value() != b[i].stated_confidence.has_value()) {
                return std::nullopt;
            }
            if (b[i].stated_confidence) {
                edits[{s, i}] = *b[i].stated_confidence;
            }
        }
    }
    return edits;
}

} // namespace

CalibratedResult calibrate(const ReasoningTrace& trace, const PriorTable& prior, CalibrationMode mode,
                           ModelHandle* calibrator)
{
    CalibratedResult result;
    result.original_trace = trace;
    result.original_confidence = aggregate_task_confidence(trace);

    std::optional<ConfidenceEdits> edits;
    if (mode == CalibrationMode::llm_edit) {
        if (calibrator == nullptr) {
            throw InvalidArgument("llm_edit calibration needs a calibrator model");
        }
        if (trace.invocation_count() == 0 || stated_confidences(trace).empty()) {
            edits = ConfidenceEdits{};  // nothing to edit, skip the call
        } else {
            const std::string prompt = render_prompt(
                PromptName::calib_ar, {format_confidence_levels(prior), format_accuracies(prior), trace.raw_text});
            for (int attempt = 0; attempt < 2 && !edits; ++attempt) {
                try {
                    edits = edits_from_reply(trace, calibrator->call(to_string(PromptName::calib_ar), prompt).text);
                } catch (const Error& e) {
                    result.flags.push_back(std::string("calibrator_error: ") + e.what());
                }
                if (!edits) {
                    result.flags.push_back("calibrator_reply_rejected");
                }
            }
            if (!edits) {
                result.flags.push_back("calibration_fallback_table_direct");
            }
        }
        result.calibration_mode = edits ? CalibrationMode::llm_edit : CalibrationMode::table_direct;
    }
    if (!edits) {
        edits = table_direct_edits(trace, prior);
        result.calibration_mode = CalibrationMode::table_direct;
    }

    result.edited_trace =
        parse_trace(rewrite_confidences(trace, *edits), trace.dialect, trace.task_id, TraceSource::calibration_agent);
    result.calibrated_confidence = aggregate_task_confidence(result.edited_trace);
    AnswerExtraction answer = extract_final_answer(result.edited_trace);
    result.final_answer = std::move(answer.answer);
    result.flags.insert(result.flags.end(), answer.flags.begin(), answer.flags.end());
    return result;
}

bool is_refusal(std::string_view s)
{
    static const std::array<std::string_view, 14> phrases{
        "i'm sorry",          "i am sorry",           "can't assist",          "cannot assist",
        "can't help",         "cannot help",          "unable to",             "not able to",
        "cannot provide",     "can't provide",        "cannot answer",         "can't answer",
        "need more information", "needs more information"};
    const std::string lower = text::normalize(s);
    for (auto p : phrases) {
        if (lower.find(p) != std::string::npos) {
            return true;
        }
    }
    return false;
}

AnswerExtraction extract_final_answer(const ReasoningTrace& trace)
{
    AnswerExtraction out;
    std::string answer;
    if (trace.final_answer) {
        answer = text::trim(*trace.final_answer);
    } else if (trace.dialect == Dialect::dsp && !is_refusal(trace.raw_text)) {
        answer = rationale_fallback(trace.raw_text);
        if (!answer.empty()) {
            out.flags.push_back("answer_from_rationale");
        }
    }
    if (is_refusal(answer) || (!trace.final_answer && is_refusal(trace.raw_text))) {
        out.flags.push_back("refusal");
        return out;
    }
    if (answer.empty()) {
        out.flags.push_back("no_final_answer");
        return out;
    }
    out.answer = std::move(answer);
    return out;
}

} // namespace toolcal
