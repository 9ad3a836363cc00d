#include "toolcal/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "toolcal/error.hpp"
#include "toolcal/hashing.hpp"
#include "toolcal/metrics.hpp"
#include "toolcal/prompts.hpp"
#include "toolcal/text.hpp"

namespace toolcal {

using nlohmann::json;

namespace {

constexpr std::uint64_t kRefusalSalt = 0x5265667573616cULL;
constexpr std::uint64_t kAnswerSalt = 0x416e73776572ULL;
constexpr std::string_view kRefusal = "I'm sorry, but I can't assist with that.";

SeededRng stream_for(std::uint64_t seed, const std::string& task_id, std::uint64_t salt)
{
    return SeededRng(splitmix64(seed ^ splitmix64(fnv1a64(task_id) + salt)));
}

bool contains(const std::vector<std::string>& items, const std::string& item)
{
    return std::find(items.begin(), items.end(), item) != items.end();
}

std::vector<std::string> intersect(const std::vector<std::string>& items, const std::vector<std::string>& keep)
{
    std::vector<std::string> out;
    for (const auto& i : items) {
        if (contains(keep, i)) {
            out.push_back(i);
        }
    }
    return out;
}

std::string subquestion(const std::string& tool, const QaRecord& task)
{
    if (tool == "search") {
        return task.question;
    }
    if (tool == "check answer type") {
        return "What kind of answer does the question expect?";
    }
    if (tool == "string operations") {
        return "Extract the entity name from the question.";
    }
    if (tool == "code generate") {
        return "Write code that looks up the answer.";
    }
    if (tool == markers::internal_knowledge) {
        return "Recall what is known about the entity.";
    }
    return "Apply the tool to the question.";
}

std::string wrong_answer(const QaRecord& task)
{
    std::ostringstream ss;
    ss << "Unresolved-" << std::hex << (fnv1a64(task.id) & 0xffffffULL);
    std::string answer = ss.str();
    while (exact_match(answer, task.answers)) {
        answer += "-q";
    }
    return answer;
}

int stated_percent(double success_probability, double bias)
{
    double c = std::clamp(success_probability + bias, 0.0, 1.0);
    return static_cast<int>(std::lround(c * 100.0));
}

std::string slice_between(const std::string& s, std::string_view open, std::string_view close)
{
    auto begin = s.rfind(open);
    if (begin == std::string::npos) {
        return {};
    }
    begin += open.size();
    auto end = s.rfind(close);
    if (end == std::string::npos || end < begin) {
        end = s.size();
    }
    return s.substr(begin, end - begin);
}

std::vector<std::optional<double>> parse_number_list(const std::string& line)
{
    std::vector<std::optional<double>> out;
    std::string body = line;
    body.erase(std::remove(body.begin(), body.end(), '['), body.end());
    body.erase(std::remove(body.begin(), body.end(), ']'), body.end());
    std::istringstream items(body);
    std::string item;
    while (std::getline(items, item, ',')) {
        item = text::trim(item);
        if (item.empty()) {
            continue;
        }
        try {
            std::size_t used = 0;
            double v = std::stod(item, &used);
            out.push_back(used == item.size() ? std::optional<double>(v) : std::nullopt);
        } catch (const std::exception&) {
            out.push_back(std::nullopt);
        }
    }
    return out;
}

std::size_t count_line_prefix(const std::string& s, std::string_view prefix)
{
    std::size_t n = 0;
    std::size_t pos = 0;
    while (pos < s.size()) {
        std::size_t end = s.find('\n', pos);
        std::string line = text::trim(s.substr(pos, end == std::string::npos ? s.npos : end - pos));
        if (line.rfind(prefix, 0) == 0) {
            ++n;
        }
        if (end == std::string::npos) {
            break;
        }
        pos = end + 1;
    }
    return n;
}

bool ends_with_marker(const std::string& prompt, std::string_view marker)
{
    std::string t = text::trim(prompt);
    return t.size() >= marker.size() && t.compare(t.size() - marker.size(), marker.size(), marker) == 0;
}

} // namespace

void SimulatedAgentPolicy::validate() const
{
    auto probability = [](double p, const char* name) {
        if (!(p >= 0.0 && p <= 1.0)) {
            throw InvalidArgument(std::string("policy ") + name + " must be in [0,1]");
        }
    };
    probability(misuse_probability, "misuse_probability");
    probability(base_accuracy_correct_tools, "base_accuracy_correct_tools");
    probability(base_accuracy_misuse, "base_accuracy_misuse");
    probability(refusal_probability, "refusal_probability");
    if (!(confidence_bias >= -1.0 && confidence_bias <= 1.0)) {
        throw InvalidArgument("policy confidence_bias must be in [-1,1]");
    }
    if (base_accuracy_misuse > base_accuracy_correct_tools) {
        throw InvalidArgument("policy base_accuracy_misuse must not exceed base_accuracy_correct_tools");
    }
    for (const auto& tool : useful_tools) {
        if (!contains(tool_menu, tool)) {
            throw InvalidArgument("policy useful tool '" + tool + "' is not on the tool menu");
        }
    }
    for (const auto& tool : tool_menu) {
        if (tool.empty() || tool.find_first_of("[]\n") != std::string::npos) {
            throw InvalidArgument("policy tool names must be non-empty and bracket-free");
        }
    }
}

json to_json(const SimulatedAgentPolicy& p)
{
    return json{{"tool_menu", p.tool_menu},
                {"useful_tools", p.useful_tools},
                {"misuse_probability", p.misuse_probability},
                {"confidence_bias", p.confidence_bias},
                {"base_accuracy_correct_tools", p.base_accuracy_correct_tools},
                {"base_accuracy_misuse", p.base_accuracy_misuse},
                {"obeys_instruction", p.obeys_instruction},
                {"rng_seed", p.rng_seed},
                {"tool_steps", p.tool_steps},
                {"refusal_probability", p.refusal_probability}};
}

SimulatedAgentPolicy policy_from_json(const json& j)
{
    SimulatedAgentPolicy p;
    p.tool_menu = j.value("tool_menu", p.tool_menu);
    p.useful_tools = j.value("useful_tools", p.useful_tools);
    p.misuse_probability = j.value("misuse_probability", p.misuse_probability);
    p.confidence_bias = j.value("confidence_bias", p.confidence_bias);
    p.base_accuracy_correct_tools = j.value("base_accuracy_correct_tools", p.base_accuracy_correct_tools);
    p.base_accuracy_misuse = j.value("base_accuracy_misuse", p.base_accuracy_misuse);
    p.obeys_instruction = j.value("obeys_instruction", p.obeys_instruction);
    p.rng_seed = j.value("rng_seed", p.rng_seed);
    p.tool_steps = j.value("tool_steps", p.tool_steps);
    p.refusal_probability = j.value("refusal_probability", p.refusal_probability);
    p.validate();
    return p;
}

SimulatedTaskPlan plan_task(const SimulatedAgentPolicy& policy, const QaRecord& task,
                            const std::optional<std::vector<std::string>>& allowed_tools)
{
    SimulatedTaskPlan plan;
    plan.refuses = policy.refusal_probability > 0.0 &&
                   stream_for(policy.rng_seed, task.id, kRefusalSalt).uniform() < policy.refusal_probability;

    std::vector<std::string> useful_pool = policy.useful_tools;
    std::vector<std::string> misuse_pool;
    for (const auto& tool : policy.tool_menu) {
        if (!contains(policy.useful_tools, tool)) {
            misuse_pool.push_back(tool);
        }
    }
    if (allowed_tools && policy.obeys_instruction) {
        useful_pool = intersect(useful_pool, *allowed_tools);
        misuse_pool = intersect(misuse_pool, *allowed_tools);
        if (useful_pool.empty() && misuse_pool.empty()) {
            useful_pool = *allowed_tools;
        }
    }

    bool any_misuse = false;
    if (!plan.refuses) {
        for (std::size_t k = 0; k < policy.tool_steps; ++k) {
            SeededRng rng = stream_for(policy.rng_seed, task.id, k + 1);
            double u = rng.uniform();
            SimulatedStepChoice choice;
            choice.misuse = !misuse_pool.empty() && (useful_pool.empty() || u < policy.misuse_probability);
            const auto& pool = choice.misuse ? misuse_pool : useful_pool;
            choice.tool = pool.empty() ? std::string(markers::internal_knowledge) : pool[rng.below(pool.size())];
            double p = choice.misuse ? policy.base_accuracy_misuse : policy.base_accuracy_correct_tools;
            choice.stated_confidence = stated_percent(p, policy.confidence_bias);
            any_misuse = any_misuse || choice.misuse;
            plan.steps.push_back(std::move(choice));
        }
    }
    plan.success_probability = any_misuse ? policy.base_accuracy_misuse : policy.base_accuracy_correct_tools;
    plan.answer_correct = !plan.refuses &&
                          stream_for(policy.rng_seed, task.id, kAnswerSalt).uniform() < plan.success_probability;
    return plan;
}

std::string simulate_agent_step(const SimulatedAgentPolicy& policy, const QaRecord& task,
                                const ToolUseInstruction* instruction, std::size_t step_index,
                                Dialect dialect)
{
    std::optional<std::vector<std::string>> allowed;
    if (instruction != nullptr && dialect == Dialect::art) {
        allowed = instruction->allowed_tools;
    }
    SimulatedAgentPolicy effective = policy;
    if (dialect == Dialect::dsp) {
        // The retriever is the only tool in this dialect.
        effective.tool_menu = {"search"};
        effective.useful_tools = {"search"};
    }
    SimulatedTaskPlan plan = plan_task(effective, task, allowed);

    std::ostringstream out;
    if (plan.refuses || step_index >= plan.steps.size()) {
        std::string answer = plan.refuses ? std::string(kRefusal)
                             : plan.answer_correct ? task.answers.front()
                                                   : wrong_answer(task);
        out << (dialect == Dialect::art ? "Ans: " : "Answer: ") << answer;
        return out.str();
    }
    const auto& choice = plan.steps[step_index];
    if (dialect == Dialect::art) {
        out << "Q" << step_index + 1 << ": [" << choice.tool << "] " << subquestion(choice.tool, task) << " ["
            << choice.stated_confidence << "]";
    } else {
        if (step_index > 0) {
            out << "Rationale: ";
        }
        out << "The context does not name the answer yet.\nSearch Query: " << task.question
            << "\nConfidence score: " << choice.stated_confidence;
    }
    return out.str();
}

SimulatedBackend::SimulatedBackend(SimulatedAgentPolicy policy, const std::vector<QaRecord>& tasks)
    : policy_(std::move(policy))
{
    policy_.validate();
    for (const auto& t : tasks) {
        tasks_by_question_.try_emplace(text::trim(t.question), t);
    }
}

std::string SimulatedBackend::describe() const
{
    return "simulator(seed=" + std::to_string(policy_.rng_seed) + ")";
}

QaRecord SimulatedBackend::task_for(const std::string& question) const
{
    auto it = tasks_by_question_.find(text::trim(question));
    if (it != tasks_by_question_.end()) {
        return it->second;
    }
    QaRecord unknown;
    std::ostringstream id;
    id << "unknown-" << std::hex << fnv1a64(question);
    unknown.id = id.str();
    unknown.question = question;
    unknown.answers = {"<no label>"};
    return unknown;
}

ModelResponse SimulatedBackend::invoke(const ModelRequest& request)
{
    request.validate();
    const std::string& prompt = request.prompt;
    ModelResponse response;
    response.finish_reason = FinishReason::stop;

    if (prompt.find(markers::text_to_edit) != std::string::npos && ends_with_marker(prompt, markers::edited_text)) {
        response.text = answer_calibration(prompt);
    } else if (ends_with_marker(prompt, "Instruction:") &&
               prompt.find(markers::similarity_results) != std::string::npos) {
        response.text = answer_instruction(prompt);
    } else if (ends_with_marker(prompt, markers::useful_tools)) {
        response.text = answer_similarity();
    } else if (ends_with_marker(prompt, markers::familiarity_verdict)) {
        response.text = answer_familiarity(prompt);
    } else if (prompt.find(markers::selected_tasks) != std::string::npos) {
        response.text = answer_agent(prompt, Dialect::art);
    } else if (prompt.find(markers::dsp_rationale_lead) != std::string::npos) {
        response.text = answer_agent(prompt, Dialect::dsp);
    } else {
        response.text = std::string(kRefusal);
    }
    return response;
}

std::string SimulatedBackend::answer_agent(const std::string& prompt, Dialect dialect) const
{
    std::string question;
    std::string transcript;
    std::size_t step_index = 0;
    std::optional<ToolUseInstruction> instruction;

    if (dialect == Dialect::art) {
        std::string input_label = "\n" + std::string(markers::task_input);
        auto pos = prompt.rfind(input_label);
        if (pos == std::string::npos) {
            return std::string(kRefusal);
        }
        auto line_end = prompt.find('\n', pos + 1);
        question = text::trim(prompt.substr(pos + input_label.size(),
                                            line_end == std::string::npos ? prompt.npos : line_end - pos - input_label.size()));
        transcript = line_end == std::string::npos ? std::string{} : prompt.substr(line_end + 1);
        step_index = parse_trace(transcript, Dialect::art).steps.size();

        std::string head = prompt.substr(0, pos);
        auto use = head.rfind(markers::you_should_use);
        if (use != std::string::npos) {
            auto stop = head.find(markers::do_not_use, use);
            if (stop == std::string::npos) {
                stop = head.find('\n', use);
            }
            ToolUseInstruction parsed;
            parsed.allowed_tools = text::bracketed_tags(
                std::string_view(head).substr(use, stop == std::string::npos ? head.npos : stop - use));
            instruction = std::move(parsed);
        }
    } else {
        auto pos = prompt.rfind(markers::dsp_rationale_lead);
        question = text::last_labeled_line(prompt.substr(0, pos), markers::dsp_question);
        transcript = prompt.substr(pos + markers::dsp_rationale_lead.size());
        step_index = count_line_prefix(transcript, "Search Query:");
    }

    QaRecord task = task_for(question);
    return simulate_agent_step(policy_, task, instruction ? &*instruction : nullptr, step_index, dialect);
}

std::string SimulatedBackend::answer_familiarity(const std::string& prompt) const
{
    QaRecord task = task_for(text::last_labeled_line(prompt, markers::task_question));
    std::string verdict;
    if (task.log_popularity && classify_popularity(*task.log_popularity) == Popularity::high) {
        verdict = "The question concerns a well-known entity, so tools are unnecessary. Use [Internal Knowledge] "
                  "only and downweight your confidence in other tools.";
    } else {
        verdict = "Tools are needed because the entity is obscure and unlikely to be covered by internal knowledge.";
    }
    return std::string(markers::familiarity_verdict) + " " + verdict;
}

std::string SimulatedBackend::answer_similarity() const
{
    return std::string(markers::useful_tools) + " " + text::join_tags(policy_.useful_tools);
}

std::string SimulatedBackend::answer_instruction(const std::string& prompt) const
{
    std::string similarity = slice_between(prompt, markers::similarity_results, markers::familiarity_results);
    std::string familiarity = slice_between(prompt, markers::familiarity_results, "\nInstruction:");

    std::vector<std::string> catalog;
    auto json_begin = prompt.find("```json\n");
    auto json_end = json_begin == std::string::npos ? json_begin : prompt.find("\n```", json_begin + 8);
    if (json_end != std::string::npos) {
        json parsed = json::parse(prompt.substr(json_begin + 8, json_end - json_begin - 8), nullptr, false);
        if (parsed.is_object()) {
            for (const auto& [name, _] : parsed.items()) {
                catalog.push_back(name);
            }
        }
    }

    std::vector<std::string> allowed;
    for (const auto& tag : text::bracketed_tags(similarity)) {
        for (const auto& name : catalog) {
            if (text::iequals(tag, name) && !contains(allowed, name)) {
                allowed.push_back(name);
            }
        }
    }
    bool internal = familiarity.find("[Internal Knowledge]") != std::string::npos;
    std::string ik(markers::internal_knowledge);
    if ((internal || allowed.empty()) && !contains(allowed, ik)) {
        allowed.push_back(ik);
    }
    std::vector<std::string> forbidden;
    for (const auto& name : catalog) {
        if (!contains(allowed, name)) {
            forbidden.push_back(name);
        }
    }

    std::string out = "Make sure you follow the following instructions before you move on. ";
    out += internal ? "Your internal knowledge may be enough here, so include [Internal Knowledge] in your reasoning. "
                    : "This task needs tools. ";
    out += "You should use " + text::join_tags(allowed) + " ";
    out += forbidden.empty() ? std::string("DO NOT use any other tools.")
                             : "DO NOT use " + text::join_tags(forbidden) + ".";
    out += " Keep using the right tools until you reach a final answer that is reliable.";
    return out;
}

std::string SimulatedBackend::answer_calibration(const std::string& prompt) const
{
    auto levels = parse_number_list(text::last_labeled_line(prompt, markers::confidence_levels));
    auto accuracies = parse_number_list(text::last_labeled_line(prompt, markers::true_accuracy));

    std::string open = std::string(markers::text_to_edit) + " ";
    std::string close = "\n" + std::string(markers::edited_text);
    std::string reasoning = slice_between(prompt, open, close);

    bool dsp = reasoning.find("Confidence score:") != std::string::npos ||
               reasoning.find("Search Query:") != std::string::npos;
    ReasoningTrace trace = parse_trace(reasoning, dsp ? Dialect::dsp : Dialect::art, {}, TraceSource::calibration_agent);

    ConfidenceEdits edits;
    for (std::size_t s = 0; s < trace.steps.size(); ++s) {
        const auto& invocations = trace.steps[s].invocations;
        for (std::size_t i = 0; i < invocations.size(); ++i) {
            if (!invocations[i].stated_confidence) {
                continue;
            }
            double value = *invocations[i].stated_confidence / 100.0;
            std::optional<std::size_t> bin;
            for (std::size_t b = 0; b < levels.size() && b < accuracies.size(); ++b) {
                if (levels[b] && *levels[b] <= value + 1e-9) {
                    bin = b;
                }
            }
            if (bin && accuracies[*bin]) {
                edits[{s, i}] = static_cast<int>(std::lround(std::clamp(*accuracies[*bin], 0.0, 1.0) * 100.0));
            }
        }
    }
    return rewrite_confidences(trace, edits);
}

} // namespace toolcal
