#include "toolcal/selfeval.hpp"

#include <algorithm>
#include <fstream>

#include "toolcal/error.hpp"
#include "toolcal/prompts.hpp"
#include "toolcal/text.hpp"

namespace toolcal {

using nlohmann::json;

namespace {

bool contains(const std::vector<std::string>& items, const std::string& item)
{
    return std::find(items.begin(), items.end(), item) != items.end();
}

std::string after_last(const std::string& reply, std::string_view marker, bool& found)
{
    auto pos = reply.rfind(marker);
    found = pos != std::string::npos;
    return found ? reply.substr(pos + marker.size()) : reply;
}

} // namespace

ToolCatalog default_tool_catalog()
{
    return {
        {"search", "Query a search engine or retriever and return relevant text snippets."},
        {"check answer type", "Determine what type of answer (entity, date, number, place) the question expects."},
        {"string operations", "Manipulate strings: split, join, extract or reformat text."},
        {"code generate", "Write and run a short program to compute an intermediate result."},
        {"Internal Knowledge", "Answer from the model's own parametric knowledge without calling a tool."},
    };
}

ToolCatalog load_tool_catalog(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot open tool catalog " + path.string());
    }
    json parsed = json::parse(in, nullptr, false);
    if (parsed.is_discarded() || !parsed.is_object() || parsed.empty()) {
        throw ConfigError("tool catalog " + path.string() + " must be a non-empty JSON object");
    }
    ToolCatalog catalog;
    for (const auto& [name, description] : parsed.items()) {
        if (!description.is_string()) {
            throw ConfigError("tool catalog entry '" + name + "' must map to a description string");
        }
        catalog.emplace(name, description.get<std::string>());
    }
    return catalog;
}

FamiliarityVerdict parse_familiarity(const std::string& reply)
{
    FamiliarityVerdict out;
    bool found = false;
    std::string verdict = text::trim(after_last(reply, markers::familiarity_verdict, found));
    if (!found) {
        out.flags.push_back("familiarity_marker_missing");
        out.verdict_text = reply.empty() ? std::string("(empty reply)") : reply;
        out.use_internal_knowledge = false;
        return out;
    }
    if (verdict.empty()) {
        out.flags.push_back("familiarity_verdict_empty");
        verdict = "(empty verdict)";
    }
    out.use_internal_knowledge = verdict.find("[Internal Knowledge]") != std::string::npos;
    out.verdict_text = std::move(verdict);
    return out;
}

FamiliarityVerdict evaluate_familiarity(const std::string& question, ModelHandle& teacher)
{
    auto response = teacher.call(to_string(PromptName::fam_se), render_prompt(PromptName::fam_se, {question}));
    return parse_familiarity(response.text);
}

SimilarityToolList parse_similarity(const std::string& reply)
{
    SimilarityToolList out;
    out.raw_text = reply;
    bool found = false;
    std::string tail = after_last(reply, markers::useful_tools, found);
    if (!found) {
        out.flags.push_back("similarity_marker_missing");
        return out;
    }
    for (auto& tag : text::bracketed_tags(tail)) {
        if (!contains(out.useful_tools, tag)) {
            out.useful_tools.push_back(std::move(tag));
        }
    }
    return out;
}

SimilarityToolList evaluate_similarity(const std::string& question, const std::string& demos, ModelHandle& teacher)
{
    if (text::trim(demos).empty()) {
        throw InvalidArgument("similarity evaluation needs non-empty demos");
    }
    auto response = teacher.call(to_string(PromptName::sim_se), render_prompt(PromptName::sim_se, {demos, question}));
    return parse_similarity(response.text);
}

std::string fallback_instruction_text(const FamiliarityVerdict& fam, const std::vector<std::string>& allowed,
                                      const std::vector<std::string>& forbidden)
{
    std::string out = "Make sure you follow the following instructions before you move on. ";
    out += fam.use_internal_knowledge ? "You may rely on [Internal Knowledge] where it is sufficient. "
                                      : "This task needs tools. ";
    out += "You should use " + text::join_tags(allowed) + " ";
    out += forbidden.empty() ? std::string("DO NOT use any other tools.")
                             : "DO NOT use " + text::join_tags(forbidden) + ".";
    out += " Keep using the right tools until you reach a final answer that is reliable.";
    return out;
}

CompiledInstruction compile_instruction(const FamiliarityVerdict& fam, const SimilarityToolList& sim,
                                        const ToolCatalog& catalog, ModelHandle* teacher)
{
    if (catalog.empty()) {
        throw InvalidArgument("tool catalog must not be empty");
    }
    const std::string ik(markers::internal_knowledge);
    CompiledInstruction out;
    auto& allowed = out.instruction.allowed_tools;
    for (const auto& tool : sim.useful_tools) {
        std::string canonical;
        if (text::iequals(tool, ik)) {
            canonical = ik;
        } else {
            for (const auto& [name, _] : catalog) {
                if (text::iequals(tool, name)) {
                    canonical = name;
                    break;
                }
            }
        }
        if (canonical.empty()) {
            out.flags.push_back("unknown_tool_dropped:" + tool);
        } else if (!contains(allowed, canonical)) {
            allowed.push_back(std::move(canonical));
        }
    }
    if (fam.use_internal_knowledge && !contains(allowed, ik)) {
        allowed.push_back(ik);
    }
    if (allowed.empty()) {
        allowed.push_back(ik);
        out.flags.push_back("empty_allowed_set_defaulted_to_internal_knowledge");
    }
    for (const auto& [name, _] : catalog) {
        if (!contains(allowed, name)) {
            out.instruction.forbidden_tools.push_back(name);
        }
    }
    if (!contains(allowed, ik) && !contains(out.instruction.forbidden_tools, ik)) {
        out.instruction.forbidden_tools.push_back(ik);
    }

    std::string fallback = fallback_instruction_text(fam, allowed, out.instruction.forbidden_tools);
    if (teacher == nullptr) {
        out.instruction.instruction_text = std::move(fallback);
        return out;
    }

    json catalog_json(catalog);
    std::string prompt = render_prompt(PromptName::instr_se, {catalog_json.dump(2), sim.raw_text, fam.verdict_text});
    std::string reply;
    try {
        reply = teacher->call(to_string(PromptName::instr_se), std::move(prompt)).text;
    } catch (const std::exception& e) {
        out.flags.push_back(std::string("instruction_teacher_error: ") + e.what());
    }
    reply = text::trim(reply);
    if (text::starts_with_ci(reply, "Instruction:")) {
        reply = text::trim(reply.substr(12));
    }
    if (reply.find(markers::you_should_use) != std::string::npos &&
        reply.find(markers::do_not_use) != std::string::npos) {
        out.instruction.instruction_text = std::move(reply);
    } else {
        out.flags.push_back("instruction_fallback_template");
        out.instruction.instruction_text = std::move(fallback);
    }
    return out;
}

SelfEvaluation run_self_evaluation(const std::string& question, const std::string& demos, Dialect dialect,
                                   const ToolCatalog& catalog, ModelHandle& teacher)
{
    SelfEvaluation se;
    se.familiarity = evaluate_familiarity(question, teacher);
    if (dialect == Dialect::art) {
        se.similarity = evaluate_similarity(question, demos, teacher);
    } else {
        se.similarity.useful_tools = {"search"};
        se.similarity.raw_text = "[search]";
    }
    auto compiled = compile_instruction(se.familiarity, se.similarity, catalog,
                                        dialect == Dialect::art ? &teacher : nullptr);
    se.instruction = std::move(compiled.instruction);
    for (const auto* flags : {&se.familiarity.flags, &se.similarity.flags, &compiled.flags}) {
        se.flags.insert(se.flags.end(), flags->begin(), flags->end());
    }
    return se;
}

json to_json(const SelfEvaluation& se)
{
    return json{{"familiarity",
                 {{"use_internal_knowledge", se.familiarity.use_internal_knowledge},
                  {"verdict_text", se.familiarity.verdict_text}}},
                {"similarity", {{"useful_tools", se.similarity.useful_tools}, {"raw_text", se.similarity.raw_text}}},
                {"instruction", to_json(se.instruction)},
                {"flags", se.flags}};
}

} // namespace toolcal
