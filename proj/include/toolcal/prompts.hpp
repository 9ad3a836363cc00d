#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>

namespace toolcal {

enum class PromptName { dsp_v, art_v, fam_se, sim_se, instr_se, calib_ar };

std::string_view to_string(PromptName name) noexcept;
PromptName parse_prompt_name(std::string_view name);

// A catalog entry. Slots are the literal "%s" markers, filled in order.
struct PromptTemplate {
    PromptName name;
    std::string_view body;
    std::size_t slot_count;
};

const PromptTemplate& prompt_template(PromptName name);

// Throws InvalidArgument naming the template when args.size() differs
// from the slot count. Argument text is inserted verbatim.
std::string render_prompt(const PromptTemplate& tmpl, std::span<const std::string> args);
std::string render_prompt(PromptName name, std::initializer_list<std::string> args);

namespace markers {
inline constexpr std::string_view familiarity_verdict = "Familiarity verdict:";
inline constexpr std::string_view useful_tools = "Useful tools:";
inline constexpr std::string_view you_should_use = "You should use";
inline constexpr std::string_view do_not_use = "DO NOT use";
inline constexpr std::string_view internal_knowledge = "Internal Knowledge";
inline constexpr std::string_view selected_tasks = "Selected Similar tasks:";
inline constexpr std::string_view task_input = "Input:";
inline constexpr std::string_view description = "Description:";
inline constexpr std::string_view dsp_question = "Question:";
inline constexpr std::string_view dsp_rationale_lead =
    "Rationale: Let's think step by step. Based on the context, we have learned the following.";
inline constexpr std::string_view task_question = "Task question:";
inline constexpr std::string_view similarity_results = "Evaluation results on task similarity:";
inline constexpr std::string_view familiarity_results = "Evaluation results on task familiarity:";
inline constexpr std::string_view confidence_levels = "confidence level:";
inline constexpr std::string_view true_accuracy = "true accuracy:";
inline constexpr std::string_view text_to_edit = "Reasoning text to edit:";
inline constexpr std::string_view edited_text = "Your edited reasoning text:";
} // namespace markers

} // namespace toolcal
