#include "toolcal/prompts.hpp"

#include <array>
#include <vector>

#include "toolcal/error.hpp"

namespace toolcal {

namespace {

// Template bodies. Slot markers are "%s"; nothing else in a body uses '%'.
constexpr std::string_view k_dsp_v = R"(Write a search query that will help answer a complex question. Write N/A if the context contains the answer to the question. Also include a confidence socre about your query.
Note: The confidence level indicates the degree of certainty you have about your reasoning and is represented as a percentage. For instance, if your confidence level is 80, it means you are 80 percent certain that your answer is correct and there is a 20 percent chance that it may be incorrect.
---
Follow the following format.
Context:${sources that may contain relevant content}
Question: ${the question to be answered}
Rationale: Let's think step by step. Based on the context, we have learned the following. ${a short summary from the context that provides useful clues}
Search Query: ${a simple question for seeking the missing information}
Confidence score: ${a score from 0 to 100}
---
Context: %s
Question: %s
Rationale: Let's think step by step. Based on the context, we have learned the following.)";

constexpr std::string_view k_art_v = R"(In these examples, you are given a task description and an input.
Break the input down into subtasks in order to solve the task. You can use affordances like string operations, search engines, arithmetic functions, or code generation.
Be sure to use "[]" to specify affordances in subtasks.
Also, use a separate '[]' to provide a score from 0 to 100 after each affordance to indicate your confidence level using this affordance.
If you are confident that your internal knowledge is more reliable than external tools, use your own knowledge.
When solving the task, avoid using affordances with low confidence level in the demonstrations below, because it often indicates a higher chance of making mistakes. If you still want to use them, make sure to assign a low confidence score.
Note: The confidence level indicates the degree of certainty you have about your reasoning and is represented as a percentage.
For instance, if your confidence level is 80, it means you are 80 percent certain that your answer is correct and there is a 20 percent chance that it may be incorrect.
----
Selected Similar tasks: %s
----
Description: %s
Input: %s)";

constexpr std::string_view k_fam_se = R"(Given a complex question to answer, determine whether using tools is necessary to answer it. If you determine that tools are unnecessary, you should include the suggestion to use "[Internal Knowledge]" only and downweight your confidence in using other tools. Otherwise you should provide a brief explanation on why tools are needed.
***
Follow the following format:
Task question: ${a complex question to answer}
Familiarity verdict: ${Your verdict on whether to use tools. Often along with a brief explanation}
***
Task question: %s
Familiarity verdict:)";

constexpr std::string_view k_sim_se = R"(You are given a question and several demos on using tools. Extract the name of the tools in the demos that you think are useful to answer the question. Don't select all tools, only include tools that you think are most helpful. Keep in mind to keep the tool list short. Note that tools are often expressed with their names in square brackets "[]".
***
Follow the following format:
Demo examples: ${few shot examples showing how to use different tools}
Task question: ${a complex question to answer}
Useful tools: ${a short list that keeps the minimal tools that helps answer the question. Remember to include a square bracket "[]" to any referred tool}
***
Demo examples: %s
Task question: %s
Useful tools:)";

constexpr std::string_view k_instr_se = R"(Given the evaluation results on task similarity and familiarity, compile them into a detailed instruction that the agent can follow so that it can use tools more effectively. Make sure your instruction is based on the evaluation results and it should contain the following points:
* Tell the agent whether or not it needs a tool
* If no tool is needed, make sure to include [Internal Knowledge] in your reasoning
* If needs a tool, always tell the exact name from the tool list in task similarity evaluation. Begin the instruction with "You should use..."
* Include a square bracket "[]" for each tool that you tell the agent
* Tell the agent not to use the tools not selected from the json file below
* Provide the final instruction only, do not provide the previous evaluation results
Below is a json file that describe the function of each tool
```json
%s
```
***
Follow the following structure by filling out the missing blocks with description:
Evaluation results on task similarity: ${agent assessment on which tools are useful, often in a list expression}
Evaluation results on task familiarity: ${agent assessment on tool confidence and verdict on whether to use its own knowledge}
Instruction: Make sure you follow the following instructions before you move on. ${your verdict on whether to use own knowledge} You should use ${Tools from the similarity result} DO NOT use ${all tools not selected in similarity result but appeared in json file}. Keep using the right tools until you reach a final answer that is reliable.
***
Evaluation results on task similarity: %s
Evaluation results on task familiarity: %s
Instruction:)";

constexpr std::string_view k_calib_ar = R"(You are given a resaoning process with confidence scores within each step in the square bracket "[]".
Your job is to refer to the accuracy confidence table below and edit the confidence scores in the reasoning.
Instructions:
First identify the confidence range and find the corresponding accuracy in the table. If accuracy is lower than confidence, you should decrease the score. If accuracy is higher than confidence, you should increase the score. Finally, replace the original confidence score with your newly edited score. Your answer should keep the exact same structure of reasoning text and the input question, no extra explanation is needed.
----
Below is the accuracy-confidence table:
confidence level: %s
true accuracy: %s
----
Reasoning text to edit: %s
Your edited reasoning text:)";

constexpr std::size_t count_slots(std::string_view body)
{
    std::size_t n = 0;
    for (std::size_t pos = body.find("%s"); pos != std::string_view::npos; pos = body.find("%s", pos + 2)) {
        ++n;
    }
    return n;
}

constexpr std::array<PromptTemplate, 6> kCatalog{{
    {PromptName::dsp_v, k_dsp_v, count_slots(k_dsp_v)},
    {PromptName::art_v, k_art_v, count_slots(k_art_v)},
    {PromptName::fam_se, k_fam_se, count_slots(k_fam_se)},
    {PromptName::sim_se, k_sim_se, count_slots(k_sim_se)},
    {PromptName::instr_se, k_instr_se, count_slots(k_instr_se)},
    {PromptName::calib_ar, k_calib_ar, count_slots(k_calib_ar)},
}};

static_assert(kCatalog[0].slot_count == 2);
static_assert(kCatalog[1].slot_count == 3);
static_assert(kCatalog[2].slot_count == 1);
static_assert(kCatalog[3].slot_count == 2);
static_assert(kCatalog[4].slot_count == 3);
static_assert(kCatalog[5].slot_count == 3);

} // namespace

std::string_view to_string(PromptName name) noexcept
{
    switch (name) {
    case PromptName::dsp_v:
        return "dsp_v";
    case PromptName::art_v:
        return "art_v";
    case PromptName::fam_se:
        return "fam_se";
    case PromptName::sim_se:
        return "sim_se";
    case PromptName::instr_se:
        return "instr_se";
    case PromptName::calib_ar:
        break;
    }
    return "calib_ar";
}

PromptName parse_prompt_name(std::string_view name)
{
    for (const auto& t : kCatalog) {
        if (to_string(t.name) == name) {
            return t.name;
        }
    }
    throw InvalidArgument("unknown prompt template '" + std::string(name) + "'");
}

const PromptTemplate& prompt_template(PromptName name)
{
    return kCatalog[static_cast<std::size_t>(name)];
}

std::string render_prompt(const PromptTemplate& tmpl, std::span<const std::string> args)
{
    if (args.size() != tmpl.slot_count) {
        throw InvalidArgument("prompt template '" + std::string(to_string(tmpl.name)) + "' takes " +
                              std::to_string(tmpl.slot_count) + " argument(s), got " +
                              std::to_string(args.size()));
    }
    std::string out;
    std::size_t reserve = tmpl.body.size();
    for (const auto& a : args) {
        reserve += a.size();
    }
    out.reserve(reserve);
    std::size_t cursor = 0;
    for (const auto& arg : args) {
        std::size_t slot = tmpl.body.find("%s", cursor);
        out.append(tmpl.body.substr(cursor, slot - cursor));
        out.append(arg);
        cursor = slot + 2;
    }
    out.append(tmpl.body.substr(cursor));
    return out;
}

std::string render_prompt(PromptName name, std::initializer_list<std::string> args)
{
    std::vector<std::string> copy(args);
    return render_prompt(prompt_template(name), copy);
}

} // namespace toolcal
