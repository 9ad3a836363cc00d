#pragma once

#include <optional>
#include <string>
#include <vector>

#include "toolcal/dataset.hpp"
#include "toolcal/instruction.hpp"
#include "toolcal/model_handle.hpp"
#include "toolcal/prior.hpp"
#include "toolcal/tool_registry.hpp"
#include "toolcal/trace.hpp"

namespace toolcal {

struct AugmentedPrompt {
    Dialect dialect = Dialect::art;
    std::string base_prompt;
    std::optional<ToolUseInstruction> instruction;
    std::string text;  // base_prompt with the instruction inserted
};

// Renders the dialect's agent template and inserts the instruction text on
// its own line before the task description (art) or the question (dsp). No
// instruction, or an empty instruction text, leaves the base prompt as is.
AugmentedPrompt augment_prompt(Dialect dialect, const std::string& demos, const std::string& description,
                               const QaRecord& task, const ToolUseInstruction* instruction);

// Insert instruction_text into an already rendered agent prompt.
std::string insert_instruction(Dialect dialect, const std::string& base_prompt, const std::string& instruction_text);

struct RunLimits {
    std::size_t max_steps = 10;
    std::size_t max_tokens = 500;
};

enum class RunFinish { answered, budget, stalled, aborted };

std::string_view to_string(RunFinish finish) noexcept;

struct ToolUseRun {
    ReasoningTrace trace;
    RunFinish finish = RunFinish::answered;
    std::vector<std::string> flags;
};

// Alternates agent calls and tool observations until the agent answers, the
// step budget runs out, the agent neither answers nor calls a tool, or the
// backend fails. The trace covers everything generated after the prompt.
ToolUseRun run_tool_use(const AugmentedPrompt& prompt, ModelHandle& agent, const ToolRegistry& tools,
                        const RunLimits& limits, const QaRecord& task);

enum class CalibrationMode { llm_edit, table_direct };

std::string_view to_string(CalibrationMode mode) noexcept;
CalibrationMode parse_calibration_mode(std::string_view name);

struct CalibratedResult {
    ReasoningTrace original_trace;
    ReasoningTrace edited_trace;
    TaskConfidence original_confidence;
    TaskConfidence calibrated_confidence;
    std::string final_answer;
    CalibrationMode calibration_mode = CalibrationMode::table_direct;  // the mode that produced edited_trace
    std::vector<std::string> flags;
};

// Each stated confidence c becomes round(100 * accuracy) of the prior bin
// containing c/100; confidences in empty bins are kept.
ConfidenceEdits table_direct_edits(const ReasoningTrace& trace, const PriorTable& prior);

// llm_edit asks the calibrator to rewrite the scores and accepts a reply
// only if it differs from the trace in confidence values alone; after one
// retry it falls back to table_direct. Only confidence digits ever change.
CalibratedResult calibrate(const ReasoningTrace& trace, const PriorTable& prior, CalibrationMode mode,
                           ModelHandle* calibrator);

// "[0.0, 0.1, ...]" and "[0.25, N/A, ...]" as shown to the calibrator.
std::string format_confidence_levels(const PriorTable& prior);
std::string format_accuracies(const PriorTable& prior);

struct AnswerExtraction {
    std::string answer;
    std::vector<std::string> flags;
};

// art: the "Ans:" line. dsp: the "Answer:" line, else the last sentence of
// the last rationale. Refusals and missing markers give an empty answer.
AnswerExtraction extract_final_answer(const ReasoningTrace& trace);

bool is_refusal(std::string_view text);

} // namespace toolcal
