#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "toolcal/backend.hpp"
#include "toolcal/dataset.hpp"
#include "toolcal/instruction.hpp"

namespace toolcal {

// Scripted tool-use agent. Misuse means drawing a tag outside useful_tools;
// the stated confidence is the step's true success probability shifted by
// confidence_bias.
struct SimulatedAgentPolicy {
    std::vector<std::string> tool_menu{"search", "check answer type", "string operations", "code generate"};
    std::vector<std::string> useful_tools{"search", "check answer type"};
    double misuse_probability = 0.25;
    double confidence_bias = 0.3;
    double base_accuracy_correct_tools = 0.6;
    double base_accuracy_misuse = 0.3;
    bool obeys_instruction = true;
    std::uint64_t rng_seed = 42;
    // Tool-using steps before the answer step.
    std::size_t tool_steps = 2;
    // Chance that a task is answered with a refusal and no tool use.
    double refusal_probability = 0.0;

    // Throws InvalidArgument when an invariant does not hold.
    void validate() const;
};

nlohmann::json to_json(const SimulatedAgentPolicy& policy);
SimulatedAgentPolicy policy_from_json(const nlohmann::json& j);

// The deterministic plan behind one task; exposed for tests.
struct SimulatedStepChoice {
    std::string tool;
    bool misuse = false;
    int stated_confidence = 0;
};

struct SimulatedTaskPlan {
    std::vector<SimulatedStepChoice> steps;
    bool refuses = false;
    bool answer_correct = false;
    double success_probability = 0.0;
};

SimulatedTaskPlan plan_task(const SimulatedAgentPolicy& policy, const QaRecord& task,
                            const std::optional<std::vector<std::string>>& allowed_tools);

// One agent step of text: a tool step for step_index < tool_steps, the
// answer step otherwise. Pure in (policy, task id, step_index, instruction).
std::string simulate_agent_step(const SimulatedAgentPolicy& policy, const QaRecord& task,
                                const ToolUseInstruction* instruction, std::size_t step_index,
                                Dialect dialect = Dialect::art);

// Backend that recognizes every catalog prompt (agent, teacher and
// calibrator roles) and answers with templated deterministic text. Tasks
// are identified by their question text.
class SimulatedBackend final : public Backend {
public:
    SimulatedBackend(SimulatedAgentPolicy policy, const std::vector<QaRecord>& tasks);

    ModelResponse invoke(const ModelRequest& request) override;
    std::string describe() const override;

    const SimulatedAgentPolicy& policy() const noexcept { return policy_; }

private:
    std::string answer_agent(const std::string& prompt, Dialect dialect) const;
    std::string answer_familiarity(const std::string& prompt) const;
    std::string answer_similarity() const;
    std::string answer_instruction(const std::string& prompt) const;
    std::string answer_calibration(const std::string& prompt) const;
    QaRecord task_for(const std::string& question) const;

    SimulatedAgentPolicy policy_;
    std::map<std::string, QaRecord> tasks_by_question_;
};

} // namespace toolcal
