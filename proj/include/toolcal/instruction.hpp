#pragma once

#include <string>
#include <vector>

#include "json.hpp"

namespace toolcal {

// Compiled self-evaluation output constraining which tools the agent may use.
struct ToolUseInstruction {
    std::vector<std::string> allowed_tools;
    std::vector<std::string> forbidden_tools;
    std::string instruction_text;

    bool is_allowed(const std::string& tool) const;
};

nlohmann::json to_json(const ToolUseInstruction& instruction);
ToolUseInstruction instruction_from_json(const nlohmann::json& j);

} // namespace toolcal
