#include "toolcal/backend.hpp"

#include <algorithm>

#include "toolcal/error.hpp"
#include "toolcal/hashing.hpp"
#include "toolcal/instruction.hpp"

namespace toolcal {

using nlohmann::json;

void ModelRequest::validate() const
{
    if (prompt.empty()) {
        throw InvalidArgument("model request has an empty prompt");
    }
    if (max_tokens < 1) {
        throw InvalidArgument("model request max_tokens must be >= 1");
    }
    if (!(temperature >= 0.0)) {
        throw InvalidArgument("model request temperature must be >= 0");
    }
}

json to_json(const ModelRequest& request)
{
    return json{{"model_name", request.model_name},
                {"prompt", request.prompt},
                {"temperature", request.temperature},
                {"max_tokens", request.max_tokens},
                {"stop_sequences", request.stop_sequences}};
}

ModelRequest request_from_json(const json& j)
{
    ModelRequest r;
    r.model_name = j.at("model_name").get<std::string>();
    r.prompt = j.at("prompt").get<std::string>();
    r.temperature = j.at("temperature").get<double>();
    r.max_tokens = j.at("max_tokens").get<std::size_t>();
    r.stop_sequences = j.value("stop_sequences", std::vector<std::string>{});
    return r;
}

std::string request_key(const ModelRequest& request)
{
    // Object keys serialize sorted, so the dump is canonical.
    return sha256_hex(to_json(request).dump());
}

std::string_view to_string(FinishReason reason) noexcept
{
    switch (reason) {
    case FinishReason::stop:
        return "stop";
    case FinishReason::length:
        return "length";
    case FinishReason::error:
        break;
    }
    return "error";
}

FinishReason parse_finish_reason(std::string_view name)
{
    if (name == "stop") {
        return FinishReason::stop;
    }
    if (name == "length") {
        return FinishReason::length;
    }
    if (name == "error") {
        return FinishReason::error;
    }
    throw InvalidArgument("unknown finish reason '" + std::string(name) + "'");
}

json to_json(const ModelResponse& response)
{
    return json{{"text", response.text},
                {"finish_reason", to_string(response.finish_reason)},
                {"latency_ms", response.latency_ms}};
}

ModelResponse response_from_json(const json& j)
{
    ModelResponse r;
    r.text = j.at("text").get<std::string>();
    r.finish_reason = parse_finish_reason(j.at("finish_reason").get<std::string>());
    r.latency_ms = j.value("latency_ms", std::uint64_t{0});
    return r;
}

std::size_t default_max_tokens(Dialect dialect) noexcept
{
    return dialect == Dialect::art ? 500 : 800;
}

std::size_t default_max_steps(Dialect dialect) noexcept
{
    return dialect == Dialect::art ? 10 : 3;
}

bool ToolUseInstruction::is_allowed(const std::string& tool) const
{
    return std::find(allowed_tools.begin(), allowed_tools.end(), tool) != allowed_tools.end();
}

json to_json(const ToolUseInstruction& instruction)
{
    return json{{"allowed_tools", instruction.allowed_tools},
                {"forbidden_tools", instruction.forbidden_tools},
                {"instruction_text", instruction.instruction_text}};
}

ToolUseInstruction instruction_from_json(const json& j)
{
    ToolUseInstruction i;
    i.allowed_tools = j.at("allowed_tools").get<std::vector<std::string>>();
    i.forbidden_tools = j.at("forbidden_tools").get<std::vector<std::string>>();
    i.instruction_text = j.at("instruction_text").get<std::string>();
    return i;
}

} // namespace toolcal
