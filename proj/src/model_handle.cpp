#include "toolcal/model_handle.hpp"

#include "toolcal/error.hpp"

namespace toolcal {

using nlohmann::json;

json to_json(const CallRecord& call, bool include_prompt)
{
    json j{{"role", call.role}, {"template", call.template_name}, {"key", call.key}, {"response", call.response}};
    if (include_prompt) {
        j["prompt"] = call.prompt;
    }
    if (!call.error.empty()) {
        j["error"] = call.error;
    }
    return j;
}

ModelHandle::ModelHandle(BackendPtr backend, std::string role, std::string model_name, double temperature,
                         std::size_t max_tokens)
    : backend_(std::move(backend)),
      role_(std::move(role)),
      model_name_(std::move(model_name)),
      temperature_(temperature),
      max_tokens_(max_tokens)
{
    if (!backend_) {
        throw ConfigError("no backend configured for role '" + role_ + "'");
    }
}

ModelResponse ModelHandle::call(std::string_view template_name, std::string prompt,
                                std::vector<std::string> stop_sequences)
{
    return call(template_name, std::move(prompt), max_tokens_, std::move(stop_sequences));
}

ModelResponse ModelHandle::call(std::string_view template_name, std::string prompt, std::size_t max_tokens,
                                std::vector<std::string> stop_sequences)
{
    ModelRequest request;
    request.model_name = model_name_;
    request.prompt = std::move(prompt);
    request.temperature = temperature_;
    request.max_tokens = max_tokens;
    request.stop_sequences = std::move(stop_sequences);

    CallRecord record;
    record.role = role_;
    record.template_name = std::string(template_name);
    record.key = request_key(request);
    try {
        ModelResponse response = backend_->invoke(request);
        record.response = response.text;
        record.prompt = std::move(request.prompt);
        calls_.push_back(std::move(record));
        return response;
    } catch (const std::exception& e) {
        record.error = e.what();
        record.prompt = std::move(request.prompt);
        calls_.push_back(std::move(record));
        throw;
    }
}

std::vector<CallRecord> ModelHandle::take_calls()
{
    std::vector<CallRecord> out;
    out.swap(calls_);
    return out;
}

} // namespace toolcal
