#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "toolcal/backend.hpp"

namespace toolcal {

// One model invocation as it appears in a run log.
struct CallRecord {
    std::string role;
    std::string template_name;
    std::string key;
    std::string prompt;
    std::string response;
    std::string error;  // empty on success
};

nlohmann::json to_json(const CallRecord& call, bool include_prompt);

// A backend bound to one role and its request parameters. Keeps the calls
// it made so a task's run log can list them; not shared between threads.
class ModelHandle {
public:
    ModelHandle(BackendPtr backend, std::string role, std::string model_name,
                double temperature = kDefaultTemperature, std::size_t max_tokens = 500);

    // Rethrows backend errors after logging them.
    ModelResponse call(std::string_view template_name, std::string prompt,
                       std::vector<std::string> stop_sequences = {});
    ModelResponse call(std::string_view template_name, std::string prompt, std::size_t max_tokens,
                       std::vector<std::string> stop_sequences = {});

    const std::string& role() const noexcept { return role_; }
    const std::string& model_name() const noexcept { return model_name_; }
    const std::vector<CallRecord>& calls() const noexcept { return calls_; }
    std::vector<CallRecord> take_calls();

private:
    BackendPtr backend_;
    std::string role_;
    std::string model_name_;
    double temperature_;
    std::size_t max_tokens_;
    std::vector<CallRecord> calls_;
};

} // namespace toolcal
