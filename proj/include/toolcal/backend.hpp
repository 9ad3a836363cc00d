#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "toolcal/trace.hpp"

namespace toolcal {

struct ModelRequest {
    std::string model_name;
    std::string prompt;
    double temperature = 0.7;
    std::size_t max_tokens = 500;
    std::vector<std::string> stop_sequences;

    // Throws InvalidArgument on an empty prompt, max_tokens == 0 or a
    // negative temperature.
    void validate() const;
};

nlohmann::json to_json(const ModelRequest& request);
ModelRequest request_from_json(const nlohmann::json& j);

// Content hash of (model_name, prompt, temperature, max_tokens, stop_sequences).
std::string request_key(const ModelRequest& request);

enum class FinishReason { stop, length, error };

std::string_view to_string(FinishReason reason) noexcept;
FinishReason parse_finish_reason(std::string_view name);

struct ModelResponse {
    std::string text;
    FinishReason finish_reason = FinishReason::stop;
    std::uint64_t latency_ms = 0;
};

nlohmann::json to_json(const ModelResponse& response);
ModelResponse response_from_json(const nlohmann::json& j);

// Uniform model-invocation contract. Implementations are safe to call from
// several threads at once.
class Backend {
public:
    virtual ~Backend() = default;

    // Throws BackendError (or a subclass) when no response can be produced.
    virtual ModelResponse invoke(const ModelRequest& request) = 0;
    virtual std::string describe() const = 0;
};

using BackendPtr = std::shared_ptr<Backend>;

inline constexpr double kDefaultTemperature = 0.7;

std::size_t default_max_tokens(Dialect dialect) noexcept;  // 500 art, 800 dsp
std::size_t default_max_steps(Dialect dialect) noexcept;   // 10 art, 3 dsp

} // namespace toolcal
