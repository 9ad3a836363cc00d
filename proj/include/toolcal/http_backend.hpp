#pragma once

#include <chrono>
#include <condition_variable>
#include <mutex>
#include <string>

#include "toolcal/backend.hpp"

namespace toolcal {

enum class ApiStyle { chat, completions };

struct HttpBackendOptions {
    // e.g. "https://api.openai.com/v1"; "/chat/completions" or
    // "/completions" is appended.
    std::string base_url;
    // Name of the environment variable that holds the bearer token.
    std::string api_key_env = "OPENAI_API_KEY";
    ApiStyle api_style = ApiStyle::chat;
    int max_retries = 3;
    std::chrono::milliseconds initial_backoff{500};
    double backoff_factor = 2.0;
    std::chrono::seconds timeout{60};
    std::size_t max_in_flight = 4;
};

// OpenAI-compatible client. Transport failures and 429/5xx responses are
// retried with exponential backoff; other non-2xx statuses fail at once.
class HttpBackend final : public Backend {
public:
    // Throws ConfigError when the credential variable is unset or the URL is
    // not http(s).
    explicit HttpBackend(HttpBackendOptions options);

    ModelResponse invoke(const ModelRequest& request) override;
    std::string describe() const override;

    static nlohmann::json build_body(const ModelRequest& request, ApiStyle style);
    // Throws BackendError when the payload has no usable choice.
    static ModelResponse parse_body(const std::string& body, ApiStyle style);

private:
    class InFlightSlot;

    HttpBackendOptions options_;
    std::string api_key_;
    std::string scheme_host_port_;
    std::string path_;

    std::mutex mutex_;
    std::condition_variable released_;
    std::size_t in_flight_ = 0;
};

} // namespace toolcal
