#include "toolcal/http_backend.hpp"

#include <cstdlib>
#include <thread>

#include "httplib.h"
#include "toolcal/error.hpp"

namespace toolcal {

using nlohmann::json;

class HttpBackend::InFlightSlot {
public:
    explicit InFlightSlot(HttpBackend& owner) : owner_(owner)
    {
        std::unique_lock lock(owner_.mutex_);
        owner_.released_.wait(lock, [&] { return owner_.in_flight_ < owner_.options_.max_in_flight; });
        ++owner_.in_flight_;
    }
    ~InFlightSlot()
    {
        {
            std::lock_guard lock(owner_.mutex_);
            --owner_.in_flight_;
        }
        owner_.released_.notify_one();
    }
    InFlightSlot(const InFlightSlot&) = delete;
    InFlightSlot& operator=(const InFlightSlot&) = delete;

private:
    HttpBackend& owner_;
};

HttpBackend::HttpBackend(HttpBackendOptions options) : options_(std::move(options))
{
    if (options_.api_key_env.empty()) {
        throw ConfigError("http backend needs api_key_env naming the credential variable");
    }
    const char* key = std::getenv(options_.api_key_env.c_str());
    if (key == nullptr || *key == '\0') {
        throw ConfigError("credential environment variable " + options_.api_key_env + " is not set");
    }
    api_key_ = key;
    if (options_.max_in_flight == 0) {
        options_.max_in_flight = 1;
    }

    const std::string& url = options_.base_url;
    auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos ||
        (url.compare(0, scheme_end, "http") != 0 && url.compare(0, scheme_end, "https") != 0)) {
        throw ConfigError("http backend base_url must start with http:// or https://, got '" + url + "'");
    }
    auto path_begin = url.find('/', scheme_end + 3);
    scheme_host_port_ = url.substr(0, path_begin);
    path_ = path_begin == std::string::npos ? std::string{} : url.substr(path_begin);
    while (!path_.empty() && path_.back() == '/') {
        path_.pop_back();
    }
    path_ += options_.api_style == ApiStyle::chat ? "/chat/completions" : "/completions";
}

std::string HttpBackend::describe() const
{
    return "http(" + scheme_host_port_ + path_ + ")";
}

json HttpBackend::build_body(const ModelRequest& request, ApiStyle style)
{
    json body{{"model", request.model_name},
              {"temperature", request.temperature},
              {"max_tokens", request.max_tokens}};
    if (!request.stop_sequences.empty()) {
        body["stop"] = request.stop_sequences;
    }
    if (style == ApiStyle::chat) {
        body["messages"] = json::array({json{{"role", "user"}, {"content", request.prompt}}});
    } else {
        body["prompt"] = request.prompt;
    }
    return body;
}

ModelResponse HttpBackend::parse_body(const std::string& body, ApiStyle style)
{
    json parsed = json::parse(body, nullptr, false);
    if (parsed.is_discarded()) {
        throw BackendError("response body is not JSON");
    }
    auto choices = parsed.find("choices");
    if (choices == parsed.end() || !choices->is_array() || choices->empty()) {
        throw BackendError("response has no choices");
    }
    const json& choice = (*choices)[0];
    ModelResponse out;
    if (style == ApiStyle::chat) {
        if (!choice.contains("message") || !choice["message"].contains("content") ||
            !choice["message"]["content"].is_string()) {
            throw BackendError("chat response choice has no message content");
        }
        out.text = choice["message"]["content"].get<std::string>();
    } else {
        if (!choice.contains("text") || !choice["text"].is_string()) {
            throw BackendError("completion response choice has no text");
        }
        out.text = choice["text"].get<std::string>();
    }
    std::string reason = choice.value("finish_reason", std::string("stop"));
    out.finish_reason = reason == "length" ? FinishReason::length : FinishReason::stop;
    return out;
}

namespace {

bool retryable_status(int status)
{
    return status == 408 || status == 429 || status >= 500;
}

} // namespace

ModelResponse HttpBackend::invoke(const ModelRequest& request)
{
    request.validate();
    const std::string payload = build_body(request, options_.api_style).dump();
    const httplib::Headers headers{{"Authorization", "Bearer " + api_key_}};

    InFlightSlot slot(*this);
    auto delay = options_.initial_backoff;
    std::string last_error;
    int last_status = 0;
    for (int attempt = 0; attempt <= options_.max_retries; ++attempt) {
        if (attempt > 0) {
            std::this_thread::sleep_for(delay);
            delay = std::chrono::milliseconds(
                static_cast<long long>(static_cast<double>(delay.count()) * options_.backoff_factor));
        }
        httplib::Client client(scheme_host_port_);
        client.set_connection_timeout(options_.timeout);
        client.set_read_timeout(options_.timeout);
        client.set_write_timeout(options_.timeout);

        auto started = std::chrono::steady_clock::now();
        auto result = client.Post(path_, headers, payload, "application/json");
        auto elapsed = std::chrono::steady_clock::now() - started;

        if (!result) {
            last_status = 0;
            last_error = "transport failure: " + httplib::to_string(result.error());
            continue;
        }
        if (result->status >= 200 && result->status < 300) {
            ModelResponse response = parse_body(result->body, options_.api_style);
            response.latency_ms = static_cast<std::uint64_t>(
                std::chrono::duration_cast<std::chrono::milliseconds>(elapsed).count());
            return response;
        }
        last_status = result->status;
        last_error = result->body.substr(0, 512);
        if (!retryable_status(result->status)) {
            break;
        }
    }
    if (last_status != 0) {
        throw HttpError(last_status, last_error);
    }
    throw BackendError(last_error + " after " + std::to_string(options_.max_retries + 1) + " attempt(s)");
}

} // namespace toolcal
