#pragma once

#include <deque>
#include <functional>
#include <mutex>
#include <string>
#include <vector>

#include "toolcal/backend.hpp"
#include "toolcal/error.hpp"

namespace toolcal::testkit {

// Answers requests through a callback and remembers every prompt.
class ScriptedBackend final : public Backend {
public:
    using Reply = std::function<std::string(const ModelRequest&)>;

    explicit ScriptedBackend(Reply reply) : reply_(std::move(reply)) {}

    // Replies are consumed in order; running out raises BackendError.
    static std::shared_ptr<ScriptedBackend> queue(std::vector<std::string> replies)
    {
        auto q = std::make_shared<std::deque<std::string>>(replies.begin(), replies.end());
        return std::make_shared<ScriptedBackend>([q](const ModelRequest&) {
            if (q->empty()) {
                throw BackendError("script exhausted");
            }
            std::string r = q->front();
            q->pop_front();
            return r;
        });
    }

    ModelResponse invoke(const ModelRequest& request) override
    {
        {
            std::lock_guard lock(mutex_);
            prompts_.push_back(request.prompt);
        }
        return ModelResponse{reply_(request), FinishReason::stop, 0};
    }
    std::string describe() const override { return "scripted"; }

    std::vector<std::string> prompts() const
    {
        std::lock_guard lock(mutex_);
        return prompts_;
    }

private:
    Reply reply_;
    mutable std::mutex mutex_;
    std::vector<std::string> prompts_;
};

} // namespace toolcal::testkit
