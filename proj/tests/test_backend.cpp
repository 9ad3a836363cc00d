#include <gtest/gtest.h>

#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <thread>

#include "httplib.h"
#include "toolcal/cache.hpp"
#include "toolcal/error.hpp"
#include "toolcal/http_backend.hpp"
#include "toolcal/model_handle.hpp"

using namespace toolcal;
using nlohmann::json;

namespace {

ModelRequest sample_request()
{
    ModelRequest r;
    r.model_name = "m";
    r.prompt = "Say hi";
    r.stop_sequences = {"\n#"};
    return r;
}

// Local OpenAI-compatible endpoint. Fails the first `failures` requests
// with `fail_status`, then answers.
class FakeServer {
public:
    FakeServer(int failures, int fail_status) : failures_(failures), fail_status_(fail_status)
    {
        server_.Post("/v1/chat/completions", [this](const httplib::Request& req, httplib::Response& res) {
            int n = ++requests_;
            auth_ = req.get_header_value("Authorization");
            body_ = req.body;
            if (n <= failures_) {
                res.status = fail_status_;
                res.set_content("{\"error\": \"busy\"}", "application/json");
                return;
            }
            res.set_content(R"({"choices": [{"message": {"role": "assistant", "content": "hi there"},
                                 "finish_reason": "length"}]})",
                            "application/json");
        });
        port_ = server_.bind_to_any_port("127.0.0.1");
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
    }
    ~FakeServer()
    {
        server_.stop();
        thread_.join();
    }

    std::string base_url() const { return "http://127.0.0.1:" + std::to_string(port_) + "/v1"; }
    int requests() const { return requests_; }
    std::string auth() const { return auth_; }
    std::string body() const { return body_; }

private:
    httplib::Server server_;
    std::thread thread_;
    int port_ = 0;
    int failures_;
    int fail_status_;
    std::atomic<int> requests_{0};
    std::string auth_;
    std::string body_;
};

HttpBackendOptions options_for(const FakeServer& s)
{
    HttpBackendOptions o;
    o.base_url = s.base_url();
    o.api_key_env = "TOOLCAL_TEST_KEY";
    o.initial_backoff = std::chrono::milliseconds(1);
    o.max_retries = 3;
    o.timeout = std::chrono::seconds(5);
    return o;
}

std::filesystem::path temp_file(const std::string& name)
{
    auto p = std::filesystem::temp_directory_path() / ("toolcal_" + name);
    std::filesystem::remove(p);
    return p;
}

class CountingBackend final : public Backend {
public:
    ModelResponse invoke(const ModelRequest& request) override
    {
        ++calls;
        return ModelResponse{"echo:" + request.prompt, FinishReason::stop, 5};
    }
    std::string describe() const override { return "counting"; }
    std::atomic<int> calls{0};
};

} // namespace

TEST(Request, KeyIsStableAndSensitiveToEveryField)
{
    ModelRequest a = sample_request();
    ModelRequest b = sample_request();
    EXPECT_EQ(request_key(a), request_key(b));
    EXPECT_EQ(request_key(a).size(), 64u);
    b.temperature = 0.0;
    EXPECT_NE(request_key(a), request_key(b));
    b = a;
    b.stop_sequences.clear();
    EXPECT_NE(request_key(a), request_key(b));
    b = a;
    b.max_tokens = 501;
    EXPECT_NE(request_key(a), request_key(b));
}

TEST(Request, ValidateRejectsBadValues)
{
    ModelRequest r = sample_request();
    EXPECT_NO_THROW(r.validate());
    r.prompt.clear();
    EXPECT_THROW(r.validate(), InvalidArgument);
    r = sample_request();
    r.max_tokens = 0;
    EXPECT_THROW(r.validate(), InvalidArgument);
    r = sample_request();
    r.temperature = -0.1;
    EXPECT_THROW(r.validate(), InvalidArgument);
}

TEST(Request, JsonRoundTrip)
{
    ModelRequest r = sample_request();
    ModelRequest back = request_from_json(to_json(r));
    EXPECT_EQ(request_key(back), request_key(r));
    ModelResponse resp{"x", FinishReason::length, 12};
    ModelResponse rb = response_from_json(to_json(resp));
    EXPECT_EQ(rb.text, "x");
    EXPECT_EQ(rb.finish_reason, FinishReason::length);
}

TEST(Defaults, DialectLimits)
{
    EXPECT_EQ(default_max_tokens(Dialect::art), 500u);
    EXPECT_EQ(default_max_tokens(Dialect::dsp), 800u);
    EXPECT_EQ(default_max_steps(Dialect::art), 10u);
    EXPECT_EQ(default_max_steps(Dialect::dsp), 3u);
    EXPECT_DOUBLE_EQ(kDefaultTemperature, 0.7);
}

TEST(Http, MissingCredentialIsAConfigError)
{
    ::unsetenv("TOOLCAL_TEST_MISSING_KEY");
    HttpBackendOptions o;
    o.base_url = "http://127.0.0.1:1/v1";
    o.api_key_env = "TOOLCAL_TEST_MISSING_KEY";
    try {
        HttpBackend b(o);
        FAIL();
    } catch (const ConfigError& e) {
        EXPECT_NE(std::string(e.what()).find("TOOLCAL_TEST_MISSING_KEY"), std::string::npos) << e.what();
    }
}

TEST(Http, RejectsNonHttpUrl)
{
    ::setenv("TOOLCAL_TEST_KEY", "secret", 1);
    HttpBackendOptions o;
    o.base_url = "ftp://example.com";
    o.api_key_env = "TOOLCAL_TEST_KEY";
    EXPECT_THROW(HttpBackend b(o), ConfigError);
}

TEST(Http, RetriesRateLimitThenSucceeds)
{
    ::setenv("TOOLCAL_TEST_KEY", "secret-token", 1);
    FakeServer server(2, 429);
    HttpBackend backend(options_for(server));
    ModelResponse r = backend.invoke(sample_request());
    EXPECT_EQ(r.text, "hi there");
    EXPECT_EQ(r.finish_reason, FinishReason::length);
    EXPECT_EQ(server.requests(), 3);
    EXPECT_EQ(server.auth(), "Bearer secret-token");
    json body = json::parse(server.body());
    EXPECT_EQ(body["model"], "m");
    EXPECT_EQ(body["messages"][0]["content"], "Say hi");
    EXPECT_EQ(body["stop"][0], "\n#");
}

TEST(Http, ServerErrorsExhaustRetries)
{
    ::setenv("TOOLCAL_TEST_KEY", "k", 1);
    FakeServer server(100, 503);
    HttpBackend backend(options_for(server));
    try {
        backend.invoke(sample_request());
        FAIL();
    } catch (const HttpError& e) {
        EXPECT_EQ(e.status(), 503);
    }
    EXPECT_EQ(server.requests(), 4);
}

TEST(Http, ClientErrorIsNotRetried)
{
    ::setenv("TOOLCAL_TEST_KEY", "k", 1);
    FakeServer server(100, 400);
    HttpBackend backend(options_for(server));
    EXPECT_THROW(backend.invoke(sample_request()), HttpError);
    EXPECT_EQ(server.requests(), 1);
}

TEST(Http, TransportFailureBecomesBackendError)
{
    ::setenv("TOOLCAL_TEST_KEY", "k", 1);
    int port = 0;
    {
        httplib::Server probe;
        port = probe.bind_to_any_port("127.0.0.1");
    }
    HttpBackendOptions o;
    o.base_url = "http://127.0.0.1:" + std::to_string(port) + "/v1";
    o.api_key_env = "TOOLCAL_TEST_KEY";
    o.initial_backoff = std::chrono::milliseconds(1);
    o.max_retries = 1;
    o.timeout = std::chrono::seconds(1);
    HttpBackend backend(o);
    EXPECT_THROW(backend.invoke(sample_request()), BackendError);
}

TEST(Http, CompletionsBodyAndParse)
{
    json body = HttpBackend::build_body(sample_request(), ApiStyle::completions);
    EXPECT_EQ(body["prompt"], "Say hi");
    EXPECT_FALSE(body.contains("messages"));
    ModelResponse r = HttpBackend::parse_body(R"({"choices": [{"text": "ok", "finish_reason": "stop"}]})",
                                              ApiStyle::completions);
    EXPECT_EQ(r.text, "ok");
    EXPECT_THROW(HttpBackend::parse_body(R"({"choices": []})", ApiStyle::chat), BackendError);
    EXPECT_THROW(HttpBackend::parse_body("not json", ApiStyle::chat), BackendError);
}

TEST(Cache, RecordThenReplay)
{
    auto path = temp_file("cache_rr.jsonl");
    auto inner = std::make_shared<CountingBackend>();
    {
        auto store = std::make_shared<CacheStore>(path);
        RecordingBackend rec(inner, store);
        EXPECT_EQ(rec.invoke(sample_request()).text, "echo:Say hi");
        EXPECT_EQ(rec.invoke(sample_request()).text, "echo:Say hi");
        EXPECT_EQ(inner->calls, 1);
        EXPECT_EQ(store->size(), 1u);
    }
    auto store = std::make_shared<CacheStore>(path);
    ReplayBackend replay(store);
    EXPECT_EQ(replay.invoke(sample_request()).text, "echo:Say hi");
    ModelRequest other = sample_request();
    other.prompt = "unseen";
    try {
        replay.invoke(other);
        FAIL();
    } catch (const ReplayMiss& e) {
        EXPECT_EQ(e.key(), request_key(other));
    }
}

TEST(Cache, FirstEntryWinsAndMalformedLineIsReported)
{
    auto path = temp_file("cache_dup.jsonl");
    ModelRequest r = sample_request();
    {
        std::ofstream out(path);
        out << json{{"key_hash", request_key(r)}, {"request", to_json(r)},
                    {"response", to_json(ModelResponse{"first", FinishReason::stop, 0})}, {"recorded_at", "t"}}
                   .dump()
            << "\n"
            << json{{"key_hash", request_key(r)}, {"request", to_json(r)},
                    {"response", to_json(ModelResponse{"second", FinishReason::stop, 0})}, {"recorded_at", "t"}}
                   .dump()
            << "\n";
    }
    CacheStore store(path);
    EXPECT_EQ(store.find(request_key(r))->text, "first");
    EXPECT_FALSE(store.append(r, ModelResponse{"third", FinishReason::stop, 0}));

    auto bad = temp_file("cache_bad.jsonl");
    {
        std::ofstream out(bad);
        out << "{}\n";
    }
    try {
        CacheStore broken(bad);
        FAIL();
    } catch (const SchemaError& e) {
        EXPECT_NE(std::string(e.what()).find("line 1"), std::string::npos) << e.what();
    }
}

TEST(Cache, ConcurrentAppendsAreSerialized)
{
    auto path = temp_file("cache_mt.jsonl");
    auto store = std::make_shared<CacheStore>(path);
    auto inner = std::make_shared<CountingBackend>();
    RecordingBackend rec(inner, store);
    std::vector<std::thread> threads;
    for (int t = 0; t < 4; ++t) {
        threads.emplace_back([&, t] {
            for (int i = 0; i < 50; ++i) {
                ModelRequest r = sample_request();
                r.prompt = "p" + std::to_string(t) + "-" + std::to_string(i);
                rec.invoke(r);
            }
        });
    }
    for (auto& th : threads) th.join();
    EXPECT_EQ(CacheStore(path).size(), 200u);
}

TEST(ModelHandle, LogsCallsAndErrors)
{
    auto inner = std::make_shared<CountingBackend>();
    ModelHandle h(inner, "agent", "m");
    h.call("art_v", "hello");
    ASSERT_EQ(h.calls().size(), 1u);
    EXPECT_EQ(h.calls()[0].response, "echo:hello");
    EXPECT_EQ(h.calls()[0].template_name, "art_v");

    auto store = std::make_shared<CacheStore>(temp_file("cache_empty.jsonl"));
    ModelHandle miss(std::make_shared<ReplayBackend>(store), "agent", "m");
    EXPECT_THROW(miss.call("art_v", "x"), ReplayMiss);
    ASSERT_EQ(miss.calls().size(), 1u);
    EXPECT_FALSE(miss.calls()[0].error.empty());
    auto taken = miss.take_calls();
    EXPECT_EQ(taken.size(), 1u);
    EXPECT_TRUE(miss.calls().empty());
}
