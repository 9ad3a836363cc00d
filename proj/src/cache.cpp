#include "toolcal/cache.hpp"

#include <chrono>
#include <ctime>
#include <iomanip>
#include <sstream>

#include "toolcal/error.hpp"

namespace toolcal {

using nlohmann::json;

std::string utc_timestamp()
{
    auto now = std::chrono::system_clock::now();
    std::time_t t = std::chrono::system_clock::to_time_t(now);
    auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(now.time_since_epoch()).count() % 1000;
    std::tm tm{};
    gmtime_r(&t, &tm);
    std::ostringstream ss;
    ss << std::put_time(&tm, "%Y-%m-%dT%H:%M:%S") << '.' << std::setw(3) << std::setfill('0') << ms << 'Z';
    return ss.str();
}

CacheStore::CacheStore(std::filesystem::path path) : path_(std::move(path))
{
    if (std::filesystem::exists(path_)) {
        std::ifstream in(path_);
        std::string line;
        std::size_t n = 0;
        while (std::getline(in, line)) {
            ++n;
            if (line.find_first_not_of(" \t\r") == std::string::npos) {
                continue;
            }
            json entry = json::parse(line, nullptr, false);
            if (entry.is_discarded() || !entry.contains("key_hash") || !entry.contains("response")) {
                throw SchemaError("cache " + path_.string() + " line " + std::to_string(n) +
                                  ": malformed entry");
            }
            try {
                entries_.try_emplace(entry["key_hash"].get<std::string>(),
                                     response_from_json(entry["response"]));
            } catch (const std::exception& e) {
                throw SchemaError("cache " + path_.string() + " line " + std::to_string(n) + ": " + e.what());
            }
        }
    } else if (path_.has_parent_path()) {
        std::filesystem::create_directories(path_.parent_path());
    }
}

std::optional<ModelResponse> CacheStore::find(const std::string& key) const
{
    std::lock_guard lock(mutex_);
    auto it = entries_.find(key);
    if (it == entries_.end()) {
        return std::nullopt;
    }
    return it->second;
}

bool CacheStore::append(const ModelRequest& request, const ModelResponse& response)
{
    std::string key = request_key(request);
    std::lock_guard lock(mutex_);
    if (!entries_.try_emplace(key, response).second) {
        return false;
    }
    if (!writer_.is_open()) {
        writer_.open(path_, std::ios::app);
        if (!writer_) {
            throw Error("cannot open cache file " + path_.string() + " for writing");
        }
    }
    json entry{{"key_hash", key},
               {"request", to_json(request)},
               {"response", to_json(response)},
               {"recorded_at", utc_timestamp()}};
    writer_ << entry.dump() << '\n';
    writer_.flush();
    return true;
}

std::size_t CacheStore::size() const
{
    std::lock_guard lock(mutex_);
    return entries_.size();
}

RecordingBackend::RecordingBackend(BackendPtr inner, std::shared_ptr<CacheStore> store)
    : inner_(std::move(inner)), store_(std::move(store))
{
}

ModelResponse RecordingBackend::invoke(const ModelRequest& request)
{
    request.validate();
    if (auto cached = store_->find(request_key(request))) {
        return *cached;
    }
    ModelResponse response = inner_->invoke(request);
    if (!store_->append(request, response)) {
        // Another caller recorded the same request first; keep the stored one.
        return *store_->find(request_key(request));
    }
    return response;
}

std::string RecordingBackend::describe() const
{
    return "record(" + inner_->describe() + " -> " + store_->path().string() + ")";
}

ReplayBackend::ReplayBackend(std::shared_ptr<CacheStore> store) : store_(std::move(store)) {}

ModelResponse ReplayBackend::invoke(const ModelRequest& request)
{
    request.validate();
    std::string key = request_key(request);
    if (auto cached = store_->find(key)) {
        return *cached;
    }
    throw ReplayMiss(key);
}

std::string ReplayBackend::describe() const
{
    return "replay(" + store_->path().string() + ")";
}

} // namespace toolcal
