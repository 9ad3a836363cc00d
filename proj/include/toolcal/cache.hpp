#pragma once

#include <filesystem>
#include <fstream>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_map>

#include "toolcal/backend.hpp"

namespace toolcal {

// Append-only JSONL store of {key_hash, request, response, recorded_at}.
// The first entry recorded for a key wins; later duplicates are ignored.
class CacheStore {
public:
    // Loads existing entries; a missing file is an empty store. Throws
    // SchemaError naming the line on a malformed entry.
    explicit CacheStore(std::filesystem::path path);

    std::optional<ModelResponse> find(const std::string& key) const;
    // Serialized across threads; returns false when the key already existed.
    bool append(const ModelRequest& request, const ModelResponse& response);

    std::size_t size() const;
    const std::filesystem::path& path() const noexcept { return path_; }

private:
    std::filesystem::path path_;
    mutable std::mutex mutex_;
    std::unordered_map<std::string, ModelResponse> entries_;
    std::ofstream writer_;
};

// Invokes the wrapped backend and persists new responses; requests already
// in the store are answered from it.
class RecordingBackend final : public Backend {
public:
    RecordingBackend(BackendPtr inner, std::shared_ptr<CacheStore> store);

    ModelResponse invoke(const ModelRequest& request) override;
    std::string describe() const override;

private:
    BackendPtr inner_;
    std::shared_ptr<CacheStore> store_;
};

// Answers only from the store; unknown requests raise ReplayMiss.
class ReplayBackend final : public Backend {
public:
    explicit ReplayBackend(std::shared_ptr<CacheStore> store);

    ModelResponse invoke(const ModelRequest& request) override;
    std::string describe() const override;

private:
    std::shared_ptr<CacheStore> store_;
};

std::string utc_timestamp();

} // namespace toolcal
