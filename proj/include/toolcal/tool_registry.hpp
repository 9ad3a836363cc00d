#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "json.hpp"
#include "toolcal/dataset.hpp"

namespace toolcal {

// How a tool tag is executed during a tool-use run. Tools never reach the
// network: retrieval reads an offline corpus keyed by task id.
enum class ToolKind { stub, offline_corpus, none };

std::string_view to_string(ToolKind kind) noexcept;
ToolKind parse_tool_kind(std::string_view name);

// task id -> passages
using OfflineCorpus = std::map<std::string, std::vector<std::string>>;

// JSON object mapping task ids to a passage string or a list of passages.
OfflineCorpus load_offline_corpus(const std::filesystem::path& path);

struct Observation {
    std::string text;
    bool flagged = false;  // stubbed, unknown or empty tool
};

class ToolRegistry {
public:
    ToolRegistry() = default;
    ToolRegistry(std::map<std::string, ToolKind> kinds, OfflineCorpus corpus = {});

    // search reads the corpus; the other catalog tools are stubs and
    // Internal Knowledge produces no observation.
    static ToolRegistry defaults(OfflineCorpus corpus = {});
    // {"tool": "stub" | "offline_corpus" | "none", ...}
    static ToolRegistry from_json(const nlohmann::json& j, OfflineCorpus corpus = {});

    Observation execute(const std::string& tool, const QaRecord& task, const std::string& query) const;

    const std::map<std::string, ToolKind>& kinds() const noexcept { return kinds_; }

private:
    std::map<std::string, ToolKind> kinds_;
    OfflineCorpus corpus_;
};

} // namespace toolcal
