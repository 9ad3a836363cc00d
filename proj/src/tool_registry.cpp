#include "toolcal/tool_registry.hpp"

#include <fstream>

#include "toolcal/error.hpp"
#include "toolcal/text.hpp"

namespace toolcal {

using nlohmann::json;

std::string_view to_string(ToolKind kind) noexcept
{
    switch (kind) {
    case ToolKind::stub: return "stub";
    case ToolKind::offline_corpus: return "offline_corpus";
    case ToolKind::none: return "none";
    }
    return "stub";
}

ToolKind parse_tool_kind(std::string_view name)
{
    if (name == "stub") return ToolKind::stub;
    if (name == "offline_corpus") return ToolKind::offline_corpus;
    if (name == "none") return ToolKind::none;
    throw ConfigError("unknown tool kind '" + std::string(name) + "'");
}

OfflineCorpus load_offline_corpus(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot open corpus " + path.string());
    }
    json doc = json::parse(in, nullptr, false);
    if (doc.is_discarded() || !doc.is_object()) {
        throw ConfigError("corpus " + path.string() + " is not a JSON object");
    }
    OfflineCorpus corpus;
    for (const auto& [id, value] : doc.items()) {
        if (value.is_string()) {
            corpus[id].push_back(value.get<std::string>());
        } else if (value.is_array()) {
            for (const auto& p : value) {
                if (!p.is_string()) {
                    throw ConfigError("corpus entry '" + id + "' holds a non-string passage");
                }
                corpus[id].push_back(p.get<std::string>());
            }
        } else {
            throw ConfigError("corpus entry '" + id + "' must be a string or an array of strings");
        }
    }
    return corpus;
}

ToolRegistry::ToolRegistry(std::map<std::string, ToolKind> kinds, OfflineCorpus corpus)
    : kinds_(std::move(kinds)), corpus_(std::move(corpus))
{
}

ToolRegistry ToolRegistry::defaults(OfflineCorpus corpus)
{
    return ToolRegistry({{"search", ToolKind::offline_corpus},
                         {"check answer type", ToolKind::stub},
                         {"string operations", ToolKind::stub},
                         {"code generate", ToolKind::stub},
                         {"Internal Knowledge", ToolKind::none}},
                        std::move(corpus));
}

ToolRegistry ToolRegistry::from_json(const json& j, OfflineCorpus corpus)
{
    if (!j.is_object()) {
        throw ConfigError("tool_registry must be an object of tool name to kind");
    }
    std::map<std::string, ToolKind> kinds;
    for (const auto& [tool, kind] : j.items()) {
        if (!kind.is_string()) {
            throw ConfigError("tool_registry entry '" + tool + "' must be a string");
        }
        kinds[tool] = parse_tool_kind(kind.get<std::string>());
    }
    return ToolRegistry(std::move(kinds), std::move(corpus));
}

Observation ToolRegistry::execute(const std::string& tool, const QaRecord& task, const std::string& query) const
{
    auto it = kinds_.begin();
    for (; it != kinds_.end(); ++it) {
        if (text::iequals(it->first, tool)) {
            break;
        }
    }
    if (it == kinds_.end()) {
        return {"Unknown tool [" + tool + "].", true};
    }
    switch (it->second) {
    case ToolKind::offline_corpus: {
        auto found = corpus_.find(task.id);
        if (found == corpus_.end() || found->second.empty()) {
            return {"No results found.", false};
        }
        return {text::join(found->second, " "), false};
    }
    case ToolKind::none:
        return {"(no external output)", false};
    case ToolKind::stub:
        break;
    }
    (void)query;
    return {"(" + it->first + " is not executed offline; no output)", true};
}

} // namespace toolcal
