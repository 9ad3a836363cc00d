#include "toolcal/config.hpp"

#include <fstream>
#include <set>

#include "toolcal/binning.hpp"
#include "toolcal/error.hpp"
#include "toolcal/hashing.hpp"

namespace toolcal {

using nlohmann::json;

std::string_view to_string(Variant v) noexcept
{
    switch (v) {
    case Variant::baseline: return "baseline";
    case Variant::verbalized: return "verbalized";
    case Variant::smartcal: return "smartcal";
    }
    return "smartcal";
}

Variant parse_variant(std::string_view name)
{
    if (name == "baseline") return Variant::baseline;
    if (name == "verbalized") return Variant::verbalized;
    if (name == "smartcal") return Variant::smartcal;
    throw ConfigError("unknown variant '" + std::string(name) + "' (expected baseline, verbalized or smartcal)");
}

std::string_view to_string(BackendMode m) noexcept
{
    switch (m) {
    case BackendMode::live: return "live";
    case BackendMode::record: return "record";
    case BackendMode::replay: return "replay";
    }
    return "live";
}

BackendMode parse_backend_mode(std::string_view name)
{
    if (name == "live") return BackendMode::live;
    if (name == "record") return BackendMode::record;
    if (name == "replay") return BackendMode::replay;
    throw ConfigError("unknown backend_mode '" + std::string(name) + "' (expected live, record or replay)");
}

std::string_view to_string(BackendKind k) noexcept
{
    return k == BackendKind::http ? "http" : "simulator";
}

BackendKind parse_backend_kind(std::string_view name)
{
    if (name == "http") return BackendKind::http;
    if (name == "simulator") return BackendKind::simulator;
    throw ConfigError("unknown backend kind '" + std::string(name) + "' (expected http or simulator)");
}

namespace {

const std::map<std::string, std::string>& default_models()
{
    static const std::map<std::string, std::string> models{
        {kAgentRole, "gpt-3.5-turbo"}, {kTeacherRole, "gpt-4-turbo"}, {kCalibratorRole, "gpt-3.5-turbo-instruct"}};
    return models;
}

void reject_unknown_keys(const json& j, const std::set<std::string>& known, const std::string& where)
{
    if (!j.is_object()) {
        throw ConfigError(where + " must be a JSON object");
    }
    for (const auto& [key, value] : j.items()) {
        if (!known.contains(key)) {
            throw ConfigError("unknown key '" + key + "' in " + where);
        }
    }
}

template <typename T>
T get_or(const json& j, const char* key, T fallback, const std::string& where)
{
    if (!j.contains(key) || j[key].is_null()) {
        return fallback;
    }
    try {
        return j[key].get<T>();
    } catch (const json::exception&) {
        throw ConfigError(where + "." + key + " has the wrong type");
    }
}

BackendSpec backend_from_json(const json& j, const std::string& role)
{
    const std::string where = "backends." + role;
    reject_unknown_keys(j, {"kind", "model", "base_url", "api_key_env", "api_style", "max_retries", "timeout_s",
                            "max_in_flight"},
                        where);
    BackendSpec b;
    b.kind = parse_backend_kind(get_or<std::string>(j, "kind", "simulator", where));
    b.model = get_or<std::string>(j, "model", default_models().at(role), where);
    b.base_url = get_or<std::string>(j, "base_url", "", where);
    b.api_key_env = get_or<std::string>(j, "api_key_env", b.api_key_env, where);
    std::string style = get_or<std::string>(j, "api_style", "chat", where);
    if (style == "chat") {
        b.api_style = ApiStyle::chat;
    } else if (style == "completions") {
        b.api_style = ApiStyle::completions;
    } else {
        throw ConfigError(where + ".api_style must be chat or completions");
    }
    b.max_retries = get_or<int>(j, "max_retries", b.max_retries, where);
    b.timeout_s = get_or<int>(j, "timeout_s", b.timeout_s, where);
    b.max_in_flight = get_or<std::size_t>(j, "max_in_flight", b.max_in_flight, where);
    return b;
}

json backend_to_json(const BackendSpec& b)
{
    return json{{"kind", to_string(b.kind)},
                {"model", b.model},
                {"base_url", b.base_url},
                {"api_key_env", b.api_key_env},
                {"api_style", b.api_style == ApiStyle::chat ? "chat" : "completions"},
                {"max_retries", b.max_retries},
                {"timeout_s", b.timeout_s},
                {"max_in_flight", b.max_in_flight}};
}

std::string format_name(DatasetFormat f)
{
    return f == DatasetFormat::jsonl ? "jsonl" : "json_array";
}

} // namespace

std::filesystem::path ExperimentConfig::resolve(const std::string& path) const
{
    std::filesystem::path p(path);
    if (p.empty() || p.is_absolute() || base_dir.empty()) {
        return p;
    }
    return base_dir / p;
}

const BackendSpec& ExperimentConfig::backend(const std::string& role) const
{
    auto it = backends.find(role);
    if (it == backends.end()) {
        throw ConfigError("no backend configured for role '" + role + "'");
    }
    return it->second;
}

void ExperimentConfig::validate() const
{
    if (variant != Variant::smartcal && (enable_se || enable_cpc)) {
        throw ConfigError("variant " + std::string(to_string(variant)) +
                          " cannot enable self-evaluation or prior collection");
    }
    try {
        BinLayout layout(stepsize);
    } catch (const InvalidArgument& e) {
        throw ConfigError(std::string("stepsize: ") + e.what());
    }
    if (!(temperature >= 0.0 && temperature <= 2.0)) {
        throw ConfigError("temperature must lie in [0, 2]");
    }
    if (limits.max_tokens == 0) {
        throw ConfigError("limits.max_tokens must be positive");
    }
    if (concurrency == 0) {
        throw ConfigError("concurrency must be at least 1");
    }
    for (const char* role : {kAgentRole, kTeacherRole, kCalibratorRole}) {
        const BackendSpec& b = backend(role);
        if (b.model.empty()) {
            throw ConfigError(std::string("backends.") + role + ".model is empty");
        }
        if (b.kind == BackendKind::http && b.base_url.empty() && backend_mode != BackendMode::replay) {
            throw ConfigError(std::string("backends.") + role + ".base_url is required for http backends");
        }
    }
    if (backend_mode != BackendMode::live && cache_path.empty()) {
        throw ConfigError("backend_mode " + std::string(to_string(backend_mode)) + " needs cache_path");
    }
    if (split.test_size == 0) {
        throw ConfigError("split.test_size must be positive");
    }
    if (uses_cpc() && split.dev_size == 0) {
        throw ConfigError("prior collection needs split.dev_size > 0");
    }
    simulator.validate();

    static const std::set<std::string> loaders{"canonical", "mintaka", "popqa", "triplets", "synthetic"};
    if (!loaders.contains(dataset.loader)) {
        throw ConfigError("unknown dataset.loader '" + dataset.loader + "'");
    }
    auto must_exist = [&](const std::string& key, const std::string& value) {
        if (!value.empty() && !std::filesystem::exists(resolve(value))) {
            throw ConfigError(key + " does not exist: " + resolve(value).string());
        }
    };
    if (dataset.loader != "synthetic") {
        if (dataset.path.empty() && (dataset.dev_path.empty() || dataset.test_path.empty())) {
            throw ConfigError("dataset needs path, or both dev_path and test_path");
        }
        must_exist("dataset.path", dataset.path);
        must_exist("dataset.dev_path", dataset.dev_path);
        must_exist("dataset.test_path", dataset.test_path);
        if (dataset.loader == "triplets" && dataset.templates.empty()) {
            throw ConfigError("dataset.templates is required for the triplets loader");
        }
    }
    must_exist("demos_path", demos_path);
    must_exist("tool_catalog_path", tool_catalog_path);
    must_exist("corpus_path", corpus_path);
}

json ExperimentConfig::to_json() const
{
    json roles = json::object();
    for (const auto& [role, spec] : backends) {
        roles[role] = backend_to_json(spec);
    }
    json j{{"name", name},
           {"dialect", toolcal::to_string(dialect)},
           {"variant", toolcal::to_string(variant)},
           {"enable_se", enable_se},
           {"enable_cpc", enable_cpc},
           {"calibration_mode", toolcal::to_string(calibration_mode)},
           {"backend_mode", toolcal::to_string(backend_mode)},
           {"cache_path", cache_path},
           {"backends", std::move(roles)},
           {"simulator", toolcal::to_json(simulator)},
           {"dataset",
            {{"loader", dataset.loader},
             {"path", dataset.path},
             {"dev_path", dataset.dev_path},
             {"test_path", dataset.test_path},
             {"format", format_name(dataset.format)},
             {"templates", dataset.templates},
             {"synthetic_count", dataset.synthetic_count},
             {"synthetic_seed", dataset.synthetic_seed}}},
           {"split",
            {{"dev_size", split.dev_size},
             {"test_size", split.test_size},
             {"popularity_ceiling", split.popularity_ceiling ? json(*split.popularity_ceiling) : json()}}},
           {"limits", {{"max_steps", limits.max_steps}, {"max_tokens", limits.max_tokens}}},
           {"temperature", temperature},
           {"stepsize", stepsize},
           {"rng_seed", split.rng_seed},
           {"concurrency", concurrency},
           {"demos_path", demos_path},
           {"task_description", task_description},
           {"tool_catalog_path", tool_catalog_path},
           {"tool_registry", tool_registry ? *tool_registry : json()},
           {"corpus_path", corpus_path},
           {"reference_allowed_tools", reference_allowed_tools ? json(*reference_allowed_tools) : json()},
           {"ece_include_unparsed", ece_include_unparsed},
           {"output_dir", output_dir}};
    return j;
}

std::string ExperimentConfig::fingerprint() const
{
    json j = to_json();
    for (const char* key : {"output_dir", "concurrency", "backend_mode", "cache_path"}) {
        j.erase(key);
    }
    return sha256_hex(j.dump());
}

ExperimentConfig config_from_json(const json& j, std::filesystem::path base_dir)
{
    reject_unknown_keys(j,
                        {"name", "dialect", "variant", "enable_se", "enable_cpc", "calibration_mode", "backend_mode",
                         "cache_path", "backends", "simulator", "dataset", "split", "limits", "temperature",
                         "stepsize", "rng_seed", "concurrency", "demos_path", "task_description",
                         "tool_catalog_path", "tool_registry", "corpus_path", "reference_allowed_tools",
                         "ece_include_unparsed", "output_dir"},
                        "config");
    const std::string top = "config";
    ExperimentConfig c;
    c.base_dir = std::move(base_dir);
    c.name = get_or<std::string>(j, "name", c.name, top);
    try {
        c.dialect = parse_dialect(get_or<std::string>(j, "dialect", "art", top));
    } catch (const Error& e) {
        throw ConfigError(e.what());
    }
    c.variant = parse_variant(get_or<std::string>(j, "variant", "smartcal", top));
    const bool smartcal = c.variant == Variant::smartcal;
    c.enable_se = get_or<bool>(j, "enable_se", smartcal, top);
    c.enable_cpc = get_or<bool>(j, "enable_cpc", smartcal, top);
    c.calibration_mode = parse_calibration_mode(get_or<std::string>(j, "calibration_mode", "llm_edit", top));
    c.backend_mode = parse_backend_mode(get_or<std::string>(j, "backend_mode", "live", top));
    c.cache_path = get_or<std::string>(j, "cache_path", "", top);

    json roles = j.value("backends", json::object());
    reject_unknown_keys(roles, {kAgentRole, kTeacherRole, kCalibratorRole}, "backends");
    for (const char* role : {kAgentRole, kTeacherRole, kCalibratorRole}) {
        c.backends[role] = backend_from_json(roles.value(role, json::object()), role);
    }
    try {
        c.simulator = policy_from_json(j.value("simulator", json::object()));
    } catch (const InvalidArgument& e) {
        throw ConfigError(std::string("simulator: ") + e.what());
    } catch (const json::exception& e) {
        throw ConfigError(std::string("simulator: ") + e.what());
    }

    json ds = j.value("dataset", json::object());
    reject_unknown_keys(ds, {"loader", "path", "dev_path", "test_path", "format", "templates", "synthetic_count",
                             "synthetic_seed"},
                        "dataset");
    c.dataset.loader = get_or<std::string>(ds, "loader", "synthetic", "dataset");
    c.dataset.path = get_or<std::string>(ds, "path", "", "dataset");
    c.dataset.dev_path = get_or<std::string>(ds, "dev_path", "", "dataset");
    c.dataset.test_path = get_or<std::string>(ds, "test_path", "", "dataset");
    try {
        c.dataset.format = parse_dataset_format(get_or<std::string>(ds, "format", "jsonl", "dataset"));
    } catch (const Error& e) {
        throw ConfigError(std::string("dataset.format: ") + e.what());
    }
    c.dataset.templates = get_or<std::map<std::string, std::string>>(ds, "templates", {}, "dataset");
    c.dataset.synthetic_count = get_or<std::size_t>(ds, "synthetic_count", c.dataset.synthetic_count, "dataset");
    c.dataset.synthetic_seed = get_or<std::uint64_t>(ds, "synthetic_seed", c.dataset.synthetic_seed, "dataset");

    json sp = j.value("split", json::object());
    reject_unknown_keys(sp, {"dev_size", "test_size", "popularity_ceiling"}, "split");
    c.split.dev_size = get_or<std::size_t>(sp, "dev_size", c.split.dev_size, "split");
    c.split.test_size = get_or<std::size_t>(sp, "test_size", c.split.test_size, "split");
    if (sp.contains("popularity_ceiling")) {
        c.split.popularity_ceiling = sp["popularity_ceiling"].is_null()
                                         ? std::nullopt
                                         : std::optional<double>(get_or<double>(sp, "popularity_ceiling", 2.0, "split"));
    }
    c.split.rng_seed = get_or<std::uint64_t>(j, "rng_seed", c.split.rng_seed, top);

    json lim = j.value("limits", json::object());
    reject_unknown_keys(lim, {"max_steps", "max_tokens"}, "limits");
    c.limits.max_steps = get_or<std::size_t>(lim, "max_steps", default_max_steps(c.dialect), "limits");
    c.limits.max_tokens = get_or<std::size_t>(lim, "max_tokens", default_max_tokens(c.dialect), "limits");

    c.temperature = get_or<double>(j, "temperature", c.temperature, top);
    c.stepsize = get_or<double>(j, "stepsize", c.stepsize, top);
    c.concurrency = get_or<std::size_t>(j, "concurrency", c.concurrency, top);
    c.demos_path = get_or<std::string>(j, "demos_path", "", top);
    c.task_description = get_or<std::string>(j, "task_description", c.task_description, top);
    c.tool_catalog_path = get_or<std::string>(j, "tool_catalog_path", "", top);
    if (j.contains("tool_registry") && !j["tool_registry"].is_null()) {
        c.tool_registry = j["tool_registry"];
    }
    c.corpus_path = get_or<std::string>(j, "corpus_path", "", top);
    if (j.contains("reference_allowed_tools") && !j["reference_allowed_tools"].is_null()) {
        c.reference_allowed_tools =
            get_or<std::vector<std::string>>(j, "reference_allowed_tools", {}, top);
    }
    c.ece_include_unparsed = get_or<bool>(j, "ece_include_unparsed", true, top);
    c.output_dir = get_or<std::string>(j, "output_dir", c.output_dir, top);
    return c;
}

ExperimentConfig load_config(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot open config " + path.string());
    }
    json j = json::parse(in, nullptr, false);
    if (j.is_discarded()) {
        throw ConfigError("config " + path.string() + " is not valid JSON");
    }
    return config_from_json(j, path.parent_path());
}

std::string default_demos(Dialect dialect)
{
    if (dialect == Dialect::dsp) {
        return {};
    }
    return R"(Input: Who directed the film that won Best Picture at the 1998 Academy Awards?
Q1: [search] Which film won Best Picture at the 1998 Academy Awards? [85]
#1: Titanic won Best Picture at the 70th Academy Awards in 1998.
Q2: [search] Who directed Titanic? [90]
#2: Titanic is a 1997 film directed by James Cameron.
Q3: [check answer type] Is James Cameron the name of a person? [95]
#3: Yes, the answer is a person.
Ans: James Cameron
----
Input: In which country is the river that flows through Vienna mostly located?
Q1: [search] Which river flows through Vienna? [80]
#1: The Danube flows through Vienna.
Q2: [search] Which country holds the largest share of the Danube basin? [60]
#2: Romania holds the largest share of the Danube basin.
Q3: [check answer type] Is Romania a country? [95]
#3: Yes.
Ans: Romania
----
Input: How many letters does the surname of the first person to walk on the moon have?
Q1: [search] Who was the first person to walk on the moon? [90]
#1: Neil Armstrong was the first person to walk on the moon.
Q2: [string operations] Count the letters in "Armstrong". [85]
#2: 9
Ans: 9)";
}

} // namespace toolcal
