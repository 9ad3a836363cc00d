#include "toolcal/dataset.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <unordered_set>

#include "toolcal/error.hpp"
#include "toolcal/hashing.hpp"

namespace toolcal {

using nlohmann::json;

namespace {

std::string read_file(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error("cannot open dataset file " + path.string());
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

bool is_blank(std::string_view line)
{
    return std::all_of(line.begin(), line.end(),
                       [](unsigned char c) { return std::isspace(c) != 0; });
}

// (row number, parsed row) for every non-blank line / array element.
std::vector<std::pair<std::size_t, json>> read_rows(const std::filesystem::path& path,
                                                    DatasetFormat format)
{
    std::string text = read_file(path);
    std::vector<std::pair<std::size_t, json>> rows;
    if (format == DatasetFormat::jsonl) {
        std::istringstream lines(text);
        std::string line;
        std::size_t row = 0;
        while (std::getline(lines, line)) {
            ++row;
            if (is_blank(line)) {
                continue;
            }
            json parsed = json::parse(line, nullptr, false);
            if (parsed.is_discarded() || !parsed.is_object()) {
                throw DatasetError(row, "<row>", "not a JSON object");
            }
            rows.emplace_back(row, std::move(parsed));
        }
        return rows;
    }
    if (is_blank(text)) {
        return rows;
    }
    json parsed = json::parse(text, nullptr, false);
    if (parsed.is_discarded() || !parsed.is_array()) {
        throw DatasetError(0, "<file>", "expected a JSON array");
    }
    std::size_t row = 0;
    for (auto& item : parsed) {
        ++row;
        if (!item.is_object()) {
            throw DatasetError(row, "<row>", "not a JSON object");
        }
        rows.emplace_back(row, std::move(item));
    }
    return rows;
}

std::string scalar_to_string(const json& value)
{
    if (value.is_string()) {
        return value.get<std::string>();
    }
    if (value.is_number_integer()) {
        return std::to_string(value.get<long long>());
    }
    if (value.is_number()) {
        std::ostringstream ss;
        ss << value.get<double>();
        return ss.str();
    }
    if (value.is_boolean()) {
        return value.get<bool>() ? "True" : "False";
    }
    return {};
}

std::string require_string(const json& row, std::size_t n, const char* field)
{
    auto it = row.find(field);
    if (it == row.end()) {
        throw DatasetError(n, field, "missing");
    }
    std::string value = scalar_to_string(*it);
    if (value.empty()) {
        throw DatasetError(n, field, "must be a non-empty string");
    }
    return value;
}

std::vector<std::string> string_list(const json& value, std::size_t n, const char* field)
{
    std::vector<std::string> out;
    if (value.is_array()) {
        for (const auto& item : value) {
            std::string s = scalar_to_string(item);
            if (!s.empty()) {
                out.push_back(std::move(s));
            }
        }
    } else if (!value.is_null()) {
        std::string s = scalar_to_string(value);
        if (!s.empty()) {
            out.push_back(std::move(s));
        }
    }
    if (out.empty()) {
        throw DatasetError(n, field, "needs at least one non-empty answer");
    }
    return out;
}

std::optional<double> optional_popularity(const json& row, std::size_t n, const char* field)
{
    auto it = row.find(field);
    if (it == row.end() || it->is_null()) {
        return std::nullopt;
    }
    if (!it->is_number()) {
        throw DatasetError(n, field, "must be a number");
    }
    double value = it->get<double>();
    if (!(value >= 0.0) || !std::isfinite(value)) {
        throw DatasetError(n, field, "must be a finite value >= 0");
    }
    return value;
}

std::optional<double> log_pageviews(const json& row, std::size_t n, const char* field)
{
    auto it = row.find(field);
    if (it == row.end() || it->is_null()) {
        return std::nullopt;
    }
    if (!it->is_number() || it->get<double>() < 0.0) {
        throw DatasetError(n, field, "pageviews must be a number >= 0");
    }
    return std::log10(std::max(1.0, it->get<double>()));
}

} // namespace

std::string_view to_string(DatasetSource source) noexcept
{
    switch (source) {
    case DatasetSource::mintaka:
        return "mintaka";
    case DatasetSource::popqa:
        return "popqa";
    case DatasetSource::entity_questions:
        return "entity_questions";
    case DatasetSource::synthetic:
        break;
    }
    return "synthetic";
}

DatasetSource parse_dataset_source(std::string_view name)
{
    for (auto s : {DatasetSource::mintaka, DatasetSource::popqa, DatasetSource::entity_questions,
                   DatasetSource::synthetic}) {
        if (to_string(s) == name) {
            return s;
        }
    }
    throw InvalidArgument("unknown dataset source '" + std::string(name) + "'");
}

json to_json(const QaRecord& record)
{
    json j{{"id", record.id},
           {"question", record.question},
           {"answers", record.answers},
           {"source", to_string(record.source)}};
    j["log_popularity"] = record.log_popularity ? json(*record.log_popularity) : json(nullptr);
    return j;
}

DatasetFormat parse_dataset_format(std::string_view name)
{
    if (name == "jsonl") {
        return DatasetFormat::jsonl;
    }
    if (name == "json_array" || name == "json") {
        return DatasetFormat::json_array;
    }
    throw InvalidArgument("unknown dataset format '" + std::string(name) + "'");
}

std::vector<QaRecord> load_dataset(const std::filesystem::path& path, DatasetFormat format,
                                   DatasetSource default_source)
{
    std::vector<QaRecord> records;
    for (const auto& [n, row] : read_rows(path, format)) {
        QaRecord r;
        r.id = require_string(row, n, "id");
        r.question = require_string(row, n, "question");
        auto answers = row.find("answers");
        if (answers == row.end()) {
            throw DatasetError(n, "answers", "missing");
        }
        r.answers = string_list(*answers, n, "answers");
        r.log_popularity = optional_popularity(row, n, "log_popularity");
        r.source = default_source;
        if (auto src = row.find("source"); src != row.end() && src->is_string()) {
            try {
                r.source = parse_dataset_source(src->get<std::string>());
            } catch (const InvalidArgument& e) {
                throw DatasetError(n, "source", e.what());
            }
        }
        records.push_back(std::move(r));
    }
    return records;
}

std::vector<QaRecord> load_mintaka(const std::filesystem::path& path)
{
    std::vector<QaRecord> records;
    for (const auto& [n, row] : read_rows(path, DatasetFormat::json_array)) {
        QaRecord r;
        r.id = require_string(row, n, "id");
        r.question = require_string(row, n, "question");
        r.source = DatasetSource::mintaka;
        auto answer = row.find("answer");
        if (answer == row.end() || !answer->is_object()) {
            throw DatasetError(n, "answer", "missing");
        }
        std::vector<std::string> labels;
        auto items = answer->find("answer");
        if (items != answer->end() && items->is_array()) {
            for (const auto& item : *items) {
                if (item.is_object()) {
                    auto label = item.find("label");
                    if (label != item.end() && label->is_object() && label->contains("en") &&
                        (*label)["en"].is_string()) {
                        labels.push_back((*label)["en"].get<std::string>());
                    } else if (item.contains("name") && item["name"].is_string()) {
                        labels.push_back(item["name"].get<std::string>());
                    }
                } else if (auto s = scalar_to_string(item); !s.empty()) {
                    labels.push_back(std::move(s));
                }
            }
        }
        if (labels.empty()) {
            throw DatasetError(n, "answer.answer", "no usable answer label");
        }
        r.answers = std::move(labels);
        r.log_popularity = optional_popularity(row, n, "log_popularity");
        records.push_back(std::move(r));
    }
    return records;
}

std::vector<QaRecord> load_popqa(const std::filesystem::path& path)
{
    std::vector<QaRecord> records;
    for (const auto& [n, row] : read_rows(path, DatasetFormat::jsonl)) {
        QaRecord r;
        r.id = row.contains("id") ? scalar_to_string(row["id"]) : std::string{};
        if (r.id.empty()) {
            r.id = "popqa-" + std::to_string(n);
        }
        r.question = require_string(row, n, "question");
        r.source = DatasetSource::popqa;
        auto answers = row.find("possible_answers");
        if (answers == row.end()) {
            throw DatasetError(n, "possible_answers", "missing");
        }
        if (answers->is_string()) {
            json decoded = json::parse(answers->get<std::string>(), nullptr, false);
            if (decoded.is_discarded()) {
                throw DatasetError(n, "possible_answers", "not a JSON-encoded list");
            }
            r.answers = string_list(decoded, n, "possible_answers");
        } else {
            r.answers = string_list(*answers, n, "possible_answers");
        }
        r.log_popularity = log_pageviews(row, n, "s_pop");
        records.push_back(std::move(r));
    }
    return records;
}

std::vector<QaRecord> load_triplets(const std::filesystem::path& path,
                                    const std::map<std::string, std::string>& templates,
                                    DatasetSource source)
{
    std::vector<QaRecord> records;
    for (const auto& [n, row] : read_rows(path, DatasetFormat::jsonl)) {
        QaRecord r;
        r.source = source;
        std::string subject = require_string(row, n, "subject");
        std::string relation = require_string(row, n, "relation");
        auto tmpl = templates.find(relation);
        if (tmpl == templates.end()) {
            throw DatasetError(n, "relation", "no question template for '" + relation + "'");
        }
        std::string question = tmpl->second;
        auto slot = question.find("{subject}");
        if (slot == std::string::npos) {
            throw DatasetError(n, "relation", "template for '" + relation + "' lacks {subject}");
        }
        question.replace(slot, 9, subject);
        r.question = std::move(question);

        if (auto objects = row.find("objects"); objects != row.end()) {
            r.answers = string_list(*objects, n, "objects");
        } else if (auto object = row.find("object"); object != row.end()) {
            r.answers = string_list(*object, n, "object");
        } else {
            throw DatasetError(n, "object", "missing");
        }
        r.id = row.contains("id") ? scalar_to_string(row["id"]) : std::string{};
        if (r.id.empty()) {
            r.id = relation + "-" + std::to_string(n);
        }
        r.log_popularity = optional_popularity(row, n, "log_popularity");
        if (!r.log_popularity) {
            r.log_popularity = log_pageviews(row, n, "pageviews");
        }
        records.push_back(std::move(r));
    }
    return records;
}

std::string_view to_string(Popularity p) noexcept
{
    switch (p) {
    case Popularity::low:
        return "low";
    case Popularity::medium:
        return "medium";
    case Popularity::high:
        break;
    }
    return "high";
}

Popularity classify_popularity(double log_popularity)
{
    if (!(log_popularity >= 0.0)) {
        throw InvalidArgument("log popularity must be >= 0, got " + std::to_string(log_popularity));
    }
    if (log_popularity < 2.0) {
        return Popularity::low;
    }
    if (log_popularity > 4.0) {
        return Popularity::high;
    }
    return Popularity::medium;
}

namespace {

std::vector<const QaRecord*> eligible(const std::vector<QaRecord>& records, const SplitSpec& spec,
                                      const std::unordered_set<std::string>& exclude)
{
    std::vector<const QaRecord*> pool;
    std::unordered_set<std::string> seen;
    for (const auto& r : records) {
        if (exclude.contains(r.id) || !seen.insert(r.id).second) {
            continue;
        }
        if (spec.popularity_ceiling) {
            if (!r.log_popularity || !(*r.log_popularity < *spec.popularity_ceiling)) {
                continue;
            }
        }
        pool.push_back(&r);
    }
    return pool;
}

void shuffle(std::vector<const QaRecord*>& pool, std::uint64_t seed)
{
    SeededRng rng(seed);
    for (std::size_t i = pool.size(); i > 1; --i) {
        std::swap(pool[i - 1], pool[rng.below(i)]);
    }
}

std::vector<QaRecord> take(const std::vector<const QaRecord*>& pool, std::size_t from, std::size_t count)
{
    std::vector<QaRecord> out;
    out.reserve(count);
    for (std::size_t i = from; i < from + count; ++i) {
        out.push_back(*pool[i]);
    }
    return out;
}

[[noreturn]] void insufficient(std::size_t available, std::size_t requested, const char* what)
{
    throw InvalidArgument("insufficient records for " + std::string(what) + ": available " +
                          std::to_string(available) + ", requested " + std::to_string(requested));
}

} // namespace

Split split_dev_test(const std::vector<QaRecord>& records, const SplitSpec& spec)
{
    auto pool = eligible(records, spec, {});
    std::size_t requested = spec.dev_size + spec.test_size;
    if (pool.size() < requested) {
        insufficient(pool.size(), requested, "dev+test split");
    }
    shuffle(pool, spec.rng_seed);
    return Split{take(pool, 0, spec.dev_size), take(pool, spec.dev_size, spec.test_size)};
}

Split split_dev_test(const std::vector<QaRecord>& dev_pool, const std::vector<QaRecord>& test_pool,
                     const SplitSpec& spec)
{
    auto dev = eligible(dev_pool, spec, {});
    if (dev.size() < spec.dev_size) {
        insufficient(dev.size(), spec.dev_size, "dev split");
    }
    shuffle(dev, spec.rng_seed);
    dev.resize(spec.dev_size);

    std::unordered_set<std::string> dev_ids;
    for (const auto* r : dev) {
        dev_ids.insert(r->id);
    }
    auto test = eligible(test_pool, spec, dev_ids);
    if (test.size() < spec.test_size) {
        insufficient(test.size(), spec.test_size, "test split");
    }
    shuffle(test, splitmix64(spec.rng_seed));
    return Split{take(dev, 0, dev.size()), take(test, 0, spec.test_size)};
}

json SplitManifest::to_json() const
{
    return json{{"dev_ids", dev_ids}, {"test_ids", test_ids}, {"seed", seed}};
}

std::string SplitManifest::fingerprint() const
{
    return sha256_hex(to_json().dump());
}

SplitManifest make_manifest(const Split& split, std::uint64_t seed)
{
    SplitManifest m;
    m.seed = seed;
    for (const auto& r : split.dev) {
        m.dev_ids.push_back(r.id);
    }
    for (const auto& r : split.test) {
        m.test_ids.push_back(r.id);
    }
    return m;
}

std::vector<QaRecord> make_synthetic_dataset(std::size_t count, std::uint64_t seed)
{
    SeededRng rng(seed);
    std::vector<QaRecord> out;
    out.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        std::ostringstream id;
        id << "syn-" << std::setw(5) << std::setfill('0') << i;
        std::ostringstream answer;
        answer << "Zentaro-" << std::hex << (rng.next() & 0xffffffULL) << "-" << std::dec << i;
        QaRecord r;
        r.id = id.str();
        r.question = "Which archive holds the founding charter of the " + r.id + " society?";
        r.answers = {answer.str()};
        r.log_popularity = std::floor(rng.uniform() * 2000.0) / 1000.0;
        r.source = DatasetSource::synthetic;
        out.push_back(std::move(r));
    }
    return out;
}

} // namespace toolcal
