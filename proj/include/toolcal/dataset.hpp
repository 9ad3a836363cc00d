#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace toolcal {

enum class DatasetSource { mintaka, popqa, entity_questions, synthetic };

std::string_view to_string(DatasetSource source) noexcept;
DatasetSource parse_dataset_source(std::string_view name);

struct QaRecord {
    std::string id;
    std::string question;
    std::vector<std::string> answers;  // non-empty
    std::optional<double> log_popularity;  // log10 weekly pageviews, >= 0
    DatasetSource source = DatasetSource::synthetic;
};

nlohmann::json to_json(const QaRecord& record);

enum class DatasetFormat { jsonl, json_array };

DatasetFormat parse_dataset_format(std::string_view name);

// Canonical schema: {id, question, answers, log_popularity?, source?}.
// Malformed rows raise DatasetError with the 1-based row number and field.
std::vector<QaRecord> load_dataset(const std::filesystem::path& path, DatasetFormat format,
                                   DatasetSource default_source = DatasetSource::synthetic);

// Mintaka release layout (JSON array, answers under answer.answer[*]).
std::vector<QaRecord> load_mintaka(const std::filesystem::path& path);

// PopQA rows as JSONL: possible_answers (array or JSON-encoded string) and
// raw pageviews in s_pop.
std::vector<QaRecord> load_popqa(const std::filesystem::path& path);

// Triplet rows {id?, subject, relation, object|objects, pageviews?|log_popularity?}
// rendered through a per-relation question template containing "{subject}".
std::vector<QaRecord> load_triplets(const std::filesystem::path& path,
                                    const std::map<std::string, std::string>& templates,
                                    DatasetSource source = DatasetSource::entity_questions);

enum class Popularity { low, medium, high };

std::string_view to_string(Popularity p) noexcept;

// < 2 low, > 4 high, otherwise medium. Negative input is rejected.
Popularity classify_popularity(double log_popularity);

struct SplitSpec {
    std::size_t dev_size = 200;
    std::size_t test_size = 500;
    // Records must satisfy log_popularity < ceiling; unset disables filtering.
    std::optional<double> popularity_ceiling = 2.0;
    std::uint64_t rng_seed = 7;
};

struct Split {
    std::vector<QaRecord> dev;
    std::vector<QaRecord> test;
};

// Dev and test drawn from one pool.
Split split_dev_test(const std::vector<QaRecord>& records, const SplitSpec& spec);
// Dev and test drawn from separate pools; test never reuses a dev id.
Split split_dev_test(const std::vector<QaRecord>& dev_pool, const std::vector<QaRecord>& test_pool,
                     const SplitSpec& spec);

struct SplitManifest {
    std::vector<std::string> dev_ids;
    std::vector<std::string> test_ids;
    std::uint64_t seed = 0;

    nlohmann::json to_json() const;
    std::string fingerprint() const;
};

SplitManifest make_manifest(const Split& split, std::uint64_t seed);

// Low-popularity synthetic QA records with unique, unambiguous answers.
std::vector<QaRecord> make_synthetic_dataset(std::size_t count, std::uint64_t seed);

} // namespace toolcal
