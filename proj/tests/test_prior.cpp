#include <gtest/gtest.h>

#include <cstring>

#include "json.hpp"
#include "toolcal/error.hpp"
#include "toolcal/hashing.hpp"
#include "toolcal/prior.hpp"

using namespace toolcal;

namespace {

std::vector<ScoredResult> random_results(SeededRng& rng, std::size_t n)
{
    std::vector<ScoredResult> out;
    for (std::size_t i = 0; i < n; ++i) {
        TaskConfidence c = rng.below(10) == 0 ? TaskConfidence::unparsed() : TaskConfidence::of(rng.uniform());
        out.push_back({c, rng.uniform() < 0.4});
    }
    return out;
}

bool bits_equal(double a, double b)
{
    return std::memcmp(&a, &b, sizeof a) == 0;
}

} // namespace

TEST(Prior, EachValueLandsInExactlyOneBin)
{
    SeededRng rng(11);
    std::vector<ScoredResult> seed{{TaskConfidence::of(0.5), true}};
    PriorTable t = build_prior(seed, 0.1);
    for (int i = 0; i < 10000; ++i) {
        double v = i % 10 == 0 ? static_cast<double>(rng.below(11)) / 10.0 : rng.uniform();
        std::size_t hits = 0;
        for (std::size_t b = 0; b < t.bins.size(); ++b) {
            bool last = b + 1 == t.bins.size();
            hits += (v >= t.bins[b].lower && (v < t.bins[b].upper || (last && v <= t.bins[b].upper))) ? 1 : 0;
        }
        ASSERT_EQ(hits, 1u) << v;
        const ConfidenceBin& found = lookup(t, TaskConfidence::of(v));
        EXPECT_TRUE(v >= found.lower && v <= found.upper) << v;
    }
}

TEST(Prior, CountsAndAccuracies)
{
    std::vector<ScoredResult> r{{TaskConfidence::of(0.9), true},  {TaskConfidence::of(0.95), false},
                                {TaskConfidence::of(0.9), false}, {TaskConfidence::of(0.3), true},
                                {TaskConfidence::unparsed(), false}};
    PriorTable t = build_prior(r, 0.1, {"ds", "agent", "run1"});
    EXPECT_EQ(t.total_count(), 5u);
    EXPECT_EQ(t.bins[9].count, 3u);
    EXPECT_NEAR(t.bins[9].accuracy, 1.0 / 3.0, 1e-15);
    EXPECT_NEAR(t.bins[9].mean_stated_confidence, (0.9 + 0.95 + 0.9) / 3.0, 1e-15);
    EXPECT_EQ(t.bins[3].count, 1u);
    EXPECT_DOUBLE_EQ(t.bins[3].lower, 0.3);
    EXPECT_TRUE(t.bins[0].empty());
    EXPECT_EQ(t.unparsed_bin.count, 1u);
    EXPECT_EQ(&lookup(t, TaskConfidence::unparsed()), &t.unparsed_bin);
    EXPECT_EQ(&lookup(t, TaskConfidence::of(1.0)), &t.bins[9]);
    EXPECT_EQ(&lookup(t, TaskConfidence::of(0.3)), &t.bins[3]);
}

TEST(Prior, BadInput)
{
    std::vector<ScoredResult> none;
    EXPECT_THROW(build_prior(none, 0.1), InvalidArgument);
    std::vector<ScoredResult> one{{TaskConfidence::of(0.5), true}};
    EXPECT_THROW(build_prior(one, 0.0), InvalidArgument);
    EXPECT_THROW(build_prior(one, 0.15), InvalidArgument);
    EXPECT_NO_THROW(build_prior(one, 0.25));
}

TEST(Prior, SerializationRoundTripIsBitExact)
{
    SeededRng rng(3);
    for (double step : {0.1, 0.05, 0.2, 1.0}) {
        auto results = random_results(rng, 333);
        PriorTable t = build_prior(results, step, {"synthetic", "gpt-3.5-turbo", "dev-1"});
        std::string bytes = serialize_prior(t);
        PriorTable back = deserialize_prior(bytes);
        EXPECT_EQ(back, t);
        for (std::size_t b = 0; b < t.bins.size(); ++b) {
            EXPECT_TRUE(bits_equal(back.bins[b].accuracy, t.bins[b].accuracy));
            EXPECT_TRUE(bits_equal(back.bins[b].mean_stated_confidence, t.bins[b].mean_stated_confidence));
        }
        EXPECT_EQ(serialize_prior(back), bytes);
    }
}

TEST(Prior, SchemaVersionMismatch)
{
    std::vector<ScoredResult> one{{TaskConfidence::of(0.5), true}};
    auto doc = nlohmann::json::parse(serialize_prior(build_prior(one, 0.1)));
    doc["schema_version"] = 99;
    try {
        deserialize_prior(doc.dump());
        FAIL() << "expected SchemaError";
    } catch (const SchemaError& e) {
        EXPECT_NE(std::string(e.what()).find("99"), std::string::npos);
    }
}

TEST(Prior, MalformedDocuments)
{
    EXPECT_THROW(deserialize_prior("[]"), SchemaError);
    EXPECT_THROW(deserialize_prior("not json"), SchemaError);
    std::vector<ScoredResult> one{{TaskConfidence::of(0.5), true}};
    auto doc = nlohmann::json::parse(serialize_prior(build_prior(one, 0.1)));
    doc["bins"].erase(0);
    EXPECT_THROW(deserialize_prior(doc.dump()), SchemaError);
}
