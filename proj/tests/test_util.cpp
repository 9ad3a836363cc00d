#include <gtest/gtest.h>

#include "toolcal/binning.hpp"
#include "toolcal/error.hpp"
#include "toolcal/hashing.hpp"
#include "toolcal/text.hpp"

using namespace toolcal;

TEST(Hashing, Sha256KnownVectors)
{
    EXPECT_EQ(sha256_hex(""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST(Hashing, Fnv1aKnownVectors)
{
    EXPECT_EQ(fnv1a64(""), 0xcbf29ce484222325ULL);
    EXPECT_EQ(fnv1a64("a"), 0xaf63dc4c8601ec8cULL);
}

TEST(Hashing, SeededRngMatchesReferenceStream)
{
    SeededRng rng(0);
    EXPECT_EQ(rng.next(), 0xe220a8397b1dcdafULL);
    EXPECT_EQ(rng.next(), 0x6e789e6aa1b965f4ULL);
}

TEST(Hashing, UniformStaysInUnitInterval)
{
    SeededRng rng(123);
    for (int i = 0; i < 10000; ++i) {
        double u = rng.uniform();
        ASSERT_GE(u, 0.0);
        ASSERT_LT(u, 1.0);
    }
}

TEST(Text, NormalizeLowercasesTrimsAndCollapses)
{
    EXPECT_EQ(text::normalize("  Hello \t  World\n"), "hello world");
    EXPECT_EQ(text::normalize(""), "");
    EXPECT_EQ(text::normalize(" \n "), "");
}

TEST(Text, BracketedTagsSkipNumbersAndEmpty)
{
    auto tags = text::bracketed_tags("use [search], [ check answer type ] [80] [] [12.5%]");
    ASSERT_EQ(tags.size(), 2u);
    EXPECT_EQ(tags[0], "search");
    EXPECT_EQ(tags[1], "check answer type");
}

TEST(Text, LastLabeledLine)
{
    EXPECT_EQ(text::last_labeled_line("Question: a\nQuestion:  b \nRest", "Question:"), "b");
    EXPECT_EQ(text::last_labeled_line("nothing", "Question:"), "");
}

TEST(Text, JoinTags)
{
    EXPECT_EQ(text::join_tags({"search", "code generate"}), "[search], [code generate]");
    EXPECT_EQ(text::join_tags({}), "");
}

TEST(Binning, RejectsInvalidStepsizes)
{
    EXPECT_THROW(BinLayout(0.0), InvalidArgument);
    EXPECT_THROW(BinLayout(-0.1), InvalidArgument);
    EXPECT_THROW(BinLayout(1.5), InvalidArgument);
    EXPECT_THROW(BinLayout(0.3), InvalidArgument);
    EXPECT_NO_THROW(BinLayout(1.0));
    EXPECT_NO_THROW(BinLayout(0.05));
}

TEST(Binning, DecimalBoundariesLandInUpperBin)
{
    BinLayout layout(0.1);
    ASSERT_EQ(layout.count(), 10u);
    EXPECT_EQ(layout.index_of(0.0), 0u);
    EXPECT_EQ(layout.index_of(0.3), 3u);
    EXPECT_EQ(layout.index_of(0.7), 7u);
    EXPECT_EQ(layout.index_of(0.29999999), 2u);
    EXPECT_EQ(layout.index_of(0.9999), 9u);
    EXPECT_EQ(layout.index_of(1.0), 9u);
    EXPECT_DOUBLE_EQ(layout.lower(3), 0.3);
    EXPECT_EQ(layout.upper(9), 1.0);
}

TEST(Binning, EveryIntegerPercentLandsInsideItsBin)
{
    for (double step : {0.1, 0.2, 0.25, 0.05, 0.5, 1.0}) {
        BinLayout layout(step);
        for (int c = 0; c <= 100; ++c) {
            double v = c / 100.0;
            std::size_t i = layout.index_of(v);
            EXPECT_LE(layout.lower(i), v) << step << " " << c;
            if (i + 1 < layout.count()) {
                EXPECT_LT(v, layout.upper(i)) << step << " " << c;
            }
        }
    }
}
