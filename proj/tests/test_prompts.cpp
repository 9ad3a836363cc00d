#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

#include "toolcal/error.hpp"
#include "toolcal/prompts.hpp"

using namespace toolcal;

namespace {

std::string golden(std::string_view name)
{
    std::ifstream in(std::string(TOOLCAL_FIXTURES) + "/prompts/" + std::string(name) + ".txt", std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::size_t count_slots(std::string_view body)
{
    std::size_t n = 0;
    for (auto pos = body.find("%s"); pos != std::string_view::npos; pos = body.find("%s", pos + 2)) {
        ++n;
    }
    return n;
}

} // namespace

TEST(Prompts, BodiesMatchGoldenFiles)
{
    for (auto name : {PromptName::dsp_v, PromptName::art_v, PromptName::fam_se, PromptName::sim_se,
                      PromptName::instr_se, PromptName::calib_ar}) {
        const auto& t = prompt_template(name);
        SCOPED_TRACE(std::string(to_string(name)));
        std::string want = golden(to_string(name));
        ASSERT_FALSE(want.empty());
        EXPECT_EQ(std::string(t.body), want);
        EXPECT_EQ(t.slot_count, count_slots(want));
        EXPECT_EQ(parse_prompt_name(to_string(name)), name);
    }
}

TEST(Prompts, RenderFillsSlotsInOrderVerbatim)
{
    std::string out = render_prompt(PromptName::fam_se, {"What is 100% of %s?"});
    EXPECT_NE(out.find("What is 100% of %s?"), std::string::npos);
    EXPECT_EQ(out.find("%s"), out.find("What is 100% of %s?") + 16);
}

TEST(Prompts, RenderRejectsWrongArgumentCount)
{
    try {
        render_prompt(PromptName::art_v, {"only one"});
        FAIL();
    } catch (const InvalidArgument& e) {
        std::string what = e.what();
        EXPECT_NE(what.find("art_v"), std::string::npos) << what;
        EXPECT_NE(what.find('3'), std::string::npos) << what;
    }
    EXPECT_THROW(render_prompt(PromptName::calib_ar, {"a", "b", "c", "d"}), InvalidArgument);
}

TEST(Prompts, ArtSkeletonOrder)
{
    std::string out = render_prompt(PromptName::art_v, {"DEMOS", "DESC", "QUESTION"});
    auto sel = out.find(markers::selected_tasks);
    auto desc = out.find("Description: DESC");
    auto input = out.find("Input: QUESTION");
    ASSERT_NE(sel, std::string::npos);
    EXPECT_LT(sel, desc);
    EXPECT_LT(desc, input);
}

TEST(Prompts, DspKeepsSearchQuerySlotAndEndsWithRationaleLead)
{
    std::string out = render_prompt(PromptName::dsp_v, {"CTX", "Q?"});
    EXPECT_NE(out.find("Search Query:"), std::string::npos);
    EXPECT_TRUE(out.ends_with(markers::dsp_rationale_lead));
}

TEST(Prompts, UnknownNameIsRejected)
{
    EXPECT_THROW(parse_prompt_name("nope"), InvalidArgument);
}
