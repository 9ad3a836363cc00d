#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "toolcal/error.hpp"
#include "toolcal/metrics.hpp"
#include "toolcal/prompts.hpp"
#include "toolcal/simulator.hpp"

using namespace toolcal;

namespace {

QaRecord task(std::size_t i, double log_pop = 1.0)
{
    return {"t" + std::to_string(i), "What is item " + std::to_string(i) + "?", {"Answer" + std::to_string(i)}, log_pop,
            DatasetSource::synthetic};
}

bool useful(const SimulatedAgentPolicy& p, const std::string& tool)
{
    return std::find(p.useful_tools.begin(), p.useful_tools.end(), tool) != p.useful_tools.end();
}

} // namespace

TEST(SimulatorPolicy, ValidateRejectsBadValues)
{
    SimulatedAgentPolicy p;
    EXPECT_NO_THROW(p.validate());
    p.misuse_probability = 1.5;
    EXPECT_THROW(p.validate(), InvalidArgument);
    p = {};
    p.base_accuracy_correct_tools = -0.1;
    EXPECT_THROW(p.validate(), InvalidArgument);
    p = {};
    p.useful_tools = {"not on the menu"};
    EXPECT_THROW(p.validate(), InvalidArgument);
}

TEST(SimulatorPolicy, JsonRoundTrip)
{
    SimulatedAgentPolicy p;
    p.misuse_probability = 0.4;
    p.rng_seed = 77;
    SimulatedAgentPolicy back = policy_from_json(to_json(p));
    EXPECT_EQ(back.misuse_probability, 0.4);
    EXPECT_EQ(back.rng_seed, 77u);
    EXPECT_EQ(back.tool_menu, p.tool_menu);
}

TEST(SimulatorPlan, MisuseFrequencyMatchesPolicy)
{
    SimulatedAgentPolicy p;
    std::size_t steps = 0;
    std::size_t misuse = 0;
    for (std::size_t i = 0; i < 4000; ++i) {
        auto plan = plan_task(p, task(i), std::nullopt);
        for (const auto& s : plan.steps) {
            ++steps;
            misuse += s.misuse ? 1 : 0;
            EXPECT_EQ(s.misuse, !useful(p, s.tool)) << s.tool;
        }
    }
    // Binomial standard error at n = 8000 is about 0.005.
    EXPECT_NEAR(static_cast<double>(misuse) / steps, 0.25, 0.02);
}

TEST(SimulatorPlan, StatedConfidenceIsBiasedSuccessProbability)
{
    SimulatedAgentPolicy p;
    for (std::size_t i = 0; i < 200; ++i) {
        auto plan = plan_task(p, task(i), std::nullopt);
        bool any_misuse = false;
        for (const auto& s : plan.steps) any_misuse |= s.misuse;
        double success = any_misuse ? 0.3 : 0.6;
        EXPECT_DOUBLE_EQ(plan.success_probability, success);
        for (const auto& s : plan.steps) {
            double step_p = s.misuse ? 0.3 : 0.6;
            EXPECT_EQ(s.stated_confidence, static_cast<int>(std::lround(std::min(1.0, step_p + 0.3) * 100)));
        }
    }
}

TEST(SimulatorPlan, AccuracyMatchesAnalyticExpectation)
{
    SimulatedAgentPolicy p;
    std::size_t correct = 0;
    const std::size_t n = 6000;
    for (std::size_t i = 0; i < n; ++i) {
        correct += plan_task(p, task(i), std::nullopt).answer_correct ? 1 : 0;
    }
    // Two independent steps: P(no misuse) = 0.75^2.
    double expected = 0.5625 * 0.6 + 0.4375 * 0.3;
    EXPECT_NEAR(static_cast<double>(correct) / n, expected, 0.025);
}

TEST(SimulatorPlan, ObedientAgentStaysInsideAllowedSet)
{
    SimulatedAgentPolicy p;
    std::vector<std::string> allowed{"search", "check answer type"};
    for (std::size_t i = 0; i < 500; ++i) {
        for (const auto& s : plan_task(p, task(i), allowed).steps) {
            EXPECT_FALSE(s.misuse);
            EXPECT_TRUE(s.tool == "search" || s.tool == "check answer type") << s.tool;
        }
    }
    p.obeys_instruction = false;
    std::size_t misuse = 0;
    for (std::size_t i = 0; i < 500; ++i) {
        for (const auto& s : plan_task(p, task(i), allowed).steps) misuse += s.misuse ? 1 : 0;
    }
    EXPECT_GT(misuse, 0u);
}

TEST(SimulatorPlan, AnswerDrawIsSharedAcrossInstructions)
{
    // With equal success probability the answer outcome must not depend on
    // the instruction, so variants are compared on common random numbers.
    SimulatedAgentPolicy p;
    p.base_accuracy_misuse = p.base_accuracy_correct_tools;
    std::vector<std::string> allowed{"search"};
    for (std::size_t i = 0; i < 300; ++i) {
        EXPECT_EQ(plan_task(p, task(i), std::nullopt).answer_correct, plan_task(p, task(i), allowed).answer_correct);
    }
}

TEST(SimulatorStep, ArtTextAndDeterminism)
{
    SimulatedAgentPolicy p;
    QaRecord t = task(3);
    std::string s0 = simulate_agent_step(p, t, nullptr, 0);
    EXPECT_EQ(s0, simulate_agent_step(p, t, nullptr, 0));
    EXPECT_TRUE(s0.starts_with("Q1: ["));
    std::string ans = simulate_agent_step(p, t, nullptr, p.tool_steps);
    EXPECT_TRUE(ans.starts_with("Ans: "));
    bool correct = plan_task(p, t, std::nullopt).answer_correct;
    EXPECT_EQ(exact_match(ans.substr(5), t.answers), correct);
}

TEST(SimulatorStep, RefusalWhenConfigured)
{
    SimulatedAgentPolicy p;
    p.refusal_probability = 1.0;
    std::string s = simulate_agent_step(p, task(1), nullptr, 0);
    EXPECT_NE(s.find("I'm sorry"), std::string::npos);
}

TEST(SimulatorStep, DspUsesSearchOnly)
{
    SimulatedAgentPolicy p;
    std::string s = simulate_agent_step(p, task(2), nullptr, 0, Dialect::dsp);
    EXPECT_NE(s.find("Search Query: "), std::string::npos);
    EXPECT_NE(s.find("Confidence score: 90"), std::string::npos);
    EXPECT_TRUE(simulate_agent_step(p, task(2), nullptr, p.tool_steps, Dialect::dsp).starts_with("Answer: "));
}

TEST(SimulatorBackend, AnswersTeacherPrompts)
{
    SimulatedAgentPolicy p;
    std::vector<QaRecord> tasks{task(1, 1.0), task(2, 4.5)};
    SimulatedBackend b(p, tasks);
    ModelRequest r;
    r.model_name = "teacher";
    r.prompt = render_prompt(PromptName::fam_se, {tasks[0].question});
    EXPECT_EQ(b.invoke(r).text.find("[Internal Knowledge]"), std::string::npos);
    r.prompt = render_prompt(PromptName::fam_se, {tasks[1].question});
    EXPECT_NE(b.invoke(r).text.find("[Internal Knowledge]"), std::string::npos);
    r.prompt = render_prompt(PromptName::sim_se, {"demos", tasks[0].question});
    EXPECT_EQ(b.invoke(r).text, "Useful tools: [search], [check answer type]");
}

TEST(SimulatorBackend, CalibratorAppliesTable)
{
    SimulatedBackend b(SimulatedAgentPolicy{}, {});
    ModelRequest r;
    r.model_name = "cal";
    r.prompt = render_prompt(PromptName::calib_ar,
                             {"[0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9]",
                              "[N/A, N/A, N/A, N/A, N/A, N/A, 0.3, N/A, N/A, 0.55]",
                              "Q1: [search] x [90]\nQ2: [code generate] y [60]\nQ3: [search] z [75]\nAns: a"});
    EXPECT_EQ(b.invoke(r).text, "Q1: [search] x [55]\nQ2: [code generate] y [30]\nQ3: [search] z [75]\nAns: a");
}
