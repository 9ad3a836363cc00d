#pragma once

// Random ART-dialect traces rendered from a known structure, shared by the
// unit and acceptance tests.

#include <optional>
#include <string>
#include <vector>

#include "toolcal/hashing.hpp"

namespace toolcal::testkit {

struct GenInvocation {
    std::string tool;
    std::optional<int> confidence;
};

struct GenStep {
    std::vector<GenInvocation> invocations;
};

struct GenTrace {
    std::vector<GenStep> steps;
    std::string answer;
    std::string text;
};

inline GenTrace generate_art_trace(SeededRng& rng)
{
    static const std::vector<std::string> tools{"search", "check answer type", "string operations",
                                                "code generate", "Internal Knowledge", "arithmetic"};
    static const std::vector<std::string> words{"who", "wrote", "river", "capital", "Peru", "1969",
                                                "film", "born", "x-ray", "a.b", "what's", "(note)"};
    GenTrace t;
    std::size_t steps = 1 + rng.below(5);
    for (std::size_t s = 0; s < steps; ++s) {
        GenStep step;
        std::string line = (rng.below(2) == 0 ? "Q" : "Step ") + std::to_string(s + 1) + ": ";
        std::size_t n = 1 + rng.below(2);
        for (std::size_t k = 0; k < n; ++k) {
            GenInvocation inv{tools[rng.below(tools.size())], std::nullopt};
            line += "[" + inv.tool + "]";
            std::size_t words_n = rng.below(4);
            for (std::size_t w = 0; w < words_n; ++w) {
                line += " " + words[rng.below(words.size())];
            }
            if (rng.below(5) != 0) {
                inv.confidence = static_cast<int>(rng.below(101));
                line += " [" + std::to_string(*inv.confidence) + (rng.below(4) == 0 ? "%" : "") + "]";
            }
            line += k + 1 < n ? " then " : "";
            step.invocations.push_back(inv);
        }
        t.text += line + "\n";
        if (rng.below(3) != 0) {
            t.text += "#" + std::to_string(s + 1) + ": observed [" + words[rng.below(words.size())] + "] and [" +
                      std::to_string(rng.below(1000)) + "]\n";
        }
        t.steps.push_back(std::move(step));
    }
    t.answer = words[rng.below(words.size())] + " " + words[rng.below(words.size())];
    t.text += "Ans: " + t.answer + "\n";
    return t;
}

} // namespace toolcal::testkit
