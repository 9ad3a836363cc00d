#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "json.hpp"
#include "toolcal/instruction.hpp"
#include "toolcal/model_handle.hpp"
#include "toolcal/trace.hpp"

namespace toolcal {

// Tool name -> description, rendered into the instruction prompt as JSON.
using ToolCatalog = std::map<std::string, std::string>;

// search, check answer type, string operations, code generate, Internal Knowledge.
ToolCatalog default_tool_catalog();
ToolCatalog load_tool_catalog(const std::filesystem::path& path);

struct FamiliarityVerdict {
    bool use_internal_knowledge = false;
    std::string verdict_text;
    std::vector<std::string> flags;
};

struct SimilarityToolList {
    std::vector<std::string> useful_tools;  // deduplicated, first-seen order
    std::string raw_text;
    std::vector<std::string> flags;
};

// Verdict is the text after the last "Familiarity verdict:" marker; it asks
// for internal knowledge iff it contains the literal "[Internal Knowledge]".
// A reply without the marker yields {false, whole reply} and a flag.
FamiliarityVerdict parse_familiarity(const std::string& reply);
FamiliarityVerdict evaluate_familiarity(const std::string& question, ModelHandle& teacher);

// Bracketed names after the last "Useful tools:" marker.
SimilarityToolList parse_similarity(const std::string& reply);
SimilarityToolList evaluate_similarity(const std::string& question, const std::string& demos, ModelHandle& teacher);

struct CompiledInstruction {
    ToolUseInstruction instruction;
    std::vector<std::string> flags;
};

// allowed = similarity tools (catalog spelling) plus Internal Knowledge when
// familiarity asks for it; forbidden = catalog keys not allowed. The text is
// the teacher's reply when it carries both "You should use" and
// "DO NOT use", otherwise a deterministic template. A null teacher always
// uses the template.
CompiledInstruction compile_instruction(const FamiliarityVerdict& fam, const SimilarityToolList& sim,
                                        const ToolCatalog& catalog, ModelHandle* teacher);

std::string fallback_instruction_text(const FamiliarityVerdict& fam, const std::vector<std::string>& allowed,
                                      const std::vector<std::string>& forbidden);

struct SelfEvaluation {
    FamiliarityVerdict familiarity;
    SimilarityToolList similarity;
    ToolUseInstruction instruction;
    std::vector<std::string> flags;
};

// art: familiarity, similarity and instruction prompts. dsp: familiarity
// only; the retriever is the sole useful tool and the text is templated.
SelfEvaluation run_self_evaluation(const std::string& question, const std::string& demos, Dialect dialect,
                                   const ToolCatalog& catalog, ModelHandle& teacher);

nlohmann::json to_json(const SelfEvaluation& se);

} // namespace toolcal
