#pragma once

#include <string>
#include <string_view>

namespace mdeval {

// Instruction texts shipped under prompts/ and compiled in; `id` names the
// file (e.g. "morning_brief.v1") and `hash` its FNV-1a digest.
struct PromptTemplate {
    std::string_view id;
    std::string_view text;

    [[nodiscard]] std::string hash() const;
};

const PromptTemplate& morning_brief_prompt();
const PromptTemplate& closing_bell_prompt();
const PromptTemplate& agent_investor_prompt();
const PromptTemplate& entity_extraction_prompt();

}  // namespace mdeval
