#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mdeval/digest.hpp"
#include "mdeval/http_backend.hpp"
#include "mdeval/market_data.hpp"

namespace mdeval {

struct DecisionSet {
    std::string investor_id;
    std::string digest_id;
    std::vector<std::string> buys;
    std::vector<std::string> sells;
    std::string remark;

    bool operator==(const DecisionSet&) const = default;
};

// Reason the set breaks an invariant (overlap, non-universe code, duplicate,
// or empty lists without a remark); nullopt when valid.
std::optional<std::string> decision_violation(const DecisionSet& decision, const Universe& universe);

enum class InvestorClass { LLM, Human, Baseline };

std::string_view to_string(InvestorClass cls);
std::optional<InvestorClass> parse_investor_class(std::string_view text);

// One line of the decision log.
struct DecisionRecord {
    DecisionSet decision;
    InvestorClass investor_class = InvestorClass::Baseline;
    std::string raw_reply_hash;

    bool operator==(const DecisionRecord&) const = default;
};

json to_json(const DecisionRecord& record);
DecisionRecord decision_record_from_json(const json& j);

struct ParsedReply {
    std::vector<std::string> buys;
    std::vector<std::string> sells;
    std::string remark;
    std::vector<std::string> warnings;
};

// Reads the `BUY:` / `SELL:` / `REMARK:` lines. Unknown codes are dropped,
// duplicates collapsed, and codes on both lines removed from both, each with
// a warning. Throws Error(UnparseableReply) when neither BUY nor SELL appears.
ParsedReply parse_decision_response(std::string_view text, const Universe& universe);

// Digest as agents see it: no source, generator or pipeline.
struct DigestView {
    std::string id;
    DigestKind kind = DigestKind::MorningBrief;
    std::string text;

    static DigestView of(const Digest& digest) { return {digest.id, digest.kind, digest.text}; }
};

enum class AgentKind { NoAction, Random, MomentumReader, External };

struct AgentConfig {
    std::string name;
    AgentKind kind = AgentKind::NoAction;
    std::optional<HttpEndpoint> endpoint;  // External only
    double temperature = 0.0;              // External agents must leave this at zero
    std::uint64_t seed = 0;
    std::optional<std::size_t> max_positions;
    double p_buy = 0.1;  // Random
    double p_sell = 0.05;
    double momentum_threshold = 0.01;  // MomentumReader: minimum |move| acted upon
    bool restrict_to_digest = false;   // External: list only digest-mentioned companies in the prompt

    [[nodiscard]] InvestorClass investor_class() const {
        return kind == AgentKind::External ? InvestorClass::LLM : InvestorClass::Baseline;
    }

    // Throws Error(InvalidConfig).
    void validate() const;
};

struct AgentDecision {
    DecisionSet decision;
    std::vector<std::string> raw_replies;  // every backend reply, in order; empty for builtins
    std::vector<std::string> warnings;
};

// Always returns a set satisfying decision_violation() == nullopt.
AgentDecision decide(const AgentConfig& agent, const DigestView& digest, const Universe& universe);

// Buy with p_buy, sell with p_sell, independently per ticker, drawn from a
// stream seeded by (seed, digest_id).
DecisionSet random_agent_decide(std::uint64_t seed, const std::string& digest_id, const Universe& universe,
                                double p_buy, double p_sell);

// Prompt pair sent to external agents.
struct AgentPrompt {
    std::string system;
    std::string user;
};
AgentPrompt agent_prompt(const AgentConfig& agent, const DigestView& digest, const Universe& universe);

}  // namespace mdeval
