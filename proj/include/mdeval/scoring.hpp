#pragma once

#include <compare>
#include <optional>
#include <string>
#include <vector>

#include "mdeval/agents.hpp"
#include "mdeval/digest.hpp"
#include "mdeval/market_data.hpp"

namespace mdeval {

struct ScoringConfig {
    double rise_threshold = 0.0055;
    double fall_threshold = 0.0050;  // applied as -fall_threshold

    // Throws Error(InvalidConfig) unless both thresholds are positive.
    void validate() const;
};

// Ordered Fall < Neutral < Rise.
enum class MovementLabel { Fall, Neutral, Rise };

std::string_view to_string(MovementLabel label);

// Rise iff r > rise_threshold, Fall iff r < -fall_threshold; both strict.
MovementLabel label_return(double r, const ScoringConfig& config = {});

enum class Horizon { OpenToClose, CloseToNextOpen };

constexpr Horizon horizon_for(DigestKind kind) {
    return kind == DigestKind::MorningBrief ? Horizon::OpenToClose : Horizon::CloseToNextOpen;
}

// OpenToClose: (close - open) / open on `date`. CloseToNextOpen: (next
// trading day's open - close) / close. nullopt marks the decision unscorable
// (a missing record or the last day). Throws Error(UnknownTicker) and
// Error(DateOutOfRange).
std::optional<double> realized_return(const std::string& ticker, const Date& date, Horizon horizon,
                                      const MarketDataset& dataset);

enum class Side { Buy, Sell };
enum class Verdict { Correct, Incorrect };

constexpr Verdict score_decision(Side side, MovementLabel label) {
    if (side == Side::Buy && label == MovementLabel::Rise) return Verdict::Correct;
    if (side == Side::Sell && label == MovementLabel::Fall) return Verdict::Correct;
    return Verdict::Incorrect;
}

// Digest source x kind x pipeline. `source` is the generator name, or
// "journalist".
struct Condition {
    DigestKind kind = DigestKind::MorningBrief;
    std::string source;
    Pipeline pipeline = Pipeline::Journalist;

    auto operator<=>(const Condition&) const = default;
    bool operator==(const Condition&) const = default;
};

Condition condition_of(const Digest& digest);

struct SessionScore {
    std::string investor_id;
    Condition condition;
    std::size_t n_buy = 0;
    std::size_t n_sell = 0;
    std::size_t n_correct = 0;
    std::size_t n_unscorable = 0;
    // n_correct / (n_buy + n_sell - n_unscorable) for micro averaging.
    std::optional<double> accuracy;

    [[nodiscard]] std::size_t scorable() const { return n_buy + n_sell - n_unscorable; }

    bool operator==(const SessionScore&) const = default;
};

enum class Averaging { Micro, MacroPerDay };

struct Evaluation {
    std::vector<SessionScore> scores;  // sorted by (investor, condition)
    std::size_t dropped_entries = 0;   // buy/sell entries removed by invariant repair
    std::vector<std::string> warnings;
};

// One score per (investor, condition) that has at least one decision set.
// Throws Error(DanglingDigestReference).
Evaluation evaluate_sessions(const std::vector<DecisionSet>& decisions, const DigestIndex& digests,
                             const MarketDataset& dataset, const ScoringConfig& config = {},
                             Averaging averaging = Averaging::Micro);

// investor,kind,source,pipeline,n_buy,n_sell,n_unscorable,n_correct,accuracy
std::string scores_to_csv(const std::vector<SessionScore>& scores);
std::vector<SessionScore> scores_from_csv(std::string_view csv);

}  // namespace mdeval
