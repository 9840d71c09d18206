#pragma once

#include <array>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mdeval/agents.hpp"
#include "mdeval/scoring.hpp"

namespace mdeval {

using InvestorClasses = std::map<std::string, InvestorClass>;

// Column order shared by both tables: kind-major, then Journalist,
// Performance-Based, Professional-Insight.
inline constexpr std::size_t kTableColumns = 6;
std::size_t column_of(DigestKind kind, Pipeline pipeline);

struct AccuracyCell {
    std::optional<double> percent;  // accuracy x 100
    bool best = false;

    bool operator==(const AccuracyCell&) const = default;
};

struct AccuracyRow {
    InvestorClass investor_class = InvestorClass::Baseline;
    std::string investor;
    std::array<AccuracyCell, kTableColumns> cells;

    bool operator==(const AccuracyRow&) const = default;
};

// Generated columns hold `generator`'s digests; Journalist columns are shared.
struct AccuracyTable {
    std::string generator;
    std::vector<AccuracyRow> rows;  // LLM, Human, Baseline; then by investor id

    bool operator==(const AccuracyTable&) const = default;
};

// Best-cell markers go on every row maximum within a kind block, compared at
// the rendered two-decimal precision.
AccuracyTable accuracy_table(const std::vector<SessionScore>& scores, const InvestorClasses& classes,
                             const std::string& generator);

// Distinct non-journalist sources in the scores, sorted.
std::vector<std::string> generators_in(const std::vector<SessionScore>& scores);

std::string render_accuracy_tables(const std::vector<AccuracyTable>& tables);
// Inverse of render_accuracy_tables at two-decimal precision.
std::vector<AccuracyTable> parse_accuracy_tables(std::string_view markdown);

enum class BehaviorPooling {
    Pooled,                  // all decision sets of the class in one mean
    PerInvestorThenAverage,  // mean per investor, then unweighted mean
};

struct BehaviorRow {
    InvestorClass investor_class = InvestorClass::Baseline;
    Side side = Side::Buy;
    std::array<std::optional<double>, kTableColumns> means;

    bool operator==(const BehaviorRow&) const = default;
};

struct BehaviorTable {
    std::string generator;
    std::vector<BehaviorRow> rows;
    std::vector<std::string> warnings;
};

// Mean buys / sells per decision set, per investor class and condition.
// Throws Error(DanglingDigestReference).
BehaviorTable behavior_table(const std::vector<DecisionSet>& decisions, const DigestIndex& digests,
                             const InvestorClasses& classes, const std::string& generator,
                             BehaviorPooling pooling = BehaviorPooling::Pooled);

std::string render_behavior_tables(const std::vector<BehaviorTable>& tables);

struct LeaderboardEntry {
    std::string annotator;
    std::optional<double> accuracy;
    std::size_t n_decisions = 0;
    std::size_t rank = 0;  // 1-based
    bool beat_llm_average = false;
    bool rank1 = false;
    bool rank2 = false;

    [[nodiscard]] int bonus_usd() const { return (beat_llm_average ? 65 : 0) + (rank1 ? 100 : 0) + (rank2 ? 35 : 0); }
};

struct Leaderboard {
    std::vector<LeaderboardEntry> entries;
    std::optional<double> llm_average;  // unweighted mean of per-LLM overall accuracy
};

struct OverallAccuracy {
    std::optional<double> accuracy;
    std::size_t n_decisions = 0;
};

// Micro-accuracy over every condition of each investor.
std::map<std::string, OverallAccuracy> overall_accuracy(const std::vector<SessionScore>& scores);

// Humans ranked by overall accuracy, then decision count (desc), then id.
Leaderboard leaderboard(const std::vector<SessionScore>& human_scores, const std::vector<SessionScore>& llm_scores);

json to_json(const Leaderboard& board);

}  // namespace mdeval
