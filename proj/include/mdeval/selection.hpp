#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mdeval/io.hpp"
#include "mdeval/market_data.hpp"
#include "mdeval/types.hpp"

namespace mdeval {

enum class Metric { Volatility, Volume, AbsImbalance };

inline constexpr std::array<Metric, 3> kRankingMetrics = {Metric::Volatility, Metric::Volume,
                                                          Metric::AbsImbalance};

std::string_view to_string(Metric metric);
std::optional<Metric> parse_metric(std::string_view text);

// Ranking key: intraday volatility, share volume, or |inst_buy - inst_sell|.
double metric_value(const EquityDayRecord& record, Metric metric);

struct SelectionConfig {
    std::size_t k = 10;

    // Throws Error(InvalidConfig) unless 1 <= k <= universe_size.
    void validate(std::size_t universe_size) const;
};

struct RankedEntry {
    std::string ticker;
    double value = 0;         // the ranking key
    double signed_value = 0;  // equals value except for AbsImbalance, where the sign is kept

    bool operator==(const RankedEntry&) const = default;
};

struct CandidateSet {
    Date date;  // trading date of the digest this set feeds
    Pipeline pipeline = Pipeline::PerformanceBased;
    std::vector<std::string> tickers;
    std::map<Metric, std::vector<RankedEntry>> per_metric;  // PerformanceBased only
    std::vector<std::string> source_articles;
    std::vector<std::string> warnings;

    bool operator==(const CandidateSet&) const = default;
};

json to_json(const CandidateSet& set);
CandidateSet candidate_set_from_json(const json& j);

// Top-k of the day by `metric`, descending, ties by ascending code. Returns
// every record when the day has fewer than k. Throws Error(EmptyDay).
std::vector<RankedEntry> rank_top_k_entries(const TradingDay& day, Metric metric, std::size_t k);
std::vector<std::string> rank_top_k(const TradingDay& day, Metric metric, std::size_t k);

// Longest-match scanner over universe names (ASCII case-insensitive) and codes
// (exact). Matches must sit on word boundaries.
class MentionScanner {
public:
    explicit MentionScanner(const Universe& universe);

    // Deduplicated codes in order of first mention.
    [[nodiscard]] std::vector<std::string> scan(std::string_view text) const;

private:
    struct Pattern {
        std::string text;  // lowercased for names
        std::string code;
        bool is_code = false;
    };
    std::array<std::vector<Pattern>, 256> by_first_byte_;
};

class ExtractorBackend {
public:
    virtual ~ExtractorBackend() = default;
    [[nodiscard]] virtual std::string name() const = 0;
    // Candidate codes; may contain codes outside the universe, which callers filter.
    virtual std::vector<std::string> extract(std::string_view text, const Universe& universe) = 0;
};

class ReferenceExtractor final : public ExtractorBackend {
public:
    [[nodiscard]] std::string name() const override { return "reference"; }
    std::vector<std::string> extract(std::string_view text, const Universe& universe) override;

private:
    const Universe* cached_for_ = nullptr;
    std::size_t cached_size_ = 0;
    std::unique_ptr<MentionScanner> scanner_;
};

// Codes an article mentions: its `tickers` field when supplied, otherwise a
// reference scan of headline and body.
std::vector<std::string> article_mentions(const NewsArticle& article, const MentionScanner& scanner);

// Deduplicated universe codes in first-mention order. Throws
// Error(MissingTranscript) on empty text; backend failures surface as
// Error(ExtractorUnavailable).
std::vector<std::string> extract_mentioned_companies(std::string_view text, const Universe& universe,
                                                     ExtractorBackend& extractor);

// Ranks `prior_day` on the three metrics and merges the lists (volatility,
// volume, imbalance; repeats skipped). Articles come from `day`, the brief's
// own trading day, whose news is what is published before its open.
CandidateSet performance_based_candidates(const TradingDay& prior_day, const TradingDay& day,
                                          const Universe& universe, const SelectionConfig& config);

// Tickers named in `day`'s morning transcript plus the day's articles that
// mention them. Throws Error(MissingTranscript).
CandidateSet professional_insight_candidates(const TradingDay& day, const Universe& universe,
                                             ExtractorBackend& extractor);

}  // namespace mdeval
