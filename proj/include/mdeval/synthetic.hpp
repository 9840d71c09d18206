#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "mdeval/date.hpp"

namespace mdeval {

struct SyntheticSpec {
    std::uint64_t seed = 1;
    std::size_t n_tickers = 50;
    std::size_t n_days = 30;
    double rise_rate = 0.3;
    double fall_rate = 0.3;
    Date start{2024, 1, 2};
    std::size_t articles_per_day = 6;
    std::size_t transcript_mentions = 8;
};

struct SyntheticSummary {
    std::size_t records = 0;
    std::size_t rise_labels = 0;  // open -> close
    std::size_t fall_labels = 0;
    std::vector<Date> dates;
};

// Writes companies.csv, prices.csv, news.jsonl and transcripts.jsonl into
// `dir`. Each ticker-day draws its open->close label first (Rise with
// rise_rate, Fall with fall_rate, else Neutral) and then a return uniformly
// inside that label's band. Throws Error(InvalidRates) or Error(InvalidConfig).
SyntheticSummary make_synthetic_market(const SyntheticSpec& spec, const std::filesystem::path& dir);

}  // namespace mdeval
