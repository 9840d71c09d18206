#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "mdeval/date.hpp"
#include "mdeval/error.hpp"

namespace mdeval {

struct Ticker {
    std::string code;
    std::string name;

    bool operator==(const Ticker&) const = default;
};

// `[A-Z0-9.]{1,12}`
bool is_valid_ticker_code(std::string_view code);

// Listed companies in companies-file order; codes are unique.
class Universe {
public:
    Universe() = default;
    // Throws Error(InvalidConfig) on an invalid or duplicate code.
    explicit Universe(std::vector<Ticker> tickers);

    [[nodiscard]] const std::vector<Ticker>& tickers() const { return tickers_; }
    [[nodiscard]] std::size_t size() const { return tickers_.size(); }
    [[nodiscard]] bool contains(std::string_view code) const;
    [[nodiscard]] const Ticker* find(std::string_view code) const;

    bool operator==(const Universe& other) const { return tickers_ == other.tickers_; }

private:
    std::vector<Ticker> tickers_;
    std::unordered_map<std::string, std::size_t> index_;
};

struct EquityDayRecord {
    std::string ticker;
    Date date;
    double open = 0;
    double high = 0;
    double low = 0;
    double close = 0;
    std::int64_t volume = 0;
    std::int64_t inst_buy = 0;
    std::int64_t inst_sell = 0;

    bool operator==(const EquityDayRecord&) const = default;
};

// Reason the record breaks a price/volume invariant, or nullopt when valid.
std::optional<std::string> record_violation(const EquityDayRecord& record);

struct NewsArticle {
    std::string id;
    Date date;
    std::string headline;
    std::string body;
    // Empty when the news file carried no `tickers` key; see `tickers_provided`.
    std::vector<std::string> mentioned_tickers;
    bool tickers_provided = false;

    bool operator==(const NewsArticle&) const = default;
};

enum class TranscriptKind { Morning, Closing };

std::string_view to_string(TranscriptKind kind);

struct TradingDay {
    Date date;
    std::map<std::string, EquityDayRecord> records;
    std::vector<NewsArticle> articles;  // sorted by id
    std::optional<std::string> morning_transcript;
    std::optional<std::string> closing_transcript;

    [[nodiscard]] const EquityDayRecord* record(std::string_view code) const;
    [[nodiscard]] const std::optional<std::string>& transcript(TranscriptKind kind) const {
        return kind == TranscriptKind::Morning ? morning_transcript : closing_transcript;
    }

    bool operator==(const TradingDay&) const = default;
};

// Immutable once loaded; safe to share between reader threads.
struct MarketDataset {
    Universe universe;
    std::vector<TradingDay> days;  // strictly increasing dates

    [[nodiscard]] std::optional<std::size_t> day_index(const Date& date) const;
    [[nodiscard]] const TradingDay* find_day(const Date& date) const;
    [[nodiscard]] std::size_t record_count() const;

    bool operator==(const MarketDataset&) const = default;
};

struct DatasetPaths {
    std::filesystem::path companies;
    std::filesystem::path prices;
    std::filesystem::path news;
    std::optional<std::filesystem::path> transcripts;

    // companies.csv, prices.csv, news.jsonl and (if present) transcripts.jsonl under `dir`.
    static DatasetPaths in_directory(const std::filesystem::path& dir);
};

struct Reject {
    std::string file;
    std::size_t row = 0;  // 1-based physical line number, header included
    Errc code = Errc::ParseError;
    std::string reason;
};

struct LoadOptions {
    // Any reject becomes a thrown Error.
    bool strict = false;
};

struct LoadResult {
    MarketDataset dataset;
    std::vector<Reject> rejects;
    std::vector<std::string> warnings;
};

// Parses and validates the four input files. Malformed rows are skipped and
// reported unless `options.strict`. Articles dated on a non-trading day are
// attached to the next trading day.
LoadResult load_dataset(const DatasetPaths& paths, const LoadOptions& options = {});

// (target - basis) / basis; throws Error(NonPositiveBasis) when basis <= 0.
double simple_return(double basis_price, double target_price);

// Intraday range over the open: (high - low) / open.
double intraday_volatility(const EquityDayRecord& record);

// inst_buy - inst_sell, in shares.
std::int64_t institutional_imbalance(const EquityDayRecord& record);

}  // namespace mdeval
