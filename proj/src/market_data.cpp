#include "mdeval/market_data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <set>
#include <tuple>

#include "mdeval/io.hpp"

namespace mdeval {

bool is_valid_ticker_code(std::string_view code) {
    if (code.empty() || code.size() > 12) return false;
    return std::all_of(code.begin(), code.end(), [](char c) {
        return (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '.';
    });
}

Universe::Universe(std::vector<Ticker> tickers) : tickers_(std::move(tickers)) {
    for (std::size_t i = 0; i < tickers_.size(); ++i) {
        const auto& code = tickers_[i].code;
        if (!is_valid_ticker_code(code)) throw Error(Errc::InvalidConfig, "invalid ticker code '" + code + "'");
        if (!index_.emplace(code, i).second) throw Error(Errc::InvalidConfig, "duplicate ticker code " + code);
    }
}

bool Universe::contains(std::string_view code) const { return index_.count(std::string(code)) != 0; }

const Ticker* Universe::find(std::string_view code) const {
    auto it = index_.find(std::string(code));
    return it == index_.end() ? nullptr : &tickers_[it->second];
}

std::optional<std::string> record_violation(const EquityDayRecord& r) {
    auto finite = [](double v) { return std::isfinite(v); };
    if (!finite(r.open) || !finite(r.high) || !finite(r.low) || !finite(r.close)) return "non-finite price";
    if (r.open <= 0 || r.high <= 0 || r.low <= 0 || r.close <= 0) return "prices must be strictly positive";
    if (r.high < r.low) return "high < low";
    if (r.low > std::min(r.open, r.close)) return "low above min(open, close)";
    if (r.high < std::max(r.open, r.close)) return "high below max(open, close)";
    if (r.volume < 0 || r.inst_buy < 0 || r.inst_sell < 0) return "negative volume";
    return std::nullopt;
}

std::string_view to_string(TranscriptKind kind) {
    return kind == TranscriptKind::Morning ? "morning" : "closing";
}

const EquityDayRecord* TradingDay::record(std::string_view code) const {
    auto it = records.find(std::string(code));
    return it == records.end() ? nullptr : &it->second;
}

std::optional<std::size_t> MarketDataset::day_index(const Date& date) const {
    auto it = std::lower_bound(days.begin(), days.end(), date,
                               [](const TradingDay& d, const Date& v) { return d.date < v; });
    if (it == days.end() || it->date != date) return std::nullopt;
    return static_cast<std::size_t>(it - days.begin());
}

const TradingDay* MarketDataset::find_day(const Date& date) const {
    auto idx = day_index(date);
    return idx ? &days[*idx] : nullptr;
}

std::size_t MarketDataset::record_count() const {
    std::size_t n = 0;
    for (const auto& d : days) n += d.records.size();
    return n;
}

DatasetPaths DatasetPaths::in_directory(const std::filesystem::path& dir) {
    DatasetPaths p{dir / "companies.csv", dir / "prices.csv", dir / "news.jsonl", std::nullopt};
    if (std::filesystem::exists(dir / "transcripts.jsonl")) p.transcripts = dir / "transcripts.jsonl";
    return p;
}

namespace {

std::optional<double> parse_double(std::string_view s) {
    s = trim(s);
    if (s.empty()) return std::nullopt;
    std::string buf(s);
    char* end = nullptr;
    const double v = std::strtod(buf.c_str(), &end);
    if (end != buf.c_str() + buf.size()) return std::nullopt;
    return v;
}

std::optional<std::int64_t> parse_int(std::string_view s) {
    s = trim(s);
    std::int64_t v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty()) return std::nullopt;
    return v;
}

class RejectSink {
public:
    RejectSink(LoadResult& result, bool strict) : result_(result), strict_(strict) {}

    void reject(const std::filesystem::path& file, std::size_t row, Errc code, std::string reason) {
        Reject r{file.filename().string(), row, code, std::move(reason)};
        if (strict_) throw Error(code, r.file + " row " + std::to_string(row) + ": " + r.reason);
        result_.rejects.push_back(std::move(r));
    }

private:
    LoadResult& result_;
    bool strict_;
};

Universe load_companies(const std::filesystem::path& path, RejectSink& sink) {
    const auto lines = split_lines(read_file(path));
    if (lines.empty() || trim(lines[0]) != "code,name")
        throw Error(Errc::ParseError, path.filename().string() + " row 1: expected header 'code,name'");
    std::vector<Ticker> tickers;
    std::set<std::string> seen;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        if (trim(lines[i]).empty()) continue;
        auto fields = split_csv_line(lines[i]);
        if (fields.size() != 2) {
            sink.reject(path, i + 1, Errc::ParseError, "expected 2 fields");
            continue;
        }
        std::string code(trim(fields[0]));
        std::string name(trim(fields[1]));
        if (!is_valid_ticker_code(code)) {
            sink.reject(path, i + 1, Errc::ParseError, "invalid ticker code '" + code + "'");
            continue;
        }
        if (name.empty()) {
            sink.reject(path, i + 1, Errc::ParseError, "empty company name");
            continue;
        }
        if (!seen.insert(code).second) {
            sink.reject(path, i + 1, Errc::DuplicateRecord, "duplicate ticker code " + code);
            continue;
        }
        tickers.push_back({std::move(code), std::move(name)});
    }
    return Universe(std::move(tickers));
}

std::vector<EquityDayRecord> load_prices(const std::filesystem::path& path, const Universe& universe,
                                         RejectSink& sink) {
    static constexpr std::string_view kHeader = "date,code,open,high,low,close,volume,inst_buy,inst_sell";
    const auto lines = split_lines(read_file(path));
    if (lines.empty() || trim(lines[0]) != kHeader)
        throw Error(Errc::ParseError, path.filename().string() + " row 1: unexpected header");
    std::vector<EquityDayRecord> records;
    std::set<std::pair<std::string, Date>> seen;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        const std::size_t row = i + 1;
        if (trim(lines[i]).empty()) continue;
        auto f = split_csv_line(lines[i]);
        if (f.size() != 9) {
            sink.reject(path, row, Errc::ParseError, "expected 9 fields, got " + std::to_string(f.size()));
            continue;
        }
        EquityDayRecord r;
        auto date = Date::parse(trim(f[0]));
        if (!date) {
            sink.reject(path, row, Errc::ParseError, "bad date '" + f[0] + "'");
            continue;
        }
        r.date = *date;
        r.ticker = std::string(trim(f[1]));
        auto open = parse_double(f[2]), high = parse_double(f[3]), low = parse_double(f[4]),
             close = parse_double(f[5]);
        auto vol = parse_int(f[6]), buy = parse_int(f[7]), sell = parse_int(f[8]);
        if (!open || !high || !low || !close) {
            sink.reject(path, row, Errc::ParseError, "unparseable price");
            continue;
        }
        if (!vol || !buy || !sell) {
            sink.reject(path, row, Errc::ParseError, "unparseable volume");
            continue;
        }
        r.open = *open;
        r.high = *high;
        r.low = *low;
        r.close = *close;
        r.volume = *vol;
        r.inst_buy = *buy;
        r.inst_sell = *sell;
        if (!universe.contains(r.ticker)) {
            sink.reject(path, row, Errc::UnknownTicker, "unknown ticker " + r.ticker);
            continue;
        }
        if (auto why = record_violation(r)) {
            sink.reject(path, row, Errc::ParseError, *why);
            continue;
        }
        if (!seen.emplace(r.ticker, r.date).second) {
            sink.reject(path, row, Errc::DuplicateRecord, r.ticker + " on " + r.date.iso());
            continue;
        }
        records.push_back(std::move(r));
    }
    return records;
}

std::string string_field(const json& obj, const char* key) {
    auto it = obj.find(key);
    if (it == obj.end() || !it->is_string()) throw std::invalid_argument(std::string("missing string key '") + key + "'");
    return it->get<std::string>();
}

TradingDay* day_on_or_after(std::vector<TradingDay>& days, const Date& date) {
    auto it = std::lower_bound(days.begin(), days.end(), date,
                               [](const TradingDay& d, const Date& v) { return d.date < v; });
    return it == days.end() ? nullptr : &*it;
}

void load_news(const std::filesystem::path& path, const Universe& universe, std::vector<TradingDay>& days,
               RejectSink& sink, LoadResult& result) {
    const auto lines = split_lines(read_file(path));
    std::set<std::string> ids;
    for (std::size_t i = 0; i < lines.size(); ++i) {
        const std::size_t row = i + 1;
        if (trim(lines[i]).empty()) continue;
        NewsArticle a;
        try {
            const json obj = json::parse(lines[i]);
            if (!obj.is_object()) throw std::invalid_argument("not a JSON object");
            a.id = string_field(obj, "id");
            auto date = Date::parse(string_field(obj, "date"));
            if (!date) throw std::invalid_argument("bad date");
            a.date = *date;
            a.headline = string_field(obj, "headline");
            a.body = string_field(obj, "body");
            if (auto it = obj.find("tickers"); it != obj.end() && !it->is_null()) {
                if (!it->is_array()) throw std::invalid_argument("tickers must be an array");
                a.tickers_provided = true;
                for (const auto& t : *it) {
                    const auto code = t.get<std::string>();
                    if (!universe.contains(code)) {
                        result.warnings.push_back(path.filename().string() + " row " + std::to_string(row) +
                                                  ": dropped unknown ticker " + code);
                        continue;
                    }
                    if (std::find(a.mentioned_tickers.begin(), a.mentioned_tickers.end(), code) ==
                        a.mentioned_tickers.end())
                        a.mentioned_tickers.push_back(code);
                }
            }
        } catch (const std::exception& e) {
            sink.reject(path, row, Errc::ParseError, e.what());
            continue;
        }
        if (a.id.empty()) {
            sink.reject(path, row, Errc::ParseError, "empty article id");
            continue;
        }
        if (!ids.insert(a.id).second) {
            sink.reject(path, row, Errc::DuplicateRecord, "duplicate article id " + a.id);
            continue;
        }
        TradingDay* day = day_on_or_after(days, a.date);
        if (!day) {
            result.warnings.push_back(path.filename().string() + " row " + std::to_string(row) +
                                      ": article " + a.id + " dated after the last trading day");
            continue;
        }
        day->articles.push_back(std::move(a));
    }
    for (auto& d : days)
        std::sort(d.articles.begin(), d.articles.end(),
                  [](const NewsArticle& x, const NewsArticle& y) { return x.id < y.id; });
}

void load_transcripts(const std::filesystem::path& path, std::vector<TradingDay>& days, RejectSink& sink) {
    const auto lines = split_lines(read_file(path));
    for (std::size_t i = 0; i < lines.size(); ++i) {
        const std::size_t row = i + 1;
        if (trim(lines[i]).empty()) continue;
        Date date;
        TranscriptKind kind;
        std::string text;
        try {
            const json obj = json::parse(lines[i]);
            if (!obj.is_object()) throw std::invalid_argument("not a JSON object");
            auto d = Date::parse(string_field(obj, "date"));
            if (!d) throw std::invalid_argument("bad date");
            date = *d;
            const auto k = string_field(obj, "kind");
            if (k == "morning") kind = TranscriptKind::Morning;
            else if (k == "closing") kind = TranscriptKind::Closing;
            else throw std::invalid_argument("kind must be morning or closing");
            text = string_field(obj, "text");
        } catch (const std::exception& e) {
            sink.reject(path, row, Errc::ParseError, e.what());
            continue;
        }
        auto it = std::lower_bound(days.begin(), days.end(), date,
                                   [](const TradingDay& d, const Date& v) { return d.date < v; });
        if (it == days.end() || it->date != date) {
            sink.reject(path, row, Errc::ParseError, "transcript for non-trading day " + date.iso());
            continue;
        }
        auto& slot = kind == TranscriptKind::Morning ? it->morning_transcript : it->closing_transcript;
        if (slot) {
            sink.reject(path, row, Errc::DuplicateRecord,
                        std::string(to_string(kind)) + " transcript on " + date.iso());
            continue;
        }
        slot = std::move(text);
    }
}

}  // namespace

LoadResult load_dataset(const DatasetPaths& paths, const LoadOptions& options) {
    for (const auto* p : {&paths.companies, &paths.prices, &paths.news})
        if (!std::filesystem::exists(*p)) throw Error(Errc::MissingFile, p->string());
    if (paths.transcripts && !std::filesystem::exists(*paths.transcripts))
        throw Error(Errc::MissingFile, paths.transcripts->string());

    LoadResult result;
    RejectSink sink(result, options.strict);
    result.dataset.universe = load_companies(paths.companies, sink);

    auto records = load_prices(paths.prices, result.dataset.universe, sink);
    std::map<Date, TradingDay> by_date;
    for (auto& r : records) {
        auto& day = by_date[r.date];
        day.date = r.date;
        day.records.emplace(r.ticker, std::move(r));
    }
    auto& days = result.dataset.days;
    days.reserve(by_date.size());
    for (auto& [date, day] : by_date) days.push_back(std::move(day));

    load_news(paths.news, result.dataset.universe, days, sink, result);
    if (paths.transcripts) load_transcripts(*paths.transcripts, days, sink);
    return result;
}

double simple_return(double basis_price, double target_price) {
    if (!(basis_price > 0)) throw Error(Errc::NonPositiveBasis, "basis price " + std::to_string(basis_price));
    return (target_price - basis_price) / basis_price;
}

double intraday_volatility(const EquityDayRecord& record) { return (record.high - record.low) / record.open; }

std::int64_t institutional_imbalance(const EquityDayRecord& record) { return record.inst_buy - record.inst_sell; }

}  // namespace mdeval
