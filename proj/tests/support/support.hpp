// Shared helpers and independent oracles for the test binaries. Oracles here
// deliberately avoid the library's own algorithms.
#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "mdeval/agents.hpp"
#include "mdeval/digest.hpp"
#include "mdeval/market_data.hpp"
#include "mdeval/rng.hpp"
#include "mdeval/scoring.hpp"
#include "mdeval/selection.hpp"

#ifndef MDEVAL_FIXTURE_DIR
#define MDEVAL_FIXTURE_DIR "tests/fixtures"
#endif

namespace testsupport {

namespace fs = std::filesystem;
using namespace mdeval;

inline fs::path fixture_dir() { return fs::path(MDEVAL_FIXTURE_DIR); }

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        static std::atomic<int> counter{0};
        path_ = fs::temp_directory_path() /
                ("mdeval-" + tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
        fs::remove_all(path_);
        fs::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;
    [[nodiscard]] const fs::path& path() const { return path_; }

private:
    fs::path path_;
};

inline std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void spit(const fs::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary);
    out << text;
}

inline std::vector<std::string> lines_of(const std::string& text) {
    std::vector<std::string> out;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) out.push_back(line);
    return out;
}

inline Date day_n(int n) { return Date::from_days_since_epoch(Date{2024, 1, 1}.days_since_epoch() + n); }

inline EquityDayRecord make_record(const std::string& code, Date date, double open, double close,
                                   std::int64_t volume = 1000, std::int64_t buy = 0, std::int64_t sell = 0) {
    EquityDayRecord r;
    r.ticker = code;
    r.date = date;
    r.open = open;
    r.close = close;
    r.high = std::max(open, close) * 1.01;
    r.low = std::min(open, close) * 0.99;
    r.volume = volume;
    r.inst_buy = buy;
    r.inst_sell = sell;
    return r;
}

inline Universe make_universe(std::size_t n) {
    std::vector<Ticker> t;
    for (std::size_t i = 0; i < n; ++i) t.push_back({"T" + std::to_string(100 + i), "Company " + std::to_string(100 + i)});
    return Universe(t);
}

// Small in-memory dataset; each record is missing with probability `p_missing`.
inline MarketDataset random_dataset(std::mt19937_64& gen, std::size_t n_tickers, std::size_t n_days,
                                    double p_missing) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::uniform_real_distribution<double> price(5.0, 200.0);
    std::uniform_int_distribution<int> pick_band(0, 5);
    MarketDataset ds;
    ds.universe = make_universe(n_tickers);
    for (std::size_t d = 0; d < n_days; ++d) {
        TradingDay day;
        day.date = day_n(static_cast<int>(d));
        for (const auto& t : ds.universe.tickers()) {
            if (u(gen) < p_missing) continue;
            const double open = std::round(price(gen) * 100) / 100;
            // Mix in exact threshold hits and tiny moves.
            static const double kMoves[] = {0.0055, -0.0050, 0.02, -0.03, 0.0, 0.001};
            double move = kMoves[pick_band(gen)];
            if (u(gen) < 0.5) move = (u(gen) - 0.5) * 0.06;
            const double close = open * (1.0 + move);
            day.records.emplace(t.code, make_record(t.code, day.date, open, close));
        }
        ds.days.push_back(std::move(day));
    }
    return ds;
}

// --- scoring oracle ---------------------------------------------------------

struct OracleTally {
    std::size_t n_buy = 0, n_sell = 0, n_correct = 0, n_unscorable = 0;
};

// Straight loop over every entry, recomputing returns from raw prices.
inline std::map<std::pair<std::string, std::string>, OracleTally> oracle_score(
    const std::vector<DecisionSet>& decisions, const std::map<std::string, Digest>& digests,
    const MarketDataset& ds) {
    std::map<std::pair<std::string, std::string>, OracleTally> out;
    for (const auto& d : decisions) {
        const Digest& dg = digests.at(d.digest_id);
        const std::string cond = std::string(to_string(dg.kind)) + "|" +
                                 (dg.pipeline == Pipeline::Journalist ? std::string("journalist") : dg.generator) + "|" +
                                 std::string(to_string(dg.pipeline));
        auto& t = out[{d.investor_id, cond}];
        std::size_t day_idx = 0;
        while (ds.days[day_idx].date != dg.date) ++day_idx;
        for (int side = 0; side < 2; ++side) {
            const auto& mine = side == 0 ? d.buys : d.sells;
            const auto& other = side == 0 ? d.sells : d.buys;
            std::vector<std::string> seen;
            for (const auto& code : mine) {
                bool known = false;
                for (const auto& tk : ds.universe.tickers()) known = known || tk.code == code;
                const bool overlap = std::find(other.begin(), other.end(), code) != other.end();
                const bool repeat = std::find(seen.begin(), seen.end(), code) != seen.end();
                seen.push_back(code);
                if (!known || overlap || repeat) continue;
                (side == 0 ? t.n_buy : t.n_sell)++;
                double basis = 0, target = 0;
                bool ok = false;
                auto rec = ds.days[day_idx].records.find(code);
                if (rec != ds.days[day_idx].records.end()) {
                    if (dg.kind == DigestKind::MorningBrief) {
                        basis = rec->second.open;
                        target = rec->second.close;
                        ok = true;
                    } else if (day_idx + 1 < ds.days.size()) {
                        auto next = ds.days[day_idx + 1].records.find(code);
                        if (next != ds.days[day_idx + 1].records.end()) {
                            basis = rec->second.close;
                            target = next->second.open;
                            ok = true;
                        }
                    }
                }
                if (!ok) {
                    ++t.n_unscorable;
                    continue;
                }
                const double r = (target - basis) / basis;
                if ((side == 0 && r > 0.0055) || (side == 1 && r < -0.0050)) ++t.n_correct;
            }
        }
    }
    return out;
}

inline std::string condition_key(const Condition& c) {
    return std::string(to_string(c.kind)) + "|" + c.source + "|" + std::string(to_string(c.pipeline));
}

// --- top-k oracle -------------------------------------------------------------

// Full sort of every record by (value desc, code asc), then truncation.
inline std::vector<std::string> oracle_top_k(const TradingDay& day, Metric metric, std::size_t k) {
    std::vector<std::pair<double, std::string>> all;
    for (const auto& [code, r] : day.records) {
        double v = 0;
        if (metric == Metric::Volatility) v = (r.high - r.low) / r.open;
        if (metric == Metric::Volume) v = static_cast<double>(r.volume);
        if (metric == Metric::AbsImbalance) v = std::fabs(static_cast<double>(r.inst_buy - r.inst_sell));
        all.emplace_back(v, code);
    }
    std::sort(all.begin(), all.end(), [](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first > b.first;
        return a.second < b.second;
    });
    std::vector<std::string> out;
    for (std::size_t i = 0; i < all.size() && i < k; ++i) out.push_back(all[i].second);
    return out;
}

// Day whose records share metric values in blocks, so ties are common.
inline TradingDay tie_heavy_day(std::mt19937_64& gen, const Universe& u, Date date) {
    std::uniform_int_distribution<int> bucket(1, 4);
    std::uniform_int_distribution<int> keep(0, 9);
    TradingDay day;
    day.date = date;
    for (const auto& t : u.tickers()) {
        if (keep(gen) == 0) continue;
        const double open = 100.0;
        const double close = 100.0 + bucket(gen);
        auto r = make_record(t.code, date, open, close, 1000 * bucket(gen), 100 * bucket(gen), 100 * bucket(gen));
        r.high = close + bucket(gen);
        r.low = open - bucket(gen);
        day.records.emplace(t.code, r);
    }
    return day;
}

// Binomial bound helper: |x - np| <= z sqrt(np(1-p)).
inline bool within_sigma(double successes, double n, double p, double z) {
    const double sd = std::sqrt(n * p * (1.0 - p));
    return std::fabs(successes - n * p) <= z * sd;
}

}  // namespace testsupport
