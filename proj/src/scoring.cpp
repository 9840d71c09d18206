#include "mdeval/scoring.hpp"

#include <cmath>
#include <map>
#include <set>

namespace mdeval {

void ScoringConfig::validate() const {
    if (!(rise_threshold > 0) || !(fall_threshold > 0))
        throw Error(Errc::InvalidConfig, "scoring thresholds must be positive");
}

std::string_view to_string(MovementLabel label) {
    switch (label) {
        case MovementLabel::Fall: return "fall";
        case MovementLabel::Neutral: return "neutral";
        case MovementLabel::Rise: return "rise";
    }
    return "";
}

MovementLabel label_return(double r, const ScoringConfig& config) {
    if (r > config.rise_threshold) return MovementLabel::Rise;
    if (r < -config.fall_threshold) return MovementLabel::Fall;
    return MovementLabel::Neutral;
}

std::optional<double> realized_return(const std::string& ticker, const Date& date, Horizon horizon,
                                      const MarketDataset& dataset) {
    if (!dataset.universe.contains(ticker)) throw Error(Errc::UnknownTicker, ticker);
    const auto idx = dataset.day_index(date);
    if (!idx) throw Error(Errc::DateOutOfRange, date.iso());
    const auto* rec = dataset.days[*idx].record(ticker);
    if (!rec) return std::nullopt;
    if (horizon == Horizon::OpenToClose) return simple_return(rec->open, rec->close);
    if (*idx + 1 >= dataset.days.size()) return std::nullopt;
    const auto* next = dataset.days[*idx + 1].record(ticker);
    if (!next) return std::nullopt;
    return simple_return(rec->close, next->open);
}

Condition condition_of(const Digest& digest) {
    return {digest.kind, digest.pipeline == Pipeline::Journalist ? "journalist" : digest.generator, digest.pipeline};
}

namespace {

struct Tally {
    std::size_t n_buy = 0, n_sell = 0, n_correct = 0, n_unscorable = 0;
    std::map<Date, std::pair<std::size_t, std::size_t>> per_day;  // correct, scorable
};

}  // namespace

Evaluation evaluate_sessions(const std::vector<DecisionSet>& decisions, const DigestIndex& digests,
                             const MarketDataset& dataset, const ScoringConfig& config, Averaging averaging) {
    config.validate();
    Evaluation out;
    std::map<std::pair<std::string, Condition>, Tally> tallies;
    for (const auto& d : decisions) {
        const auto it = digests.find(d.digest_id);
        if (it == digests.end())
            throw Error(Errc::DanglingDigestReference, d.investor_id + " -> " + d.digest_id);
        const Digest& digest = it->second;
        auto& tally = tallies[{d.investor_id, condition_of(digest)}];
        const Horizon horizon = horizon_for(digest.kind);

        const std::set<std::string> buy_set(d.buys.begin(), d.buys.end());
        const std::set<std::string> sell_set(d.sells.begin(), d.sells.end());
        auto score_side = [&](const std::vector<std::string>& codes, const std::set<std::string>& other, Side side) {
            std::set<std::string> seen;
            for (const auto& code : codes) {
                if (!dataset.universe.contains(code) || other.count(code) || !seen.insert(code).second) {
                    ++out.dropped_entries;
                    out.warnings.push_back("dropped " + code + " from " + d.investor_id + "/" + d.digest_id);
                    continue;
                }
                (side == Side::Buy ? tally.n_buy : tally.n_sell)++;
                const auto r = realized_return(code, digest.date, horizon, dataset);
                if (!r) {
                    ++tally.n_unscorable;
                    continue;
                }
                auto& day = tally.per_day[digest.date];
                ++day.second;
                if (score_decision(side, label_return(*r, config)) == Verdict::Correct) {
                    ++tally.n_correct;
                    ++day.first;
                }
            }
        };
        score_side(d.buys, sell_set, Side::Buy);
        score_side(d.sells, buy_set, Side::Sell);
    }

    for (const auto& [key, t] : tallies) {
        SessionScore s;
        s.investor_id = key.first;
        s.condition = key.second;
        s.n_buy = t.n_buy;
        s.n_sell = t.n_sell;
        s.n_correct = t.n_correct;
        s.n_unscorable = t.n_unscorable;
        if (averaging == Averaging::Micro) {
            if (s.scorable() > 0) s.accuracy = static_cast<double>(s.n_correct) / static_cast<double>(s.scorable());
        } else {
            double sum = 0;
            std::size_t days = 0;
            for (const auto& [date, cs] : t.per_day) {
                if (cs.second == 0) continue;
                sum += static_cast<double>(cs.first) / static_cast<double>(cs.second);
                ++days;
            }
            if (days > 0) s.accuracy = sum / static_cast<double>(days);
        }
        out.scores.push_back(std::move(s));
    }
    return out;
}

std::string scores_to_csv(const std::vector<SessionScore>& scores) {
    std::string out = "investor,kind,source,pipeline,n_buy,n_sell,n_unscorable,n_correct,accuracy\n";
    for (const auto& s : scores) {
        out += csv_escape(s.investor_id) + "," + std::string(to_string(s.condition.kind)) + "," +
               csv_escape(s.condition.source) + "," + std::string(to_string(s.condition.pipeline)) + "," +
               std::to_string(s.n_buy) + "," + std::to_string(s.n_sell) + "," + std::to_string(s.n_unscorable) +
               "," + std::to_string(s.n_correct) + "," + (s.accuracy ? fixed(*s.accuracy, 6) : std::string()) + "\n";
    }
    return out;
}

std::vector<SessionScore> scores_from_csv(std::string_view csv) {
    std::vector<SessionScore> scores;
    const auto lines = split_lines(csv);
    for (std::size_t i = 1; i < lines.size(); ++i) {
        if (trim(lines[i]).empty()) continue;
        const auto f = split_csv_line(lines[i]);
        if (f.size() != 9) throw Error(Errc::ParseError, "scores row " + std::to_string(i + 1));
        SessionScore s;
        s.investor_id = f[0];
        auto kind = parse_digest_kind(f[1]);
        auto pipeline = parse_pipeline(f[3]);
        if (!kind || !pipeline) throw Error(Errc::ParseError, "scores row " + std::to_string(i + 1));
        s.condition = {*kind, f[2], *pipeline};
        s.n_buy = std::stoul(f[4]);
        s.n_sell = std::stoul(f[5]);
        s.n_unscorable = std::stoul(f[6]);
        s.n_correct = std::stoul(f[7]);
        if (!f[8].empty()) s.accuracy = std::stod(f[8]);
        scores.push_back(std::move(s));
    }
    return scores;
}

}  // namespace mdeval
