#include "mdeval/synthetic.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <sstream>
#include <string>

#include "mdeval/error.hpp"
#include "mdeval/io.hpp"
#include "mdeval/market_data.hpp"
#include "mdeval/rng.hpp"
#include "mdeval/scoring.hpp"

namespace mdeval {

namespace {

constexpr std::array<std::string_view, 40> kFirstWords = {
    "Amber",   "Birch",   "Cobalt",  "Delta",   "Ember",   "Falcon",  "Granite", "Harbor",
    "Indigo",  "Juniper", "Kestrel", "Lumen",   "Maple",   "Nimbus",  "Onyx",    "Pinnacle",
    "Quartz",  "Raven",   "Sierra",  "Tidal",   "Umber",   "Vertex",  "Willow",  "Xenon",
    "Yarrow",  "Zephyr",  "Aurora",  "Basalt",  "Cedar",   "Dune",    "Elm",     "Fjord",
    "Glacier", "Heron",   "Iris",    "Jasper",  "Kelp",    "Larch",   "Meadow",  "Nova"};

constexpr std::array<std::string_view, 15> kSecondWords = {
    "Holdings", "Electronics", "Materials", "Logistics", "Foods",    "Textiles", "Optics", "Robotics",
    "Chemicals", "Shipping",   "Semiconductor", "Biotech", "Power", "Steel", "Networks"};

constexpr std::array<std::string_view, 8> kTopics = {
    "quarterly revenue", "capacity expansion", "a supply agreement", "export orders",
    "a management change", "pricing pressure",  "a new product line", "inventory levels"};

constexpr double kBandMargin = 1e-4;
constexpr double kMaxMove = 0.04;

double round4(double v) { return std::round(v * 10000.0) / 10000.0; }

struct Company {
    std::string code;
    std::string name;
};

std::vector<Company> make_companies(Rng& rng, std::size_t n) {
    std::vector<std::size_t> combos(kFirstWords.size() * kSecondWords.size());
    for (std::size_t i = 0; i < combos.size(); ++i) combos[i] = i;
    rng.shuffle(combos);
    std::vector<int> codes;
    for (int c = 1101; c <= 9999; ++c) codes.push_back(c);
    rng.shuffle(codes);
    std::vector<Company> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto combo = combos[i];
        out[i].name = std::string(kFirstWords[combo / kSecondWords.size()]) + " " +
                      std::string(kSecondWords[combo % kSecondWords.size()]);
        out[i].code = std::to_string(codes[i]);
    }
    std::sort(out.begin(), out.end(), [](const Company& a, const Company& b) { return a.code < b.code; });
    return out;
}

std::vector<Date> trading_dates(Date start, std::size_t n) {
    std::vector<Date> out;
    long d = start.days_since_epoch();
    while (out.size() < n) {
        const Date date = Date::from_days_since_epoch(d++);
        if (date.weekday() < 5) out.push_back(date);
    }
    return out;
}

// Return strictly inside the band of `label`, away from the thresholds.
double draw_return(Rng& rng, MovementLabel label, const ScoringConfig& cfg) {
    switch (label) {
        case MovementLabel::Rise: return rng.uniform(cfg.rise_threshold + kBandMargin, kMaxMove);
        case MovementLabel::Fall: return rng.uniform(-kMaxMove, -cfg.fall_threshold - kBandMargin);
        case MovementLabel::Neutral: break;
    }
    return rng.uniform(-cfg.fall_threshold + kBandMargin, cfg.rise_threshold - kBandMargin);
}

}  // namespace

SyntheticSummary make_synthetic_market(const SyntheticSpec& spec, const std::filesystem::path& dir) {
    if (!(spec.rise_rate >= 0 && spec.fall_rate >= 0 && spec.rise_rate + spec.fall_rate <= 1.0))
        throw Error(Errc::InvalidRates, "rise_rate and fall_rate must be non-negative and sum to at most 1");
    if (spec.n_tickers == 0 || spec.n_days == 0) throw Error(Errc::InvalidConfig, "n_tickers and n_days must be positive");
    if (spec.n_tickers > kFirstWords.size() * kSecondWords.size())
        throw Error(Errc::InvalidConfig, "n_tickers exceeds the synthetic name pool");

    const ScoringConfig bands;
    Rng names_rng(derive_seed(spec.seed, "synth/names"));
    Rng price_rng(derive_seed(spec.seed, "synth/prices"));
    Rng flow_rng(derive_seed(spec.seed, "synth/flows"));
    Rng text_rng(derive_seed(spec.seed, "synth/text"));

    const auto companies = make_companies(names_rng, spec.n_tickers);
    SyntheticSummary summary;
    summary.dates = trading_dates(spec.start, spec.n_days);

    std::filesystem::create_directories(dir);
    {
        std::ostringstream out;
        out << "code,name\n";
        for (const auto& c : companies) out << c.code << ',' << csv_escape(c.name) << '\n';
        write_file(dir / "companies.csv", out.str());
    }

    // returns[day][ticker], open -> close.
    std::vector<std::vector<double>> returns(spec.n_days, std::vector<double>(spec.n_tickers));
    std::ostringstream prices;
    prices << "date,code,open,high,low,close,volume,inst_buy,inst_sell\n";
    std::vector<double> last_close(spec.n_tickers);
    for (auto& p : last_close) p = round4(price_rng.uniform(20.0, 500.0));

    for (std::size_t d = 0; d < spec.n_days; ++d) {
        const std::string date = summary.dates[d].iso();
        for (std::size_t t = 0; t < spec.n_tickers; ++t) {
            const double u = price_rng.uniform();
            const MovementLabel label = u < spec.rise_rate                    ? MovementLabel::Rise
                                        : u < spec.rise_rate + spec.fall_rate ? MovementLabel::Fall
                                                                              : MovementLabel::Neutral;
            double gap = std::clamp(price_rng.normal(0.0, 0.004), -0.03, 0.03);
            if (last_close[t] < 5.0) gap = 0.5;
            if (last_close[t] > 5000.0) gap = -0.3;
            const double open = round4(last_close[t] * (1.0 + gap));
            double close = 0;
            double r = 0;
            do {
                close = round4(open * (1.0 + draw_return(price_rng, label, bands)));
                r = simple_return(open, close);
            } while (label_return(r, bands) != label);
            returns[d][t] = r;
            const double wick_hi = std::abs(price_rng.normal(0.0, 0.004));
            const double wick_lo = std::abs(price_rng.normal(0.0, 0.004));
            const double high = std::ceil(std::max(open, close) * (1.0 + wick_hi) * 10000.0) / 10000.0;
            const double low = std::floor(std::min(open, close) * (1.0 - wick_lo) * 10000.0) / 10000.0;
            last_close[t] = close;

            // Pareto-tailed volume; institutions trade a random slice on each side.
            const double pareto = std::pow(1.0 - flow_rng.uniform(), -1.0 / 1.5);
            const auto volume = static_cast<std::int64_t>(std::llround(20000.0 * pareto * flow_rng.lognormal(0.0, 0.5)));
            const auto inst_buy = static_cast<std::int64_t>(std::llround(volume * flow_rng.uniform(0.0, 0.35)));
            const auto inst_sell = static_cast<std::int64_t>(std::llround(volume * flow_rng.uniform(0.0, 0.35)));

            prices << date << ',' << companies[t].code << ',' << fixed(open, 4) << ',' << fixed(high, 4) << ','
                   << fixed(low, 4) << ',' << fixed(close, 4) << ',' << volume << ',' << inst_buy << ','
                   << inst_sell << '\n';
            ++summary.records;
            if (label == MovementLabel::Rise) ++summary.rise_labels;
            if (label == MovementLabel::Fall) ++summary.fall_labels;
        }
    }
    write_file(dir / "prices.csv", prices.str());

    auto pick = [&](std::size_t n) {
        std::vector<std::size_t> idx(spec.n_tickers);
        for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
        text_rng.shuffle(idx);
        idx.resize(std::min(n, idx.size()));
        return idx;
    };

    std::ostringstream news;
    for (std::size_t d = 0; d < spec.n_days; ++d) {
        const Date& date = summary.dates[d];
        for (std::size_t a = 0; a < spec.articles_per_day; ++a) {
            const auto who = pick(2);
            const auto& lead = companies[who[0]];
            const auto topic = kTopics[text_rng.below(kTopics.size())];
            Date stamp = date;
            // The first Monday article is dated on the weekend before.
            if (a == 0 && date.weekday() == 0) stamp = Date::from_days_since_epoch(date.days_since_epoch() - 2);
            json j;
            j["id"] = "n" + std::to_string(d * 100 + a + 1000000).substr(1);
            j["date"] = stamp.iso();
            j["headline"] = lead.name + " updates investors on " + std::string(topic);
            std::string body = lead.name + " said " + std::string(topic) + " shaped its outlook.";
            std::vector<std::string> tickers{lead.code};
            if (who.size() > 1 && text_rng.bernoulli(0.5)) {
                body += " Analysts also pointed to " + companies[who[1]].name + ".";
                tickers.push_back(companies[who[1]].code);
            }
            j["body"] = body;
            if (text_rng.bernoulli(0.5)) j["tickers"] = tickers;
            news << j.dump() << '\n';
        }
    }
    write_file(dir / "news.jsonl", news.str());

    std::ostringstream transcripts;
    for (std::size_t d = 0; d < spec.n_days; ++d) {
        const std::string date = summary.dates[d].iso();
        {
            std::string text = "Morning notes for " + date + "\n";
            for (auto t : pick(spec.transcript_mentions)) {
                const double prior = d > 0 ? returns[d - 1][t] : 0.0;
                text += companies[t].name + " (" + companies[t].code + ") moved " + signed_percent(prior) +
                        " in the previous session.\n";
            }
            transcripts << json{{"date", date}, {"kind", "morning"}, {"text", text}}.dump() << '\n';
        }
        {
            std::string text = "Closing notes for " + date + "\n";
            for (auto t : pick(spec.transcript_mentions)) {
                text += companies[t].name + " (" + companies[t].code + ") ended the day " +
                        signed_percent(returns[d][t]) + " from the open.\n";
            }
            transcripts << json{{"date", date}, {"kind", "closing"}, {"text", text}}.dump() << '\n';
        }
    }
    write_file(dir / "transcripts.jsonl", transcripts.str());
    return summary;
}

}  // namespace mdeval
