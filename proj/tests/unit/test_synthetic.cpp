#include <doctest.h>

#include "mdeval/synthetic.hpp"
#include "support.hpp"

using namespace mdeval;
using namespace testsupport;

namespace {

// Open-to-close returns read straight off prices.csv, by column name.
std::vector<double> returns_in(const fs::path& dir) {
    const auto rows = lines_of(slurp(dir / "prices.csv"));
    REQUIRE(!rows.empty());
    std::vector<std::string> header;
    std::stringstream hs(rows[0]);
    for (std::string f; std::getline(hs, f, ',');) header.push_back(f);
    const auto col = [&](const char* name) {
        return static_cast<std::size_t>(std::find(header.begin(), header.end(), name) - header.begin());
    };
    const std::size_t o = col("open"), c = col("close");
    REQUIRE(o < header.size());
    REQUIRE(c < header.size());
    std::vector<double> out;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        std::vector<std::string> f;
        std::stringstream ss(rows[i]);
        for (std::string x; std::getline(ss, x, ',');) f.push_back(x);
        const double open = std::stod(f[o]), close = std::stod(f[c]);
        out.push_back((close - open) / open);
    }
    return out;
}

}  // namespace

TEST_CASE("zero rise rate never crosses the rise threshold") {
    TempDir dir("synth");
    SyntheticSpec spec;
    spec.rise_rate = 0;
    spec.fall_rate = 0.5;
    const auto sum = make_synthetic_market(spec, dir.path());
    CHECK(sum.rise_labels == 0);
    const auto r = returns_in(dir.path());
    CHECK(r.size() == 50 * 30);
    for (double x : r) REQUIRE(x <= 0.0055);
}

TEST_CASE("same seed, same files; different seed, different prices") {
    TempDir a("synth"), b("synth"), c("synth");
    SyntheticSpec spec;
    spec.n_tickers = 20;
    spec.n_days = 10;
    make_synthetic_market(spec, a.path());
    make_synthetic_market(spec, b.path());
    spec.seed = 2;
    make_synthetic_market(spec, c.path());
    for (const char* f : {"companies.csv", "prices.csv", "news.jsonl", "transcripts.jsonl"}) {
        CHECK(slurp(a.path() / f) == slurp(b.path() / f));
        CHECK_FALSE(slurp(a.path() / f).empty());
    }
    CHECK(slurp(a.path() / "prices.csv") != slurp(c.path() / "prices.csv"));
}

TEST_CASE("rise fraction within 3 sigma of the requested rate") {
    TempDir dir("synth");
    SyntheticSpec spec;
    spec.seed = 99;
    spec.n_tickers = 50;
    spec.n_days = 200;
    spec.rise_rate = 0.4;
    spec.fall_rate = 0.25;
    const auto sum = make_synthetic_market(spec, dir.path());
    const auto r = returns_in(dir.path());
    REQUIRE(r.size() == 10000);
    std::size_t rises = 0, falls = 0;
    for (double x : r) {
        rises += x > 0.0055;
        falls += x < -0.0050;
    }
    CHECK(rises == sum.rise_labels);
    CHECK(falls == sum.fall_labels);
    CHECK(within_sigma(static_cast<double>(rises), 10000, 0.4, 3));
    CHECK(within_sigma(static_cast<double>(falls), 10000, 0.25, 3));
}

TEST_CASE("synthetic output loads cleanly") {
    TempDir dir("synth");
    SyntheticSpec spec;
    spec.n_tickers = 30;
    spec.n_days = 12;
    const auto sum = make_synthetic_market(spec, dir.path());
    const auto loaded = load_dataset(DatasetPaths::in_directory(dir.path()), {true});
    CHECK(loaded.rejects.empty());
    CHECK(loaded.dataset.universe.size() == 30);
    REQUIRE(loaded.dataset.days.size() == 12);
    CHECK(loaded.dataset.record_count() == sum.records);
    for (std::size_t i = 0; i < loaded.dataset.days.size(); ++i) {
        const auto& d = loaded.dataset.days[i];
        CHECK(d.date == sum.dates[i]);
        CHECK(d.date.weekday() < 5);
        CHECK(d.morning_transcript);
        CHECK(d.closing_transcript);
        CHECK_FALSE(d.articles.empty());
    }
}

TEST_CASE("invalid synthetic specs") {
    TempDir dir("synth");
    auto code_of = [&](SyntheticSpec s) {
        try {
            make_synthetic_market(s, dir.path());
        } catch (const Error& e) {
            return e.code();
        }
        return Errc::ParseError;
    };
    SyntheticSpec s;
    s.rise_rate = 0.7;
    s.fall_rate = 0.5;
    CHECK(code_of(s) == Errc::InvalidRates);
    s.rise_rate = -0.1;
    s.fall_rate = 0.1;
    CHECK(code_of(s) == Errc::InvalidRates);
    s = {};
    s.n_tickers = 0;
    CHECK(code_of(s) == Errc::InvalidConfig);
    s = {};
    s.n_tickers = 601;
    CHECK(code_of(s) == Errc::InvalidConfig);
}
