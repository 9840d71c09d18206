#include <doctest.h>

#include <random>

#include "support.hpp"

using namespace mdeval;
using namespace testsupport;

namespace {

void write_set(const fs::path& dir, const std::string& companies, const std::string& prices,
               const std::string& news = "", std::optional<std::string> transcripts = std::nullopt) {
    spit(dir / "companies.csv", companies);
    spit(dir / "prices.csv", prices);
    spit(dir / "news.jsonl", news);
    if (transcripts) spit(dir / "transcripts.jsonl", *transcripts);
}

const std::string kCompanies = "code,name\nAAA,Alpha Corp\nBBB,Beta Inc\nCCC,\"Gamma, Ltd\"\n";
const std::string kHeader = "date,code,open,high,low,close,volume,inst_buy,inst_sell\n";

std::string three_by_two() {
    return kHeader +
           "2024-03-04,AAA,10,11,9,10.5,100,10,5\n"
           "2024-03-04,BBB,20,21,19,19.5,200,0,0\n"
           "2024-03-04,CCC,30,31,29,30,300,7,9\n"
           "2024-03-05,AAA,10.5,11,10,10.7,110,1,2\n"
           "2024-03-05,BBB,19.5,20,19,19.9,210,3,4\n"
           "2024-03-05,CCC,30,30.5,29.5,30.1,310,5,6\n";
}

}  // namespace

TEST_CASE("well-formed 3 tickers x 2 days loads completely") {
    TempDir dir("md");
    write_set(dir.path(), kCompanies, three_by_two());
    const auto r = load_dataset(DatasetPaths::in_directory(dir.path()));
    CHECK(r.rejects.empty());
    REQUIRE(r.dataset.days.size() == 2);
    CHECK(r.dataset.days[0].records.size() == 3);
    CHECK(r.dataset.days[1].records.size() == 3);
    CHECK(r.dataset.universe.size() == 3);
    CHECK(r.dataset.universe.tickers()[2].name == "Gamma, Ltd");
    CHECK(r.dataset.universe.tickers()[0].code == "AAA");  // companies-file order
}

TEST_CASE("high below low is rejected with the row number") {
    TempDir dir("md");
    write_set(dir.path(), kCompanies, kHeader + "2024-03-04,AAA,10,9,11,10,100,0,0\n2024-03-04,BBB,20,21,19,20,1,0,0\n");
    const auto r = load_dataset(DatasetPaths::in_directory(dir.path()));
    REQUIRE(r.rejects.size() == 1);
    CHECK(r.rejects[0].code == Errc::ParseError);
    CHECK(r.rejects[0].row == 2);
    CHECK(r.rejects[0].file == "prices.csv");
    CHECK(r.dataset.record_count() == 1);

    try {
        load_dataset(DatasetPaths::in_directory(dir.path()), {true});
        FAIL("strict mode should throw");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::ParseError);
        CHECK(std::string(e.what()).find("row 2") != std::string::npos);
    }
}

TEST_CASE("row-level rejects carry their own categories") {
    TempDir dir("md");
    write_set(dir.path(), kCompanies,
              kHeader +
                  "2024-03-04,AAA,10,11,9,10,100,0,0\n"
                  "2024-03-04,AAA,10,11,9,10,100,0,0\n"     // duplicate
                  "2024-03-04,ZZZ,10,11,9,10,100,0,0\n"     // unknown ticker
                  "2024-03-04,BBB,0,11,9,10,100,0,0\n"      // non-positive price
                  "2024-03-04,CCC,10,11,9,10,-1,0,0\n"      // negative volume
                  "2024-13-04,CCC,10,11,9,10,1,0,0\n"       // bad date
                  "2024-03-04,CCC,10,11,9,10,1,0\n"         // short row
                  "2024-03-04,CCC,10,11,9.5,9.4,1,0,0\n"    // low above close
                  "2024-03-04,CCC,abc,11,9,10,1,0,0\n");    // not a number
    const auto r = load_dataset(DatasetPaths::in_directory(dir.path()));
    REQUIRE(r.rejects.size() == 8);
    CHECK(r.rejects[0].code == Errc::DuplicateRecord);
    CHECK(r.rejects[0].row == 3);
    CHECK(r.rejects[1].code == Errc::UnknownTicker);
    for (std::size_t i = 2; i < r.rejects.size(); ++i) CHECK(r.rejects[i].code == Errc::ParseError);
    CHECK(r.dataset.record_count() == 1);
}

TEST_CASE("missing files and bad headers are fatal") {
    TempDir dir("md");
    CHECK_THROWS_AS(load_dataset(DatasetPaths::in_directory(dir.path())), Error);
    try {
        load_dataset(DatasetPaths::in_directory(dir.path()));
    } catch (const Error& e) {
        CHECK(e.code() == Errc::MissingFile);
    }
    write_set(dir.path(), "ticker,name\nAAA,A\n", three_by_two());
    try {
        load_dataset(DatasetPaths::in_directory(dir.path()));
        FAIL("bad header accepted");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::ParseError);
    }
    write_set(dir.path(), "code,name\nAAA,A\nAAA,B\n", three_by_two());
    const auto r = load_dataset(DatasetPaths::in_directory(dir.path()));
    CHECK(r.dataset.universe.size() == 1);
    CHECK(!r.rejects.empty());
}

TEST_CASE("ticker codes follow the allowed alphabet") {
    CHECK(is_valid_ticker_code("2330"));
    CHECK(is_valid_ticker_code("BRK.B"));
    CHECK(is_valid_ticker_code("ABCDEFGHIJKL"));
    CHECK_FALSE(is_valid_ticker_code(""));
    CHECK_FALSE(is_valid_ticker_code("abc"));
    CHECK_FALSE(is_valid_ticker_code("ABCDEFGHIJKLM"));
    CHECK_FALSE(is_valid_ticker_code("A-B"));
    CHECK_THROWS_AS(Universe({{"AAA", "a"}, {"AAA", "b"}}), Error);
}

TEST_CASE("news and transcripts attach to trading days") {
    TempDir dir("md");
    // 2024-03-02 is a Saturday; its article belongs to Monday's session.
    const std::string news =
        R"({"id":"n2","date":"2024-03-04","headline":"h2","body":"b","tickers":["AAA","QQQ"]})" "\n"
        R"({"id":"n1","date":"2024-03-02","headline":"h1","body":"b"})" "\n"
        R"({"id":"n3","date":"2024-03-09","headline":"late","body":"b"})" "\n"
        R"({"id":"n2","date":"2024-03-05","headline":"dup","body":"b"})" "\n"
        R"({"id":"n4","date":"2024-03-05","headline":"h4"})" "\n";
    const std::string transcripts =
        R"({"date":"2024-03-04","kind":"morning","text":"Good morning\r\nAlpha Corp"})" "\n"
        R"({"date":"2024-03-05","kind":"closing","text":"Close"})" "\n"
        R"({"date":"2024-03-06","kind":"closing","text":"holiday"})" "\n"
        R"({"date":"2024-03-04","kind":"evening","text":"x"})" "\n";
    write_set(dir.path(), kCompanies, three_by_two(), news, transcripts);
    const auto r = load_dataset(DatasetPaths::in_directory(dir.path()));
    const auto& d0 = r.dataset.days[0];
    REQUIRE(d0.articles.size() == 2);
    CHECK(d0.articles[0].id == "n1");
    CHECK_FALSE(d0.articles[0].tickers_provided);
    CHECK(d0.articles[1].mentioned_tickers == std::vector<std::string>{"AAA"});
    CHECK(d0.articles[1].tickers_provided);
    CHECK(r.dataset.days[1].articles.empty());
    CHECK(d0.morning_transcript == std::optional<std::string>("Good morning\r\nAlpha Corp"));
    CHECK_FALSE(d0.closing_transcript);
    CHECK(r.dataset.days[1].closing_transcript == std::optional<std::string>("Close"));
    // duplicate id, missing body, non-trading-day transcript, bad kind
    CHECK(r.rejects.size() == 4);
    // unknown ticker in an article, article after the last day
    CHECK(r.warnings.size() == 2);
}

TEST_CASE("bundled fixture: 1,500 records, 0 rejects, counts match a line count") {
    const auto dir = fixture_dir() / "synth50x30";
    const auto r = load_dataset(DatasetPaths::in_directory(dir));
    CHECK(r.rejects.empty());
    CHECK(r.warnings.empty());
    CHECK(r.dataset.record_count() == 1500);
    // Independent count: non-header lines of each file.
    const auto price_lines = lines_of(slurp(dir / "prices.csv"));
    const auto company_lines = lines_of(slurp(dir / "companies.csv"));
    CHECK(price_lines.size() - 1 == r.dataset.record_count());
    CHECK(company_lines.size() - 1 == r.dataset.universe.size());
    std::set<std::string> dates;
    for (std::size_t i = 1; i < price_lines.size(); ++i) dates.insert(price_lines[i].substr(0, 10));
    CHECK(dates.size() == r.dataset.days.size());
    std::size_t articles = 0;
    for (const auto& d : r.dataset.days) articles += d.articles.size();
    CHECK(articles == lines_of(slurp(dir / "news.jsonl")).size());
    for (const auto& d : r.dataset.days) {
        CHECK(d.morning_transcript);
        CHECK(d.closing_transcript);
        for (const auto& [code, rec] : d.records) {
            CHECK(rec.low <= rec.open);
            CHECK(rec.open <= rec.high);
            CHECK(rec.low <= rec.close);
            CHECK(rec.close <= rec.high);
        }
    }
}

TEST_CASE("loading is insensitive to row order") {
    TempDir a("md-a"), b("md-b");
    const auto src = fixture_dir() / "synth50x30";
    for (const char* f : {"companies.csv", "transcripts.jsonl"}) {
        fs::copy_file(src / f, a.path() / f);
        fs::copy_file(src / f, b.path() / f);
    }
    auto prices = lines_of(slurp(src / "prices.csv"));
    auto news = lines_of(slurp(src / "news.jsonl"));
    auto join = [](const std::vector<std::string>& v, std::size_t from) {
        std::string s;
        for (std::size_t i = from; i < v.size(); ++i) s += v[i] + "\n";
        return s;
    };
    spit(a.path() / "prices.csv", join(prices, 0));
    spit(a.path() / "news.jsonl", join(news, 0));
    std::mt19937_64 gen(11);
    std::shuffle(prices.begin() + 1, prices.end(), gen);
    std::shuffle(news.begin(), news.end(), gen);
    spit(b.path() / "prices.csv", prices[0] + "\n" + join(prices, 1));
    spit(b.path() / "news.jsonl", join(news, 0));
    const auto x = load_dataset(DatasetPaths::in_directory(a.path())).dataset;
    const auto y = load_dataset(DatasetPaths::in_directory(b.path())).dataset;
    CHECK(x == y);
}

TEST_CASE("simple_return") {
    CHECK(simple_return(100.0, 100.56) == doctest::Approx(0.0056).epsilon(1e-12));
    CHECK(simple_return(100.0, 100.0) == 0.0);
    CHECK(simple_return(200.0, 198.9) == doctest::Approx(-0.0055).epsilon(1e-12));
    CHECK_THROWS_AS(simple_return(0.0, 1.0), Error);
    try {
        simple_return(-1.0, 1.0);
    } catch (const Error& e) {
        CHECK(e.code() == Errc::NonPositiveBasis);
    }
}

TEST_CASE("simple_return inverts b*(1+r) to within the arithmetic's rounding") {
    std::mt19937_64 gen(3);
    std::uniform_real_distribution<double> lb(-6, 6), rr(-0.5, 0.5);
    for (int i = 0; i < 100000; ++i) {
        const double b = std::pow(10.0, lb(gen));
        // (1+r)-1 is exact here, so r names exactly the growth factor that is fed in.
        const double r = (1.0 + rr(gen)) - 1.0;
        const double got = simple_return(b, b * (1.0 + r));
        const double ulp = std::nextafter(1.0 + std::fabs(r), 2.0) - (1.0 + std::fabs(r));
        REQUIRE(std::fabs(got - r) <= ulp);
    }
}

TEST_CASE("volatility and imbalance") {
    auto rec = make_record("A", day_n(0), 100, 100);
    rec.high = 105;
    rec.low = 95;
    CHECK(intraday_volatility(rec) == doctest::Approx(0.10));
    rec.high = rec.low = 100;
    CHECK(intraday_volatility(rec) == 0.0);
    auto r2 = make_record("A", day_n(0), 50, 50);
    r2.high = 52;
    r2.low = 49;
    CHECK(intraday_volatility(r2) == doctest::Approx(0.06));

    rec.inst_buy = 1000;
    rec.inst_sell = 400;
    CHECK(institutional_imbalance(rec) == 600);
    rec.inst_buy = rec.inst_sell = 0;
    CHECK(institutional_imbalance(rec) == 0);
    rec.inst_buy = 200;
    rec.inst_sell = 900;
    CHECK(institutional_imbalance(rec) == -700);

    std::mt19937_64 gen(5);
    std::uniform_int_distribution<std::int64_t> v(0, 1000000);
    for (int i = 0; i < 1000; ++i) {
        rec.inst_buy = v(gen);
        rec.inst_sell = v(gen);
        const auto a = institutional_imbalance(rec);
        std::swap(rec.inst_buy, rec.inst_sell);
        CHECK(institutional_imbalance(rec) == -a);
    }
    const auto ds = load_dataset(DatasetPaths::in_directory(fixture_dir() / "synth50x30")).dataset;
    for (const auto& d : ds.days)
        for (const auto& [c, r] : d.records) CHECK(intraday_volatility(r) >= 0.0);
}

TEST_CASE("record_violation names the broken invariant") {
    auto r = make_record("A", day_n(0), 10, 11);
    CHECK_FALSE(record_violation(r));
    r.high = 10.5;
    CHECK(record_violation(r));
    r = make_record("A", day_n(0), 10, 11);
    r.inst_sell = -1;
    CHECK(record_violation(r));
    r = make_record("A", day_n(0), 10, 11);
    r.low = std::nan("");
    CHECK(record_violation(r));
}
