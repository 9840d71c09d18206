#include <doctest.h>

#include "mdeval/hashing.hpp"
#include "mdeval/io.hpp"
#include "mdeval/rng.hpp"
#include "support.hpp"

using namespace mdeval;
using namespace testsupport;

TEST_CASE("dates") {
    CHECK(Date::parse("2024-02-29"));
    CHECK_FALSE(Date::parse("2023-02-29"));
    CHECK_FALSE(Date::parse("2024-13-01"));
    CHECK_FALSE(Date::parse("2024-1-01"));
    CHECK_FALSE(Date::parse("2024-01-01x"));
    CHECK(Date::parse("1999-12-31")->iso() == "1999-12-31");
    CHECK(Date{1970, 1, 1}.days_since_epoch() == 0);
    CHECK(Date{1970, 1, 1}.weekday() == 3);  // Thursday
    CHECK(Date{2024, 1, 1}.weekday() == 0);
    for (long d = -1000; d < 30000; d += 7) CHECK(Date::from_days_since_epoch(d).days_since_epoch() == d);
    CHECK(Date{2024, 1, 2} < Date{2024, 2, 1});
}

TEST_CASE("csv and text helpers") {
    CHECK(split_csv_line("a,\"b,c\",\"d\"\"e\",") == std::vector<std::string>{"a", "b,c", "d\"e", ""});
    CHECK(split_csv_line(csv_escape("x,\"y\"")) == std::vector<std::string>{"x,\"y\""});
    CHECK(csv_escape("plain") == "plain");
    CHECK(split_lines("a\r\nb\n\nc\n") == std::vector<std::string>{"a", "b", "", "c"});
    CHECK(trim("  x y \t") == "x y");
    CHECK(to_lower("AbC") == "abc");
    CHECK(fixed(48.605, 2).size() == 5);
    CHECK(fixed(1.0 / 3.0, 4) == "0.3333");
    CHECK(signed_percent(0.03) == "+3.00%");
    CHECK(signed_percent(-0.006) == "-0.60%");
}

TEST_CASE("jsonl files") {
    TempDir tmp("util");
    const auto p = tmp.path() / "x.jsonl";
    {
        JsonlWriter w(p);
        w.append({{"a", 1}});
        w.append({{"b", "two"}});
    }
    const auto rows = read_jsonl(p);
    REQUIRE(rows.size() == 2);
    CHECK(rows[1].at("b") == "two");
    spit(p, "{\"a\":1}\n\n{broken\n");
    try {
        read_jsonl(p);
        FAIL("expected ParseError");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::ParseError);
        CHECK(std::string(e.what()).find("3") != std::string::npos);
    }
    try {
        read_file(tmp.path() / "missing");
        FAIL("expected MissingFile");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::MissingFile);
        CHECK(exit_code_for(e.code()) == 3);
    }
}

TEST_CASE("hashing") {
    // Published FNV-1a 64 test vectors.
    CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
    CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
    CHECK(fnv1a64("foobar") == 0x85944171f73967e8ULL);
    CHECK(hex64(0xabcULL) == "0000000000000abc");
    CHECK(hash_hex("a") == "af63dc4c8601ec8c");
}

TEST_CASE("rng") {
    // splitmix64 reference output for state 0.
    CHECK(splitmix64(0) == 0xe220a8397b1dcdafULL);
    CHECK(derive_seed(1, "a") != derive_seed(1, "b"));
    CHECK(derive_seed(1, "a") == derive_seed(1, "a"));

    // The standard fixes mt19937_64's 10000th output for the default seed.
    std::mt19937_64 ref;
    ref.discard(9999);
    CHECK(ref() == 9981545732273789042ULL);

    Rng a(5), b(5);
    for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());

    Rng r(7);
    double sum = 0, sq = 0;
    const int n = 200000;
    std::vector<int> buckets(7, 0);
    for (int i = 0; i < n; ++i) {
        const double u = r.uniform();
        REQUIRE(u >= 0.0);
        REQUIRE(u < 1.0);
        const double z = r.normal();
        sum += z;
        sq += z * z;
        ++buckets[r.below(7)];
    }
    CHECK(std::fabs(sum / n) < 0.01);
    CHECK(std::fabs(sq / n - 1.0) < 0.02);
    for (int c : buckets) CHECK(within_sigma(c, n, 1.0 / 7.0, 4));

    std::vector<int> v(20);
    for (int i = 0; i < 20; ++i) v[i] = i;
    auto w = v;
    Rng s1(3), s2(3);
    s1.shuffle(v);
    s2.shuffle(w);
    CHECK(v == w);
    std::sort(w.begin(), w.end());
    CHECK(w[19] == 19);
}

TEST_CASE("error codes and exit codes") {
    const Error e(Errc::UnknownTicker, "ZZZ");
    CHECK(e.message() == "ZZZ");
    CHECK(std::string(e.what()) == "UnknownTicker: ZZZ");
    CHECK(exit_code_for(Errc::BackendTimeout) == 2);
    CHECK(exit_code_for(Errc::UnparseableReply) == 2);
    CHECK(exit_code_for(Errc::MissingTranscript) == 3);
    CHECK(exit_code_for(Errc::DanglingDigestReference) == 3);
    CHECK(exit_code_for(Errc::InvalidConfig) == 1);
    CHECK(exit_code_for(Errc::InvalidRates) == 1);
}
