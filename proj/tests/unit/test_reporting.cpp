#include <doctest.h>

#include "mdeval/reporting.hpp"
#include "support.hpp"

using namespace mdeval;
using namespace testsupport;

namespace {

SessionScore score(const std::string& inv, DigestKind kind, Pipeline p, std::optional<double> acc,
                   std::size_t n = 10, const std::string& gen = "template") {
    SessionScore s;
    s.investor_id = inv;
    s.condition = {kind, p == Pipeline::Journalist ? "journalist" : gen, p};
    s.n_buy = n;
    if (acc) {
        s.accuracy = acc;
        s.n_correct = static_cast<std::size_t>(std::lround(*acc * static_cast<double>(n)));
    } else {
        s.n_unscorable = n;
    }
    return s;
}

Digest digest(const std::string& id, DigestKind kind, Pipeline p) {
    Digest d;
    d.id = id;
    d.date = day_n(0);
    d.kind = kind;
    d.pipeline = p;
    d.generator = p == Pipeline::Journalist ? "journalist" : "template";
    d.text = "x";
    return d;
}

std::string row_line(const std::string& md, const std::string& investor) {
    for (const auto& l : lines_of(md))
        if (l.find("| " + investor + " |") != std::string::npos) return l;
    return {};
}

}  // namespace

TEST_CASE("accuracy cells render at two decimals") {
    const std::vector<SessionScore> scores = {score("A", DigestKind::MorningBrief, Pipeline::ProfessionalInsight, 0.4861)};
    const auto t = accuracy_table(scores, {{"A", InvestorClass::Human}}, "template");
    REQUIRE(t.rows.size() == 1);
    const auto md = render_accuracy_tables({t});
    const auto line = row_line(md, "A");
    CHECK(line.find("48.61") != std::string::npos);
    CHECK(line.rfind("| Human | A |", 0) == 0);
    // Five absent cells, one present.
    std::size_t dashes = 0;
    for (auto at = line.find("—"); at != std::string::npos; at = line.find("—", at + 1)) ++dashes;
    CHECK(dashes == 5);
    CHECK(column_of(DigestKind::MorningBrief, Pipeline::ProfessionalInsight) == 2);
    CHECK(column_of(DigestKind::ClosingBell, Pipeline::Journalist) == 3);
}

TEST_CASE("best markers per kind block, ties all marked") {
    const std::vector<SessionScore> scores = {
        score("A", DigestKind::MorningBrief, Pipeline::Journalist, 0.3964),
        score("A", DigestKind::MorningBrief, Pipeline::PerformanceBased, 0.4310),
        score("A", DigestKind::MorningBrief, Pipeline::ProfessionalInsight, 0.4861),
        score("A", DigestKind::ClosingBell, Pipeline::Journalist, 0.5),
        score("A", DigestKind::ClosingBell, Pipeline::PerformanceBased, 0.5),
        score("A", DigestKind::ClosingBell, Pipeline::ProfessionalInsight, 0.49999),
        score("A", DigestKind::ClosingBell, Pipeline::PerformanceBased, 0.9, 10, "other"),
    };
    const auto t = accuracy_table(scores, {{"A", InvestorClass::LLM}}, "template");
    REQUIRE(t.rows.size() == 1);
    const auto& c = t.rows[0].cells;
    CHECK_FALSE(c[0].best);
    CHECK_FALSE(c[1].best);
    CHECK(c[2].best);
    // 0.49999 renders as 50.00, tying the two exact halves.
    CHECK(c[3].best);
    CHECK(c[4].best);
    CHECK(c[5].best);
    CHECK(*c[4].percent == doctest::Approx(50.0));
    CHECK(generators_in(scores) == std::vector<std::string>{"other", "template"});
}

TEST_CASE("rendered tables parse back losslessly at two decimals") {
    std::mt19937_64 gen(4);
    std::uniform_real_distribution<double> u(0, 1);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<SessionScore> scores;
        InvestorClasses classes;
        for (int i = 0; i < 4; ++i) {
            const std::string inv = "inv-" + std::to_string(i);
            classes[inv] = static_cast<InvestorClass>(i % 3);
            for (auto kind : {DigestKind::MorningBrief, DigestKind::ClosingBell})
                for (auto p : {Pipeline::Journalist, Pipeline::PerformanceBased, Pipeline::ProfessionalInsight})
                    if (u(gen) < 0.8)
                        scores.push_back(score(inv, kind, p, u(gen) < 0.1 ? std::nullopt : std::optional<double>(u(gen))));
        }
        const auto table = accuracy_table(scores, classes, "template");
        const auto parsed = parse_accuracy_tables(render_accuracy_tables({table}));
        REQUIRE(parsed.size() == 1);
        CHECK(parsed[0].generator == "template");
        REQUIRE(parsed[0].rows.size() == table.rows.size());
        for (std::size_t r = 0; r < table.rows.size(); ++r) {
            CHECK(parsed[0].rows[r].investor == table.rows[r].investor);
            CHECK(parsed[0].rows[r].investor_class == table.rows[r].investor_class);
            for (std::size_t c = 0; c < kTableColumns; ++c) {
                const auto& a = table.rows[r].cells[c];
                const auto& b = parsed[0].rows[r].cells[c];
                CHECK(a.best == b.best);
                REQUIRE(a.percent.has_value() == b.percent.has_value());
                if (a.percent) CHECK(*b.percent == std::stod(fixed(*a.percent, 2)));
            }
            // Recompute the argmax from the parsed values.
            for (std::size_t block = 0; block < kTableColumns; block += 3) {
                double best = -1;
                for (std::size_t c = block; c < block + 3; ++c)
                    if (parsed[0].rows[r].cells[c].percent) best = std::max(best, *parsed[0].rows[r].cells[c].percent);
                for (std::size_t c = block; c < block + 3; ++c) {
                    const auto& cell = parsed[0].rows[r].cells[c];
                    CHECK(cell.best == (cell.percent && *cell.percent == best));
                }
            }
        }
    }
}

TEST_CASE("behavior table means") {
    const auto idx = index_digests({digest("d1", DigestKind::MorningBrief, Pipeline::PerformanceBased),
                                    digest("d2", DigestKind::MorningBrief, Pipeline::PerformanceBased),
                                    digest("j1", DigestKind::MorningBrief, Pipeline::Journalist)});
    const std::vector<DecisionSet> log = {{"h", "d1", {"A", "B", "C"}, {"D"}, ""},
                                          {"h", "d2", {"A", "B"}, {}, ""},
                                          {"h", "j1", {}, {}, "vague"}};
    const auto t = behavior_table(log, idx, {{"h", InvestorClass::Human}}, "template");
    REQUIRE(t.rows.size() == 2);
    CHECK(t.rows[0].side == Side::Buy);
    CHECK(*t.rows[0].means[1] == doctest::Approx(2.50));
    CHECK(*t.rows[1].means[1] == doctest::Approx(0.50));
    CHECK(*t.rows[0].means[0] == 0.0);
    CHECK_FALSE(t.rows[0].means[3]);
    CHECK(t.warnings.size() == 4);  // four empty columns
    const auto md = render_behavior_tables({t});
    CHECK(md.find("| Human | Buy | 0.00 | 2.50 | — |") != std::string::npos);

    CHECK_THROWS_AS(behavior_table({{"h", "nope", {}, {}, "r"}}, idx, {}, "template"), Error);
}

TEST_CASE("behavior pooling variants") {
    const auto idx = index_digests({digest("d1", DigestKind::ClosingBell, Pipeline::Journalist),
                                    digest("d2", DigestKind::ClosingBell, Pipeline::Journalist),
                                    digest("d3", DigestKind::ClosingBell, Pipeline::Journalist)});
    const std::vector<DecisionSet> log = {{"a", "d1", {"X"}, {}, ""},
                                          {"a", "d2", {"X", "Y", "Z"}, {}, ""},
                                          {"b", "d3", {}, {}, "r"}};
    const InvestorClasses cls = {{"a", InvestorClass::Human}, {"b", InvestorClass::Human}};
    const auto pooled = behavior_table(log, idx, cls, "template", BehaviorPooling::Pooled);
    const auto per = behavior_table(log, idx, cls, "template", BehaviorPooling::PerInvestorThenAverage);
    CHECK(*pooled.rows[0].means[3] == doctest::Approx(1.33));
    CHECK(*per.rows[0].means[3] == doctest::Approx(1.00));
}

TEST_CASE("leaderboard") {
    auto human = [](const std::string& id, double acc, std::size_t n) {
        return score(id, DigestKind::MorningBrief, Pipeline::Journalist, acc, n);
    };
    SUBCASE("beat the LLM mean") {
        const auto b = leaderboard({human("h1", 0.6, 10), human("h2", 0.5, 10)},
                                   {human("l1", 0.5, 10), human("l2", 0.6, 10)});
        REQUIRE(b.llm_average);
        CHECK(*b.llm_average == doctest::Approx(0.55));
        REQUIRE(b.entries.size() == 2);
        CHECK(b.entries[0].annotator == "h1");
        CHECK(b.entries[0].beat_llm_average);
        CHECK(b.entries[0].rank1);
        CHECK(b.entries[0].bonus_usd() == 165);
        CHECK_FALSE(b.entries[1].beat_llm_average);
        CHECK(b.entries[1].rank2);
        CHECK(b.entries[1].bonus_usd() == 35);
        const auto j = to_json(b);
        CHECK(j.at("annotators").at(0).at("flags").at("rank1") == true);
    }
    SUBCASE("single human") {
        const auto b = leaderboard({human("h", 0.4, 5)}, {});
        REQUIRE(b.entries.size() == 1);
        CHECK(b.entries[0].rank1);
        CHECK_FALSE(b.entries[0].rank2);
        CHECK_FALSE(b.llm_average);
        CHECK_FALSE(b.entries[0].beat_llm_average);
    }
    SUBCASE("ties go to the larger decision count") {
        const auto b = leaderboard({human("a", 0.5, 30), human("b", 0.5, 40)}, {});
        CHECK(b.entries[0].annotator == "b");
        CHECK(b.entries[0].n_decisions == 40);
        CHECK(b.entries[1].annotator == "a");
    }
    SUBCASE("flags survive positive rescaling") {
        // Exact counts: accuracy c/n scaled by 1/m is c/(n*m), with every count scaled alike.
        auto counted = [](const std::string& id, std::size_t correct, std::size_t n) {
            SessionScore s;
            s.investor_id = id;
            s.condition = {DigestKind::MorningBrief, "journalist", Pipeline::Journalist};
            s.n_buy = n;
            s.n_correct = correct;
            s.accuracy = static_cast<double>(correct) / static_cast<double>(n);
            return s;
        };
        std::mt19937_64 gen(12);
        std::uniform_int_distribution<std::size_t> c(0, 20), m(2, 7);
        for (int t = 0; t < 100; ++t) {
            std::vector<SessionScore> hs, ls, hs2, ls2;
            const std::size_t k = m(gen);
            for (int i = 0; i < 5; ++i) {
                const std::size_t n = 20 + static_cast<std::size_t>(i % 2);
                const std::size_t x = c(gen);
                hs.push_back(counted("h" + std::to_string(i), x, n));
                hs2.push_back(counted("h" + std::to_string(i), x, n * k));
            }
            for (int i = 0; i < 3; ++i) {
                const std::size_t x = c(gen);
                ls.push_back(counted("l" + std::to_string(i), x, 20));
                ls2.push_back(counted("l" + std::to_string(i), x, 20 * k));
            }
            const auto b1 = leaderboard(hs, ls), b2 = leaderboard(hs2, ls2);
            REQUIRE(b1.entries.size() == b2.entries.size());
            for (std::size_t i = 0; i < b1.entries.size(); ++i) {
                CHECK(b1.entries[i].annotator == b2.entries[i].annotator);
                CHECK(b1.entries[i].rank1 == b2.entries[i].rank1);
                CHECK(b1.entries[i].rank2 == b2.entries[i].rank2);
                CHECK(b1.entries[i].beat_llm_average == b2.entries[i].beat_llm_average);
            }
        }
    }
}
