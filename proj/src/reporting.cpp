#include "mdeval/reporting.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace mdeval {

std::size_t column_of(DigestKind kind, Pipeline pipeline) {
    return (kind == DigestKind::MorningBrief ? 0 : 3) + static_cast<std::size_t>(pipeline);
}

namespace {

constexpr std::string_view kAbsent = "—";

InvestorClass class_of(const InvestorClasses& classes, const std::string& investor) {
    auto it = classes.find(investor);
    return it == classes.end() ? InvestorClass::Baseline : it->second;
}

// Value as rendered with two decimals.
double round2(double v) { return std::stod(fixed(v, 2)); }

bool in_table(const Condition& c, const std::string& generator) {
    return c.pipeline == Pipeline::Journalist || c.source == generator;
}

std::string header_row(bool short_names, std::string_view first, std::string_view second) {
    std::string out = "| " + std::string(first) + " | " + std::string(second) + " |";
    for (DigestKind kind : {DigestKind::MorningBrief, DigestKind::ClosingBell}) {
        const char* k = kind == DigestKind::MorningBrief ? "Morning Briefs" : "Closing-Bell Reports";
        for (Pipeline p : {Pipeline::Journalist, Pipeline::PerformanceBased, Pipeline::ProfessionalInsight}) {
            std::string name = std::string(display_name(p));
            if (short_names && p == Pipeline::PerformanceBased) name = "PB";
            if (short_names && p == Pipeline::ProfessionalInsight) name = "PI";
            out += " " + std::string(k) + ": " + name + " |";
        }
    }
    return out + "\n| --- | --- | ---: | ---: | ---: | ---: | ---: | ---: |\n";
}

std::vector<std::string> split_cells(std::string_view line) {
    std::vector<std::string> cells;
    line = trim(line);
    if (line.size() < 2 || line.front() != '|' || line.back() != '|') return cells;
    line = line.substr(1, line.size() - 2);
    std::size_t start = 0;
    while (start <= line.size()) {
        auto bar = line.find('|', start);
        if (bar == std::string_view::npos) bar = line.size();
        cells.emplace_back(trim(line.substr(start, bar - start)));
        start = bar + 1;
    }
    return cells;
}

}  // namespace

std::vector<std::string> generators_in(const std::vector<SessionScore>& scores) {
    std::set<std::string> names;
    for (const auto& s : scores)
        if (s.condition.pipeline != Pipeline::Journalist) names.insert(s.condition.source);
    return {names.begin(), names.end()};
}

AccuracyTable accuracy_table(const std::vector<SessionScore>& scores, const InvestorClasses& classes,
                             const std::string& generator) {
    AccuracyTable table;
    table.generator = generator;
    std::map<std::pair<InvestorClass, std::string>, AccuracyRow> rows;
    for (const auto& s : scores) {
        if (!in_table(s.condition, generator)) continue;
        const InvestorClass cls = class_of(classes, s.investor_id);
        auto& row = rows[{cls, s.investor_id}];
        row.investor_class = cls;
        row.investor = s.investor_id;
        if (s.accuracy) row.cells[column_of(s.condition.kind, s.condition.pipeline)].percent = *s.accuracy * 100.0;
    }
    for (auto& [_, row] : rows) {
        for (std::size_t block = 0; block < kTableColumns; block += 3) {
            std::optional<double> best;
            for (std::size_t c = block; c < block + 3; ++c)
                if (row.cells[c].percent) best = std::max(best.value_or(-1.0), round2(*row.cells[c].percent));
            for (std::size_t c = block; c < block + 3; ++c)
                row.cells[c].best = best && row.cells[c].percent && round2(*row.cells[c].percent) == *best;
        }
        table.rows.push_back(std::move(row));
    }
    return table;
}

std::string render_accuracy_tables(const std::vector<AccuracyTable>& tables) {
    std::string out = "# The accuracy of investor decisions under different market digests (%)\n\n"
                      "Bold marks the best result of an investor within each digest kind.\n";
    for (const auto& t : tables) {
        out += "\n## Generator: " + t.generator + "\n\n" + header_row(false, "Investor", "Name");
        for (const auto& r : t.rows) {
            out += "| " + std::string(to_string(r.investor_class)) + " | " + r.investor + " |";
            for (const auto& cell : r.cells) {
                if (!cell.percent) {
                    out += " " + std::string(kAbsent) + " |";
                    continue;
                }
                const std::string v = fixed(*cell.percent, 2);
                out += " " + (cell.best ? "**" + v + "**" : v) + " |";
            }
            out += "\n";
        }
    }
    return out;
}

std::vector<AccuracyTable> parse_accuracy_tables(std::string_view markdown) {
    std::vector<AccuracyTable> tables;
    for (const auto& line : split_lines(markdown)) {
        if (line.rfind("## Generator: ", 0) == 0) {
            tables.push_back({line.substr(14), {}});
            continue;
        }
        if (tables.empty()) continue;
        const auto cells = split_cells(line);
        if (cells.size() != 2 + kTableColumns) continue;
        const auto cls = parse_investor_class(cells[0]);
        if (!cls) continue;  // header and separator rows
        AccuracyRow row;
        row.investor_class = *cls;
        row.investor = cells[1];
        for (std::size_t c = 0; c < kTableColumns; ++c) {
            std::string v = cells[2 + c];
            if (v == kAbsent) continue;
            if (v.size() > 4 && v.rfind("**", 0) == 0) {
                row.cells[c].best = true;
                v = v.substr(2, v.size() - 4);
            }
            row.cells[c].percent = std::stod(v);
        }
        tables.back().rows.push_back(std::move(row));
    }
    return tables;
}

BehaviorTable behavior_table(const std::vector<DecisionSet>& decisions, const DigestIndex& digests,
                             const InvestorClasses& classes, const std::string& generator,
                             BehaviorPooling pooling) {
    BehaviorTable table;
    table.generator = generator;
    // (class, column) -> investor -> (sets, buys, sells)
    struct Counts {
        std::size_t sets = 0, buys = 0, sells = 0;
    };
    std::map<std::pair<InvestorClass, std::size_t>, std::map<std::string, Counts>> counts;
    std::set<InvestorClass> present;
    for (const auto& d : decisions) {
        auto it = digests.find(d.digest_id);
        if (it == digests.end()) throw Error(Errc::DanglingDigestReference, d.investor_id + " -> " + d.digest_id);
        const Condition cond = condition_of(it->second);
        if (!in_table(cond, generator)) continue;
        const InvestorClass cls = class_of(classes, d.investor_id);
        present.insert(cls);
        auto& c = counts[{cls, column_of(cond.kind, cond.pipeline)}][d.investor_id];
        ++c.sets;
        c.buys += d.buys.size();
        c.sells += d.sells.size();
    }
    for (InvestorClass cls : {InvestorClass::LLM, InvestorClass::Human, InvestorClass::Baseline}) {
        if (!present.count(cls)) continue;
        for (Side side : {Side::Buy, Side::Sell}) {
            BehaviorRow row;
            row.investor_class = cls;
            row.side = side;
            for (std::size_t col = 0; col < kTableColumns; ++col) {
                auto it = counts.find({cls, col});
                if (it == counts.end()) {
                    if (side == Side::Buy)
                        table.warnings.push_back(std::string(to_string(cls)) + " has no digests in column " +
                                                 std::to_string(col + 1) + " of " + generator);
                    continue;
                }
                auto side_count = [&](const Counts& c) { return side == Side::Buy ? c.buys : c.sells; };
                double mean = 0;
                if (pooling == BehaviorPooling::Pooled) {
                    std::size_t sets = 0, total = 0;
                    for (const auto& [_, c] : it->second) {
                        sets += c.sets;
                        total += side_count(c);
                    }
                    mean = static_cast<double>(total) / static_cast<double>(sets);
                } else {
                    for (const auto& [_, c] : it->second)
                        mean += static_cast<double>(side_count(c)) / static_cast<double>(c.sets);
                    mean /= static_cast<double>(it->second.size());
                }
                row.means[col] = round2(mean);
            }
            table.rows.push_back(row);
        }
    }
    return table;
}

std::string render_behavior_tables(const std::vector<BehaviorTable>& tables) {
    std::string out = "# Average number of transactions\n\n"
                      "PB and PI denote performance-based and professional-insight.\n";
    for (const auto& t : tables) {
        out += "\n## Generator: " + t.generator + "\n\n" + header_row(true, "Investor", "Decision");
        for (const auto& r : t.rows) {
            out += "| " + std::string(to_string(r.investor_class)) + " | " + (r.side == Side::Buy ? "Buy" : "Sell") + " |";
            for (const auto& m : r.means) out += " " + (m ? fixed(*m, 2) : std::string(kAbsent)) + " |";
            out += "\n";
        }
    }
    return out;
}

std::map<std::string, OverallAccuracy> overall_accuracy(const std::vector<SessionScore>& scores) {
    std::map<std::string, std::pair<std::size_t, std::size_t>> sums;  // correct, scorable
    std::map<std::string, OverallAccuracy> out;
    for (const auto& s : scores) {
        auto& sum = sums[s.investor_id];
        sum.first += s.n_correct;
        sum.second += s.scorable();
        out[s.investor_id].n_decisions += s.n_buy + s.n_sell;
    }
    for (const auto& [id, sum] : sums)
        if (sum.second > 0) out[id].accuracy = static_cast<double>(sum.first) / static_cast<double>(sum.second);
    return out;
}

Leaderboard leaderboard(const std::vector<SessionScore>& human_scores, const std::vector<SessionScore>& llm_scores) {
    Leaderboard board;
    std::size_t n_llm = 0;
    double llm_sum = 0;
    for (const auto& [_, o] : overall_accuracy(llm_scores)) {
        if (!o.accuracy) continue;
        llm_sum += *o.accuracy;
        ++n_llm;
    }
    if (n_llm > 0) board.llm_average = llm_sum / static_cast<double>(n_llm);

    for (const auto& [id, o] : overall_accuracy(human_scores))
        board.entries.push_back({id, o.accuracy, o.n_decisions});
    std::sort(board.entries.begin(), board.entries.end(), [](const LeaderboardEntry& a, const LeaderboardEntry& b) {
        if (a.accuracy.has_value() != b.accuracy.has_value()) return a.accuracy.has_value();
        if (a.accuracy && *a.accuracy != *b.accuracy) return *a.accuracy > *b.accuracy;
        if (a.n_decisions != b.n_decisions) return a.n_decisions > b.n_decisions;
        return a.annotator < b.annotator;
    });
    for (std::size_t i = 0; i < board.entries.size(); ++i) {
        auto& e = board.entries[i];
        e.rank = i + 1;
        if (!e.accuracy) continue;
        e.rank1 = i == 0;
        e.rank2 = i == 1;
        // The mean of ratios carries rounding; a human tied with it exactly must not win.
        e.beat_llm_average = board.llm_average && *e.accuracy > *board.llm_average + 1e-12;
    }
    return board;
}

json to_json(const Leaderboard& board) {
    json entries = json::array();
    for (const auto& e : board.entries) {
        entries.push_back({{"annotator", e.annotator},
                           {"rank", e.rank},
                           {"accuracy", e.accuracy ? json(*e.accuracy) : json(nullptr)},
                           {"n_decisions", e.n_decisions},
                           {"flags", {{"beat_llm_average", e.beat_llm_average}, {"rank1", e.rank1}, {"rank2", e.rank2}}},
                           {"bonus_usd", e.bonus_usd()}});
    }
    return {{"llm_average", board.llm_average ? json(*board.llm_average) : json(nullptr)},
            {"annotators", std::move(entries)}};
}

}  // namespace mdeval
