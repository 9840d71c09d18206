#include "mdeval/selection.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <set>

namespace mdeval {

std::string_view to_string(Metric metric) {
    switch (metric) {
        case Metric::Volatility: return "volatility";
        case Metric::Volume: return "volume";
        case Metric::AbsImbalance: return "abs_imbalance";
    }
    return "";
}

std::optional<Metric> parse_metric(std::string_view text) {
    for (Metric m : kRankingMetrics)
        if (to_string(m) == text) return m;
    return std::nullopt;
}

double metric_value(const EquityDayRecord& record, Metric metric) {
    switch (metric) {
        case Metric::Volatility: return intraday_volatility(record);
        case Metric::Volume: return static_cast<double>(record.volume);
        case Metric::AbsImbalance: return std::fabs(static_cast<double>(institutional_imbalance(record)));
    }
    return 0;
}

void SelectionConfig::validate(std::size_t universe_size) const {
    if (k < 1) throw Error(Errc::InvalidConfig, "k must be >= 1");
    if (k > universe_size)
        throw Error(Errc::InvalidConfig,
                    "k=" + std::to_string(k) + " exceeds universe size " + std::to_string(universe_size));
}

std::vector<RankedEntry> rank_top_k_entries(const TradingDay& day, Metric metric, std::size_t k) {
    if (day.records.empty()) throw Error(Errc::EmptyDay, day.date.iso());
    if (k < 1) throw Error(Errc::InvalidConfig, "k must be >= 1");
    std::vector<RankedEntry> entries;
    entries.reserve(day.records.size());
    for (const auto& [code, rec] : day.records) {
        const double v = metric_value(rec, metric);
        const double s = metric == Metric::AbsImbalance ? static_cast<double>(institutional_imbalance(rec)) : v;
        entries.push_back({code, v, s});
    }
    auto better = [](const RankedEntry& a, const RankedEntry& b) {
        if (a.value != b.value) return a.value > b.value;
        return a.ticker < b.ticker;
    };
    const std::size_t n = std::min(k, entries.size());
    std::partial_sort(entries.begin(), entries.begin() + static_cast<std::ptrdiff_t>(n), entries.end(), better);
    entries.resize(n);
    return entries;
}

std::vector<std::string> rank_top_k(const TradingDay& day, Metric metric, std::size_t k) {
    std::vector<std::string> codes;
    for (auto& e : rank_top_k_entries(day, metric, k)) codes.push_back(std::move(e.ticker));
    return codes;
}

namespace {

bool is_word_byte(unsigned char c) { return std::isalnum(c) != 0; }

// Match forms a word: neighbours are not alphanumeric, and for codes a
// trailing '.' only counts as punctuation when no alphanumeric follows.
bool on_boundary(std::string_view text, std::size_t begin, std::size_t end, bool is_code) {
    if (begin > 0) {
        const auto prev = static_cast<unsigned char>(text[begin - 1]);
        if (is_word_byte(prev)) return false;
        if (is_code && prev == '.') return false;
    }
    if (end < text.size()) {
        const auto next = static_cast<unsigned char>(text[end]);
        if (is_word_byte(next)) return false;
        if (is_code && next == '.' && end + 1 < text.size() &&
            is_word_byte(static_cast<unsigned char>(text[end + 1])))
            return false;
    }
    return true;
}

}  // namespace

MentionScanner::MentionScanner(const Universe& universe) {
    for (const auto& t : universe.tickers()) {
        by_first_byte_[static_cast<unsigned char>(t.code[0])].push_back({t.code, t.code, true});
        const std::string lowered = to_lower(t.name);
        if (!lowered.empty())
            by_first_byte_[static_cast<unsigned char>(lowered[0])].push_back({lowered, t.code, false});
    }
    for (auto& bucket : by_first_byte_)
        std::stable_sort(bucket.begin(), bucket.end(),
                         [](const Pattern& a, const Pattern& b) { return a.text.size() > b.text.size(); });
}

std::vector<std::string> MentionScanner::scan(std::string_view text) const {
    const std::string lowered = to_lower(text);
    std::vector<std::string> found;
    std::set<std::string> seen;
    std::size_t i = 0;
    while (i < text.size()) {
        const Pattern* hit = nullptr;
        // Names are matched on the lowered copy; codes on the original bytes.
        // Candidates for both live under the lowered first byte or the raw one.
        for (unsigned char key : {static_cast<unsigned char>(lowered[i]), static_cast<unsigned char>(text[i])}) {
            for (const auto& p : by_first_byte_[key]) {
                if (hit && p.text.size() <= hit->text.size()) break;
                const std::string_view hay = p.is_code ? text : std::string_view(lowered);
                if (hay.compare(i, p.text.size(), p.text) != 0) continue;
                if (!on_boundary(text, i, i + p.text.size(), p.is_code)) continue;
                hit = &p;
                break;
            }
        }
        if (!hit) {
            ++i;
            continue;
        }
        if (seen.insert(hit->code).second) found.push_back(hit->code);
        i += hit->text.size();
    }
    return found;
}

std::vector<std::string> ReferenceExtractor::extract(std::string_view text, const Universe& universe) {
    if (!scanner_ || cached_for_ != &universe || cached_size_ != universe.size()) {
        scanner_ = std::make_unique<MentionScanner>(universe);
        cached_for_ = &universe;
        cached_size_ = universe.size();
    }
    return scanner_->scan(text);
}

std::vector<std::string> article_mentions(const NewsArticle& article, const MentionScanner& scanner) {
    if (article.tickers_provided) return article.mentioned_tickers;
    return scanner.scan(article.headline + "\n" + article.body);
}

std::vector<std::string> extract_mentioned_companies(std::string_view text, const Universe& universe,
                                                     ExtractorBackend& extractor) {
    if (trim(text).empty()) throw Error(Errc::MissingTranscript, "empty transcript text");
    std::vector<std::string> raw;
    try {
        raw = extractor.extract(text, universe);
    } catch (const Error&) {
        throw;
    } catch (const std::exception& e) {
        throw Error(Errc::ExtractorUnavailable, extractor.name() + ": " + e.what());
    }
    std::vector<std::string> out;
    std::set<std::string> seen;
    for (auto& code : raw) {
        if (!universe.contains(code)) continue;
        if (seen.insert(code).second) out.push_back(std::move(code));
    }
    return out;
}

namespace {

// Article ids mentioning any candidate, ordered by the earliest candidate
// they mention, then by id.
std::vector<std::string> articles_for(const TradingDay& day, const std::vector<std::string>& tickers,
                                      const MentionScanner& scanner) {
    std::vector<std::pair<std::size_t, std::string>> ranked;
    for (const auto& a : day.articles) {
        std::size_t best = tickers.size();
        for (const auto& code : article_mentions(a, scanner)) {
            auto it = std::find(tickers.begin(), tickers.end(), code);
            if (it != tickers.end()) best = std::min(best, static_cast<std::size_t>(it - tickers.begin()));
        }
        if (best < tickers.size()) ranked.emplace_back(best, a.id);
    }
    std::sort(ranked.begin(), ranked.end());
    std::vector<std::string> ids;
    for (auto& [_, id] : ranked) ids.push_back(std::move(id));
    return ids;
}

}  // namespace

CandidateSet performance_based_candidates(const TradingDay& prior_day, const TradingDay& day,
                                          const Universe& universe, const SelectionConfig& config) {
    if (prior_day.records.empty()) throw Error(Errc::EmptyDay, prior_day.date.iso());
    CandidateSet set;
    set.date = day.date;
    set.pipeline = Pipeline::PerformanceBased;
    std::set<std::string> seen;
    for (Metric m : kRankingMetrics) {
        auto entries = rank_top_k_entries(prior_day, m, config.k);
        for (const auto& e : entries)
            if (seen.insert(e.ticker).second) set.tickers.push_back(e.ticker);
        set.per_metric.emplace(m, std::move(entries));
    }
    MentionScanner scanner(universe);
    set.source_articles = articles_for(day, set.tickers, scanner);
    return set;
}

CandidateSet professional_insight_candidates(const TradingDay& day, const Universe& universe,
                                             ExtractorBackend& extractor) {
    if (!day.morning_transcript || trim(*day.morning_transcript).empty())
        throw Error(Errc::MissingTranscript, "no morning transcript on " + day.date.iso());
    CandidateSet set;
    set.date = day.date;
    set.pipeline = Pipeline::ProfessionalInsight;
    set.tickers = extract_mentioned_companies(*day.morning_transcript, universe, extractor);
    if (set.tickers.empty()) {
        set.warnings.push_back("transcript on " + day.date.iso() + " mentions no universe company");
        return set;
    }
    MentionScanner scanner(universe);
    set.source_articles = articles_for(day, set.tickers, scanner);
    return set;
}

json to_json(const CandidateSet& set) {
    json per_metric = json::object();
    for (const auto& [m, entries] : set.per_metric) {
        json arr = json::array();
        for (const auto& e : entries) arr.push_back({{"ticker", e.ticker}, {"value", e.value}, {"signed", e.signed_value}});
        per_metric[std::string(to_string(m))] = std::move(arr);
    }
    return {{"pipeline", to_string(set.pipeline)},
            {"date", set.date.iso()},
            {"tickers", set.tickers},
            {"per_metric", std::move(per_metric)},
            {"source_articles", set.source_articles},
            {"warnings", set.warnings}};
}

CandidateSet candidate_set_from_json(const json& j) {
    CandidateSet set;
    auto date = Date::parse(j.at("date").get<std::string>());
    auto pipeline = parse_pipeline(j.at("pipeline").get<std::string>());
    if (!date || !pipeline) throw Error(Errc::ParseError, "bad candidate set record");
    set.date = *date;
    set.pipeline = *pipeline;
    set.tickers = j.at("tickers").get<std::vector<std::string>>();
    set.source_articles = j.at("source_articles").get<std::vector<std::string>>();
    if (j.contains("warnings")) set.warnings = j.at("warnings").get<std::vector<std::string>>();
    if (j.contains("per_metric")) {
        for (const auto& [name, arr] : j.at("per_metric").items()) {
            auto m = parse_metric(name);
            if (!m) throw Error(Errc::ParseError, "unknown metric " + name);
            std::vector<RankedEntry> entries;
            for (const auto& e : arr)
                entries.push_back({e.at("ticker").get<std::string>(), e.at("value").get<double>(),
                                   e.at("signed").get<double>()});
            set.per_metric.emplace(*m, std::move(entries));
        }
    }
    return set;
}

}  // namespace mdeval
