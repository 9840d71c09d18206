#include "mdeval/digest.hpp"

#include <algorithm>
#include <cctype>
#include <ctime>
#include <set>
#include <sstream>
#include <thread>

#include "mdeval/hashing.hpp"
#include "mdeval/prompts.hpp"

namespace mdeval {

const Section* GenerationRequest::section(std::string_view name) const {
    for (const auto& s : context_sections)
        if (s.name == name) return &s;
    return nullptr;
}

void validate_request(const GenerationRequest& request) {
    auto require = [&](const char* name) {
        if (!request.section(name))
            throw Error(Errc::InvalidConfig, std::string(to_string(request.kind)) + " request lacks section " + name);
    };
    if (request.kind == DigestKind::ClosingBell) {
        require("morning_brief");
        require("intraday_data");
    } else {
        require("news");
    }
    if (request.token_budget_hint == 0) throw Error(Errc::InvalidConfig, "token budget must be positive");
}

json to_json(const GenerationRequest& r) {
    json sections = json::array();
    for (const auto& s : r.context_sections) sections.push_back({{"name", s.name}, {"text", s.text}});
    return {{"date", r.date.iso()},
            {"kind", to_string(r.kind)},
            {"pipeline", to_string(r.pipeline)},
            {"sections", std::move(sections)},
            {"token_budget_hint", r.token_budget_hint},
            {"instruction_id", r.instruction_id},
            {"truncated_articles", r.truncated_articles}};
}

GenerationRequest request_from_json(const json& j) {
    GenerationRequest r;
    auto date = Date::parse(j.at("date").get<std::string>());
    auto kind = parse_digest_kind(j.at("kind").get<std::string>());
    auto pipeline = parse_pipeline(j.at("pipeline").get<std::string>());
    if (!date || !kind || !pipeline) throw Error(Errc::ParseError, "bad generation request record");
    r.date = *date;
    r.kind = *kind;
    r.pipeline = *pipeline;
    for (const auto& s : j.at("sections")) r.context_sections.push_back({s.at("name").get<std::string>(), s.at("text").get<std::string>()});
    r.token_budget_hint = j.at("token_budget_hint").get<std::size_t>();
    r.instruction_id = j.value("instruction_id", "");
    r.truncated_articles = j.value("truncated_articles", std::size_t{0});
    return r;
}

std::string fingerprint(const GenerationRequest& request) { return hash_hex(to_json(request).dump()); }

std::size_t estimate_tokens(std::string_view text) {
    std::size_t n = 0;
    bool in_word = false;
    for (unsigned char c : text) {
        const bool space = std::isspace(c) != 0;
        if (!space && !in_word) ++n;
        in_word = !space;
    }
    return n;
}

std::string Digest::source() const {
    if (pipeline == Pipeline::Journalist) return "journalist";
    return generator + "-" + std::string(to_string(pipeline));
}

std::string digest_id(const Date& date, DigestKind kind, const std::string& source) {
    return date.iso() + "-" + std::string(to_string(kind)) + "-" + source;
}

json to_json(const Digest& d) {
    return {{"id", d.id},
            {"date", d.date.iso()},
            {"kind", to_string(d.kind)},
            {"generator", d.generator},
            {"pipeline", to_string(d.pipeline)},
            {"source", d.source()},
            {"text", d.text},
            {"request_fingerprint", d.request_fingerprint}};
}

Digest digest_from_json(const json& j) {
    Digest d;
    auto date = Date::parse(j.at("date").get<std::string>());
    auto kind = parse_digest_kind(j.at("kind").get<std::string>());
    auto pipeline = parse_pipeline(j.at("pipeline").get<std::string>());
    if (!date || !kind || !pipeline) throw Error(Errc::ParseError, "bad digest record");
    d.id = j.at("id").get<std::string>();
    d.date = *date;
    d.kind = *kind;
    d.generator = j.at("generator").get<std::string>();
    d.pipeline = *pipeline;
    d.text = j.at("text").get<std::string>();
    d.request_fingerprint = j.value("request_fingerprint", "");
    return d;
}

DigestIndex index_digests(const std::vector<Digest>& digests) {
    DigestIndex index;
    for (const auto& d : digests)
        if (!index.emplace(d.id, d).second) throw Error(Errc::DuplicateRecord, "digest " + d.id);
    return index;
}

std::string normalize_newlines(std::string_view text) {
    std::string out;
    out.reserve(text.size());
    for (std::size_t i = 0; i < text.size(); ++i) {
        if (text[i] == '\r') {
            out.push_back('\n');
            if (i + 1 < text.size() && text[i + 1] == '\n') ++i;
        } else {
            out.push_back(text[i]);
        }
    }
    return out;
}

std::optional<Digest> journalist_digest(const TradingDay& day, DigestKind kind) {
    const auto& transcript =
        day.transcript(kind == DigestKind::MorningBrief ? TranscriptKind::Morning : TranscriptKind::Closing);
    if (!transcript || trim(*transcript).empty()) return std::nullopt;
    Digest d;
    d.date = day.date;
    d.kind = kind;
    d.generator = "journalist";
    d.pipeline = Pipeline::Journalist;
    d.text = normalize_newlines(*transcript);
    d.request_fingerprint = hash_hex(d.text);
    d.id = digest_id(d.date, kind, d.source());
    return d;
}

// ---------------------------------------------------------------------------
// Request building

namespace {

std::string signed_int(std::int64_t v) { return (v > 0 ? "+" : "") + std::to_string(v); }

std::string grouped(std::int64_t v) {
    std::string digits = std::to_string(v < 0 ? -v : v);
    std::string out;
    for (std::size_t i = 0; i < digits.size(); ++i) {
        if (i > 0 && (digits.size() - i) % 3 == 0) out.push_back(',');
        out.push_back(digits[i]);
    }
    return v < 0 ? "-" + out : out;
}

std::string without_pipes(std::string_view s) {
    std::string out(s);
    std::replace(out.begin(), out.end(), '|', '/');
    std::replace(out.begin(), out.end(), '\n', ' ');
    return out;
}

const NewsArticle* find_article(const TradingDay& day, const std::string& id) {
    auto it = std::lower_bound(day.articles.begin(), day.articles.end(), id,
                               [](const NewsArticle& a, const std::string& v) { return a.id < v; });
    return (it == day.articles.end() || it->id != id) ? nullptr : &*it;
}

std::string join(const std::vector<std::string>& items, std::string_view sep) {
    std::string out;
    for (std::size_t i = 0; i < items.size(); ++i) {
        if (i) out += sep;
        out += items[i];
    }
    return out;
}

}  // namespace

GenerationRequest build_morning_request(const CandidateSet& candidates, const TradingDay& day,
                                        const Universe& universe, const TradingDay* prior_day,
                                        std::size_t token_budget) {
    if (candidates.tickers.empty()) throw Error(Errc::EmptyCandidates, "no candidates on " + day.date.iso());
    if (candidates.date != day.date)
        throw Error(Errc::DateMismatch, "candidates for " + candidates.date.iso() + ", day " + day.date.iso());

    GenerationRequest req;
    req.date = day.date;
    req.kind = DigestKind::MorningBrief;
    req.pipeline = candidates.pipeline;
    req.token_budget_hint = token_budget;
    req.instruction_id = std::string(morning_brief_prompt().id);

    MentionScanner scanner(universe);
    std::string news;
    std::size_t used = 0;
    std::map<std::string, std::string> first_headline;
    for (const auto& id : candidates.source_articles) {
        const NewsArticle* a = find_article(day, id);
        if (!a) throw Error(Errc::DateMismatch, "article " + id + " is not dated " + day.date.iso());
        const auto mentions = article_mentions(*a, scanner);
        std::string block = "--- article " + a->id + " | tickers: " + join(mentions, ", ") + "\n" +
                            a->headline + "\n" + a->body + "\n";
        const std::size_t cost = estimate_tokens(block);
        if (req.truncated_articles > 0 || used + cost > token_budget) {
            ++req.truncated_articles;
            continue;
        }
        used += cost;
        if (!news.empty()) news += "\n";
        news += block;
        for (const auto& code : mentions) first_headline.emplace(code, a->headline);
    }

    std::string listing;
    std::string table = "code | name | prior_change | headline\n";
    for (const auto& code : candidates.tickers) {
        const Ticker* t = universe.find(code);
        const std::string name = t ? t->name : code;
        listing += "- " + code + " (" + name + ")\n";
        std::string change = "n/a";
        if (prior_day)
            if (const auto* rec = prior_day->record(code)) change = signed_percent(simple_return(rec->open, rec->close));
        auto h = first_headline.find(code);
        table += code + " | " + without_pipes(name) + " | " + change + " | " +
                 (h == first_headline.end() ? std::string("-") : without_pipes(h->second)) + "\n";
    }

    req.context_sections.push_back(
        {"instructions", std::string(morning_brief_prompt().text) + "\nAssets to cover:\n" + listing});
    req.context_sections.push_back({"candidates", table});
    req.context_sections.push_back({"news", news});
    return req;
}

namespace {

// Column widths of the intraday table, in bytes.
constexpr std::size_t kMetricW = 14, kRankW = 6, kCodeW = 14, kNameW = 34, kChangeW = 10, kVolumeW = 16;

std::string pad(std::string_view s, std::size_t width) {
    std::size_t n = std::min(s.size(), width);
    // Do not split a UTF-8 sequence.
    if (n < s.size())
        while (n > 0 && (static_cast<unsigned char>(s[n]) & 0xC0) == 0x80) --n;
    std::string out(s.substr(0, n));
    out.resize(width, ' ');
    return out;
}

std::string rpad_num(const std::string& s, std::size_t width) {
    return s.size() >= width ? s + " " : std::string(width - s.size() - 1, ' ') + s + " ";
}

}  // namespace

std::vector<IntradayRow> intraday_rows(const TradingDay& day, const Universe& universe,
                                       const SelectionConfig& config) {
    std::vector<IntradayRow> rows;
    for (Metric m : kRankingMetrics) {
        for (const auto& e : rank_top_k_entries(day, m, config.k)) {
            const auto* rec = day.record(e.ticker);
            const Ticker* t = universe.find(e.ticker);
            rows.push_back({m, e.ticker, t ? t->name : e.ticker, simple_return(rec->open, rec->close), rec->volume,
                            institutional_imbalance(*rec)});
        }
    }
    return rows;
}

std::string render_intraday_table(const std::vector<IntradayRow>& rows) {
    std::string out = pad("metric", kMetricW) + pad("rank", kRankW) + pad("code", kCodeW) + pad("name", kNameW) +
                      rpad_num("change", kChangeW) + rpad_num("volume", kVolumeW) + "inst_flow\n";
    std::map<Metric, int> rank;
    for (const auto& r : rows) {
        out += pad(to_string(r.metric), kMetricW) + pad(std::to_string(++rank[r.metric]), kRankW) +
               pad(r.code, kCodeW) + pad(r.name, kNameW) + rpad_num(signed_percent(r.change), kChangeW) +
               rpad_num(std::to_string(r.volume), kVolumeW) + signed_int(r.inst_flow) + "\n";
    }
    return out;
}

std::vector<IntradayRow> parse_intraday_table(std::string_view table) {
    std::vector<IntradayRow> rows;
    const auto lines = split_lines(table);
    for (std::size_t i = 1; i < lines.size(); ++i) {
        const std::string& line = lines[i];
        if (trim(line).empty()) continue;
        std::size_t pos = 0;
        auto take = [&](std::size_t width) {
            std::string_view field =
                pos < line.size() ? std::string_view(line).substr(pos, width) : std::string_view{};
            pos += width;
            return std::string(trim(field));
        };
        IntradayRow r;
        auto metric = parse_metric(take(kMetricW));
        if (!metric) throw Error(Errc::ParseError, "intraday table line " + std::to_string(i + 1));
        r.metric = *metric;
        take(kRankW);
        r.code = take(kCodeW);
        r.name = take(kNameW);
        std::string change = take(kChangeW);
        if (!change.empty() && change.back() == '%') change.pop_back();
        r.change = std::stod(change) / 100.0;
        r.volume = std::stoll(take(kVolumeW));
        r.inst_flow = std::stoll(std::string(trim(std::string_view(line).substr(std::min(pos, line.size())))));
        rows.push_back(std::move(r));
    }
    return rows;
}

GenerationRequest build_closing_request(const Digest& morning, const TradingDay& day, const Universe& universe,
                                        const SelectionConfig& config) {
    if (morning.kind != DigestKind::MorningBrief)
        throw Error(Errc::KindMismatch, morning.id + " is not a morning brief");
    if (morning.date != day.date)
        throw Error(Errc::DateMismatch, morning.id + " is dated " + morning.date.iso() + ", day " + day.date.iso());
    GenerationRequest req;
    req.date = day.date;
    req.kind = DigestKind::ClosingBell;
    req.pipeline = morning.pipeline;
    req.instruction_id = std::string(closing_bell_prompt().id);
    req.context_sections.push_back({"instructions", std::string(closing_bell_prompt().text)});
    req.context_sections.push_back({"morning_brief", morning.text});
    req.context_sections.push_back({"intraday_data", render_intraday_table(intraday_rows(day, universe, config))});
    return req;
}

// ---------------------------------------------------------------------------
// Template backend

namespace {

std::vector<std::string> split_on(std::string_view line, std::string_view sep) {
    std::vector<std::string> parts;
    std::size_t start = 0;
    while (true) {
        auto at = line.find(sep, start);
        if (at == std::string_view::npos) {
            parts.emplace_back(line.substr(start));
            return parts;
        }
        parts.emplace_back(line.substr(start, at - start));
        start = at + sep.size();
    }
}

std::string direction_clause(const std::string& change, const char* up, const char* down, const char* flat) {
    if (change == "+0.00%") return std::string(flat) + " " + change;
    return std::string(change.front() == '-' ? down : up) + " " + change;
}

std::string morning_text(const GenerationRequest& req) {
    std::string out = "Morning Brief for " + req.date.iso() + "\n\n";
    const Section* table = req.section("candidates");
    std::size_t written = 0;
    if (table) {
        const auto lines = split_lines(table->text);
        for (std::size_t i = 1; i < lines.size(); ++i) {
            auto cols = split_on(lines[i], " | ");
            if (cols.size() != 4) continue;
            const auto& [code, name, change, headline] = std::tie(cols[0], cols[1], cols[2], cols[3]);
            out += "- " + name + " (" + code + ") ";
            if (change == "n/a")
                out += "had no prior-session print";
            else
                out += direction_clause(change, "rose", "fell", "finished flat at") + " in the prior session";
            if (headline == "-")
                out += ", with no fresh coverage overnight.\n";
            else
                out += ", with coverage led by \"" + headline + "\".\n";
            ++written;
        }
    }
    if (written == 0) out += "There were no notable movers to report.\n";
    return out;
}

std::string closing_text(const GenerationRequest& req) {
    std::string out = "Closing Bell Report for " + req.date.iso() + "\n\n";
    std::vector<IntradayRow> rows;
    if (const Section* s = req.section("intraday_data")) rows = parse_intraday_table(s->text);
    if (const Section* m = req.section("morning_brief")) {
        std::size_t covered = 0;
        for (const auto& line : split_lines(m->text))
            if (line.rfind("- ", 0) == 0) ++covered;
        if (covered > 0) out += "This morning's brief covered " + std::to_string(covered) + " names.\n\n";
    }
    if (rows.empty()) {
        out += "There were no notable movers to report.\n";
        return out;
    }
    std::set<std::string> seen;
    for (const auto& r : rows) {
        if (!seen.insert(r.code).second) continue;
        out += "- " + r.name + " (" + r.code + ") " +
               direction_clause(signed_percent(r.change), "closed up", "closed down", "closed flat at") + " on " +
               grouped(r.volume) + " shares, with institutions net " + (r.inst_flow < 0 ? "sellers" : "buyers") +
               " of " + grouped(r.inst_flow < 0 ? -r.inst_flow : r.inst_flow) + " shares.\n";
    }
    out += "\nSession recap:";
    const char* labels[] = {" by volatility, the leaders were ", "; by volume, ", "; by institutional flow, "};
    for (Metric m : kRankingMetrics) {
        std::vector<std::string> parts;
        for (const auto& r : rows)
            if (r.metric == m) parts.push_back(r.code + " (" + signed_percent(r.change) + ")");
        out += labels[static_cast<int>(m)] + join(parts, ", ");
    }
    out += ".\n";
    return out;
}

}  // namespace

std::string template_generate(const GenerationRequest& request) {
    return request.kind == DigestKind::MorningBrief ? morning_text(request) : closing_text(request);
}

std::string TemplateGenerator::complete(const GenerationRequest& request) { return template_generate(request); }

std::string HttpGenerator::complete(const GenerationRequest& request) {
    std::string system;
    std::string user;
    for (const auto& s : request.context_sections) {
        if (s.name == "instructions") {
            system = s.text;
            continue;
        }
        user += "## " + s.name + "\n" + s.text + "\n";
    }
    return post_completion(endpoint_, system, user, 0.0);
}

// ---------------------------------------------------------------------------
// generate()

namespace {

std::string utc_now() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

}  // namespace

GenerationAudit::GenerationAudit(const std::filesystem::path& path, Clock clock)
    : writer_(path), clock_(std::move(clock)) {}

GenerationAudit::GenerationAudit(Sink sink, Clock clock) : sink_(std::move(sink)), clock_(std::move(clock)) {}

void GenerationAudit::record(const json& entry) {
    if (sink_) sink_(entry);
    else writer_.append(entry);
}

std::string GenerationAudit::now() const { return clock_ ? clock_() : utc_now(); }

Digest generate(const GenerationRequest& request, GeneratorBackend& backend, const RetryPolicy& retry,
                GenerationAudit* audit) {
    validate_request(request);
    if (const std::size_t limit = backend.max_request_tokens()) {
        std::size_t total = 0;
        for (const auto& s : request.context_sections) total += estimate_tokens(s.text);
        if (total > limit)
            throw Error(Errc::BudgetExceeded,
                        std::to_string(total) + " tokens exceeds " + backend.name() + " limit " + std::to_string(limit));
    }

    const std::string started = audit ? audit->now() : std::string();
    const int max_attempts = backend.deterministic() ? 1 : 1 + std::max(0, retry.retries);
    std::string text;
    int attempt = 0;
    for (;;) {
        ++attempt;
        try {
            text = backend.complete(request);
            break;
        } catch (const Error& e) {
            if (e.code() != Errc::BackendTimeout || attempt >= max_attempts) throw;
            std::this_thread::sleep_for(retry.base_delay * (1 << (attempt - 1)));
        }
    }
    if (trim(text).empty()) throw Error(Errc::EmptyCompletion, backend.name() + " on " + request.date.iso());

    Digest d;
    d.date = request.date;
    d.kind = request.kind;
    d.generator = backend.name();
    d.pipeline = request.pipeline;
    d.text = std::move(text);
    d.request_fingerprint = fingerprint(request);
    d.id = digest_id(d.date, d.kind, d.source());

    if (audit) {
        json section_hashes = json::object();
        for (const auto& s : request.context_sections) section_hashes[s.name] = hash_hex(s.text);
        audit->record({{"digest_id", d.id},
                       {"fingerprint", d.request_fingerprint},
                       {"backend", backend.name()},
                       {"instruction_id", request.instruction_id},
                       {"request_sections_hashes", std::move(section_hashes)},
                       {"request", to_json(request)},
                       {"response_text", d.text},
                       {"truncated_articles", request.truncated_articles},
                       {"attempts", attempt},
                       {"timestamps", {{"started", started}, {"finished", audit->now()}}}});
    }
    return d;
}

}  // namespace mdeval
