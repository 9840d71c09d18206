#pragma once

#include <chrono>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "mdeval/http_backend.hpp"
#include "mdeval/io.hpp"
#include "mdeval/market_data.hpp"
#include "mdeval/selection.hpp"
#include "mdeval/types.hpp"

namespace mdeval {

struct Section {
    std::string name;
    std::string text;

    bool operator==(const Section&) const = default;
};

inline constexpr std::size_t kDefaultTokenBudget = 8000;

struct GenerationRequest {
    Date date;
    DigestKind kind = DigestKind::MorningBrief;
    Pipeline pipeline = Pipeline::PerformanceBased;
    std::vector<Section> context_sections;
    std::size_t token_budget_hint = kDefaultTokenBudget;
    std::string instruction_id;        // prompt template id, e.g. "morning_brief.v1"
    std::size_t truncated_articles = 0;  // articles dropped by the token budget

    [[nodiscard]] const Section* section(std::string_view name) const;

    bool operator==(const GenerationRequest&) const = default;
};

// Throws Error(InvalidConfig) unless the kind's mandatory sections are present.
void validate_request(const GenerationRequest& request);

// Stable hash of the canonical JSON form.
std::string fingerprint(const GenerationRequest& request);

json to_json(const GenerationRequest& request);
GenerationRequest request_from_json(const json& j);

// Whitespace-delimited word count; the unit of token_budget_hint.
std::size_t estimate_tokens(std::string_view text);

struct Digest {
    std::string id;
    Date date;
    DigestKind kind = DigestKind::MorningBrief;
    std::string generator;  // "journalist" for human transcripts
    Pipeline pipeline = Pipeline::Journalist;
    std::string text;
    std::string request_fingerprint;

    // "journalist", or "<generator>-<pipeline>".
    [[nodiscard]] std::string source() const;

    bool operator==(const Digest&) const = default;
};

// `{date}-{kind}-{source}`
std::string digest_id(const Date& date, DigestKind kind, const std::string& source);

json to_json(const Digest& digest);
Digest digest_from_json(const json& j);

using DigestIndex = std::map<std::string, Digest>;

// Throws Error(DuplicateRecord) on a repeated id.
DigestIndex index_digests(const std::vector<Digest>& digests);

// Newlines normalized to '\n', everything else byte-for-byte.
std::string normalize_newlines(std::string_view text);

// Human transcript as a digest; nullopt when the day has none of that kind.
std::optional<Digest> journalist_digest(const TradingDay& day, DigestKind kind);

class GeneratorBackend {
public:
    virtual ~GeneratorBackend() = default;
    [[nodiscard]] virtual std::string name() const = 0;
    // Identical requests yield byte-identical text.
    [[nodiscard]] virtual bool deterministic() const = 0;
    // Upper bound on estimate_tokens over all sections; 0 means unbounded.
    [[nodiscard]] virtual std::size_t max_request_tokens() const { return 0; }
    virtual std::string complete(const GenerationRequest& request) = 0;
};

// Offline reference backend; output is a pure function of the request.
class TemplateGenerator final : public GeneratorBackend {
public:
    [[nodiscard]] std::string name() const override { return "template"; }
    [[nodiscard]] bool deterministic() const override { return true; }
    std::string complete(const GenerationRequest& request) override;
};

std::string template_generate(const GenerationRequest& request);

// External completion endpoint; the `instructions` section is sent as the
// system text and the remaining sections as the user text.
class HttpGenerator final : public GeneratorBackend {
public:
    HttpGenerator(std::string name, HttpEndpoint endpoint, std::size_t max_request_tokens = 0)
        : name_(std::move(name)), endpoint_(std::move(endpoint)), max_tokens_(max_request_tokens) {}

    [[nodiscard]] std::string name() const override { return name_; }
    [[nodiscard]] bool deterministic() const override { return false; }
    [[nodiscard]] std::size_t max_request_tokens() const override { return max_tokens_; }
    std::string complete(const GenerationRequest& request) override;

private:
    std::string name_;
    HttpEndpoint endpoint_;
    std::size_t max_tokens_;
};

// Morning request over the candidates' articles from `day`. `prior_day`
// supplies each candidate's last open-to-close move when available.
// Throws Error(EmptyCandidates) or Error(DateMismatch).
GenerationRequest build_morning_request(const CandidateSet& candidates, const TradingDay& day,
                                        const Universe& universe, const TradingDay* prior_day = nullptr,
                                        std::size_t token_budget = kDefaultTokenBudget);

// One row of the closing request's fixed-width intraday table.
struct IntradayRow {
    Metric metric;
    std::string code;
    std::string name;
    double change = 0;  // open to close
    std::int64_t volume = 0;
    std::int64_t inst_flow = 0;

    bool operator==(const IntradayRow&) const = default;
};

std::vector<IntradayRow> intraday_rows(const TradingDay& day, const Universe& universe,
                                       const SelectionConfig& config);
std::string render_intraday_table(const std::vector<IntradayRow>& rows);
std::vector<IntradayRow> parse_intraday_table(std::string_view table);

// Throws Error(KindMismatch) or Error(DateMismatch).
GenerationRequest build_closing_request(const Digest& morning, const TradingDay& day, const Universe& universe,
                                        const SelectionConfig& config);

struct RetryPolicy {
    int retries = 2;
    std::chrono::milliseconds base_delay{500};  // doubled per attempt
};

// Append-only record of every generate() call; one writer, many callers.
class GenerationAudit {
public:
    using Clock = std::function<std::string()>;

    using Sink = std::function<void(const json&)>;
    explicit GenerationAudit(const std::filesystem::path& path, Clock clock = {});
    // Hands each entry to `sink` instead of a file.
    explicit GenerationAudit(Sink sink, Clock clock = {});

    void record(const json& entry);
    [[nodiscard]] std::string now() const;

private:
    JsonlWriter writer_;
    Sink sink_;
    Clock clock_;
};

// Runs the backend and wraps the completion. Non-deterministic backends get
// `retry.retries` extra attempts on BackendTimeout. Throws
// Error(EmptyCompletion) and Error(BudgetExceeded).
Digest generate(const GenerationRequest& request, GeneratorBackend& backend, const RetryPolicy& retry = {},
                GenerationAudit* audit = nullptr);

}  // namespace mdeval
