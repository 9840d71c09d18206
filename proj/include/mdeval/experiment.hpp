#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mdeval/agents.hpp"
#include "mdeval/digest.hpp"
#include "mdeval/market_data.hpp"
#include "mdeval/reporting.hpp"
#include "mdeval/scoring.hpp"
#include "mdeval/selection.hpp"

namespace mdeval {

// Raw `key = value` pairs; '#' starts a comment.
using ConfigMap = std::map<std::string, std::string>;

// Throws Error(InvalidConfig) on a line without '=' or a repeated key.
ConfigMap parse_config_text(std::string_view text);
ConfigMap load_config_map(const std::filesystem::path& path);

struct GeneratorSpec {
    std::string name;                     // "template" is builtin
    std::optional<HttpEndpoint> endpoint;  // everything else
    std::size_t max_request_tokens = 0;
};

// Which morning brief a closing-bell request is conditioned on.
enum class ClosingContext { Generated, Journalist };

struct ExperimentConfig {
    std::filesystem::path data_dir;
    std::filesystem::path out_dir = "out";
    std::uint64_t seed = 20240101;
    SelectionConfig selection;
    std::vector<Pipeline> pipelines = {Pipeline::Journalist, Pipeline::PerformanceBased,
                                       Pipeline::ProfessionalInsight};
    std::vector<GeneratorSpec> generators = {GeneratorSpec{"template", std::nullopt, 0}};
    // Seeds are filled in by resolved_agents().
    std::vector<AgentConfig> agents;
    ScoringConfig scoring;
    bool strict = false;
    std::size_t max_in_flight = 1;
    ClosingContext closing_context = ClosingContext::Generated;
    std::size_t token_budget = kDefaultTokenBudget;
    Averaging averaging = Averaging::Micro;
    BehaviorPooling pooling = BehaviorPooling::Pooled;
    std::optional<std::filesystem::path> human_decisions;
    RetryPolicy retry;

    // Config-independent checks. Throws Error(InvalidConfig).
    void validate() const;
    // Also checks k against the loaded universe.
    void validate(const Universe& universe) const;
};

// Keys (all optional):
//   data_dir, out, seed, k, pipelines, generators, agents, rise_threshold,
//   fall_threshold, strict, max_in_flight, closing_context
//   (generated|journalist), token_budget, averaging (micro|macro),
//   behavior_pooling (pooled|per-investor), human_decisions, retries,
//   retry_delay_ms,
//   generator.<name>.{url,key_env,max_tokens,timeout_ms},
//   agent.<name>.{kind,url,key_env,timeout_ms,p_buy,p_sell,max_positions,
//                 momentum_threshold,restrict_to_digest}
// Relative paths resolve against `base_dir`. Throws Error(InvalidConfig) on
// unknown keys or bad values.
ExperimentConfig build_experiment_config(const ConfigMap& map, const std::filesystem::path& base_dir = {});

// Agents with seeds derived from the root seed ("agent/<name>").
std::vector<AgentConfig> resolved_agents(const ExperimentConfig& config);

// The three builtin baselines: no-action, random, momentum.
std::vector<AgentConfig> default_agents();

// --- stages -----------------------------------------------------------------

LoadResult ingest_stage(const ExperimentConfig& config);

struct SelectionOutput {
    std::vector<CandidateSet> sets;  // day order, then pipeline order
    std::vector<std::string> warnings;
};
SelectionOutput selection_stage(const ExperimentConfig& config, const MarketDataset& dataset);

struct GenerationOutput {
    std::vector<Digest> digests;  // day order
    std::vector<json> audit;      // one entry per generated digest, same order
    std::vector<std::string> warnings;
};
// `clock` stamps the audit entries; empty means UTC wall time.
GenerationOutput generation_stage(const ExperimentConfig& config, const MarketDataset& dataset,
                                  const std::vector<CandidateSet>& sets, GenerationAudit::Clock clock = {});

struct DecisionOutput {
    std::vector<DecisionRecord> records;  // digest order, then agent order
    std::vector<json> archive;            // raw replies and warnings per record
};
DecisionOutput decision_stage(const ExperimentConfig& config, const MarketDataset& dataset,
                              const std::vector<Digest>& digests);

struct ReportBundle {
    std::string table1;
    std::string table2;
    std::optional<json> leaderboard;
    std::vector<std::string> warnings;
};
ReportBundle reporting_stage(const ExperimentConfig& config, const std::vector<SessionScore>& scores,
                             const std::vector<DecisionRecord>& records, const DigestIndex& digests);

// --- artifacts ----------------------------------------------------------------

void write_jsonl(const std::filesystem::path& path, const std::vector<json>& lines);

void write_candidate_sets(const std::filesystem::path& path, const std::vector<CandidateSet>& sets);
std::vector<CandidateSet> read_candidate_sets(const std::filesystem::path& path);

void write_digests(const std::filesystem::path& path, const std::vector<Digest>& digests);
std::vector<Digest> read_digests(const std::filesystem::path& path);

void write_decisions(const std::filesystem::path& path, const std::vector<DecisionRecord>& records);
std::vector<DecisionRecord> read_decisions(const std::filesystem::path& path);

std::vector<DecisionSet> decision_sets(const std::vector<DecisionRecord>& records);
InvestorClasses investor_classes(const std::vector<DecisionRecord>& records);

struct RunSummary {
    std::size_t days = 0;
    std::size_t candidate_sets = 0;
    std::size_t digests = 0;
    std::size_t decision_sets = 0;
    std::vector<SessionScore> scores;
    std::vector<std::string> warnings;
};

// ingest -> select -> generate -> decide -> score -> report, writing every
// artifact under config.out_dir. Builtin-only configurations are a pure
// function of (config, dataset) apart from audit timestamps.
RunSummary run_experiment(const ExperimentConfig& config, GenerationAudit::Clock clock = {});

}  // namespace mdeval
