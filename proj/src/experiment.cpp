#include "mdeval/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cstdlib>
#include <exception>
#include <set>
#include <sstream>
#include <thread>

#include "mdeval/hashing.hpp"
#include "mdeval/prompts.hpp"
#include "mdeval/rng.hpp"

namespace mdeval {

// ---------------------------------------------------------------------------
// Config parsing

ConfigMap parse_config_text(std::string_view text) {
    ConfigMap map;
    const auto lines = split_lines(text);
    for (std::size_t i = 0; i < lines.size(); ++i) {
        std::string_view line = lines[i];
        if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string_view::npos)
            throw Error(Errc::InvalidConfig, "config line " + std::to_string(i + 1) + ": expected key = value");
        const std::string key(trim(line.substr(0, eq)));
        const std::string value(trim(line.substr(eq + 1)));
        if (key.empty()) throw Error(Errc::InvalidConfig, "config line " + std::to_string(i + 1) + ": empty key");
        if (!map.emplace(key, value).second)
            throw Error(Errc::InvalidConfig, "config line " + std::to_string(i + 1) + ": repeated key " + key);
    }
    return map;
}

ConfigMap load_config_map(const std::filesystem::path& path) { return parse_config_text(read_file(path)); }

namespace {

std::vector<std::string> split_list(std::string_view text) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (start <= text.size()) {
        auto comma = text.find(',', start);
        if (comma == std::string_view::npos) comma = text.size();
        auto item = trim(text.substr(start, comma - start));
        if (!item.empty()) out.emplace_back(item);
        start = comma + 1;
    }
    return out;
}

template <typename T>
T parse_integer(const std::string& key, const std::string& value) {
    T out{};
    const auto* end = value.data() + value.size();
    auto [ptr, ec] = std::from_chars(value.data(), end, out);
    if (ec != std::errc() || ptr != end) throw Error(Errc::InvalidConfig, key + ": not an integer: " + value);
    return out;
}

double parse_double(const std::string& key, const std::string& value) {
    char* end = nullptr;
    const double v = std::strtod(value.c_str(), &end);
    if (value.empty() || end != value.c_str() + value.size()) throw Error(Errc::InvalidConfig, key + ": not a number: " + value);
    return v;
}

bool parse_bool(const std::string& key, const std::string& value) {
    const auto v = to_lower(value);
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw Error(Errc::InvalidConfig, key + ": expected true or false");
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& value) {
    std::filesystem::path p(value);
    return p.is_absolute() || base.empty() ? p : base / p;
}

std::optional<AgentKind> builtin_kind(std::string_view name) {
    if (name == "no-action") return AgentKind::NoAction;
    if (name == "random") return AgentKind::Random;
    if (name == "momentum") return AgentKind::MomentumReader;
    if (name == "external") return AgentKind::External;
    return std::nullopt;
}

HttpEndpoint endpoint_from(const ConfigMap& map, const std::string& prefix) {
    HttpEndpoint ep;
    auto get = [&](const char* field) -> const std::string* {
        auto it = map.find(prefix + field);
        return it == map.end() ? nullptr : &it->second;
    };
    if (const auto* url = get("url")) {
        ep.url = *url;
    } else if (auto env = HttpEndpoint::from_environment()) {
        ep = *env;
    } else {
        throw Error(Errc::InvalidConfig, prefix + "url is not set and DIGEST_LLM_URL is empty");
    }
    if (const auto* key_env = get("key_env")) {
        const char* v = std::getenv(key_env->c_str());
        ep.api_key = v ? v : "";
    } else if (const char* v = std::getenv("DIGEST_LLM_KEY")) {
        ep.api_key = v;
    }
    if (const auto* t = get("timeout_ms"))
        ep.timeout = std::chrono::milliseconds(parse_integer<long>(prefix + "timeout_ms", *t));
    return ep;
}

const std::set<std::string> kTopLevelKeys = {
    "data_dir",       "out",           "seed",          "k",               "pipelines",
    "generators",     "agents",        "rise_threshold", "fall_threshold", "strict",
    "max_in_flight",  "closing_context", "token_budget", "averaging",      "behavior_pooling",
    "human_decisions", "retries",      "retry_delay_ms"};
const std::set<std::string> kGeneratorKeys = {"url", "key_env", "max_tokens", "timeout_ms"};
const std::set<std::string> kAgentKeys = {"kind",          "url",
                                          "key_env",       "timeout_ms",
                                          "p_buy",         "p_sell",
                                          "max_positions", "momentum_threshold",
                                          "restrict_to_digest"};

}  // namespace

std::vector<AgentConfig> default_agents() {
    std::vector<AgentConfig> out(3);
    out[0].name = "no-action";
    out[0].kind = AgentKind::NoAction;
    out[1].name = "random";
    out[1].kind = AgentKind::Random;
    out[2].name = "momentum";
    out[2].kind = AgentKind::MomentumReader;
    return out;
}

ExperimentConfig build_experiment_config(const ConfigMap& map, const std::filesystem::path& base_dir) {
    ExperimentConfig c;
    std::vector<std::string> generator_names{"template"};
    std::vector<std::string> agent_names{"no-action", "random", "momentum"};

    for (const auto& [key, value] : map) {
        if (kTopLevelKeys.count(key)) continue;
        const auto dot = key.find('.');
        const auto last = key.rfind('.');
        const std::string head = key.substr(0, dot);
        const std::string field = last == std::string::npos ? "" : key.substr(last + 1);
        const bool known = dot != std::string::npos && dot < last &&
                           ((head == "generator" && kGeneratorKeys.count(field)) ||
                            (head == "agent" && kAgentKeys.count(field)));
        if (!known) throw Error(Errc::InvalidConfig, "unknown config key " + key);
    }

    auto get = [&](const std::string& key) -> const std::string* {
        auto it = map.find(key);
        return it == map.end() ? nullptr : &it->second;
    };

    if (const auto* v = get("data_dir")) c.data_dir = resolve(base_dir, *v);
    if (const auto* v = get("out")) c.out_dir = resolve(base_dir, *v);
    if (const auto* v = get("seed")) c.seed = parse_integer<std::uint64_t>("seed", *v);
    if (const auto* v = get("k")) c.selection.k = parse_integer<std::size_t>("k", *v);
    if (const auto* v = get("pipelines")) {
        c.pipelines.clear();
        for (const auto& name : split_list(*v)) {
            auto p = parse_pipeline(name);
            if (!p) throw Error(Errc::InvalidConfig, "unknown pipeline " + name);
            if (std::find(c.pipelines.begin(), c.pipelines.end(), *p) == c.pipelines.end()) c.pipelines.push_back(*p);
        }
    }
    if (const auto* v = get("generators")) generator_names = split_list(*v);
    if (const auto* v = get("agents")) agent_names = split_list(*v);
    if (const auto* v = get("rise_threshold")) c.scoring.rise_threshold = parse_double("rise_threshold", *v);
    if (const auto* v = get("fall_threshold")) c.scoring.fall_threshold = parse_double("fall_threshold", *v);
    if (const auto* v = get("strict")) c.strict = parse_bool("strict", *v);
    if (const auto* v = get("max_in_flight")) c.max_in_flight = parse_integer<std::size_t>("max_in_flight", *v);
    if (const auto* v = get("closing_context")) {
        if (*v == "generated") c.closing_context = ClosingContext::Generated;
        else if (*v == "journalist") c.closing_context = ClosingContext::Journalist;
        else throw Error(Errc::InvalidConfig, "closing_context must be generated or journalist");
    }
    if (const auto* v = get("token_budget")) c.token_budget = parse_integer<std::size_t>("token_budget", *v);
    if (const auto* v = get("averaging")) {
        if (*v == "micro") c.averaging = Averaging::Micro;
        else if (*v == "macro") c.averaging = Averaging::MacroPerDay;
        else throw Error(Errc::InvalidConfig, "averaging must be micro or macro");
    }
    if (const auto* v = get("behavior_pooling")) {
        if (*v == "pooled") c.pooling = BehaviorPooling::Pooled;
        else if (*v == "per-investor") c.pooling = BehaviorPooling::PerInvestorThenAverage;
        else throw Error(Errc::InvalidConfig, "behavior_pooling must be pooled or per-investor");
    }
    if (const auto* v = get("human_decisions")) c.human_decisions = resolve(base_dir, *v);
    if (const auto* v = get("retries")) c.retry.retries = parse_integer<int>("retries", *v);
    if (const auto* v = get("retry_delay_ms"))
        c.retry.base_delay = std::chrono::milliseconds(parse_integer<long>("retry_delay_ms", *v));

    c.generators.clear();
    for (const auto& name : generator_names) {
        GeneratorSpec g;
        g.name = name;
        const std::string prefix = "generator." + name + ".";
        if (name != "template") g.endpoint = endpoint_from(map, prefix);
        if (const auto* v = get(prefix + "max_tokens")) g.max_request_tokens = parse_integer<std::size_t>(prefix + "max_tokens", *v);
        c.generators.push_back(std::move(g));
    }

    c.agents.clear();
    for (const auto& name : agent_names) {
        AgentConfig a;
        a.name = name;
        const std::string prefix = "agent." + name + ".";
        if (const auto* v = get(prefix + "kind")) {
            auto k = builtin_kind(*v);
            if (!k) throw Error(Errc::InvalidConfig, prefix + "kind: unknown agent kind " + *v);
            a.kind = *k;
        } else if (auto k = builtin_kind(name)) {
            a.kind = *k;
        } else {
            a.kind = AgentKind::External;
        }
        if (a.kind == AgentKind::External) a.endpoint = endpoint_from(map, prefix);
        if (const auto* v = get(prefix + "p_buy")) a.p_buy = parse_double(prefix + "p_buy", *v);
        if (const auto* v = get(prefix + "p_sell")) a.p_sell = parse_double(prefix + "p_sell", *v);
        if (const auto* v = get(prefix + "max_positions")) a.max_positions = parse_integer<std::size_t>(prefix + "max_positions", *v);
        if (const auto* v = get(prefix + "momentum_threshold"))
            a.momentum_threshold = parse_double(prefix + "momentum_threshold", *v);
        if (const auto* v = get(prefix + "restrict_to_digest")) a.restrict_to_digest = parse_bool(prefix + "restrict_to_digest", *v);
        c.agents.push_back(std::move(a));
    }
    c.validate();
    return c;
}

void ExperimentConfig::validate() const {
    if (data_dir.empty()) throw Error(Errc::InvalidConfig, "data_dir is not set");
    if (selection.k == 0) throw Error(Errc::InvalidConfig, "k must be at least 1");
    if (pipelines.empty()) throw Error(Errc::InvalidConfig, "no pipelines selected");
    if (generators.empty() && std::any_of(pipelines.begin(), pipelines.end(),
                                          [](Pipeline p) { return p != Pipeline::Journalist; }))
        throw Error(Errc::InvalidConfig, "generated pipelines need at least one generator");
    if (max_in_flight == 0) throw Error(Errc::InvalidConfig, "max_in_flight must be at least 1");
    if (token_budget == 0) throw Error(Errc::InvalidConfig, "token_budget must be positive");
    if (retry.retries < 0) throw Error(Errc::InvalidConfig, "retries must be non-negative");
    scoring.validate();
    std::set<std::string> names;
    for (const auto& g : generators) {
        if (g.name.empty() || g.name == "journalist")
            throw Error(Errc::InvalidConfig, "generator name '" + g.name + "' is reserved or empty");
        if (!names.insert(g.name).second) throw Error(Errc::InvalidConfig, "generator " + g.name + " listed twice");
        if (g.name != "template" && !g.endpoint) throw Error(Errc::InvalidConfig, "generator " + g.name + " has no endpoint");
    }
    names.clear();
    for (const auto& a : agents) {
        a.validate();
        if (!names.insert(a.name).second) throw Error(Errc::InvalidConfig, "agent " + a.name + " listed twice");
    }
}

void ExperimentConfig::validate(const Universe& universe) const {
    validate();
    selection.validate(universe.size());
}

std::vector<AgentConfig> resolved_agents(const ExperimentConfig& config) {
    auto agents = config.agents;
    for (auto& a : agents) a.seed = derive_seed(config.seed, "agent/" + a.name);
    return agents;
}

// ---------------------------------------------------------------------------
// Stage helpers

namespace {

template <typename T>
void append(std::vector<T>& into, std::vector<T>&& from) {
    into.insert(into.end(), std::make_move_iterator(from.begin()), std::make_move_iterator(from.end()));
}

// Runs fn(i) for i in [0, n) on up to `width` threads. Results keep index
// order; the lowest-index exception is rethrown.
template <typename T, typename Fn>
std::vector<T> for_each_index(std::size_t n, std::size_t width, Fn fn) {
    std::vector<T> results(n);
    std::vector<std::exception_ptr> errors(n);
    auto work = [&](std::size_t i) {
        try {
            results[i] = fn(i);
        } catch (...) {
            errors[i] = std::current_exception();
        }
    };
    width = std::max<std::size_t>(1, std::min(width, n));
    if (width == 1) {
        for (std::size_t i = 0; i < n; ++i) {
            work(i);
            if (errors[i]) std::rethrow_exception(errors[i]);
        }
        return results;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < width; ++t)
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < n; i = next++) work(i);
        });
    for (auto& th : pool) th.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
    return results;
}

[[noreturn]] void rethrow_with_context(const Error& e, const std::string& context) {
    throw Error(e.code(), context + ": " + e.message());
}

std::string context_of(const Date& date, std::string_view what) { return date.iso() + " " + std::string(what); }

bool wants(const ExperimentConfig& c, Pipeline p) {
    return std::find(c.pipelines.begin(), c.pipelines.end(), p) != c.pipelines.end();
}

std::unique_ptr<GeneratorBackend> make_backend(const GeneratorSpec& spec) {
    if (!spec.endpoint) return std::make_unique<TemplateGenerator>();
    return std::make_unique<HttpGenerator>(spec.name, *spec.endpoint, spec.max_request_tokens);
}

}  // namespace

LoadResult ingest_stage(const ExperimentConfig& config) {
    LoadOptions options;
    options.strict = config.strict;
    auto result = load_dataset(DatasetPaths::in_directory(config.data_dir), options);
    if (result.dataset.days.empty()) throw Error(Errc::EmptyDay, "dataset has no trading days");
    config.validate(result.dataset.universe);
    return result;
}

SelectionOutput selection_stage(const ExperimentConfig& config, const MarketDataset& dataset) {
    config.validate(dataset.universe);
    const bool pb = wants(config, Pipeline::PerformanceBased);
    const bool pi = wants(config, Pipeline::ProfessionalInsight);
    auto per_day = for_each_index<SelectionOutput>(dataset.days.size(), config.max_in_flight, [&](std::size_t i) {
        SelectionOutput out;
        const auto& day = dataset.days[i];
        ReferenceExtractor extractor;
        for (auto p : config.pipelines) {
            if (p == Pipeline::PerformanceBased && pb) {
                if (i == 0) {
                    out.warnings.push_back(context_of(day.date, "performance-based") + ": no prior session, skipped");
                    continue;
                }
                try {
                    out.sets.push_back(performance_based_candidates(dataset.days[i - 1], day, dataset.universe,
                                                                    config.selection));
                } catch (const Error& e) {
                    rethrow_with_context(e, context_of(day.date, "performance-based"));
                }
            } else if (p == Pipeline::ProfessionalInsight && pi) {
                try {
                    auto set = professional_insight_candidates(day, dataset.universe, extractor);
                    for (const auto& w : set.warnings) out.warnings.push_back(context_of(day.date, "professional-insight") + ": " + w);
                    out.sets.push_back(std::move(set));
                } catch (const Error& e) {
                    if (e.code() == Errc::MissingTranscript && !config.strict) {
                        out.warnings.push_back(context_of(day.date, "professional-insight") + ": " + e.message() + ", skipped");
                        continue;
                    }
                    rethrow_with_context(e, context_of(day.date, "professional-insight"));
                }
            }
        }
        return out;
    });
    SelectionOutput merged;
    for (auto& d : per_day) {
        append(merged.sets, std::move(d.sets));
        append(merged.warnings, std::move(d.warnings));
    }
    return merged;
}

GenerationOutput generation_stage(const ExperimentConfig& config, const MarketDataset& dataset,
                                  const std::vector<CandidateSet>& sets, GenerationAudit::Clock clock) {
    config.validate(dataset.universe);
    std::map<Date, std::vector<const CandidateSet*>> by_date;
    for (const auto& s : sets) {
        if (!dataset.find_day(s.date))
            throw Error(Errc::DateOutOfRange, "candidate set for " + s.date.iso() + " has no trading day");
        if (s.pipeline == Pipeline::Journalist) throw Error(Errc::InvalidConfig, "journalist candidate set");
        by_date[s.date].push_back(&s);
    }
    const bool journalist = wants(config, Pipeline::Journalist);

    auto per_day = for_each_index<GenerationOutput>(dataset.days.size(), config.max_in_flight, [&](std::size_t i) {
        GenerationOutput out;
        const auto& day = dataset.days[i];
        const TradingDay* prior = i > 0 ? &dataset.days[i - 1] : nullptr;
        GenerationAudit audit([&out](const json& entry) { out.audit.push_back(entry); }, clock);

        const auto j_morning = journalist_digest(day, DigestKind::MorningBrief);
        const auto j_closing = journalist_digest(day, DigestKind::ClosingBell);
        if (journalist) {
            if (j_morning) out.digests.push_back(*j_morning);
            else out.warnings.push_back(context_of(day.date, "journalist") + ": no morning transcript");
            if (j_closing) out.digests.push_back(*j_closing);
            else out.warnings.push_back(context_of(day.date, "journalist") + ": no closing transcript");
        }

        auto it = by_date.find(day.date);
        if (it == by_date.end()) return out;
        for (const auto& spec : config.generators) {
            auto backend = make_backend(spec);
            for (const CandidateSet* set : it->second) {
                const std::string ctx = context_of(day.date, std::string(to_string(set->pipeline)) + "/" + spec.name);
                try {
                    if (set->tickers.empty()) {
                        out.warnings.push_back(ctx + ": no candidates, no digest");
                        continue;
                    }
                    auto morning_req = build_morning_request(*set, day, dataset.universe, prior, config.token_budget);
                    if (morning_req.truncated_articles > 0)
                        out.warnings.push_back(ctx + ": " + std::to_string(morning_req.truncated_articles) +
                                               " articles dropped by the token budget");
                    Digest morning = generate(morning_req, *backend, config.retry, &audit);
                    out.digests.push_back(morning);

                    const Digest* context = &morning;
                    if (config.closing_context == ClosingContext::Journalist) {
                        if (!j_morning) {
                            out.warnings.push_back(ctx + ": no journalist morning brief to condition on");
                            continue;
                        }
                        context = &*j_morning;
                    }
                    auto closing_req = build_closing_request(*context, day, dataset.universe, config.selection);
                    closing_req.pipeline = set->pipeline;
                    out.digests.push_back(generate(closing_req, *backend, config.retry, &audit));
                } catch (const Error& e) {
                    rethrow_with_context(e, ctx);
                }
            }
        }
        return out;
    });
    GenerationOutput merged;
    for (auto& d : per_day) {
        append(merged.digests, std::move(d.digests));
        append(merged.audit, std::move(d.audit));
        append(merged.warnings, std::move(d.warnings));
    }
    index_digests(merged.digests);  // rejects duplicate ids
    return merged;
}

DecisionOutput decision_stage(const ExperimentConfig& config, const MarketDataset& dataset,
                              const std::vector<Digest>& digests) {
    const auto agents = resolved_agents(config);
    for (const auto& a : agents) a.validate();
    auto per_digest = for_each_index<DecisionOutput>(digests.size(), config.max_in_flight, [&](std::size_t i) {
        DecisionOutput out;
        const auto view = DigestView::of(digests[i]);
        for (const auto& agent : agents) {
            try {
                auto d = decide(agent, view, dataset.universe);
                std::string joined;
                for (const auto& r : d.raw_replies) joined += r + '\n';
                DecisionRecord rec{d.decision, agent.investor_class(), d.raw_replies.empty() ? "" : hash_hex(joined)};
                out.archive.push_back({{"investor_id", agent.name},
                                       {"digest_id", view.id},
                                       {"raw_replies", d.raw_replies},
                                       {"warnings", d.warnings}});
                out.records.push_back(std::move(rec));
            } catch (const Error& e) {
                rethrow_with_context(e, view.id + " " + agent.name);
            }
        }
        return out;
    });
    DecisionOutput merged;
    for (auto& d : per_digest) {
        append(merged.records, std::move(d.records));
        append(merged.archive, std::move(d.archive));
    }
    return merged;
}

std::vector<DecisionSet> decision_sets(const std::vector<DecisionRecord>& records) {
    std::vector<DecisionSet> out;
    out.reserve(records.size());
    for (const auto& r : records) out.push_back(r.decision);
    return out;
}

InvestorClasses investor_classes(const std::vector<DecisionRecord>& records) {
    InvestorClasses out;
    for (const auto& r : records) {
        auto [it, inserted] = out.emplace(r.decision.investor_id, r.investor_class);
        if (!inserted && it->second != r.investor_class)
            throw Error(Errc::InvalidConfig, "investor " + r.decision.investor_id + " appears under two classes");
    }
    return out;
}

ReportBundle reporting_stage(const ExperimentConfig& config, const std::vector<SessionScore>& scores,
                             const std::vector<DecisionRecord>& records, const DigestIndex& digests) {
    ReportBundle bundle;
    const auto classes = investor_classes(records);
    const auto sets = decision_sets(records);
    auto generators = generators_in(scores);
    if (generators.empty())
        for (const auto& g : config.generators) generators.push_back(g.name);
    std::vector<AccuracyTable> acc;
    std::vector<BehaviorTable> beh;
    for (const auto& g : generators) {
        acc.push_back(accuracy_table(scores, classes, g));
        beh.push_back(behavior_table(sets, digests, classes, g, config.pooling));
        for (const auto& w : beh.back().warnings) bundle.warnings.push_back(w);
    }
    bundle.table1 = render_accuracy_tables(acc);
    bundle.table2 = render_behavior_tables(beh);

    std::vector<SessionScore> human, llm;
    for (const auto& s : scores) {
        auto it = classes.find(s.investor_id);
        if (it == classes.end()) continue;
        if (it->second == InvestorClass::Human) human.push_back(s);
        if (it->second == InvestorClass::LLM) llm.push_back(s);
    }
    if (!human.empty()) bundle.leaderboard = to_json(leaderboard(human, llm));
    return bundle;
}

// ---------------------------------------------------------------------------
// Artifacts

void write_jsonl(const std::filesystem::path& path, const std::vector<json>& lines) {
    std::string text;
    for (const auto& l : lines) text += l.dump() + '\n';
    write_file(path, text);
}

void write_candidate_sets(const std::filesystem::path& path, const std::vector<CandidateSet>& sets) {
    std::vector<json> lines;
    for (const auto& s : sets) lines.push_back(to_json(s));
    write_jsonl(path, lines);
}

std::vector<CandidateSet> read_candidate_sets(const std::filesystem::path& path) {
    std::vector<CandidateSet> out;
    for (const auto& j : read_jsonl(path)) out.push_back(candidate_set_from_json(j));
    return out;
}

void write_digests(const std::filesystem::path& path, const std::vector<Digest>& digests) {
    std::vector<json> lines;
    for (const auto& d : digests) lines.push_back(to_json(d));
    write_jsonl(path, lines);
}

std::vector<Digest> read_digests(const std::filesystem::path& path) {
    std::vector<Digest> out;
    for (const auto& j : read_jsonl(path)) out.push_back(digest_from_json(j));
    return out;
}

void write_decisions(const std::filesystem::path& path, const std::vector<DecisionRecord>& records) {
    std::vector<json> lines;
    for (const auto& r : records) lines.push_back(to_json(r));
    write_jsonl(path, lines);
}

std::vector<DecisionRecord> read_decisions(const std::filesystem::path& path) {
    std::vector<DecisionRecord> out;
    for (const auto& j : read_jsonl(path)) out.push_back(decision_record_from_json(j));
    return out;
}

RunSummary run_experiment(const ExperimentConfig& config, GenerationAudit::Clock clock) {
    config.validate();
    RunSummary summary;
    const auto loaded = ingest_stage(config);
    const auto& dataset = loaded.dataset;
    summary.days = dataset.days.size();
    for (const auto& w : loaded.warnings) summary.warnings.push_back(w);
    for (const auto& r : loaded.rejects)
        summary.warnings.push_back(r.file + " row " + std::to_string(r.row) + ": " + r.reason);

    std::filesystem::create_directories(config.out_dir);
    const auto& out = config.out_dir;

    auto selection = selection_stage(config, dataset);
    write_candidate_sets(out / "selection.log", selection.sets);
    summary.candidate_sets = selection.sets.size();
    append(summary.warnings, std::move(selection.warnings));

    auto generation = generation_stage(config, dataset, selection.sets, std::move(clock));
    write_digests(out / "digests.jsonl", generation.digests);
    write_jsonl(out / "generation_audit.log", generation.audit);
    summary.digests = generation.digests.size();
    append(summary.warnings, std::move(generation.warnings));

    auto decisions = decision_stage(config, dataset, generation.digests);
    if (config.human_decisions) append(decisions.records, read_decisions(*config.human_decisions));
    write_decisions(out / "decisions.jsonl", decisions.records);
    write_jsonl(out / "agent_archive.jsonl", decisions.archive);
    summary.decision_sets = decisions.records.size();

    const auto index = index_digests(generation.digests);
    auto evaluation = evaluate_sessions(decision_sets(decisions.records), index, dataset, config.scoring, config.averaging);
    write_file(out / "scores.csv", scores_to_csv(evaluation.scores));
    append(summary.warnings, std::move(evaluation.warnings));

    auto bundle = reporting_stage(config, evaluation.scores, decisions.records, index);
    write_file(out / "table1.md", bundle.table1);
    write_file(out / "table2.md", bundle.table2);
    if (bundle.leaderboard) write_file(out / "leaderboard.json", bundle.leaderboard->dump(2) + "\n");
    append(summary.warnings, std::move(bundle.warnings));

    json manifest = {{"seed", config.seed},
                     {"k", config.selection.k},
                     {"prompts",
                      {{morning_brief_prompt().id, morning_brief_prompt().hash()},
                       {closing_bell_prompt().id, closing_bell_prompt().hash()},
                       {agent_investor_prompt().id, agent_investor_prompt().hash()},
                       {entity_extraction_prompt().id, entity_extraction_prompt().hash()}}},
                     {"days", summary.days},
                     {"candidate_sets", summary.candidate_sets},
                     {"digests", summary.digests},
                     {"decision_sets", summary.decision_sets},
                     {"dropped_entries", evaluation.dropped_entries},
                     {"warnings", summary.warnings}};
    json pipelines = json::array();
    for (auto p : config.pipelines) pipelines.push_back(std::string(to_string(p)));
    manifest["pipelines"] = pipelines;
    json agents = json::array();
    for (const auto& a : resolved_agents(config)) agents.push_back({{"name", a.name}, {"seed", a.seed}});
    manifest["agents"] = agents;
    write_file(out / "run_manifest.json", manifest.dump(2) + "\n");

    summary.scores = std::move(evaluation.scores);
    return summary;
}

}  // namespace mdeval
