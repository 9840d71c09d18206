// Command-line driver: one subcommand per stage plus `run`, `serve`, `synth`.
#include <atomic>
#include <chrono>
#include <csignal>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <thread>

#include <CLI11.hpp>

#include "mdeval/experiment.hpp"
#include "mdeval/http_service.hpp"
#include "mdeval/rng.hpp"
#include "mdeval/session_service.hpp"
#include "mdeval/synthetic.hpp"

namespace fs = std::filesystem;
using namespace mdeval;

namespace {

struct CommonOptions {
    std::string config;
    std::string data;
    std::string out;
    std::optional<std::uint64_t> seed;
    bool strict = false;
    std::optional<std::size_t> k;
    std::string pipelines;
    std::string agents;
};

void add_common(CLI::App* cmd, CommonOptions& o) {
    cmd->add_option("--config", o.config, "key = value configuration file");
    cmd->add_option("--data", o.data, "dataset directory (overrides data_dir)");
    cmd->add_option("--out", o.out, "output directory");
    cmd->add_option("--seed", o.seed, "root seed");
    cmd->add_flag("--strict", o.strict, "fail on the first malformed input row");
    cmd->add_option("--k", o.k, "top-K per ranking metric");
    cmd->add_option("--pipelines", o.pipelines, "comma-separated pipelines");
    cmd->add_option("--agents", o.agents, "comma-separated agent names");
}

ExperimentConfig make_config(const CommonOptions& o) {
    ConfigMap map;
    fs::path base = fs::current_path();
    if (!o.config.empty()) {
        map = load_config_map(o.config);
        base = fs::absolute(o.config).parent_path();
    }
    auto set = [&](const char* key, std::string value) { map[key] = std::move(value); };
    if (!o.data.empty()) set("data_dir", fs::absolute(o.data).string());
    if (!o.out.empty()) set("out", fs::absolute(o.out).string());
    if (o.seed) set("seed", std::to_string(*o.seed));
    if (o.strict) set("strict", "true");
    if (o.k) set("k", std::to_string(*o.k));
    if (!o.pipelines.empty()) set("pipelines", o.pipelines);
    if (!o.agents.empty()) set("agents", o.agents);
    if (!map.count("out")) set("out", fs::absolute("out").string());
    return build_experiment_config(map, base);
}

void print_warnings(const std::vector<std::string>& warnings) {
    for (const auto& w : warnings) std::cerr << "warning: " << w << '\n';
}

LoadResult load(const ExperimentConfig& config) {
    auto loaded = ingest_stage(config);
    for (const auto& r : loaded.rejects)
        std::cerr << "reject: " << r.file << " row " << r.row << " (" << errc_name(r.code) << "): " << r.reason << '\n';
    print_warnings(loaded.warnings);
    return loaded;
}

int cmd_ingest(const CommonOptions& o) {
    const auto config = make_config(o);
    const auto loaded = load(config);
    json rejects = json::array();
    for (const auto& r : loaded.rejects)
        rejects.push_back({{"file", r.file}, {"row", r.row}, {"code", errc_name(r.code)}, {"reason", r.reason}});
    const auto& ds = loaded.dataset;
    json report = {{"tickers", ds.universe.size()},
                   {"days", ds.days.size()},
                   {"records", ds.record_count()},
                   {"first_day", ds.days.front().date.iso()},
                   {"last_day", ds.days.back().date.iso()},
                   {"rejects", rejects},
                   {"warnings", loaded.warnings}};
    fs::create_directories(config.out_dir);
    write_file(config.out_dir / "ingest.json", report.dump(2) + "\n");
    std::cout << ds.universe.size() << " tickers, " << ds.days.size() << " days, " << ds.record_count()
              << " records, " << loaded.rejects.size() << " rejects\n";
    return 0;
}

int cmd_select(const CommonOptions& o) {
    const auto config = make_config(o);
    const auto loaded = load(config);
    auto out = selection_stage(config, loaded.dataset);
    print_warnings(out.warnings);
    fs::create_directories(config.out_dir);
    write_candidate_sets(config.out_dir / "selection.log", out.sets);
    std::cout << out.sets.size() << " candidate sets\n";
    return 0;
}

int cmd_generate(const CommonOptions& o) {
    const auto config = make_config(o);
    const auto loaded = load(config);
    const auto sets = read_candidate_sets(config.out_dir / "selection.log");
    auto out = generation_stage(config, loaded.dataset, sets);
    print_warnings(out.warnings);
    write_digests(config.out_dir / "digests.jsonl", out.digests);
    write_jsonl(config.out_dir / "generation_audit.log", out.audit);
    std::cout << out.digests.size() << " digests\n";
    return 0;
}

int cmd_decide(const CommonOptions& o) {
    const auto config = make_config(o);
    const auto loaded = load(config);
    const auto digests = read_digests(config.out_dir / "digests.jsonl");
    auto out = decision_stage(config, loaded.dataset, digests);
    if (config.human_decisions) {
        auto human = read_decisions(*config.human_decisions);
        out.records.insert(out.records.end(), human.begin(), human.end());
    }
    write_decisions(config.out_dir / "decisions.jsonl", out.records);
    write_jsonl(config.out_dir / "agent_archive.jsonl", out.archive);
    std::cout << out.records.size() << " decision sets\n";
    return 0;
}

int cmd_score(const CommonOptions& o) {
    const auto config = make_config(o);
    const auto loaded = load(config);
    const auto digests = index_digests(read_digests(config.out_dir / "digests.jsonl"));
    const auto records = read_decisions(config.out_dir / "decisions.jsonl");
    auto eval = evaluate_sessions(decision_sets(records), digests, loaded.dataset, config.scoring, config.averaging);
    print_warnings(eval.warnings);
    write_file(config.out_dir / "scores.csv", scores_to_csv(eval.scores));
    std::cout << eval.scores.size() << " scores, " << eval.dropped_entries << " entries dropped\n";
    return 0;
}

int cmd_report(const CommonOptions& o) {
    const auto config = make_config(o);
    const auto digests = index_digests(read_digests(config.out_dir / "digests.jsonl"));
    const auto records = read_decisions(config.out_dir / "decisions.jsonl");
    const auto scores = scores_from_csv(read_file(config.out_dir / "scores.csv"));
    auto bundle = reporting_stage(config, scores, records, digests);
    print_warnings(bundle.warnings);
    write_file(config.out_dir / "table1.md", bundle.table1);
    write_file(config.out_dir / "table2.md", bundle.table2);
    if (bundle.leaderboard) write_file(config.out_dir / "leaderboard.json", bundle.leaderboard->dump(2) + "\n");
    std::cout << bundle.table1 << '\n' << bundle.table2;
    return 0;
}

int cmd_run(const CommonOptions& o) {
    const auto config = make_config(o);
    const auto summary = run_experiment(config);
    print_warnings(summary.warnings);
    std::cout << summary.days << " days, " << summary.candidate_sets << " candidate sets, " << summary.digests
              << " digests, " << summary.decision_sets << " decision sets\n"
              << "outputs in " << config.out_dir.string() << '\n';
    return 0;
}

std::atomic<bool> g_stop{false};

extern "C" void on_signal(int) { g_stop = true; }

struct ServeOptions {
    std::string host = "127.0.0.1";
    int port = 8080;
    std::string token;
    std::string title = "Market digest decision study";
    std::vector<std::string> annotators;
};

int cmd_serve(const CommonOptions& o, const ServeOptions& s) {
    const auto config = make_config(o);
    const auto loaded = load(config);
    const auto digests = read_digests(config.out_dir / "digests.jsonl");

    SessionServiceConfig sc;
    sc.log_path = config.out_dir / "session_log.jsonl";
    sc.scoring = config.scoring;
    const auto scores_path = config.out_dir / "scores.csv";
    const auto decisions_path = config.out_dir / "decisions.jsonl";
    if (fs::exists(scores_path) && fs::exists(decisions_path)) {
        const auto classes = investor_classes(read_decisions(decisions_path));
        for (auto& score : scores_from_csv(read_file(scores_path))) {
            auto it = classes.find(score.investor_id);
            if (it != classes.end() && it->second == InvestorClass::LLM) sc.llm_scores.push_back(std::move(score));
        }
    }
    ExperimentTasks tasks(digests, loaded.dataset, derive_seed(config.seed, "session"));
    SessionService service(std::move(tasks), loaded.dataset, index_digests(digests), sc);
    for (const auto& a : s.annotators) service.register_annotator(a);

    HttpServiceConfig hc;
    hc.title = s.title;
    hc.token = s.token;
    HttpService http(service, hc);
    if (!http.bind(s.host, s.port)) throw Error(Errc::InvalidConfig, "cannot bind " + s.host + ":" + std::to_string(s.port));
    std::signal(SIGINT, on_signal);
    std::signal(SIGTERM, on_signal);
    std::thread server([&] { http.run(); });
    std::cout << "serving " << digests.size() << " tasks on http://" << s.host << ':' << s.port << '\n' << std::flush;
    while (!g_stop) std::this_thread::sleep_for(std::chrono::milliseconds(200));
    http.stop();
    server.join();

    std::vector<DecisionRecord> human;
    for (auto& d : service.human_decisions()) human.push_back({std::move(d), InvestorClass::Human, ""});
    write_decisions(config.out_dir / "human_decisions.jsonl", human);
    std::cout << human.size() << " human decision sets written\n";
    return 0;
}

struct SynthOptions {
    std::uint64_t seed = 1;
    std::size_t tickers = 50;
    std::size_t days = 30;
    double rise = 0.3;
    double fall = 0.3;
    std::string out = "synth";
};

int cmd_synth(const SynthOptions& o) {
    SyntheticSpec spec;
    spec.seed = o.seed;
    spec.n_tickers = o.tickers;
    spec.n_days = o.days;
    spec.rise_rate = o.rise;
    spec.fall_rate = o.fall;
    const auto summary = make_synthetic_market(spec, o.out);
    std::cout << summary.records << " records over " << summary.dates.size() << " days in " << o.out << '\n';
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Evaluate market digests by the trading decisions they induce"};
    app.require_subcommand(1);

    CommonOptions common;
    ServeOptions serve;
    SynthOptions synth;
    struct Stage {
        const char* name;
        const char* help;
        int (*fn)(const CommonOptions&);
    };
    const Stage stages[] = {
        {"ingest", "validate the dataset and write ingest.json", cmd_ingest},
        {"select", "write candidate sets to selection.log", cmd_select},
        {"generate", "turn selection.log into digests.jsonl", cmd_generate},
        {"decide", "run agents over digests.jsonl", cmd_decide},
        {"score", "score decisions.jsonl into scores.csv", cmd_score},
        {"report", "render table1.md and table2.md", cmd_report},
        {"run", "all stages in sequence", cmd_run},
    };
    std::vector<std::pair<CLI::App*, int (*)(const CommonOptions&)>> dispatch;
    for (const auto& s : stages) {
        auto* cmd = app.add_subcommand(s.name, s.help);
        add_common(cmd, common);
        dispatch.emplace_back(cmd, s.fn);
    }

    auto* serve_cmd = app.add_subcommand("serve", "serve blinded tasks to annotators over HTTP");
    add_common(serve_cmd, common);
    serve_cmd->add_option("--host", serve.host);
    serve_cmd->add_option("--port", serve.port);
    serve_cmd->add_option("--token", serve.token, "shared experiment token");
    serve_cmd->add_option("--title", serve.title);
    serve_cmd->add_option("--annotators", serve.annotators, "annotator ids to register")->delimiter(',');

    auto* synth_cmd = app.add_subcommand("synth", "write a synthetic dataset");
    synth_cmd->add_option("--seed", synth.seed);
    synth_cmd->add_option("--tickers", synth.tickers);
    synth_cmd->add_option("--days", synth.days);
    synth_cmd->add_option("--rise-rate", synth.rise);
    synth_cmd->add_option("--fall-rate", synth.fall);
    synth_cmd->add_option("--out", synth.out);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
    }

    try {
        for (auto& [cmd, fn] : dispatch)
            if (*cmd) return fn(common);
        if (*serve_cmd) return cmd_serve(common, serve);
        if (*synth_cmd) return cmd_synth(synth);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_code_for(e.code());
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    }
    return 1;
}
