#include "mdeval/session_service.hpp"

#include <algorithm>
#include <cctype>
#include <regex>

#include "mdeval/hashing.hpp"
#include "mdeval/rng.hpp"

namespace mdeval {

json to_json(const Task& task) {
    return {{"task_id", task.task_id},
            {"kind", to_string(task.kind)},
            {"date_ordinal", task.date_ordinal},
            {"text", task.text},
            {"universe", "/api/universe"}};
}

std::string redact(std::string_view text, const std::vector<std::string>& terms) {
    static const std::regex kIsoDate(R"(\d{4}[-/]\d{2}[-/]\d{2})");
    std::string out = std::regex_replace(std::string(text), kIsoDate, "[date]");
    for (const auto& term : terms) {
        if (term.size() < 3) continue;
        const std::string needle = to_lower(term);
        std::string lowered = to_lower(out);
        std::string rebuilt;
        std::size_t pos = 0;
        while (true) {
            const auto at = lowered.find(needle, pos);
            if (at == std::string::npos) break;
            const bool left_ok = at == 0 || !std::isalnum(static_cast<unsigned char>(lowered[at - 1]));
            const std::size_t end = at + needle.size();
            const bool right_ok = end >= lowered.size() || !std::isalnum(static_cast<unsigned char>(lowered[end]));
            rebuilt.append(out, pos, at - pos);
            rebuilt += (left_ok && right_ok) ? std::string("[redacted]") : out.substr(at, needle.size());
            pos = end;
        }
        rebuilt.append(out, pos, std::string::npos);
        out = std::move(rebuilt);
    }
    return out;
}

std::string task_id_for(std::uint64_t seed, const std::string& digest_id) {
    return "t" + hex64(derive_seed(seed, "task/" + digest_id)).substr(0, 12);
}

ExperimentTasks::ExperimentTasks(const std::vector<Digest>& digests, const MarketDataset& dataset,
                                 std::uint64_t seed)
    : seed_(seed) {
    std::vector<std::string> terms;
    for (Pipeline p : {Pipeline::Journalist, Pipeline::PerformanceBased, Pipeline::ProfessionalInsight}) {
        terms.emplace_back(to_string(p));
        terms.emplace_back(display_name(p));
    }
    terms.emplace_back("PerformanceBased");
    terms.emplace_back("ProfessionalInsight");
    for (const auto& d : digests) {
        terms.push_back(d.source());
        terms.push_back(d.generator);
    }
    std::sort(terms.begin(), terms.end(), [](const auto& a, const auto& b) { return a.size() > b.size(); });
    terms.erase(std::unique(terms.begin(), terms.end()), terms.end());

    for (const auto& d : digests) {
        const auto idx = dataset.day_index(d.date);
        if (!idx) throw Error(Errc::DateOutOfRange, d.id);
        Task t{task_id_for(seed, d.id), redact(d.text, terms), d.kind, *idx + 1};
        if (!digest_of_.emplace(t.task_id, d.id).second) throw Error(Errc::DuplicateRecord, "task for " + d.id);
        tasks_.push_back(std::move(t));
    }
    std::sort(tasks_.begin(), tasks_.end(), [](const Task& a, const Task& b) { return a.task_id < b.task_id; });
}

const Task* ExperimentTasks::find(const std::string& task_id) const {
    auto it = std::lower_bound(tasks_.begin(), tasks_.end(), task_id,
                               [](const Task& t, const std::string& v) { return t.task_id < v; });
    return (it == tasks_.end() || it->task_id != task_id) ? nullptr : &*it;
}

const std::string* ExperimentTasks::digest_for(const std::string& task_id) const {
    auto it = digest_of_.find(task_id);
    return it == digest_of_.end() ? nullptr : &it->second;
}

std::vector<std::string> task_order(const ExperimentTasks& tasks, const std::string& annotator_id) {
    std::vector<std::string> order;
    for (const auto& t : tasks.tasks()) order.push_back(t.task_id);
    Rng rng(derive_seed(tasks.seed(), "session/" + annotator_id));
    rng.shuffle(order);
    return order;
}

namespace {

void apply_event(SessionState& state, const json& e) {
    const std::string type = e.at("type").get<std::string>();
    if (type == "session_created") {
        AnnotatorSession s;
        s.annotator_id = e.at("annotator").get<std::string>();
        s.order = e.at("order").get<std::vector<std::string>>();
        state.sessions.emplace(s.annotator_id, std::move(s));
    } else if (type == "submission") {
        auto& s = state.sessions.at(e.at("annotator").get<std::string>());
        Submission sub{e.at("task_id").get<std::string>(), e.at("buys").get<std::vector<std::string>>(),
                       e.at("sells").get<std::vector<std::string>>(), e.at("remark").get<std::string>()};
        if (!s.completed.insert(sub.task_id).second) return;
        s.submissions.push_back(std::move(sub));
    } else if (type == "experiment_closed") {
        state.closed = true;
    } else {
        throw Error(Errc::ParseError, "unknown session event " + type);
    }
}

}  // namespace

SessionState replay_session_log(const std::filesystem::path& path) {
    SessionState state;
    if (!std::filesystem::exists(path)) return state;
    for (const auto& e : read_jsonl(path)) apply_event(state, e);
    return state;
}

json to_json(const Progress& p) {
    json j = {{"completed", p.completed},
              {"total", p.total},
              {"submitted_buys", p.submitted_buys},
              {"submitted_sells", p.submitted_sells},
              {"closed", p.closed}};
    if (p.closed) j["accuracy"] = p.accuracy ? json(*p.accuracy) : json(nullptr);
    return j;
}

SessionService::SessionService(ExperimentTasks tasks, const MarketDataset& dataset, DigestIndex digests,
                               SessionServiceConfig config)
    : tasks_(std::move(tasks)), dataset_(dataset), digests_(std::move(digests)), config_(std::move(config)) {
    std::size_t events = 0;
    if (std::filesystem::exists(config_.log_path)) {
        SessionState state;
        for (const auto& e : read_jsonl(config_.log_path)) {
            apply_event(state, e);
            ++events;
        }
        for (auto& [id, s] : state.sessions) {
            auto slot = std::make_unique<Slot>();
            slot->session = std::move(s);
            slots_.emplace(id, std::move(slot));
        }
        closed_ = state.closed;
    }
    next_seq_ = events;
    if (config_.log_path.has_parent_path()) std::filesystem::create_directories(config_.log_path.parent_path());
    log_.open(config_.log_path, std::ios::binary | std::ios::app);
    if (!log_) throw Error(Errc::MissingFile, "cannot open session log " + config_.log_path.string());
}

SessionService::~SessionService() = default;

void SessionService::append_event(json event) {
    std::lock_guard lock(log_mutex_);
    event["seq"] = next_seq_++;
    log_ << event.dump() << '\n';
    log_.flush();
}

SessionService::Slot* SessionService::slot(const std::string& annotator_id) const {
    std::shared_lock lock(slots_mutex_);
    auto it = slots_.find(annotator_id);
    if (it == slots_.end()) throw Error(Errc::UnknownAnnotator, annotator_id);
    return it->second.get();
}

void SessionService::register_annotator(const std::string& annotator_id) {
    if (annotator_id.empty()) throw Error(Errc::InvalidConfig, "empty annotator id");
    std::unique_lock lock(slots_mutex_);
    if (slots_.count(annotator_id)) return;
    auto s = std::make_unique<Slot>();
    s->session.annotator_id = annotator_id;
    s->session.order = task_order(tasks_, annotator_id);
    append_event({{"type", "session_created"}, {"annotator", annotator_id}, {"order", s->session.order}});
    slots_.emplace(annotator_id, std::move(s));
}

bool SessionService::is_registered(const std::string& annotator_id) const {
    std::shared_lock lock(slots_mutex_);
    return slots_.count(annotator_id) != 0;
}

std::optional<Task> SessionService::next_task(const std::string& annotator_id) const {
    Slot* s = slot(annotator_id);
    std::lock_guard lock(s->mutex);
    for (const auto& id : s->session.order)
        if (!s->session.completed.count(id)) return *tasks_.find(id);
    return std::nullopt;
}

void SessionService::submit(const std::string& annotator_id, const std::string& task_id,
                            std::vector<std::string> buys, std::vector<std::string> sells, std::string remark) {
    Slot* s = slot(annotator_id);
    std::lock_guard lock(s->mutex);
    const auto& order = s->session.order;
    if (std::find(order.begin(), order.end(), task_id) == order.end()) throw Error(Errc::UnknownTask, task_id);
    if (s->session.completed.count(task_id)) throw Error(Errc::DuplicateSubmission, task_id);
    DecisionSet candidate{annotator_id, task_id, buys, sells, remark};
    if (auto why = decision_violation(candidate, dataset_.universe)) throw Error(Errc::InvalidDecision, *why);

    append_event({{"type", "submission"},
                  {"annotator", annotator_id},
                  {"task_id", task_id},
                  {"buys", buys},
                  {"sells", sells},
                  {"remark", remark}});
    s->session.completed.insert(task_id);
    s->session.submissions.push_back({task_id, std::move(buys), std::move(sells), std::move(remark)});
}

std::vector<SessionScore> SessionService::score_humans(const std::optional<std::string>& only) const {
    std::vector<DecisionSet> decisions = human_decisions();
    if (only)
        decisions.erase(std::remove_if(decisions.begin(), decisions.end(),
                                       [&](const DecisionSet& d) { return d.investor_id != *only; }),
                        decisions.end());
    return evaluate_sessions(decisions, digests_, dataset_, config_.scoring).scores;
}

Progress SessionService::progress(const std::string& annotator_id) const {
    Progress p;
    {
        Slot* s = slot(annotator_id);
        std::lock_guard lock(s->mutex);
        p.completed = s->session.completed.size();
        p.total = s->session.order.size();
        for (const auto& sub : s->session.submissions) {
            p.submitted_buys += sub.buys.size();
            p.submitted_sells += sub.sells.size();
        }
    }
    p.closed = closed_;
    if (p.closed) {
        const auto overall = overall_accuracy(score_humans(annotator_id));
        if (auto it = overall.find(annotator_id); it != overall.end()) p.accuracy = it->second.accuracy;
    }
    return p;
}

void SessionService::close() {
    if (closed_.exchange(true)) return;
    append_event({{"type", "experiment_closed"}});
}

bool SessionService::closed() const { return closed_; }

Leaderboard SessionService::leaderboard() const {
    if (!closed_) throw Error(Errc::InvalidConfig, "leaderboard is available after the experiment closes");
    return mdeval::leaderboard(score_humans(std::nullopt), config_.llm_scores);
}

std::vector<DecisionSet> SessionService::human_decisions() const {
    std::vector<DecisionSet> out;
    std::shared_lock lock(slots_mutex_);
    for (const auto& [id, s] : slots_) {
        std::lock_guard slot_lock(s->mutex);
        for (const auto& sub : s->session.submissions)
            out.push_back({id, *tasks_.digest_for(sub.task_id), sub.buys, sub.sells, sub.remark});
    }
    return out;
}

SessionState SessionService::snapshot() const {
    SessionState state;
    state.closed = closed_;
    std::shared_lock lock(slots_mutex_);
    for (const auto& [id, s] : slots_) {
        std::lock_guard slot_lock(s->mutex);
        state.sessions.emplace(id, s->session);
    }
    return state;
}

}  // namespace mdeval
