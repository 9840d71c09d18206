#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <shared_mutex>
#include <string>
#include <vector>

#include "mdeval/agents.hpp"
#include "mdeval/digest.hpp"
#include "mdeval/reporting.hpp"
#include "mdeval/scoring.hpp"

namespace mdeval {

// Annotator-facing task: no source, pipeline or calendar date.
struct Task {
    std::string task_id;
    std::string text;
    DigestKind kind = DigestKind::MorningBrief;
    std::size_t date_ordinal = 0;  // 1-based trading-day index

    bool operator==(const Task&) const = default;
};

json to_json(const Task& task);

// Replaces ISO calendar dates with "[date]" and each term (case-insensitive,
// whole word) with "[redacted]".
std::string redact(std::string_view text, const std::vector<std::string>& terms);

// Blinded task per digest plus the private task -> digest mapping.
class ExperimentTasks {
public:
    ExperimentTasks() = default;
    ExperimentTasks(const std::vector<Digest>& digests, const MarketDataset& dataset, std::uint64_t seed);

    // Sorted by task id.
    [[nodiscard]] const std::vector<Task>& tasks() const { return tasks_; }
    [[nodiscard]] const Task* find(const std::string& task_id) const;
    [[nodiscard]] const std::string* digest_for(const std::string& task_id) const;
    [[nodiscard]] std::uint64_t seed() const { return seed_; }

private:
    std::uint64_t seed_ = 0;
    std::vector<Task> tasks_;
    std::map<std::string, std::string> digest_of_;
};

std::string task_id_for(std::uint64_t seed, const std::string& digest_id);

struct Submission {
    std::string task_id;
    std::vector<std::string> buys;
    std::vector<std::string> sells;
    std::string remark;

    bool operator==(const Submission&) const = default;
};

struct AnnotatorSession {
    std::string annotator_id;
    std::vector<std::string> order;  // seeded permutation of task ids
    std::set<std::string> completed;
    std::vector<Submission> submissions;  // in arrival order

    bool operator==(const AnnotatorSession&) const = default;
};

struct SessionState {
    std::map<std::string, AnnotatorSession> sessions;
    bool closed = false;

    bool operator==(const SessionState&) const = default;
};

// Task order for an annotator, reproducible from (annotator, seed).
std::vector<std::string> task_order(const ExperimentTasks& tasks, const std::string& annotator_id);

// Rebuilds state from an event log. Missing file -> empty state.
SessionState replay_session_log(const std::filesystem::path& path);

struct Progress {
    std::size_t completed = 0;
    std::size_t total = 0;
    std::size_t submitted_buys = 0;
    std::size_t submitted_sells = 0;
    std::optional<double> accuracy;  // only once the experiment is closed
    bool closed = false;
};

json to_json(const Progress& progress);

struct SessionServiceConfig {
    std::filesystem::path log_path;
    ScoringConfig scoring;
    std::vector<SessionScore> llm_scores;  // leaderboard comparison
};

// Machine side of the annotation workflow. Writes are serialized per
// annotator; the event log is append-only and replayed at construction.
class SessionService {
public:
    SessionService(ExperimentTasks tasks, const MarketDataset& dataset, DigestIndex digests,
                   SessionServiceConfig config);
    ~SessionService();

    SessionService(const SessionService&) = delete;
    SessionService& operator=(const SessionService&) = delete;

    // Idempotent.
    void register_annotator(const std::string& annotator_id);
    [[nodiscard]] bool is_registered(const std::string& annotator_id) const;

    // First uncompleted task in the annotator's order; nullopt once done.
    // Throws Error(UnknownAnnotator).
    std::optional<Task> next_task(const std::string& annotator_id) const;

    // First write wins. Throws Error(UnknownAnnotator), Error(UnknownTask),
    // Error(DuplicateSubmission), Error(InvalidDecision).
    void submit(const std::string& annotator_id, const std::string& task_id, std::vector<std::string> buys,
                std::vector<std::string> sells, std::string remark);

    Progress progress(const std::string& annotator_id) const;

    void close();
    [[nodiscard]] bool closed() const;

    // Throws Error(InvalidConfig) before close.
    Leaderboard leaderboard() const;

    // Submissions converted to decision sets against the underlying digests.
    std::vector<DecisionSet> human_decisions() const;

    [[nodiscard]] SessionState snapshot() const;
    [[nodiscard]] const Universe& universe() const { return dataset_.universe; }

private:
    struct Slot {
        mutable std::mutex mutex;
        AnnotatorSession session;
    };

    void append_event(json event);
    Slot* slot(const std::string& annotator_id) const;
    std::vector<SessionScore> score_humans(const std::optional<std::string>& only) const;

    ExperimentTasks tasks_;
    const MarketDataset& dataset_;
    DigestIndex digests_;
    SessionServiceConfig config_;

    mutable std::shared_mutex slots_mutex_;
    std::map<std::string, std::unique_ptr<Slot>> slots_;
    std::atomic<bool> closed_{false};

    std::mutex log_mutex_;
    std::ofstream log_;
    std::uint64_t next_seq_ = 0;
};

}  // namespace mdeval
