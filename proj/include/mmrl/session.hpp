#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "mmrl/evaluation.hpp"
#include "mmrl/experiment.hpp"
#include "mmrl/io.hpp"
#include "mmrl/posterior.hpp"
#include "mmrl/query_selection.hpp"

namespace mmrl {

struct SessionConfig {
    Strategy strategy = Strategy::ig;
    std::size_t modes = 2;
    std::size_t k = 6;
    std::size_t n_active = 15;
    std::size_t n_eval = 10;
    std::uint64_t seed = 0;
    MhConfig mh;
    AnnealSchedule sa;
};

inline json session_config_to_json(const SessionConfig& c) {
    return {{"strategy", to_string(c.strategy)},
            {"modes", c.modes},
            {"k", c.k},
            {"n_active", c.n_active},
            {"n_eval", c.n_eval},
            {"seed", c.seed},
            {"n_samples", c.mh.n_chains},
            {"mh_iters", c.mh.iters},
            {"mh_step", c.mh.step},
            {"sa_chains", c.sa.n_chains},
            {"sa_iters", c.sa.iters},
            {"sa_start_temp", c.sa.start_temp},
            {"sa_cooling", c.sa.cooling}};
}

// Fields missing from `j` keep the values in `base`.
inline SessionConfig session_config_from_json(const json& j, SessionConfig base = {}) {
    reject_unknown_keys(j, {"strategy", "modes", "k", "n_active", "n_eval", "seed", "n_samples", "mh_iters", "mh_step",
                            "sa_chains", "sa_iters", "sa_start_temp", "sa_cooling"},
                        "session config");
    if (j.contains("strategy")) base.strategy = parse_strategy(j.at("strategy").get<std::string>());
    base.modes = j.value("modes", base.modes);
    base.k = j.value("k", base.k);
    base.n_active = j.value("n_active", base.n_active);
    base.n_eval = j.value("n_eval", base.n_eval);
    base.seed = j.value("seed", base.seed);
    base.mh.n_chains = j.value("n_samples", base.mh.n_chains);
    base.mh.iters = j.value("mh_iters", base.mh.iters);
    base.mh.step = j.value("mh_step", base.mh.step);
    base.sa.n_chains = j.value("sa_chains", base.sa.n_chains);
    base.sa.iters = j.value("sa_iters", base.sa.iters);
    base.sa.start_temp = j.value("sa_start_temp", base.sa.start_temp);
    base.sa.cooling = j.value("sa_cooling", base.sa.cooling);
    return base;
}

enum class Phase { active, evaluation, done };

inline const char* to_string(Phase p) {
    switch (p) {
        case Phase::active: return "active";
        case Phase::evaluation: return "evaluation";
        case Phase::done: return "done";
    }
    return "?";
}

enum class SubmitStatus { accepted, mismatch, done };

struct SessionEstimate {
    MixtureParams mle;
    std::optional<double> holdout_loglik;      // posterior predictive
    std::optional<double> holdout_loglik_mle;  // point estimate
    std::size_t eval_answered = 0;
};

// One live ranking session: active(n_active) -> evaluation(n_eval) -> done.
// Active responses grow the observation log and trigger a posterior refresh
// and a new query; evaluation queries are drawn up front from the session seed
// and their responses are held out of the posterior.
class Session {
public:
    Session(std::string id, const Dataset& dataset, SessionConfig config)
        : id_(std::move(id)), dataset_(&dataset), config_(std::move(config)), root_(config_.seed) {
        if (config_.modes < 1) throw InvalidInput("session needs at least one mode");
        check_pool(dataset, config_.k);
        config_.sa.validate();
        if (config_.n_active + config_.n_eval < 1) throw InvalidInput("session needs at least one query");
        prior_ = Prior{config_.modes, dataset.dimension(), std::nullopt};

        QuerySet eval_used;
        Rng eval_rng = root_.split("eval");
        for (std::size_t e = 0; e < config_.n_eval; ++e)
            eval_queries_.push_back(select_query_random(dataset, config_.k, eval_used, eval_rng));
        refresh();
    }

    const std::string& id() const { return id_; }
    const SessionConfig& config() const { return config_; }
    Phase phase() const { return phase_; }
    const ObservationLog& log() const { return log_; }
    const std::vector<Observation>& eval_responses() const { return eval_responses_; }
    const PosteriorSamples& posterior() const { return samples_; }
    const std::optional<RankingQuery>& pending() const { return pending_; }
    std::size_t answered() const { return log_.size() + eval_responses_.size(); }
    std::size_t total() const { return config_.n_active + config_.n_eval; }

    // `step`, when given, must equal answered(); this catches double submits.
    SubmitStatus submit(const RankingResponse& response, std::optional<std::size_t> step = std::nullopt) {
        if (phase_ == Phase::done) return SubmitStatus::done;
        if (step && *step != answered()) return SubmitStatus::mismatch;
        if (!pending_ || !response.permutes(*pending_)) return SubmitStatus::mismatch;
        if (phase_ == Phase::active) {
            log_.append(*pending_, response);
        } else {
            eval_responses_.push_back({*pending_, response});
        }
        refresh();
        return SubmitStatus::accepted;
    }

    SessionEstimate estimate() const {
        if (!mle_) mle_ = mle_estimate(prior_, *dataset_, log_, samples_, MleOptions{true, 20, config_.mh.step});
        SessionEstimate e{*mle_, std::nullopt, std::nullopt, eval_responses_.size()};
        if (!eval_responses_.empty()) {
            e.holdout_loglik = holdout_loglik(*dataset_, samples_, eval_responses_);
            e.holdout_loglik_mle = holdout_loglik(*dataset_, std::vector<MixtureParams>{*mle_}, eval_responses_);
        }
        return e;
    }

private:
    void refresh() {
        const std::size_t t = log_.size();
        if (t < config_.n_active) {
            phase_ = Phase::active;
        } else if (eval_responses_.size() < config_.n_eval) {
            phase_ = Phase::evaluation;
        } else {
            phase_ = Phase::done;
        }
        if (posterior_step_ != t) {
            samples_ = mh_sample(prior_, *dataset_, log_, config_.mh, root_.split("posterior", t));
            posterior_step_ = t;
            mle_.reset();
        }
        switch (phase_) {
            case Phase::active:
                pending_ = select_query(config_.strategy, *dataset_, samples_, config_.k, config_.sa, used_,
                                        root_.split("select", t));
                break;
            case Phase::evaluation: pending_ = eval_queries_[eval_responses_.size()]; break;
            case Phase::done: pending_.reset(); break;
        }
    }

    std::string id_;
    const Dataset* dataset_;
    SessionConfig config_;
    Rng root_;
    Prior prior_;
    Phase phase_ = Phase::active;
    ObservationLog log_;
    std::vector<RankingQuery> eval_queries_;
    std::vector<Observation> eval_responses_;
    QuerySet used_;
    PosteriorSamples samples_;
    std::size_t posterior_step_ = static_cast<std::size_t>(-1);
    std::optional<RankingQuery> pending_;
    mutable std::optional<MixtureParams> mle_;
};

// Sessions keyed by id, each persisted as an append-only JSON-lines file in
// `data_dir`: a "create" record followed by one "response" record per
// accepted response. State is a deterministic function of those records, so
// recovery replays them.
class SessionStore {
public:
    SessionStore(const Dataset& dataset, std::string data_dir, SessionConfig defaults = {})
        : dataset_(dataset), data_dir_(std::move(data_dir)), defaults_(std::move(defaults)) {
        if (!data_dir_.empty()) std::filesystem::create_directories(data_dir_);
    }

    struct Entry {
        std::mutex mutex;
        std::unique_ptr<Session> session;
    };

    std::string create(const json& overrides = json::object()) {
        SessionConfig cfg = session_config_from_json(overrides.is_null() ? json::object() : overrides, defaults_);
        std::string id;
        {
            std::lock_guard lock(mutex_);
            id = numbered_id("s", ++counter_, 6);
            if (!overrides.contains("seed")) cfg.seed = splitmix64(defaults_.seed ^ counter_);
        }
        auto entry = std::make_shared<Entry>();
        entry->session = std::make_unique<Session>(id, dataset_, cfg);
        append_record(id, {{"type", "create"}, {"id", id}, {"config", session_config_to_json(cfg)},
                           {"dataset_size", dataset_.size()}, {"dataset_dimension", dataset_.dimension()}});
        std::lock_guard lock(mutex_);
        sessions_[id] = std::move(entry);
        return id;
    }

    // nullptr when the id is unknown.
    std::shared_ptr<Entry> find(const std::string& id) const {
        std::lock_guard lock(mutex_);
        auto it = sessions_.find(id);
        return it == sessions_.end() ? nullptr : it->second;
    }

    // Caller holds entry.mutex.
    SubmitStatus submit(Entry& entry, const RankingResponse& response, std::optional<std::size_t> step) {
        auto& s = *entry.session;
        const Phase before = s.phase();
        const std::size_t index = s.answered();
        const auto status = s.submit(response, step);
        if (status == SubmitStatus::accepted)
            append_record(s.id(), {{"type", "response"}, {"phase", to_string(before)}, {"step", index},
                                   {"ranking", ids_of(dataset_, response.ranking)}});
        return status;
    }

    std::vector<std::string> ids() const {
        std::lock_guard lock(mutex_);
        std::vector<std::string> out;
        for (const auto& [id, _] : sessions_) out.push_back(id);
        return out;
    }

    // Rebuilds every session found in data_dir. Returns the number recovered.
    std::size_t recover() {
        if (data_dir_.empty() || !std::filesystem::exists(data_dir_)) return 0;
        std::vector<std::filesystem::path> files;
        for (const auto& f : std::filesystem::directory_iterator(data_dir_))
            if (f.path().extension() == ".jsonl") files.push_back(f.path());
        std::sort(files.begin(), files.end());
        std::size_t n = 0;
        for (const auto& path : files) {
            std::ifstream in(path);
            std::string line;
            std::shared_ptr<Entry> entry;
            while (std::getline(in, line)) {
                if (line.empty()) continue;
                const json rec = json::parse(line);
                if (rec.at("type") == "create") {
                    if (rec.at("dataset_size").get<std::size_t>() != dataset_.size() ||
                        rec.at("dataset_dimension").get<std::size_t>() != dataset_.dimension())
                        throw InvalidState("session log '" + path.string() + "' was recorded on a different dataset");
                    entry = std::make_shared<Entry>();
                    entry->session = std::make_unique<Session>(rec.at("id").get<std::string>(), dataset_,
                                                               session_config_from_json(rec.at("config")));
                } else if (entry) {
                    const RankingResponse r{indices_of(dataset_, rec.at("ranking").get<std::vector<std::string>>())};
                    if (entry->session->submit(r, rec.at("step").get<std::size_t>()) != SubmitStatus::accepted)
                        throw InvalidState("session log '" + path.string() + "' does not replay");
                }
            }
            if (!entry) continue;
            std::lock_guard lock(mutex_);
            const auto id = entry->session->id();
            if (id.size() > 2) counter_ = std::max<std::uint64_t>(counter_, std::stoull(id.substr(2)));
            sessions_[id] = std::move(entry);
            ++n;
        }
        return n;
    }

    const Dataset& dataset() const { return dataset_; }

private:
    void append_record(const std::string& id, const json& rec) {
        if (data_dir_.empty()) return;
        std::lock_guard lock(file_mutex_);
        std::ofstream out(std::filesystem::path(data_dir_) / (id + ".jsonl"), std::ios::app);
        out << rec.dump() << "\n";
        out.flush();
        if (!out) throw InvalidState("failed to persist session '" + id + "'");
    }

    const Dataset& dataset_;
    std::string data_dir_;
    SessionConfig defaults_;
    mutable std::mutex mutex_;
    std::mutex file_mutex_;
    std::map<std::string, std::shared_ptr<Entry>> sessions_;
    std::uint64_t counter_ = 0;
};

}  // namespace mmrl
