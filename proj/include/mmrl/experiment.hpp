#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "mmrl/environments.hpp"
#include "mmrl/evaluation.hpp"
#include "mmrl/io.hpp"
#include "mmrl/parallel.hpp"
#include "mmrl/posterior.hpp"
#include "mmrl/query_selection.hpp"

namespace mmrl {

enum class Strategy { ig, random, vr };

inline Strategy parse_strategy(const std::string& s) {
    if (s == "ig") return Strategy::ig;
    if (s == "random") return Strategy::random;
    if (s == "vr") return Strategy::vr;
    throw InvalidInput("unknown strategy '" + s + "' (expected ig, random or vr)");
}

inline const char* to_string(Strategy s) {
    switch (s) {
        case Strategy::ig: return "ig";
        case Strategy::random: return "random";
        case Strategy::vr: return "vr";
    }
    return "?";
}

// Picks the next query for a learner. `used` tracks issued queries so the
// random strategy never repeats one; the active strategies just record theirs.
inline RankingQuery select_query(Strategy strategy, const Dataset& dataset, const PosteriorSamples& samples,
                                 std::size_t k, const AnnealSchedule& schedule, QuerySet& used, const Rng& rng) {
    switch (strategy) {
        case Strategy::random: {
            Rng r = rng;
            return select_query_random(dataset, k, used, r);
        }
        case Strategy::ig: {
            auto q = select_query_ig(dataset, samples, k, schedule, rng);
            used.insert(q.canonical());
            return q;
        }
        case Strategy::vr: {
            auto q = select_query_vr(dataset, samples, k, schedule, rng);
            used.insert(q.canonical());
            return q;
        }
    }
    throw InvalidInput("unknown strategy");
}

// --- configuration ---------------------------------------------------------------

struct DatasetSource {
    std::string kind = "fetch";  // fetch | synthetic | gaussian | file
    std::string path;
    std::uint64_t seed = 0;
    std::size_t count = 1000;  // gaussian only
    std::size_t dims = 0;      // 0: kind default (gaussian 8, synthetic 3)
    bool standardize = false;
};

struct Hyperparameters {
    MhConfig mh;
    AnnealSchedule sa;
    std::size_t n_eval = 10;
    bool refine_mle = true;
};

struct ExperimentConfig {
    DatasetSource dataset;
    std::size_t m_true = 2;
    std::vector<std::size_t> m_model{2};
    std::size_t k = 6;
    std::size_t n_queries = 15;
    std::size_t n_runs = 1;
    std::vector<Strategy> strategies{Strategy::random};
    Hyperparameters hyper;
    std::uint64_t seed = 0;
    std::string output;
    std::size_t threads = 1;

    // Throws on invalid settings; returns non-fatal warnings.
    std::vector<std::string> validate() const {
        if (k < 2) throw InvalidInput("K must be at least 2");
        if (m_true < 1) throw InvalidInput("m_true must be at least 1");
        if (m_model.empty() || strategies.empty()) throw InvalidInput("need at least one model size and strategy");
        for (auto m : m_model)
            if (m < 1) throw InvalidInput("m_model entries must be at least 1");
        if (n_queries < 1 || n_runs < 1) throw InvalidInput("n_queries and n_runs must be positive");
        if (hyper.n_eval < 1) throw InvalidInput("n_eval must be positive");
        hyper.sa.validate();
        if (hyper.mh.n_chains < 1 || hyper.mh.iters < 1 || hyper.mh.step < 0.0)
            throw InvalidInput("invalid Metropolis-Hastings settings");
        std::vector<std::string> warnings;
        auto check = [&](std::size_t m, const char* what) {
            if (check_identifiability(m, k) == Identifiability::not_guaranteed)
                warnings.push_back(std::string(what) + " M = " + std::to_string(m) + " with K = " + std::to_string(k) +
                                   " is not guaranteed to be identifiable (needs M <= floor((K-2)/2)!)");
        };
        check(m_true, "true");
        for (auto m : m_model) check(m, "model");
        return warnings;
    }
};

template <class T>
std::vector<T> one_or_many(const json& j) {
    if (j.is_array()) return j.get<std::vector<T>>();
    return {j.get<T>()};
}

inline ExperimentConfig config_from_json(const json& j) {
    reject_unknown_keys(j, {"dataset", "m_true", "m_model", "k", "n_queries", "n_runs", "strategy", "hyperparameters",
                            "seed", "output", "threads"},
                        "experiment config");
    ExperimentConfig c;
    if (j.contains("dataset")) {
        const auto& d = j.at("dataset");
        reject_unknown_keys(d, {"kind", "path", "seed", "count", "dims", "standardize"}, "dataset source");
        c.dataset.kind = d.value("kind", c.dataset.kind);
        c.dataset.path = d.value("path", c.dataset.path);
        c.dataset.seed = d.value("seed", c.dataset.seed);
        c.dataset.count = d.value("count", c.dataset.count);
        c.dataset.dims = d.value("dims", c.dataset.dims);
        c.dataset.standardize = d.value("standardize", c.dataset.standardize);
    }
    c.m_true = j.value("m_true", c.m_true);
    if (j.contains("m_model")) c.m_model = one_or_many<std::size_t>(j.at("m_model"));
    c.k = j.value("k", c.k);
    c.n_queries = j.value("n_queries", c.n_queries);
    c.n_runs = j.value("n_runs", c.n_runs);
    if (j.contains("strategy")) {
        c.strategies.clear();
        for (const auto& s : one_or_many<std::string>(j.at("strategy"))) c.strategies.push_back(parse_strategy(s));
    }
    if (j.contains("hyperparameters")) {
        const auto& h = j.at("hyperparameters");
        reject_unknown_keys(h, {"n_samples", "mh_iters", "mh_step", "sa_chains", "sa_iters", "sa_start_temp",
                                "sa_cooling", "n_eval", "refine_mle"},
                            "hyperparameters");
        c.hyper.mh.n_chains = h.value("n_samples", c.hyper.mh.n_chains);
        c.hyper.mh.iters = h.value("mh_iters", c.hyper.mh.iters);
        c.hyper.mh.step = h.value("mh_step", c.hyper.mh.step);
        c.hyper.sa.n_chains = h.value("sa_chains", c.hyper.sa.n_chains);
        c.hyper.sa.iters = h.value("sa_iters", c.hyper.sa.iters);
        c.hyper.sa.start_temp = h.value("sa_start_temp", c.hyper.sa.start_temp);
        c.hyper.sa.cooling = h.value("sa_cooling", c.hyper.sa.cooling);
        c.hyper.n_eval = h.value("n_eval", c.hyper.n_eval);
        c.hyper.refine_mle = h.value("refine_mle", c.hyper.refine_mle);
    }
    c.seed = j.value("seed", c.seed);
    c.output = j.value("output", c.output);
    c.threads = j.value("threads", c.threads);
    return c;
}

inline Dataset load_dataset_source(const DatasetSource& src) {
    Dataset ds;
    if (src.kind == "fetch") {
        ds = gen_fetch_dataset();
    } else if (src.kind == "synthetic") {
        SyntheticSpec spec;
        spec.seed = src.seed;
        if (src.dims) spec.dims = src.dims;
        ds = gen_synthetic_dataset(spec);
    } else if (src.kind == "gaussian") {
        ds = gen_gaussian_dataset(src.count, src.dims ? src.dims : 8, src.seed);
    } else if (src.kind == "file") {
        return load_dataset(src.path, src.standardize);
    } else {
        throw InvalidInput("unknown dataset kind '" + src.kind + "'");
    }
    return src.standardize ? standardize(ds) : ds;
}

// --- running ---------------------------------------------------------------------

inline const std::vector<std::string>& metric_names() {
    // loglik: posterior predictive; loglik_mle: the point estimate alone;
    // loglik_baseline: unimodal top-choice baseline (zero weights before any data).
    static const std::vector<std::string> names{"mse", "loglik", "loglik_mle", "loglik_baseline"};
    return names;
}

struct Learner {
    Strategy strategy;
    std::size_t modes;

    std::string label() const { return std::string(to_string(strategy)) + "-M" + std::to_string(modes); }
};

struct LearnerResult {
    Learner learner;
    std::vector<MetricSeries> metrics;  // in metric_names() order

    const MetricSeries& metric(const std::string& name) const {
        for (const auto& m : metrics)
            if (m.name == name) return m;
        throw InvalidInput("no metric '" + name + "'");
    }
};

struct ExperimentResult {
    std::vector<LearnerResult> learners;
    std::vector<std::string> warnings;

    const LearnerResult& learner(const std::string& label) const {
        for (const auto& l : learners)
            if (l.learner.label() == label) return l;
        throw InvalidInput("no learner '" + label + "'");
    }
};

// Per-run fixtures shared by every learner: the simulated experts and the
// held-out evaluation queries with their responses.
struct RunFixture {
    MixtureParams truth;
    std::vector<Observation> eval_set;
};

inline RunFixture make_run_fixture(const Dataset& dataset, std::size_t m_true, std::size_t k, std::size_t n_eval,
                                   const Rng& run_rng) {
    RunFixture f;
    Rng truth_rng = run_rng.split("truth");
    f.truth = sample_expert_population(m_true, dataset.dimension(), truth_rng).true_params;
    QuerySet eval_used;
    Rng eval_rng = run_rng.split("eval");
    for (std::size_t e = 0; e < n_eval; ++e) {
        auto q = select_query_random(dataset, k, eval_used, eval_rng);
        Rng resp_rng = run_rng.split("eval-response", e);
        auto x = sample_response(f.truth, dataset, q, resp_rng);
        f.eval_set.push_back({std::move(q), std::move(x)});
    }
    return f;
}

inline double baseline_loglik(const Dataset& dataset, const ObservationLog& log, const std::vector<Observation>& eval) {
    MixtureParams base(1, dataset.dimension());
    if (!log.empty()) {
        try {
            base = unimodal_top_baseline(log, dataset);
        } catch (const DegenerateInput&) {
        }
    }
    return holdout_loglik(dataset, std::vector<MixtureParams>{base}, eval);
}

// Runs one learner through T queries against the fixture's simulated experts.
// Returns values[metric][t] for t = 0..T.
inline std::vector<std::vector<double>> run_learner(const Dataset& dataset, const ExperimentConfig& config,
                                                    const Learner& learner, const RunFixture& fixture,
                                                    const Rng& run_rng) {
    const auto& names = metric_names();
    std::vector<std::vector<double>> values(names.size());
    const Prior prior{learner.modes, dataset.dimension(), std::nullopt};
    MleOptions mle_opts;
    mle_opts.refine = config.hyper.refine_mle;
    mle_opts.initial_step = config.hyper.mh.step;

    ObservationLog log;
    QuerySet used;
    for (std::size_t t = 0; t <= config.n_queries; ++t) {
        const auto samples = mh_sample(prior, dataset, log, config.hyper.mh, run_rng.split("posterior", t));
        const auto est = mle_estimate(prior, dataset, log, samples, mle_opts);
        values[0].push_back(mse(fixture.truth, est));
        values[1].push_back(holdout_loglik(dataset, samples, fixture.eval_set));
        values[2].push_back(holdout_loglik(dataset, std::vector<MixtureParams>{est}, fixture.eval_set));
        values[3].push_back(baseline_loglik(dataset, log, fixture.eval_set));
        if (t == config.n_queries) break;

        auto query = select_query(learner.strategy, dataset, samples, config.k, config.hyper.sa, used,
                                  run_rng.split("select", t));
        Rng resp_rng = run_rng.split("response", t);
        auto response = sample_response(fixture.truth, dataset, query, resp_rng);
        log.append(std::move(query), std::move(response));
    }
    return values;
}

inline std::vector<Learner> learners_of(const ExperimentConfig& config) {
    std::vector<Learner> out;
    for (auto s : config.strategies)
        for (auto m : config.m_model) out.push_back({s, m});
    return out;
}

inline ExperimentResult run_experiment(const ExperimentConfig& config, const Dataset& dataset) {
    ExperimentResult result;
    result.warnings = config.validate();
    if (dataset.size() < config.k) throw InvalidInput("dataset has fewer trajectories than K");

    const auto learners = learners_of(config);
    const auto& names = metric_names();
    // cells[run][learner][metric][t]
    std::vector<std::vector<std::vector<std::vector<double>>>> cells(config.n_runs);
    const Rng root(config.seed);
    parallel_for(config.n_runs, config.threads, [&](std::size_t r) {
        const Rng run_rng = root.split("run", r);
        const auto fixture = make_run_fixture(dataset, config.m_true, config.k, config.hyper.n_eval, run_rng);
        for (const auto& l : learners) cells[r].push_back(run_learner(dataset, config, l, fixture, run_rng));
    });

    for (std::size_t li = 0; li < learners.size(); ++li) {
        LearnerResult lr{learners[li], {}};
        for (std::size_t mi = 0; mi < names.size(); ++mi) {
            MetricSeries s{names[mi], 0, {}};
            for (std::size_t r = 0; r < config.n_runs; ++r) s.values.push_back(cells[r][li][mi]);
            lr.metrics.push_back(std::move(s));
        }
        result.learners.push_back(std::move(lr));
    }
    return result;
}

// --- summaries -------------------------------------------------------------------

struct NamedMetrics {
    std::string label;
    std::vector<MetricSeries> metrics;
};

inline std::vector<double> final_values(const MetricSeries& s) {
    std::vector<double> out;
    for (const auto& run : s.values) out.push_back(run.back());
    return out;
}

// AUC and final-step statistics per learner, plus paired t-tests between every
// pair of learners that share run indices.
inline json summarize(const std::vector<NamedMetrics>& groups) {
    json learners = json::object();
    for (const auto& g : groups) {
        json per = json::object();
        for (const auto& s : g.metrics) {
            const auto fin = final_values(s);
            json entry = {{"runs", s.values.size()},
                          {"final_mean", mean_of(fin)},
                          {"final_median", median_of(fin)},
                          {"final_se", standard_error(fin)}};
            if (s.steps() >= 2) {
                const auto a = auc(s);
                entry["auc_mean"] = mean_of(a);
                entry["auc_se"] = standard_error(a);
            }
            per[s.name] = entry;
        }
        learners[g.label] = per;
    }
    json tests = json::array();
    for (std::size_t i = 0; i < groups.size(); ++i)
        for (std::size_t j = i + 1; j < groups.size(); ++j)
            for (const auto& sa : groups[i].metrics)
                for (const auto& sb : groups[j].metrics) {
                    if (sa.name != sb.name || sa.values.size() != sb.values.size() || sa.values.size() < 2) continue;
                    auto add = [&](const char* what, const std::vector<double>& a, const std::vector<double>& b) {
                        const auto t = paired_t_test(a, b);
                        tests.push_back({{"a", groups[i].label}, {"b", groups[j].label}, {"metric", sa.name},
                                         {"statistic", what}, {"mean_difference", t.mean_difference},
                                         {"t", std::isfinite(t.t) ? json(t.t) : json(nullptr)}, {"p", t.p},
                                         {"degenerate", t.degenerate}});
                    };
                    if (sa.steps() >= 2 && sa.steps() == sb.steps()) add("auc", auc(sa), auc(sb));
                    add("final", final_values(sa), final_values(sb));
                }
    return {{"learners", learners}, {"paired_tests", tests}};
}

inline std::vector<NamedMetrics> named_metrics(const ExperimentResult& result) {
    std::vector<NamedMetrics> out;
    for (const auto& l : result.learners) out.push_back({l.learner.label(), l.metrics});
    return out;
}

// One CSV per learner (<label>.csv) plus summary.json in the output directory.
inline void write_experiment(const ExperimentResult& result, const std::string& dir) {
    std::filesystem::create_directories(dir);
    for (const auto& l : result.learners)
        write_text_file((std::filesystem::path(dir) / (l.learner.label() + ".csv")).string(), metrics_to_csv(l.metrics));
    write_text_file((std::filesystem::path(dir) / "summary.json").string(),
                    summarize(named_metrics(result)).dump(2) + "\n");
}

}  // namespace mmrl
