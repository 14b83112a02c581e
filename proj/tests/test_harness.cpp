#include <gtest/gtest.h>

#include <filesystem>

#include "testbeds.hpp"

using namespace mmrl;

namespace {

ExperimentConfig small_config() {
    ExperimentConfig c;
    c.dataset.kind = "gaussian";
    c.dataset.count = 40;
    c.dataset.dims = 2;
    c.m_true = 2;
    c.m_model = {2};
    c.k = 3;
    c.n_queries = 1;
    c.n_runs = 1;
    c.hyper.mh.n_chains = 20;
    c.hyper.mh.iters = 20;
    c.hyper.sa.n_chains = 2;
    c.hyper.sa.iters = 5;
    c.hyper.n_eval = 3;
    c.seed = 17;
    return c;
}

std::filesystem::path temp_dir(const std::string& name) {
    auto p = std::filesystem::temp_directory_path() / ("mmrl-test-" + name);
    std::filesystem::remove_all(p);
    return p;
}

}  // namespace

TEST(Config, ParsesFieldsAndLists) {
    const auto c = config_from_json(json::parse(R"({
        "dataset": {"kind": "synthetic", "seed": 3},
        "m_true": 5, "m_model": [1, 3], "k": 6, "n_queries": 15, "n_runs": 50,
        "strategy": ["ig", "random"],
        "hyperparameters": {"n_samples": 80, "mh_iters": 150, "mh_step": 0.1, "sa_chains": 4,
                            "sa_iters": 20, "sa_start_temp": 5, "sa_cooling": 0.8, "n_eval": 12, "refine_mle": false},
        "seed": 9, "output": "out", "threads": 2})"));
    EXPECT_EQ(c.dataset.kind, "synthetic");
    EXPECT_EQ(c.dataset.seed, 3u);
    EXPECT_EQ(c.m_true, 5u);
    EXPECT_EQ(c.m_model, (std::vector<std::size_t>{1, 3}));
    EXPECT_EQ(c.strategies, (std::vector<Strategy>{Strategy::ig, Strategy::random}));
    EXPECT_EQ(c.hyper.mh.n_chains, 80u);
    EXPECT_EQ(c.hyper.mh.iters, 150u);
    EXPECT_DOUBLE_EQ(c.hyper.mh.step, 0.1);
    EXPECT_EQ(c.hyper.sa.n_chains, 4u);
    EXPECT_DOUBLE_EQ(c.hyper.sa.cooling, 0.8);
    EXPECT_EQ(c.hyper.n_eval, 12u);
    EXPECT_FALSE(c.hyper.refine_mle);
    EXPECT_EQ(c.threads, 2u);

    const auto single = config_from_json(json::parse(R"({"strategy": "vr", "m_model": 4})"));
    EXPECT_EQ(single.strategies, std::vector<Strategy>{Strategy::vr});
    EXPECT_EQ(single.m_model, std::vector<std::size_t>{4});
}

TEST(Config, DefaultHyperparameters) {
    const ExperimentConfig c;
    EXPECT_EQ(c.hyper.mh.n_chains, 100u);
    EXPECT_EQ(c.hyper.mh.iters, 200u);
    EXPECT_DOUBLE_EQ(c.hyper.mh.step, 0.15);
    EXPECT_EQ(c.hyper.sa.n_chains, 10u);
    EXPECT_EQ(c.hyper.sa.iters, 30u);
    EXPECT_DOUBLE_EQ(c.hyper.sa.start_temp, 10.0);
    EXPECT_DOUBLE_EQ(c.hyper.sa.cooling, 0.9);
    EXPECT_EQ(c.k, 6u);
    EXPECT_EQ(c.hyper.n_eval, 10u);
}

TEST(Config, RejectsUnknownKeysAndBadValues) {
    EXPECT_THROW(config_from_json(json::parse(R"({"strategies": "ig"})")), InvalidInput);
    EXPECT_THROW(config_from_json(json::parse(R"({"dataset": {"kind": "fetch", "colour": 1}})")), InvalidInput);
    EXPECT_THROW(config_from_json(json::parse(R"({"hyperparameters": {"temperature": 1}})")), InvalidInput);
    EXPECT_THROW(config_from_json(json::parse(R"({"strategy": "greedy"})")), InvalidInput);
    auto c = small_config();
    c.k = 1;
    EXPECT_THROW(c.validate(), InvalidInput);
    c = small_config();
    c.hyper.sa.cooling = 1.2;
    EXPECT_THROW(c.validate(), InvalidInput);
    DatasetSource src;
    src.kind = "lunar";
    EXPECT_THROW(load_dataset_source(src), InvalidInput);
}

TEST(Config, IdentifiabilityWarnings) {
    auto c = small_config();
    c.k = 6;
    EXPECT_TRUE(c.validate().empty());
    c.m_true = 5;
    c.m_model = {5, 1};
    const auto w = c.validate();
    EXPECT_EQ(w.size(), 2u);
}

TEST(Experiment, StructuralCsv) {
    const auto c = small_config();
    const auto ds = load_dataset_source(c.dataset);
    const auto result = run_experiment(c, ds);
    ASSERT_EQ(result.learners.size(), 1u);
    const auto csv = metrics_to_csv(result.learners[0].metrics);
    // Steps 0 and 1 for each metric.
    for (const auto& name : metric_names()) {
        std::size_t rows = 0;
        for (std::size_t pos = 0; (pos = csv.find("," + name + ",", pos)) != std::string::npos; ++pos) ++rows;
        EXPECT_EQ(rows, 2u) << name;
    }
    EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 1 + 2 * 4);
}

TEST(Experiment, DeterministicOutputFiles) {
    auto c = small_config();
    c.n_runs = 3;
    c.n_queries = 3;
    c.strategies = {Strategy::ig, Strategy::random};
    c.m_model = {1, 2};
    const auto ds = load_dataset_source(c.dataset);
    const auto a = temp_dir("det-a"), b = temp_dir("det-b");
    write_experiment(run_experiment(c, ds), a.string());
    c.threads = 3;
    write_experiment(run_experiment(c, ds), b.string());
    for (const auto* f : {"ig-M1.csv", "ig-M2.csv", "random-M1.csv", "random-M2.csv", "summary.json"})
        EXPECT_EQ(read_text_file((a / f).string()), read_text_file((b / f).string())) << f;
}

TEST(Experiment, StrategiesShareStepZero) {
    auto c = small_config();
    c.n_runs = 2;
    c.n_queries = 2;
    c.strategies = {Strategy::ig, Strategy::random, Strategy::vr};
    const auto ds = load_dataset_source(c.dataset);
    const auto r = run_experiment(c, ds);
    for (const auto& name : metric_names())
        for (std::size_t run = 0; run < 2; ++run) {
            const double v = r.learner("ig-M2").metric(name).values[run][0];
            EXPECT_EQ(r.learner("random-M2").metric(name).values[run][0], v);
            EXPECT_EQ(r.learner("vr-M2").metric(name).values[run][0], v);
        }
}

TEST(Experiment, SummaryContainsPairedTests) {
    auto c = small_config();
    c.n_runs = 3;
    c.n_queries = 2;
    c.strategies = {Strategy::ig, Strategy::random};
    const auto r = run_experiment(c, load_dataset_source(c.dataset));
    const auto s = summarize(named_metrics(r));
    EXPECT_TRUE(s["learners"].contains("ig-M2"));
    EXPECT_TRUE(s["learners"]["random-M2"]["loglik"].contains("auc_mean"));
    bool found = false;
    for (const auto& t : s["paired_tests"])
        found = found || (t["metric"] == "loglik" && t["statistic"] == "auc" && t["a"] == "ig-M2");
    EXPECT_TRUE(found);
}

TEST(Experiment, BaselineFallsBackBeforeData) {
    const auto ds = mmrl::testing::make_dataset({{1.0}, {-1.0}, {0.5}});
    const std::vector<Observation> eval{{{{0, 1}}, {{0, 1}}}};
    EXPECT_NEAR(baseline_loglik(ds, {}, eval), std::log(0.5), 1e-12);
}
