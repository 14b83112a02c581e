#include <csignal>
#include <filesystem>
#include <iostream>

#include <CLI11.hpp>

#include "mmrl/mmrl.hpp"
#include "mmrl/service.hpp"
#include "mmrl/session.hpp"

namespace {

void print_summary(const mmrl::json& summary) {
    std::cout << "learner                 metric            auc_mean      auc_se  final_mean final_median\n";
    for (const auto& [label, metrics] : summary["learners"].items())
        for (const auto& [name, m] : metrics.items()) {
            std::printf("%-23s %-15s %11.4f %11.4f %11.4f %11.4f\n", label.c_str(), name.c_str(),
                        m.value("auc_mean", 0.0), m.value("auc_se", 0.0), m.value("final_mean", 0.0),
                        m.value("final_median", 0.0));
        }
    std::cout << "\npaired t-tests (a - b)\n";
    for (const auto& t : summary["paired_tests"]) {
        const double tv = t["t"].is_null() ? 0.0 : t["t"].get<double>();
        std::printf("%-15s %-15s %-15s %-5s diff=%10.4f t=%8.3f p=%.3g\n", t["a"].get<std::string>().c_str(),
                    t["b"].get<std::string>().c_str(), t["metric"].get<std::string>().c_str(),
                    t["statistic"].get<std::string>().c_str(), t["mean_difference"].get<double>(), tv,
                    t["p"].get<double>());
    }
}

httplib::Server* g_server = nullptr;

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Active learning of multimodal rewards from rankings"};
    app.require_subcommand(1);

    std::string config_path;
    auto* run = app.add_subcommand("run", "Run a simulated-expert experiment");
    run->add_option("--config", config_path, "Experiment config (JSON)")->required()->check(CLI::ExistingFile);
    std::size_t run_threads = 0;
    run->add_option("--threads", run_threads, "Worker threads (overrides config)");

    std::string out_path;
    std::uint64_t gen_seed = 0;
    bool standardize = false;
    auto* gen_syn = app.add_subcommand("gen-synthetic", "Write the 1110-trajectory Gaussian-feature dataset");
    gen_syn->add_option("--out", out_path, "Output dataset file")->required();
    gen_syn->add_option("--seed", gen_seed, "Random seed");

    auto* gen_fetch = app.add_subcommand("gen-fetch", "Write the 351-trajectory Fetch shelf dataset");
    gen_fetch->add_option("--out", out_path, "Output dataset file")->required();

    std::size_t gauss_count = 1000, gauss_dims = 8;
    auto* gen_gauss = app.add_subcommand("gen-gaussian", "Write a standard-normal feature dataset");
    gen_gauss->add_option("--out", out_path, "Output dataset file")->required();
    gen_gauss->add_option("--count", gauss_count, "Number of trajectories");
    gen_gauss->add_option("--dims", gauss_dims, "Feature dimension");
    gen_gauss->add_option("--seed", gen_seed, "Random seed");

    std::string dataset_path, strategy = "ig", data_dir = "sessions", static_dir, host = "0.0.0.0";
    int port = 8080;
    std::size_t modes = 2, k = 6, n_active = 15, n_eval = 10;
    auto* serve = app.add_subcommand("serve", "Serve live ranking sessions over HTTP");
    serve->add_option("--dataset", dataset_path, "Dataset file")->required()->check(CLI::ExistingFile);
    serve->add_option("--strategy", strategy, "Query strategy")->check(CLI::IsMember({"ig", "random", "vr"}));
    serve->add_option("--port", port, "Port");
    serve->add_option("--host", host, "Bind address");
    serve->add_option("--data-dir", data_dir, "Directory for session logs");
    serve->add_option("--static", static_dir, "Directory of UI files to serve at /");
    serve->add_option("--modes", modes, "Mixture size M");
    serve->add_option("-k,--query-size", k, "Query size K");
    serve->add_option("--n-active", n_active, "Active queries per session");
    serve->add_option("--n-eval", n_eval, "Evaluation queries per session");
    serve->add_option("--seed", gen_seed, "Base seed for session seeds");
    serve->add_flag("--standardize", standardize, "Z-score the dataset features");

    std::vector<std::string> csv_files;
    auto* report = app.add_subcommand("report", "Summarize metric CSV files (one learner per file)");
    report->add_option("--csv", csv_files, "Metric CSV files")->required()->check(CLI::ExistingFile);

    CLI11_PARSE(app, argc, argv);

    try {
        if (*run) {
            auto config = mmrl::config_from_json(mmrl::json::parse(mmrl::read_text_file(config_path)));
            if (run_threads) config.threads = run_threads;
            for (const auto& w : config.validate()) std::cerr << "warning: " << w << "\n";
            const auto dataset = mmrl::load_dataset_source(config.dataset);
            const auto result = mmrl::run_experiment(config, dataset);
            const std::string dir = config.output.empty() ? "results" : config.output;
            mmrl::write_experiment(result, dir);
            print_summary(mmrl::summarize(mmrl::named_metrics(result)));
            std::cout << "\nwrote " << dir << "\n";
        } else if (*gen_syn) {
            mmrl::SyntheticSpec spec;
            spec.seed = gen_seed;
            mmrl::save_dataset(mmrl::gen_synthetic_dataset(spec), out_path);
        } else if (*gen_fetch) {
            mmrl::save_dataset(mmrl::gen_fetch_dataset(), out_path);
        } else if (*gen_gauss) {
            mmrl::save_dataset(mmrl::gen_gaussian_dataset(gauss_count, gauss_dims, gen_seed), out_path);
        } else if (*serve) {
            const auto dataset = mmrl::load_dataset(dataset_path, standardize);
            mmrl::SessionConfig defaults;
            defaults.strategy = mmrl::parse_strategy(strategy);
            defaults.modes = modes;
            defaults.k = k;
            defaults.n_active = n_active;
            defaults.n_eval = n_eval;
            defaults.seed = gen_seed;
            mmrl::SessionStore store(dataset, data_dir, defaults);
            const auto recovered = store.recover();
            httplib::Server server;
            mmrl::register_routes(server, store);
            if (!static_dir.empty() && !server.set_mount_point("/", static_dir))
                throw mmrl::InvalidInput("cannot serve static files from '" + static_dir + "'");
            g_server = &server;
            std::signal(SIGINT, [](int) {
                if (g_server) g_server->stop();
            });
            std::cerr << "recovered " << recovered << " session(s); listening on " << host << ":" << port << "\n";
            if (!server.listen(host, port)) throw mmrl::InvalidState("cannot listen on port " + std::to_string(port));
        } else if (*report) {
            std::vector<mmrl::NamedMetrics> groups;
            for (const auto& f : csv_files)
                groups.push_back({std::filesystem::path(f).stem().string(),
                                  mmrl::metrics_from_csv(mmrl::read_text_file(f))});
            print_summary(mmrl::summarize(groups));
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
