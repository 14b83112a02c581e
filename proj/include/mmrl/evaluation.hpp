#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <boost/math/distributions/students_t.hpp>

#include "mmrl/io.hpp"
#include "mmrl/plackett_luce.hpp"
#include "mmrl/posterior.hpp"
#include "mmrl/types.hpp"

namespace mmrl {

// --- assignment --------------------------------------------------------------

struct Assignment {
    std::vector<std::size_t> row_to_col;
    double cost = 0.0;
};

// Minimum-cost assignment of every row to a distinct column (rows <= cols),
// O(rows^2 * cols) shortest augmenting paths with potentials.
inline Assignment hungarian(const std::vector<std::vector<double>>& cost) {
    const std::size_t n = cost.size();
    if (n == 0) return {};
    const std::size_t m = cost.front().size();
    for (const auto& row : cost)
        if (row.size() != m) throw InvalidInput("cost matrix rows have differing lengths");
    if (n > m) throw InvalidInput("cost matrix needs at least as many columns as rows");

    constexpr double inf = std::numeric_limits<double>::infinity();
    // 1-based with a virtual column 0.
    std::vector<double> u(n + 1, 0.0), v(m + 1, 0.0);
    std::vector<std::size_t> p(m + 1, 0), way(m + 1, 0);
    for (std::size_t i = 1; i <= n; ++i) {
        p[0] = i;
        std::size_t j0 = 0;
        std::vector<double> minv(m + 1, inf);
        std::vector<bool> used(m + 1, false);
        do {
            used[j0] = true;
            const std::size_t i0 = p[j0];
            double delta = inf;
            std::size_t j1 = 0;
            for (std::size_t j = 1; j <= m; ++j) {
                if (used[j]) continue;
                const double cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (std::size_t j = 0; j <= m; ++j) {
                if (used[j]) {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (p[j0] != 0);
        do {
            const std::size_t j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
        } while (j0 != 0);
    }

    Assignment out;
    out.row_to_col.assign(n, 0);
    for (std::size_t j = 1; j <= m; ++j)
        if (p[j] != 0) out.row_to_col[p[j] - 1] = j - 1;
    for (std::size_t i = 0; i < n; ++i) out.cost += cost[i][out.row_to_col[i]];
    return out;
}

// Square matrices only, as used by the metric.
inline Assignment hungarian_square(const std::vector<std::vector<double>>& cost) {
    for (const auto& row : cost)
        if (row.size() != cost.size()) throw InvalidInput("cost matrix must be square");
    return hungarian(cost);
}

// --- metrics -----------------------------------------------------------------

inline double squared_distance(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
    return s;
}

// sum_m ||w*_m - w_hat_{pi(m)}||^2 under the best mode matching pi. A unimodal
// estimate is compared against every true mode. With fewer (but more than one)
// estimated modes each true mode is charged to its nearest estimate; with more,
// the best injective matching of the true modes is used.
inline double mse(const MixtureParams& truth, const MixtureParams& est) {
    if (truth.dim() != est.dim()) throw InvalidInput("MSE needs parameters of equal dimension");
    const std::size_t mt = truth.modes();
    const std::size_t me = est.modes();
    if (me < mt) {
        double total = 0.0;
        for (std::size_t a = 0; a < mt; ++a) {
            double best = std::numeric_limits<double>::infinity();
            for (std::size_t b = 0; b < me; ++b) best = std::min(best, squared_distance(truth.weight(a), est.weight(b)));
            total += best;
        }
        return total;
    }
    std::vector<std::vector<double>> cost(mt, std::vector<double>(me));
    for (std::size_t a = 0; a < mt; ++a)
        for (std::size_t b = 0; b < me; ++b) cost[a][b] = squared_distance(truth.weight(a), est.weight(b));
    return hungarian(cost).cost;
}

// Mean over held-out (Q, x) of log( (1/N) sum_i Pr(x | Q, theta_i) ).
inline double holdout_loglik(const Dataset& dataset, const std::vector<MixtureParams>& samples,
                             const std::vector<Observation>& eval_set) {
    if (samples.empty()) throw InvalidInput("holdout log-likelihood needs posterior samples");
    if (eval_set.empty()) throw InvalidInput("holdout log-likelihood needs evaluation responses");
    for (const auto& s : samples) s.validate(dataset.dimension());
    const double log_n = std::log(static_cast<double>(samples.size()));
    std::vector<double> terms(samples.size());
    double total = 0.0;
    for (const auto& obs : eval_set) {
        obs.query.validate(dataset);
        if (!obs.response.permutes(obs.query)) throw InvalidInput("evaluation response does not match its query");
        for (std::size_t i = 0; i < samples.size(); ++i)
            terms[i] = detail::log_likelihood_unchecked(samples[i], dataset, obs.response);
        total += log_sum_exp(terms) - log_n;
    }
    return total / static_cast<double>(eval_set.size());
}

inline double holdout_loglik(const Dataset& dataset, const PosteriorSamples& samples,
                             const std::vector<Observation>& eval_set) {
    return holdout_loglik(dataset, samples.samples, eval_set);
}

// --- series, AUC, tests -------------------------------------------------------

// One metric over query steps for several runs: values[run][t], t counted from first_step.
struct MetricSeries {
    std::string name;
    std::size_t first_step = 0;
    std::vector<std::vector<double>> values;

    std::size_t steps() const { return values.empty() ? 0 : values.front().size(); }

    void validate() const {
        for (const auto& run : values)
            if (run.size() != steps()) throw InvalidInput("metric series '" + name + "' is ragged");
    }
};

// Trapezoidal area over the query index (unit spacing), one value per run.
inline std::vector<double> auc(const MetricSeries& series) {
    series.validate();
    if (series.steps() < 2) throw InvalidInput("AUC needs at least two steps");
    std::vector<double> out;
    out.reserve(series.values.size());
    for (const auto& run : series.values) {
        double a = 0.0;
        for (std::size_t t = 1; t < run.size(); ++t) a += 0.5 * (run[t - 1] + run[t]);
        out.push_back(a);
    }
    return out;
}

struct TTestResult {
    double t = 0.0;
    double p = 1.0;
    double df = 0.0;
    double mean_difference = 0.0;
    bool degenerate = false;  // zero variance of the differences
};

// Two-sided paired-sample t-test of a - b.
inline TTestResult paired_t_test(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) throw InvalidInput("paired t-test needs samples of equal length");
    if (a.size() < 2) throw InvalidInput("paired t-test needs at least two pairs");
    const double n = static_cast<double>(a.size());
    double mean = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) mean += (a[i] - b[i]) / n;
    double ss = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) ss += (a[i] - b[i] - mean) * (a[i] - b[i] - mean);
    TTestResult r;
    r.df = n - 1.0;
    r.mean_difference = mean;
    const double se = std::sqrt(ss / r.df / n);
    if (se == 0.0) {
        r.degenerate = true;
        if (mean == 0.0) return r;
        r.t = mean > 0 ? std::numeric_limits<double>::infinity() : -std::numeric_limits<double>::infinity();
        r.p = 0.0;
        return r;
    }
    r.t = mean / se;
    const boost::math::students_t dist(r.df);
    r.p = 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(r.t)));
    return r;
}

inline double mean_of(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

inline double median_of(std::vector<double> v) {
    if (v.empty()) return 0.0;
    std::sort(v.begin(), v.end());
    const std::size_t h = v.size() / 2;
    return v.size() % 2 ? v[h] : 0.5 * (v[h - 1] + v[h]);
}

inline double standard_error(const std::vector<double>& v) {
    if (v.size() < 2) return 0.0;
    const double m = mean_of(v);
    double ss = 0.0;
    for (double x : v) ss += (x - m) * (x - m);
    return std::sqrt(ss / static_cast<double>(v.size() - 1) / static_cast<double>(v.size()));
}

// --- unimodal top-choice baseline --------------------------------------------

// Unit-norm w along the summed features of every ranking's top choice; alpha = 1.
inline MixtureParams unimodal_top_baseline(const ObservationLog& log, const Dataset& dataset) {
    if (log.empty()) throw InvalidInput("baseline needs at least one observation");
    std::vector<double> sum(dataset.dimension(), 0.0);
    for (const auto& obs : log.steps()) {
        if (obs.response.ranking.empty()) throw InvalidInput("empty ranking in observation log");
        const auto f = dataset.features(obs.response.ranking.front());
        for (std::size_t j = 0; j < sum.size(); ++j) sum[j] += f[j];
    }
    double norm = 0.0;
    for (double s : sum) norm += s * s;
    norm = std::sqrt(norm);
    if (!(norm > 1e-12)) throw DegenerateInput("top-choice features sum to the zero vector");
    for (double& s : sum) s /= norm;
    return MixtureParams({sum}, {1.0});
}

// --- CSV ---------------------------------------------------------------------

inline constexpr const char* kCsvHeader = "run,step,metric,value";

// Rows ordered by run, step, then metric in the given order.
inline std::string metrics_to_csv(const std::vector<MetricSeries>& metrics) {
    std::ostringstream out;
    out << kCsvHeader << "\n";
    std::size_t runs = 0, last_step = 0;
    for (const auto& s : metrics) {
        s.validate();
        runs = std::max(runs, s.values.size());
        last_step = std::max(last_step, s.first_step + s.steps());
    }
    for (std::size_t r = 0; r < runs; ++r)
        for (std::size_t t = 0; t < last_step; ++t)
            for (const auto& s : metrics) {
                if (r >= s.values.size() || t < s.first_step || t >= s.first_step + s.steps()) continue;
                out << r << ',' << t << ',' << s.name << ',' << format_double(s.values[r][t - s.first_step]) << "\n";
            }
    return out.str();
}

inline std::vector<MetricSeries> metrics_from_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line) || line != kCsvHeader) throw InvalidInput("metric CSV must start with 'run,step,metric,value'");
    std::map<std::string, std::map<std::size_t, std::map<std::size_t, double>>> cells;
    std::vector<std::string> order;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream row(line);
        std::string run, step, metric, value;
        if (!std::getline(row, run, ',') || !std::getline(row, step, ',') || !std::getline(row, metric, ',') ||
            !std::getline(row, value))
            throw InvalidInput("malformed metric CSV row '" + line + "'");
        if (!cells.count(metric)) order.push_back(metric);
        cells[metric][std::stoul(run)][std::stoul(step)] = std::stod(value);
    }
    std::vector<MetricSeries> out;
    for (const auto& name : order) {
        MetricSeries s;
        s.name = name;
        const auto& runs = cells[name];
        s.first_step = runs.begin()->second.begin()->first;
        for (const auto& [r, steps] : runs) {
            std::vector<double> v;
            for (const auto& [t, x] : steps) v.push_back(x);
            s.values.push_back(std::move(v));
        }
        s.validate();
        out.push_back(std::move(s));
    }
    return out;
}

}  // namespace mmrl
