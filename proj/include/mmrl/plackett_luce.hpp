#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <span>
#include <vector>

#include "mmrl/rng.hpp"
#include "mmrl/types.hpp"

namespace mmrl {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

inline double log_add_exp(double a, double b) {
    if (a == kNegInf) return b;
    if (b == kNegInf) return a;
    const double hi = std::max(a, b);
    return hi + std::log1p(std::exp(std::min(a, b) - hi));
}

inline double log_sum_exp(std::span<const double> values) {
    double hi = kNegInf;
    for (double v : values) hi = std::max(hi, v);
    if (hi == kNegInf) return kNegInf;
    if (hi == std::numeric_limits<double>::infinity()) return hi;
    double s = 0.0;
    for (double v : values) s += std::exp(v - hi);
    return hi + std::log(s);
}

inline double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

// R_m(xi) = w_m . phi(xi); m is zero-based.
inline double reward(const MixtureParams& params, std::size_t mode, std::span<const double> features) {
    if (mode >= params.modes()) throw InvalidInput("mode index out of range");
    if (features.size() != params.dim())
        throw InvalidInput("feature dimension " + std::to_string(features.size()) + " does not match weights " +
                           std::to_string(params.dim()));
    return dot(params.weight(mode), features);
}

inline double reward(const MixtureParams& params, std::size_t mode, const Trajectory& traj) {
    return reward(params, mode, traj.features);
}

// log of prod_i exp(r_i) / sum_{j>=i} exp(r_j) for rewards listed best first.
// Suffix sums are accumulated as a running log-sum-exp from the tail.
inline double log_plackett_luce(std::span<const double> ranked_rewards) {
    double total = 0.0;
    double suffix = kNegInf;
    for (std::size_t k = ranked_rewards.size(); k-- > 0;) {
        suffix = log_add_exp(suffix, ranked_rewards[k]);
        total += ranked_rewards[k] - suffix;
    }
    return total;
}

namespace detail {

// No validation; callers check shapes once up front.
inline double log_likelihood_unchecked(const MixtureParams& params, const Dataset& dataset,
                                       const RankingResponse& response) {
    const std::size_t k = response.ranking.size();
    thread_local std::vector<double> rewards;
    rewards.resize(k);
    double acc = kNegInf;
    for (std::size_t m = 0; m < params.modes(); ++m) {
        const double alpha = params.mixing()[m];
        if (alpha <= 0.0) continue;
        const auto w = params.weight(m);
        for (std::size_t i = 0; i < k; ++i) rewards[i] = dot(w, dataset.features(response.ranking[i]));
        acc = log_add_exp(acc, std::log(alpha) + log_plackett_luce(rewards));
    }
    return acc;
}

}  // namespace detail

inline void check_response(const MixtureParams& params, const Dataset& dataset, const RankingQuery& query,
                           const RankingResponse& response) {
    params.validate(dataset.dimension());
    query.validate(dataset);
    if (!response.permutes(query)) throw InvalidInput("response is not a permutation of the query");
}

// log Pr(x | Q, Theta) for the Plackett-Luce mixture.
inline double log_response_likelihood(const MixtureParams& params, const Dataset& dataset, const RankingQuery& query,
                                      const RankingResponse& response) {
    check_response(params, dataset, query, response);
    return detail::log_likelihood_unchecked(params, dataset, response);
}

inline double response_likelihood(const MixtureParams& params, const Dataset& dataset, const RankingQuery& query,
                                  const RankingResponse& response) {
    return std::exp(log_response_likelihood(params, dataset, query, response));
}

namespace detail {

inline RankingResponse sample_response_unchecked(const MixtureParams& params, const Dataset& dataset,
                                                 const RankingQuery& query, Rng& rng) {
    const std::size_t mode = rng.categorical(params.mixing());
    const auto w = params.weight(mode);
    std::vector<std::size_t> remaining = query.items;
    std::vector<double> logits(remaining.size());
    for (std::size_t i = 0; i < remaining.size(); ++i) logits[i] = dot(w, dataset.features(remaining[i]));

    RankingResponse out;
    out.ranking.reserve(remaining.size());
    std::vector<double> probs;
    while (!remaining.empty()) {
        const double hi = *std::max_element(logits.begin(), logits.end());
        probs.resize(logits.size());
        for (std::size_t i = 0; i < logits.size(); ++i) probs[i] = std::exp(logits[i] - hi);
        const std::size_t pick = rng.categorical(probs);
        out.ranking.push_back(remaining[pick]);
        remaining.erase(remaining.begin() + static_cast<std::ptrdiff_t>(pick));
        logits.erase(logits.begin() + static_cast<std::ptrdiff_t>(pick));
    }
    return out;
}

}  // namespace detail

// Draw a mode from alpha, then rank by repeated softmax selection without replacement.
inline RankingResponse sample_response(const MixtureParams& params, const Dataset& dataset, const RankingQuery& query,
                                       Rng& rng) {
    params.validate(dataset.dimension());
    query.validate(dataset);
    return detail::sample_response_unchecked(params, dataset, query, rng);
}

inline constexpr std::size_t kMaxEnumerationSize = 8;

// Probability of every one of the K! rankings, evaluated as a direct product of
// softmax ratios (linear space, per-mode max shift) so that it cross-checks the
// log-space path. Refuses K > 8.
inline std::map<RankingResponse, double> enumerate_response_distribution(const MixtureParams& params,
                                                                         const Dataset& dataset,
                                                                         const RankingQuery& query) {
    params.validate(dataset.dimension());
    query.validate(dataset);
    if (query.size() > kMaxEnumerationSize)
        throw InvalidInput("refusing to enumerate " + std::to_string(query.size()) + "! rankings");

    const auto items = query.canonical();
    const std::size_t k = items.size();
    std::vector<std::vector<double>> weights(params.modes(), std::vector<double>(k));
    for (std::size_t m = 0; m < params.modes(); ++m) {
        double hi = kNegInf;
        for (std::size_t i = 0; i < k; ++i) {
            weights[m][i] = dot(params.weight(m), dataset.features(items[i]));
            hi = std::max(hi, weights[m][i]);
        }
        for (auto& w : weights[m]) w = std::exp(w - hi);
    }

    std::map<RankingResponse, double> out;
    std::vector<std::size_t> order(k);
    std::iota(order.begin(), order.end(), 0);
    do {
        double prob = 0.0;
        for (std::size_t m = 0; m < params.modes(); ++m) {
            double term = params.mixing()[m];
            for (std::size_t i = 0; i < k; ++i) {
                double denom = 0.0;
                for (std::size_t j = i; j < k; ++j) denom += weights[m][order[j]];
                term *= weights[m][order[i]] / denom;
            }
            prob += term;
        }
        RankingResponse r;
        r.ranking.reserve(k);
        for (auto o : order) r.ranking.push_back(items[o]);
        out.emplace(std::move(r), prob);
    } while (std::next_permutation(order.begin(), order.end()));
    return out;
}

}  // namespace mmrl
