#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>
#include <vector>

#include "mmrl/plackett_luce.hpp"
#include "mmrl/posterior.hpp"
#include "mmrl/rng.hpp"
#include "mmrl/types.hpp"

namespace mmrl {

struct AnnealSchedule {
    std::size_t n_chains = 10;  // N_SA
    std::size_t iters = 30;     // H_SA
    double start_temp = 10.0;   // T0_SA
    double cooling = 0.9;       // gamma_SA

    void validate() const {
        if (n_chains < 1 || iters < 1) throw InvalidInput("annealing needs at least one chain and one iteration");
        if (!(start_temp > 0.0)) throw InvalidInput("annealing start temperature must be positive");
        if (!(cooling > 0.0 && cooling < 1.0)) throw InvalidInput("annealing cooling factor must lie in (0, 1)");
    }

    // Iterations are 1-based; the first runs at the start temperature.
    double temperature(std::size_t iter) const {
        return start_temp * std::pow(cooling, static_cast<double>(iter) - 1.0);
    }
};

// Rewards of every query item under every (sample, mode), laid out once per
// candidate query so that the N x N likelihood table can be filled cheaply.
class QueryLikelihoodTable {
public:
    QueryLikelihoodTable(const Dataset& dataset, const std::vector<std::size_t>& items,
                         const std::vector<MixtureParams>& samples)
        : k_(items.size()), samples_(samples.size()) {
        modes_ = samples.empty() ? 0 : samples.front().modes();
        const std::size_t rows = samples_ * modes_;
        rewards_.resize(rows * k_);
        shifted_.resize(rows * k_);
        log_alpha_.resize(rows);
        alpha_.resize(rows);
        for (std::size_t j = 0; j < samples_; ++j) {
            const auto& p = samples[j];
            if (p.modes() != modes_) throw InvalidInput("posterior samples have differing mode counts");
            for (std::size_t m = 0; m < modes_; ++m) {
                const std::size_t row = j * modes_ + m;
                alpha_[row] = p.mixing()[m];
                log_alpha_[row] = alpha_[row] > 0.0 ? std::log(alpha_[row]) : kNegInf;
                double hi = kNegInf;
                for (std::size_t i = 0; i < k_; ++i) {
                    const double r = dot(p.weight(m), dataset.features(items[i]));
                    rewards_[row * k_ + i] = r;
                    hi = std::max(hi, r);
                }
                for (std::size_t i = 0; i < k_; ++i) shifted_[row * k_ + i] = std::exp(rewards_[row * k_ + i] - hi);
            }
        }
        scratch_.resize(k_);
    }

    std::size_t samples() const { return samples_; }

    // log Pr(x | Q, theta_j) with x given as positions into the item list.
    double log_likelihood(std::size_t j, const std::vector<std::size_t>& order) const {
        // Fast path: linear-space product of softmax ratios. Falls back to the
        // log-space evaluation if any per-mode term could have underflowed.
        double p = 0.0;
        bool ok = true;
        for (std::size_t m = 0; m < modes_ && ok; ++m) {
            const std::size_t row = j * modes_ + m;
            if (alpha_[row] <= 0.0) continue;
            const double* e = &shifted_[row * k_];
            double suffix = 0.0;
            double prod = 1.0;
            for (std::size_t i = k_; i-- > 0;) {
                suffix += e[order[i]];
                prod *= e[order[i]] / suffix;
            }
            ok = prod >= 1e-280;
            p += alpha_[row] * prod;
        }
        if (ok && p > 0.0) return std::log(p);

        double acc = kNegInf;
        for (std::size_t m = 0; m < modes_; ++m) {
            const std::size_t row = j * modes_ + m;
            if (alpha_[row] <= 0.0) continue;
            for (std::size_t i = 0; i < k_; ++i) scratch_[i] = rewards_[row * k_ + order[i]];
            acc = log_add_exp(acc, log_alpha_[row] + log_plackett_luce(scratch_));
        }
        return acc;
    }

private:
    std::size_t k_ = 0;
    std::size_t samples_ = 0;
    std::size_t modes_ = 0;
    std::vector<double> rewards_;
    std::vector<double> shifted_;
    std::vector<double> log_alpha_;
    std::vector<double> alpha_;
    mutable std::vector<double> scratch_;
};

// Responses x_i ~ Pr(X | Q, theta_i), one per sample, drawn from a stream keyed
// by the (unordered) query and the sample index. Returned as positions into
// the query's canonical (sorted) item order.
inline std::vector<std::vector<std::size_t>> draw_paired_responses(const Dataset& dataset,
                                                                   const std::vector<std::size_t>& canonical_items,
                                                                   const std::vector<MixtureParams>& samples,
                                                                   const Rng& rng) {
    const Rng query_rng = rng.split(hash_indices(canonical_items));
    const RankingQuery q{canonical_items};
    std::vector<std::vector<std::size_t>> out(samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i) {
        Rng draw = query_rng.split(i);
        const auto x = detail::sample_response_unchecked(samples[i], dataset, q, draw);
        out[i].reserve(x.size());
        for (auto item : x.ranking)
            out[i].push_back(static_cast<std::size_t>(
                std::lower_bound(canonical_items.begin(), canonical_items.end(), item) - canonical_items.begin()));
    }
    return out;
}

// L(Q; x, theta) = sum_i [ log sum_j Pr[x_i | Q, theta_j] - log Pr[x_i | Q, theta_i] ]
inline double ig_loss_given(const QueryLikelihoodTable& table, const std::vector<std::vector<std::size_t>>& responses) {
    const std::size_t n = table.samples();
    std::vector<double> column(n);
    double loss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) column[j] = table.log_likelihood(j, responses[i]);
        loss += log_sum_exp(column) - column[i];
    }
    return loss;
}

inline void check_selection_inputs(const Dataset& dataset, const RankingQuery& query, const PosteriorSamples& samples) {
    if (samples.empty()) throw InvalidInput("query scoring needs posterior samples");
    query.validate(dataset);
    for (const auto& s : samples.samples) s.validate(dataset.dimension());
}

// Monte-Carlo information-gain loss (lower is better).
inline double ig_loss(const Dataset& dataset, const RankingQuery& query, const PosteriorSamples& samples,
                      const Rng& rng) {
    check_selection_inputs(dataset, query, samples);
    const auto items = query.canonical();
    const QueryLikelihoodTable table(dataset, items, samples.samples);
    return ig_loss_given(table, draw_paired_responses(dataset, items, samples.samples, rng));
}

// Volume-removal surrogate: sum_i (1 - Pr[x_i | Q, theta_i]) with x_i ~ theta_i.
// Larger means more (unnormalized) posterior mass removed.
inline double vr_objective(const Dataset& dataset, const RankingQuery& query, const PosteriorSamples& samples,
                           const Rng& rng) {
    check_selection_inputs(dataset, query, samples);
    const auto items = query.canonical();
    const QueryLikelihoodTable table(dataset, items, samples.samples);
    const auto responses = draw_paired_responses(dataset, items, samples.samples, rng);
    double total = 0.0;
    for (std::size_t i = 0; i < samples.size(); ++i) total += 1.0 - std::exp(table.log_likelihood(i, responses[i]));
    return total;
}

struct AnnealResult {
    RankingQuery query;  // items sorted by dataset index
    double loss = 0.0;
    std::vector<std::vector<double>> best_trace;  // per chain: best loss after init and each iteration
    std::size_t evaluations = 0;
};

inline std::vector<std::size_t> random_subset(std::size_t n, std::size_t k, Rng& rng) {
    std::vector<std::size_t> pool(n);
    std::iota(pool.begin(), pool.end(), 0);
    for (std::size_t i = 0; i < k; ++i) std::swap(pool[i], pool[i + rng.index(n - i)]);
    pool.resize(k);
    std::sort(pool.begin(), pool.end());
    return pool;
}

// Simulated annealing over K-subsets of [0, n). A move swaps one member for a
// uniformly chosen non-member; Metropolis acceptance at T0 * gamma^(iter-1).
// Losses are memoized per subset.
template <class LossFn>
AnnealResult anneal_query(std::size_t n, std::size_t k, const AnnealSchedule& schedule, LossFn&& loss_fn,
                          const Rng& rng) {
    schedule.validate();
    if (k < 2) throw InvalidInput("query size must be at least 2");
    if (n < k) throw InvalidInput("dataset has fewer trajectories than the query size");

    std::map<std::vector<std::size_t>, double> memo;
    AnnealResult result;
    auto evaluate = [&](const std::vector<std::size_t>& q) {
        auto it = memo.find(q);
        if (it != memo.end()) return it->second;
        ++result.evaluations;
        const double v = loss_fn(q);
        memo.emplace(q, v);
        return v;
    };

    bool have_best = false;
    for (std::size_t c = 0; c < schedule.n_chains; ++c) {
        Rng chain_rng = rng.split("anneal-chain", c);
        std::vector<std::size_t> current = random_subset(n, k, chain_rng);
        double current_loss = evaluate(current);
        double chain_best = current_loss;
        std::vector<double> trace{chain_best};
        if (!have_best || current_loss < result.loss) {
            result.query.items = current;
            result.loss = current_loss;
            have_best = true;
        }
        for (std::size_t iter = 1; iter <= schedule.iters && n > k; ++iter) {
            std::vector<std::size_t> next = current;
            const std::size_t slot = chain_rng.index(k);
            std::size_t incoming;
            do {
                incoming = chain_rng.index(n);
            } while (std::binary_search(current.begin(), current.end(), incoming));
            next[slot] = incoming;
            std::sort(next.begin(), next.end());
            const double next_loss = evaluate(next);
            const double u = chain_rng.uniform();
            if (next_loss <= current_loss ||
                u < std::exp((current_loss - next_loss) / schedule.temperature(iter))) {
                current = std::move(next);
                current_loss = next_loss;
            }
            chain_best = std::min(chain_best, current_loss);
            trace.push_back(chain_best);
            if (current_loss < result.loss) {
                result.query.items = current;
                result.loss = current_loss;
            }
        }
        result.best_trace.push_back(std::move(trace));
    }
    return result;
}

inline void check_pool(const Dataset& dataset, std::size_t k) {
    if (k < 2) throw InvalidInput("query size must be at least 2");
    if (dataset.size() < k)
        throw InvalidInput("dataset has " + std::to_string(dataset.size()) + " trajectories, fewer than K = " +
                           std::to_string(k));
}

inline AnnealResult anneal_ig(const Dataset& dataset, const PosteriorSamples& samples, std::size_t k,
                              const AnnealSchedule& schedule, const Rng& rng) {
    check_pool(dataset, k);
    if (samples.empty()) throw InvalidInput("query scoring needs posterior samples");
    const Rng draws = rng.split("ig-draws");
    return anneal_query(
        dataset.size(), k, schedule,
        [&](const std::vector<std::size_t>& items) {
            const QueryLikelihoodTable table(dataset, items, samples.samples);
            return ig_loss_given(table, draw_paired_responses(dataset, items, samples.samples, draws));
        },
        rng.split("anneal"));
}

// Minimizes the information-gain loss by simulated annealing.
inline RankingQuery select_query_ig(const Dataset& dataset, const PosteriorSamples& samples, std::size_t k,
                                    const AnnealSchedule& schedule, const Rng& rng) {
    return anneal_ig(dataset, samples, k, schedule, rng).query;
}

inline RankingQuery select_query_vr(const Dataset& dataset, const PosteriorSamples& samples, std::size_t k,
                                    const AnnealSchedule& schedule, const Rng& rng) {
    check_pool(dataset, k);
    if (samples.empty()) throw InvalidInput("query scoring needs posterior samples");
    const Rng draws = rng.split("vr-draws");
    return anneal_query(
               dataset.size(), k, schedule,
               [&](const std::vector<std::size_t>& items) {
                   return -vr_objective(dataset, RankingQuery{items}, samples, draws);
               },
               rng.split("anneal"))
        .query;
}

using QuerySet = std::set<std::vector<std::size_t>>;

// C(n, k), saturating at 1e18.
inline double count_subsets(std::size_t n, std::size_t k) {
    if (k > n) return 0.0;
    double c = 1.0;
    for (std::size_t i = 1; i <= k; ++i) {
        c = c * static_cast<double>(n - k + i) / static_cast<double>(i);
        if (c > 1e18) return 1e18;
    }
    return std::round(c);
}

// Uniform K-subset that has not been issued before; records it in `used`.
inline RankingQuery select_query_random(const Dataset& dataset, std::size_t k, QuerySet& used, Rng& rng) {
    check_pool(dataset, k);
    const double total = count_subsets(dataset.size(), k);
    if (static_cast<double>(used.size()) >= total) throw InvalidState("every K-subset has already been queried");

    for (int attempt = 0; attempt < 10000; ++attempt) {
        auto q = random_subset(dataset.size(), k, rng);
        if (used.insert(q).second) return RankingQuery{std::move(q)};
    }
    // Nearly exhausted and small: pick uniformly among what is left.
    std::vector<std::vector<std::size_t>> left;
    std::vector<bool> mask(dataset.size(), false);
    std::fill(mask.begin(), mask.begin() + static_cast<std::ptrdiff_t>(k), true);
    do {
        std::vector<std::size_t> q;
        for (std::size_t i = 0; i < mask.size(); ++i)
            if (mask[i]) q.push_back(i);
        if (!used.count(q)) left.push_back(std::move(q));
    } while (std::prev_permutation(mask.begin(), mask.end()));
    auto q = left[rng.index(left.size())];
    used.insert(q);
    return RankingQuery{std::move(q)};
}

enum class Identifiability { identifiable, not_guaranteed };

// Sufficient condition for generic identifiability: M <= floor((K-2)/2)!.
inline Identifiability check_identifiability(std::size_t modes, std::size_t k) {
    if (modes < 1 || k < 2) throw InvalidInput("identifiability check needs M >= 1 and K >= 2");
    const std::size_t half = (k - 2) / 2;
    double bound = 1.0;
    for (std::size_t i = 2; i <= half && bound < 1e18; ++i) bound *= static_cast<double>(i);
    return static_cast<double>(modes) <= bound ? Identifiability::identifiable : Identifiability::not_guaranteed;
}

}  // namespace mmrl
