#pragma once

#include <cmath>
#include <numbers>
#include <optional>
#include <vector>

#include "mmrl/io.hpp"
#include "mmrl/parallel.hpp"
#include "mmrl/plackett_luce.hpp"
#include "mmrl/rng.hpp"
#include "mmrl/types.hpp"

namespace mmrl {

// Log densities below this are treated as impossible states.
inline constexpr double kLogDensityFloor = -1e12;

// w_m ~ N(0, I) independently, alpha ~ Unif(simplex). fixed_mixing pins alpha
// instead (a point mass), which turns off mixing moves in the sampler.
struct Prior {
    std::size_t modes = 1;
    std::size_t dim = 1;
    std::optional<std::vector<double>> fixed_mixing;

    bool samples_mixing() const { return modes > 1 && !fixed_mixing; }
};

inline double log_prior_density(const Prior& prior, const MixtureParams& params) {
    if (params.modes() != prior.modes || params.dim() != prior.dim)
        throw InvalidInput("parameters do not match the prior's shape");
    double lp = 0.0;
    const double log_norm = 0.5 * std::log(2.0 * std::numbers::pi);
    for (double w : params.flat_weights()) lp += -0.5 * w * w - log_norm;
    if (prior.samples_mixing()) {
        // Uniform density on the (M-1)-simplex is (M-1)!.
        lp += std::lgamma(static_cast<double>(prior.modes));
    }
    return lp;
}

// log Pr(Theta) + sum_t log Pr(x_t | Q_t, Theta).
inline double log_posterior_unnorm(const Prior& prior, const Dataset& dataset, const ObservationLog& log,
                                   const MixtureParams& params) {
    params.validate(dataset.dimension());
    double lp = log_prior_density(prior, params);
    for (const auto& obs : log.steps()) {
        lp += detail::log_likelihood_unchecked(params, dataset, obs.response);
        if (lp < kLogDensityFloor) return kNegInf;
    }
    return lp;
}

// Sampler moves alpha through additive log-ratio logits z_m = log(a_m / a_M).
// The change of variables contributes log|J| = sum_m log a_m.
inline double mixing_log_jacobian(const MixtureParams& params) {
    if (params.modes() <= 1) return 0.0;
    double s = 0.0;
    for (double a : params.mixing()) s += std::log(a);
    return s;
}

inline double proposal_stddev(double step) { return std::sqrt(step); }

// Gaussian random walk on the logits of alpha, mapped back through softmax.
inline MixtureParams mixing_proposal(const MixtureParams& params, double step, Rng& rng) {
    MixtureParams out = params;
    const std::size_t m = params.modes();
    if (m <= 1 || step <= 0.0) return out;
    const double sd = proposal_stddev(step);
    const double last = std::log(params.mixing()[m - 1]);
    std::vector<double> logits(m, 0.0);
    for (std::size_t i = 0; i + 1 < m; ++i) logits[i] = std::log(params.mixing()[i]) - last + sd * rng.normal();
    const double norm = log_sum_exp(logits);
    for (std::size_t i = 0; i < m; ++i) out.mixing()[i] = std::exp(logits[i] - norm);
    return out;
}

inline MixtureParams sample_prior(const Prior& prior, Rng& rng) {
    MixtureParams p(prior.modes, prior.dim);
    for (double& w : p.flat_weights()) w = rng.normal();
    if (prior.fixed_mixing) {
        p.mixing() = *prior.fixed_mixing;
    } else if (prior.modes > 1) {
        double total = 0.0;
        for (double& a : p.mixing()) total += (a = rng.exponential());
        for (double& a : p.mixing()) a /= total;
    }
    return p;
}

// Density the sampler targets, in the (w, z) coordinates it moves in.
inline double sampler_log_target(const Prior& prior, const Dataset& dataset, const ObservationLog& log,
                                 const MixtureParams& params) {
    double lp = log_posterior_unnorm(prior, dataset, log, params);
    if (lp == kNegInf) return lp;
    if (prior.samples_mixing()) lp += mixing_log_jacobian(params);
    return lp < kLogDensityFloor || std::isnan(lp) ? kNegInf : lp;
}

// log of min(1, target(to) / target(from)); proposals are symmetric.
inline double log_acceptance_ratio(const Prior& prior, const Dataset& dataset, const ObservationLog& log,
                                   const MixtureParams& from, const MixtureParams& to) {
    const double a = sampler_log_target(prior, dataset, log, to);
    const double b = sampler_log_target(prior, dataset, log, from);
    if (a == kNegInf) return kNegInf;
    if (b == kNegInf) return 0.0;
    return std::min(0.0, a - b);
}

struct MhConfig {
    std::size_t n_chains = 100;  // N
    std::size_t iters = 200;     // H_MH
    double step = 0.15;          // sigma_MH, variance of the random-walk proposal
    std::size_t threads = 1;
};

struct PosteriorSamples {
    std::vector<MixtureParams> samples;
    std::uint64_t seed = 0;
    std::size_t n_chains = 0;
    std::size_t iters = 0;
    double step = 0.0;

    std::size_t size() const { return samples.size(); }
    bool empty() const { return samples.empty(); }
};

// Multi-chain Metropolis-Hastings: N independent chains started from the
// prior, H_MH steps each, keeping only the final state of every chain.
inline PosteriorSamples mh_sample(const Prior& prior, const Dataset& dataset, const ObservationLog& log,
                                  const MhConfig& config, const Rng& rng) {
    if (config.n_chains < 1 || config.iters < 1) throw InvalidInput("need at least one chain and one iteration");
    if (config.step < 0.0) throw InvalidInput("proposal step must be non-negative");
    if (prior.dim != dataset.dimension()) throw InvalidInput("prior dimension does not match the dataset");
    log.validate(dataset);

    PosteriorSamples out;
    out.seed = rng.seed();
    out.n_chains = config.n_chains;
    out.iters = config.iters;
    out.step = config.step;
    out.samples.resize(config.n_chains);

    const double sd = proposal_stddev(config.step);
    parallel_for(config.n_chains, config.threads, [&](std::size_t c) {
        Rng chain_rng = rng.split("mh-chain", c);
        MixtureParams current = sample_prior(prior, chain_rng);
        double current_target = sampler_log_target(prior, dataset, log, current);
        MixtureParams proposal = current;
        for (std::size_t it = 0; it < config.iters; ++it) {
            if (prior.samples_mixing()) {
                proposal = mixing_proposal(current, config.step, chain_rng);
            } else {
                proposal = current;
            }
            for (double& w : proposal.flat_weights()) w += sd * chain_rng.normal();
            const double target = sampler_log_target(prior, dataset, log, proposal);
            const double u = chain_rng.uniform();
            if (target == kNegInf) continue;
            if (current_target == kNegInf || std::log(u) < target - current_target) {
                std::swap(current, proposal);
                current_target = target;
            }
        }
        out.samples[c] = std::move(current);
    });
    return out;
}

struct MleOptions {
    bool refine = true;
    std::size_t rounds = 20;
    double initial_step = 0.15;  // halved every round
};

// MAP over the posterior samples, then coordinate-wise hill climbing on
// log_posterior_unnorm with a shrinking step. Mixing coordinates are climbed in
// log-ratio space so alpha stays on the simplex.
inline MixtureParams mle_estimate(const Prior& prior, const Dataset& dataset, const ObservationLog& log,
                                  const PosteriorSamples& samples, const MleOptions& options = {}) {
    if (samples.empty()) throw InvalidInput("MLE needs at least one posterior sample");
    std::size_t best = 0;
    double best_lp = kNegInf;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const double lp = log_posterior_unnorm(prior, dataset, log, samples.samples[i]);
        if (i == 0 || lp > best_lp) {
            best = i;
            best_lp = lp;
        }
    }
    MixtureParams est = samples.samples[best];
    if (!options.refine) return est;

    const std::size_t m = est.modes();
    const bool climb_mixing = prior.samples_mixing();
    double step = options.initial_step;
    for (std::size_t round = 0; round < options.rounds; ++round, step *= 0.5) {
        for (std::size_t c = 0; c < est.flat_weights().size(); ++c) {
            for (double dir : {1.0, -1.0}) {
                MixtureParams trial = est;
                trial.flat_weights()[c] += dir * step;
                const double lp = log_posterior_unnorm(prior, dataset, log, trial);
                if (lp > best_lp) {
                    est = std::move(trial);
                    best_lp = lp;
                    break;
                }
            }
        }
        if (!climb_mixing) continue;
        for (std::size_t c = 0; c + 1 < m; ++c) {
            for (double dir : {1.0, -1.0}) {
                std::vector<double> logits(m, 0.0);
                const double last = std::log(est.mixing()[m - 1]);
                for (std::size_t i = 0; i + 1 < m; ++i) logits[i] = std::log(est.mixing()[i]) - last;
                logits[c] += dir * step;
                const double norm = log_sum_exp(logits);
                MixtureParams trial = est;
                for (std::size_t i = 0; i < m; ++i) trial.mixing()[i] = std::exp(logits[i] - norm);
                if (!std::isfinite(norm)) continue;
                const double lp = log_posterior_unnorm(prior, dataset, log, trial);
                if (lp > best_lp) {
                    est = std::move(trial);
                    best_lp = lp;
                    break;
                }
            }
        }
    }
    return est;
}

inline json samples_to_json(const PosteriorSamples& s) {
    json arr = json::array();
    for (const auto& p : s.samples) arr.push_back(params_to_json(p));
    return {{"seed", s.seed}, {"n_chains", s.n_chains}, {"iters", s.iters}, {"step", s.step}, {"samples", arr}};
}

inline PosteriorSamples samples_from_json(const json& j) {
    reject_unknown_keys(j, {"seed", "n_chains", "iters", "step", "samples"}, "posterior samples");
    PosteriorSamples s;
    s.seed = j.value("seed", std::uint64_t{0});
    s.n_chains = j.value("n_chains", std::size_t{0});
    s.iters = j.value("iters", std::size_t{0});
    s.step = j.value("step", 0.0);
    for (const auto& p : j.at("samples")) s.samples.push_back(params_from_json(p));
    return s;
}

}  // namespace mmrl
