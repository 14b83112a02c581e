#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace mmrl {

struct InvalidInput : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Input is well-formed but carries no usable signal (e.g. a zero-norm sum).
struct DegenerateInput : InvalidInput {
    using InvalidInput::InvalidInput;
};

struct InvalidState : std::logic_error {
    using std::logic_error::logic_error;
};

inline constexpr double kSimplexTolerance = 1e-9;

struct Trajectory {
    std::string id;
    std::vector<double> features;
    std::map<std::string, std::string> meta;
};

// A fixed set of trajectories sharing one feature dimension. Queries and
// responses refer to trajectories by their position in the dataset.
class Dataset {
public:
    Dataset() = default;

    Dataset(std::size_t dimension, std::vector<Trajectory> trajectories)
        : dimension_(dimension), trajectories_(std::move(trajectories)) {
        index_.reserve(trajectories_.size());
        for (std::size_t i = 0; i < trajectories_.size(); ++i) {
            const auto& t = trajectories_[i];
            if (t.features.size() != dimension_)
                throw InvalidInput("trajectory '" + t.id + "' has " + std::to_string(t.features.size()) +
                                   " features, dataset dimension is " + std::to_string(dimension_));
            if (!index_.emplace(t.id, i).second) throw InvalidInput("duplicate trajectory id '" + t.id + "'");
        }
    }

    std::size_t dimension() const { return dimension_; }
    std::size_t size() const { return trajectories_.size(); }
    bool empty() const { return trajectories_.empty(); }

    const Trajectory& operator[](std::size_t i) const { return trajectories_[i]; }
    const std::vector<Trajectory>& trajectories() const { return trajectories_; }
    std::span<const double> features(std::size_t i) const { return trajectories_[i].features; }

    std::size_t index_of(const std::string& id) const {
        auto it = index_.find(id);
        if (it == index_.end()) throw InvalidInput("unknown trajectory id '" + id + "'");
        return it->second;
    }
    bool contains(const std::string& id) const { return index_.count(id) > 0; }

private:
    std::size_t dimension_ = 0;
    std::vector<Trajectory> trajectories_;
    std::unordered_map<std::string, std::size_t> index_;
};

// Theta: M linear reward weight vectors plus mixing coefficients on the simplex.
// Weights are stored row-major (mode-major), M x d.
class MixtureParams {
public:
    MixtureParams() = default;

    MixtureParams(std::size_t modes, std::size_t dim)
        : dim_(dim), weights_(modes * dim, 0.0), mixing_(modes, modes ? 1.0 / static_cast<double>(modes) : 0.0) {}

    MixtureParams(const std::vector<std::vector<double>>& weights, std::vector<double> mixing)
        : dim_(weights.empty() ? 0 : weights.front().size()), mixing_(std::move(mixing)) {
        if (weights.size() != mixing_.size())
            throw InvalidInput("mixture has " + std::to_string(weights.size()) + " weight vectors but " +
                               std::to_string(mixing_.size()) + " mixing coefficients");
        weights_.reserve(weights.size() * dim_);
        for (const auto& w : weights) {
            if (w.size() != dim_) throw InvalidInput("weight vectors have inconsistent dimensions");
            weights_.insert(weights_.end(), w.begin(), w.end());
        }
        validate();
    }

    std::size_t modes() const { return mixing_.size(); }
    std::size_t dim() const { return dim_; }

    std::span<const double> weight(std::size_t m) const { return {weights_.data() + m * dim_, dim_}; }
    std::span<double> weight(std::size_t m) { return {weights_.data() + m * dim_, dim_}; }
    std::span<const double> flat_weights() const { return weights_; }
    std::span<double> flat_weights() { return weights_; }

    const std::vector<double>& mixing() const { return mixing_; }
    std::vector<double>& mixing() { return mixing_; }

    std::vector<std::vector<double>> weight_vectors() const {
        std::vector<std::vector<double>> out;
        for (std::size_t m = 0; m < modes(); ++m) out.emplace_back(weight(m).begin(), weight(m).end());
        return out;
    }

    void validate() const {
        if (mixing_.empty()) throw InvalidInput("mixture must have at least one mode");
        double total = 0.0;
        for (double a : mixing_) {
            if (!(a >= 0.0)) throw InvalidInput("mixing coefficients must be non-negative");
            total += a;
        }
        if (std::abs(total - 1.0) > kSimplexTolerance) throw InvalidInput("mixing coefficients must sum to 1");
        for (double w : weights_)
            if (!std::isfinite(w)) throw InvalidInput("reward weights must be finite");
    }

    void validate(std::size_t dataset_dim) const {
        validate();
        if (dim_ != dataset_dim)
            throw InvalidInput("reward weights have dimension " + std::to_string(dim_) + ", dataset has " +
                               std::to_string(dataset_dim));
    }

    friend bool operator==(const MixtureParams&, const MixtureParams&) = default;

private:
    std::size_t dim_ = 0;
    std::vector<double> weights_;
    std::vector<double> mixing_;
};

// Q: K distinct dataset indices.
struct RankingQuery {
    std::vector<std::size_t> items;

    std::size_t size() const { return items.size(); }

    std::vector<std::size_t> canonical() const {
        auto sorted = items;
        std::sort(sorted.begin(), sorted.end());
        return sorted;
    }

    void validate(const Dataset& dataset) const {
        if (items.size() < 2) throw InvalidInput("a ranking query needs at least 2 items");
        auto sorted = canonical();
        if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
            throw InvalidInput("ranking query contains duplicate items");
        if (sorted.back() >= dataset.size()) throw InvalidInput("ranking query refers to an unknown trajectory");
    }

    friend bool operator==(const RankingQuery&, const RankingQuery&) = default;
};

// x: the query's items ordered best first.
struct RankingResponse {
    std::vector<std::size_t> ranking;

    std::size_t size() const { return ranking.size(); }

    bool permutes(const RankingQuery& query) const {
        if (ranking.size() != query.items.size()) return false;
        auto a = ranking;
        std::sort(a.begin(), a.end());
        return a == query.canonical() && std::adjacent_find(a.begin(), a.end()) == a.end();
    }

    friend bool operator==(const RankingResponse&, const RankingResponse&) = default;
    friend auto operator<=>(const RankingResponse&, const RankingResponse&) = default;
};

struct Observation {
    RankingQuery query;
    RankingResponse response;
};

// D: append-only history of answered queries.
class ObservationLog {
public:
    ObservationLog() = default;

    void append(RankingQuery query, RankingResponse response) {
        if (!response.permutes(query)) throw InvalidInput("response is not a permutation of its query");
        steps_.push_back({std::move(query), std::move(response)});
    }

    void validate(const Dataset& dataset) const {
        for (const auto& s : steps_) s.query.validate(dataset);
    }

    const std::vector<Observation>& steps() const { return steps_; }
    std::size_t size() const { return steps_.size(); }
    bool empty() const { return steps_.empty(); }

private:
    std::vector<Observation> steps_;
};

}  // namespace mmrl
