#pragma once

#include <array>
#include <cmath>
#include <cstdio>
#include <string>
#include <utility>
#include <vector>

#include "mmrl/io.hpp"
#include "mmrl/rng.hpp"
#include "mmrl/types.hpp"

namespace mmrl {

// --- synthetic Gaussian-feature environment --------------------------------

struct FeatureGroup {
    std::size_t count;
    double stddev;
};

struct SyntheticSpec {
    std::size_t dims = 3;
    // Covariances I, 0.1 I and 0.01 I.
    std::vector<FeatureGroup> groups{{10, 1.0}, {100, std::sqrt(0.1)}, {1000, 0.1}};
    std::uint64_t seed = 0;

    void validate() const {
        if (dims < 1) throw InvalidInput("synthetic dataset needs at least one feature");
        if (groups.empty()) throw InvalidInput("synthetic dataset needs at least one group");
        for (const auto& g : groups)
            if (g.count < 1 || !(g.stddev > 0.0)) throw InvalidInput("synthetic groups need positive count and stddev");
    }
};

inline std::string numbered_id(const char* prefix, std::size_t n, int width) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%s-%0*zu", prefix, width, n);
    return buf;
}

inline Dataset gen_synthetic_dataset(const SyntheticSpec& spec) {
    spec.validate();
    Rng rng(spec.seed);
    std::vector<Trajectory> trajs;
    std::size_t n = 0;
    for (std::size_t g = 0; g < spec.groups.size(); ++g) {
        Rng group_rng = rng.split("synthetic-group", g);
        for (std::size_t i = 0; i < spec.groups[g].count; ++i) {
            Trajectory t;
            t.id = numbered_id("syn", ++n, 4);
            t.features.resize(spec.dims);
            for (auto& f : t.features) f = spec.groups[g].stddev * group_rng.normal();
            t.meta["group"] = std::to_string(g + 1);
            trajs.push_back(std::move(t));
        }
    }
    return Dataset(spec.dims, std::move(trajs));
}

// Standard-normal features; stands in for externally produced, already scaled
// and centered trajectory features (e.g. the 8 LunarLander features).
inline Dataset gen_gaussian_dataset(std::size_t count, std::size_t dims, std::uint64_t seed,
                                    const char* prefix = "traj") {
    if (count < 1 || dims < 1) throw InvalidInput("gaussian dataset needs positive count and dimension");
    Rng rng(seed);
    std::vector<Trajectory> trajs(count);
    for (std::size_t i = 0; i < count; ++i) {
        trajs[i].id = numbered_id(prefix, i + 1, 4);
        trajs[i].features.resize(dims);
        for (auto& f : trajs[i].features) f = rng.normal();
    }
    return Dataset(dims, std::move(trajs));
}

// --- Fetch shelf-placement environment -------------------------------------

struct FetchTrajectorySpec {
    int target_shelf = 1;  // 1 = top, 2 = middle (fruit, full), 3 = bottom
    double y_speed = 0.0;
    double y_grasp = 0.0;
    double y_height = 0.0;
    double y_width = 0.0;
    int y_success = 1;
};

inline constexpr std::size_t kFetchFeatureDim = 13;

inline std::vector<double> fetch_featurize(const FetchTrajectorySpec& s) {
    if (s.target_shelf < 1 || s.target_shelf > 3) throw InvalidInput("target shelf must be 1, 2 or 3");
    for (double y : {s.y_speed, s.y_grasp, s.y_height, s.y_width})
        if (!(y >= 0.0 && y <= 1.0)) throw InvalidInput("fetch trajectory parameters must lie in [0, 1]");
    if (s.y_success != 0 && s.y_success != 1) throw InvalidInput("y_success must be 0 or 1");
    auto bump = [](double y) { return y * (1.0 - y); };
    const double gw = s.y_grasp - s.y_width;
    return {s.target_shelf == 1 ? 1.0 : 0.0,
            s.target_shelf == 2 ? 1.0 : 0.0,
            s.target_shelf == 3 ? 1.0 : 0.0,
            s.y_speed,
            bump(s.y_speed),
            s.y_grasp,
            bump(s.y_grasp),
            s.y_height,
            bump(s.y_height),
            s.y_width,
            bump(s.y_width),
            1.0 - gw * gw,
            static_cast<double>(s.y_success)};
}

// In-shelf placements as (height, width): the 3x3 lattice on {0, .5, 1}^2 plus
// the four cell centers on {.25, .75}^2.
inline const std::array<std::pair<double, double>, 13>& fetch_placements() {
    static const std::array<std::pair<double, double>, 13> grid{{
        {0.0, 0.0}, {0.0, 0.5}, {0.0, 1.0},
        {0.5, 0.0}, {0.5, 0.5}, {0.5, 1.0},
        {1.0, 0.0}, {1.0, 0.5}, {1.0, 1.0},
        {0.25, 0.25}, {0.25, 0.75}, {0.75, 0.25}, {0.75, 0.75},
    }};
    return grid;
}

// Something drops only when pushing deep into the full middle shelf.
inline int fetch_success_rule(int shelf, double y_width) { return shelf == 2 && y_width > 0.5 ? 0 : 1; }

inline std::vector<FetchTrajectorySpec> fetch_trajectory_specs() {
    std::vector<FetchTrajectorySpec> out;
    const double levels[] = {0.0, 0.5, 1.0};
    for (int shelf = 1; shelf <= 3; ++shelf)
        for (double speed : levels)
            for (double grasp : levels)
                for (const auto& [height, width] : fetch_placements())
                    out.push_back({shelf, speed, grasp, height, width, fetch_success_rule(shelf, width)});
    return out;
}

inline Dataset gen_fetch_dataset() {
    static const char* shelf_names[] = {"top", "middle", "bottom"};
    std::vector<Trajectory> trajs;
    std::size_t n = 0;
    for (const auto& s : fetch_trajectory_specs()) {
        Trajectory t;
        t.id = numbered_id("fetch", ++n, 3);
        t.features = fetch_featurize(s);
        t.meta["shelf"] = shelf_names[s.target_shelf - 1];
        t.meta["speed"] = format_double(s.y_speed);
        t.meta["grasp"] = format_double(s.y_grasp);
        t.meta["height"] = format_double(s.y_height);
        t.meta["width"] = format_double(s.y_width);
        t.meta["success"] = std::to_string(s.y_success);
        trajs.push_back(std::move(t));
    }
    return Dataset(kFetchFeatureDim, std::move(trajs));
}

// --- simulated experts ------------------------------------------------------

struct SimulatedExpertPopulation {
    MixtureParams true_params;
    std::uint64_t response_seed = 0;
};

// w_m ~ N(0, I_d); alpha uniform on the simplex via normalized exponential spacings.
inline SimulatedExpertPopulation sample_expert_population(std::size_t modes, std::size_t dims, Rng& rng) {
    if (modes < 1 || dims < 1) throw InvalidInput("expert population needs M >= 1 and d >= 1");
    MixtureParams p(modes, dims);
    for (double& w : p.flat_weights()) w = rng.normal();
    double total = 0.0;
    for (double& a : p.mixing()) total += (a = rng.exponential());
    for (double& a : p.mixing()) a /= total;
    if (modes == 1) p.mixing()[0] = 1.0;
    return {std::move(p), rng.engine()()};
}

}  // namespace mmrl
