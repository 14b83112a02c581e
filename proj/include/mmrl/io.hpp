#pragma once

#include <charconv>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "mmrl/types.hpp"

namespace mmrl {

using json = nlohmann::json;

// Shortest round-trip decimal form; identical bytes for identical doubles.
inline std::string format_double(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

inline std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InvalidInput("cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw InvalidInput("cannot write '" + path + "'");
    out << text;
}

inline void reject_unknown_keys(const json& obj, std::initializer_list<const char*> allowed, const std::string& where) {
    if (!obj.is_object()) throw InvalidInput(where + " must be an object");
    for (const auto& [key, _] : obj.items()) {
        bool ok = false;
        for (const char* a : allowed) ok = ok || key == a;
        if (!ok) throw InvalidInput("unknown key '" + key + "' in " + where);
    }
}

// --- datasets ---------------------------------------------------------------

inline json dataset_to_json(const Dataset& dataset) {
    json trajs = json::array();
    for (const auto& t : dataset.trajectories()) {
        json meta = json::object();
        for (const auto& [k, v] : t.meta) meta[k] = v;
        trajs.push_back({{"id", t.id}, {"features", t.features}, {"meta", meta}});
    }
    return {{"dimension", dataset.dimension()}, {"trajectories", trajs}};
}

// Per-dimension z-score. Constant dimensions are only centered.
inline Dataset standardize(const Dataset& dataset) {
    const std::size_t d = dataset.dimension();
    const double n = static_cast<double>(dataset.size());
    std::vector<double> mean(d, 0.0), sd(d, 0.0);
    for (const auto& t : dataset.trajectories())
        for (std::size_t j = 0; j < d; ++j) mean[j] += t.features[j] / n;
    for (const auto& t : dataset.trajectories())
        for (std::size_t j = 0; j < d; ++j) sd[j] += (t.features[j] - mean[j]) * (t.features[j] - mean[j]) / n;
    auto trajs = dataset.trajectories();
    for (auto& t : trajs)
        for (std::size_t j = 0; j < d; ++j) {
            const double s = std::sqrt(sd[j]);
            t.features[j] = s > 0.0 ? (t.features[j] - mean[j]) / s : t.features[j] - mean[j];
        }
    return Dataset(d, std::move(trajs));
}

inline Dataset dataset_from_json(const json& j, bool standardize_features = false) {
    reject_unknown_keys(j, {"dimension", "trajectories"}, "dataset");
    if (!j.contains("dimension") || !j.contains("trajectories"))
        throw InvalidInput("dataset needs 'dimension' and 'trajectories'");
    const auto dim = j.at("dimension").get<std::size_t>();
    std::vector<Trajectory> trajs;
    for (const auto& t : j.at("trajectories")) {
        reject_unknown_keys(t, {"id", "features", "meta"}, "trajectory");
        Trajectory traj;
        traj.id = t.at("id").get<std::string>();
        traj.features = t.at("features").get<std::vector<double>>();
        if (t.contains("meta"))
            for (const auto& [k, v] : t.at("meta").items())
                traj.meta[k] = v.is_string() ? v.get<std::string>() : v.dump();
        trajs.push_back(std::move(traj));
    }
    Dataset ds(dim, std::move(trajs));
    return standardize_features ? standardize(ds) : ds;
}

inline Dataset load_dataset(const std::string& path, bool standardize_features = false) {
    json j;
    try {
        j = json::parse(read_text_file(path));
    } catch (const json::parse_error& e) {
        throw InvalidInput("cannot parse dataset '" + path + "': " + e.what());
    }
    return dataset_from_json(j, standardize_features);
}

inline void save_dataset(const Dataset& dataset, const std::string& path) {
    write_text_file(path, dataset_to_json(dataset).dump(1) + "\n");
}

// --- parameters, queries ----------------------------------------------------

inline json params_to_json(const MixtureParams& p) {
    return {{"weights", p.weight_vectors()}, {"mixing", p.mixing()}};
}

inline MixtureParams params_from_json(const json& j) {
    reject_unknown_keys(j, {"weights", "mixing"}, "mixture parameters");
    return MixtureParams(j.at("weights").get<std::vector<std::vector<double>>>(),
                         j.at("mixing").get<std::vector<double>>());
}

inline std::vector<std::string> ids_of(const Dataset& dataset, const std::vector<std::size_t>& items) {
    std::vector<std::string> out;
    out.reserve(items.size());
    for (auto i : items) out.push_back(dataset[i].id);
    return out;
}

inline std::vector<std::size_t> indices_of(const Dataset& dataset, const std::vector<std::string>& ids) {
    std::vector<std::size_t> out;
    out.reserve(ids.size());
    for (const auto& id : ids) out.push_back(dataset.index_of(id));
    return out;
}

}  // namespace mmrl
