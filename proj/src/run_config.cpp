#include "cvarplan/run_config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "cvarplan/errors.hpp"

namespace cvarplan {

using nlohmann::json;

namespace {

void reject_unknown(const json& object, const std::set<std::string>& known,
                    const std::string& context) {
    for (auto it = object.begin(); it != object.end(); ++it) {
        if (known.count(it.key()) == 0) {
            throw ConfigError("unknown config field '" + it.key() + "' in " + context);
        }
    }
}

template <typename T>
void read_field(const json& object, const char* key, T& out) {
    auto it = object.find(key);
    if (it != object.end()) {
        try {
            out = it->get<T>();
        } catch (const json::exception&) {
            throw ConfigError(std::string("config field '") + key +
                              "' has the wrong type");
        }
    }
}

}  // namespace

RunConfig load_run_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot open config file: " + path.string());
    }
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError("config is not valid JSON: " + std::string(e.what()));
    }
    if (!doc.is_object()) {
        throw ConfigError("config root must be an object");
    }
    reject_unknown(doc, {"domain", "alphas", "solver", "evaluation", "output_dir"},
                   "config");

    RunConfig config;
    if (auto it = doc.find("domain"); it != doc.end()) {
        reject_unknown(*it, {"name", "mdp_file", "layout"}, "domain");
        read_field(*it, "name", config.domain);
        read_field(*it, "mdp_file", config.mdp_file);
        read_field(*it, "layout", config.dst_layout);
    }
    read_field(doc, "alphas", config.alphas);
    if (auto it = doc.find("solver"); it != doc.end()) {
        reject_unknown(*it,
                       {"ygrid_points", "y_min", "cost_grid_points", "epsilon",
                        "max_sweeps", "xi_tol", "var_convention", "var_episodes",
                        "var_margin"},
                       "solver");
        read_field(*it, "ygrid_points", config.ygrid_points);
        read_field(*it, "y_min", config.y_min);
        read_field(*it, "cost_grid_points", config.cost_grid_points);
        read_field(*it, "epsilon", config.epsilon);
        read_field(*it, "max_sweeps", config.max_sweeps);
        read_field(*it, "xi_tol", config.xi_tol);
        read_field(*it, "var_convention", config.var_convention);
        read_field(*it, "var_episodes", config.var_episodes);
        read_field(*it, "var_margin", config.var_margin);
    }
    if (auto it = doc.find("evaluation"); it != doc.end()) {
        reject_unknown(*it, {"episodes", "seed", "histogram_bins", "bootstrap_resamples"},
                       "evaluation");
        read_field(*it, "episodes", config.episodes);
        read_field(*it, "seed", config.seed);
        read_field(*it, "histogram_bins", config.histogram_bins);
        read_field(*it, "bootstrap_resamples", config.bootstrap_resamples);
    }
    read_field(doc, "output_dir", config.output_dir);
    return config;
}

void validate_config(const RunConfig& config) {
    if (config.domain.empty() == config.mdp_file.empty()) {
        throw ConfigError("exactly one of a builtin domain or an MDP file is required");
    }
    if (!config.domain.empty() && config.domain != "inventory" &&
        config.domain != "betting" && config.domain != "dst" &&
        config.domain != "desk") {
        throw ConfigError("unknown domain '" + config.domain + "'");
    }
    if (config.alphas.empty()) {
        throw ConfigError("at least one alpha is required");
    }
    for (double alpha : config.alphas) {
        if (!(alpha > 0.0) || alpha > 1.0) {
            throw ConfigError("alpha must lie in (0, 1]");
        }
    }
    if (config.ygrid_points < 3 || config.cost_grid_points < 3) {
        throw ConfigError("grid sizes must be at least 3");
    }
    if (!(config.y_min > 0.0) || !(config.y_min < 1.0)) {
        throw ConfigError("y_min must lie in (0, 1)");
    }
    if (!(config.epsilon > 0.0) || config.max_sweeps < 1) {
        throw ConfigError("epsilon must be positive and max_sweeps at least 1");
    }
    if (config.var_convention != "lower" && config.var_convention != "upper") {
        throw ConfigError("var_convention must be 'lower' or 'upper'");
    }
    if (config.var_episodes < 1 || config.episodes < 1) {
        throw ConfigError("episode counts must be at least 1");
    }
    if (config.histogram_bins < 1 || config.bootstrap_resamples < 2) {
        throw ConfigError("histogram_bins must be >= 1 and bootstrap_resamples >= 2");
    }
}

std::string solver_fingerprint(const RunConfig& config) {
    json doc;
    doc["domain"] = config.domain;
    doc["mdp_file"] = config.mdp_file;
    doc["layout"] = config.dst_layout;
    doc["alphas"] = config.alphas;
    doc["ygrid_points"] = config.ygrid_points;
    doc["y_min"] = config.y_min;
    doc["cost_grid_points"] = config.cost_grid_points;
    doc["epsilon"] = config.epsilon;
    doc["max_sweeps"] = config.max_sweeps;
    doc["xi_tol"] = config.xi_tol;
    doc["var_convention"] = config.var_convention;
    doc["var_episodes"] = config.var_episodes;
    doc["var_margin"] = config.var_margin;
    return doc.dump();
}

std::string fnv1a_hex(const std::string& text) {
    std::uint64_t hash = 0xcbf29ce484222325ULL;
    for (unsigned char byte : text) {
        hash ^= byte;
        hash *= 0x100000001b3ULL;
    }
    std::ostringstream out;
    out << std::hex << hash;
    return out.str();
}

}  // namespace cvarplan
