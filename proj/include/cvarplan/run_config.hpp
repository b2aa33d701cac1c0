#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace cvarplan {

// One run of the pipeline: which model, which confidence levels, and every
// solver and evaluation knob. Loadable from a JSON config file; command-line
// flags override individual fields.
struct RunConfig {
    // Domain: a builtin generator name (inventory, betting, dst, desk) or an
    // MDP document path.
    std::string domain;
    std::string mdp_file;
    std::string dst_layout;  // optional layout path for the dst domain

    std::vector<double> alphas{0.02, 0.2};

    // Solver settings.
    int ygrid_points = 30;
    double y_min = 1e-3;
    int cost_grid_points = 100;
    double epsilon = 1e-6;
    int max_sweeps = 100000;
    double xi_tol = 1e-6;
    std::string var_convention = "lower";  // lower | upper
    int var_episodes = 20000;
    bool var_margin = false;

    // Evaluation settings.
    int episodes = 20000;
    std::uint64_t seed = 1;
    int histogram_bins = 100;
    int bootstrap_resamples = 1000;

    std::string output_dir = "out";
};

// Strict JSON load: unknown fields are rejected by name.
RunConfig load_run_config(const std::filesystem::path& path);

// Throws ConfigError listing the first offending field.
void validate_config(const RunConfig& config);

// Canonical serialisation of the fields that determine solution documents
// (domain + alphas + solver settings). Evaluation knobs are excluded so
// re-evaluating with a different seed does not invalidate solutions.
std::string solver_fingerprint(const RunConfig& config);

// FNV-1a 64-bit, rendered as hex: the config hash stored in manifests.
std::string fnv1a_hex(const std::string& text);

}  // namespace cvarplan
