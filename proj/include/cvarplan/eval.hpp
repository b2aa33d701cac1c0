#pragma once

#include <string>
#include <vector>

#include "cvarplan/exec.hpp"

namespace cvarplan {

// Empirical estimator over a cost sample: VaR per the quantile convention,
// CVaR as the mean of the worst ceil(alpha * N) samples.
VarCvar empirical_cvar(const std::vector<double>& costs, double alpha,
                       VarConvention convention = VarConvention::kLower);

struct AlphaStats {
    double alpha = 0.0;
    double var = 0.0;
    double cvar = 0.0;
    double cvar_se = 0.0;  // nonparametric bootstrap
};

struct EvaluationSummary {
    std::string strategy;
    int episodes = 0;
    double mean = 0.0;
    double mean_se = 0.0;
    std::vector<AlphaStats> per_alpha;
    std::vector<double> histogram_edges;  // bins + 1 entries
    std::vector<long> histogram_counts;   // sums to episodes
    int switched_episodes = 0;
};

struct EvalParams {
    int episodes = 20000;
    std::vector<double> alphas{0.02, 0.2};
    std::uint64_t seed = 1;
    int histogram_bins = 100;
    int bootstrap_resamples = 1000;
    VarConvention var_convention = VarConvention::kLower;
    // Added to reported means, quantiles and histogram edges (standard errors
    // are shift-invariant). Lets a domain report on a conventional scale.
    double report_offset = 0.0;
    ExecParams exec;
};

// Runs episodes on independent per-episode substreams of the seed and
// aggregates deterministically: reruns with the same seed are byte-identical.
// Throws on a zero-episode request and propagates episode errors.
EvaluationSummary evaluate(const Mdp& mdp, Strategy strategy,
                           const SolutionBundle& solutions, const EvalParams& params);

// CSV with header name,alpha,n,mean,mean_se,var,cvar,cvar_se and one row per
// (summary, alpha).
std::string summary_csv(const std::vector<EvaluationSummary>& summaries);

// CSV with header bin_left,bin_right,count.
std::string histogram_csv(const EvaluationSummary& summary);

// Canonical number formatting shared by every CSV writer.
std::string format_number(double value);

}  // namespace cvarplan
