#include "cvarplan/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "cvarplan/errors.hpp"

namespace cvarplan {

namespace {

long tail_count(double alpha, size_t n) {
    const long k = static_cast<long>(std::ceil(alpha * static_cast<double>(n) - 1e-9));
    return std::clamp(k, 1L, static_cast<long>(n));
}

// Mean of the k largest entries; selection avoids a full sort per resample.
double tail_mean(std::vector<double>& scratch, long k) {
    const auto nth = scratch.begin() + (static_cast<long>(scratch.size()) - k);
    std::nth_element(scratch.begin(), nth, scratch.end());
    double sum = 0.0;
    for (auto it = nth; it != scratch.end(); ++it) {
        sum += *it;
    }
    return sum / static_cast<double>(k);
}

}  // namespace

VarCvar empirical_cvar(const std::vector<double>& costs, double alpha,
                       VarConvention convention) {
    if (costs.empty()) {
        throw ValidationError("empty sample");
    }
    if (!(alpha > 0.0) || alpha > 1.0) {
        throw ValidationError("alpha must lie in (0, 1]");
    }
    std::vector<double> sorted = costs;
    std::sort(sorted.begin(), sorted.end());
    const double n = static_cast<double>(sorted.size());

    long idx;
    if (convention == VarConvention::kLower) {
        idx = static_cast<long>(std::ceil((1.0 - alpha) * n - 1e-9));
    } else {
        idx = static_cast<long>(std::floor((1.0 - alpha) * n + 1e-9)) + 1;
    }
    idx = std::clamp(idx, 1L, static_cast<long>(sorted.size()));

    const long k = tail_count(alpha, sorted.size());
    double tail_sum = 0.0;
    for (size_t i = sorted.size() - static_cast<size_t>(k); i < sorted.size(); ++i) {
        tail_sum += sorted[i];
    }
    return VarCvar{sorted[static_cast<size_t>(idx - 1)],
                   tail_sum / static_cast<double>(k)};
}

EvaluationSummary evaluate(const Mdp& mdp, Strategy strategy,
                           const SolutionBundle& solutions, const EvalParams& params) {
    if (params.episodes < 1) {
        throw ValidationError("evaluation needs at least one episode");
    }
    const RandomSource random(params.seed);

    std::vector<double> costs(static_cast<size_t>(params.episodes), 0.0);
    EvaluationSummary summary;
    summary.strategy = strategy_name(strategy);
    summary.episodes = params.episodes;
    for (int episode = 0; episode < params.episodes; ++episode) {
        Rng rng = random.episode_stream(static_cast<std::uint64_t>(episode));
        const EpisodeRecord record =
            execute_episode(mdp, strategy, solutions, rng, params.exec);
        costs[static_cast<size_t>(episode)] = record.total_cost;
        if (record.switched) {
            ++summary.switched_episodes;
        }
    }

    const double n = static_cast<double>(params.episodes);
    double mean = 0.0;
    for (double cost : costs) {
        mean += cost;
    }
    mean /= n;
    double variance = 0.0;
    for (double cost : costs) {
        variance += (cost - mean) * (cost - mean);
    }
    variance = params.episodes > 1 ? variance / (n - 1.0) : 0.0;
    summary.mean = mean + params.report_offset;
    summary.mean_se = std::sqrt(variance / n);

    std::vector<double> scratch(costs.size(), 0.0);
    for (double alpha : params.alphas) {
        AlphaStats stats;
        stats.alpha = alpha;
        const VarCvar point = empirical_cvar(costs, alpha, params.var_convention);
        stats.var = point.var + params.report_offset;
        stats.cvar = point.cvar + params.report_offset;

        const long k = tail_count(alpha, costs.size());
        double boot_mean = 0.0;
        double boot_m2 = 0.0;
        for (int r = 0; r < params.bootstrap_resamples; ++r) {
            Rng rng = random.substream(1, static_cast<std::uint64_t>(r));
            for (size_t i = 0; i < costs.size(); ++i) {
                scratch[i] = costs[rng.next_below(costs.size())];
            }
            const double estimate = tail_mean(scratch, k);
            const double delta = estimate - boot_mean;
            boot_mean += delta / static_cast<double>(r + 1);
            boot_m2 += delta * (estimate - boot_mean);
        }
        stats.cvar_se = params.bootstrap_resamples > 1
                            ? std::sqrt(boot_m2 / (params.bootstrap_resamples - 1))
                            : 0.0;
        summary.per_alpha.push_back(stats);
    }

    // Histogram over the observed range; degenerate samples collapse to a
    // single bin.
    const auto [lo_it, hi_it] = std::minmax_element(costs.begin(), costs.end());
    const double lo = *lo_it;
    const double hi = *hi_it;
    if (hi <= lo) {
        summary.histogram_edges = {lo + params.report_offset, lo + params.report_offset};
        summary.histogram_counts = {static_cast<long>(costs.size())};
    } else {
        const int bins = std::max(1, params.histogram_bins);
        const double width = (hi - lo) / bins;
        summary.histogram_counts.assign(static_cast<size_t>(bins), 0);
        for (double cost : costs) {
            const int bin = std::min(bins - 1, static_cast<int>((cost - lo) / width));
            ++summary.histogram_counts[static_cast<size_t>(bin)];
        }
        summary.histogram_edges.reserve(static_cast<size_t>(bins) + 1);
        for (int b = 0; b <= bins; ++b) {
            summary.histogram_edges.push_back(lo + width * b + params.report_offset);
        }
        summary.histogram_edges.back() = hi + params.report_offset;
    }
    return summary;
}

std::string format_number(double value) {
    char buffer[64];
    std::snprintf(buffer, sizeof(buffer), "%.10g", value);
    return buffer;
}

std::string summary_csv(const std::vector<EvaluationSummary>& summaries) {
    std::ostringstream out;
    out << "name,alpha,n,mean,mean_se,var,cvar,cvar_se\n";
    for (const EvaluationSummary& summary : summaries) {
        for (const AlphaStats& stats : summary.per_alpha) {
            out << summary.strategy << ',' << format_number(stats.alpha) << ','
                << summary.episodes << ',' << format_number(summary.mean) << ','
                << format_number(summary.mean_se) << ',' << format_number(stats.var)
                << ',' << format_number(stats.cvar) << ','
                << format_number(stats.cvar_se) << '\n';
        }
    }
    return out.str();
}

std::string histogram_csv(const EvaluationSummary& summary) {
    std::ostringstream out;
    out << "bin_left,bin_right,count\n";
    for (size_t b = 0; b < summary.histogram_counts.size(); ++b) {
        out << format_number(summary.histogram_edges[b]) << ','
            << format_number(summary.histogram_edges[b + 1]) << ','
            << summary.histogram_counts[b] << '\n';
    }
    return out.str();
}

}  // namespace cvarplan
