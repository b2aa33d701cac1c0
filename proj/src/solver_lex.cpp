#include "cvarplan/solver_lex.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "cvarplan/errors.hpp"

namespace cvarplan {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

int sample_successor_index(const MdpAction& action, Rng& rng) {
    const double u = rng.next_unit();
    double cdf = 0.0;
    for (size_t i = 0; i < action.successors.size(); ++i) {
        cdf += action.successors[i].probability;
        if (u < cdf) {
            return static_cast<int>(i);
        }
    }
    return static_cast<int>(action.successors.size()) - 1;
}

}  // namespace

CostGrid CostGrid::uniform(double var, int n_points) {
    if (var < 0.0 || n_points < 2) {
        throw ValidationError("cost grid needs var >= 0 and at least 2 points");
    }
    CostGrid grid;
    if (var == 0.0) {
        grid.points = {0.0};
        return grid;
    }
    grid.points.reserve(static_cast<size_t>(n_points));
    for (int k = 0; k < n_points; ++k) {
        grid.points.push_back(var * k / (n_points - 1));
    }
    grid.points.front() = 0.0;
    grid.points.back() = var;
    return grid;
}

CostGrid CostGrid::exact_integer(double var) {
    if (var < 0.0) {
        throw ValidationError("cost grid needs var >= 0");
    }
    CostGrid grid;
    const long last = static_cast<long>(std::floor(var + kCostSlack));
    for (long k = 0; k <= last; ++k) {
        grid.points.push_back(static_cast<double>(k));
    }
    if (grid.points.empty() || grid.points.back() < var - kCostSlack) {
        grid.points.push_back(var);
    } else {
        grid.points.back() = var;
    }
    if (grid.points.size() == 1 && var > 0.0) {
        grid.points.insert(grid.points.begin(), 0.0);
    }
    return grid;
}

VarEstimate estimate_var(const Mdp& mdp, const CvarSolution& cvar_sol, double alpha,
                         int n_episodes, const RandomSource& random,
                         VarConvention convention, bool margin, long step_limit) {
    if (n_episodes < 1) {
        throw ValidationError("VaR estimation needs at least one episode");
    }
    std::vector<double> costs;
    costs.reserve(static_cast<size_t>(n_episodes));
    for (int episode = 0; episode < n_episodes; ++episode) {
        Rng rng = random.episode_stream(static_cast<std::uint64_t>(episode));
        StateId s = mdp.initial;
        double y = alpha;
        double cost = 0.0;
        long steps = 0;
        while (!mdp.is_goal(s)) {
            if (++steps > step_limit) {
                throw ExecutionError("VaR estimation episode exceeded step limit");
            }
            const int a = cvar_greedy_action(mdp, cvar_sol, s, y);
            const MdpAction& action = mdp.action(s, a);
            double xi_realized = 1.0;
            if (y > 0.0) {
                const InnerSolution inner = inner_adversary_max(mdp, cvar_sol, s, y, a);
                const int succ = sample_successor_index(action, rng);
                xi_realized = inner.response.xi[static_cast<size_t>(succ)];
                cost += action.cost;
                y = std::min(y * xi_realized, 1.0);
                s = action.successors[static_cast<size_t>(succ)].state;
            } else {
                const int succ = sample_successor_index(action, rng);
                cost += action.cost;
                s = action.successors[static_cast<size_t>(succ)].state;
            }
        }
        costs.push_back(cost);
    }

    std::sort(costs.begin(), costs.end());
    const double n = static_cast<double>(costs.size());
    long idx;
    if (convention == VarConvention::kLower) {
        idx = static_cast<long>(std::ceil((1.0 - alpha) * n - 1e-9));
    } else {
        idx = static_cast<long>(std::floor((1.0 - alpha) * n + 1e-9)) + 1;
    }
    idx = std::clamp(idx, 1L, static_cast<long>(costs.size()));
    double value = costs[static_cast<size_t>(idx - 1)];

    if (margin) {
        // Back off to the next lower distinct sample, if any.
        double lower = value;
        for (long k = idx - 1; k-- > 0;) {
            if (costs[static_cast<size_t>(k)] < value - kCostSlack) {
                lower = costs[static_cast<size_t>(k)];
                break;
            }
        }
        value = lower;
    }

    VarEstimate estimate;
    estimate.value = value;
    estimate.alpha = alpha;
    estimate.episodes = n_episodes;
    estimate.convention = convention;
    return estimate;
}

namespace {

std::vector<int> enabled_from_q(const Mdp& mdp, StateId s, double c,
                                const std::vector<double>& q_row, double var) {
    std::vector<int> enabled;
    const size_t n_actions = mdp.actions_at(s).size();
    for (size_t a = 0; a < n_actions; ++a) {
        if (c + q_row[a] <= var + kCostSlack) {
            enabled.push_back(static_cast<int>(a));
        }
    }
    return enabled;
}

}  // namespace

std::vector<int> enabled_actions(const Mdp& mdp, StateId s, double c,
                                 const WorstCaseSolution& worst, double var) {
    return enabled_from_q(mdp, s, c, worst.q_worst[static_cast<size_t>(s)], var);
}

std::vector<int> enabled_actions(const Mdp& mdp, StateId s, double c,
                                 const LexSolution& sol) {
    return enabled_from_q(mdp, s, c, sol.q_worst[static_cast<size_t>(s)], sol.var.value);
}

namespace {

// Interpolated value lookup with the feasibility frontier var - v_worst(s)
// completing the last segment: beyond the last finite knot the value tends to
// the worst-case value, an upper bound that keeps every feasible query
// finite.
double lookup(const Mdp& mdp, const CostGrid& grid,
              const std::vector<std::vector<double>>& values,
              const std::vector<double>& v_worst, double var, StateId s, double c) {
    if (mdp.is_goal(s)) {
        return 0.0;
    }
    const double frontier = var - v_worst[static_cast<size_t>(s)];
    if (c > frontier + kCostSlack) {
        return kInf;
    }
    const auto& row = values[static_cast<size_t>(s)];
    const auto& points = grid.points;
    const auto it = std::upper_bound(points.begin(), points.end(), c);
    int k0 = static_cast<int>(it - points.begin()) - 1;
    k0 = std::clamp(k0, 0, grid.size() - 1);
    if (k0 == grid.size() - 1) {
        return row[static_cast<size_t>(k0)];
    }
    const double c0 = points[static_cast<size_t>(k0)];
    const double v0 = row[static_cast<size_t>(k0)];
    double c1 = points[static_cast<size_t>(k0 + 1)];
    double v1 = row[static_cast<size_t>(k0 + 1)];
    if (std::isinf(v1)) {
        // The next knot is beyond the frontier; interpolate toward the
        // frontier point instead, whose value is the worst-case cost.
        c1 = frontier;
        v1 = v_worst[static_cast<size_t>(s)];
        if (c >= c1 || c1 <= c0) {
            return v1;
        }
    }
    if (std::isinf(v0)) {
        return v0;  // infeasible knot at or below c; only possible off-frontier
    }
    return v0 + (v1 - v0) * (c - c0) / (c1 - c0);
}

}  // namespace

LexSolution solve_constrained_ev(const Mdp& mdp, const WorstCaseSolution& worst,
                                 const VarEstimate& var, const CostGrid& grid,
                                 double epsilon, int max_sweeps) {
    const size_t n = static_cast<size_t>(mdp.n_states());
    const int m = grid.size();

    LexSolution sol;
    sol.var = var;
    sol.grid = grid;
    sol.q_worst = worst.q_worst;
    sol.v_worst = worst.v_worst;
    sol.worst_policy = worst.policy;
    sol.values.assign(n, std::vector<double>(static_cast<size_t>(m), 0.0));

    // Enabled sets depend only on the knot and the pruning rule, so
    // infeasible cells are identified once up front.
    std::vector<std::vector<std::vector<int>>> enabled(n);
    for (StateId s = 0; s < mdp.n_states(); ++s) {
        if (mdp.is_goal(s)) {
            continue;
        }
        auto& per_state = enabled[static_cast<size_t>(s)];
        per_state.resize(static_cast<size_t>(m));
        for (int k = 0; k < m; ++k) {
            per_state[static_cast<size_t>(k)] =
                enabled_actions(mdp, s, grid.at(k), worst, var.value);
            if (per_state[static_cast<size_t>(k)].empty()) {
                sol.values[static_cast<size_t>(s)][static_cast<size_t>(k)] = kInf;
            }
        }
    }
    sol.root_feasible =
        mdp.is_goal(mdp.initial) ||
        !enabled[static_cast<size_t>(mdp.initial)][0].empty();

    std::vector<std::vector<double>> next = sol.values;
    bool converged = false;
    for (int sweep = 1; sweep <= max_sweeps && !converged; ++sweep) {
        double residual = 0.0;
        for (StateId s = 0; s < mdp.n_states(); ++s) {
            if (mdp.is_goal(s)) {
                continue;
            }
            for (int k = 0; k < m; ++k) {
                const auto& actions = enabled[static_cast<size_t>(s)][static_cast<size_t>(k)];
                if (actions.empty()) {
                    continue;  // stays infinite
                }
                const double c = grid.at(k);
                double best = kInf;
                for (int a : actions) {
                    const MdpAction& action = mdp.action(s, a);
                    double q = action.cost;
                    for (const Successor& succ : action.successors) {
                        q += succ.probability * lookup(mdp, grid, sol.values,
                                                       sol.v_worst, var.value,
                                                       succ.state, c + action.cost);
                        if (std::isinf(q)) {
                            break;
                        }
                    }
                    if (q < best) {
                        best = q;
                    }
                }
                auto& cell = next[static_cast<size_t>(s)][static_cast<size_t>(k)];
                const double previous = sol.values[static_cast<size_t>(s)][static_cast<size_t>(k)];
                cell = best;
                if (std::isfinite(best) && std::isfinite(previous)) {
                    residual = std::max(residual, std::abs(best - previous));
                } else if (std::isfinite(best) != std::isfinite(previous)) {
                    residual = std::max(residual, 1.0);
                }
            }
        }
        for (size_t s = 0; s < n; ++s) {
            sol.values[s] = next[s];
        }
        sol.sweeps = sweep;
        if (residual < epsilon) {
            converged = true;
        }
    }
    if (!converged) {
        throw SolveError("constrained value iteration did not converge within " +
                         std::to_string(max_sweeps) + " sweeps");
    }
    return sol;
}

double lex_query_value(const Mdp& mdp, const LexSolution& sol, StateId s, double c) {
    return lookup(mdp, sol.grid, sol.values, sol.v_worst, sol.var.value, s, c);
}

int lex_policy_action(const Mdp& mdp, const LexSolution& sol, StateId s, double c) {
    if (c > sol.var.value + kCostSlack) {
        throw ExecutionError("lex policy queried with accumulated cost above the VaR");
    }
    if (mdp.is_goal(s)) {
        return kNoAction;
    }
    const std::vector<int> actions = enabled_actions(mdp, s, c, sol);
    if (actions.empty()) {
        return sol.worst_policy[static_cast<size_t>(s)];  // float edge
    }
    double best = kInf;
    int best_action = actions.front();
    for (int a : actions) {
        const MdpAction& action = mdp.action(s, a);
        double q = action.cost;
        for (const Successor& succ : action.successors) {
            q += succ.probability *
                 lex_query_value(mdp, sol, succ.state, c + action.cost);
            if (std::isinf(q)) {
                break;
            }
        }
        if (q < best) {
            best = q;
            best_action = a;
        }
    }
    return best_action;
}

}  // namespace cvarplan
