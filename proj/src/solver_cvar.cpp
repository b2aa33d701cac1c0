#include "cvarplan/solver_cvar.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "cvarplan/errors.hpp"
#include "cvarplan/simplex.hpp"

namespace cvarplan {

YGrid YGrid::build(int n_points, double y_min) {
    if (n_points < 3) {
        throw ValidationError("y-grid needs at least 3 points");
    }
    if (!(y_min > 0.0) || !(y_min < 1.0)) {
        throw ValidationError("y_min must lie in (0, 1)");
    }
    YGrid grid;
    grid.points.reserve(static_cast<size_t>(n_points));
    grid.points.push_back(0.0);
    const int k = n_points - 1;
    const double exponent = std::log10(y_min);
    for (int i = 0; i < k; ++i) {
        const double tau = static_cast<double>(i) / (k - 1);
        grid.points.push_back(std::pow(10.0, exponent * (1.0 - tau)));
    }
    grid.points[1] = y_min;
    grid.points.back() = 1.0;
    for (size_t j = 1; j < grid.points.size(); ++j) {
        if (!(grid.points[j] > grid.points[j - 1])) {
            throw ValidationError("y-grid points are not strictly ascending");
        }
    }
    return grid;
}

int YGrid::bracket(double y) const {
    const auto it = std::upper_bound(points.begin(), points.end(), y);
    const int j = static_cast<int>(it - points.begin()) - 1;
    return std::clamp(j, 0, size() - 1);
}

namespace {

// Upper concave hull of the knot points (t_j, t_j * V_j), returned as
// segments with strictly decreasing slopes. The first hull point is always
// (0, 0), so segment widths tile [0, 1].
Envelope build_envelope(const std::vector<double>& t, const std::vector<double>& row) {
    std::vector<double> hx;
    std::vector<double> hy;
    hx.reserve(t.size());
    hy.reserve(t.size());
    for (size_t j = 0; j < t.size(); ++j) {
        const double x = t[j];
        const double y = t[j] * row[j];
        while (hx.size() >= 2) {
            const size_t k = hx.size();
            const double cross = (hx[k - 1] - hx[k - 2]) * (y - hy[k - 2]) -
                                 (hy[k - 1] - hy[k - 2]) * (x - hx[k - 2]);
            if (cross >= 0.0) {
                hx.pop_back();
                hy.pop_back();
            } else {
                break;
            }
        }
        hx.push_back(x);
        hy.push_back(y);
    }
    Envelope env;
    env.reserve(hx.size() - 1);
    for (size_t i = 1; i < hx.size(); ++i) {
        const double width = hx[i] - hx[i - 1];
        env.push_back({(hy[i] - hy[i - 1]) / width, width});
    }
    return env;
}

// One alloctable slice of a successor's envelope: capacity is measured in
// budget units (probability times t-width).
struct BudgetSegment {
    double slope = 0.0;
    double capacity = 0.0;
    int succ = 0;
    double width = 0.0;
};

void collect_segments(const MdpAction& action, const std::vector<Envelope>& envelopes,
                      std::vector<BudgetSegment>& out) {
    out.clear();
    for (size_t i = 0; i < action.successors.size(); ++i) {
        const Successor& succ = action.successors[i];
        for (const EnvelopeSegment& seg : envelopes[static_cast<size_t>(succ.state)]) {
            out.push_back({seg.slope, succ.probability * seg.width,
                           static_cast<int>(i), seg.width});
        }
    }
    // Stable on ties so allocation order (and hence xi) is deterministic.
    std::stable_sort(out.begin(), out.end(),
                     [](const BudgetSegment& a, const BudgetSegment& b) {
                         return a.slope > b.slope;
                     });
}

// Objective values (sum_i p_i w_i(t_i), before division by y) for a batch of
// ascending budgets in a single pass over slope-sorted segments.
void values_for_budgets(const std::vector<BudgetSegment>& segments,
                        const double* budgets, int count, double* out) {
    size_t k = 0;
    double cum_cap = 0.0;
    double cum_val = 0.0;
    for (int b = 0; b < count; ++b) {
        const double budget = budgets[b];
        while (k < segments.size() && cum_cap + segments[k].capacity < budget) {
            cum_cap += segments[k].capacity;
            cum_val += segments[k].slope * segments[k].capacity;
            ++k;
        }
        if (k < segments.size()) {
            out[b] = cum_val + segments[k].slope * (budget - cum_cap);
        } else {
            out[b] = cum_val;  // budget exceeds total capacity by float dust
        }
    }
}

InnerSolution greedy_inner(const Mdp& mdp, const std::vector<Envelope>& envelopes,
                           StateId s, double y, int a) {
    const MdpAction& action = mdp.action(s, a);
    std::vector<BudgetSegment> segments;
    collect_segments(action, envelopes, segments);

    std::vector<double> t_alloc(action.successors.size(), 0.0);
    double remaining = y;
    double objective = 0.0;
    for (const BudgetSegment& seg : segments) {
        if (remaining <= 0.0) {
            break;
        }
        const double used = std::min(seg.capacity, remaining);
        objective += seg.slope * used;
        t_alloc[static_cast<size_t>(seg.succ)] +=
            seg.capacity > 0.0 ? seg.width * (used / seg.capacity) : 0.0;
        remaining -= used;
    }

    InnerSolution solution;
    solution.value = objective / y;
    solution.response.xi.resize(action.successors.size());
    for (size_t i = 0; i < action.successors.size(); ++i) {
        solution.response.xi[i] = std::min(t_alloc[i], 1.0) / y;
    }
    return solution;
}

InnerSolution simplex_inner(const Mdp& mdp, const CvarSolution& sol, StateId s,
                            double y, int a) {
    const MdpAction& action = mdp.action(s, a);
    const auto& t = sol.grid.points;
    const int m = sol.grid.size();
    const int n_succ = static_cast<int>(action.successors.size());

    // Variables lambda[i][j] >= 0: convex weights over the knots of successor
    // i. Constraints: each successor's weights sum to 1; the weighted t
    // coordinates meet the budget.
    std::vector<double> c(static_cast<size_t>(n_succ * m), 0.0);
    std::vector<std::vector<double>> rows(
        static_cast<size_t>(n_succ) + 1,
        std::vector<double>(static_cast<size_t>(n_succ * m), 0.0));
    std::vector<double> rhs(static_cast<size_t>(n_succ) + 1, 1.0);
    for (int i = 0; i < n_succ; ++i) {
        const Successor& succ = action.successors[static_cast<size_t>(i)];
        const auto& row = sol.values[static_cast<size_t>(succ.state)];
        for (int j = 0; j < m; ++j) {
            const size_t var = static_cast<size_t>(i * m + j);
            c[var] = succ.probability * t[static_cast<size_t>(j)] *
                     row[static_cast<size_t>(j)];
            rows[static_cast<size_t>(i)][var] = 1.0;
            rows[static_cast<size_t>(n_succ)][var] =
                succ.probability * t[static_cast<size_t>(j)];
        }
    }
    rhs[static_cast<size_t>(n_succ)] = y;

    const LpResult lp = simplex_maximize(c, rows, rhs);
    InnerSolution solution;
    solution.value = lp.objective / y;
    solution.response.xi.resize(static_cast<size_t>(n_succ));
    for (int i = 0; i < n_succ; ++i) {
        double t_i = 0.0;
        for (int j = 0; j < m; ++j) {
            t_i += t[static_cast<size_t>(j)] * lp.x[static_cast<size_t>(i * m + j)];
        }
        solution.response.xi[static_cast<size_t>(i)] = std::min(t_i, 1.0) / y;
    }
    return solution;
}

}  // namespace

void CvarSolution::rebuild_envelope_cache() {
    envelope_cache.clear();
    envelope_cache.reserve(values.size());
    for (const auto& row : values) {
        envelope_cache.push_back(build_envelope(grid.points, row));
    }
}

InnerSolution inner_adversary_max(const Mdp& mdp, const CvarSolution& sol, StateId s,
                                  double y, int a, InnerSolver solver) {
    if (!(y > 0.0) || y > 1.0 + kProbTol) {
        throw ExecutionError("inner adversary maximisation needs y in (0, 1]");
    }
    y = std::min(y, 1.0);
    if (solver == InnerSolver::kSimplex) {
        return simplex_inner(mdp, sol, s, y, a);
    }
    if (sol.envelope_cache.size() != sol.values.size()) {
        throw ExecutionError("envelope cache not built");
    }
    return greedy_inner(mdp, sol.envelope_cache, s, y, a);
}

CvarSolution cvar_value_iteration(const Mdp& mdp, const YGrid& grid,
                                  const WorstCaseSolution& worst, double epsilon,
                                  int max_sweeps, InnerSolver solver) {
    const size_t n = static_cast<size_t>(mdp.n_states());
    const int m = grid.size();

    CvarSolution sol;
    sol.grid = grid;
    sol.values.assign(n, std::vector<double>(static_cast<size_t>(m), 0.0));
    sol.greedy.assign(n, std::vector<int>(static_cast<size_t>(m), kNoAction));
    for (StateId s = 0; s < mdp.n_states(); ++s) {
        if (!mdp.is_goal(s)) {
            sol.values[static_cast<size_t>(s)][0] = worst.value(s);
            sol.greedy[static_cast<size_t>(s)][0] = worst.policy[static_cast<size_t>(s)];
        }
    }

    std::vector<Envelope> envelopes(n);
    std::vector<std::vector<double>> next = sol.values;
    std::vector<BudgetSegment> segments;
    std::vector<double> q(static_cast<size_t>(m), 0.0);

    bool converged = false;
    for (int sweep = 1; sweep <= max_sweeps && !converged; ++sweep) {
        for (size_t s = 0; s < n; ++s) {
            envelopes[s] = build_envelope(grid.points, sol.values[s]);
        }
        double residual = 0.0;
        for (StateId s = 0; s < mdp.n_states(); ++s) {
            if (mdp.is_goal(s)) {
                continue;
            }
            auto& value_row = next[static_cast<size_t>(s)];
            auto& greedy_row = sol.greedy[static_cast<size_t>(s)];
            std::fill(value_row.begin() + 1, value_row.end(),
                      std::numeric_limits<double>::infinity());

            const auto& state_actions = mdp.actions_at(s);
            for (size_t a = 0; a < state_actions.size(); ++a) {
                const MdpAction& action = state_actions[a];
                if (solver == InnerSolver::kGreedy) {
                    collect_segments(action, envelopes, segments);
                    values_for_budgets(segments, grid.points.data() + 1, m - 1,
                                       q.data() + 1);
                    for (int j = 1; j < m; ++j) {
                        q[static_cast<size_t>(j)] /= grid.at(j);
                    }
                } else {
                    for (int j = 1; j < m; ++j) {
                        q[static_cast<size_t>(j)] =
                            simplex_inner(mdp, sol, s, grid.at(j), static_cast<int>(a))
                                .value;
                    }
                }
                for (int j = 1; j < m; ++j) {
                    const double total = action.cost + q[static_cast<size_t>(j)];
                    if (total < value_row[static_cast<size_t>(j)]) {
                        value_row[static_cast<size_t>(j)] = total;
                        greedy_row[static_cast<size_t>(j)] = static_cast<int>(a);
                    }
                }
            }
            for (int j = 1; j < m; ++j) {
                residual = std::max(
                    residual, std::abs(value_row[static_cast<size_t>(j)] -
                                       sol.values[static_cast<size_t>(s)]
                                                 [static_cast<size_t>(j)]));
            }
        }
        for (size_t s = 0; s < n; ++s) {
            std::copy(next[s].begin() + 1, next[s].end(), sol.values[s].begin() + 1);
        }
        sol.sweeps = sweep;
        if (residual < epsilon) {
            converged = true;
        }
    }
    if (!converged) {
        throw SolveError("CVaR value iteration did not converge within " +
                         std::to_string(max_sweeps) + " sweeps");
    }
    sol.rebuild_envelope_cache();
    return sol;
}

double query_value(const CvarSolution& sol, StateId s, double y) {
    if (y < -kProbTol || y > 1.0 + kProbTol) {
        throw ExecutionError("query_value: y outside [0, 1]");
    }
    const auto& row = sol.values[static_cast<size_t>(s)];
    if (y <= 0.0) {
        return row[0];
    }
    y = std::min(y, 1.0);
    int j = sol.grid.bracket(y);
    if (j == sol.grid.size() - 1) {
        return row.back();
    }
    const double t0 = sol.grid.at(j);
    const double t1 = sol.grid.at(j + 1);
    const double w0 = t0 * row[static_cast<size_t>(j)];
    const double w1 = t1 * row[static_cast<size_t>(j + 1)];
    const double w = w0 + (w1 - w0) * (y - t0) / (t1 - t0);
    return w / y;
}

int cvar_greedy_action(const Mdp& mdp, const CvarSolution& sol, StateId s, double y) {
    if (mdp.is_goal(s)) {
        return kNoAction;
    }
    const auto& state_actions = mdp.actions_at(s);
    double best = std::numeric_limits<double>::infinity();
    int best_action = kNoAction;
    if (y <= 0.0) {
        // Exhausted budget: the adversary steers deterministically, so back
        // up the pinned worst-case row.
        for (size_t a = 0; a < state_actions.size(); ++a) {
            const MdpAction& action = state_actions[a];
            double worst_succ = -std::numeric_limits<double>::infinity();
            for (const Successor& succ : action.successors) {
                if (succ.probability > kSupportThreshold) {
                    worst_succ = std::max(
                        worst_succ,
                        sol.values[static_cast<size_t>(succ.state)][0]);
                }
            }
            const double total = action.cost + worst_succ;
            if (total < best) {
                best = total;
                best_action = static_cast<int>(a);
            }
        }
        return best_action;
    }
    for (size_t a = 0; a < state_actions.size(); ++a) {
        const double total =
            state_actions[a].cost +
            inner_adversary_max(mdp, sol, s, y, static_cast<int>(a)).value;
        if (total < best) {
            best = total;
            best_action = static_cast<int>(a);
        }
    }
    return best_action;
}

bool response_feasible(const Mdp& mdp, StateId s, double y, int a,
                       const PerturbationResponse& response, double tol) {
    const MdpAction& action = mdp.action(s, a);
    if (response.xi.size() != action.successors.size()) {
        return false;
    }
    const double cap = y > 0.0 ? 1.0 / y : std::numeric_limits<double>::infinity();
    double mass = 0.0;
    for (size_t i = 0; i < response.xi.size(); ++i) {
        const double xi = response.xi[i];
        if (xi < -tol || xi > cap * (1.0 + tol) + tol) {
            return false;
        }
        mass += xi * action.successors[i].probability;
    }
    return std::abs(mass - 1.0) <= tol;
}

}  // namespace cvarplan
