#pragma once

#include <vector>

#include "cvarplan/mdp.hpp"
#include "cvarplan/solver_worst.hpp"

namespace cvarplan {

// Interpolation grid for the adversary budget y: {0} followed by
// logarithmically spaced points from y_min to 1.
struct YGrid {
    std::vector<double> points;

    static YGrid build(int n_points = 30, double y_min = 1e-3);

    int size() const { return static_cast<int>(points.size()); }
    double at(int j) const { return points[static_cast<size_t>(j)]; }
    // Largest index j with points[j] <= y (y in [0, 1]).
    int bracket(double y) const;
};

// Adversary budget reallocation over one action's successor list, stored
// parallel to that list. Feasible responses satisfy 0 <= xi <= 1/y and
// sum_i xi_i * p_i = 1.
struct PerturbationResponse {
    std::vector<double> xi;
};

struct InnerSolution {
    double value = 0.0;  // maximised continuation sum xi * T * V-hat
    PerturbationResponse response;
};

// Which exact solver handles the inner concave piecewise-linear programme.
// Greedy allocates budget over envelope segments in descending slope order;
// Simplex solves the equivalent dense LP. They agree to 1e-9 and Greedy is
// the default (Simplex exists as an independent cross-check).
enum class InnerSolver { kGreedy, kSimplex };

// One successor's piecewise-linear continuation, as the concave upper
// envelope of the knot points (y_j, y_j * V(s', y_j)). Slopes are strictly
// decreasing; widths are measured along the t axis.
struct EnvelopeSegment {
    double slope = 0.0;
    double width = 0.0;
};

using Envelope = std::vector<EnvelopeSegment>;

struct CvarSolution {
    YGrid grid;
    std::vector<std::vector<double>> values;  // [state][knot]; row 0 of each state = v_worst
    std::vector<std::vector<int>> greedy;     // [state][knot] action; kNoAction at goals
    int sweeps = 0;

    // Derived per-state envelopes of the converged table; rebuilt after
    // solving or loading, required by the execution-time inner solves.
    std::vector<Envelope> envelope_cache;
    void rebuild_envelope_cache();

    double value_at(StateId s, int knot) const {
        return values[static_cast<size_t>(s)][static_cast<size_t>(knot)];
    }
};

// Exact maximiser of sum_s' xi(s') T(s,a,s') V-hat(s', y * xi(s')) over the
// budget envelope at (s, y, a), via the substitution t = y * xi: a separable
// concave piecewise-linear programme. Requires y > 0 and a populated
// envelope cache.
InnerSolution inner_adversary_max(const Mdp& mdp, const CvarSolution& sol, StateId s,
                                  double y, int a,
                                  InnerSolver solver = InnerSolver::kGreedy);

// Interpolated minimax value iteration over the augmented (state, y) space.
// The y = 0 row is pinned to the worst-case values; all other rows sweep
// until the sup-norm change drops below epsilon.
CvarSolution cvar_value_iteration(const Mdp& mdp, const YGrid& grid,
                                  const WorstCaseSolution& worst,
                                  double epsilon = 1e-6, int max_sweeps = 100000,
                                  InnerSolver solver = InnerSolver::kGreedy);

// Interpolated lookup: exact table values at knots, piecewise-linear in
// y * V between them, worst-case value at y = 0. Throws on y outside [0, 1].
double query_value(const CvarSolution& sol, StateId s, double y);

// Greedy action of the one-step backup at exact budget y; at y = 0 this is
// the worst-case backup over the pinned row. Ties break toward the lowest
// action index. kNoAction at goals.
int cvar_greedy_action(const Mdp& mdp, const CvarSolution& sol, StateId s, double y);

// True when xi lies in the budget envelope for (s, y, a) within tolerance.
bool response_feasible(const Mdp& mdp, StateId s, double y, int a,
                       const PerturbationResponse& response, double tol = 1e-9);

}  // namespace cvarplan
