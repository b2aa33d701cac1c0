#pragma once

#include <vector>

#include "cvarplan/distribution.hpp"
#include "cvarplan/mdp.hpp"
#include "cvarplan/solver_cvar.hpp"
#include "cvarplan/solver_worst.hpp"

namespace cvarplan {

struct VarEstimate {
    double value = 0.0;
    double alpha = 0.0;
    int episodes = 0;
    VarConvention convention = VarConvention::kLower;
};

// Knots for the accumulated-cost coordinate of the augmented model.
struct CostGrid {
    std::vector<double> points;  // ascending, endpoints exactly 0 and the VaR

    static CostGrid uniform(double var, int n_points = 100);
    // Integer knots 0..floor(var) plus the VaR itself: with all-integer costs
    // every reachable accumulated cost lands exactly on a knot, giving an
    // interpolation-free cross-check.
    static CostGrid exact_integer(double var);

    int size() const { return static_cast<int>(points.size()); }
    double at(int k) const { return points[static_cast<size_t>(k)]; }
};

// Value table of the augmented MDP whose actions are pruned by the rule
// c + Q_worst(s, a) <= VaR. Self-contained: carries the worst-case tables the
// pruning rule and the runtime policy need.
struct LexSolution {
    VarEstimate var;
    CostGrid grid;
    std::vector<std::vector<double>> values;  // [state][cost knot]; +inf = no enabled action
    bool root_feasible = false;
    int sweeps = 0;

    std::vector<std::vector<double>> q_worst;  // copied from the worst-case solution
    std::vector<double> v_worst;
    StationaryPolicy worst_policy;
};

constexpr double kCostSlack = 1e-9;  // absorbs float accumulation in c

// Monte Carlo VaR of the game policy: runs the CVaR strategy with switching
// disabled for n_episodes and returns the empirical quantile of total costs.
// When margin is set, the estimate backs off by one empirical quantile step.
// Throws ExecutionError if an episode exceeds step_limit.
VarEstimate estimate_var(const Mdp& mdp, const CvarSolution& cvar_sol, double alpha,
                         int n_episodes, const RandomSource& random,
                         VarConvention convention = VarConvention::kLower,
                         bool margin = false, long step_limit = 1000000);

// Indices of the actions satisfying c + Q_worst(s, a) <= var + kCostSlack.
std::vector<int> enabled_actions(const Mdp& mdp, StateId s, double c,
                                 const WorstCaseSolution& worst, double var);
std::vector<int> enabled_actions(const Mdp& mdp, StateId s, double c,
                                 const LexSolution& sol);

// Value iteration on the augmented model. Cells without an enabled action get
// +infinity; they are unreachable under the execution semantics because a
// switch is only ever performed where the worst-case-safe budget still
// covers the remaining cost. A VaR below v_worst(initial) therefore leaves
// the root cell infeasible without being an error; root_feasible records it.
LexSolution solve_constrained_ev(const Mdp& mdp, const WorstCaseSolution& worst,
                                 const VarEstimate& var, const CostGrid& grid,
                                 double epsilon = 1e-6, int max_sweeps = 100000);

// Greedy action among the enabled set at the exact runtime cost c (successor
// values interpolate; the feasibility check does not). Falls back to the
// worst-case policy if float dust empties the enabled set. Throws
// ExecutionError when c exceeds the VaR beyond tolerance.
int lex_policy_action(const Mdp& mdp, const LexSolution& sol, StateId s, double c);

// Interpolated lookup of the augmented value at exact cost c; +infinity
// beyond the feasibility frontier var - v_worst(s).
double lex_query_value(const Mdp& mdp, const LexSolution& sol, StateId s, double c);

}  // namespace cvarplan
