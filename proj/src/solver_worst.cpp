#include "cvarplan/solver_worst.hpp"

#include <cmath>
#include <limits>

#include "cvarplan/errors.hpp"

namespace cvarplan {

WorstCaseSolution solve_worst_case(const Mdp& mdp, double epsilon, int max_sweeps) {
    const size_t n = static_cast<size_t>(mdp.n_states());
    WorstCaseSolution sol;
    sol.v_worst.assign(n, 0.0);
    sol.q_worst.resize(n);
    sol.policy.assign(n, kNoAction);
    for (StateId s = 0; s < mdp.n_states(); ++s) {
        sol.q_worst[static_cast<size_t>(s)].assign(mdp.actions_at(s).size(), 0.0);
    }

    std::vector<double> next(n, 0.0);
    for (int sweep = 1; sweep <= max_sweeps; ++sweep) {
        double residual = 0.0;
        for (StateId s = 0; s < mdp.n_states(); ++s) {
            if (mdp.is_goal(s)) {
                next[static_cast<size_t>(s)] = 0.0;
                continue;
            }
            double best = std::numeric_limits<double>::infinity();
            int best_action = kNoAction;
            const auto& state_actions = mdp.actions_at(s);
            for (size_t a = 0; a < state_actions.size(); ++a) {
                const MdpAction& action = state_actions[a];
                double worst_succ = -std::numeric_limits<double>::infinity();
                for (const Successor& succ : action.successors) {
                    if (succ.probability > kSupportThreshold) {
                        worst_succ = std::max(
                            worst_succ, sol.v_worst[static_cast<size_t>(succ.state)]);
                    }
                }
                const double q = action.cost + worst_succ;
                sol.q_worst[static_cast<size_t>(s)][a] = q;
                if (q < best) {
                    best = q;
                    best_action = static_cast<int>(a);
                }
            }
            next[static_cast<size_t>(s)] = best;
            sol.policy[static_cast<size_t>(s)] = best_action;
            residual = std::max(residual,
                                std::abs(best - sol.v_worst[static_cast<size_t>(s)]));
        }
        sol.v_worst.swap(next);
        sol.sweeps = sweep;
        if (residual < epsilon) {
            return sol;
        }
    }
    throw SolveError("no finite worst-case policy: minimax iteration did not "
                     "converge within " +
                     std::to_string(max_sweeps) + " sweeps");
}

}  // namespace cvarplan
