#include "cvarplan/solver_ev.hpp"

#include <cmath>
#include <limits>

#include "cvarplan/errors.hpp"

namespace cvarplan {

ValueTable solve_expected_value(const Mdp& mdp, double epsilon, int max_sweeps) {
    const size_t n = static_cast<size_t>(mdp.n_states());
    std::vector<double> values(n, 0.0);
    std::vector<double> next(n, 0.0);
    ValueTable table;
    table.policy.assign(n, kNoAction);

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
                double q = action.cost;
                for (const Successor& succ : action.successors) {
                    q += succ.probability * values[static_cast<size_t>(succ.state)];
                }
                if (q < best) {
                    best = q;
                    best_action = static_cast<int>(a);
                }
            }
            next[static_cast<size_t>(s)] = best;
            table.policy[static_cast<size_t>(s)] = best_action;
            residual = std::max(residual,
                                std::abs(best - values[static_cast<size_t>(s)]));
        }
        values.swap(next);
        table.sweeps = sweep;
        table.residual = residual;
        if (residual < epsilon) {
            table.values = std::move(values);
            return table;
        }
    }
    throw SolveError("expected-value iteration did not converge within " +
                     std::to_string(max_sweeps) + " sweeps");
}

}  // namespace cvarplan
