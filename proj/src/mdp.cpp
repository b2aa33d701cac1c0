#include "cvarplan/mdp.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <sstream>

#include "cvarplan/errors.hpp"

namespace cvarplan {

StateId Mdp::add_state(std::string name, bool is_goal) {
    if (index_.count(name) != 0) {
        throw ValidationError("duplicate state name: " + name);
    }
    const StateId id = static_cast<StateId>(state_names.size());
    index_.emplace(name, id);
    state_names.push_back(std::move(name));
    actions.emplace_back();
    goal.push_back(is_goal ? 1 : 0);
    return id;
}

int Mdp::add_action(StateId s, std::string name, double cost,
                    std::vector<Successor> successors) {
    // Merge duplicate successors so perturbation maps stay well defined.
    std::vector<Successor> merged;
    for (const Successor& succ : successors) {
        auto it = std::find_if(merged.begin(), merged.end(), [&](const Successor& m) {
            return m.state == succ.state;
        });
        if (it != merged.end()) {
            it->probability += succ.probability;
        } else {
            merged.push_back(succ);
        }
    }
    auto& list = actions[static_cast<size_t>(s)];
    list.push_back(MdpAction{std::move(name), cost, std::move(merged)});
    return static_cast<int>(list.size()) - 1;
}

StateId Mdp::state_index(std::string_view name) const {
    auto it = index_.find(std::string(name));
    return it == index_.end() ? -1 : it->second;
}

int Mdp::action_index(StateId s, std::string_view name) const {
    const auto& list = actions[static_cast<size_t>(s)];
    for (size_t i = 0; i < list.size(); ++i) {
        if (list[i].name == name) {
            return static_cast<int>(i);
        }
    }
    return -1;
}

std::string ValidationReport::joined() const {
    std::ostringstream out;
    for (size_t i = 0; i < violations.size(); ++i) {
        if (i > 0) {
            out << "; ";
        }
        out << violations[i];
    }
    return out.str();
}

ValidationReport validate_mdp(const Mdp& mdp) {
    ValidationReport report;
    auto flag = [&report](const std::string& message) {
        report.violations.push_back(message);
    };

    if (mdp.n_states() == 0) {
        flag("model has no states");
        return report;
    }
    if (mdp.initial < 0 || mdp.initial >= mdp.n_states()) {
        flag("initial state is not set");
    }

    for (StateId s = 0; s < mdp.n_states(); ++s) {
        const auto& state_actions = mdp.actions_at(s);
        const std::string& name = mdp.state_names[static_cast<size_t>(s)];

        if (!mdp.is_goal(s) && state_actions.empty()) {
            flag("non-goal state '" + name + "' has no action");
        }
        for (const MdpAction& action : state_actions) {
            const std::string where = "(" + name + ", " + action.name + ")";
            if (!(action.cost >= 0.0)) {
                flag("negative cost at " + where);
            }
            if (mdp.is_goal(s)) {
                if (action.cost != 0.0) {
                    flag("nonzero cost at goal " + where);
                }
                for (const Successor& succ : action.successors) {
                    if (succ.state != s) {
                        flag("goal state '" + name + "' is not absorbing");
                    }
                }
            }
            if (action.successors.empty()) {
                flag("no successors at " + where);
                continue;
            }
            double row_sum = 0.0;
            for (const Successor& succ : action.successors) {
                if (succ.state < 0 || succ.state >= mdp.n_states()) {
                    flag("successor out of range at " + where);
                    continue;
                }
                if (succ.probability < 0.0) {
                    flag("negative probability at " + where);
                } else if (!(succ.probability > 0.0) || succ.probability > 1.0 + kProbTol) {
                    flag("probability outside (0, 1] at " + where);
                }
                row_sum += succ.probability;
            }
            if (std::abs(row_sum - 1.0) > kProbTol) {
                flag("row sum " + std::to_string(row_sum) + " at " + where);
            }
        }
    }

    // Necessary condition for a proper policy: every non-goal state can reach
    // some goal in the support graph. Backward reachability from the goals.
    std::vector<char> reaches_goal(static_cast<size_t>(mdp.n_states()), 0);
    std::deque<StateId> queue;
    for (StateId s = 0; s < mdp.n_states(); ++s) {
        if (mdp.is_goal(s)) {
            reaches_goal[static_cast<size_t>(s)] = 1;
            queue.push_back(s);
        }
    }
    std::vector<std::vector<StateId>> predecessors(static_cast<size_t>(mdp.n_states()));
    for (StateId s = 0; s < mdp.n_states(); ++s) {
        for (const MdpAction& action : mdp.actions_at(s)) {
            for (const Successor& succ : action.successors) {
                if (succ.state >= 0 && succ.state < mdp.n_states() &&
                    succ.probability > kSupportThreshold) {
                    predecessors[static_cast<size_t>(succ.state)].push_back(s);
                }
            }
        }
    }
    while (!queue.empty()) {
        const StateId s = queue.front();
        queue.pop_front();
        for (StateId p : predecessors[static_cast<size_t>(s)]) {
            if (!reaches_goal[static_cast<size_t>(p)]) {
                reaches_goal[static_cast<size_t>(p)] = 1;
                queue.push_back(p);
            }
        }
    }
    for (StateId s = 0; s < mdp.n_states(); ++s) {
        if (!reaches_goal[static_cast<size_t>(s)]) {
            flag("goal unreachable from state '" +
                 mdp.state_names[static_cast<size_t>(s)] + "'");
        }
    }
    return report;
}

void require_valid(const Mdp& mdp) {
    const ValidationReport report = validate_mdp(mdp);
    if (!report.ok()) {
        throw ValidationError("invalid model: " + report.joined());
    }
}

double cumulative_cost(const Mdp& mdp, const History& history) {
    double total = 0.0;
    for (size_t i = 0; i < history.steps.size(); ++i) {
        const HistoryStep& step = history.steps[i];
        if (step.state < 0 || step.state >= mdp.n_states()) {
            throw ExecutionError("history state out of range");
        }
        const auto& state_actions = mdp.actions_at(step.state);
        if (step.action < 0 || step.action >= static_cast<int>(state_actions.size())) {
            throw ExecutionError("history action unknown at state '" +
                                 mdp.state_names[static_cast<size_t>(step.state)] + "'");
        }
        const MdpAction& action = state_actions[static_cast<size_t>(step.action)];
        const StateId next = i + 1 < history.steps.size() ? history.steps[i + 1].state
                                                          : history.final_state;
        const auto it = std::find_if(
            action.successors.begin(), action.successors.end(),
            [next](const Successor& succ) { return succ.state == next; });
        if (it == action.successors.end() || it->probability <= 0.0) {
            throw ExecutionError("history step (" +
                                 mdp.state_names[static_cast<size_t>(step.state)] + ", " +
                                 action.name + ") cannot reach '" +
                                 mdp.state_names[static_cast<size_t>(next)] + "'");
        }
        total += action.cost;
    }
    return total;
}

StateId sample_transition(const Mdp& mdp, StateId s, int a, Rng& rng) {
    if (s < 0 || s >= mdp.n_states()) {
        throw ExecutionError("sample_transition: state out of range");
    }
    const auto& state_actions = mdp.actions_at(s);
    if (a < 0 || a >= static_cast<int>(state_actions.size())) {
        throw ExecutionError("sample_transition: unknown action at state '" +
                             mdp.state_names[static_cast<size_t>(s)] + "'");
    }
    const MdpAction& action = state_actions[static_cast<size_t>(a)];
    const double u = rng.next_unit();
    double cdf = 0.0;
    for (const Successor& succ : action.successors) {
        cdf += succ.probability;
        if (u < cdf) {
            return succ.state;
        }
    }
    return action.successors.back().state;  // guard against float shortfall
}

DiscreteDistribution enumerate_outcome_distribution(const Mdp& mdp,
                                                    const StationaryPolicy& policy,
                                                    int horizon,
                                                    std::size_t max_histories) {
    struct Node {
        StateId state;
        double probability;
        double cost;
        int depth;
    };

    std::vector<DiscreteDistribution::Atom> outcomes;
    std::vector<Node> stack{{mdp.initial, 1.0, 0.0, 0}};
    std::size_t expanded = 0;
    double residual = 0.0;

    while (!stack.empty()) {
        const Node node = stack.back();
        stack.pop_back();
        if (mdp.is_goal(node.state)) {
            outcomes.push_back({node.cost, node.probability});
            continue;
        }
        if (node.depth >= horizon) {
            residual += node.probability;
            continue;
        }
        if (++expanded > max_histories) {
            throw SolveError("enumeration limit exceeded (" +
                             std::to_string(max_histories) + " histories)");
        }
        const int a = policy[static_cast<size_t>(node.state)];
        if (a == kNoAction) {
            throw SolveError("policy undefined at non-goal state '" +
                             mdp.state_names[static_cast<size_t>(node.state)] + "'");
        }
        const MdpAction& action = mdp.action(node.state, a);
        for (const Successor& succ : action.successors) {
            stack.push_back({succ.state, node.probability * succ.probability,
                             node.cost + action.cost, node.depth + 1});
        }
    }

    if (residual > 1e-12) {
        throw SolveError("probability mass " + std::to_string(residual) +
                         " fails to reach a goal within horizon " +
                         std::to_string(horizon));
    }
    return DiscreteDistribution::from_atoms(std::move(outcomes));
}

}  // namespace cvarplan
