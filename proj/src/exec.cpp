#include "cvarplan/exec.hpp"

#include <cmath>

#include "cvarplan/errors.hpp"

namespace cvarplan {

std::string strategy_name(Strategy strategy) {
    switch (strategy) {
        case Strategy::kExpectedValue:
            return "ev";
        case Strategy::kCvarWorstCase:
            return "cvar-wc";
        case Strategy::kCvarExpectedValue:
            return "cvar-ev";
    }
    return "unknown";
}

std::optional<Strategy> parse_strategy(const std::string& name) {
    if (name == "ev") {
        return Strategy::kExpectedValue;
    }
    if (name == "cvar-wc" || name == "wc") {
        return Strategy::kCvarWorstCase;
    }
    if (name == "cvar-ev" || name == "lex") {
        return Strategy::kCvarExpectedValue;
    }
    return std::nullopt;
}

namespace {

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

EpisodeRecord run_expected_value(const Mdp& mdp, const ValueTable& table, Rng& rng,
                                 const ExecParams& params) {
    EpisodeRecord record;
    StateId s = mdp.initial;
    while (!mdp.is_goal(s)) {
        if (record.steps >= params.step_limit) {
            throw ExecutionError("episode exceeded step limit");
        }
        const int a = table.policy[static_cast<size_t>(s)];
        if (a == kNoAction) {
            throw ExecutionError("expected-value policy undefined at state '" +
                                 mdp.state_names[static_cast<size_t>(s)] + "'");
        }
        const MdpAction& action = mdp.action(s, a);
        record.total_cost += action.cost;
        s = action.successors[static_cast<size_t>(sample_successor_index(action, rng))].state;
        ++record.steps;
    }
    return record;
}

EpisodeRecord run_cvar(const Mdp& mdp, Strategy strategy,
                       const SolutionBundle& solutions, Rng& rng,
                       const ExecParams& params) {
    const CvarSolution& cvar = *solutions.cvar;
    const bool lex_enabled = strategy == Strategy::kCvarExpectedValue;
    if (lex_enabled && solutions.lex == nullptr) {
        throw ExecutionError("cvar-ev strategy needs the constrained solution");
    }

    EpisodeRecord record;
    StateId s = mdp.initial;
    double y = solutions.alpha;
    double c = 0.0;

    while (!mdp.is_goal(s)) {
        if (record.steps >= params.step_limit) {
            throw ExecutionError("episode exceeded step limit");
        }
        if (record.switched) {
            const int a = lex_policy_action(mdp, *solutions.lex, s, c);
            const MdpAction& action = mdp.action(s, a);
            c += action.cost;
            s = action.successors[static_cast<size_t>(sample_successor_index(action, rng))]
                    .state;
            ++record.steps;
            continue;
        }

        const int a = cvar_greedy_action(mdp, cvar, s, y);
        const MdpAction& action = mdp.action(s, a);
        double xi_realized = 1.0;
        int succ_index;
        if (y > 0.0) {
            const InnerSolution inner = inner_adversary_max(mdp, cvar, s, y, a);
            if (!response_feasible(mdp, s, y, a, inner.response)) {
                throw ExecutionError("adversary response infeasible at state '" +
                                     mdp.state_names[static_cast<size_t>(s)] + "'");
            }
            succ_index = sample_successor_index(action, rng);
            xi_realized = inner.response.xi[static_cast<size_t>(succ_index)];
        } else {
            // Budget exhausted: the worst-case row drives action choice and
            // the budget stays at zero.
            succ_index = sample_successor_index(action, rng);
            xi_realized = 0.0;
        }
        c += action.cost;
        const StateId next = action.successors[static_cast<size_t>(succ_index)].state;
        double y_next = y > 0.0 ? y * xi_realized : 0.0;
        if (y_next > 1.0 + 1e-6) {
            throw ExecutionError("residual budget left [0, 1]");
        }
        y_next = std::min(y_next, 1.0);
        ++record.steps;

        if (lex_enabled && y > 0.0 && !mdp.is_goal(next) &&
            xi_realized < params.xi_tol &&
            c + solutions.lex->v_worst[static_cast<size_t>(next)] <=
                solutions.lex->var.value + kCostSlack) {
            // The adversary abandoned this branch and the remaining
            // worst-case cost fits under the VaR: switch for good.
            record.switched = true;
            record.switch_step = record.steps;
        }
        s = next;
        y = y_next;
    }

    record.total_cost = c;
    record.final_y = y;
    if (record.switched &&
        record.total_cost > solutions.lex->var.value + kCostSlack) {
        throw ExecutionError("switched episode exceeded the VaR estimate");
    }
    return record;
}

}  // namespace

EpisodeRecord execute_episode(const Mdp& mdp, Strategy strategy,
                              const SolutionBundle& solutions, Rng& rng,
                              const ExecParams& params) {
    switch (strategy) {
        case Strategy::kExpectedValue:
            if (solutions.ev == nullptr) {
                throw ExecutionError("ev strategy needs the expected-value solution");
            }
            return run_expected_value(mdp, *solutions.ev, rng, params);
        case Strategy::kCvarWorstCase:
        case Strategy::kCvarExpectedValue:
            if (solutions.cvar == nullptr) {
                throw ExecutionError("CVaR strategies need the game solution");
            }
            return run_cvar(mdp, strategy, solutions, rng, params);
    }
    throw ExecutionError("unknown strategy");
}

}  // namespace cvarplan
