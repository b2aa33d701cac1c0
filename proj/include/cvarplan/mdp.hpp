#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "cvarplan/distribution.hpp"
#include "cvarplan/rng.hpp"

namespace cvarplan {

using StateId = std::int32_t;

struct Successor {
    StateId state = -1;
    double probability = 0.0;
};

struct MdpAction {
    std::string name;
    double cost = 0.0;
    std::vector<Successor> successors;
};

// Finite stochastic shortest path MDP: nonnegative action costs, absorbing
// zero-cost goal states, a single initial state. Immutable once built; safe
// to share across threads.
struct Mdp {
    std::vector<std::string> state_names;
    std::vector<std::vector<MdpAction>> actions;  // per state, index = tie-break order
    std::vector<char> goal;                       // per state
    StateId initial = -1;

    StateId add_state(std::string name, bool is_goal = false);
    // Duplicate successors are merged (their probabilities summed).
    int add_action(StateId s, std::string name, double cost,
                   std::vector<Successor> successors);

    int n_states() const { return static_cast<int>(state_names.size()); }
    bool is_goal(StateId s) const { return goal[static_cast<size_t>(s)] != 0; }
    const std::vector<MdpAction>& actions_at(StateId s) const {
        return actions[static_cast<size_t>(s)];
    }
    const MdpAction& action(StateId s, int a) const {
        return actions[static_cast<size_t>(s)][static_cast<size_t>(a)];
    }

    // -1 if no such state.
    StateId state_index(std::string_view name) const;
    // -1 if no such action at s.
    int action_index(StateId s, std::string_view name) const;

private:
    std::unordered_map<std::string, StateId> index_;
};

constexpr double kSupportThreshold = 1e-12;  // below this, a successor is unsupported

struct ValidationReport {
    std::vector<std::string> violations;
    bool ok() const { return violations.empty(); }
    std::string joined() const;
};

// Report-style: lists every invariant breach (row sums, probability ranges,
// negative costs, non-absorbing goals, actionless non-goal states) plus
// non-goal states from which no goal is graph-reachable, a necessary
// condition for a proper policy to exist.
ValidationReport validate_mdp(const Mdp& mdp);

// Throws ValidationError when the report is non-empty.
void require_valid(const Mdp& mdp);

struct HistoryStep {
    StateId state = -1;
    int action = -1;
};

// Ordered (state, action) steps terminated by a final state.
struct History {
    std::vector<HistoryStep> steps;
    StateId final_state = -1;
};

// Sum of per-step costs. Throws ExecutionError if any step uses an unknown
// action or a transition with zero probability in the model.
double cumulative_cost(const Mdp& mdp, const History& history);

// Draws a successor from T(s, a, .). Throws ExecutionError for unknown (s, a).
StateId sample_transition(const Mdp& mdp, StateId s, int a, Rng& rng);

// Action index per state; kNoAction for states where the policy is undefined
// (goals). Stationary policies are all the solvers' outputs need on the base
// model.
using StationaryPolicy = std::vector<int>;
constexpr int kNoAction = -1;

// Exact distribution of the total cost over all histories that reach a goal
// within `horizon` steps under a fixed stationary policy. Brute-force oracle
// for small instances. Throws SolveError if more than `max_histories` paths
// are expanded or if probability mass > 1e-12 fails to reach a goal in time.
DiscreteDistribution enumerate_outcome_distribution(const Mdp& mdp,
                                                    const StationaryPolicy& policy,
                                                    int horizon,
                                                    std::size_t max_histories = 1000000);

}  // namespace cvarplan
