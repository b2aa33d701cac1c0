#pragma once

#include <vector>

#include "cvarplan/mdp.hpp"

namespace cvarplan {

// Minimax worst-case values: the adversary picks the worst supported
// successor regardless of its probability. Feeds the y = 0 boundary of the
// CVaR game and the action-pruning rule of the lexicographic stage.
struct WorstCaseSolution {
    std::vector<double> v_worst;               // per state
    std::vector<std::vector<double>> q_worst;  // per (state, action index)
    StationaryPolicy policy;                   // kNoAction at goals
    int sweeps = 0;

    double value(StateId s) const { return v_worst[static_cast<size_t>(s)]; }
    double q(StateId s, int a) const {
        return q_worst[static_cast<size_t>(s)][static_cast<size_t>(a)];
    }
};

// Fixed point of V(s) = min_a [C(s,a) + max over supported successors V(s')],
// where support means probability above kSupportThreshold. Throws SolveError
// on divergence, i.e. no policy has a finite worst-case cost.
WorstCaseSolution solve_worst_case(const Mdp& mdp, double epsilon = 1e-6,
                                   int max_sweeps = 100000);

}  // namespace cvarplan
