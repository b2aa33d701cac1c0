#pragma once

#include <vector>

#include "cvarplan/mdp.hpp"

namespace cvarplan {

struct ValueTable {
    std::vector<double> values;     // per state; goals are 0
    StationaryPolicy policy;        // greedy action per state; kNoAction at goals
    int sweeps = 0;
    double residual = 0.0;          // sup-norm change of the final sweep
};

// Synchronous (Jacobi) value iteration until the sup-norm change drops below
// epsilon. Greedy ties break toward the lowest action index. Throws
// SolveError when max_sweeps is exhausted, which signals an improper model.
ValueTable solve_expected_value(const Mdp& mdp, double epsilon = 1e-6,
                                int max_sweeps = 100000);

}  // namespace cvarplan
