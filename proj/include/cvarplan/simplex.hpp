#pragma once

#include <vector>

namespace cvarplan {

struct LpResult {
    double objective = 0.0;
    std::vector<double> x;
};

// Maximises c.x subject to A x = b, x >= 0 with a dense two-phase tableau
// simplex (Bland's rule). b must be nonnegative. Small problems only; this
// backs the cross-check path of the inner adversary solver. Throws SolveError
// on infeasible or unbounded programmes.
LpResult simplex_maximize(const std::vector<double>& c,
                          const std::vector<std::vector<double>>& a,
                          const std::vector<double>& b);

}  // namespace cvarplan
