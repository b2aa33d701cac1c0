#include "cvarplan/simplex.hpp"

#include <cmath>
#include <limits>

#include "cvarplan/errors.hpp"

namespace cvarplan {

namespace {

constexpr double kPivotTol = 1e-11;

// Tableau rows: one per constraint plus an objective row kept in reduced
// form. Columns: structural vars, then artificials, then the rhs.
struct Tableau {
    int rows;
    int cols;  // without rhs
    std::vector<std::vector<double>> t;  // rows x (cols + 1)
    std::vector<int> basis;              // basic column per row

    double& at(int r, int c) { return t[static_cast<size_t>(r)][static_cast<size_t>(c)]; }
    double& rhs(int r) { return t[static_cast<size_t>(r)][static_cast<size_t>(cols)]; }

    void pivot(int pr, int pc) {
        const double pivot_value = at(pr, pc);
        for (int c = 0; c <= cols; ++c) {
            at(pr, c) /= pivot_value;
        }
        for (int r = 0; r < rows; ++r) {
            if (r == pr) {
                continue;
            }
            const double factor = at(r, pc);
            if (factor == 0.0) {
                continue;
            }
            for (int c = 0; c <= cols; ++c) {
                at(r, c) -= factor * at(pr, c);
            }
        }
        basis[static_cast<size_t>(pr)] = pc;
    }

    // Maximises using the given objective row index (reduced costs stored
    // there, rhs holds -objective). Bland's rule for anti-cycling.
    void run(int obj_row, int n_usable_cols) {
        while (true) {
            int pc = -1;
            for (int c = 0; c < n_usable_cols; ++c) {
                if (t[static_cast<size_t>(obj_row)][static_cast<size_t>(c)] > kPivotTol) {
                    pc = c;
                    break;
                }
            }
            if (pc < 0) {
                return;
            }
            int pr = -1;
            double best_ratio = std::numeric_limits<double>::infinity();
            for (int r = 0; r < obj_row; ++r) {
                const double coeff = at(r, pc);
                if (coeff > kPivotTol) {
                    const double ratio = rhs(r) / coeff;
                    if (ratio < best_ratio - kPivotTol ||
                        (ratio < best_ratio + kPivotTol &&
                         (pr < 0 || basis[static_cast<size_t>(r)] <
                                        basis[static_cast<size_t>(pr)]))) {
                        best_ratio = ratio;
                        pr = r;
                    }
                }
            }
            if (pr < 0) {
                throw SolveError("linear programme is unbounded");
            }
            pivot(pr, pc);
        }
    }
};

}  // namespace

LpResult simplex_maximize(const std::vector<double>& c,
                          const std::vector<std::vector<double>>& a,
                          const std::vector<double>& b) {
    const int m = static_cast<int>(a.size());
    const int n = static_cast<int>(c.size());
    for (int r = 0; r < m; ++r) {
        if (static_cast<int>(a[static_cast<size_t>(r)].size()) != n) {
            throw SolveError("constraint row width mismatch");
        }
        if (b[static_cast<size_t>(r)] < 0.0) {
            throw SolveError("rhs must be nonnegative");
        }
    }

    // Layout: structural columns [0, n), artificial columns [n, n + m).
    Tableau tab;
    tab.rows = m + 1;
    tab.cols = n + m;
    tab.t.assign(static_cast<size_t>(tab.rows),
                 std::vector<double>(static_cast<size_t>(tab.cols) + 1, 0.0));
    tab.basis.assign(static_cast<size_t>(m), 0);
    for (int r = 0; r < m; ++r) {
        for (int col = 0; col < n; ++col) {
            tab.at(r, col) = a[static_cast<size_t>(r)][static_cast<size_t>(col)];
        }
        tab.at(r, n + r) = 1.0;
        tab.rhs(r) = b[static_cast<size_t>(r)];
        tab.basis[static_cast<size_t>(r)] = n + r;
    }

    // Phase 1: maximise -sum(artificials); reduced costs = column sums over
    // constraint rows for structural columns.
    for (int col = 0; col <= tab.cols; ++col) {
        double sum = 0.0;
        for (int r = 0; r < m; ++r) {
            sum += tab.at(r, col);
        }
        tab.at(m, col) = col < n ? sum : 0.0;
        if (col == tab.cols) {
            tab.at(m, col) = sum;
        }
    }
    tab.run(m, n);
    if (std::abs(tab.rhs(m)) > 1e-8) {
        throw SolveError("linear programme is infeasible");
    }
    // Drive any lingering artificial out of the basis when possible.
    for (int r = 0; r < m; ++r) {
        if (tab.basis[static_cast<size_t>(r)] >= n) {
            for (int col = 0; col < n; ++col) {
                if (std::abs(tab.at(r, col)) > kPivotTol) {
                    tab.pivot(r, col);
                    break;
                }
            }
        }
    }

    // Phase 2: install the real objective in reduced form.
    for (int col = 0; col <= tab.cols; ++col) {
        tab.at(m, col) = col < n ? c[static_cast<size_t>(col)] : 0.0;
    }
    tab.at(m, tab.cols) = 0.0;
    for (int r = 0; r < m; ++r) {
        const int basic = tab.basis[static_cast<size_t>(r)];
        const double coeff = basic < n ? c[static_cast<size_t>(basic)] : 0.0;
        if (coeff == 0.0) {
            continue;
        }
        for (int col = 0; col <= tab.cols; ++col) {
            tab.at(m, col) -= coeff * tab.at(r, col);
        }
    }
    tab.run(m, n);

    LpResult result;
    result.x.assign(static_cast<size_t>(n), 0.0);
    for (int r = 0; r < m; ++r) {
        const int basic = tab.basis[static_cast<size_t>(r)];
        if (basic < n) {
            result.x[static_cast<size_t>(basic)] = tab.rhs(r);
        }
    }
    result.objective = -tab.rhs(m);
    return result;
}

}  // namespace cvarplan
