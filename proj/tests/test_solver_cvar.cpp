#include <cmath>
#include <functional>
#include <vector>

#include <doctest.h>

#include "cvarplan/distribution.hpp"
#include "cvarplan/domains.hpp"
#include "cvarplan/errors.hpp"
#include "cvarplan/solver_cvar.hpp"
#include "cvarplan/solver_ev.hpp"
#include "cvarplan/solver_worst.hpp"
#include "oracles.hpp"

using namespace cvarplan;

namespace {

// A solution whose rows are constants: handy for checking the inner
// maximiser against hand-solved instances.
CvarSolution constant_solution(const Mdp& mdp, const YGrid& grid,
                               const std::vector<double>& constants) {
    CvarSolution sol;
    sol.grid = grid;
    for (StateId s = 0; s < mdp.n_states(); ++s) {
        sol.values.push_back(std::vector<double>(
            static_cast<size_t>(grid.size()), constants[static_cast<size_t>(s)]));
    }
    sol.rebuild_envelope_cache();
    return sol;
}

struct DeskSolve {
    Mdp mdp = build_desk_instance();
    WorstCaseSolution worst;
    CvarSolution sol;

    DeskSolve() {
        worst = solve_worst_case(mdp);
        sol = cvar_value_iteration(mdp, YGrid::build(), worst);
    }
};

const DeskSolve& desk_solve() {
    static const DeskSolve instance;
    return instance;
}

}  // namespace

TEST_SUITE("solver-cvar") {

TEST_CASE("ygrid construction") {
    const YGrid tiny = YGrid::build(3, 0.1);
    REQUIRE(tiny.size() == 3);
    CHECK(tiny.at(0) == 0.0);
    CHECK(tiny.at(1) == doctest::Approx(0.1));
    CHECK(tiny.at(2) == 1.0);

    const YGrid full = YGrid::build(30, 1e-3);
    REQUIRE(full.size() == 30);
    CHECK(full.at(0) == 0.0);
    CHECK(full.at(1) == doctest::Approx(1e-3));
    CHECK(full.points.back() == 1.0);
    for (int j = 1; j < full.size(); ++j) {
        CHECK(full.at(j) > full.at(j - 1));
    }

    CHECK_THROWS_AS(YGrid::build(2, 0.1), ValidationError);
    CHECK_THROWS_AS(YGrid::build(10, 0.0), ValidationError);
    CHECK_THROWS_AS(YGrid::build(10, 1.0), ValidationError);

    CHECK(tiny.bracket(0.0) == 0);
    CHECK(tiny.bracket(0.05) == 0);
    CHECK(tiny.bracket(0.1) == 1);
    CHECK(tiny.bracket(0.5) == 1);
    CHECK(tiny.bracket(1.0) == 2);
}

TEST_CASE("inner maximiser: budget one forces the identity perturbation") {
    const Mdp desk = build_desk_instance();
    const YGrid grid = YGrid::build(8, 1e-2);
    // Constant continuations 8 at s1, 10 at s2.
    const CvarSolution sol =
        constant_solution(desk, grid, {0.0, 8.0, 10.0, 7.0, 20.0, 0.0});
    const StateId s0 = desk.state_index("s0");

    const InnerSolution inner = inner_adversary_max(desk, sol, s0, 1.0, 0);
    CHECK(inner.value == doctest::Approx(0.85 * 8.0 + 0.15 * 10.0));
    REQUIRE(inner.response.xi.size() == 2);
    CHECK(inner.response.xi[0] == doctest::Approx(1.0));
    CHECK(inner.response.xi[1] == doctest::Approx(1.0));
}

TEST_CASE("inner maximiser: small budgets pile onto the costliest branch") {
    const Mdp desk = build_desk_instance();
    const YGrid grid = YGrid::build(8, 1e-2);
    const CvarSolution sol =
        constant_solution(desk, grid, {0.0, 8.0, 10.0, 7.0, 20.0, 0.0});
    const StateId s0 = desk.state_index("s0");

    // (s0, a): successors s1 (p 0.85, value 8) and s2 (p 0.15, value 10).
    const InnerSolution inner = inner_adversary_max(desk, sol, s0, 0.1, 0);
    CHECK(inner.value == doctest::Approx(10.0));
    CHECK(inner.response.xi[0] == doctest::Approx(0.0));
    CHECK(inner.response.xi[1] == doctest::Approx(1.0 / 0.15));
    CHECK(response_feasible(desk, s0, 0.1, 0, inner.response));
}

TEST_CASE("inner maximiser: two even successors at half budget") {
    Mdp mdp;
    const StateId a = mdp.add_state("a");
    const StateId lo = mdp.add_state("lo");
    const StateId hi = mdp.add_state("hi");
    const StateId g = mdp.add_state("g", true);
    mdp.initial = a;
    mdp.add_action(a, "x", 0.0, {{lo, 0.5}, {hi, 0.5}});
    mdp.add_action(lo, "z", 0.0, {{g, 1.0}});
    mdp.add_action(hi, "o", 1.0, {{g, 1.0}});

    const YGrid grid = YGrid::build(6, 1e-2);
    const CvarSolution sol = constant_solution(mdp, grid, {0.0, 0.0, 1.0, 0.0});
    const InnerSolution inner = inner_adversary_max(mdp, sol, a, 0.5, 0);
    CHECK(inner.value == doctest::Approx(1.0));
    CHECK(inner.response.xi[0] == doctest::Approx(0.0));
    CHECK(inner.response.xi[1] == doctest::Approx(2.0));
}

TEST_CASE("greedy and simplex agree everywhere on the converged desk table") {
    const DeskSolve& desk = desk_solve();
    for (StateId s = 0; s < desk.mdp.n_states(); ++s) {
        if (desk.mdp.is_goal(s)) {
            continue;
        }
        for (int j = 1; j < desk.sol.grid.size(); ++j) {
            for (size_t a = 0; a < desk.mdp.actions_at(s).size(); ++a) {
                const double y = desk.sol.grid.at(j);
                const InnerSolution greedy = inner_adversary_max(
                    desk.mdp, desk.sol, s, y, static_cast<int>(a));
                const InnerSolution lp = inner_adversary_max(
                    desk.mdp, desk.sol, s, y, static_cast<int>(a),
                    InnerSolver::kSimplex);
                REQUIRE(std::abs(greedy.value - lp.value) <= 1e-9);
                CHECK(response_feasible(desk.mdp, s, y, static_cast<int>(a),
                                        greedy.response));
                CHECK(response_feasible(desk.mdp, s, y, static_cast<int>(a),
                                        lp.response));
            }
        }
    }
}

TEST_CASE("value iteration through the simplex path matches the greedy path") {
    const Mdp desk = build_desk_instance();
    const WorstCaseSolution worst = solve_worst_case(desk);
    const YGrid grid = YGrid::build(12, 1e-2);
    const CvarSolution greedy = cvar_value_iteration(desk, grid, worst);
    const CvarSolution lp =
        cvar_value_iteration(desk, grid, worst, 1e-6, 100000, InnerSolver::kSimplex);
    for (StateId s = 0; s < desk.n_states(); ++s) {
        for (int j = 0; j < grid.size(); ++j) {
            REQUIRE(std::abs(greedy.value_at(s, j) - lp.value_at(s, j)) <= 1e-7);
        }
    }
}

TEST_CASE("boundary rows: worst case at y=0, expectation at y=1") {
    const DeskSolve& desk = desk_solve();
    const ValueTable ev = solve_expected_value(desk.mdp);
    const int last = desk.sol.grid.size() - 1;
    for (StateId s = 0; s < desk.mdp.n_states(); ++s) {
        if (desk.mdp.is_goal(s)) {
            continue;
        }
        CHECK(desk.sol.value_at(s, 0) == desk.worst.value(s));  // pinned exactly
        CHECK(std::abs(desk.sol.value_at(s, last) -
                       ev.values[static_cast<size_t>(s)]) <= 1e-3);
    }
}

TEST_CASE("values are nonincreasing in y and y*V is concave along the grid") {
    const DeskSolve& desk = desk_solve();
    const YGrid& grid = desk.sol.grid;
    for (StateId s = 0; s < desk.mdp.n_states(); ++s) {
        const auto& row = desk.sol.values[static_cast<size_t>(s)];
        for (int j = 2; j < grid.size(); ++j) {
            CHECK(row[static_cast<size_t>(j)] <=
                  row[static_cast<size_t>(j - 1)] + 1e-9);
        }
        // Concavity of w(y) = y * V(s, y) at the knots.
        for (int j = 1; j + 1 < grid.size(); ++j) {
            const double w0 = grid.at(j - 1) * row[static_cast<size_t>(j - 1)];
            const double w1 = grid.at(j) * row[static_cast<size_t>(j)];
            const double w2 = grid.at(j + 1) * row[static_cast<size_t>(j + 1)];
            const double left = (w1 - w0) / (grid.at(j) - grid.at(j - 1));
            const double right = (w2 - w1) / (grid.at(j + 1) - grid.at(j));
            CHECK(right <= left + 1e-6);
        }
    }
}

TEST_CASE("desk instance: solver CVaR matches the enumeration oracle") {
    const DeskSolve& desk = desk_solve();
    for (double alpha : {0.05, 0.1, 0.3, 1.0}) {
        const auto oracle = testing::best_policy_lexicographic(desk.mdp, alpha, 10);
        const double solved = query_value(desk.sol, desk.mdp.initial, alpha);
        CHECK(std::abs(solved - oracle.cvar) <= 0.1);
    }
    CHECK(query_value(desk.sol, desk.mdp.initial, 0.1) == doctest::Approx(10.0).epsilon(0.01));
}

TEST_CASE("query_value interpolates between knots and is exact on them") {
    const DeskSolve& desk = desk_solve();
    const StateId s0 = desk.mdp.initial;
    const YGrid& grid = desk.sol.grid;
    for (int j = 0; j < grid.size(); ++j) {
        CHECK(query_value(desk.sol, s0, grid.at(j)) ==
              doctest::Approx(desk.sol.value_at(s0, j)).epsilon(1e-12));
    }
    for (int j = 1; j + 1 < grid.size(); ++j) {
        const double y = 0.5 * (grid.at(j) + grid.at(j + 1));
        const double v = query_value(desk.sol, s0, y);
        const double lo = std::min(desk.sol.value_at(s0, j), desk.sol.value_at(s0, j + 1));
        const double hi = std::max(desk.sol.value_at(s0, j), desk.sol.value_at(s0, j + 1));
        CHECK(v >= lo - 1e-9);
        CHECK(v <= hi + 1e-9);
    }
    // Below the smallest positive knot the limit stays under the worst case.
    const double near_zero = query_value(desk.sol, s0, grid.at(1) / 2.0);
    CHECK(near_zero <= desk.worst.value(s0) + 1e-9);

    CHECK_THROWS_AS(query_value(desk.sol, s0, -0.5), ExecutionError);
    CHECK_THROWS_AS(query_value(desk.sol, s0, 1.5), ExecutionError);
}

TEST_CASE("greedy actions: worst-case at exhausted budget, single actions pass through") {
    const DeskSolve& desk = desk_solve();
    const StateId s0 = desk.mdp.state_index("s0");
    const StateId s1 = desk.mdp.state_index("s1");
    CHECK(cvar_greedy_action(desk.mdp, desk.sol, s1, 0.0) ==
          desk.mdp.action_index(s1, "e"));
    CHECK(cvar_greedy_action(desk.mdp, desk.sol, s0, 0.1) == 0);
    CHECK(cvar_greedy_action(desk.mdp, desk.sol, desk.mdp.state_index("g"), 0.5) ==
          kNoAction);
}

TEST_CASE("adversary walk matches the maximising perturbation structure") {
    // Expand the full execution tree of the solved game, multiplying the
    // adversary's perturbation along each history. Histories costing more
    // than the VaR must carry a factor of about 1/alpha; histories strictly
    // cheaper must be crushed to nothing.
    const DeskSolve& desk = desk_solve();
    for (double alpha : {0.1, 0.3}) {
        struct Leaf {
            double cost;
            double probability;
            double xi_product;
        };
        std::vector<Leaf> leaves;
        const std::function<void(StateId, double, double, double, double)> walk =
            [&](StateId s, double y, double cost, double probability,
                double xi_product) {
                if (desk.mdp.is_goal(s)) {
                    leaves.push_back({cost, probability, xi_product});
                    return;
                }
                const int a = cvar_greedy_action(desk.mdp, desk.sol, s, y);
                const MdpAction& action = desk.mdp.action(s, a);
                if (y > 0.0) {
                    const InnerSolution inner =
                        inner_adversary_max(desk.mdp, desk.sol, s, y, a);
                    for (size_t k = 0; k < action.successors.size(); ++k) {
                        const Successor& succ = action.successors[k];
                        const double xi = inner.response.xi[k];
                        walk(succ.state, std::min(y * xi, 1.0), cost + action.cost,
                             probability * succ.probability, xi_product * xi);
                    }
                } else {
                    // Exhausted budget: the adversary forces the worst branch.
                    size_t worst_k = 0;
                    for (size_t k = 1; k < action.successors.size(); ++k) {
                        if (desk.sol.value_at(action.successors[k].state, 0) >
                            desk.sol.value_at(action.successors[worst_k].state, 0)) {
                            worst_k = k;
                        }
                    }
                    for (size_t k = 0; k < action.successors.size(); ++k) {
                        const Successor& succ = action.successors[k];
                        const double xi =
                            k == worst_k ? 1.0 / succ.probability : 0.0;
                        walk(succ.state, 0.0, cost + action.cost,
                             probability * succ.probability, xi_product * xi);
                    }
                }
            };
        walk(desk.mdp.initial, alpha, 0.0, 1.0, 1.0);

        // The policy's cost distribution under the real transition kernel
        // gives the VaR of the executed strategy.
        std::vector<DiscreteDistribution::Atom> atoms;
        for (const Leaf& leaf : leaves) {
            atoms.push_back({leaf.cost, leaf.probability});
        }
        const auto dist = DiscreteDistribution::from_atoms(std::move(atoms));
        const double var = value_at_risk(dist, alpha);

        double perturbed_mass = 0.0;
        for (const Leaf& leaf : leaves) {
            perturbed_mass += leaf.probability * leaf.xi_product;
            if (leaf.cost < var - 1e-6) {
                CHECK(leaf.xi_product <= 0.05);
            }
            if (leaf.cost > var + 1e-6) {
                CHECK(leaf.xi_product ==
                      doctest::Approx(1.0 / alpha).epsilon(0.05));
            }
        }
        CHECK(perturbed_mass == doctest::Approx(1.0).epsilon(1e-6));
    }
}

TEST_CASE("betting game: never betting is optimal at alpha 0.02") {
    const Mdp betting = build_betting_game();
    const WorstCaseSolution worst = solve_worst_case(betting);
    const CvarSolution sol = cvar_value_iteration(betting, YGrid::build(), worst);

    CHECK(std::abs(query_value(sol, betting.initial, 0.02) - 95.0) <= 0.5);
    CHECK(cvar_greedy_action(betting, sol, betting.initial, 0.02) ==
          betting.action_index(betting.initial, "bet0"));

    // At y=1 the game value collapses to the plain expectation.
    const ValueTable ev = solve_expected_value(betting);
    const int last = sol.grid.size() - 1;
    for (StateId s = 0; s < betting.n_states(); ++s) {
        if (!betting.is_goal(s)) {
            CHECK(std::abs(sol.value_at(s, last) -
                           ev.values[static_cast<size_t>(s)]) <= 1e-3);
        }
    }
}

}  // TEST_SUITE
