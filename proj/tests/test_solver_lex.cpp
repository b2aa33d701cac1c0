#include <cmath>
#include <deque>
#include <map>
#include <set>

#include <doctest.h>

#include "cvarplan/domains.hpp"
#include "cvarplan/errors.hpp"
#include "cvarplan/solver_cvar.hpp"
#include "cvarplan/solver_ev.hpp"
#include "cvarplan/solver_lex.hpp"
#include "cvarplan/solver_worst.hpp"

using namespace cvarplan;

namespace {

struct DeskLex {
    Mdp mdp = build_desk_instance();
    WorstCaseSolution worst;
    CvarSolution cvar;
    VarEstimate var;
    LexSolution lex;

    DeskLex() {
        worst = solve_worst_case(mdp);
        cvar = cvar_value_iteration(mdp, YGrid::build(), worst);
        var = estimate_var(mdp, cvar, 0.1, 10000, RandomSource(7));
        lex = solve_constrained_ev(mdp, worst, var, CostGrid::uniform(var.value, 100));
    }
};

const DeskLex& desk_lex() {
    static const DeskLex instance;
    return instance;
}

// Exhaustive reachability sweep over the augmented cells visited by the
// returned policy, tracking exact accumulated costs.
void check_policy_closure(const Mdp& mdp, const LexSolution& lex) {
    std::set<std::pair<StateId, long>> visited;  // cost keyed at 1e-9 resolution
    std::deque<std::pair<StateId, double>> queue{{mdp.initial, 0.0}};
    while (!queue.empty()) {
        const auto [s, c] = queue.front();
        queue.pop_front();
        if (mdp.is_goal(s)) {
            continue;
        }
        const long key = static_cast<long>(std::llround(c * 1e9));
        if (!visited.insert({s, key}).second) {
            continue;
        }
        REQUIRE_FALSE(enabled_actions(mdp, s, c, lex).empty());
        const int a = lex_policy_action(mdp, lex, s, c);
        const MdpAction& action = mdp.action(s, a);
        for (const Successor& succ : action.successors) {
            queue.push_back({succ.state, c + action.cost});
        }
    }
}

}  // namespace

TEST_SUITE("solver-lex") {

TEST_CASE("cost grids: uniform endpoints and exact integer knots") {
    const CostGrid uniform = CostGrid::uniform(10.0, 100);
    REQUIRE(uniform.size() == 100);
    CHECK(uniform.at(0) == 0.0);
    CHECK(uniform.points.back() == 10.0);

    const CostGrid exact = CostGrid::exact_integer(10.0);
    REQUIRE(exact.size() == 11);
    CHECK(exact.at(3) == 3.0);

    const CostGrid fractional = CostGrid::exact_integer(9.5);
    CHECK(fractional.points.back() == 9.5);
    CHECK(fractional.at(9) == 9.0);
}

TEST_CASE("var estimate: desk instance lands exactly on the 0.9 quantile") {
    const DeskLex& desk = desk_lex();
    CHECK(desk.var.value == 10.0);
    CHECK(desk.var.alpha == 0.1);
    CHECK(desk.var.episodes == 10000);

    // Under the upper convention the same sample gives the same answer here.
    const VarEstimate upper = estimate_var(desk.mdp, desk.cvar, 0.1, 10000,
                                           RandomSource(7), VarConvention::kUpper);
    CHECK(upper.value == 10.0);

    // At alpha = 1 the lower convention returns the smallest observed cost.
    const VarEstimate full = estimate_var(desk.mdp, desk.cvar, 1.0, 2000,
                                          RandomSource(7));
    CHECK(full.value == doctest::Approx(0.0));

    // The optional margin backs off one distinct sample step.
    const VarEstimate margin = estimate_var(desk.mdp, desk.cvar, 0.1, 10000,
                                            RandomSource(7), VarConvention::kLower,
                                            /*margin=*/true);
    CHECK(margin.value == 8.0);
}

TEST_CASE("var estimate: betting at alpha 0.02 is degenerate at 95") {
    const Mdp betting = build_betting_game();
    const WorstCaseSolution worst = solve_worst_case(betting);
    const CvarSolution cvar = cvar_value_iteration(betting, YGrid::build(), worst);
    const VarEstimate var = estimate_var(betting, cvar, 0.02, 2000, RandomSource(3));
    CHECK(var.value == 95.0);
}

TEST_CASE("enabled actions follow the worst-case budget rule") {
    const DeskLex& desk = desk_lex();
    const StateId s1 = desk.mdp.state_index("s1");
    const int e = desk.mdp.action_index(s1, "e");
    const int d = desk.mdp.action_index(s1, "d");

    const auto at_zero = enabled_actions(desk.mdp, s1, 0.0, desk.worst, 10.0);
    CHECK(at_zero == std::vector<int>{e, d});  // c excluded: 0 + 20 > 10

    const auto at_mid = enabled_actions(desk.mdp, s1, 1.5, desk.worst, 10.0);
    CHECK(at_mid == std::vector<int>{e});  // 1.5 + 9 > 10

    // At c = var only zero-worst-case actions survive; the desk has none.
    CHECK(enabled_actions(desk.mdp, s1, 10.0, desk.worst, 10.0).empty());

    Mdp free_exit;
    const StateId a = free_exit.add_state("a");
    const StateId g = free_exit.add_state("g", true);
    free_exit.initial = a;
    free_exit.add_action(a, "out", 0.0, {{g, 1.0}});
    free_exit.add_action(a, "pay", 1.0, {{g, 1.0}});
    const WorstCaseSolution free_worst = solve_worst_case(free_exit);
    CHECK(enabled_actions(free_exit, a, 5.0, free_worst, 5.0) == std::vector<int>{0});
}

TEST_CASE("constrained value iteration reproduces the desk oracle") {
    const DeskLex& desk = desk_lex();
    CHECK(desk.lex.root_feasible);
    CHECK(desk.lex.values[static_cast<size_t>(desk.mdp.initial)][0] ==
          doctest::Approx(3.795).epsilon(1e-9));

    const StateId s1 = desk.mdp.state_index("s1");
    CHECK(lex_policy_action(desk.mdp, desk.lex, s1, 0.0) ==
          desk.mdp.action_index(s1, "d"));
    CHECK(lex_policy_action(desk.mdp, desk.lex, s1, 1.5) ==
          desk.mdp.action_index(s1, "e"));
    CHECK(lex_policy_action(desk.mdp, desk.lex, desk.mdp.state_index("g"), 3.0) ==
          kNoAction);
    CHECK_THROWS_AS(lex_policy_action(desk.mdp, desk.lex, s1, 11.0), ExecutionError);
}

TEST_CASE("conservatism ordering against the other solvers") {
    const DeskLex& desk = desk_lex();
    const ValueTable ev = solve_expected_value(desk.mdp);
    const double root = desk.lex.values[static_cast<size_t>(desk.mdp.initial)][0];
    CHECK(root <= desk.worst.value(desk.mdp.initial) + 1e-9);
    CHECK(root >= ev.values[static_cast<size_t>(desk.mdp.initial)] - 1e-9);
}

TEST_CASE("binding var on a pruned model recovers the worst-case policy") {
    Mdp chain;
    const StateId a = chain.add_state("a");
    const StateId b = chain.add_state("b");
    const StateId g = chain.add_state("g", true);
    chain.initial = a;
    chain.add_action(a, "risky", 1.0, {{g, 0.5}, {b, 0.5}});  // q_worst = 1 + 3
    chain.add_action(a, "safe", 2.0, {{b, 1.0}});             // q_worst = 2 + 3
    chain.add_action(b, "step", 3.0, {{g, 1.0}});

    const WorstCaseSolution worst = solve_worst_case(chain);
    REQUIRE(worst.value(a) == doctest::Approx(4.0));

    VarEstimate var;
    var.value = worst.value(a);
    var.alpha = 0.02;
    var.episodes = 1;
    const LexSolution lex =
        solve_constrained_ev(chain, worst, var, CostGrid::uniform(var.value, 50));
    CHECK(lex.root_feasible);
    // safe is pruned (2 + 3 > 4); the only surviving root action is the
    // worst-case one.
    CHECK(lex_policy_action(chain, lex, a, 0.0) ==
          worst.policy[static_cast<size_t>(a)]);
    check_policy_closure(chain, lex);
}

TEST_CASE("a var below the worst-case optimum leaves the root infeasible") {
    const DeskLex& desk = desk_lex();
    VarEstimate tight;
    tight.value = 9.0;  // v_worst(s0) = 10
    tight.alpha = 0.1;
    tight.episodes = 1;
    const LexSolution lex = solve_constrained_ev(desk.mdp, desk.worst, tight,
                                                 CostGrid::uniform(9.0, 100));
    CHECK_FALSE(lex.root_feasible);
    CHECK(std::isinf(lex.values[static_cast<size_t>(desk.mdp.initial)][0]));

    // Cells the switch rule can actually enter stay feasible and finite.
    const StateId s1 = desk.mdp.state_index("s1");
    CHECK(std::isfinite(lex.values[static_cast<size_t>(s1)][0]));
    CHECK(lex_policy_action(desk.mdp, lex, s1, 0.0) ==
          desk.mdp.action_index(s1, "d"));

    // The float-edge fallback hands back the worst-case action where nothing
    // is enabled.
    const StateId s2 = desk.mdp.state_index("s2");
    CHECK(lex_policy_action(desk.mdp, lex, s2, 0.0) ==
          desk.worst.policy[static_cast<size_t>(s2)]);
}

TEST_CASE("policy closure keeps an enabled action at every reachable cell") {
    const DeskLex& desk = desk_lex();
    check_policy_closure(desk.mdp, desk.lex);

    const Mdp betting = build_betting_game();
    const WorstCaseSolution worst = solve_worst_case(betting);
    const CvarSolution cvar = cvar_value_iteration(betting, YGrid::build(), worst);
    const VarEstimate var = estimate_var(betting, cvar, 0.02, 2000, RandomSource(3));
    const LexSolution lex =
        solve_constrained_ev(betting, worst, var, CostGrid::uniform(var.value, 100));
    CHECK(lex.root_feasible);  // var = 95 = v_worst(initial)
    check_policy_closure(betting, lex);
}

TEST_CASE("values are nondecreasing in the accumulated cost") {
    const DeskLex& desk = desk_lex();
    for (StateId s = 0; s < desk.mdp.n_states(); ++s) {
        const auto& row = desk.lex.values[static_cast<size_t>(s)];
        for (size_t k = 1; k < row.size(); ++k) {
            if (std::isfinite(row[k]) && std::isfinite(row[k - 1])) {
                CHECK(row[k] >= row[k - 1] - 1e-9);
            }
        }
    }
}

TEST_CASE("exact integer cost axis agrees with the interpolated axis") {
    const DeskLex& desk = desk_lex();
    const LexSolution exact = solve_constrained_ev(
        desk.mdp, desk.worst, desk.var, CostGrid::exact_integer(desk.var.value));
    CHECK(exact.values[static_cast<size_t>(desk.mdp.initial)][0] ==
          doctest::Approx(desk.lex.values[static_cast<size_t>(desk.mdp.initial)][0])
              .epsilon(1e-9));

    const StateId s1 = desk.mdp.state_index("s1");
    for (double c : {0.0, 1.0, 1.5, 2.0}) {
        CHECK(lex_policy_action(desk.mdp, exact, s1, c) ==
              lex_policy_action(desk.mdp, desk.lex, s1, c));
    }
}

TEST_CASE("doubling the cost grid moves the root value by under one percent") {
    const DeskLex& desk = desk_lex();
    const LexSolution fine = solve_constrained_ev(
        desk.mdp, desk.worst, desk.var, CostGrid::uniform(desk.var.value, 200));
    const double coarse_root =
        desk.lex.values[static_cast<size_t>(desk.mdp.initial)][0];
    const double fine_root = fine.values[static_cast<size_t>(desk.mdp.initial)][0];
    CHECK(std::abs(fine_root - coarse_root) <= 0.01 * std::abs(coarse_root));
}

}  // TEST_SUITE
