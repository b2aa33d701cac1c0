#include <cmath>

#include <doctest.h>

#include "cvarplan/domains.hpp"
#include "cvarplan/errors.hpp"
#include "cvarplan/solver_ev.hpp"
#include "cvarplan/solver_worst.hpp"

using namespace cvarplan;

TEST_SUITE("solver-ev") {

TEST_CASE("desk instance: mean-optimal value and greedy choice") {
    const Mdp desk = build_desk_instance();
    const ValueTable table = solve_expected_value(desk);

    CHECK(table.values[static_cast<size_t>(desk.initial)] ==
          doctest::Approx(3.2).epsilon(1e-6));
    const StateId s1 = desk.state_index("s1");
    CHECK(table.policy[static_cast<size_t>(s1)] == desk.action_index(s1, "c"));
    CHECK(table.values[static_cast<size_t>(desk.state_index("g"))] == 0.0);
}

TEST_CASE("deterministic chain sums its costs") {
    Mdp mdp;
    const StateId a = mdp.add_state("a");
    const StateId b = mdp.add_state("b");
    const StateId c = mdp.add_state("c");
    const StateId g = mdp.add_state("g", true);
    mdp.initial = a;
    mdp.add_action(a, "step", 1.0, {{b, 1.0}});
    mdp.add_action(b, "step", 1.0, {{c, 1.0}});
    mdp.add_action(c, "step", 1.0, {{g, 1.0}});

    const ValueTable table = solve_expected_value(mdp);
    CHECK(table.values[static_cast<size_t>(a)] == doctest::Approx(3.0));
}

TEST_CASE("an extra sweep after convergence moves nothing beyond epsilon") {
    const Mdp mdp = build_betting_game();
    const double epsilon = 1e-6;
    const ValueTable table = solve_expected_value(mdp, epsilon);

    // Re-apply one synchronous backup by hand and compare.
    for (StateId s = 0; s < mdp.n_states(); ++s) {
        if (mdp.is_goal(s)) {
            continue;
        }
        double best = std::numeric_limits<double>::infinity();
        for (const MdpAction& action : mdp.actions_at(s)) {
            double q = action.cost;
            for (const Successor& succ : action.successors) {
                q += succ.probability * table.values[static_cast<size_t>(succ.state)];
            }
            best = std::min(best, q);
        }
        CHECK(std::abs(best - table.values[static_cast<size_t>(s)]) <= epsilon);
    }
}

TEST_CASE("stage-indexed domains converge within horizon plus one sweeps") {
    const ValueTable betting = solve_expected_value(build_betting_game());
    CHECK(betting.sweeps <= 13);  // 10 stages + cashout + goal slack

    const ValueTable desk = solve_expected_value(build_desk_instance());
    CHECK(desk.sweeps <= 5);
}

TEST_CASE("expected values never exceed worst-case values") {
    for (const Mdp& mdp : {build_desk_instance(), build_betting_game()}) {
        const ValueTable ev = solve_expected_value(mdp);
        const WorstCaseSolution worst = solve_worst_case(mdp);
        for (StateId s = 0; s < mdp.n_states(); ++s) {
            CHECK(ev.values[static_cast<size_t>(s)] <= worst.value(s) + 1e-9);
        }
    }
}

TEST_CASE("improper models are reported, not looped forever") {
    Mdp mdp;
    const StateId a = mdp.add_state("a");
    const StateId b = mdp.add_state("b");
    mdp.add_state("g", true);
    mdp.initial = a;
    mdp.add_action(a, "swap", 1.0, {{b, 1.0}});
    mdp.add_action(b, "swap", 1.0, {{a, 1.0}});
    CHECK_THROWS_AS(solve_expected_value(mdp, 1e-6, 200), SolveError);
}

}  // TEST_SUITE
