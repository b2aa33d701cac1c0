#include <algorithm>
#include <string>

#include <doctest.h>

#include "cvarplan/domains.hpp"
#include "cvarplan/errors.hpp"
#include "cvarplan/mdp.hpp"
#include "cvarplan/rng.hpp"
#include "oracles.hpp"

using namespace cvarplan;

namespace {

// Deterministic three-step chain used by several solver edge cases.
Mdp chain_mdp() {
    Mdp mdp;
    const StateId a = mdp.add_state("a");
    const StateId b = mdp.add_state("b");
    const StateId c = mdp.add_state("c");
    const StateId g = mdp.add_state("g", true);
    mdp.initial = a;
    mdp.add_action(a, "step", 1.0, {{b, 1.0}});
    mdp.add_action(b, "step", 1.0, {{c, 1.0}});
    mdp.add_action(c, "step", 1.0, {{g, 1.0}});
    return mdp;
}

StationaryPolicy desk_policy(const Mdp& desk, const std::string& s1_action) {
    StationaryPolicy policy(static_cast<size_t>(desk.n_states()), kNoAction);
    for (StateId s = 0; s < desk.n_states(); ++s) {
        if (!desk.is_goal(s)) {
            policy[static_cast<size_t>(s)] = 0;
        }
    }
    const StateId s1 = desk.state_index("s1");
    policy[static_cast<size_t>(s1)] = desk.action_index(s1, s1_action);
    return policy;
}

}  // namespace

TEST_SUITE("mdp-core") {

TEST_CASE("validator accepts the generated domains") {
    CHECK(validate_mdp(build_desk_instance()).ok());
    CHECK(validate_mdp(build_betting_game()).ok());
    CHECK(validate_mdp(chain_mdp()).ok());
}

TEST_CASE("validator flags a row sum violation") {
    Mdp mdp;
    const StateId a = mdp.add_state("a");
    const StateId g = mdp.add_state("g", true);
    mdp.initial = a;
    mdp.add_action(a, "x", 1.0, {{g, 0.99}});
    const ValidationReport report = validate_mdp(mdp);
    CHECK_FALSE(report.ok());
    CHECK(report.joined().find("row sum") != std::string::npos);
}

TEST_CASE("validator flags an unreachable goal") {
    Mdp mdp;
    const StateId a = mdp.add_state("a");
    const StateId b = mdp.add_state("b");
    mdp.add_state("g", true);
    mdp.initial = a;
    mdp.add_action(a, "loop", 1.0, {{b, 1.0}});
    mdp.add_action(b, "loop", 1.0, {{a, 1.0}});
    const ValidationReport report = validate_mdp(mdp);
    CHECK_FALSE(report.ok());
    CHECK(report.joined().find("goal unreachable") != std::string::npos);
}

TEST_CASE("validator flags negative costs, bad goals and orphan states") {
    Mdp mdp;
    const StateId a = mdp.add_state("a");
    const StateId b = mdp.add_state("b");
    const StateId g = mdp.add_state("g", true);
    mdp.initial = a;
    mdp.add_action(a, "x", -1.0, {{g, 1.0}});
    mdp.add_action(g, "leak", 0.0, {{b, 1.0}});
    const std::string joined = validate_mdp(mdp).joined();
    CHECK(joined.find("negative cost") != std::string::npos);
    CHECK(joined.find("not absorbing") != std::string::npos);
    CHECK(joined.find("has no action") != std::string::npos);  // b
}

TEST_CASE("cumulative cost sums step costs and rejects impossible paths") {
    const Mdp desk = build_desk_instance();
    const StateId s0 = desk.state_index("s0");
    const StateId s1 = desk.state_index("s1");
    const StateId s2 = desk.state_index("s2");
    const StateId s3 = desk.state_index("s3");
    const StateId g = desk.state_index("g");

    CHECK(cumulative_cost(desk, History{{}, g}) == 0.0);

    History via_s2;
    via_s2.steps = {{s0, desk.action_index(s0, "a")}, {s2, desk.action_index(s2, "f")}};
    via_s2.final_state = g;
    CHECK(cumulative_cost(desk, via_s2) == doctest::Approx(10.0));

    History via_s3;
    via_s3.steps = {{s0, desk.action_index(s0, "a")},
                    {s1, desk.action_index(s1, "d")},
                    {s3, 0}};
    via_s3.final_state = g;
    CHECK(cumulative_cost(desk, via_s3) == doctest::Approx(9.0));

    History impossible;
    impossible.steps = {{s0, desk.action_index(s0, "a")}};
    impossible.final_state = s3;  // not a successor of (s0, a)
    CHECK_THROWS_AS(cumulative_cost(desk, impossible), ExecutionError);
}

TEST_CASE("sampling is reproducible and matches the law of large numbers") {
    const Mdp desk = build_desk_instance();
    const StateId s0 = desk.state_index("s0");
    const StateId s2 = desk.state_index("s2");
    const RandomSource random(42);

    int s2_hits = 0;
    for (int i = 0; i < 100000; ++i) {
        Rng rng = random.episode_stream(static_cast<std::uint64_t>(i));
        if (sample_transition(desk, s0, 0, rng) == s2) {
            ++s2_hits;
        }
    }
    CHECK(std::abs(s2_hits / 100000.0 - 0.15) < 0.01);

    // Identical streams, identical draws, independent of order.
    Rng first = random.episode_stream(17);
    Rng second = random.episode_stream(17);
    for (int i = 0; i < 50; ++i) {
        CHECK(sample_transition(desk, s0, 0, first) ==
              sample_transition(desk, s0, 0, second));
    }

    Rng rng = random.episode_stream(0);
    CHECK_THROWS_AS(sample_transition(desk, s0, 5, rng), ExecutionError);
}

TEST_CASE("goal self-loops sample to the same state") {
    Mdp mdp;
    const StateId a = mdp.add_state("a");
    const StateId g = mdp.add_state("g", true);
    mdp.initial = a;
    mdp.add_action(a, "x", 1.0, {{g, 1.0}});
    mdp.add_action(g, "stay", 0.0, {{g, 1.0}});
    CHECK(validate_mdp(mdp).ok());
    Rng rng = RandomSource(1).episode_stream(0);
    CHECK(sample_transition(mdp, g, 0, rng) == g);
}

TEST_CASE("outcome enumeration reproduces the desk instance distributions") {
    const Mdp desk = build_desk_instance();

    const auto dist_e = enumerate_outcome_distribution(desk, desk_policy(desk, "e"), 10);
    REQUIRE(dist_e.atoms.size() == 2);
    CHECK(dist_e.atoms[0].value == doctest::Approx(8.0));
    CHECK(dist_e.atoms[0].probability == doctest::Approx(0.85));
    CHECK(dist_e.atoms[1].value == doctest::Approx(10.0));
    CHECK(dist_e.atoms[1].probability == doctest::Approx(0.15));

    const auto dist_d = enumerate_outcome_distribution(desk, desk_policy(desk, "d"), 10);
    REQUIRE(dist_d.atoms.size() == 3);
    CHECK(dist_d.atoms[0].value == doctest::Approx(2.0));
    CHECK(dist_d.atoms[0].probability == doctest::Approx(0.765));
    CHECK(dist_d.atoms[1].value == doctest::Approx(9.0));
    CHECK(dist_d.atoms[1].probability == doctest::Approx(0.085));
    CHECK(dist_d.atoms[2].value == doctest::Approx(10.0));
    CHECK(dist_d.atoms[2].probability == doctest::Approx(0.15));

    const auto dist_c = enumerate_outcome_distribution(desk, desk_policy(desk, "c"), 10);
    REQUIRE(dist_c.atoms.size() == 3);
    CHECK(dist_c.atoms[0].value == doctest::Approx(0.0));
    CHECK(dist_c.atoms[0].probability == doctest::Approx(0.765));
    CHECK(dist_c.atoms[1].value == doctest::Approx(10.0));
    CHECK(dist_c.atoms[1].probability == doctest::Approx(0.15));
    CHECK(dist_c.atoms[2].value == doctest::Approx(20.0));
    CHECK(dist_c.atoms[2].probability == doctest::Approx(0.085));

    CHECK(dist_c.total_mass() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("outcome enumeration guards horizon shortfalls and blowups") {
    const Mdp desk = build_desk_instance();
    CHECK_THROWS_AS(enumerate_outcome_distribution(desk, desk_policy(desk, "e"), 1),
                    SolveError);

    const Mdp betting = build_betting_game();
    StationaryPolicy bet_max(static_cast<size_t>(betting.n_states()), kNoAction);
    for (StateId s = 0; s < betting.n_states(); ++s) {
        if (!betting.is_goal(s)) {
            bet_max[static_cast<size_t>(s)] =
                static_cast<int>(betting.actions_at(s).size()) - 1;
        }
    }
    CHECK_THROWS_AS(enumerate_outcome_distribution(betting, bet_max, 11, 1000),
                    SolveError);
}

TEST_CASE("desk oracle: cvar ranking of the three stationary policies") {
    const Mdp desk = build_desk_instance();
    const StateId s1 = desk.state_index("s1");

    double cvar_by_action[3] = {};
    for (const char* name : {"e", "d", "c"}) {
        const auto dist =
            enumerate_outcome_distribution(desk, desk_policy(desk, name), 10);
        cvar_by_action[desk.action_index(s1, name)] =
            cvar_of_distribution(dist, 0.1).cvar;
    }
    CHECK(cvar_by_action[desk.action_index(s1, "e")] == doctest::Approx(10.0));
    CHECK(cvar_by_action[desk.action_index(s1, "d")] == doctest::Approx(10.0));
    CHECK(cvar_by_action[desk.action_index(s1, "c")] == doctest::Approx(18.5));

    const auto best = testing::best_policy_lexicographic(desk, 0.1, 10);
    CHECK(best.cvar == doctest::Approx(10.0));
    CHECK(best.mean == doctest::Approx(3.795));
    CHECK(best.policy[static_cast<size_t>(s1)] == desk.action_index(s1, "d"));
}

}  // TEST_SUITE
