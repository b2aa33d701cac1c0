#pragma once

#include <optional>
#include <string>

#include "cvarplan/mdp.hpp"
#include "cvarplan/solver_cvar.hpp"
#include "cvarplan/solver_ev.hpp"
#include "cvarplan/solver_lex.hpp"

namespace cvarplan {

// The three execution strategies compared by the evaluation harness.
//   kExpectedValue:     greedy on the expected-value table.
//   kCvarWorstCase:     the game policy with budget tracking; once the budget
//                       hits zero it follows the worst-case row.
//   kCvarExpectedValue: identical until the adversary assigns the realised
//                       successor a zero perturbation, then switches
//                       permanently to the constrained expected-value policy.
enum class Strategy { kExpectedValue, kCvarWorstCase, kCvarExpectedValue };

std::string strategy_name(Strategy strategy);
std::optional<Strategy> parse_strategy(const std::string& name);

struct SolutionBundle {
    const ValueTable* ev = nullptr;
    const CvarSolution* cvar = nullptr;
    const LexSolution* lex = nullptr;
    double alpha = 0.0;  // execution confidence level for the CVaR strategies
};

struct EpisodeRecord {
    double total_cost = 0.0;
    bool switched = false;
    int switch_step = -1;  // transitions completed when the switch happened
    double final_y = 0.0;
    int steps = 0;
};

struct ExecParams {
    double xi_tol = 1e-6;       // "zero perturbation" threshold of the switch rule
    long step_limit = 1000000;  // episode abort guard
};

// Runs one episode. Enforces the runtime contracts: adversary responses must
// be feasible within 1e-9, the residual budget must stay in [0, 1 + 1e-6],
// and a switched episode must finish within the VaR plus tolerance; any
// violation throws ExecutionError.
EpisodeRecord execute_episode(const Mdp& mdp, Strategy strategy,
                              const SolutionBundle& solutions, Rng& rng,
                              const ExecParams& params = {});

}  // namespace cvarplan
