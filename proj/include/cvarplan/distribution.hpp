#pragma once

#include <vector>

namespace cvarplan {

// Quantile convention for value at risk. Lower: min{z | F(z) >= 1 - alpha}.
// Upper: min{z | F(z) > 1 - alpha}. Lower is the default throughout.
enum class VarConvention { kLower, kUpper };

struct VarCvar {
    double var = 0.0;
    double cvar = 0.0;
};

// Shared probability tolerance: row sums and distribution masses must match 1
// within this; any negative probability is rejected outright.
constexpr double kProbTol = 1e-9;

// Finite distribution over real outcomes. Atoms are kept sorted ascending by
// value with values within 1e-12 of each other merged, so the CVaR
// calculators stay exact.
struct DiscreteDistribution {
    struct Atom {
        double value = 0.0;
        double probability = 0.0;
    };

    std::vector<Atom> atoms;

    // Sorts, merges near-equal values and checks that probabilities lie in
    // [0, 1] and sum to 1 within 1e-9. Throws ValidationError otherwise.
    static DiscreteDistribution from_atoms(std::vector<Atom> atoms);

    bool empty() const { return atoms.empty(); }
    double mean() const;
    double min_value() const;
    double max_value() const;
    double total_mass() const;
};

constexpr double kAtomMergeTolerance = 1e-12;

// VaR at confidence alpha in (0, 1] under the chosen convention.
double value_at_risk(const DiscreteDistribution& dist, double alpha,
                     VarConvention convention = VarConvention::kLower);

// CVaR by exact evaluation of the tail integral (1/alpha) * int_0^alpha
// VaR_u du, which for a discrete distribution is tail averaging with
// fractional splitting of the boundary atom. Throws on an empty distribution
// or alpha outside (0, 1].
VarCvar cvar_of_distribution(const DiscreteDistribution& dist, double alpha,
                             VarConvention convention = VarConvention::kLower);

// CVaR via the dual representation: maximise the xi-weighted expectation over
// the risk envelope {0 <= xi <= 1/alpha, sum xi * p = 1}. The exact maximiser
// assigns xi = 1/alpha to atoms in descending value order until the perturbed
// mass reaches 1, with a fractional xi on the boundary atom. Independent
// arithmetic route from cvar_of_distribution; the two agree to 1e-9.
double cvar_dual(const DiscreteDistribution& dist, double alpha);

}  // namespace cvarplan
