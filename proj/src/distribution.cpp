#include "cvarplan/distribution.hpp"

#include <algorithm>
#include <cmath>

#include "cvarplan/errors.hpp"

namespace cvarplan {

DiscreteDistribution DiscreteDistribution::from_atoms(std::vector<Atom> atoms) {
    if (atoms.empty()) {
        throw ValidationError("distribution has no atoms");
    }
    double mass = 0.0;
    for (const Atom& a : atoms) {
        if (!(a.probability >= 0.0) || a.probability > 1.0 + kProbTol) {
            throw ValidationError("atom probability outside [0, 1]");
        }
        mass += a.probability;
    }
    if (std::abs(mass - 1.0) > kProbTol) {
        throw ValidationError("atom probabilities do not sum to 1");
    }
    std::sort(atoms.begin(), atoms.end(),
              [](const Atom& x, const Atom& y) { return x.value < y.value; });

    DiscreteDistribution dist;
    for (const Atom& a : atoms) {
        if (a.probability == 0.0) {
            continue;
        }
        if (!dist.atoms.empty() &&
            a.value - dist.atoms.back().value <= kAtomMergeTolerance) {
            dist.atoms.back().probability += a.probability;
        } else {
            dist.atoms.push_back(a);
        }
    }
    if (dist.atoms.empty()) {
        throw ValidationError("distribution has no atoms with positive mass");
    }
    return dist;
}

double DiscreteDistribution::mean() const {
    double m = 0.0;
    for (const Atom& a : atoms) {
        m += a.value * a.probability;
    }
    return m;
}

double DiscreteDistribution::min_value() const { return atoms.front().value; }

double DiscreteDistribution::max_value() const { return atoms.back().value; }

double DiscreteDistribution::total_mass() const {
    double m = 0.0;
    for (const Atom& a : atoms) {
        m += a.probability;
    }
    return m;
}

namespace {

void check_alpha(double alpha) {
    if (!(alpha > 0.0) || alpha > 1.0) {
        throw ValidationError("alpha must lie in (0, 1]");
    }
}

void check_nonempty(const DiscreteDistribution& dist) {
    if (dist.empty()) {
        throw ValidationError("empty distribution");
    }
}

}  // namespace

double value_at_risk(const DiscreteDistribution& dist, double alpha,
                     VarConvention convention) {
    check_nonempty(dist);
    check_alpha(alpha);
    const double threshold = 1.0 - alpha;
    double cdf = 0.0;
    for (const auto& atom : dist.atoms) {
        cdf += atom.probability;
        const bool reached = convention == VarConvention::kLower
                                 ? cdf >= threshold - kProbTol
                                 : cdf > threshold + kProbTol;
        if (reached) {
            return atom.value;
        }
    }
    return dist.atoms.back().value;
}

VarCvar cvar_of_distribution(const DiscreteDistribution& dist, double alpha,
                             VarConvention convention) {
    check_nonempty(dist);
    check_alpha(alpha);

    // Integrate the step function u -> VaR_u over u in (0, alpha]. Walking
    // atoms from the top, VaR_u equals atom k's value while u lies inside
    // that atom's tail-mass interval.
    double integral = 0.0;
    double tail_mass = 0.0;  // cumulative probability from the top
    for (auto it = dist.atoms.rbegin(); it != dist.atoms.rend(); ++it) {
        const double lo = tail_mass;
        tail_mass += it->probability;
        const double hi = std::min(tail_mass, alpha);
        if (hi > lo) {
            integral += it->value * (hi - lo);
        }
        if (tail_mass >= alpha) {
            break;
        }
    }
    // If the distribution mass falls epsilon short of alpha, treat the
    // remaining sliver as the lowest value (mass already validated to 1e-9).
    if (tail_mass < alpha) {
        integral += dist.atoms.front().value * (alpha - tail_mass);
    }
    return VarCvar{value_at_risk(dist, alpha, convention), integral / alpha};
}

double cvar_dual(const DiscreteDistribution& dist, double alpha) {
    check_nonempty(dist);
    check_alpha(alpha);

    const double xi_max = 1.0 / alpha;
    double perturbed_mass = 0.0;
    double expectation = 0.0;
    for (auto it = dist.atoms.rbegin(); it != dist.atoms.rend(); ++it) {
        double xi = xi_max;
        if (perturbed_mass + xi * it->probability > 1.0) {
            xi = (1.0 - perturbed_mass) / it->probability;  // boundary atom
        }
        if (xi <= 0.0) {
            break;
        }
        perturbed_mass += xi * it->probability;
        expectation += xi * it->probability * it->value;
        if (perturbed_mass >= 1.0) {
            break;
        }
    }
    if (perturbed_mass < 1.0 - kProbTol) {
        expectation += (1.0 - perturbed_mass) * dist.atoms.front().value;
    }
    return expectation;
}

}  // namespace cvarplan
