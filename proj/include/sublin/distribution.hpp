#pragma once

#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "sublin/random.hpp"

namespace sublin {

using RealFn = std::function<double(double)>;

// Thrown when an integral diverges without a representable sign
// (positive and negative parts both infinite).
class non_integrable_error : public std::runtime_error {
public:
    explicit non_integrable_error(const std::string& what)
        : std::runtime_error(what) {}
};

struct Atom {
    double value;
    double probability;
};

// Finite-support law with exact moments.  Construction sorts the atoms,
// merges duplicates, drops zero-probability atoms and renormalises; the
// probabilities must be nonnegative and sum to 1 within 1e-12.
class DiscreteDistribution {
public:
    explicit DiscreteDistribution(std::vector<Atom> atoms);

    const std::vector<Atom>& atoms() const { return atoms_; }
    double min_value() const { return atoms_.front().value; }
    double max_value() const { return atoms_.back().value; }

private:
    std::vector<Atom> atoms_;
};

struct Gaussian {
    double mean;
    double variance; // > 0
};

// Symmetric power-law tail: P(|X| > u) = min(1, (u/scale)^-a), symmetric
// about 0, so |X| >= scale almost surely.
struct SymmetricPareto {
    double tail_index; // a > 0
    double scale;      // > 0
};

struct ScaledRademacher {
    double magnitude; // > 0; values +-magnitude with probability 1/2 each
};

struct ParametricDistribution {
    std::variant<Gaussian, SymmetricPareto, ScaledRademacher> kind;
};

// One single-draw probability law: exactly one of {discrete, parametric}.
class Distribution {
public:
    Distribution(DiscreteDistribution d) : law_(std::move(d)) {}
    Distribution(ParametricDistribution p);
    Distribution(Gaussian g) : Distribution(ParametricDistribution{g}) {}
    Distribution(SymmetricPareto p) : Distribution(ParametricDistribution{p}) {}
    Distribution(ScaledRademacher r) : Distribution(ParametricDistribution{r}) {}

    bool is_discrete() const {
        return std::holds_alternative<DiscreteDistribution>(law_);
    }
    const DiscreteDistribution* discrete() const {
        return std::get_if<DiscreteDistribution>(&law_);
    }
    const ParametricDistribution* parametric() const {
        return std::get_if<ParametricDistribution>(&law_);
    }
    const Gaussian* gaussian() const;
    const SymmetricPareto* pareto() const;
    const ScaledRademacher* rademacher() const;

    // Atom list when the law is finitely supported (discrete laws and
    // Rademacher); enables exact threshold enumeration downstream.
    std::optional<std::vector<Atom>> atom_view() const;

    double cdf(double x) const;                      // P(X <= x)
    double prob_ge(double t, bool strict) const;     // P(X >= t) / P(X > t)
    double prob_abs_ge(double t, bool strict) const; // P(|X| >= t) / P(|X| > t)
    // P(X < t) evaluated directly (not via 1 - P(X >= t), which loses the
    // far lower tail to cancellation)
    double prob_lt(double t) const;

    double sample_one(RandomStream& stream) const;

    std::string describe() const;

private:
    std::variant<DiscreteDistribution, ParametricDistribution> law_;
};

// E[phi(X)] with absolute error <= tol for parametric laws, exact for
// discrete ones.  Returns +-infinity for integrals that diverge with a
// definite sign; throws non_integrable_error otherwise.
double expect(const Distribution& dist, const RealFn& phi, double tol);

// E[(|X| ^ c)^k] with ^ = min; always finite.
double truncated_moment(const Distribution& dist, int k, double c);

// Same with a real exponent p >= 1 (used by the series diagnostics, where
// the exponent is a real p > 2).
double truncated_abs_moment(const Distribution& dist, double p, double c);

// n independent draws, bit-reproducible given the stream's seed pair.
std::vector<double> sample(const Distribution& dist, RandomStream& stream,
                           std::size_t n);

} // namespace sublin
