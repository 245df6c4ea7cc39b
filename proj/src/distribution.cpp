#include "sublin/distribution.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "sublin/quadrature.hpp"

namespace sublin {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

double normal_tail(double z) { return 0.5 * std::erfc(z / std::sqrt(2.0)); }

} // namespace

DiscreteDistribution::DiscreteDistribution(std::vector<Atom> atoms)
    : atoms_(std::move(atoms)) {
    if (atoms_.empty())
        throw std::invalid_argument("discrete law needs at least one atom");
    double total = 0.0;
    for (const Atom& a : atoms_) {
        if (!(a.probability >= 0.0))
            throw std::invalid_argument("atom probability must be >= 0");
        if (!std::isfinite(a.value))
            throw std::invalid_argument("atom value must be finite");
        total += a.probability;
    }
    if (std::fabs(total - 1.0) > 1e-12)
        throw std::invalid_argument("atom probabilities must sum to 1 (within 1e-12)");
    std::sort(atoms_.begin(), atoms_.end(),
              [](const Atom& x, const Atom& y) { return x.value < y.value; });
    std::vector<Atom> merged;
    for (const Atom& a : atoms_) {
        if (a.probability == 0.0) continue;
        if (!merged.empty() && merged.back().value == a.value)
            merged.back().probability += a.probability;
        else
            merged.push_back(a);
    }
    if (merged.empty())
        throw std::invalid_argument("discrete law has no atom with positive mass");
    for (Atom& a : merged) a.probability /= total;
    atoms_ = std::move(merged);
}

Distribution::Distribution(ParametricDistribution p) : law_(std::move(p)) {
    if (const Gaussian* g = gaussian()) {
        if (!(g->variance > 0.0))
            throw std::invalid_argument("Gaussian variance must be > 0");
        if (!std::isfinite(g->mean))
            throw std::invalid_argument("Gaussian mean must be finite");
    } else if (const SymmetricPareto* sp = pareto()) {
        if (!(sp->tail_index > 0.0))
            throw std::invalid_argument("Pareto tail index must be > 0");
        if (!(sp->scale > 0.0))
            throw std::invalid_argument("Pareto scale must be > 0");
    } else if (const ScaledRademacher* r = rademacher()) {
        if (!(r->magnitude > 0.0))
            throw std::invalid_argument("Rademacher magnitude must be > 0");
    }
}

const Gaussian* Distribution::gaussian() const {
    if (const auto* p = parametric()) return std::get_if<Gaussian>(&p->kind);
    return nullptr;
}

const SymmetricPareto* Distribution::pareto() const {
    if (const auto* p = parametric()) return std::get_if<SymmetricPareto>(&p->kind);
    return nullptr;
}

const ScaledRademacher* Distribution::rademacher() const {
    if (const auto* p = parametric()) return std::get_if<ScaledRademacher>(&p->kind);
    return nullptr;
}

std::optional<std::vector<Atom>> Distribution::atom_view() const {
    if (const DiscreteDistribution* d = discrete()) return d->atoms();
    if (const ScaledRademacher* r = rademacher())
        return std::vector<Atom>{{-r->magnitude, 0.5}, {r->magnitude, 0.5}};
    return std::nullopt;
}

double Distribution::cdf(double x) const {
    if (auto atoms = atom_view()) {
        double acc = 0.0;
        for (const Atom& a : *atoms)
            if (a.value <= x) acc += a.probability;
        return acc;
    }
    if (const Gaussian* g = gaussian())
        return normal_cdf((x - g->mean) / std::sqrt(g->variance));
    const SymmetricPareto& sp = *pareto();
    if (x <= -sp.scale) return 0.5 * std::pow(-x / sp.scale, -sp.tail_index);
    if (x < sp.scale) return 0.5;
    return 1.0 - 0.5 * std::pow(x / sp.scale, -sp.tail_index);
}

double Distribution::prob_ge(double t, bool strict) const {
    if (auto atoms = atom_view()) {
        double acc = 0.0;
        for (const Atom& a : *atoms)
            if (strict ? a.value > t : a.value >= t) acc += a.probability;
        return acc;
    }
    // atomless laws: >= and > coincide
    if (const Gaussian* g = gaussian())
        return normal_tail((t - g->mean) / std::sqrt(g->variance));
    const SymmetricPareto& sp = *pareto();
    if (t <= -sp.scale) return 1.0 - 0.5 * std::pow(-t / sp.scale, -sp.tail_index);
    if (t <= sp.scale) return 0.5;
    return 0.5 * std::pow(t / sp.scale, -sp.tail_index);
}

double Distribution::prob_lt(double t) const {
    if (auto atoms = atom_view()) {
        double acc = 0.0;
        for (const Atom& a : *atoms)
            if (a.value < t) acc += a.probability;
        return acc;
    }
    if (const Gaussian* g = gaussian())
        return normal_cdf((t - g->mean) / std::sqrt(g->variance));
    const SymmetricPareto& sp = *pareto();
    if (t <= -sp.scale) return 0.5 * std::pow(-t / sp.scale, -sp.tail_index);
    if (t <= sp.scale) return 0.5;
    return 1.0 - 0.5 * std::pow(t / sp.scale, -sp.tail_index);
}

double Distribution::prob_abs_ge(double t, bool strict) const {
    if (t <= 0.0) {
        if (t < 0.0) return 1.0;
        // t == 0: |X| >= 0 always; |X| > 0 misses an atom at 0
        if (!strict) return 1.0;
        if (auto atoms = atom_view()) {
            double at_zero = 0.0;
            for (const Atom& a : *atoms)
                if (a.value == 0.0) at_zero += a.probability;
            return 1.0 - at_zero;
        }
        return 1.0;
    }
    if (auto atoms = atom_view()) {
        double acc = 0.0;
        for (const Atom& a : *atoms)
            if (strict ? std::fabs(a.value) > t : std::fabs(a.value) >= t)
                acc += a.probability;
        return acc;
    }
    if (const Gaussian* g = gaussian()) {
        const double sd = std::sqrt(g->variance);
        return normal_tail((t - g->mean) / sd) + normal_cdf((-t - g->mean) / sd);
    }
    const SymmetricPareto& sp = *pareto();
    return std::fmin(1.0, std::pow(t / sp.scale, -sp.tail_index));
}

double Distribution::sample_one(RandomStream& stream) const {
    if (const DiscreteDistribution* d = discrete()) {
        const double u = stream.uniform();
        double cum = 0.0;
        for (const Atom& a : d->atoms()) {
            cum += a.probability;
            if (u < cum) return a.value;
        }
        return d->atoms().back().value;
    }
    if (const ScaledRademacher* r = rademacher())
        return stream.uniform() < 0.5 ? -r->magnitude : r->magnitude;
    if (const Gaussian* g = gaussian()) {
        // Box-Muller, cosine branch only: two uniforms per draw, no state
        const double u1 = stream.uniform_pos();
        const double u2 = stream.uniform();
        const double z = std::sqrt(-2.0 * std::log(u1)) *
                         std::cos(2.0 * 3.14159265358979323846 * u2);
        return g->mean + std::sqrt(g->variance) * z;
    }
    const SymmetricPareto& sp = *pareto();
    const double u = stream.uniform();
    const double sign = u < 0.5 ? -1.0 : 1.0;
    const double v = std::fabs(2.0 * u - 1.0); // uniform in [0,1)
    return sign * sp.scale * std::pow(1.0 - v, -1.0 / sp.tail_index);
}

std::string Distribution::describe() const {
    std::ostringstream os;
    if (const DiscreteDistribution* d = discrete()) {
        os << "discrete{";
        for (std::size_t i = 0; i < d->atoms().size(); ++i) {
            if (i) os << ",";
            os << "(" << d->atoms()[i].value << "," << d->atoms()[i].probability
               << ")";
        }
        os << "}";
    } else if (const Gaussian* g = gaussian()) {
        os << "gaussian(" << g->mean << "," << g->variance << ")";
    } else if (const SymmetricPareto* sp = pareto()) {
        os << "pareto(a=" << sp->tail_index << ",scale=" << sp->scale << ")";
    } else if (const ScaledRademacher* r = rademacher()) {
        os << "rademacher(" << r->magnitude << ")";
    }
    return os.str();
}

namespace {

// E[phi(X)] for a Gaussian law.  The density kills polynomial growth, so a
// wide core plus vanishing shells always settles.
double expect_gaussian(const Gaussian& g, const RealFn& phi, double tol) {
    const double sd = std::sqrt(g.variance);
    const auto integrand = [&](double x) {
        const double z = (x - g.mean) / sd;
        return phi(x) * std::exp(-0.5 * z * z) / (sd * std::sqrt(2.0 * 3.14159265358979323846));
    };
    const double core = 8.0 * sd;
    QuadratureResult base =
        integrate(integrand, g.mean - core, g.mean + core, tol * 0.5);
    double value = base.value;
    // extend both flanks until two consecutive shells are negligible
    for (int side = 0; side < 2; ++side) {
        double lo = core;
        int small = 0;
        for (int m = 0; m < 60 && small < 2; ++m) {
            const double hi = lo * 1.5;
            const double a = side == 0 ? g.mean + lo : g.mean - hi;
            const double b = side == 0 ? g.mean + hi : g.mean - lo;
            const QuadratureResult shell = integrate(integrand, a, b, tol * 0.05);
            value += shell.value;
            small = std::fabs(shell.value) < tol * 0.1 ? small + 1 : 0;
            lo = hi;
        }
    }
    return value;
}

double expect_pareto(const SymmetricPareto& sp, const RealFn& phi, double tol) {
    const double a = sp.tail_index;
    const double s = sp.scale;
    const double coef = 0.5 * a * std::pow(s, a);
    // one-sided densities of X on {x > s} and {x < -s}
    const auto upper = [&](double u) { return phi(u) * coef * std::pow(u, -a - 1.0); };
    const auto lower = [&](double u) { return phi(-u) * coef * std::pow(u, -a - 1.0); };

    const TailResult up = integrate_tail(upper, s, 2.0, tol * 0.5);
    const TailResult down = integrate_tail(lower, s, 2.0, tol * 0.5);

    if (up.divergent || down.divergent) {
        const int pos = up.divergent ? up.sign : 0;
        const int neg = down.divergent ? down.sign : 0;
        if (up.divergent && down.divergent) {
            if (pos == neg && pos != 0) return pos > 0 ? kInf : -kInf;
            throw non_integrable_error(
                "integral diverges with opposite signs in the two tails");
        }
        const int sgn = up.divergent ? pos : neg;
        if (sgn == 0)
            throw non_integrable_error("divergent integral with indefinite sign");
        return sgn > 0 ? kInf : -kInf;
    }
    if (!up.converged || !down.converged)
        throw std::runtime_error(
            "tail integration exhausted its shell budget without settling");
    return up.value + down.value;
}

} // namespace

double expect(const Distribution& dist, const RealFn& phi, double tol) {
    if (!(tol > 0.0)) throw std::invalid_argument("expect: tol must be > 0");
    if (auto atoms = dist.atom_view()) {
        double acc = 0.0;
        for (const Atom& a : *atoms) acc += a.probability * phi(a.value);
        return acc;
    }
    if (const Gaussian* g = dist.gaussian()) return expect_gaussian(*g, phi, tol);
    return expect_pareto(*dist.pareto(), phi, tol);
}

double truncated_abs_moment(const Distribution& dist, double p, double c) {
    if (!(c > 0.0)) throw std::invalid_argument("truncated moment: c must be > 0");
    if (!(p >= 1.0)) throw std::invalid_argument("truncated moment: p must be >= 1");
    if (auto atoms = dist.atom_view()) {
        double acc = 0.0;
        for (const Atom& a : *atoms)
            acc += a.probability * std::pow(std::fmin(std::fabs(a.value), c), p);
        return acc;
    }
    if (const SymmetricPareto* sp = dist.pareto()) {
        // E[(|X| ^ c)^p] = int_0^c p u^(p-1) P(|X|>u) du, exact piecewise
        const double a = sp->tail_index;
        const double s = sp->scale;
        if (c <= s) return std::pow(c, p); // |X| >= s almost surely
        const double head = std::pow(s, p);
        double tail;
        if (std::fabs(p - a) < 1e-13) {
            tail = p * std::pow(s, p) * std::log(c / s);
        } else {
            tail = p * std::pow(s, a) * (std::pow(c, p - a) - std::pow(s, p - a)) /
                   (p - a);
        }
        return head + tail;
    }
    const auto phi = [p, c](double x) {
        return std::pow(std::fmin(std::fabs(x), c), p);
    };
    return expect(dist, phi, 1e-10);
}

double truncated_moment(const Distribution& dist, int k, double c) {
    if (k < 1) throw std::invalid_argument("truncated moment: k must be >= 1");
    return truncated_abs_moment(dist, static_cast<double>(k), c);
}

std::vector<double> sample(const Distribution& dist, RandomStream& stream,
                           std::size_t n) {
    std::vector<double> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) out.push_back(dist.sample_one(stream));
    return out;
}

} // namespace sublin
