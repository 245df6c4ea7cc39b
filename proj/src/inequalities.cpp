#include "sublin/inequalities.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "sublin/logutil.hpp"
#include "sublin/parallel.hpp"

namespace sublin {

ExpIneqInputs make_exp_ineq_inputs(const MeasureFamily& fam, std::uint64_t n,
                                   double x, double y, double p, double delta) {
    if (!(x > 0.0 && y > 0.0)) throw std::invalid_argument("need x > 0 and y > 0");
    if (!(p >= 2.0)) throw std::invalid_argument("need p >= 2");
    if (!(delta > 0.0 && delta <= 1.0)) throw std::invalid_argument("need delta in (0,1]");
    if (n == 0) throw std::invalid_argument("need n >= 1");

    ExpIneqInputs in;
    in.n = n;
    in.x = x;
    in.y = y;
    in.p = p;
    in.delta = delta;

    const double per_draw_A = upper_expect(fam, [y, p](double v) {
        return std::pow(std::fmin(std::fmax(v, 0.0), y), p);
    });
    in.A = static_cast<double>(n) * per_draw_A;

    // truncated second moment of min(X, y); the min is unbounded below, so
    // take the limit along the clamp grid
    const TruncationLimit b = breve_expect(
        fam,
        [y](double v) {
            const double m = std::fmin(v, y);
            return m * m;
        },
        default_c_grid(), 1e-9);
    if (!b.converged)
        throw std::invalid_argument(
            "truncated second moment of (X ^ y) does not settle on the grid");
    in.B_breve = static_cast<double>(n) * b.value;

    in.tail_term = static_cast<double>(n) *
                   capacity(fam, ThresholdEvent::gt(y)).upper;

    const TruncationLimit center =
        breve_expect(fam, [](double v) { return v; }, default_c_grid(), 1e-9);
    if (!center.converged)
        throw std::invalid_argument("truncated mean does not settle on the grid");
    in.center = center.value;
    return in;
}

BoundTerms exp_bound_simple(const ExpIneqInputs& in) {
    BoundTerms out;
    out.tail_term = in.tail_term;
    out.exponential_term =
        std::exp(-in.x * in.x / (2.0 * (in.x * in.y + in.B_breve)));
    out.total = out.tail_term + out.exponential_term;
    out.vacuous = out.total >= 1.0;
    return out;
}

BoundTerms exp_bound_refined(const ExpIneqInputs& in) {
    BoundTerms out;
    out.tail_term = in.tail_term;
    const double ratio = in.A / std::pow(in.y, in.p);
    const double exponent = in.delta * in.x / (10.0 * in.y);
    out.middle_term = 2.0 * std::exp(std::pow(in.p, in.p)) * std::pow(ratio, exponent);
    out.exponential_term =
        in.B_breve > 0.0
            ? std::exp(-in.x * in.x / (2.0 * in.B_breve * (1.0 + in.delta)))
            : 0.0;
    out.total = out.tail_term + out.middle_term + out.exponential_term;
    out.vacuous = !(out.total < 1.0);
    return out;
}

VerificationReport verify_exp_ineq(const MeasureFamily& fam,
                                   const std::vector<Policy>& policy_set,
                                   const ExpIneqInputs& inputs, std::size_t reps,
                                   const TrajectorySeeds& seeds, int workers) {
    VerificationReport report;
    report.name = "maximal-sum exponential bound";
    report.simple = exp_bound_simple(inputs);
    report.refined = exp_bound_refined(inputs);
    report.rhs_bound = std::fmin(report.simple.total, report.refined.total);
    report.repetitions = reps;
    report.master_seed = seeds.master;
    report.lhs_label = "lower bound of upper capacity (finite policy set)";
    for (const Policy& p : policy_set) report.policies.push_back(p.describe());

    const double x = inputs.x;
    const double center = inputs.center;
    const CapacityEstimate lhs = empirical_upper_capacity(
        fam,
        [x, center](const std::vector<double>& ys) {
            double s = 0.0;
            for (double y : ys) {
                s += y - center;
                if (s >= x) return true;
            }
            return false;
        },
        policy_set, reps, inputs.n, seeds, workers);
    report.lhs_estimate = lhs.estimate;
    report.lhs_stderr = lhs.stderr_;
    report.pass = report.lhs_estimate <= report.rhs_bound + 3.0 * report.lhs_stderr;
    return report;
}

VerificationReport verify_martingale_ineq(const MartingaleSpec& spec, double x,
                                          double y, std::size_t reps,
                                          const TrajectorySeeds& seeds,
                                          int workers) {
    if (!(spec.clamp_c > 0.0))
        throw std::invalid_argument("martingale clamp must be > 0");
    if (!(y >= 0.0) || !(x >= 0.0))
        throw std::invalid_argument("martingale check needs x, y >= 0");
    const double c = spec.clamp_c;
    // clamped draws must stay conditionally centered for every member the
    // policy may pick
    std::vector<double> cond2(spec.fam.size());
    for (std::size_t k = 0; k < spec.fam.size(); ++k) {
        const Distribution& d = spec.fam.member(k);
        const double m = expect(
            d, [c](double v) { return std::clamp(v, -c, c); },
            spec.fam.quadrature_tol());
        if (std::fabs(m) > 1e-8)
            throw std::invalid_argument(
                "clamped member mean is not 0; differences are not a "
                "martingale difference sequence");
        cond2[k] = truncated_moment(d, 2, c);
    }

    VerificationReport report;
    report.name = "bounded martingale exponential bound";
    report.repetitions = reps;
    report.master_seed = seeds.master;
    report.policies.push_back(spec.policy.describe());
    report.lhs_label = "empirical frequency of the joint stopping event";
    BoundTerms bound;
    bound.exponential_term = x > 0.0 ? std::exp(-x * x / (2.0 * (x * c + y))) : 1.0;
    bound.total = bound.exponential_term;
    bound.vacuous = bound.total >= 1.0;
    report.simple = bound;
    report.refined = bound;
    report.rhs_bound = bound.total;

    std::vector<unsigned char> hit(reps, 0);
    const MeasureFamily& fam = spec.fam;
    const Policy& policy = spec.policy;
    const std::uint64_t horizon = spec.horizon;
    parallel_for(reps, workers, [&](std::size_t rep) {
        TrajectorySeeds rep_seeds{seeds.master, seeds.config_tag, rep};
        // the clamped walk with its predictable conditional second moments;
        // stop scanning once the joint event is seen
        bool found = false;
        double s = 0.0, cond_sum = 0.0;
        stream_policy_draws(fam, policy, horizon, rep_seeds,
                            [&](std::size_t theta, double raw_y) {
                                if (found) return;
                                s += std::clamp(raw_y, -c, c);
                                cond_sum += cond2[theta];
                                if (s >= x && cond_sum <= y) found = true;
                            });
        hit[rep] = found ? 1 : 0;
    });
    std::uint64_t hits = 0;
    for (unsigned char h : hit) hits += h;
    report.lhs_estimate = static_cast<double>(hits) / static_cast<double>(reps);
    report.lhs_stderr = std::sqrt(report.lhs_estimate * (1.0 - report.lhs_estimate) /
                                  static_cast<double>(reps));
    report.pass =
        report.lhs_estimate <= report.rhs_bound + 3.0 * report.lhs_stderr;
    return report;
}

namespace {

SeriesClass classify_increments(const std::vector<double>& increments) {
    // trailing increments of zero mean the series has terminated
    const std::size_t m = increments.size();
    if (m < 4) return SeriesClass::Undecided;
    bool tail_zero = true;
    for (std::size_t i = m - 3; i < m; ++i)
        if (increments[i] > 1e-300) tail_zero = false;
    if (tail_zero) return SeriesClass::Convergent;

    std::vector<double> slopes;
    for (std::size_t i = 1; i < m; ++i) {
        if (increments[i] <= 0.0 || increments[i - 1] <= 0.0) continue;
        slopes.push_back(std::log2(increments[i] / increments[i - 1]));
    }
    if (slopes.size() < 3) return SeriesClass::Undecided;
    bool conv = true, div = true;
    for (std::size_t i = slopes.size() - 3; i < slopes.size(); ++i) {
        if (!(slopes[i] < -0.1)) conv = false;
        if (!(slopes[i] > -0.02)) div = false;
    }
    if (conv) return SeriesClass::Convergent;
    if (div && increments.back() > 1e-12) return SeriesClass::Divergent;
    return SeriesClass::Undecided;
}

// per-member truncated |X|^p moment with saturation: once the cutoff clears
// the member's effective support the value stops changing, so freeze it
class SaturatingMoment {
public:
    SaturatingMoment(const Distribution& d, double p) : d_(d), p_(p) {
        if (auto atoms = d.atom_view()) {
            double m = 0.0;
            for (const Atom& a : *atoms) m = std::fmax(m, std::fabs(a.value));
            saturation_ = m;
        } else if (const Gaussian* g = d.gaussian()) {
            saturation_ = std::fabs(g->mean) + 12.0 * std::sqrt(g->variance);
        } // Pareto: no saturation, closed form is cheap anyway
    }

    double operator()(double c) {
        if (saturation_ > 0.0 && c >= saturation_) {
            if (!have_full_) {
                full_ = truncated_abs_moment(d_, p_, saturation_);
                have_full_ = true;
            }
            return full_;
        }
        return truncated_abs_moment(d_, p_, c);
    }

private:
    const Distribution& d_;
    double p_;
    double saturation_ = 0.0;
    double full_ = 0.0;
    bool have_full_ = false;
};

} // namespace

std::string to_string(SeriesClass c) {
    switch (c) {
    case SeriesClass::Convergent: return "convergent";
    case SeriesClass::Divergent: return "divergent";
    case SeriesClass::Undecided: return "undecided";
    }
    return "?";
}

SeriesDiagnostic series_diagnostic(const MeasureFamily& fam, double delta,
                                   std::uint64_t n_max, double p) {
    if (!(delta > 0.0)) throw std::invalid_argument("delta must be > 0");
    if (!(p > 2.0)) throw std::invalid_argument("series exponent must be > 2");
    if (n_max < 2000) throw std::invalid_argument("series horizon too short");

    SeriesDiagnostic diag;
    diag.delta = delta;
    diag.p = p;

    std::vector<SaturatingMoment> moments;
    moments.reserve(fam.size());
    for (const Distribution& d : fam.members()) moments.emplace_back(d, p);

    // geometric checkpoints 1000, 2000, 4000, ... clipped at n_max
    std::vector<std::uint64_t> cps;
    for (std::uint64_t c = 1000; c < n_max; c *= 2) cps.push_back(c);
    cps.push_back(n_max);

    double sum_i = 0.0, sum_ii = 0.0;
    std::vector<double> inc_i, inc_ii;
    double block_i = 0.0, block_ii = 0.0;
    std::size_t cp_index = 0;
    for (std::uint64_t n = 1; n <= n_max; ++n) {
        const double nloglog = static_cast<double>(n) * loglog_c(static_cast<double>(n));
        const double threshold = delta * std::sqrt(nloglog);

        double term_i = 0.0;
        for (const Distribution& d : fam.members())
            term_i = std::fmax(term_i, d.prob_abs_ge(threshold, false));

        double term_ii = 0.0;
        for (SaturatingMoment& m : moments)
            term_ii = std::fmax(term_ii, m(threshold));
        term_ii /= std::pow(nloglog, p / 2.0);

        block_i += term_i;
        block_ii += term_ii;
        if (cp_index < cps.size() && n == cps[cp_index]) {
            sum_i += block_i;
            sum_ii += block_ii;
            diag.checkpoints.push_back(n);
            diag.partial_sums_i.push_back(sum_i);
            diag.partial_sums_ii.push_back(sum_ii);
            inc_i.push_back(block_i);
            inc_ii.push_back(block_ii);
            block_i = block_ii = 0.0;
            ++cp_index;
        }
    }
    // drop the first block (it absorbs the head of the series) before the
    // slope classification
    if (!inc_i.empty()) {
        inc_i.erase(inc_i.begin());
        inc_ii.erase(inc_ii.begin());
    }
    diag.class_i = classify_increments(inc_i);
    diag.class_ii = classify_increments(inc_ii);

    diag.companion = loglog_moment(fam, Side::Upper).verdict;
    const bool both_settled =
        diag.class_i != SeriesClass::Undecided &&
        diag.companion != ChoquetResult::Verdict::Boundary;
    if (both_settled) {
        diag.consistent =
            (diag.class_i == SeriesClass::Convergent &&
             diag.companion == ChoquetResult::Verdict::Finite) ||
            (diag.class_i == SeriesClass::Divergent &&
             diag.companion == ChoquetResult::Verdict::Infinite);
    } else {
        // neither side contradicts the other when one of them abstains
        diag.consistent = true;
    }
    return diag;
}

SmallOReport smallo_checks(const MeasureFamily& fam, double delta,
                           const std::vector<std::uint64_t>& grid) {
    if (!(delta > 0.0)) throw std::invalid_argument("delta must be > 0");
    if (grid.size() < 3)
        throw std::invalid_argument("small-o grid needs at least 3 points");
    SmallOReport report;
    report.grid = grid;

    const ChoquetResult moment = loglog_moment(fam, Side::Upper);
    if (moment.verdict != ChoquetResult::Verdict::Finite) {
        report.refused = true;
        report.reason =
            "hypothesis fails: the loglog-weighted second moment is " +
            to_string(moment.verdict);
        return report;
    }

    for (std::uint64_t n : grid) {
        const double ll = loglog_c(static_cast<double>(n));
        const double c2 = 2.0 * delta * static_cast<double>(n) * ll;
        double m2 = 0.0;
        for (const Distribution& d : fam.members())
            m2 = std::fmax(m2, truncated_abs_moment(d, 2.0, std::sqrt(c2)));
        report.ratio_second_moment.push_back(m2 / ll);

        const double a = delta * std::sqrt(2.0 * static_cast<double>(n) * ll);
        const TruncationLimit plus = breve_expect(
            fam,
            [a](double v) { return std::fmax(std::fabs(v) - a, 0.0); },
            default_c_grid(), 1e-10);
        report.ratio_plus_part.push_back(plus.value /
                                         std::sqrt(ll / static_cast<double>(n)));
    }

    const auto decreasing_tail = [](const std::vector<double>& v) {
        const std::size_t m = v.size();
        return v[m - 1] <= v[m - 2] && v[m - 2] <= v[m - 3];
    };
    report.pass = decreasing_tail(report.ratio_second_moment) &&
                  decreasing_tail(report.ratio_plus_part);
    return report;
}

BorelCantelliDiag borel_cantelli_diag(const std::vector<double>& capacities) {
    for (double v : capacities)
        if (!(v >= 0.0 && v <= 1.0))
            throw std::invalid_argument("capacities must lie in [0,1]");
    BorelCantelliDiag diag;
    // doubling blocks over the index range; a trailing partial block would
    // distort the slope test, so it is dropped
    std::vector<double> increments;
    std::size_t lo = 0, width = 8;
    while (lo + width <= capacities.size()) {
        double block = 0.0;
        for (std::size_t i = lo; i < lo + width; ++i) block += capacities[i];
        increments.push_back(block);
        lo += width;
        width *= 2;
    }
    diag.cls = classify_increments(increments);
    diag.sum_finite = diag.cls == SeriesClass::Convergent;
    switch (diag.cls) {
    case SeriesClass::Convergent:
        diag.implied_verdict = "summable: capacity of {events infinitely often} is 0";
        break;
    case SeriesClass::Divergent:
        diag.implied_verdict =
            "divergent: upper capacity of {events infinitely often} = 1 "
            "candidate (requires independence)";
        break;
    case SeriesClass::Undecided:
        diag.implied_verdict = "undecided";
        break;
    }
    return diag;
}

std::vector<VerificationConfig> shipped_verification_grid() {
    const Distribution rad1{ScaledRademacher{1.0}};
    const Distribution rad3{ScaledRademacher{3.0}};
    const Distribution gauss{Gaussian{0.0, 1.0}};

    std::vector<VerificationConfig> grid;
    grid.push_back({.name = "rademacher n=100 x=10 y=1",
                    .fam = MeasureFamily({rad1}),
                    .policy_set = {Policy::constant(0)},
                    .n = 100,
                    .x = 10.0,
                    .y = 1.0});
    grid.push_back({.name = "rademacher n=100 x=14 y=1",
                    .fam = MeasureFamily({rad1}),
                    .policy_set = {Policy::constant(0)},
                    .n = 100,
                    .x = 14.0,
                    .y = 1.0});
    grid.push_back({.name = "two-member rademacher n=100 x=30 y=3 greedy",
                    .fam = MeasureFamily({rad1, rad3}),
                    .policy_set = {Policy::constant(0), Policy::constant(1),
                                   Policy::greedy(true)},
                    .n = 100,
                    .x = 30.0,
                    .y = 3.0});
    grid.push_back({.name = "two-member rademacher n=100 x=45 y=3",
                    .fam = MeasureFamily({rad1, rad3}),
                    .policy_set = {Policy::constant(1), Policy::greedy(true)},
                    .n = 100,
                    .x = 45.0,
                    .y = 3.0});
    grid.push_back({.name = "gaussian n=100 x=25 y=4",
                    .fam = MeasureFamily({gauss}),
                    .policy_set = {Policy::constant(0)},
                    .n = 100,
                    .x = 25.0,
                    .y = 4.0});
    grid.push_back({.name = "martingale rademacher c=1 x=10 y=100",
                    .fam = MeasureFamily({rad1}),
                    .policy_set = {Policy::constant(0)},
                    .martingale = true,
                    .n = 100,
                    .x = 10.0,
                    .y = 100.0,
                    .clamp_c = 1.0});
    grid.push_back({.name = "martingale two-member c=3 x=24 y=450 greedy",
                    .fam = MeasureFamily({rad1, rad3}),
                    .policy_set = {Policy::greedy(true)},
                    .martingale = true,
                    .n = 100,
                    .x = 24.0,
                    .y = 450.0,
                    .clamp_c = 3.0});
    return grid;
}

} // namespace sublin
