#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sublin/simulate.hpp"

namespace sublin {

// Ingredients of the exponential maximal inequalities for one configuration:
// per-draw upper expectations accumulated over n draws, plus the union-bound
// surrogate for the capacity that some draw exceeds y.
struct ExpIneqInputs {
    std::uint64_t n = 0;
    double x = 0.0;      // > 0
    double y = 0.0;      // > 0
    double p = 3.0;      // >= 2
    double delta = 1.0;  // in (0, 1]
    double A = 0.0;          // sum_i sup E[(X_i^+ ^ y)^p]
    double B_breve = 0.0;    // sum_i limit of sup E[clamp((X_i ^ y)^2, -c, c)]
    double tail_term = 0.0;  // n * capacity(X > y).upper, an over-approximation
    double center = 0.0;     // truncated-mean centering used by the event
};

ExpIneqInputs make_exp_ineq_inputs(const MeasureFamily& fam, std::uint64_t n,
                                   double x, double y, double p = 3.0,
                                   double delta = 1.0);

struct BoundTerms {
    double tail_term = 0.0;
    double middle_term = 0.0; // zero for the two-term bound
    double exponential_term = 0.0;
    double total = 0.0;
    bool vacuous = false; // total >= 1
};

// tail + exp{-x^2 / (2(xy + B))}
BoundTerms exp_bound_simple(const ExpIneqInputs& in);

// tail + 2 exp{p^p} (A / y^p)^(delta x / (10 y)) + exp{-x^2 / (2 B (1+delta))}
BoundTerms exp_bound_refined(const ExpIneqInputs& in);

struct VerificationReport {
    std::string name;
    double lhs_estimate = 0.0;
    double lhs_stderr = 0.0;
    BoundTerms simple;
    BoundTerms refined;
    double rhs_bound = 0.0; // min of the applicable totals
    bool pass = false;      // lhs <= rhs + 3 * stderr
    std::size_t repetitions = 0;
    std::vector<std::string> policies;
    std::uint64_t master_seed = 0;
    std::string lhs_label;
};

// Monte-Carlo check of the maximal-sum inequality: the empirical frequency
// of max_k sum_{i<=k} (X_i - center) >= x over the policy set must stay
// below both analytic bounds.
VerificationReport verify_exp_ineq(const MeasureFamily& fam,
                                   const std::vector<Policy>& policy_set,
                                   const ExpIneqInputs& inputs, std::size_t reps,
                                   const TrajectorySeeds& seeds, int workers = 1);

// Bounded-difference martingale specification: draws are clamped at +-c and
// must be conditionally centered (symmetric members guarantee it; validated).
struct MartingaleSpec {
    MeasureFamily fam;
    Policy policy;
    std::uint64_t horizon = 0;
    double clamp_c = 0.0;
};

// P(sum X_i >= x and sum E[X_i^2 | past] <= y for some n) vs
// exp{-x^2 / (2(xc + y))}.
VerificationReport verify_martingale_ineq(const MartingaleSpec& spec, double x,
                                          double y, std::size_t reps,
                                          const TrajectorySeeds& seeds,
                                          int workers = 1);

enum class SeriesClass { Convergent, Divergent, Undecided };

std::string to_string(SeriesClass c);

struct SeriesDiagnostic {
    double delta = 1.0;
    double p = 3.0;
    std::vector<std::uint64_t> checkpoints;
    std::vector<double> partial_sums_i;  // sum of tail capacities
    std::vector<double> partial_sums_ii; // truncated p-th moment series
    SeriesClass class_i = SeriesClass::Undecided;
    SeriesClass class_ii = SeriesClass::Undecided;
    ChoquetResult::Verdict companion;    // loglog-moment finiteness
    bool consistent = false;             // class_i matches the companion verdict
};

// Partial sums at geometric checkpoints with a tail-slope classification,
// cross-checked against the loglog-moment verdict.
SeriesDiagnostic series_diagnostic(const MeasureFamily& fam, double delta,
                                   std::uint64_t n_max, double p = 3.0);

struct SmallOReport {
    bool refused = false;
    std::string reason;
    std::vector<std::uint64_t> grid;
    std::vector<double> ratio_second_moment; // sup E[X^2 ^ (2 delta n loglog n)] / loglog n
    std::vector<double> ratio_plus_part;     // truncated mean of the excess over
                                             // delta sqrt(2 n loglog n), / sqrt(loglog n / n)
    bool pass = false; // both ratios decrease over the last three grid points
};

SmallOReport smallo_checks(const MeasureFamily& fam, double delta,
                           const std::vector<std::uint64_t>& grid);

struct BorelCantelliDiag {
    SeriesClass cls = SeriesClass::Undecided;
    bool sum_finite = false;
    std::string implied_verdict;
};

// Tail-slope classification of a per-index capacity sequence with the
// direct / converse Borel-Cantelli reading attached.
BorelCantelliDiag borel_cantelli_diag(const std::vector<double>& capacities);

// Shipped verification grid used by the default `verify-ineq` experiment and
// the acceptance checks; every entry must pass.
struct VerificationConfig {
    std::string name;
    MeasureFamily fam;
    std::vector<Policy> policy_set;
    bool martingale = false; // false: maximal-sum inequality
    std::uint64_t n = 0;
    double x = 0.0, y = 0.0, p = 3.0, delta = 1.0;
    double clamp_c = 0.0;   // martingale only
};

std::vector<VerificationConfig> shipped_verification_grid();

} // namespace sublin
