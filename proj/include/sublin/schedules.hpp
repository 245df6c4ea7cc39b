#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sublin/logutil.hpp"

namespace sublin {

// t_j = sqrt(2 loglog j); equals sqrt(2) for every j <= e^e.
double t_of(double j);

// d_n = sqrt(2 n loglog n) = sqrt(n) * t_n.
double d_of(double n);

// Truncation levels b_j = alpha_j sqrt(j) / t_j with alpha_j = t_j^(-q),
// forced nondecreasing by a running maximum.  The constraints are
// alpha_j -> 0, b_j up to infinity and alpha_j^(1-p) t_j^(-2) -> 0, which
// for this rule reduce to q > 0 and q (p - 1) < 2.  Defaults: p = 3,
// q = 1/2, making alpha^(1-p) t^(-2) = 1/t_j.
class TruncationSchedule {
public:
    explicit TruncationSchedule(double p = 3.0, double alpha_q = 0.5);

    double p() const { return p_; }
    double alpha_q() const { return alpha_q_; }

    double alpha(std::uint64_t j) const;
    double raw_b(std::uint64_t j) const;

    // running-maximum-enforced b_j; sequential access is O(1) amortised
    double b(std::uint64_t j) const;

    std::string rule_name() const;

private:
    double p_;
    double alpha_q_;
    mutable std::vector<double> b_cache_; // b_cache_[j-1] = b_j
};

struct BlockSchedule {
    double lambda = 2.0;
    std::uint64_t horizon = 0;
    // deduplicated, strictly increasing n_k = floor(lambda^k), clipped at the
    // horizon; block k is {boundaries[k]+1, ..., boundaries[k+1]}
    std::vector<std::uint64_t> boundaries;
};

// n_k = floor(lambda^k) deduplicated; the blocks partition (n_1, N].
BlockSchedule blocks(double lambda, std::uint64_t horizon);

} // namespace sublin
