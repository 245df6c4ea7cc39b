#include "sublin/schedules.hpp"

#include <cmath>
#include <stdexcept>

namespace sublin {

double t_of(double j) {
    if (!(j >= 1.0)) throw std::invalid_argument("t_of: index must be >= 1");
    return std::sqrt(2.0 * loglog_c(j));
}

double d_of(double n) {
    if (!(n >= 1.0)) throw std::invalid_argument("d_of: index must be >= 1");
    return std::sqrt(2.0 * n * loglog_c(n));
}

TruncationSchedule::TruncationSchedule(double p, double alpha_q)
    : p_(p), alpha_q_(alpha_q) {
    if (!(p_ > 2.0)) throw std::invalid_argument("schedule: p must be > 2");
    if (!(alpha_q_ > 0.0)) throw std::invalid_argument("schedule: alpha exponent must be > 0");
    if (!(alpha_q_ * (p_ - 1.0) < 2.0))
        throw std::invalid_argument(
            "schedule: alpha rule violates alpha^(1-p) t^(-2) -> 0 (need q(p-1) < 2)");
}

double TruncationSchedule::alpha(std::uint64_t j) const {
    return std::pow(t_of(static_cast<double>(j)), -alpha_q_);
}

double TruncationSchedule::raw_b(std::uint64_t j) const {
    const double t = t_of(static_cast<double>(j));
    return std::pow(t, -alpha_q_) * std::sqrt(static_cast<double>(j)) / t;
}

double TruncationSchedule::b(std::uint64_t j) const {
    if (j < 1) throw std::invalid_argument("schedule: index must be >= 1");
    if (b_cache_.size() < j) {
        if (b_cache_.capacity() < j) b_cache_.reserve(std::max<std::size_t>(j, 2 * b_cache_.capacity()));
        double running = b_cache_.empty() ? 0.0 : b_cache_.back();
        for (std::uint64_t i = b_cache_.size() + 1; i <= j; ++i) {
            running = std::fmax(running, raw_b(i));
            b_cache_.push_back(running);
        }
    }
    return b_cache_[j - 1];
}

std::string TruncationSchedule::rule_name() const {
    return "alpha_j = t_j^(-" + std::to_string(alpha_q_) + ")";
}

BlockSchedule blocks(double lambda, std::uint64_t horizon) {
    if (!(lambda > 1.0)) throw std::invalid_argument("blocks: lambda must be > 1");
    if (horizon < 2) throw std::invalid_argument("blocks: horizon must be >= 2");
    BlockSchedule out;
    out.lambda = lambda;
    out.horizon = horizon;
    double power = lambda;
    while (true) {
        const std::uint64_t nk = static_cast<std::uint64_t>(std::floor(power));
        if (nk >= horizon) break;
        if (out.boundaries.empty() || nk > out.boundaries.back())
            out.boundaries.push_back(nk);
        power *= lambda;
        if (!std::isfinite(power)) break;
    }
    out.boundaries.push_back(horizon); // final block clipped at the horizon
    return out;
}

} // namespace sublin
