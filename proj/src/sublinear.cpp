#include "sublin/sublinear.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace sublin {

MeasureFamily::MeasureFamily(std::vector<Distribution> members,
                             double quadrature_tol)
    : members_(std::move(members)), quadrature_tol_(quadrature_tol) {
    if (members_.empty())
        throw std::invalid_argument("measure family needs at least one member");
    if (!(quadrature_tol_ > 0.0))
        throw std::invalid_argument("quadrature tolerance must be > 0");
}

double upper_expect(const MeasureFamily& fam, const RealFn& phi) {
    double best = -std::numeric_limits<double>::infinity();
    for (const Distribution& d : fam.members())
        best = std::fmax(best, expect(d, phi, fam.quadrature_tol()));
    return best;
}

double lower_expect(const MeasureFamily& fam, const RealFn& phi) {
    // conjugation is exact: IEEE addition is symmetric under global negation
    return -upper_expect(fam, [&phi](double x) { return -phi(x); });
}

std::vector<double> default_c_grid() {
    std::vector<double> grid;
    grid.reserve(41);
    for (int k = 0; k <= 40; ++k) grid.push_back(std::ldexp(1.0, k));
    return grid;
}

TruncationLimit breve_expect(const MeasureFamily& fam, const RealFn& phi,
                             const std::vector<double>& c_grid, double tol) {
    if (c_grid.size() < 3)
        throw std::invalid_argument("truncation grid needs at least 3 points");
    for (std::size_t i = 1; i < c_grid.size(); ++i)
        if (!(c_grid[i] > c_grid[i - 1]))
            throw std::invalid_argument("truncation grid must be strictly increasing");
    if (!(tol > 0.0)) throw std::invalid_argument("tolerance must be > 0");

    TruncationLimit out;
    for (std::size_t i = 0; i < c_grid.size(); ++i) {
        const double c = c_grid[i];
        const double v = upper_expect(
            fam, [&phi, c](double x) { return std::clamp(phi(x), -c, c); });
        out.c_grid.push_back(c);
        out.values.push_back(v);
        if (i >= 2 && std::fabs(v - out.values[i - 1]) < tol) {
            out.converged = true;
            break;
        }
    }
    out.value = out.values.back();
    if (out.values.size() >= 2 &&
        std::fabs(out.values.back() - out.values[out.values.size() - 2]) >= tol)
        out.converged = false;
    return out;
}

SigmaBandResult sigma_bounds(const MeasureFamily& fam,
                             const std::vector<double>& c_grid, double tol) {
    SigmaBandResult out;
    out.converged = true;
    for (const Distribution& d : fam.members()) {
        MeasureFamily single({d}, fam.quadrature_tol());
        const TruncationLimit lim =
            breve_expect(single, [](double x) { return x * x; }, c_grid, tol);
        out.member_limits.push_back(lim.value);
        if (!lim.converged) out.converged = false;
    }
    const auto [mn, mx] =
        std::minmax_element(out.member_limits.begin(), out.member_limits.end());
    out.bounds.lower = *mn;
    out.bounds.upper = *mx;
    if (!out.converged)
        out.note = "infinite upper variance: truncated second moment did not "
                   "converge on the grid";
    return out;
}

SigmaBandResult sigma_bounds(const MeasureFamily& fam) {
    return sigma_bounds(fam, default_c_grid(), 1e-6);
}

MeanZeroReport check_mean_zero(const MeasureFamily& fam,
                               const std::vector<double>& c_grid, double tol) {
    MeanZeroReport out;
    out.plus = breve_expect(fam, [](double x) { return x; }, c_grid, tol);
    out.minus = breve_expect(fam, [](double x) { return -x; }, c_grid, tol);
    out.pass = out.plus.converged && out.minus.converged &&
               std::fabs(out.plus.value) <= tol && std::fabs(out.minus.value) <= tol;
    return out;
}

MeanZeroReport check_mean_zero(const MeasureFamily& fam) {
    return check_mean_zero(fam, default_c_grid(), 1e-6);
}

} // namespace sublin
