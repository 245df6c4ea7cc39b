#pragma once

#include <vector>

#include "sublin/distribution.hpp"

namespace sublin {

// The finite family {P_theta} whose upper envelope realises the sub-linear
// expectation.  Members are indexed by their position (the index set Theta).
class MeasureFamily {
public:
    explicit MeasureFamily(std::vector<Distribution> members,
                           double quadrature_tol = 1e-9);

    const std::vector<Distribution>& members() const { return members_; }
    const Distribution& member(std::size_t theta) const { return members_.at(theta); }
    std::size_t size() const { return members_.size(); }
    double quadrature_tol() const { return quadrature_tol_; }

private:
    std::vector<Distribution> members_;
    double quadrature_tol_;
};

// sup_theta E_theta[phi(X)]
double upper_expect(const MeasureFamily& fam, const RealFn& phi);

// conjugate: -upper_expect(-phi) == inf_theta E_theta[phi(X)]
double lower_expect(const MeasureFamily& fam, const RealFn& phi);

struct TruncationLimit {
    double value = 0.0;
    bool converged = false;
    std::vector<double> c_grid; // grid prefix actually evaluated
    std::vector<double> values; // upper expectations along that prefix
};

// Geometric default grid for c -> infinity limits: c = 2^k, k = 0..40.
std::vector<double> default_c_grid();

// lim_c sup_theta E_theta[clamp(phi(X), -c, c)], declared converged when the
// last two grid evaluations differ by less than tol.  Values are evaluated
// along the grid until convergence (at least three points).
TruncationLimit breve_expect(const MeasureFamily& fam, const RealFn& phi,
                             const std::vector<double>& c_grid, double tol);

struct SigmaBounds {
    double lower = 0.0; // variance units
    double upper = 0.0;
};

struct SigmaBandResult {
    SigmaBounds bounds;
    bool converged = false; // false => upper truncated second moment escapes
    std::vector<double> member_limits;
    std::string note;
};

// (lower, upper) = (min, max) over members of lim_c E[X^2 ^ c].
SigmaBandResult sigma_bounds(const MeasureFamily& fam,
                             const std::vector<double>& c_grid, double tol);
SigmaBandResult sigma_bounds(const MeasureFamily& fam);

struct MeanZeroReport {
    bool pass = false;
    TruncationLimit plus;  // limit of the truncated mean of X
    TruncationLimit minus; // limit of the truncated mean of -X
};

// Truncated means of X and -X both converge to 0 within tol.
MeanZeroReport check_mean_zero(const MeasureFamily& fam,
                               const std::vector<double>& c_grid, double tol);
MeanZeroReport check_mean_zero(const MeasureFamily& fam);

} // namespace sublin
