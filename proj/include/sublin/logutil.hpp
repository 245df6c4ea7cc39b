#pragma once

#include <cmath>

namespace sublin {

// Clamped logarithm convention used throughout: log x = ln max(e, x),
// so log log is bounded below by 1.
inline double log_c(double x) { return std::log(std::fmax(2.71828182845904523536, x)); }

inline double loglog_c(double x) { return log_c(log_c(x)); }

} // namespace sublin
