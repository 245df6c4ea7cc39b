#pragma once

#include <string>

#include "sublin/sublinear.hpp"

namespace sublin {

// Single-draw threshold event.
struct ThresholdEvent {
    enum class Form { Ge, Gt, AbsGe, AbsGt };
    Form form;
    double threshold;

    static ThresholdEvent ge(double t) { return {Form::Ge, t}; }
    static ThresholdEvent gt(double t) { return {Form::Gt, t}; }
    static ThresholdEvent abs_ge(double t) { return {Form::AbsGe, t}; }
    static ThresholdEvent abs_gt(double t) { return {Form::AbsGt, t}; }
};

// Pair (upper, lower) = (sup, inf) of the event probability over the family.
struct CapacityValue {
    double upper = 0.0;
    double lower = 0.0;
};

CapacityValue capacity(const MeasureFamily& fam, const ThresholdEvent& ev);

double member_probability(const Distribution& d, const ThresholdEvent& ev);

enum class Side { Upper, Lower };

// Monotone-piecewise map applied to X before Choquet integration.  Named
// kinds admit analytic tail handling for parametric members; a custom map
// is exact on finitely-supported families only.
struct ChoquetTransform {
    enum class Kind { Identity, Square, SquareOverLogLog, Custom };
    Kind kind = Kind::Identity;
    RealFn fn; // populated for Custom

    static ChoquetTransform identity() { return {Kind::Identity, {}}; }
    static ChoquetTransform square() { return {Kind::Square, {}}; }
    static ChoquetTransform square_over_loglog() {
        return {Kind::SquareOverLogLog, {}};
    }
    static ChoquetTransform custom(RealFn f) { return {Kind::Custom, std::move(f)}; }

    double operator()(double x) const;
};

struct ChoquetResult {
    enum class Verdict { Finite, Infinite, Boundary };
    double value = 0.0;         // +-inf when the integral escapes
    double positive_part = 0.0; // may be +inf
    double negative_part = 0.0; // may be -inf
    Verdict verdict = Verdict::Finite;
};

// C_V[transform(X)] with V the upper or lower capacity of the family.
// Exact piecewise-constant integration on finitely-supported families;
// threshold quadrature with certified tails otherwise.
ChoquetResult choquet(const MeasureFamily& fam, const ChoquetTransform& transform,
                      Side side);

// Choquet integral of X^2 / loglog|X| under the clamped log convention.
// Finiteness for power-law tails is classified analytically: finite above
// tail index 2, infinite below, boundary (undecided) at exactly 2.
ChoquetResult loglog_moment(const MeasureFamily& fam, Side side);

std::string to_string(ChoquetResult::Verdict v);

} // namespace sublin
