#include "sublin/quadrature.hpp"

#include <cmath>
#include <utility>
#include <vector>

namespace sublin {

namespace {

// 15-point Kronrod extension of the 7-point Gauss rule (QUADPACK constants).
constexpr double kXgk[8] = {
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144838258730,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000};

constexpr double kWgk[8] = {
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714};

constexpr double kWg[4] = {
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327};

struct Panel {
    double a, b;
    double integral;
    double error;
};

Panel evaluate_panel(const std::function<double(double)>& f, double a, double b,
                     long& evals) {
    const double center = 0.5 * (a + b);
    const double half = 0.5 * (b - a);
    double kronrod = kWgk[7] * f(center);
    double gauss = kWg[3] * f(center);
    ++evals;
    for (int i = 0; i < 7; ++i) {
        const double dx = half * kXgk[i];
        const double fsum = f(center - dx) + f(center + dx);
        evals += 2;
        kronrod += kWgk[i] * fsum;
        if (i % 2 == 1) gauss += kWg[i / 2] * fsum;
    }
    kronrod *= half;
    gauss *= half;
    return Panel{a, b, kronrod, std::fabs(kronrod - gauss)};
}

} // namespace

QuadratureResult integrate(const std::function<double(double)>& f, double a,
                           double b, double abs_tol, int max_depth) {
    QuadratureResult result;
    if (a == b) {
        result.converged = true;
        return result;
    }
    struct Item {
        Panel panel;
        int depth;
    };
    std::vector<Item> stack;
    stack.push_back({evaluate_panel(f, a, b, result.evaluations), 0});

    while (!stack.empty()) {
        Item item = stack.back();
        stack.pop_back();
        // local budget proportional to the panel's share of the interval
        const double share = (item.panel.b - item.panel.a) / (b - a);
        const double local_tol = abs_tol * std::fmax(share, 1e-12);
        if (item.panel.error <= local_tol || item.depth >= max_depth) {
            result.value += item.panel.integral;
            result.error_estimate += item.panel.error;
            continue;
        }
        const double mid = 0.5 * (item.panel.a + item.panel.b);
        stack.push_back(
            {evaluate_panel(f, item.panel.a, mid, result.evaluations), item.depth + 1});
        stack.push_back(
            {evaluate_panel(f, mid, item.panel.b, result.evaluations), item.depth + 1});
    }
    result.converged = result.error_estimate <= abs_tol;
    return result;
}

TailResult integrate_tail(const std::function<double(double)>& f, double start,
                          double growth, double abs_tol, int max_shells) {
    TailResult result;
    double lo = start;
    double prev_mag = -1.0;
    int flat_or_growing = 0;
    int small_count = 0;
    double last = 0.0, second_last = 0.0;
    std::vector<double> ratios;

    for (int m = 0; m < max_shells; ++m) {
        const double hi = lo * growth;
        if (!std::isfinite(hi)) break; // ran off the double range: shells vanished
        const QuadratureResult shell = integrate(f, lo, hi, abs_tol * 0.25);
        const double c = shell.value;
        result.value += c;
        second_last = last;
        last = c;
        const double mag = std::fabs(c);
        if (prev_mag > 0.0 && mag > 0.0) ratios.push_back(mag / prev_mag);

        if (std::fabs(result.value) > 1e300) {
            result.divergent = true;
            result.sign = result.value > 0 ? 1 : -1;
            return result;
        }

        // shells of a convergent tail decay geometrically; magnitudes that
        // refuse to shrink over several consecutive shells indicate
        // divergence (log-divergent tails sit exactly at ratio 1)
        if (m >= 4 && mag > abs_tol && prev_mag > 0 && mag >= 0.995 * prev_mag) {
            if (++flat_or_growing >= 6) {
                result.divergent = true;
                if (last > 0 && second_last > 0)
                    result.sign = 1;
                else if (last < 0 && second_last < 0)
                    result.sign = -1;
                else
                    result.sign = 0;
                return result;
            }
        } else {
            flat_or_growing = 0;
        }

        if (mag < abs_tol * 0.25) {
            if (++small_count >= 2) {
                // geometric remainder bound from the observed decay
                double ratio = (prev_mag > 0) ? mag / prev_mag : 0.0;
                if (ratio > 0.9) ratio = 0.9;
                result.value += (ratio > 0) ? c * ratio / (1.0 - ratio) : 0.0;
                result.converged = true;
                return result;
            }
        } else {
            small_count = 0;
        }
        prev_mag = mag;
        lo = hi;
    }

    // shell budget exhausted: power-law tails decay in exact geometric
    // progression, so a stable sub-unit ratio admits an exact extrapolation
    if (ratios.size() >= 4) {
        double rmin = 1e300, rmax = 0.0;
        for (std::size_t i = ratios.size() - 4; i < ratios.size(); ++i) {
            rmin = std::fmin(rmin, ratios[i]);
            rmax = std::fmax(rmax, ratios[i]);
        }
        if (rmax <= 0.99 && rmax - rmin <= 0.05 * rmax) {
            result.value += last * rmax / (1.0 - rmax);
            result.converged = true;
            return result;
        }
    }
    // neither settled nor provably divergent
    return result;
}

} // namespace sublin
