// Independent reference values: direct quadrature of the defining integrals
// against the density, and plain bisection. Nothing here calls the closed forms.
#pragma once

#include <algorithm>
#include <cmath>
#include <limits>

#include "qcouple/distributions.hpp"
#include "qcouple/numerics.hpp"

namespace oracle {

using qcouple::Family;
using qcouple::QueryVolumeDistribution;

inline double support_lo(const QueryVolumeDistribution& d) {
    return d.family() == Family::pareto ? (d.shape() - 1.0) / d.shape() * d.mean() : 0.0;
}

inline double support_hi(const QueryVolumeDistribution& d) {
    return d.family() == Family::uniform ? 2.0 * d.mean() : std::numeric_limits<double>::infinity();
}

// Integral of g(x) * pdf(x) over [a, b] intersected with the support.
template <typename G>
double expect(const QueryVolumeDistribution& d, G g, double a, double b) {
    if (d.family() == Family::fixed) {
        const double r = d.mean();
        return (r >= a && r <= b) ? g(r) : 0.0;
    }
    a = std::max(a, support_lo(d));
    b = std::min(b, support_hi(d));
    if (!(b > a)) {
        return 0.0;
    }
    qcouple::numerics::QuadratureOptions opts;
    opts.tol = {1e-13, 0.0, 20000};
    opts.tail_scale = std::max(a, d.mean());
    auto f = [&](double x) { return g(x) * qcouple::pdf(d, x); };
    return qcouple::numerics::integrate(f, a, b, opts);
}

inline double mean(const QueryVolumeDistribution& d) {
    return expect(d, [](double x) { return x; }, 0.0, std::numeric_limits<double>::infinity());
}

inline double lower_pm(const QueryVolumeDistribution& d, double c) {
    return expect(d, [c](double x) { return c - x; }, 0.0, c);
}

inline double upper_pm(const QueryVolumeDistribution& d, double c) {
    return expect(d, [c](double x) { return x - c; }, c, std::numeric_limits<double>::infinity());
}

inline double upper_sq_pm(const QueryVolumeDistribution& d, double c) {
    return expect(d, [c](double x) { return (x - c) * (x - c); }, c, std::numeric_limits<double>::infinity());
}

// Energy per interval straight from its definition.
inline double energy_exp(double g, double i, double c_e, const QueryVolumeDistribution& d) {
    const double c = c_e * d.mean();
    return g * mean(d) + i * lower_pm(d, c);
}

inline double energy_var(double g, double c_e, const QueryVolumeDistribution& d) {
    return g * g * upper_sq_pm(d, c_e * d.mean());
}

// Billing in its unrearranged form: transfer + idle pool + active pool.
inline double billing(double g, double i, double p, double c, const QueryVolumeDistribution& d) {
    return g * mean(d) + i * lower_pm(d, c) + p * upper_pm(d, c);
}

// Bisection to a tolerance of `tol` on an increasing function.
template <typename F>
double bisect(F f, double lo, double hi, double tol = 1e-14) {
    for (int k = 0; k < 400 && hi - lo > tol * std::max(1.0, std::abs(lo)); ++k) {
        const double mid = 0.5 * (lo + hi);
        (f(mid) < 0.0 ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

inline double rel_diff(double a, double b) {
    const double scale = std::max(std::abs(a), std::abs(b));
    return scale == 0.0 ? 0.0 : std::abs(a - b) / scale;
}

}  // namespace oracle
