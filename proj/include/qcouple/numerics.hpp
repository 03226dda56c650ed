#ifndef QCOUPLE_NUMERICS_HPP
#define QCOUPLE_NUMERICS_HPP

// Scalar special functions, bracketed root finding and adaptive quadrature.
// Everything here is pure and reentrant.

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <queue>
#include <sstream>
#include <utility>
#include <vector>

#include "qcouple/errors.hpp"

namespace qcouple::numerics {

/// Stopping rule shared by the iterative routines.
struct Tolerance {
    double rel = 1e-12;
    double abs = 0.0;
    int max_iter = 200;

    /// Throws domain_error unless rel > 0, abs >= 0 and max_iter >= 1.
    void validate() const {
        if (!(rel > 0.0) || !(abs >= 0.0) || max_iter < 1) {
            throw domain_error("tolerance requires rel > 0, abs >= 0, max_iter >= 1");
        }
    }

    friend bool operator==(const Tolerance&, const Tolerance&) = default;
};

inline constexpr double inv_e = 0.36787944117144233;  // 1/e

// ---------------------------------------------------------------------------
// Lambert W, principal branch
// ---------------------------------------------------------------------------

namespace detail {

// Expansion of W0 about the branch point in p = sqrt(2(e*x + 1)).
inline double lambert_branch_series(double p) {
    constexpr std::array<double, 8> coeff = {
        -1.0, 1.0, -1.0 / 3.0, 11.0 / 72.0, -43.0 / 540.0, 769.0 / 17280.0,
        -221.0 / 8505.0, 680863.0 / 43545600.0};
    double w = 0.0;
    for (auto it = coeff.rbegin(); it != coeff.rend(); ++it) {
        w = w * p + *it;
    }
    return w;
}

}  // namespace detail

/// Principal branch W0 of the Lambert W function: the w >= -1 solving w*e^w = x.
///
/// Seeded with the branch-point series, a log1p form or the asymptotic
/// log expansion depending on x, then refined with Halley steps.
/// Arguments below -1/e by no more than `branch_slack` are snapped to -1.
inline double lambert_w0(double x, double branch_slack = 1e-15) {
    if (std::isnan(x)) {
        throw domain_error("lambert_w0: NaN argument");
    }
    if (x <= -inv_e) {
        if (-inv_e - x <= branch_slack) {
            return -1.0;
        }
        std::ostringstream msg;
        msg << "lambert_w0: argument " << x << " below branch point -1/e";
        throw domain_error(msg.str());
    }
    if (x == 0.0) {
        return 0.0;
    }
    if (std::isinf(x)) {
        return x;
    }

    // e*x + 1, evaluated as e*(x + 1/e) to limit cancellation near the branch point.
    const double shifted = std::numbers::e * (x + inv_e);
    const double p = std::sqrt(2.0 * std::max(shifted, 0.0));
    if (p < 1e-3) {
        return detail::lambert_branch_series(p);
    }

    double w;
    if (x < -0.25) {
        w = detail::lambert_branch_series(p);
    } else if (x < 3.0) {
        const double l = std::log1p(x);
        w = l * (1.0 - std::log1p(l) / (2.0 + l));
    } else {
        const double l1 = std::log(x);
        const double l2 = std::log(l1);
        w = l1 - l2 + l2 / l1;
    }

    for (int iter = 0; iter < 64; ++iter) {
        const double ew = std::exp(w);
        const double f = w * ew - x;
        const double wp1 = w + 1.0;
        if (f == 0.0 || wp1 == 0.0) {
            break;
        }
        const double step = f / (ew * wp1 - (w + 2.0) * f / (2.0 * wp1));
        w -= step;
        if (std::abs(step) <= 4.0 * std::numeric_limits<double>::epsilon() * (1.0 + std::abs(w))) {
            break;
        }
    }
    return std::max(w, -1.0);
}

// ---------------------------------------------------------------------------
// Error function and its inverse
// ---------------------------------------------------------------------------

/// Error function. Backed by the C library, which is accurate to about one ulp.
inline double erf(double x) { return std::erf(x); }

/// Complementary error function.
inline double erfc(double x) { return std::erfc(x); }

/// Inverse error function on (-1, 1).
///
/// A single-precision rational seed (Giles' erfinv approximation) is polished
/// with Halley steps against erf/erfc, which recovers full double precision.
inline double erf_inv(double q) {
    if (!(std::abs(q) < 1.0)) {
        std::ostringstream msg;
        msg << "erf_inv: argument " << q << " outside (-1, 1)";
        throw domain_error(msg.str());
    }
    if (q == 0.0) {
        return q;
    }

    double w = -std::log((1.0 - q) * (1.0 + q));
    double p;
    if (w < 5.0) {
        w -= 2.5;
        p = 2.81022636e-08;
        p = 3.43273939e-07 + p * w;
        p = -3.5233877e-06 + p * w;
        p = -4.39150654e-06 + p * w;
        p = 0.00021858087 + p * w;
        p = -0.00125372503 + p * w;
        p = -0.00417768164 + p * w;
        p = 0.246640727 + p * w;
        p = 1.50140941 + p * w;
    } else {
        w = std::sqrt(w) - 3.0;
        p = -0.000200214257;
        p = 0.000100950558 + p * w;
        p = 0.00134934322 + p * w;
        p = -0.00367342844 + p * w;
        p = 0.00573950773 + p * w;
        p = -0.0076224613 + p * w;
        p = 0.00943887047 + p * w;
        p = 1.00167406 + p * w;
        p = 2.83297682 + p * w;
    }
    double x = p * q;

    // Work on |q| so the residual can use erfc where erf saturates.
    const double sign = q < 0.0 ? -1.0 : 1.0;
    const double aq = std::abs(q);
    x = std::abs(x);
    const double two_over_sqrt_pi = 2.0 / std::sqrt(std::numbers::pi);
    for (int iter = 0; iter < 4; ++iter) {
        const double residual = aq < 0.5 ? std::erf(x) - aq : (1.0 - aq) - std::erfc(x);
        if (residual == 0.0) {
            break;
        }
        const double slope = two_over_sqrt_pi * std::exp(-x * x);
        const double step = residual / (slope + x * residual);
        x -= step;
        if (std::abs(step) <= std::numeric_limits<double>::epsilon() * x) {
            break;
        }
    }
    return sign * x;
}

// ---------------------------------------------------------------------------
// Root finding
// ---------------------------------------------------------------------------

/// Brent-Dekker root finder on a sign-changing bracket.
///
/// Stops when |f(x)| <= tol.abs or the bracket has shrunk below
/// tol.rel * |x|. The bracket is normalised to lo < hi first, so the
/// result does not depend on argument order.
template <typename F>
double find_root(F&& f, double lo, double hi, const Tolerance& tol = {}) {
    tol.validate();
    if (std::isnan(lo) || std::isnan(hi)) {
        throw domain_error("find_root: NaN bracket");
    }
    if (lo > hi) {
        std::swap(lo, hi);
    }
    double a = lo;
    double b = hi;
    double fa = f(a);
    double fb = f(b);
    if (std::isnan(fa) || std::isnan(fb)) {
        throw domain_error("find_root: function is NaN at bracket end");
    }
    if (fa == 0.0) {
        return a;
    }
    if (fb == 0.0) {
        return b;
    }
    if ((fa > 0.0) == (fb > 0.0)) {
        std::ostringstream msg;
        msg << "find_root: no sign change on [" << lo << ", " << hi << "], f(lo)=" << fa
            << ", f(hi)=" << fb;
        throw no_bracket_error(msg.str());
    }

    constexpr double eps = std::numeric_limits<double>::epsilon();
    double c = a;
    double fc = fa;
    double d = b - a;
    double e = d;
    for (int iter = 0; iter < tol.max_iter; ++iter) {
        if ((fb > 0.0) == (fc > 0.0)) {
            c = a;
            fc = fa;
            d = e = b - a;
        }
        if (std::abs(fc) < std::abs(fb)) {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        const double tol1 = 2.0 * eps * std::abs(b)
                            + 0.5 * std::max(tol.rel * std::abs(b), std::numeric_limits<double>::min());
        const double half = 0.5 * (c - b);
        if (std::abs(half) <= tol1 || fb == 0.0 || std::abs(fb) <= tol.abs) {
            return b;
        }
        if (std::abs(e) >= tol1 && std::abs(fa) > std::abs(fb)) {
            // Inverse quadratic interpolation, falling back to secant.
            double p;
            double q;
            const double s = fb / fa;
            if (a == c) {
                p = 2.0 * half * s;
                q = 1.0 - s;
            } else {
                const double qa = fa / fc;
                const double r = fb / fc;
                p = s * (2.0 * half * qa * (qa - r) - (b - a) * (r - 1.0));
                q = (qa - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if (p > 0.0) {
                q = -q;
            }
            p = std::abs(p);
            const double bound = std::min(3.0 * half * q - std::abs(tol1 * q), std::abs(e * q));
            if (2.0 * p < bound) {
                e = d;
                d = p / q;
            } else {
                d = half;
                e = d;
            }
        } else {
            d = half;
            e = d;
        }
        a = b;
        fa = fb;
        b += std::abs(d) > tol1 ? d : std::copysign(tol1, half);
        fb = f(b);
        if (std::isnan(fb)) {
            throw domain_error("find_root: function returned NaN inside bracket");
        }
    }
    throw convergence_error("find_root: iteration budget exhausted");
}

/// Expands `hi` geometrically until `f(hi)` has the sign opposite to `f(lo)`.
template <typename F>
double expand_upper_bracket(F&& f, double lo, double hi, int max_doublings = 200) {
    const bool lo_positive = f(lo) > 0.0;
    const double step0 = hi - lo;
    double step = step0 > 0.0 ? step0 : 1.0;
    for (int i = 0; i < max_doublings; ++i) {
        const double v = f(hi);
        if (v == 0.0 || (v > 0.0) != lo_positive) {
            return hi;
        }
        step *= 2.0;
        hi = lo + step;
    }
    throw no_bracket_error("expand_upper_bracket: no sign change found");
}

// ---------------------------------------------------------------------------
// Adaptive Gauss-Kronrod quadrature
// ---------------------------------------------------------------------------

namespace detail {

inline constexpr std::array<double, 8> kronrod_nodes = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};

inline constexpr std::array<double, 8> kronrod_weights = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};

// Gauss weights for kronrod_nodes[1], [3], [5] and the centre.
inline constexpr std::array<double, 4> gauss_weights = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Segment {
    double lo;
    double hi;
    double value;
    double error;

    friend bool operator<(const Segment& x, const Segment& y) { return x.error < y.error; }
};

template <typename G>
Segment gauss_kronrod15(G& g, double lo, double hi) {
    const double centre = 0.5 * (lo + hi);
    const double half = 0.5 * (hi - lo);
    const double fc = g(centre);
    double kronrod = fc * kronrod_weights[7];
    double gauss = fc * gauss_weights[3];
    for (std::size_t j = 0; j < 7; ++j) {
        const double dx = half * kronrod_nodes[j];
        const double sum = g(centre - dx) + g(centre + dx);
        kronrod += kronrod_weights[j] * sum;
        if (j % 2 == 1) {
            gauss += gauss_weights[j / 2] * sum;
        }
    }
    kronrod *= half;
    gauss *= half;
    return {lo, hi, kronrod, std::abs(kronrod - gauss)};
}

}  // namespace detail

/// Settings for `integrate`. `tol.max_iter` bounds the number of subdivisions.
struct QuadratureOptions {
    Tolerance tol{1e-10, 0.0, 4000};
    /// Length scale of the map t = s / (s + x - lo) used when hi is +inf.
    /// Zero means max(|lo|, 1).
    double tail_scale = 0.0;
};

/// Globally adaptive 15-point Gauss-Kronrod quadrature of f over [lo, hi].
///
/// `hi` may be +infinity; the half line is mapped onto (0, 1] with
/// x = lo + s(1 - t)/t, which keeps algebraically decaying tails integrable
/// with an endpoint singularity at t = 0 where doubles are dense.
template <typename F>
double integrate(F&& f, double lo, double hi, const QuadratureOptions& opts = {}) {
    opts.tol.validate();
    if (std::isnan(lo) || std::isnan(hi) || std::isinf(lo)) {
        throw domain_error("integrate: lower limit must be finite");
    }
    if (hi < lo) {
        QuadratureOptions swapped = opts;
        return -integrate(std::forward<F>(f), hi, lo, swapped);
    }
    if (hi == lo) {
        return 0.0;
    }

    const bool infinite = std::isinf(hi);
    const double scale = opts.tail_scale > 0.0 ? opts.tail_scale : std::max(std::abs(lo), 1.0);
    auto g = [&](double t) -> double {
        if (!infinite) {
            return f(t);
        }
        if (t <= 0.0) {
            return 0.0;
        }
        const double x = lo + scale * (1.0 - t) / t;
        if (std::isinf(x)) {
            return 0.0;
        }
        const double v = (f(x) * (scale / t)) / t;
        return std::isfinite(v) ? v : 0.0;
    };
    const double a = infinite ? 0.0 : lo;
    const double b = infinite ? 1.0 : hi;

    std::priority_queue<detail::Segment> heap;
    heap.push(detail::gauss_kronrod15(g, a, b));
    double total = heap.top().value;
    double error = heap.top().error;
    int subdivisions = 0;
    while (error > std::max(opts.tol.abs, opts.tol.rel * std::abs(total))) {
        if (subdivisions >= opts.tol.max_iter) {
            std::ostringstream msg;
            msg << "integrate: no convergence after " << subdivisions
                << " subdivisions (estimate " << total << ", error " << error << ")";
            throw convergence_error(msg.str());
        }
        const detail::Segment worst = heap.top();
        const double mid = 0.5 * (worst.lo + worst.hi);
        if (mid <= worst.lo || mid >= worst.hi) {
            // Segment at floating-point resolution; its error cannot shrink further.
            throw convergence_error("integrate: segment width below machine resolution");
        }
        heap.pop();
        const detail::Segment left = detail::gauss_kronrod15(g, worst.lo, mid);
        const detail::Segment right = detail::gauss_kronrod15(g, mid, worst.hi);
        total += left.value + right.value - worst.value;
        error += left.error + right.error - worst.error;
        heap.push(left);
        heap.push(right);
        ++subdivisions;
        if (subdivisions % 64 == 0) {
            // Re-sum to keep the running totals free of drift.
            std::vector<detail::Segment> all;
            all.reserve(heap.size());
            total = 0.0;
            error = 0.0;
            while (!heap.empty()) {
                all.push_back(heap.top());
                heap.pop();
            }
            for (const auto& s : all) {
                total += s.value;
                error += s.error;
                heap.push(s);
            }
        }
    }
    return total;
}

template <typename F>
double integrate(F&& f, double lo, double hi, const Tolerance& tol) {
    return integrate(std::forward<F>(f), lo, hi, QuadratureOptions{tol, 0.0});
}

}  // namespace qcouple::numerics

#endif
