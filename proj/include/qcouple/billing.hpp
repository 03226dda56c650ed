#ifndef QCOUPLE_BILLING_HPP
#define QCOUPLE_BILLING_HPP

// Cloud billing for an aggregate upload volume Psi with autoscaling quota c_b:
//
//   B = g_b E[Psi] + i_b E[(c_b - Psi)^+] + p_b E[(Psi - c_b)^+]
//     = (g_b + p_b) r - p_b c_b + (i_b + p_b) L(c_b)
//
// Convex in c_b, minimised at the p_b/(i_b + p_b) quantile.

#include <cmath>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "qcouple/distributions.hpp"
#include "qcouple/errors.hpp"
#include "qcouple/numerics.hpp"

namespace qcouple {

/// Per-bit billing rates in $ and the optional quota c_b in bits.
struct BillingParams {
    double g_b = 0.0;  ///< transfer and storage
    double i_b = 0.0;  ///< idle instance pool
    double p_b = 0.0;  ///< active instance pool
    std::optional<double> c_b;

    void validate() const {
        if (!(g_b >= 0.0) || !std::isfinite(g_b)) {
            throw domain_error("billing: g_b must be finite and >= 0");
        }
        if (!(i_b > 0.0) || !std::isfinite(i_b)) {
            throw domain_error("billing: i_b must be finite and > 0");
        }
        if (!(p_b >= 0.0) || !std::isfinite(p_b)) {
            throw domain_error("billing: p_b must be finite and >= 0");
        }
        if (c_b && !(*c_b >= 0.0 && std::isfinite(*c_b))) {
            throw domain_error("billing: c_b must be finite and >= 0");
        }
    }

    /// Non-fatal findings about the rates.
    std::vector<std::string> warnings() const {
        std::vector<std::string> out;
        if (p_b <= i_b) {
            out.emplace_back("p_b <= i_b: scaling up to the active pool never pays");
        }
        return out;
    }

    /// Target quantile p_b / (i_b + p_b).
    double quota_probability() const { return p_b / (i_b + p_b); }

    friend bool operator==(const BillingParams&, const BillingParams&) = default;
};

/// Generic route through the lower partial moment; valid for every family.
inline double expected_billing_generic(const BillingParams& b, const QueryVolumeDistribution& agg,
                                       double c_b) {
    b.validate();
    const double r = agg.mean();
    return (b.g_b + b.p_b) * r - b.p_b * c_b + (b.i_b + b.p_b) * lower_partial_moment(agg, c_b);
}

/// Expected billing per interval ($) at quota c_b, using the family's closed form.
inline double expected_billing(const BillingParams& b, const QueryVolumeDistribution& agg, double c_b) {
    b.validate();
    detail::require_nonnegative(c_b, "expected_billing");
    const double r = agg.mean();
    const double g = b.g_b;
    const double i = b.i_b;
    const double p = b.p_b;
    switch (agg.family()) {
        case Family::uniform:
            if (c_b > 2.0 * r) {
                return expected_billing_generic(b, agg, c_b);
            }
            return (g + p) * r - p * c_b + (i + p) * c_b * c_b / (4.0 * r);
        case Family::pareto: {
            const double a = agg.shape();
            if (c_b < agg.pareto_scale()) {
                return expected_billing_generic(b, agg, c_b);
            }
            // (a-1)^(a-1) / (a^a (c_b/r)^(a-1)) r, in log space.
            const double tail = std::exp((a - 1.0) * std::log(a - 1.0) - a * std::log(a)
                                         - (a - 1.0) * std::log(c_b / r));
            return (g - i) * r + (i + p) * tail * r + i * c_b;
        }
        case Family::exponential: return (g - i) * r + i * c_b + (i + p) * r * std::exp(-c_b / r);
        case Family::half_gaussian: {
            const double z = c_b / (std::sqrt(std::numbers::pi) * r);
            return (g + p) * r - p * c_b
                   + (i + p) * (c_b * numerics::erf(z) + r * std::expm1(-z * z));
        }
        case Family::fixed:
            if (c_b < r) {
                return expected_billing_generic(b, agg, c_b);
            }
            return (g - i) * r + i * c_b;
    }
    return 0.0;
}

/// Expected billing at the quota stored in `b`.
inline double expected_billing(const BillingParams& b, const QueryVolumeDistribution& agg) {
    if (!b.c_b) {
        throw domain_error("expected_billing: no quota c_b given");
    }
    return expected_billing(b, agg, *b.c_b);
}

/// Billing-minimising quota: the p_b/(i_b + p_b) quantile of the aggregate.
inline double optimal_quota(const BillingParams& b, const QueryVolumeDistribution& agg) {
    b.validate();
    const double q = b.quota_probability();
    if (q <= cdf(agg, 0.0)) {
        return 0.0;
    }
    return quantile(agg, q);
}

/// Minimum expected billing over c_b, evaluated at the optimal quota.
inline double min_billing(const BillingParams& b, const QueryVolumeDistribution& agg) {
    return expected_billing(b, agg, optimal_quota(b, agg));
}

}  // namespace qcouple

#endif
