#ifndef QCOUPLE_ENERGY_HPP
#define QCOUPLE_ENERGY_HPP

// Device-side energy model. Per monitoring interval a device with query
// volume X and activation threshold c_e spends
//
//   g_e * X + i_e * (c_e E[X] - X)^+
//
// so E_exp = g_e r + i_e L(c_e r) and the one-sided variation is
// E_var = g_e^2 U2(c_e r). Each family also has a closed form in c_e; both
// routes are exposed and must agree.

#include <cmath>
#include <numbers>
#include <optional>
#include <sstream>

#include "qcouple/distributions.hpp"
#include "qcouple/errors.hpp"
#include "qcouple/numerics.hpp"

namespace qcouple {

/// Per-bit energy rates in J/b: g_e while producing queries, i_e while idle.
struct EnergyRates {
    double g_e = 0.0;
    double i_e = 0.0;

    void validate() const {
        if (!(g_e > 0.0) || !(i_e >= 0.0) || !std::isfinite(g_e) || !std::isfinite(i_e)) {
            throw domain_error("energy rates require g_e > 0 and i_e >= 0");
        }
    }

    friend bool operator==(const EnergyRates&, const EnergyRates&) = default;
};

/// Energy rates plus the activation threshold c_e (fraction of the mean volume).
struct EnergyParams {
    double g_e = 0.0;
    double i_e = 0.0;
    double c_e = 0.0;

    EnergyParams() = default;
    EnergyParams(double g, double i, double c) : g_e(g), i_e(i), c_e(c) {}
    EnergyParams(const EnergyRates& rates, double c) : g_e(rates.g_e), i_e(rates.i_e), c_e(c) {}

    EnergyRates rates() const { return {g_e, i_e}; }

    void validate() const {
        rates().validate();
        if (!(c_e >= 0.0) || !std::isfinite(c_e)) {
            throw domain_error("activation threshold c_e must be finite and >= 0");
        }
    }

    friend bool operator==(const EnergyParams&, const EnergyParams&) = default;
};

/// Budgets per monitoring interval: expected energy (J) and one-sided variation (J^2).
struct EnergyConstraints {
    std::optional<double> e_max_exp;
    std::optional<double> e_max_var;

    void validate() const {
        if (e_max_exp && !(*e_max_exp > 0.0)) {
            throw domain_error("e_max_exp must be > 0");
        }
        if (e_max_var && !(*e_max_var > 0.0)) {
            throw domain_error("e_max_var must be > 0");
        }
    }

    friend bool operator==(const EnergyConstraints&, const EnergyConstraints&) = default;
};

/// A device's per-interval query volume. T (seconds) is carried for reporting.
struct DeviceProfile {
    QueryVolumeDistribution dist;
    double T = 1.0;

    friend bool operator==(const DeviceProfile&, const DeviceProfile&) = default;
};

// ---------------------------------------------------------------------------
// Generic partial-moment route
// ---------------------------------------------------------------------------

inline double expected_energy_generic(const EnergyParams& p, const DeviceProfile& d) {
    p.validate();
    const double r = d.dist.mean();
    return r * p.g_e + p.i_e * lower_partial_moment(d.dist, p.c_e * r);
}

inline double energy_variation_generic(const EnergyParams& p, const DeviceProfile& d) {
    p.validate();
    return p.g_e * p.g_e * upper_sq_partial_moment(d.dist, p.c_e * d.dist.mean());
}

// ---------------------------------------------------------------------------
// Per-family closed forms
// ---------------------------------------------------------------------------

namespace detail {

// (a-1)^(a-1) a^(-a), evaluated in log space.
inline double pareto_log_coefficient(double a) {
    return (a - 1.0) * std::log(a - 1.0) - a * std::log(a);
}

/// Smallest c_e at which a Pareto device can ever be idle.
inline double pareto_idle_onset(double a) { return (a - 1.0) / a; }

}  // namespace detail

/// Expected energy per interval (J), using the family's closed form.
///
/// Falls back to the generic route where a closed form does not apply:
/// Uniform with c_e > 2, Pareto with c_e below (a-1)/a.
inline double expected_energy(const EnergyParams& p, const DeviceProfile& d) {
    p.validate();
    const double r = d.dist.mean();
    const double g = p.g_e;
    const double i = p.i_e;
    const double c = p.c_e;
    switch (d.dist.family()) {
        case Family::uniform:
            if (c > 2.0) {
                return expected_energy_generic(p, d);
            }
            return (g + i * c * c / 4.0) * r;
        case Family::pareto: {
            const double a = d.dist.shape();
            if (c < detail::pareto_idle_onset(a)) {
                return expected_energy_generic(p, d);
            }
            const double k = std::exp(detail::pareto_log_coefficient(a) + (1.0 - a) * std::log(c));
            return (g + i * (k + c - 1.0)) * r;
        }
        case Family::exponential: return (g + i * (c + std::expm1(-c))) * r;
        case Family::half_gaussian: {
            const double z = c / std::sqrt(std::numbers::pi);
            return (g + i * c * numerics::erf(z) + i * std::expm1(-z * z)) * r;
        }
        case Family::fixed: return c >= 1.0 ? (g + i * (c - 1.0)) * r : g * r;
    }
    return 0.0;
}

/// One-sided energy variation per interval (J^2), using the family's closed form.
inline double energy_variation(const EnergyParams& p, const DeviceProfile& d) {
    p.validate();
    const double r = d.dist.mean();
    const double g2r2 = p.g_e * p.g_e * r * r;
    const double c = p.c_e;
    switch (d.dist.family()) {
        case Family::uniform: {
            if (c >= 2.0) {
                return 0.0;
            }
            const double gap = 2.0 - c;
            return g2r2 * gap * gap * gap / 6.0;
        }
        case Family::pareto: {
            const double a = d.dist.shape();
            if (c < detail::pareto_idle_onset(a)) {
                return energy_variation_generic(p, d);
            }
            return 2.0 * g2r2 * std::exp(detail::pareto_log_coefficient(a) + (2.0 - a) * std::log(c))
                   / (a - 2.0);
        }
        case Family::exponential: return 2.0 * g2r2 * std::exp(-c);
        case Family::half_gaussian: {
            const double pi = std::numbers::pi;
            const double z = c / std::sqrt(pi);
            return 0.5 * g2r2 * ((2.0 * c * c + pi) * numerics::erfc(z) - 2.0 * c * std::exp(-z * z));
        }
        case Family::fixed: {
            const double gap = std::max(0.0, 1.0 - c);
            return g2r2 * gap * gap;
        }
    }
    return 0.0;
}

/// Both energy figures plus regime flags.
struct EnergyReport {
    double expected = 0.0;
    double variation = 0.0;
    /// Uniform with c_e > 2: the device is always idle; evaluated via the generic route.
    bool beyond_uniform_support = false;
    /// Pareto with c_e < (a-1)/a: the device never idles.
    bool never_idle = false;
};

inline EnergyReport evaluate_energy(const EnergyParams& p, const DeviceProfile& d) {
    EnergyReport out;
    out.expected = expected_energy(p, d);
    out.variation = energy_variation(p, d);
    out.beyond_uniform_support = d.dist.family() == Family::uniform && p.c_e > 2.0;
    out.never_idle = p.c_e * d.dist.mean() <= d.dist.support_lower();
    return out;
}

// ---------------------------------------------------------------------------
// Constrained minimisation
// ---------------------------------------------------------------------------

namespace detail {

inline numerics::Tolerance solver_tolerance() { return {1e-13, 0.0, 300}; }

inline void check_primary_budget(const EnergyRates& rates, const DeviceProfile& d, double e_max_exp) {
    rates.validate();
    if (!(rates.i_e > 0.0)) {
        throw domain_error("primary problem needs i_e > 0: with no idle cost every c_e is feasible");
    }
    const double floor = rates.g_e * d.dist.mean();
    if (!(e_max_exp > floor)) {
        std::ostringstream msg;
        msg << "infeasible energy budget: e_max_exp = " << e_max_exp
            << " J does not exceed g_e * r = " << floor << " J";
        throw infeasible_error(msg.str());
    }
    if (d.dist.family() == Family::uniform) {
        const double ceiling = (rates.g_e + rates.i_e) * d.dist.mean();
        if (!(e_max_exp < ceiling)) {
            std::ostringstream msg;
            msg << "energy budget out of range for uniform volumes: e_max_exp = " << e_max_exp
                << " J must be below (g_e + i_e) r = " << ceiling << " J";
            throw domain_error(msg.str());
        }
    }
}

}  // namespace detail

/// Solves E_exp(c_e) = e_max_exp by bracketed root finding on the closed form.
///
/// The bracket runs from the support's lower end (where E_exp = g_e r) to
/// 1 + (e_max_exp - g_e r)/(i_e r), where E_exp >= e_max_exp because
/// L(c) >= c - r.
inline double solve_primary_numeric(const EnergyRates& rates, const DeviceProfile& d, double e_max_exp) {
    detail::check_primary_budget(rates, d, e_max_exp);
    const double r = d.dist.mean();
    const double lo = d.dist.support_lower() / r;
    // Exact root for Fixed; widened so rounding cannot drop the sign change.
    double hi = (1.0 + (e_max_exp - rates.g_e * r) / (rates.i_e * r)) * (1.0 + 1e-9);
    if (d.dist.family() == Family::uniform) {
        hi = std::min(hi, 2.0);
    }
    auto residual = [&](double c) { return expected_energy(EnergyParams(rates, c), d) - e_max_exp; };
    return numerics::find_root(residual, lo, hi, detail::solver_tolerance());
}

/// Threshold minimising E_var subject to E_exp <= e_max_exp.
///
/// The constraint is active at the optimum, so this is the largest c_e with
/// E_exp(c_e) = e_max_exp. Uniform, Exponential and Fixed use closed forms;
/// Pareto and Half-Gaussian are solved numerically.
inline double solve_primary(const EnergyRates& rates, const DeviceProfile& d, double e_max_exp) {
    detail::check_primary_budget(rates, d, e_max_exp);
    const double r = d.dist.mean();
    const double excess = (e_max_exp - rates.g_e * r) / (rates.i_e * r);
    switch (d.dist.family()) {
        case Family::uniform: return 2.0 * std::sqrt(excess);
        case Family::exponential: {
            // c + e^-c = 1 + excess  =>  c = K + W0(-e^-K), K = 1 + excess.
            const double k = 1.0 + excess;
            return numerics::lambert_w0(-std::exp(-k)) + k;
        }
        case Family::fixed: return 1.0 + excess;
        case Family::pareto:
        case Family::half_gaussian: return solve_primary_numeric(rates, d, e_max_exp);
    }
    return 0.0;
}

/// E_var at c_e = 0, i.e. g_e^2 E[X^2]. Any budget at or above it gives c_e = 0.
inline double max_energy_variation(const EnergyRates& rates, const DeviceProfile& d) {
    return rates.g_e * rates.g_e * d.dist.second_moment();
}

/// Solves E_var(c_e) = e_max_var by bracketed root finding on the closed form.
inline double solve_dual_numeric(const EnergyRates& rates, const DeviceProfile& d, double e_max_var) {
    rates.validate();
    if (!(e_max_var > 0.0)) {
        throw domain_error("e_max_var must be > 0");
    }
    if (e_max_var >= max_energy_variation(rates, d)) {
        return 0.0;
    }
    auto residual = [&](double c) { return energy_variation(EnergyParams(rates, c), d) - e_max_var; };
    double hi = 2.0;
    if (d.dist.family() != Family::uniform) {
        hi = numerics::expand_upper_bracket(residual, 0.0, hi);
    }
    return numerics::find_root(residual, 0.0, hi, detail::solver_tolerance());
}

/// Threshold minimising E_exp subject to E_var <= e_max_var.
///
/// Returns the smallest feasible c_e: zero when the budget is at least
/// E_var(0), otherwise the solution of E_var(c_e) = e_max_var.
inline double solve_dual(const EnergyRates& rates, const DeviceProfile& d, double e_max_var) {
    rates.validate();
    if (!(e_max_var > 0.0)) {
        throw domain_error("e_max_var must be > 0");
    }
    if (e_max_var >= max_energy_variation(rates, d)) {
        return 0.0;
    }
    const double r = d.dist.mean();
    const double ratio = e_max_var / (rates.g_e * rates.g_e * r * r);
    switch (d.dist.family()) {
        case Family::uniform: return 2.0 - std::cbrt(6.0 * ratio);
        case Family::exponential: return std::log(2.0 / ratio);
        case Family::fixed: return 1.0 - std::sqrt(ratio);
        case Family::pareto: {
            const double a = d.dist.shape();
            const double log_c = (std::log(ratio) + std::log(a - 2.0) - std::log(2.0)
                                  - detail::pareto_log_coefficient(a))
                                 / (2.0 - a);
            const double c = std::exp(log_c);
            if (c >= detail::pareto_idle_onset(a)) {
                return c;
            }
            // Below the support the device never idles and
            // E_var / (g r)^2 = (c - 1)^2 + E[X^2]/r^2 - 1; take the smaller root.
            const double excess_second = d.dist.second_moment() / (r * r) - 1.0;
            return 1.0 - std::sqrt(std::max(0.0, ratio - excess_second));
        }
        case Family::half_gaussian: return solve_dual_numeric(rates, d, e_max_var);
    }
    return 0.0;
}

}  // namespace qcouple

#endif
