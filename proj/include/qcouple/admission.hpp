#ifndef QCOUPLE_ADMISSION_HPP
#define QCOUPLE_ADMISSION_HPP

// Aggregator planning: is a billing target reachable under the volume cap,
// and how many devices per activity zone does it admit. Zones get equal
// volume shares n_a r_a = r_tot / A (proportional fairness).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "qcouple/billing.hpp"
#include "qcouple/distributions.hpp"
#include "qcouple/errors.hpp"
#include "qcouple/numerics.hpp"

namespace qcouple {

struct ActivityZone {
    std::string label;
    QueryVolumeDistribution dist;
    /// Device count when fixed a priori; planning ignores it.
    std::optional<double> count;

    friend bool operator==(const ActivityZone&, const ActivityZone&) = default;
};

enum class BindingConstraint { billing_target, volume_cap, both };

inline std::string_view to_string(BindingConstraint b) {
    switch (b) {
        case BindingConstraint::billing_target: return "billing-target";
        case BindingConstraint::volume_cap: return "volume-cap";
        case BindingConstraint::both: return "both";
    }
    return "unknown";
}

/// Monte Carlo settings for the convolved aggregate, where no closed form exists.
struct MonteCarloOptions {
    std::uint64_t seed = 42;
    std::size_t n_samples = 4000;
    SamplerMode sampler = SamplerMode::inverse_transform;
    /// Guard against runaway cost: n_samples times total devices.
    double max_draws = 2e8;
};

struct AggregatorScenario {
    std::vector<ActivityZone> zones;
    double v_max = 0.0;   ///< bits per interval
    double b_mean = 0.0;  ///< $ per interval
    double T = 1.0;       ///< seconds, reporting only
    BillingParams billing;
    AggregateMode aggregate_mode = AggregateMode::scaled;
    /// Pareto shape of the aggregate when zones differ in shape.
    std::optional<double> aggregate_shape;

    void validate() const {
        if (zones.empty()) {
            throw domain_error("scenario needs at least one activity zone");
        }
        if (!(v_max > 0.0) || !std::isfinite(v_max)) {
            throw domain_error("v_max must be finite and > 0");
        }
        if (!(b_mean > 0.0) || !std::isfinite(b_mean)) {
            throw domain_error("b_mean must be finite and > 0");
        }
        if (!(T > 0.0)) {
            throw domain_error("T must be > 0");
        }
        billing.validate();
    }

    std::size_t zone_count() const { return zones.size(); }
};

/// Minimum billing per aggregate bit, so that min_billing = unit_min_cost * r_tot.
inline double unit_min_cost(const BillingParams& b, Family family, double shape = 0.0) {
    b.validate();
    const double g = b.g_b;
    const double i = b.i_b;
    const double p = b.p_b;
    if (p == 0.0) {
        // Quota 0: everything runs on the active pool at no extra charge.
        return g;
    }
    const double q = b.quota_probability();
    switch (family) {
        case Family::uniform: return g + p - p * p / (i + p);
        case Family::pareto: {
            if (!(shape > 2.0) || !std::isfinite(shape)) {
                throw domain_error("unit_min_cost: Pareto shape must be finite and > 2");
            }
            return g - i + i * std::exp(std::log1p(p / i) / shape);
        }
        case Family::exponential: return g + i * std::log1p(p / i);
        case Family::half_gaussian: {
            const double x = numerics::erf_inv(q);
            return g - i + (i + p) * std::exp(-x * x);
        }
        case Family::fixed: return g;
    }
    return 0.0;
}

namespace detail {

inline std::vector<ZoneLoad> unit_loads(const AggregatorScenario& s) {
    std::vector<ZoneLoad> out;
    out.reserve(s.zones.size());
    for (const auto& z : s.zones) {
        out.push_back({z.dist, 1.0});
    }
    return out;
}

/// Counts giving each zone a volume share r_tot / A.
inline std::vector<ZoneLoad> fair_loads(const AggregatorScenario& s, double r_tot) {
    const double share = r_tot / static_cast<double>(s.zones.size());
    std::vector<ZoneLoad> out;
    out.reserve(s.zones.size());
    for (const auto& z : s.zones) {
        out.push_back({z.dist, share / z.dist.mean()});
    }
    return out;
}

inline double floor_count(double n) {
    // Absorb rounding in r_tot / (A r_a) so that e.g. 9.999999999999998 counts as 10.
    return std::floor(n * (1.0 + 1e-12));
}

}  // namespace detail

/// Aggregate family and shape of a scaled-mode scenario.
inline QueryVolumeDistribution scenario_unit_aggregate(const AggregatorScenario& s) {
    const auto loads = detail::unit_loads(s);
    return aggregate_scaled(loads, s.aggregate_shape);
}

/// Scenario's unit minimum cost in scaled mode.
inline double unit_min_cost(const AggregatorScenario& s) {
    const auto agg = scenario_unit_aggregate(s);
    return unit_min_cost(s.billing, agg.family(), agg.shape());
}

/// Monte Carlo estimate of the minimum billing of a convolved aggregate.
struct MonteCarloBilling {
    double value = 0.0;           ///< mean billing at the empirical optimal quota, $
    double standard_error = 0.0;  ///< of `value`
    double quota = 0.0;           ///< empirical p/(i+p) quantile, bits
};

inline MonteCarloBilling mc_min_billing(const BillingParams& b, std::span<const ZoneLoad> zones,
                                        const MonteCarloOptions& mc = {}) {
    b.validate();
    double devices = 0.0;
    for (const auto& z : zones) {
        devices += std::ceil(z.count);
    }
    if (devices * static_cast<double>(mc.n_samples) > mc.max_draws) {
        std::ostringstream msg;
        msg << "Monte Carlo billing would need " << devices * static_cast<double>(mc.n_samples)
            << " draws, above the limit of " << mc.max_draws;
        throw domain_error(msg.str());
    }
    std::vector<double> psi = aggregate_convolved(zones, mc.seed, mc.n_samples, mc.sampler);
    std::vector<double> sorted = psi;
    std::sort(sorted.begin(), sorted.end());
    const double q = b.quota_probability();
    const auto n = sorted.size();
    std::size_t k = static_cast<std::size_t>(std::ceil(q * static_cast<double>(n)));
    k = std::clamp<std::size_t>(k, 1, n);
    const double quota = q > 0.0 ? sorted[k - 1] : 0.0;

    std::vector<double> cost(n);
    double sum = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        const double x = psi[j];
        cost[j] = b.g_b * x + b.i_b * std::max(0.0, quota - x) + b.p_b * std::max(0.0, x - quota);
        sum += cost[j];
    }
    const double mean = sum / static_cast<double>(n);
    double ss = 0.0;
    for (double c : cost) {
        ss += (c - mean) * (c - mean);
    }
    const double sd = n > 1 ? std::sqrt(ss / static_cast<double>(n - 1)) : 0.0;
    return {mean, sd / std::sqrt(static_cast<double>(n)), quota};
}

struct FeasibilityReport {
    bool feasible = false;
    /// v_max * unit cost - b_mean, in $.
    double margin = 0.0;
    /// Lowest achievable billing at full volume v_max, in $.
    double capacity = 0.0;
    /// Set for the convolved mode, where capacity is a Monte Carlo estimate.
    std::optional<double> standard_error;
};

namespace detail {

inline bool at_boundary(double b_mean, double capacity) {
    return std::abs(b_mean - capacity) <= 4.0 * std::numeric_limits<double>::epsilon() * capacity;
}

inline MonteCarloBilling convolved_billing_at(const AggregatorScenario& s, double r_tot,
                                              const MonteCarloOptions& mc) {
    const auto loads = fair_loads(s, r_tot);
    return mc_min_billing(s.billing, loads, mc);
}

}  // namespace detail

/// Whether b_mean <= v_max * unit_min_cost, with the margin in $.
inline FeasibilityReport check_feasibility(const AggregatorScenario& s, const MonteCarloOptions& mc = {}) {
    s.validate();
    FeasibilityReport out;
    if (s.aggregate_mode == AggregateMode::scaled) {
        out.capacity = s.v_max * unit_min_cost(s);
    } else {
        const auto est = detail::convolved_billing_at(s, s.v_max, mc);
        out.capacity = est.value;
        out.standard_error = est.standard_error;
    }
    out.margin = out.capacity - s.b_mean;
    out.feasible = out.margin >= 0.0 || detail::at_boundary(s.b_mean, out.capacity);
    return out;
}

struct AdmissionPlan {
    std::vector<std::string> labels;
    std::vector<double> counts;                ///< n_a, fractional
    std::vector<std::uint64_t> integer_counts; ///< floor(n_a)
    double r_tot = 0.0;                        ///< sum n_a r_a, bits
    double billing = 0.0;                      ///< minimum billing at r_tot, $
    double integer_r_tot = 0.0;
    double integer_billing = 0.0;              ///< realised with integer counts, $
    std::optional<double> billing_standard_error;  ///< convolved mode only
    bool feasible = false;
    BindingConstraint binding = BindingConstraint::billing_target;
};

namespace detail {

inline AdmissionPlan fill_plan(const AggregatorScenario& s, double r_tot, bool boundary,
                               const MonteCarloOptions& mc) {
    AdmissionPlan plan;
    const double A = static_cast<double>(s.zones.size());
    std::vector<ZoneLoad> integer_loads;
    for (const auto& z : s.zones) {
        const double n = boundary ? s.v_max / (A * z.dist.mean()) : r_tot / (A * z.dist.mean());
        plan.labels.push_back(z.label);
        plan.counts.push_back(n);
        plan.r_tot += n * z.dist.mean();
        const double whole = floor_count(n);
        plan.integer_counts.push_back(static_cast<std::uint64_t>(whole));
        plan.integer_r_tot += whole * z.dist.mean();
        if (whole > 0.0) {
            integer_loads.push_back({z.dist, whole});
        }
    }
    if (s.aggregate_mode == AggregateMode::scaled) {
        const double unit = unit_min_cost(s);
        plan.billing = unit * plan.r_tot;
        plan.integer_billing = unit * plan.integer_r_tot;
    } else {
        const auto est = convolved_billing_at(s, plan.r_tot, mc);
        plan.billing = est.value;
        plan.billing_standard_error = est.standard_error;
        if (!integer_loads.empty()) {
            plan.integer_billing = mc_min_billing(s.billing, integer_loads, mc).value;
        }
    }
    return plan;
}

inline double solve_convolved_r_tot(const AggregatorScenario& s, const MonteCarloOptions& mc) {
    auto gap = [&](double r_tot) { return convolved_billing_at(s, r_tot, mc).value - s.b_mean; };
    return numerics::find_root(gap, s.v_max * 1e-9, s.v_max, {1e-9, 0.0, 200});
}

}  // namespace detail

/// Proportional-fair device counts meeting b_mean; throws infeasible_error otherwise.
///
/// Scaled mode: r_tot = b_mean / unit_min_cost and n_a = r_tot / (A r_a).
/// Convolved mode: r_tot is found by a bracketed root search on Monte Carlo minimum billing
/// with common random numbers; the plan carries the estimate's standard error.
inline AdmissionPlan plan_devices(const AggregatorScenario& s, const MonteCarloOptions& mc = {}) {
    const FeasibilityReport f = check_feasibility(s, mc);
    if (!f.feasible) {
        std::ostringstream msg;
        msg << "infeasible billing target: b_mean = " << s.b_mean
            << " $ exceeds the minimum billing at v_max, " << f.capacity << " $";
        throw infeasible_error(msg.str());
    }
    const bool boundary = detail::at_boundary(s.b_mean, f.capacity);
    double r_tot = s.v_max;
    if (!boundary) {
        r_tot = s.aggregate_mode == AggregateMode::scaled ? s.b_mean / unit_min_cost(s)
                                                          : detail::solve_convolved_r_tot(s, mc);
    }
    AdmissionPlan plan = detail::fill_plan(s, r_tot, boundary, mc);
    plan.feasible = true;
    plan.binding = boundary ? BindingConstraint::both : BindingConstraint::billing_target;
    return plan;
}

/// Like plan_devices, but an infeasible target yields the volume-capped plan
/// (n_a = v_max / (A r_a), feasible = false) instead of throwing.
inline AdmissionPlan plan_devices_capped(const AggregatorScenario& s, const MonteCarloOptions& mc = {}) {
    const FeasibilityReport f = check_feasibility(s, mc);
    if (f.feasible) {
        return plan_devices(s, mc);
    }
    AdmissionPlan plan = detail::fill_plan(s, s.v_max, true, mc);
    plan.feasible = false;
    plan.binding = BindingConstraint::volume_cap;
    return plan;
}

}  // namespace qcouple

#endif
