#ifndef QCOUPLE_SIMULATOR_HPP
#define QCOUPLE_SIMULATOR_HPP

// Monte Carlo emulation of the measurement protocol. Interval t draws its
// volumes from an engine seeded with derive_seed(seed, t), so results do not
// depend on evaluation order and different thresholds evaluated under the
// same seed see the same volumes (common random numbers).

#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "qcouple/billing.hpp"
#include "qcouple/distributions.hpp"
#include "qcouple/energy.hpp"
#include "qcouple/errors.hpp"

namespace qcouple {

struct SimConfig {
    std::size_t n_intervals = 2000;
    std::uint64_t seed = 42;
    std::uint32_t instances_idle = 3;
    std::uint32_t instances_active = 30;
    SamplerMode sampler = SamplerMode::inverse_transform;

    void validate() const {
        if (n_intervals < 1) {
            throw domain_error("simulation needs n_intervals >= 1");
        }
        if (instances_idle < 1 || instances_active < 1) {
            throw domain_error("instance counts must be >= 1");
        }
    }

    friend bool operator==(const SimConfig&, const SimConfig&) = default;
};

/// Sample mean with its standard error.
struct Estimate {
    double value = 0.0;
    double standard_error = 0.0;
};

namespace detail {

// Two passes in index order, so results are bit-reproducible.
inline Estimate summarize(std::span<const double> xs) {
    double sum = 0.0;
    for (double x : xs) {
        sum += x;
    }
    const double n = static_cast<double>(xs.size());
    const double mean = sum / n;
    double ss = 0.0;
    for (double x : xs) {
        ss += (x - mean) * (x - mean);
    }
    const double sd = xs.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
    return {mean, sd / std::sqrt(n)};
}

}  // namespace detail

struct EnergySimResult {
    Estimate energy;     ///< J per interval
    Estimate variation;  ///< J^2 per interval
};

/// Per interval: energy g_e v + i_e (c_e r - v)^+, variation sample g_e^2 ((v - c_e r)^+)^2.
inline EnergySimResult simulate_device_energy(const EnergyParams& p, const DeviceProfile& d,
                                              const SimConfig& cfg) {
    p.validate();
    cfg.validate();
    const double threshold = p.c_e * d.dist.mean();
    std::vector<double> energy(cfg.n_intervals);
    std::vector<double> variation(cfg.n_intervals);
    for (std::size_t t = 0; t < cfg.n_intervals; ++t) {
        Engine engine(derive_seed(cfg.seed, t));
        const double v = draw(d.dist, engine, cfg.sampler);
        const double excess = std::max(0.0, v - threshold);
        energy[t] = p.g_e * v + p.i_e * std::max(0.0, threshold - v);
        variation[t] = p.g_e * p.g_e * excess * excess;
    }
    return {detail::summarize(energy), detail::summarize(variation)};
}

struct BillingSimResult {
    Estimate billing;              ///< $ per interval
    double active_fraction = 0.0;  ///< share of intervals above the quota
    double mean_instances = 0.0;   ///< average running instances
    double instance_hours = 0.0;   ///< per interval, given T seconds
};

/// Per interval: g_b psi + i_b (c_b - psi)^+ + p_b (psi - c_b)^+ on the aggregate volume psi.
///
/// Instance counts only feed the instance-hours report.
inline BillingSimResult simulate_billing(const BillingParams& b, const AggregateModel& agg,
                                         const SimConfig& cfg, double T = 0.0) {
    b.validate();
    cfg.validate();
    if (!b.c_b) {
        throw domain_error("simulate_billing: no quota c_b given");
    }
    const double c = *b.c_b;
    std::optional<QueryVolumeDistribution> scaled;
    if (agg.mode == AggregateMode::scaled) {
        scaled = agg.scaled();
    }
    std::vector<double> cost(cfg.n_intervals);
    std::size_t active = 0;
    for (std::size_t t = 0; t < cfg.n_intervals; ++t) {
        Engine engine(derive_seed(cfg.seed, t));
        const double psi = scaled ? draw(*scaled, engine, cfg.sampler)
                                  : draw_convolved(agg.zones, engine, cfg.sampler);
        cost[t] = b.g_b * psi + b.i_b * std::max(0.0, c - psi) + b.p_b * std::max(0.0, psi - c);
        if (psi > c) {
            ++active;
        }
    }
    BillingSimResult out;
    out.billing = detail::summarize(cost);
    const double n = static_cast<double>(cfg.n_intervals);
    out.active_fraction = static_cast<double>(active) / n;
    out.mean_instances = cfg.instances_idle
                         + out.active_fraction * (static_cast<double>(cfg.instances_active) - cfg.instances_idle);
    out.instance_hours = out.mean_instances * T / 3600.0;
    return out;
}

// ---------------------------------------------------------------------------
// Sweeps
// ---------------------------------------------------------------------------

enum class SweepKind { energy_exp, energy_var, billing };

inline std::string_view to_string(SweepKind k) {
    switch (k) {
        case SweepKind::energy_exp: return "energy-exp";
        case SweepKind::energy_var: return "energy-var";
        case SweepKind::billing: return "billing";
    }
    return "unknown";
}

/// Coefficient of determination of `analytic` against the `simulated` reference.
/// Empty when the reference has zero spread.
inline std::optional<double> r_squared(std::span<const double> analytic, std::span<const double> simulated) {
    if (analytic.size() != simulated.size() || simulated.empty()) {
        throw domain_error("r_squared: series must be nonempty and of equal length");
    }
    double mean = 0.0;
    for (double y : simulated) {
        mean += y;
    }
    mean /= static_cast<double>(simulated.size());
    double ss_res = 0.0;
    double ss_tot = 0.0;
    for (std::size_t j = 0; j < simulated.size(); ++j) {
        ss_res += (simulated[j] - analytic[j]) * (simulated[j] - analytic[j]);
        ss_tot += (simulated[j] - mean) * (simulated[j] - mean);
    }
    if (ss_tot == 0.0) {
        return std::nullopt;
    }
    return 1.0 - ss_res / ss_tot;
}

struct SweepSeries {
    SweepKind kind = SweepKind::energy_exp;
    std::vector<double> control;
    std::vector<double> analytic;
    std::vector<double> simulated;
    std::vector<double> standard_error;
    std::optional<double> r_squared;
};

using AnalyticFn = std::function<double(double)>;
using SimulateFn = std::function<Estimate(double)>;

/// Evaluates both paths over `grid` and summarises the fit.
inline SweepSeries sweep(SweepKind kind, std::span<const double> grid, const AnalyticFn& analytic,
                         const SimulateFn& simulate) {
    if (grid.empty()) {
        throw domain_error("sweep: empty grid");
    }
    SweepSeries out;
    out.kind = kind;
    for (double x : grid) {
        const Estimate e = simulate(x);
        out.control.push_back(x);
        out.analytic.push_back(analytic(x));
        out.simulated.push_back(e.value);
        out.standard_error.push_back(e.standard_error);
    }
    out.r_squared = qcouple::r_squared(out.analytic, out.simulated);
    return out;
}

/// c_e sweep of E_exp or E_var for one device.
inline SweepSeries energy_sweep(SweepKind kind, const EnergyRates& rates, const DeviceProfile& d,
                                std::span<const double> grid, const SimConfig& cfg) {
    if (kind == SweepKind::billing) {
        throw domain_error("energy_sweep: billing is not an energy metric");
    }
    const bool exp = kind == SweepKind::energy_exp;
    auto analytic = [&](double c) {
        const EnergyParams p(rates, c);
        return exp ? expected_energy(p, d) : energy_variation(p, d);
    };
    auto simulate = [&](double c) {
        const auto r = simulate_device_energy(EnergyParams(rates, c), d, cfg);
        return exp ? r.energy : r.variation;
    };
    return sweep(kind, grid, analytic, simulate);
}

/// c_b sweep of expected billing. The analytic side uses the scaled aggregate.
inline SweepSeries billing_sweep(const BillingParams& b, const AggregateModel& agg,
                                 std::span<const double> grid, const SimConfig& cfg) {
    const QueryVolumeDistribution model = agg.scaled();
    auto analytic = [&](double c) { return expected_billing(b, model, c); };
    auto simulate = [&](double c) {
        BillingParams at = b;
        at.c_b = c;
        return simulate_billing(at, agg, cfg).billing;
    };
    return sweep(SweepKind::billing, grid, analytic, simulate);
}

/// n evenly spaced points from `from` to `to` inclusive.
inline std::vector<double> linspace(double from, double to, std::size_t n) {
    if (n == 0) {
        throw domain_error("linspace: n must be >= 1");
    }
    std::vector<double> out(n);
    for (std::size_t j = 0; j < n; ++j) {
        out[j] = n == 1 ? from : from + (to - from) * static_cast<double>(j) / static_cast<double>(n - 1);
    }
    return out;
}

}  // namespace qcouple

#endif
