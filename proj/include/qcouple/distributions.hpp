#ifndef QCOUPLE_DISTRIBUTIONS_HPP
#define QCOUPLE_DISTRIBUTIONS_HPP

// Mean-matched query-volume distributions: every family is parameterised by
// its mean volume r (bits per monitoring interval), plus a shape for Pareto.
//
//   Uniform       on [0, 2r]
//   Pareto        shape a > 2, scale v = (a - 1) r / a, support [v, inf)
//   Exponential   rate 1/r
//   HalfGaussian  pdf 2/(pi r) exp(-x^2 / (pi r^2)), i.e. sigma = r sqrt(pi/2)
//   Fixed         point mass at r (the Pareto a -> inf limit)

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <random>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "qcouple/errors.hpp"
#include "qcouple/numerics.hpp"

namespace qcouple {

enum class Family { uniform, pareto, exponential, half_gaussian, fixed };

inline std::string_view to_string(Family f) {
    switch (f) {
        case Family::uniform: return "uniform";
        case Family::pareto: return "pareto";
        case Family::exponential: return "exponential";
        case Family::half_gaussian: return "half_gaussian";
        case Family::fixed: return "fixed";
    }
    return "unknown";
}

inline Family parse_family(std::string_view name) {
    for (Family f : {Family::uniform, Family::pareto, Family::exponential, Family::half_gaussian,
                     Family::fixed}) {
        if (name == to_string(f)) {
            return f;
        }
    }
    throw parse_error("unknown distribution family '" + std::string(name) + "'");
}

inline bool is_continuous(Family f) { return f != Family::fixed; }

/// Query volume per monitoring interval, parameterised by its mean.
class QueryVolumeDistribution {
public:
    static QueryVolumeDistribution uniform(double mean) { return {Family::uniform, mean, 0.0}; }
    static QueryVolumeDistribution pareto(double mean, double shape) {
        return {Family::pareto, mean, shape};
    }
    static QueryVolumeDistribution exponential(double mean) {
        return {Family::exponential, mean, 0.0};
    }
    static QueryVolumeDistribution half_gaussian(double mean) {
        return {Family::half_gaussian, mean, 0.0};
    }
    static QueryVolumeDistribution fixed(double mean) { return {Family::fixed, mean, 0.0}; }

    /// Builds a member of `family`; `shape` is read only for Pareto.
    static QueryVolumeDistribution make(Family family, double mean, double shape = 0.0) {
        return {family, mean, family == Family::pareto ? shape : 0.0};
    }

    Family family() const { return family_; }
    double mean() const { return mean_; }
    /// Pareto shape; zero for the other families.
    double shape() const { return shape_; }

    /// Pareto scale v = (a - 1) r / a.
    double pareto_scale() const { return (shape_ - 1.0) / shape_ * mean_; }

    double support_lower() const {
        switch (family_) {
            case Family::pareto: return pareto_scale();
            case Family::fixed: return mean_;
            default: return 0.0;
        }
    }

    double support_upper() const {
        switch (family_) {
            case Family::uniform: return 2.0 * mean_;
            case Family::fixed: return mean_;
            default: return std::numeric_limits<double>::infinity();
        }
    }

    /// E[X^2].
    double second_moment() const {
        const double r = mean_;
        switch (family_) {
            case Family::uniform: return 4.0 * r * r / 3.0;
            case Family::pareto: {
                const double v = pareto_scale();
                return shape_ * v * v / (shape_ - 2.0);
            }
            case Family::exponential: return 2.0 * r * r;
            case Family::half_gaussian: return std::numbers::pi * r * r / 2.0;
            case Family::fixed: return r * r;
        }
        return 0.0;
    }

    /// Same family and shape with a different mean.
    QueryVolumeDistribution with_mean(double mean) const { return {family_, mean, shape_}; }

    friend bool operator==(const QueryVolumeDistribution&, const QueryVolumeDistribution&) = default;

private:
    QueryVolumeDistribution(Family family, double mean, double shape)
        : family_(family), mean_(mean), shape_(shape) {
        if (!(mean > 0.0) || !std::isfinite(mean)) {
            throw domain_error("distribution mean must be finite and > 0");
        }
        if (family == Family::pareto && !(shape > 2.0 && std::isfinite(shape))) {
            throw domain_error("Pareto shape must be finite and > 2");
        }
    }

    Family family_;
    double mean_;
    double shape_;
};

namespace detail {

inline void require_nonnegative(double c, const char* what) {
    if (!(c >= 0.0)) {
        std::ostringstream msg;
        msg << what << ": argument " << c << " must be >= 0";
        throw domain_error(msg.str());
    }
}

inline double half_gaussian_z(double x, double r) { return x / (std::sqrt(std::numbers::pi) * r); }

}  // namespace detail

/// Probability density. Not defined for the Fixed family.
inline double pdf(const QueryVolumeDistribution& d, double x) {
    detail::require_nonnegative(x, "pdf");
    const double r = d.mean();
    switch (d.family()) {
        case Family::uniform: return x <= 2.0 * r ? 0.5 / r : 0.0;
        case Family::pareto: {
            const double v = d.pareto_scale();
            const double a = d.shape();
            return x < v ? 0.0 : a / v * std::pow(v / x, a + 1.0);
        }
        case Family::exponential: return std::exp(-x / r) / r;
        case Family::half_gaussian: {
            const double z = detail::half_gaussian_z(x, r);
            return 2.0 / (std::numbers::pi * r) * std::exp(-z * z);
        }
        case Family::fixed: throw unsupported_error("pdf is not defined for the fixed family");
    }
    return 0.0;
}

inline double cdf(const QueryVolumeDistribution& d, double x) {
    if (std::isnan(x)) {
        throw domain_error("cdf: NaN argument");
    }
    if (x <= 0.0 && d.family() != Family::fixed) {
        return 0.0;
    }
    const double r = d.mean();
    switch (d.family()) {
        case Family::uniform: return std::min(x / (2.0 * r), 1.0);
        case Family::pareto: {
            const double v = d.pareto_scale();
            return x <= v ? 0.0 : -std::expm1(d.shape() * std::log(v / x));
        }
        case Family::exponential: return -std::expm1(-x / r);
        case Family::half_gaussian: return numerics::erf(detail::half_gaussian_z(x, r));
        case Family::fixed: return x < r ? 0.0 : 1.0;
    }
    return 0.0;
}

/// Inverse CDF on (0, 1). For Fixed every q maps to r (degenerate inverse).
inline double quantile(const QueryVolumeDistribution& d, double q) {
    if (!(q > 0.0 && q < 1.0)) {
        std::ostringstream msg;
        msg << "quantile: probability " << q << " outside (0, 1)";
        throw domain_error(msg.str());
    }
    const double r = d.mean();
    switch (d.family()) {
        case Family::uniform: return 2.0 * r * q;
        case Family::pareto: return d.pareto_scale() * std::exp(-std::log1p(-q) / d.shape());
        case Family::exponential: return -r * std::log1p(-q);
        case Family::half_gaussian: return std::sqrt(std::numbers::pi) * r * numerics::erf_inv(q);
        case Family::fixed: return r;
    }
    return 0.0;
}

/// L(c) = E[(c - X)^+], the lower partial moment.
inline double lower_partial_moment(const QueryVolumeDistribution& d, double c) {
    detail::require_nonnegative(c, "lower_partial_moment");
    const double r = d.mean();
    switch (d.family()) {
        case Family::uniform: return c <= 2.0 * r ? c * c / (4.0 * r) : c - r;
        case Family::pareto: {
            const double v = d.pareto_scale();
            const double a = d.shape();
            if (c <= v) {
                return 0.0;
            }
            return c - r + v * std::pow(v / c, a - 1.0) / (a - 1.0);
        }
        case Family::exponential: return c + r * std::expm1(-c / r);
        case Family::half_gaussian: {
            const double z = detail::half_gaussian_z(c, r);
            return c * numerics::erf(z) + r * std::expm1(-z * z);
        }
        case Family::fixed: return std::max(0.0, c - r);
    }
    return 0.0;
}

/// U1(c) = E[(X - c)^+], the first upper partial moment.
inline double upper_partial_moment(const QueryVolumeDistribution& d, double c) {
    detail::require_nonnegative(c, "upper_partial_moment");
    const double r = d.mean();
    switch (d.family()) {
        case Family::uniform: {
            if (c >= 2.0 * r) {
                return 0.0;
            }
            const double gap = 2.0 * r - c;
            return gap * gap / (4.0 * r);
        }
        case Family::pareto: {
            const double v = d.pareto_scale();
            const double a = d.shape();
            if (c <= v) {
                return r - c;
            }
            return v * std::pow(v / c, a - 1.0) / (a - 1.0);
        }
        case Family::exponential: return r * std::exp(-c / r);
        case Family::half_gaussian: {
            const double z = detail::half_gaussian_z(c, r);
            return r * std::exp(-z * z) - c * numerics::erfc(z);
        }
        case Family::fixed: return std::max(0.0, r - c);
    }
    return 0.0;
}

/// U2(c) = E[((X - c)^+)^2], the second upper partial moment.
inline double upper_sq_partial_moment(const QueryVolumeDistribution& d, double c) {
    detail::require_nonnegative(c, "upper_sq_partial_moment");
    const double r = d.mean();
    switch (d.family()) {
        case Family::uniform: {
            if (c >= 2.0 * r) {
                return 0.0;
            }
            const double gap = 2.0 * r - c;
            return gap * gap * gap / (6.0 * r);
        }
        case Family::pareto: {
            const double v = d.pareto_scale();
            const double a = d.shape();
            if (c <= v) {
                return d.second_moment() - 2.0 * c * r + c * c;
            }
            return 2.0 * v * v * std::pow(v / c, a - 2.0) / ((a - 1.0) * (a - 2.0));
        }
        case Family::exponential: return 2.0 * r * r * std::exp(-c / r);
        case Family::half_gaussian: {
            const double z = detail::half_gaussian_z(c, r);
            return 0.5 * ((2.0 * c * c + std::numbers::pi * r * r) * numerics::erfc(z)
                          - 2.0 * c * r * std::exp(-z * z));
        }
        case Family::fixed: {
            const double gap = std::max(0.0, r - c);
            return gap * gap;
        }
    }
    return 0.0;
}

// ---------------------------------------------------------------------------
// Sampling
// ---------------------------------------------------------------------------

using Engine = std::mt19937_64;

enum class SamplerMode { inverse_transform, rejection };

inline std::string_view to_string(SamplerMode m) {
    return m == SamplerMode::inverse_transform ? "inverse-transform" : "rejection";
}

inline SamplerMode parse_sampler_mode(std::string_view name) {
    if (name == "inverse-transform") {
        return SamplerMode::inverse_transform;
    }
    if (name == "rejection") {
        return SamplerMode::rejection;
    }
    throw parse_error("unknown sampler mode '" + std::string(name) + "'");
}

/// SplitMix64 finaliser, used to derive independent sub-seeds.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

/// Sub-seed for stream `index` of a run seeded with `seed`.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index, std::uint64_t lane = 0) {
    return splitmix64(splitmix64(seed ^ splitmix64(index)) + lane);
}

/// Uniform double in the open interval (0, 1) from the top 53 bits.
inline double uniform_open01(Engine& engine) {
    return (static_cast<double>(engine() >> 11) + 0.5) * 0x1p-53;
}

namespace detail {

inline double draw_rejection(const QueryVolumeDistribution& d, Engine& engine) {
    const double r = d.mean();
    switch (d.family()) {
        case Family::uniform:
            // The proposal is the target; every candidate is accepted.
            return 2.0 * r * uniform_open01(engine);
        case Family::pareto: {
            // Proposal Pareto(a - 1, v); density ratio bounded by a/(a-1), acceptance v/x.
            const double v = d.pareto_scale();
            const double a = d.shape();
            for (;;) {
                const double x = v * std::pow(uniform_open01(engine), -1.0 / (a - 1.0));
                if (uniform_open01(engine) <= v / x) {
                    return x;
                }
            }
        }
        case Family::exponential: {
            // Half-Cauchy proposal with scale r; bound pi/2, attained at 0.
            for (;;) {
                const double y = std::tan(0.5 * std::numbers::pi * uniform_open01(engine));
                const double accept = (1.0 + y * y) * std::exp(-y);
                if (uniform_open01(engine) <= accept) {
                    return r * y;
                }
            }
        }
        case Family::half_gaussian: {
            // Exponential proposal in units of sigma; acceptance exp(-(y-1)^2 / 2).
            const double sigma = r * std::sqrt(0.5 * std::numbers::pi);
            for (;;) {
                const double y = -std::log(uniform_open01(engine));
                if (uniform_open01(engine) <= std::exp(-0.5 * (y - 1.0) * (y - 1.0))) {
                    return sigma * y;
                }
            }
        }
        case Family::fixed: return r;
    }
    return r;
}

}  // namespace detail

/// One draw from `d` using `engine`.
inline double draw(const QueryVolumeDistribution& d, Engine& engine,
                   SamplerMode mode = SamplerMode::inverse_transform) {
    if (d.family() == Family::fixed) {
        return d.mean();
    }
    if (mode == SamplerMode::rejection) {
        return detail::draw_rejection(d, engine);
    }
    return quantile(d, uniform_open01(engine));
}

/// n draws from an engine seeded with `seed`. Identical seeds give identical output.
inline std::vector<double> sample(const QueryVolumeDistribution& d, std::uint64_t seed, std::size_t n,
                                  SamplerMode mode = SamplerMode::inverse_transform) {
    if (n == 0) {
        throw domain_error("sample: n must be >= 1");
    }
    Engine engine(seed);
    std::vector<double> out(n);
    for (auto& x : out) {
        x = draw(d, engine, mode);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Aggregation at the IoT aggregator
// ---------------------------------------------------------------------------

/// Devices of one activity zone: their distribution and how many there are.
struct ZoneLoad {
    QueryVolumeDistribution dist;
    double count;

    friend bool operator==(const ZoneLoad&, const ZoneLoad&) = default;
};

enum class AggregateMode { scaled, convolved };

inline std::string_view to_string(AggregateMode m) {
    return m == AggregateMode::scaled ? "scaled" : "convolved";
}

inline AggregateMode parse_aggregate_mode(std::string_view name) {
    if (name == "scaled") {
        return AggregateMode::scaled;
    }
    if (name == "convolved") {
        return AggregateMode::convolved;
    }
    throw parse_error("unknown aggregate mode '" + std::string(name) + "'");
}

namespace detail {

inline void validate_zones(std::span<const ZoneLoad> zones) {
    if (zones.empty()) {
        throw domain_error("aggregate: zone list is empty");
    }
    for (const auto& z : zones) {
        if (!(z.count > 0.0) || !std::isfinite(z.count)) {
            throw domain_error("aggregate: device counts must be finite and > 0");
        }
    }
}

}  // namespace detail

/// Total mean volume r_tot = sum of count * mean.
inline double total_mean(std::span<const ZoneLoad> zones) {
    double total = 0.0;
    for (const auto& z : zones) {
        total += z.count * z.dist.mean();
    }
    return total;
}

/// Aggregate that keeps the zones' family, rescaled to mean r_tot.
///
/// Zones must share one family. Pareto zones must also share one shape
/// unless `shape_override` supplies the aggregate shape explicitly.
inline QueryVolumeDistribution aggregate_scaled(std::span<const ZoneLoad> zones,
                                                std::optional<double> shape_override = std::nullopt) {
    detail::validate_zones(zones);
    const Family family = zones.front().dist.family();
    for (const auto& z : zones) {
        if (z.dist.family() != family) {
            throw unsupported_error("aggregate: scaled mode needs a single family across zones");
        }
    }
    const double r_tot = total_mean(zones);
    if (family != Family::pareto) {
        if (shape_override) {
            throw domain_error("aggregate: a shape override only applies to Pareto zones");
        }
        return QueryVolumeDistribution::make(family, r_tot);
    }
    if (shape_override) {
        return QueryVolumeDistribution::pareto(r_tot, *shape_override);
    }
    const double shape = zones.front().dist.shape();
    for (const auto& z : zones) {
        if (z.dist.shape() != shape) {
            throw unsupported_error(
                "aggregate: Pareto zones with different shapes need an explicit aggregate shape");
        }
    }
    return QueryVolumeDistribution::pareto(r_tot, shape);
}

/// Sum of independent per-device draws for one interval.
///
/// A fractional count n contributes floor(n) full draws plus one draw scaled
/// by the fractional part, which keeps the sum continuous in n.
inline double draw_convolved(std::span<const ZoneLoad> zones, Engine& engine,
                             SamplerMode mode = SamplerMode::inverse_transform) {
    double total = 0.0;
    for (const auto& z : zones) {
        const double whole = std::floor(z.count);
        const auto n = static_cast<std::size_t>(whole);
        for (std::size_t j = 0; j < n; ++j) {
            total += draw(z.dist, engine, mode);
        }
        const double frac = z.count - whole;
        if (frac > 0.0) {
            total += frac * draw(z.dist, engine, mode);
        }
    }
    return total;
}

/// n_samples Monte Carlo realisations of the convolved aggregate.
inline std::vector<double> aggregate_convolved(std::span<const ZoneLoad> zones, std::uint64_t seed,
                                               std::size_t n_samples,
                                               SamplerMode mode = SamplerMode::inverse_transform) {
    detail::validate_zones(zones);
    if (n_samples == 0) {
        throw domain_error("aggregate: n_samples must be >= 1");
    }
    std::vector<double> out(n_samples);
    for (std::size_t i = 0; i < n_samples; ++i) {
        Engine engine(derive_seed(seed, i));
        out[i] = draw_convolved(zones, engine, mode);
    }
    return out;
}

using AggregateResult = std::variant<QueryVolumeDistribution, std::vector<double>>;

/// Scaled mode returns a distribution; convolved mode returns samples.
inline AggregateResult aggregate(std::span<const ZoneLoad> zones, AggregateMode mode, std::uint64_t seed,
                                 std::size_t n_samples,
                                 std::optional<double> shape_override = std::nullopt) {
    if (mode == AggregateMode::scaled) {
        return aggregate_scaled(zones, shape_override);
    }
    return aggregate_convolved(zones, seed, n_samples);
}

/// How the aggregator's upload volume is generated from its zones.
struct AggregateModel {
    std::vector<ZoneLoad> zones;
    AggregateMode mode = AggregateMode::scaled;
    std::optional<double> shape_override;

    double mean() const { return total_mean(zones); }

    /// In-family aggregate; only valid in scaled mode.
    QueryVolumeDistribution scaled() const { return aggregate_scaled(zones, shape_override); }

    double draw(Engine& engine, SamplerMode sampler = SamplerMode::inverse_transform) const {
        if (mode == AggregateMode::scaled) {
            return qcouple::draw(scaled(), engine, sampler);
        }
        return draw_convolved(zones, engine, sampler);
    }
};

}  // namespace qcouple

#endif
