#ifndef QCOUPLE_SCENARIO_HPP
#define QCOUPLE_SCENARIO_HPP

// Scenario files: JSON documents with fixed sections. Every quantity is in
// base units (J/b, $/b, bits, seconds). Unknown keys are errors.
//
// {
//   "energy":      {"g_e": J/b, "i_e": J/b},
//   "constraints": {"e_max_exp": J, "e_max_var": J^2},            optional, both keys optional
//   "billing":     {"g_b": $/b, "i_b": $/b, "p_b": $/b,
//                   "b_mean": $, "c_b": bits},                      b_mean, c_b optional
//   "aggregator":  {"v_max": bits, "T": s,
//                   "aggregate_mode": "scaled" | "convolved",
//                   "alpha_b": aggregate Pareto shape},             alpha_b optional
//   "zones":       [{"label": text, "family": name, "r": bits,
//                    "alpha": shape, "count": devices}],            label, alpha, count optional
//   "sim":         {"n_intervals": n, "seed": u64,
//                   "sampler_mode": "inverse-transform" | "rejection",
//                   "instances_idle": n, "instances_active": n}     optional, all keys optional
// }

#include <cstdint>
#include <fstream>
#include <initializer_list>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "qcouple/admission.hpp"
#include "qcouple/billing.hpp"
#include "qcouple/distributions.hpp"
#include "qcouple/energy.hpp"
#include "qcouple/errors.hpp"
#include "qcouple/simulator.hpp"

namespace qcouple {

struct Scenario {
    EnergyRates energy;
    EnergyConstraints constraints;
    BillingParams billing;
    std::optional<double> b_mean;
    double v_max = 0.0;
    double T = 1.0;
    AggregateMode aggregate_mode = AggregateMode::scaled;
    std::optional<double> alpha_b;
    std::vector<ActivityZone> zones;
    SimConfig sim;

    friend bool operator==(const Scenario&, const Scenario&) = default;

    DeviceProfile device(std::size_t zone) const { return {zones.at(zone).dist, T}; }

    /// Every zone has a given device count.
    bool has_counts() const {
        for (const auto& z : zones) {
            if (!z.count) {
                return false;
            }
        }
        return true;
    }

    /// Aggregate built from the given counts.
    AggregateModel aggregate_model() const {
        if (!has_counts()) {
            throw parse_error("zones: every zone needs a count here");
        }
        AggregateModel m;
        m.mode = aggregate_mode;
        m.shape_override = alpha_b;
        for (const auto& z : zones) {
            m.zones.push_back({z.dist, *z.count});
        }
        return m;
    }

    /// Planning view; needs billing.b_mean.
    AggregatorScenario aggregator() const {
        if (!b_mean) {
            throw parse_error("billing.b_mean: required for planning");
        }
        AggregatorScenario s;
        s.zones = zones;
        s.v_max = v_max;
        s.b_mean = *b_mean;
        s.T = T;
        s.billing = billing;
        s.aggregate_mode = aggregate_mode;
        s.aggregate_shape = alpha_b;
        return s;
    }
};

namespace detail {

using json = nlohmann::json;

inline void require_object(const json& j, const std::string& path) {
    if (!j.is_object()) {
        throw parse_error(path + ": expected an object");
    }
}

inline void reject_unknown(const json& j, const std::string& path, std::initializer_list<std::string_view> keys) {
    for (const auto& [key, value] : j.items()) {
        bool known = false;
        for (auto k : keys) {
            known = known || key == k;
        }
        if (!known) {
            throw parse_error(path + ": unknown key '" + key + "'");
        }
    }
}

inline const json& require_key(const json& j, const std::string& path, const char* key) {
    auto it = j.find(key);
    if (it == j.end()) {
        throw parse_error(path + ": missing key '" + key + "'");
    }
    return *it;
}

inline double as_number(const json& v, const std::string& path) {
    if (!v.is_number()) {
        throw parse_error(path + ": expected a number");
    }
    return v.get<double>();
}

inline double number_at(const json& j, const std::string& path, const char* key) {
    return as_number(require_key(j, path, key), path + "." + key);
}

inline std::optional<double> optional_number(const json& j, const std::string& path, const char* key) {
    auto it = j.find(key);
    if (it == j.end() || it->is_null()) {
        return std::nullopt;
    }
    return as_number(*it, path + "." + key);
}

inline std::uint64_t as_unsigned(const json& v, const std::string& path) {
    if (v.is_number_unsigned()) {
        return v.get<std::uint64_t>();
    }
    if (v.is_number_integer() && v.get<std::int64_t>() >= 0) {
        return static_cast<std::uint64_t>(v.get<std::int64_t>());
    }
    throw parse_error(path + ": expected a nonnegative integer");
}

inline std::string as_string(const json& v, const std::string& path) {
    if (!v.is_string()) {
        throw parse_error(path + ": expected a string");
    }
    return v.get<std::string>();
}

// Re-raise validation failures as parse errors carrying the section path.
template <typename F>
void validated(const std::string& path, F&& check) {
    try {
        check();
    } catch (const parse_error&) {
        throw;
    } catch (const error& e) {
        throw parse_error(path + ": " + e.what());
    }
}

}  // namespace detail

inline Scenario scenario_from_json(const nlohmann::json& root) {
    using detail::json;
    detail::require_object(root, "scenario");
    detail::reject_unknown(root, "scenario", {"energy", "constraints", "billing", "aggregator", "zones", "sim"});
    Scenario s;

    const json& energy = detail::require_key(root, "scenario", "energy");
    detail::require_object(energy, "energy");
    detail::reject_unknown(energy, "energy", {"g_e", "i_e"});
    s.energy.g_e = detail::number_at(energy, "energy", "g_e");
    s.energy.i_e = detail::number_at(energy, "energy", "i_e");
    detail::validated("energy", [&] { s.energy.validate(); });

    if (auto it = root.find("constraints"); it != root.end()) {
        detail::require_object(*it, "constraints");
        detail::reject_unknown(*it, "constraints", {"e_max_exp", "e_max_var"});
        s.constraints.e_max_exp = detail::optional_number(*it, "constraints", "e_max_exp");
        s.constraints.e_max_var = detail::optional_number(*it, "constraints", "e_max_var");
        detail::validated("constraints", [&] { s.constraints.validate(); });
    }

    const json& billing = detail::require_key(root, "scenario", "billing");
    detail::require_object(billing, "billing");
    detail::reject_unknown(billing, "billing", {"g_b", "i_b", "p_b", "b_mean", "c_b"});
    s.billing.g_b = detail::number_at(billing, "billing", "g_b");
    s.billing.i_b = detail::number_at(billing, "billing", "i_b");
    s.billing.p_b = detail::number_at(billing, "billing", "p_b");
    s.billing.c_b = detail::optional_number(billing, "billing", "c_b");
    s.b_mean = detail::optional_number(billing, "billing", "b_mean");
    detail::validated("billing", [&] {
        s.billing.validate();
        if (s.b_mean && !(*s.b_mean > 0.0)) {
            throw domain_error("b_mean must be > 0");
        }
    });

    const json& agg = detail::require_key(root, "scenario", "aggregator");
    detail::require_object(agg, "aggregator");
    detail::reject_unknown(agg, "aggregator", {"v_max", "T", "aggregate_mode", "alpha_b"});
    s.v_max = detail::number_at(agg, "aggregator", "v_max");
    s.T = detail::number_at(agg, "aggregator", "T");
    if (auto it = agg.find("aggregate_mode"); it != agg.end()) {
        s.aggregate_mode = parse_aggregate_mode(detail::as_string(*it, "aggregator.aggregate_mode"));
    }
    s.alpha_b = detail::optional_number(agg, "aggregator", "alpha_b");
    if (!(s.v_max > 0.0)) {
        throw parse_error("aggregator.v_max: must be > 0");
    }
    if (!(s.T > 0.0)) {
        throw parse_error("aggregator.T: must be > 0");
    }
    if (s.alpha_b && !(*s.alpha_b > 2.0)) {
        throw parse_error("aggregator.alpha_b: must be > 2");
    }

    const json& zones = detail::require_key(root, "scenario", "zones");
    if (!zones.is_array() || zones.empty()) {
        throw parse_error("zones: expected a nonempty array");
    }
    for (std::size_t k = 0; k < zones.size(); ++k) {
        const std::string path = "zones[" + std::to_string(k) + "]";
        const json& z = zones[k];
        detail::require_object(z, path);
        detail::reject_unknown(z, path, {"label", "family", "r", "alpha", "count"});
        ActivityZone zone{"zone" + std::to_string(k + 1), QueryVolumeDistribution::fixed(1.0), std::nullopt};
        if (auto it = z.find("label"); it != z.end()) {
            zone.label = detail::as_string(*it, path + ".label");
        }
        const Family family = parse_family(detail::as_string(detail::require_key(z, path, "family"), path + ".family"));
        const double r = detail::number_at(z, path, "r");
        const auto alpha = detail::optional_number(z, path, "alpha");
        if (family == Family::pareto && !alpha) {
            throw parse_error(path + ": Pareto zones need 'alpha'");
        }
        if (family != Family::pareto && alpha) {
            throw parse_error(path + ": 'alpha' only applies to Pareto zones");
        }
        detail::validated(path, [&] { zone.dist = QueryVolumeDistribution::make(family, r, alpha.value_or(0.0)); });
        zone.count = detail::optional_number(z, path, "count");
        if (zone.count && !(*zone.count > 0.0)) {
            throw parse_error(path + ".count: must be > 0");
        }
        s.zones.push_back(zone);
    }

    if (auto it = root.find("sim"); it != root.end()) {
        const json& sim = *it;
        detail::require_object(sim, "sim");
        detail::reject_unknown(sim, "sim", {"n_intervals", "seed", "sampler_mode", "instances_idle", "instances_active"});
        if (auto f = sim.find("n_intervals"); f != sim.end()) {
            s.sim.n_intervals = detail::as_unsigned(*f, "sim.n_intervals");
        }
        if (auto f = sim.find("seed"); f != sim.end()) {
            s.sim.seed = detail::as_unsigned(*f, "sim.seed");
        }
        if (auto f = sim.find("sampler_mode"); f != sim.end()) {
            s.sim.sampler = parse_sampler_mode(detail::as_string(*f, "sim.sampler_mode"));
        }
        if (auto f = sim.find("instances_idle"); f != sim.end()) {
            s.sim.instances_idle = static_cast<std::uint32_t>(detail::as_unsigned(*f, "sim.instances_idle"));
        }
        if (auto f = sim.find("instances_active"); f != sim.end()) {
            s.sim.instances_active = static_cast<std::uint32_t>(detail::as_unsigned(*f, "sim.instances_active"));
        }
        detail::validated("sim", [&] { s.sim.validate(); });
    }
    return s;
}

inline Scenario parse_scenario(std::string_view text) {
    nlohmann::json root;
    try {
        root = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw parse_error(std::string("scenario is not valid JSON: ") + e.what());
    }
    return scenario_from_json(root);
}

inline Scenario load_scenario(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw parse_error("cannot open scenario file '" + path + "'");
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_scenario(buf.str());
}

inline nlohmann::json to_json(const Scenario& s) {
    using detail::json;
    json root;
    root["energy"] = {{"g_e", s.energy.g_e}, {"i_e", s.energy.i_e}};
    json constraints = json::object();
    if (s.constraints.e_max_exp) {
        constraints["e_max_exp"] = *s.constraints.e_max_exp;
    }
    if (s.constraints.e_max_var) {
        constraints["e_max_var"] = *s.constraints.e_max_var;
    }
    root["constraints"] = constraints;
    json billing = {{"g_b", s.billing.g_b}, {"i_b", s.billing.i_b}, {"p_b", s.billing.p_b}};
    if (s.b_mean) {
        billing["b_mean"] = *s.b_mean;
    }
    if (s.billing.c_b) {
        billing["c_b"] = *s.billing.c_b;
    }
    root["billing"] = billing;
    json agg = {{"v_max", s.v_max}, {"T", s.T}, {"aggregate_mode", std::string(to_string(s.aggregate_mode))}};
    if (s.alpha_b) {
        agg["alpha_b"] = *s.alpha_b;
    }
    root["aggregator"] = agg;
    json zones = json::array();
    for (const auto& z : s.zones) {
        json zj = {{"label", z.label}, {"family", std::string(to_string(z.dist.family()))}, {"r", z.dist.mean()}};
        if (z.dist.family() == Family::pareto) {
            zj["alpha"] = z.dist.shape();
        }
        if (z.count) {
            zj["count"] = *z.count;
        }
        zones.push_back(zj);
    }
    root["zones"] = zones;
    root["sim"] = {{"n_intervals", s.sim.n_intervals},
                   {"seed", s.sim.seed},
                   {"sampler_mode", std::string(to_string(s.sim.sampler))},
                   {"instances_idle", s.sim.instances_idle},
                   {"instances_active", s.sim.instances_active}};
    return root;
}

inline std::string serialize_scenario(const Scenario& s) { return to_json(s).dump(2) + "\n"; }

}  // namespace qcouple

#endif
