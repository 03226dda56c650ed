#ifndef QCOUPLE_COMMANDS_HPP
#define QCOUPLE_COMMANDS_HPP

// Subcommands of the qcouple tool. Each writes its report to `out` and
// returns the process exit code:
//   0 ok, 1 bad input or usage, 2 infeasible, 3 numeric failure.

#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <system_error>
#include <vector>

#include "qcouple/admission.hpp"
#include "qcouple/billing.hpp"
#include "qcouple/energy.hpp"
#include "qcouple/errors.hpp"
#include "qcouple/scenario.hpp"
#include "qcouple/simulator.hpp"

namespace qcouple::cli {

enum ExitCode : int { ok = 0, bad_input = 1, infeasible = 2, numeric_failure = 3 };

struct Options {
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out_path;
    std::optional<double> c_e;
    std::optional<double> c_b;
    std::string variable = "ce";
    std::optional<double> from;
    std::optional<double> to;
    std::size_t steps = 20;
    std::size_t zone = 0;
    std::string metric = "exp";
};

/// Shortest round-trip text for x; `digits` > 0 limits significant digits.
inline std::string num(double x, int digits = 0) {
    if (std::isnan(x)) {
        return "nan";
    }
    char buf[64];
    const auto res = digits > 0 ? std::to_chars(buf, buf + sizeof buf, x, std::chars_format::general, digits)
                                : std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, res.ptr);
}

namespace detail {

inline std::string rel_error(double analytic, double simulated) {
    if (analytic == 0.0) {
        return simulated == 0.0 ? "0" : "inf";
    }
    return num(std::abs(simulated - analytic) / std::abs(analytic), 4);
}

// CSV goes to --out when given, else to the report stream.
inline int emit_csv(const std::string& csv, const Options& opt, std::ostream& out, std::ostream& err) {
    if (!opt.out_path) {
        out << csv;
        return ok;
    }
    std::ofstream f(*opt.out_path, std::ios::binary);
    if (!f) {
        err << "error: cannot write '" << *opt.out_path << "'\n";
        return bad_input;
    }
    f << csv;
    return ok;
}

inline void apply_overrides(Scenario& s, const Options& opt) {
    if (opt.seed) {
        s.sim.seed = *opt.seed;
    }
}

inline double quota_for(const Scenario& s, const Options& opt, const QueryVolumeDistribution& agg) {
    if (opt.c_b) {
        return *opt.c_b;
    }
    if (s.billing.c_b) {
        return *s.billing.c_b;
    }
    return optimal_quota(s.billing, agg);
}

inline void print_plan(const AdmissionPlan& plan, std::ostream& out) {
    out << "plan: feasible=" << (plan.feasible ? "yes" : "no")
        << " binding=" << to_string(plan.binding) << "\n";
    for (std::size_t a = 0; a < plan.counts.size(); ++a) {
        out << "  " << plan.labels[a] << ": n_a=" << num(plan.counts[a], 8)
            << " integer=" << plan.integer_counts[a] << "\n";
    }
    out << "  r_tot=" << num(plan.r_tot, 10) << " b  billing=" << num(plan.billing, 8) << " $";
    if (plan.billing_standard_error) {
        out << " (stderr " << num(*plan.billing_standard_error, 3) << ")";
    }
    out << "\n  integer: r_tot=" << num(plan.integer_r_tot, 10) << " b  billing="
        << num(plan.integer_billing, 8) << " $\n";
}

inline MonteCarloOptions mc_options(const Scenario& s) {
    MonteCarloOptions mc;
    mc.seed = s.sim.seed;
    mc.sampler = s.sim.sampler;
    return mc;
}

}  // namespace detail

/// E_exp and E_var per zone at c_e (default 1), billing at c_b (default: optimal).
inline int analyze(Scenario s, const Options& opt, std::ostream& out) {
    detail::apply_overrides(s, opt);
    const double c_e = opt.c_e.value_or(1.0);
    out << "c_e=" << num(c_e) << "\n";
    for (std::size_t a = 0; a < s.zones.size(); ++a) {
        const EnergyReport rep = evaluate_energy(EnergyParams(s.energy, c_e), s.device(a));
        out << s.zones[a].label << ": E_exp=" << num(rep.expected, 8) << " J  E_var=" << num(rep.variation, 8)
            << " J^2";
        if (rep.beyond_uniform_support) {
            out << "  [c_e > 2: always idle]";
        }
        if (rep.never_idle) {
            out << "  [never idle]";
        }
        out << "\n";
    }
    for (const auto& w : s.billing.warnings()) {
        out << "warning: " << w << "\n";
    }
    if (!s.has_counts()) {
        out << "billing: skipped (zones have no device counts)\n";
        return ok;
    }
    const AggregateModel model = s.aggregate_model();
    out << "r_tot=" << num(model.mean(), 10) << " b\n";
    if (model.mode == AggregateMode::convolved && !opt.c_b && !s.billing.c_b) {
        const auto est = mc_min_billing(s.billing, model.zones, detail::mc_options(s));
        out << "c_b=" << num(est.quota, 10) << " b  B_exp=" << num(est.value, 8) << " $ (Monte Carlo, stderr "
            << num(est.standard_error, 3) << ")\n";
        return ok;
    }
    const QueryVolumeDistribution agg = model.scaled();
    const double c_b = detail::quota_for(s, opt, agg);
    out << "c_b=" << num(c_b, 10) << " b  B_exp=" << num(expected_billing(s.billing, agg, c_b), 8) << " $\n";
    return ok;
}

/// Energy threshold per zone, billing quota, feasibility and device plan.
inline int optimize(Scenario s, const Options& opt, std::ostream& out, std::ostream& err) {
    detail::apply_overrides(s, opt);
    const bool has_exp = s.constraints.e_max_exp.has_value();
    const bool has_var = s.constraints.e_max_var.has_value();
    if (has_exp == has_var) {
        err << "error: optimize needs exactly one of constraints.e_max_exp and constraints.e_max_var\n";
        return bad_input;
    }
    for (std::size_t a = 0; a < s.zones.size(); ++a) {
        const DeviceProfile d = s.device(a);
        const double c_e = has_exp ? solve_primary(s.energy, d, *s.constraints.e_max_exp)
                                   : solve_dual(s.energy, d, *s.constraints.e_max_var);
        const EnergyParams p(s.energy, c_e);
        out << s.zones[a].label << ": c_e=" << num(c_e, 10) << "  E_exp=" << num(expected_energy(p, d), 8)
            << " J  E_var=" << num(energy_variation(p, d), 8) << " J^2\n";
    }
    for (const auto& w : s.billing.warnings()) {
        out << "warning: " << w << "\n";
    }
    if (s.has_counts() && s.aggregate_mode == AggregateMode::scaled) {
        const QueryVolumeDistribution agg = s.aggregate_model().scaled();
        out << "given counts: r_tot=" << num(agg.mean(), 10) << " b  c_b=" << num(optimal_quota(s.billing, agg), 10)
            << " b  min B_exp=" << num(min_billing(s.billing, agg), 8) << " $\n";
    } else if (s.has_counts()) {
        const auto est = mc_min_billing(s.billing, s.aggregate_model().zones, detail::mc_options(s));
        out << "given counts: c_b=" << num(est.quota, 10) << " b  min B_exp=" << num(est.value, 8)
            << " $ (Monte Carlo, stderr " << num(est.standard_error, 3) << ")\n";
    }
    if (!s.b_mean) {
        return ok;
    }
    const AggregatorScenario scen = s.aggregator();
    const FeasibilityReport f = check_feasibility(scen, detail::mc_options(s));
    out << "feasibility: " << (f.feasible ? "feasible" : "infeasible") << "  margin=" << num(f.margin, 8) << " $\n";
    const AdmissionPlan plan = plan_devices_capped(scen, detail::mc_options(s));
    if (scen.aggregate_mode == AggregateMode::scaled) {
        const auto unit_agg = scenario_unit_aggregate(scen).with_mean(plan.r_tot);
        out << "planned c_b=" << num(optimal_quota(s.billing, unit_agg), 10) << " b\n";
    }
    detail::print_plan(plan, out);
    return f.feasible ? ok : infeasible;
}

/// Analytic versus simulated energy per zone and billing for the given counts.
inline int simulate(Scenario s, const Options& opt, std::ostream& out, std::ostream& err) {
    detail::apply_overrides(s, opt);
    const double c_e = opt.c_e.value_or(1.0);
    std::string csv = "metric,zone,analytic,simulated,stderr,rel_error\n";
    out << "n_intervals=" << s.sim.n_intervals << " seed=" << s.sim.seed << " c_e=" << num(c_e) << "\n";
    for (std::size_t a = 0; a < s.zones.size(); ++a) {
        const DeviceProfile d = s.device(a);
        const EnergyParams p(s.energy, c_e);
        const auto sim = simulate_device_energy(p, d, s.sim);
        const double e_exp = expected_energy(p, d);
        const double e_var = energy_variation(p, d);
        const std::string& label = s.zones[a].label;
        out << label << ": E_exp analytic=" << num(e_exp, 8) << " simulated=" << num(sim.energy.value, 8)
            << " rel_err=" << detail::rel_error(e_exp, sim.energy.value) << "\n";
        out << label << ": E_var analytic=" << num(e_var, 8) << " simulated=" << num(sim.variation.value, 8)
            << " rel_err=" << detail::rel_error(e_var, sim.variation.value) << "\n";
        csv += "energy_exp," + label + "," + num(e_exp) + "," + num(sim.energy.value) + ","
               + num(sim.energy.standard_error) + "," + detail::rel_error(e_exp, sim.energy.value) + "\n";
        csv += "energy_var," + label + "," + num(e_var) + "," + num(sim.variation.value) + ","
               + num(sim.variation.standard_error) + "," + detail::rel_error(e_var, sim.variation.value) + "\n";
    }
    if (s.has_counts()) {
        const AggregateModel model = s.aggregate_model();
        const QueryVolumeDistribution agg = model.scaled();
        BillingParams b = s.billing;
        b.c_b = detail::quota_for(s, opt, agg);
        const double analytic = expected_billing(b, agg);
        const auto sim = simulate_billing(b, model, s.sim, s.T);
        out << "billing (c_b=" << num(*b.c_b, 10) << "): analytic=" << num(analytic, 8)
            << " simulated=" << num(sim.billing.value, 8) << " rel_err=" << detail::rel_error(analytic, sim.billing.value)
            << "  instances=" << num(sim.mean_instances, 6) << " instance_hours=" << num(sim.instance_hours, 6) << "\n";
        csv += "billing,aggregate," + num(analytic) + "," + num(sim.billing.value) + ","
               + num(sim.billing.standard_error) + "," + detail::rel_error(analytic, sim.billing.value) + "\n";
    }
    if (opt.out_path) {
        return detail::emit_csv(csv, opt, out, err);
    }
    return ok;
}

/// Sweep of c_e (one zone, E_exp or E_var) or c_b (aggregate billing) as CSV.
inline int sweep(Scenario s, const Options& opt, std::ostream& out, std::ostream& err) {
    detail::apply_overrides(s, opt);
    if (opt.steps < 1) {
        err << "error: --steps must be >= 1\n";
        return bad_input;
    }
    SweepSeries series;
    if (opt.variable == "ce") {
        if (opt.zone >= s.zones.size()) {
            err << "error: --zone out of range\n";
            return bad_input;
        }
        if (opt.metric != "exp" && opt.metric != "var") {
            err << "error: --metric must be exp or var\n";
            return bad_input;
        }
        const auto grid = linspace(opt.from.value_or(0.1), opt.to.value_or(2.0), opt.steps);
        const SweepKind kind = opt.metric == "exp" ? SweepKind::energy_exp : SweepKind::energy_var;
        series = energy_sweep(kind, s.energy, s.device(opt.zone), grid, s.sim);
    } else if (opt.variable == "cb") {
        const AggregateModel model = s.aggregate_model();
        const double r_tot = model.mean();
        const auto grid = linspace(opt.from.value_or(0.1 * r_tot), opt.to.value_or(4.0 * r_tot), opt.steps);
        series = billing_sweep(s.billing, model, grid, s.sim);
    } else {
        err << "error: --variable must be ce or cb\n";
        return bad_input;
    }
    std::string csv = "control,analytic,simulated,stderr\n";
    for (std::size_t j = 0; j < series.control.size(); ++j) {
        csv += num(series.control[j]) + "," + num(series.analytic[j]) + "," + num(series.simulated[j]) + ","
               + num(series.standard_error[j]) + "\n";
    }
    csv += "r_squared," + (series.r_squared ? num(*series.r_squared) : std::string("nan")) + ",,\n";
    return detail::emit_csv(csv, opt, out, err);
}

/// Feasibility and proportional-fair device counts for billing.b_mean.
inline int plan(Scenario s, const Options& opt, std::ostream& out) {
    detail::apply_overrides(s, opt);
    const AggregatorScenario scen = s.aggregator();
    const FeasibilityReport f = check_feasibility(scen, detail::mc_options(s));
    out << "feasibility: " << (f.feasible ? "feasible" : "infeasible") << "  margin=" << num(f.margin, 8)
        << " $  capacity=" << num(f.capacity, 8) << " $\n";
    const AdmissionPlan p = plan_devices_capped(scen, detail::mc_options(s));
    detail::print_plan(p, out);
    return f.feasible ? ok : infeasible;
}

/// Runs `body`, mapping library errors onto exit codes.
inline int guarded(const std::function<int()>& body, std::ostream& err) {
    try {
        return body();
    } catch (const parse_error& e) {
        err << "error: " << e.what() << "\n";
        return bad_input;
    } catch (const infeasible_error& e) {
        err << "infeasible: " << e.what() << "\n";
        return infeasible;
    } catch (const error& e) {
        err << "numeric failure: " << e.what() << "\n";
        return numeric_failure;
    }
}

/// Dispatches `command` on the scenario at `path`.
inline int run(const std::string& command, const std::string& path, const Options& opt, std::ostream& out,
               std::ostream& err) {
    return guarded(
        [&]() -> int {
            const Scenario s = load_scenario(path);
            if (command == "analyze") {
                return analyze(s, opt, out);
            }
            if (command == "optimize") {
                return optimize(s, opt, out, err);
            }
            if (command == "simulate") {
                return simulate(s, opt, out, err);
            }
            if (command == "sweep") {
                return sweep(s, opt, out, err);
            }
            if (command == "plan") {
                return plan(s, opt, out);
            }
            err << "error: unknown command '" << command << "'\n";
            return bad_input;
        },
        err);
}

}  // namespace qcouple::cli

#endif
