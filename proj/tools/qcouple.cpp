// qcouple: analyze, optimize, simulate, sweep and plan IoT energy / cloud billing scenarios.

#include <iostream>
#include <string>

#include <CLI11/CLI11.hpp>

#include "qcouple/commands.hpp"

int main(int argc, char** argv) {
    CLI::App app{"IoT device energy and cloud billing coupling"};
    app.require_subcommand(1);

    qcouple::cli::Options opt;
    std::string scenario;
    std::string command;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--scenario", scenario, "scenario JSON file")->required()->check(CLI::ExistingFile);
        sub->add_option("--seed", opt.seed, "override sim.seed");
        sub->add_option("--out", opt.out_path, "write CSV here");
        sub->callback([&command, sub] { command = sub->get_name(); });
    };

    CLI::App* analyze = app.add_subcommand("analyze", "expected energy, variation and billing");
    add_common(analyze);
    analyze->add_option("--ce", opt.c_e, "activation threshold c_e (default 1)");
    analyze->add_option("--cb", opt.c_b, "autoscaling quota c_b in bits (default: optimal)");

    CLI::App* optimize = app.add_subcommand("optimize", "solve thresholds, quota and device plan");
    add_common(optimize);

    CLI::App* simulate = app.add_subcommand("simulate", "Monte Carlo versus analytic");
    add_common(simulate);
    simulate->add_option("--ce", opt.c_e, "activation threshold c_e (default 1)");
    simulate->add_option("--cb", opt.c_b, "autoscaling quota c_b in bits (default: optimal)");

    CLI::App* sweep = app.add_subcommand("sweep", "CSV sweep over c_e or c_b");
    add_common(sweep);
    sweep->add_option("--variable", opt.variable, "ce or cb")->check(CLI::IsMember({"ce", "cb"}));
    sweep->add_option("--from", opt.from, "first grid value (ce: 0.1, cb: 0.1 r_tot)");
    sweep->add_option("--to", opt.to, "last grid value (ce: 2.0, cb: 4 r_tot)");
    sweep->add_option("--steps", opt.steps, "grid points")->check(CLI::PositiveNumber);
    sweep->add_option("--zone", opt.zone, "zone index for ce sweeps");
    sweep->add_option("--metric", opt.metric, "exp or var for ce sweeps")->check(CLI::IsMember({"exp", "var"}));

    CLI::App* plan = app.add_subcommand("plan", "feasibility and device counts");
    add_common(plan);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : qcouple::cli::bad_input;
    }
    return qcouple::cli::run(command, scenario, opt, std::cout, std::cerr);
}
