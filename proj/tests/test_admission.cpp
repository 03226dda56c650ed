#include <cmath>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "oracle.hpp"
#include "qcouple/admission.hpp"

using namespace qcouple;
using QVD = QueryVolumeDistribution;

namespace {

const BillingParams cloud_rates{2.09e-10, 6.27e-11, 6.27e-10, std::nullopt};

AggregatorScenario one_zone(const QVD& d, double v_max, double b_mean, const BillingParams& b) {
    AggregatorScenario s;
    s.zones = {{"z1", d, std::nullopt}};
    s.v_max = v_max;
    s.b_mean = b_mean;
    s.billing = b;
    return s;
}

}  // namespace

TEST(UnitCost, Examples) {
    EXPECT_DOUBLE_EQ(unit_min_cost({0.0, 3.0, 3.0, std::nullopt}, Family::uniform), 1.5);
    EXPECT_NEAR(unit_min_cost(cloud_rates, Family::exponential), 2.09e-10 + 6.27e-11 * std::log(11.0), 1e-25);
    EXPECT_NEAR(unit_min_cost(cloud_rates, Family::exponential), 3.593e-10, 1e-13);
    EXPECT_EQ(unit_min_cost(cloud_rates, Family::fixed), 2.09e-10);
    EXPECT_THROW(unit_min_cost(cloud_rates, Family::pareto, 1.5), domain_error);
}

TEST(Feasibility, Examples) {
    const BillingParams b{0.0, 2.0, 2.0, std::nullopt};
    const auto f = check_feasibility(one_zone(QVD::uniform(1.0), 1.0, 0.5, b));
    EXPECT_TRUE(f.feasible);
    EXPECT_DOUBLE_EQ(f.margin, 0.5);

    const double unit = unit_min_cost(cloud_rates, Family::exponential);
    const double v_max = 3e7;
    const auto edge = check_feasibility(one_zone(QVD::exponential(1e5), v_max, v_max * unit, cloud_rates));
    EXPECT_TRUE(edge.feasible);
    EXPECT_EQ(edge.margin, 0.0);
    const auto over = check_feasibility(one_zone(QVD::exponential(1e5), v_max, 2.0 * v_max * unit, cloud_rates));
    EXPECT_FALSE(over.feasible);
    EXPECT_LT(over.margin, 0.0);
}

TEST(Plan, SingleZoneInversion) {
    const QVD d = QVD::pareto(160000.0, 2.42);
    const double unit = unit_min_cost(cloud_rates, Family::pareto, 2.42);
    const auto plan = plan_devices(one_zone(d, 1e8, unit * 160000.0 * 10.0, cloud_rates));
    ASSERT_EQ(plan.counts.size(), 1u);
    EXPECT_NEAR(plan.counts[0], 10.0, 1e-12);
    EXPECT_EQ(plan.integer_counts[0], 10u);
    EXPECT_EQ(plan.binding, BindingConstraint::billing_target);
    EXPECT_TRUE(plan.feasible);
}

TEST(Plan, BoundaryReproducesFairShare) {
    AggregatorScenario s;
    s.zones = {{"a", QVD::exponential(1e5), std::nullopt}, {"b", QVD::exponential(1e6), std::nullopt}};
    s.v_max = 2e6;
    s.billing = cloud_rates;
    s.b_mean = s.v_max * unit_min_cost(cloud_rates, Family::exponential);
    const auto plan = plan_devices(s);
    EXPECT_EQ(plan.counts[0], 2e6 / (2.0 * 1e5));
    EXPECT_EQ(plan.counts[1], 2e6 / (2.0 * 1e6));
    EXPECT_EQ(plan.counts[0], 10.0);
    EXPECT_EQ(plan.counts[1], 1.0);
    EXPECT_EQ(plan.binding, BindingConstraint::both);
    EXPECT_EQ(plan.r_tot, s.v_max);
}

TEST(Plan, SymmetricZones) {
    AggregatorScenario s;
    s.zones = {{"a", QVD::uniform(5e4), std::nullopt}, {"b", QVD::uniform(5e4), std::nullopt}};
    s.v_max = 1e7;
    s.b_mean = 1e-3;
    s.billing = cloud_rates;
    const auto plan = plan_devices(s);
    EXPECT_EQ(plan.counts[0], plan.counts[1]);
}

TEST(Plan, InfeasibleThrowsAndCappedPlanReports) {
    auto s = one_zone(QVD::exponential(1e5), 1e6, 1.0, cloud_rates);
    EXPECT_THROW(plan_devices(s), infeasible_error);
    const auto capped = plan_devices_capped(s);
    EXPECT_FALSE(capped.feasible);
    EXPECT_EQ(capped.binding, BindingConstraint::volume_cap);
    EXPECT_EQ(capped.counts[0], 10.0);
    EXPECT_EQ(capped.r_tot, 1e6);
    EXPECT_LT(capped.billing, s.b_mean);
}

TEST(Plan, IntegerCompanion) {
    const double unit = unit_min_cost(cloud_rates, Family::uniform);
    const auto plan = plan_devices(one_zone(QVD::uniform(1e5), 1e8, unit * 1e5 * 7.6, cloud_rates));
    EXPECT_NEAR(plan.counts[0], 7.6, 1e-12);
    EXPECT_EQ(plan.integer_counts[0], 7u);
    EXPECT_DOUBLE_EQ(plan.integer_r_tot, 7e5);
    EXPECT_NEAR(plan.integer_billing, unit * 7e5, 1e-22);
    EXPECT_LT(plan.integer_billing, plan.billing);
}

TEST(Plan, CouplingIdentityAndFairnessProperties) {
    std::mt19937_64 rng(2718);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const std::vector<Family> families{Family::uniform, Family::pareto, Family::exponential, Family::half_gaussian,
                                       Family::fixed};
    for (int k = 0; k < 200; ++k) {
        const Family fam = families[k % families.size()];
        const double shape = 2.1 + 6.0 * u(rng);
        AggregatorScenario s;
        const int A = 1 + static_cast<int>(4.0 * u(rng));
        for (int a = 0; a < A; ++a) {
            s.zones.push_back({"z" + std::to_string(a), QVD::make(fam, std::pow(10.0, 3.0 + 4.0 * u(rng)), shape),
                               std::nullopt});
        }
        s.billing = {1e-10 * u(rng), 1e-11 + 1e-10 * u(rng), 1e-9 * u(rng), std::nullopt};
        s.v_max = std::pow(10.0, 6.0 + 3.0 * u(rng));
        const double unit = unit_min_cost(s);
        s.b_mean = s.v_max * unit * (0.01 + 0.99 * u(rng));
        const auto plan = plan_devices(s);
        const QVD agg = scenario_unit_aggregate(s).with_mean(plan.r_tot);
        EXPECT_LE(oracle::rel_diff(min_billing(s.billing, agg), s.b_mean), 1e-9);
        EXPECT_LE(plan.r_tot, s.v_max * (1.0 + 1e-12));
        double total = 0.0;
        for (std::size_t a = 0; a < s.zones.size(); ++a) {
            total += plan.counts[a] * s.zones[a].dist.mean();
            EXPECT_LE(std::abs(plan.counts[a] * s.zones[a].dist.mean() - plan.r_tot / A), 1e-12 * plan.r_tot);
        }
        EXPECT_LE(oracle::rel_diff(total, plan.r_tot), 1e-14);
    }
}

TEST(Plan, DifferentParetoShapesNeedAggregateShape) {
    AggregatorScenario s;
    s.zones = {{"1", QVD::pareto(160000.0, 2.42), std::nullopt}, {"2", QVD::pareto(4915600.0, 3.27), std::nullopt}};
    s.v_max = 2e7;
    s.b_mean = 2e-3;
    s.billing = cloud_rates;
    EXPECT_THROW(plan_devices(s), unsupported_error);
    s.aggregate_shape = 4.8;
    const auto plan = plan_devices(s);
    EXPECT_TRUE(plan.feasible);
    EXPECT_NEAR(plan.r_tot, 2e-3 / unit_min_cost(cloud_rates, Family::pareto, 4.8), 1e-3);
}

TEST(MonteCarlo, FixedAggregateIsExact) {
    const std::vector<ZoneLoad> zones{{QVD::fixed(100.0), 3.0}};
    const auto est = mc_min_billing(cloud_rates, zones, {1, 500});
    EXPECT_LE(oracle::rel_diff(est.value, 2.09e-10 * 300.0), 1e-14);
    EXPECT_LE(est.standard_error, 1e-14 * est.value);
    EXPECT_EQ(est.quota, 300.0);
}

TEST(MonteCarlo, AgreesWithClosedFormForScaledEquivalent) {
    // one exponential device: convolution and scaling coincide
    const std::vector<ZoneLoad> zones{{QVD::exponential(2e5), 1.0}};
    const auto est = mc_min_billing(cloud_rates, zones, {3, 200000});
    const double exact = min_billing(cloud_rates, QVD::exponential(2e5));
    EXPECT_LE(std::abs(est.value - exact), 4.0 * est.standard_error + 1e-3 * exact);
    EXPECT_NEAR(est.quota, 2e5 * std::log(11.0), 0.02 * 2e5 * std::log(11.0));
}

TEST(MonteCarlo, ConvolvedPlanHitsTarget) {
    AggregatorScenario s;
    s.zones = {{"u", QVD::uniform(1e5), std::nullopt}, {"e", QVD::exponential(2e5), std::nullopt}};
    s.v_max = 4e6;
    s.billing = cloud_rates;
    s.aggregate_mode = AggregateMode::convolved;
    s.b_mean = 5e-4;
    const MonteCarloOptions mc{11, 2000};
    const auto plan = plan_devices(s, mc);
    ASSERT_TRUE(plan.billing_standard_error.has_value());
    EXPECT_LE(std::abs(plan.billing - s.b_mean), 1e-6 * s.b_mean);
    EXPECT_LE(plan.r_tot, s.v_max);
    EXPECT_NEAR(plan.counts[0] * 1e5, plan.counts[1] * 2e5, 1e-9 * plan.r_tot);
    // deterministic under common random numbers
    const auto again = plan_devices(s, mc);
    EXPECT_EQ(plan.r_tot, again.r_tot);
    // infeasible under the cap
    s.b_mean = 1.0;
    EXPECT_THROW(plan_devices(s, mc), infeasible_error);
    EXPECT_EQ(plan_devices_capped(s, mc).binding, BindingConstraint::volume_cap);
}

TEST(MonteCarlo, DrawBudgetGuard) {
    const std::vector<ZoneLoad> zones{{QVD::uniform(1.0), 1e6}};
    EXPECT_THROW(mc_min_billing(cloud_rates, zones, {1, 1000}), domain_error);
}

TEST(Scenario, Validation) {
    AggregatorScenario s = one_zone(QVD::uniform(1.0), 1.0, 1.0, cloud_rates);
    s.v_max = 0.0;
    EXPECT_THROW(check_feasibility(s), domain_error);
    s = one_zone(QVD::uniform(1.0), 1.0, -1.0, cloud_rates);
    EXPECT_THROW(check_feasibility(s), domain_error);
    s.zones.clear();
    s.b_mean = 1.0;
    EXPECT_THROW(check_feasibility(s), domain_error);
    EXPECT_EQ(to_string(BindingConstraint::volume_cap), "volume-cap");
}
