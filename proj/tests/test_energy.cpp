#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "oracle.hpp"
#include "qcouple/energy.hpp"

using namespace qcouple;
using QVD = QueryVolumeDistribution;

namespace {

constexpr double g_camera = 1.78e-6;
constexpr double i_camera = 6.10e-7;

std::vector<QVD> all_families(double r) {
    return {QVD::uniform(r),     QVD::pareto(r, 2.5),     QVD::pareto(r, 4.0), QVD::pareto(r, 8.0),
            QVD::exponential(r), QVD::half_gaussian(r), QVD::fixed(r)};
}

std::string name_of(const QVD& d) {
    return std::string(to_string(d.family())) + (d.family() == Family::pareto ? std::to_string(d.shape()) : "");
}

DeviceProfile dev(const QVD& d) { return {d, 60.0}; }

}  // namespace

TEST(Energy, Examples) {
    const EnergyParams camera(g_camera, i_camera, 0.75);
    EXPECT_NEAR(expected_energy(camera, dev(QVD::exponential(82616))), 0.1588, 0.01 * 0.1588);
    EXPECT_NEAR(energy_variation(camera, dev(QVD::exponential(82616))), 0.0201, 0.05 * 0.0201);
    EXPECT_DOUBLE_EQ(expected_energy({1.0, 1.0, 1.0}, dev(QVD::uniform(1.0))), 1.25);
    EXPECT_EQ(energy_variation({1.0, 1.0, 2.0}, dev(QVD::uniform(1.0))), 0.0);
    EXPECT_NEAR(energy_variation({1.0, 0.0, 0.75}, dev(QVD::pareto(1.0, 4.0))), 0.1875, 1e-15);
    for (const auto& d : all_families(3.0)) {
        EXPECT_DOUBLE_EQ(expected_energy({2.0, 0.5, 0.0}, dev(d)), 6.0) << name_of(d);
    }
}

TEST(Energy, ClosedFormMatchesGenericAndQuadrature) {
    std::mt19937_64 rng(314);
    std::uniform_real_distribution<double> log_r(0.0, 7.0);
    std::uniform_real_distribution<double> ce(0.0, 3.0);
    std::uniform_real_distribution<double> rate(1e-7, 3e-6);
    for (int k = 0; k < 60; ++k) {
        const double r = std::pow(10.0, log_r(rng));
        const EnergyParams p(rate(rng), rate(rng), ce(rng));
        for (const auto& d : all_families(r)) {
            const double e = expected_energy(p, dev(d));
            const double v = energy_variation(p, dev(d));
            EXPECT_LE(oracle::rel_diff(e, expected_energy_generic(p, dev(d))), 1e-10) << name_of(d);
            EXPECT_LE(oracle::rel_diff(v, energy_variation_generic(p, dev(d))), 1e-10) << name_of(d);
            EXPECT_LE(oracle::rel_diff(e, oracle::energy_exp(p.g_e, p.i_e, p.c_e, d)), 1e-8) << name_of(d);
            EXPECT_LE(oracle::rel_diff(v, oracle::energy_var(p.g_e, p.c_e, d)), 1e-8) << name_of(d);
        }
    }
}

TEST(Energy, ConvexAndMonotone) {
    for (const auto& d : all_families(81920.0)) {
        std::vector<double> e;
        std::vector<double> v;
        for (int k = 0; k < 100; ++k) {
            const EnergyParams p(g_camera, i_camera, 0.03 * k);
            e.push_back(expected_energy(p, dev(d)));
            v.push_back(energy_variation(p, dev(d)));
        }
        for (std::size_t k = 1; k < e.size(); ++k) {
            ASSERT_GE(e[k], e[k - 1]) << name_of(d);
            ASSERT_LE(v[k], v[k - 1]) << name_of(d);
        }
        for (std::size_t k = 2; k < e.size(); ++k) {
            ASSERT_GE(e[k] - 2.0 * e[k - 1] + e[k - 2], -1e-8) << name_of(d);
            ASSERT_GE(v[k] - 2.0 * v[k - 1] + v[k - 2], -1e-8) << name_of(d);
        }
    }
}

TEST(Energy, VariationStrictlyDecreasingWhereIdleIsPossible) {
    for (const auto& d : all_families(1.0)) {
        if (d.family() == Family::fixed) {
            continue;
        }
        const double top = d.family() == Family::uniform ? 1.99 : 4.0;
        for (double c = 0.01; c < top; c += 0.01) {
            EXPECT_GT(energy_variation({1.0, 1.0, c}, dev(d)), energy_variation({1.0, 1.0, c + 0.01}, dev(d)))
                << name_of(d) << " c=" << c;
        }
    }
}

TEST(Energy, RegimeFlags) {
    const auto u = evaluate_energy({1.0, 1.0, 2.5}, dev(QVD::uniform(1.0)));
    EXPECT_TRUE(u.beyond_uniform_support);
    EXPECT_DOUBLE_EQ(u.expected, 1.0 + 1.5);
    EXPECT_EQ(u.variation, 0.0);
    const auto p = evaluate_energy({1.0, 1.0, 0.5}, dev(QVD::pareto(2.0, 4.0)));
    EXPECT_TRUE(p.never_idle);
    EXPECT_EQ(p.expected, 2.0);
    const auto q = evaluate_energy({1.0, 1.0, 0.8}, dev(QVD::pareto(2.0, 4.0)));
    EXPECT_FALSE(q.never_idle);
    EXPECT_THROW(expected_energy({0.0, 1.0, 1.0}, dev(QVD::uniform(1.0))), domain_error);
    EXPECT_THROW(expected_energy({1.0, -1.0, 1.0}, dev(QVD::uniform(1.0))), domain_error);
    EXPECT_THROW(expected_energy({1.0, 1.0, -0.1}, dev(QVD::uniform(1.0))), domain_error);
}

TEST(Energy, ParetoContinuousAcrossIdleOnset) {
    for (double a : {2.2, 3.95, 8.0}) {
        const QVD d = QVD::pareto(1e5, a);
        const double onset = (a - 1.0) / a;
        for (double eps : {1e-9, 1e-6}) {
            const double lo = expected_energy({g_camera, i_camera, onset - eps}, dev(d));
            const double hi = expected_energy({g_camera, i_camera, onset + eps}, dev(d));
            EXPECT_LE(oracle::rel_diff(lo, hi), 1e-8);
            const double vlo = energy_variation({g_camera, i_camera, onset - eps}, dev(d));
            const double vhi = energy_variation({g_camera, i_camera, onset + eps}, dev(d));
            // E_var has slope -2 g^2 r U1 there, so the gap scales with eps
            EXPECT_LE(oracle::rel_diff(vlo, vhi), 100.0 * eps);
        }
    }
}

TEST(SolvePrimary, Examples) {
    EXPECT_NEAR(solve_primary({1.0, 1.0}, dev(QVD::uniform(1.0)), 1.25), 1.0, 1e-15);
    const double e = expected_energy({1.0, 1.0, std::log(2.0)}, dev(QVD::exponential(1.0)));
    EXPECT_NEAR(e, 1.19315, 1e-5);
    EXPECT_NEAR(solve_primary({1.0, 1.0}, dev(QVD::exponential(1.0)), e), std::log(2.0), 1e-12);
    EXPECT_NEAR(solve_primary({1.0, 1.0}, dev(QVD::exponential(1.0)), 1.19315), 0.69315, 1e-5);
    EXPECT_LT(solve_primary({1.0, 1.0}, dev(QVD::uniform(1.0)), 1.0 + 1e-12), 1e-5);
    EXPECT_NEAR(solve_primary({1.0, 2.0}, dev(QVD::fixed(3.0)), 9.0), 2.0, 1e-15);
}

TEST(SolvePrimary, Errors) {
    EXPECT_THROW(solve_primary({1.0, 1.0}, dev(QVD::exponential(1.0)), 1.0), infeasible_error);
    EXPECT_THROW(solve_primary({1.0, 1.0}, dev(QVD::exponential(1.0)), 0.5), infeasible_error);
    EXPECT_THROW(solve_primary({1.0, 1.0}, dev(QVD::uniform(1.0)), 2.0), domain_error);
    EXPECT_THROW(solve_primary({1.0, 0.0}, dev(QVD::uniform(1.0)), 1.5), domain_error);
}

TEST(SolvePrimary, ClosedAndNumericAgree) {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0.01, 0.99);
    for (int k = 0; k < 200; ++k) {
        const EnergyRates rates{1.0 + u(rng), u(rng)};
        for (const auto& d : all_families(1.0 + 100.0 * u(rng))) {
            const double r = d.mean();
            double budget = rates.g_e * r * (1.0 + u(rng));
            if (d.family() == Family::uniform) {
                budget = r * (rates.g_e + rates.i_e * u(rng));
            }
            const double a = solve_primary(rates, dev(d), budget);
            const double b = solve_primary_numeric(rates, dev(d), budget);
            EXPECT_LE(oracle::rel_diff(a, b), 1e-9) << name_of(d);
        }
    }
}

TEST(SolveDual, Examples) {
    EXPECT_NEAR(solve_dual({1.0, 1.0}, dev(QVD::uniform(1.0)), 1.0 / 6.0), 1.0, 1e-15);
    EXPECT_EQ(solve_dual({1.0, 1.0}, dev(QVD::uniform(1.0)), 4.0 / 3.0), 0.0);
    EXPECT_EQ(solve_dual({1.0, 1.0}, dev(QVD::uniform(1.0)), 5.0), 0.0);
    EXPECT_NEAR(solve_dual({1.0, 1.0}, dev(QVD::pareto(1.0, 4.0)), 0.1875), 0.75, 1e-14);
    EXPECT_NEAR(solve_dual({1.0, 1.0}, dev(QVD::exponential(1.0)), 2.0 * std::exp(-1.5)), 1.5, 1e-14);
    EXPECT_NEAR(solve_dual({1.0, 1.0}, dev(QVD::fixed(2.0)), 1.0), 0.5, 1e-15);
    EXPECT_THROW(solve_dual({1.0, 1.0}, dev(QVD::uniform(1.0)), 0.0), domain_error);
}

TEST(SolveDual, DeploymentThresholds) {
    // fitted camera traces at T = 600 s and 1200 s
    const EnergyRates rates{g_camera, i_camera};
    const DeviceProfile short_interval{QVD::pareto(816250.0, 3.89), 600.0};
    const DeviceProfile long_interval{QVD::pareto(1569700.0, 3.95), 1200.0};
    const double c600 = solve_dual(rates, short_interval, 0.35);
    const double c1200 = solve_dual(rates, long_interval, 1.00);
    EXPECT_NEAR(c600, 0.82, 0.005);
    EXPECT_NEAR(c1200, 0.92, 0.005);
    EXPECT_NEAR(expected_energy(EnergyParams(rates, c600), short_interval), 1.49, 0.03 * 1.49);
    EXPECT_NEAR(expected_energy(EnergyParams(rates, c1200), long_interval), 2.89, 0.03 * 2.89);
}

TEST(SolveDual, ParetoBelowIdleOnset) {
    // budgets between E_var at the onset and E_var(0) land in the never-idle regime
    const QVD d = QVD::pareto(1.0, 4.0);
    const double onset = 0.75;
    const double v_onset = energy_variation({1.0, 1.0, onset}, dev(d));
    const double v0 = energy_variation({1.0, 1.0, 0.0}, dev(d));
    for (double t : {0.1, 0.5, 0.9}) {
        const double budget = v_onset + t * (v0 - v_onset);
        const double c = solve_dual({1.0, 1.0}, dev(d), budget);
        EXPECT_LT(c, onset);
        EXPECT_LE(oracle::rel_diff(energy_variation({1.0, 1.0, c}, dev(d)), budget), 1e-12);
        EXPECT_LE(oracle::rel_diff(c, solve_dual_numeric({1.0, 1.0}, dev(d), budget)), 1e-9);
    }
}

TEST(SolveDual, ClosedAndNumericAgree) {
    std::mt19937_64 rng(6);
    std::uniform_real_distribution<double> u(0.001, 0.999);
    for (int k = 0; k < 200; ++k) {
        const EnergyRates rates{0.5 + u(rng), u(rng)};
        for (const auto& d : all_families(1.0 + 100.0 * u(rng))) {
            const double budget = u(rng) * max_energy_variation(rates, dev(d));
            const double a = solve_dual(rates, dev(d), budget);
            if (d.family() == Family::fixed) {
                EXPECT_NEAR(energy_variation({rates, a}, dev(d)), budget, 1e-9 * budget);
                continue;
            }
            EXPECT_LE(oracle::rel_diff(a, solve_dual_numeric(rates, dev(d), budget)), 1e-9) << name_of(d);
        }
    }
}

TEST(Optimality, PrimaryMeetsBudgetAndNothingFeasibleDoesBetter) {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(0.01, 0.99);
    for (int k = 0; k < 100; ++k) {
        const EnergyRates rates{g_camera * (0.5 + u(rng)), i_camera * (0.5 + u(rng))};
        for (const auto& d : all_families(1e4 + 1e6 * u(rng))) {
            const double r = d.mean();
            const double budget = d.family() == Family::uniform ? r * (rates.g_e + rates.i_e * u(rng))
                                                                : rates.g_e * r + rates.i_e * r * 2.0 * u(rng);
            const double c = solve_primary(rates, dev(d), budget);
            ASSERT_LE(oracle::rel_diff(expected_energy({rates, c}, dev(d)), budget), 1e-9) << name_of(d);
            // a larger threshold breaks the budget, a smaller one cannot lower E_var
            EXPECT_GT(expected_energy({rates, c + 1e-4}, dev(d)), budget) << name_of(d);
            if (c >= 1e-4) {
                EXPECT_GE(energy_variation({rates, c - 1e-4}, dev(d)), energy_variation({rates, c}, dev(d)))
                    << name_of(d);
            }
        }
    }
}
