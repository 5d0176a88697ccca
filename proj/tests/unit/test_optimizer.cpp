#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "test_support.hpp"
#include "v2hg/optimizer.hpp"
#include "v2hg/oracle.hpp"
#include "v2hg/verification.hpp"

using namespace v2hg;

namespace {

const SolverConfig kCfg{};

double objective_of(const OptimizationWindow& w, const FlowSchedule& s) { return evaluate_objective(w, s, kCfg).objective_value; }

FlowSchedule do_nothing(const OptimizationWindow& w) {
    auto s = FlowSchedule::zeros(w.horizon_hours());
    for (int k = 0; k < w.horizon_hours(); ++k) {
        s.e_g2h[k] = w.predicted_load_kwh[k];
        s.soc[k] = w.soc_initial;
        s.slack[k] = std::max(0.0, w.soc_goal[k] - w.soc_initial);
    }
    return s;
}

/// Random window of `h` hours with a pickup goal in the last hour.
OptimizationWindow random_window(std::mt19937_64& rng, int h) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<double> prices, loads, goals(static_cast<std::size_t>(h), 0.0);
    for (int k = 0; k < h; ++k) {
        prices.push_back(0.006 + 1.25 * 0.25 * u(rng) * (1.0 + std::sin(k / 3.0)));
        loads.push_back(2.0 * u(rng));
    }
    goals.back() = 0.8;
    const double gammas[] = {0.0, 0.25, 0.5, 0.75, 1.0};
    auto w = test::make_window(prices, loads, goals, 0.3 + 0.6 * u(rng), gammas[rng() % 5]);
    w.degradation.temperature_k = 278.15 + 25.0 * u(rng);
    return w;
}

void expect_feasible(const SolveReport& r) {
    EXPECT_TRUE(r.converged) << r.status;
    EXPECT_LE(r.max_constraint_violation, 1e-6);
}

} // namespace

TEST(EnergyCost, Examples) {
    EXPECT_DOUBLE_EQ(energy_cost(1.0, 0.0, 0.0, 0.1, 0.5), 0.1);
    EXPECT_NEAR(energy_cost(0.0, 0.0, 2.0, 0.2, 0.5), -0.2, 1e-15);
    EXPECT_DOUBLE_EQ(energy_cost(0.0, 1.0, 7.0, 0.3, 0.0), 0.3);
}

TEST(Solver, TrivialHorizonOne) {
    auto w = test::make_window({0.0}, {0.0}, {0.0}, 0.6, 0.0);
    const auto [s, r] = solve_window(w, kCfg);
    expect_feasible(r);
    EXPECT_NEAR(s.e_g2v[0], 0.0, 1e-6);
    EXPECT_NEAR(s.e_v2g[0], 0.0, 1e-6);
    EXPECT_NEAR(s.e_v2h[0], 0.0, 1e-6);
    const auto& dc = w.degradation;
    const double calendar = calendar_stress(dc.temperature_k, 0.6, *dc.params, dc.constants) /
                            (2.0 * std::sqrt(dc.state.age_hours + 1.0)) * dc.cost_per_pct();
    EXPECT_NEAR(r.objective_value, calendar, 1e-6);
    EXPECT_NEAR(r.energy_cost, 0.0, 1e-7);
}

TEST(Solver, TwoHourArbitrage) {
    auto w = test::make_window({0.02, 0.60}, {0.0, 0.0}, {0.0, 0.0}, 0.0, 1.0);
    const auto [s, r] = solve_window(w, kCfg);
    expect_feasible(r);
    EXPECT_GT(s.e_g2v[0], 5.0);
    EXPECT_GT(s.e_v2g[1], 5.0);
    EXPECT_LT(r.objective_value, objective_of(w, do_nothing(w)));
    const auto o = brute_force_oracle(w, 0.5, kCfg);
    EXPECT_LE(r.objective_value, o.objective + 1e-3);
    EXPECT_GE(r.objective_value, o.objective - 0.05);
    EXPECT_GT(o.schedule.e_g2v[0], 5.0);
    EXPECT_GT(o.schedule.e_v2g[1], 5.0);
}

TEST(Solver, DominatesGoalChargingAndAuditsClean) {
    std::mt19937_64 rng(21);
    for (int i = 0; i < 15; ++i) {
        const auto w = random_window(rng, 4 + static_cast<int>(rng() % 12));
        const auto [s, r] = solve_window(w, kCfg);
        expect_feasible(r);
        EXPECT_LE(r.objective_value, objective_of(w, goal_charging_schedule(w)) + 1e-6) << "window " << i;
    }
}

TEST(Solver, UnidirectionalAndInclusion) {
    std::mt19937_64 rng(22);
    for (int i = 0; i < 15; ++i) {
        const auto w = random_window(rng, 3 + static_cast<int>(rng() % 10));
        const auto [sb, rb] = solve_window(w, kCfg);
        const auto [su, ru] = solve_window_unidirectional(w, kCfg);
        expect_feasible(rb);
        expect_feasible(ru);
        for (int k = 0; k < w.horizon_hours(); ++k) {
            EXPECT_EQ(su.e_v2g[k], 0.0);
            EXPECT_EQ(su.e_v2h[k], 0.0);
        }
        EXPECT_LE(rb.objective_value, ru.objective_value + 1e-6) << "window " << i;
    }
}

TEST(Solver, FlatPricesChargeExactlyToGoal) {
    const double soc0 = (0.8 * 82.0 - 8.0) / 82.0; // 8 kWh short, on the 0.5 kWh lattice
    auto w = test::make_window({0.1, 0.1, 0.1}, {0.5, 0.5, 0.5}, {0.0, 0.0, 0.8}, soc0, 1.0);
    const auto [s, r] = solve_window(w, kCfg);
    expect_feasible(r);
    EXPECT_NEAR(s.soc.back(), 0.8, 1e-6);
    EXPECT_LE(s.slack.back(), 1e-6);
    const auto o = brute_force_oracle(w, 0.5, kCfg);
    EXPECT_NEAR(o.schedule.soc.back(), 0.8, 1e-9);
    EXPECT_LE(r.objective_value, o.objective + 1e-3);
}

TEST(Solver, GammaMonotone) {
    std::mt19937_64 rng(23);
    for (int i = 0; i < 20; ++i) {
        auto w = random_window(rng, 3 + static_cast<int>(rng() % 8));
        double prev = INFINITY;
        for (double g : {0.0, 0.25, 0.5, 0.75, 1.0}) {
            w.price_ratio = g;
            const auto [s, r] = solve_window(w, kCfg);
            expect_feasible(r);
            EXPECT_LE(r.objective_value, prev + 1e-6) << "window " << i << " gamma " << g;
            prev = r.objective_value;
        }
    }
}

TEST(Solver, GoalMetWhenReachable) {
    auto w = test::make_window(std::vector<double>(12, 0.15), std::vector<double>(12, 0.8),
                               std::vector<double>(12, 0.0), 0.2, 1.0);
    w.soc_goal.back() = 0.8; // 49.2 kWh in 12 h at 11 kWh/h is feasible
    const auto [s, r] = solve_window(w, kCfg);
    expect_feasible(r);
    EXPECT_LE(s.slack.back(), 1e-6);
    EXPECT_GE(s.soc.back(), 0.8 - 1e-6);
}

TEST(Solver, ShortSessionUsesSlack) {
    auto w = test::make_window({0.1, 0.1}, {0.0, 0.0}, {0.0, 0.8}, 0.2, 1.0);
    const auto [s, r] = solve_window(w, kCfg);
    expect_feasible(r);
    EXPECT_NEAR(s.e_g2v[0] + s.e_g2v[1], 22.0, 1e-4);
    EXPECT_NEAR(s.slack.back(), 0.8 - (0.2 + 22.0 / 82.0), 1e-5);
}

TEST(Solver, GridLimitRespected) {
    auto w = test::make_window({0.02, 0.6, 0.3}, {2.0, 2.0, 2.0}, {0.0, 0.0, 0.0}, 0.5, 1.0);
    w.grid_limit_kwh = {5.0, 5.0, 5.0};
    const auto [s, r] = solve_window(w, kCfg);
    expect_feasible(r);
    for (int k = 0; k < 3; ++k) EXPECT_LE(s.e_g2v[k] + s.e_g2h[k], 5.0 + 1e-6);
}

TEST(Solver, WarmStartReachesSameOptimum) {
    std::mt19937_64 rng(24);
    const auto w = random_window(rng, 10);
    const auto [s, r] = solve_window(w, kCfg);
    const auto [s2, r2] = solve_window(w, kCfg, &s);
    expect_feasible(r2);
    EXPECT_NEAR(r.objective_value, r2.objective_value, 1e-6);
}

TEST(Evaluate, ReportsViolationsAndZeroCost) {
    auto w = test::make_window({0.2, 0.2}, {0.0, 0.0}, {0.0, 0.0}, 0.5, 1.0);
    auto z = do_nothing(w);
    const auto rz = evaluate_objective(w, z, kCfg);
    EXPECT_EQ(rz.energy_cost, 0.0);
    EXPECT_LE(rz.max_constraint_violation, 0.0);

    auto bad = z;
    bad.e_v2g[0] = 8.0;
    bad.e_v2h[0] = 5.0;
    bad.e_g2h[0] = -5.0; // keeps the load balance at zero load
    bad.soc[0] = 0.5 - 13.0 / 82.0;
    bad.soc[1] = bad.soc[0];
    const auto rb = evaluate_objective(w, bad, kCfg);
    EXPECT_NEAR(rb.violations.discharge_limit, 2.0, 1e-12);
    EXPECT_NEAR(rb.violations.nonnegativity, 5.0, 1e-12);
    EXPECT_FALSE(rb.converged);

    auto short_s = FlowSchedule::zeros(1);
    EXPECT_THROW(evaluate_objective(w, short_s, kCfg), ValidationError);
}

TEST(Window, Validation) {
    auto w = test::make_window({0.1}, {0.0}, {0.0});
    EXPECT_NO_THROW(w.validate());
    w.predicted_load_kwh = {-1.0};
    EXPECT_THROW(w.validate(), ValidationError);
    w = test::make_window({0.1, 0.2}, {0.0}, {0.0, 0.0});
    EXPECT_THROW(w.validate(), ValidationError);
    w = test::make_window({0.1}, {0.0}, {0.0});
    w.degradation.params.reset();
    EXPECT_THROW(w.validate(), ValidationError);
    SolverConfig c;
    c.slack_penalty_eur_per_pp = 0.0;
    EXPECT_THROW(c.validate(), ValidationError);
}

TEST(Oracle, TrivialAndGuard) {
    auto w = test::make_window({0.0}, {0.0}, {0.0}, 0.6, 0.0);
    const auto o = brute_force_oracle(w, 0.5, kCfg);
    EXPECT_EQ(o.schedule.e_g2v[0], 0.0);
    EXPECT_EQ(o.schedule.e_v2g[0], 0.0);
    EXPECT_EQ(o.schedule.e_v2h[0], 0.0);

    auto big = test::make_window(std::vector<double>(5, 0.1), std::vector<double>(5, 0.0),
                                 std::vector<double>(5, 0.0));
    EXPECT_THROW(brute_force_oracle(big, 0.5, kCfg), DomainError);
    EXPECT_THROW(brute_force_oracle(w, 0.25, kCfg), DomainError);
}

// The lattice search against plain nested enumeration of every flow
// combination, with the slack set to the shortfall.
TEST(Oracle, MatchesNaiveEnumeration) {
    std::mt19937_64 rng(31);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 3; ++trial) {
        const int h = 3;
        std::vector<double> prices, loads;
        for (int k = 0; k < h; ++k) {
            prices.push_back(0.02 + 0.5 * u(rng));
            loads.push_back(static_cast<double>(rng() % 2));
        }
        const double eb = 82.0;
        auto w = test::make_window(prices, loads, {0.0, 0.0, 0.0}, (20.0 + static_cast<double>(rng() % 40)) / eb,
                                   trial == 0 ? 0.0 : 1.0);
        w.soc_goal[2] = std::min(1.0, w.soc_initial + 3.0 / eb);
        w.degradation.spec.max_hourly_energy_kwh = 4.0;
        const auto o = brute_force_oracle(w, 1.0, kCfg);

        struct Flow {
            double g2v, v2g, v2h;
        };
        std::vector<std::vector<Flow>> options(h);
        for (int k = 0; k < h; ++k)
            for (int a = 0; a <= 4; ++a)
                for (int b = 0; b <= 4; ++b)
                    for (int c = 0; c <= static_cast<int>(loads[k]); ++c)
                        if (b + c <= 4) options[k].push_back({double(a), double(b), double(c)});

        double best = INFINITY;
        auto s = FlowSchedule::zeros(h);
        for (const auto& f0 : options[0])
            for (const auto& f1 : options[1])
                for (const auto& f2 : options[2]) {
                    const Flow fs[] = {f0, f1, f2};
                    double soc = w.soc_initial;
                    bool ok = true;
                    for (int k = 0; k < h; ++k) {
                        s.e_g2v[k] = fs[k].g2v;
                        s.e_v2g[k] = fs[k].v2g;
                        s.e_v2h[k] = fs[k].v2h;
                        s.e_g2h[k] = loads[k] - fs[k].v2h;
                        soc += (fs[k].g2v - fs[k].v2g - fs[k].v2h) / eb;
                        if (soc < -1e-12 || soc > 1.0 + 1e-12) ok = false;
                        s.soc[k] = soc;
                        s.slack[k] = std::max(0.0, w.soc_goal[k] - soc);
                    }
                    if (!ok) continue;
                    best = std::min(best, objective_of(w, s));
                }
        EXPECT_NEAR(o.objective, best, 1e-9) << "trial " << trial;
    }
}

TEST(Oracle, SuiteAgreesWithSolver) {
    const auto suite = run_oracle_suite(10, 77, test::shipped_params());
    EXPECT_TRUE(suite.passed()) << suite.failures() << " failures";
}
