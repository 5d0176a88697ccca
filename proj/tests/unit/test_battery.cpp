#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "test_support.hpp"
#include "v2hg/battery_model.hpp"
#include "v2hg/verification.hpp"

using namespace v2hg;

namespace {

const PhysicalConstants kC{};

// Flat anode curve at U_a_ref and flat 400 V OCV, so every exponent vanishes at T_ref.
DegradationParams flat_params() {
    DegradationParams p = *test::shipped_params();
    p.anode_potential_curve = PiecewiseLinearCurve({0.0, 1.0}, {p.ua_ref_v, p.ua_ref_v});
    p.ocv_curve = PiecewiseLinearCurve({0.0, 1.0}, {400.0, 400.0});
    return p;
}

double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }

} // namespace

TEST(Curve, KnotsAndMidpoints) {
    PiecewiseLinearCurve c({0.0, 0.5, 1.0}, {1.0, 3.0, 2.0});
    EXPECT_DOUBLE_EQ(c(0.0), 1.0);
    EXPECT_DOUBLE_EQ(c(0.5), 3.0);
    EXPECT_DOUBLE_EQ(c(1.0), 2.0);
    EXPECT_DOUBLE_EQ(c(0.25), 2.0);
    EXPECT_DOUBLE_EQ(c(0.75), 2.5);
    EXPECT_FALSE(c.nondecreasing());
    EXPECT_TRUE(c.covers_unit_interval());
}

TEST(Curve, RejectsBadTables) {
    EXPECT_THROW(PiecewiseLinearCurve({0.0}, {1.0}), ValidationError);
    EXPECT_THROW(PiecewiseLinearCurve({0.0, 0.0}, {1.0, 2.0}), ValidationError);
    EXPECT_THROW(PiecewiseLinearCurve({0.0, 1.0}, {1.0}), ValidationError);
    EXPECT_THROW(PiecewiseLinearCurve({0.0, 1.0}, {1.0, NAN}), ValidationError);
}

TEST(Curve, SmoothingStaysCloseAndIsExactAtZeroWidth) {
    const auto& ocv = test::shipped_params()->ocv_curve;
    for (double x = 0.0; x <= 1.0; x += 0.01) {
        EXPECT_DOUBLE_EQ(ocv.smoothed(x, 0.0), ocv(x));
        // softplus rounding error is at most width*ln2 times the slope jump at a knot
        EXPECT_NEAR(ocv.smoothed(x, 0.005), ocv(x), 0.005 * std::log(2.0) * 480.0);
    }
    // far from any knot the rounding vanishes
    PiecewiseLinearCurve c({0.0, 0.5, 1.0}, {0.0, 1.0, 1.0});
    EXPECT_NEAR(c.smoothed(0.2, 0.001), 0.4, 1e-12);
    EXPECT_NEAR(c.smoothed(0.9, 0.001), 1.0, 1e-12);
}

TEST(Voltage, StepVoltage) {
    const auto& p = *test::shipped_params();
    EXPECT_DOUBLE_EQ(step_voltage(0.37, 0.37, p), open_circuit_voltage(0.37, p));
    EXPECT_NEAR(step_voltage(0.2, 0.8, p), (393.939 + 403.758) / 2.0, 1e-9);
    const auto flat = flat_params();
    EXPECT_DOUBLE_EQ(step_voltage(0.1, 0.9, flat), 400.0);
    EXPECT_THROW(step_voltage(0.5, 1.1, p), DomainError);
    EXPECT_THROW(open_circuit_voltage(-0.2, p), DomainError);
}

TEST(Calendar, ReferenceCollapse) {
    const auto p = flat_params();
    const double k = calendar_stress(p.t_ref_k, 0.5, p, kC);
    EXPECT_LE(rel(k, 3.694e-2 * (1.0 + 0.142)), 1e-12);
}

TEST(Calendar, ArbitrarySocAtReference) {
    const auto& p = *test::shipped_params();
    // SoC 0.3 is a knot of the shipped anode table: U_a = 0.14885 V
    const double expected =
        3.694e-2 * (std::exp(0.384 * 96485.33212 * (0.123 - 0.14885) / (8.314462618 * 298.15)) + 0.142);
    EXPECT_LE(rel(calendar_stress(298.15, 0.3, p, kC), expected), 1e-12);
}

TEST(Calendar, HigherTemperatureAges) {
    const auto& p = *test::shipped_params();
    EXPECT_GT(calendar_stress(308.15, 0.5, p, kC), calendar_stress(298.15, 0.5, p, kC));
    EXPECT_THROW(calendar_stress(0.0, 0.5, p, kC), DomainError);
}

TEST(Calendar, StepUnitCaseAndSqrtLaw) {
    const auto p = flat_params();
    const double k = calendar_stress(p.t_ref_k, 0.5, p, kC);
    DegradationState s;
    s.age_hours = 0.0; // post-increment age 1 h
    EXPECT_LE(rel(calendar_step(s, p.t_ref_k, 0.5, 1.0, p, kC), k / 2.0), 1e-12);
    DegradationState s2;
    s2.age_hours = 1.0; // post-increment age 2 h
    EXPECT_LE(rel(calendar_step(s2, p.t_ref_k, 0.5, 1.0, p, kC) / calendar_step(s, p.t_ref_k, 0.5, 1.0, p, kC),
                  1.0 / std::sqrt(2.0)),
              1e-12);
    // zero age with the floor disabled
    EXPECT_THROW(calendar_step(DegradationState{}, p.t_ref_k, 0.5, 0.0, p, kC, 0.0), DomainError);
    EXPECT_THROW(calendar_step(s, p.t_ref_k, 0.5, -1.0, p, kC), DomainError);
}

TEST(Calendar, HundredHourTraceMatchesClosedForm) {
    const auto& p = *test::shipped_params();
    const double temp = 288.15, soc = 0.6;
    const double k = calendar_stress(temp, soc, p, kC);
    for (double t0 : {24.0, 1440.0}) {
        DegradationState s;
        s.age_hours = t0;
        double sum = 0.0;
        for (int i = 0; i < 100; ++i) {
            sum += calendar_step(s, temp, soc, 1.0, p, kC);
            s.age_hours += 1.0;
        }
        const double closed = k * (std::sqrt(t0 + 100.0) - std::sqrt(t0));
        EXPECT_LE(rel(sum, closed), 0.02) << "t0 = " << t0;
    }
}

TEST(CycleHighTemp, ZeroReferenceAndSqrtLaw) {
    const auto& p = *test::shipped_params();
    DegradationState s;
    s.q_tot_ah = 100.0;
    EXPECT_EQ(cycle_high_temp_step(s, 288.15, 0.0, p, kC), 0.0);
    EXPECT_LE(rel(cycle_high_temp_stress(p.t_ref_k, p, kC), 1.456e-2), 1e-12);
    EXPECT_THROW(cycle_high_temp_step(s, 288.15, -1.0, p, kC), DomainError);

    const double k = cycle_high_temp_stress(293.15, p, kC);
    const double q0 = 1000.0, dq = 20.0;
    s.q_tot_ah = q0;
    double sum = 0.0;
    for (int i = 0; i < 100; ++i) {
        sum += cycle_high_temp_step(s, 293.15, dq, p, kC);
        s.q_tot_ah += dq;
    }
    EXPECT_LE(rel(sum, k * (std::sqrt(q0 + 100 * dq) - std::sqrt(q0))), 0.02);
}

TEST(CycleLowTemp, ReferenceAndCurrentDependence) {
    const auto& p = *test::shipped_params();
    const double c0 = 205.0;
    DegradationState s;
    s.q_ch_ah = 50.0;
    EXPECT_EQ(cycle_low_temp_step(s, 278.15, 0.0, 1.0, c0, p, kC), 0.0);
    EXPECT_LE(rel(cycle_low_temp_stress(p.t_ref_k, c0 * 1.0, c0, p, kC), 4.009e-2), 1e-12);
    // at the reference current the step is k/(2 sqrt(Q)) dQ
    const double dq = 205.0;
    EXPECT_LE(rel(cycle_low_temp_step(s, p.t_ref_k, dq, 1.0, c0, p, kC), 4.009e-2 * dq / (2.0 * std::sqrt(50.0 + dq))),
              1e-12);
    EXPECT_GT(cycle_low_temp_stress(p.t_ref_k, 1.5 * c0, c0, p, kC), cycle_low_temp_stress(p.t_ref_k, c0, c0, p, kC));
    EXPECT_THROW(cycle_low_temp_step(s, 278.15, -1.0, 1.0, c0, p, kC), DomainError);
}

TEST(CycleLowTempHighSoc, Gate) {
    const auto& p = *test::shipped_params();
    const double c0 = 205.0, dq = 205.0;
    DegradationState s;
    const double open = cycle_low_temp_high_soc_step(s, p.t_ref_k, dq, 1.0, 0.9, c0, p, kC);
    EXPECT_LE(rel(open, 2.031e-4 * dq), 1e-12);
    EXPECT_LE(rel(cycle_low_temp_high_soc_step(s, p.t_ref_k, dq, 1.0, 0.82, c0, p, kC), open / 2.0), 1e-12);
    for (double soc = 0.0; soc < 0.82; soc += 0.01)
        EXPECT_EQ(cycle_low_temp_high_soc_step(s, 268.15, 30.0, 1.0, soc, c0, p, kC), 0.0) << soc;
}

TEST(Arrhenius, MonotoneOverTemperatureRange) {
    const auto& p = *test::shipped_params();
    const double c0 = 205.0;
    for (double t = 273.0; t < 320.0; t += 1.0) {
        EXPECT_GT(calendar_stress(t + 1, 0.5, p, kC), calendar_stress(t, 0.5, p, kC));
        EXPECT_GT(cycle_high_temp_stress(t + 1, p, kC), cycle_high_temp_stress(t, p, kC));
        EXPECT_LT(cycle_low_temp_stress(t + 1, 100.0, c0, p, kC), cycle_low_temp_stress(t, 100.0, c0, p, kC));
        EXPECT_LT(cycle_low_temp_high_soc_stress(t + 1, 100.0, 0.9, c0, p, kC),
                  cycle_low_temp_high_soc_stress(t, 100.0, 0.9, c0, p, kC));
    }
}

TEST(TotalStep, IdleDischargeAndConversion) {
    const auto& p = *test::shipped_params();
    const VehicleBatterySpec spec;
    DegradationState s;
    s.age_hours = 1440.0;
    s.q_tot_ah = 300.0;
    s.q_ch_ah = 150.0;

    const auto idle = total_degradation_step(s, 288.15, 0.6, 0.6, 0.0, 0.0, 1.0, spec, p, kC);
    EXPECT_EQ(idle.increments.cycle(), 0.0);
    EXPECT_GT(idle.increments.calendar, 0.0);
    EXPECT_DOUBLE_EQ(idle.total_pct, idle.increments.calendar);
    EXPECT_DOUBLE_EQ(idle.state.age_hours, 1441.0);

    const auto dis = total_degradation_step(s, 288.15, 0.6, 0.55, 0.0, 4.1, 1.0, spec, p, kC);
    EXPECT_EQ(dis.state.q_ch_ah, s.q_ch_ah);
    EXPECT_GT(dis.state.q_tot_ah, s.q_tot_ah);

    const auto flat = flat_params();
    const auto one = total_degradation_step(s, 288.15, 0.5, 0.5 + 1.0 / 82.0, 1.0, 0.0, 1.0, spec, flat, kC);
    EXPECT_NEAR(one.charge_ah, 2.5, 1e-12);
    EXPECT_NEAR(one.state.q_ch_ah - s.q_ch_ah, 2.5, 1e-12);
    EXPECT_NEAR(one.state.q_tot_ah - s.q_tot_ah, 2.5, 1e-12);
    EXPECT_THROW(total_degradation_step(s, 288.15, 0.5, 0.5, -1.0, 0.0, 1.0, spec, p, kC), DomainError);
}

TEST(TotalStep, StateNeverDecreases) {
    const auto& p = *test::shipped_params();
    const VehicleBatterySpec spec;
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    DegradationState s;
    s.age_hours = 1440.0;
    double soc = 0.5;
    for (int i = 0; i < 2000; ++i) {
        const double ein = u(rng) < 0.5 ? 11.0 * u(rng) : 0.0;
        const double eout = ein == 0.0 ? 11.0 * u(rng) : 0.0;
        const double next = std::clamp(soc + (ein - eout) / spec.capacity_kwh, 0.0, 1.0);
        const double temp = 263.15 + 50.0 * u(rng);
        const auto r = total_degradation_step(s, temp, soc, next, ein, eout, 1.0, spec, p, kC);
        EXPECT_GE(r.increments.calendar, 0.0);
        EXPECT_GE(r.increments.cycle_high_temp, 0.0);
        EXPECT_GE(r.increments.cycle_low_temp, 0.0);
        EXPECT_GE(r.increments.cycle_low_temp_high_soc, 0.0);
        EXPECT_GE(r.state.q_tot_ah, s.q_tot_ah);
        EXPECT_GE(r.state.q_ch_ah, s.q_ch_ah);
        EXPECT_GE(r.state.total_pct(), s.total_pct());
        s = r.state;
        soc = next;
    }
}

TEST(Smoothness, GradientSuitePasses) {
    const auto g = run_gradient_suite(30, 5, test::shipped_params());
    EXPECT_TRUE(g.passed()) << "worst relative error " << g.worst();
}

TEST(Economics, NetValue) {
    const VehicleBatterySpec spec;
    const BatteryEconomics econ;
    EXPECT_NEAR(net_value(econ, spec), 111.5 * 82.0 * 0.7 / std::pow(1.1, 10.0), 1e-9);
    EXPECT_NEAR(net_value(econ, spec), 2467.5, 0.05);
    BatteryEconomics plain{111.5, 0.0, 0.0, 10.0};
    EXPECT_DOUBLE_EQ(net_value(plain, spec), 111.5 * 82.0);
    BatteryEconomics full{111.5, 1.0, 0.1, 10.0};
    EXPECT_DOUBLE_EQ(net_value(full, spec), 0.0);
    EXPECT_THROW(full.validate(), ValidationError);
}

TEST(Economics, BatteryCost) {
    const double nv = net_value(BatteryEconomics{}, VehicleBatterySpec{});
    EXPECT_EQ(battery_cost(0.0, nv, 0.8), 0.0);
    EXPECT_NEAR(battery_cost(20.0, nv, 0.8), nv, 1e-9);
    EXPECT_NEAR(battery_cost(5.42, nv, 0.8), 668.7, 0.05);
    EXPECT_THROW(battery_cost(1.0, nv, 1.0), DomainError);
    EXPECT_THROW(battery_cost(-1.0, nv, 0.8), DomainError);
}

TEST(BatterySpec, Validation) {
    VehicleBatterySpec s;
    EXPECT_NO_THROW(s.validate());
    s.nominal_capacity_ah = 150.0;
    EXPECT_THROW(s.validate(), ValidationError);
    auto t = VehicleBatterySpec::with_capacity(41.0);
    EXPECT_DOUBLE_EQ(t.nominal_capacity_ah, 102.5);
    EXPECT_NO_THROW(t.validate());
    t.eol_fraction = 1.0;
    EXPECT_THROW(t.validate(), ValidationError);
}
