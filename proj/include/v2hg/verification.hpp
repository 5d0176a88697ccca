#pragma once

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "v2hg/autodiff.hpp"
#include "v2hg/battery_model.hpp"
#include "v2hg/data_io.hpp"
#include "v2hg/optimizer.hpp"
#include "v2hg/oracle.hpp"

namespace v2hg {

/// Random 3-hour window on the oracle's 0.5 kWh lattice: loads are multiples
/// of the step, and empty, goal, start and full energies are all lattice
/// points (goal 65.5 of 82 kWh rather than 65.6), so the lattice optimum is
/// not handicapped at the SoC bounds.
template <class Rng>
OptimizationWindow random_oracle_window(Rng& rng, std::shared_ptr<const DegradationParams> params,
                                        double step_kwh = 0.5, int horizon = 3) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::uniform_int_distribution<int> load_steps(0, 4);
    std::uniform_int_distribution<int> below_goal(-20, 44);
    OptimizationWindow w;
    w.start_hour = 0;
    for (int k = 0; k < horizon; ++k) {
        // raw day-ahead 0 .. 0.35 EUR/kWh, taxed
        w.prices.push_back(apply_tax_transform(0.35 * u(rng) * u(rng) + 0.35 * u(rng) * (k % 2)));
        w.predicted_load_kwh.push_back(step_kwh * load_steps(rng));
    }
    static constexpr std::array<double, 5> gammas{0.0, 0.25, 0.5, 0.75, 1.0};
    w.price_ratio = gammas[static_cast<std::size_t>(std::uniform_int_distribution<int>(0, 4)(rng))];
    const double eb = w.degradation.spec.capacity_kwh;
    const double goal_kwh = step_kwh * std::floor(0.8 * eb / step_kwh + 1e-9);
    if (std::abs(std::remainder(eb, step_kwh)) > 1e-9 * eb)
        throw ValidationError("oracle window: capacity must be a multiple of the lattice step");
    const double goal = goal_kwh / eb;
    w.soc_initial = (goal_kwh - step_kwh * below_goal(rng)) / eb;
    w.soc_goal.assign(static_cast<std::size_t>(horizon), 0.0);
    w.soc_goal.back() = goal;
    w.v2g_enabled = u(rng) < 0.85;
    w.v2h_enabled = w.v2g_enabled || u(rng) < 0.5;
    auto& st = w.degradation.state;
    st.age_hours = 1440.0 + 7000.0 * u(rng);
    st.q_tot_ah = 2000.0 + 60000.0 * u(rng);
    st.q_ch_ah = st.q_tot_ah * (0.45 + 0.1 * u(rng));
    w.degradation.temperature_k = 278.15 + 25.0 * u(rng);
    w.degradation.params = std::move(params);
    return w;
}

struct OracleCase {
    int id = 0;
    double solver_objective = 0.0;
    double oracle_objective = 0.0;
    bool converged = false;
    int iterations = 0;
    std::string status;
    bool pass = false;
};

struct OracleSuite {
    std::vector<OracleCase> cases;
    double upper_tolerance = 1e-3; // solver may not be worse than the lattice optimum by more
    double lower_tolerance = 0.05; // nor better by more
    double runtime_s = 0.0;

    int failures() const {
        return static_cast<int>(std::count_if(cases.begin(), cases.end(), [](const auto& c) { return !c.pass; }));
    }
    bool passed() const { return !cases.empty() && failures() == 0; }
};

inline OracleSuite run_oracle_suite(int n, unsigned long long seed, std::shared_ptr<const DegradationParams> params,
                                    double upper_tolerance = 1e-3, double lower_tolerance = 0.05,
                                    const SolverConfig& cfg = {}) {
    if (n < 1) throw ValidationError("oracle suite: need at least one case");
    const auto t0 = std::chrono::steady_clock::now();
    OracleSuite suite;
    suite.upper_tolerance = upper_tolerance;
    suite.lower_tolerance = lower_tolerance;
    std::mt19937_64 rng(seed);
    for (int i = 0; i < n; ++i) {
        const auto w = random_oracle_window(rng, params);
        OracleCase c;
        c.id = i;
        const auto [s, rep] = solve_window(w, cfg);
        const auto o = brute_force_oracle(w, 0.5, cfg);
        c.solver_objective = rep.objective_value;
        c.oracle_objective = o.objective;
        c.converged = rep.converged;
        c.iterations = rep.iterations;
        c.status = rep.status;
        c.pass = rep.converged && c.solver_objective <= c.oracle_objective + upper_tolerance &&
                 c.solver_objective >= c.oracle_objective - lower_tolerance;
        suite.cases.push_back(c);
    }
    suite.runtime_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return suite;
}

/// Worst relative error between an analytic gradient and its central
/// difference; entries below `floor` in both are treated as zero.
inline double relative_gradient_error(const std::vector<double>& analytic, const std::vector<double>& numeric,
                                      double floor = 1e-12) {
    double diff = 0.0, scale = floor;
    for (std::size_t i = 0; i < analytic.size(); ++i) {
        diff = std::max(diff, std::abs(analytic[i] - numeric[i]));
        scale = std::max({scale, std::abs(analytic[i]), std::abs(numeric[i])});
    }
    return diff / scale;
}

struct GradientCase {
    int id = 0;
    double objective_error = 0.0;
    std::array<double, 4> mechanism_error{}; // calendar, cycle high-T, cycle low-T, low-T high-SoC
    bool pass = false;

    double worst() const {
        return std::max(objective_error, *std::max_element(mechanism_error.begin(), mechanism_error.end()));
    }
};

struct GradientSuite {
    std::vector<GradientCase> cases;
    double tolerance = 1e-5;
    double runtime_s = 0.0;

    int failures() const {
        return static_cast<int>(std::count_if(cases.begin(), cases.end(), [](const auto& c) { return !c.pass; }));
    }
    bool passed() const { return !cases.empty() && failures() == 0; }
    double worst() const {
        double m = 0.0;
        for (const auto& c : cases) m = std::max(m, c.worst());
        return m;
    }
};

namespace detail {

/// Central difference with a Richardson step to push the truncation error
/// well below the tolerance.
template <class F>
double central_difference(const F& f, double x, double h) {
    const double d1 = (f(x + h) - f(x - h)) / (2.0 * h);
    const double d2 = (f(x + 0.5 * h) - f(x - 0.5 * h)) / h;
    return (4.0 * d2 - d1) / 3.0;
}

/// Per-mechanism increments as functions of (soc_prev, soc_now, e_in, e_out),
/// cumulative (not frozen) denominators, smoothed gate.
inline std::array<double, 4> mechanism_values(const DegradationState& st, double temp, const std::array<double, 4>& x,
                                              const VehicleBatterySpec& spec, const DegradationParams& p,
                                              const GateOptions& gate) {
    const auto inc = degradation_increments<double>(st, temp, x[0], x[1], x[2], x[3], 1.0, spec, p,
                                                    PhysicalConstants{}, gate);
    return {inc.calendar, inc.cycle_high_temp, inc.cycle_low_temp, inc.cycle_low_temp_high_soc};
}

} // namespace detail

/// At each of `n` random feasible points: the window objective gradient
/// (all decision variables) and each of the four mechanism increments'
/// derivatives with respect to (soc_prev, soc_now, e_in, e_out) are compared
/// with central differences.
inline GradientSuite run_gradient_suite(int n, unsigned long long seed, std::shared_ptr<const DegradationParams> params,
                                        double tolerance = 1e-5, const SolverConfig& cfg = {}) {
    if (n < 1) throw ValidationError("gradient suite: need at least one point");
    const auto t0 = std::chrono::steady_clock::now();
    GradientSuite suite;
    suite.tolerance = tolerance;
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const GateOptions gate{true, cfg.gate_smoothing_eps, cfg.curve_smoothing};

    for (int i = 0; i < n; ++i) {
        GradientCase gc;
        gc.id = i;

        // Window objective at a random strictly feasible point.
        const int horizon = 1 + static_cast<int>(u(rng) * 12.0);
        OptimizationWindow w;
        for (int k = 0; k < horizon; ++k) {
            w.prices.push_back(apply_tax_transform(0.3 * u(rng)));
            w.predicted_load_kwh.push_back(2.0 * u(rng));
        }
        w.price_ratio = u(rng);
        w.soc_initial = 0.2 + 0.6 * u(rng);
        w.soc_goal.assign(static_cast<std::size_t>(horizon), 0.0);
        w.soc_goal.back() = 0.8;
        w.degradation.params = params;
        w.degradation.state.age_hours = 1440.0 + 7000.0 * u(rng);
        w.degradation.state.q_tot_ah = 50.0 + 60000.0 * u(rng);
        w.degradation.state.q_ch_ah = 0.5 * w.degradation.state.q_tot_ah;
        w.degradation.temperature_k = 273.15 + 35.0 * u(rng);
        SolverConfig c = cfg;
        c.degradation_denominator_freeze = u(rng) < 0.5;
        WindowModel model(w, c);
        Eigen::VectorXd x0 = model.central_point();
        Eigen::VectorXd sl;
        model.slack(x0, sl);
        if (sl.size() && sl.minCoeff() <= 0.0) x0 = ipm::find_interior(model, x0, 1e-3).first;
        const Eigen::VectorXd x = model.random_interior_point(x0, rng);
        Eigen::VectorXd g;
        model.gradient(x, g);
        std::vector<double> ga(g.data(), g.data() + g.size()), gn;
        for (Eigen::Index j = 0; j < x.size(); ++j) {
            auto f = [&](double v) {
                Eigen::VectorXd y = x;
                y[j] = v;
                return model.value(y);
            };
            gn.push_back(detail::central_difference(f, x[j], 1e-4));
        }
        gc.objective_error = relative_gradient_error(ga, gn);

        // The four mechanisms, away from the SoC bounds so the step stays inside.
        DegradationState st;
        st.age_hours = 1440.0 + 7000.0 * u(rng);
        st.q_tot_ah = 10.0 + 60000.0 * u(rng);
        st.q_ch_ah = 0.5 * st.q_tot_ah;
        const double temp = 273.15 + 35.0 * u(rng);
        const std::array<double, 4> p{0.05 + 0.9 * u(rng), 0.05 + 0.9 * u(rng), 0.1 + 10.9 * u(rng),
                                      0.1 + 10.9 * u(rng)};
        using D = Dual<double, 4>;
        const auto inc = degradation_increments<D>(st, temp, make_variable<4>(p[0], 0), make_variable<4>(p[1], 1),
                                                   make_variable<4>(p[2], 2), make_variable<4>(p[3], 3), 1.0,
                                                   w.degradation.spec, *params, PhysicalConstants{}, gate);
        const std::array<const D*, 4> mech{&inc.calendar, &inc.cycle_high_temp, &inc.cycle_low_temp,
                                           &inc.cycle_low_temp_high_soc};
        for (std::size_t m = 0; m < 4; ++m) {
            std::vector<double> a(mech[m]->d.begin(), mech[m]->d.end()), num;
            for (std::size_t j = 0; j < 4; ++j) {
                auto f = [&](double v) {
                    auto q = p;
                    q[j] = v;
                    return detail::mechanism_values(st, temp, q, w.degradation.spec, *params, gate)[m];
                };
                num.push_back(detail::central_difference(f, p[j], j < 2 ? 1e-5 : 1e-4));
            }
            gc.mechanism_error[m] = relative_gradient_error(a, num, 1e-300);
        }
        gc.pass = gc.worst() < tolerance;
        suite.cases.push_back(gc);
    }
    suite.runtime_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return suite;
}

inline nlohmann::json verify_report_json(const OracleSuite& o, const GradientSuite& g) {
    nlohmann::json j;
    j["oracle"]["cases_count"] = o.cases.size();
    j["oracle"]["failures_count"] = o.failures();
    j["oracle"]["upper_tolerance_eur"] = o.upper_tolerance;
    j["oracle"]["lower_tolerance_eur"] = o.lower_tolerance;
    j["oracle"]["runtime_s"] = o.runtime_s;
    for (const auto& c : o.cases)
        j["oracle"]["cases"].push_back({{"id", c.id},
                                        {"solver_eur", c.solver_objective},
                                        {"oracle_eur", c.oracle_objective},
                                        {"difference_eur", c.solver_objective - c.oracle_objective},
                                        {"converged", c.converged},
                                        {"iterations", c.iterations},
                                        {"status", c.status},
                                        {"pass", c.pass}});
    j["gradient"]["points_count"] = g.cases.size();
    j["gradient"]["failures_count"] = g.failures();
    j["gradient"]["tolerance_ratio"] = g.tolerance;
    j["gradient"]["worst_relative_error"] = g.worst();
    j["gradient"]["runtime_s"] = g.runtime_s;
    for (const auto& c : g.cases)
        j["gradient"]["cases"].push_back({{"id", c.id},
                                          {"objective", c.objective_error},
                                          {"calendar", c.mechanism_error[0]},
                                          {"cycle_high_temp", c.mechanism_error[1]},
                                          {"cycle_low_temp", c.mechanism_error[2]},
                                          {"cycle_low_temp_high_soc", c.mechanism_error[3]},
                                          {"pass", c.pass}});
    j["passed"] = o.passed() && g.passed();
    return j;
}

} // namespace v2hg
