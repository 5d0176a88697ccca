#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "v2hg/battery_model.hpp"
#include "v2hg/errors.hpp"
#include "v2hg/forecaster.hpp"
#include "v2hg/optimizer.hpp"
#include "v2hg/time_series.hpp"
#include "v2hg/trips.hpp"

namespace v2hg {

enum class Scenario { A, B };

inline const char* to_string(Scenario s) { return s == Scenario::A ? "A" : "B"; }

/// Returns load predictions for hours t+1 .. t+n given actual data up to t.
using Predictor = std::function<std::vector<double>(std::size_t t, int n)>;

struct SimulationConfig {
    Scenario scenario = Scenario::A;
    double gamma = 1.0;
    VehicleBatterySpec spec;
    BatteryEconomics economics;
    std::shared_ptr<const DegradationParams> params;
    PhysicalConstants constants;
    double temperature_k = 288.15;
    double initial_soc = 0.6;
    double initial_age_hours = 60.0 * 24.0;
    double goal_soc = 0.8;
    TripParams trips;
    unsigned long long seed = 1;
    double mismatch_tolerance_kwh = 0.0;
    SolverConfig solver;
    std::vector<double> prices;   // EUR/kWh after tax, one per hour
    std::vector<double> load_kwh; // actual household load, one per hour
    Predictor predictor;          // empty: actual load is used as the prediction
    // called with the window whenever the solver fails and the fallback runs
    std::function<void(const OptimizationWindow&, const std::string&)> on_solver_failure;

    int hours() const { return static_cast<int>(prices.size()); }

    void validate() const {
        if (prices.size() != static_cast<std::size_t>(kHoursPerYear) ||
            load_kwh.size() != static_cast<std::size_t>(kHoursPerYear))
            throw ValidationError("simulation: price and load series must have 8760 hourly values (got " +
                                  std::to_string(prices.size()) + " and " + std::to_string(load_kwh.size()) + ")");
        if (!(gamma >= 0.0 && gamma <= 1.0)) throw ValidationError("simulation: gamma must lie in [0,1]");
        if (!(initial_soc >= 0.0 && initial_soc <= 1.0)) throw ValidationError("simulation: initial SoC outside [0,1]");
        if (!(goal_soc >= 0.0 && goal_soc <= 1.0)) throw ValidationError("simulation: goal SoC outside [0,1]");
        if (!(initial_age_hours >= 0.0)) throw ValidationError("simulation: initial age must be >= 0");
        if (!(mismatch_tolerance_kwh >= 0.0)) throw ValidationError("simulation: mismatch tolerance must be >= 0");
        if (!params) throw ValidationError("simulation: missing degradation parameters");
        for (double l : load_kwh)
            if (!(l >= 0.0)) throw ValidationError("simulation: household load must be >= 0");
        for (double p : prices)
            if (!std::isfinite(p)) throw ValidationError("simulation: non-finite price");
        spec.validate();
        economics.validate();
        constants.validate();
        trips.validate();
        solver.validate();
    }
};

struct LedgerRow {
    int hour = 0;
    double price = 0.0;
    double hl_actual = 0.0;
    double hl_predicted = 0.0;
    double e_g2v = 0.0, e_g2h = 0.0, e_v2g = 0.0, e_v2h = 0.0;
    double soc = 0.0;   // after the hour
    double slack = 0.0; // goal shortfall, SoC fraction
    double bd_increment = 0.0;
    double ec = 0.0;
    double bc = 0.0;
    bool driving = false;
    double e_drive = 0.0;
};

struct YearlyMetrics {
    Scenario scenario = Scenario::A;
    double gamma = 1.0;
    double fc = 0.0, ec = 0.0, bc = 0.0;
    double bd = 0.0, bd_cal = 0.0, bd_cyc = 0.0;
    double e_batt = 0.0; // all energy into and out of the battery, driving included
    double e_g2v = 0.0, e_v2g = 0.0, e_v2h = 0.0, e_drive = 0.0;
    double goal_shortfall_max = 0.0;
    int optimizations = 0;
    int solver_failures = 0;
    int max_iterations_seen = 0;
    double runtime_s = 0.0;
    DegradationState final_state;
    std::vector<std::string> events;
    std::vector<LedgerRow> ledger;
};

namespace detail {

class YearRun {
public:
    explicit YearRun(const SimulationConfig& cfg) : cfg_(cfg) {
        state_.age_hours = cfg.initial_age_hours;
        soc_ = cfg.initial_soc;
        per_pct_ = battery_cost(1.0, net_value(cfg.economics, cfg.spec), cfg.spec.eol_fraction);
        m_.scenario = cfg.scenario;
        m_.gamma = cfg.gamma;
        m_.ledger.reserve(static_cast<std::size_t>(cfg.hours()));
    }

    YearlyMetrics run() {
        const auto t0 = std::chrono::steady_clock::now();
        const int days = cfg_.hours() / 24;
        const auto trips = generate_trips(days, cfg_.seed, cfg_.trips);
        int h = 0;
        for (const auto& trip : trips.trips) {
            park(h, trip.pickup_hour);
            drive(trip);
            h = trip.arrival_hour;
        }
        park(h, cfg_.hours());
        m_.final_state = state_;
        m_.bd = state_.total_pct();
        m_.bd_cal = state_.bd_cal_pct;
        m_.bd_cyc = state_.cycle_pct();
        m_.fc = m_.ec + m_.bc;
        m_.e_batt = m_.e_g2v + m_.e_drive + m_.e_v2g + m_.e_v2h;
        m_.runtime_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        return std::move(m_);
    }

private:
    OptimizationWindow make_window(int t, int end, std::vector<double> loads) const {
        OptimizationWindow w;
        w.start_hour = t;
        w.prices.assign(cfg_.prices.begin() + t, cfg_.prices.begin() + end);
        w.price_ratio = cfg_.gamma;
        w.predicted_load_kwh = std::move(loads);
        w.soc_initial = std::clamp(soc_, 0.0, 1.0);
        w.soc_goal.assign(static_cast<std::size_t>(end - t), 0.0);
        w.soc_goal.back() = cfg_.goal_soc;
        w.v2g_enabled = cfg_.scenario == Scenario::A;
        w.v2h_enabled = cfg_.scenario == Scenario::A;
        w.degradation = DegradationContext{state_, cfg_.spec, cfg_.economics, cfg_.params, cfg_.constants,
                                           cfg_.temperature_k};
        return w;
    }

    std::vector<double> window_loads(int t, int end) const {
        std::vector<double> loads{cfg_.load_kwh[static_cast<std::size_t>(t)]};
        const int n = end - t - 1;
        if (n <= 0) return loads;
        if (cfg_.scenario == Scenario::B || !cfg_.predictor) {
            loads.insert(loads.end(), cfg_.load_kwh.begin() + t + 1, cfg_.load_kwh.begin() + end);
        } else {
            auto p = cfg_.predictor(static_cast<std::size_t>(t), n);
            if (p.size() != static_cast<std::size_t>(n)) throw ValidationError("predictor returned wrong length");
            for (double& v : p) v = std::isfinite(v) ? std::max(0.0, v) : 0.0;
            loads.insert(loads.end(), p.begin(), p.end());
        }
        return loads;
    }

    FlowSchedule solve(const OptimizationWindow& w, const FlowSchedule* warm, int t) {
        ++m_.optimizations;
        try {
            auto [s, rep] = cfg_.scenario == Scenario::A ? solve_window(w, cfg_.solver, warm)
                                                         : solve_window_unidirectional(w, cfg_.solver, warm);
            m_.max_iterations_seen = std::max(m_.max_iterations_seen, rep.iterations);
            if (rep.converged) return s;
            m_.events.push_back("hour " + std::to_string(t) + ": solver did not converge (" + rep.status +
                                "), goal-charging fallback");
            if (cfg_.on_solver_failure) cfg_.on_solver_failure(w, rep.status);
        } catch (const DomainError& e) {
            m_.events.push_back("hour " + std::to_string(t) + ": solver error (" + e.what() +
                                "), goal-charging fallback");
            if (cfg_.on_solver_failure) cfg_.on_solver_failure(w, e.what());
        }
        ++m_.solver_failures;
        return goal_charging_schedule(w);
    }

    static FlowSchedule shifted(const FlowSchedule& s, int by) {
        FlowSchedule r;
        auto cut = [by](const std::vector<double>& v) { return std::vector<double>(v.begin() + by, v.end()); };
        r.e_g2v = cut(s.e_g2v);
        r.e_g2h = cut(s.e_g2h);
        r.e_v2g = cut(s.e_v2g);
        r.e_v2h = cut(s.e_v2h);
        r.slack = cut(s.slack);
        r.soc = cut(s.soc);
        return r;
    }

    /// Parking hours [start, end); the goal applies after hour end-1.
    void park(int start, int end) {
        if (end <= start) return;
        FlowSchedule plan;
        std::vector<double> plan_loads;
        int plan_start = start;
        bool have_plan = false;
        for (int t = start; t < end; ++t) {
            const auto tt = static_cast<std::size_t>(t);
            bool resolve = !have_plan;
            if (have_plan && cfg_.scenario == Scenario::A) {
                const double predicted = plan_loads[static_cast<std::size_t>(t - plan_start)];
                resolve = std::abs(cfg_.load_kwh[tt] - predicted) > cfg_.mismatch_tolerance_kwh;
            }
            if (resolve) {
                auto loads = window_loads(t, end);
                const auto w = make_window(t, end, loads);
                FlowSchedule warm;
                const FlowSchedule* warm_ptr = nullptr;
                if (have_plan && cfg_.solver.warm_start) {
                    warm = shifted(plan, t - plan_start);
                    warm_ptr = &warm;
                }
                plan = solve(w, warm_ptr, t);
                plan_loads = std::move(loads);
                plan_start = t;
                have_plan = true;
            }
            const auto k = static_cast<std::size_t>(t - plan_start);
            const bool goal_hour = t == end - 1;
            execute(t, plan.e_g2v[k], plan.e_v2g[k], plan.e_v2h[k], plan_loads[k], goal_hour);
        }
    }

    void execute(int t, double g2v, double v2g, double v2h, double hl_predicted, bool goal_hour) {
        const auto tt = static_cast<std::size_t>(t);
        const double eb = cfg_.spec.capacity_kwh;
        const double emax = cfg_.spec.max_hourly_energy_kwh;
        const double hl = cfg_.load_kwh[tt];
        // Substitute the actual load: V2H can only cover what the home draws.
        g2v = std::clamp(g2v, 0.0, emax);
        v2g = std::clamp(v2g, 0.0, emax);
        v2h = std::clamp(v2h, 0.0, std::min(hl, emax - v2g));
        double soc_new = soc_ + (g2v - v2g - v2h) / eb;
        if (soc_new > 1.0) {
            g2v = std::max(0.0, g2v - (soc_new - 1.0) * eb);
            soc_new = soc_ + (g2v - v2g - v2h) / eb;
        }
        if (soc_new < 0.0) {
            const double cut = -soc_new * eb;
            const double from_v2g = std::min(v2g, cut);
            v2g -= from_v2g;
            v2h = std::max(0.0, v2h - (cut - from_v2g));
            soc_new = soc_ + (g2v - v2g - v2h) / eb;
        }
        soc_new = std::clamp(soc_new, 0.0, 1.0);

        LedgerRow r;
        r.hour = t;
        r.price = cfg_.prices[tt];
        r.hl_actual = hl;
        r.hl_predicted = hl_predicted;
        r.e_g2v = g2v;
        r.e_v2g = v2g;
        r.e_v2h = v2h;
        r.e_g2h = hl - v2h;
        r.slack = goal_hour ? std::max(0.0, cfg_.goal_soc - soc_new) : 0.0;
        account(r, soc_new, g2v, v2g + v2h);
        m_.e_g2v += g2v;
        m_.e_v2g += v2g;
        m_.e_v2h += v2h;
        m_.goal_shortfall_max = std::max(m_.goal_shortfall_max, r.slack);
    }

    void drive(const Trip& trip) {
        const int hours = trip.driving_hours();
        const double per_hour_soc = trip.distance_km / hours / cfg_.spec.driving_range_km;
        for (int t = trip.pickup_hour; t < trip.arrival_hour; ++t) {
            const auto tt = static_cast<std::size_t>(t);
            const double soc_new = soc_ - per_hour_soc;
            if (soc_new < -1e-12)
                throw SimulationFault("hour " + std::to_string(t) + ": state of charge would drop below zero while driving");
            const double e_drive = per_hour_soc * cfg_.spec.capacity_kwh;
            LedgerRow r;
            r.hour = t;
            r.price = cfg_.prices[tt];
            r.hl_actual = cfg_.load_kwh[tt];
            r.hl_predicted = r.hl_actual;
            r.e_g2h = r.hl_actual;
            r.driving = true;
            r.e_drive = e_drive;
            account(r, std::max(soc_new, 0.0), 0.0, e_drive);
            m_.e_drive += e_drive;
        }
    }

    void account(LedgerRow& r, double soc_new, double e_in, double e_out) {
        const auto step = total_degradation_step(state_, cfg_.temperature_k, soc_, soc_new, e_in, e_out, 1.0,
                                                 cfg_.spec, *cfg_.params, cfg_.constants);
        state_ = step.state;
        soc_ = soc_new;
        r.soc = soc_new;
        r.bd_increment = step.total_pct;
        r.ec = energy_cost(r.e_g2v, r.e_g2h, r.e_v2g, r.price, cfg_.gamma);
        r.bc = step.total_pct * per_pct_;
        m_.ec += r.ec;
        m_.bc += r.bc;
        m_.ledger.push_back(r);
    }

    const SimulationConfig& cfg_;
    DegradationState state_;
    double soc_ = 0.0;
    double per_pct_ = 0.0;
    YearlyMetrics m_;
};

} // namespace detail

/// One simulated year: parking sessions run the receding-horizon optimizer
/// (Scenario A) or a single unidirectional plan (Scenario B); driving hours
/// discharge the battery linearly over the trip.
inline YearlyMetrics run_year(const SimulationConfig& cfg) {
    cfg.validate();
    return detail::YearRun(cfg).run();
}

struct LedgerAudit {
    double flow_nonnegativity = 0.0;
    double charge_limit = 0.0;
    double discharge_limit = 0.0;
    double soc_bounds = 0.0;
    double soc_recursion = 0.0;
    double load_balance = 0.0;
    double goal = 0.0;           // goal + slack shortfall at pickup hours
    double driving_flows = 0.0;  // EV flows while away
    double cost_sum_eur = 0.0;   // |sum ledger - metrics| for EC and BC
    double fc_identity_eur = 0.0;
    double bd_identity_pct = 0.0;

    double max_energy_violation() const {
        return std::max({flow_nonnegativity, charge_limit, discharge_limit, soc_bounds, load_balance, goal,
                         driving_flows});
    }
};

/// Re-checks the charger, SoC, load-balance and goal constraints and the
/// accounting identities from the ledger alone.
inline LedgerAudit audit_ledger(const SimulationConfig& cfg, const YearlyMetrics& m) {
    LedgerAudit a;
    const double eb = cfg.spec.capacity_kwh;
    const double emax = cfg.spec.max_hourly_energy_kwh;
    double soc = cfg.initial_soc;
    double ec = 0.0, bc = 0.0;
    for (std::size_t i = 0; i < m.ledger.size(); ++i) {
        const auto& r = m.ledger[i];
        a.flow_nonnegativity = std::max({a.flow_nonnegativity, -r.e_g2v, -r.e_g2h, -r.e_v2g, -r.e_v2h, -r.slack});
        a.charge_limit = std::max(a.charge_limit, r.e_g2v - emax);
        a.discharge_limit = std::max(a.discharge_limit, r.e_v2g + r.e_v2h - emax);
        a.soc_bounds = std::max({a.soc_bounds, -r.soc, r.soc - 1.0});
        a.soc_recursion =
            std::max(a.soc_recursion, std::abs(r.soc - (soc + (r.e_g2v - r.e_v2g - r.e_v2h - r.e_drive) / eb)));
        a.load_balance = std::max(a.load_balance, std::abs(r.e_g2h + r.e_v2h - r.hl_actual));
        if (r.driving) a.driving_flows = std::max({a.driving_flows, r.e_g2v, r.e_v2g, r.e_v2h});
        const bool pickup = !r.driving && i + 1 < m.ledger.size() && m.ledger[i + 1].driving;
        const bool year_end = i + 1 == m.ledger.size();
        if (pickup || year_end) a.goal = std::max(a.goal, cfg.goal_soc - r.soc - r.slack);
        soc = r.soc;
        ec += r.ec;
        bc += r.bc;
    }
    a.cost_sum_eur = std::max(std::abs(ec - m.ec), std::abs(bc - m.bc));
    a.fc_identity_eur = std::abs(m.fc - (m.ec + m.bc));
    a.bd_identity_pct = std::abs(m.bd - (m.bd_cal + m.bd_cyc));
    return a;
}

} // namespace v2hg
