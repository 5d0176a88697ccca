#pragma once

#include <array>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "v2hg/data_io.hpp"
#include "v2hg/engine.hpp"
#include "v2hg/errors.hpp"
#include "v2hg/ini.hpp"
#include "v2hg/optimizer.hpp"
#include "v2hg/sweep.hpp"

namespace v2hg {

inline constexpr std::array<const char*, 13> kLedgerColumns = {
    "hour", "price", "HL_actual", "HL_predicted", "e_g2v", "e_g2h", "e_v2g",
    "e_v2h", "soc", "s", "bd_increment", "ec", "bc"};

inline void write_ledger_csv(std::ostream& out, const std::vector<LedgerRow>& ledger) {
    for (std::size_t i = 0; i < kLedgerColumns.size(); ++i) out << (i ? "," : "") << kLedgerColumns[i];
    out << '\n' << std::setprecision(17);
    for (const auto& r : ledger) {
        out << r.hour << ',' << r.price << ',' << r.hl_actual << ',' << r.hl_predicted << ',' << r.e_g2v << ','
            << r.e_g2h << ',' << r.e_v2g << ',' << r.e_v2h << ',' << r.soc << ',' << r.slack << ','
            << r.bd_increment << ',' << r.ec << ',' << r.bc << '\n';
    }
}

inline void write_ledger_csv(const std::filesystem::path& path, const std::vector<LedgerRow>& ledger) {
    std::ofstream out(path);
    if (!out) throw ValidationError("cannot write " + path.string());
    write_ledger_csv(out, ledger);
}

/// Reads a ledger written by write_ledger_csv. Driving rows are not marked in
/// the file; they are left with driving = false.
inline std::vector<LedgerRow> read_ledger_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open ledger " + path.string());
    std::string line;
    if (!std::getline(in, line)) throw ValidationError(path.string() + ": empty ledger");
    const auto header = detail::split_csv_line(line);
    if (header.size() != kLedgerColumns.size())
        throw ValidationError(path.string() + ": expected " + std::to_string(kLedgerColumns.size()) + " columns");
    for (std::size_t i = 0; i < header.size(); ++i)
        if (header[i] != kLedgerColumns[i])
            throw ValidationError(path.string() + ": column " + std::to_string(i + 1) + " should be '" +
                                  kLedgerColumns[i] + "', found '" + header[i] + "'");
    std::vector<LedgerRow> rows;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line == "\r") continue;
        const auto f = detail::split_csv_line(line);
        if (f.size() != kLedgerColumns.size())
            throw ValidationError(path.string() + ":" + std::to_string(lineno) + ": wrong field count");
        std::array<double, 13> v{};
        for (std::size_t i = 0; i < f.size(); ++i) {
            auto d = parse_double(f[i]);
            if (!d) throw ValidationError(path.string() + ":" + std::to_string(lineno) + ": bad number '" + f[i] + "'");
            v[i] = *d;
        }
        LedgerRow r;
        r.hour = static_cast<int>(v[0]);
        r.price = v[1];
        r.hl_actual = v[2];
        r.hl_predicted = v[3];
        r.e_g2v = v[4];
        r.e_g2h = v[5];
        r.e_v2g = v[6];
        r.e_v2h = v[7];
        r.soc = v[8];
        r.slack = v[9];
        r.bd_increment = v[10];
        r.ec = v[11];
        r.bc = v[12];
        rows.push_back(r);
    }
    return rows;
}

inline nlohmann::json metrics_to_json(const YearlyMetrics& m) {
    nlohmann::json j;
    j["scenario"] = to_string(m.scenario);
    j["gamma_ratio"] = m.gamma;
    j["fc_eur"] = m.fc;
    j["ec_eur"] = m.ec;
    j["bc_eur"] = m.bc;
    j["bd_pct"] = m.bd;
    j["bd_cal_pct"] = m.bd_cal;
    j["bd_cyc_pct"] = m.bd_cyc;
    j["e_batt_kwh"] = m.e_batt;
    j["e_g2v_kwh"] = m.e_g2v;
    j["e_v2g_kwh"] = m.e_v2g;
    j["e_v2h_kwh"] = m.e_v2h;
    j["e_drive_kwh"] = m.e_drive;
    j["goal_shortfall_max_fraction"] = m.goal_shortfall_max;
    j["optimizations_count"] = m.optimizations;
    j["solver_failures_count"] = m.solver_failures;
    j["max_solver_iterations_count"] = m.max_iterations_seen;
    j["hours_count"] = m.ledger.size();
    j["final_state"] = {{"age_h", m.final_state.age_hours},
                        {"q_tot_ah", m.final_state.q_tot_ah},
                        {"q_ch_ah", m.final_state.q_ch_ah},
                        {"bd_cal_pct", m.final_state.bd_cal_pct},
                        {"bd_cyc_high_temp_pct", m.final_state.bd_cyc_ht_pct},
                        {"bd_cyc_low_temp_pct", m.final_state.bd_cyc_lt_pct},
                        {"bd_cyc_low_temp_high_soc_pct", m.final_state.bd_cyc_lthsoc_pct}};
    j["events"] = m.events;
    return j;
}

inline void write_json(const std::filesystem::path& path, const nlohmann::json& j) {
    std::ofstream out(path);
    if (!out) throw ValidationError("cannot write " + path.string());
    out << j.dump(2) << '\n';
}

/// One summary row per scenario.
inline void print_metrics_header(std::ostream& out) {
    out << std::left << std::setw(9) << "scenario" << std::right << std::setw(11) << "FC[EUR]" << std::setw(11)
        << "EC[EUR]" << std::setw(11) << "BC[EUR]" << std::setw(9) << "BD[%]" << std::setw(11) << "BDcal[%]"
        << std::setw(11) << "BDcyc[%]" << std::setw(13) << "Ebatt[kWh]" << '\n';
}

inline void print_metrics_row(std::ostream& out, const std::string& name, const YearlyMetrics& m) {
    out << std::left << std::setw(9) << name << std::right << std::fixed << std::setprecision(2) << std::setw(11)
        << m.fc << std::setw(11) << m.ec << std::setw(11) << m.bc << std::setprecision(3) << std::setw(9) << m.bd
        << std::setw(11) << m.bd_cal << std::setw(11) << m.bd_cyc << std::setprecision(1) << std::setw(13)
        << m.e_batt << '\n';
    out.unsetf(std::ios::fixed);
}

inline void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows) {
    out << "gamma,capacity_kwh,load_multiplier,fc_a_eur,fc_b_eur,gain_eur,bd_a_pct,bd_b_pct,e_v2g_a_kwh,"
           "e_v2h_a_kwh,solver_failures_a,solver_failures_b\n"
        << std::setprecision(12);
    for (const auto& r : rows)
        out << r.gamma << ',' << r.capacity_kwh << ',' << r.load_multiplier << ',' << r.fc_a << ',' << r.fc_b << ','
            << r.gain() << ',' << r.bd_a << ',' << r.bd_b << ',' << r.e_v2g_a << ',' << r.e_v2h_a << ','
            << r.failures_a << ',' << r.failures_b << '\n';
}

inline void write_sweep_csv(const std::filesystem::path& path, const std::vector<SweepRow>& rows) {
    std::ofstream out(path);
    if (!out) throw ValidationError("cannot write " + path.string());
    write_sweep_csv(out, rows);
}

struct MonthlySummary {
    int month = 0; // 1..12
    int hours = 0;
    double ec = 0.0, bc = 0.0, bd = 0.0;
    double e_g2v = 0.0, e_g2h = 0.0, e_v2g = 0.0, e_v2h = 0.0;
    double load = 0.0;
};

/// Month of an hour-of-year index in a 365-day year.
inline int month_of_hour(int hour) {
    static constexpr std::array<int, 12> days{31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
    int d = hour / 24;
    for (int m = 0; m < 12; ++m) {
        if (d < days[static_cast<std::size_t>(m)]) return m + 1;
        d -= days[static_cast<std::size_t>(m)];
    }
    return 12;
}

inline std::vector<MonthlySummary> summarize_by_month(const std::vector<LedgerRow>& ledger) {
    std::vector<MonthlySummary> out(12);
    for (int m = 0; m < 12; ++m) out[static_cast<std::size_t>(m)].month = m + 1;
    for (const auto& r : ledger) {
        auto& s = out[static_cast<std::size_t>(month_of_hour(r.hour) - 1)];
        ++s.hours;
        s.ec += r.ec;
        s.bc += r.bc;
        s.bd += r.bd_increment;
        s.e_g2v += r.e_g2v;
        s.e_g2h += r.e_g2h;
        s.e_v2g += r.e_v2g;
        s.e_v2h += r.e_v2h;
        s.load += r.hl_actual;
    }
    return out;
}

inline void write_monthly_csv(std::ostream& out, const std::vector<MonthlySummary>& months) {
    out << "month,hours,ec_eur,bc_eur,fc_eur,bd_pct,e_g2v_kwh,e_g2h_kwh,e_v2g_kwh,e_v2h_kwh,load_kwh\n"
        << std::setprecision(10);
    MonthlySummary t;
    for (const auto& m : months) {
        out << m.month << ',' << m.hours << ',' << m.ec << ',' << m.bc << ',' << m.ec + m.bc << ',' << m.bd << ','
            << m.e_g2v << ',' << m.e_g2h << ',' << m.e_v2g << ',' << m.e_v2h << ',' << m.load << '\n';
        t.hours += m.hours;
        t.ec += m.ec;
        t.bc += m.bc;
        t.bd += m.bd;
        t.e_g2v += m.e_g2v;
        t.e_g2h += m.e_g2h;
        t.e_v2g += m.e_v2g;
        t.e_v2h += m.e_v2h;
        t.load += m.load;
    }
    out << "total," << t.hours << ',' << t.ec << ',' << t.bc << ',' << t.ec + t.bc << ',' << t.bd << ','
        << t.e_g2v << ',' << t.e_g2h << ',' << t.e_v2g << ',' << t.e_v2h << ',' << t.load << '\n';
}

/// Window and schedule as JSON, for offline inspection of a solve.
inline nlohmann::json window_to_json(const OptimizationWindow& w, const FlowSchedule* s = nullptr,
                                     const SolveReport* rep = nullptr) {
    nlohmann::json j;
    j["start_hour"] = w.start_hour;
    j["prices_eur_per_kwh"] = w.prices;
    j["price_ratio"] = w.price_ratio;
    j["predicted_load_kwh"] = w.predicted_load_kwh;
    j["soc_initial_fraction"] = w.soc_initial;
    j["soc_goal_fraction"] = w.soc_goal;
    j["grid_limit_kwh"] = w.grid_limit_kwh;
    j["v2g_enabled"] = w.v2g_enabled;
    j["v2h_enabled"] = w.v2h_enabled;
    const auto& st = w.degradation.state;
    j["degradation_state"] = {{"age_h", st.age_hours}, {"q_tot_ah", st.q_tot_ah}, {"q_ch_ah", st.q_ch_ah}};
    j["capacity_kwh"] = w.degradation.spec.capacity_kwh;
    j["temperature_k"] = w.degradation.temperature_k;
    if (s) {
        j["schedule"] = {{"e_g2v", s->e_g2v}, {"e_g2h", s->e_g2h}, {"e_v2g", s->e_v2g},
                         {"e_v2h", s->e_v2h}, {"slack", s->slack}, {"soc", s->soc}};
    }
    if (rep) {
        j["report"] = {{"objective_eur", rep->objective_value}, {"energy_cost_eur", rep->energy_cost},
                       {"battery_cost_eur", rep->battery_cost}, {"slack_cost_eur", rep->slack_cost},
                       {"iterations", rep->iterations},         {"converged", rep->converged},
                       {"status", rep->status},                 {"max_violation", rep->max_constraint_violation}};
    }
    return j;
}

} // namespace v2hg
