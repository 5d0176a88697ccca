#pragma once

#include <algorithm>
#include <cmath>
#include <string>

#include "v2hg/autodiff.hpp"
#include "v2hg/curve.hpp"
#include "v2hg/errors.hpp"

// Empirical LiFePO4 ageing model: calendar ageing (sqrt-time law) plus three
// cycle ageing mechanisms (high temperature, low temperature, low temperature
// at high SoC), the pack voltage approximation used to convert energy to
// charge throughput, and the economics that price capacity loss in euros.
//
// All capacity-loss quantities are in percent of nominal capacity. Charge
// throughput is pack-level ampere-hours.

namespace v2hg {

struct PhysicalConstants {
    double gas_constant_j_per_mol_k = 8.314462618;
    double faraday_c_per_mol = 96485.33212;

    void validate() const {
        if (!(gas_constant_j_per_mol_k > 0.0) || !(faraday_c_per_mol > 0.0))
            throw ValidationError("physical constants must be strictly positive");
    }
};

struct DegradationParams {
    // calendar
    double k_cal_ref_pct_per_sqrt_h = 0.0;
    double ea_cal_j_per_mol = 0.0;
    double alpha = 0.0;
    double ua_ref_v = 0.0;
    double k0 = 0.0;
    double t_ref_k = 298.15;
    // cycle, high temperature
    double k_cyc_ht_ref_pct_per_sqrt_ah = 0.0;
    double ea_cyc_ht_j_per_mol = 0.0;
    // cycle, low temperature
    double k_cyc_lt_ref_pct_per_sqrt_ah = 0.0;
    double ea_cyc_lt_j_per_mol = 0.0;
    double beta_lt_h = 0.0;
    // reference charge current as a C-rate; I_ref = rate * C0
    double ich_ref_c_rate_per_h = 1.0;
    // cycle, low temperature and high SoC
    double k_cyc_lthsoc_ref_pct_per_ah = 0.0;
    double ea_cyc_lthsoc_j_per_mol = 0.0;
    double beta_lthsoc_h = 0.0;
    double soc_ref = 0.82;

    PiecewiseLinearCurve anode_potential_curve; // SoC -> V
    PiecewiseLinearCurve ocv_curve;             // SoC -> pack V

    void validate() const {
        if (k_cal_ref_pct_per_sqrt_h < 0.0 || k_cyc_ht_ref_pct_per_sqrt_ah < 0.0 ||
            k_cyc_lt_ref_pct_per_sqrt_ah < 0.0 || k_cyc_lthsoc_ref_pct_per_ah < 0.0)
            throw ValidationError("degradation: reference rate constants must be >= 0");
        if (!(t_ref_k > 0.0)) throw ValidationError("degradation: T_ref must be > 0");
        if (!(ich_ref_c_rate_per_h >= 0.0))
            throw ValidationError("degradation: reference charge rate must be >= 0");
        if (soc_ref < 0.0 || soc_ref > 1.0)
            throw ValidationError("degradation: SoC_ref must lie in [0,1]");
        if (!anode_potential_curve.covers_unit_interval())
            throw ValidationError("degradation: anode potential curve must cover [0,1]");
        if (!ocv_curve.covers_unit_interval())
            throw ValidationError("degradation: OCV curve must cover [0,1]");
        if (!ocv_curve.nondecreasing())
            throw ValidationError("degradation: OCV curve must be nondecreasing in SoC");
    }
};

struct VehicleBatterySpec {
    double capacity_kwh = 82.0;
    double nominal_capacity_ah = 205.0;
    double nominal_voltage_v = 400.0;
    double driving_range_km = 514.0;
    double max_hourly_energy_kwh = 11.0;
    double eol_fraction = 0.8;

    /// C0 derived from capacity and nominal voltage.
    static VehicleBatterySpec with_capacity(double capacity_kwh, double nominal_voltage_v = 400.0,
                                            double driving_range_km = 514.0,
                                            double max_hourly_energy_kwh = 11.0,
                                            double eol_fraction = 0.8) {
        VehicleBatterySpec s;
        s.capacity_kwh = capacity_kwh;
        s.nominal_voltage_v = nominal_voltage_v;
        s.nominal_capacity_ah = capacity_kwh * 1000.0 / nominal_voltage_v;
        s.driving_range_km = driving_range_km;
        s.max_hourly_energy_kwh = max_hourly_energy_kwh;
        s.eol_fraction = eol_fraction;
        return s;
    }

    void validate() const {
        if (!(capacity_kwh > 0.0)) throw ValidationError("battery: capacity must be > 0");
        if (!(nominal_voltage_v > 0.0)) throw ValidationError("battery: nominal voltage must be > 0");
        if (!(max_hourly_energy_kwh > 0.0)) throw ValidationError("battery: E_max must be > 0");
        if (!(driving_range_km > 0.0)) throw ValidationError("battery: driving range must be > 0");
        if (!(eol_fraction > 0.0 && eol_fraction < 1.0))
            throw ValidationError("battery: EoL fraction must lie in (0,1)");
        const double c0 = capacity_kwh * 1000.0 / nominal_voltage_v;
        if (std::abs(nominal_capacity_ah - c0) > 0.02 * c0)
            throw ValidationError("battery: C0 inconsistent with capacity/nominal voltage");
    }
};

struct BatteryEconomics {
    double replacement_cost_eur_per_kwh = 111.5;
    double residual_fraction = 0.3;
    double discount_rate_per_year = 0.1;
    double nominal_life_years = 10.0;

    void validate() const {
        if (!(replacement_cost_eur_per_kwh > 0.0))
            throw ValidationError("economics: replacement cost must be > 0");
        if (!(residual_fraction >= 0.0 && residual_fraction < 1.0))
            throw ValidationError("economics: residual fraction must lie in [0,1)");
        if (!(discount_rate_per_year >= 0.0))
            throw ValidationError("economics: discount rate must be >= 0");
        if (!(nominal_life_years > 0.0))
            throw ValidationError("economics: nominal life must be > 0");
    }
};

struct DegradationState {
    double age_hours = 0.0;
    double q_tot_ah = 0.0;
    double q_ch_ah = 0.0;
    double bd_cal_pct = 0.0;
    double bd_cyc_ht_pct = 0.0;
    double bd_cyc_lt_pct = 0.0;
    double bd_cyc_lthsoc_pct = 0.0;

    double cycle_pct() const { return bd_cyc_ht_pct + bd_cyc_lt_pct + bd_cyc_lthsoc_pct; }
    double total_pct() const { return bd_cal_pct + cycle_pct(); }
};

struct GateOptions {
    bool smoothed = false;
    double eps = 0.01; // logistic width in SoC fraction
    double knot_width = 0.0; // softplus rounding of the OCV and anode tables, 0 = exact
};

template <typename S>
struct MechanismIncrements {
    S calendar{};
    S cycle_high_temp{};
    S cycle_low_temp{};
    S cycle_low_temp_high_soc{};

    S cycle() const { return cycle_high_temp + cycle_low_temp + cycle_low_temp_high_soc; }
    S total() const { return calendar + cycle(); }
};

/// Denominator snapshot for the square-root laws (used inside the optimizer).
struct FrozenDenominators {
    double age_hours = 1.0;
    double q_tot_ah = 1.0;
    double q_ch_ah = 1.0;
};

namespace detail {

inline constexpr double soc_slop = 1e-9;

inline double checked_soc(double soc, const char* what) {
    if (!(soc >= -soc_slop && soc <= 1.0 + soc_slop))
        throw DomainError(std::string(what) + ": SoC outside [0,1]: " + std::to_string(soc));
    return soc;
}

template <typename S>
S clamp_unit(const S& soc, const char* what) {
    const double v = checked_soc(value_of(soc), what);
    if (v < 0.0) return S(0.0);
    if (v > 1.0) return S(1.0);
    return soc;
}

inline double arrhenius(double activation_j_per_mol, double temperature_k, double t_ref_k,
                        const PhysicalConstants& c) {
    return std::exp(-activation_j_per_mol / c.gas_constant_j_per_mol_k *
                    (1.0 / temperature_k - 1.0 / t_ref_k));
}

inline void check_temperature(double temperature_k) {
    if (!(temperature_k > 0.0))
        throw DomainError("temperature must be > 0 K");
}

} // namespace detail

template <typename S>
S anode_potential(const S& soc, const DegradationParams& p, double knot_width = 0.0) {
    return p.anode_potential_curve.smoothed(detail::clamp_unit(soc, "anode_potential"), knot_width);
}

template <typename S>
S open_circuit_voltage(const S& soc, const DegradationParams& p, double knot_width = 0.0) {
    return p.ocv_curve.smoothed(detail::clamp_unit(soc, "open_circuit_voltage"), knot_width);
}

/// Pack voltage over one step: mean of the OCV at both SoC endpoints.
template <typename S>
S step_voltage(const S& soc_prev, const S& soc_now, const DegradationParams& p, double knot_width = 0.0) {
    return 0.5 * (open_circuit_voltage(soc_prev, p, knot_width) + open_circuit_voltage(soc_now, p, knot_width));
}

template <typename S>
S calendar_stress(double temperature_k, const S& soc, const DegradationParams& p,
                  const PhysicalConstants& c, double knot_width = 0.0) {
    using std::exp;
    detail::check_temperature(temperature_k);
    const double arr = detail::arrhenius(p.ea_cal_j_per_mol, temperature_k, p.t_ref_k, c);
    const double scale = p.alpha * c.faraday_c_per_mol / (c.gas_constant_j_per_mol_k * p.t_ref_k);
    const S ua = anode_potential(soc, p, knot_width);
    return p.k_cal_ref_pct_per_sqrt_h * arr * (exp(scale * (p.ua_ref_v - ua)) + p.k0);
}

inline double cycle_high_temp_stress(double temperature_k, const DegradationParams& p,
                                     const PhysicalConstants& c) {
    detail::check_temperature(temperature_k);
    return p.k_cyc_ht_ref_pct_per_sqrt_ah *
           detail::arrhenius(p.ea_cyc_ht_j_per_mol, temperature_k, p.t_ref_k, c);
}

template <typename S>
S cycle_low_temp_stress(double temperature_k, const S& charge_current_a, double c0_ah,
                        const DegradationParams& p, const PhysicalConstants& c) {
    using std::exp;
    detail::check_temperature(temperature_k);
    const double i_ref = p.ich_ref_c_rate_per_h * c0_ah;
    return p.k_cyc_lt_ref_pct_per_sqrt_ah *
           detail::arrhenius(p.ea_cyc_lt_j_per_mol, temperature_k, p.t_ref_k, c) *
           exp(p.beta_lt_h * (charge_current_a - i_ref) / c0_ah);
}

/// (sgn(x)+1)/2 with sgn(0) = 0, or its logistic smoothing.
template <typename S>
S soc_gate(const S& soc, double soc_ref, const GateOptions& gate) {
    using std::exp;
    if (gate.smoothed) return 1.0 / (1.0 + exp(-(soc - soc_ref) / gate.eps));
    const double x = value_of(soc) - soc_ref;
    if (x > 0.0) return S(1.0);
    if (x < 0.0) return S(0.0);
    return S(0.5);
}

template <typename S>
S cycle_low_temp_high_soc_stress(double temperature_k, const S& charge_current_a, const S& soc,
                                 double c0_ah, const DegradationParams& p,
                                 const PhysicalConstants& c, const GateOptions& gate = {}) {
    using std::exp;
    detail::check_temperature(temperature_k);
    const S s = detail::clamp_unit(soc, "cycle_low_temp_high_soc_stress");
    const double i_ref = p.ich_ref_c_rate_per_h * c0_ah;
    return p.k_cyc_lthsoc_ref_pct_per_ah *
           detail::arrhenius(p.ea_cyc_lthsoc_j_per_mol, temperature_k, p.t_ref_k, c) *
           exp(p.beta_lthsoc_h * (charge_current_a - i_ref) / c0_ah) *
           soc_gate(s, p.soc_ref, gate);
}

/// Calendar loss over one step. The sqrt-time denominator uses the
/// post-increment age, floored at `age_floor_h` (pass 0 to disable).
inline double calendar_step(const DegradationState& state, double temperature_k, double soc,
                            double dt_hours, const DegradationParams& p,
                            const PhysicalConstants& c, double age_floor_h = 1.0) {
    if (dt_hours < 0.0) throw DomainError("calendar_step: negative time step");
    const double t = std::max(state.age_hours + dt_hours, age_floor_h);
    if (!(t > 0.0)) throw DomainError("calendar_step: sqrt(t) singularity at zero age");
    return calendar_stress(temperature_k, soc, p, c) / (2.0 * std::sqrt(t)) * dt_hours;
}

inline double cycle_high_temp_step(const DegradationState& state, double temperature_k,
                                   double dq_tot_ah, const DegradationParams& p,
                                   const PhysicalConstants& c) {
    if (dq_tot_ah < 0.0) throw DomainError("cycle_high_temp_step: negative throughput");
    if (dq_tot_ah == 0.0) return 0.0;
    const double q = state.q_tot_ah + dq_tot_ah;
    return cycle_high_temp_stress(temperature_k, p, c) / (2.0 * std::sqrt(q)) * dq_tot_ah;
}

inline double cycle_low_temp_step(const DegradationState& state, double temperature_k,
                                  double dq_ch_ah, double dt_hours, double c0_ah,
                                  const DegradationParams& p, const PhysicalConstants& c) {
    if (dq_ch_ah < 0.0) throw DomainError("cycle_low_temp_step: negative charge throughput");
    if (!(dt_hours > 0.0)) throw DomainError("cycle_low_temp_step: time step must be > 0");
    if (dq_ch_ah == 0.0) return 0.0;
    const double q = state.q_ch_ah + dq_ch_ah;
    const double i_ch = dq_ch_ah / dt_hours;
    return cycle_low_temp_stress(temperature_k, i_ch, c0_ah, p, c) / (2.0 * std::sqrt(q)) *
           dq_ch_ah;
}

inline double cycle_low_temp_high_soc_step(const DegradationState&, double temperature_k,
                                           double dq_ch_ah, double dt_hours, double soc,
                                           double c0_ah, const DegradationParams& p,
                                           const PhysicalConstants& c,
                                           const GateOptions& gate = {}) {
    if (dq_ch_ah < 0.0)
        throw DomainError("cycle_low_temp_high_soc_step: negative charge throughput");
    if (!(dt_hours > 0.0)) throw DomainError("cycle_low_temp_high_soc_step: time step must be > 0");
    const double i_ch = dq_ch_ah / dt_hours;
    return cycle_low_temp_high_soc_stress(temperature_k, i_ch, soc, c0_ah, p, c, gate) * dq_ch_ah;
}

/// Per-mechanism capacity loss for one step, generic over the scalar type so
/// the optimizer can differentiate it. With `frozen` set the sqrt denominators
/// come from the snapshot; otherwise from the post-increment cumulative state.
template <typename S>
MechanismIncrements<S> degradation_increments(const DegradationState& state, double temperature_k,
                                              const S& soc_prev, const S& soc_now, const S& e_in_kwh,
                                              const S& e_out_kwh, double dt_hours,
                                              const VehicleBatterySpec& spec,
                                              const DegradationParams& p, const PhysicalConstants& c,
                                              const GateOptions& gate = {},
                                              const FrozenDenominators* frozen = nullptr,
                                              double age_floor_h = 1.0) {
    using std::sqrt;
    if (value_of(e_in_kwh) < 0.0 || value_of(e_out_kwh) < 0.0)
        throw DomainError("degradation step: energy flows must be >= 0");
    if (!(dt_hours > 0.0)) throw DomainError("degradation step: time step must be > 0");

    const S volts = step_voltage(soc_prev, soc_now, p, gate.knot_width);
    const S dq_ch = e_in_kwh * 1000.0 / volts;
    const S dq_tot = dq_ch + e_out_kwh * 1000.0 / volts;
    const S i_ch = dq_ch / dt_hours;
    const double c0 = spec.nominal_capacity_ah;

    MechanismIncrements<S> inc;
    const double age = frozen ? frozen->age_hours : std::max(state.age_hours + dt_hours, age_floor_h);
    if (!(age > 0.0)) throw DomainError("degradation step: sqrt(t) singularity at zero age");
    inc.calendar = calendar_stress(temperature_k, soc_now, p, c, gate.knot_width) * (dt_hours / (2.0 * std::sqrt(age)));

    const double k_ht = cycle_high_temp_stress(temperature_k, p, c);
    const S k_lt = cycle_low_temp_stress(temperature_k, i_ch, c0, p, c);
    if (frozen) {
        inc.cycle_high_temp = k_ht * dq_tot / (2.0 * std::sqrt(frozen->q_tot_ah));
        inc.cycle_low_temp = k_lt * dq_ch / (2.0 * std::sqrt(frozen->q_ch_ah));
    } else {
        if (value_of(dq_tot) > 0.0)
            inc.cycle_high_temp = k_ht * dq_tot / (2.0 * sqrt(state.q_tot_ah + dq_tot));
        if (value_of(dq_ch) > 0.0)
            inc.cycle_low_temp = k_lt * dq_ch / (2.0 * sqrt(state.q_ch_ah + dq_ch));
    }
    inc.cycle_low_temp_high_soc =
        cycle_low_temp_high_soc_stress(temperature_k, i_ch, soc_now, c0, p, c, gate) * dq_ch;
    return inc;
}

struct DegradationStepResult {
    DegradationState state;
    MechanismIncrements<double> increments;
    double total_pct = 0.0;
    double charge_ah = 0.0;
    double throughput_ah = 0.0;
};

/// Exact accounting for one step: converts kWh to Ah with the step voltage,
/// advances age and throughputs, and accumulates each mechanism.
inline DegradationStepResult total_degradation_step(const DegradationState& state,
                                                    double temperature_k, double soc_prev,
                                                    double soc_now, double e_in_kwh,
                                                    double e_out_kwh, double dt_hours,
                                                    const VehicleBatterySpec& spec,
                                                    const DegradationParams& p,
                                                    const PhysicalConstants& c,
                                                    const GateOptions& gate = {}) {
    DegradationStepResult r;
    r.increments = degradation_increments<double>(state, temperature_k, soc_prev, soc_now, e_in_kwh,
                                                  e_out_kwh, dt_hours, spec, p, c, gate);
    const double volts = step_voltage(soc_prev, soc_now, p);
    r.charge_ah = e_in_kwh * 1000.0 / volts;
    r.throughput_ah = r.charge_ah + e_out_kwh * 1000.0 / volts;

    r.state = state;
    r.state.age_hours += dt_hours;
    r.state.q_tot_ah += r.throughput_ah;
    r.state.q_ch_ah += r.charge_ah;
    r.state.bd_cal_pct += r.increments.calendar;
    r.state.bd_cyc_ht_pct += r.increments.cycle_high_temp;
    r.state.bd_cyc_lt_pct += r.increments.cycle_low_temp;
    r.state.bd_cyc_lthsoc_pct += r.increments.cycle_low_temp_high_soc;
    r.total_pct = r.increments.total();
    return r;
}

/// Discounted replacement cost net of residual value.
inline double net_value(const BatteryEconomics& econ, const VehicleBatterySpec& spec) {
    const double replacement = econ.replacement_cost_eur_per_kwh * spec.capacity_kwh;
    const double residual = econ.residual_fraction * replacement;
    return (replacement - residual) / std::pow(1.0 + econ.discount_rate_per_year, econ.nominal_life_years);
}

/// Euro cost of a capacity loss, prorated over the usable life down to EoL.
template <typename S>
S battery_cost(const S& bd_percent, double nv_eur, double eol_fraction) {
    if (value_of(bd_percent) < 0.0) throw DomainError("battery_cost: negative degradation");
    if (eol_fraction >= 1.0) throw DomainError("battery_cost: EoL fraction of 1 leaves no usable life");
    return bd_percent * (nv_eur / (100.0 * (1.0 - eol_fraction)));
}

} // namespace v2hg
