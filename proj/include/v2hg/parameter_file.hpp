#pragma once

#include <filesystem>
#include <string>

#include "v2hg/battery_model.hpp"
#include "v2hg/ini.hpp"

namespace v2hg {

inline const IniSchema& degradation_file_schema() {
    static const IniSchema schema = {
        {"calendar",
         {"k_ref_pct_per_sqrt_h", "activation_energy_j_per_mol", "alpha_ratio", "anode_potential_ref_v",
          "k0_ratio", "reference_temperature_k"}},
        {"cycle_high_temperature", {"k_ref_pct_per_sqrt_ah", "activation_energy_j_per_mol"}},
        {"cycle_low_temperature",
         {"k_ref_pct_per_sqrt_ah", "activation_energy_j_per_mol", "beta_h", "reference_charge_rate_per_h"}},
        {"cycle_low_temperature_high_soc",
         {"k_ref_pct_per_ah", "activation_energy_j_per_mol", "beta_h", "reference_soc_fraction"}},
        {"anode_potential_curve", {"soc_fraction", "potential_v"}},
        {"ocv_curve", {"soc_fraction", "voltage_v"}},
    };
    return schema;
}

inline DegradationParams degradation_params_from(const IniDocument& doc) {
    doc.validate(degradation_file_schema());
    DegradationParams p;
    p.k_cal_ref_pct_per_sqrt_h = doc.number("calendar", "k_ref_pct_per_sqrt_h");
    p.ea_cal_j_per_mol = doc.number("calendar", "activation_energy_j_per_mol");
    p.alpha = doc.number("calendar", "alpha_ratio");
    p.ua_ref_v = doc.number("calendar", "anode_potential_ref_v");
    p.k0 = doc.number("calendar", "k0_ratio");
    p.t_ref_k = doc.number("calendar", "reference_temperature_k");

    p.k_cyc_ht_ref_pct_per_sqrt_ah = doc.number("cycle_high_temperature", "k_ref_pct_per_sqrt_ah");
    p.ea_cyc_ht_j_per_mol = doc.number("cycle_high_temperature", "activation_energy_j_per_mol");

    p.k_cyc_lt_ref_pct_per_sqrt_ah = doc.number("cycle_low_temperature", "k_ref_pct_per_sqrt_ah");
    p.ea_cyc_lt_j_per_mol = doc.number("cycle_low_temperature", "activation_energy_j_per_mol");
    p.beta_lt_h = doc.number("cycle_low_temperature", "beta_h");
    p.ich_ref_c_rate_per_h = doc.number("cycle_low_temperature", "reference_charge_rate_per_h");

    p.k_cyc_lthsoc_ref_pct_per_ah = doc.number("cycle_low_temperature_high_soc", "k_ref_pct_per_ah");
    p.ea_cyc_lthsoc_j_per_mol = doc.number("cycle_low_temperature_high_soc", "activation_energy_j_per_mol");
    p.beta_lthsoc_h = doc.number("cycle_low_temperature_high_soc", "beta_h");
    p.soc_ref = doc.number("cycle_low_temperature_high_soc", "reference_soc_fraction");

    p.anode_potential_curve = PiecewiseLinearCurve(doc.numbers("anode_potential_curve", "soc_fraction"),
                                                   doc.numbers("anode_potential_curve", "potential_v"));
    p.ocv_curve = PiecewiseLinearCurve(doc.numbers("ocv_curve", "soc_fraction"),
                                       doc.numbers("ocv_curve", "voltage_v"));
    p.validate();
    return p;
}

inline DegradationParams load_degradation_params(const std::filesystem::path& path) {
    return degradation_params_from(IniDocument::load(path));
}

/// Location of the shipped parameter file, overridable at configure time.
inline std::filesystem::path default_degradation_params_path() {
#ifdef V2HG_DATA_DIR
    return std::filesystem::path(V2HG_DATA_DIR) / "lfp_degradation.ini";
#else
    return std::filesystem::path("data") / "lfp_degradation.ini";
#endif
}

} // namespace v2hg
