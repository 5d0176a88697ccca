#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "v2hg/battery_model.hpp"
#include "v2hg/data_io.hpp"
#include "v2hg/engine.hpp"
#include "v2hg/errors.hpp"
#include "v2hg/forecaster.hpp"
#include "v2hg/ini.hpp"
#include "v2hg/model_io.hpp"
#include "v2hg/parameter_file.hpp"
#include "v2hg/predictors.hpp"

namespace v2hg {

enum class PredictorKind { lstm, oracle, persistence };

inline PredictorKind parse_predictor_kind(const std::string& s) {
    if (s == "lstm") return PredictorKind::lstm;
    if (s == "oracle") return PredictorKind::oracle;
    if (s == "persistence") return PredictorKind::persistence;
    throw ConfigError("unknown predictor '" + s + "' (expected lstm, oracle or persistence)");
}

inline const char* to_string(PredictorKind k) {
    switch (k) {
    case PredictorKind::lstm: return "lstm";
    case PredictorKind::oracle: return "oracle";
    case PredictorKind::persistence: return "persistence";
    }
    return "?";
}

inline SyntheticLoadKind parse_load_kind(const std::string& s) {
    if (s == "constant") return SyntheticLoadKind::constant;
    if (s == "sinusoid") return SyntheticLoadKind::sinusoid;
    if (s == "two_peak") return SyntheticLoadKind::two_peak;
    throw ConfigError("unknown synthetic load kind '" + s + "' (expected constant, sinusoid or two_peak)");
}

struct ScenarioChoice {
    bool a = true;
    bool b = true;
};

inline ScenarioChoice parse_scenario_choice(const std::string& s) {
    if (s == "A") return {true, false};
    if (s == "B") return {false, true};
    if (s == "both") return {true, true};
    throw ConfigError("unknown scenario '" + s + "' (expected A, B or both)");
}

/// Everything a run needs, as read from the config file.
struct RunConfig {
    // [battery]
    VehicleBatterySpec spec;
    double initial_soc = 0.6;
    double initial_age_days = 60.0;
    double temperature_k = 288.15;
    double goal_soc = 0.8;
    std::filesystem::path degradation_params_file;
    // [economics]
    BatteryEconomics economics;
    // [tariff]
    std::filesystem::path price_file; // empty: synthetic
    SyntheticPriceParams price_synth;
    unsigned long long price_seed = 7;
    double gamma = 1.0;
    TaxRule tax;
    // [trips]
    TripParams trips;
    // [forecaster]
    PredictorKind predictor = PredictorKind::lstm;
    std::filesystem::path model_file;
    ForecasterArchitecture architecture;
    TrainingConfig training;
    std::vector<std::filesystem::path> load_files; // empty: synthetic
    SyntheticLoadParams load_synth;
    int synthetic_years = 2;
    unsigned long long load_seed = 3;
    // [simulation]
    ScenarioChoice scenario;
    unsigned long long seed = 1;
    double mismatch_tolerance_kwh = 0.0;
    SolverConfig solver;
    double load_multiplier = 1.0;
    int max_solver_failures = 10;

    void validate() const {
        spec.validate();
        economics.validate();
        trips.validate();
        architecture.validate();
        training.validate();
        solver.validate();
        if (!(initial_soc >= 0.0 && initial_soc <= 1.0)) throw ConfigError("battery.initial_soc_fraction outside [0,1]");
        if (!(goal_soc >= 0.0 && goal_soc <= 1.0)) throw ConfigError("battery.goal_soc_fraction outside [0,1]");
        if (!(initial_age_days >= 0.0)) throw ConfigError("battery.initial_age_days must be >= 0");
        if (!(gamma >= 0.0 && gamma <= 1.0)) throw ConfigError("tariff.gamma_ratio must lie in [0,1]");
        if (!(load_multiplier > 0.0)) throw ConfigError("simulation.load_multiplier_ratio must be > 0");
        if (!(mismatch_tolerance_kwh >= 0.0)) throw ConfigError("simulation.mismatch_tolerance_kwh must be >= 0");
        if (synthetic_years < 2) throw ConfigError("forecaster.synthetic_years_count must be >= 2");
        if (max_solver_failures < 0) throw ConfigError("simulation.max_solver_failures_count must be >= 0");
    }
};

inline const IniSchema& run_config_schema() {
    static const IniSchema schema = {
        {"battery",
         {"capacity_kwh", "nominal_voltage_v", "driving_range_km", "max_hourly_energy_kwh", "eol_fraction",
          "initial_soc_fraction", "initial_age_days", "temperature_k", "goal_soc_fraction",
          "degradation_params_file"}},
        {"economics",
         {"replacement_cost_eur_per_kwh", "residual_value_fraction", "discount_rate_per_year", "nominal_life_years"}},
        {"tariff",
         {"price_file", "gamma_ratio", "tax_multiplier_ratio", "energy_tax_eur_per_kwh", "synthetic_mean_eur_per_kwh",
          "synthetic_daily_swing_fraction", "synthetic_day_level_sigma_ratio", "synthetic_noise_fraction",
          "synthetic_seed"}},
        {"trips",
         {"pickup_mean_h", "pickup_sd_h", "pickup_min_h", "pickup_max_h", "duration_mean_h", "duration_sd_h",
          "duration_min_h", "duration_max_h", "distance_mean_km", "distance_sd_km", "distance_min_km",
          "distance_max_km"}},
        {"forecaster",
         {"predictor", "model_file", "lags_count", "hidden_units_count", "dense1_units_count", "dense2_units_count",
          "batch_size_count", "epochs_count", "learning_rate_ratio", "rng_seed", "load_files", "synthetic_kind",
          "synthetic_mean_kwh", "synthetic_amplitude_kwh", "synthetic_period_h", "synthetic_noise_fraction",
          "synthetic_years_count", "synthetic_seed"}},
        {"simulation",
         {"scenario", "rng_seed", "mismatch_tolerance_kwh", "kkt_tolerance_ratio", "max_iterations_count",
          "slack_penalty_eur_per_pp", "warm_start", "gate_smoothing_fraction", "curve_smoothing_fraction",
          "denominator_freeze", "throughput_floor_ah", "feasibility_tolerance_kwh", "load_multiplier_ratio",
          "max_solver_failures_count"}},
    };
    return schema;
}

namespace detail {

inline bool parse_flag(const IniDocument& d, const std::string& sec, const std::string& key, bool fallback) {
    if (!d.has(sec, key)) return fallback;
    const std::string v = d.text(sec, key);
    if (v == "true" || v == "yes" || v == "1") return true;
    if (v == "false" || v == "no" || v == "0") return false;
    throw ConfigError(d.source() + ": " + sec + "." + key + " must be true or false");
}

inline int parse_count(const IniDocument& d, const std::string& sec, const std::string& key, int fallback) {
    const double v = d.number_or(sec, key, fallback);
    if (v != std::floor(v) || v < 0.0 || v > 1e9)
        throw ConfigError(d.source() + ": " + sec + "." + key + " must be a non-negative integer");
    return static_cast<int>(v);
}

inline unsigned long long parse_seed(const IniDocument& d, const std::string& sec, const std::string& key,
                                     unsigned long long fallback) {
    if (!d.has(sec, key)) return fallback;
    const double v = d.number(sec, key);
    if (v != std::floor(v) || v < 0.0 || v > 9e15)
        throw ConfigError(d.source() + ": " + sec + "." + key + " must be a non-negative integer");
    return static_cast<unsigned long long>(v);
}

inline std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
    std::filesystem::path q(p);
    return q.is_absolute() ? q : base / q;
}

inline TruncatedGaussian read_gaussian(const IniDocument& d, const std::string& prefix, const std::string& unit,
                                       TruncatedGaussian g) {
    g.mean = d.number_or("trips", prefix + "_mean_" + unit, g.mean);
    g.sd = d.number_or("trips", prefix + "_sd_" + unit, g.sd);
    g.lo = d.number_or("trips", prefix + "_min_" + unit, g.lo);
    g.hi = d.number_or("trips", prefix + "_max_" + unit, g.hi);
    return g;
}

} // namespace detail

/// Relative file names are resolved against `base_dir` (the config's directory).
inline RunConfig run_config_from(const IniDocument& d, const std::filesystem::path& base_dir) {
    d.validate(run_config_schema());
    using detail::parse_count;
    using detail::parse_seed;
    RunConfig c;
    try {
        const double cap = d.number_or("battery", "capacity_kwh", 82.0);
        c.spec = VehicleBatterySpec::with_capacity(cap, d.number_or("battery", "nominal_voltage_v", 400.0),
                                                   d.number_or("battery", "driving_range_km", 514.0),
                                                   d.number_or("battery", "max_hourly_energy_kwh", 11.0),
                                                   d.number_or("battery", "eol_fraction", 0.8));
        c.initial_soc = d.number_or("battery", "initial_soc_fraction", c.initial_soc);
        c.initial_age_days = d.number_or("battery", "initial_age_days", c.initial_age_days);
        c.temperature_k = d.number_or("battery", "temperature_k", c.temperature_k);
        c.goal_soc = d.number_or("battery", "goal_soc_fraction", c.goal_soc);
        c.degradation_params_file = d.has("battery", "degradation_params_file")
                                        ? detail::resolve(base_dir, d.text("battery", "degradation_params_file"))
                                        : default_degradation_params_path();

        auto& e = c.economics;
        e.replacement_cost_eur_per_kwh =
            d.number_or("economics", "replacement_cost_eur_per_kwh", e.replacement_cost_eur_per_kwh);
        e.residual_fraction = d.number_or("economics", "residual_value_fraction", e.residual_fraction);
        e.discount_rate_per_year = d.number_or("economics", "discount_rate_per_year", e.discount_rate_per_year);
        e.nominal_life_years = d.number_or("economics", "nominal_life_years", e.nominal_life_years);

        if (d.has("tariff", "price_file")) c.price_file = detail::resolve(base_dir, d.text("tariff", "price_file"));
        c.gamma = d.number_or("tariff", "gamma_ratio", c.gamma);
        c.tax.multiplier = d.number_or("tariff", "tax_multiplier_ratio", c.tax.multiplier);
        c.tax.energy_tax_eur_per_kwh = d.number_or("tariff", "energy_tax_eur_per_kwh", c.tax.energy_tax_eur_per_kwh);
        auto& ps = c.price_synth;
        ps.mean_eur_per_kwh = d.number_or("tariff", "synthetic_mean_eur_per_kwh", ps.mean_eur_per_kwh);
        ps.daily_swing_fraction = d.number_or("tariff", "synthetic_daily_swing_fraction", ps.daily_swing_fraction);
        ps.day_level_sigma = d.number_or("tariff", "synthetic_day_level_sigma_ratio", ps.day_level_sigma);
        ps.noise_fraction = d.number_or("tariff", "synthetic_noise_fraction", ps.noise_fraction);
        c.price_seed = parse_seed(d, "tariff", "synthetic_seed", c.price_seed);

        c.trips.pickup_hour = detail::read_gaussian(d, "pickup", "h", c.trips.pickup_hour);
        c.trips.duration_hours = detail::read_gaussian(d, "duration", "h", c.trips.duration_hours);
        c.trips.distance_km = detail::read_gaussian(d, "distance", "km", c.trips.distance_km);

        c.predictor = parse_predictor_kind(d.text_or("forecaster", "predictor", "lstm"));
        if (d.has("forecaster", "model_file"))
            c.model_file = detail::resolve(base_dir, d.text("forecaster", "model_file"));
        c.architecture.lags = parse_count(d, "forecaster", "lags_count", c.architecture.lags);
        c.architecture.hidden = parse_count(d, "forecaster", "hidden_units_count", c.architecture.hidden);
        c.architecture.dense1 = parse_count(d, "forecaster", "dense1_units_count", c.architecture.dense1);
        c.architecture.dense2 = parse_count(d, "forecaster", "dense2_units_count", c.architecture.dense2);
        c.training.batch_size = parse_count(d, "forecaster", "batch_size_count", c.training.batch_size);
        c.training.epochs = parse_count(d, "forecaster", "epochs_count", c.training.epochs);
        c.training.learning_rate = d.number_or("forecaster", "learning_rate_ratio", c.training.learning_rate);
        c.training.seed = parse_seed(d, "forecaster", "rng_seed", c.training.seed);
        if (d.has("forecaster", "load_files")) {
            for (const auto& f : split_list(d.text("forecaster", "load_files")))
                c.load_files.push_back(detail::resolve(base_dir, f));
            if (c.load_files.size() < 2)
                throw ConfigError("forecaster.load_files needs at least two files (training + test)");
        }
        auto& ls = c.load_synth;
        ls.kind = parse_load_kind(d.text_or("forecaster", "synthetic_kind", "two_peak"));
        ls.mean_kwh = d.number_or("forecaster", "synthetic_mean_kwh", ls.mean_kwh);
        ls.amplitude_kwh = d.number_or("forecaster", "synthetic_amplitude_kwh", ls.amplitude_kwh);
        ls.period_hours = d.number_or("forecaster", "synthetic_period_h", ls.period_hours);
        ls.noise_fraction = d.number_or("forecaster", "synthetic_noise_fraction", ls.noise_fraction);
        c.synthetic_years = parse_count(d, "forecaster", "synthetic_years_count", c.synthetic_years);
        c.load_seed = parse_seed(d, "forecaster", "synthetic_seed", c.load_seed);

        c.scenario = parse_scenario_choice(d.text_or("simulation", "scenario", "both"));
        c.seed = parse_seed(d, "simulation", "rng_seed", c.seed);
        c.mismatch_tolerance_kwh = d.number_or("simulation", "mismatch_tolerance_kwh", c.mismatch_tolerance_kwh);
        auto& s = c.solver;
        s.kkt_tolerance = d.number_or("simulation", "kkt_tolerance_ratio", s.kkt_tolerance);
        s.max_iterations = parse_count(d, "simulation", "max_iterations_count", s.max_iterations);
        s.slack_penalty_eur_per_pp = d.number_or("simulation", "slack_penalty_eur_per_pp", s.slack_penalty_eur_per_pp);
        s.warm_start = detail::parse_flag(d, "simulation", "warm_start", s.warm_start);
        s.gate_smoothing_eps = d.number_or("simulation", "gate_smoothing_fraction", s.gate_smoothing_eps);
        s.curve_smoothing = d.number_or("simulation", "curve_smoothing_fraction", s.curve_smoothing);
        s.degradation_denominator_freeze =
            detail::parse_flag(d, "simulation", "denominator_freeze", s.degradation_denominator_freeze);
        s.throughput_floor_ah = d.number_or("simulation", "throughput_floor_ah", s.throughput_floor_ah);
        s.feasibility_tolerance = d.number_or("simulation", "feasibility_tolerance_kwh", s.feasibility_tolerance);
        c.load_multiplier = d.number_or("simulation", "load_multiplier_ratio", c.load_multiplier);
        c.max_solver_failures = parse_count(d, "simulation", "max_solver_failures_count", c.max_solver_failures);
        c.validate();
    } catch (const ValidationError& e) {
        throw ConfigError(d.source() + ": " + e.what());
    }
    return c;
}

inline RunConfig load_run_config(const std::filesystem::path& path) {
    const auto doc = IniDocument::load(path);
    return run_config_from(doc, path.has_parent_path() ? path.parent_path() : std::filesystem::path("."));
}

/// Price and load data behind a run, loaded once and shared by every cell.
struct RunData {
    HourlySeries raw_prices; // one year, before tax
    LoadDataset loads;       // training series + test series (unscaled)
    std::shared_ptr<const DegradationParams> params;
    Warnings warnings;

    HourlySeries test_year() const { return to_simulation_year(loads.series.back(), "test load"); }
};

inline RunData load_run_data(const RunConfig& c) {
    RunData d;
    d.params = std::make_shared<const DegradationParams>(load_degradation_params(c.degradation_params_file));
    if (c.price_file.empty()) {
        d.raw_prices = generate_synthetic_prices(c.price_synth, c.price_seed);
    } else {
        d.raw_prices = to_simulation_year(load_price_csv(c.price_file), c.price_file.string(), &d.warnings);
    }
    if (c.load_files.empty()) {
        // Consecutive synthetic years ending with the price year.
        for (int i = 0; i < c.synthetic_years; ++i) {
            SyntheticLoadParams p = c.load_synth;
            p.start = d.raw_prices.time.front() -
                      std::chrono::hours(static_cast<long>(kHoursPerYear) * (c.synthetic_years - 1 - i));
            d.loads.names.push_back("synthetic_" + std::to_string(i));
            d.loads.series.push_back(generate_synthetic_load(p, c.load_seed + static_cast<unsigned long long>(i)));
        }
    } else {
        d.loads = load_household_csv(c.load_files, 1.0, &d.warnings);
        to_simulation_year(d.loads.series.back(), c.load_files.back().string(), &d.warnings);
    }
    return d;
}

/// One simulation cell. Changing the capacity keeps consumption per km, so
/// the driving range scales with it.
struct CellSpec {
    Scenario scenario = Scenario::A;
    double gamma = 1.0;
    double capacity_kwh = 0.0;     // 0: as configured
    double load_multiplier = 0.0;  // 0: as configured
    std::optional<unsigned long long> seed;
};

inline SimulationConfig make_simulation(const RunConfig& c, const RunData& d, const CellSpec& cell,
                                        std::shared_ptr<const ForecastModel> model = nullptr,
                                        std::optional<PredictorKind> predictor_override = std::nullopt) {
    SimulationConfig s;
    s.scenario = cell.scenario;
    s.gamma = cell.gamma;
    const double cap = cell.capacity_kwh > 0.0 ? cell.capacity_kwh : c.spec.capacity_kwh;
    s.spec = VehicleBatterySpec::with_capacity(cap, c.spec.nominal_voltage_v,
                                               c.spec.driving_range_km * cap / c.spec.capacity_kwh,
                                               c.spec.max_hourly_energy_kwh, c.spec.eol_fraction);
    s.economics = c.economics;
    s.params = d.params;
    s.temperature_k = c.temperature_k;
    s.initial_soc = c.initial_soc;
    s.initial_age_hours = c.initial_age_days * 24.0;
    s.goal_soc = c.goal_soc;
    s.trips = c.trips;
    s.seed = cell.seed.value_or(c.seed);
    s.mismatch_tolerance_kwh = c.mismatch_tolerance_kwh;
    s.solver = c.solver;
    s.prices = apply_tax_transform(d.raw_prices, cell.gamma, c.tax).buy_price_eur_per_kwh;

    const double mult = cell.load_multiplier > 0.0 ? cell.load_multiplier : c.load_multiplier;
    const HourlySeries test = d.test_year();
    s.load_kwh = test.value;
    for (double& v : s.load_kwh) v *= mult;

    if (cell.scenario == Scenario::B) return s; // decisions do not depend on the load forecast
    switch (predictor_override.value_or(c.predictor)) {
    case PredictorKind::oracle: s.predictor = make_oracle_predictor(s.load_kwh); break;
    case PredictorKind::persistence: s.predictor = make_persistence_predictor(s.load_kwh); break;
    case PredictorKind::lstm: {
        if (!model) throw ConfigError("predictor 'lstm' needs a trained model (train one or use --no-forecast)");
        HourlySeries history = d.loads.train();
        const std::size_t offset = history.size();
        history.append(d.loads.series.back());
        s.predictor = make_lstm_predictor(std::move(model), std::move(history), offset, mult);
        break;
    }
    }
    return s;
}

} // namespace v2hg
