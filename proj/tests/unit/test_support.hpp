#pragma once

#include <filesystem>
#include <memory>
#include <random>
#include <string>

#include "v2hg/battery_model.hpp"
#include "v2hg/optimizer.hpp"
#include "v2hg/parameter_file.hpp"

namespace v2hg::test {

inline std::shared_ptr<const DegradationParams> shipped_params() {
    static const auto p =
        std::make_shared<const DegradationParams>(load_degradation_params(default_degradation_params_path()));
    return p;
}

/// Window with shipped parameters and a 60-day-old battery.
inline OptimizationWindow make_window(std::vector<double> prices, std::vector<double> loads,
                                      std::vector<double> goals, double soc0 = 0.6, double gamma = 1.0) {
    OptimizationWindow w;
    w.prices = std::move(prices);
    w.predicted_load_kwh = std::move(loads);
    w.soc_goal = std::move(goals);
    w.soc_initial = soc0;
    w.price_ratio = gamma;
    w.degradation.params = shipped_params();
    w.degradation.state.age_hours = 1440.0;
    w.degradation.state.q_tot_ah = 5000.0;
    w.degradation.state.q_ch_ah = 2500.0;
    return w;
}

/// Fresh scratch directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
    auto d = std::filesystem::temp_directory_path() / ("v2hg_test_" + name);
    std::filesystem::remove_all(d);
    std::filesystem::create_directories(d);
    return d;
}

} // namespace v2hg::test
