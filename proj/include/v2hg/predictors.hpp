#pragma once

#include <memory>
#include <string>
#include <vector>

#include "v2hg/engine.hpp"
#include "v2hg/errors.hpp"
#include "v2hg/forecaster.hpp"
#include "v2hg/time_series.hpp"

namespace v2hg {

/// Perfect foresight: returns the actual load.
inline Predictor make_oracle_predictor(std::vector<double> load) {
    auto l = std::make_shared<const std::vector<double>>(std::move(load));
    return [l](std::size_t t, int n) {
        std::vector<double> out;
        out.reserve(static_cast<std::size_t>(n));
        for (int k = 1; k <= n; ++k) {
            const std::size_t i = std::min(t + static_cast<std::size_t>(k), l->size() - 1);
            out.push_back((*l)[i]);
        }
        return out;
    };
}

/// Same hour of the previous day (or earlier, when that is still in the future).
inline Predictor make_persistence_predictor(std::vector<double> load) {
    auto l = std::make_shared<const std::vector<double>>(std::move(load));
    return [l](std::size_t t, int n) {
        std::vector<double> out;
        out.reserve(static_cast<std::size_t>(n));
        for (int k = 1; k <= n; ++k) {
            long j = static_cast<long>(t) + k;
            while (j > static_cast<long>(t)) j -= 24;
            if (j < 0) j = static_cast<long>(t); // first day: flat
            out.push_back((*l)[static_cast<std::size_t>(j)]);
        }
        return out;
    };
}

/// Actual load plus a constant offset. With offset above the mismatch
/// tolerance every hour triggers a re-optimisation.
inline Predictor make_offset_predictor(std::vector<double> load, double offset_kwh) {
    auto inner = make_oracle_predictor(std::move(load));
    return [inner, offset_kwh](std::size_t t, int n) {
        auto v = inner(t, n);
        for (double& x : v) x = std::max(0.0, x + offset_kwh);
        return v;
    };
}

/// LSTM rollout. `history` holds unscaled load with hour 0 of the simulated
/// year at index `offset`; predictions are scaled by `multiplier` (the model
/// is trained on unscaled data).
inline Predictor make_lstm_predictor(std::shared_ptr<const ForecastModel> model, HourlySeries history,
                                     std::size_t offset, double multiplier) {
    if (!model) throw ValidationError("lstm predictor: missing model");
    const auto lags = static_cast<std::size_t>(model->architecture().lags);
    if (offset + 1 < lags)
        throw ValidationError("lstm predictor: need " + std::to_string(lags - 1) +
                              " hours of history before the simulated year");
    if (!(multiplier > 0.0)) throw ValidationError("lstm predictor: multiplier must be > 0");
    auto h = std::make_shared<const HourlySeries>(std::move(history));
    return [model, h, offset, multiplier](std::size_t t, int n) {
        auto v = predict_horizon(*model, *h, offset + t, n);
        for (double& x : v) x *= multiplier;
        return v;
    };
}

} // namespace v2hg
