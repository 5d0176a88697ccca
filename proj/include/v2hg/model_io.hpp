#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "v2hg/errors.hpp"
#include "v2hg/forecaster.hpp"

namespace v2hg {

inline constexpr const char* kModelFormat = "v2hg-load-forecaster";
inline constexpr int kModelVersion = 1;

inline nlohmann::json model_to_json(const ForecastModel& m) {
    const auto& a = m.architecture();
    const auto& n = m.normalization();
    nlohmann::json j;
    j["format"] = kModelFormat;
    j["version"] = kModelVersion;
    j["architecture"] = {{"lags", a.lags}, {"hidden", a.hidden}, {"dense1", a.dense1}, {"dense2", a.dense2},
                         {"context_per_lag", ForecasterArchitecture::context_per_lag}};
    j["normalization"] = {{"load_min_kwh", n.load_min},
                          {"load_max_kwh", n.load_max},
                          {"context_min", n.ctx_min},
                          {"context_max", n.ctx_max}};
    const auto& p = m.parameters();
    j["parameters"] = std::vector<double>(p.data(), p.data() + p.size());
    return j;
}

inline ForecastModel model_from_json(const nlohmann::json& j) {
    try {
        if (j.at("format").get<std::string>() != kModelFormat) throw ValidationError("model: unknown format");
        if (j.at("version").get<int>() != kModelVersion)
            throw ValidationError("model: unsupported version " + j.at("version").dump());
        ForecasterArchitecture a;
        const auto& ja = j.at("architecture");
        a.lags = ja.at("lags").get<int>();
        a.hidden = ja.at("hidden").get<int>();
        a.dense1 = ja.at("dense1").get<int>();
        a.dense2 = ja.at("dense2").get<int>();
        if (ja.at("context_per_lag").get<int>() != ForecasterArchitecture::context_per_lag)
            throw ValidationError("model: unsupported context layout");
        Normalization n;
        const auto& jn = j.at("normalization");
        n.load_min = jn.at("load_min_kwh").get<double>();
        n.load_max = jn.at("load_max_kwh").get<double>();
        n.ctx_min = jn.at("context_min").get<std::array<double, 3>>();
        n.ctx_max = jn.at("context_max").get<std::array<double, 3>>();
        const auto p = j.at("parameters").get<std::vector<double>>();
        return ForecastModel(a, n, Eigen::Map<const Eigen::VectorXd>(p.data(), static_cast<Eigen::Index>(p.size())));
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("model: malformed file: ") + e.what());
    }
}

inline void save_model(const ForecastModel& m, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw ValidationError("cannot write " + path.string());
    out << model_to_json(m).dump() << '\n';
}

inline ForecastModel load_model(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open model " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(path.string() + ": " + e.what());
    }
    return model_from_json(j);
}

} // namespace v2hg
