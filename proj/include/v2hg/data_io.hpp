#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <boost/tokenizer.hpp>

#include "v2hg/errors.hpp"
#include "v2hg/ini.hpp"
#include "v2hg/optimizer.hpp"
#include "v2hg/time_series.hpp"

namespace v2hg {

/// Non-fatal data issues (gap repair, leap-year trimming) are collected here.
using Warnings = std::vector<std::string>;

struct TaxRule {
    double multiplier = 1.25;
    double energy_tax_eur_per_kwh = 0.006;
};

inline double apply_tax_transform(double raw_eur_per_kwh, const TaxRule& rule = {}) {
    return raw_eur_per_kwh * rule.multiplier + rule.energy_tax_eur_per_kwh;
}

inline TariffSeries apply_tax_transform(const HourlySeries& raw, double price_ratio, const TaxRule& rule = {}) {
    TariffSeries t;
    t.price_ratio = price_ratio;
    t.buy_price_eur_per_kwh.reserve(raw.size());
    for (double p : raw.value) t.buy_price_eur_per_kwh.push_back(apply_tax_transform(p, rule));
    t.validate();
    return t;
}

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
    using Sep = boost::escaped_list_separator<char>;
    boost::tokenizer<Sep> tok(line, Sep('\\', ',', '"'));
    std::vector<std::string> out;
    for (const auto& t : tok) {
        std::string s = t;
        while (!s.empty() && (s.back() == '\r' || s.back() == ' ')) s.pop_back();
        while (!s.empty() && s.front() == ' ') s.erase(s.begin());
        out.push_back(s);
    }
    return out;
}

inline std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

struct RawRow {
    TimePoint time;
    double value;
    bool missing;
    std::size_t line;
};

inline std::ifstream open_or_throw(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open " + path.string());
    return in;
}

/// Reads rows and checks ordering; duplicate and out-of-order timestamps are errors.
inline std::vector<RawRow> read_two_column_rows(std::istream& in, const std::string& source, std::size_t time_col,
                                                std::size_t value_col) {
    std::vector<RawRow> rows;
    std::string line;
    std::size_t lineno = 1;
    std::vector<std::string> duplicates;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line == "\r") continue;
        const auto f = split_csv_line(line);
        if (f.size() <= std::max(time_col, value_col))
            throw ValidationError(source + ":" + std::to_string(lineno) + ": too few columns");
        RawRow r{};
        try {
            r.time = parse_timestamp(f[time_col]);
        } catch (const ValidationError& e) {
            throw ValidationError(source + ":" + std::to_string(lineno) + ": " + e.what());
        }
        const std::string& v = f[value_col];
        const std::string lv = lower(v);
        r.missing = v.empty() || lv == "n/a" || lv == "nan" || lv == "-";
        if (!r.missing) {
            auto d = parse_double(v);
            if (!d || !std::isfinite(*d))
                throw ValidationError(source + ":" + std::to_string(lineno) + ": not a number: '" + v + "'");
            r.value = *d;
        }
        r.line = lineno;
        if (!rows.empty()) {
            if (r.time == rows.back().time) {
                duplicates.push_back(format_timestamp(r.time));
                continue;
            }
            if (r.time < rows.back().time)
                throw ValidationError(source + ":" + std::to_string(lineno) + ": timestamps out of order at " +
                                      format_timestamp(r.time));
        }
        rows.push_back(r);
    }
    if (!duplicates.empty()) {
        std::string msg = source + ": duplicate timestamps:";
        for (const auto& d : duplicates) msg += " " + d;
        throw ValidationError(msg);
    }
    if (rows.empty()) throw ValidationError(source + ": no data rows");
    return rows;
}

inline std::vector<TimePoint> missing_hours(const std::vector<RawRow>& rows) {
    std::vector<TimePoint> gaps;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const auto diff = rows[i].time - rows[i - 1].time;
        if (diff % std::chrono::hours(1) != std::chrono::seconds(0))
            throw ValidationError("timestamps not on whole hours near " + format_timestamp(rows[i].time));
        for (auto t = rows[i - 1].time + std::chrono::hours(1); t < rows[i].time; t += std::chrono::hours(1))
            gaps.push_back(t);
    }
    return gaps;
}

inline std::string list_times(const std::vector<TimePoint>& ts, std::size_t max_items = 20) {
    std::string s;
    for (std::size_t i = 0; i < ts.size() && i < max_items; ++i) s += (i ? ", " : "") + format_timestamp(ts[i]);
    if (ts.size() > max_items) s += ", ... (" + std::to_string(ts.size()) + " total)";
    return s;
}

} // namespace detail

/// Hourly day-ahead prices in EUR/kWh. Header: timestamp column plus one of
/// price_eur_per_mwh / price_eur_per_kwh (market exports with
/// "MTU (UTC)" and "Day-ahead Price [EUR/MWh]" are also accepted).
inline HourlySeries load_price_csv(const std::filesystem::path& path) {
    auto in = detail::open_or_throw(path);
    const std::string source = path.string();
    std::string header;
    if (!std::getline(in, header)) throw ValidationError(source + ": empty file");
    const auto cols = detail::split_csv_line(header);
    std::size_t tcol = cols.size(), vcol = cols.size();
    double scale = 0.0;
    for (std::size_t i = 0; i < cols.size(); ++i) {
        const std::string c = detail::lower(cols[i]);
        if (c == "timestamp" || c == "mtu (utc)" || c == "time_utc") tcol = i;
        else if (c == "price_eur_per_mwh" || c == "day-ahead price [eur/mwh]") vcol = i, scale = 1e-3;
        else if (c == "price_eur_per_kwh") vcol = i, scale = 1.0;
    }
    if (tcol == cols.size()) throw ValidationError(source + ": no timestamp column in header");
    if (vcol == cols.size())
        throw ValidationError(source + ": price column with a known unit (EUR/MWh or EUR/kWh) not found");
    const auto rows = detail::read_two_column_rows(in, source, tcol, vcol);
    auto gaps = detail::missing_hours(rows);
    for (const auto& r : rows)
        if (r.missing) gaps.push_back(r.time);
    if (!gaps.empty()) {
        std::sort(gaps.begin(), gaps.end());
        throw ValidationError(source + ": missing hours: " + detail::list_times(gaps));
    }
    HourlySeries s;
    for (const auto& r : rows) {
        s.time.push_back(r.time);
        s.value.push_back(r.value * scale);
    }
    return s;
}

/// Hourly household load, header "timestamp,load_kwh". A single missing hour
/// is filled by linear interpolation (with a warning); longer gaps reject.
inline HourlySeries load_load_csv(const std::filesystem::path& path, Warnings* warnings = nullptr) {
    auto in = detail::open_or_throw(path);
    const std::string source = path.string();
    std::string header;
    if (!std::getline(in, header)) throw ValidationError(source + ": empty file");
    const auto cols = detail::split_csv_line(header);
    std::size_t tcol = cols.size(), vcol = cols.size();
    for (std::size_t i = 0; i < cols.size(); ++i) {
        const std::string c = detail::lower(cols[i]);
        if (c == "timestamp") tcol = i;
        else if (c == "load_kwh") vcol = i;
    }
    if (tcol == cols.size() || vcol == cols.size())
        throw ValidationError(source + ": expected header 'timestamp,load_kwh'");
    const auto rows = detail::read_two_column_rows(in, source, tcol, vcol);

    // Expand onto a regular grid, marking gaps.
    std::vector<TimePoint> times;
    std::vector<double> values;
    std::vector<bool> missing;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (i > 0) {
            for (auto t = rows[i - 1].time + std::chrono::hours(1); t < rows[i].time; t += std::chrono::hours(1)) {
                times.push_back(t);
                values.push_back(0.0);
                missing.push_back(true);
            }
            if ((rows[i].time - rows[i - 1].time) % std::chrono::hours(1) != std::chrono::seconds(0))
                throw ValidationError(source + ": timestamps not on whole hours near " +
                                      format_timestamp(rows[i].time));
        }
        times.push_back(rows[i].time);
        values.push_back(rows[i].missing ? 0.0 : rows[i].value);
        missing.push_back(rows[i].missing);
        if (!rows[i].missing && rows[i].value < 0.0)
            throw ValidationError(source + ":" + std::to_string(rows[i].line) + ": negative load");
    }
    std::vector<TimePoint> long_gaps;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (!missing[i]) continue;
        const bool prev_ok = i > 0 && !missing[i - 1];
        const bool next_ok = i + 1 < values.size() && !missing[i + 1];
        if (prev_ok && next_ok) {
            values[i] = 0.5 * (values[i - 1] + values[i + 1]);
            if (warnings)
                warnings->push_back(source + ": interpolated missing hour " + format_timestamp(times[i]));
        } else {
            long_gaps.push_back(times[i]);
        }
    }
    if (!long_gaps.empty())
        throw ValidationError(source + ": unrepairable gap (2+ consecutive or edge hours missing): " +
                              detail::list_times(long_gaps));
    HourlySeries s;
    s.time = std::move(times);
    s.value = std::move(values);
    return s;
}

/// Cuts a series to exactly one simulation year (8760 h); leap years lose
/// their last day with a warning.
inline HourlySeries to_simulation_year(const HourlySeries& s, const std::string& what, Warnings* warnings = nullptr) {
    if (s.size() == static_cast<std::size_t>(kHoursPerYear)) return s;
    if (s.size() == static_cast<std::size_t>(kHoursPerYear + 24)) {
        if (warnings) warnings->push_back(what + ": 8784-hour year trimmed to the first 8760 hours");
        return s.slice(0, kHoursPerYear);
    }
    throw ValidationError(what + ": expected one year of hourly data (8760 or 8784 rows), got " +
                          std::to_string(s.size()));
}

struct LoadDataset {
    std::vector<std::string> names;
    std::vector<HourlySeries> series;
    double test_multiplier = 1.0;

    /// Every series but the last, concatenated in the given order.
    HourlySeries train() const {
        if (series.size() < 2) throw ValidationError("load dataset: need >= 2 series for a train/test split");
        HourlySeries out;
        for (std::size_t i = 0; i + 1 < series.size(); ++i) out.append(series[i]);
        return out;
    }

    /// The last series, scaled by the test multiplier.
    HourlySeries test() const {
        if (series.size() < 2) throw ValidationError("load dataset: need >= 2 series for a train/test split");
        HourlySeries out = series.back();
        for (double& v : out.value) v *= test_multiplier;
        return out;
    }
};

inline LoadDataset load_household_csv(const std::vector<std::filesystem::path>& paths, double multiplier = 1.0,
                                      Warnings* warnings = nullptr) {
    if (paths.size() < 2) throw ValidationError("load dataset: need >= 2 files (train + test)");
    if (!(multiplier > 0.0)) throw ValidationError("load dataset: multiplier must be > 0");
    LoadDataset ds;
    ds.test_multiplier = multiplier;
    for (const auto& p : paths) {
        auto s = load_load_csv(p, warnings);
        if (s.size() < static_cast<std::size_t>(kHoursPerYear))
            throw ValidationError(p.string() + ": each load series must cover at least one year");
        ds.names.push_back(p.stem().string());
        ds.series.push_back(std::move(s));
    }
    return ds;
}

enum class SyntheticLoadKind { constant, sinusoid, two_peak };

struct SyntheticLoadParams {
    SyntheticLoadKind kind = SyntheticLoadKind::two_peak;
    double mean_kwh = 0.9;
    double amplitude_kwh = 0.5;   // sinusoid amplitude / peak height
    double period_hours = 24.0;
    double noise_fraction = 0.1;  // two-peak multiplicative noise sd
    std::size_t hours = kHoursPerYear;
    TimePoint start = utc(2021, 1, 1);
};

inline HourlySeries generate_synthetic_load(const SyntheticLoadParams& p, unsigned long long seed) {
    if (!(p.mean_kwh >= 0.0) || p.hours == 0) throw ValidationError("synthetic load: invalid parameters");
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> noise(0.0, p.noise_fraction);
    std::vector<double> v(p.hours);
    const double two_pi = 2.0 * std::numbers::pi;
    auto day_shape = [](double hod) {
        auto bump = [&](double c, double w) { return std::exp(-0.5 * (hod - c) * (hod - c) / (w * w)); };
        return 0.55 + 0.9 * bump(7.5, 1.5) + 1.4 * bump(19.0, 2.0);
    };
    double shape_mean = 0.0;
    for (int h = 0; h < 24; ++h) shape_mean += day_shape(h) / 24.0;
    for (std::size_t t = 0; t < p.hours; ++t) {
        const double h = static_cast<double>(t);
        switch (p.kind) {
        case SyntheticLoadKind::constant: v[t] = p.mean_kwh; break;
        case SyntheticLoadKind::sinusoid:
            v[t] = std::max(0.0, p.mean_kwh + p.amplitude_kwh * std::sin(two_pi * h / p.period_hours));
            break;
        case SyntheticLoadKind::two_peak:
            v[t] = std::max(0.0, p.mean_kwh * day_shape(std::fmod(h, 24.0)) / shape_mean * (1.0 + noise(rng)));
            break;
        }
    }
    return HourlySeries::regular(p.start, std::move(v));
}

struct SyntheticPriceParams {
    double mean_eur_per_kwh = 0.12;
    double daily_swing_fraction = 0.35;  // intra-day peak/trough amplitude relative to the day level
    double day_level_sigma = 0.45;       // log-normal sd of day-to-day level
    double noise_fraction = 0.08;
    std::size_t hours = kHoursPerYear;
    TimePoint start = utc(2022, 1, 1);
};

/// Raw day-ahead prices (before the tax transform) in EUR/kWh.
inline HourlySeries generate_synthetic_prices(const SyntheticPriceParams& p, unsigned long long seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> z(0.0, 1.0);
    std::vector<double> v(p.hours);
    const double two_pi = 2.0 * std::numbers::pi;
    double level = 0.0;
    for (std::size_t t = 0; t < p.hours; ++t) {
        if (t % 24 == 0) {
            // AR(1) day level so volatile weeks cluster.
            level = 0.6 * level + std::sqrt(1.0 - 0.36) * z(rng);
        }
        const double hod = static_cast<double>(t % 24);
        const double shape = 1.0 + p.daily_swing_fraction *
                                       (0.6 * std::sin(two_pi * (hod - 13.0) / 24.0) +
                                        0.4 * std::sin(two_pi * (hod - 4.5) / 12.0));
        const double day = std::exp(p.day_level_sigma * level - 0.5 * p.day_level_sigma * p.day_level_sigma);
        v[t] = std::max(0.0, p.mean_eur_per_kwh * day * shape * (1.0 + p.noise_fraction * z(rng)));
    }
    return HourlySeries::regular(p.start, std::move(v));
}

inline double coefficient_of_variation(const std::vector<double>& v) {
    if (v.empty()) return 0.0;
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    double var = 0.0;
    for (double x : v) var += (x - mean) * (x - mean);
    var /= static_cast<double>(v.size());
    return mean != 0.0 ? std::sqrt(var) / std::abs(mean) : 0.0;
}

inline void write_series_csv(const std::filesystem::path& path, const HourlySeries& s, const std::string& value_header) {
    std::ofstream out(path);
    if (!out) throw ValidationError("cannot write " + path.string());
    out << "timestamp," << value_header << '\n' << std::setprecision(17);
    for (std::size_t i = 0; i < s.size(); ++i) out << format_timestamp(s.time[i]) << ',' << s.value[i] << '\n';
}

inline void write_price_csv(const std::filesystem::path& path, const HourlySeries& s) {
    write_series_csv(path, s, "price_eur_per_kwh");
}
inline void write_load_csv(const std::filesystem::path& path, const HourlySeries& s) {
    write_series_csv(path, s, "load_kwh");
}

} // namespace v2hg
