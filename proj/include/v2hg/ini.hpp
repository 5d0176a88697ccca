#pragma once

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "v2hg/errors.hpp"

namespace v2hg {

// Unit suffixes accepted on numeric keys. A numeric key without one of these
// endings is rejected so every number in a file states its unit.
inline constexpr std::array<std::string_view, 24> kUnitSuffixes = {
    "_kwh",         "_v",          "_km",          "_a",         "_ah",
    "_k",           "_h",          "_days",        "_years",     "_per_year",
    "_per_h",       "_fraction",   "_ratio",       "_count",     "_seed",
    "_eur",         "_eur_per_kwh", "_eur_per_mwh", "_eur_per_pp", "_j_per_mol",
    "_pct_per_sqrt_h", "_pct_per_sqrt_ah", "_pct_per_ah", "_c_per_mol"};

inline bool has_unit_suffix(std::string_view key) {
    return std::any_of(kUnitSuffixes.begin(), kUnitSuffixes.end(), [&](std::string_view s) {
        return key.size() > s.size() && key.substr(key.size() - s.size()) == s;
    });
}

inline std::optional<double> parse_double(std::string_view text) {
    while (!text.empty() && std::isspace(static_cast<unsigned char>(text.front()))) text.remove_prefix(1);
    while (!text.empty() && std::isspace(static_cast<unsigned char>(text.back()))) text.remove_suffix(1);
    if (text.empty()) return std::nullopt;
    if (text.front() == '+') text.remove_prefix(1);
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc() || ptr != text.data() + text.size()) return std::nullopt;
    return v;
}

inline std::vector<std::string> split_list(std::string_view text, char sep = ',') {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : text) {
        if (ch == sep) {
            out.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(ch);
        }
    }
    out.push_back(cur);
    for (auto& s : out) {
        auto b = s.find_first_not_of(" \t");
        auto e = s.find_last_not_of(" \t");
        s = (b == std::string::npos) ? std::string() : s.substr(b, e - b + 1);
    }
    return out;
}

inline std::optional<std::vector<double>> parse_double_list(std::string_view text) {
    std::vector<double> out;
    for (const auto& item : split_list(text)) {
        auto v = parse_double(item);
        if (!v) return std::nullopt;
        out.push_back(*v);
    }
    return out;
}

/// Allowed sections and keys of a structured-text file.
using IniSchema = std::map<std::string, std::set<std::string>>;

/// Sectioned key/value document with strict schema and unit checks.
class IniDocument {
public:
    static IniDocument parse(const std::string& text, std::string source = "<string>") {
        std::istringstream in(text);
        IniDocument doc;
        doc.source_ = std::move(source);
        try {
            boost::property_tree::read_ini(in, doc.tree_);
        } catch (const boost::property_tree::ini_parser_error& e) {
            throw ConfigError(doc.source_ + ": " + e.message() + " (line " + std::to_string(e.line()) + ")");
        }
        return doc;
    }

    static IniDocument load(const std::filesystem::path& path) {
        std::ifstream in(path);
        if (!in) throw ConfigError("cannot open " + path.string());
        std::stringstream buf;
        buf << in.rdbuf();
        return parse(buf.str(), path.string());
    }

    const std::string& source() const { return source_; }

    /// Rejects unknown sections/keys and numeric keys without a unit suffix.
    void validate(const IniSchema& schema) const {
        for (const auto& [section, body] : tree_) {
            auto sit = schema.find(section);
            if (sit == schema.end())
                throw ConfigError(source_ + ": unknown section [" + section + "]");
            for (const auto& [key, node] : body) {
                if (!sit->second.count(key)) {
                    if (parse_double_list(node.data()) && !has_unit_suffix(key))
                        throw ConfigError(source_ + ": key '" + section + "." + key +
                                          "' is missing a unit suffix");
                    throw ConfigError(source_ + ": unknown key '" + section + "." + key + "'");
                }
                if (parse_double_list(node.data()) && !has_unit_suffix(key))
                    throw ConfigError(source_ + ": key '" + section + "." + key +
                                      "' is missing a unit suffix");
            }
        }
    }

    bool has(const std::string& section, const std::string& key) const {
        return raw(section, key).has_value();
    }

    std::string text(const std::string& section, const std::string& key) const {
        auto v = raw(section, key);
        if (!v) throw ConfigError(source_ + ": missing key '" + section + "." + key + "'");
        return *v;
    }

    std::string text_or(const std::string& section, const std::string& key, std::string fallback) const {
        auto v = raw(section, key);
        return v ? *v : fallback;
    }

    double number(const std::string& section, const std::string& key) const {
        auto t = text(section, key);
        auto v = parse_double(t);
        if (!v) throw ConfigError(source_ + ": '" + section + "." + key + "' is not a number: " + t);
        return *v;
    }

    double number_or(const std::string& section, const std::string& key, double fallback) const {
        return has(section, key) ? number(section, key) : fallback;
    }

    std::vector<double> numbers(const std::string& section, const std::string& key) const {
        auto t = text(section, key);
        auto v = parse_double_list(t);
        if (!v) throw ConfigError(source_ + ": '" + section + "." + key + "' is not a number list");
        return *v;
    }

private:
    std::optional<std::string> raw(const std::string& section, const std::string& key) const {
        auto sec = tree_.find(section);
        if (sec == tree_.not_found()) return std::nullopt;
        auto it = sec->second.find(key);
        if (it == sec->second.not_found()) return std::nullopt;
        return it->second.data();
    }

    boost::property_tree::ptree tree_;
    std::string source_;
};

} // namespace v2hg
