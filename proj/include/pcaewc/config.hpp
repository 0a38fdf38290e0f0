#pragma once

#include "pcaewc/types.hpp"

#include <cctype>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

namespace pcaewc {

// Minimal TOML subset: [tables], key = value with strings, integers, floats,
// booleans and flat arrays, plus # comments. Enough for run configuration
// files; parse errors name the offending key and value.

namespace toml {

using Value = std::variant<std::string, std::int64_t, double, bool,
                           std::vector<std::string>, std::vector<double>>;

struct Document {
    std::map<std::string, std::map<std::string, Value>> tables;

    bool has(const std::string& table, const std::string& key) const {
        const auto t = tables.find(table);
        return t != tables.end() && t->second.count(key) > 0;
    }

    const Value& at(const std::string& table, const std::string& key) const {
        const auto t = tables.find(table);
        if (t == tables.end() || !t->second.count(key))
            throw ConfigError("missing config key '" + qualified(table, key) + "'");
        return t->second.at(key);
    }

    static std::string qualified(const std::string& table, const std::string& key) {
        return table.empty() ? key : table + "." + key;
    }

    std::string get_string(const std::string& table, const std::string& key,
                           const std::string& fallback) const {
        if (!has(table, key)) return fallback;
        return require_string(table, key);
    }

    std::string require_string(const std::string& table, const std::string& key) const {
        const Value& v = at(table, key);
        if (const auto* s = std::get_if<std::string>(&v)) return *s;
        throw ConfigError("key '" + qualified(table, key) + "': expected a string");
    }

    double get_double(const std::string& table, const std::string& key, double fallback) const {
        if (!has(table, key)) return fallback;
        const Value& v = at(table, key);
        if (const auto* d = std::get_if<double>(&v)) return *d;
        if (const auto* i = std::get_if<std::int64_t>(&v)) return static_cast<double>(*i);
        throw ConfigError("key '" + qualified(table, key) + "': expected a number");
    }

    std::int64_t get_int(const std::string& table, const std::string& key,
                         std::int64_t fallback) const {
        if (!has(table, key)) return fallback;
        const Value& v = at(table, key);
        if (const auto* i = std::get_if<std::int64_t>(&v)) return *i;
        throw ConfigError("key '" + qualified(table, key) + "': expected an integer");
    }

    bool get_bool(const std::string& table, const std::string& key, bool fallback) const {
        if (!has(table, key)) return fallback;
        const Value& v = at(table, key);
        if (const auto* b = std::get_if<bool>(&v)) return *b;
        throw ConfigError("key '" + qualified(table, key) + "': expected a boolean");
    }

    std::vector<std::int64_t> get_int_array(const std::string& table, const std::string& key,
                                            std::vector<std::int64_t> fallback) const {
        if (!has(table, key)) return fallback;
        const Value& v = at(table, key);
        if (const auto* a = std::get_if<std::vector<double>>(&v)) {
            std::vector<std::int64_t> out;
            for (double d : *a) {
                const auto i = static_cast<std::int64_t>(d);
                if (static_cast<double>(i) != d)
                    throw ConfigError("key '" + qualified(table, key) +
                                      "': expected integers in array");
                out.push_back(i);
            }
            return out;
        }
        throw ConfigError("key '" + qualified(table, key) + "': expected an array of integers");
    }

    std::vector<std::string> get_string_array(const std::string& table, const std::string& key,
                                              std::vector<std::string> fallback) const {
        if (!has(table, key)) return fallback;
        const Value& v = at(table, key);
        if (const auto* a = std::get_if<std::vector<std::string>>(&v)) return *a;
        throw ConfigError("key '" + qualified(table, key) + "': expected an array of strings");
    }
};

namespace detail {

inline std::string trim(const std::string& s) {
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

inline std::string strip_comment(const std::string& line) {
    bool in_string = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        if (line[i] == '"') in_string = !in_string;
        if (line[i] == '#' && !in_string) return line.substr(0, i);
    }
    return line;
}

inline Value parse_scalar(const std::string& raw, const std::string& where) {
    const std::string s = trim(raw);
    if (s.empty()) throw ConfigError("key '" + where + "': empty value");
    if (s.front() == '"') {
        if (s.size() < 2 || s.back() != '"')
            throw ConfigError("key '" + where + "': unterminated string " + s);
        return s.substr(1, s.size() - 2);
    }
    if (s == "true") return true;
    if (s == "false") return false;
    char* end = nullptr;
    if (s.find_first_of(".eE") == std::string::npos) {
        const long long i = std::strtoll(s.c_str(), &end, 10);
        if (end && *end == '\0') return static_cast<std::int64_t>(i);
    }
    const double d = std::strtod(s.c_str(), &end);
    if (end && *end == '\0') return d;
    throw ConfigError("key '" + where + "': cannot parse value '" + s + "'");
}

inline Value parse_value(const std::string& raw, const std::string& where) {
    const std::string s = trim(raw);
    if (s.empty()) throw ConfigError("key '" + where + "': empty value");
    if (s.front() != '[') return parse_scalar(s, where);
    if (s.back() != ']') throw ConfigError("key '" + where + "': unterminated array " + s);
    const std::string body = trim(s.substr(1, s.size() - 2));
    std::vector<std::string> items;
    std::string cur;
    bool in_string = false;
    for (char c : body) {
        if (c == '"') in_string = !in_string;
        if (c == ',' && !in_string) {
            items.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    if (!trim(cur).empty()) items.push_back(cur);
    std::vector<double> nums;
    std::vector<std::string> strs;
    bool all_nums = true, all_strs = true;
    for (const auto& item : items) {
        const Value v = parse_scalar(item, where);
        if (const auto* d = std::get_if<double>(&v)) {
            nums.push_back(*d);
            all_strs = false;
        } else if (const auto* i = std::get_if<std::int64_t>(&v)) {
            nums.push_back(static_cast<double>(*i));
            all_strs = false;
        } else if (const auto* str = std::get_if<std::string>(&v)) {
            strs.push_back(*str);
            all_nums = false;
        } else {
            throw ConfigError("key '" + where + "': unsupported array element '" + trim(item) + "'");
        }
    }
    if (all_nums) return nums;
    if (all_strs) return strs;
    throw ConfigError("key '" + where + "': mixed array types");
}

}  // namespace detail

inline Document parse(const std::string& text) {
    Document doc;
    std::string table;
    std::size_t line_no = 0;
    std::string line;
    std::istringstream in(text);
    while (std::getline(in, line)) {
        ++line_no;
        const std::string s = detail::trim(detail::strip_comment(line));
        if (s.empty()) continue;
        if (s.front() == '[') {
            if (s.back() != ']')
                throw ConfigError("line " + std::to_string(line_no) + ": malformed table header " + s);
            table = detail::trim(s.substr(1, s.size() - 2));
            doc.tables[table];
            continue;
        }
        const auto eq = s.find('=');
        if (eq == std::string::npos)
            throw ConfigError("line " + std::to_string(line_no) + ": expected key = value, got '" +
                              s + "'");
        const std::string key = detail::trim(s.substr(0, eq));
        if (key.empty()) throw ConfigError("line " + std::to_string(line_no) + ": empty key");
        doc.tables[table][key] =
            detail::parse_value(s.substr(eq + 1), Document::qualified(table, key));
    }
    return doc;
}

inline Document parse_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoFailure("cannot open config file: " + path.string());
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return parse(text);
}

}  // namespace toml

}  // namespace pcaewc
