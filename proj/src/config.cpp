#include "evfusion/config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace evfusion {

namespace {

std::string trim(std::string_view s)
{
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) {
        return {};
    }
    const auto last = s.find_last_not_of(" \t\r");
    return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split_list(const std::string& value)
{
    std::vector<std::string> out;
    std::stringstream ss(value);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) {
            out.push_back(item);
        }
    }
    return out;
}

template <class T>
bool parse_number(const std::string& text, T& out)
{
    const char* end = text.data() + text.size();
    auto [ptr, ec] = std::from_chars(text.data(), end, out);
    return ec == std::errc() && ptr == end;
}

}  // namespace

KeyValueConfig KeyValueConfig::parse(std::istream& in, const std::string& source)
{
    KeyValueConfig cfg;
    cfg.source_ = source;
    std::string line;
    std::size_t number = 0;
    while (std::getline(in, line)) {
        ++number;
        if (const auto hash = line.find('#'); hash != std::string::npos) {
            line.erase(hash);
        }
        const std::string body = trim(line);
        if (body.empty()) {
            continue;
        }
        const auto eq = body.find('=');
        if (eq == std::string::npos) {
            throw ConfigError(source + ":" + std::to_string(number) + ": expected 'key = value'");
        }
        const std::string key = trim(std::string_view(body).substr(0, eq));
        const std::string value = trim(std::string_view(body).substr(eq + 1));
        if (key.empty()) {
            throw ConfigError(source + ":" + std::to_string(number) + ": empty key");
        }
        if (!cfg.entries_.emplace(key, Entry{value, number}).second) {
            throw ConfigError(source + ":" + std::to_string(number) + ": duplicate key '" + key + "'");
        }
    }
    return cfg;
}

KeyValueConfig KeyValueConfig::load(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot open config file " + path.string());
    }
    return parse(in, path.string());
}

bool KeyValueConfig::has(const std::string& key) const
{
    return entries_.contains(key);
}

const KeyValueConfig::Entry* KeyValueConfig::find(const std::string& key) const
{
    used_.insert(key);
    const auto it = entries_.find(key);
    return it == entries_.end() ? nullptr : &it->second;
}

void KeyValueConfig::fail(const std::string& key, const std::string& what) const
{
    const auto it = entries_.find(key);
    const std::string where = it == entries_.end() ? source_ : source_ + ":" + std::to_string(it->second.line);
    throw ConfigError(where + ": key '" + key + "': " + what);
}

std::string KeyValueConfig::get_string(const std::string& key, const std::string& fallback) const
{
    const Entry* e = find(key);
    return e ? e->value : fallback;
}

double KeyValueConfig::get_double(const std::string& key, double fallback) const
{
    const Entry* e = find(key);
    if (!e) {
        return fallback;
    }
    double v = 0.0;
    if (!parse_number(e->value, v)) {
        fail(key, "expected a number, got '" + e->value + "'");
    }
    return v;
}

std::size_t KeyValueConfig::get_size(const std::string& key, std::size_t fallback) const
{
    const Entry* e = find(key);
    if (!e) {
        return fallback;
    }
    std::size_t v = 0;
    if (!parse_number(e->value, v)) {
        fail(key, "expected a non-negative integer, got '" + e->value + "'");
    }
    return v;
}

std::uint64_t KeyValueConfig::get_u64(const std::string& key, std::uint64_t fallback) const
{
    const Entry* e = find(key);
    if (!e) {
        return fallback;
    }
    std::uint64_t v = 0;
    if (!parse_number(e->value, v)) {
        fail(key, "expected a non-negative integer, got '" + e->value + "'");
    }
    return v;
}

bool KeyValueConfig::get_bool(const std::string& key, bool fallback) const
{
    const Entry* e = find(key);
    if (!e) {
        return fallback;
    }
    if (e->value == "true" || e->value == "1" || e->value == "yes") {
        return true;
    }
    if (e->value == "false" || e->value == "0" || e->value == "no") {
        return false;
    }
    fail(key, "expected true/false, got '" + e->value + "'");
}

std::vector<std::string> KeyValueConfig::get_list(const std::string& key, const std::vector<std::string>& fallback) const
{
    const Entry* e = find(key);
    return e ? split_list(e->value) : fallback;
}

std::vector<double> KeyValueConfig::get_doubles(const std::string& key, const std::vector<double>& fallback) const
{
    const Entry* e = find(key);
    if (!e) {
        return fallback;
    }
    std::vector<double> out;
    for (const auto& item : split_list(e->value)) {
        double v = 0.0;
        if (!parse_number(item, v)) {
            fail(key, "expected a list of numbers, got '" + item + "'");
        }
        out.push_back(v);
    }
    return out;
}

std::vector<std::uint64_t> KeyValueConfig::get_u64s(const std::string& key, const std::vector<std::uint64_t>& fallback) const
{
    const Entry* e = find(key);
    if (!e) {
        return fallback;
    }
    std::vector<std::uint64_t> out;
    for (const auto& item : split_list(e->value)) {
        // "a..b" is an inclusive range.
        if (const auto dots = item.find(".."); dots != std::string::npos) {
            std::uint64_t lo = 0;
            std::uint64_t hi = 0;
            if (!parse_number(trim(item.substr(0, dots)), lo) || !parse_number(trim(item.substr(dots + 2)), hi) || hi < lo) {
                fail(key, "bad range '" + item + "'");
            }
            for (std::uint64_t v = lo; v <= hi; ++v) {
                out.push_back(v);
            }
            continue;
        }
        std::uint64_t v = 0;
        if (!parse_number(item, v)) {
            fail(key, "expected a list of non-negative integers, got '" + item + "'");
        }
        out.push_back(v);
    }
    return out;
}

void KeyValueConfig::reject_unknown_keys() const
{
    for (const auto& [key, entry] : entries_) {
        if (!used_.contains(key)) {
            throw ConfigError(source_ + ":" + std::to_string(entry.line) + ": unknown key '" + key + "'");
        }
    }
}

}  // namespace evfusion
