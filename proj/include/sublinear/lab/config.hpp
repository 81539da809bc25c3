#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "sublinear/coeffs.hpp"
#include "sublinear/error.hpp"
#include "sublinear/grid.hpp"

namespace sublinear::lab {

inline Error config_error(const std::string& what) { return Error(ErrorKind::ConfigError, what); }

inline std::string trim(std::string_view s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return std::string(s.substr(b, e - b));
}

/// Arithmetic on reals: + - * / with parentheses, unary sign, and the constant pi.
class Expression {
public:
    static double evaluate(const std::string& text) {
        Expression e(text);
        double v = e.sum();
        e.skip_space();
        if (e.pos_ != e.text_.size()) e.fail("unexpected '" + e.text_.substr(e.pos_) + "'");
        if (!std::isfinite(v)) e.fail("value is not finite");
        return v;
    }

private:
    explicit Expression(std::string text) : text_(std::move(text)) {}

    [[noreturn]] void fail(const std::string& why) const {
        throw config_error("bad number '" + text_ + "': " + why);
    }

    void skip_space() {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    }

    bool take(char c) {
        skip_space();
        if (pos_ < text_.size() && text_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    double sum() {
        double v = product();
        for (;;) {
            if (take('+')) v += product();
            else if (take('-')) v -= product();
            else return v;
        }
    }

    double product() {
        double v = unary();
        for (;;) {
            if (take('*')) v *= unary();
            else if (take('/')) v /= unary();
            else return v;
        }
    }

    double unary() {
        if (take('-')) return -unary();
        if (take('+')) return unary();
        return atom();
    }

    double atom() {
        skip_space();
        if (take('(')) {
            double v = sum();
            if (!take(')')) fail("missing ')'");
            return v;
        }
        if (text_.compare(pos_, 2, "pi") == 0) {
            pos_ += 2;
            return kPi;
        }
        const char* begin = text_.c_str() + pos_;
        char* end = nullptr;
        double v = std::strtod(begin, &end);
        if (end == begin) fail("expected a number");
        pos_ += static_cast<std::size_t>(end - begin);
        return v;
    }

    std::string text_;
    std::size_t pos_ = 0;
};

/// "name(arg, arg, ...)" or a bare "name".
struct CallSpec {
    std::string name;
    std::vector<std::string> args;
};

inline CallSpec parse_call(const std::string& text) {
    std::string t = trim(text);
    auto open = t.find('(');
    if (open == std::string::npos) return {t, {}};
    if (t.back() != ')') throw config_error("missing ')' in '" + t + "'");
    CallSpec c{trim(t.substr(0, open)), {}};
    std::string inner = t.substr(open + 1, t.size() - open - 2);
    int depth = 0;
    std::string cur;
    for (char ch : inner) {
        if (ch == '(') ++depth;
        if (ch == ')') --depth;
        if (ch == ',' && depth == 0) {
            c.args.push_back(trim(cur));
            cur.clear();
        } else {
            cur += ch;
        }
    }
    if (!trim(cur).empty() || !c.args.empty()) c.args.push_back(trim(cur));
    return c;
}

/// Weight from "pex(q)", "table(path)" or a catalog entry such as "sine(3, 1/pi)".
inline Weight parse_weight(const std::string& text) {
    CallSpec c = parse_call(text);
    auto nums = [&] {
        std::vector<double> v;
        for (const auto& a : c.args) v.push_back(Expression::evaluate(a));
        return v;
    };
    try {
        if (c.name == "pex") {
            auto v = nums();
            if (v.size() != 1) throw config_error("pex takes one argument");
            return Weight::pex(v[0]);
        }
        if (c.name == "table") {
            if (c.args.size() != 1) throw config_error("table takes one path");
            return load_tabulated_weight(c.args[0]);
        }
        return Weight::closed_form(c.name, nums());
    } catch (const Error& e) {
        if (e.kind() == ErrorKind::ConfigError) throw;
        throw config_error(std::string("weight '") + trim(text) + "': " + e.what());
    }
}

/// Nonlinearity from "power(q)" or "concave_convex(lambda, q, p)".
inline Nonlinearity parse_nonlinearity(const std::string& text) {
    CallSpec c = parse_call(text);
    std::vector<double> v;
    for (const auto& a : c.args) v.push_back(Expression::evaluate(a));
    try {
        if (c.name == "power" && v.size() == 1) return Nonlinearity::power(v[0]);
        if (c.name == "concave_convex" && v.size() == 3) return Nonlinearity::concave_convex(v[0], v[1], v[2]);
    } catch (const Error& e) {
        throw config_error(std::string("nonlinearity '") + trim(text) + "': " + e.what());
    }
    throw config_error("nonlinearity must be power(q) or concave_convex(lambda, q, p), got '" + trim(text) + "'");
}

struct ConfigEntry {
    std::string section;
    std::string key;
    std::string value;
    int line = 0;
};

/// Flat "key = value" file with "[section]" headers. Lines starting with
/// '#' or ';' are comments. Every key must be read by the experiment that
/// consumes the file; `finish` reports the ones that were not.
class Config {
public:
    Config() = default;

    static Config parse(std::istream& in, const std::string& origin = "config") {
        Config cfg;
        std::string raw, section;
        int lineno = 0;
        while (std::getline(in, raw)) {
            ++lineno;
            std::string line = trim(raw);
            if (line.empty() || line[0] == '#' || line[0] == ';') continue;
            auto where = origin + ":" + std::to_string(lineno) + ": ";
            if (line.front() == '[') {
                if (line.back() != ']') throw config_error(where + "unterminated section header");
                section = trim(line.substr(1, line.size() - 2));
                if (section.empty()) throw config_error(where + "empty section name");
                continue;
            }
            auto eq = line.find('=');
            if (eq == std::string::npos) throw config_error(where + "expected key = value");
            std::string key = trim(line.substr(0, eq));
            if (key.empty()) throw config_error(where + "empty key");
            if (cfg.find(section, key)) throw config_error(where + "duplicate key '" + qualified(section, key) + "'");
            cfg.entries_.push_back({section, key, trim(line.substr(eq + 1)), lineno});
        }
        return cfg;
    }

    static Config load(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw config_error("cannot open config '" + path + "'");
        return parse(in, path);
    }

    static Config from_string(const std::string& text) {
        std::istringstream in(text);
        return parse(in);
    }

    const std::vector<ConfigEntry>& entries() const { return entries_; }

    /// Sets or replaces a value (command-line overrides).
    void set(const std::string& section, const std::string& key, const std::string& value) {
        for (auto& e : entries_) {
            if (e.section == section && e.key == key) {
                e.value = value;
                return;
            }
        }
        entries_.push_back({section, key, value, 0});
    }

    bool has(const std::string& section, const std::string& key) const { return find(section, key) != nullptr; }

    std::optional<std::string> raw(const std::string& section, const std::string& key) const {
        used_.insert(qualified(section, key));
        if (const auto* e = find(section, key)) return e->value;
        return std::nullopt;
    }

    std::string text(const std::string& section, const std::string& key, const std::string& fallback) const {
        return raw(section, key).value_or(fallback);
    }

    double real(const std::string& section, const std::string& key, double fallback) const {
        auto v = raw(section, key);
        return v ? Expression::evaluate(*v) : fallback;
    }

    long long integer(const std::string& section, const std::string& key, long long fallback) const {
        auto v = raw(section, key);
        if (!v) return fallback;
        std::size_t used = 0;
        long long out = 0;
        try {
            out = std::stoll(*v, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used == 0 || used != v->size()) throw config_error(qualified(section, key) + ": expected an integer");
        return out;
    }

    bool boolean(const std::string& section, const std::string& key, bool fallback) const {
        auto v = raw(section, key);
        if (!v) return fallback;
        if (*v == "true" || *v == "yes" || *v == "1") return true;
        if (*v == "false" || *v == "no" || *v == "0") return false;
        throw config_error(qualified(section, key) + ": expected true or false");
    }

    std::string choice(const std::string& section, const std::string& key, const std::string& fallback,
                       const std::vector<std::string>& allowed) const {
        std::string v = text(section, key, fallback);
        if (std::find(allowed.begin(), allowed.end(), v) == allowed.end()) {
            std::string list;
            for (const auto& a : allowed) list += (list.empty() ? "" : ", ") + a;
            throw config_error(qualified(section, key) + ": '" + v + "' is not one of " + list);
        }
        return v;
    }

    /// "a, b, c" or an inclusive range "start:step:stop"; must be strictly monotone.
    std::vector<double> grid(const std::string& section, const std::string& key,
                             const std::vector<double>& fallback) const {
        auto v = raw(section, key);
        std::vector<double> out = v ? parse_grid(*v, qualified(section, key)) : fallback;
        if (out.empty()) throw config_error(qualified(section, key) + ": grid is empty");
        bool up = true, down = true;
        for (std::size_t i = 1; i < out.size(); ++i) {
            up = up && out[i] > out[i - 1];
            down = down && out[i] < out[i - 1];
        }
        if (!up && !down) throw config_error(qualified(section, key) + ": grid must be strictly sorted");
        return out;
    }

    /// Items separated by ';'.
    std::vector<std::string> list(const std::string& section, const std::string& key,
                                  const std::vector<std::string>& fallback) const {
        auto v = raw(section, key);
        if (!v) return fallback;
        std::vector<std::string> out;
        std::string item;
        std::istringstream in(*v);
        while (std::getline(in, item, ';')) {
            if (!trim(item).empty()) out.push_back(trim(item));
        }
        if (out.empty()) throw config_error(qualified(section, key) + ": list is empty");
        return out;
    }

    /// Throws for every entry no getter asked for.
    void finish() const {
        std::string unknown;
        for (const auto& e : entries_) {
            if (!used_.count(qualified(e.section, e.key))) {
                unknown += (unknown.empty() ? "" : ", ") + qualified(e.section, e.key);
                if (e.line > 0) unknown += " (line " + std::to_string(e.line) + ")";
            }
        }
        if (!unknown.empty()) throw config_error("unknown key(s): " + unknown);
    }

    static std::string qualified(const std::string& section, const std::string& key) {
        return section.empty() ? key : section + "." + key;
    }

private:
    static std::vector<double> parse_grid(const std::string& text, const std::string& name) {
        if (text.find(':') != std::string::npos) {
            std::vector<std::string> parts;
            std::string item;
            std::istringstream in(text);
            while (std::getline(in, item, ':')) parts.push_back(item);
            if (parts.size() != 3) throw config_error(name + ": range must be start:step:stop");
            double a = Expression::evaluate(parts[0]), s = Expression::evaluate(parts[1]),
                   b = Expression::evaluate(parts[2]);
            if (s == 0.0 || (b - a) / s < 0.0) throw config_error(name + ": step does not reach stop");
            long long count = std::llround(std::floor((b - a) / s + 1e-9)) + 1;
            if (count > 100000) throw config_error(name + ": range too long");
            std::vector<double> out;
            for (long long i = 0; i < count; ++i) {
                // round to 12 digits so 0.5 + 9*0.05 prints as 0.95
                double v = a + static_cast<double>(i) * s;
                out.push_back(std::stod(to_digits(v)));
            }
            return out;
        }
        std::vector<double> out;
        std::string item;
        std::istringstream in(text);
        while (std::getline(in, item, ',')) out.push_back(Expression::evaluate(item));
        return out;
    }

    static std::string to_digits(double v) {
        std::ostringstream os;
        os.precision(12);
        os << v;
        return os.str();
    }

    const ConfigEntry* find(const std::string& section, const std::string& key) const {
        for (const auto& e : entries_) {
            if (e.section == section && e.key == key) return &e;
        }
        return nullptr;
    }

    std::vector<ConfigEntry> entries_;
    mutable std::set<std::string> used_;
};

}  // namespace sublinear::lab
