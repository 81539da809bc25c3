#pragma once

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "sublinear/lab/config.hpp"

namespace sublinear::lab {

/// Empty cells stand for "not available" (failed rows, missing branches).
using Cell = std::variant<std::monostate, double, long long, bool, std::string>;

inline std::string format_real(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline std::string format_cell(const Cell& c) {
    struct {
        std::string operator()(std::monostate) const { return ""; }
        std::string operator()(double v) const { return format_real(v); }
        std::string operator()(long long v) const { return std::to_string(v); }
        std::string operator()(bool v) const { return v ? "true" : "false"; }
        std::string operator()(const std::string& v) const { return v; }
    } visit;
    return std::visit(visit, c);
}

/// RFC 4180 field quoting.
inline std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

struct Table {
    std::vector<std::string> columns;
    std::vector<std::vector<Cell>> rows;

    void add(std::vector<Cell> row) {
        if (row.size() != columns.size()) throw Error(ErrorKind::InvalidArgument, "row width does not match header");
        rows.push_back(std::move(row));
    }

    std::size_t column(const std::string& name) const {
        for (std::size_t i = 0; i < columns.size(); ++i) {
            if (columns[i] == name) return i;
        }
        throw Error(ErrorKind::InvalidArgument, "no column '" + name + "'");
    }

    std::string csv() const {
        std::string out;
        auto line = [&](const std::vector<std::string>& fields) {
            for (std::size_t i = 0; i < fields.size(); ++i) {
                if (i) out += ',';
                out += csv_field(fields[i]);
            }
            out += "\r\n";
        };
        line(columns);
        for (const auto& r : rows) {
            std::vector<std::string> f;
            for (const auto& c : r) f.push_back(format_cell(c));
            line(f);
        }
        return out;
    }
};

/// Plot description for the generated gnuplot script.
struct PlotSpec {
    std::string x;
    std::vector<std::string> y;
    bool logx = false;
    bool logy = false;
    std::string title;
};

inline std::string gnuplot_script(const std::string& experiment, const Table& t, const PlotSpec& plot) {
    std::string s;
    s += "# gnuplot -persist " + experiment + ".gp\n";
    s += "set datafile separator ','\n";
    s += "set key autotitle columnhead\n";
    s += "set title '" + (plot.title.empty() ? experiment : plot.title) + "'\n";
    s += "set xlabel '" + plot.x + "'\n";
    if (plot.logx) s += "set logscale x\n";
    if (plot.logy) s += "set logscale y\n";
    s += "set grid\n";
    const std::size_t xc = t.column(plot.x) + 1;
    s += "plot ";
    for (std::size_t k = 0; k < plot.y.size(); ++k) {
        if (k) s += ", \\\n     ";
        s += "'" + experiment + ".csv' using " + std::to_string(xc) + ":" + std::to_string(t.column(plot.y[k]) + 1) +
             " with linespoints";
    }
    s += "\n";
    return s;
}

inline nlohmann::json config_echo(const Config& cfg) {
    nlohmann::json j = nlohmann::json::object();
    for (const auto& e : cfg.entries()) {
        const std::string section = e.section.empty() ? "_" : e.section;
        j[section][e.key] = e.value;
    }
    return j;
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorKind::InvalidArgument, "cannot write '" + path.string() + "'");
    out << text;
    if (!out) throw Error(ErrorKind::InvalidArgument, "write failed for '" + path.string() + "'");
}

}  // namespace sublinear::lab
