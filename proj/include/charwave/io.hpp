#pragma once

// CSV and JSON persistence for grid fields, shell breakdowns, theorem
// reports and long-format plot tables. Floating-point text uses 17
// significant digits.

#include <concepts>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>
#include <openssl/evp.h>

#include "charwave/asymptotics.hpp"
#include "charwave/cone_lp.hpp"
#include "charwave/errors.hpp"
#include "charwave/propagator.hpp"

namespace charwave::io
{

inline std::string fmt(double v)
{
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

template <std::integral T>
std::string fmt(T v)
{
    return std::to_string(v);
}

inline std::string fmt(const std::string& s) { return s; }

/// A table of already formatted cells.
struct Table
{
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    template <class... T>
    void add(const T&... cells)
    {
        rows.push_back({fmt(cells)...});
    }

    std::size_t column(const std::string& name) const
    {
        for (std::size_t i = 0; i < header.size(); ++i)
            if (header[i] == name)
                return i;
        throw IoError("table has no column '" + name + "'");
    }

    double number(std::size_t row, const std::string& name) const
    {
        const std::string& cell = rows.at(row).at(column(name));
        char* end = nullptr;
        const double v = std::strtod(cell.c_str(), &end);
        if (cell.empty() || end != cell.c_str() + cell.size())
            throw IoError("not a number: '" + cell + "'");
        return v;
    }

    bool operator==(const Table&) const = default;
};

inline std::string to_csv(const Table& t)
{
    std::string out;
    auto line = [&](const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (cells[i].find_first_of(",\n\"") != std::string::npos)
                throw IoError("CSV cell contains a separator: " + cells[i]);
            out += (i ? "," : "") + cells[i];
        }
        out += '\n';
    };
    line(t.header);
    for (const auto& r : t.rows) {
        if (r.size() != t.header.size())
            throw IoError("CSV row width does not match the header");
        line(r);
    }
    return out;
}

inline Table parse_csv(const std::string& text)
{
    Table t;
    std::istringstream in(text);
    std::string line;
    auto split = [](const std::string& s) {
        std::vector<std::string> cells;
        std::string cell;
        std::istringstream ls(s);
        while (std::getline(ls, cell, ','))
            cells.push_back(cell);
        if (!s.empty() && s.back() == ',')
            cells.emplace_back();
        return cells;
    };
    if (!std::getline(in, line))
        throw IoError("CSV is empty");
    t.header = split(line);
    while (std::getline(in, line)) {
        if (line.empty())
            continue;
        auto cells = split(line);
        if (cells.size() != t.header.size())
            throw IoError("CSV row width does not match the header");
        t.rows.push_back(std::move(cells));
    }
    return t;
}

inline void write_text(const std::filesystem::path& path, const std::string& text)
{
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f)
        throw IoError("cannot open " + path.string() + " for writing");
    f << text;
    f.close();
    if (!f)
        throw IoError("write failed: " + path.string());
}

inline std::string read_text(const std::filesystem::path& path)
{
    std::ifstream f(path, std::ios::binary);
    if (!f)
        throw IoError("cannot open " + path.string());
    std::ostringstream s;
    s << f.rdbuf();
    return s.str();
}

inline void write_csv(const std::filesystem::path& path, const Table& t) { write_text(path, to_csv(t)); }
inline Table read_csv(const std::filesystem::path& path) { return parse_csv(read_text(path)); }

inline void write_json(const std::filesystem::path& path, const nlohmann::json& j) { write_text(path, j.dump(2) + "\n"); }

inline std::string sha256_hex(const std::string& text)
{
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(text.data(), text.size(), md, &len, EVP_sha256(), nullptr) != 1)
        throw Error("SHA-256 digest failed");
    static const char* hex = "0123456789abcdef";
    std::string out;
    for (unsigned int i = 0; i < len; ++i) {
        out += hex[md[i] >> 4];
        out += hex[md[i] & 15];
    }
    return out;
}

inline nlohmann::json to_json(cplx z) { return {{"re", z.real()}, {"im", z.imag()}}; }

/// Node coordinates and re/im of the field, one row per node.
inline Table grid_table(const GridField& f)
{
    Table t;
    const std::size_t rank = f.rank();
    t.header.push_back("s");
    for (int k = 1; k <= f.d; ++k)
        t.header.push_back("x" + std::to_string(k));
    for (int k = 1; k <= f.n; ++k)
        t.header.push_back("y" + std::to_string(k));
    t.header.push_back("re");
    t.header.push_back("im");
    for (std::size_t i = 0; i < f.size(); ++i) {
        std::vector<std::string> row;
        const auto c = f.coordinates(i);
        for (std::size_t a = 0; a < rank; ++a)
            row.push_back(fmt(c[a]));
        row.push_back(fmt(f.values[i].real()));
        row.push_back(fmt(f.values[i].imag()));
        t.rows.push_back(std::move(row));
    }
    return t;
}

inline nlohmann::json grid_metadata(const GridField& f)
{
    nlohmann::json axes = nlohmann::json::array();
    for (std::size_t a = 0; a < f.rank(); ++a)
        axes.push_back({{"nodes", f.grid.axis_nodes(a)}, {"box", f.grid.axis_box(a)}, {"spacing", f.grid.spacing(a)}});
    return {{"d", f.d}, {"n", f.n}, {"t", f.t}, {"axes", axes}, {"l2_norm", f.l2_norm}, {"points", f.size()}};
}

inline Table shell_table(const ShellDecayReport& r)
{
    Table t{{"j", "re", "im", "abs", "weighted_abs", "node_count", "est_error"}, {}};
    for (const auto& row : r.rows)
        t.add(row.j, row.value.real(), row.value.imag(), std::abs(row.value), row.weighted_abs, row.node_count, row.est_error);
    return t;
}

inline Table theorem_table(const TheoremReport& r)
{
    Table t{{"tau", "abs_u", "abs_leading", "err"}, {}};
    for (const auto& row : r.rows)
        t.add(row.tau, std::abs(row.du), std::abs(row.leading), row.err);
    return t;
}

inline nlohmann::json fit_json(const RateFitReport& f)
{
    return {{"slope", f.slope}, {"intercept", f.intercept}, {"residual", f.residual}, {"samples", f.samples.size()}};
}

inline nlohmann::json theorem_json(const TheoremReport& r)
{
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& row : r.rows)
        rows.push_back({{"tau", row.tau},
                        {"d_beta_u", to_json(row.du)},
                        {"leading", to_json(row.leading)},
                        {"err", row.err},
                        {"quad_error", row.quad_error}});
    return {{"F", to_json(r.F.value)},
            {"p", r.F.p},
            {"F_quad_error", r.F.quad_error},
            {"remainder_fit", fit_json(r.remainder)},
            {"leading_fit", fit_json(r.leading)},
            {"rows", rows}};
}

/// Long format: one row per (axis value, quantity, value) for every numeric
/// column other than the axis column.
inline Table long_format(const std::string& source, const Table& wide, const std::string& axis)
{
    Table out{{"source", "axis", "x", "quantity", "value"}, {}};
    const std::size_t ax = wide.column(axis);
    for (const auto& r : wide.rows)
        for (std::size_t c = 0; c < wide.header.size(); ++c)
            if (c != ax)
                out.rows.push_back({source, axis, r[ax], wide.header[c], r[c]});
    return out;
}

/// A named table with its axis column.
struct PlotSource
{
    std::string name;
    Table table;
    std::string axis;
};

/// Concatenation of the long formats; an empty list produces an empty table.
inline Table emit_plot_data(const std::vector<PlotSource>& sources)
{
    Table out{{"source", "axis", "x", "quantity", "value"}, {}};
    for (const auto& s : sources) {
        auto l = long_format(s.name, s.table, s.axis);
        out.rows.insert(out.rows.end(), l.rows.begin(), l.rows.end());
    }
    return out;
}

} // namespace charwave::io
