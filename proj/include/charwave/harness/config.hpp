#pragma once

// Experiment configuration: an INI text with a versioned schema key, typed
// values, load-time validation with line-precise messages, a canonical
// re-serialisation and its SHA-256 hash.
//
//   schema = charwave-config/1
//   [dims]        d, n
//   [profile]     family (bump | zero), lambda_min, lambda_max, width_a, mirror,
//                 amplitude, cut_inner, cut_outer
//   [line]        X, Y (space-separated vectors), theta, omega (angles)
//   [beta]        index (N + 2 nonnegative integers)
//   [tau]         start, ratio, count, or values (overrides the geometric grid)
//   [quadrature]  abs_tol, rel_tol, max_panels, angular_tol, max_angular_nodes
//   [partition]   j_min, j_max, tau
//   [grid]        nodes, box, s_nodes, s_box, times
//   [stationary]  lambdas, radius, ball
//   [cross_check] tau_min, tau_max, points
//   [output]      dir
//   [run]         seed, threads, deterministic
//
// Comments start with ';' on their own line.

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <functional>
#include <map>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "charwave/cone_lp.hpp"
#include "charwave/errors.hpp"
#include "charwave/geometry.hpp"
#include "charwave/io.hpp"
#include "charwave/propagator.hpp"
#include "charwave/spectral_data.hpp"

namespace charwave::harness
{

inline constexpr const char* kSchema = "charwave-config/1";

struct ExperimentConfig
{
    std::string schema = kSchema;
    int d = 1;
    int n = 1;

    std::string family = "bump";
    BumpParams bump;

    Vec X{0.3, 0.2};
    Vec Y{-0.3, 0.1};
    std::vector<double> theta{0.4};
    std::vector<double> omega{-0.3};

    std::vector<int> beta{0, 0, 0, 0};

    double tau_start = 5.0;
    double tau_ratio = 2.0;
    int tau_count = 5;
    std::vector<double> tau_values;

    double abs_tol = 1e-13;
    double rel_tol = 1e-13;
    std::int64_t max_panels = 400000;
    double angular_tol = 1e-10;
    std::int64_t max_angular_nodes = 2048;

    int j_min = -40;
    int j_max = 40;
    double lp_tau = 1.0;

    std::int64_t grid_nodes = 48;
    double grid_box = 48.0;
    std::int64_t grid_s_nodes = 0;
    double grid_s_box = 0.0;
    std::vector<double> grid_times{1.0, 5.0, 25.0};

    std::vector<double> sp_lambdas{50.0, 100.0, 200.0, 400.0, 800.0};
    double sp_radius = 0.7;
    double sp_ball = 0.35;

    double cc_tau_min = 0.5;
    double cc_tau_max = 2.0;
    int cc_points = 5;

    std::string output_dir = "charwave-out";

    std::uint64_t seed = 20240601;
    int threads = 1;
    bool deterministic = false;

    /// Line of each "section.key" in the source text, for error messages.
    std::map<std::string, int> lines;

    Dims dims() const { return Dims(d, n); }
    int line_of(const std::string& field) const
    {
        auto it = lines.find(field);
        return it == lines.end() ? 0 : it->second;
    }

    SpectralProfile profile() const
    {
        if (family == "zero")
            return make_zero_profile(dims());
        return make_bump_profile(dims(), bump);
    }
    DirectionPair direction() const
    {
        return DirectionPair(unit_from_angles(d, theta), unit_from_angles(n, omega));
    }
    CharacteristicLine line() const { return CharacteristicLine(X, Y, direction()); }
    MultiIndex multi_index() const { return MultiIndex(dims(), beta); }

    std::vector<double> tau_grid() const
    {
        if (!tau_values.empty())
            return tau_values;
        std::vector<double> out;
        double t = tau_start;
        for (int i = 0; i < tau_count; ++i, t *= tau_ratio)
            out.push_back(t);
        return out;
    }

    GridConfig grid() const
    {
        GridConfig g;
        g.nodes = static_cast<std::size_t>(grid_nodes);
        g.box = grid_box;
        g.s_nodes = static_cast<std::size_t>(grid_s_nodes);
        g.s_box = grid_s_box;
        return g;
    }

    DyadicPartition partition() const { return make_dyadic_window(j_min, j_max); }

    SpectralQuadOptions spectral_quad() const
    {
        SpectralQuadOptions q;
        q.abs_tol = abs_tol;
        q.inner_rel_tol = rel_tol;
        q.max_panels = static_cast<std::size_t>(max_panels);
        return q;
    }

    ConeQuadOptions cone_quad() const
    {
        ConeQuadOptions q;
        q.angular_tol = angular_tol;
        q.max_angular_nodes = static_cast<std::size_t>(max_angular_nodes);
        return q;
    }
};

namespace detail
{

inline std::string trim(const std::string& s)
{
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos)
        return {};
    const auto b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

template <class T>
T parse_number(const std::string& text, const std::string& field, int line)
{
    T v{};
    const std::string s = trim(text);
    const char* end = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(s.data(), end, v);
    if (ec != std::errc() || ptr != end || s.empty())
        throw ConfigError(field + ": cannot parse '" + s + "' as a number", line);
    if constexpr (std::is_floating_point_v<T>)
        if (!std::isfinite(v))
            throw ConfigError(field + ": value must be finite", line);
    return v;
}

template <class T>
std::vector<T> parse_list(const std::string& text, const std::string& field, int line)
{
    std::vector<T> out;
    std::istringstream in(text);
    std::string tok;
    while (in >> tok)
        out.push_back(parse_number<T>(tok, field, line));
    return out;
}

inline bool parse_bool(const std::string& text, const std::string& field, int line)
{
    const std::string s = trim(text);
    if (s == "true")
        return true;
    if (s == "false")
        return false;
    throw ConfigError(field + ": expected true or false, got '" + s + "'", line);
}

template <class T>
std::string join(const std::vector<T>& v)
{
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i)
        out += (i ? " " : "") + io::fmt(v[i]);
    return out;
}

struct Field
{
    std::string section; // empty for the root
    std::string key;
    std::function<void(ExperimentConfig&, const std::string&, const std::string&, int)> read;
    std::function<std::string(const ExperimentConfig&)> write;

    std::string name() const { return section.empty() ? key : section + "." + key; }
};

template <class T>
Field number(std::string sec, std::string key, T ExperimentConfig::* m)
{
    return {std::move(sec), std::move(key),
            [m](ExperimentConfig& c, const std::string& v, const std::string& f, int l) { c.*m = parse_number<T>(v, f, l); },
            [m](const ExperimentConfig& c) { return io::fmt(c.*m); }};
}

template <class T>
Field bump_number(std::string key, T BumpParams::* m)
{
    return {"profile", std::move(key),
            [m](ExperimentConfig& c, const std::string& v, const std::string& f, int l) { c.bump.*m = parse_number<T>(v, f, l); },
            [m](const ExperimentConfig& c) { return io::fmt(c.bump.*m); }};
}

template <class T>
Field list(std::string sec, std::string key, std::vector<T> ExperimentConfig::* m)
{
    return {std::move(sec), std::move(key),
            [m](ExperimentConfig& c, const std::string& v, const std::string& f, int l) { c.*m = parse_list<T>(v, f, l); },
            [m](const ExperimentConfig& c) { return join(c.*m); }};
}

inline Field text(std::string sec, std::string key, std::string ExperimentConfig::* m)
{
    return {std::move(sec), std::move(key), [m](ExperimentConfig& c, const std::string& v, const std::string&, int) { c.*m = trim(v); },
            [m](const ExperimentConfig& c) { return c.*m; }};
}

inline const std::vector<Field>& fields()
{
    using C = ExperimentConfig;
    static const std::vector<Field> f = {
        text("", "schema", &C::schema),
        number("dims", "d", &C::d),
        number("dims", "n", &C::n),
        text("profile", "family", &C::family),
        bump_number("lambda_min", &BumpParams::lambda_min),
        bump_number("lambda_max", &BumpParams::lambda_max),
        bump_number("width_a", &BumpParams::width_a),
        {"profile", "mirror",
         [](C& c, const std::string& v, const std::string& f, int l) { c.bump.mirror = parse_bool(v, f, l); },
         [](const C& c) { return std::string(c.bump.mirror ? "true" : "false"); }},
        bump_number("amplitude", &BumpParams::amplitude),
        bump_number("cut_inner", &BumpParams::cut_inner),
        bump_number("cut_outer", &BumpParams::cut_outer),
        list("line", "X", &C::X),
        list("line", "Y", &C::Y),
        list("line", "theta", &C::theta),
        list("line", "omega", &C::omega),
        list("beta", "index", &C::beta),
        number("tau", "start", &C::tau_start),
        number("tau", "ratio", &C::tau_ratio),
        number("tau", "count", &C::tau_count),
        list("tau", "values", &C::tau_values),
        number("quadrature", "abs_tol", &C::abs_tol),
        number("quadrature", "rel_tol", &C::rel_tol),
        number("quadrature", "max_panels", &C::max_panels),
        number("quadrature", "angular_tol", &C::angular_tol),
        number("quadrature", "max_angular_nodes", &C::max_angular_nodes),
        number("partition", "j_min", &C::j_min),
        number("partition", "j_max", &C::j_max),
        number("partition", "tau", &C::lp_tau),
        number("grid", "nodes", &C::grid_nodes),
        number("grid", "box", &C::grid_box),
        number("grid", "s_nodes", &C::grid_s_nodes),
        number("grid", "s_box", &C::grid_s_box),
        list("grid", "times", &C::grid_times),
        list("stationary", "lambdas", &C::sp_lambdas),
        number("stationary", "radius", &C::sp_radius),
        number("stationary", "ball", &C::sp_ball),
        number("cross_check", "tau_min", &C::cc_tau_min),
        number("cross_check", "tau_max", &C::cc_tau_max),
        number("cross_check", "points", &C::cc_points),
        text("output", "dir", &C::output_dir),
        number("run", "seed", &C::seed),
        number("run", "threads", &C::threads),
        {"run", "deterministic",
         [](C& c, const std::string& v, const std::string& f, int l) { c.deterministic = parse_bool(v, f, l); },
         [](const C& c) { return std::string(c.deterministic ? "true" : "false"); }},
    };
    return f;
}

/// "section.key" -> 1-based line number.
inline std::map<std::string, int> index_lines(const std::string& text)
{
    std::map<std::string, int> out;
    std::istringstream in(text);
    std::string raw, section;
    int no = 0;
    while (std::getline(in, raw)) {
        ++no;
        const std::string s = trim(raw);
        if (s.empty() || s[0] == ';')
            continue;
        if (s.front() == '[' && s.back() == ']') {
            section = trim(s.substr(1, s.size() - 2));
            out.emplace(section, no);
            continue;
        }
        const auto eq = s.find('=');
        if (eq == std::string::npos)
            continue;
        const std::string key = trim(s.substr(0, eq));
        out.emplace(section.empty() ? key : section + "." + key, no);
    }
    return out;
}

inline bool increasing_positive(const std::vector<double>& v)
{
    for (std::size_t i = 0; i < v.size(); ++i)
        if (!(v[i] > 0.0) || (i > 0 && !(v[i] > v[i - 1])))
            return false;
    return true;
}

} // namespace detail

/// Checks every module precondition the configured commands rely on.
inline void validate(const ExperimentConfig& c)
{
    auto fail = [&](const std::string& field, const std::string& msg) { throw ConfigError(field + ": " + msg, c.line_of(field)); };
    if (c.schema != kSchema)
        fail("schema", "unsupported schema '" + c.schema + "', expected " + kSchema);
    if (c.d < 1 || c.d > 2)
        fail("dims.d", "d must be 1 or 2");
    if (c.n < 1 || c.n > 2)
        fail("dims.n", "n must be 1 or 2");
    if (c.family != "bump" && c.family != "zero")
        fail("profile.family", "unknown profile family '" + c.family + "' (bump, zero)");
    if (!(c.bump.lambda_min > 0.0))
        fail("profile.lambda_min", "lambda_min must be positive");
    if (!(c.bump.lambda_max > c.bump.lambda_min))
        fail("profile.lambda_max", "lambda_max must exceed lambda_min");
    if (!(c.bump.width_a > 0.0))
        fail("profile.width_a", "width_a must be positive");
    if (!(c.bump.cut_inner > 0.0))
        fail("profile.cut_inner", "cut_inner must be positive");
    if (!(c.bump.cut_outer > c.bump.cut_inner))
        fail("profile.cut_outer", "cut_outer must exceed cut_inner");

    if (c.X.size() != static_cast<std::size_t>(c.d + 1))
        fail("line.X", "X needs d + 1 = " + std::to_string(c.d + 1) + " components");
    if (c.Y.size() != static_cast<std::size_t>(c.n + 1))
        fail("line.Y", "Y needs n + 1 = " + std::to_string(c.n + 1) + " components");
    if (std::abs(c.X[0] + c.Y[0]) > 1e-12)
        fail("line.Y", "the base point must lie on the initial hyperplane, X0 + Y0 = 0");
    if (c.theta.size() != static_cast<std::size_t>(c.d))
        fail("line.theta", "theta needs d = " + std::to_string(c.d) + " angles");
    if (c.omega.size() != static_cast<std::size_t>(c.n))
        fail("line.omega", "omega needs n = " + std::to_string(c.n) + " angles");
    {
        const Vec t = unit_from_angles(c.d, c.theta), o = unit_from_angles(c.n, c.omega);
        if (std::abs(t[0] + o[0]) <= 1e-12)
            fail("line.omega", "transversality violated: theta0 + omega0 = 0, the line is tangent to the initial hyperplane");
    }

    if (c.beta.size() != static_cast<std::size_t>(c.d + c.n + 2))
        fail("beta.index", "the multi-index needs N + 2 = " + std::to_string(c.d + c.n + 2) + " entries");
    int order = 0;
    for (int b : c.beta) {
        if (b < 0)
            fail("beta.index", "entries must be nonnegative");
        order += b;
    }
    if (order > PointOptions{}.max_order)
        fail("beta.index", "derivative order above " + std::to_string(PointOptions{}.max_order) + " is not supported");

    if (c.tau_values.empty()) {
        if (!(c.tau_start > 0.0))
            fail("tau.start", "start must be positive");
        if (!(c.tau_ratio > 1.0))
            fail("tau.ratio", "ratio must exceed 1");
        if (c.tau_count < 4)
            fail("tau.count", "at least 4 tau values are needed for a rate fit");
    }
    else {
        if (c.tau_values.size() < 4)
            fail("tau.values", "at least 4 tau values are needed for a rate fit");
        if (!detail::increasing_positive(c.tau_values))
            fail("tau.values", "tau values must be positive and strictly increasing");
    }

    if (!(c.abs_tol > 0.0))
        fail("quadrature.abs_tol", "must be positive");
    if (!(c.rel_tol >= 0.0))
        fail("quadrature.rel_tol", "must be nonnegative");
    if (c.max_panels < 1)
        fail("quadrature.max_panels", "must be positive");
    if (!(c.angular_tol > 0.0))
        fail("quadrature.angular_tol", "must be positive");
    if (c.max_angular_nodes < 64)
        fail("quadrature.max_angular_nodes", "must be at least 64");

    const auto profile = c.profile();
    if (c.j_min > c.j_max)
        fail("partition.j_max", "j_max must not be below j_min");
    {
        const auto [ja, jb] = active_shells(profile);
        if (ja < c.j_min || jb > c.j_max)
            fail("partition.j_min", "shell range [" + std::to_string(c.j_min) + ", " + std::to_string(c.j_max) +
                                        "] does not cover the shells [" + std::to_string(ja) + ", " + std::to_string(jb) +
                                        "] carrying amplitude");
    }
    if (!(c.lp_tau > 0.0))
        fail("partition.tau", "must be positive");

    if (c.grid_nodes < 8)
        fail("grid.nodes", "at least 8 nodes per axis");
    if (!(c.grid_box > 0.0))
        fail("grid.box", "box must be positive");
    if (c.grid_s_nodes < 0 || (c.grid_s_nodes > 0 && c.grid_s_nodes < 8))
        fail("grid.s_nodes", "0 (same as nodes) or at least 8");
    if (c.grid_s_box < 0.0)
        fail("grid.s_box", "must be nonnegative");
    for (double t : c.grid_times)
        if (!(t >= 0.0))
            fail("grid.times", "times must be nonnegative");
    if (c.grid_times.empty())
        fail("grid.times", "at least one time is needed");
    {
        const auto g = c.grid();
        const auto& s = profile.support();
        if (!(s.lambda_max < g.nyquist(0)))
            fail(c.grid_s_nodes > 0 ? "grid.s_box" : "grid.box",
                 "Nyquist violated on the s axis: lambda_max = " + io::fmt(s.lambda_max) + " >= " + io::fmt(g.nyquist(0)));
        if (!(s.transverse_radius < g.nyquist(1)))
            fail("grid.box", "Nyquist violated on the transversal axes: support radius " + io::fmt(s.transverse_radius) +
                                 " >= " + io::fmt(g.nyquist(1)));
    }

    if (c.sp_lambdas.size() < 4 || !detail::increasing_positive(c.sp_lambdas))
        fail("stationary.lambdas", "at least 4 positive, strictly increasing values");
    if (!(c.sp_radius > 0.0))
        fail("stationary.radius", "must be positive");
    if (!(c.sp_ball > 0.0) || !(c.sp_ball < std::numbers::pi / 2))
        fail("stationary.ball", "must lie in (0, pi/2)");

    if (!(c.cc_tau_min > 0.0))
        fail("cross_check.tau_min", "must be positive");
    if (!(c.cc_tau_max > c.cc_tau_min))
        fail("cross_check.tau_max", "must exceed tau_min");
    if (c.cc_points < 1)
        fail("cross_check.points", "at least one point");

    if (c.output_dir.empty())
        fail("output.dir", "must not be empty");
    if (c.threads < 1)
        fail("run.threads", "at least one thread");
}

/// Parses and validates config text.
inline ExperimentConfig parse_config(const std::string& text)
{
    namespace pt = boost::property_tree;
    pt::ptree tree;
    {
        std::istringstream in(text);
        try {
            pt::read_ini(in, tree);
        }
        catch (const pt::ini_parser_error& e) {
            throw ConfigError(e.message(), static_cast<int>(e.line()));
        }
    }
    ExperimentConfig c;
    c.lines = detail::index_lines(text);
    std::map<std::string, const detail::Field*> known;
    for (const auto& f : detail::fields())
        known.emplace(f.name(), &f);
    std::map<std::string, bool> sections;
    for (const auto& f : detail::fields())
        if (!f.section.empty())
            sections[f.section] = true;
    for (const auto& [name, node] : tree) {
        if (node.empty() && sections.contains(name) && node.data().empty())
            continue;
        if (node.empty()) {
            auto it = known.find(name);
            if (it == known.end() || !it->second->section.empty())
                throw ConfigError("unknown key '" + name + "'", c.line_of(name));
            it->second->read(c, node.data(), name, c.line_of(name));
            continue;
        }
        for (const auto& [key, leaf] : node) {
            const std::string full = name + "." + key;
            auto it = known.find(full);
            if (it == known.end())
                throw ConfigError("unknown key '" + key + "' in section [" + name + "]", c.line_of(full));
            it->second->read(c, leaf.data(), full, c.line_of(full));
        }
    }
    if (tree.find("schema") == tree.not_found())
        throw ConfigError("missing 'schema = " + std::string(kSchema) + "'", 1);
    try {
        validate(c);
    }
    catch (const ConfigError&) {
        throw;
    }
    catch (const Error& e) {
        throw ConfigError(e.what());
    }
    return c;
}

inline ExperimentConfig load_config(const std::string& path)
{
    std::string text;
    try {
        text = io::read_text(path);
    }
    catch (const IoError& e) {
        throw ConfigError(e.what());
    }
    return parse_config(text);
}

/// Every field in schema order with 17-digit numbers; parse and canonicalize
/// commute, so canonicalize(parse(canonicalize(c))) == canonicalize(c).
inline std::string canonicalize(const ExperimentConfig& c)
{
    std::string out;
    std::string section;
    for (const auto& f : detail::fields()) {
        if (f.section != section) {
            section = f.section;
            out += "\n[" + section + "]\n";
        }
        const std::string v = f.write(c);
        out += f.key + " =" + (v.empty() ? "" : " " + v) + "\n";
    }
    return out;
}

inline std::string config_hash(const ExperimentConfig& c) { return io::sha256_hex(canonicalize(c)); }

} // namespace charwave::harness
