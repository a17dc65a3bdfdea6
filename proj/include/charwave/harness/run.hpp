#pragma once

// Experiment orchestration: dispatches a command to the library, writes the
// CSV/JSON artifacts and a manifest from a single writer.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <ctime>
#include <filesystem>
#include <map>
#include <random>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "charwave/asymptotics.hpp"
#include "charwave/cone_lp.hpp"
#include "charwave/harness/config.hpp"
#include "charwave/io.hpp"
#include "charwave/parallel.hpp"
#include "charwave/propagator.hpp"

namespace charwave::harness
{

inline constexpr const char* kVersion = "0.1.0";

enum class Command
{
    VerifyTheorem,
    CrossCheck,
    Conservation,
    LpDecay,
    StationaryPhase,
    EmitPlotData
};

inline const std::vector<std::pair<std::string, Command>>& command_names()
{
    static const std::vector<std::pair<std::string, Command>> names = {
        {"verify-theorem", Command::VerifyTheorem}, {"cross-check", Command::CrossCheck},
        {"conservation", Command::Conservation},    {"lp-decay", Command::LpDecay},
        {"stationary-phase", Command::StationaryPhase}, {"emit-plot-data", Command::EmitPlotData},
    };
    return names;
}

inline Command parse_command(const std::string& s)
{
    for (const auto& [name, c] : command_names())
        if (name == s)
            return c;
    std::string all;
    for (const auto& [name, c] : command_names())
        all += (all.empty() ? "" : ", ") + name;
    throw ConfigError("unknown command '" + s + "' (expected one of: " + all + ")");
}

inline std::string to_string(Command c)
{
    for (const auto& [name, cc] : command_names())
        if (cc == c)
            return name;
    return "?";
}

struct RunOptions
{
    std::filesystem::path out_dir;
    unsigned threads = 1;
    bool deterministic = false;
};

/// A hard assertion: value <= limit.
struct Check
{
    std::string name;
    double value = 0.0;
    double limit = 0.0;
    bool passed = false;
};

struct RunManifest
{
    std::string command;
    std::string config_hash;
    std::string version = kVersion;
    std::string started;
    std::string finished;
    bool deterministic = false;
    unsigned threads = 1;
    std::map<std::string, double> error_estimates;
    std::vector<Check> checks;
    std::vector<std::string> files;

    bool passed() const
    {
        for (const auto& c : checks)
            if (!c.passed)
                return false;
        return true;
    }

    nlohmann::json to_json() const
    {
        nlohmann::json checks_json = nlohmann::json::array();
        for (const auto& c : checks)
            checks_json.push_back({{"name", c.name}, {"value", c.value}, {"limit", c.limit}, {"passed", c.passed}});
        return {{"tool", "charwave"},
                {"version", version},
                {"command", command},
                {"config_hash", config_hash},
                {"started", started},
                {"finished", finished},
                {"deterministic", deterministic},
                {"threads", threads},
                {"error_estimates", error_estimates},
                {"checks", checks_json},
                {"files", files},
                {"status", passed() ? "passed" : "failed"}};
    }
};

namespace detail
{

inline std::string utc_now()
{
    const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

inline void check_le(RunManifest& m, const std::string& name, double value, double limit)
{
    m.checks.push_back({name, value, limit, value <= limit});
}

/// Uniform samples in [a, b) from the top 53 bits of a 64-bit Mersenne
/// Twister, independent of the standard library's distributions.
inline std::vector<double> sample_uniform(std::uint64_t seed, std::size_t count, double a, double b)
{
    std::mt19937_64 rng(seed);
    std::vector<double> out;
    for (std::size_t i = 0; i < count; ++i)
        out.push_back(a + (b - a) * std::ldexp(static_cast<double>(rng() >> 11), -53));
    std::sort(out.begin(), out.end());
    return out;
}

/// Reference directions for the signature check in every dimension pair.
inline DirectionPair reference_direction(int d, int n)
{
    const std::vector<double> t1{0.4}, t2{0.4, 0.9}, o1{-0.3}, o2{0.3, -1.2};
    return DirectionPair(unit_from_angles(d, d == 1 ? t1 : t2), unit_from_angles(n, n == 1 ? o1 : o2));
}

class Writer
{
public:
    Writer(std::filesystem::path dir, RunManifest& m) : dir_(std::move(dir)), m_(m)
    {
        std::error_code ec;
        std::filesystem::create_directories(dir_, ec);
        if (ec)
            throw IoError("cannot create output directory " + dir_.string() + ": " + ec.message());
    }
    void csv(const std::string& name, const io::Table& t)
    {
        io::write_csv(dir_ / name, t);
        m_.files.push_back(name);
    }
    void json(const std::string& name, const nlohmann::json& j)
    {
        io::write_json(dir_ / name, j);
        m_.files.push_back(name);
    }
    const std::filesystem::path& dir() const { return dir_; }

private:
    std::filesystem::path dir_;
    RunManifest& m_;
};

inline void run_conservation(const ExperimentConfig& c, RunManifest& m, Writer& w)
{
    const auto p = c.profile();
    const auto g = c.grid();
    const double n0 = evolve_grid(p, g, 0.0).l2_norm;
    io::Table t{{"t", "l2_norm", "rel_deviation"}, {}};
    double worst = 0.0;
    t.add(0.0, n0, 0.0);
    for (double time : c.grid_times) {
        const double nt = evolve_grid(p, g, time).l2_norm;
        const double dev = n0 > 0.0 ? std::abs(nt - n0) / n0 : std::abs(nt);
        worst = std::max(worst, dev);
        t.add(time, nt, dev);
    }
    w.csv("conservation.csv", t);
    check_le(m, "conservation.max_rel_deviation", worst, 1e-12);
}

inline void run_verify_theorem(const ExperimentConfig& c, RunManifest& m, Writer& w, unsigned threads)
{
    const auto dims = c.dims();
    TheoremOptions o;
    o.point.quad = c.spectral_quad();
    o.threads = threads;
    const auto rep = verify_theorem(c.profile(), c.line(), c.multi_index(), c.tau_grid(), o);
    w.csv("theorem.csv", io::theorem_table(rep));
    w.json("theorem.json", io::theorem_json(rep));
    double q = 0.0;
    for (const auto& r : rep.rows)
        q = std::max(q, r.quad_error);
    m.error_estimates["theorem.F_quad_error"] = rep.F.quad_error;
    m.error_estimates["theorem.max_point_quad_error"] = q;
    check_le(m, "theorem.remainder_slope", rep.remainder.slope, -0.5 * (dims.N() + 1) + 0.15);
    if (std::abs(rep.F.value) > 1e-6)
        check_le(m, "theorem.leading_slope_deviation", std::abs(rep.leading.slope + 0.5 * dims.N()), 0.1);
}

inline void run_cross_check(const ExperimentConfig& c, RunManifest& m, Writer& w, unsigned threads)
{
    const auto p = c.profile();
    const auto line = c.line();
    const auto beta = c.multi_index();
    const auto taus = sample_uniform(c.seed, static_cast<std::size_t>(c.cc_points), c.cc_tau_min, c.cc_tau_max);
    PointOptions po;
    po.quad = c.spectral_quad();
    const auto cq = c.cone_quad();
    const auto part = c.partition();
    const double r_max = 4.0 * charwave::detail::cone_support_radius(p);
    struct Row
    {
        cplx prop, direct, lp;
        double err;
    };
    auto rows = parallel_map<Row>(taus.size(), threads, [&](std::size_t i) {
        const auto pt = line_point(line, taus[i]);
        const auto u = evaluate_dbeta_u_point(p, pt, beta, po);
        const auto dc = direct_cone_integral(p, pt, beta, r_max, cq);
        if (dc.tail_flagged)
            throw ToleranceError("cross-check: direct cone integral truncated inside the support", dc.tail_estimate);
        const auto lp = lp_series_sum(p, pt, beta, part, cq);
        return Row{u.value, dc.value, lp.value, u.est_error + dc.est_error + lp.est_error};
    });
    io::Table t{{"tau", "re_prop", "im_prop", "re_direct", "im_direct", "re_lp", "im_lp", "max_pairwise_diff"}, {}};
    double worst = 0.0, est = 0.0;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto& r = rows[i];
        const double diff = std::max({std::abs(r.prop - r.direct), std::abs(r.prop - r.lp), std::abs(r.direct - r.lp)});
        worst = std::max(worst, diff);
        est = std::max(est, r.err);
        t.add(taus[i], r.prop.real(), r.prop.imag(), r.direct.real(), r.direct.imag(), r.lp.real(), r.lp.imag(), diff);
    }
    w.csv("cross_check.csv", t);
    m.error_estimates["cross_check.max_quad_error"] = est;
    check_le(m, "cross_check.max_pairwise_diff", worst, 1e-6);
}

inline void run_lp_decay(const ExperimentConfig& c, RunManifest& m, Writer& w)
{
    const auto p = c.profile();
    const auto part = c.partition();
    const auto rep = shell_decay_report(p, c.line(), c.multi_index(), c.lp_tau, part, c.cone_quad());
    double pou = 0.0;
    for (int i = 0; i < 1000; ++i)
        pou = std::max(pou, std::abs(part.partial_sum(std::pow(10.0, -3.0 + 6.0 * i / 999.0)) - 1.0));
    double est = 0.0;
    for (const auto& r : rep.rows)
        est = std::max(est, r.est_error);
    w.csv("shells.csv", io::shell_table(rep));
    w.json("lp_decay.json", {{"tau", rep.tau},
                             {"dominant_j", rep.dominant_j},
                             {"monotone_off_dominant", rep.monotone_off_dominant},
                             {"partition_of_unity_max_deviation", pou}});
    m.error_estimates["lp_decay.max_shell_error"] = est;
    check_le(m, "partition_of_unity.max_deviation", pou, 1e-12);
}

inline void run_stationary_phase(const ExperimentConfig& c, RunManifest& m, Writer& w, unsigned threads)
{
    const auto dims = c.dims();
    const auto p = c.profile();
    const auto dir = c.direction();
    const auto beta = c.multi_index();
    const auto amp = make_profile_amplitude(p, beta, c.sp_radius, dir, c.sp_ball);
    struct Row
    {
        cplx brute, leading;
        double brute_error;
        bool in_support;
    };
    const auto& L = c.sp_lambdas;
    auto rows = parallel_map<Row>(L.size(), threads, [&](std::size_t i) {
        const auto I = sphere_integral_brute(amp, dir, L[i]);
        const auto a = sphere_stationary_phase_leading(amp.B, dir, L[i], 1);
        const auto b = sphere_stationary_phase_leading(amp.B, dir, L[i], -1);
        return Row{I.value, a.value + b.value, I.est_error, a.in_support && b.in_support};
    });
    io::Table t{{"lambda", "re_brute", "im_brute", "re_leading", "im_leading", "err", "brute_error"}, {}};
    std::vector<std::pair<double, double>> samples;
    double est = 0.0;
    bool support = true;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto& r = rows[i];
        const double e = std::abs(r.brute - r.leading);
        samples.emplace_back(L[i], e);
        est = std::max(est, r.brute_error);
        support = support && r.in_support;
        t.add(L[i], r.brute.real(), r.brute.imag(), r.leading.real(), r.leading.imag(), e, r.brute_error);
    }
    w.csv("stationary_phase.csv", t);
    m.error_estimates["stationary.max_brute_error"] = est;
    check_le(m, "stationary.stationary_points_outside_support", support ? 0.0 : 1.0, 0.0);
    double slope = 0.0;
    if (support) {
        const auto fit = fit_decay_rate(samples);
        slope = fit.slope;
        check_le(m, "stationary.remainder_slope", fit.slope, -0.5 * (dims.N() + 1) + 0.1);
    }

    // phase of the + branch alone, extrapolated in Lambda
    const auto plus = make_profile_amplitude(p, beta, c.sp_radius, dir, c.sp_ball, true, false);
    const cplx b0 = plus.B(dir.theta(), dir.omega());
    double phase = 0.0, phase_err = 0.0;
    if (b0 != 0.0) {
        auto R = [&](double lam) {
            const auto I = sphere_integral_brute(plus, dir, lam);
            return std::arg(I.value / (std::pow(2.0 * std::numbers::pi / lam, 0.5 * dims.N()) * b0));
        };
        const double lam = L.back();
        auto pr = parallel_map<double>(2, threads, [&](std::size_t i) { return R(i == 0 ? lam : 2.0 * lam); });
        phase = 2.0 * pr[1] - pr[0];
        const double expect = std::numbers::pi * (dims.n() - dims.d()) / 4.0;
        phase_err = std::abs(std::remainder(phase - expect, 2.0 * std::numbers::pi));
        check_le(m, "stationary.phase_error_rad", phase_err, 1e-3);
    }

    nlohmann::json hess = nlohmann::json::array();
    int mismatches = 0;
    double grad = 0.0;
    for (int d : {1, 2})
        for (int n : {1, 2}) {
            const auto ref = (d == dims.d() && n == dims.n()) ? dir : reference_direction(d, n);
            for (int br : {1, -1}) {
                const auto h = hessian_phase_factor(ref, br);
                const int expect = br * (n - d);
                mismatches += h.signature != expect;
                grad = std::max(grad, h.gradient_norm);
                hess.push_back({{"d", d},
                                {"n", n},
                                {"branch", br},
                                {"signature", h.signature},
                                {"expected_signature", expect},
                                {"determinant", h.determinant},
                                {"gradient_norm", h.gradient_norm},
                                {"factor", io::to_json(h.factor)}});
            }
        }
    w.json("stationary_phase.json", {{"remainder_slope", slope},
                                     {"phase_rad", phase},
                                     {"phase_error_rad", phase_err},
                                     {"amplitude_radius", c.sp_radius},
                                     {"amplitude_ball", c.sp_ball},
                                     {"hessian", hess}});
    check_le(m, "stationary.hessian_signature_mismatches", mismatches, 0.0);
    check_le(m, "stationary.max_gradient_norm", grad, 1e-8);
}

inline void run_emit_plot_data(RunManifest&, Writer& w)
{
    static const std::vector<std::pair<std::string, std::string>> sources = {
        {"theorem.csv", "tau"},          {"cross_check.csv", "tau"}, {"conservation.csv", "t"},
        {"shells.csv", "j"},             {"stationary_phase.csv", "lambda"},
    };
    std::vector<io::PlotSource> found;
    for (const auto& [file, axis] : sources)
        if (std::filesystem::exists(w.dir() / file))
            found.push_back({file.substr(0, file.size() - 4), io::read_csv(w.dir() / file), axis});
    if (found.empty())
        return;
    w.csv("plot_data.csv", io::emit_plot_data(found));
}

} // namespace detail

/// Runs one command and writes its artifacts plus manifest.json into
/// opt.out_dir. Hard assertions are recorded in the manifest; the caller maps
/// a failed assertion to exit status 3.
inline RunManifest run_experiment(const ExperimentConfig& config, Command command, const RunOptions& opt)
{
    RunManifest m;
    m.command = to_string(command);
    m.config_hash = config_hash(config);
    m.deterministic = opt.deterministic;
    m.threads = opt.threads;
    m.started = opt.deterministic ? "1970-01-01T00:00:00Z" : detail::utc_now();
    detail::Writer w(opt.out_dir, m);
    const unsigned threads = std::max(1u, opt.threads);
    switch (command) {
    case Command::Conservation:
        detail::run_conservation(config, m, w);
        break;
    case Command::VerifyTheorem:
        detail::run_verify_theorem(config, m, w, threads);
        break;
    case Command::CrossCheck:
        detail::run_cross_check(config, m, w, threads);
        break;
    case Command::LpDecay:
        detail::run_lp_decay(config, m, w);
        break;
    case Command::StationaryPhase:
        detail::run_stationary_phase(config, m, w, threads);
        break;
    case Command::EmitPlotData:
        detail::run_emit_plot_data(m, w);
        break;
    }
    m.finished = opt.deterministic ? "1970-01-01T00:00:00Z" : detail::utc_now();
    io::write_json(opt.out_dir / "manifest.json", m.to_json());
    return m;
}

} // namespace charwave::harness
