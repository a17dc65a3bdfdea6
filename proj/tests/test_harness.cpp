#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <regex>

#include "charwave/harness/run.hpp"

using namespace charwave;
using namespace charwave::harness;
namespace fs = std::filesystem;

namespace
{

std::string canonical_text() { return io::read_text(fs::path(CHARWAVE_CONFIG_DIR) / "canonical.cfg"); }

std::string replace_line(std::string text, const std::string& from, const std::string& to)
{
    const auto p = text.find(from);
    EXPECT_NE(p, std::string::npos) << from;
    return text.replace(p, from.size(), to);
}

fs::path scratch(const std::string& name)
{
    auto p = fs::temp_directory_path() / ("charwave_test_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

struct CliResult
{
    int status;
    std::string out;
    std::string err;
};

CliResult run_cli(const std::string& args, const fs::path& dir)
{
    const auto out = dir / "stdout.txt", err = dir / "stderr.txt";
    const std::string cmd = std::string(CHARWAVE_CLI_PATH) + " " + args + " > " + out.string() + " 2> " + err.string();
    const int raw = std::system(cmd.c_str());
    return {WIFEXITED(raw) ? WEXITSTATUS(raw) : -1, io::read_text(out), io::read_text(err)};
}

int error_line(const std::string& text)
{
    try {
        parse_config(text);
    }
    catch (const ConfigError& e) {
        return e.line();
    }
    return -1;
}

} // namespace

TEST(Harness, ParsesTheCanonicalConfig)
{
    auto c = parse_config(canonical_text());
    EXPECT_EQ(c.d, 1);
    EXPECT_EQ(c.n, 1);
    EXPECT_EQ(c.family, "bump");
    EXPECT_EQ(c.bump.lambda_max, 2.0);
    EXPECT_EQ(c.X, (Vec{0.3, 0.2}));
    EXPECT_EQ(c.tau_grid(), (std::vector<double>{5, 10, 20, 40, 80}));
    EXPECT_EQ(c.grid_times, (std::vector<double>{1, 5, 25}));
    EXPECT_TRUE(c.bump.mirror);
    EXPECT_EQ(c.line_of("line.omega"), 22);
}

TEST(Harness, RejectsBadInputWithTheLine)
{
    const auto base = canonical_text();
    EXPECT_EQ(error_line(replace_line(base, "width_a = 0.5", "width_a = 0.5x")), 12);
    EXPECT_EQ(error_line(replace_line(base, "cut_outer = 6", "cut_outr = 6")), 16);
    EXPECT_EQ(error_line(replace_line(base, "mirror = true", "mirror = yes")), 13);
    EXPECT_EQ(error_line(replace_line(base, "Y = -0.3 0.1", "Y = -0.2 0.1")), 20);
    EXPECT_EQ(error_line(replace_line(base, "index = 0 0 0 0", "index = 0 0 0")), 25);
    EXPECT_EQ(error_line(replace_line(base, "lambda_min = 1", "lambda_min = 0")), 10);
    EXPECT_EQ(error_line(replace_line(base, "count = 5", "count = 3")), 30);
    EXPECT_EQ(error_line(replace_line(base, "schema = charwave-config/1", "schema = charwave-config/0")), 2);
    EXPECT_EQ(error_line(replace_line(base, "box = 48", "box = 200")), 46);
    EXPECT_EQ(error_line(replace_line(base, "j_min = -40", "j_min = 0")), 40);
    try {
        parse_config(io::read_text(fs::path(CHARWAVE_CONFIG_DIR) / "tangential.cfg"));
        FAIL() << "tangential line accepted";
    }
    catch (const ConfigError& e) {
        EXPECT_EQ(e.line(), 22);
        EXPECT_NE(std::string(e.what()).find("transversality"), std::string::npos);
    }
}

TEST(Harness, CanonicalFormIsIdempotent)
{
    for (const char* name : {"canonical.cfg", "mixed_2_1.cfg"}) {
        const auto c1 = canonicalize(parse_config(io::read_text(fs::path(CHARWAVE_CONFIG_DIR) / name)));
        const auto c2 = canonicalize(parse_config(c1));
        EXPECT_EQ(c1, c2);
    }
    // one-third survives the 17-digit text exactly
    auto c = parse_config(replace_line(canonical_text(), "width_a = 0.5", "width_a = 0.33333333333333331"));
    EXPECT_EQ(parse_config(canonicalize(c)).bump.width_a, 1.0 / 3.0);
}

TEST(Harness, HashIgnoresLayoutButNotValues)
{
    EXPECT_EQ(io::sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    const auto base = canonical_text();
    const auto h = config_hash(parse_config(base));
    EXPECT_EQ(h.size(), 64u);
    auto moved = replace_line(base, "[run]\nseed = 20240601\nthreads = 1\n", "[run]\nthreads = 1\n;comment\nseed   =   20240601\n");
    EXPECT_EQ(config_hash(parse_config(moved)), h);
    EXPECT_EQ(config_hash(parse_config(replace_line(base, "lambda_max = 2", "lambda_max = 2.0"))), h);
    EXPECT_NE(config_hash(parse_config(replace_line(base, "lambda_max = 2", "lambda_max = 1.9"))), h);
}

TEST(Harness, CsvRoundTripIsExact)
{
    io::Table t{{"tau", "abs_u", "abs_leading", "err"}, {}};
    const double vals[] = {1.0 / 3.0, 1e-300, -2.5e17, 0.1, std::nextafter(1.0, 2.0), 5e-324};
    for (double v : vals)
        t.add(v, v * 7, -v, std::sqrt(std::abs(v)));
    const auto dir = scratch("csv");
    io::write_csv(dir / "t.csv", t);
    const auto back = io::read_csv(dir / "t.csv");
    EXPECT_EQ(back, t);
    for (std::size_t i = 0; i < std::size(vals); ++i) {
        EXPECT_EQ(back.number(i, "tau"), vals[i]);
        EXPECT_EQ(back.number(i, "abs_u"), vals[i] * 7);
    }
    EXPECT_THROW(io::parse_csv("a,b\n1\n"), IoError);
}

TEST(Harness, PlotDataIsLongFormat)
{
    EXPECT_TRUE(io::emit_plot_data({}).rows.empty());
    io::Table wide{{"tau", "abs_u", "abs_leading", "err"}, {}};
    wide.add(5.0, 1.0, 2.0, 3.0);
    wide.add(10.0, 4.0, 5.0, 6.0);
    auto l = io::emit_plot_data({{"theorem", wide, "tau"}});
    ASSERT_EQ(l.rows.size(), 6u);
    EXPECT_EQ(l.header, (std::vector<std::string>{"source", "axis", "x", "quantity", "value"}));
    EXPECT_EQ(l.rows[4], (std::vector<std::string>{"theorem", "tau", io::fmt(10.0), "abs_leading", io::fmt(5.0)}));
}

TEST(Harness, GridExportCarriesCoordinatesAndMetadata)
{
    auto c = parse_config(replace_line(replace_line(canonical_text(), "nodes = 48", "nodes = 16"), "box = 48", "box = 16"));
    auto f = evolve_grid(c.profile(), c.grid(), 1.0);
    auto t = io::grid_table(f);
    EXPECT_EQ(t.header, (std::vector<std::string>{"s", "x1", "y1", "re", "im"}));
    ASSERT_EQ(t.rows.size(), 16u * 16u * 16u);
    EXPECT_EQ(t.number(0, "s"), -8.0);
    EXPECT_EQ(t.number(5, "re"), f.values[5].real());
    auto j = io::grid_metadata(f);
    EXPECT_EQ(j["t"].get<double>(), 1.0);
    EXPECT_EQ(j["axes"].size(), 3u);
    EXPECT_EQ(j["l2_norm"].get<double>(), f.l2_norm);
}

TEST(Harness, ConservationRunWritesOneCsv)
{
    const auto dir = scratch("conservation");
    auto r = run_cli("conservation --config " + std::string(CHARWAVE_CONFIG_DIR) + "/canonical.cfg --out " + (dir / "out").string(), dir);
    EXPECT_EQ(r.status, 0) << r.err;
    auto m = nlohmann::json::parse(io::read_text(dir / "out" / "manifest.json"));
    EXPECT_EQ(m["files"], nlohmann::json::array({"conservation.csv"}));
    EXPECT_EQ(m["status"], "passed");
    EXPECT_EQ(m["config_hash"], config_hash(parse_config(canonical_text())));
    auto t = io::read_csv(dir / "out" / "conservation.csv");
    EXPECT_EQ(t.rows.size(), 4u);
}

TEST(Harness, ExitCodesFollowTheContract)
{
    const auto dir = scratch("exit");
    const std::string cfg = std::string(CHARWAVE_CONFIG_DIR);
    auto r = run_cli("verify-theorem --config " + cfg + "/tangential.cfg --out " + (dir / "a").string(), dir);
    EXPECT_EQ(r.status, 2);
    EXPECT_NE(r.err.find("transversality"), std::string::npos) << r.err;
    EXPECT_EQ(run_cli("verify-theorem --config " + (dir / "missing.cfg").string(), dir).status, 2);
    EXPECT_EQ(run_cli("no-such-command --config " + cfg + "/canonical.cfg", dir).status, 2);
    EXPECT_EQ(run_cli("conservation", dir).status, 2);
    EXPECT_EQ(run_cli("conservation --config " + cfg + "/canonical.cfg --threads 0", dir).status, 2);

    // on the sphere of radius 0.3 the stationary points have lambda below the band
    io::write_text(dir / "outside.cfg", replace_line(canonical_text(), "radius = 0.7", "radius = 0.3"));
    r = run_cli("stationary-phase --config " + (dir / "outside.cfg").string() + " --out " + (dir / "b").string(), dir);
    EXPECT_EQ(r.status, 3) << r.err;
    EXPECT_NE(r.err.find("stationary.stationary_points_outside_support"), std::string::npos) << r.err;
    EXPECT_EQ(nlohmann::json::parse(io::read_text(dir / "b" / "manifest.json"))["status"], "failed");

    io::write_text(dir / "blocker", "a file, not a directory");
    r = run_cli("conservation --config " + cfg + "/canonical.cfg --out " + (dir / "blocker" / "out").string(), dir);
    EXPECT_EQ(r.status, 4) << r.err;
}

TEST(Harness, OutputDirectoryOverrides)
{
    const auto dir = scratch("outdir");
    const std::string cfg = std::string(CHARWAVE_CONFIG_DIR) + "/canonical.cfg";
    const auto env = dir / "from_env";
    auto r = run_cli("emit-plot-data --config " + cfg, dir);
    // without --out or the environment the config directory is used relative to the working directory
    EXPECT_EQ(r.status, 0) << r.err;
    fs::remove_all("charwave-out");
    const std::string with_env = "CHARWAVE_OUT_DIR=" + env.string() + " ";
    const int raw = std::system((with_env + CHARWAVE_CLI_PATH + " emit-plot-data --config " + cfg + " > /dev/null").c_str());
    EXPECT_EQ(WEXITSTATUS(raw), 0);
    EXPECT_TRUE(fs::exists(env / "manifest.json"));
    auto m = nlohmann::json::parse(io::read_text(env / "manifest.json"));
    EXPECT_TRUE(m["files"].empty());
}

TEST(Harness, DeterministicRunsAreByteIdentical)
{
    const auto dir = scratch("determinism");
    const std::string cfg = std::string(CHARWAVE_CONFIG_DIR) + "/canonical.cfg";
    for (const char* sub : {"a", "b"}) {
        auto r = run_cli("lp-decay --deterministic --config " + cfg + " --out " + (dir / sub).string(), dir);
        ASSERT_EQ(r.status, 0) << r.err;
    }
    EXPECT_EQ(io::read_text(dir / "a" / "shells.csv"), io::read_text(dir / "b" / "shells.csv"));
    EXPECT_EQ(io::read_text(dir / "a" / "manifest.json"), io::read_text(dir / "b" / "manifest.json"));
    auto t = io::read_csv(dir / "a" / "shells.csv");
    EXPECT_EQ(t.header, (std::vector<std::string>{"j", "re", "im", "abs", "weighted_abs", "node_count", "est_error"}));
    auto r = run_cli("emit-plot-data --config " + cfg + " --out " + (dir / "a").string(), dir);
    EXPECT_EQ(r.status, 0);
    auto l = io::read_csv(dir / "a" / "plot_data.csv");
    EXPECT_EQ(l.rows.size(), t.rows.size() * 6);
}
