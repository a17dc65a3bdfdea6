// charwave <command> --config <path> [--out <dir>] [--threads K] [--deterministic]
//
// Exit status: 0 all checks passed, 2 invalid configuration or usage,
// 3 numerical tolerance failure, 4 I/O failure, 1 anything else.

#include <cstdlib>
#include <iostream>
#include <string>

#include <boost/program_options.hpp>

#include "charwave/harness/run.hpp"

namespace po = boost::program_options;
using namespace charwave;

namespace
{

std::string usage(const po::options_description& opts)
{
    std::string s = "usage: charwave <command> --config <path> [--out <dir>] [--threads K] [--deterministic]\ncommands:";
    for (const auto& [name, c] : harness::command_names())
        s += " " + name;
    std::ostringstream o;
    o << opts;
    return s + "\n" + o.str();
}

} // namespace

int main(int argc, char** argv)
{
    po::options_description opts("options");
    opts.add_options()("help,h", "show this message")("config", po::value<std::string>(), "experiment config file")(
        "out", po::value<std::string>(), "output directory (overrides CHARWAVE_OUT_DIR and the config)")(
        "threads", po::value<int>(), "worker threads")("deterministic", po::bool_switch(), "fixed timestamps in the manifest");
    po::options_description hidden;
    hidden.add_options()("command", po::value<std::string>());
    po::options_description all;
    all.add(opts).add(hidden);
    po::positional_options_description pos;
    pos.add("command", 1);

    po::variables_map vm;
    try {
        po::store(po::command_line_parser(argc, argv).options(all).positional(pos).run(), vm);
        po::notify(vm);
    }
    catch (const po::error& e) {
        std::cerr << "charwave: " << e.what() << "\n" << usage(opts);
        return 2;
    }
    if (vm.count("help")) {
        std::cout << usage(opts);
        return 0;
    }
    if (!vm.count("command") || !vm.count("config")) {
        std::cerr << "charwave: a command and --config are required\n" << usage(opts);
        return 2;
    }

    try {
        const auto command = harness::parse_command(vm["command"].as<std::string>());
        const auto cfg = harness::load_config(vm["config"].as<std::string>());
        harness::RunOptions ro;
        if (vm.count("out"))
            ro.out_dir = vm["out"].as<std::string>();
        else if (const char* env = std::getenv("CHARWAVE_OUT_DIR"); env && *env)
            ro.out_dir = env;
        else
            ro.out_dir = cfg.output_dir;
        int threads = vm.count("threads") ? vm["threads"].as<int>() : cfg.threads;
        if (threads < 1)
            throw ConfigError("--threads must be at least 1");
        ro.threads = static_cast<unsigned>(threads);
        ro.deterministic = vm["deterministic"].as<bool>() || cfg.deterministic;

        const auto m = harness::run_experiment(cfg, command, ro);
        for (const auto& c : m.checks)
            std::cout << (c.passed ? "PASS " : "FAIL ") << c.name << " = " << io::fmt(c.value) << " (limit "
                      << io::fmt(c.limit) << ")\n";
        for (const auto& f : m.files)
            std::cout << "wrote " << (ro.out_dir / f).string() << "\n";
        if (!m.passed()) {
            for (const auto& c : m.checks)
                if (!c.passed) {
                    std::cerr << "charwave: tolerance failure: " << c.name << " = " << io::fmt(c.value) << " exceeds "
                              << io::fmt(c.limit) << "\n";
                    break;
                }
            return 3;
        }
        return 0;
    }
    catch (const ConfigError& e) {
        std::cerr << "charwave: config error: " << e.what() << "\n";
        return 2;
    }
    catch (const ToleranceError& e) {
        std::cerr << "charwave: tolerance failure: " << e.what() << " (achieved " << io::fmt(e.achieved()) << ")\n";
        return 3;
    }
    catch (const IoError& e) {
        std::cerr << "charwave: I/O error: " << e.what() << "\n";
        return 4;
    }
    catch (const std::exception& e) {
        std::cerr << "charwave: error: " << e.what() << "\n";
        return 1;
    }
}
