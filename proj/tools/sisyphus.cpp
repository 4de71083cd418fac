// Command-line driver for parameter sweeps.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "sisyphus/sweep.hpp"

namespace {

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw sisyphus::InvalidParameter("cannot read " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void report(const sisyphus::SweepOutcome& outcome) {
    for (std::size_t i = 0; i < outcome.points.size(); ++i) {
        const auto& p = outcome.points[i];
        std::cerr << "point " << i << ": " << sisyphus::status_name(p.status);
        if (!p.message.empty()) std::cerr << " (" << p.message << ")";
        std::cerr << '\n';
    }
    std::cerr << "manifest " << outcome.manifest_path << '\n';
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Semiclassical Monte-Carlo simulation of Sisyphus cooling in a 2D lin-perp-lin lattice"};
    app.require_subcommand(1);

    std::string config_path, manifest_path, out_dir;
    std::uint64_t seed = 0;
    unsigned threads = 0;

    auto* run = app.add_subcommand("run", "run a sweep");
    run->add_option("config", config_path, "JSON configuration")->required();
    auto* run_seed = run->add_option("--seed", seed, "master seed");
    auto* run_threads = run->add_option("--threads", threads, "worker threads")->check(CLI::PositiveNumber);
    auto* run_out = run->add_option("--out", out_dir, "output directory");

    auto* validate = app.add_subcommand("validate", "check a configuration and print it resolved");
    validate->add_option("config", config_path, "JSON configuration")->required();

    auto* rep = app.add_subcommand("replay", "re-run a sweep from its manifest and compare hashes");
    rep->add_option("manifest", manifest_path, "manifest.json of a previous run")->required();
    auto* rep_threads = rep->add_option("--threads", threads, "worker threads")->check(CLI::PositiveNumber);
    rep->add_option("--out", out_dir, "output directory (default: <manifest dir>/replay)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*validate) {
            const auto spec = sisyphus::validate_config(read_file(config_path));
            std::cout << spec.resolved.dump(2) << '\n';
            return 0;
        }
        if (*run) {
            auto spec = sisyphus::validate_config(read_file(config_path));
            if (*run_seed) sisyphus::override_seed(spec, seed);
            if (*run_threads) sisyphus::override_threads(spec, threads);
            if (*run_out) sisyphus::override_out_dir(spec, out_dir);
            const auto outcome = sisyphus::run_sweep(spec);
            report(outcome);
            return outcome.exit_code();
        }
        if (*rep) {
            if (out_dir.empty()) {
                out_dir = (std::filesystem::path(manifest_path).parent_path() / "replay").string();
            }
            const auto r = sisyphus::replay(manifest_path, out_dir,
                                            *rep_threads ? std::optional<unsigned>(threads)
                                                         : std::nullopt);
            report(r.outcome);
            for (const auto& f : r.missing) std::cerr << "missing " << f << '\n';
            for (const auto& f : r.mismatched) std::cerr << "differs " << f << '\n';
            if (!r.identical()) return 2;
            std::cerr << "all files identical\n";
            return r.outcome.exit_code();
        }
    } catch (const sisyphus::ConfigError& e) {
        std::cerr << e.what() << '\n';
        return 1;
    } catch (const sisyphus::InvalidParameter& e) {
        std::cerr << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
