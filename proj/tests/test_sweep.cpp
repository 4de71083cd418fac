#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "sisyphus/sweep.hpp"

using namespace sisyphus;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("sisyphus_test_sweep_" + name);
    fs::remove_all(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
}

const char* tiny = R"({
  // one cheap point
  "mode": "fixed-light-shift",
  "lattice": {"light_shift": -300},
  "grid": [30],
  "simulation": {"n_traj": 300, "relax": 400, "steady": 400, "relax_samples": 80},
  "drift": {"settle": 50, "measure": 150, "n_traj": 300},
  "rir": {"points": 61},
  "seed": 11
})";

bool has_issue(const ConfigError& e, const std::string& path, const std::string& fragment = "") {
    for (const auto& i : e.issues()) {
        if (i.path == path && i.reason.find(fragment) != std::string::npos) return true;
    }
    return false;
}

ConfigError config_error(const std::string& text) {
    try {
        validate_config(text);
    } catch (const ConfigError& e) {
        return e;
    }
    FAIL("configuration was accepted");
    return ConfigError(std::vector<ConfigIssue>{});
}

std::vector<std::string> files_in(const fs::path& dir) {
    std::vector<std::string> out;
    for (const auto& e : fs::recursive_directory_iterator(dir)) {
        if (e.is_regular_file()) out.push_back(fs::relative(e.path(), dir).string());
    }
    std::sort(out.begin(), out.end());
    return out;
}

}  // namespace

TEST_CASE("minimal config picks up defaults") {
    const SweepSpec s = validate_config(
        R"({"mode": "fixed-light-shift", "lattice": {"light_shift": -300}, "grid": [30, 60]})");
    REQUIRE(s.points.size() == 2);
    CHECK(s.mode == SweepMode::fixed_light_shift);
    CHECK(s.points[0].settings.n_traj == 5000);
    CHECK(s.resolved["lattice"]["theta_deg"] == 30.0);
    CHECK(s.resolved["lattice"]["gamma"] == 786.0);
    CHECK(s.points[1].params.pump_rate() == doctest::Approx(60.0));
    CHECK(s.points[1].params.light_shift() == doctest::Approx(-300.0));
    CHECK(s.points[0].settings.init.temperature == doctest::Approx(300.0));
    // durations are given in pump times by default
    CHECK(s.points[0].settings.relax_duration == doctest::Approx(1500.0 / 30.0));
    CHECK(s.points[0].settings.seed != s.points[1].settings.seed);
}

TEST_CASE("fixed-detuning grid maps intensity") {
    const SweepSpec s = validate_config(
        R"({"mode": "fixed-detuning", "lattice": {"detuning_gamma": -10}, "grid": [1, 2]})");
    REQUIRE(s.points.size() == 2);
    const double r = s.points[1].params.light_shift() / s.points[0].params.light_shift();
    CHECK(r == doctest::Approx(2.0));
    CHECK(s.points[0].params.light_shift() / s.points[0].params.pump_rate() ==
          doctest::Approx(-10.0));
}

TEST_CASE("config validation diagnostics") {
    SUBCASE("positive light shift") {
        const auto e = config_error(
            R"({"mode": "fixed-light-shift", "lattice": {"light_shift": 300}, "grid": [30]})");
        CHECK(has_issue(e, "/lattice/light_shift"));
    }
    SUBCASE("dt bound") {
        const auto e = config_error(R"({"mode": "fixed-light-shift", "lattice": {"light_shift": -300},
            "grid": [30], "simulation": {"dt": 0.1}})");
        CHECK(has_issue(e, "/simulation/dt", "< 0.1"));
    }
    SUBCASE("empty grid") {
        const auto e = config_error(
            R"({"mode": "fixed-light-shift", "lattice": {"light_shift": -300}, "grid": []})");
        CHECK(has_issue(e, "/grid"));
    }
    SUBCASE("decreasing grid") {
        const auto e = config_error(
            R"({"mode": "fixed-light-shift", "lattice": {"light_shift": -300}, "grid": [60, 30]})");
        CHECK(has_issue(e, "/grid/1/value", "increasing"));
    }
    SUBCASE("unknown key and bad mode are both reported") {
        const auto e = config_error(
            R"({"mode": "sideways", "lattice": {"light_shift": -300, "bogus": 1}, "grid": [30]})");
        CHECK(has_issue(e, "/mode"));
        CHECK(has_issue(e, "/lattice/bogus", "unknown key"));
    }
    SUBCASE("syntax error location") {
        const auto e = config_error("{\n \"mode\": \"fixed-light-shift\",\n \"grid\": [1,,2]\n}");
        CHECK(e.line() == 3);
        CHECK(e.column() > 0);
    }
}

TEST_CASE("sweep output is reproducible and replayable") {
    const fs::path a = scratch("a"), b = scratch("b"), c = scratch("c");
    SweepSpec spec = validate_config(std::string(tiny));
    override_out_dir(spec, a.string());
    const SweepOutcome first = run_sweep(spec);
    REQUIRE(first.points.size() == 1);
    CHECK(first.exit_code() == 0);
    CHECK(first.points[0].status == PointStatus::ok);

    override_out_dir(spec, b.string());
    override_threads(spec, 3);
    const SweepOutcome second = run_sweep(spec);
    CHECK(second.manifest_hash == first.manifest_hash);

    const auto names = files_in(a);
    REQUIRE(names == files_in(b));
    for (const auto& n : names) {
        if (n == "manifest.json") continue;
        CAPTURE(n);
        CHECK(slurp(a / n) == slurp(b / n));
    }
    CHECK(slurp(a / "results.csv").rfind("# sisyphus results v1 manifest " + first.manifest_hash, 0) ==
          0);

    const ReplayReport r = replay(first.manifest_path, c.string());
    CHECK(r.identical());

    for (const fs::path& p : {a, b, c}) fs::remove_all(p);
}

TEST_CASE("seed override re-derives point seeds") {
    SweepSpec spec = validate_config(std::string(tiny));
    const std::uint64_t before = spec.points[0].settings.seed;
    override_seed(spec, 999);
    CHECK(spec.points[0].settings.seed != before);
    CHECK(spec.resolved["seed"] == 999);
}
