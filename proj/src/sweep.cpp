#include "sisyphus/sweep.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <set>
#include <sstream>

#ifndef SISYPHUS_VERSION
#define SISYPHUS_VERSION "0.0.0"
#endif

namespace sisyphus {

namespace fs = std::filesystem;
using nlohmann::json;

std::string version_tag() { return SISYPHUS_VERSION; }

ConfigError::ConfigError(std::vector<ConfigIssue> issues)
    : Error([&] {
          std::string s = "invalid configuration:";
          for (const auto& i : issues) s += "\n  " + i.path + ": " + i.reason;
          return s;
      }()),
      issues_(std::move(issues)) {}

ConfigError::ConfigError(const std::string& what, std::size_t line, std::size_t column)
    : Error("syntax error at line " + std::to_string(line) + ", column " +
            std::to_string(column) + ": " + what),
      line_(line),
      column_(column) {}

namespace {

constexpr double default_gamma = 786.0;  // Rb-85 D2 width over 2 omega_r

// Walks a JSON object, filling defaults and collecting issues.
class Reader {
public:
    Reader(json& node, std::string path, std::vector<ConfigIssue>& issues)
        : node_(node), path_(std::move(path)), issues_(issues) {
        if (!node_.is_object()) {
            fail("", "expected an object");
            node_ = json::object();
        }
    }

    ~Reader() {
        for (auto it = node_.begin(); it != node_.end(); ++it) {
            if (!known_.count(it.key())) fail(it.key(), "unknown key");
        }
    }

    void fail(const std::string& key, const std::string& reason) {
        issues_.push_back({key.empty() ? path_ : path_ + "/" + key, reason});
    }
    std::string path(const std::string& key) const { return path_ + "/" + key; }
    bool has(const std::string& key) const { return node_.contains(key); }
    void mark(const std::string& key) { known_.insert(key); }

    double number(const std::string& key, std::optional<double> fallback,
                  const std::function<bool(double)>& check = {}, const char* rule = "") {
        mark(key);
        if (!has(key)) {
            if (!fallback) {
                fail(key, "required");
                return std::nan("");
            }
            node_[key] = *fallback;
            return *fallback;
        }
        const json& v = node_[key];
        if (!v.is_number()) {
            fail(key, "expected a number");
            return std::nan("");
        }
        const double d = v.get<double>();
        if (!std::isfinite(d) || (check && !check(d))) {
            fail(key, std::string("must be ") + rule);
            return std::nan("");
        }
        return d;
    }

    std::uint64_t count(const std::string& key, std::uint64_t fallback, std::uint64_t min) {
        mark(key);
        if (!has(key)) {
            node_[key] = fallback;
            return fallback;
        }
        const json& v = node_[key];
        if (!v.is_number_integer() || v.get<std::int64_t>() < static_cast<std::int64_t>(min)) {
            fail(key, "expected an integer >= " + std::to_string(min));
            return fallback;
        }
        return v.get<std::uint64_t>();
    }

    bool boolean(const std::string& key, bool fallback) {
        mark(key);
        if (!has(key)) {
            node_[key] = fallback;
            return fallback;
        }
        if (!node_[key].is_boolean()) {
            fail(key, "expected true or false");
            return fallback;
        }
        return node_[key].get<bool>();
    }

    std::string choice(const std::string& key, std::optional<std::string> fallback,
                       const std::vector<std::string>& allowed) {
        mark(key);
        if (!has(key)) {
            if (!fallback) {
                fail(key, "required");
                return {};
            }
            node_[key] = *fallback;
            return *fallback;
        }
        const json& v = node_[key];
        if (v.is_string() &&
            std::find(allowed.begin(), allowed.end(), v.get<std::string>()) != allowed.end()) {
            return v.get<std::string>();
        }
        std::string list;
        for (const auto& a : allowed) list += (list.empty() ? "" : ", ") + a;
        fail(key, "expected one of: " + list);
        return fallback.value_or(std::string{});
    }

    std::string text(const std::string& key, const std::string& fallback) {
        mark(key);
        if (!has(key)) {
            node_[key] = fallback;
            return fallback;
        }
        if (!node_[key].is_string() || node_[key].get<std::string>().empty()) {
            fail(key, "expected a non-empty string");
            return fallback;
        }
        return node_[key].get<std::string>();
    }

    std::vector<double> numbers(const std::string& key, const std::vector<double>& fallback,
                                const std::function<bool(double)>& check, const char* rule) {
        mark(key);
        if (!has(key)) {
            node_[key] = fallback;
            return fallback;
        }
        const json& v = node_[key];
        if (!v.is_array()) {
            fail(key, "expected an array of numbers");
            return fallback;
        }
        std::vector<double> out;
        for (std::size_t i = 0; i < v.size(); ++i) {
            if (!v[i].is_number() || !check(v[i].get<double>())) {
                issues_.push_back({path(key) + "/" + std::to_string(i), std::string("must be ") + rule});
                continue;
            }
            out.push_back(v[i].get<double>());
        }
        return out;
    }

    json& child(const std::string& key) {
        mark(key);
        if (!has(key)) node_[key] = json::object();
        return node_[key];
    }

private:
    json& node_;
    std::string path_;
    std::vector<ConfigIssue>& issues_;
    std::set<std::string> known_;
};

bool positive(double v) { return v > 0.0; }
bool non_negative(double v) { return v >= 0.0; }
bool negative(double v) { return v < 0.0; }

struct Durations {
    double relax = 0, steady = 0, settle = 0, measure = 0;
};

std::pair<std::size_t, std::size_t> line_column(const std::string& text, std::size_t byte) {
    std::size_t line = 1, column = 1;
    for (std::size_t i = 0; i < std::min(byte, text.size()); ++i) {
        if (text[i] == '\n') {
            ++line;
            column = 1;
        } else {
            ++column;
        }
    }
    return {line, column};
}

std::string fmt(double v) {
    if (std::isnan(v)) return "nan";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

std::string fmt(const Estimate& e) { return fmt(e.value) + "," + fmt(e.error); }

std::string join(const std::vector<std::string>& items, char sep) {
    std::string s;
    for (const auto& i : items) s += (s.empty() ? "" : std::string(1, sep)) + i;
    return s;
}

std::string utc_timestamp() {
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

std::string point_name(std::size_t i) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "p%03zu", i);
    return buf;
}

// The reproducible part of the manifest: the resolved physics and seeds,
// without the output location and worker count.
json reproducible_core(const json& resolved) {
    json core = resolved;
    core.erase("threads");
    if (core.contains("output")) core["output"].erase("dir");
    return json{{"version", version_tag()}, {"config", core}};
}

}  // namespace

SweepSpec validate_config(const std::string& text) {
    json config;
    try {
        config = json::parse(text, nullptr, true, true);
    } catch (const json::parse_error& e) {
        const auto [line, column] = line_column(text, e.byte == 0 ? 0 : e.byte - 1);
        std::string what = e.what();
        if (const auto p = what.find("column "); p != std::string::npos) {
            if (const auto q = what.find(": ", p); q != std::string::npos) what = what.substr(q + 2);
        }
        throw ConfigError(what, line, column);
    }
    return validate_config(config);
}

SweepSpec validate_config(const json& input) {
    std::vector<ConfigIssue> issues;
    SweepSpec spec;
    json config = input;

    std::string mode_name;
    double theta = 0, gamma = 0, fixed = 0;
    bool detuning_in_gamma = false;
    PointSettings base;
    DurationUnit unit = DurationUnit::pump;
    Durations durations;
    std::optional<double> t_init;
    double t_init_per_shift = 1.0;
    std::vector<double> fractions;
    std::array<std::vector<double>, 2> forces;
    {
        Reader root(config, "", issues);
        mode_name = root.choice("mode", std::nullopt, {"fixed-detuning", "fixed-light-shift"});
        spec.mode = mode_name == "fixed-detuning" ? SweepMode::fixed_detuning
                                                  : SweepMode::fixed_light_shift;
        spec.seed = root.count("seed", 1, 0);
        spec.threads = static_cast<unsigned>(root.count("threads", 1, 1));

        {
            Reader lat(root.child("lattice"), "/lattice", issues);
            theta = lat.number("theta_deg", 30.0, [](double t) { return t > 0 && t < 90; },
                               "in (0, 90)") *
                    std::numbers::pi / 180.0;
            gamma = lat.number("gamma", default_gamma, positive, "positive");
            if (spec.mode == SweepMode::fixed_detuning) {
                if (lat.has("detuning") == lat.has("detuning_gamma")) {
                    lat.mark("detuning");
                    lat.mark("detuning_gamma");
                    lat.fail("detuning", "give exactly one of detuning, detuning_gamma");
                } else if (lat.has("detuning")) {
                    fixed = lat.number("detuning", std::nullopt, negative,
                                       "negative (red detuning)");
                } else {
                    detuning_in_gamma = true;
                    fixed = lat.number("detuning_gamma", std::nullopt, negative,
                                       "negative (red detuning)");
                }
            } else {
                fixed = lat.number("light_shift", std::nullopt, negative,
                                   "negative (red detuning)");
            }
        }

        {
            Reader sim(root.child("simulation"), "/simulation", issues);
            base.n_traj = sim.count("n_traj", 5000, 1);
            base.dt = sim.number("dt", 0.0, non_negative, ">= 0 (0 selects the default)");
            unit = sim.choice("duration_unit", "pump", {"pump", "internal"}) == "pump"
                       ? DurationUnit::pump
                       : DurationUnit::internal;
            durations.relax = sim.number("relax", 1500.0, positive, "positive");
            durations.steady = sim.number("steady", 1500.0, positive, "positive");
            base.relax_samples = sim.count("relax_samples", 300, 5);
            base.fit_span = sim.number("fit_span", 5.0, non_negative, ">= 0");
            if (sim.has("initial_temperature")) {
                t_init = sim.number("initial_temperature", std::nullopt, positive, "positive");
                sim.mark("initial_temperature_per_light_shift");
                if (sim.has("initial_temperature_per_light_shift")) {
                    sim.fail("initial_temperature_per_light_shift",
                             "conflicts with initial_temperature");
                }
            } else {
                t_init_per_shift =
                    sim.number("initial_temperature_per_light_shift", 1.0, positive, "positive");
            }
            base.init.position_law =
                sim.choice("position_law", "uniform-cell", {"uniform-cell", "well-bottom"}) ==
                        "well-bottom"
                    ? PositionLaw::well_bottom
                    : PositionLaw::uniform_cell;
        }

        {
            Reader dyn(root.child("dynamics"), "/dynamics", issues);
            base.dynamics.pumping = dyn.boolean("pumping", true);
            base.dynamics.potential = dyn.boolean("potential", true);
            base.dynamics.motion = dyn.boolean("motion", true);
            base.dynamics.recoil = dyn.boolean("recoil", true);
            base.dynamics.elastic_scattering = dyn.boolean("elastic_scattering", false);
        }

        {
            Reader dr(root.child("drift"), "/drift", issues);
            base.drift.enabled = dr.boolean("enabled", true);
            fractions = dr.numbers("velocity_fractions", {0.03, 0.06, 0.09}, positive, "positive");
            forces[0] = dr.numbers("forces_x", {}, [](double f) { return f != 0.0; }, "non-zero");
            forces[1] = dr.numbers("forces_z", {}, [](double f) { return f != 0.0; }, "non-zero");
            durations.settle = dr.number("settle", 100.0, non_negative, ">= 0");
            durations.measure = dr.number("measure", 500.0, positive, "positive");
            base.drift.n_traj = dr.count("n_traj", 0, 0);
            if (base.drift.enabled && fractions.empty() &&
                (forces[0].empty() || forces[1].empty())) {
                dr.fail("velocity_fractions", "needed unless forces_x and forces_z are both set");
            }
        }
        base.drift.velocity_fractions = fractions;
        base.drift.forces = forces;

        {
            Reader rir(root.child("rir"), "/rir", issues);
            base.rir = rir.boolean("enabled", true);
            base.rir_half_angle = rir.number("half_angle_deg", 12.5,
                                             [](double a) { return a > 0 && a < 90; },
                                             "in (0, 90)") *
                                  std::numbers::pi / 180.0;
            base.rir_points = rir.count("points", 201, 3);
        }

        {
            Reader out(root.child("output"), "/output", issues);
            spec.out_dir = out.text("dir", "out");
            spec.write_series = out.boolean("series", true);
            const std::string dump = out.choice("dump", "none", {"none", "csv", "binary"});
            if (dump == "csv") spec.dump = DumpFormat::csv;
            if (dump == "binary") spec.dump = DumpFormat::binary;
        }
        base.keep_snapshots = spec.dump.has_value();
        base.threads = spec.threads;

        if (root.has("physical")) {
            Reader phys(root.child("physical"), "/physical", issues);
            const double lambda = phys.number("wavelength_m", std::nullopt, positive, "positive");
            const double mass = phys.number("mass_kg", std::nullopt, positive, "positive");
            const double width = phys.number("gamma_per_s", std::nullopt, positive, "positive");
            if (std::isfinite(lambda) && std::isfinite(mass) && std::isfinite(width)) {
                spec.units = UnitSystem::physical(lambda, mass, width);
            }
        } else {
            root.mark("physical");
        }

        root.mark("grid");
        if (!config.contains("grid") || !config["grid"].is_array() || config["grid"].empty()) {
            root.fail("grid", "expected a non-empty array");
        }
    }
    if (!issues.empty()) throw ConfigError(std::move(issues));

    const double detuning = detuning_in_gamma ? fixed * gamma : fixed;
    json& grid = config["grid"];
    std::vector<double> values;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const std::string path = "/grid/" + std::to_string(i);
        json entry = grid[i].is_number() ? json{{"value", grid[i]}} : grid[i];
        PointSettings s = base;
        Durations d = durations;
        std::optional<double> point_t_init = t_init;
        double value = std::nan("");
        {
            Reader g(entry, path, issues);
            value = g.number("value", std::nullopt, positive, "positive");
            if (g.has("n_traj")) s.n_traj = g.count("n_traj", s.n_traj, 1);
            if (g.has("dt")) s.dt = g.number("dt", s.dt, non_negative, ">= 0");
            if (g.has("relax")) d.relax = g.number("relax", d.relax, positive, "positive");
            if (g.has("steady")) d.steady = g.number("steady", d.steady, positive, "positive");
            if (g.has("initial_temperature")) {
                point_t_init = g.number("initial_temperature", 1.0, positive, "positive");
            }
        }
        grid[i] = grid[i].is_number() ? grid[i] : entry;
        if (!std::isfinite(value)) continue;
        if (!values.empty() && !(value > values.back())) {
            issues.push_back({path + "/value", "grid must be strictly increasing"});
        }
        values.push_back(value);

        std::optional<LatticeParams> params;
        try {
            params = spec.mode == SweepMode::fixed_detuning
                         ? LatticeParams::from_intensity(theta, gamma, detuning, value)
                         : LatticeParams::from_light_shift_and_pump(theta, gamma, fixed, value);
        } catch (const InvalidParameter& e) {
            issues.push_back({path, e.what()});
            continue;
        }
        const double scale = unit == DurationUnit::pump ? 1.0 / params->pump_rate() : 1.0;
        s.relax_duration = d.relax * scale;
        s.steady_duration = d.steady * scale;
        s.drift.settle_duration = d.settle * scale;
        s.drift.measure_duration = d.measure * scale;
        s.init.temperature =
            point_t_init ? *point_t_init : t_init_per_shift * std::abs(params->light_shift());
        if (s.drift.enabled && !(s.drift.measure_duration > 0.0)) {
            issues.push_back({"/drift/measure", "must be positive"});
        }
        if (s.dt > 0.0) {
            const double p = s.dt * max_event_rate(*params, s.dynamics);
            if (!(p < 0.1)) {
                issues.push_back({grid[i].is_object() && grid[i].contains("dt") ? path + "/dt"
                                                                                 : "/simulation/dt",
                                  "jump probability dt * max event rate = " + fmt(p) +
                                      " violates the bound < 0.1 at grid point " +
                                      std::to_string(i)});
            }
        }
        const double interval = s.relax_duration / static_cast<double>(s.relax_samples);
        const double step = s.dt > 0.0 ? s.dt : default_time_step(*params, s.dynamics);
        if (interval < step) {
            issues.push_back({"/simulation/relax_samples",
                              "sample interval " + fmt(interval) + " is shorter than dt " +
                                  fmt(step) + " at grid point " + std::to_string(i)});
        }
        s.seed = derive_seed(spec.seed, 1000 + i);
        spec.points.push_back(GridPoint{value, *params, s});
    }
    if (!issues.empty()) throw ConfigError(std::move(issues));
    spec.resolved = config;
    return spec;
}

void override_seed(SweepSpec& spec, std::uint64_t seed) {
    spec.seed = seed;
    spec.resolved["seed"] = seed;
    for (std::size_t i = 0; i < spec.points.size(); ++i) {
        spec.points[i].settings.seed = derive_seed(seed, 1000 + i);
    }
}

void override_threads(SweepSpec& spec, unsigned threads) {
    if (threads == 0) throw InvalidParameter("threads must be >= 1");
    spec.threads = threads;
    spec.resolved["threads"] = threads;
    for (auto& p : spec.points) p.settings.threads = threads;
}

void override_out_dir(SweepSpec& spec, const std::string& dir) {
    spec.out_dir = dir;
    spec.resolved["output"]["dir"] = dir;
}

std::string status_name(PointStatus s) {
    switch (s) {
        case PointStatus::ok: return "ok";
        case PointStatus::simulation_failed: return "simulation-failed";
        case PointStatus::fit_failed: return "fit-failed";
        case PointStatus::config_failed: return "config-failed";
    }
    return "unknown";
}

int SweepOutcome::exit_code() const {
    bool sim = false, fit = false;
    for (const auto& p : points) {
        sim |= p.status == PointStatus::simulation_failed || p.status == PointStatus::config_failed;
        fit |= p.status == PointStatus::fit_failed;
    }
    return sim ? 2 : fit ? 3 : 0;
}

std::string sha256_hex(const std::string& bytes) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr);
    std::string hex;
    char buf[3];
    for (unsigned i = 0; i < len; ++i) {
        std::snprintf(buf, sizeof buf, "%02x", digest[i]);
        hex += buf;
    }
    return hex;
}

std::string sha256_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InvalidParameter("cannot read " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return sha256_hex(ss.str());
}

namespace {

void write_series_csv(const EnsembleSeries& s, const std::string& path) {
    std::ofstream out(path);
    out << "time,T_x,T_x_err,T_z,T_z_err,v_x,v_z,msd_x,msd_x_err,msd_z,msd_z_err,"
           "trapped_fraction\n";
    const AxisSeries& x = s.axis(Axis::x);
    const AxisSeries& z = s.axis(Axis::z);
    for (std::size_t k = 0; k < s.times.size(); ++k) {
        out << fmt(s.times[k]) << ',' << fmt(x.temperature[k]) << ','
            << fmt(x.temperature_stderr[k]) << ',' << fmt(z.temperature[k]) << ','
            << fmt(z.temperature_stderr[k]) << ',' << fmt(x.mean_velocity[k]) << ','
            << fmt(z.mean_velocity[k]) << ',' << fmt(x.msd[k]) << ',' << fmt(x.msd_stderr[k])
            << ',' << fmt(z.msd[k]) << ',' << fmt(z.msd_stderr[k]) << ','
            << fmt(s.trapped_fraction[k]) << '\n';
    }
}

const char* results_header =
    "point,value,light_shift,pump_rate,detuning,intensity,axis,status,gamma_T,gamma_T_err,"
    "T_i,T_i_err,T_f,T_f_err,goodness,runs_z,T_steady,T_steady_err,D_s,D_s_err,alpha_drift,"
    "alpha_drift_err,alpha_einstein,alpha_einstein_err,trapped_fraction,trapped_fraction_err,"
    "flags";

}  // namespace

SweepOutcome run_sweep(const SweepSpec& spec) {
    const fs::path dir(spec.out_dir);
    fs::create_directories(dir / "points");
    SweepOutcome outcome;

    const json core = reproducible_core(spec.resolved);
    outcome.manifest_hash = sha256_hex(core.dump());

    std::ostringstream results, drift;
    results << "# sisyphus results v1 manifest " << outcome.manifest_hash << '\n'
            << results_header;
    if (spec.units.is_physical()) results << ",gamma_T_per_s,T_f_uK,T_steady_uK,D_s_m2_per_s";
    results << '\n';
    drift << "# sisyphus drift v1 manifest " << outcome.manifest_hash << '\n'
          << "point,axis,force,velocity,velocity_err\n";

    json point_entries = json::array();
    std::vector<std::string> files;
    for (std::size_t i = 0; i < spec.points.size(); ++i) {
        const GridPoint& gp = spec.points[i];
        const LatticeParams& p = gp.params;
        PointOutcome po;
        try {
            po.result = run_point(p, gp.settings);
        } catch (const FitFailed& e) {
            po.status = PointStatus::fit_failed;
            po.message = e.what();
        } catch (const InsufficientData& e) {
            po.status = PointStatus::fit_failed;
            po.message = e.what();
        } catch (const InvalidParameter& e) {
            po.status = PointStatus::config_failed;
            po.message = e.what();
        } catch (const Error& e) {
            po.status = PointStatus::simulation_failed;
            po.message = e.what();
        }

        json entry{{"index", i},
                   {"value", gp.value},
                   {"status", status_name(po.status)},
                   {"message", po.message},
                   {"seed", gp.settings.seed}};
        json point_files = json::array();
        const std::string name = point_name(i);
        for (Axis ax : both_axes) {
            results << i << ',' << fmt(gp.value) << ',' << fmt(p.light_shift()) << ','
                    << fmt(p.pump_rate()) << ',' << fmt(p.detuning()) << ','
                    << fmt(p.intensity()) << ',' << axis_name(ax) << ','
                    << status_name(po.status) << ',';
            if (!po.result) {
                for (int k = 0; k < 18; ++k) results << "nan,";
                if (spec.units.is_physical()) results << ",nan,nan,nan,nan";
                results << '\n';
                continue;
            }
            const PointResult& r = *po.result;
            const AxisResult& a = r.axis(ax);
            const TransportResult t = r.transport(ax);
            Estimate trapped;
            if (r.population) trapped = r.population->steady_trapped_fraction;
            results << fmt(a.relaxation.gamma) << ',' << fmt(a.relaxation.initial_temperature)
                    << ',' << fmt(a.relaxation.final_temperature) << ','
                    << fmt(a.relaxation.goodness) << ',' << fmt(a.relaxation.runs_z) << ','
                    << fmt(a.steady_temperature) << ',' << fmt(t.diffusion) << ','
                    << fmt(t.alpha_drift) << ',' << fmt(t.alpha_einstein) << ',' << fmt(trapped)
                    << ',' << join(a.flags, ';');
            if (spec.units.is_physical()) {
                const UnitSystem& u = spec.units;
                results << ',' << fmt(u.rate_to_si(a.relaxation.gamma.value)) << ','
                        << fmt(u.temperature_to_si(a.relaxation.final_temperature.value) * 1e6)
                        << ',' << fmt(u.temperature_to_si(a.steady_temperature.value) * 1e6)
                        << ',' << fmt(u.diffusion_to_si(t.diffusion.value));
            }
            results << '\n';
            for (const auto& d : a.drift_points) {
                drift << i << ',' << axis_name(ax) << ',' << fmt(d.force) << ','
                      << fmt(d.velocity) << ',' << fmt(d.velocity_error) << '\n';
            }
        }
        if (po.result) {
            const PointResult& r = *po.result;
            if (spec.write_series) {
                const std::string f = "points/" + name + "_series.csv";
                write_series_csv(r.series, (dir / f).string());
                point_files.push_back(f);
            }
            if (r.spectrum) {
                const std::string f = "points/" + name + "_rir.csv";
                write_spectrum_csv(*r.spectrum, (dir / f).string());
                point_files.push_back(f);
            }
            if (spec.dump) {
                const std::string f = "points/" + name +
                                      (*spec.dump == DumpFormat::csv ? "_dump.csv" : "_dump.bin");
                write_trajectory_dump(r.series, (dir / f).string(), *spec.dump);
                point_files.push_back(f);
            }
        }
        for (const auto& f : point_files) files.push_back(f.get<std::string>());
        entry["files"] = point_files;
        point_entries.push_back(entry);
        outcome.points.push_back(std::move(po));
    }

    {
        std::ofstream((dir / "results.csv").string()) << results.str();
        std::ofstream((dir / "drift.csv").string()) << drift.str();
    }
    files.insert(files.begin(), {"results.csv", "drift.csv"});

    json hashes = json::object();
    for (const auto& f : files) hashes[f] = sha256_file((dir / f).string());
    json manifest{{"format", "sisyphus-manifest-1"},
                  {"version", version_tag()},
                  {"timestamp", utc_timestamp()},
                  {"master_seed", spec.seed},
                  {"manifest_hash", outcome.manifest_hash},
                  {"config", spec.resolved},
                  {"points", point_entries},
                  {"files", hashes}};
    outcome.manifest_path = (dir / "manifest.json").string();
    std::ofstream(outcome.manifest_path) << manifest.dump(2) << '\n';
    return outcome;
}

ReplayReport replay(const std::string& manifest_path, const std::string& out_dir,
                    std::optional<unsigned> threads) {
    std::ifstream in(manifest_path);
    if (!in) throw InvalidParameter("cannot read manifest " + manifest_path);
    json manifest;
    try {
        manifest = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError(e.what(), 0, 0);
    }
    if (!manifest.contains("config") || !manifest.contains("files")) {
        throw ConfigError(std::vector<ConfigIssue>{{"", "manifest lacks config or files"}});
    }
    SweepSpec spec = validate_config(manifest["config"]);
    override_out_dir(spec, out_dir);
    if (threads) override_threads(spec, *threads);

    ReplayReport report;
    report.outcome = run_sweep(spec);
    const fs::path dir(out_dir);
    for (const auto& [file, hash] : manifest["files"].items()) {
        const fs::path p = dir / file;
        if (!fs::exists(p)) {
            report.missing.push_back(file);
        } else if (sha256_file(p.string()) != hash.get<std::string>()) {
            report.mismatched.push_back(file);
        }
    }
    return report;
}

}  // namespace sisyphus
