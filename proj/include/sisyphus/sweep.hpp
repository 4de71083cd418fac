#pragma once

// Parameter sweeps driven by a JSON configuration. See docs/formats.md for
// the schema and the output files.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "sisyphus/errors.hpp"
#include "sisyphus/pipeline.hpp"
#include "sisyphus/units.hpp"

namespace sisyphus {

std::string version_tag();

struct ConfigIssue {
    std::string path;  // JSON pointer of the offending key
    std::string reason;
};

/// Invalid configuration. For syntax errors `line`/`column` locate the
/// problem; otherwise `issues` lists every violated constraint.
class ConfigError : public Error {
public:
    explicit ConfigError(std::vector<ConfigIssue> issues);
    ConfigError(const std::string& what, std::size_t line, std::size_t column);

    const std::vector<ConfigIssue>& issues() const noexcept { return issues_; }
    std::size_t line() const noexcept { return line_; }
    std::size_t column() const noexcept { return column_; }

private:
    std::vector<ConfigIssue> issues_;
    std::size_t line_ = 0;
    std::size_t column_ = 0;
};

enum class SweepMode {
    fixed_detuning,     // grid over intensity per beam at fixed detuning
    fixed_light_shift,  // grid over pump rate at fixed light shift
};

enum class DurationUnit { pump, internal };

struct GridPoint {
    double value = 0.0;
    LatticeParams params;
    PointSettings settings;
};

struct SweepSpec {
    SweepMode mode = SweepMode::fixed_light_shift;
    std::vector<GridPoint> points;
    std::uint64_t seed = 1;
    unsigned threads = 1;
    std::string out_dir = "out";
    bool write_series = true;
    std::optional<DumpFormat> dump;
    UnitSystem units;
    /// Config with every default filled in.
    nlohmann::json resolved;
};

/// Parses and validates a configuration. Comments are allowed.
/// Throws ConfigError.
SweepSpec validate_config(const std::string& text);
SweepSpec validate_config(const nlohmann::json& config);
inline SweepSpec validate_config(const char* text) { return validate_config(std::string(text)); }

/// Applies command-line overrides to a validated spec.
void override_seed(SweepSpec& spec, std::uint64_t seed);
void override_threads(SweepSpec& spec, unsigned threads);
void override_out_dir(SweepSpec& spec, const std::string& dir);

enum class PointStatus { ok, simulation_failed, fit_failed, config_failed };
std::string status_name(PointStatus s);

struct PointOutcome {
    PointStatus status = PointStatus::ok;
    std::string message;
    std::optional<PointResult> result;
};

struct SweepOutcome {
    std::vector<PointOutcome> points;
    std::string manifest_path;
    std::string manifest_hash;

    /// 0 success, 2 any simulation failure, 3 any fit failure.
    int exit_code() const;
};

/// Runs every point in order and writes results.csv, drift.csv, per-point
/// series and spectra and manifest.json into spec.out_dir.
SweepOutcome run_sweep(const SweepSpec& spec);

struct ReplayReport {
    SweepOutcome outcome;
    std::vector<std::string> mismatched;  // files whose hash differs
    std::vector<std::string> missing;     // files listed but not produced
    bool identical() const { return mismatched.empty() && missing.empty(); }
};

/// Re-runs a sweep from its manifest into `out_dir` and compares file hashes.
ReplayReport replay(const std::string& manifest_path, const std::string& out_dir,
                    std::optional<unsigned> threads = std::nullopt);

/// Lower-case hex SHA-256 of a byte string or of a file's contents.
std::string sha256_hex(const std::string& bytes);
std::string sha256_file(const std::string& path);

}  // namespace sisyphus
