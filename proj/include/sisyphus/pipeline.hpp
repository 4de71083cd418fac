#pragma once

// One parameter point end to end: relaxation from a hot start, steady-state
// diffusion, drift under applied forces, trapped/traveling split and a
// synthetic RIR spectrum of the final ensemble.

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "sisyphus/dynamics.hpp"
#include "sisyphus/observables.hpp"
#include "sisyphus/rir.hpp"

namespace sisyphus {

struct DriftSettings {
    bool enabled = true;
    /// Forces chosen so that the expected drift is fraction * sqrt(T_j),
    /// using the Einstein friction estimate as the scale.
    std::vector<double> velocity_fractions{0.03, 0.06, 0.09};
    /// Explicit forces per axis; override the fractions when non-empty.
    std::array<std::vector<double>, 2> forces;
    double settle_duration = 0.0;
    double measure_duration = 0.0;
    std::size_t n_traj = 0;  // 0: reuse the main ensemble size
};

struct PointSettings {
    std::size_t n_traj = 5000;
    double dt = 0.0;  // 0: default_time_step()
    double relax_duration = 0.0;
    double steady_duration = 0.0;
    std::size_t relax_samples = 60;  // sample intervals inside the relax window
    /// Relaxation fits use the first fit_span / Gamma_T of the relax window;
    /// 0 fits the whole window.
    double fit_span = 5.0;
    InitialDistribution init;
    DynamicsOptions dynamics;
    DriftSettings drift;
    bool rir = true;
    double rir_half_angle = 12.5 * std::numbers::pi / 180.0;
    std::size_t rir_points = 201;
    std::uint64_t seed = 1;
    unsigned threads = 1;
    bool keep_snapshots = false;
};

struct AxisResult {
    RelaxationFit relaxation;
    std::optional<DiffusionFit> diffusion;
    TimeWindow diffusion_window;
    Estimate steady_temperature;
    Estimate alpha_einstein;
    std::vector<DriftPoint> drift_points;
    std::optional<FrictionFit> drift;
    std::string drift_error;
    double steady_ks_p = nan_value;
    std::vector<std::string> flags;
};

struct PointResult {
    explicit PointResult(const LatticeParams& p) : params(p) {}
    LatticeParams params;
    EnsembleSeries series;
    std::array<AxisResult, 2> axes;
    std::optional<PopulationSplit> population;
    std::optional<RirSpectrum> spectrum;
    std::optional<RirFit> rir_fit;
    TimeWindow steady_window;

    const AxisResult& axis(Axis a) const { return axes[index(a)]; }
    TransportResult transport(Axis a) const;
};

/// Seed of an independent sub-run derived from a master seed and a tag.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t tag);

/// Velocity of each atom along `axis` averaged over [t1, t2] from the
/// displacement, as mean and standard error over the ensemble.
DriftPoint measure_drift(const LatticeParams& params, std::span<const AtomState> start,
                         Axis axis, double force, double settle, double measure,
                         std::size_t n_traj, std::uint64_t seed, const EnsembleOptions& options);

/// Runs the whole analysis. Fatal problems (simulation errors, relaxation
/// fit failures) propagate as exceptions; recoverable ones are recorded in
/// the per-axis flags.
PointResult run_point(const LatticeParams& params, const PointSettings& settings);

}  // namespace sisyphus
