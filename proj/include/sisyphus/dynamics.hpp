#pragma once

// Semiclassical Monte-Carlo dynamics: Hamiltonian motion on the current
// sublevel's potential surface, Poissonian optical-pumping jumps between the
// surfaces, and photon-recoil kicks at each scattering event.

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "sisyphus/lattice.hpp"
#include "sisyphus/rng.hpp"
#include "sisyphus/state.hpp"
#include "sisyphus/trapping.hpp"

namespace sisyphus {

/// Model switches. Defaults are the physical model; the others exist for
/// oracle tests and sensitivity studies.
struct DynamicsOptions {
    bool pumping = true;             // sublevel jumps
    bool potential = true;           // dipole force and light shifts
    bool motion = true;              // position and momentum updates
    bool recoil = true;              // photon recoil at scattering events
    bool elastic_scattering = false; // recoil from sublevel-preserving scattering
};

/// Largest total event rate used for the jump-probability bound.
double max_event_rate(const LatticeParams& params, const DynamicsOptions& options);

/// min(0.01 * fastest oscillation period at a well bottom, 0.099 / max event rate).
double default_time_step(const LatticeParams& params, const DynamicsOptions& options = {});

struct SimulationSchedule {
    double dt = 0.0;
    double t_max = 0.0;
    std::vector<double> sample_times;
    std::size_t n_traj = 5000;
    std::uint64_t master_seed = 1;
    Vec2 external_force = Vec2::Zero();

    /// Validating factory; dt <= 0 selects default_time_step().
    static SimulationSchedule make(const LatticeParams& params, const DynamicsOptions& options,
                                   double dt, double t_max, std::vector<double> sample_times,
                                   std::size_t n_traj, std::uint64_t master_seed,
                                   Vec2 external_force = Vec2::Zero());

    /// Throws InvalidParameter unless dt > 0, dt * max rate < 0.1 and the
    /// sample times are strictly increasing inside [0, t_max].
    void validate(const LatticeParams& params, const DynamicsOptions& options) const;
};

/// n + 1 evenly spaced times from 0 to t_max inclusive.
std::vector<double> uniform_sample_times(double t_max, std::size_t n);

enum class PositionLaw { uniform_cell, well_bottom };

struct InitialDistribution {
    double temperature = 0.0;
    PositionLaw position_law = PositionLaw::uniform_cell;
};

/// Fair-coin sublevel, position per the law, Gaussian momenta at the given
/// temperature (zero momenta when temperature is 0).
AtomState sample_initial_state(const LatticeParams& params, const InitialDistribution& init,
                               RandomStream& rng);

/// One integration step of length schedule.dt: velocity Verlet on the
/// current surface, then a Bernoulli jump with probability rate * dt.
AtomState step(const AtomState& state, const LatticeParams& params,
               const SimulationSchedule& schedule, RandomStream& rng,
               const DynamicsOptions& options = {});

/// Records at exactly schedule.sample_times. Pure function of the inputs,
/// the master seed and the trajectory index.
std::vector<AtomState> simulate_trajectory(const LatticeParams& params,
                                           const SimulationSchedule& schedule,
                                           const InitialDistribution& init,
                                           std::size_t trajectory_index,
                                           const DynamicsOptions& options = {});

/// Same, starting from a given state (its time is reset to 0).
std::vector<AtomState> simulate_trajectory_from(const LatticeParams& params,
                                                const SimulationSchedule& schedule,
                                                const AtomState& initial,
                                                std::size_t trajectory_index,
                                                const DynamicsOptions& options = {});

/// Per-axis ensemble statistics at each sample time.
struct AxisSeries {
    std::vector<double> mean_velocity;
    std::vector<double> temperature;         // variance of v (M = k_B = 1)
    std::vector<double> temperature_stderr;  // delta method on the variance
    std::vector<double> mean_displacement;   // <j(t) - j(0)>
    std::vector<double> msd;                 // <(j(t) - j(0))^2>
    std::vector<double> msd_stderr;
};

/// Kinetic temperature of the atoms currently in one motion class.
struct ClassSeries {
    std::vector<std::size_t> count;
    std::array<std::vector<double>, 2> temperature;  // NaN when count < 2
};

struct EnsembleSeries {
    std::vector<double> times;
    std::array<AxisSeries, 2> axes;
    std::vector<double> trapped_fraction;
    ClassSeries trapped;
    ClassSeries traveling;
    std::size_t n_traj = 0;
    EscapeEnergies escape;
    /// Full ensemble states at the retained sample indices, ordered by
    /// trajectory index.
    std::vector<std::size_t> snapshot_indices;
    std::vector<std::vector<AtomState>> snapshots;

    const AxisSeries& axis(Axis a) const { return axes[index(a)]; }
    /// Snapshot at sample index i; throws InvalidParameter if not retained.
    const std::vector<AtomState>& snapshot(std::size_t sample_index) const;
};

struct EnsembleOptions {
    DynamicsOptions dynamics;
    unsigned threads = 1;
    std::vector<std::size_t> retain_samples;  // sample indices to keep in full
    bool retain_all = false;
};

/// Runs schedule.n_traj trajectories drawn from `init`. Trajectories are
/// reduced in fixed blocks combined in index order, so the result is
/// bit-identical for any thread count.
EnsembleSeries ensemble_run(const LatticeParams& params, const SimulationSchedule& schedule,
                            const InitialDistribution& init, const EnsembleOptions& options = {});

/// Runs one trajectory per given initial state (schedule.n_traj is ignored).
EnsembleSeries ensemble_run(const LatticeParams& params, const SimulationSchedule& schedule,
                            std::span<const AtomState> initial_states,
                            const EnsembleOptions& options = {});

enum class DumpFormat { csv, binary };

/// Raw trajectory dump of every retained snapshot; see docs/formats.md.
void write_trajectory_dump(const EnsembleSeries& series, const std::string& path,
                           DumpFormat format);

}  // namespace sisyphus
