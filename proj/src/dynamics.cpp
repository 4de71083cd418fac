#include "sisyphus/dynamics.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <cstring>
#include <exception>
#include <fstream>
#include <functional>
#include <limits>
#include <mutex>
#include <thread>

#include "sisyphus/errors.hpp"

namespace sisyphus {

double max_event_rate(const LatticeParams& params, const DynamicsOptions& options) {
    if (!options.pumping) return 0.0;
    // Total scattering out of m is pump_rate * (s_m + s_{-m}/3) <= 2 pump_rate.
    return options.elastic_scattering ? 2.0 * params.pump_rate() : params.max_pump_rate();
}

double default_time_step(const LatticeParams& params, const DynamicsOptions& options) {
    double dt = std::numeric_limits<double>::infinity();
    if (options.potential) {
        const double omega =
            std::max(params.oscillation_frequency_x(), params.oscillation_frequency_z());
        dt = 0.01 * 2.0 * std::numbers::pi / omega;
    }
    const double rate = max_event_rate(params, options);
    if (rate > 0.0) dt = std::min(dt, 0.099 / rate);
    if (!std::isfinite(dt)) dt = 0.01;
    return dt;
}

SimulationSchedule SimulationSchedule::make(const LatticeParams& params,
                                            const DynamicsOptions& options, double dt,
                                            double t_max, std::vector<double> sample_times,
                                            std::size_t n_traj, std::uint64_t master_seed,
                                            Vec2 external_force) {
    SimulationSchedule s;
    s.dt = dt > 0.0 ? dt : default_time_step(params, options);
    s.t_max = t_max;
    s.sample_times = std::move(sample_times);
    s.n_traj = n_traj;
    s.master_seed = master_seed;
    s.external_force = external_force;
    s.validate(params, options);
    return s;
}

void SimulationSchedule::validate(const LatticeParams& params,
                                  const DynamicsOptions& options) const {
    if (!(dt > 0.0) || !std::isfinite(dt)) throw InvalidParameter("dt must be positive");
    const double p = dt * max_event_rate(params, options);
    if (!(p < 0.1)) {
        throw InvalidParameter("dt * max jump rate = " + std::to_string(p) +
                               " violates the jump-probability bound < 0.1");
    }
    if (!(t_max > 0.0)) throw InvalidParameter("t_max must be positive");
    if (sample_times.empty()) throw InvalidParameter("no sample times");
    for (std::size_t i = 0; i < sample_times.size(); ++i) {
        const double t = sample_times[i];
        if (!(t >= 0.0 && t <= t_max)) throw InvalidParameter("sample time outside [0, t_max]");
        if (i > 0 && !(t > sample_times[i - 1])) {
            throw InvalidParameter("sample times must be strictly increasing");
        }
    }
    if (!external_force.allFinite()) throw InvalidParameter("external force must be finite");
}

std::vector<double> uniform_sample_times(double t_max, std::size_t n) {
    std::vector<double> t(n + 1);
    for (std::size_t i = 0; i <= n; ++i) t[i] = t_max * static_cast<double>(i) / n;
    t[n] = t_max;
    return t;
}

AtomState sample_initial_state(const LatticeParams& params, const InitialDistribution& init,
                               RandomStream& rng) {
    if (!(init.temperature >= 0.0)) throw InvalidParameter("initial temperature must be >= 0");
    AtomState s;
    s.sublevel = rng.uniform() < 0.5 ? Sublevel::plus : Sublevel::minus;
    if (init.position_law == PositionLaw::uniform_cell) {
        const double x = rng.uniform() * params.lattice_constant_x();
        const double z = rng.uniform() * params.lattice_constant_z();
        s.position = Vec2(x, z);
    } else {
        s.position = params.well_bottom(s.sublevel);
    }
    const double sigma = std::sqrt(init.temperature);
    const double px = rng.normal();
    const double pz = rng.normal();
    s.momentum = Vec2(sigma * px, sigma * pz);
    return s;
}

namespace {

class Propagator {
public:
    Propagator(const LatticeParams& params, const DynamicsOptions& options, Vec2 external_force)
        : params_(params), options_(options), external_(external_force) {
        const double kx = params.kx();
        const double kz = params.kz();
        beams_ = {Vec2(kx, kz), Vec2(-kx, kz), Vec2(0.0, -kz), Vec2(0.0, -kz)};
    }

    void reset(const AtomState& s) {
        state_ = s;
        evaluate();
    }

    const AtomState& state() const noexcept { return state_; }

    void advance(double h, RandomStream& rng) {
        if (options_.motion) {
            state_.momentum += 0.5 * h * (here_.force + external_);
            state_.position += h * state_.momentum;
            evaluate();
            state_.momentum += 0.5 * h * (here_.force + external_);
        }
        state_.time += h;
        if (!options_.pumping) return;
        const double u = rng.uniform();
        const double p_jump = here_.pump_rate * h;
        if (u < p_jump) {
            state_.sublevel = flipped(state_.sublevel);
            if (options_.recoil) kick(rng);
            evaluate();
        } else if (options_.elastic_scattering && u < p_jump + here_.elastic_rate * h) {
            if (options_.recoil) kick(rng);
        }
    }

private:
    void evaluate() {
        here_ = sample_surface(params_, state_.sublevel, state_.position);
        if (!options_.potential) {
            here_.potential = 0.0;
            here_.force = Vec2::Zero();
        }
    }

    // Absorption from one of the four beams, emission in an isotropic 3D
    // direction projected on (xOz).
    void kick(RandomStream& rng) {
        state_.momentum += beams_[rng.below(4)];
        const double cos_polar = 2.0 * rng.uniform() - 1.0;
        const double azimuth = 2.0 * std::numbers::pi * rng.uniform();
        const double sin_polar = std::sqrt(std::max(0.0, 1.0 - cos_polar * cos_polar));
        state_.momentum += Vec2(sin_polar * std::cos(azimuth), cos_polar);
    }

    const LatticeParams& params_;
    const DynamicsOptions& options_;
    Vec2 external_;
    std::array<Vec2, 4> beams_;
    AtomState state_;
    SurfaceSample here_{};
};

using SampleVisitor = std::function<void(std::size_t, const AtomState&)>;

void propagate(const LatticeParams& params, const SimulationSchedule& schedule,
               const DynamicsOptions& options, const AtomState& initial,
               std::size_t trajectory_index, RandomStream& rng, const SampleVisitor& visit) {
    Propagator prop(params, options, schedule.external_force);
    AtomState start = initial;
    start.time = 0.0;
    prop.reset(start);
    const double dt = schedule.dt;
    const double tol = 1e-9 * dt;
    std::size_t steps = 0;
    for (std::size_t k = 0; k < schedule.sample_times.size(); ++k) {
        const double target = schedule.sample_times[k];
        for (;;) {
            const double remaining = target - prop.state().time;
            if (remaining <= tol) break;
            const bool last = remaining < dt + tol;
            prop.advance(last ? remaining : dt, rng);
            ++steps;
            if (!prop.state().is_finite()) throw IntegrationDiverged(trajectory_index, steps);
            if (last) break;
        }
        AtomState s = prop.state();
        s.time = target;
        prop.reset(s);
        visit(k, s);
    }
}

}  // namespace

AtomState step(const AtomState& state, const LatticeParams& params,
               const SimulationSchedule& schedule, RandomStream& rng,
               const DynamicsOptions& options) {
    Propagator prop(params, options, schedule.external_force);
    prop.reset(state);
    prop.advance(schedule.dt, rng);
    if (!prop.state().is_finite()) throw IntegrationDiverged(0, 1);
    return prop.state();
}

std::vector<AtomState> simulate_trajectory_from(const LatticeParams& params,
                                                const SimulationSchedule& schedule,
                                                const AtomState& initial,
                                                std::size_t trajectory_index,
                                                const DynamicsOptions& options) {
    schedule.validate(params, options);
    RandomStream rng(schedule.master_seed, trajectory_index);
    std::vector<AtomState> records;
    records.reserve(schedule.sample_times.size());
    propagate(params, schedule, options, initial, trajectory_index, rng,
              [&](std::size_t, const AtomState& s) { records.push_back(s); });
    return records;
}

std::vector<AtomState> simulate_trajectory(const LatticeParams& params,
                                           const SimulationSchedule& schedule,
                                           const InitialDistribution& init,
                                           std::size_t trajectory_index,
                                           const DynamicsOptions& options) {
    schedule.validate(params, options);
    RandomStream rng(schedule.master_seed, trajectory_index);
    const AtomState initial = sample_initial_state(params, init, rng);
    std::vector<AtomState> records;
    records.reserve(schedule.sample_times.size());
    propagate(params, schedule, options, initial, trajectory_index, rng,
              [&](std::size_t, const AtomState& s) { records.push_back(s); });
    return records;
}

const std::vector<AtomState>& EnsembleSeries::snapshot(std::size_t sample_index) const {
    const auto it = std::find(snapshot_indices.begin(), snapshot_indices.end(), sample_index);
    if (it == snapshot_indices.end()) {
        throw InvalidParameter("sample " + std::to_string(sample_index) + " was not retained");
    }
    return snapshots[static_cast<std::size_t>(it - snapshot_indices.begin())];
}

namespace {

// Power sums accumulated per sample time.
enum Slot : std::size_t {
    kV1, kV2, kV3, kV4, kD1, kD2, kD4,  // axis x; axis z follows at +kAxisSlots
    kAxisSlots,
};
constexpr std::size_t kTrappedCount = 2 * kAxisSlots;
// Per class: count, then (sum v, sum v^2) per axis.
constexpr std::size_t kClassBase = kTrappedCount + 1;
constexpr std::size_t kClassSlots = 5;
constexpr std::size_t kSlots = kClassBase + 2 * kClassSlots;
constexpr std::size_t kBlock = 64;

using InitialSource = std::function<AtomState(std::size_t, RandomStream&)>;

EnsembleSeries run_ensemble(const LatticeParams& params, const SimulationSchedule& schedule,
                            std::size_t n_traj, const InitialSource& initial,
                            const EnsembleOptions& options) {
    schedule.validate(params, options.dynamics);
    if (n_traj == 0) throw InvalidParameter("ensemble needs at least one trajectory");
    const std::size_t n_samples = schedule.sample_times.size();

    std::vector<std::size_t> retained = options.retain_samples;
    if (options.retain_all) {
        retained.resize(n_samples);
        for (std::size_t i = 0; i < n_samples; ++i) retained[i] = i;
    }
    std::sort(retained.begin(), retained.end());
    retained.erase(std::unique(retained.begin(), retained.end()), retained.end());
    for (std::size_t r : retained) {
        if (r >= n_samples) throw InvalidParameter("retained sample index out of range");
    }
    std::vector<int> retain_slot(n_samples, -1);
    for (std::size_t i = 0; i < retained.size(); ++i) retain_slot[retained[i]] = static_cast<int>(i);

    EnsembleSeries out;
    out.n_traj = n_traj;
    out.times = schedule.sample_times;
    out.escape = compute_escape_energies(params);
    out.snapshot_indices = retained;
    out.snapshots.assign(retained.size(), std::vector<AtomState>(n_traj));

    const std::size_t n_blocks = (n_traj + kBlock - 1) / kBlock;
    std::vector<std::vector<double>> partial(n_blocks);
    std::vector<std::exception_ptr> failure(n_blocks);
    std::atomic<std::size_t> next{0};

    auto worker = [&] {
        for (;;) {
            const std::size_t b = next.fetch_add(1);
            if (b >= n_blocks) return;
            std::vector<double> acc(n_samples * kSlots, 0.0);
            try {
                const std::size_t end = std::min(n_traj, (b + 1) * kBlock);
                for (std::size_t traj = b * kBlock; traj < end; ++traj) {
                    RandomStream rng(schedule.master_seed, traj);
                    const AtomState start = initial(traj, rng);
                    const Vec2 origin = start.position;
                    propagate(params, schedule, options.dynamics, start, traj, rng,
                              [&](std::size_t k, const AtomState& s) {
                                  double* a = &acc[k * kSlots];
                                  for (Axis ax : both_axes) {
                                      const int i = index(ax);
                                      const double v = s.momentum[i];
                                      const double d = s.position[i] - origin[i];
                                      double* q = a + i * kAxisSlots;
                                      const double v2 = v * v;
                                      const double d2 = d * d;
                                      q[kV1] += v;
                                      q[kV2] += v2;
                                      q[kV3] += v2 * v;
                                      q[kV4] += v2 * v2;
                                      q[kD1] += d;
                                      q[kD2] += d2;
                                      q[kD4] += d2 * d2;
                                  }
                                  Motion motion = Motion::traveling;
                                  if (options.dynamics.potential) {
                                      motion = classify_trapped(s, params, out.escape);
                                  }
                                  const bool trapped = motion == Motion::trapped;
                                  if (trapped) a[kTrappedCount] += 1.0;
                                  double* c = a + kClassBase + (trapped ? 0 : kClassSlots);
                                  c[0] += 1.0;
                                  for (Axis ax : both_axes) {
                                      const double v = s.momentum[index(ax)];
                                      c[1 + 2 * index(ax)] += v;
                                      c[2 + 2 * index(ax)] += v * v;
                                  }
                                  if (retain_slot[k] >= 0) out.snapshots[retain_slot[k]][traj] = s;
                              });
                }
            } catch (...) {
                failure[b] = std::current_exception();
            }
            partial[b] = std::move(acc);
        }
    };

    const unsigned threads = std::max(1u, std::min<unsigned>(options.threads, n_blocks));
    if (threads == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(threads);
        for (unsigned i = 0; i < threads; ++i) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    for (auto& f : failure) {
        if (f) std::rethrow_exception(f);
    }

    std::vector<double> total(n_samples * kSlots, 0.0);
    for (const auto& p : partial) {
        for (std::size_t i = 0; i < total.size(); ++i) total[i] += p[i];
    }

    const double n = static_cast<double>(n_traj);
    for (auto& axis : out.axes) {
        for (auto* v : {&axis.mean_velocity, &axis.temperature, &axis.temperature_stderr,
                        &axis.mean_displacement, &axis.msd, &axis.msd_stderr}) {
            v->resize(n_samples);
        }
    }
    out.trapped_fraction.resize(n_samples);
    for (ClassSeries* cls : {&out.trapped, &out.traveling}) {
        cls->count.resize(n_samples);
        for (auto& t : cls->temperature) t.resize(n_samples);
    }
    constexpr double nan = std::numeric_limits<double>::quiet_NaN();
    for (std::size_t k = 0; k < n_samples; ++k) {
        const double* a = &total[k * kSlots];
        for (Axis ax : both_axes) {
            const int i = index(ax);
            const double* q = a + i * kAxisSlots;
            AxisSeries& s = out.axes[i];
            const double m1 = q[kV1] / n;
            const double m2 = q[kV2] / n;
            const double m3 = q[kV3] / n;
            const double m4 = q[kV4] / n;
            const double var = std::max(0.0, m2 - m1 * m1);
            const double central4 =
                m4 - 4.0 * m1 * m3 + 6.0 * m1 * m1 * m2 - 3.0 * m1 * m1 * m1 * m1;
            s.mean_velocity[k] = m1;
            s.temperature[k] = var;
            s.temperature_stderr[k] = std::sqrt(std::max(0.0, central4 - var * var) / n);
            s.mean_displacement[k] = q[kD1] / n;
            s.msd[k] = q[kD2] / n;
            s.msd_stderr[k] = std::sqrt(std::max(0.0, q[kD4] / n - s.msd[k] * s.msd[k]) / n);
        }
        out.trapped_fraction[k] = a[kTrappedCount] / n;
        for (int c = 0; c < 2; ++c) {
            ClassSeries& cls = c == 0 ? out.trapped : out.traveling;
            const double* q = a + kClassBase + c * kClassSlots;
            const double count = q[0];
            cls.count[k] = static_cast<std::size_t>(count);
            for (Axis ax : both_axes) {
                const int i = index(ax);
                cls.temperature[i][k] =
                    count >= 2.0
                        ? std::max(0.0, q[2 + 2 * i] / count -
                                            (q[1 + 2 * i] / count) * (q[1 + 2 * i] / count))
                        : nan;
            }
        }
    }
    return out;
}

}  // namespace

EnsembleSeries ensemble_run(const LatticeParams& params, const SimulationSchedule& schedule,
                            const InitialDistribution& init, const EnsembleOptions& options) {
    if (!(init.temperature >= 0.0)) throw InvalidParameter("initial temperature must be >= 0");
    return run_ensemble(params, schedule, schedule.n_traj,
                        [&](std::size_t, RandomStream& rng) {
                            return sample_initial_state(params, init, rng);
                        },
                        options);
}

EnsembleSeries ensemble_run(const LatticeParams& params, const SimulationSchedule& schedule,
                            std::span<const AtomState> initial_states,
                            const EnsembleOptions& options) {
    return run_ensemble(params, schedule, initial_states.size(),
                        [&](std::size_t i, RandomStream&) { return initial_states[i]; }, options);
}

namespace {

template <typename T>
void put_le(std::ostream& out, T value) {
    static_assert(std::endian::native == std::endian::little,
                  "binary dump assumes a little-endian host");
    char bytes[sizeof(T)];
    std::memcpy(bytes, &value, sizeof(T));
    out.write(bytes, sizeof(T));
}

}  // namespace

void write_trajectory_dump(const EnsembleSeries& series, const std::string& path,
                           DumpFormat format) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InvalidParameter("cannot open dump file " + path);
    const std::size_t n_traj = series.n_traj;
    const std::size_t n_rec = series.snapshot_indices.size();
    if (format == DumpFormat::csv) {
        out << "# sisyphus-trajectories v1\n";
        out << "trajectory,sample,time,x,z,px,pz,sublevel\n";
        out.precision(17);
        for (std::size_t traj = 0; traj < n_traj; ++traj) {
            for (std::size_t r = 0; r < n_rec; ++r) {
                const AtomState& s = series.snapshots[r][traj];
                out << traj << ',' << series.snapshot_indices[r] << ',' << s.time << ','
                    << s.position.x() << ',' << s.position.y() << ',' << s.momentum.x() << ','
                    << s.momentum.y() << ',' << sign(s.sublevel) << '\n';
            }
        }
        return;
    }
    out.write("SISYTRJ1", 8);
    put_le<std::uint64_t>(out, n_traj);
    put_le<std::uint64_t>(out, n_rec);
    auto column = [&](auto get) {
        for (std::size_t traj = 0; traj < n_traj; ++traj) {
            for (std::size_t r = 0; r < n_rec; ++r) put_le(out, get(traj, r));
        }
    };
    column([&](std::size_t t, std::size_t) { return static_cast<std::uint64_t>(t); });
    column([&](std::size_t, std::size_t r) {
        return static_cast<std::uint64_t>(series.snapshot_indices[r]);
    });
    column([&](std::size_t t, std::size_t r) { return series.snapshots[r][t].time; });
    column([&](std::size_t t, std::size_t r) { return series.snapshots[r][t].position.x(); });
    column([&](std::size_t t, std::size_t r) { return series.snapshots[r][t].position.y(); });
    column([&](std::size_t t, std::size_t r) { return series.snapshots[r][t].momentum.x(); });
    column([&](std::size_t t, std::size_t r) { return series.snapshots[r][t].momentum.y(); });
    column([&](std::size_t t, std::size_t r) {
        return static_cast<std::int8_t>(sign(series.snapshots[r][t].sublevel));
    });
}

}  // namespace sisyphus
