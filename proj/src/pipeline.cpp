#include "sisyphus/pipeline.hpp"

#include <algorithm>
#include <cmath>

#include "sisyphus/errors.hpp"
#include "sisyphus/stats.hpp"

namespace sisyphus {

TransportResult PointResult::transport(Axis a) const {
    const AxisResult& r = axis(a);
    TransportResult t;
    t.axis = axis_name(a);
    if (r.diffusion) t.diffusion = r.diffusion->coefficient;
    if (r.drift) t.alpha_drift = r.drift->alpha;
    t.alpha_einstein = r.alpha_einstein;
    return t;
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t tag) {
    // splitmix64 finalizer over the combined words
    std::uint64_t z = master + 0x9e3779b97f4a7c15ull * (tag + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

DriftPoint measure_drift(const LatticeParams& params, std::span<const AtomState> start,
                         Axis axis, double force, double settle, double measure,
                         std::size_t n_traj, std::uint64_t seed, const EnsembleOptions& options) {
    if (n_traj == 0 || n_traj > start.size()) n_traj = start.size();
    Vec2 f = Vec2::Zero();
    f[index(axis)] = force;
    const double dt = options.dynamics.potential || options.dynamics.pumping
                          ? default_time_step(params, options.dynamics)
                          : 0.01;
    std::vector<double> times;
    if (settle > 0.0) times.push_back(settle);
    times.push_back(settle + measure);
    const auto schedule = SimulationSchedule::make(params, options.dynamics, dt, settle + measure,
                                                   times, n_traj, seed, f);
    EnsembleOptions run = options;
    run.retain_samples = {0, times.size() - 1};
    run.retain_all = false;
    const EnsembleSeries series = ensemble_run(params, schedule, start.first(n_traj), run);
    const auto& a = settle > 0.0 ? series.snapshot(0) : std::vector<AtomState>(start.begin(),
                                                                              start.begin() + n_traj);
    const auto& b = series.snapshot(times.size() - 1);
    std::vector<double> v(n_traj);
    for (std::size_t i = 0; i < n_traj; ++i) {
        v[i] = (b[i].position[index(axis)] - a[i].position[index(axis)]) / measure;
    }
    const MeanEstimate m = mean_with_error(v);
    return {force, m.mean, m.error};
}

namespace {

std::vector<double> window_values(const std::vector<double>& times,
                                  const std::vector<double>& values, TimeWindow w) {
    std::vector<double> out;
    for (std::size_t k = 0; k < times.size(); ++k) {
        if (times[k] >= w.start && times[k] <= w.end) out.push_back(values[k]);
    }
    return out;
}

}  // namespace

PointResult run_point(const LatticeParams& params, const PointSettings& settings) {
    if (!(settings.relax_duration > 0.0) || !(settings.steady_duration > 0.0)) {
        throw InvalidParameter("relax and steady durations must be positive");
    }
    if (settings.relax_samples < 5) throw InvalidParameter("relax window needs >= 5 samples");

    EnsembleOptions run;
    run.dynamics = settings.dynamics;
    run.threads = settings.threads;

    const double interval = settings.relax_duration / static_cast<double>(settings.relax_samples);
    const double total = settings.relax_duration + settings.steady_duration;
    const auto n_intervals =
        static_cast<std::size_t>(std::llround(total / interval));
    std::vector<double> times(n_intervals + 1);
    for (std::size_t k = 0; k <= n_intervals; ++k) times[k] = interval * static_cast<double>(k);
    times.back() = total;
    const std::size_t relax_end = settings.relax_samples;
    const std::size_t last = n_intervals;
    run.retain_samples = {relax_end, last};
    run.retain_all = settings.keep_snapshots;

    const auto schedule =
        SimulationSchedule::make(params, settings.dynamics, settings.dt, total, times,
                                 settings.n_traj, derive_seed(settings.seed, 1));

    PointResult out(params);
    out.series = ensemble_run(params, schedule, settings.init, run);
    const EnsembleSeries& series = out.series;

    const TimeWindow relax{0.0, settings.relax_duration * (1.0 + 1e-12)};
    std::array<RelaxationFit, 2> fits;
    double slowest = 0.0;
    for (Axis ax : both_axes) {
        const AxisSeries& s = series.axis(ax);
        auto fit_first = [&](std::size_t n) {
            return fit_relaxation(std::span(series.times.data(), n),
                                  std::span(s.temperature.data(), n),
                                  std::span(s.temperature_stderr.data(), n), axis_name(ax));
        };
        std::size_t n = relax_end + 1;
        RelaxationFit fit = fit_first(n);
        // Shrink the window to fit_span relaxation times and refit until the
        // window stops moving.
        for (int pass = 0; settings.fit_span > 0.0 && fit.ok() && pass < 8; ++pass) {
            const double end = settings.fit_span / fit.gamma.value;
            std::size_t m = 1;
            while (m < relax_end + 1 && series.times[m] <= end * (1.0 + 1e-12)) ++m;
            m = std::max<std::size_t>(m, std::min<std::size_t>(relax_end + 1, 12));
            if (m == n) break;
            n = m;
            fit = fit_first(n);
        }
        fits[index(ax)] = fit;
        AxisResult& r = out.axes[index(ax)];
        r.relaxation = fits[index(ax)];
        if (!r.relaxation.ok()) {
            r.flags.push_back(r.relaxation.status == FitStatus::degenerate ? "degenerate-fit"
                                                                           : "unresolved-fit");
        } else {
            if (r.relaxation.coverage() < 2.0) r.flags.push_back("relax-window-short");
            slowest = std::max(slowest, 1.0 / r.relaxation.gamma.value);
        }
    }

    // Steady state from 5 / Gamma_T of the slowest axis, but never before the
    // end of the relax window.
    TimeWindow steady{std::max(settings.relax_duration, 5.0 * slowest), total};
    if (window_values(series.times, series.times, steady).size() < 10) {
        steady.start = settings.relax_duration;
        for (auto& r : out.axes) r.flags.push_back("steady-state-late");
    }
    out.steady_window = steady;

    const auto& snap_a = series.snapshot(relax_end);
    const auto& snap_b = series.snapshot(last);
    for (Axis ax : both_axes) {
        AxisResult& r = out.axes[index(ax)];
        const AxisSeries& s = series.axis(ax);
        std::vector<double> va, vb;
        for (const auto& st : snap_a) va.push_back(st.momentum[index(ax)]);
        for (const auto& st : snap_b) vb.push_back(st.momentum[index(ax)]);
        r.steady_ks_p = ks_two_sample_p(va, vb);
        if (!(r.steady_ks_p > 0.05)) r.flags.push_back("velocity-distribution-drifting");

        const auto temps = window_values(series.times, s.temperature, steady);
        const MeanEstimate tm = mean_with_error(temps);
        r.steady_temperature = {tm.mean, tm.error};

        const double start = r.relaxation.ok()
                                 ? std::max(settings.relax_duration, 3.0 / r.relaxation.gamma.value)
                                 : settings.relax_duration;
        r.diffusion_window = {start, total};
        try {
            r.diffusion = fit_diffusion(series.times, s.msd, s.msd_stderr, r.diffusion_window);
            if (r.diffusion->status == DiffusionStatus::not_diffusive) {
                r.flags.push_back("not-diffusive");
            } else if (r.diffusion->status == DiffusionStatus::poor_linear_fit) {
                r.flags.push_back("poor-diffusion-fit");
            }
        } catch (const InsufficientData&) {
            r.flags.push_back("diffusion-window-short");
        }
        if (r.diffusion && r.diffusion->coefficient.value > 0.0) {
            r.alpha_einstein = friction_einstein(r.steady_temperature, r.diffusion->coefficient);
        }
    }

    if (settings.drift.enabled) {
        const DriftSettings& d = settings.drift;
        for (Axis ax : both_axes) {
            AxisResult& r = out.axes[index(ax)];
            std::vector<double> forces = d.forces[index(ax)];
            if (forces.empty()) {
                if (!std::isfinite(r.alpha_einstein.value)) {
                    r.drift_error = "no force scale: Einstein friction unavailable";
                    r.flags.push_back("drift-skipped");
                    continue;
                }
                const double scale =
                    r.alpha_einstein.value * std::sqrt(r.steady_temperature.value);
                for (double q : d.velocity_fractions) forces.push_back(q * scale);
            }
            for (std::size_t k = 0; k < forces.size(); ++k) {
                const std::uint64_t tag = 16 + 8 * static_cast<std::uint64_t>(index(ax)) + k;
                r.drift_points.push_back(measure_drift(params, snap_b, ax, forces[k],
                                                       d.settle_duration, d.measure_duration,
                                                       d.n_traj, derive_seed(settings.seed, tag),
                                                       run));
            }
            try {
                r.drift = friction_drift(r.drift_points);
            } catch (const ForceTooSmall& e) {
                r.drift_error = e.what();
                r.flags.push_back("drift-force-too-small");
            } catch (const ForceTooLarge& e) {
                r.drift_error = e.what();
                r.flags.push_back("drift-force-too-large");
            }
        }
    }

    std::array<Estimate, 2> alpha;
    for (Axis ax : both_axes) {
        const AxisResult& r = out.axes[index(ax)];
        alpha[index(ax)] = r.drift ? r.drift->alpha : r.alpha_einstein;
    }
    try {
        out.population = subpopulation_report(series, alpha, fits, steady, relax);
    } catch (const InsufficientData&) {
        for (auto& r : out.axes) r.flags.push_back("population-unavailable");
    }

    if (settings.rir) {
        std::vector<double> vx;
        vx.reserve(snap_b.size());
        for (const auto& st : snap_b) vx.push_back(st.momentum.x());
        const double sd = std::sqrt(kinetic_temperature(vx));
        const double max_delta = 5.0 * sd * 2.0 * std::sin(settings.rir_half_angle);
        if (vx.size() >= 1000 && max_delta > 0.0) {
            const auto geometry =
                ProbeGeometry::symmetric(settings.rir_half_angle, max_delta, settings.rir_points);
            out.spectrum = rir_spectrum(std::span<const double>(vx), geometry);
            try {
                out.rir_fit = fit_rir(*out.spectrum);
            } catch (const Error&) {
                out.axes[0].flags.push_back("rir-fit-failed");
            }
        }
    }
    return out;
}

}  // namespace sisyphus
