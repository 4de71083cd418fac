#include "sisyphus/observables.hpp"

#include <algorithm>
#include <cmath>

#include "sisyphus/errors.hpp"
#include "sisyphus/least_squares.hpp"
#include "sisyphus/stats.hpp"

namespace sisyphus {

double kinetic_temperature(std::span<const double> velocities) {
    if (velocities.size() < 2) throw InsufficientData("kinetic temperature needs >= 2 samples");
    const double n = static_cast<double>(velocities.size());
    double mean = 0.0;
    for (double v : velocities) mean += v;
    mean /= n;
    double ss = 0.0;
    for (double v : velocities) ss += (v - mean) * (v - mean);
    return ss / n;
}

double kinetic_energy(std::span<const double> velocities) {
    if (velocities.size() < 2) throw InsufficientData("kinetic energy needs >= 2 samples");
    const double n = static_cast<double>(velocities.size());
    double mean = 0.0;
    for (double v : velocities) mean += v;
    mean /= n;
    double e = 0.0;
    for (double v : velocities) e += 0.5 * (v - mean) * (v - mean);
    return e / n;
}

namespace {

struct ExponentialRelaxation {
    // p = (T_i, T_f, gamma)
    double operator()(double t, const ParamVector<3>& p, ParamVector<3>& grad) const {
        const double e = std::exp(-p[2] * t);
        grad[0] = e;
        grad[1] = 1.0 - e;
        grad[2] = -(p[0] - p[1]) * t * e;
        return p[1] + (p[0] - p[1]) * e;
    }
};

double initial_rate_guess(std::span<const double> t, std::span<const double> y, double t_i,
                          double t_f) {
    const double amp = t_i - t_f;
    const double span = t.back() - t.front();
    if (amp == 0.0) return 3.0 / span;
    std::vector<double> tt, ly;
    for (std::size_t i = 0; i < t.size(); ++i) {
        const double ratio = (y[i] - t_f) / amp;
        if (!(ratio > 0.3)) break;
        tt.push_back(t[i]);
        ly.push_back(std::log(ratio));
    }
    if (tt.size() >= 2) {
        const double slope = fit_line(tt, ly).slope;
        if (slope < 0.0 && std::isfinite(slope)) return -slope;
    }
    for (std::size_t i = 1; i < t.size(); ++i) {
        if ((y[i] - t_f) / amp < std::exp(-1.0)) return 1.0 / std::max(t[i] - t[0], 1e-300);
    }
    return 3.0 / span;
}

}  // namespace

RelaxationFit fit_relaxation(std::span<const double> times, std::span<const double> temperature,
                             std::span<const double> point_errors, std::string axis) {
    const std::size_t n = times.size();
    if (temperature.size() != n || (!point_errors.empty() && point_errors.size() != n)) {
        throw InvalidParameter("fit_relaxation: size mismatch");
    }
    if (n < 5) throw InsufficientData("relaxation fit needs at least 5 points");

    RelaxationFit fit;
    fit.axis = std::move(axis);
    fit.n_points = n;
    fit.span = times.back() - times.front();

    std::vector<double> weights;
    if (!point_errors.empty()) {
        weights.resize(n);
        double smallest = std::numeric_limits<double>::infinity();
        for (double e : point_errors) {
            if (e > 0.0) smallest = std::min(smallest, e);
        }
        for (std::size_t i = 0; i < n; ++i) {
            const double e = point_errors[i] > 0.0 ? point_errors[i] : smallest;
            weights[i] = std::isfinite(e) ? 1.0 / (e * e) : 1.0;
        }
    }

    // Degenerate: exactly flat, or consistent with a constant given the errors.
    const auto [lo, hi] = std::minmax_element(temperature.begin(), temperature.end());
    double mean = 0.0;
    for (double v : temperature) mean += v;
    mean /= static_cast<double>(n);
    bool constant = (*hi - *lo) <= 1e-12 * std::max(std::abs(mean), 1e-300);
    if (!constant && !weights.empty()) {
        double sw = 0, swy = 0;
        for (std::size_t i = 0; i < n; ++i) {
            sw += weights[i];
            swy += weights[i] * temperature[i];
        }
        const double wm = swy / sw;
        double chi2 = 0;
        for (std::size_t i = 0; i < n; ++i) {
            chi2 += weights[i] * (temperature[i] - wm) * (temperature[i] - wm);
        }
        constant = chi_square_survival(chi2, static_cast<double>(n - 1)) > 0.01;
    }
    if (constant) {
        fit.status = FitStatus::degenerate;
        fit.final_temperature = {mean, nan_value};
        fit.initial_temperature = {mean, nan_value};
        return fit;
    }

    const std::size_t tail = std::max<std::size_t>(1, n / 5);
    double t_f = 0.0;
    for (std::size_t i = n - tail; i < n; ++i) t_f += temperature[i];
    t_f /= static_cast<double>(tail);
    const double t_i = temperature.front();
    const double g0 = initial_rate_guess(times, temperature, t_i, t_f);

    LeastSquaresResult<3> best;
    bool converged = false;
    std::vector<std::string> trace;
    for (double factor : {1.0, 0.3, 3.0, 0.1, 10.0}) {
        try {
            auto r = levenberg_marquardt<3>(ExponentialRelaxation{}, times, temperature, weights,
                                            ParamVector<3>(t_i, t_f, g0 * factor));
            if (!converged || r.chi2 < best.chi2) best = std::move(r);
            converged = true;
            if (best.params[2] > 0.0) break;
        } catch (const FitFailed& e) {
            trace.insert(trace.end(), e.trace().begin(), e.trace().end());
        }
    }
    if (!converged) throw FitFailed("relaxation fit did not converge", std::move(trace));
    if (!(best.params[2] > 0.0)) {
        throw FitFailed("relaxation fit produced a non-positive rate", std::move(best.trace));
    }

    fit.initial_temperature = {best.params[0], std::sqrt(best.covariance(0, 0))};
    fit.final_temperature = {best.params[1], std::sqrt(best.covariance(1, 1))};
    fit.gamma = {best.params[2], std::sqrt(best.covariance(2, 2))};
    fit.iterations = best.iterations;
    if (fit.gamma.value * (times[1] - times[0]) > 20.0) fit.status = FitStatus::unresolved;

    std::vector<double> residuals(n);
    double ss_res = 0.0, ss_tot = 0.0;
    ParamVector<3> grad;
    for (std::size_t i = 0; i < n; ++i) {
        residuals[i] = temperature[i] - ExponentialRelaxation{}(times[i], best.params, grad);
        ss_res += residuals[i] * residuals[i];
        ss_tot += (temperature[i] - mean) * (temperature[i] - mean);
    }
    fit.goodness = std::clamp(1.0 - ss_res / ss_tot, 0.0, 1.0);
    fit.runs_z = runs_test_z(residuals);
    return fit;
}

DiffusionFit fit_diffusion(std::span<const double> times, std::span<const double> msd,
                           std::span<const double> msd_stderr, TimeWindow window) {
    if (msd.size() != times.size() || (!msd_stderr.empty() && msd_stderr.size() != times.size())) {
        throw InvalidParameter("fit_diffusion: size mismatch");
    }
    std::vector<double> t, y, w;
    for (std::size_t i = 0; i < times.size(); ++i) {
        if (times[i] < window.start || times[i] > window.end) continue;
        t.push_back(times[i]);
        y.push_back(msd[i]);
        if (!msd_stderr.empty()) w.push_back(msd_stderr[i]);
    }
    if (t.size() < 10) {
        throw InsufficientData("diffusion window holds " + std::to_string(t.size()) +
                               " points; at least 10 are required");
    }
    if (!w.empty()) {
        const bool usable = std::all_of(w.begin(), w.end(), [](double e) { return e > 0.0; });
        if (usable) {
            for (double& e : w) e = 1.0 / (e * e);
        } else {
            w.clear();
        }
    }
    const LineFit line = fit_line(t, y, w);
    DiffusionFit out;
    out.n_points = t.size();
    out.coefficient = {0.5 * line.slope, 0.5 * line.slope_err};
    out.intercept = line.intercept;
    out.quality = line.r_squared;
    if (!(line.slope > 0.0)) {
        out.status = DiffusionStatus::not_diffusive;
    } else if (out.quality < diffusion_quality_threshold) {
        out.status = DiffusionStatus::poor_linear_fit;
    }
    return out;
}

FrictionFit friction_drift(std::span<const DriftPoint> points, double linearity_tolerance) {
    if (points.empty()) throw InsufficientData("friction_drift needs at least one force value");
    std::vector<double> f, v, w;
    for (const auto& p : points) {
        if (p.force == 0.0) {
            throw InvalidParameter("friction_drift: zero applied force is ill-posed");
        }
        if (!(std::abs(p.velocity) > 3.0 * p.velocity_error)) {
            throw ForceTooSmall("drift velocity " + std::to_string(p.velocity) +
                                " is within 3 sigma of zero at force " +
                                std::to_string(p.force) + "; increase the applied force");
        }
        f.push_back(p.force);
        v.push_back(p.velocity);
        w.push_back(p.velocity_error > 0.0 ? 1.0 / (p.velocity_error * p.velocity_error) : 1.0);
    }
    // <v> = F / alpha: weighted slope of v against F through the origin.
    double sff = 0.0, sfv = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i) {
        sff += w[i] * f[i] * f[i];
        sfv += w[i] * f[i] * v[i];
    }
    const double mobility = sfv / sff;
    double mobility_err = std::sqrt(1.0 / sff);
    if (points.front().velocity_error == 0.0) mobility_err = 0.0;
    if (!(mobility > 0.0)) {
        throw ForceTooSmall("drift velocity does not follow the applied force");
    }
    FrictionFit out;
    out.alpha = {1.0 / mobility, mobility_err / (mobility * mobility)};
    for (const auto& p : points) {
        const double a = p.force / p.velocity;
        const double a_err = std::abs(a) * p.velocity_error / std::abs(p.velocity);
        out.per_point_alpha.push_back(a);
        const double dev = std::abs(a / out.alpha.value - 1.0);
        out.max_deviation = std::max(out.max_deviation, dev);
        if (std::abs(a - out.alpha.value) >
            linearity_tolerance * out.alpha.value + 2.0 * a_err) {
            throw ForceTooLarge("drift response is nonlinear: alpha " + std::to_string(a) +
                                " at force " + std::to_string(p.force) + " vs slope " +
                                std::to_string(out.alpha.value) + "; reduce the applied force");
        }
    }
    return out;
}

Estimate friction_einstein(Estimate temperature, Estimate diffusion) {
    if (!(temperature.value > 0.0) || !(diffusion.value > 0.0)) {
        throw InvalidParameter("Einstein friction needs positive temperature and diffusion");
    }
    const double a = temperature.value / diffusion.value;
    const double rt = std::isfinite(temperature.error) ? temperature.error / temperature.value : 0.0;
    const double rd = std::isfinite(diffusion.error) ? diffusion.error / diffusion.value : 0.0;
    return {a, a * std::sqrt(rt * rt + rd * rd)};
}

PopulationSplit subpopulation_report(const EnsembleSeries& series,
                                     const std::array<Estimate, 2>& alpha,
                                     const std::array<RelaxationFit, 2>& relaxation,
                                     TimeWindow steady, TimeWindow relax) {
    PopulationSplit out;
    out.times = series.times;
    out.trapped_fraction = series.trapped_fraction;

    std::vector<double> fraction;
    double trapped_count = 0.0, traveling_count = 0.0;
    for (std::size_t k = 0; k < series.times.size(); ++k) {
        const double t = series.times[k];
        if (t < steady.start || t > steady.end) continue;
        fraction.push_back(series.trapped_fraction[k]);
        trapped_count += static_cast<double>(series.trapped.count[k]);
        traveling_count += static_cast<double>(series.traveling.count[k]);
    }
    if (fraction.empty()) throw InsufficientData("steady window holds no samples");
    const MeanEstimate f = mean_with_error(fraction);
    out.steady_trapped_fraction = {f.mean, f.error};
    const double m = static_cast<double>(fraction.size());
    out.insufficient_statistics = trapped_count / m < static_cast<double>(min_class_size) ||
                                  traveling_count / m < static_cast<double>(min_class_size);

    auto class_fit = [&](const ClassSeries& cls, Axis ax) {
        PopulationSplit::ClassAxis result;
        result.alpha = alpha[index(ax)].value;
        std::vector<double> t, y;
        for (std::size_t k = 0; k < series.times.size(); ++k) {
            const double tk = series.times[k];
            if (tk < relax.start || tk > relax.end) continue;
            if (cls.count[k] < min_class_size) continue;
            const double temp = cls.temperature[index(ax)][k];
            if (!std::isfinite(temp)) continue;
            t.push_back(tk);
            y.push_back(temp);
        }
        if (t.size() < 5) return result;
        try {
            const RelaxationFit fit = fit_relaxation(t, y, {}, axis_name(ax));
            result.fitted = true;
            result.gamma = fit.ok() ? fit.gamma : Estimate{0.0, 0.0};
        } catch (const Error&) {
            result.fitted = false;
        }
        return result;
    };

    for (Axis ax : both_axes) {
        const int i = index(ax);
        const double a = alpha[i].value;
        if (relaxation[i].ok()) out.ensemble_ratio[i] = 2.0 * a / relaxation[i].gamma.value;
        out.traveling[i] = class_fit(series.traveling, ax);
        out.trapped[i] = class_fit(series.trapped, ax);
        if (out.traveling[i].fitted && out.traveling[i].gamma.value > 0.0) {
            out.traveling_ratio[i] = 2.0 * a / out.traveling[i].gamma.value;
            out.traveling_brownian[i] =
                out.traveling_ratio[i] >= 0.5 && out.traveling_ratio[i] <= 2.0;
        }
        if (out.trapped[i].fitted) {
            out.trapped_ratio[i] = std::max(0.0, out.trapped[i].gamma.value) / a;
            out.trapped_not_cooling[i] = out.trapped_ratio[i] < 0.1;
        }
    }
    return out;
}

}  // namespace sisyphus
