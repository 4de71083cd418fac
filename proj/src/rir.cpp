#include "sisyphus/rir.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "sisyphus/errors.hpp"
#include "sisyphus/least_squares.hpp"

namespace sisyphus {

ProbeGeometry ProbeGeometry::symmetric(double half_angle, double max_detuning, std::size_t n) {
    if (n < 3) throw InvalidParameter("detuning grid needs at least 3 points");
    if (!(max_detuning > 0.0)) throw InvalidParameter("max detuning must be positive");
    ProbeGeometry g;
    g.half_angle = half_angle;
    g.detunings.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        g.detunings[i] = -max_detuning + 2.0 * max_detuning * static_cast<double>(i) / (n - 1);
    }
    g.validate();
    return g;
}

void ProbeGeometry::validate() const {
    if (!(half_angle > 0.0 && half_angle < std::numbers::pi / 2)) {
        throw InvalidParameter("probe half-angle must lie in (0, pi/2)");
    }
    if (!(std::abs(axis.norm() - 1.0) < 1e-12)) throw InvalidParameter("probe axis must be unit");
    if (detunings.size() < 3) throw InvalidParameter("detuning grid needs at least 3 points");
    const std::size_t n = detunings.size();
    for (std::size_t i = 0; i < n; ++i) {
        if (i > 0 && !(detunings[i] > detunings[i - 1])) {
            throw InvalidParameter("detuning grid must be increasing");
        }
        const double mirror = detunings[n - 1 - i];
        if (std::abs(detunings[i] + mirror) > 1e-9 * std::abs(detunings.back())) {
            throw InvalidParameter("detuning grid must be symmetric about 0");
        }
    }
}

double silverman_bandwidth(std::span<const double> samples) {
    const std::size_t n = samples.size();
    if (n < 2) throw InsufficientData("bandwidth needs at least 2 samples");
    double mean = 0.0;
    for (double v : samples) mean += v;
    mean /= static_cast<double>(n);
    double ss = 0.0;
    for (double v : samples) ss += (v - mean) * (v - mean);
    const double sd = std::sqrt(ss / static_cast<double>(n - 1));
    std::vector<double> sorted(samples.begin(), samples.end());
    std::sort(sorted.begin(), sorted.end());
    auto quantile = [&](double q) {
        const double pos = q * static_cast<double>(n - 1);
        const std::size_t lo = static_cast<std::size_t>(pos);
        const std::size_t hi = std::min(lo + 1, n - 1);
        return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
    };
    const double iqr = quantile(0.75) - quantile(0.25);
    double spread = std::min(sd, iqr / 1.34);
    if (!(spread > 0.0)) spread = sd;
    return 0.9 * spread * std::pow(static_cast<double>(n), -0.2);
}

RirSpectrum rir_spectrum(std::span<const double> velocities, const ProbeGeometry& geometry,
                         const RirOptions& options) {
    if (velocities.empty()) throw InsufficientData("RIR spectrum of an empty sample");
    geometry.validate();
    const double h = options.bandwidth > 0.0 ? options.bandwidth : silverman_bandwidth(velocities);
    if (!(h > 0.0) || !std::isfinite(h)) throw InvalidParameter("degenerate KDE bandwidth");

    RirSpectrum out;
    out.detuning = geometry.detunings;
    out.half_angle = geometry.half_angle;
    out.bandwidth = h;
    out.signal.resize(geometry.detunings.size());
    const double norm = 1.0 / (static_cast<double>(velocities.size()) * h * h *
                               std::sqrt(2.0 * std::numbers::pi));
    for (std::size_t i = 0; i < geometry.detunings.size(); ++i) {
        const double v = geometry.velocity_at(geometry.detunings[i]);
        double sum = 0.0;
        for (double vi : velocities) {
            const double u = (v - vi) / h;
            if (std::abs(u) < 40.0) sum -= u * std::exp(-0.5 * u * u);
        }
        out.signal[i] = sum * norm;  // d/dv of the kernel density
    }
    double peak = 0.0;
    for (double s : out.signal) peak = std::max(peak, std::abs(s));
    if (!(peak > 0.0)) throw InvalidParameter("RIR spectrum vanishes on the detuning grid");
    for (double& s : out.signal) s /= peak;
    return out;
}

RirSpectrum rir_spectrum(std::span<const Vec2> velocities, const ProbeGeometry& geometry,
                         const RirOptions& options) {
    std::vector<double> projected;
    projected.reserve(velocities.size());
    for (const Vec2& v : velocities) projected.push_back(v.dot(geometry.axis));
    return rir_spectrum(std::span<const double>(projected), geometry, options);
}

namespace {

struct DerivativeOfGaussian {
    // p = (A, w)
    double operator()(double delta, const ParamVector<2>& p, ParamVector<2>& grad) const {
        const double u = delta / p[1];
        const double e = std::exp(-0.5 * u * u);
        grad[0] = u * e;
        grad[1] = -p[0] * e * (1.0 - u * u) * u / p[1];
        return p[0] * u * e;
    }
};

}  // namespace

RirFit fit_rir(const RirSpectrum& spectrum) {
    const auto& d = spectrum.detuning;
    const auto& s = spectrum.signal;
    if (d.size() != s.size() || d.size() < 3) throw InsufficientData("RIR fit needs >= 3 points");
    bool positive = false, negative = false;
    for (double v : s) {
        positive |= v > 0.0;
        negative |= v < 0.0;
    }
    if (!(positive && negative)) throw NotARirLine("spectrum has no sign change");

    const auto [lo, hi] = std::minmax_element(s.begin(), s.end());
    const double d_lo = d[static_cast<std::size_t>(lo - s.begin())];
    const double d_hi = d[static_cast<std::size_t>(hi - s.begin())];
    // Extremes of u exp(-u^2/2) sit at u = +-1 with value +-exp(-1/2).
    const double w0 = std::max(0.5 * std::abs(d_hi - d_lo), 1e-12);
    const double a0 = (d_hi > d_lo ? 1.0 : -1.0) * (*hi - *lo) * 0.5 * std::exp(0.5);
    const auto r = levenberg_marquardt<2>(DerivativeOfGaussian{}, d, s, {},
                                          ParamVector<2>(a0, w0));

    RirFit fit;
    fit.amplitude = {r.params[0], std::sqrt(r.covariance(0, 0))};
    const double w = std::abs(r.params[1]);
    fit.width = {w, std::sqrt(r.covariance(1, 1))};
    const double scale = 2.0 * std::sin(spectrum.half_angle);
    const double sigma_v = w / scale;
    const double t = sigma_v * sigma_v - spectrum.bandwidth * spectrum.bandwidth;
    fit.temperature = {t, 2.0 * sigma_v * fit.width.error / scale};
    double mean = 0.0;
    for (double v : s) mean += v;
    mean /= static_cast<double>(s.size());
    double ss_tot = 0.0;
    for (double v : s) ss_tot += (v - mean) * (v - mean);
    fit.goodness = ss_tot > 0.0 ? std::clamp(1.0 - r.chi2 / ss_tot, 0.0, 1.0) : 0.0;
    return fit;
}

void write_spectrum_csv(const RirSpectrum& spectrum, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw InvalidParameter("cannot open spectrum file " + path);
    out.precision(17);
    out << "delta,signal\n";
    for (std::size_t i = 0; i < spectrum.detuning.size(); ++i) {
        out << spectrum.detuning[i] << ',' << spectrum.signal[i] << '\n';
    }
}

}  // namespace sisyphus
