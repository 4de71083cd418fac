#pragma once

// Recoil-induced-resonance velocimetry on simulated velocity distributions.
// The probe transmission is proportional to the derivative of the velocity
// distribution along the probed axis, evaluated at v = delta / (2 k sin(phi)).

#include <span>
#include <string>
#include <vector>

#include "sisyphus/lattice.hpp"
#include "sisyphus/observables.hpp"

namespace sisyphus {

struct ProbeGeometry {
    double half_angle = 12.5 * std::numbers::pi / 180.0;  // phi; pump and probe at 2 phi
    Vec2 axis = Vec2::UnitX();                           // probed velocity component
    std::vector<double> detunings;                       // symmetric about 0

    /// n evenly spaced detunings on [-max_detuning, max_detuning].
    static ProbeGeometry symmetric(double half_angle, double max_detuning, std::size_t n);
    /// Velocity probed at detuning delta.
    double velocity_at(double delta) const { return delta / (2.0 * std::sin(half_angle)); }
    void validate() const;
};

struct RirSpectrum {
    std::vector<double> detuning;
    std::vector<double> signal;  // unit peak amplitude
    double half_angle = 0.0;
    double bandwidth = 0.0;      // KDE bandwidth in velocity units, 0 for exact line shapes
};

struct RirOptions {
    double bandwidth = 0.0;  // <= 0 selects Silverman's rule
};

/// Silverman's rule 0.9 min(sd, IQR / 1.34) n^(-1/5).
double silverman_bandwidth(std::span<const double> samples);

/// Spectrum from velocities already projected on the probed axis.
RirSpectrum rir_spectrum(std::span<const double> velocities, const ProbeGeometry& geometry,
                         const RirOptions& options = {});
/// Spectrum from planar velocities, projected on geometry.axis.
RirSpectrum rir_spectrum(std::span<const Vec2> velocities, const ProbeGeometry& geometry,
                         const RirOptions& options = {});

struct RirFit {
    Estimate amplitude;
    Estimate width;        // in detuning units
    Estimate temperature;  // kernel variance removed
    double goodness = 0.0;
};

/// Least squares of A u exp(-u^2/2), u = delta / w.
RirFit fit_rir(const RirSpectrum& spectrum);

/// Two-column (delta, signal) CSV.
void write_spectrum_csv(const RirSpectrum& spectrum, const std::string& path);

}  // namespace sisyphus
