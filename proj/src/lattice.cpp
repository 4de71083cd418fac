#include "sisyphus/lattice.hpp"

#include <string>

#include "sisyphus/errors.hpp"

namespace sisyphus {

LatticeParams::LatticeParams(double theta, double gamma, double detuning, double light_shift,
                             double pump_rate)
    : theta_(theta),
      gamma_(gamma),
      detuning_(detuning),
      light_shift_(light_shift),
      pump_rate_(pump_rate),
      kx_(std::sin(theta)),
      kz_(std::cos(theta)) {
    if (!(theta > 0.0 && theta < std::numbers::pi / 2)) {
        throw InvalidParameter("theta must lie in (0, pi/2), got " + std::to_string(theta));
    }
    if (!(gamma > 0.0)) throw InvalidParameter("gamma must be positive");
    if (!(detuning < 0.0)) {
        throw InvalidParameter("detuning must be negative (red detuning), got " +
                               std::to_string(detuning));
    }
    if (!(pump_rate > 0.0)) throw InvalidParameter("pump rate must be positive");
    const double lhs = light_shift / pump_rate;
    const double rhs = detuning / gamma;
    if (!(std::abs(lhs - rhs) <= 1e-12 * std::abs(rhs))) {
        throw InvalidParameter("light_shift / pump_rate must equal detuning / gamma");
    }
}

LatticeParams LatticeParams::from_light_shift_and_pump(double theta, double gamma,
                                                       double light_shift, double pump_rate) {
    if (!(pump_rate > 0.0)) throw InvalidParameter("pump rate must be positive");
    return {theta, gamma, light_shift * gamma / pump_rate, light_shift, pump_rate};
}

LatticeParams LatticeParams::from_detuning_and_light_shift(double theta, double gamma,
                                                           double detuning,
                                                           double light_shift) {
    if (!(detuning < 0.0)) throw InvalidParameter("detuning must be negative (red detuning)");
    return {theta, gamma, detuning, light_shift, light_shift * gamma / detuning};
}

LatticeParams LatticeParams::from_detuning_and_pump(double theta, double gamma,
                                                    double detuning, double pump_rate) {
    return {theta, gamma, detuning, pump_rate * detuning / gamma, pump_rate};
}

LatticeParams LatticeParams::from_intensity(double theta, double gamma, double detuning,
                                            double intensity) {
    if (!(intensity > 0.0)) throw InvalidParameter("intensity must be positive");
    if (!(gamma > 0.0)) throw InvalidParameter("gamma must be positive");
    const double s0 = intensity / (1.0 + 4.0 * detuning * detuning / (gamma * gamma));
    return {theta, gamma, detuning, 0.5 * detuning * s0, 0.5 * gamma * s0};
}

Vec2 LatticeParams::well_bottom(Sublevel m) const noexcept {
    // U_m is deepest where cos(kx x) = 1 and sign(m) sin(2 kz z) = -1.
    const double z = -sign(m) * std::numbers::pi / (4.0 * kz_);
    return {0.0, z};
}

}  // namespace sisyphus
