#include "sisyphus/units.hpp"

#include <cmath>
#include <numbers>

#include "sisyphus/errors.hpp"

namespace sisyphus {

namespace {
constexpr double hbar = 1.054571817e-34;
constexpr double boltzmann = 1.380649e-23;
}  // namespace

UnitSystem UnitSystem::physical(double wavelength, double mass, double gamma) {
    if (!(wavelength > 0.0) || !(mass > 0.0) || !(gamma > 0.0)) {
        throw InvalidParameter("unit system requires positive wavelength, mass and gamma");
    }
    UnitSystem u;
    const double k = 2.0 * std::numbers::pi / wavelength;
    u.physical_ = true;
    u.mass_ = mass;
    u.length_ = 1.0 / k;
    u.time_ = mass / (hbar * k * k);
    u.energy_ = hbar * hbar * k * k / mass;
    u.temperature_ = u.energy_ / boltzmann;
    u.momentum_ = hbar * k;
    u.gamma_internal_ = gamma * u.time_;
    return u;
}

}  // namespace sisyphus
