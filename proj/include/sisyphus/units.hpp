#pragma once

// Internal units: hbar = M = k = 1. Energies are in units of hbar^2 k^2 / M,
// so the recoil energy is 1/2 and the recoil frequency omega_r is 1/2.
// Temperatures absorb k_B (k_B T in energy units).

namespace sisyphus {

inline constexpr double recoil_energy = 0.5;
inline constexpr double recoil_frequency = 0.5;

/// Conversion between internal units and SI, given the laser wavelength,
/// the atomic mass and the excited-state width.
class UnitSystem {
public:
    /// Identity conversion; physical quantities are reported in internal units.
    UnitSystem() = default;

    /// @param wavelength  laser wavelength [m]
    /// @param mass        atomic mass [kg]
    /// @param gamma       excited-state width [1/s, angular]
    static UnitSystem physical(double wavelength, double mass, double gamma);

    bool is_physical() const noexcept { return physical_; }

    double length_unit() const noexcept { return length_; }            // [m]
    double time_unit() const noexcept { return time_; }                // [s]
    double energy_unit() const noexcept { return energy_; }            // [J]
    double temperature_unit() const noexcept { return temperature_; }  // [K]
    double momentum_unit() const noexcept { return momentum_; }        // [kg m/s]

    /// Excited-state width expressed in internal rate units.
    double gamma_internal() const noexcept { return gamma_internal_; }

    double time_to_si(double t) const noexcept { return t * time_; }
    double time_from_si(double t) const noexcept { return t / time_; }
    double rate_to_si(double r) const noexcept { return r / time_; }
    double rate_from_si(double r) const noexcept { return r * time_; }
    double temperature_to_si(double T) const noexcept { return T * temperature_; }
    double temperature_from_si(double T) const noexcept { return T / temperature_; }
    double length_to_si(double x) const noexcept { return x * length_; }
    double length_from_si(double x) const noexcept { return x / length_; }
    double energy_to_si(double e) const noexcept { return e * energy_; }
    double energy_from_si(double e) const noexcept { return e / energy_; }
    /// Diffusion coefficient [m^2/s].
    double diffusion_to_si(double d) const noexcept { return d * length_ * length_ / time_; }
    /// Friction coefficient [kg/s].
    double friction_to_si(double a) const noexcept { return a * mass_ / time_; }

private:
    bool physical_ = false;
    double length_ = 1.0;
    double time_ = 1.0;
    double energy_ = 1.0;
    double temperature_ = 1.0;
    double momentum_ = 1.0;
    double mass_ = 1.0;
    double gamma_internal_ = 1.0;
};

}  // namespace sisyphus
