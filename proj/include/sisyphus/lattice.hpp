#pragma once

// Bipotential of a Jg=1/2 -> Je=3/2 atom in the 3D lin-perp-lin lattice,
// restricted to the (xOz) plane (y = 0 slice). See docs/lattice_field.md for
// the field decomposition behind polarization_intensities().

#include <Eigen/Core>
#include <cmath>
#include <numbers>

namespace sisyphus {

template <typename Scalar>
using Vector2 = Eigen::Matrix<Scalar, 2, 1>;
using Vec2 = Vector2<double>;

/// Ground-state sublevel m = +1/2 or m = -1/2.
enum class Sublevel : int { minus = -1, plus = +1 };

constexpr Sublevel flipped(Sublevel m) noexcept {
    return m == Sublevel::plus ? Sublevel::minus : Sublevel::plus;
}
constexpr int sign(Sublevel m) noexcept { return static_cast<int>(m); }

/// Physical knobs of the lattice. Exactly two of detuning, light shift and
/// pump rate are independent: light_shift / pump_rate == detuning / gamma.
class LatticeParams {
public:
    /// Validating constructor. Throws InvalidParameter unless 0 < theta < pi/2,
    /// gamma > 0, detuning < 0, pump_rate > 0 and the ratio law holds to
    /// relative 1e-12.
    LatticeParams(double theta, double gamma, double detuning, double light_shift,
                  double pump_rate);

    static LatticeParams from_light_shift_and_pump(double theta, double gamma,
                                                   double light_shift, double pump_rate);
    static LatticeParams from_detuning_and_light_shift(double theta, double gamma,
                                                       double detuning, double light_shift);
    static LatticeParams from_detuning_and_pump(double theta, double gamma, double detuning,
                                                double pump_rate);
    /// Intensity per beam in units of the saturation intensity. With
    /// s0 = I/I0 / (1 + 4 detuning^2 / gamma^2) the per-beam rates are
    /// pump_rate = gamma s0 / 2 and light_shift = detuning s0 / 2.
    static LatticeParams from_intensity(double theta, double gamma, double detuning,
                                        double intensity);

    double theta() const noexcept { return theta_; }
    double gamma() const noexcept { return gamma_; }
    double detuning() const noexcept { return detuning_; }
    double light_shift() const noexcept { return light_shift_; }
    double pump_rate() const noexcept { return pump_rate_; }
    /// Saturation parameter per beam implied by the rates.
    double saturation() const noexcept { return 2.0 * pump_rate_ / gamma_; }
    /// Intensity per beam in saturation units.
    double intensity() const noexcept {
        return saturation() * (1.0 + 4.0 * detuning_ * detuning_ / (gamma_ * gamma_));
    }

    double kx() const noexcept { return kx_; }
    double kz() const noexcept { return kz_; }
    /// lambda / sin(theta) with lambda = 2 pi.
    double lattice_constant_x() const noexcept { return 2.0 * std::numbers::pi / kx_; }
    /// lambda / (2 cos(theta)).
    double lattice_constant_z() const noexcept { return std::numbers::pi / kz_; }

    /// Largest pumping rate anywhere in the lattice: (2/9) * pump_rate * 2.
    double max_pump_rate() const noexcept { return 4.0 / 9.0 * pump_rate_; }
    /// Depth max - min of either potential surface: 3/2 |light_shift|.
    double well_depth() const noexcept { return 1.5 * std::abs(light_shift_); }
    /// Harmonic angular frequencies at a well bottom along x and z.
    double oscillation_frequency_x() const noexcept {
        return std::sqrt(2.0 * std::abs(light_shift_)) * kx_;
    }
    double oscillation_frequency_z() const noexcept {
        return std::sqrt(8.0 / 3.0 * std::abs(light_shift_)) * kz_;
    }

    /// Well bottom of the given sublevel inside the cell at the origin.
    Vec2 well_bottom(Sublevel m) const noexcept;

private:
    double theta_;
    double gamma_;
    double detuning_;
    double light_shift_;
    double pump_rate_;
    double kx_;
    double kz_;
};

/// Local circular intensity factors.
template <typename Scalar>
struct Polarization {
    Scalar plus;
    Scalar minus;

    Scalar of(Sublevel m) const noexcept { return m == Sublevel::plus ? plus : minus; }
};

/// s_pm = (1 + cos^2(kx x) -+ 2 cos(kx x) sin(2 kz z)) / 2.
template <typename Scalar>
Polarization<Scalar> polarization_intensities(const LatticeParams& params,
                                              const Vector2<Scalar>& r) {
    using std::cos;
    using std::sin;
    const Scalar c = cos(Scalar(params.kx()) * r.x());
    const Scalar s = sin(Scalar(2 * params.kz()) * r.y());
    const Scalar base = (Scalar(1) + c * c) / Scalar(2);
    const Scalar mix = c * s;
    return {base - mix, base + mix};
}

/// Light-shifted potential U_m = light_shift * (s_m + s_{-m} / 3).
template <typename Scalar>
Scalar potential(const LatticeParams& params, Sublevel m, const Vector2<Scalar>& r) {
    const auto s = polarization_intensities(params, r);
    return Scalar(params.light_shift()) * (s.of(m) + s.of(flipped(m)) / Scalar(3));
}

/// Optical pumping rate out of sublevel `from`: (2/9) pump_rate s_{-from}.
template <typename Scalar>
Scalar pump_rate(const LatticeParams& params, Sublevel from, const Vector2<Scalar>& r) {
    const auto s = polarization_intensities(params, r);
    return Scalar(2.0 / 9.0 * params.pump_rate()) * s.of(flipped(from));
}

/// Dipole force -grad U_m.
template <typename Scalar>
Vector2<Scalar> force(const LatticeParams& params, Sublevel m, const Vector2<Scalar>& r) {
    using std::cos;
    using std::sin;
    const Scalar kx(params.kx());
    const Scalar kz2(2 * params.kz());
    const Scalar c = cos(kx * r.x());
    const Scalar sx = sin(kx * r.x());
    const Scalar s = sin(kz2 * r.y());
    const Scalar cz = cos(kz2 * r.y());
    // U_m = (2/3) light_shift (1 + c^2 - sign(m) c s)
    const Scalar a = Scalar(2.0 / 3.0 * params.light_shift());
    const Scalar sg(sign(m));
    Vector2<Scalar> f;
    f.x() = a * (Scalar(2) * c - sg * s) * kx * sx;
    f.y() = a * sg * c * kz2 * cz;
    return f;
}

/// Everything the integrator needs at one point, from a single pair of
/// trigonometric evaluations.
struct SurfaceSample {
    double potential;
    Vec2 force;
    double pump_rate;     // out of the current sublevel
    double elastic_rate;  // sublevel-preserving scattering rate
};

inline SurfaceSample sample_surface(const LatticeParams& params, Sublevel m, const Vec2& r) {
    const double kx = params.kx();
    const double kz2 = 2.0 * params.kz();
    const double c = std::cos(kx * r.x());
    const double sx = std::sin(kx * r.x());
    const double s = std::sin(kz2 * r.y());
    const double cz = std::cos(kz2 * r.y());
    const double sg = sign(m);
    const double base = 0.5 * (1.0 + c * c);
    const double own = base - sg * c * s;    // s_m
    const double other = base + sg * c * s;  // s_{-m}
    const double a = 2.0 / 3.0 * params.light_shift();
    SurfaceSample out;
    out.potential = params.light_shift() * (own + other / 3.0);
    out.force = Vec2(a * (2.0 * c - sg * s) * kx * sx, a * sg * c * kz2 * cz);
    out.pump_rate = 2.0 / 9.0 * params.pump_rate() * other;
    // Total scattering out of m is pump_rate_per_beam * (s_m + s_{-m} / 3);
    // the part not changing the sublevel is s_m + s_{-m} / 9.
    out.elastic_rate = params.pump_rate() * (own + other / 9.0);
    return out;
}

}  // namespace sisyphus
