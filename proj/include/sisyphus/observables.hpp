#pragma once

// Physics numbers extracted from ensemble series: kinetic temperatures,
// exponential damping of the temperature, spatial diffusion, friction by the
// drift and Einstein routes, and the trapped/traveling decomposition.

#include <array>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "sisyphus/dynamics.hpp"

namespace sisyphus {

inline constexpr double nan_value = std::numeric_limits<double>::quiet_NaN();

/// Value with one-sigma uncertainty.
struct Estimate {
    double value = nan_value;
    double error = nan_value;
};

/// Variance of the samples about their mean (M = k_B = 1).
double kinetic_temperature(std::span<const double> velocities);
/// Mean kinetic energy per atom in the cloud frame, equal to T/2.
double kinetic_energy(std::span<const double> velocities);

/// unresolved: the fitted decay finishes inside the first sample interval.
enum class FitStatus { ok, degenerate, unresolved };

/// T(t) = T_f + (T_i - T_f) exp(-gamma t).
struct RelaxationFit {
    std::string axis;
    FitStatus status = FitStatus::ok;
    Estimate initial_temperature;
    Estimate final_temperature;
    Estimate gamma;
    double goodness = 0.0;  // coefficient of determination
    double runs_z = 0.0;    // runs test on residual signs
    std::size_t n_points = 0;
    double span = 0.0;      // covered time
    int iterations = 0;

    bool ok() const noexcept { return status == FitStatus::ok; }
    /// span * gamma; the fit is trustworthy only when this is >= 2.
    double coverage() const noexcept { return span * gamma.value; }
};

/// Weighted nonlinear least squares of the relaxation law. `point_errors`
/// (optional) are per-point standard errors used as 1/sigma^2 weights. Needs >= 5
/// points. A statistically constant series returns status degenerate;
/// non-convergence throws FitFailed.
RelaxationFit fit_relaxation(std::span<const double> times, std::span<const double> temperature,
                             std::span<const double> point_errors = {}, std::string axis = {});

struct TimeWindow {
    double start = 0.0;
    double end = std::numeric_limits<double>::infinity();
};

enum class DiffusionStatus { ok, poor_linear_fit, not_diffusive };

struct DiffusionFit {
    DiffusionStatus status = DiffusionStatus::ok;
    Estimate coefficient;  // slope / 2
    double intercept = 0.0;
    double quality = 0.0;  // R^2 of the linear fit
    std::size_t n_points = 0;
    bool ok() const noexcept { return status == DiffusionStatus::ok; }
};

inline constexpr double diffusion_quality_threshold = 0.99;

/// Linear fit MSD = 2 D t + b inside the window. Throws InsufficientData for
/// fewer than 10 points in the window.
DiffusionFit fit_diffusion(std::span<const double> times, std::span<const double> msd,
                           std::span<const double> msd_stderr, TimeWindow window);

/// Steady-state drift velocity measured under a constant applied force.
struct DriftPoint {
    double force = 0.0;
    double velocity = 0.0;
    double velocity_error = 0.0;
};

struct FrictionFit {
    Estimate alpha;
    std::vector<double> per_point_alpha;
    double max_deviation = 0.0;  // max |alpha_k / alpha - 1|
};

/// alpha from the slope of <v> = F / alpha through the origin. Needs at least
/// one point; every force must be non-zero. Throws ForceTooSmall when a
/// velocity is within 3 sigma of zero and ForceTooLarge when a per-point
/// alpha deviates from the slope by more than `linearity_tolerance` beyond
/// its 2-sigma statistical band.
FrictionFit friction_drift(std::span<const DriftPoint> points, double linearity_tolerance = 0.1);

/// alpha = k_B T / D_s with quadrature error propagation.
Estimate friction_einstein(Estimate temperature, Estimate diffusion);

/// Spatial diffusion and both friction estimates for one axis.
struct TransportResult {
    std::string axis;
    Estimate diffusion;
    Estimate alpha_drift;
    Estimate alpha_einstein;
};

/// Trapped/traveling decomposition of a steady ensemble.
struct PopulationSplit {
    std::vector<double> times;
    std::vector<double> trapped_fraction;
    Estimate steady_trapped_fraction;
    bool insufficient_statistics = false;
    struct ClassAxis {
        bool fitted = false;
        Estimate gamma;          // damping rate of the class temperature
        double alpha = nan_value;  // alpha / M used for the comparison
    };
    std::array<ClassAxis, 2> traveling;
    std::array<ClassAxis, 2> trapped;
    /// (2 alpha / M) / Gamma_T for the whole ensemble, per axis.
    std::array<double, 2> ensemble_ratio{nan_value, nan_value};
    /// (2 alpha / M) / Gamma_T of travelers; close to 1 for Brownian atoms.
    std::array<double, 2> traveling_ratio{nan_value, nan_value};
    /// Gamma_T / (alpha / M) of trapped atoms; small when they do not cool.
    std::array<double, 2> trapped_ratio{nan_value, nan_value};
    std::array<bool, 2> traveling_brownian{false, false};
    std::array<bool, 2> trapped_not_cooling{false, false};
};

inline constexpr std::size_t min_class_size = 100;

/// `alpha` and `relaxation` are per axis (x, z). The steady window selects the
/// samples used for the steady trapped fraction and the class statistics.
PopulationSplit subpopulation_report(const EnsembleSeries& series,
                                     const std::array<Estimate, 2>& alpha,
                                     const std::array<RelaxationFit, 2>& relaxation,
                                     TimeWindow steady, TimeWindow relax);

}  // namespace sisyphus
