#pragma once

#include <cstddef>
#include <span>

namespace sisyphus {

struct MeanEstimate {
    double mean = 0.0;
    double error = 0.0;
};

/// Sample mean and its standard error (n - 1 variance).
MeanEstimate mean_with_error(std::span<const double> values);

struct LineFit {
    double slope = 0.0;
    double intercept = 0.0;
    double slope_err = 0.0;
    double intercept_err = 0.0;
    double r_squared = 0.0;  // unweighted coefficient of determination
};

/// Weighted least-squares line y = slope x + intercept. Empty `weights`
/// means uniform weights. Parameter errors are scaled by the reduced chi^2.
LineFit fit_line(std::span<const double> x, std::span<const double> y,
                 std::span<const double> weights = {});

struct ProportionalFit {
    double slope = 0.0;
    double slope_err = 0.0;
    double max_relative_residual = 0.0;  // max |y - slope x| / |y|
};

/// Weighted least-squares line through the origin y = slope x.
ProportionalFit fit_proportional(std::span<const double> x, std::span<const double> y,
                                 std::span<const double> weights = {});

/// Wald-Wolfowitz runs test on the signs of the residuals; returns the
/// z-score (0 when the test is undefined).
double runs_test_z(std::span<const double> residuals);

/// Two-sample Kolmogorov-Smirnov test; returns the asymptotic p-value.
double ks_two_sample_p(std::span<const double> a, std::span<const double> b);

/// Upper tail of the chi-square distribution.
double chi_square_survival(double statistic, double dof);

/// Lower tail of the Poisson distribution P(N <= k).
double poisson_cdf(long k, double mean);

}  // namespace sisyphus
