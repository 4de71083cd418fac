#include "sisyphus/stats.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/poisson.hpp>

#include "sisyphus/errors.hpp"

namespace sisyphus {

MeanEstimate mean_with_error(std::span<const double> values) {
    if (values.empty()) throw InsufficientData("mean of an empty sample");
    const double n = static_cast<double>(values.size());
    double sum = 0.0;
    for (double v : values) sum += v;
    const double mean = sum / n;
    if (values.size() < 2) return {mean, 0.0};
    double ss = 0.0;
    for (double v : values) ss += (v - mean) * (v - mean);
    return {mean, std::sqrt(ss / (n - 1.0) / n)};
}

LineFit fit_line(std::span<const double> x, std::span<const double> y,
                 std::span<const double> weights) {
    const std::size_t n = x.size();
    if (y.size() != n || (!weights.empty() && weights.size() != n)) {
        throw InvalidParameter("fit_line: size mismatch");
    }
    if (n < 2) throw InsufficientData("fit_line needs at least two points");
    double sw = 0, sx = 0, sy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double w = weights.empty() ? 1.0 : weights[i];
        sw += w;
        sx += w * x[i];
        sy += w * y[i];
    }
    const double xm = sx / sw;
    const double ym = sy / sw;
    double sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double w = weights.empty() ? 1.0 : weights[i];
        sxx += w * (x[i] - xm) * (x[i] - xm);
        sxy += w * (x[i] - xm) * (y[i] - ym);
    }
    if (!(sxx > 0.0)) throw InsufficientData("fit_line: abscissae are all equal");
    LineFit fit;
    fit.slope = sxy / sxx;
    fit.intercept = ym - fit.slope * xm;
    double chi2 = 0, ss_res = 0, ss_tot = 0, plain_mean = 0;
    for (std::size_t i = 0; i < n; ++i) plain_mean += y[i];
    plain_mean /= static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double w = weights.empty() ? 1.0 : weights[i];
        const double r = y[i] - fit.slope * x[i] - fit.intercept;
        chi2 += w * r * r;
        ss_res += r * r;
        ss_tot += (y[i] - plain_mean) * (y[i] - plain_mean);
    }
    const double red = n > 2 ? chi2 / static_cast<double>(n - 2) : 0.0;
    fit.slope_err = std::sqrt(red / sxx);
    fit.intercept_err = std::sqrt(red * (1.0 / sw + xm * xm / sxx));
    fit.r_squared = ss_tot > 0.0 ? std::clamp(1.0 - ss_res / ss_tot, 0.0, 1.0) : 1.0;
    return fit;
}

ProportionalFit fit_proportional(std::span<const double> x, std::span<const double> y,
                                 std::span<const double> weights) {
    const std::size_t n = x.size();
    if (y.size() != n || (!weights.empty() && weights.size() != n)) {
        throw InvalidParameter("fit_proportional: size mismatch");
    }
    if (n < 1) throw InsufficientData("fit_proportional needs at least one point");
    double sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double w = weights.empty() ? 1.0 : weights[i];
        sxx += w * x[i] * x[i];
        sxy += w * x[i] * y[i];
    }
    if (!(sxx > 0.0)) throw InsufficientData("fit_proportional: all abscissae are zero");
    ProportionalFit fit;
    fit.slope = sxy / sxx;
    double chi2 = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double w = weights.empty() ? 1.0 : weights[i];
        const double r = y[i] - fit.slope * x[i];
        chi2 += w * r * r;
        if (y[i] != 0.0) {
            fit.max_relative_residual = std::max(fit.max_relative_residual, std::abs(r / y[i]));
        }
    }
    const double red = n > 1 ? chi2 / static_cast<double>(n - 1) : 0.0;
    fit.slope_err = std::sqrt(red / sxx);
    return fit;
}

double runs_test_z(std::span<const double> residuals) {
    std::size_t pos = 0, neg = 0, runs = 0;
    int last = 0;
    for (double r : residuals) {
        if (r == 0.0) continue;
        const int s = r > 0 ? 1 : -1;
        (s > 0 ? pos : neg)++;
        if (s != last) ++runs;
        last = s;
    }
    const double np = static_cast<double>(pos);
    const double nn = static_cast<double>(neg);
    const double n = np + nn;
    if (pos == 0 || neg == 0 || n < 3) return 0.0;
    const double mu = 2.0 * np * nn / n + 1.0;
    const double var = (mu - 1.0) * (mu - 2.0) / (n - 1.0);
    if (!(var > 0.0)) return 0.0;
    return (static_cast<double>(runs) - mu) / std::sqrt(var);
}

double ks_two_sample_p(std::span<const double> a, std::span<const double> b) {
    if (a.empty() || b.empty()) throw InsufficientData("KS test needs two non-empty samples");
    std::vector<double> x(a.begin(), a.end());
    std::vector<double> y(b.begin(), b.end());
    std::sort(x.begin(), x.end());
    std::sort(y.begin(), y.end());
    const double nx = static_cast<double>(x.size());
    const double ny = static_cast<double>(y.size());
    std::size_t i = 0, j = 0;
    double d = 0.0;
    while (i < x.size() && j < y.size()) {
        const double v = std::min(x[i], y[j]);
        while (i < x.size() && x[i] <= v) ++i;
        while (j < y.size() && y[j] <= v) ++j;
        d = std::max(d, std::abs(static_cast<double>(i) / nx - static_cast<double>(j) / ny));
    }
    const double ne = nx * ny / (nx + ny);
    const double sq = std::sqrt(ne);
    const double lambda = (sq + 0.12 + 0.11 / sq) * d;
    // Kolmogorov distribution tail Q(lambda) = 2 sum (-1)^(k-1) exp(-2 k^2 lambda^2).
    if (lambda < 1e-3) return 1.0;
    double sum = 0.0, sign = 1.0;
    for (int k = 1; k <= 200; ++k) {
        const double term = sign * std::exp(-2.0 * k * k * lambda * lambda);
        sum += term;
        if (std::abs(term) < 1e-12 * std::abs(sum)) break;
        sign = -sign;
    }
    return std::clamp(2.0 * sum, 0.0, 1.0);
}

double chi_square_survival(double statistic, double dof) {
    boost::math::chi_squared dist(dof);
    return boost::math::cdf(boost::math::complement(dist, statistic));
}

double poisson_cdf(long k, double mean) {
    if (k < 0) return 0.0;
    boost::math::poisson_distribution<double> dist(mean);
    return boost::math::cdf(dist, static_cast<double>(k));
}

}  // namespace sisyphus
