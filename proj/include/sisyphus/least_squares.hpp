#pragma once

// Small dense Levenberg-Marquardt solver for curve fits with a handful of
// parameters. Models are callables
//     double model(double x, const Params& p, Params& gradient)
// returning f(x; p) and writing df/dp into `gradient`.

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <cstdio>
#include <span>
#include <string>
#include <vector>

#include "sisyphus/errors.hpp"

namespace sisyphus {

template <int N>
using ParamVector = Eigen::Matrix<double, N, 1>;

template <int N>
struct LeastSquaresResult {
    ParamVector<N> params;
    Eigen::Matrix<double, N, N> covariance;  // scaled by the reduced chi^2
    double chi2 = 0.0;
    double scaled_gradient = 0.0;
    int iterations = 0;
    std::vector<std::string> trace;
};

struct LeastSquaresSettings {
    double gradient_tolerance = 1e-10;
    /// Accepted when no step lowers chi2 any more and the gradient is below this.
    double stall_tolerance = 1e-6;
    int max_iterations = 500;
};

/// Weighted nonlinear least squares. Convergence is declared when
/// max_i |dchi2/dp_i * p_i| / sum w y^2 drops below the tolerance, or
/// below the stall tolerance once no damped step improves chi2.
/// Throws FitFailed with the iterate trace otherwise.
template <int N, typename Model>
LeastSquaresResult<N> levenberg_marquardt(const Model& model, std::span<const double> x,
                                          std::span<const double> y,
                                          std::span<const double> weights, ParamVector<N> p,
                                          const LeastSquaresSettings& settings = {}) {
    using Matrix = Eigen::Matrix<double, N, N>;
    using Vector = ParamVector<N>;
    const std::size_t n = x.size();
    auto weight = [&](std::size_t i) { return weights.empty() ? 1.0 : weights[i]; };

    double scale = 0.0;
    for (std::size_t i = 0; i < n; ++i) scale += weight(i) * y[i] * y[i];
    if (!(scale > 0.0)) scale = 1.0;

    auto evaluate = [&](const Vector& q, Matrix* jtj, Vector* jtr) {
        double chi2 = 0.0;
        Vector grad;
        if (jtj) jtj->setZero();
        if (jtr) jtr->setZero();
        for (std::size_t i = 0; i < n; ++i) {
            const double r = y[i] - model(x[i], q, grad);
            const double w = weight(i);
            chi2 += w * r * r;
            if (jtj) jtj->noalias() += w * grad * grad.transpose();
            if (jtr) jtr->noalias() += w * r * grad;
        }
        return chi2;
    };
    auto gradient_norm = [&](const Vector& q, const Vector& jtr) {
        // dchi2/dp = -2 J^T W r
        return (2.0 * jtr.cwiseProduct(q.cwiseAbs().cwiseMax(1e-300))).cwiseAbs().maxCoeff() /
               scale;
    };

    LeastSquaresResult<N> out;
    Matrix jtj;
    Vector jtr;
    double chi2 = evaluate(p, &jtj, &jtr);
    double lambda = 1e-3;
    bool stalled = false;
    char line[200];
    for (int it = 0; it < settings.max_iterations; ++it) {
        const double g = gradient_norm(p, jtr);
        std::snprintf(line, sizeof line, "iter %d chi2 %.9g grad %.3g lambda %.3g", it, chi2, g,
                      lambda);
        out.trace.emplace_back(line);
        if (!std::isfinite(chi2)) break;
        if (g < settings.gradient_tolerance || (stalled && g < settings.stall_tolerance)) {
            out.params = p;
            out.chi2 = chi2;
            out.scaled_gradient = g;
            out.iterations = it;
            const double dof = n > static_cast<std::size_t>(N) ? static_cast<double>(n - N) : 1.0;
            const double red = chi2 / dof;
            Eigen::FullPivLU<Matrix> lu(jtj);
            out.covariance = lu.isInvertible()
                                 ? Matrix(lu.inverse() * red)
                                 : Matrix::Constant(std::numeric_limits<double>::infinity());
            return out;
        }
        bool improved = false;
        while (lambda < 1e20) {
            Matrix damped = jtj;
            damped.diagonal() += lambda * jtj.diagonal().cwiseMax(1e-300);
            const Vector delta = damped.ldlt().solve(jtr);
            const Vector trial = p + delta;
            Matrix trial_jtj;
            Vector trial_jtr;
            const double trial_chi2 = evaluate(trial, &trial_jtj, &trial_jtr);
            if (std::isfinite(trial_chi2) && trial_chi2 < chi2) {
                p = trial;
                chi2 = trial_chi2;
                jtj = trial_jtj;
                jtr = trial_jtr;
                lambda = std::max(lambda * 0.1, 1e-12);
                improved = true;
                break;
            }
            lambda *= 10.0;
        }
        if (!improved) {
            if (stalled) break;
            stalled = true;
            --it;  // re-test convergence at the same iterate
        }
    }
    throw FitFailed("least squares did not converge", std::move(out.trace));
}

}  // namespace sisyphus
