#pragma once

#include "fracinv/error.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <tuple>
#include <vector>

namespace fracinv {

/// Nodes and weights of an interpolatory rule on [-1, 1].
struct GaussRule {
    std::vector<double> nodes;
    std::vector<double> weights;

    [[nodiscard]] std::size_t size() const noexcept { return nodes.size(); }
};

namespace detail {

inline GaussRule compute_gauss_legendre(int n)
{
    GaussRule rule;
    rule.nodes.resize(static_cast<std::size_t>(n));
    rule.weights.resize(static_cast<std::size_t>(n));
    const int half = (n + 1) / 2;
    for (int i = 0; i < half; ++i) {
        double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            double p0 = 1.0;
            double p1 = x;
            for (int k = 2; k <= n; ++k) {
                const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            dp = n * (x * p1 - p0) / (x * x - 1.0);
            const double dx = p1 / dp;
            x -= dx;
            if (std::fabs(dx) < 1e-16)
                break;
        }
        double p0 = 1.0;
        double p1 = x;
        for (int k = 2; k <= n; ++k) {
            const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
            p0 = p1;
            p1 = p2;
        }
        dp = n * (x * p1 - p0) / (x * x - 1.0);
        const double w = 2.0 / ((1.0 - x * x) * dp * dp);
        rule.nodes[static_cast<std::size_t>(i)] = -x;
        rule.nodes[static_cast<std::size_t>(n - 1 - i)] = x;
        rule.weights[static_cast<std::size_t>(i)] = w;
        rule.weights[static_cast<std::size_t>(n - 1 - i)] = w;
    }
    return rule;
}

// Golub-Welsch for the Jacobi weight (1-x)^a (1+x)^b on [-1, 1].
inline GaussRule compute_gauss_jacobi(int n, double a, double b)
{
    Eigen::MatrixXd J = Eigen::MatrixXd::Zero(n, n);
    for (int k = 0; k < n; ++k) {
        const double s = 2.0 * k + a + b;
        double diag;
        if (k == 0)
            diag = (b - a) / (a + b + 2.0);
        else
            diag = (b * b - a * a) / (s * (s + 2.0));
        J(k, k) = diag;
        if (k + 1 < n) {
            const double kk = k + 1.0;
            const double s1 = 2.0 * kk + a + b;
            const double off = std::sqrt(4.0 * kk * (kk + a) * (kk + b) * (kk + a + b) / (s1 * s1 * (s1 + 1.0) * (s1 - 1.0)));
            J(k, k + 1) = off;
            J(k + 1, k) = off;
        }
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(J);
    if (eig.info() != Eigen::Success)
        fail(ErrorKind::QuadratureFailure, "Gauss-Jacobi eigenproblem failed");
    const double mu0 = std::exp((a + b + 1.0) * std::log(2.0) + std::lgamma(a + 1.0) + std::lgamma(b + 1.0)
                                - std::lgamma(a + b + 2.0));
    GaussRule rule;
    rule.nodes.resize(static_cast<std::size_t>(n));
    rule.weights.resize(static_cast<std::size_t>(n));
    for (int k = 0; k < n; ++k) {
        rule.nodes[static_cast<std::size_t>(k)] = eig.eigenvalues()(k);
        const double v = eig.eigenvectors()(0, k);
        rule.weights[static_cast<std::size_t>(k)] = mu0 * v * v;
    }
    return rule;
}

} // namespace detail

/// Cached Gauss-Legendre rule with n points (thread-safe).
inline const GaussRule& gauss_legendre(int n)
{
    if (n < 1)
        fail(ErrorKind::InvalidParameters, "Gauss-Legendre needs at least one node");
    static std::mutex mutex;
    static std::map<int, std::unique_ptr<GaussRule>> cache;
    std::lock_guard lock(mutex);
    auto& slot = cache[n];
    if (!slot)
        slot = std::make_unique<GaussRule>(detail::compute_gauss_legendre(n));
    return *slot;
}

/// Cached Gauss-Jacobi rule for weight (1-x)^a (1+x)^b, a, b > -1.
inline const GaussRule& gauss_jacobi(int n, double a, double b)
{
    if (n < 1 || !(a > -1.0) || !(b > -1.0))
        fail(ErrorKind::InvalidParameters, "invalid Gauss-Jacobi parameters");
    static std::mutex mutex;
    static std::map<std::tuple<int, double, double>, std::unique_ptr<GaussRule>> cache;
    std::lock_guard lock(mutex);
    auto& slot = cache[{n, a, b}];
    if (!slot)
        slot = std::make_unique<GaussRule>(detail::compute_gauss_jacobi(n, a, b));
    return *slot;
}

/// Integral of fn over [lo, hi] with an n-point Gauss-Legendre rule.
template <typename Fn>
double integrate_gl(Fn&& fn, double lo, double hi, int n)
{
    const auto& rule = gauss_legendre(n);
    const double half = 0.5 * (hi - lo);
    const double mid = 0.5 * (hi + lo);
    double acc = 0.0;
    for (std::size_t q = 0; q < rule.size(); ++q)
        acc += rule.weights[q] * fn(mid + half * rule.nodes[q]);
    return half * acc;
}

/// Integral of s^(beta-1) g(s) over [0, delta] with an n-point Gauss-Jacobi rule.
template <typename Fn>
double integrate_gj_left(Fn&& g, double delta, double beta, int n)
{
    // s = delta (1 + x) / 2, weight (1+x)^(beta-1)
    const auto& rule = gauss_jacobi(n, 0.0, beta - 1.0);
    const double scale = std::pow(0.5 * delta, beta);
    double acc = 0.0;
    for (std::size_t q = 0; q < rule.size(); ++q)
        acc += rule.weights[q] * g(0.5 * delta * (1.0 + rule.nodes[q]));
    return scale * acc;
}

} // namespace fracinv
