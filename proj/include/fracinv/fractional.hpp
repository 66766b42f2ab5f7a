#pragma once

// Discrete fractional calculus on uniformly sampled signals: the multi-term
// Caputo derivative (L1 scheme, optionally with starting corrections for
// weakly singular signals), the Riemann-Liouville integral (product
// trapezoidal rule) and Laplace convolution against relaxation kernels.

#include "fracinv/error.hpp"
#include "fracinv/mlf.hpp"
#include "fracinv/quadrature.hpp"
#include "fracinv/time_series.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <set>
#include <span>
#include <string>
#include <vector>

namespace fracinv {

struct CaputoTerm {
    double psi = 0.0;   // weight, >= 0
    double order = 0.5; // alpha_i

    friend bool operator==(const CaputoTerm&, const CaputoTerm&) = default;
};

/// D^alpha + sum_i psi_i D^alpha_i with 0 < alpha_m < ... < alpha_1 < alpha <= 1.
struct FractionalOperatorSpec {
    double alpha = 1.0;
    std::vector<CaputoTerm> terms;

    void validate() const
    {
        if (!(alpha > 0.0 && alpha <= 1.0))
            fail(ErrorKind::InvalidSpec, "leading order alpha must lie in (0, 1], got " + std::to_string(alpha));
        double previous = alpha;
        for (std::size_t i = 0; i < terms.size(); ++i) {
            const auto& term = terms[i];
            if (!(term.psi >= 0.0) || !std::isfinite(term.psi))
                fail(ErrorKind::InvalidSpec, "psi_" + std::to_string(i + 1) + " must be non-negative");
            if (!(term.order > 0.0 && term.order < previous))
                fail(ErrorKind::InvalidSpec,
                     "orders must satisfy 0 < alpha_m < ... < alpha_1 < alpha (violated at alpha_"
                         + std::to_string(i + 1) + " = " + std::to_string(term.order) + ")");
            previous = term.order;
        }
    }

    /// Kernel e_{(psi_1(alpha-alpha_1), ..., psi_m(alpha-alpha_m), sigma alpha), eta}
    /// solving D T + sigma T = forcing in Laplace space.
    [[nodiscard]] RelaxationKernelSpec solution_kernel(double sigma, double eta) const
    {
        RelaxationKernelSpec spec{eta, {}};
        for (const auto& term : terms)
            spec.terms.push_back({term.psi, alpha - term.order});
        spec.terms.push_back({sigma, alpha});
        return spec;
    }

    friend bool operator==(const FractionalOperatorSpec&, const FractionalOperatorSpec&) = default;
};

/// Exponents gamma for which the corrected Caputo scheme is made exact on t^gamma:
/// alpha plus non-negative combinations of {alpha, 1, alpha - alpha_i}, and 1 itself,
/// restricted to gamma < cutoff. These are the leading powers of solutions of
/// multi-term relaxation equations with smooth data.
inline std::vector<double> singular_exponents(const FractionalOperatorSpec& op, std::size_t max_count = 4,
                                              double cutoff = 2.0)
{
    std::vector<double> generators{op.alpha, 1.0};
    for (const auto& term : op.terms)
        if (term.psi > 0.0)
            generators.push_back(op.alpha - term.order);
    std::set<double> found{1.0};
    std::vector<double> frontier{op.alpha};
    while (!frontier.empty()) {
        const double g = frontier.back();
        frontier.pop_back();
        if (g >= cutoff - 1e-12)
            continue;
        // exponents closer than 1e-9 are the same power
        bool dup = false;
        for (double f : found)
            dup = dup || std::fabs(f - g) < 1e-9;
        if (dup)
            continue;
        found.insert(g);
        for (double step : generators)
            frontier.push_back(g + step);
    }
    std::vector<double> out(found.begin(), found.end());
    if (out.size() > max_count)
        out.resize(max_count);
    return out;
}

struct CaputoOptions {
    /// Powers t^gamma differentiated exactly through starting weights; empty = plain L1.
    std::vector<double> exact_powers;
};

namespace detail {

/// Combined L1 lag weights d_l, so that D u(t_j) ~ sum_{l<j} d_l (u_{j-l} - u_{j-l-1}).
inline std::vector<double> l1_weights(const FractionalOperatorSpec& op, const TimeGrid& grid)
{
    const std::size_t n = static_cast<std::size_t>(grid.intervals());
    const double h = grid.step();
    std::vector<double> d(n, 0.0);
    auto add_order = [&](double coeff, double xi) {
        if (coeff == 0.0)
            return;
        const double scale = coeff * std::pow(h, -xi) / std::tgamma(2.0 - xi);
        if (xi == 1.0) {
            d[0] += scale;
            return;
        }
        for (std::size_t l = 0; l < n; ++l) {
            const double b = std::pow(double(l + 1), 1.0 - xi) - std::pow(double(l), 1.0 - xi);
            d[l] += scale * b;
        }
    };
    add_order(1.0, op.alpha);
    for (const auto& term : op.terms)
        add_order(term.psi, term.order);
    return d;
}

inline std::vector<double> apply_l1(std::span<const double> d, std::span<const double> u)
{
    const std::size_t count = u.size();
    std::vector<double> out(count, 0.0);
    std::vector<double> du(count > 0 ? count - 1 : 0);
    for (std::size_t i = 0; i + 1 < count; ++i)
        du[i] = u[i + 1] - u[i];
    for (std::size_t j = 1; j < count; ++j) {
        double acc = 0.0;
        for (std::size_t l = 0; l < j; ++l)
            acc += d[l] * du[j - l - 1];
        out[j] = acc;
    }
    return out;
}

} // namespace detail

/// Multi-term Caputo derivative of a sampled signal. The value at t_0 is 0.
inline TimeSeries caputo_multiterm(const TimeSeries& signal, const FractionalOperatorSpec& op,
                                   const CaputoOptions& opts = {})
{
    op.validate();
    const TimeGrid& grid = signal.grid();
    if (grid.intervals() < 2)
        fail(ErrorKind::GridTooCoarse, "Caputo derivative needs at least two intervals");
    const auto d = detail::l1_weights(op, grid);
    TimeSeries out(grid, detail::apply_l1(d, signal.values()));

    const std::size_t m = opts.exact_powers.size();
    if (m == 0)
        return out;
    if (static_cast<std::size_t>(grid.intervals()) < m)
        fail(ErrorKind::GridTooCoarse, "too few intervals for the requested starting corrections");

    // Starting weights W_{j,r}, r = 1..m, make the scheme exact on t^gamma_q.
    const double h = grid.step();
    Eigen::MatrixXd V(m, m);
    for (std::size_t q = 0; q < m; ++q)
        for (std::size_t r = 0; r < m; ++r)
            V(q, r) = std::pow(double(r + 1), opts.exact_powers[q]);
    const Eigen::FullPivLU<Eigen::MatrixXd> lu(V);
    if (!lu.isInvertible())
        fail(ErrorKind::InvalidParameters, "starting-correction exponents are degenerate");

    Eigen::MatrixXd defect(m, grid.size()); // exact - L1 on t^gamma_q, scaled by h^-gamma_q
    for (std::size_t q = 0; q < m; ++q) {
        const double gamma = opts.exact_powers[q];
        std::vector<double> powers(grid.size());
        for (std::size_t j = 0; j < powers.size(); ++j)
            powers[j] = std::pow(double(j), gamma); // (t_j/h)^gamma
        const auto l1 = detail::apply_l1(d, powers);
        for (std::size_t j = 0; j < grid.size(); ++j) {
            double exact = 0.0;
            if (j > 0) {
                const double tj = double(j);
                auto add = [&](double coeff, double xi) {
                    if (coeff != 0.0)
                        exact += coeff * std::tgamma(gamma + 1.0) / std::tgamma(gamma + 1.0 - xi)
                                 * std::pow(tj, gamma - xi) * std::pow(h, -xi);
                };
                add(1.0, op.alpha);
                for (const auto& term : op.terms)
                    add(term.psi, term.order);
            }
            defect(q, j) = exact - l1[j];
        }
    }
    const Eigen::MatrixXd W = lu.solve(defect); // W(r, j)
    const auto u = signal.values();
    for (std::size_t j = 1; j < grid.size(); ++j) {
        double corr = 0.0;
        for (std::size_t r = 0; r < m; ++r)
            corr += W(r, j) * (u[r + 1] - u[0]);
        out[j] += corr;
    }
    return out;
}

/// Riemann-Liouville integral of order xi by product integration of the
/// piecewise-linear interpolant (exact for linear signals).
inline TimeSeries rl_integral(const TimeSeries& signal, double xi)
{
    if (!(xi > 0.0) || !std::isfinite(xi))
        fail(ErrorKind::InvalidOrder, "integral order must be positive, got " + std::to_string(xi));
    const TimeGrid& grid = signal.grid();
    const std::size_t count = grid.size();
    const double scale = std::pow(grid.step(), xi) / std::tgamma(xi + 2.0);
    std::vector<double> p(count + 1);
    for (std::size_t l = 0; l < p.size(); ++l)
        p[l] = std::pow(double(l), xi + 1.0);
    const auto u = signal.values();
    TimeSeries out(grid);
    for (std::size_t j = 1; j < count; ++j) {
        double acc = (p[j - 1] - (double(j) - xi - 1.0) * std::pow(double(j), xi)) * u[0];
        for (std::size_t i = 1; i < j; ++i) {
            const std::size_t l = j - i;
            acc += (p[l + 1] - 2.0 * p[l] + p[l - 1]) * u[i];
        }
        acc += u[j];
        out[j] = scale * acc;
    }
    return out;
}

struct ConvolutionOptions {
    int panel_nodes = 8;   // Gauss-Legendre per panel, doubled for validation
    int jacobi_nodes = 16; // at the singular end, doubled for validation
    double rel_tol = 1e-7;
    int max_depth = 24;
    KernelOptions kernel{};
};

/// Laplace convolution (g * e)(t_j) = int_0^{t_j} g(tau) e(t_j - tau) dtau on a
/// uniform grid. g is replaced by its causal piecewise-cubic interpolant; the
/// kernel moments per lag are computed once (Gauss-Jacobi at the singular end,
/// geometrically graded Gauss-Legendre panels elsewhere, each validated by
/// node doubling), so applying the operator costs O(N^2).
class ConvolutionOperator {
public:
    ConvolutionOperator() = default;

    ConvolutionOperator(const RelaxationKernelSpec& spec, const TimeGrid& grid, ConvolutionOptions opts = {})
        : grid_(grid), opts_(opts), kernel_(spec, opts.kernel)
    {
        spec.validate();
        compute_moments();
        build_weights();
    }

    [[nodiscard]] const TimeGrid& grid() const noexcept { return grid_; }
    [[nodiscard]] const RelaxationKernelSpec& spec() const noexcept { return kernel_.spec(); }

    /// h * int_0^1 e((l+1-u) h) u^p du, p = 0..3: moments of lag l.
    [[nodiscard]] const std::array<double, 4>& moments(std::size_t lag) const { return moments_[lag]; }

    [[nodiscard]] TimeSeries apply(const TimeSeries& g) const
    {
        if (!(g.grid() == grid_))
            fail(ErrorKind::InvalidParameters, "convolution signal sampled on a different grid");
        const auto v = g.values();
        TimeSeries out(grid_);
        const std::size_t count = grid_.size();
        for (std::size_t j = 1; j < count; ++j) {
            double acc = 0.0;
            for_each_weight(j, [&](std::size_t idx, double w) { acc += w * v[idx]; });
            out[j] = acc;
        }
        return out;
    }

    /// Dense matrix M with (g * e)(t_j) = sum_i M(j, i) g_i; row 0 is zero.
    [[nodiscard]] Eigen::MatrixXd matrix() const
    {
        const std::size_t count = grid_.size();
        Eigen::MatrixXd M = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(count), static_cast<Eigen::Index>(count));
        for (std::size_t j = 1; j < count; ++j)
            for_each_weight(j, [&](std::size_t idx, double w) {
                M(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(idx)) += w;
            });
        return M;
    }

private:
    using Moments = std::array<double, 4>;

    // Lagrange basis on nodes x_c expressed as monomial coefficients in u.
    template <std::size_t K>
    static std::array<std::array<double, 4>, K> lagrange_coefficients(const std::array<double, K>& x)
    {
        std::array<std::array<double, 4>, K> out{};
        for (std::size_t c = 0; c < K; ++c) {
            std::array<double, 4> poly{1.0, 0.0, 0.0, 0.0};
            double denom = 1.0;
            for (std::size_t d = 0; d < K; ++d) {
                if (d == c)
                    continue;
                std::array<double, 4> next{};
                for (std::size_t p = 0; p < 3; ++p) {
                    next[p + 1] += poly[p];
                    next[p] -= x[d] * poly[p];
                }
                poly = next;
                denom *= x[c] - x[d];
            }
            for (double& v : poly)
                v /= denom;
            out[c] = poly;
        }
        return out;
    }

    template <std::size_t K>
    static std::array<double, K> weights_for(const Moments& mu, const std::array<std::array<double, 4>, K>& coef)
    {
        std::array<double, K> w{};
        for (std::size_t c = 0; c < K; ++c)
            for (std::size_t p = 0; p < 4; ++p)
                w[c] += coef[c][p] * mu[p];
        return w;
    }

    void build_weights()
    {
        const auto lin = lagrange_coefficients<2>({0.0, 1.0});
        const auto quad_left = lagrange_coefficients<3>({0.0, 1.0, 2.0});
        const auto quad_right = lagrange_coefficients<3>({-1.0, 0.0, 1.0});
        const auto left = lagrange_coefficients<4>({0.0, 1.0, 2.0, 3.0});
        const auto mid = lagrange_coefficients<4>({-1.0, 0.0, 1.0, 2.0});
        const auto right = lagrange_coefficients<4>({-2.0, -1.0, 0.0, 1.0});
        const std::size_t lags = moments_.size();
        w_lin_.resize(lags);
        w_quad_left_.resize(lags);
        w_quad_right_.resize(lags);
        w_left_.resize(lags);
        w_mid_.resize(lags);
        w_right_.resize(lags);
        for (std::size_t l = 0; l < lags; ++l) {
            w_lin_[l] = weights_for(moments_[l], lin);
            w_quad_left_[l] = weights_for(moments_[l], quad_left);
            w_quad_right_[l] = weights_for(moments_[l], quad_right);
            w_left_[l] = weights_for(moments_[l], left);
            w_mid_[l] = weights_for(moments_[l], mid);
            w_right_[l] = weights_for(moments_[l], right);
        }
    }

    template <typename Sink>
    void for_each_weight(std::size_t j, Sink&& sink) const
    {
        if (j == 1) {
            const auto& w = w_lin_[0];
            sink(0, w[0]);
            sink(1, w[1]);
            return;
        }
        if (j == 2) {
            // panel i = 0 (lag 1) and i = 1 (lag 0), quadratic through 0, 1, 2
            const auto& a = w_quad_left_[1];
            const auto& b = w_quad_right_[0];
            for (std::size_t c = 0; c < 3; ++c) {
                sink(c, a[c]);
                sink(c, b[c]);
            }
            return;
        }
        for (std::size_t i = 0; i < j; ++i) {
            const std::size_t lag = j - 1 - i;
            if (i == 0) {
                const auto& w = w_left_[lag];
                for (std::size_t c = 0; c < 4; ++c)
                    sink(c, w[c]);
            } else if (i == j - 1) {
                const auto& w = w_right_[lag];
                for (std::size_t c = 0; c < 4; ++c)
                    sink(j - 3 + c, w[c]);
            } else {
                const auto& w = w_mid_[lag];
                for (std::size_t c = 0; c < 4; ++c)
                    sink(i - 1 + c, w[c]);
            }
        }
    }

    // Moments over s in [a, b] of e(s) * ((l+1) - s/h)^p with n-point Gauss-Legendre.
    Moments panel_moments(double a, double b, double anchor, int n) const
    {
        const auto& rule = gauss_legendre(n);
        const double half = 0.5 * (b - a);
        const double mid = 0.5 * (b + a);
        const double h = grid_.step();
        Moments mu{};
        for (std::size_t q = 0; q < rule.size(); ++q) {
            const double s = mid + half * rule.nodes[q];
            const double w = half * rule.weights[q] * kernel_(s);
            const double u = anchor - s / h;
            mu[0] += w;
            mu[1] += w * u;
            mu[2] += w * u * u;
            mu[3] += w * u * u * u;
        }
        return mu;
    }

    static double moment_gap(const Moments& a, const Moments& b, double floor, double rel)
    {
        double worst = 0.0;
        for (std::size_t p = 0; p < 4; ++p) {
            const double gap = std::fabs(a[p] - b[p]) - rel * std::fabs(b[p]) - floor;
            worst = std::max(worst, gap);
        }
        return worst;
    }

    Moments adaptive_panel(double a, double b, double anchor, double floor, int depth) const
    {
        const Moments coarse = panel_moments(a, b, anchor, opts_.panel_nodes);
        const Moments fine = panel_moments(a, b, anchor, 2 * opts_.panel_nodes);
        if (moment_gap(coarse, fine, floor, opts_.rel_tol) <= 0.0)
            return fine;
        if (depth >= opts_.max_depth)
            fail(ErrorKind::QuadratureFailure, "kernel panel quadrature did not settle under node doubling on ["
                                                   + std::to_string(a) + ", " + std::to_string(b) + "]");
        const double m = 0.5 * (a + b);
        const Moments left = adaptive_panel(a, m, anchor, 0.5 * floor, depth + 1);
        const Moments right = adaptive_panel(m, b, anchor, 0.5 * floor, depth + 1);
        Moments out{};
        for (std::size_t p = 0; p < 4; ++p)
            out[p] = left[p] + right[p];
        return out;
    }

    // [0, delta] with Gauss-Jacobi weight s^(eta-1); smooth factor e(s) s^(1-eta).
    Moments singular_piece(double delta, int n) const
    {
        const double eta = kernel_.spec().eta;
        const double h = grid_.step();
        const auto& rule = gauss_jacobi(n, 0.0, eta - 1.0);
        const double scale = std::pow(0.5 * delta, eta);
        Moments mu{};
        for (std::size_t q = 0; q < rule.size(); ++q) {
            const double s = 0.5 * delta * (1.0 + rule.nodes[q]);
            const double smooth = kernel_(s) * std::pow(s, 1.0 - eta);
            const double w = scale * rule.weights[q] * smooth;
            const double u = 1.0 - s / h;
            mu[0] += w;
            mu[1] += w * u;
            mu[2] += w * u * u;
            mu[3] += w * u * u * u;
        }
        return mu;
    }

    void compute_moments()
    {
        const std::size_t lags = static_cast<std::size_t>(grid_.intervals());
        const double h = grid_.step();
        const auto& spec = kernel_.spec();
        moments_.assign(lags, Moments{});

        // First pass: plain doubled rules everywhere, to size the absolute floor.
        std::vector<Moments> coarse(lags);
        double mass = 0.0;
        for (std::size_t l = 1; l < lags; ++l) {
            const double a = double(l) * h;
            coarse[l] = panel_moments(a, a + h, double(l + 1), opts_.panel_nodes);
            moments_[l] = panel_moments(a, a + h, double(l + 1), 2 * opts_.panel_nodes);
            mass += std::fabs(moments_[l][0]);
        }

        // Lag 0: geometric grading towards s = 0, Gauss-Jacobi on the innermost piece.
        double delta = h;
        int levels = 0;
        auto resolved = [&](double d) {
            bool flat = true;
            for (const auto& term : spec.terms)
                flat = flat && term.rate * std::pow(d, term.order) <= 1e-6;
            const bool negligible = std::pow(d / h, spec.eta) <= 1e-17;
            return flat || negligible;
        };
        Moments zero{};
        std::vector<std::pair<double, double>> pieces;
        while (!resolved(delta) && levels < 400) {
            pieces.emplace_back(0.5 * delta, delta);
            delta *= 0.5;
            ++levels;
        }
        const Moments jac_coarse = singular_piece(delta, opts_.jacobi_nodes);
        const Moments jac_fine = singular_piece(delta, 2 * opts_.jacobi_nodes);
        for (std::size_t p = 0; p < 4; ++p)
            zero[p] = jac_fine[p];
        double mass0 = std::fabs(jac_fine[0]);
        std::vector<Moments> graded;
        for (const auto& [a, b] : pieces) {
            graded.push_back(panel_moments(a, b, 1.0, 2 * opts_.panel_nodes));
            mass0 += std::fabs(graded.back()[0]);
        }
        mass += mass0;
        const double floor = 1e-13 * mass;
        if (moment_gap(jac_coarse, jac_fine, 1e-3 * floor, opts_.rel_tol) > 0.0)
            fail(ErrorKind::QuadratureFailure, "Gauss-Jacobi piece did not settle under node doubling");
        for (std::size_t piece = 0; piece < pieces.size(); ++piece) {
            const auto [a, b] = pieces[piece];
            const Moments c = panel_moments(a, b, 1.0, opts_.panel_nodes);
            Moments m = graded[piece];
            if (moment_gap(c, m, 1e-3 * floor, opts_.rel_tol) > 0.0)
                m = adaptive_panel(a, b, 1.0, 1e-3 * floor, 1);
            for (std::size_t p = 0; p < 4; ++p)
                zero[p] += m[p];
        }
        moments_[0] = zero;

        for (std::size_t l = 1; l < lags; ++l) {
            if (moment_gap(coarse[l], moments_[l], floor / double(lags), opts_.rel_tol) > 0.0) {
                const double a = double(l) * h;
                moments_[l] = adaptive_panel(a, a + h, double(l + 1), floor / double(lags), 1);
            }
        }
    }

    TimeGrid grid_;
    ConvolutionOptions opts_;
    KernelEvaluator kernel_;
    std::vector<Moments> moments_;
    std::vector<std::array<double, 2>> w_lin_;
    std::vector<std::array<double, 3>> w_quad_left_;
    std::vector<std::array<double, 3>> w_quad_right_;
    std::vector<std::array<double, 4>> w_left_;
    std::vector<std::array<double, 4>> w_mid_;
    std::vector<std::array<double, 4>> w_right_;
};

/// (g * e_{spec})(t_j) for every node of `grid`; 0 at t_0.
inline TimeSeries singular_convolve(const TimeSeries& g, const RelaxationKernelSpec& spec, const TimeGrid& grid,
                                    const ConvolutionOptions& opts = {})
{
    if (!(g.grid() == grid))
        fail(ErrorKind::InvalidParameters, "signal must be sampled on the convolution grid");
    return ConvolutionOperator(spec, grid, opts).apply(g);
}

} // namespace fracinv
