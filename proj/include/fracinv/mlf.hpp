#pragma once

// Multinomial Mittag-Leffler functions and the relaxation kernels
//
//   e_{(m_1 xi_1, ..., m_n xi_n), eta}(t) = t^(eta-1) E_{(xi_1..xi_n), eta}(-m_1 t^xi_1, ..., -m_n t^xi_n)
//
// Two evaluation routes are provided: the defining multinomial double series
// (summed shell by shell in long double, log-space Gamma and multinomials) and
// numerical inversion of the Laplace transform
//
//   L[e](s) = s^(-eta) / (1 + sum_j m_j s^(-xi_j))
//
// along a Talbot contour. eval_kernel() dispatches between them.

#include "fracinv/error.hpp"

#include <quadmath.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <numbers>
#include <span>
#include <string>
#include <vector>

namespace fracinv {

struct MLParameters {
    double eta = 1.0;
    std::vector<double> orders;

    void validate() const
    {
        if (!(eta > 0.0) || !std::isfinite(eta))
            fail(ErrorKind::InvalidParameters, "eta must be positive, got " + std::to_string(eta));
        if (orders.empty())
            fail(ErrorKind::InvalidParameters, "at least one order is required");
        for (double xi : orders)
            if (!(xi > 0.0) || !std::isfinite(xi))
                fail(ErrorKind::InvalidParameters, "orders must be positive, got " + std::to_string(xi));
    }
};

struct KernelTerm {
    double rate = 0.0;  // m_j >= 0
    double order = 1.0; // xi_j > 0

    friend bool operator==(const KernelTerm&, const KernelTerm&) = default;
};

struct RelaxationKernelSpec {
    double eta = 1.0;
    std::vector<KernelTerm> terms;

    void validate() const
    {
        if (!(eta > 0.0) || !std::isfinite(eta))
            fail(ErrorKind::InvalidParameters, "kernel eta must be positive, got " + std::to_string(eta));
        for (const auto& term : terms) {
            if (!(term.order > 0.0) || !std::isfinite(term.order))
                fail(ErrorKind::InvalidParameters,
                     "kernel orders must be positive, got " + std::to_string(term.order));
            if (!(term.rate >= 0.0) || !std::isfinite(term.rate))
                fail(ErrorKind::InvalidParameters,
                     "kernel rates must be non-negative, got " + std::to_string(term.rate));
        }
    }

    /// Same kernel with zero-rate terms removed.
    [[nodiscard]] RelaxationKernelSpec reduced() const
    {
        RelaxationKernelSpec out{eta, {}};
        for (const auto& term : terms)
            if (term.rate != 0.0)
                out.terms.push_back(term);
        return out;
    }

    [[nodiscard]] RelaxationKernelSpec with_eta(double new_eta) const
    {
        RelaxationKernelSpec out = *this;
        out.eta = new_eta;
        return out;
    }

    friend bool operator==(const RelaxationKernelSpec&, const RelaxationKernelSpec&) = default;
};

struct SeriesOptions {
    double rel_tol = 1e-15; // shell contribution relative to the running sum
    int min_shells = 10;
    int max_shells = 500;
    /// Largest tolerated ratio between the biggest shell and the result in
    /// long double; above it the sum is redone in quad precision.
    double max_condition = 1e8;
    /// Same limit for the quad-precision pass (0 disables that pass).
    double max_condition_quad = 1e17;
};

struct SeriesResult {
    double value = 0.0;
    int shells = 0;
    double condition = 1.0;
    bool extended = false; // quad-precision pass was needed
};

namespace detail {

inline long double m_log(long double x) { return std::log(x); }
inline long double m_exp(long double x) { return std::exp(x); }
inline long double m_abs(long double x) { return std::fabs(x); }
inline long double m_lgamma(long double x) { return std::lgamma(x); }
inline __float128 m_log(__float128 x) { return logq(x); }
inline __float128 m_exp(__float128 x) { return expq(x); }
inline __float128 m_abs(__float128 x) { return fabsq(x); }
inline __float128 m_lgamma(__float128 x) { return lgammaq(x); }

template <typename Real>
class SeriesSummer {
public:
    SeriesSummer(const MLParameters& params, std::span<const double> args, const SeriesOptions& opts)
        : eta_(params.eta), opts_(opts)
    {
        const std::size_t n = params.orders.size();
        orders_.resize(n);
        log_abs_.resize(n);
        negative_.resize(n);
        zero_.resize(n);
        for (std::size_t j = 0; j < n; ++j) {
            orders_[j] = Real(params.orders[j]);
            const Real z = args[j];
            zero_[j] = (z == 0);
            negative_[j] = (z < 0);
            log_abs_[j] = zero_[j] ? Real(0) : m_log(m_abs(z));
        }
        log_fact_.resize(static_cast<std::size_t>(opts_.max_shells) + 2);
        for (std::size_t l = 0; l < log_fact_.size(); ++l)
            log_fact_[l] = m_lgamma(Real(l) + 1);
        parts_.assign(n, 0);
    }

    /// Sums until the stopping rule holds; returns false when the shell budget runs out.
    bool run(double max_condition, SeriesResult& out)
    {
        Real total = 0;
        Real max_shell = 0;
        for (int k = 0; k <= opts_.max_shells; ++k) {
            shell_sum_ = 0;
            shell_abs_ = 0;
            enumerate(0, k, k);
            total += shell_sum_;
            if (shell_abs_ > max_shell)
                max_shell = shell_abs_;
            if (k >= opts_.min_shells
                && (shell_abs_ <= Real(opts_.rel_tol) * m_abs(total) || shell_abs_ < Real(1e-300))) {
                const double cond = total != 0 ? static_cast<double>(max_shell / m_abs(total)) : INFINITY;
                out = {static_cast<double>(total), k + 1, cond, false};
                return cond <= max_condition;
            }
        }
        out = {static_cast<double>(total), opts_.max_shells + 1, INFINITY, false};
        return false;
    }

private:
    void enumerate(std::size_t j, int remaining, int k)
    {
        const std::size_t n = orders_.size();
        if (j + 1 == n) {
            parts_[j] = remaining;
            add_term(k);
            return;
        }
        for (int l = 0; l <= remaining; ++l) {
            parts_[j] = l;
            enumerate(j + 1, remaining - l, k);
        }
    }

    void add_term(int k)
    {
        Real log_mag = log_fact_[static_cast<std::size_t>(k)];
        Real gamma_arg = eta_;
        bool negative = false;
        for (std::size_t j = 0; j < orders_.size(); ++j) {
            const int l = parts_[j];
            if (l == 0)
                continue;
            if (zero_[j])
                return;
            log_mag += Real(l) * log_abs_[j] - log_fact_[static_cast<std::size_t>(l)];
            gamma_arg += orders_[j] * Real(l);
            if (negative_[j] && (l % 2 == 1))
                negative = !negative;
        }
        log_mag -= m_lgamma(gamma_arg);
        const Real mag = m_exp(log_mag);
        shell_sum_ += negative ? Real(-mag) : mag;
        shell_abs_ += mag;
    }

    Real eta_;
    std::vector<Real> orders_;
    SeriesOptions opts_;
    std::vector<Real> log_abs_;
    std::vector<bool> negative_;
    std::vector<bool> zero_;
    std::vector<Real> log_fact_;
    std::vector<int> parts_;
    Real shell_sum_ = 0;
    Real shell_abs_ = 0;
};

} // namespace detail

/// Multinomial Mittag-Leffler function E_{(xi_1..xi_n),eta}(z_1..z_n) by direct
/// summation of the defining series, in long double and, under heavy
/// cancellation, once more in quad precision. Throws NonConvergence when the
/// shell budget runs out or the cancellation exceeds both precisions.
inline SeriesResult ml_series_detailed(const MLParameters& params, std::span<const double> args,
                                       const SeriesOptions& opts = {})
{
    params.validate();
    if (args.size() != params.orders.size())
        fail(ErrorKind::InvalidParameters, "argument count must match the number of orders");
    SeriesResult result;
    detail::SeriesSummer<long double> summer(params, args, opts);
    if (summer.run(opts.max_condition, result))
        return result;
    if (result.shells > opts.max_shells)
        fail(ErrorKind::NonConvergence,
             "multinomial series did not converge within " + std::to_string(opts.max_shells) + " shells");
    if (opts.max_condition_quad > opts.max_condition) {
        detail::SeriesSummer<__float128> precise(params, args, opts);
        if (precise.run(opts.max_condition_quad, result)) {
            result.extended = true;
            return result;
        }
    }
    fail(ErrorKind::NonConvergence,
         "series cancellation too severe (condition " + std::to_string(result.condition) + ")");
}

inline double ml_series(const MLParameters& params, std::span<const double> args, const SeriesOptions& opts = {})
{
    return ml_series_detailed(params, args, opts).value;
}

/// Classical two-parameter Mittag-Leffler function through the same series.
inline double ml_two_parameter(double xi, double eta, double z, const SeriesOptions& opts = {})
{
    const double arg[1] = {z};
    return ml_series(MLParameters{eta, {xi}}, arg, opts);
}

struct ContourOptions {
    int nodes = 32;
    int check_nodes = 24;
    double rel_tol = 1e-8;
};

/// Talbot-contour inversion of s^(-eta) / (1 + sum m_j s^(-xi_j)) with the node
/// constants precomputed, so repeated evaluation for one kernel is cheap.
///
/// Contour: s(theta) = (N/t) (-0.6122 + 0.5017 theta cot(0.6407 theta) + 0.2645 i theta),
/// midpoint rule in theta; conjugate symmetry halves the node count.
class TalbotInverter {
public:
    TalbotInverter() = default;

    TalbotInverter(const RelaxationKernelSpec& spec, int nodes) : nodes_(nodes), eta_(spec.eta)
    {
        if (nodes < 4 || nodes % 2 != 0)
            fail(ErrorKind::InvalidParameters, "Talbot node count must be even and >= 4");
        for (const auto& term : spec.terms) {
            rates_.push_back(term.rate);
            orders_.push_back(term.order);
        }
        const int half = nodes / 2;
        const double h = 2.0 * std::numbers::pi / nodes;
        const double n_real = nodes;
        numer_.resize(static_cast<std::size_t>(half));
        powers_.resize(static_cast<std::size_t>(half) * orders_.size());
        for (int k = 0; k < half; ++k) {
            const double theta = (k + 0.5) * h;
            const double c = 0.6407 * theta;
            const double cot = std::cos(c) / std::sin(c);
            const std::complex<double> w(-0.6122 + 0.5017 * theta * cot, 0.2645 * theta);
            const double dre = 0.5017 * cot - 0.5017 * c / (std::sin(c) * std::sin(c));
            const std::complex<double> dw(dre, 0.2645);
            const std::complex<double> log_w = std::log(w);
            numer_[static_cast<std::size_t>(k)] = std::exp(n_real * w - eta_ * log_w) * dw;
            for (std::size_t j = 0; j < orders_.size(); ++j)
                powers_[static_cast<std::size_t>(k) * orders_.size() + j] = std::exp(-orders_[j] * log_w);
        }
        prefactor_ = h / std::numbers::pi;
    }

    /// Returns the inverse transform at t > 0; `noise` receives the absolute
    /// magnitude of the summed terms (the roundoff scale).
    double operator()(double t, double* noise = nullptr) const
    {
        const double scale = nodes_ / t;
        const double log_scale = std::log(scale);
        std::array<double, 8> small{};
        std::vector<double> big;
        double* coef = small.data();
        if (orders_.size() > small.size()) {
            big.resize(orders_.size());
            coef = big.data();
        }
        for (std::size_t j = 0; j < orders_.size(); ++j)
            coef[j] = rates_[j] * std::exp(-orders_[j] * log_scale);
        double acc = 0.0;
        double acc_abs = 0.0;
        const std::size_t half = numer_.size();
        for (std::size_t k = 0; k < half; ++k) {
            std::complex<double> denom(1.0, 0.0);
            const std::complex<double>* pw = powers_.data() + k * orders_.size();
            for (std::size_t j = 0; j < orders_.size(); ++j)
                denom += coef[j] * pw[j];
            const std::complex<double> term = numer_[k] / denom;
            acc += term.imag();
            acc_abs += std::abs(term);
        }
        const double factor = prefactor_ * std::exp((1.0 - eta_) * log_scale);
        if (noise)
            *noise = factor * acc_abs;
        return factor * acc;
    }

    [[nodiscard]] int nodes() const noexcept { return nodes_; }

private:
    int nodes_ = 0;
    double eta_ = 1.0;
    double prefactor_ = 0.0;
    std::vector<double> rates_;
    std::vector<double> orders_;
    std::vector<std::complex<double>> numer_;
    std::vector<std::complex<double>> powers_;
};

namespace detail {

/// Predicted number of multinomial terms before the series settles: shells
/// until S^k / Gamma(eta + xi_min k) < 1e-17, S = sum_j |z_j|, times the
/// compositions per shell.
inline double series_cost(double eta, std::span<const double> orders, std::span<const double> args, int max_shells)
{
    double total = 0.0;
    double xi_min = INFINITY;
    for (std::size_t j = 0; j < orders.size(); ++j) {
        total += std::fabs(args[j]);
        xi_min = std::min(xi_min, orders[j]);
    }
    int shells = 10;
    if (total > 0.0) {
        const double log_total = std::log(total);
        while (shells < max_shells
               && shells * log_total - std::lgamma(eta + xi_min * shells) > -39.0)
            ++shells;
    }
    // C(shells + n - 1, n) terms
    double terms = 1.0;
    const std::size_t n = orders.size();
    for (std::size_t j = 1; j <= n; ++j)
        terms = terms * double(shells + static_cast<int>(j) - 1) / double(j);
    return terms;
}

inline bool all_orders_one(const RelaxationKernelSpec& spec)
{
    return std::all_of(spec.terms.begin(), spec.terms.end(), [](const KernelTerm& t) { return t.order == 1.0; });
}

inline bool small_integer(double v)
{
    return v == std::round(v) && v >= 1.0 && v <= 8.0;
}

/// t^(eta-1) E_{1,eta}(-x), x = M t, for integer eta via
/// E_{1,eta+1}(z) = (E_{1,eta}(z) - 1/Gamma(eta)) / z. Valid (no cancellation) for x > 2.
inline double exponential_kernel(double total_rate, double eta, double t)
{
    const double x = total_rate * t;
    const int steps = static_cast<int>(eta) - 1;
    double value = std::exp(-x);
    double gamma = 1.0; // Gamma(1)
    for (int p = 1; p <= steps; ++p) {
        value = (value - 1.0 / gamma) / (-x);
        gamma *= p;
    }
    return std::pow(t, eta - 1.0) * value;
}

} // namespace detail

/// Contour-only evaluation with node-doubling validation (nodes vs check_nodes).
inline double ml_contour(const RelaxationKernelSpec& spec, double t, const ContourOptions& opts = {})
{
    spec.validate();
    if (!(t > 0.0))
        fail(ErrorKind::InvalidParameters, "contour evaluation needs t > 0");
    const RelaxationKernelSpec red = spec.reduced();
    if (red.terms.empty())
        return std::pow(t, red.eta - 1.0) / std::tgamma(red.eta);
    const TalbotInverter fine(red, opts.nodes);
    const TalbotInverter coarse(red, opts.check_nodes);
    double noise = 0.0;
    const double value = fine(t, &noise);
    const double check = coarse(t);
    if (!std::isfinite(value) || std::fabs(value - check) > opts.rel_tol * std::fabs(value) + 1e-12 * noise)
        fail(ErrorKind::ContourFailure, "Talbot quadrature did not stabilise at t = " + std::to_string(t));
    return value;
}

struct KernelOptions {
    /// Series is attempted while max_j m_j t^xi_j stays at or below this
    /// and the predicted number of series terms stays within series_budget.
    double series_threshold = 2.0;
    double series_budget = 2e4;
    /// The contour is the cheaper fallback here, so no quad-precision pass.
    SeriesOptions series{1e-15, 10, 500, 1e8, 0.0};
    ContourOptions contour{};
};

/// Which route produced a kernel value.
enum class KernelRoute { Closed, Series, Contour };

/// Repeated evaluation of one relaxation kernel. Holds the precomputed Talbot
/// node tables; immutable after construction so it can be shared across threads.
class KernelEvaluator {
public:
    KernelEvaluator() = default;

    explicit KernelEvaluator(const RelaxationKernelSpec& spec, KernelOptions opts = {})
        : spec_(spec.reduced()), opts_(opts)
    {
        spec.validate();
        for (const auto& term : spec_.terms) {
            series_params_.orders.push_back(term.order);
            total_rate_ += term.rate;
        }
        series_params_.eta = spec_.eta;
        exponential_ = !spec_.terms.empty() && detail::all_orders_one(spec_) && detail::small_integer(spec_.eta);
        if (!spec_.terms.empty() && !exponential_) {
            fine_ = TalbotInverter(spec_, opts_.contour.nodes);
            coarse_ = TalbotInverter(spec_, opts_.contour.check_nodes);
        }
        inv_gamma_eta_ = 1.0 / std::tgamma(spec_.eta);
    }

    [[nodiscard]] const RelaxationKernelSpec& spec() const noexcept { return spec_; }

    double operator()(double t, KernelRoute* route = nullptr) const
    {
        if (!(t > 0.0))
            fail(ErrorKind::InvalidParameters, "kernel evaluation needs t > 0, got " + std::to_string(t));
        const double power = std::pow(t, spec_.eta - 1.0);
        if (spec_.terms.empty()) {
            if (route)
                *route = KernelRoute::Closed;
            return power * inv_gamma_eta_;
        }
        double effective = 0.0;
        for (const auto& term : spec_.terms)
            effective = std::max(effective, term.rate * std::pow(t, term.order));
        if (effective <= opts_.series_threshold) {
            std::array<double, 8> args{};
            std::vector<double> big;
            std::span<double> z(args.data(), spec_.terms.size());
            if (spec_.terms.size() > args.size()) {
                big.resize(spec_.terms.size());
                z = big;
            }
            for (std::size_t j = 0; j < spec_.terms.size(); ++j)
                z[j] = -spec_.terms[j].rate * std::pow(t, spec_.terms[j].order);
            if (detail::series_cost(spec_.eta, series_params_.orders, z, opts_.series.max_shells)
                <= opts_.series_budget) {
                try {
                    const double value = ml_series(series_params_, z, opts_.series);
                    if (route)
                        *route = KernelRoute::Series;
                    return power * value;
                } catch (const Error& e) {
                    if (e.kind() != ErrorKind::NonConvergence)
                        throw;
                }
            }
        }
        if (exponential_) {
            if (route)
                *route = KernelRoute::Closed;
            return detail::exponential_kernel(total_rate_, spec_.eta, t);
        }
        if (route)
            *route = KernelRoute::Contour;
        return contour(t);
    }

    /// Contour route regardless of the dispatch rule (used for cross-checks).
    double contour(double t) const
    {
        if (spec_.terms.empty())
            return std::pow(t, spec_.eta - 1.0) * inv_gamma_eta_;
        if (exponential_)
            return ml_contour(spec_, t, opts_.contour);
        double noise = 0.0;
        const double value = fine_(t, &noise);
        const double check = coarse_(t);
        if (!std::isfinite(value)
            || std::fabs(value - check) > opts_.contour.rel_tol * std::fabs(value) + 1e-12 * noise)
            fail(ErrorKind::ContourFailure, "Talbot quadrature did not stabilise at t = " + std::to_string(t));
        return value;
    }

private:
    RelaxationKernelSpec spec_;
    KernelOptions opts_;
    MLParameters series_params_;
    TalbotInverter fine_;
    TalbotInverter coarse_;
    double total_rate_ = 0.0;
    double inv_gamma_eta_ = 1.0;
    bool exponential_ = false;
};

/// e_{(m xi), eta}(t) with automatic series/contour dispatch.
inline double eval_kernel(const RelaxationKernelSpec& spec, double t, const KernelOptions& opts = {})
{
    return KernelEvaluator(spec, opts)(t);
}

/// Integral of the kernel over (0, t]; raising eta by one integrates it exactly.
inline double kernel_antiderivative(const RelaxationKernelSpec& spec, double t, const KernelOptions& opts = {})
{
    return KernelEvaluator(spec.with_eta(spec.eta + 1.0), opts)(t);
}

} // namespace fracinv
