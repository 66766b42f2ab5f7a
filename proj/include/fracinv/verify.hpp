#pragma once

// Invariant suites shared by the `verify` command and the acceptance run.

#include "fracinv/field.hpp"
#include "fracinv/mlf.hpp"
#include "fracinv/spectral.hpp"

#include <boost/math/quadrature/tanh_sinh.hpp>

#include <chrono>
#include <cmath>
#include <random>
#include <sstream>
#include <string>
#include <vector>

namespace fracinv {

struct SuiteResult {
    std::string name;
    bool passed = false;
    double metric = 0.0;    // worst observed deviation
    double threshold = 0.0; // pass bound on the metric
    std::string detail;
    double seconds = 0.0;
};

namespace detail {

/// Times `body` and turns a library error into a failed suite.
template <typename Body>
SuiteResult run_suite(std::string name, double threshold, Body&& body)
{
    SuiteResult r{std::move(name), false, 0.0, threshold, "", 0.0};
    const auto start = std::chrono::steady_clock::now();
    try {
        body(r);
    } catch (const Error& e) {
        r.passed = false;
        r.detail = e.what();
    }
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return r;
}

inline double relative(double a, double b) { return std::fabs(a - b) / std::max(std::fabs(b), 1e-300); }

/// Two-parameter Mittag-Leffler partial sums in long double, kept separate
/// from the multinomial summation it checks.
inline double mittag_leffler_plain(double xi, double eta, double z)
{
    long double sum = 0.0L;
    long double power = 1.0L;
    for (int k = 0; k < 400; ++k) {
        const long double term = power / std::tgamma(static_cast<long double>(eta) + xi * k);
        sum += term;
        if (k > 10 && std::fabs(term) < 1e-22L)
            break;
        power *= z;
    }
    return static_cast<double>(sum);
}

/// Time at which max_j m_j t^xi_j equals `target`.
inline double time_for_argument(const RelaxationKernelSpec& spec, double target)
{
    double lo = 1e-12, hi = 1e6;
    for (int it = 0; it < 200; ++it) {
        const double mid = std::sqrt(lo * hi);
        double eff = 0.0;
        for (const auto& term : spec.terms)
            eff = std::max(eff, term.rate * std::pow(mid, term.order));
        (eff < target ? lo : hi) = mid;
    }
    return std::sqrt(lo * hi);
}

} // namespace detail

/// Gram matrix <Z_i, W_j> over the box against the identity.
inline SuiteResult suite_biorthogonality(int n_max = 6, int k_max = 6, double tol = 1e-10, const Basis& basis = {})
{
    return detail::run_suite("biorthonormality", tol, [&](SuiteResult& r) {
        const Eigen::MatrixXd g = biorthogonality_matrix(n_max, k_max, basis);
        r.metric = (g - Eigen::MatrixXd::Identity(g.rows(), g.cols())).cwiseAbs().maxCoeff();
        r.detail = std::to_string(g.rows()) + " modes, n <= " + std::to_string(n_max) + ", k <= " + std::to_string(k_max);
        r.passed = r.metric < tol;
    });
}

/// Integral of the kernel over (0, t] against the kernel with eta + 1, for random specs.
inline SuiteResult suite_antiderivative(int draws = 20, unsigned seed = 3, double tol = 1e-8)
{
    return detail::run_suite("kernel_antiderivative", tol, [&](SuiteResult& r) {
        std::mt19937 rng(seed);
        std::uniform_real_distribution<double> order(0.05, 0.95);
        std::uniform_real_distribution<double> rate(0.1, 50.0);
        std::uniform_real_distribution<double> horizon(0.2, 2.0);
        boost::math::quadrature::tanh_sinh<double> integrator;
        for (int draw = 0; draw < draws; ++draw) {
            RelaxationKernelSpec spec{order(rng) + 0.05, {}};
            const int terms = 1 + draw % 3;
            for (int j = 0; j < terms; ++j)
                spec.terms.push_back({rate(rng), order(rng)});
            const KernelEvaluator eval(spec);
            const double t = horizon(rng);
            const double quad = integrator.integrate([&](double s) { return eval(s); }, 0.0, t, 1e-12);
            r.metric = std::max(r.metric, detail::relative(kernel_antiderivative(spec, t), quad));
        }
        r.detail = std::to_string(draws) + " random specs with up to 3 terms";
        r.passed = r.metric < tol;
    });
}

/// Multinomial function with all but the first argument zero against the two-parameter series.
inline SuiteResult suite_reduction(int draws = 50, unsigned seed = 7, double tol = 1e-10)
{
    return detail::run_suite("two_parameter_reduction", tol, [&](SuiteResult& r) {
        std::mt19937 rng(seed);
        std::uniform_real_distribution<double> order(0.4, 1.0);
        std::uniform_real_distribution<double> arg(-2.0, 0.0);
        for (int draw = 0; draw < draws; ++draw) {
            const double xi = order(rng);
            const double eta = 0.3 + order(rng);
            const double z = arg(rng);
            const double args[] = {z, 0.0, 0.0};
            const double multi = ml_series({eta, {xi, order(rng), order(rng)}}, args);
            const double plain = detail::mittag_leffler_plain(xi, eta, z);
            r.metric = std::max(r.metric, std::fabs(multi - plain) / std::max(1.0, std::fabs(plain)));
        }
        r.detail = std::to_string(draws) + " draws";
        r.passed = r.metric < tol;
    });
}

/// E_(a, a-b, a-c)(z1, z2, z3) against E_(a-c, a-b, a)(z3, z2, z1).
inline SuiteResult suite_permutation(int draws = 50, unsigned seed = 11, double tol = 1e-10)
{
    return detail::run_suite("argument_permutation", tol, [&](SuiteResult& r) {
        std::mt19937 rng(seed);
        std::uniform_real_distribution<double> unit(0.05, 0.95);
        std::uniform_real_distribution<double> arg(-0.6, 0.0);
        int done = 0;
        while (done < draws) {
            double o[3] = {unit(rng), unit(rng), unit(rng)};
            std::sort(o, o + 3, std::greater<>());
            if (o[0] - o[1] < 0.2 || o[1] - o[2] < 0.05)
                continue;
            const double z1 = arg(rng), z2 = arg(rng), z3 = arg(rng);
            const double eta = 0.5 + unit(rng);
            const double fwd[] = {z1, z2, z3};
            const double rev[] = {z3, z2, z1};
            const double lhs = ml_series({eta, {o[0], o[0] - o[1], o[0] - o[2]}}, fwd);
            const double rhs = ml_series({eta, {o[0] - o[2], o[0] - o[1], o[0]}}, rev);
            r.metric = std::max(r.metric, std::fabs(lhs - rhs) / std::max(1.0, std::fabs(lhs)));
            ++done;
        }
        r.detail = std::to_string(draws) + " draws";
        r.passed = r.metric < tol;
    });
}

/// Series against contour where max_j m_j t^xi_j lies in [0.5, 5].
inline SuiteResult suite_regimes(int draws = 12, unsigned seed = 5, double tol = 1e-6)
{
    return detail::run_suite("series_contour_overlap", tol, [&](SuiteResult& r) {
        std::vector<RelaxationKernelSpec> specs{
            {1.0, {{1.0, 0.5}}},
            {0.8, {{2.0, 0.8}, {0.5, 0.3}}},
            {1.3, {{1.5, 0.9}, {0.7, 0.6}, {0.2, 0.2}}},
            {0.5, {{4.0, 0.95}}},
        };
        std::mt19937 rng(seed);
        std::uniform_real_distribution<double> order(0.6, 1.0);
        std::uniform_real_distribution<double> rate(0.1, 50.0);
        std::uniform_real_distribution<double> eta(0.5, 1.5);
        for (int draw = 0; draw < draws; ++draw) {
            RelaxationKernelSpec spec{eta(rng), {}};
            for (int j = 0; j <= draw % 3; ++j)
                spec.terms.push_back({rate(rng), order(rng)});
            specs.push_back(spec);
        }
        int points = 0;
        for (const auto& spec : specs) {
            const KernelEvaluator eval(spec);
            MLParameters params{spec.eta, {}};
            for (const auto& term : spec.terms)
                params.orders.push_back(term.order);
            for (double target : {0.5, 1.0, 2.0, 3.5, 5.0}) {
                const double t = detail::time_for_argument(spec, target);
                std::vector<double> z;
                for (const auto& term : spec.terms)
                    z.push_back(-term.rate * std::pow(t, term.order));
                const double series = std::pow(t, spec.eta - 1.0) * ml_series(params, z);
                r.metric = std::max(r.metric, detail::relative(series, eval.contour(t)));
                ++points;
            }
        }
        r.detail = std::to_string(specs.size()) + " specs, " + std::to_string(points) + " points";
        r.passed = r.metric < tol;
    });
}

/// 1 / sigma_nk <= 1 / (n^2 k^2) over n, k <= count; metric is the largest ratio.
inline SuiteResult suite_eigenvalue_estimate(int count = 100)
{
    return detail::run_suite("eigenvalue_estimate", 1.0, [&](SuiteResult& r) {
        for (int n = 1; n <= count; ++n)
            for (int k = 1; k <= count; ++k) {
                const double sigma = eigen(ModeIndex::odd(n, k)).sigma;
                r.metric = std::max(r.metric, (1.0 / sigma) * (double(n) * n * double(k) * k));
            }
        r.detail = "n, k <= " + std::to_string(count);
        r.passed = r.metric <= 1.0;
    });
}

/// Fitted coefficient decay of a datum against the rates the coefficient lemmas predict.
inline SuiteResult suite_decay(const Field2D& field, DatumKind kind, int n_max, int k_max)
{
    const std::string name = kind == DatumKind::InitialPhi ? "decay_phi" : "decay_f";
    return detail::run_suite(name, 0.0, [&](SuiteResult& r) {
        const auto report = decay_report(project_box(field, n_max, k_max), kind);
        std::ostringstream os;
        os << "k exponent " << report.k_exponent << " (need <= " << report.required_k << "), joint exponent "
           << report.joint_exponent << " (need <= " << report.required_joint << ")";
        r.detail = os.str();
        r.metric = kind == DatumKind::InitialPhi ? report.k_exponent : report.joint_exponent;
        r.threshold = kind == DatumKind::InitialPhi ? report.required_k : report.required_joint;
        r.passed = report.consistent;
    });
}

} // namespace fracinv
