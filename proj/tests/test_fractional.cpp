#include <gtest/gtest.h>

#include "fracinv/fractional.hpp"

#include <cmath>
#include <numbers>
#include <vector>

using namespace fracinv;

namespace {

double slope(const std::vector<double>& x, const std::vector<double>& y)
{
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= x.size();
    my /= y.size();
    double sxy = 0, sxx = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
    }
    return sxy / sxx;
}

} // namespace

TEST(FractionalOperatorSpec, OrderingIsEnforced)
{
    EXPECT_NO_THROW((FractionalOperatorSpec{0.8, {{0.5, 0.4}, {1.0, 0.2}}}.validate()));
    EXPECT_THROW((FractionalOperatorSpec{0.8, {{0.5, 0.9}}}.validate()), Error);
    EXPECT_THROW((FractionalOperatorSpec{0.8, {{0.5, 0.2}, {0.5, 0.4}}}.validate()), Error);
    EXPECT_THROW((FractionalOperatorSpec{1.2, {}}.validate()), Error);
    EXPECT_THROW((FractionalOperatorSpec{0.8, {{-1.0, 0.4}}}.validate()), Error);
}

TEST(FractionalOperatorSpec, SolutionKernelLayout)
{
    const FractionalOperatorSpec op{0.9, {{0.5, 0.4}}};
    const auto spec = op.solution_kernel(10.0, 1.0);
    ASSERT_EQ(spec.terms.size(), 2u);
    EXPECT_DOUBLE_EQ(spec.terms[0].rate, 0.5);
    EXPECT_DOUBLE_EQ(spec.terms[0].order, 0.5);
    EXPECT_DOUBLE_EQ(spec.terms[1].rate, 10.0);
    EXPECT_DOUBLE_EQ(spec.terms[1].order, 0.9);
}

TEST(CaputoMultiterm, ConstantHasZeroDerivative)
{
    const TimeGrid grid(1.0, 64);
    const auto out = caputo_multiterm(TimeSeries(grid, 3.5), {0.7, {{2.0, 0.3}}});
    EXPECT_EQ(out.max_abs(), 0.0);
}

TEST(CaputoMultiterm, LinearSignal)
{
    const TimeGrid grid(1.0, 128);
    const auto t = TimeSeries::sample(grid, [](double s) { return s; });
    const auto half = caputo_multiterm(t, {0.5, {}});
    EXPECT_NEAR(half[128], 2.0 / std::sqrt(std::numbers::pi), 1e-12);
    const auto two = caputo_multiterm(t, {0.5, {{1.0, 0.25}}});
    EXPECT_NEAR(two[128], 1.0 / std::tgamma(1.5) + 1.0 / std::tgamma(1.75), 1e-12);
    EXPECT_EQ(two[0], 0.0);
}

TEST(CaputoMultiterm, FirstOrderIsBackwardDifference)
{
    const TimeGrid grid(2.0, 40);
    const auto sq = TimeSeries::sample(grid, [](double s) { return s * s; });
    const auto d = caputo_multiterm(sq, {1.0, {}});
    for (std::size_t j = 1; j < grid.size(); ++j)
        EXPECT_NEAR(d[j], (sq[j] - sq[j - 1]) / grid.step(), 1e-12);
}

TEST(CaputoMultiterm, ConvergesOnSmoothSignal)
{
    // D^0.6 t^2 = 2 t^1.4 / Gamma(2.4)
    std::vector<double> logs, errs;
    for (int n : {64, 128, 256, 512}) {
        const TimeGrid grid(1.0, n);
        const auto d = caputo_multiterm(TimeSeries::sample(grid, [](double s) { return s * s; }), {0.6, {}});
        logs.push_back(std::log(double(n)));
        errs.push_back(std::log(std::fabs(d[n] - 2.0 / std::tgamma(2.4))));
    }
    EXPECT_LT(slope(logs, errs), -1.3); // O(N^-(2 - alpha))
}

TEST(CaputoMultiterm, StartingCorrectionsAreExactOnSingularPowers)
{
    const FractionalOperatorSpec op{0.8, {{0.5, 0.4}}};
    const auto powers = singular_exponents(op);
    ASSERT_EQ(powers.size(), 4u);
    EXPECT_NEAR(powers[0], 0.8, 1e-15);
    EXPECT_NEAR(powers[1], 1.0, 1e-15);
    EXPECT_NEAR(powers[2], 1.2, 1e-12);
    EXPECT_NEAR(powers[3], 1.6, 1e-12);
    const TimeGrid grid(1.0, 100);
    const auto signal = TimeSeries::sample(grid, [](double s) { return 2.0 + 3.0 * std::pow(s, 0.8) - std::pow(s, 1.2); });
    const auto d = caputo_multiterm(signal, op, {powers});
    for (std::size_t j = 1; j < grid.size(); ++j) {
        const double t = grid.at(j);
        auto exact_power = [&](double gamma) {
            return std::tgamma(gamma + 1.0) * (std::pow(t, gamma - 0.8) / std::tgamma(gamma + 0.2)
                                               + 0.5 * std::pow(t, gamma - 0.4) / std::tgamma(gamma + 0.6));
        };
        EXPECT_NEAR(d[j], 3.0 * exact_power(0.8) - exact_power(1.2), 1e-9) << "node " << j;
    }
}

TEST(CaputoMultiterm, IsLinear)
{
    const TimeGrid grid(1.0, 200);
    const FractionalOperatorSpec op{0.7, {{1.3, 0.2}}};
    const auto a = TimeSeries::sample(grid, [](double s) { return std::sin(3 * s); });
    const auto b = TimeSeries::sample(grid, [](double s) { return std::exp(-s) * s; });
    const auto lhs = caputo_multiterm(a + 2.5 * b, op);
    const auto rhs = caputo_multiterm(a, op) + 2.5 * caputo_multiterm(b, op);
    EXPECT_LT((lhs - rhs).max_abs(), 1e-12 * rhs.max_abs());
}

TEST(CaputoMultiterm, RejectsCoarseGrid)
{
    EXPECT_THROW(caputo_multiterm(TimeSeries(TimeGrid(1.0, 1)), {0.5, {}}), Error);
}

TEST(RlIntegral, Examples)
{
    const TimeGrid g2(2.0, 50);
    EXPECT_NEAR(rl_integral(TimeSeries(g2, 1.0), 1.0)[50], 2.0, 1e-13);
    const TimeGrid g1(1.0, 50);
    EXPECT_NEAR(rl_integral(TimeSeries(g1, 1.0), 0.5)[50], 1.0 / std::tgamma(1.5), 1e-13);
    const auto t = TimeSeries::sample(g1, [](double s) { return s; });
    EXPECT_NEAR(rl_integral(t, 0.5)[50], 1.0 / std::tgamma(2.5), 1e-13);
    EXPECT_NEAR(rl_integral(t, 0.5)[50], 0.7522528, 1e-7);
    EXPECT_THROW(rl_integral(t, 0.0), Error);
}

TEST(RlIntegral, Semigroup)
{
    const TimeGrid grid(1.0, 2000);
    const auto g = TimeSeries::sample(grid, [](double s) { return s * s * std::cos(2 * s); });
    const auto twice = rl_integral(rl_integral(g, 0.3), 0.7);
    const auto once = rl_integral(g, 1.0);
    EXPECT_LT((twice - once).max_abs(), 1e-6);
}

TEST(SingularConvolve, Examples)
{
    const TimeGrid grid(2.0, 40);
    EXPECT_EQ(singular_convolve(TimeSeries(grid), {1.0, {{0.0, 1.0}}}, grid).max_abs(), 0.0);
    EXPECT_NEAR(singular_convolve(TimeSeries(grid, 1.0), {1.0, {{0.0, 1.0}}}, grid)[40], 2.0, 1e-13);
    const TimeGrid unit(1.0, 40);
    EXPECT_NEAR(singular_convolve(TimeSeries(unit, 1.0), {0.5, {{0.0, 0.5}}}, unit)[40],
                2.0 / std::tgamma(0.5), 1e-13);
}

TEST(SingularConvolve, MatchesKernelAntiderivative)
{
    const std::vector<RelaxationKernelSpec> specs{
        {0.8, {{0.5, 0.4}, {400.0, 0.8}}},
        {1.0, {{17.0 * std::pow(std::numbers::pi, 4), 1.0}}},
        {0.5, {{2.0, 0.5}}},
        {1.4, {{0.5, 0.1}, {3000.0, 0.9}}},
    };
    const TimeGrid grid(1.0, 64);
    for (const auto& spec : specs) {
        const auto conv = singular_convolve(TimeSeries(grid, 1.0), spec, grid);
        for (std::size_t j = 1; j < grid.size(); ++j) {
            const double ref = kernel_antiderivative(spec, grid.at(j));
            EXPECT_NEAR(conv[j], ref, 1e-6 * std::fabs(ref) + 1e-14) << "eta " << spec.eta << " node " << j;
        }
    }
}

TEST(SingularConvolve, CubicSignalsAreExactUpToQuadrature)
{
    // g(t) = t^3 against e^{-t}: closed form via integration by parts
    const RelaxationKernelSpec spec{1.0, {{1.0, 1.0}}};
    const TimeGrid grid(1.0, 20);
    const auto conv = singular_convolve(TimeSeries::sample(grid, [](double s) { return s * s * s; }), spec, grid);
    for (std::size_t j = 3; j < grid.size(); ++j) {
        const double t = grid.at(j);
        const double exact = t * t * t - 3 * t * t + 6 * t - 6 + 6 * std::exp(-t);
        EXPECT_NEAR(conv[j], exact, 1e-13);
    }
}

TEST(SingularConvolve, ConvolutionDerivativeIdentity)
{
    // d/dt (g * h) = g(t) h(0) + (g * h')(t) with h(t) = e^{-2t}
    const TimeGrid grid(1.0, 400);
    const auto g = TimeSeries::sample(grid, [](double s) { return 1.0 + s * s; });
    const auto gh = singular_convolve(g, {1.0, {{2.0, 1.0}}}, grid);
    const auto g_dh = singular_convolve(g, {1.0, {{2.0, 1.0}}}, grid) * -2.0;
    for (std::size_t j = 1; j + 1 < grid.size(); j += 37) {
        const double derivative = (gh[j + 1] - gh[j - 1]) / (2 * grid.step());
        EXPECT_NEAR(derivative, g[j] + g_dh[j], 1e-4);
    }
}

TEST(SingularConvolve, IsLinear)
{
    const TimeGrid grid(1.0, 128);
    const RelaxationKernelSpec spec{0.8, {{0.5, 0.4}, {200.0, 0.8}}};
    const ConvolutionOperator conv(spec, grid);
    const auto a = TimeSeries::sample(grid, [](double s) { return std::sin(5 * s); });
    const auto b = TimeSeries::sample(grid, [](double s) { return 1 + s; });
    const auto lhs = conv.apply(a - 3.0 * b);
    const auto rhs = conv.apply(a) - 3.0 * conv.apply(b);
    EXPECT_LT((lhs - rhs).max_abs(), 1e-12 * rhs.max_abs());
    const Eigen::MatrixXd M = conv.matrix();
    Eigen::Map<const Eigen::VectorXd> av(a.values().data(), static_cast<Eigen::Index>(a.size()));
    const Eigen::VectorXd viaMatrix = M * av;
    const auto direct = conv.apply(a);
    for (std::size_t j = 0; j < grid.size(); ++j)
        EXPECT_NEAR(viaMatrix(static_cast<Eigen::Index>(j)), direct[j], 1e-14);
}

TEST(SingularConvolve, DecaysLikeInverseRate)
{
    // |(h * e_{(m(xi1-xi2), m xi1), xi1})| <= C max|h| / m
    const TimeGrid grid(1.0, 64);
    const auto h = TimeSeries::sample(grid, [](double s) { return std::cos(s); });
    std::vector<double> x, y;
    for (double m : {1e2, 1e3, 1e4}) {
        const RelaxationKernelSpec spec{0.7, {{m, 0.7 - 0.3}, {m, 0.7}}};
        x.push_back(std::log(m));
        y.push_back(std::log(singular_convolve(h, spec, grid).max_abs()));
    }
    EXPECT_NEAR(slope(x, y), -1.0, 0.1);
}
