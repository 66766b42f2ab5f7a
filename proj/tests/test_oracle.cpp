#include <gtest/gtest.h>

#include "fracinv/oracle.hpp"

#include <cmath>
#include <numbers>

using namespace fracinv;

namespace {

constexpr double pi = std::numbers::pi;

ProblemData base(FractionalOperatorSpec op, Field2D phi, int intervals, double horizon = 1.0)
{
    ProblemData p;
    p.op = std::move(op);
    p.phi = std::move(phi);
    p.grid = TimeGrid(horizon, intervals);
    p.source_f = SourceField::steady(Field2D::zero());
    p.source_a = TimeSeries(p.grid);
    p.n_max = 2;
    p.k_max = 2;
    return p;
}

Field2D z01() { return Field2D({SeparableTerm{std::numbers::sqrt2, Profile::constant(1.0), Profile::cosine(1.0)}}); }
Field2D cos_cos() { return Field2D({SeparableTerm{1.0, Profile::cosine(2.0), Profile::cosine(1.0)}}); }

/// Eigenvalue of the discrete bi-Laplacian on cos(2 pi x) cos(pi y).
double discrete_sigma(int mx, int my)
{
    return 16 * std::pow(std::sin(pi / mx), 4) * std::pow(mx, 4) + 16 * std::pow(std::sin(pi / (2.0 * my)), 4) * std::pow(my, 4);
}

/// Caputo derivative of 1 + t^2 under the operator.
double caputo_quadratic(const FractionalOperatorSpec& op, double t)
{
    double v = 2 * std::pow(t, 2 - op.alpha) / std::tgamma(3 - op.alpha);
    for (const auto& term : op.terms)
        v += term.psi * 2 * std::pow(t, 2 - term.order) / std::tgamma(3 - term.order);
    return v;
}

} // namespace

TEST(FDOracle, ZeroDataStaysZero)
{
    const auto h = fdm_forward(base({0.8, {}}, Field2D::zero(), 16), FDGrid{8, 8, 16});
    for (const auto& level : h.levels)
        EXPECT_EQ(level.cwiseAbs().maxCoeff(), 0.0);
}

TEST(FDOracle, InvalidGridRejected)
{
    EXPECT_THROW(fdm_forward(base({0.8, {}}, Field2D::zero(), 16), FDGrid{4, 8, 16}), Error);
}

TEST(FDOracle, StencilAnnihilatesConstants)
{
    const auto A = fd_bilaplacian(FDGrid{12, 10, 1});
    const Eigen::VectorXd ones = Eigen::VectorXd::Ones(A.cols());
    EXPECT_LT((A * ones).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(FDOracle, CosineProductIsDiscreteEigenvector)
{
    const FDGrid g{16, 12, 1};
    const auto v = fd_sample(g, [](double x, double y) { return std::cos(2 * pi * x) * std::cos(pi * y); });
    const Eigen::VectorXd r = fd_bilaplacian(g) * v - discrete_sigma(16, 12) * v;
    EXPECT_LT(r.cwiseAbs().maxCoeff(), 1e-8 * discrete_sigma(16, 12));
}

TEST(FDOracle, SingleModeMatchesMittagLeffler)
{
    // E_{0.8,1}(-pi^4 0.5^0.8) from the mpmath oracle
    const double e = 0.0039820388635022952704;
    auto exact = [&](double, double y) { return e * std::numbers::sqrt2 * std::cos(pi * y); };
    const auto p = base({0.8, {}}, z01(), 256);
    const auto coarse = fdm_forward(p, FDGrid{16, 16, 256});
    const auto fine = fdm_forward(p, FDGrid{32, 32, 256});
    const double e_coarse = fd_error(coarse, 128, exact);
    const double e_fine = fd_error(fine, 128, exact);
    EXPECT_LT(e_fine, 0.02);
    EXPECT_LT(e_fine, e_coarse);
}

TEST(FDOracle, BackwardEulerAtAlphaOne)
{
    const auto p = base({1.0, {}}, z01(), 400, 0.02);
    const auto h = fdm_forward(p, FDGrid{8, 32, 400});
    const double t = 0.01;
    const double sigma_h = 16 * std::pow(std::sin(pi / 64), 4) * std::pow(32, 4);
    // one implicit Euler step multiplies by 1 / (1 + tau sigma_h)
    const double euler = std::pow(1.0 / (1.0 + 5e-5 * sigma_h), 200);
    EXPECT_NEAR(h.at(200, 3, 5) / (std::numbers::sqrt2 * std::cos(pi * 5 / 32.0)), euler, 1e-12);
    EXPECT_NEAR(euler, std::exp(-std::pow(pi, 4) * t), 0.01 * std::exp(-std::pow(pi, 4) * t));
}

TEST(FDOracle, ManufacturedSolutionSecondOrderInSpace)
{
    const FractionalOperatorSpec op{0.8, {{0.5, 0.4}}};
    auto p = base(op, cos_cos(), 512);
    const double sigma = 17 * std::pow(pi, 4);
    p.source_f = SourceField::steady(cos_cos());
    p.source_a = TimeSeries::sample(p.grid, [&](double t) { return caputo_quadratic(op, t) + sigma * (1 + t * t); });
    auto exact = [](double x, double y) { return 2.0 * std::cos(2 * pi * x) * std::cos(pi * y); };
    std::vector<double> errors;
    for (int m : {8, 16, 32})
        errors.push_back(fd_error(fdm_forward(p, FDGrid{m, m, 512}), 512, exact));
    const double order = std::log2(errors[1] / errors[2]);
    EXPECT_GT(order, 1.8);
    EXPECT_LT(order, 2.2);
    EXPECT_GT(std::log2(errors[0] / errors[1]), 1.7);
}

TEST(FDOracle, TemporalOrderAtLeastOne)
{
    // the sampled cosine product is an exact discrete eigenvector, so only the
    // time discretisation contributes
    const FractionalOperatorSpec op{0.8, {{0.5, 0.4}}};
    const double sigma = discrete_sigma(8, 8);
    std::vector<double> errors;
    for (int n : {32, 64, 128}) {
        auto p = base(op, cos_cos(), n);
        p.source_f = SourceField::steady(cos_cos());
        p.source_a = TimeSeries::sample(p.grid, [&](double t) { return caputo_quadratic(op, t) + sigma * (1 + t * t); });
        const auto h = fdm_forward(p, FDGrid{8, 8, n});
        errors.push_back(fd_error(h, static_cast<std::size_t>(n), [](double x, double y) {
            return 2.0 * std::cos(2 * pi * x) * std::cos(pi * y);
        }));
    }
    EXPECT_GE(std::log2(errors[0] / errors[1]), 1.0);
    EXPECT_GE(std::log2(errors[1] / errors[2]), 1.0);
}

TEST(FDOracle, DiscreteBoundaryConditionsHold)
{
    // periodic value and second difference across x = 0 ~ 1, even reflection in y
    auto p = base({0.8, {}}, cos_cos(), 16);
    p.source_f = SourceField::steady(Field2D({SeparableTerm{1.0, Profile::polynomial({1.0, 0.5}), Profile::polynomial({0.0, 1.0})}}));
    p.source_a = TimeSeries(p.grid, 1.0);
    const FDGrid g{12, 12, 16};
    const auto h = fdm_forward(p, g);
    const auto A = fd_bilaplacian(g);
    for (std::size_t level = 1; level < h.levels.size(); ++level) {
        EXPECT_EQ(h.at(level, 12, 4), h.at(level, 0, 4));
        EXPECT_TRUE(h.levels[level].allFinite());
    }
    // the ghost rule u_{M+1} = 2u_1 - u_{M-1} makes second differences at 0 and M agree
    for (int j = 0; j <= 12; ++j) {
        const auto& u = h.levels.back();
        auto at = [&](int i) { return u[static_cast<Eigen::Index>(g.id(i == 12 ? 0 : i, j))]; };
        const double d0 = at(1) - 2 * at(0) + at(1);                            // ghost u_-1 = u_1
        const double dm = (2 * at(1) - at(11)) - 2 * at(12) + at(11);           // ghost u_{M+1}
        EXPECT_NEAR(d0, dm, 1e-14);
    }
    EXPECT_EQ(A.rows(), static_cast<Eigen::Index>(g.unknowns()));
}

TEST(Compare, IdenticalInputsGiveZero)
{
    auto p = base({0.8, {}}, cos_cos(), 16);
    const auto bundle = solve_forward(p);
    FieldHistory h{FDGrid{8, 8, 16}, p.grid, {}};
    for (std::size_t l = 0; l < p.grid.size(); ++l) {
        std::vector<std::pair<double, double>> pts;
        for (int j = 0; j <= 8; ++j)
            for (int i = 0; i < 8; ++i)
                pts.emplace_back(i / 8.0, j / 8.0);
        const auto v = synthesize(bundle.coeffs, pts, l).values;
        h.levels.push_back(Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size())));
    }
    for (const auto& row : compare(bundle, h, {0.5, 1.0}))
        EXPECT_EQ(row.rel_l2, 0.0);
}

TEST(Compare, RefinementReducesError)
{
    auto p = base({0.8, {}}, cos_cos(), 128);
    const auto bundle = solve_forward(p);
    const auto coarse = compare(bundle, fdm_forward(p, FDGrid{8, 8, 128}), {0.5});
    const auto fine = compare(bundle, fdm_forward(p, FDGrid{16, 16, 128}), {0.5});
    EXPECT_LT(fine[0].rel_l2, coarse[0].rel_l2);
}
