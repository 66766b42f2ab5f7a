#pragma once

// Finite-difference reference solver for the forward problem.
//
// Space: nodes x_i = i/Mx, y_j = j/My. Fourth differences in each direction.
// At x = 0 the conditions u_x = u_xxx = 0 give the ghosts u_-1 = u_1, u_-2 = u_2.
// u(0) = u(1) removes node Mx, and u_xx(0) = u_xx(1) gives u_{Mx+1} = 2u_1 - u_{Mx-1}.
// In y, u_y = u_yyy = 0 on both faces reflect the ghosts evenly.
// Time: multi-term L1, implicit in the spatial operator; the matrix is
// factorised once.

#include "fracinv/forward.hpp"
#include "fracinv/fractional.hpp"
#include "fracinv/parallel.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

namespace fracinv {

struct FDGrid {
    int mx = 32;
    int my = 32;
    int steps = 256;

    void validate() const
    {
        if (mx < 8 || my < 8)
            fail(ErrorKind::InvalidParameters, "finite-difference grid needs at least 8 intervals per axis");
        if (steps < 1)
            fail(ErrorKind::InvalidParameters, "finite-difference run needs at least one time step");
    }

    /// Unknowns per time level: x nodes 0..Mx-1 times y nodes 0..My.
    [[nodiscard]] std::size_t unknowns() const noexcept
    {
        return static_cast<std::size_t>(mx) * static_cast<std::size_t>(my + 1);
    }

    [[nodiscard]] std::size_t id(int i, int j) const noexcept
    {
        return static_cast<std::size_t>(j) * static_cast<std::size_t>(mx) + static_cast<std::size_t>(i);
    }
};

/// Nodal values of u at every time level.
struct FieldHistory {
    FDGrid grid;
    TimeGrid time;
    std::vector<Eigen::VectorXd> levels;

    /// u(x_i, y_j, t_level); i may equal Mx (identified with 0).
    [[nodiscard]] double at(std::size_t level, int i, int j) const
    {
        return levels[level][static_cast<Eigen::Index>(grid.id(i == grid.mx ? 0 : i, j))];
    }
};

namespace detail {

/// Stencil rows of the 1-D fourth difference (scaled by h^-4) after ghost
/// elimination, as (column, weight) lists.
using Stencil = std::vector<std::vector<std::pair<int, double>>>;

inline Stencil fourth_difference_x(int m)
{
    Stencil rows(static_cast<std::size_t>(m));
    const double w[5] = {1, -4, 6, -4, 1};
    for (int i = 0; i < m; ++i) {
        for (int s = -2; s <= 2; ++s) {
            const int node = i + s;
            const double c = w[s + 2];
            auto add = [&](int col, double v) { rows[static_cast<std::size_t>(i)].emplace_back(col, v); };
            if (node < 0)
                add(-node, c); // even reflection at x = 0
            else if (node < m)
                add(node, c);
            else if (node == m)
                add(0, c); // u(1) = u(0)
            else { // node == m + 1
                add(1, 2 * c);
                add(m - 1, -c);
            }
        }
    }
    return rows;
}

inline Stencil fourth_difference_y(int m)
{
    Stencil rows(static_cast<std::size_t>(m + 1));
    const double w[5] = {1, -4, 6, -4, 1};
    for (int j = 0; j <= m; ++j)
        for (int s = -2; s <= 2; ++s) {
            int node = j + s;
            if (node < 0)
                node = -node;
            if (node > m)
                node = 2 * m - node;
            rows[static_cast<std::size_t>(j)].emplace_back(node, w[s + 2]);
        }
    return rows;
}

} // namespace detail

/// Sparse matrix of the discrete bi-Laplacian on the FD unknowns.
inline Eigen::SparseMatrix<double> fd_bilaplacian(const FDGrid& g)
{
    const auto sx = detail::fourth_difference_x(g.mx);
    const auto sy = detail::fourth_difference_y(g.my);
    const double ix = std::pow(double(g.mx), 4);
    const double iy = std::pow(double(g.my), 4);
    std::vector<Eigen::Triplet<double>> trips;
    for (int j = 0; j <= g.my; ++j)
        for (int i = 0; i < g.mx; ++i) {
            const auto row = static_cast<Eigen::Index>(g.id(i, j));
            for (const auto& [col, w] : sx[static_cast<std::size_t>(i)])
                trips.emplace_back(row, static_cast<Eigen::Index>(g.id(col, j)), w * ix);
            for (const auto& [col, w] : sy[static_cast<std::size_t>(j)])
                trips.emplace_back(row, static_cast<Eigen::Index>(g.id(i, col)), w * iy);
        }
    const auto n = static_cast<Eigen::Index>(g.unknowns());
    Eigen::SparseMatrix<double> A(n, n);
    A.setFromTriplets(trips.begin(), trips.end());
    return A;
}

inline Eigen::VectorXd fd_sample(const FDGrid& g, const std::function<double(double, double)>& fn)
{
    Eigen::VectorXd v(static_cast<Eigen::Index>(g.unknowns()));
    for (int j = 0; j <= g.my; ++j)
        for (int i = 0; i < g.mx; ++i)
            v[static_cast<Eigen::Index>(g.id(i, j))] = fn(double(i) / g.mx, double(j) / g.my);
    return v;
}

struct FDOptions {
    unsigned threads = 0;
    double growth_guard = 1e6;
};

inline FieldHistory fdm_forward(const ProblemData& problem, const FDGrid& grid, const FDOptions& opts = {})
{
    problem.op.validate();
    grid.validate();
    const TimeGrid time(problem.grid.horizon(), grid.steps);
    const TimeSeries a = problem.source_a.resample(time);
    const auto d = detail::l1_weights(problem.op, time);

    Eigen::SparseMatrix<double> M = fd_bilaplacian(grid);
    Eigen::SparseMatrix<double> I(M.rows(), M.cols());
    I.setIdentity();
    M += d[0] * I;
    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
    lu.compute(M);
    if (lu.info() != Eigen::Success)
        fail(ErrorKind::SingularSystem, "finite-difference matrix factorisation failed");

    FieldHistory out{grid, time, {}};
    out.levels.reserve(time.size());
    out.levels.push_back(fd_sample(grid, [&](double x, double y) { return problem.phi(x, y); }));
    const auto n = static_cast<Eigen::Index>(grid.unknowns());
    std::vector<Eigen::VectorXd> increments; // u_l - u_{l-1}, l = 1..
    increments.reserve(time.size());
    Eigen::VectorXd rhs(n);
    for (std::size_t step = 1; step < time.size(); ++step) {
        const double t = time.at(step);
        // source and L1 history, split over columns of unknowns
        const std::size_t chunks = std::min<std::size_t>(static_cast<std::size_t>(grid.my + 1), 64);
        parallel_for(chunks, opts.threads, [&](std::size_t c) {
            const int j0 = static_cast<int>(c * static_cast<std::size_t>(grid.my + 1) / chunks);
            const int j1 = static_cast<int>((c + 1) * static_cast<std::size_t>(grid.my + 1) / chunks);
            for (int j = j0; j < j1; ++j)
                for (int i = 0; i < grid.mx; ++i) {
                    const auto r = static_cast<Eigen::Index>(grid.id(i, j));
                    double hist = 0.0;
                    for (std::size_t l = 1; l < step; ++l)
                        hist += d[l] * increments[step - l - 1][r];
                    rhs[r] = a[step] * problem.source_f(double(i) / grid.mx, double(j) / grid.my, t)
                             + d[0] * out.levels.back()[r] - hist;
                }
        });
        Eigen::VectorXd next = lu.solve(rhs);
        const double before = std::max({out.levels.back().norm(), rhs.norm() / d[0], 1e-300});
        if (!next.allFinite() || next.norm() > opts.growth_guard * before)
            fail(ErrorKind::StepRejected, "solution norm jumped at step " + std::to_string(step));
        increments.push_back(next - out.levels.back());
        out.levels.push_back(std::move(next));
    }
    return out;
}

struct ComparisonRow {
    double t = 0.0;
    double rel_l2 = 0.0;
    double sup = 0.0;
    double reference_l2 = 0.0;
};

namespace detail {

inline std::size_t exact_node(const TimeGrid& grid, double t)
{
    const double pos = t / grid.step();
    const auto j = static_cast<std::size_t>(std::lround(pos));
    if (std::fabs(pos - double(j)) > 1e-9 || j >= grid.size())
        fail(ErrorKind::InvalidParameters, "time " + std::to_string(t) + " is not a node of both grids");
    return j;
}

} // namespace detail

/// Relative L2(Omega) and sup differences between the spectral solution
/// (synthesised at the FD nodes) and the FD history at the requested times.
inline std::vector<ComparisonRow> compare(const SolutionBundle& bundle, const FieldHistory& history,
                                          const std::vector<double>& times)
{
    if (std::fabs(bundle.grid().horizon() - history.time.horizon()) > 1e-12 * history.time.horizon())
        fail(ErrorKind::InvalidParameters, "spectral and finite-difference horizons differ");
    const auto& g = history.grid;
    std::vector<std::pair<double, double>> pts;
    std::vector<double> weight;
    for (int j = 0; j <= g.my; ++j)
        for (int i = 0; i < g.mx; ++i) {
            pts.emplace_back(double(i) / g.mx, double(j) / g.my);
            // periodic-style rule in x (nodes 0..Mx-1), trapezoid in y
            weight.push_back((j == 0 || j == g.my ? 0.5 : 1.0) / (double(g.mx) * g.my));
        }
    std::vector<ComparisonRow> rows;
    for (double t : times) {
        const auto js = detail::exact_node(bundle.grid(), t);
        const auto jf = detail::exact_node(history.time, t);
        const auto u = synthesize(bundle.coeffs, pts, js).values;
        const auto& v = history.levels[jf];
        ComparisonRow row{t, 0.0, 0.0, 0.0};
        double diff = 0.0;
        for (std::size_t p = 0; p < pts.size(); ++p) {
            const double e = u[p] - v[static_cast<Eigen::Index>(p)];
            diff += weight[p] * e * e;
            row.reference_l2 += weight[p] * v[static_cast<Eigen::Index>(p)] * v[static_cast<Eigen::Index>(p)];
            row.sup = std::max(row.sup, std::fabs(e));
        }
        row.reference_l2 = std::sqrt(row.reference_l2);
        row.rel_l2 = std::sqrt(diff) / std::max(row.reference_l2, 1e-300);
        rows.push_back(row);
    }
    return rows;
}

/// Relative L2(Omega) difference of the FD history against an exact field.
inline double fd_error(const FieldHistory& history, std::size_t level, const std::function<double(double, double)>& exact)
{
    const auto& g = history.grid;
    double diff = 0.0, norm = 0.0;
    for (int j = 0; j <= g.my; ++j)
        for (int i = 0; i < g.mx; ++i) {
            const double w = j == 0 || j == g.my ? 0.5 : 1.0;
            const double ref = exact(double(i) / g.mx, double(j) / g.my);
            const double e = history.at(level, i, j) - ref;
            diff += w * e * e;
            norm += w * ref * ref;
        }
    return std::sqrt(diff / std::max(norm, 1e-300));
}

} // namespace fracinv
