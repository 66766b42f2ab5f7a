#pragma once

// Recovery of the temporal source amplitude a(t) from the energy
// E(t) = int int u dx dy.
//
// Integrating the equation over the square gives
//
//   D E(t) = a(t) int int f dx dy + sum_n (2 n pi)^3 T_2n0(t),
//
// where the sum comes from the Even k = 0 modes, whose bi-Laplacian has a
// non-zero mean. recover_source drops that sum (the explicit formula);
// solve_inverse keeps it by default and solves the resulting linear system,
// since each T_2n0 depends linearly on a.

#include "fracinv/field.hpp"
#include "fracinv/forward.hpp"
#include "fracinv/fractional.hpp"
#include "fracinv/spectral.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

namespace fracinv {

struct EnergyDatum {
    TimeSeries E;
};

struct SourceAmplitude {
    TimeSeries a;
    bool extrapolated_origin = true; // a(0) comes from nodes 1..3
};

struct RecoveryOptions {
    double mean_floor = 1e-8;          // |int int f| below this violates the solvability hypothesis
    bool starting_corrections = true;  // corrected L1 for the fractional derivative of E
    std::optional<double> initial_mass; // int int phi; checked against E(0) when given
    double compatibility_tol = 1e-6;
};

namespace detail {

/// Datum on the recovery grid: subsampled when the grids nest, PCHIP otherwise.
inline TimeSeries onto(const TimeSeries& s, const TimeGrid& grid)
{
    const int fine = s.grid().intervals();
    if (std::fabs(s.grid().horizon() - grid.horizon()) <= 1e-12 * grid.horizon() && fine % grid.intervals() == 0)
        return s.downsample(fine / grid.intervals());
    return s.resample(grid);
}

inline void check_compatibility(const TimeSeries& E, double mass, double tol)
{
    if (std::fabs(E[0] - mass) > tol * std::max(1.0, std::fabs(mass)))
        fail(ErrorKind::CompatibilityViolation, "E(0) = " + std::to_string(E[0]) + " but the initial data integrate to "
                                                    + std::to_string(mass));
}

inline void check_mean(const TimeSeries& mean, double floor)
{
    for (std::size_t j = 0; j < mean.size(); ++j)
        if (!(std::fabs(mean[j]) >= floor))
            fail(ErrorKind::MeanTooSmall, "source mean " + std::to_string(mean[j]) + " at t = "
                                              + std::to_string(mean.t(j)) + " is below the floor "
                                              + std::to_string(floor));
}

inline TimeSeries energy_derivative(const TimeSeries& E, const FractionalOperatorSpec& op, bool corrected)
{
    CaputoOptions caputo;
    if (corrected)
        caputo.exact_powers = singular_exponents(op);
    return caputo_multiterm(E, op, caputo);
}

inline void extrapolate_origin(TimeSeries& a)
{
    if (a.size() >= 4)
        a[0] = 3.0 * a[1] - 3.0 * a[2] + a[3];
    else
        a[0] = a[1];
}

} // namespace detail

/// a(t) = (D E)(t) / int int f(., ., t), node by node.
inline SourceAmplitude recover_source(const SourceField& f, const EnergyDatum& datum, const FractionalOperatorSpec& op,
                                      const TimeGrid& grid, const RecoveryOptions& opts = {})
{
    op.validate();
    if (grid.intervals() < 3)
        fail(ErrorKind::GridTooCoarse, "recovery needs at least three intervals");
    const TimeSeries E = detail::onto(datum.E, grid);
    if (opts.initial_mass)
        detail::check_compatibility(E, *opts.initial_mass, opts.compatibility_tol);
    const TimeSeries mean = f.mean(grid);
    detail::check_mean(mean, opts.mean_floor);
    const TimeSeries dE = detail::energy_derivative(E, op, opts.starting_corrections);
    SourceAmplitude out{TimeSeries(grid), true};
    for (std::size_t j = 1; j < grid.size(); ++j)
        out.a[j] = dE[j] / mean[j];
    detail::extrapolate_origin(out.a);
    return out;
}

struct InverseOptions {
    RecoveryOptions recovery{};
    ForwardOptions forward{};
    bool flux_correction = true;
};

struct InverseResult {
    SourceAmplitude amplitude;
    SolutionBundle bundle;
    TimeSeries energy_residual; // energy(bundle) - E on the recovery grid
    double self_consistency = 0.0; // sup |energy_residual| / sup |E|
};

/// Box-truncated mean of f: f_00 - sum_n f_2n0 / (2 n pi), consistent with the
/// truncated expansion of u.
inline TimeSeries box_mean(const ProjectedData& data, int n_max)
{
    TimeSeries m = data.f.at(ModeIndex::zero(0));
    for (int n = 1; n <= n_max; ++n)
        m += mode_integral(ModeIndex::even(n, 0)) * data.f.at(ModeIndex::even(n, 0));
    return m;
}

/// Flux-corrected recovery: solves, for j = 1..N,
///   a_j F_j + sum_n c_n [phi_2n0 h_n(t_j) + (M_n (a f_2n0))_j] = (D E)_j,  c_n = (2 n pi)^3,
/// with a_0 tied to a_1..a_3 by the same quadratic extrapolation as the explicit formula.
inline SourceAmplitude recover_with_flux(const ProblemData& problem, const ProjectedData& data, const TimeSeries& E,
                                         const InverseOptions& opts = {})
{
    const TimeGrid& grid = problem.grid;
    const auto N = static_cast<Eigen::Index>(grid.intervals());
    const TimeSeries F = box_mean(data, problem.n_max);
    detail::check_mean(F, opts.recovery.mean_floor);
    const TimeSeries dE = detail::energy_derivative(E, problem.op, opts.recovery.starting_corrections);

    Eigen::MatrixXd K = Eigen::MatrixXd::Zero(N + 1, N + 1);
    Eigen::VectorXd rhs(N + 1);
    for (Eigen::Index j = 0; j <= N; ++j) {
        K(j, j) = F[static_cast<std::size_t>(j)];
        rhs[j] = dE[static_cast<std::size_t>(j)];
    }
    for (int n = 1; n <= problem.n_max; ++n) {
        const auto idx = ModeIndex::even(n, 0);
        const double phi = data.phi.at(idx);
        const TimeSeries& fn = data.f.at(idx);
        if (phi == 0.0 && fn.max_abs() == 0.0)
            continue;
        const double c = std::pow(2.0 * n * std::numbers::pi, 3);
        ModeSolver solver(problem.op, grid, eigen(idx).sigma, opts.forward.convolution);
        if (phi != 0.0) {
            const TimeSeries& h = solver.homogeneous();
            for (Eigen::Index j = 0; j <= N; ++j)
                rhs[j] -= c * phi * h[static_cast<std::size_t>(j)];
        }
        if (fn.max_abs() > 0.0) {
            const Eigen::MatrixXd M = solver.convolution().matrix();
            for (Eigen::Index i = 0; i <= N; ++i)
                K.col(i) += c * fn[static_cast<std::size_t>(i)] * M.col(i);
        }
    }
    // a_0 = 3 a_1 - 3 a_2 + a_3
    Eigen::MatrixXd A = K.block(1, 1, N, N);
    A.col(0) += 3.0 * K.block(1, 0, N, 1);
    A.col(1) -= 3.0 * K.block(1, 0, N, 1);
    A.col(2) += K.block(1, 0, N, 1);
    const Eigen::PartialPivLU<Eigen::MatrixXd> lu(A);
    const Eigen::VectorXd sol = lu.solve(rhs.tail(N));
    if (!sol.allFinite())
        fail(ErrorKind::SingularSystem, "flux-corrected recovery system is singular");
    SourceAmplitude out{TimeSeries(grid), true};
    for (Eigen::Index j = 1; j <= N; ++j)
        out.a[static_cast<std::size_t>(j)] = sol[j - 1];
    detail::extrapolate_origin(out.a);
    return out;
}

/// Recovers a(t) on problem.grid from the datum, then solves the forward problem with it.
inline InverseResult solve_inverse(const ProblemData& problem, const EnergyDatum& datum, const InverseOptions& opts = {})
{
    problem.validate(false);
    if (problem.grid.intervals() < 3)
        fail(ErrorKind::GridTooCoarse, "recovery needs at least three intervals");
    const TimeSeries E = detail::onto(datum.E, problem.grid);
    detail::check_compatibility(E, field_mean(problem.phi), opts.recovery.compatibility_tol);

    ProblemData solved = problem;
    const ProjectedData data = project_data(
        [&] {
            ProblemData p = problem;
            p.source_a = TimeSeries(problem.grid);
            return p;
        }(),
        opts.forward.projection);
    InverseResult out;
    if (opts.flux_correction) {
        out.amplitude = recover_with_flux(problem, data, E, opts);
    } else {
        RecoveryOptions rec = opts.recovery;
        rec.initial_mass.reset();
        out.amplitude = recover_source(problem.source_f, EnergyDatum{E}, problem.op, problem.grid, rec);
    }
    solved.source_a = out.amplitude.a;
    out.bundle = solve_projected(solved, data, opts.forward);
    out.energy_residual = out.bundle.energy - E;
    out.self_consistency = out.energy_residual.max_abs() / std::max(E.max_abs(), 1e-300);
    return out;
}

struct Perturbation {
    Field2D f_direction = Field2D::zero(); // added to f as a steady term
    std::optional<TimeSeries> E_direction;
    Field2D phi_direction = Field2D::zero();
};

struct StabilityRow {
    double delta = 0.0;
    double a_diff = 0.0; // sup over nodes
    double u_diff = 0.0; // L2 over the square and (0, T); only with `with_u`
};

struct StabilityReport {
    std::vector<StabilityRow> rows;
    double a_slope = 0.0;
    double u_slope = 0.0;
    std::vector<double> halving_ratios; // a_diff(delta) / a_diff(delta / 2) for consecutive halvings
};

namespace detail {

/// L2 norm over the unit square and the time interval, trapezoid in time, 17x17 nodes in space.
inline double space_time_l2(const TrajectoryCoefficients& c, const TimeGrid& grid)
{
    std::vector<std::pair<double, double>> pts;
    std::vector<double> w;
    const int m = 16;
    for (int j = 0; j <= m; ++j)
        for (int i = 0; i <= m; ++i) {
            pts.emplace_back(double(i) / m, double(j) / m);
            w.push_back((i == 0 || i == m ? 0.5 : 1.0) * (j == 0 || j == m ? 0.5 : 1.0) / (m * m));
        }
    double total = 0.0;
    for (std::size_t l = 0; l < grid.size(); ++l) {
        const auto v = synthesize(c, pts, l).values;
        double s = 0.0;
        for (std::size_t p = 0; p < v.size(); ++p)
            s += w[p] * v[p] * v[p];
        total += (l == 0 || l + 1 == grid.size() ? 0.5 : 1.0) * grid.step() * s;
    }
    return std::sqrt(total);
}

inline TrajectoryCoefficients difference(const TrajectoryCoefficients& a, const TrajectoryCoefficients& b)
{
    TrajectoryCoefficients out(a.n_max(), a.k_max());
    for (const auto& idx : a.indices())
        out.set(idx, a.at(idx) - b.at(idx));
    return out;
}

} // namespace detail

/// Recovers a with the explicit formula for the base data and for each
/// perturbation size, and optionally compares the forward solutions.
inline StabilityReport stability_probe(const ProblemData& base, const EnergyDatum& datum, const Perturbation& direction,
                                       const std::vector<double>& deltas, bool with_u = false,
                                       const InverseOptions& opts = {})
{
    base.validate(false);
    const TimeSeries E = detail::onto(datum.E, base.grid);
    RecoveryOptions rec = opts.recovery;
    rec.initial_mass.reset();
    const SourceAmplitude a0 = recover_source(base.source_f, EnergyDatum{E}, base.op, base.grid, rec);
    std::optional<SolutionBundle> u0;
    if (with_u) {
        ProblemData p = base;
        p.source_a = a0.a;
        u0 = solve_forward(p, opts.forward);
    }
    StabilityReport report;
    for (double delta : deltas) {
        ProblemData p = base;
        if (direction.f_direction.terms() && !direction.f_direction.terms()->empty()) {
            if (p.source_f.is_sliced())
                fail(ErrorKind::InvalidParameters, "source perturbations need an analytic source");
            auto terms = p.source_f.terms();
            terms.push_back({delta * direction.f_direction, TimeProfile{}});
            p.source_f = SourceField(std::move(terms));
        }
        if (direction.phi_direction.terms() && !direction.phi_direction.terms()->empty())
            p.phi += delta * direction.phi_direction;
        TimeSeries Ep = E;
        if (direction.E_direction)
            Ep += delta * detail::onto(*direction.E_direction, base.grid);
        const SourceAmplitude a = recover_source(p.source_f, EnergyDatum{Ep}, p.op, p.grid, rec);
        StabilityRow row{delta, (a.a - a0.a).max_abs(), 0.0};
        if (with_u) {
            p.source_a = a.a;
            const auto u = solve_forward(p, opts.forward);
            row.u_diff = detail::space_time_l2(detail::difference(u.coeffs, u0->coeffs), base.grid);
        }
        report.rows.push_back(row);
    }
    std::vector<double> ld, la, lu;
    for (const auto& r : report.rows)
        if (r.delta > 0.0 && r.a_diff > 0.0) {
            ld.push_back(std::log(r.delta));
            la.push_back(std::log(r.a_diff));
            if (with_u && r.u_diff > 0.0)
                lu.push_back(std::log(r.u_diff));
        }
    if (la.size() >= 2)
        report.a_slope = detail::fit_slope(ld, la);
    if (lu.size() == ld.size() && lu.size() >= 2)
        report.u_slope = detail::fit_slope(ld, lu);
    for (std::size_t i = 0; i + 1 < report.rows.size(); ++i)
        if (std::fabs(report.rows[i + 1].delta * 2.0 - report.rows[i].delta) <= 1e-12 * report.rows[i].delta
            && report.rows[i + 1].a_diff > 0.0)
            report.halving_ratios.push_back(report.rows[i].a_diff / report.rows[i + 1].a_diff);
    return report;
}

} // namespace fracinv
