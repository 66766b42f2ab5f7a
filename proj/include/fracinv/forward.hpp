#pragma once

// Closed-form forward solver. Each coefficient T_nk of u = sum T_nk Z_nk obeys
//
//   D T_0k + mu_k T_0k                              = a f_0k
//   D T_2nk + sigma_nk T_2nk                        = a f_2nk
//   D T_(2n-1)k + sigma_nk T_(2n-1)k - 4 (2n pi)^3 T_2nk = a f_(2n-1)k
//
// with D the multi-term Caputo operator, and is given by relaxation kernels:
// phi_nk (e_1 + sum psi_i e_{alpha+1-alpha_i}) plus the forcing convolved with e_alpha.

#include "fracinv/field.hpp"
#include "fracinv/fractional.hpp"
#include "fracinv/mlf.hpp"
#include "fracinv/parallel.hpp"
#include "fracinv/spectral.hpp"
#include "fracinv/time_series.hpp"

#include <chrono>
#include <cmath>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

namespace fracinv {

struct ProblemData {
    FractionalOperatorSpec op;
    Field2D phi = Field2D::zero();
    SourceField source_f;
    TimeSeries source_a; // on `grid`; ignored by the inverse solver
    TimeGrid grid;
    int n_max = 4;
    int k_max = 4;

    void validate(bool need_a = true) const
    {
        op.validate();
        if (n_max < 0 || k_max < 0)
            fail(ErrorKind::InvalidParameters, "truncation bounds must be non-negative");
        if (grid.intervals() < 2)
            fail(ErrorKind::GridTooCoarse, "forward solver needs at least two time intervals");
        if (need_a && !(source_a.grid() == grid))
            fail(ErrorKind::InvalidParameters, "a(t) must be sampled on the problem grid");
    }
};

struct ForwardOptions {
    ConvolutionOptions convolution{};
    ProjectionOptions projection{};
    unsigned threads = 0; // 0 = all cores
    double tail_warning = 1e-2; // relative size of the outermost shell that triggers a warning
};

/// Box projections of the data: phi_nk and f_nk(t) on the problem grid.
struct ProjectedData {
    StaticCoefficients phi;
    TrajectoryCoefficients f;
};

struct SolutionBundle {
    TrajectoryCoefficients coeffs;
    StaticCoefficients phi;
    TimeSeries energy;
    double truncation_tail = 0.0; // sup_t of sqrt2 * sum over the outer shell of |T_nk|
    double solution_scale = 0.0;  // sup_t of sqrt2 * sum over the box of |T_nk|
    double seconds = 0.0;
    std::size_t kernel_groups = 0; // distinct eigenvalues that needed a solve
    std::vector<std::string> warnings;

    [[nodiscard]] const TimeGrid& grid() const noexcept { return energy.grid(); }
};

inline ProjectedData project_data(const ProblemData& problem, const ProjectionOptions& opts = {})
{
    ProjectedData out{project_box(problem.phi, problem.n_max, problem.k_max, opts),
                      TrajectoryCoefficients(problem.n_max, problem.k_max)};
    const auto indices = out.phi.indices();
    for (const auto& idx : indices)
        out.f.set(idx, TimeSeries(problem.grid));
    const auto& src = problem.source_f;
    if (src.is_sliced()) {
        std::vector<StaticCoefficients> per_node;
        for (const auto& slice : src.slice_fields())
            per_node.push_back(project_box(slice, problem.n_max, problem.k_max, opts));
        for (const auto& idx : indices) {
            TimeSeries s(src.slice_grid());
            for (std::size_t j = 0; j < s.size(); ++j)
                s[j] = per_node[j].at(idx);
            out.f.at(idx) = s.resample(problem.grid);
        }
        return out;
    }
    for (const auto& term : src.terms()) {
        const auto c = project_box(term.space, problem.n_max, problem.k_max, opts);
        const auto g = TimeSeries::sample(problem.grid, term.time);
        for (const auto& idx : indices)
            if (c.at(idx) != 0.0)
                out.f.at(idx) += c.at(idx) * g;
    }
    return out;
}

/// Kernels and convolution weights shared by every mode with eigenvalue sigma.
class ModeSolver {
public:
    ModeSolver(const FractionalOperatorSpec& op, const TimeGrid& grid, double sigma, const ConvolutionOptions& opts = {})
        : op_(op), grid_(grid), sigma_(sigma), opts_(opts)
    {
    }

    [[nodiscard]] double sigma() const noexcept { return sigma_; }

    /// phi (e_1 + sum_i psi_i e_{alpha+1-alpha_i}) on the grid.
    [[nodiscard]] const TimeSeries& homogeneous() const
    {
        if (!homogeneous_) {
            TimeSeries h(grid_);
            h[0] = 1.0;
            KernelEvaluator e1(op_.solution_kernel(sigma_, 1.0), opts_.kernel);
            for (std::size_t j = 1; j < h.size(); ++j)
                h[j] = e1(grid_.at(j));
            for (const auto& term : op_.terms) {
                if (term.psi == 0.0)
                    continue;
                KernelEvaluator ei(op_.solution_kernel(sigma_, op_.alpha + 1.0 - term.order), opts_.kernel);
                for (std::size_t j = 1; j < h.size(); ++j)
                    h[j] += term.psi * ei(grid_.at(j));
            }
            homogeneous_ = std::move(h);
        }
        return *homogeneous_;
    }

    /// Convolution with e_alpha (built on first use).
    [[nodiscard]] const ConvolutionOperator& convolution() const
    {
        if (!convolution_)
            convolution_.emplace(op_.solution_kernel(sigma_, op_.alpha), grid_, opts_);
        return *convolution_;
    }

    /// phi * homogeneous + forcing * e_alpha; zero data skips every kernel.
    [[nodiscard]] TimeSeries solve(double phi, const TimeSeries& forcing) const
    {
        TimeSeries out(grid_);
        if (phi != 0.0)
            out += phi * homogeneous();
        if (forcing.max_abs() > 0.0)
            out += convolution().apply(forcing);
        return out;
    }

private:
    FractionalOperatorSpec op_;
    TimeGrid grid_;
    double sigma_;
    ConvolutionOptions opts_;
    mutable std::optional<TimeSeries> homogeneous_;
    mutable std::optional<ConvolutionOperator> convolution_;
};

/// 4 lambda_n^{3/4} = 4 (2 n pi)^3.
inline double coupling(int n)
{
    return 4.0 * std::pow(2.0 * n * std::numbers::pi, 3);
}

/// a(t) f_nk(t), pointwise on the grid.
inline TimeSeries forcing_of(const ModeIndex& idx, const ProblemData& problem, const ProjectedData& data)
{
    return hadamard(problem.source_a, data.f.at(idx));
}

inline TimeSeries mode_zero(int k, const ProblemData& problem, const ProjectedData& data, const ForwardOptions& opts = {})
{
    const auto idx = ModeIndex::zero(k);
    ModeSolver solver(problem.op, problem.grid, eigen(idx).sigma, opts.convolution);
    return solver.solve(data.phi.at(idx), forcing_of(idx, problem, data));
}

inline TimeSeries mode_even(int n, int k, const ProblemData& problem, const ProjectedData& data,
                            const ForwardOptions& opts = {})
{
    const auto idx = ModeIndex::even(n, k);
    ModeSolver solver(problem.op, problem.grid, eigen(idx).sigma, opts.convolution);
    return solver.solve(data.phi.at(idx), forcing_of(idx, problem, data));
}

inline TimeSeries mode_odd(int n, int k, const ProblemData& problem, const ProjectedData& data,
                           const TimeSeries& even_traj, const ForwardOptions& opts = {})
{
    const auto idx = ModeIndex::odd(n, k);
    ModeSolver solver(problem.op, problem.grid, eigen(idx).sigma, opts.convolution);
    return solver.solve(data.phi.at(idx), forcing_of(idx, problem, data) + coupling(n) * even_traj);
}

/// E(t) = sum T_nk(t) int Z_nk; only k = 0 modes contribute.
inline TimeSeries energy(const TrajectoryCoefficients& coeffs, const TimeGrid& grid)
{
    TimeSeries e(grid);
    for (const auto& idx : coeffs.indices()) {
        if (idx.k != 0 || idx.family == Family::Odd || !coeffs.has(idx))
            continue;
        e += mode_integral(idx) * coeffs.at(idx);
    }
    return e;
}

inline TimeSeries energy(const SolutionBundle& bundle)
{
    return energy(bundle.coeffs, bundle.grid());
}

namespace detail {

/// One eigenvalue group: a Zero mode, or the Even/Odd pair sharing sigma_nk.
struct ModeGroup {
    ModeIndex lead;
    std::optional<ModeIndex> coupled; // the Odd partner of an Even lead
};

inline std::vector<ModeGroup> mode_groups(int n_max, int k_max)
{
    std::vector<ModeGroup> out;
    for (int k = 0; k <= k_max; ++k)
        out.push_back({ModeIndex::zero(k), std::nullopt});
    for (int n = 1; n <= n_max; ++n)
        for (int k = 0; k <= k_max; ++k)
            out.push_back({ModeIndex::even(n, k), ModeIndex::odd(n, k)});
    return out;
}

inline void fill_bundle_stats(SolutionBundle& bundle, int n_max, int k_max, double tail_warning)
{
    const auto& grid = bundle.grid();
    for (std::size_t j = 0; j < grid.size(); ++j) {
        double total = 0.0, shell = 0.0;
        for (const auto& idx : bundle.coeffs.indices()) {
            const double v = std::fabs(bundle.coeffs.at(idx)[j]);
            total += v;
            if (outer_shell(idx, n_max, k_max))
                shell += v;
        }
        bundle.solution_scale = std::max(bundle.solution_scale, std::numbers::sqrt2 * total);
        bundle.truncation_tail = std::max(bundle.truncation_tail, std::numbers::sqrt2 * shell);
    }
    if (bundle.truncation_tail > tail_warning * bundle.solution_scale)
        bundle.warnings.push_back("outermost shell carries " + std::to_string(bundle.truncation_tail)
                                  + " of a solution scale " + std::to_string(bundle.solution_scale)
                                  + "; consider a larger truncation box");
}

} // namespace detail

/// Solves every mode of the box from already-projected data.
inline SolutionBundle solve_projected(const ProblemData& problem, const ProjectedData& data, const ForwardOptions& opts = {})
{
    const auto start = std::chrono::steady_clock::now();
    const auto groups = detail::mode_groups(problem.n_max, problem.k_max);
    std::vector<TimeSeries> lead(groups.size()), partner(groups.size());
    std::vector<char> used(groups.size(), 0);
    parallel_for(groups.size(), opts.threads, [&](std::size_t g) {
        const auto& group = groups[g];
        ModeSolver solver(problem.op, problem.grid, eigen(group.lead).sigma, opts.convolution);
        lead[g] = solver.solve(data.phi.at(group.lead), forcing_of(group.lead, problem, data));
        bool active = lead[g].max_abs() > 0.0;
        if (group.coupled) {
            const auto& odd = *group.coupled;
            TimeSeries forcing = forcing_of(odd, problem, data);
            if (lead[g].max_abs() > 0.0)
                forcing += coupling(odd.n) * lead[g];
            partner[g] = solver.solve(data.phi.at(odd), forcing);
            active = active || partner[g].max_abs() > 0.0;
        }
        used[g] = active;
    });

    SolutionBundle bundle;
    bundle.coeffs = TrajectoryCoefficients(problem.n_max, problem.k_max);
    bundle.phi = data.phi;
    for (std::size_t g = 0; g < groups.size(); ++g) {
        bundle.coeffs.set(groups[g].lead, std::move(lead[g]));
        if (groups[g].coupled)
            bundle.coeffs.set(*groups[g].coupled, std::move(partner[g]));
        bundle.kernel_groups += used[g] ? 1 : 0;
    }
    bundle.energy = energy(bundle.coeffs, problem.grid);
    detail::fill_bundle_stats(bundle, problem.n_max, problem.k_max, opts.tail_warning);
    bundle.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return bundle;
}

inline SolutionBundle solve_forward(const ProblemData& problem, const ForwardOptions& opts = {})
{
    problem.validate();
    const auto start = std::chrono::steady_clock::now();
    auto bundle = solve_projected(problem, project_data(problem, opts.projection), opts);
    bundle.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return bundle;
}

/// u at (x, y) for every requested time node.
inline std::vector<double> field_at(const SolutionBundle& bundle, const std::vector<std::pair<double, double>>& points,
                                    std::size_t time_index)
{
    return synthesize(bundle.coeffs, points, time_index).values;
}

/// Residual D T + sigma T - coupling - a f_nk of one mode under the plain L1
/// scheme. Starting corrections are left out: stiff modes have an initial layer
/// far narrower than a step, which the power-law corrections amplify.
inline TimeSeries mode_residual(const ModeIndex& idx, const SolutionBundle& bundle, const ProblemData& problem,
                                const ProjectedData& data)
{
    const auto& traj = bundle.coeffs.at(idx);
    TimeSeries r = caputo_multiterm(traj, problem.op) + eigen(idx).sigma * traj - forcing_of(idx, problem, data);
    if (idx.family == Family::Odd)
        r -= coupling(idx.n) * bundle.coeffs.at(ModeIndex::even(idx.n, idx.k));
    return r;
}

/// sup |r(t)| over nodes with t >= from.
inline double sup_from(const TimeSeries& r, double from)
{
    double m = 0.0;
    for (std::size_t j = 0; j < r.size(); ++j)
        if (r.t(j) >= from - 1e-12)
            m = std::max(m, std::fabs(r[j]));
    return m;
}

} // namespace fracinv
