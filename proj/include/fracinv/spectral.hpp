#pragma once

// Bi-orthogonal eigenfunction families of the nonlocal fourth-order spectral
// problem on the unit square, projections onto the conjugate family and
// synthesis from coefficients.
//
//   Z_0k = Y_k(y),                   W_0k = 2(1-x) Y_k(y)
//   Z_(2n-1)k = cos(2n pi x) Y_k(y), W_(2n-1)k = 4(1-x) cos(2n pi x) Y_k(y)
//   Z_2nk = x sin(2n pi x) Y_k(y),   W_2nk = 4 sin(2n pi x) Y_k(y)
//
// with Y_k = sqrt(2) cos(k pi y) for k >= 1 and Y_0 = 1.

#include "fracinv/error.hpp"
#include "fracinv/field.hpp"
#include "fracinv/quadrature.hpp"
#include "fracinv/time_series.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

namespace fracinv {

enum class Family { Zero, Odd, Even };

constexpr std::string_view to_string(Family f) noexcept
{
    switch (f) {
    case Family::Zero: return "zero";
    case Family::Odd: return "odd";
    case Family::Even: return "even";
    }
    return "?";
}

struct ModeIndex {
    Family family = Family::Zero;
    int n = 0; // >= 1 for Odd/Even, 0 for Zero
    int k = 0;

    static ModeIndex zero(int k) { return {Family::Zero, 0, k}; }
    static ModeIndex odd(int n, int k) { return {Family::Odd, n, k}; }
    static ModeIndex even(int n, int k) { return {Family::Even, n, k}; }

    void validate() const
    {
        if (k < 0)
            fail(ErrorKind::InvalidParameters, "mode index k must be >= 0");
        if (family != Family::Zero && n < 1)
            fail(ErrorKind::InvalidParameters, "mode index n must be >= 1 for odd/even families");
    }

    [[nodiscard]] std::string label() const
    {
        return std::string(to_string(family)) + "(" + std::to_string(n) + "," + std::to_string(k) + ")";
    }

    friend bool operator==(const ModeIndex&, const ModeIndex&) = default;
};

struct EigenData {
    double mu = 0.0;     // (k pi)^4
    double lambda = 0.0; // (2 n pi)^4, 0 for the Zero family
    double sigma = 0.0;  // mu + lambda
};

inline EigenData eigen(const ModeIndex& index)
{
    const double kp = index.k * std::numbers::pi;
    EigenData e;
    e.mu = kp * kp * kp * kp;
    if (index.family != Family::Zero) {
        const double np = 2.0 * index.n * std::numbers::pi;
        e.lambda = np * np * np * np;
    }
    e.sigma = e.mu + e.lambda;
    return e;
}

/// Factor functions of the two families. The default instance is the exact
/// basis; tests and `verify --sabotage` swap individual factors.
struct Basis {
    std::function<double(Family, int, double)> z_x = exact_z_x;
    std::function<double(Family, int, double)> w_x = exact_w_x;
    std::function<double(int, double)> y = exact_y;

    static double exact_z_x(Family f, int n, double x)
    {
        const double w = 2.0 * n * std::numbers::pi;
        switch (f) {
        case Family::Zero: return 1.0;
        case Family::Odd: return std::cos(w * x);
        case Family::Even: return x * std::sin(w * x);
        }
        return 0.0;
    }

    static double exact_w_x(Family f, int n, double x)
    {
        const double w = 2.0 * n * std::numbers::pi;
        switch (f) {
        case Family::Zero: return 2.0 * (1.0 - x);
        case Family::Odd: return 4.0 * (1.0 - x) * std::cos(w * x);
        case Family::Even: return 4.0 * std::sin(w * x);
        }
        return 0.0;
    }

    static double exact_y(int k, double y)
    {
        return k == 0 ? 1.0 : std::numbers::sqrt2 * std::cos(k * std::numbers::pi * y);
    }

    [[nodiscard]] double z(const ModeIndex& i, double x, double yv) const { return z_x(i.family, i.n, x) * y(i.k, yv); }
    [[nodiscard]] double w(const ModeIndex& i, double x, double yv) const { return w_x(i.family, i.n, x) * y(i.k, yv); }
};

inline double eval_Z(const ModeIndex& index, double x, double y)
{
    return Basis::exact_z_x(index.family, index.n, x) * Basis::exact_y(index.k, y);
}

inline double eval_W(const ModeIndex& index, double x, double y)
{
    return Basis::exact_w_x(index.family, index.n, x) * Basis::exact_y(index.k, y);
}

/// Closed-form integral of Z over the unit square.
inline double mode_integral(const ModeIndex& index)
{
    if (index.k != 0 || index.family == Family::Odd)
        return 0.0;
    if (index.family == Family::Zero)
        return 1.0;
    return -1.0 / (2.0 * index.n * std::numbers::pi);
}

/// Dense storage over the box n <= N, k <= K for all three families
/// (Zero k = 0..K, Odd and Even n = 1..N, k = 0..K).
template <typename T>
class SpectralCoefficients {
public:
    SpectralCoefficients() = default;

    SpectralCoefficients(int n_max, int k_max) : n_max_(n_max), k_max_(k_max)
    {
        if (n_max < 0 || k_max < 0)
            fail(ErrorKind::InvalidParameters, "truncation bounds must be non-negative");
        values_.resize(slots());
        present_.assign(slots(), 0);
    }

    [[nodiscard]] int n_max() const noexcept { return n_max_; }
    [[nodiscard]] int k_max() const noexcept { return k_max_; }
    [[nodiscard]] std::size_t slots() const noexcept
    {
        return static_cast<std::size_t>(k_max_ + 1) * static_cast<std::size_t>(1 + 2 * n_max_);
    }

    [[nodiscard]] bool contains(const ModeIndex& i) const noexcept
    {
        if (i.k < 0 || i.k > k_max_)
            return false;
        return i.family == Family::Zero || (i.n >= 1 && i.n <= n_max_);
    }

    [[nodiscard]] bool has(const ModeIndex& i) const { return contains(i) && present_[slot(i)] != 0; }

    void set(const ModeIndex& i, T value)
    {
        if (!contains(i))
            fail(ErrorKind::InvalidParameters, "mode " + i.label() + " lies outside the truncation box");
        values_[slot(i)] = std::move(value);
        present_[slot(i)] = 1;
    }

    [[nodiscard]] const T& at(const ModeIndex& i) const
    {
        if (!has(i))
            fail(ErrorKind::MissingCoefficient, "no coefficient stored for mode " + i.label());
        return values_[slot(i)];
    }

    [[nodiscard]] T& at(const ModeIndex& i)
    {
        if (!has(i))
            fail(ErrorKind::MissingCoefficient, "no coefficient stored for mode " + i.label());
        return values_[slot(i)];
    }

    /// All indices of the box, Zero family first, then Odd, then Even.
    [[nodiscard]] std::vector<ModeIndex> indices() const { return box_indices(n_max_, k_max_); }

    static std::vector<ModeIndex> box_indices(int n_max, int k_max)
    {
        std::vector<ModeIndex> out;
        for (int k = 0; k <= k_max; ++k)
            out.push_back(ModeIndex::zero(k));
        for (Family f : {Family::Odd, Family::Even})
            for (int n = 1; n <= n_max; ++n)
                for (int k = 0; k <= k_max; ++k)
                    out.push_back({f, n, k});
        return out;
    }

private:
    [[nodiscard]] std::size_t slot(const ModeIndex& i) const noexcept
    {
        const std::size_t row = static_cast<std::size_t>(k_max_ + 1);
        switch (i.family) {
        case Family::Zero: return static_cast<std::size_t>(i.k);
        case Family::Odd: return row + static_cast<std::size_t>(i.n - 1) * row + static_cast<std::size_t>(i.k);
        case Family::Even:
            return row * static_cast<std::size_t>(1 + n_max_) + static_cast<std::size_t>(i.n - 1) * row
                   + static_cast<std::size_t>(i.k);
        }
        return 0;
    }

    int n_max_ = 0;
    int k_max_ = 0;
    std::vector<T> values_;
    std::vector<char> present_;
};

using StaticCoefficients = SpectralCoefficients<double>;
using TrajectoryCoefficients = SpectralCoefficients<TimeSeries>;

struct ProjectionOptions {
    int min_nodes = 32;
    double tolerance = 1e-9; // absolute, under node doubling
    bool validate = true;
};

namespace detail {

/// Composite Gauss-Legendre nodes on [0,1]: `panels` equal panels of q points.
struct Rule1D {
    std::vector<double> x;
    std::vector<double> w;
};

inline Rule1D composite_rule(int panels, int q)
{
    const auto& g = gauss_legendre(q);
    Rule1D r;
    const double h = 1.0 / panels;
    for (int p = 0; p < panels; ++p)
        for (std::size_t i = 0; i < g.size(); ++i) {
            r.x.push_back(h * (p + 0.5 * (1.0 + g.nodes[i])));
            r.w.push_back(0.5 * h * g.weights[i]);
        }
    return r;
}

template <typename Eval>
StaticCoefficients project_with(Eval&& field, int panels_x, int panels_y, int qx, int qy, int n_max, int k_max,
                                const Basis& basis)
{
    const Rule1D rx = composite_rule(panels_x, qx);
    const Rule1D ry = composite_rule(panels_y, qy);
    const std::size_t nx = rx.x.size();
    const std::size_t ny = ry.x.size();
    // A(i, k) = sum_j wy_j F(x_i, y_j) Y_k(y_j)
    Eigen::MatrixXd yk(static_cast<Eigen::Index>(ny), k_max + 1);
    for (std::size_t j = 0; j < ny; ++j)
        for (int k = 0; k <= k_max; ++k)
            yk(static_cast<Eigen::Index>(j), k) = ry.w[j] * basis.y(k, ry.x[j]);
    Eigen::MatrixXd F(static_cast<Eigen::Index>(nx), static_cast<Eigen::Index>(ny));
    for (std::size_t i = 0; i < nx; ++i)
        for (std::size_t j = 0; j < ny; ++j)
            F(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = field(rx.x[i], ry.x[j]);
    const Eigen::MatrixXd A = F * yk;
    StaticCoefficients out(n_max, k_max);
    for (const auto& idx : out.indices()) {
        double acc = 0.0;
        for (std::size_t i = 0; i < nx; ++i)
            acc += rx.w[i] * basis.w_x(idx.family, idx.n, rx.x[i]) * A(static_cast<Eigen::Index>(i), idx.k);
        out.set(idx, acc);
    }
    return out;
}

} // namespace detail

/// <field, W_nk> for every mode of the box by tensor Gauss-Legendre quadrature
/// with at least max(32, 4 max(2N, K)) nodes per axis, validated by doubling.
inline StaticCoefficients project_box(const Field2D& field, int n_max, int k_max, const ProjectionOptions& opts = {},
                                      const Basis& basis = {})
{
    const int q = std::max(opts.min_nodes, 4 * std::max(2 * n_max, k_max));
    int px = 1, py = 1, qx = q, qy = q;
    if (const auto* t = field.table()) {
        px = t->nx;
        py = t->ny;
        qx = std::max(4, (q + px - 1) / px + 2);
        qy = std::max(4, (q + py - 1) / py + 2);
    }
    auto eval = [&](double x, double y) { return field(x, y); };
    auto coarse = detail::project_with(eval, px, py, qx, qy, n_max, k_max, basis);
    if (!opts.validate)
        return coarse;
    auto fine = detail::project_with(eval, px, py, 2 * qx, 2 * qy, n_max, k_max, basis);
    for (const auto& idx : fine.indices()) {
        const double gap = std::fabs(fine.at(idx) - coarse.at(idx));
        if (gap > opts.tolerance)
            fail(ErrorKind::QuadratureFailure, "projection onto " + idx.label() + " changed by "
                                                   + std::to_string(gap) + " under node doubling");
    }
    return fine;
}

/// Single coefficient <field, W_index>.
inline double project(const Field2D& field, const ModeIndex& index, const ProjectionOptions& opts = {})
{
    index.validate();
    const int n = index.family == Family::Zero ? 0 : index.n;
    return project_box(field, std::max(n, 1), index.k, opts).at(index);
}

struct SynthesisResult {
    std::vector<double> values;
    double tail = 0.0; // max over points of the outermost shell's contribution
};

/// Shell of a mode inside the box: modes with n == N or k == K form the last shell.
inline bool outer_shell(const ModeIndex& i, int n_max, int k_max)
{
    return i.k == k_max || (i.family != Family::Zero && i.n == n_max);
}

template <typename Coef>
SynthesisResult synthesize_with(const SpectralCoefficients<Coef>& coeffs, const std::vector<std::pair<double, double>>& points,
                                std::function<double(const Coef&)> value)
{
    const auto indices = coeffs.indices();
    std::vector<double> amplitude;
    amplitude.reserve(indices.size());
    for (const auto& idx : indices)
        amplitude.push_back(value(coeffs.at(idx)));
    SynthesisResult out;
    out.values.assign(points.size(), 0.0);
    const int n_max = coeffs.n_max();
    const int k_max = coeffs.k_max();
    for (std::size_t p = 0; p < points.size(); ++p) {
        const auto [x, y] = points[p];
        std::vector<double> yk(static_cast<std::size_t>(k_max + 1));
        for (int k = 0; k <= k_max; ++k)
            yk[static_cast<std::size_t>(k)] = Basis::exact_y(k, y);
        double sum = 0.0, shell = 0.0;
        int last_n = -1;
        Family last_f = Family::Zero;
        double xf = 1.0;
        for (std::size_t m = 0; m < indices.size(); ++m) {
            const auto& idx = indices[m];
            if (amplitude[m] == 0.0)
                continue;
            if (idx.n != last_n || idx.family != last_f) {
                xf = Basis::exact_z_x(idx.family, idx.n, x);
                last_n = idx.n;
                last_f = idx.family;
            }
            const double term = amplitude[m] * xf * yk[static_cast<std::size_t>(idx.k)];
            sum += term;
            if (outer_shell(idx, n_max, k_max))
                shell += term;
        }
        out.values[p] = sum;
        out.tail = std::max(out.tail, std::fabs(shell));
    }
    return out;
}

/// u(x, y) = sum over the box of c_nk Z_nk(x, y), plus the truncation-tail indicator.
inline SynthesisResult synthesize(const StaticCoefficients& coeffs, const std::vector<std::pair<double, double>>& points)
{
    return synthesize_with<double>(coeffs, points, [](const double& v) { return v; });
}

/// Same for trajectories at one time node.
inline SynthesisResult synthesize(const TrajectoryCoefficients& coeffs, const std::vector<std::pair<double, double>>& points,
                                  std::size_t time_index)
{
    return synthesize_with<TimeSeries>(coeffs, points, [time_index](const TimeSeries& s) { return s[time_index]; });
}

/// Gram matrix <Z_i, W_j> over the box n <= N, k <= K, in box_indices order.
inline Eigen::MatrixXd biorthogonality_matrix(int n_max, int k_max, const Basis& basis = {})
{
    if (n_max < 1 || k_max < 1)
        fail(ErrorKind::InvalidParameters, "Gram matrix needs N, K >= 1");
    const auto indices = StaticCoefficients::box_indices(n_max, k_max);
    const int q = std::max(32, 4 * std::max(2 * n_max, k_max));
    const auto rule = detail::composite_rule(1, 2 * q);
    const std::size_t m = indices.size();
    // separable: <Z_i, W_j> = <X_i, X*_j>_x <Y_ki, Y_kj>_y
    auto x_inner = [&](const ModeIndex& a, const ModeIndex& b) {
        double acc = 0.0;
        for (std::size_t q2 = 0; q2 < rule.x.size(); ++q2)
            acc += rule.w[q2] * basis.z_x(a.family, a.n, rule.x[q2]) * basis.w_x(b.family, b.n, rule.x[q2]);
        return acc;
    };
    auto y_inner = [&](int ka, int kb) {
        double acc = 0.0;
        for (std::size_t q2 = 0; q2 < rule.x.size(); ++q2)
            acc += rule.w[q2] * basis.y(ka, rule.x[q2]) * basis.y(kb, rule.x[q2]);
        return acc;
    };
    Eigen::MatrixXd gram(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(m));
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < m; ++j)
            gram(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j))
                = x_inner(indices[i], indices[j]) * y_inner(indices[i].k, indices[j].k);
    return gram;
}

enum class DatumKind { SourceF, InitialPhi };

struct DecayReport {
    DatumKind kind = DatumKind::InitialPhi;
    double k_exponent = 0.0;     // slope of log|h_0k| against log k
    double joint_exponent = 0.0; // slope of log|h_(2n-1)k| against log(n k)
    std::size_t k_points = 0;
    std::size_t joint_points = 0;
    double required_k = 0.0;     // decay the lemmas predict at least
    double required_joint = 0.0;
    bool consistent = false;
};

namespace detail {

inline double fit_slope(const std::vector<double>& x, const std::vector<double>& y)
{
    const double n = static_cast<double>(x.size());
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxy = 0, sxx = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
    }
    return sxx > 0 ? sxy / sxx : 0.0;
}

} // namespace detail

/// Fits the decay of |h_0k| in k and of |h_(2n-1)k| in n k over n, k >= 1.
/// Coefficients below 1e-13 of the largest magnitude count as exact zeros.
inline DecayReport decay_report(const StaticCoefficients& coeffs, DatumKind kind)
{
    if (coeffs.n_max() < 4 || coeffs.k_max() < 4)
        fail(ErrorKind::InsufficientData, "decay fits need N_max, K_max >= 4 (got "
                                              + std::to_string(coeffs.n_max()) + ", " + std::to_string(coeffs.k_max())
                                              + ")");
    double scale = 0.0;
    for (const auto& idx : coeffs.indices())
        scale = std::max(scale, std::fabs(coeffs.at(idx)));
    const double cut = 1e-13 * scale;
    DecayReport r;
    r.kind = kind;
    std::vector<double> lx, ly;
    for (int k = 1; k <= coeffs.k_max(); ++k) {
        const double v = std::fabs(coeffs.at(ModeIndex::zero(k)));
        if (v > cut) {
            lx.push_back(std::log(double(k)));
            ly.push_back(std::log(v));
        }
    }
    r.k_points = lx.size();
    std::vector<double> jx, jy;
    for (int n = 1; n <= coeffs.n_max(); ++n)
        for (int k = 1; k <= coeffs.k_max(); ++k) {
            const double v = std::fabs(coeffs.at(ModeIndex::odd(n, k)));
            if (v > cut) {
                jx.push_back(std::log(double(n) * k));
                jy.push_back(std::log(v));
            }
        }
    r.joint_points = jx.size();
    if (lx.size() < 4 && jx.size() < 4)
        fail(ErrorKind::InsufficientData, "fewer than four nonzero coefficients to fit");
    r.k_exponent = lx.size() >= 4 ? detail::fit_slope(lx, ly) : -INFINITY;
    r.joint_exponent = jx.size() >= 4 ? detail::fit_slope(jx, jy) : -INFINITY;
    if (kind == DatumKind::InitialPhi) {
        r.required_k = -2.0;
        r.required_joint = -1.0;
    } else {
        r.required_k = -1.0;
        r.required_joint = -1.0;
    }
    r.consistent = r.k_exponent <= r.required_k && r.joint_exponent <= r.required_joint;
    return r;
}

/// Energy E = sum_nk c_nk int Z_nk; only k = 0 modes contribute.
inline double energy_of(const StaticCoefficients& coeffs)
{
    double e = 0.0;
    for (const auto& idx : coeffs.indices())
        if (coeffs.has(idx))
            e += coeffs.at(idx) * mode_integral(idx);
    return e;
}

} // namespace fracinv
