#pragma once

// Spatial fields on the unit square and time-dependent source fields.
//
// Analytic fields are sums of separable terms c * X(x) * Y(y), each factor a
// Profile: polynomial * trig(freq * pi * s) * exp(rate * s). That covers the
// constants, polynomials, eigenfunction-like cosines and x*sin products the
// boundary conditions call for. Tabulated fields interpolate bilinearly.

#include "fracinv/error.hpp"
#include "fracinv/quadrature.hpp"
#include "fracinv/time_series.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace fracinv {

enum class Trig { None, Cos, Sin };

/// One-dimensional factor poly(s) * trig(freq * pi * s) * exp(rate * s).
struct Profile {
    std::vector<double> poly{1.0}; // ascending powers
    Trig trig = Trig::None;
    double freq = 0.0; // in units of pi
    double rate = 0.0;

    [[nodiscard]] double operator()(double s) const noexcept
    {
        double p = 0.0;
        for (auto it = poly.rbegin(); it != poly.rend(); ++it)
            p = p * s + *it;
        switch (trig) {
        case Trig::Cos: p *= std::cos(freq * std::numbers::pi * s); break;
        case Trig::Sin: p *= std::sin(freq * std::numbers::pi * s); break;
        case Trig::None: break;
        }
        if (rate != 0.0)
            p *= std::exp(rate * s);
        return p;
    }

    static Profile constant(double c) { return Profile{{c}, Trig::None, 0.0, 0.0}; }
    static Profile polynomial(std::vector<double> coeffs) { return Profile{std::move(coeffs), Trig::None, 0.0, 0.0}; }
    static Profile cosine(double freq) { return Profile{{1.0}, Trig::Cos, freq, 0.0}; }

    friend bool operator==(const Profile&, const Profile&) = default;
};

struct SeparableTerm {
    double coeff = 1.0;
    Profile x;
    Profile y;

    friend bool operator==(const SeparableTerm&, const SeparableTerm&) = default;
};

/// Values on a uniform (nx+1) x (ny+1) node grid over [0,1]^2, row-major in y:
/// value(i, j) = values[j * (nx + 1) + i].
struct TabulatedField {
    int nx = 1;
    int ny = 1;
    std::vector<double> values;

    void validate() const
    {
        if (nx < 1 || ny < 1)
            fail(ErrorKind::InvalidParameters, "tabulated field needs at least 2x2 nodes");
        if (values.size() != static_cast<std::size_t>((nx + 1) * (ny + 1)))
            fail(ErrorKind::InvalidParameters, "tabulated field has " + std::to_string(values.size())
                                                   + " values, expected " + std::to_string((nx + 1) * (ny + 1)));
    }

    [[nodiscard]] double at(int i, int j) const { return values[static_cast<std::size_t>(j * (nx + 1) + i)]; }

    [[nodiscard]] double operator()(double x, double y) const
    {
        const double px = std::clamp(x, 0.0, 1.0) * nx;
        const double py = std::clamp(y, 0.0, 1.0) * ny;
        const int i = std::min(static_cast<int>(px), nx - 1);
        const int j = std::min(static_cast<int>(py), ny - 1);
        const double u = px - i;
        const double v = py - j;
        return (1 - u) * (1 - v) * at(i, j) + u * (1 - v) * at(i + 1, j) + (1 - u) * v * at(i, j + 1)
               + u * v * at(i + 1, j + 1);
    }

    friend bool operator==(const TabulatedField&, const TabulatedField&) = default;
};

/// phi(x, y) or a time slice of f: analytic separable sum or tabulated grid.
class Field2D {
public:
    Field2D() = default;
    explicit Field2D(std::vector<SeparableTerm> terms) : data_(std::move(terms)) {}
    explicit Field2D(TabulatedField table) : data_(std::move(table)) { std::get<TabulatedField>(data_).validate(); }

    static Field2D zero() { return Field2D(std::vector<SeparableTerm>{}); }
    static Field2D constant(double c) { return Field2D({SeparableTerm{c, Profile::constant(1.0), Profile::constant(1.0)}}); }

    [[nodiscard]] bool is_tabulated() const noexcept { return std::holds_alternative<TabulatedField>(data_); }
    [[nodiscard]] const std::vector<SeparableTerm>* terms() const { return std::get_if<std::vector<SeparableTerm>>(&data_); }
    [[nodiscard]] const TabulatedField* table() const { return std::get_if<TabulatedField>(&data_); }

    [[nodiscard]] double operator()(double x, double y) const
    {
        if (const auto* t = table())
            return (*t)(x, y);
        double sum = 0.0;
        for (const auto& term : *terms())
            sum += term.coeff * term.x(x) * term.y(y);
        return sum;
    }

    /// Grid resolution a projection needs to treat this field as smooth
    /// (tabulated fields are only piecewise bilinear).
    [[nodiscard]] int cells() const noexcept
    {
        if (const auto* t = table())
            return std::max(t->nx, t->ny);
        return 1;
    }

    Field2D& operator+=(const Field2D& other)
    {
        if (is_tabulated() || other.is_tabulated())
            fail(ErrorKind::InvalidParameters, "only analytic fields can be summed");
        auto& mine = std::get<std::vector<SeparableTerm>>(data_);
        const auto& theirs = *other.terms();
        mine.insert(mine.end(), theirs.begin(), theirs.end());
        return *this;
    }

    friend Field2D operator+(Field2D a, const Field2D& b) { return a += b; }

    friend Field2D operator*(double c, Field2D f)
    {
        if (auto* t = std::get_if<TabulatedField>(&f.data_)) {
            for (double& v : t->values)
                v *= c;
        } else {
            for (auto& term : std::get<std::vector<SeparableTerm>>(f.data_))
                term.coeff *= c;
        }
        return f;
    }

    friend bool operator==(const Field2D&, const Field2D&) = default;

private:
    std::variant<std::vector<SeparableTerm>, TabulatedField> data_;
};

/// Integral of a field over the unit square.
inline double field_mean(const Field2D& field)
{
    if (const auto* terms = field.terms()) {
        double sum = 0.0;
        for (const auto& term : *terms)
            sum += term.coeff * integrate_gl(term.x, 0.0, 1.0, 128) * integrate_gl(term.y, 0.0, 1.0, 128);
        return sum;
    }
    const auto& t = *field.table();
    // bilinear interpolant: trapezoidal rule is exact
    double sum = 0.0;
    for (int j = 0; j <= t.ny; ++j)
        for (int i = 0; i <= t.nx; ++i) {
            const double wx = (i == 0 || i == t.nx) ? 0.5 : 1.0;
            const double wy = (j == 0 || j == t.ny) ? 0.5 : 1.0;
            sum += wx * wy * t.at(i, j);
        }
    return sum / (t.nx * t.ny);
}

/// poly(t) * exp(rate * t).
struct TimeProfile {
    std::vector<double> poly{1.0};
    double rate = 0.0;

    [[nodiscard]] double operator()(double t) const noexcept
    {
        double p = 0.0;
        for (auto it = poly.rbegin(); it != poly.rend(); ++it)
            p = p * t + *it;
        return rate != 0.0 ? p * std::exp(rate * t) : p;
    }

    friend bool operator==(const TimeProfile&, const TimeProfile&) = default;
};

/// f(x, y, t): either sum_i F_i(x, y) g_i(t) or one tabulated slice per time node.
class SourceField {
public:
    struct Term {
        Field2D space;
        TimeProfile time;

        friend bool operator==(const Term&, const Term&) = default;
    };

    SourceField() = default;
    explicit SourceField(std::vector<Term> terms) : terms_(std::move(terms)) {}

    /// Time-independent source.
    static SourceField steady(Field2D f) { return SourceField({Term{std::move(f), TimeProfile{}}}); }

    static SourceField slices(TimeGrid grid, std::vector<Field2D> per_node)
    {
        if (per_node.size() != grid.size())
            fail(ErrorKind::InvalidParameters, "need one source slice per time node");
        SourceField out;
        out.slice_grid_ = grid;
        out.slices_ = std::move(per_node);
        return out;
    }

    [[nodiscard]] bool is_sliced() const noexcept { return !slices_.empty(); }
    [[nodiscard]] const std::vector<Term>& terms() const noexcept { return terms_; }
    [[nodiscard]] const std::vector<Field2D>& slice_fields() const noexcept { return slices_; }
    [[nodiscard]] const TimeGrid& slice_grid() const noexcept { return slice_grid_; }

    [[nodiscard]] double operator()(double x, double y, double t) const
    {
        if (is_sliced()) {
            const double pos = t / slice_grid_.step();
            const std::size_t j = std::min<std::size_t>(static_cast<std::size_t>(pos), slices_.size() - 2);
            const double w = std::clamp(pos - static_cast<double>(j), 0.0, 1.0);
            return (1 - w) * slices_[j](x, y) + w * slices_[j + 1](x, y);
        }
        double sum = 0.0;
        for (const auto& term : terms_)
            sum += term.space(x, y) * term.time(t);
        return sum;
    }

    /// Spatial integral of f at each node of `grid`.
    [[nodiscard]] TimeSeries mean(const TimeGrid& grid) const
    {
        if (is_sliced()) {
            std::vector<double> values;
            for (const auto& slice : slices_)
                values.push_back(field_mean(slice));
            return TimeSeries(slice_grid_, std::move(values)).resample(grid);
        }
        TimeSeries out(grid);
        for (const auto& term : terms_) {
            const double m = field_mean(term.space);
            for (std::size_t j = 0; j < out.size(); ++j)
                out[j] += m * term.time(grid.at(j));
        }
        return out;
    }

    friend bool operator==(const SourceField&, const SourceField&) = default;

private:
    std::vector<Term> terms_;
    TimeGrid slice_grid_;
    std::vector<Field2D> slices_;
};

} // namespace fracinv
