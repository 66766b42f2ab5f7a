#pragma once

#include "fracinv/error.hpp"

#include <cmath>

#include <math.h> // the Boost 1.74 pchip header calls unqualified isnan
#include <boost/math/interpolators/pchip.hpp>

#include <algorithm>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace fracinv {

/// Uniform grid t_j = j T / N, j = 0..N.
class TimeGrid {
public:
    TimeGrid() = default;

    TimeGrid(double horizon, int intervals) : horizon_(horizon), intervals_(intervals)
    {
        if (!(horizon > 0.0) || !std::isfinite(horizon))
            fail(ErrorKind::InvalidParameters, "time horizon must be positive");
        if (intervals < 1)
            fail(ErrorKind::InvalidParameters, "time grid needs at least one interval");
    }

    [[nodiscard]] double horizon() const noexcept { return horizon_; }
    [[nodiscard]] int intervals() const noexcept { return intervals_; }
    [[nodiscard]] std::size_t size() const noexcept { return static_cast<std::size_t>(intervals_) + 1; }
    [[nodiscard]] double step() const noexcept { return horizon_ / intervals_; }
    [[nodiscard]] double at(std::size_t j) const noexcept { return horizon_ * static_cast<double>(j) / intervals_; }

    [[nodiscard]] std::vector<double> nodes() const
    {
        std::vector<double> out(size());
        for (std::size_t j = 0; j < out.size(); ++j)
            out[j] = at(j);
        return out;
    }

    friend bool operator==(const TimeGrid&, const TimeGrid&) = default;

private:
    double horizon_ = 1.0;
    int intervals_ = 1;
};

/// Values of a function of time sampled on a TimeGrid.
class TimeSeries {
public:
    TimeSeries() = default;

    explicit TimeSeries(TimeGrid grid, double fill = 0.0) : grid_(grid), values_(grid.size(), fill) {}

    TimeSeries(TimeGrid grid, std::vector<double> values) : grid_(grid), values_(std::move(values))
    {
        if (values_.size() != grid_.size())
            fail(ErrorKind::InvalidParameters, "time series length " + std::to_string(values_.size())
                                                   + " does not match grid size " + std::to_string(grid_.size()));
    }

    template <typename Fn>
    static TimeSeries sample(TimeGrid grid, Fn&& fn)
    {
        TimeSeries out(grid);
        for (std::size_t j = 0; j < out.size(); ++j)
            out.values_[j] = fn(grid.at(j));
        return out;
    }

    [[nodiscard]] const TimeGrid& grid() const noexcept { return grid_; }
    [[nodiscard]] std::size_t size() const noexcept { return values_.size(); }
    [[nodiscard]] std::span<const double> values() const noexcept { return values_; }
    [[nodiscard]] std::span<double> values() noexcept { return values_; }
    [[nodiscard]] double operator[](std::size_t j) const noexcept { return values_[j]; }
    [[nodiscard]] double& operator[](std::size_t j) noexcept { return values_[j]; }
    [[nodiscard]] double t(std::size_t j) const noexcept { return grid_.at(j); }

    [[nodiscard]] double max_abs() const noexcept
    {
        double m = 0.0;
        for (double v : values_)
            m = std::max(m, std::fabs(v));
        return m;
    }

    TimeSeries& operator+=(const TimeSeries& other)
    {
        check_same(other);
        for (std::size_t j = 0; j < values_.size(); ++j)
            values_[j] += other.values_[j];
        return *this;
    }

    TimeSeries& operator-=(const TimeSeries& other)
    {
        check_same(other);
        for (std::size_t j = 0; j < values_.size(); ++j)
            values_[j] -= other.values_[j];
        return *this;
    }

    TimeSeries& operator*=(double c)
    {
        for (double& v : values_)
            v *= c;
        return *this;
    }

    friend TimeSeries operator+(TimeSeries a, const TimeSeries& b) { return a += b; }
    friend TimeSeries operator-(TimeSeries a, const TimeSeries& b) { return a -= b; }
    friend TimeSeries operator*(TimeSeries a, double c) { return a *= c; }
    friend TimeSeries operator*(double c, TimeSeries a) { return a *= c; }

    /// Pointwise product on a shared grid.
    friend TimeSeries hadamard(const TimeSeries& a, const TimeSeries& b)
    {
        a.check_same(b);
        TimeSeries out(a.grid_);
        for (std::size_t j = 0; j < out.size(); ++j)
            out.values_[j] = a.values_[j] * b.values_[j];
        return out;
    }

    /// Every `stride`-th sample; the grid must divide evenly.
    [[nodiscard]] TimeSeries downsample(int stride) const
    {
        if (stride < 1 || grid_.intervals() % stride != 0)
            fail(ErrorKind::InvalidParameters, "downsample stride must divide the interval count");
        TimeGrid coarse(grid_.horizon(), grid_.intervals() / stride);
        TimeSeries out(coarse);
        for (std::size_t j = 0; j < out.size(); ++j)
            out.values_[j] = values_[j * static_cast<std::size_t>(stride)];
        return out;
    }

    /// Monotone cubic (PCHIP) resampling onto another grid over the same horizon.
    [[nodiscard]] TimeSeries resample(const TimeGrid& target) const
    {
        if (target == grid_)
            return *this;
        if (std::fabs(target.horizon() - grid_.horizon()) > 1e-12 * grid_.horizon())
            fail(ErrorKind::InvalidParameters, "resampling requires matching horizons");
        if (values_.size() < 4) {
            // pchip needs four points; fall back to piecewise linear
            TimeSeries out(target);
            for (std::size_t j = 0; j < out.size(); ++j) {
                const double pos = target.at(j) / grid_.step();
                const std::size_t i = std::min<std::size_t>(static_cast<std::size_t>(pos), values_.size() - 2);
                const double w = pos - static_cast<double>(i);
                out.values_[j] = (1.0 - w) * values_[i] + w * values_[i + 1];
            }
            return out;
        }
        auto interp = boost::math::interpolators::pchip<std::vector<double>>(grid_.nodes(), std::vector<double>(values_));
        TimeSeries out(target);
        for (std::size_t j = 0; j < out.size(); ++j)
            out.values_[j] = interp(std::min(target.at(j), grid_.horizon()));
        return out;
    }

private:
    void check_same(const TimeSeries& other) const
    {
        if (!(grid_ == other.grid_))
            fail(ErrorKind::InvalidParameters, "time series live on different grids");
    }

    TimeGrid grid_;
    std::vector<double> values_;
};

} // namespace fracinv
