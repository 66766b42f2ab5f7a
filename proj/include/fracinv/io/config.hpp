#pragma once

// Run configuration: JSON schema, catalog of analytic inputs, canonical form.
//
// Unknown keys are rejected. Every error names the offending field path, and
// syntax errors carry line and column.

#include "fracinv/field.hpp"
#include "fracinv/fractional.hpp"
#include "fracinv/io/csv.hpp"
#include "fracinv/mlf.hpp"
#include "fracinv/spectral.hpp"
#include "fracinv/time_series.hpp"

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

namespace fracinv::io {

using json = nlohmann::ordered_json;

/// a(t) or E(t): analytic poly(t) exp(rate t), or samples on a uniform grid.
struct TimeFunction {
    std::variant<TimeProfile, TimeSeries> data = TimeProfile{};

    [[nodiscard]] TimeSeries on(const TimeGrid& grid) const
    {
        if (const auto* p = std::get_if<TimeProfile>(&data))
            return TimeSeries::sample(grid, *p);
        const auto& s = std::get<TimeSeries>(data);
        if (std::fabs(s.grid().horizon() - grid.horizon()) > 1e-12 * grid.horizon())
            fail(ErrorKind::ConfigError, "sampled series covers [0, " + std::to_string(s.grid().horizon())
                                             + "] but the run horizon is " + std::to_string(grid.horizon()));
        if (s.grid() == grid)
            return s;
        if (s.grid().intervals() % grid.intervals() == 0)
            return s.downsample(s.grid().intervals() / grid.intervals());
        return s.resample(grid);
    }

    friend bool operator==(const TimeFunction& a, const TimeFunction& b)
    {
        if (a.data.index() != b.data.index())
            return false;
        if (const auto* p = std::get_if<TimeProfile>(&a.data))
            return *p == std::get<TimeProfile>(b.data);
        const auto& x = std::get<TimeSeries>(a.data);
        const auto& y = std::get<TimeSeries>(b.data);
        return x.grid() == y.grid() && std::ranges::equal(x.values(), y.values());
    }
};

/// E(t) given directly or produced by a forward solve with a known a(t).
struct EnergySpec {
    std::optional<TimeFunction> given;
    TimeFunction generate_a;
    int generate_intervals = 1024;
    int generate_n_max = 8;
    int generate_k_max = 8;

    [[nodiscard]] bool generated() const noexcept { return !given.has_value(); }
    friend bool operator==(const EnergySpec&, const EnergySpec&) = default;
};

struct GridConfig {
    double horizon = 1.0;
    int intervals = 256;
    int n_max = 4;
    int k_max = 4;
    int mx = 32;
    int my = 32;
    int fd_steps = 512;
    friend bool operator==(const GridConfig&, const GridConfig&) = default;
};

struct ToleranceConfig {
    double oracle = 0.02;          // relative L2 spectral vs finite differences
    double round_trip = 0.01;      // sup relative error of recovered a against a_true
    double compatibility = 1e-6;   // |E(0) - int int phi|
    double mean_floor = 1e-8;      // smallest admissible |int int f|
    double biorthogonality = 1e-10;
    double tail_warning = 1e-2;
    friend bool operator==(const ToleranceConfig&, const ToleranceConfig&) = default;
};

struct OutputConfig {
    std::string dir = "out";
    std::vector<double> slice_times; // empty: final time only
    int slice_nodes = 33;
    friend bool operator==(const OutputConfig&, const OutputConfig&) = default;
};

struct MlfConfig {
    RelaxationKernelSpec spec{1.0, {{1.0, 1.0}}};
    std::vector<double> times{0.0, 0.25, 0.5, 0.75, 1.0};
    bool antiderivative = false;
    friend bool operator==(const MlfConfig&, const MlfConfig&) = default;
};

struct VerifyConfig {
    int n_max = 6;
    int k_max = 6;
    int decay_n_max = 8;
    int decay_k_max = 8;
    int draws = 50;
    int antiderivative_draws = 20;
    bool sabotage = false;
    friend bool operator==(const VerifyConfig&, const VerifyConfig&) = default;
};

struct InverseConfig {
    bool flux_correction = true;
    bool starting_corrections = true;
    friend bool operator==(const InverseConfig&, const InverseConfig&) = default;
};

struct RunConfig {
    FractionalOperatorSpec op{1.0, {}};
    std::optional<Field2D> phi;
    std::optional<SourceField> f;
    std::optional<TimeFunction> a;
    std::optional<EnergySpec> energy;
    std::optional<TimeFunction> a_true;
    GridConfig grids;
    ToleranceConfig tolerances;
    OutputConfig output;
    MlfConfig mlf;
    VerifyConfig verify;
    InverseConfig inverse;
    std::vector<double> oracle_times; // empty: T/2 and T
    unsigned threads = 0;

    [[nodiscard]] TimeGrid grid() const { return TimeGrid(grids.horizon, grids.intervals); }
    [[nodiscard]] Field2D phi_or_zero() const { return phi ? *phi : Field2D::zero(); }
    [[nodiscard]] SourceField f_or_unit() const { return f ? *f : SourceField::steady(Field2D::constant(1.0)); }

    friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

// ---------------------------------------------------------------------------
// Reading

namespace detail {

class Node {
public:
    Node(const json& j, std::string path) : j_(j), path_(std::move(path)) {}

    [[noreturn]] void error(const std::string& msg) const
    {
        fail(ErrorKind::ConfigError, (path_.empty() ? std::string("<root>") : path_) + ": " + msg);
    }

    [[nodiscard]] const json& raw() const noexcept { return j_; }
    [[nodiscard]] const std::string& path() const noexcept { return path_; }

    void expect_object() const
    {
        if (!j_.is_object())
            error("expected an object");
    }

    /// Rejects keys outside `allowed`.
    void only(std::initializer_list<const char*> allowed) const
    {
        expect_object();
        for (const auto& [key, _] : j_.items()) {
            bool ok = false;
            for (const char* a : allowed)
                ok = ok || key == a;
            if (!ok) {
                std::string list;
                for (const char* a : allowed)
                    list += (list.empty() ? "" : ", ") + std::string(a);
                child_path_error(key, "unknown key (allowed: " + list + ")");
            }
        }
    }

    [[nodiscard]] bool has(const std::string& key) const { return j_.is_object() && j_.contains(key); }

    [[nodiscard]] Node at(const std::string& key) const
    {
        if (!has(key))
            error("missing required key '" + key + "'");
        return Node(j_.at(key), join(key));
    }

    [[nodiscard]] Node item(std::size_t i) const { return Node(j_.at(i), path_ + "[" + std::to_string(i) + "]"); }

    [[nodiscard]] double number() const
    {
        if (!j_.is_number())
            error("expected a number");
        const double v = j_.get<double>();
        if (!std::isfinite(v))
            error("expected a finite number");
        return v;
    }

    [[nodiscard]] int integer() const
    {
        if (!j_.is_number_integer())
            error("expected an integer");
        return j_.get<int>();
    }

    [[nodiscard]] bool boolean() const
    {
        if (!j_.is_boolean())
            error("expected true or false");
        return j_.get<bool>();
    }

    [[nodiscard]] std::string string() const
    {
        if (!j_.is_string())
            error("expected a string");
        return j_.get<std::string>();
    }

    [[nodiscard]] std::vector<double> numbers() const
    {
        if (!j_.is_array())
            error("expected an array of numbers");
        std::vector<double> out;
        for (std::size_t i = 0; i < j_.size(); ++i)
            out.push_back(item(i).number());
        return out;
    }

    double number(const std::string& key, double fallback) const { return has(key) ? at(key).number() : fallback; }
    int integer(const std::string& key, int fallback) const { return has(key) ? at(key).integer() : fallback; }
    bool boolean(const std::string& key, bool fallback) const { return has(key) ? at(key).boolean() : fallback; }

private:
    [[nodiscard]] std::string join(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

    [[noreturn]] void child_path_error(const std::string& key, const std::string& msg) const
    {
        fail(ErrorKind::ConfigError, join(key) + ": " + msg);
    }

    const json& j_;
    std::string path_;
};

inline std::filesystem::path resolve(const std::filesystem::path& base, const std::string& file)
{
    const std::filesystem::path p(file);
    return p.is_absolute() ? p : base / p;
}

inline Profile read_profile(const Node& n)
{
    n.only({"poly", "trig", "freq", "rate"});
    Profile p;
    if (n.has("poly"))
        p.poly = n.at("poly").numbers();
    if (p.poly.empty())
        n.at("poly").error("polynomial needs at least one coefficient");
    const std::string trig = n.has("trig") ? n.at("trig").string() : "none";
    if (trig == "none")
        p.trig = Trig::None;
    else if (trig == "cos")
        p.trig = Trig::Cos;
    else if (trig == "sin")
        p.trig = Trig::Sin;
    else
        n.at("trig").error("expected one of none, cos, sin");
    p.freq = n.number("freq", 0.0);
    p.rate = n.number("rate", 0.0);
    return p;
}

/// Grid values from either an `x,y,value` list or a rectangular block whose
/// rows run over y and columns over x.
inline TabulatedField read_table_csv(const Node& n, const std::filesystem::path& file)
{
    const CsvTable csv = read_csv(file);
    TabulatedField t;
    const auto& rows = csv.rows;
    if (csv.header.size() == 3 && csv.header[0] == "x" && csv.header[1] == "y" && csv.header[2] == "value") {
        std::set<double> xs, ys;
        for (const auto& r : rows) {
            xs.insert(r[0]);
            ys.insert(r[1]);
        }
        t.nx = static_cast<int>(xs.size()) - 1;
        t.ny = static_cast<int>(ys.size()) - 1;
        if (t.nx < 1 || t.ny < 1 || rows.size() != xs.size() * ys.size())
            n.error(file.string() + ": x,y,value rows must cover a full grid");
        const std::vector<double> xv(xs.begin(), xs.end()), yv(ys.begin(), ys.end());
        for (int i = 0; i <= t.nx; ++i)
            if (std::fabs(xv[static_cast<std::size_t>(i)] - double(i) / t.nx) > 1e-9)
                n.error(file.string() + ": x nodes must be uniform on [0, 1]");
        for (int j = 0; j <= t.ny; ++j)
            if (std::fabs(yv[static_cast<std::size_t>(j)] - double(j) / t.ny) > 1e-9)
                n.error(file.string() + ": y nodes must be uniform on [0, 1]");
        t.values.assign(rows.size(), 0.0);
        for (const auto& r : rows) {
            const auto i = static_cast<int>(std::lround(r[0] * t.nx));
            const auto j = static_cast<int>(std::lround(r[1] * t.ny));
            t.values[static_cast<std::size_t>(j * (t.nx + 1) + i)] = r[2];
        }
    } else {
        if (!csv.header.empty())
            n.error(file.string() + ": header must be x,y,value, or omitted for a grid block");
        t.ny = static_cast<int>(rows.size()) - 1;
        t.nx = static_cast<int>(rows.front().size()) - 1;
        if (t.nx < 1 || t.ny < 1)
            n.error(file.string() + ": grid block needs at least 2x2 values");
        for (const auto& r : rows)
            t.values.insert(t.values.end(), r.begin(), r.end());
    }
    return t;
}

inline Field2D read_field(const Node& n, const std::filesystem::path& base);

inline Field2D read_field_terms(const Node& n, const std::filesystem::path& base)
{
    if (!n.raw().is_array())
        n.error("expected an array of fields");
    Field2D out = Field2D::zero();
    for (std::size_t i = 0; i < n.raw().size(); ++i) {
        const Field2D part = read_field(n.item(i), base);
        if (part.is_tabulated())
            n.item(i).error("tables cannot be summed");
        out += part;
    }
    return out;
}

inline Field2D read_field(const Node& n, const std::filesystem::path& base)
{
    if (n.raw().is_number())
        return Field2D::constant(n.number());
    n.expect_object();
    const std::string type = n.at("type").string();
    if (type == "constant") {
        n.only({"type", "value"});
        return Field2D::constant(n.at("value").number());
    }
    if (type == "mode") {
        n.only({"type", "family", "n", "k", "amplitude"});
        const std::string fam = n.at("family").string();
        const int k = n.integer("k", 0);
        if (k < 0)
            n.at("k").error("k must be non-negative");
        Profile x = Profile::constant(1.0);
        if (fam == "zero") {
            if (n.has("n") && n.at("n").integer() != 0)
                n.at("n").error("the zero family has n = 0");
        } else {
            const int m = n.at("n").integer();
            if (m < 1)
                n.at("n").error("n must be at least 1");
            if (fam == "odd")
                x = Profile::cosine(2.0 * m);
            else if (fam == "even")
                x = Profile{{0.0, 1.0}, Trig::Sin, 2.0 * m, 0.0};
            else
                n.at("family").error("expected one of zero, odd, even");
        }
        const Profile y = k == 0 ? Profile::constant(1.0) : Profile{{std::numbers::sqrt2}, Trig::Cos, double(k), 0.0};
        return Field2D({SeparableTerm{n.number("amplitude", 1.0), x, y}});
    }
    if (type == "cosine_product") {
        n.only({"type", "amplitude", "p", "q"});
        return Field2D({SeparableTerm{n.number("amplitude", 1.0), Profile::cosine(n.at("p").number()),
                                      Profile::cosine(n.at("q").number())}});
    }
    if (type == "polynomial") {
        n.only({"type", "monomials"});
        const Node list = n.at("monomials");
        if (!list.raw().is_array() || list.raw().empty())
            list.error("expected a non-empty array of [coeff, px, py]");
        std::vector<SeparableTerm> terms;
        for (std::size_t i = 0; i < list.raw().size(); ++i) {
            const Node m = list.item(i);
            if (!m.raw().is_array() || m.raw().size() != 3)
                m.error("expected [coeff, px, py]");
            const double c = m.item(0).number();
            const int px = m.item(1).integer();
            const int py = m.item(2).integer();
            if (px < 0 || py < 0)
                m.error("powers must be non-negative");
            std::vector<double> xp(static_cast<std::size_t>(px) + 1, 0.0), yp(static_cast<std::size_t>(py) + 1, 0.0);
            xp.back() = 1.0;
            yp.back() = 1.0;
            terms.push_back({c, Profile::polynomial(xp), Profile::polynomial(yp)});
        }
        return Field2D(std::move(terms));
    }
    if (type == "separable") {
        n.only({"type", "coeff", "x", "y"});
        return Field2D({SeparableTerm{n.number("coeff", 1.0), read_profile(n.at("x")), read_profile(n.at("y"))}});
    }
    if (type == "sum") {
        n.only({"type", "terms"});
        return read_field_terms(n.at("terms"), base);
    }
    if (type == "table") {
        if (n.has("csv")) {
            n.only({"type", "csv"});
            return Field2D(read_table_csv(n, resolve(base, n.at("csv").string())));
        }
        n.only({"type", "nx", "ny", "values"});
        TabulatedField t{n.at("nx").integer(), n.at("ny").integer(), n.at("values").numbers()};
        try {
            t.validate();
        } catch (const Error& e) {
            n.error(e.what());
        }
        return Field2D(std::move(t));
    }
    n.at("type").error("unknown field type '" + type
                       + "' (expected constant, mode, cosine_product, polynomial, separable, sum, table)");
}

inline TimeProfile read_time_profile(const Node& n)
{
    TimeProfile p;
    if (n.has("poly"))
        p.poly = n.at("poly").numbers();
    if (p.poly.empty())
        n.at("poly").error("polynomial needs at least one coefficient");
    p.rate = n.number("rate", 0.0);
    return p;
}

/// CSV with columns t,value on a uniform grid starting at 0; a non-uniform
/// sampling is carried onto a uniform grid by monotone cubic interpolation.
inline TimeSeries read_series_csv(const Node& n, const std::filesystem::path& file)
{
    const CsvTable csv = read_csv(file);
    if (csv.rows.front().size() != 2)
        n.error(file.string() + ": expected two columns t,value");
    const std::size_t count = csv.rows.size();
    if (count < 2)
        n.error(file.string() + ": need at least two samples");
    std::vector<double> t, v;
    for (const auto& r : csv.rows) {
        t.push_back(r[0]);
        v.push_back(r[1]);
    }
    if (std::fabs(t.front()) > 1e-12)
        n.error(file.string() + ": first sample must be at t = 0");
    for (std::size_t i = 1; i < count; ++i)
        if (!(t[i] > t[i - 1]))
            n.error(file.string() + ": times must increase");
    const TimeGrid grid(t.back(), static_cast<int>(count) - 1);
    bool uniform = true;
    for (std::size_t i = 0; i < count; ++i)
        uniform = uniform && std::fabs(t[i] - grid.at(i)) <= 1e-9 * grid.horizon();
    if (uniform)
        return TimeSeries(grid, std::move(v));
    if (count < 4)
        n.error(file.string() + ": non-uniform samples need at least four points");
    auto interp = boost::math::interpolators::pchip<std::vector<double>>(std::move(t), std::move(v));
    return TimeSeries::sample(grid, [&](double s) { return interp(s); });
}

inline TimeFunction read_time_function(const Node& n, const std::filesystem::path& base)
{
    if (n.raw().is_number())
        return TimeFunction{TimeProfile{{n.number()}, 0.0}};
    n.expect_object();
    const std::string type = n.has("type") ? n.at("type").string() : "profile";
    if (type == "profile") {
        n.only({"type", "poly", "rate"});
        return TimeFunction{read_time_profile(n)};
    }
    if (type == "csv") {
        n.only({"type", "path"});
        return TimeFunction{read_series_csv(n, resolve(base, n.at("path").string()))};
    }
    if (type == "series") {
        n.only({"type", "horizon", "values"});
        auto values = n.at("values").numbers();
        if (values.size() < 2)
            n.at("values").error("need at least two samples");
        const double horizon = n.at("horizon").number();
        if (!(horizon > 0.0))
            n.at("horizon").error("horizon must be positive");
        const TimeGrid grid(horizon, static_cast<int>(values.size()) - 1);
        return TimeFunction{TimeSeries(grid, std::move(values))};
    }
    n.at("type").error("unknown time function type '" + type + "' (expected profile, csv, series)");
}

inline SourceField read_source(const Node& n, const std::filesystem::path& base)
{
    if (n.raw().is_number() || (n.raw().is_object() && n.has("type")))
        return SourceField::steady(read_field(n, base));
    n.only({"terms"});
    const Node list = n.at("terms");
    if (!list.raw().is_array() || list.raw().empty())
        list.error("expected a non-empty array of {space, time}");
    std::vector<SourceField::Term> terms;
    for (std::size_t i = 0; i < list.raw().size(); ++i) {
        const Node t = list.item(i);
        t.only({"space", "time"});
        TimeProfile time;
        if (t.has("time")) {
            const Node tn = t.at("time");
            if (tn.raw().is_number()) {
                time = TimeProfile{{tn.number()}, 0.0};
            } else {
                tn.only({"poly", "rate"});
                time = read_time_profile(tn);
            }
        }
        terms.push_back({read_field(t.at("space"), base), time});
    }
    return SourceField(std::move(terms));
}

inline EnergySpec read_energy(const Node& n, const std::filesystem::path& base)
{
    EnergySpec e;
    if (n.raw().is_object() && n.has("type") && n.at("type").string() == "generate") {
        n.only({"type", "a", "intervals", "n_max", "k_max"});
        e.generate_a = read_time_function(n.at("a"), base);
        e.generate_intervals = n.integer("intervals", e.generate_intervals);
        e.generate_n_max = n.integer("n_max", e.generate_n_max);
        e.generate_k_max = n.integer("k_max", e.generate_k_max);
        if (e.generate_intervals < 2)
            n.at("intervals").error("need at least two intervals");
        if (e.generate_n_max < 0 || e.generate_k_max < 0)
            n.error("truncation bounds must be non-negative");
        return e;
    }
    e.given = read_time_function(n, base);
    return e;
}

inline FractionalOperatorSpec read_operator(const Node& n)
{
    n.only({"alpha", "terms"});
    FractionalOperatorSpec op{n.at("alpha").number(), {}};
    if (n.has("terms")) {
        const Node list = n.at("terms");
        if (!list.raw().is_array())
            list.error("expected an array of {psi, order}");
        for (std::size_t i = 0; i < list.raw().size(); ++i) {
            const Node t = list.item(i);
            t.only({"psi", "order"});
            op.terms.push_back({t.at("psi").number(), t.at("order").number()});
        }
    }
    try {
        op.validate();
    } catch (const Error& e) {
        n.error(e.what());
    }
    return op;
}

inline std::vector<double> read_times(const Node& n)
{
    if (n.raw().is_array())
        return n.numbers();
    n.only({"from", "to", "count"});
    const double from = n.at("from").number();
    const double to = n.at("to").number();
    const int count = n.at("count").integer();
    if (count < 1)
        n.at("count").error("count must be at least 1");
    if (count == 1)
        return {from};
    std::vector<double> out;
    for (int i = 0; i < count; ++i)
        out.push_back(from + (to - from) * i / (count - 1));
    return out;
}

inline void require(bool ok, const Node& n, const std::string& key, const std::string& msg)
{
    if (!ok)
        n.at(key).error(msg);
}

} // namespace detail

/// Parses a configuration; relative file paths are taken from `base`.
inline RunConfig parse_config(const json& root, const std::filesystem::path& base = ".")
{
    using detail::Node;
    const Node r(root, "");
    r.only({"operator", "problem", "grids", "tolerances", "output", "mlf", "verify", "inverse", "oracle", "threads"});
    RunConfig c;
    if (r.has("operator"))
        c.op = detail::read_operator(r.at("operator"));

    if (r.has("grids")) {
        const Node g = r.at("grids");
        g.only({"T", "N", "n_max", "k_max", "Mx", "My", "fd_steps"});
        auto& d = c.grids;
        d.horizon = g.number("T", d.horizon);
        d.intervals = g.integer("N", d.intervals);
        d.n_max = g.integer("n_max", d.n_max);
        d.k_max = g.integer("k_max", d.k_max);
        d.mx = g.integer("Mx", d.mx);
        d.my = g.integer("My", d.my);
        d.fd_steps = g.integer("fd_steps", d.fd_steps);
        detail::require(!g.has("T") || d.horizon > 0.0, g, "T", "T must be positive");
        detail::require(!g.has("N") || d.intervals >= 3, g, "N", "N must be at least 3");
        detail::require(!g.has("n_max") || d.n_max >= 0, g, "n_max", "n_max must be non-negative");
        detail::require(!g.has("k_max") || d.k_max >= 0, g, "k_max", "k_max must be non-negative");
        detail::require(!g.has("Mx") || d.mx >= 8, g, "Mx", "Mx must be at least 8");
        detail::require(!g.has("My") || d.my >= 8, g, "My", "My must be at least 8");
        detail::require(!g.has("fd_steps") || d.fd_steps >= 1, g, "fd_steps", "fd_steps must be positive");
    }

    if (r.has("problem")) {
        const Node p = r.at("problem");
        p.only({"phi", "f", "a", "energy", "a_true"});
        if (p.has("phi"))
            c.phi = detail::read_field(p.at("phi"), base);
        if (p.has("f"))
            c.f = detail::read_source(p.at("f"), base);
        if (p.has("a"))
            c.a = detail::read_time_function(p.at("a"), base);
        if (p.has("energy"))
            c.energy = detail::read_energy(p.at("energy"), base);
        if (p.has("a_true"))
            c.a_true = detail::read_time_function(p.at("a_true"), base);
    }

    if (r.has("tolerances")) {
        const Node t = r.at("tolerances");
        t.only({"oracle", "round_trip", "compatibility", "mean_floor", "biorthogonality", "tail_warning"});
        auto& d = c.tolerances;
        d.oracle = t.number("oracle", d.oracle);
        d.round_trip = t.number("round_trip", d.round_trip);
        d.compatibility = t.number("compatibility", d.compatibility);
        d.mean_floor = t.number("mean_floor", d.mean_floor);
        d.biorthogonality = t.number("biorthogonality", d.biorthogonality);
        d.tail_warning = t.number("tail_warning", d.tail_warning);
        for (const auto& [key, value] : t.raw().items())
            if (!(value.get<double>() > 0.0))
                t.at(key).error("tolerance must be positive");
    }

    if (r.has("output")) {
        const Node o = r.at("output");
        if (o.raw().is_string()) {
            c.output.dir = o.string();
        } else {
            o.only({"dir", "slice_times", "slice_nodes"});
            if (o.has("dir"))
                c.output.dir = o.at("dir").string();
            if (o.has("slice_times"))
                c.output.slice_times = detail::read_times(o.at("slice_times"));
            c.output.slice_nodes = o.integer("slice_nodes", c.output.slice_nodes);
            detail::require(c.output.slice_nodes >= 2, o, "slice_nodes", "slice_nodes must be at least 2");
        }
    }

    if (r.has("mlf")) {
        const Node m = r.at("mlf");
        m.only({"eta", "terms", "t", "antiderivative"});
        auto& d = c.mlf;
        d.spec.eta = m.number("eta", d.spec.eta);
        if (m.has("terms")) {
            const Node list = m.at("terms");
            if (!list.raw().is_array() || list.raw().empty())
                list.error("expected a non-empty array of {rate, order}");
            d.spec.terms.clear();
            for (std::size_t i = 0; i < list.raw().size(); ++i) {
                const Node t = list.item(i);
                t.only({"rate", "order"});
                d.spec.terms.push_back({t.at("rate").number(), t.at("order").number()});
            }
        }
        if (m.has("t"))
            d.times = detail::read_times(m.at("t"));
        d.antiderivative = m.boolean("antiderivative", d.antiderivative);
        try {
            d.spec.validate();
        } catch (const Error& e) {
            m.error(e.what());
        }
        for (double t : d.times)
            if (!(t >= 0.0))
                m.at("t").error("times must be non-negative");
    }

    if (r.has("verify")) {
        const Node v = r.at("verify");
        v.only({"n_max", "k_max", "decay_n_max", "decay_k_max", "draws", "antiderivative_draws", "sabotage"});
        auto& d = c.verify;
        d.n_max = v.integer("n_max", d.n_max);
        d.k_max = v.integer("k_max", d.k_max);
        d.decay_n_max = v.integer("decay_n_max", d.decay_n_max);
        d.decay_k_max = v.integer("decay_k_max", d.decay_k_max);
        d.draws = v.integer("draws", d.draws);
        d.antiderivative_draws = v.integer("antiderivative_draws", d.antiderivative_draws);
        d.sabotage = v.boolean("sabotage", d.sabotage);
        for (const char* key : {"n_max", "k_max", "decay_n_max", "decay_k_max"})
            detail::require(!v.has(key) || v.at(key).integer() >= 0, v, key, "must be non-negative");
        for (const char* key : {"draws", "antiderivative_draws"})
            detail::require(!v.has(key) || v.at(key).integer() >= 1, v, key, "must be at least 1");
    }

    if (r.has("inverse")) {
        const Node i = r.at("inverse");
        i.only({"flux_correction", "starting_corrections"});
        c.inverse.flux_correction = i.boolean("flux_correction", c.inverse.flux_correction);
        c.inverse.starting_corrections = i.boolean("starting_corrections", c.inverse.starting_corrections);
    }

    if (r.has("oracle")) {
        const Node o = r.at("oracle");
        o.only({"times"});
        if (o.has("times"))
            c.oracle_times = detail::read_times(o.at("times"));
    }

    if (r.has("threads")) {
        const int t = r.at("threads").integer();
        detail::require(t >= 0, r, "threads", "threads must be non-negative");
        c.threads = static_cast<unsigned>(t);
    }
    return c;
}

/// Parses JSON text; syntax errors report line and column.
inline RunConfig parse_config_text(const std::string& text, const std::filesystem::path& base = ".")
{
    json root;
    try {
        root = json::parse(text);
    } catch (const json::parse_error& e) {
        const std::size_t byte = std::min<std::size_t>(e.byte == 0 ? 0 : e.byte - 1, text.size());
        int line = 1, col = 1;
        for (std::size_t i = 0; i < byte; ++i) {
            if (text[i] == '\n') {
                ++line;
                col = 1;
            } else {
                ++col;
            }
        }
        fail(ErrorKind::ConfigError, "line " + std::to_string(line) + ", column " + std::to_string(col) + ": "
                                         + e.what());
    }
    return parse_config(root, base);
}

inline RunConfig load_config(const std::filesystem::path& file)
{
    std::ifstream in(file);
    if (!in)
        fail(ErrorKind::ConfigError, "cannot open config " + file.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config_text(ss.str(), file.parent_path().empty() ? std::filesystem::path(".") : file.parent_path());
}

// ---------------------------------------------------------------------------
// Canonical form: every section present with defaults filled in, fields as
// sums of separable terms or inline tables, files replaced by their contents.

namespace detail {

inline json to_json(const Profile& p)
{
    json j;
    j["poly"] = p.poly;
    j["trig"] = p.trig == Trig::Cos ? "cos" : p.trig == Trig::Sin ? "sin" : "none";
    j["freq"] = p.freq;
    j["rate"] = p.rate;
    return j;
}

inline json to_json(const Field2D& f)
{
    if (const auto* t = f.table())
        return json{{"type", "table"}, {"nx", t->nx}, {"ny", t->ny}, {"values", t->values}};
    json terms = json::array();
    for (const auto& term : *f.terms())
        terms.push_back(json{{"type", "separable"}, {"coeff", term.coeff}, {"x", to_json(term.x)}, {"y", to_json(term.y)}});
    return json{{"type", "sum"}, {"terms", terms}};
}

inline json to_json(const TimeProfile& p) { return json{{"poly", p.poly}, {"rate", p.rate}}; }

inline json to_json(const TimeFunction& f)
{
    if (const auto* p = std::get_if<TimeProfile>(&f.data)) {
        json j{{"type", "profile"}};
        j.update(to_json(*p));
        return j;
    }
    const auto& s = std::get<TimeSeries>(f.data);
    return json{{"type", "series"}, {"horizon", s.grid().horizon()},
                {"values", std::vector<double>(s.values().begin(), s.values().end())}};
}

inline json to_json(const SourceField& f)
{
    json terms = json::array();
    for (const auto& t : f.terms())
        terms.push_back(json{{"space", to_json(t.space)}, {"time", to_json(t.time)}});
    return json{{"terms", terms}};
}

inline json to_json(const EnergySpec& e)
{
    if (e.given)
        return to_json(*e.given);
    return json{{"type", "generate"}, {"a", to_json(e.generate_a)}, {"intervals", e.generate_intervals},
                {"n_max", e.generate_n_max}, {"k_max", e.generate_k_max}};
}

} // namespace detail

inline json to_json(const RunConfig& c)
{
    using detail::to_json;
    json j;
    json op{{"alpha", c.op.alpha}, {"terms", json::array()}};
    for (const auto& t : c.op.terms)
        op["terms"].push_back(json{{"psi", t.psi}, {"order", t.order}});
    j["operator"] = op;

    json problem = json::object();
    if (c.phi)
        problem["phi"] = to_json(*c.phi);
    if (c.f)
        problem["f"] = to_json(*c.f);
    if (c.a)
        problem["a"] = to_json(*c.a);
    if (c.energy)
        problem["energy"] = to_json(*c.energy);
    if (c.a_true)
        problem["a_true"] = to_json(*c.a_true);
    j["problem"] = problem;

    const auto& g = c.grids;
    j["grids"] = json{{"T", g.horizon}, {"N", g.intervals}, {"n_max", g.n_max}, {"k_max", g.k_max},
                      {"Mx", g.mx},     {"My", g.my},       {"fd_steps", g.fd_steps}};
    const auto& t = c.tolerances;
    j["tolerances"] = json{{"oracle", t.oracle},         {"round_trip", t.round_trip},
                           {"compatibility", t.compatibility}, {"mean_floor", t.mean_floor},
                           {"biorthogonality", t.biorthogonality}, {"tail_warning", t.tail_warning}};
    j["output"] = json{{"dir", c.output.dir}, {"slice_times", c.output.slice_times}, {"slice_nodes", c.output.slice_nodes}};

    json terms = json::array();
    for (const auto& term : c.mlf.spec.terms)
        terms.push_back(json{{"rate", term.rate}, {"order", term.order}});
    j["mlf"] = json{{"eta", c.mlf.spec.eta}, {"terms", terms}, {"t", c.mlf.times}, {"antiderivative", c.mlf.antiderivative}};

    const auto& v = c.verify;
    j["verify"] = json{{"n_max", v.n_max},       {"k_max", v.k_max}, {"decay_n_max", v.decay_n_max},
                       {"decay_k_max", v.decay_k_max}, {"draws", v.draws}, {"antiderivative_draws", v.antiderivative_draws},
                       {"sabotage", v.sabotage}};
    j["inverse"] = json{{"flux_correction", c.inverse.flux_correction},
                        {"starting_corrections", c.inverse.starting_corrections}};
    j["oracle"] = json{{"times", c.oracle_times}};
    j["threads"] = c.threads;
    return j;
}

} // namespace fracinv::io
