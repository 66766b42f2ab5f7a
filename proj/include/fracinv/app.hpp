#pragma once

// Command implementations behind the fracinv executable.

#include "fracinv/forward.hpp"
#include "fracinv/inverse.hpp"
#include "fracinv/io/config.hpp"
#include "fracinv/io/csv.hpp"
#include "fracinv/mlf.hpp"
#include "fracinv/oracle.hpp"
#include "fracinv/verify.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace fracinv::app {

using io::json;

enum ExitCode : int {
    Success = 0,
    ValidationFailure = 2,
    NumericalFailure = 3,
    CompatibilityFailure = 4,
};

struct CommandOptions {
    std::optional<std::filesystem::path> out;
    std::optional<unsigned> threads;
    std::optional<double> tol; // replaces the command's pass threshold
    bool sabotage = false;
    std::ostream* log = &std::cout;
};

struct CommandResult {
    int exit_code = Success;
    json report;
};

inline int exit_code_for(const Error& e)
{
    if (e.kind() == ErrorKind::CompatibilityViolation)
        return CompatibilityFailure;
    if (e.is_validation() || e.kind() == ErrorKind::MeanTooSmall)
        return ValidationFailure;
    return NumericalFailure;
}

namespace detail {

inline std::filesystem::path output_dir(const io::RunConfig& c, const CommandOptions& o)
{
    const std::filesystem::path dir = o.out ? *o.out : std::filesystem::path(c.output.dir);
    std::filesystem::create_directories(dir);
    return dir;
}

inline unsigned threads(const io::RunConfig& c, const CommandOptions& o) { return o.threads ? *o.threads : c.threads; }

inline void write_json(const std::filesystem::path& path, const json& j)
{
    std::ofstream out(path);
    if (!out)
        fail(ErrorKind::ConfigError, "cannot write " + path.string());
    out << j.dump(2) << '\n';
}

inline std::vector<double> column(const TimeSeries& s) { return {s.values().begin(), s.values().end()}; }

inline ProblemData problem_from(const io::RunConfig& c)
{
    ProblemData p;
    p.op = c.op;
    p.phi = c.phi_or_zero();
    p.source_f = c.f_or_unit();
    p.grid = c.grid();
    p.source_a = c.a ? c.a->on(p.grid) : TimeSeries(p.grid);
    p.n_max = c.grids.n_max;
    p.k_max = c.grids.k_max;
    return p;
}

inline ForwardOptions forward_options(const io::RunConfig& c, const CommandOptions& o)
{
    ForwardOptions f;
    f.threads = threads(c, o);
    f.tail_warning = c.tolerances.tail_warning;
    return f;
}

inline json bundle_json(const SolutionBundle& b)
{
    return json{{"seconds", b.seconds},
                {"kernel_groups", b.kernel_groups},
                {"truncation_tail", b.truncation_tail},
                {"solution_scale", b.solution_scale},
                {"relative_tail", b.truncation_tail / std::max(b.solution_scale, 1e-300)},
                {"warnings", b.warnings}};
}

/// Mode name safe for a CSV header, e.g. odd_2_3.
inline std::string column_name(const ModeIndex& idx)
{
    return std::string(to_string(idx.family)) + "_" + std::to_string(idx.n) + "_" + std::to_string(idx.k);
}

inline void write_coefficients(const std::filesystem::path& path, const SolutionBundle& b)
{
    std::vector<std::string> header{"t"};
    std::vector<std::vector<double>> cols{b.grid().nodes()};
    for (const auto& idx : b.coeffs.indices()) {
        header.push_back(column_name(idx));
        cols.push_back(column(b.coeffs.at(idx)));
    }
    io::write_csv(path, header, cols);
}

inline std::size_t nearest_node(const TimeGrid& g, double t)
{
    if (t < -1e-12 || t > g.horizon() * (1 + 1e-12))
        fail(ErrorKind::ConfigError, "output.slice_times: " + std::to_string(t) + " lies outside [0, T]");
    return static_cast<std::size_t>(std::lround(t / g.step()));
}

/// u on an m x m node grid at time node j, long format x,y,value.
inline void write_slice(const std::filesystem::path& path, const SolutionBundle& b, std::size_t j, int m)
{
    std::vector<std::pair<double, double>> pts;
    std::vector<double> xs, ys;
    for (int iy = 0; iy < m; ++iy)
        for (int ix = 0; ix < m; ++ix) {
            pts.emplace_back(double(ix) / (m - 1), double(iy) / (m - 1));
            xs.push_back(pts.back().first);
            ys.push_back(pts.back().second);
        }
    io::write_csv(path, {"x", "y", "value"}, {xs, ys, field_at(b, pts, j)});
}

/// f at t = 0 as a single spatial field, for the decay diagnostics.
inline Field2D source_at_start(const SourceField& f)
{
    if (f.is_sliced())
        return f.slice_fields().front();
    if (f.terms().size() == 1)
        return f.terms().front().time(0.0) * f.terms().front().space;
    Field2D out = Field2D::zero();
    for (const auto& term : f.terms())
        out += term.time(0.0) * term.space;
    return out;
}

/// Default smooth data for the decay suites: x- and y-factors flat to third
/// order at both ends.
inline Field2D catalog_phi()
{
    const Profile bump = Profile::polynomial({0, 0, 0, 0, 1, -4, 6, -4, 1}); // s^4 (1 - s)^4
    return Field2D({SeparableTerm{1.0, bump, bump}, SeparableTerm{0.5, Profile::cosine(2.0), Profile::cosine(1.0)}});
}

inline Field2D catalog_f()
{
    return Field2D({SeparableTerm{1.0, Profile::constant(1.0), Profile::constant(1.0)},
                    SeparableTerm{1.0, Profile::polynomial({0, 1, -1}), Profile::polynomial({0, 1})}});
}

inline json suite_json(const SuiteResult& r)
{
    return json{{"name", r.name},           {"passed", r.passed}, {"metric", r.metric},
                {"threshold", r.threshold}, {"detail", r.detail}, {"seconds", r.seconds}};
}

/// Typo in the Odd dual family: x in place of 1 - x.
inline Basis sabotaged_basis()
{
    Basis b;
    b.w_x = [](Family f, int n, double x) {
        if (f == Family::Odd)
            return 4.0 * x * std::cos(2.0 * n * std::numbers::pi * x);
        return Basis::exact_w_x(f, n, x);
    };
    return b;
}

} // namespace detail

inline CommandResult cmd_mlf_eval(const io::RunConfig& c, const CommandOptions& o)
{
    const auto dir = detail::output_dir(c, o);
    const auto& spec = c.mlf.spec;
    const KernelEvaluator eval(spec);
    std::vector<double> ts, kernel, mlf, anti;
    for (double t : c.mlf.times) {
        ts.push_back(t);
        if (t == 0.0) {
            kernel.push_back(spec.eta > 1.0 ? 0.0 : spec.eta == 1.0 ? 1.0 : INFINITY);
            mlf.push_back(1.0 / std::tgamma(spec.eta));
            anti.push_back(0.0);
            continue;
        }
        const double k = eval(t);
        kernel.push_back(k);
        mlf.push_back(k * std::pow(t, 1.0 - spec.eta));
        if (c.mlf.antiderivative)
            anti.push_back(kernel_antiderivative(spec, t));
    }
    std::vector<std::string> header{"t", "kernel", "mlf"};
    std::vector<std::vector<double>> cols{ts, kernel, mlf};
    if (c.mlf.antiderivative) {
        header.emplace_back("antiderivative");
        cols.push_back(anti);
    }
    io::write_csv(dir / "mlf.csv", header, cols);
    CommandResult r;
    r.report = json{{"command", "mlf-eval"}, {"rows", ts.size()}, {"config", io::to_json(c)}};
    detail::write_json(dir / "report.json", r.report);
    *o.log << "mlf-eval: " << ts.size() << " rows written to " << (dir / "mlf.csv").string() << '\n';
    return r;
}

inline CommandResult cmd_forward(const io::RunConfig& c, const CommandOptions& o)
{
    const auto dir = detail::output_dir(c, o);
    const ProblemData problem = detail::problem_from(c);
    problem.validate();
    const ForwardOptions fopts = detail::forward_options(c, o);
    const ProjectedData data = project_data(problem, fopts.projection);
    const SolutionBundle bundle = solve_projected(problem, data, fopts);

    detail::write_coefficients(dir / "coefficients.csv", bundle);
    io::write_csv(dir / "energy.csv", {"t", "E"}, {problem.grid.nodes(), detail::column(bundle.energy)});
    std::vector<double> slice_times = c.output.slice_times;
    if (slice_times.empty())
        slice_times.push_back(problem.grid.horizon());
    json slices = json::array();
    for (double t : slice_times) {
        const std::size_t j = detail::nearest_node(problem.grid, t);
        const std::string name = "field_" + std::to_string(j) + ".csv";
        detail::write_slice(dir / name, bundle, j, c.output.slice_nodes);
        slices.push_back(json{{"t", problem.grid.at(j)}, {"file", name}});
    }

    // plain-L1 mode residuals past the initial layer
    json residuals = json::object();
    double worst = 0.0;
    for (const auto& idx : bundle.coeffs.indices()) {
        const double r = sup_from(mode_residual(idx, bundle, problem, data), 0.1 * problem.grid.horizon());
        residuals[idx.label()] = r;
        worst = std::max(worst, r);
    }
    CommandResult res;
    res.report = detail::bundle_json(bundle);
    res.report["command"] = "forward";
    res.report["residual_window_start"] = 0.1 * problem.grid.horizon();
    res.report["max_mode_residual"] = worst;
    res.report["mode_residuals"] = residuals;
    res.report["slices"] = slices;
    res.report["config"] = io::to_json(c);
    detail::write_json(dir / "metadata.json", res.report);
    *o.log << "forward: " << bundle.coeffs.indices().size() << " modes, " << problem.grid.intervals()
           << " steps, relative tail " << res.report["relative_tail"].get<double>() << ", max residual " << worst << '\n';
    for (const auto& w : bundle.warnings)
        *o.log << "warning: " << w << '\n';
    return res;
}

inline CommandResult cmd_inverse(const io::RunConfig& c, const CommandOptions& o)
{
    if (!c.energy)
        fail(ErrorKind::ConfigError, "problem.energy: required for the inverse command");
    const auto dir = detail::output_dir(c, o);
    ProblemData problem = detail::problem_from(c);
    problem.validate(false);
    const ForwardOptions fopts = detail::forward_options(c, o);

    TimeSeries E;
    std::optional<io::TimeFunction> a_true = c.a_true;
    if (c.energy->generated()) {
        ProblemData gen = problem;
        gen.grid = TimeGrid(c.grids.horizon, c.energy->generate_intervals);
        gen.n_max = c.energy->generate_n_max;
        gen.k_max = c.energy->generate_k_max;
        gen.source_a = c.energy->generate_a.on(gen.grid);
        E = solve_forward(gen, fopts).energy;
        if (!a_true)
            a_true = c.energy->generate_a;
    } else if (const auto* p = std::get_if<TimeProfile>(&c.energy->given->data)) {
        E = TimeSeries::sample(problem.grid, *p);
    } else {
        E = std::get<TimeSeries>(c.energy->given->data);
    }

    InverseOptions iopts;
    iopts.forward = fopts;
    iopts.flux_correction = c.inverse.flux_correction;
    iopts.recovery.starting_corrections = c.inverse.starting_corrections;
    iopts.recovery.mean_floor = c.tolerances.mean_floor;
    iopts.recovery.compatibility_tol = c.tolerances.compatibility;
    const InverseResult result = solve_inverse(problem, EnergyDatum{E}, iopts);

    const auto& grid = problem.grid;
    std::vector<std::string> header{"t", "a"};
    std::vector<std::vector<double>> cols{grid.nodes(), detail::column(result.amplitude.a)};
    CommandResult res;
    res.report = json{{"command", "inverse"},
                      {"flux_correction", c.inverse.flux_correction},
                      {"extrapolated_origin", result.amplitude.extrapolated_origin},
                      {"self_consistency", result.self_consistency},
                      {"forward", detail::bundle_json(result.bundle)}};
    if (a_true) {
        const TimeSeries truth = a_true->on(grid);
        double err = 0.0;
        for (std::size_t j = 0; j < grid.size(); ++j)
            err = std::max(err, std::fabs(result.amplitude.a[j] - truth[j]));
        if (truth.max_abs() > 0.0) // absolute error for a zero truth
            err /= truth.max_abs();
        const double tol = o.tol ? *o.tol : c.tolerances.round_trip;
        res.report["round_trip_error"] = err;
        res.report["round_trip_tolerance"] = tol;
        res.report["passed"] = err <= tol;
        if (err > tol)
            res.exit_code = NumericalFailure;
        header.emplace_back("a_true");
        cols.push_back(detail::column(truth));
    }
    io::write_csv(dir / "a.csv", header, cols);
    const TimeSeries datum = fracinv::detail::onto(E, grid);
    io::write_csv(dir / "energy_residual.csv", {"t", "E_datum", "E_model", "residual"},
                  {grid.nodes(), detail::column(datum), detail::column(result.bundle.energy),
                   detail::column(result.energy_residual)});
    res.report["config"] = io::to_json(c);
    detail::write_json(dir / "report.json", res.report);
    *o.log << "inverse: self-consistency " << result.self_consistency;
    if (res.report.contains("round_trip_error"))
        *o.log << ", round-trip error " << res.report["round_trip_error"].get<double>() << " (tolerance "
               << res.report["round_trip_tolerance"].get<double>() << ")";
    *o.log << '\n';
    return res;
}

inline CommandResult cmd_verify(const io::RunConfig& c, const CommandOptions& o)
{
    const auto dir = detail::output_dir(c, o);
    const auto& v = c.verify;
    const bool sabotage = v.sabotage || o.sabotage;
    const double biorth_tol = o.tol ? *o.tol : c.tolerances.biorthogonality;
    std::vector<SuiteResult> suites;
    suites.push_back(suite_biorthogonality(v.n_max, v.k_max, biorth_tol, sabotage ? detail::sabotaged_basis() : Basis{}));
    suites.push_back(suite_antiderivative(v.antiderivative_draws));
    suites.push_back(suite_reduction(v.draws));
    suites.push_back(suite_permutation(v.draws));
    suites.push_back(suite_regimes());
    suites.push_back(suite_eigenvalue_estimate());
    const Field2D phi = c.phi ? *c.phi : detail::catalog_phi();
    const Field2D f = c.f ? detail::source_at_start(*c.f) : detail::catalog_f();
    suites.push_back(suite_decay(phi, DatumKind::InitialPhi, v.decay_n_max, v.decay_k_max));
    suites.push_back(suite_decay(f, DatumKind::SourceF, v.decay_n_max, v.decay_k_max));

    CommandResult res;
    bool all = true;
    json list = json::array();
    for (const auto& s : suites) {
        all = all && s.passed;
        list.push_back(detail::suite_json(s));
        *o.log << (s.passed ? "PASS " : "FAIL ") << s.name << "  metric " << s.metric << " (threshold " << s.threshold
               << ")  " << s.detail << '\n';
    }
    res.report = json{{"command", "verify"}, {"passed", all}, {"sabotage", sabotage}, {"suites", list}};
    detail::write_json(dir / "report.json", res.report);
    *o.log << (all ? "all suites passed" : "some suites failed") << '\n';
    res.exit_code = all ? Success : NumericalFailure;
    return res;
}

inline CommandResult cmd_oracle_compare(const io::RunConfig& c, const CommandOptions& o)
{
    const auto dir = detail::output_dir(c, o);
    const ProblemData problem = detail::problem_from(c);
    problem.validate();
    const FDGrid fd{c.grids.mx, c.grids.my, c.grids.fd_steps};
    std::vector<double> times = c.oracle_times;
    if (times.empty())
        times = {0.5 * problem.grid.horizon(), problem.grid.horizon()};

    const SolutionBundle bundle = solve_forward(problem, detail::forward_options(c, o));
    FDOptions fdo;
    fdo.threads = detail::threads(c, o);
    const FieldHistory history = fdm_forward(problem, fd, fdo);
    const auto rows = compare(bundle, history, times);

    const double tol = o.tol ? *o.tol : c.tolerances.oracle;
    std::vector<double> t, rel, sup, ref;
    double worst = 0.0;
    for (const auto& r : rows) {
        t.push_back(r.t);
        rel.push_back(r.rel_l2);
        sup.push_back(r.sup);
        ref.push_back(r.reference_l2);
        worst = std::max(worst, r.rel_l2);
    }
    io::write_csv(dir / "oracle.csv", {"t", "rel_l2", "sup", "reference_l2"}, {t, rel, sup, ref});
    CommandResult res;
    res.report = json{{"command", "oracle-compare"}, {"max_rel_l2", worst}, {"tolerance", tol},
                      {"passed", worst <= tol},   {"spectral", detail::bundle_json(bundle)},
                      {"config", io::to_json(c)}};
    detail::write_json(dir / "report.json", res.report);
    for (const auto& r : rows)
        *o.log << "t = " << r.t << ": relative L2 " << r.rel_l2 << ", sup " << r.sup << '\n';
    *o.log << (worst <= tol ? "within" : "outside") << " tolerance " << tol << '\n';
    res.exit_code = worst <= tol ? Success : NumericalFailure;
    return res;
}

inline const std::vector<std::string>& command_names()
{
    static const std::vector<std::string> names{"mlf-eval", "forward", "inverse", "verify", "oracle-compare"};
    return names;
}

/// Loads the config, runs the command, maps errors onto exit codes.
inline CommandResult run(const std::string& command, const std::filesystem::path& config, const CommandOptions& o,
                         std::ostream& err = std::cerr)
{
    try {
        const io::RunConfig c = io::load_config(config);
        if (command == "mlf-eval")
            return cmd_mlf_eval(c, o);
        if (command == "forward")
            return cmd_forward(c, o);
        if (command == "inverse")
            return cmd_inverse(c, o);
        if (command == "verify")
            return cmd_verify(c, o);
        if (command == "oracle-compare")
            return cmd_oracle_compare(c, o);
        fail(ErrorKind::ConfigError, "unknown command '" + command + "'");
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return {exit_code_for(e), json{{"error", e.what()}, {"kind", std::string(to_string(e.kind()))}}};
    } catch (const std::filesystem::filesystem_error& e) {
        err << "error: " << e.what() << '\n';
        return {ValidationFailure, json{{"error", e.what()}, {"kind", "ConfigError"}}};
    }
}

} // namespace fracinv::app
