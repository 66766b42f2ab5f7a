// Acceptance run: one PASS/FAIL line per criterion.

#include "fracinv/fracinv.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <string>
#include <vector>

using namespace fracinv;

namespace {

// pinned thresholds
constexpr double kBiorthTol = 1e-10;
constexpr double kBiorthSeconds = 10.0;
constexpr double kAntiderivativeTol = 1e-8;
constexpr double kIdentityTol = 1e-10;
constexpr double kOverlapTol = 1e-6;
constexpr double kResidualFactor = 2.0;
constexpr double kOracleTol = 0.02;
constexpr double kOracleSeconds = 300.0;
constexpr double kRoundTripTol = 0.01;
constexpr double kClosedFormTol = 0.005;
constexpr double kZeroTol = 1e-12;
constexpr double kSlopeTol = 0.05;

struct Outcome {
    bool passed = false;
    std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point start)
{
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

std::string fmt(const char* format, auto... args)
{
    char buf[512];
    std::snprintf(buf, sizeof buf, format, args...);
    return buf;
}

Outcome from_suite(const SuiteResult& r)
{
    return {r.passed, fmt("%s: max deviation %.3g (< %.3g), %s, %.2f s", r.name.c_str(), r.metric, r.threshold,
                          r.detail.c_str(), r.seconds)};
}

// data shared by several criteria

Field2D cos_cos() { return Field2D({SeparableTerm{1.0, Profile::cosine(2.0), Profile::cosine(1.0)}}); }

Field2D one_plus_half_xy()
{
    return Field2D({SeparableTerm{1.0, Profile::constant(1.0), Profile::constant(1.0)},
                    SeparableTerm{0.5, Profile::polynomial({0, 1}), Profile::polynomial({0, 1})}});
}

Profile bump() { return Profile::polynomial({0, 0, 0, 0, 1, -4, 6, -4, 1}); } // s^4 (1 - s)^4

const FractionalOperatorSpec kTwoTerm{0.8, {{0.5, 0.4}}};

Outcome criterion_1()
{
    const auto r = suite_biorthogonality(6, 6, kBiorthTol);
    Outcome o = from_suite(r);
    o.passed = r.passed && r.seconds < kBiorthSeconds;
    return o;
}

Outcome criterion_2() { return from_suite(suite_antiderivative(20, 3, kAntiderivativeTol)); }

Outcome criterion_3()
{
    const auto a = suite_reduction(50, 7, kIdentityTol);
    const auto b = suite_permutation(50, 11, kIdentityTol);
    return {a.passed && b.passed, fmt("reduction %.3g, permutation %.3g (< %.3g), 50 draws each", a.metric, b.metric,
                                      kIdentityTol)};
}

Outcome criterion_4() { return from_suite(suite_regimes(12, 5, kOverlapTol)); }

Outcome criterion_5()
{
    // every family present in the data
    const Field2D phi({SeparableTerm{1.0, bump(), bump()}, SeparableTerm{0.5, Profile::cosine(2.0), Profile::cosine(1.0)},
                       SeparableTerm{0.25, Profile{{0.0, 1.0}, Trig::Sin, 2.0, 0.0}, Profile::cosine(1.0)}});
    std::vector<std::vector<double>> residuals;
    std::vector<ModeIndex> modes;
    for (int intervals : {256, 1024}) {
        ProblemData p;
        p.op = kTwoTerm;
        p.phi = phi;
        p.source_f = SourceField::steady(one_plus_half_xy());
        p.grid = TimeGrid(1.0, intervals);
        p.source_a = TimeSeries::sample(p.grid, [](double t) { return 1 + t; });
        p.n_max = 4;
        p.k_max = 4;
        const auto data = project_data(p);
        const auto bundle = solve_projected(p, data);
        modes = bundle.coeffs.indices();
        std::vector<double> r;
        for (const auto& idx : modes)
            r.push_back(sup_from(mode_residual(idx, bundle, p, data), 0.1 * p.grid.horizon()));
        residuals.push_back(r);
    }
    double worst = INFINITY;
    std::string worst_mode;
    int checked = 0;
    for (std::size_t i = 0; i < modes.size(); ++i) {
        if (residuals[0][i] < 1e-13) // identically zero trajectory
            continue;
        ++checked;
        const double factor = residuals[0][i] / residuals[1][i];
        if (factor < worst) {
            worst = factor;
            worst_mode = modes[i].label();
        }
    }
    return {checked > 0 && worst >= kResidualFactor,
            fmt("%d trajectories, smallest residual reduction N=256 -> 1024 is %.3g at %s (need >= %.1f)", checked, worst,
                worst_mode.c_str(), kResidualFactor)};
}

Outcome criterion_6()
{
    const auto start = std::chrono::steady_clock::now();
    ProblemData p;
    p.op = {0.8, {}};
    p.phi = cos_cos();
    p.source_f = SourceField::steady(Field2D::constant(1.0));
    p.grid = TimeGrid(1.0, 512);
    p.source_a = TimeSeries::sample(p.grid, [](double t) { return 1 + t; });
    p.n_max = 4;
    p.k_max = 4;
    const auto bundle = solve_forward(p);
    const auto history = fdm_forward(p, FDGrid{32, 32, 512});
    const auto rows = compare(bundle, history, {0.5, 1.0});
    const double elapsed = seconds_since(start);
    double worst = 0.0;
    for (const auto& r : rows)
        worst = std::max(worst, r.rel_l2);
    return {worst <= kOracleTol && elapsed < kOracleSeconds,
            fmt("relative L2 %.3g at T/2, %.3g at T (<= %.2g), %.1f s", rows[0].rel_l2, rows[1].rel_l2, kOracleTol,
                elapsed)};
}

Outcome criterion_7()
{
    const std::vector<std::pair<std::string, Field2D>> sources{{"f=1", Field2D::constant(1.0)},
                                                                {"f=1+xy/2", one_plus_half_xy()}};
    const std::vector<std::pair<std::string, std::function<double(double)>>> amplitudes{
        {"1", [](double) { return 1.0; }},
        {"1+t", [](double t) { return 1 + t; }},
        {"1+t^2", [](double t) { return 1 + t * t; }}};
    double worst = 0.0;
    std::string worst_case;
    for (const auto& [fname, f] : sources)
        for (const auto& [aname, a] : amplitudes) {
            ProblemData gen;
            gen.op = kTwoTerm;
            gen.phi = cos_cos();
            gen.source_f = SourceField::steady(f);
            gen.grid = TimeGrid(1.0, 1024);
            gen.source_a = TimeSeries::sample(gen.grid, a);
            gen.n_max = 8;
            gen.k_max = 8;
            const TimeSeries E = solve_forward(gen).energy;

            ProblemData inv = gen;
            inv.grid = TimeGrid(1.0, 512);
            inv.source_a = TimeSeries(inv.grid);
            const auto result = solve_inverse(inv, EnergyDatum{E});
            const auto truth = TimeSeries::sample(inv.grid, a);
            double err = 0.0;
            for (std::size_t j = 0; j < truth.size(); ++j)
                err = std::max(err, std::fabs(result.amplitude.a[j] - truth[j]));
            err /= truth.max_abs();
            if (err >= worst) {
                worst = err;
                worst_case = fname + ", a=" + aname;
            }
        }
    return {worst <= kRoundTripTol,
            fmt("6 cases, worst sup-node relative error %.3g (%s), need <= %.2g", worst, worst_case.c_str(), kRoundTripTol)};
}

Outcome criterion_8()
{
    const double alpha = 0.5;
    const TimeGrid grid(1.0, 1024);
    const SourceField f = SourceField::steady(one_plus_half_xy());
    const double mean = 1.125;
    const auto E = TimeSeries::sample(grid, [](double t) { return t; });
    const auto a = recover_source(f, EnergyDatum{E}, {alpha, {}}, grid).a;
    double worst = 0.0;
    for (std::size_t j = 1; j < grid.size(); ++j) {
        const double t = grid.at(j);
        const double exact = std::pow(t, 1 - alpha) / std::tgamma(2 - alpha) / mean;
        worst = std::max(worst, std::fabs(a[j] - exact) / exact);
    }
    return {worst <= kClosedFormTol,
            fmt("max pointwise relative error %.3g over t_j > 0 (<= %.2g)", worst, kClosedFormTol)};
}

Outcome criterion_9()
{
    ProblemData p;
    p.op = kTwoTerm;
    p.phi = Field2D::zero();
    p.source_f = SourceField::steady(one_plus_half_xy());
    p.grid = TimeGrid(1.0, 256);
    p.source_a = TimeSeries(p.grid);
    p.n_max = 4;
    p.k_max = 4;
    const auto result = solve_inverse(p, EnergyDatum{TimeSeries(p.grid)});
    double coeff = 0.0;
    for (const auto& idx : result.bundle.coeffs.indices())
        coeff = std::max(coeff, result.bundle.coeffs.at(idx).max_abs());
    const double a = result.amplitude.a.max_abs();
    return {a < kZeroTol && coeff < kZeroTol, fmt("max|a| %.3g, max coefficient %.3g (< %.0e)", a, coeff, kZeroTol)};
}

Outcome criterion_10()
{
    ProblemData base;
    base.op = kTwoTerm;
    base.phi = cos_cos();
    base.source_f = SourceField::steady(one_plus_half_xy());
    base.grid = TimeGrid(1.0, 256);
    base.source_a = TimeSeries(base.grid);
    base.n_max = 4;
    base.k_max = 4;
    const auto E = TimeSeries::sample(base.grid, [](double t) { return t + t * t; });
    const std::vector<double> deltas{1e-1, 1e-2, 1e-3, 1e-4};

    Perturbation energy_dir;
    energy_dir.E_direction = TimeSeries::sample(base.grid, [](double t) { return std::sin(3 * t) + t; });
    const auto by_energy = stability_probe(base, EnergyDatum{E}, energy_dir, deltas);

    Perturbation source_dir;
    source_dir.f_direction = Field2D({SeparableTerm{1.0, Profile::cosine(2.0), Profile::polynomial({0, 1})},
                                      SeparableTerm{0.3, Profile::constant(1.0), Profile::constant(1.0)}});
    const auto by_source = stability_probe(base, EnergyDatum{E}, source_dir, deltas);

    Perturbation phi_dir;
    phi_dir.phi_direction = Field2D({SeparableTerm{1.0, bump(), bump()}});
    const auto by_phi = stability_probe(base, EnergyDatum{E}, phi_dir, {1e-1, 1e-3});
    bool identical = true;
    for (const auto& row : by_phi.rows)
        identical = identical && row.a_diff == 0.0;

    const bool ok = std::fabs(by_energy.a_slope - 1.0) <= kSlopeTol && std::fabs(by_source.a_slope - 1.0) <= kSlopeTol
                    && identical;
    return {ok, fmt("slope %.4f under E perturbation, %.4f under f perturbation (1 +- %.2f); phi-only perturbation %s",
                    by_energy.a_slope, by_source.a_slope, kSlopeTol, identical ? "leaves a bit-identical" : "changes a")};
}

Outcome criterion_11()
{
    const Field2D phi({SeparableTerm{1.0, bump(), bump()}, SeparableTerm{0.5, Profile::cosine(2.0), Profile::cosine(1.0)}});
    const Field2D f({SeparableTerm{1.0, Profile::constant(1.0), Profile::constant(1.0)},
                     SeparableTerm{1.0, Profile::polynomial({0, 1, -1}), Profile::polynomial({0, 1})}});
    const auto a = suite_decay(phi, DatumKind::InitialPhi, 8, 8);
    const auto b = suite_decay(f, DatumKind::SourceF, 8, 8);
    return {a.passed && b.passed, "phi: " + a.detail + "; f: " + b.detail};
}

} // namespace

int main()
{
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
        {"bi-orthonormality of the mode families", criterion_1},
        {"kernel antiderivative identity", criterion_2},
        {"two-parameter reduction and argument permutation", criterion_3},
        {"series and contour agree on the overlap band", criterion_4},
        {"mode residuals shrink under time refinement", criterion_5},
        {"spectral solution matches finite differences", criterion_6},
        {"inverse round trip on staggered grids", criterion_7},
        {"closed-form recovery for E(t) = t", criterion_8},
        {"zero data give zero source and solution", criterion_9},
        {"linear stability of the recovered source", criterion_10},
        {"coefficient decay of smooth data", criterion_11},
    };
    int failures = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const auto start = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o = {false, std::string("threw ") + e.what()};
        }
        failures += o.passed ? 0 : 1;
        std::printf("%s criterion %2zu: %s | %s [%.1f s]\n", o.passed ? "PASS" : "FAIL", i + 1,
                    criteria[i].first.c_str(), o.detail.c_str(), seconds_since(start));
        std::fflush(stdout);
    }
    std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
    return failures == 0 ? 0 : 1;
}
