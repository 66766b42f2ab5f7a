#include <gtest/gtest.h>

#include "fracinv/app.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

using namespace fracinv;
using fracinv::io::json;

namespace {

namespace fs = std::filesystem;

class Workspace {
public:
    Workspace()
    {
        const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
        dir_ = fs::temp_directory_path() / "fracinv_cli_tests" / (std::string(info->test_suite_name()) + "_" + info->name());
        fs::remove_all(dir_);
        fs::create_directories(dir_);
    }

    [[nodiscard]] const fs::path& dir() const { return dir_; }

    fs::path write(const std::string& name, const std::string& text) const
    {
        std::ofstream(dir_ / name) << text;
        return dir_ / name;
    }

    [[nodiscard]] app::CommandResult run(const std::string& command, const std::string& config_text,
                                         app::CommandOptions opts = {}) const
    {
        const auto cfg = write("config.json", config_text);
        opts.out = dir_ / "out";
        opts.log = &log_;
        std::ostringstream err;
        auto r = app::run(command, cfg, opts, err);
        errors_ = err.str();
        return r;
    }

    [[nodiscard]] std::string errors() const { return errors_; }

private:
    fs::path dir_;
    mutable std::ostringstream log_;
    mutable std::string errors_;
};

std::string config_error(const std::string& text)
{
    try {
        io::parse_config_text(text);
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::ConfigError);
        return e.what();
    }
    ADD_FAILURE() << "expected a ConfigError";
    return {};
}

std::vector<double> csv_column(const fs::path& file, const std::string& name)
{
    const auto table = io::read_csv(file);
    const auto it = std::find(table.header.begin(), table.header.end(), name);
    EXPECT_NE(it, table.header.end()) << name;
    const auto c = static_cast<std::size_t>(it - table.header.begin());
    std::vector<double> out;
    for (const auto& row : table.rows)
        out.push_back(row[c]);
    return out;
}

std::string slurp(const fs::path& file)
{
    std::ifstream in(file);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

const char* kFullConfig = R"({
  "operator": {"alpha": 0.8, "terms": [{"psi": 0.5, "order": 0.4}]},
  "problem": {
    "phi": {"type": "sum", "terms": [
      {"type": "cosine_product", "amplitude": 2.0, "p": 2, "q": 1},
      {"type": "mode", "family": "even", "n": 1, "k": 2},
      {"type": "polynomial", "monomials": [[1.0, 0, 0], [0.5, 1, 1]]}
    ]},
    "f": {"terms": [{"space": {"type": "constant", "value": 1.0}, "time": {"poly": [1.0, 0.5], "rate": -1.0}}]},
    "a": {"type": "series", "horizon": 1.0, "values": [1.0, 1.5, 2.0]},
    "energy": {"type": "generate", "a": 1.0, "intervals": 64},
    "a_true": {"poly": [1.0]}
  },
  "grids": {"T": 1.0, "N": 32, "n_max": 3, "k_max": 2},
  "tolerances": {"oracle": 0.05},
  "output": {"dir": "x", "slice_times": {"from": 0.0, "to": 1.0, "count": 3}},
  "mlf": {"eta": 0.7, "terms": [{"rate": 2.0, "order": 0.5}], "t": [0.1, 0.2]},
  "verify": {"draws": 5},
  "inverse": {"flux_correction": false},
  "oracle": {"times": [0.5]},
  "threads": 2
})";

} // namespace

TEST(Config, CanonicalRoundTrip)
{
    const auto first = io::parse_config_text(kFullConfig);
    const json canonical = io::to_json(first);
    const auto second = io::parse_config(canonical);
    EXPECT_TRUE(first == second);
    EXPECT_EQ(io::to_json(second).dump(), canonical.dump());
}

TEST(Config, DefaultsFillCanonicalForm)
{
    const json j = io::to_json(io::parse_config_text("{}"));
    EXPECT_EQ(j["grids"]["N"], 256);
    EXPECT_EQ(j["tolerances"]["oracle"], 0.02);
    EXPECT_EQ(j["verify"]["n_max"], 6);
    EXPECT_TRUE(j["problem"].empty());
}

TEST(Config, CatalogFieldsEvaluate)
{
    const auto c = io::parse_config_text(kFullConfig);
    const double x = 0.3, y = 0.7;
    const double expected = 2.0 * std::cos(2 * std::numbers::pi * x) * std::cos(std::numbers::pi * y)
                            + x * std::sin(2 * std::numbers::pi * x) * std::numbers::sqrt2 * std::cos(2 * std::numbers::pi * y)
                            + 1.0 + 0.5 * x * y;
    EXPECT_NEAR((*c.phi)(x, y), expected, 1e-14);
    EXPECT_NEAR((*c.f)(x, y, 0.4), (1 + 0.2) * std::exp(-0.4), 1e-14);
    const auto a = c.a->on(TimeGrid(1.0, 2));
    EXPECT_EQ(a[1], 1.5);
}

TEST(Config, ErrorsNameTheField)
{
    EXPECT_NE(config_error(R"({"problem": {"phi": {"type": "constant", "valu": 1}}})").find("problem.phi.valu"),
              std::string::npos);
    EXPECT_NE(config_error(R"({"grids": {"N": "many"}})").find("grids.N"), std::string::npos);
    EXPECT_NE(config_error(R"({"problem": {"phi": {"type": "sum", "terms": [1, {"type": "blob"}]}}})")
                  .find("problem.phi.terms[1].type"),
              std::string::npos);
    EXPECT_NE(config_error(R"({"operator": {"alpha": 0.5, "terms": [{"psi": 1, "order": 0.7}]}})")
                  .find("0 < alpha_m < ... < alpha_1 < alpha"),
              std::string::npos);
}

TEST(Config, SyntaxErrorsCarryLineAndColumn)
{
    const std::string msg = config_error("{\n  \"grids\": {\n    \"N\": 12,,\n  }\n}");
    EXPECT_NE(msg.find("line 3"), std::string::npos) << msg;
}

TEST(Config, TableCsvFormats)
{
    Workspace ws;
    ws.write("block.csv", "1,2,3\n4,5,6\n");
    ws.write("list.csv", "x,y,value\n0,0,1\n0.5,0,2\n1,0,3\n0,1,4\n0.5,1,5\n1,1,6\n");
    for (const char* file : {"block.csv", "list.csv"}) {
        const auto c = io::parse_config_text(
            std::string(R"({"problem": {"phi": {"type": "table", "csv": ")") + file + "\"}}}", ws.dir());
        const auto* t = c.phi->table();
        ASSERT_NE(t, nullptr);
        EXPECT_EQ(t->nx, 2);
        EXPECT_EQ(t->ny, 1);
        EXPECT_DOUBLE_EQ((*c.phi)(0.25, 0.5), (1.5 + 4.5) / 2) << file;
    }
}

TEST(Config, NonUniformEnergySamplesAreInterpolated)
{
    Workspace ws;
    ws.write("E.csv", "t,E\n0,0\n0.1,0.1\n0.35,0.35\n0.7,0.7\n1.0,1.0\n");
    const auto c = io::parse_config_text(R"({"problem": {"energy": {"type": "csv", "path": "E.csv"}}})", ws.dir());
    const auto E = c.energy->given->on(TimeGrid(1.0, 4));
    for (std::size_t j = 0; j < E.size(); ++j)
        EXPECT_NEAR(E[j], E.t(j), 1e-14);
}

TEST(CommandMlfEval, ExponentialColumn)
{
    Workspace ws;
    const auto r = ws.run("mlf-eval", R"({"mlf": {"eta": 1.0, "terms": [{"rate": 1.0, "order": 1.0}],
                                              "t": {"from": 0, "to": 2, "count": 9}}})");
    ASSERT_EQ(r.exit_code, 0) << ws.errors();
    const auto t = csv_column(ws.dir() / "out" / "mlf.csv", "t");
    const auto k = csv_column(ws.dir() / "out" / "mlf.csv", "kernel");
    for (std::size_t i = 0; i < t.size(); ++i)
        EXPECT_NEAR(k[i], std::exp(-t[i]), 1e-13);
}

TEST(CommandMlfEval, ZeroArgumentRow)
{
    Workspace ws;
    const auto r = ws.run("mlf-eval", R"({"mlf": {"eta": 0.7, "terms": [{"rate": 3.0, "order": 0.4}], "t": [0.0, 0.5]}})");
    ASSERT_EQ(r.exit_code, 0) << ws.errors();
    EXPECT_DOUBLE_EQ(csv_column(ws.dir() / "out" / "mlf.csv", "mlf")[0], 1.0 / std::tgamma(0.7));
}

TEST(Cli, ValidationExitCodes)
{
    Workspace ws;
    EXPECT_EQ(ws.run("mlf-eval", R"({"operator": {"alpha": 0.5, "terms": [{"psi": 1, "order": 0.7}]}})").exit_code, 2);
    EXPECT_NE(ws.errors().find("alpha_1"), std::string::npos);
    EXPECT_EQ(ws.run("forward", "{ not json").exit_code, 2);
    EXPECT_EQ(ws.run("inverse", "{}").exit_code, 2); // energy missing
    EXPECT_EQ(app::run("forward", ws.dir() / "missing.json", {}, std::cerr).exit_code, 2);
}

TEST(CommandForward, HomogeneousDecayScenario)
{
    Workspace ws;
    const auto r = ws.run("forward", R"({
      "operator": {"alpha": 0.8},
      "problem": {"phi": {"type": "mode", "family": "zero", "k": 1}, "f": 0.0},
      "grids": {"T": 1.0, "N": 100, "n_max": 2, "k_max": 2}})");
    ASSERT_EQ(r.exit_code, 0) << ws.errors();
    // mpmath: E_{0.8,1}(-pi^4 0.5^0.8)
    EXPECT_NEAR(csv_column(ws.dir() / "out" / "coefficients.csv", "zero_0_1")[50], 0.0039820388635022952704, 1e-11);
    EXPECT_LT(r.report["max_mode_residual"].get<double>(), 0.05);
}

TEST(CommandForward, ConstantModeIsStationary)
{
    Workspace ws;
    const auto r = ws.run("forward", R"({"problem": {"phi": 2.5, "f": 0.0}, "grids": {"N": 20, "n_max": 1, "k_max": 1},
                                         "output": {"slice_nodes": 5}})");
    ASSERT_EQ(r.exit_code, 0) << ws.errors();
    for (double e : csv_column(ws.dir() / "out" / "energy.csv", "E"))
        EXPECT_NEAR(e, 2.5, 1e-12);
    for (double u : csv_column(ws.dir() / "out" / "field_20.csv", "value"))
        EXPECT_NEAR(u, 2.5, 1e-12);
}

TEST(CommandForward, OutputsAreDeterministic)
{
    const char* cfg = R"({"operator": {"alpha": 0.8, "terms": [{"psi": 0.5, "order": 0.4}]},
      "problem": {"phi": {"type": "cosine_product", "p": 2, "q": 1}, "f": 1.0, "a": {"poly": [1, 1]}},
      "grids": {"N": 64, "n_max": 2, "k_max": 2}})";
    Workspace ws;
    app::CommandOptions many;
    many.threads = 4;
    ASSERT_EQ(ws.run("forward", cfg, many).exit_code, 0);
    const std::string first = slurp(ws.dir() / "out" / "coefficients.csv");
    app::CommandOptions one;
    one.threads = 1;
    ASSERT_EQ(ws.run("forward", cfg, one).exit_code, 0);
    EXPECT_EQ(slurp(ws.dir() / "out" / "coefficients.csv"), first);
}

TEST(CommandOracleCompare, ForcedRunWithinTolerance)
{
    Workspace ws;
    const auto r = ws.run("oracle-compare", R"({"operator": {"alpha": 0.8},
      "problem": {"phi": {"type": "cosine_product", "p": 2, "q": 1}, "f": 1.0, "a": {"poly": [1, 1]}},
      "grids": {"T": 1.0, "N": 128, "n_max": 4, "k_max": 4, "Mx": 16, "My": 16, "fd_steps": 128}})");
    ASSERT_EQ(r.exit_code, 0) << ws.errors() << r.report.dump();
    EXPECT_LE(r.report["max_rel_l2"].get<double>(), 0.02);
    EXPECT_EQ(csv_column(ws.dir() / "out" / "oracle.csv", "t").size(), 2u);
}

TEST(CommandOracleCompare, TolOverrideTurnsIntoFailure)
{
    Workspace ws;
    app::CommandOptions strict;
    strict.tol = 1e-9;
    const auto r = ws.run("oracle-compare", R"({"operator": {"alpha": 0.8},
      "problem": {"phi": {"type": "cosine_product", "p": 2, "q": 1}, "f": 1.0, "a": 1.0},
      "grids": {"T": 1.0, "N": 32, "n_max": 2, "k_max": 2, "Mx": 8, "My": 8, "fd_steps": 32}})", strict);
    EXPECT_EQ(r.exit_code, 3);
}

TEST(CommandInverse, RoundTripScenario)
{
    Workspace ws;
    const auto r = ws.run("inverse", R"({"operator": {"alpha": 0.8, "terms": [{"psi": 0.5, "order": 0.4}]},
      "problem": {"phi": {"type": "cosine_product", "p": 2, "q": 1},
                  "f": {"type": "polynomial", "monomials": [[1.0, 0, 0], [0.5, 1, 1]]},
                  "energy": {"type": "generate", "a": {"poly": [1, 1]}, "intervals": 256, "n_max": 4, "k_max": 4}},
      "grids": {"N": 128, "n_max": 4, "k_max": 4}})");
    ASSERT_EQ(r.exit_code, 0) << ws.errors() << r.report.dump();
    EXPECT_LE(r.report["round_trip_error"].get<double>(), 0.01);
    const auto a = csv_column(ws.dir() / "out" / "a.csv", "a");
    const auto truth = csv_column(ws.dir() / "out" / "a.csv", "a_true");
    EXPECT_EQ(a.size(), 129u);
    EXPECT_NEAR(a.back(), truth.back(), 0.02);
}

TEST(CommandInverse, ConstantEnergyGivesZeroSource)
{
    Workspace ws;
    const auto r = ws.run("inverse", R"({"operator": {"alpha": 0.6}, "problem": {"phi": 1.5, "f": 1.0,
      "energy": {"poly": [1.5]}, "a_true": 0.0}, "grids": {"N": 32, "n_max": 1, "k_max": 1},
      "tolerances": {"round_trip": 1e-12}})");
    ASSERT_EQ(r.exit_code, 0) << ws.errors();
    for (double v : csv_column(ws.dir() / "out" / "a.csv", "a"))
        EXPECT_LT(std::fabs(v), 1e-12);
}

TEST(CommandInverse, IncompatibleDatumHasDedicatedExitCode)
{
    Workspace ws;
    const auto r = ws.run("inverse", R"({"problem": {"phi": 1.0, "f": 1.0, "energy": {"poly": [2.0, 1.0]}},
      "grids": {"N": 32, "n_max": 1, "k_max": 1}})");
    EXPECT_EQ(r.exit_code, 4);
    EXPECT_NE(ws.errors().find("CompatibilityViolation"), std::string::npos);
}

TEST(CommandVerify, DefaultSuitePasses)
{
    Workspace ws;
    const auto r = ws.run("verify", "{}");
    EXPECT_EQ(r.exit_code, 0) << r.report.dump(2);
    EXPECT_TRUE(r.report["passed"].get<bool>());
    EXPECT_EQ(r.report["suites"].size(), 8u);
    EXPECT_TRUE(fs::exists(ws.dir() / "out" / "report.json"));
}

TEST(CommandVerify, SabotagedBasisFailsBiorthonormality)
{
    const auto r = suite_biorthogonality(6, 6, 1e-10, app::detail::sabotaged_basis());
    EXPECT_FALSE(r.passed);
    EXPECT_GT(r.metric, 1e-3);
}

TEST(CommandVerify, SmallBoxFlagsInsufficientData)
{
    const auto r = suite_decay(app::detail::catalog_phi(), DatumKind::InitialPhi, 2, 2);
    EXPECT_FALSE(r.passed);
    EXPECT_NE(r.detail.find("InsufficientData"), std::string::npos);
}
