#include "dfvem/exceptions.hpp"
#include "dfvem/study.hpp"

#include <gtest/gtest.h>
#include <json.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <regex>
#include <set>
#include <sstream>

using namespace dfvem;

namespace {

StudyConfig p_config(ProblemKind problem, int p_min, int p_max) {
  StudyConfig c;
  c.problem = problem;
  c.sweep = PSweep{p_min, p_max};
  return c;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

}  // namespace

TEST(Fitting, ExactLine) {
  const std::vector<double> x{1, 2, 3, 4}, y{1, -1, -3, -5};
  const auto f = fit_line(x, y);
  EXPECT_TRUE(f.valid);
  EXPECT_NEAR(f.slope, -2.0, 1e-14);
  EXPECT_NEAR(f.intercept, 3.0, 1e-14);
  EXPECT_NEAR(f.r_squared, 1.0, 1e-14);
  EXPECT_FALSE(fit_line(std::vector<double>{1}, std::vector<double>{2}).valid);
}

TEST(Fitting, KnownRSquared) {
  // y = x + noise with sample correlation 0.8 (hand computed).
  const std::vector<double> x{0, 1, 2, 3, 4}, y{0, 2, 1, 3, 4};
  const auto f = fit_line(x, y);
  EXPECT_NEAR(f.slope, 0.9, 1e-14);
  EXPECT_NEAR(f.r_squared, 0.81, 1e-14);
}

TEST(Fitting, StagnationWindow) {
  EXPECT_EQ(pre_stagnation_window(std::vector<double>{1, 0.5, 0.25}), 3);
  EXPECT_EQ(pre_stagnation_window(std::vector<double>{1, 0.5, 0.52, 0.1}), 4);
  EXPECT_EQ(pre_stagnation_window(std::vector<double>{1, 0.5, 0.53, 0.1}), 2);
  EXPECT_EQ(pre_stagnation_window(std::vector<double>{}), 0);
}

TEST(Fitting, ComputeFitsUsesModelsAndSkipsFailedRows) {
  std::vector<StudyRow> rows;
  for (int p = 2; p <= 6; ++p) {
    StudyRow r;
    r.index = p;
    r.n_v = 10 * p * p * p;
    r.h1_velocity_error = std::pow(10.0, -0.5 * p);
    r.l2_pressure_error = std::pow(static_cast<double>(p), -2.0);
    rows.push_back(r);
  }
  rows[2].failed = true;
  rows[2].h1_velocity_error = 1e6;
  const auto fits = compute_fits(rows, false);
  StudyReport report;
  report.fits = fits;
  const auto* e = report.find_fit(Quantity::h1_velocity, FitModel::exponential_p);
  ASSERT_NE(e, nullptr);
  EXPECT_NEAR(e->fit.slope, -0.5, 1e-12);
  EXPECT_EQ(e->fit.points, 4);
  const auto* a = report.find_fit(Quantity::l2_pressure, FitModel::algebraic_p);
  ASSERT_NE(a, nullptr);
  EXPECT_NEAR(a->fit.slope, -2.0, 1e-12);
  EXPECT_EQ(report.find_fit(Quantity::total, FitModel::exponential_cbrt_nv), nullptr);
  const auto hp = compute_fits(rows, true);
  for (const auto& f : hp) EXPECT_EQ(f.model, FitModel::exponential_cbrt_nv);
}

TEST(Config, Validation) {
  EXPECT_THROW(p_config(ProblemKind::analytic_square, 5, 3).validate(), ConfigError);
  EXPECT_THROW(p_config(ProblemKind::analytic_square, 1, 3).validate(), ConfigError);
  StudyConfig hp;
  hp.problem = ProblemKind::singular_lshape;
  hp.sweep = HpSweep{2, 1};
  EXPECT_THROW(hp.validate(), ConfigError);
  hp.sweep = HpSweep{1, 2, 1.5};
  EXPECT_THROW(hp.validate(), ConfigError);
  hp.sweep = HpSweep{1, 2};
  EXPECT_NO_THROW(hp.validate());
  hp.problem = ProblemKind::analytic_square;
  EXPECT_THROW(hp.validate(), ConfigError);
  EXPECT_EQ(problem_from_string("patch"), ProblemKind::patch);
  EXPECT_THROW(problem_from_string("cavity"), ConfigError);
}

TEST(Config, SigmaPresets) {
  const auto s = sigma_presets();
  ASSERT_EQ(s.size(), 3u);
  EXPECT_DOUBLE_EQ(s[0], 0.5);
  EXPECT_NEAR(s[1], 0.41421356237309503, 1e-15);
  EXPECT_NEAR(s[2], 0.17157287525380996, 1e-15);
}

TEST(Study, PatchSweepFlagsUndefinedSlopes) {
  const auto r = run_p_study(p_config(ProblemKind::patch, 2, 4));
  ASSERT_EQ(r.rows.size(), 3u);
  for (const auto& row : r.rows) {
    EXPECT_FALSE(row.failed);
    EXPECT_LE(row.h1_velocity_error, 1e-9);
    EXPECT_LE(row.l2_pressure_error, 1e-9);
  }
  EXPECT_TRUE(r.slopes_undefined);
  for (const auto& f : r.fits) EXPECT_FALSE(f.fit.valid);
}

TEST(Study, RowsAreOrderedAndCounted) {
  auto cfg = p_config(ProblemKind::analytic_square, 2, 4);
  cfg.compute_infsup = true;
  const auto r = run_p_study(cfg);
  ASSERT_EQ(r.rows.size(), 3u);
  EXPECT_EQ(r.name, "p_analytic_square_d_recipe");
  for (std::size_t i = 0; i < r.rows.size(); ++i) {
    EXPECT_EQ(r.rows[i].index, static_cast<int>(i) + 2);
    EXPECT_EQ(r.rows[i].n_v, r.rows[i].n_u + r.rows[i].n_p);
    EXPECT_TRUE(r.rows[i].beta.has_value());
  }
  EXPECT_EQ(r.rows[0].n_u, 50);
  EXPECT_EQ(r.rows[0].n_p, 12);
}

TEST(Study, HpFirstLayersDecrease) {
  StudyConfig cfg;
  cfg.problem = ProblemKind::singular_lshape;
  cfg.sweep = HpSweep{1, 2, 0.5, MeshFamily::rings_plain, 1.0};
  const auto r = run_hp_study(cfg);
  ASSERT_EQ(r.rows.size(), 2u);
  EXPECT_GT(r.rows[0].total_error(), r.rows[1].total_error());
  EXPECT_LT(r.rows[0].n_v, r.rows[1].n_v);
  EXPECT_EQ(r.name, "hp_rings_plain_sigma0.5000_d_recipe");
}

TEST(Study, DeterministicAndParallelSafe) {
  auto cfg = p_config(ProblemKind::singular_lshape, 2, 4);
  const auto a = to_csv(run_p_study(cfg));
  const auto b = to_csv(run_p_study(cfg));
  cfg.parallel = true;
  const auto c = to_csv(run_p_study(cfg));
  EXPECT_EQ(a, b);
  EXPECT_EQ(a, c);
}

TEST(Output, CsvRoundTrip) {
  const auto r = run_p_study(p_config(ProblemKind::analytic_square, 2, 3));
  auto rows = parse_csv(to_csv(r));
  ASSERT_EQ(rows.size(), r.rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    EXPECT_EQ(rows[i].label, r.rows[i].label);
    EXPECT_EQ(rows[i].index, r.rows[i].index);
    EXPECT_EQ(rows[i].n_v, r.rows[i].n_v);
    EXPECT_EQ(rows[i].n_u, r.rows[i].n_u);
    EXPECT_EQ(rows[i].n_p, r.rows[i].n_p);
    EXPECT_EQ(rows[i].max_degree, r.rows[i].max_degree);
    EXPECT_EQ(rows[i].h1_velocity_error, r.rows[i].h1_velocity_error);
    EXPECT_EQ(rows[i].l2_pressure_error, r.rows[i].l2_pressure_error);
    EXPECT_EQ(rows[i].condition_estimate, r.rows[i].condition_estimate);
    EXPECT_EQ(rows[i].residual, r.rows[i].residual);
    EXPECT_EQ(rows[i].beta, r.rows[i].beta);
    EXPECT_EQ(rows[i].failed, r.rows[i].failed);
    EXPECT_EQ(rows[i].message, r.rows[i].message);
  }
}

TEST(Output, CsvQuotingRoundTrip) {
  StudyReport r;
  StudyRow row;
  row.label = "p=2";
  row.message = "solver said \"no\", twice";
  row.failed = true;
  row.beta = 0.25;
  r.rows.push_back(row);
  const auto back = parse_csv(to_csv(r));
  ASSERT_EQ(back.size(), 1u);
  EXPECT_EQ(back[0].message, row.message);
  EXPECT_TRUE(back[0].failed);
  EXPECT_EQ(back[0].beta, 0.25);
  EXPECT_THROW(parse_csv("a,b\n1,2\n"), ConfigError);
}

TEST(Output, PlotScriptUsesCsvColumns) {
  std::set<std::string> cols(csv_columns().begin(), csv_columns().end());
  for (bool hp : {false, true}) {
    StudyReport r;
    r.name = "demo";
    if (hp) {
      r.config.problem = ProblemKind::singular_lshape;
      r.config.sweep = HpSweep{};
    }
    const auto script = plot_script(r, "demo.csv");
    const std::regex ref("column\\(\"([a-z0-9_]+)\"\\)");
    int count = 0;
    for (auto it = std::sregex_iterator(script.begin(), script.end(), ref); it != std::sregex_iterator(); ++it) {
      EXPECT_TRUE(cols.count((*it)[1].str())) << (*it)[1].str();
      ++count;
    }
    EXPECT_GE(count, hp ? 6 : 4);
    EXPECT_NE(script.find("set logscale y"), std::string::npos);
  }
}

TEST(Output, EmitWritesFilesAndRefusesEmpty) {
  const auto dir = std::filesystem::temp_directory_path() / "dfvem_study_test";
  std::filesystem::remove_all(dir);
  StudyReport empty;
  empty.name = "empty";
  EXPECT_THROW(emit_outputs(empty, dir), ConfigError);
  const auto r = run_p_study(p_config(ProblemKind::patch, 2, 2));
  const auto files = emit_outputs(r, dir);
  ASSERT_EQ(files.size(), 3u);
  for (const auto& f : files) EXPECT_TRUE(std::filesystem::exists(f));
  const auto json = nlohmann::json::parse(slurp(dir / (r.name + ".json")));
  EXPECT_EQ(json["name"], r.name);
  EXPECT_EQ(json["rows"].size(), 1u);
  EXPECT_EQ(json["config"]["problem"], "patch");
  EXPECT_TRUE(json["rows"][0].contains("runtime_seconds"));
  EXPECT_EQ(parse_csv(slurp(dir / (r.name + ".csv"))).size(), 1u);
  std::filesystem::remove_all(dir);
}
