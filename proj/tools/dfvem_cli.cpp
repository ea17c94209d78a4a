// Batch driver: mesh generation, single solves, p- and hp-studies, inf-sup estimates.
//
// Exit codes: 0 success, 2 invalid configuration, 3 solver failure.
// Relative output paths are resolved against $DFVEM_OUTPUT_ROOT when it is set.

#include "dfvem/errors.hpp"
#include "dfvem/exceptions.hpp"
#include "dfvem/infsup.hpp"
#include "dfvem/mesh_io.hpp"
#include "dfvem/study.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdlib>
#include <iostream>
#include <optional>

using namespace dfvem;

namespace {

constexpr int kConfigError = 2;
constexpr int kSolverError = 3;

std::filesystem::path output_path(const std::filesystem::path& p) {
  if (p.is_absolute()) return p;
  if (const char* root = std::getenv("DFVEM_OUTPUT_ROOT"); root && *root) return std::filesystem::path(root) / p;
  return p;
}

double parse_sigma(const std::string& s) {
  const auto presets = sigma_presets();
  if (s == "half") return presets[0];
  if (s == "sqrt2m1") return presets[1];
  if (s == "sqrt2m1_sq") return presets[2];
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used == s.size()) return v;
  } catch (const std::exception&) {
  }
  throw ConfigError("sigma must be a number or one of half, sqrt2m1, sqrt2m1_sq; got '" + s + "'");
}

struct MeshOptions {
  std::string domain = "unit_square";
  int cells_per_side = 2;
  std::optional<std::string> sigma;
  int layers = 1;
  std::string family = "cartesian_graded";
  std::string mesh_file;

  void add(CLI::App* app) {
    app->add_option("--domain", domain, "unit_square or l_shape (uniform meshes)");
    app->add_option("--cells-per-side", cells_per_side, "cells per side of a uniform mesh");
    app->add_option("--sigma", sigma, "grading parameter, or half / sqrt2m1 / sqrt2m1_sq; selects a graded L-shape");
    app->add_option("--layers", layers, "refinement layers n of a graded mesh");
    app->add_option("--family", family, "cartesian_graded, rings_with_diagonal or rings_plain");
    app->add_option("--mesh-file", mesh_file, "read the mesh from a file instead");
  }

  bool graded() const { return sigma.has_value(); }

  PolygonalMesh build() const {
    if (!mesh_file.empty()) return load_mesh(mesh_file);
    if (graded()) return make_graded_lshape_mesh({parse_sigma(*sigma), layers, Point::Zero(), mesh_family_from_string(family)});
    return make_uniform_square_mesh(cells_per_side, domain_from_string(domain));
  }
};

nlohmann::json quality_json(const MeshQualityReport& q) {
  return {{"gamma_a1", q.gamma_a1},
          {"gamma_a2", q.gamma_a2},
          {"quasi_uniformity_ratio", q.quasi_uniformity_ratio},
          {"neighbour_ratio", q.neighbour_ratio},
          {"non_star_shaped_cells", q.non_star_shaped_cells}};
}

int cmd_mesh(const MeshOptions& m, const std::string& output) {
  const auto mesh = m.build();
  if (output.empty()) {
    write_mesh(std::cout, mesh);
  } else {
    const auto path = output_path(output);
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    save_mesh(path, mesh);
  }
  nlohmann::json j{{"cells", mesh.num_cells()},
                   {"vertices", mesh.num_vertices()},
                   {"edges", mesh.num_edges()},
                   {"area", mesh.total_area()},
                   {"quality", quality_json(check_mesh_assumptions(mesh))}};
  std::cerr << j.dump(2) << "\n";
  return 0;
}

struct SolveOptions {
  std::string problem = "analytic_square";
  int degree = 4;
  std::optional<double> mu;
  std::string stabilization = "d_recipe";
  int quadrature_boost = 0;
  std::string export_matrix;
  bool infsup = false;
};

int cmd_solve(const MeshOptions& m, const SolveOptions& s) {
  const ProblemKind kind = problem_from_string(s.problem);
  PolygonalMesh mesh = m.build();
  DegreeDistribution degrees;
  if (s.mu) {
    if (!mesh.layered()) {
      const Point corner = Point::Zero();
      mesh = assign_layers(mesh, std::span(&corner, 1));
    }
    degrees = assign_degrees(mesh, HpDegree{*s.mu});
  } else {
    degrees = assign_degrees(mesh, UniformDegree{s.degree});
  }
  const Domain domain = kind == ProblemKind::singular_lshape ? Domain::l_shape
                        : kind == ProblemKind::analytic_square ? Domain::unit_square
                                                               : domain_from_string(m.domain);
  const TestProblem problem = make_problem(kind, degrees.max_degree(), domain);
  if (kind == ProblemKind::patch && s.mu) throw ConfigError("the patch problem needs a uniform degree");
  const DiscretizationOptions options{stabilization_from_string(s.stabilization), s.quadrature_boost, 1};
  const auto run = run_single(mesh, degrees, problem, options);
  if (!s.export_matrix.empty()) export_matrix_market(output_path(s.export_matrix), run.system.matrix);
  if (run.disc.ill_conditioned_cells() > 0)
    std::cerr << "warning: " << run.disc.ill_conditioned_cells()
              << " cells have a local Gram condition number above 1e14; expect error stagnation\n";

  nlohmann::json j{{"problem", problem.name},
                   {"cells", mesh.num_cells()},
                   {"n_u", run.errors.num_velocity},
                   {"n_p", run.errors.num_pressure},
                   {"n_v", run.errors.n_v()},
                   {"max_degree", degrees.max_degree()},
                   {"clamped_cells", degrees.clamped_cells},
                   {"h1_velocity_error", run.errors.h1_velocity_error},
                   {"l2_pressure_error", run.errors.l2_pressure_error},
                   {"divergence_norm", divergence_norm(run.disc, run.fields.velocity)},
                   {"pressure_mean_shift", problem.pressure_mean},
                   {"residual", run.fields.residual},
                   {"fill", run.fields.fill},
                   {"condition_estimate", run.disc.max_gram_condition()},
                   {"seconds", run.seconds}};
  if (s.infsup) j["beta"] = estimate_infsup(run.disc).beta;
  std::cout << j.dump(2) << "\n";
  return 0;
}

struct StudyOptions {
  std::string problem;
  std::string stabilization = "d_recipe";
  int quadrature_boost = 0;
  std::string output = "results";
  std::uint64_t seed = 0;
  bool infsup = false;
  bool parallel = false;
};

void add_study_options(CLI::App* app, StudyOptions& o) {
  app->add_option("--stabilization", o.stabilization, "d_recipe or hp_explicit");
  app->add_option("--quadrature-boost", o.quadrature_boost, "extra quadrature exactness");
  app->add_option("--output", o.output, "output directory");
  app->add_option("--seed", o.seed, "seed recorded with the study");
  app->add_flag("--infsup", o.infsup, "estimate the inf-sup constant for every run");
  app->add_flag("--parallel", o.parallel, "run sweep points concurrently");
}

int finish_study(const StudyReport& report, const StudyOptions& o) {
  const auto written = emit_outputs(report, output_path(o.output));
  for (const auto& r : report.rows) {
    std::cout << r.label << "  N_V=" << r.n_v << "  h1=" << r.h1_velocity_error << "  l2=" << r.l2_pressure_error;
    if (r.beta) std::cout << "  beta=" << *r.beta;
    if (r.failed) std::cout << "  FAILED";
    if (!r.message.empty()) std::cout << "  (" << r.message << ")";
    std::cout << "\n";
  }
  for (const auto& f : report.fits)
    if (f.fit.valid)
      std::cout << "fit " << to_string(f.quantity) << " " << to_string(f.model) << ": slope=" << f.fit.slope
                << " R2=" << f.fit.r_squared << " window=" << f.window << "\n";
  if (report.slopes_undefined) std::cout << "all errors at roundoff level: slopes undefined\n";
  for (const auto& p : written) std::cout << "wrote " << p.string() << "\n";
  for (const auto& r : report.rows)
    if (r.failed) return kSolverError;
  return 0;
}

StudyConfig base_config(const StudyOptions& o) {
  StudyConfig c;
  c.stabilization = stabilization_from_string(o.stabilization);
  c.quadrature_boost = o.quadrature_boost;
  c.output_dir = output_path(o.output);
  c.seed = o.seed;
  c.compute_infsup = o.infsup;
  c.parallel = o.parallel;
  return c;
}

int cmd_infsup(const MeshOptions& m, int p_min, int p_max, int extra, const std::string& stabilization) {
  const auto mesh = m.build();
  nlohmann::json rows = nlohmann::json::array();
  for (int p = p_min; p <= p_max; ++p) {
    const auto disc = discretize(mesh, assign_degrees(mesh, UniformDegree{p}),
                                 {stabilization_from_string(stabilization), 0, 1});
    const auto r = estimate_infsup(disc, {1e-8, 500, extra});
    rows.push_back({{"p", p}, {"beta", r.beta}, {"iterations", r.iterations}});
    std::cout << "p=" << p << "  beta=" << r.beta << "  iterations=" << r.iterations << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Divergence-free virtual elements for 2D Stokes: meshes, solves and convergence studies"};
  app.require_subcommand(1);

  MeshOptions mesh_opts;
  std::string mesh_output;
  auto* mesh_cmd = app.add_subcommand("mesh", "generate a mesh and report its quality");
  mesh_opts.add(mesh_cmd);
  mesh_cmd->add_option("--output", mesh_output, "mesh file to write (stdout if omitted)");

  MeshOptions solve_mesh;
  SolveOptions solve_opts;
  auto* solve_cmd = app.add_subcommand("solve", "solve one problem and report errors as JSON");
  solve_mesh.add(solve_cmd);
  solve_cmd->add_option("--problem", solve_opts.problem, "analytic_square, singular_lshape or patch");
  solve_cmd->add_option("--degree", solve_opts.degree, "uniform degree of accuracy (>= 2)");
  solve_cmd->add_option("--mu", solve_opts.mu, "hp slope parameter (layered meshes)");
  solve_cmd->add_option("--stabilization", solve_opts.stabilization, "d_recipe or hp_explicit");
  solve_cmd->add_option("--quadrature-boost", solve_opts.quadrature_boost, "extra quadrature exactness");
  solve_cmd->add_option("--export-matrix", solve_opts.export_matrix, "write the system in Matrix Market format");
  solve_cmd->add_flag("--infsup", solve_opts.infsup, "also estimate the inf-sup constant");

  StudyOptions p_opts{"analytic_square"};
  PSweep p_sweep;
  int cells_per_side = 2;
  auto* p_cmd = app.add_subcommand("study-p", "p-refinement study on a fixed coarse mesh");
  p_cmd->add_option("--problem", p_opts.problem, "analytic_square, singular_lshape or patch");
  p_cmd->add_option("--p-min", p_sweep.p_min, "first degree");
  p_cmd->add_option("--p-max", p_sweep.p_max, "last degree");
  p_cmd->add_option("--cells-per-side", cells_per_side, "cells per side of the coarse mesh");
  add_study_options(p_cmd, p_opts);

  StudyOptions hp_opts{"singular_lshape"};
  HpSweep hp_sweep;
  std::string sigma = "half", family = "cartesian_graded";
  auto* hp_cmd = app.add_subcommand("study-hp", "hp-refinement study on graded L-shape meshes");
  hp_cmd->add_option("--n-min", hp_sweep.n_min, "first number of layers");
  hp_cmd->add_option("--n-max", hp_sweep.n_max, "last number of layers");
  hp_cmd->add_option("--sigma", sigma, "grading parameter, or half / sqrt2m1 / sqrt2m1_sq");
  hp_cmd->add_option("--family", family, "cartesian_graded, rings_with_diagonal or rings_plain");
  hp_cmd->add_option("--mu", hp_sweep.mu, "slope of the degree law");
  add_study_options(hp_cmd, hp_opts);

  MeshOptions infsup_mesh;
  int is_pmin = 2, is_pmax = 5, extra = 0;
  std::string is_stab = "d_recipe";
  auto* infsup_cmd = app.add_subcommand("infsup", "estimate the discrete inf-sup constant over a degree range");
  infsup_mesh.add(infsup_cmd);
  infsup_cmd->add_option("--p-min", is_pmin, "first degree");
  infsup_cmd->add_option("--p-max", is_pmax, "last degree");
  infsup_cmd->add_option("--extra-pressure-degree", extra, "1 pairs pressures of degree p (negative control)");
  infsup_cmd->add_option("--stabilization", is_stab, "d_recipe or hp_explicit");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kConfigError;
  }

  try {
    if (mesh_cmd->parsed()) return cmd_mesh(mesh_opts, mesh_output);
    if (solve_cmd->parsed()) return cmd_solve(solve_mesh, solve_opts);
    if (p_cmd->parsed()) {
      StudyConfig c = base_config(p_opts);
      c.problem = problem_from_string(p_opts.problem);
      c.sweep = p_sweep;
      c.cells_per_side = cells_per_side;
      return finish_study(run_p_study(c), p_opts);
    }
    if (hp_cmd->parsed()) {
      StudyConfig c = base_config(hp_opts);
      c.problem = ProblemKind::singular_lshape;
      hp_sweep.sigma = parse_sigma(sigma);
      hp_sweep.family = mesh_family_from_string(family);
      c.sweep = hp_sweep;
      return finish_study(run_hp_study(c), hp_opts);
    }
    if (infsup_cmd->parsed()) {
      if (is_pmax < is_pmin) throw ConfigError("empty degree range");
      return cmd_infsup(infsup_mesh, is_pmin, is_pmax, extra, is_stab);
    }
  } catch (const ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return kConfigError;
  } catch (const MeshError& e) {
    std::cerr << "mesh error: " << e.what() << "\n";
    return kConfigError;
  } catch (const SolverError& e) {
    std::cerr << "solver failure: " << e.what() << "\n";
    return kSolverError;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "file error: " << e.what() << "\n";
    return kConfigError;
  }
  return 0;
}
