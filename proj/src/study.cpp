#include "dfvem/study.hpp"

#include "dfvem/exceptions.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <future>

namespace dfvem {

const char* to_string(ProblemKind kind) {
  switch (kind) {
    case ProblemKind::analytic_square: return "analytic_square";
    case ProblemKind::singular_lshape: return "singular_lshape";
    case ProblemKind::patch: return "patch";
  }
  return "?";
}

ProblemKind problem_from_string(const std::string& name) {
  for (auto k : {ProblemKind::analytic_square, ProblemKind::singular_lshape, ProblemKind::patch})
    if (name == to_string(k)) return k;
  throw ConfigError("unknown problem '" + name + "' (expected analytic_square, singular_lshape or patch)");
}

TestProblem make_problem(ProblemKind kind, int p, Domain domain) {
  switch (kind) {
    case ProblemKind::analytic_square: return test_problem_1();
    case ProblemKind::singular_lshape: return test_problem_2();
    case ProblemKind::patch: return patch_problem(p, domain);
  }
  throw ConfigError("unknown problem kind");
}

std::vector<double> sigma_presets() {
  const double s = std::sqrt(2.0) - 1.0;
  return {0.5, s, s * s};
}

const char* to_string(Quantity q) {
  switch (q) {
    case Quantity::h1_velocity: return "h1_velocity_error";
    case Quantity::l2_pressure: return "l2_pressure_error";
    case Quantity::total: return "total_error";
  }
  return "?";
}

const char* to_string(FitModel m) {
  switch (m) {
    case FitModel::exponential_p: return "exponential_p";
    case FitModel::algebraic_p: return "algebraic_p";
    case FitModel::exponential_cbrt_nv: return "exponential_cbrt_nv";
  }
  return "?";
}

void StudyConfig::validate() const {
  if (quadrature_boost < 0) throw ConfigError("quadrature boost must be nonnegative");
  if (const auto* p = std::get_if<PSweep>(&sweep)) {
    if (p->p_min < kMinDegree) throw ConfigError("p sweep must start at p >= 2");
    if (p->p_max < p->p_min) throw ConfigError("empty p sweep: p_max < p_min");
    if (cells_per_side < 1) throw ConfigError("cells per side must be positive");
  } else {
    const auto& h = std::get<HpSweep>(sweep);
    if (problem != ProblemKind::singular_lshape) throw ConfigError("hp sweeps run the singular_lshape problem");
    if (h.n_min < 0 || h.n_max < h.n_min) throw ConfigError("empty hp sweep: n_max < n_min");
    if (!(h.sigma > 0.0 && h.sigma < 1.0)) throw ConfigError("grading parameter sigma must lie in (0, 1)");
    if (!(h.mu > 0.0)) throw ConfigError("slope parameter mu must be positive");
  }
}

LinearFit fit_line(std::span<const double> x, std::span<const double> y) {
  LinearFit f;
  const std::size_t n = std::min(x.size(), y.size());
  f.points = static_cast<int>(n);
  if (n < 2) return f;
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0) return f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  f.r_squared = syy > 0.0 ? sxy * sxy / (sxx * syy) : 1.0;
  f.valid = true;
  return f;
}

int pre_stagnation_window(std::span<const double> errors) {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < errors.size(); ++i) {
    if (errors[i] > 1.05 * best) return static_cast<int>(i);
    best = std::min(best, errors[i]);
  }
  return static_cast<int>(errors.size());
}

const SeriesFit* StudyReport::find_fit(Quantity q, FitModel m) const {
  for (const auto& f : fits)
    if (f.quantity == q && f.model == m) return &f;
  return nullptr;
}

std::vector<SeriesFit> compute_fits(const std::vector<StudyRow>& rows, bool hp_sweep) {
  std::vector<const StudyRow*> ok;
  for (const auto& r : rows)
    if (!r.failed) ok.push_back(&r);
  const std::vector<FitModel> models = hp_sweep ? std::vector{FitModel::exponential_cbrt_nv}
                                                : std::vector{FitModel::exponential_p, FitModel::algebraic_p};
  std::vector<SeriesFit> fits;
  for (auto q : {Quantity::h1_velocity, Quantity::l2_pressure, Quantity::total}) {
    std::vector<double> err;
    for (const auto* r : ok)
      err.push_back(q == Quantity::h1_velocity ? r->h1_velocity_error
                    : q == Quantity::l2_pressure ? r->l2_pressure_error
                                                 : r->total_error());
    const int window = pre_stagnation_window(err);
    for (auto m : models) {
      std::vector<double> xs, ys;
      for (int i = 0; i < window; ++i) {
        if (!(err[i] > 0.0)) continue;
        const double x = m == FitModel::exponential_p ? ok[i]->index
                         : m == FitModel::algebraic_p ? std::log10(static_cast<double>(ok[i]->index))
                                                      : std::cbrt(static_cast<double>(ok[i]->n_v));
        xs.push_back(x);
        ys.push_back(std::log10(err[i]));
      }
      fits.push_back({q, m, window, fit_line(xs, ys)});
    }
  }
  return fits;
}

SingleSolve run_single(const PolygonalMesh& mesh, const DegreeDistribution& degrees, const TestProblem& problem,
                       const DiscretizationOptions& options) {
  const auto start = std::chrono::steady_clock::now();
  Discretization disc = discretize(mesh, degrees, options);
  SaddlePointSystem system =
      assemble(disc, problem.force, problem.homogeneous_dirichlet ? nullptr : &problem.velocity);
  SolutionFields fields = solve(system, disc);
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  ErrorReport errors = compute_errors(disc, fields, problem);
  return {std::move(disc), std::move(system), std::move(fields), std::move(errors), seconds};
}

namespace {

StudyRow make_row(std::string label, int index, const SingleSolve& s, bool infsup) {
  StudyRow row;
  row.label = std::move(label);
  row.index = index;
  row.n_u = s.errors.num_velocity;
  row.n_p = s.errors.num_pressure;
  row.n_v = s.errors.n_v();
  row.max_degree = s.disc.degrees.max_degree();
  row.h1_velocity_error = s.errors.h1_velocity_error;
  row.l2_pressure_error = s.errors.l2_pressure_error;
  row.runtime_seconds = s.seconds;
  row.condition_estimate = s.disc.max_gram_condition();
  row.residual = s.fields.residual;
  if (const int bad = s.disc.ill_conditioned_cells(); bad > 0)
    row.message = "warning: " + std::to_string(bad) + " cells with local Gram condition above 1e14";
  if (infsup) row.beta = estimate_infsup(s.disc).beta;
  return row;
}

struct SweepPoint {
  std::string label;
  int index = 0;
  std::function<StudyRow()> body;
  StudyRow run() const { return body(); }
};

std::vector<StudyRow> run_points(const std::vector<SweepPoint>& points, bool parallel) {
  std::vector<StudyRow> rows(points.size());
  auto guarded = [](const SweepPoint& pt) {
    try {
      return pt.run();
    } catch (const SolverError& e) {
      StudyRow r;
      r.label = pt.label;
      r.index = pt.index;
      r.failed = true;
      r.message = e.what();
      return r;
    }
  };
  if (parallel) {
    std::vector<std::future<StudyRow>> jobs;
    for (const auto& pt : points) jobs.push_back(std::async(std::launch::async, guarded, std::cref(pt)));
    for (std::size_t i = 0; i < jobs.size(); ++i) rows[i] = jobs[i].get();
  } else {
    for (std::size_t i = 0; i < points.size(); ++i) rows[i] = guarded(points[i]);
  }
  return rows;
}

StudyReport finish(StudyReport report, bool hp) {
  report.fits = compute_fits(report.rows, hp);
  bool tiny = !report.rows.empty();
  for (const auto& r : report.rows) tiny = tiny && !r.failed && r.total_error() <= 1e-9;
  if (tiny) {
    report.slopes_undefined = true;
    for (auto& f : report.fits) f.fit.valid = false;
  }
  return report;
}

}  // namespace

StudyReport run_p_study(const StudyConfig& config) {
  config.validate();
  const auto& sweep = std::get<PSweep>(config.sweep);
  const Domain domain = config.problem == ProblemKind::singular_lshape ? Domain::l_shape : Domain::unit_square;
  const PolygonalMesh mesh = make_uniform_square_mesh(config.cells_per_side, domain);
  const DiscretizationOptions options{config.stabilization, config.quadrature_boost, 1};
  const std::optional<TestProblem> fixed =
      config.problem == ProblemKind::patch ? std::nullopt : std::optional(make_problem(config.problem));

  std::vector<SweepPoint> points;
  for (int p = sweep.p_min; p <= sweep.p_max; ++p) {
    const std::string label = "p=" + std::to_string(p);
    points.push_back({label, p, [&, p, label] {
                        const TestProblem problem = fixed ? *fixed : make_problem(config.problem, p, domain);
                        const auto s = run_single(mesh, assign_degrees(mesh, UniformDegree{p}), problem, options);
                        return make_row(label, p, s, config.compute_infsup);
                      }});
  }
  StudyReport report;
  report.name = std::string("p_") + to_string(config.problem) + "_" + to_string(config.stabilization);
  report.config = config;
  report.rows = run_points(points, config.parallel);
  return finish(std::move(report), false);
}

StudyReport run_hp_study(const StudyConfig& config) {
  config.validate();
  const auto& sweep = std::get<HpSweep>(config.sweep);
  const DiscretizationOptions options{config.stabilization, config.quadrature_boost, 1};
  const TestProblem problem = make_problem(config.problem);

  std::vector<SweepPoint> points;
  for (int n = sweep.n_min; n <= sweep.n_max; ++n) {
    const std::string label = "n=" + std::to_string(n);
    points.push_back({label, n, [&, n, label] {
                        const auto mesh =
                            make_graded_lshape_mesh({sweep.sigma, n, Point::Zero(), sweep.family});
                        const auto degrees = assign_degrees(mesh, HpDegree{sweep.mu});
                        const auto s = run_single(mesh, degrees, problem, options);
                        return make_row(label, n, s, config.compute_infsup);
                      }});
  }
  char sigma[32];
  std::snprintf(sigma, sizeof sigma, "%.4f", sweep.sigma);
  StudyReport report;
  report.name = std::string("hp_") + to_string(sweep.family) + "_sigma" + sigma + "_" + to_string(config.stabilization);
  report.config = config;
  report.rows = run_points(points, config.parallel);
  return finish(std::move(report), true);
}

StudyReport run_study(const StudyConfig& config) {
  return std::holds_alternative<PSweep>(config.sweep) ? run_p_study(config) : run_hp_study(config);
}

}  // namespace dfvem
