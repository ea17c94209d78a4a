#pragma once

#include "dfvem/errors.hpp"
#include "dfvem/infsup.hpp"
#include "dfvem/problems.hpp"
#include "dfvem/system.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace dfvem {

enum class ProblemKind { analytic_square, singular_lshape, patch };

const char* to_string(ProblemKind kind);
ProblemKind problem_from_string(const std::string& name);

/// Build the exact solution for a problem kind (the patch problem depends on p and domain).
TestProblem make_problem(ProblemKind kind, int p = 2, Domain domain = Domain::unit_square);

struct PSweep {
  int p_min = 2;
  int p_max = 8;
};

struct HpSweep {
  int n_min = 1;
  int n_max = 5;
  double sigma = 0.5;
  MeshFamily family = MeshFamily::cartesian_graded;
  double mu = 1.0;
};

/// The three grading presets: 1/2, sqrt(2)-1 and (sqrt(2)-1)^2.
std::vector<double> sigma_presets();

struct StudyConfig {
  ProblemKind problem = ProblemKind::analytic_square;
  std::variant<PSweep, HpSweep> sweep = PSweep{};
  Stabilization stabilization = Stabilization::d_recipe;
  int quadrature_boost = 0;
  /// Cells per side of the coarse mesh used by p-sweeps.
  int cells_per_side = 2;
  std::filesystem::path output_dir = ".";
  std::uint64_t seed = 0;
  bool compute_infsup = false;
  /// Run sweep points concurrently (output order is unchanged).
  bool parallel = false;

  /// Throws ConfigError on empty ranges or invalid parameters.
  void validate() const;
};

/// One solve of a study.
struct StudyRow {
  std::string label;
  /// p for p-sweeps, n for hp-sweeps.
  int index = 0;
  int n_v = 0;
  int n_u = 0;
  int n_p = 0;
  int max_degree = 0;
  double h1_velocity_error = 0.0;
  double l2_pressure_error = 0.0;
  std::optional<double> beta;
  double runtime_seconds = 0.0;
  double condition_estimate = 0.0;
  double residual = 0.0;
  bool failed = false;
  std::string message;

  double total_error() const { return h1_velocity_error + l2_pressure_error; }
};

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
  int points = 0;
  bool valid = false;
};

/// Least squares y = slope x + intercept; invalid for fewer than two points.
LinearFit fit_line(std::span<const double> x, std::span<const double> y);

/// Number of leading entries before the first value exceeding 1.05 x its running minimum.
int pre_stagnation_window(std::span<const double> errors);

enum class Quantity { h1_velocity, l2_pressure, total };
enum class FitModel { exponential_p, algebraic_p, exponential_cbrt_nv };

const char* to_string(Quantity q);
const char* to_string(FitModel m);

struct SeriesFit {
  Quantity quantity = Quantity::total;
  FitModel model = FitModel::exponential_p;
  /// Rows used (counted from the first row).
  int window = 0;
  LinearFit fit;
};

struct StudyReport {
  std::string name;
  StudyConfig config;
  std::vector<StudyRow> rows;
  std::vector<SeriesFit> fits;
  /// Set when every error is at roundoff level, where slopes carry no information.
  bool slopes_undefined = false;

  const SeriesFit* find_fit(Quantity q, FitModel m) const;
};

/// Fits of log10(error) of every quantity for the models matching the sweep.
std::vector<SeriesFit> compute_fits(const std::vector<StudyRow>& rows, bool hp_sweep);

struct SingleSolve {
  Discretization disc;
  SaddlePointSystem system;
  SolutionFields fields;
  ErrorReport errors;
  double seconds = 0.0;
};

/// Discretize, assemble, solve and measure the errors for one mesh and degree distribution.
SingleSolve run_single(const PolygonalMesh& mesh, const DegreeDistribution& degrees, const TestProblem& problem,
                       const DiscretizationOptions& options = {});

StudyReport run_p_study(const StudyConfig& config);
StudyReport run_hp_study(const StudyConfig& config);
/// Dispatches on the sweep type.
StudyReport run_study(const StudyConfig& config);

// Output.

struct OutputFormats {
  bool csv = true;
  bool json = true;
  bool plot_script = true;
};

/// Writes <name>.csv, <name>.json and <name>.gp into `dir`; returns the written paths.
std::vector<std::filesystem::path> emit_outputs(const StudyReport& report, const std::filesystem::path& dir,
                                                const OutputFormats& formats = {});

/// Header line of the CSV output.
const std::vector<std::string>& csv_columns();
std::string to_csv(const StudyReport& report);
std::vector<StudyRow> parse_csv(const std::string& text);
std::string to_json(const StudyReport& report);
std::string plot_script(const StudyReport& report, const std::string& csv_file);

}  // namespace dfvem
