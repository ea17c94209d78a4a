#include "dfvem/exceptions.hpp"
#include "dfvem/study.hpp"

#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <sstream>

namespace dfvem {

namespace {

std::string number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string quote(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      cells.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  cells.push_back(std::move(cur));
  return cells;
}

nlohmann::json config_json(const StudyConfig& c) {
  nlohmann::json j;
  j["problem"] = to_string(c.problem);
  j["stabilization"] = to_string(c.stabilization);
  j["quadrature_boost"] = c.quadrature_boost;
  j["seed"] = c.seed;
  j["compute_infsup"] = c.compute_infsup;
  j["parallel"] = c.parallel;
  if (const auto* p = std::get_if<PSweep>(&c.sweep)) {
    j["sweep"] = {{"kind", "p"}, {"p_min", p->p_min}, {"p_max", p->p_max}, {"cells_per_side", c.cells_per_side}};
  } else {
    const auto& h = std::get<HpSweep>(c.sweep);
    j["sweep"] = {{"kind", "hp"},   {"n_min", h.n_min}, {"n_max", h.n_max}, {"sigma", h.sigma},
                  {"family", to_string(h.family)}, {"mu", h.mu}};
  }
  return j;
}

}  // namespace

const std::vector<std::string>& csv_columns() {
  static const std::vector<std::string> cols{
      "label", "index", "n_v", "n_u", "n_p", "max_degree", "h1_velocity_error", "l2_pressure_error",
      "total_error", "beta", "condition_estimate", "residual", "status", "message"};
  return cols;
}

std::string to_csv(const StudyReport& report) {
  std::ostringstream out;
  const auto& cols = csv_columns();
  for (std::size_t i = 0; i < cols.size(); ++i) out << (i ? "," : "") << cols[i];
  out << '\n';
  for (const auto& r : report.rows) {
    out << quote(r.label) << ',' << r.index << ',' << r.n_v << ',' << r.n_u << ',' << r.n_p << ',' << r.max_degree
        << ',' << number(r.h1_velocity_error) << ',' << number(r.l2_pressure_error) << ','
        << number(r.total_error()) << ',' << (r.beta ? number(*r.beta) : "") << ','
        << number(r.condition_estimate) << ',' << number(r.residual) << ',' << (r.failed ? "failed" : "ok") << ','
        << quote(r.message) << '\n';
  }
  return out.str();
}

std::vector<StudyRow> parse_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw ConfigError("empty CSV");
  if (split_csv_line(line) != csv_columns()) throw ConfigError("unexpected CSV header: " + line);
  std::vector<StudyRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto c = split_csv_line(line);
    if (c.size() != csv_columns().size()) throw ConfigError("malformed CSV row: " + line);
    StudyRow r;
    r.label = c[0];
    r.index = std::stoi(c[1]);
    r.n_v = std::stoi(c[2]);
    r.n_u = std::stoi(c[3]);
    r.n_p = std::stoi(c[4]);
    r.max_degree = std::stoi(c[5]);
    r.h1_velocity_error = std::stod(c[6]);
    r.l2_pressure_error = std::stod(c[7]);
    if (!c[9].empty()) r.beta = std::stod(c[9]);
    r.condition_estimate = std::stod(c[10]);
    r.residual = std::stod(c[11]);
    r.failed = c[12] == "failed";
    r.message = c[13];
    rows.push_back(std::move(r));
  }
  return rows;
}

std::string to_json(const StudyReport& report) {
  nlohmann::json j;
  j["name"] = report.name;
  j["config"] = config_json(report.config);
  j["slopes_undefined"] = report.slopes_undefined;
  auto& rows = j["rows"] = nlohmann::json::array();
  for (const auto& r : report.rows) {
    nlohmann::json row{{"label", r.label},
                       {"index", r.index},
                       {"n_v", r.n_v},
                       {"n_u", r.n_u},
                       {"n_p", r.n_p},
                       {"max_degree", r.max_degree},
                       {"h1_velocity_error", r.h1_velocity_error},
                       {"l2_pressure_error", r.l2_pressure_error},
                       {"total_error", r.total_error()},
                       {"runtime_seconds", r.runtime_seconds},
                       {"condition_estimate", r.condition_estimate},
                       {"residual", r.residual},
                       {"failed", r.failed},
                       {"message", r.message}};
    row["beta"] = r.beta ? nlohmann::json(*r.beta) : nlohmann::json(nullptr);
    rows.push_back(std::move(row));
  }
  auto& fits = j["fits"] = nlohmann::json::array();
  for (const auto& f : report.fits)
    fits.push_back({{"quantity", to_string(f.quantity)},
                    {"model", to_string(f.model)},
                    {"window", f.window},
                    {"slope", f.fit.slope},
                    {"intercept", f.fit.intercept},
                    {"r_squared", f.fit.r_squared},
                    {"points", f.fit.points},
                    {"valid", f.fit.valid}});
  return j.dump(2) + "\n";
}

std::string plot_script(const StudyReport& report, const std::string& csv_file) {
  const bool hp = std::holds_alternative<HpSweep>(report.config.sweep);
  const std::string x = hp ? "(column(\"n_v\")**(1.0/3.0))" : "(column(\"index\"))";
  std::ostringstream out;
  out << "# gnuplot command file; pick a terminal with: gnuplot -e \"set terminal pngcairo; set output 'out.png'\" "
      << report.name << ".gp\n";
  out << "set datafile separator ','\n";
  out << "set datafile columnheaders\n";
  out << "set logscale y\n";
  out << "set format y '10^{%L}'\n";
  out << "set grid\n";
  out << "set key top right\n";
  out << "set title '" << report.name << "'\n";
  out << "set xlabel '" << (hp ? "N_V^{1/3}" : "p") << "'\n";
  out << "set ylabel 'error'\n";
  out << "plot '" << csv_file << "' using " << x << ":(column(\"h1_velocity_error\")) with linespoints "
      << "title 'velocity |u - {/Symbol P} u_n|_{1}', \\\n";
  out << "     '" << csv_file << "' using " << x << ":(column(\"l2_pressure_error\")) with linespoints "
      << "title 'pressure ||s - s_n||_{0}'";
  if (hp) {
    out << ", \\\n     '" << csv_file << "' using " << x << ":(column(\"total_error\")) with linespoints "
        << "title 'total'";
  }
  out << "\n";
  return out.str();
}

std::vector<std::filesystem::path> emit_outputs(const StudyReport& report, const std::filesystem::path& dir,
                                                const OutputFormats& formats) {
  if (report.rows.empty()) throw ConfigError("refusing to write outputs for an empty sweep");
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw ConfigError("cannot create output directory " + dir.string() + ": " + ec.message());
  std::vector<std::filesystem::path> written;
  auto write = [&](const std::string& ext, const std::string& body) {
    const auto path = dir / (report.name + ext);
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write " + path.string());
    out << body;
    written.push_back(path);
  };
  if (formats.csv) write(".csv", to_csv(report));
  if (formats.json) write(".json", to_json(report));
  if (formats.plot_script) write(".gp", plot_script(report, report.name + ".csv"));
  return written;
}

}  // namespace dfvem
